#include <stdio.h>
#include <string.h>

#include "ncgeom.h"

#define CHECK(cond)                                              \
  do {                                                           \
    if (!(cond)) {                                               \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      return 1;                                                  \
    }                                                            \
  } while (0)

int main(void) {
  NcgScenario *scenario = NULL;
  NcgReport *report = NULL;
  char *text = NULL;
  int32_t code = -1;
  size_t count = 0;

  CHECK(ncg_scenario_load("builtin:no-such", &scenario) != NCG_STATUS_OK);
  CHECK(ncg_last_error_message() != NULL);

  CHECK(ncg_scenario_load("builtin:example-1", &scenario) == NCG_STATUS_OK);
  CHECK(ncg_last_error_message() == NULL);
  CHECK(ncg_run(scenario, &report) == NCG_STATUS_OK);
  CHECK(ncg_report_exit_code(report, &code) == NCG_STATUS_OK && code == 0);
  CHECK(ncg_report_check_count(report, &count) == NCG_STATUS_OK && count > 0);

  CHECK(ncg_report_quantity(report, "R¹₁", &text) == NCG_STATUS_OK);
  CHECK(strcmp(text, "R¹₁ = −ħ² + 3ħ³ − 3ħ⁴ + ħ⁵") == 0);
  ncg_string_free(text);

  CHECK(ncg_report_render(report, NCG_FORMAT_MARKDOWN, &text) == NCG_STATUS_OK);
  CHECK(strstr(text, "| ricci-equivalence | EXPECTED-FAIL |") != NULL);
  ncg_string_free(text);

  CHECK(ncg_report_check_status(report, 0, NULL) == NCG_STATUS_NULL_POINTER);
  NcgCheckStatus status;
  CHECK(ncg_report_check_status(report, count, &status) == NCG_STATUS_OUT_OF_RANGE);

  ncg_report_free(report);
  ncg_scenario_free(scenario);
  printf("ok %s\n", ncg_version());
  return 0;
}

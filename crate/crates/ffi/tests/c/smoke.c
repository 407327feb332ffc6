#include <math.h>
#include <stdio.h>
#include "noarb.h"

int main(int argc, char **argv) {
    if (argc < 2) return 10;
    NoarbModel *model = NULL;
    if (noarb_model_from_file(argv[1], &model) != NOARB_STATUS_OK) {
        fprintf(stderr, "%s\n", noarb_last_error());
        return 11;
    }
    NoarbReport *report = NULL;
    if (noarb_analyze(model, NAN, 0, &report) != NOARB_STATUS_OK) return 12;
    NoarbTruth t;
    if (noarb_report_verdict(report, "nflvr_finite_t", &t) != NOARB_STATUS_OK) return 13;
    printf("nflvr_finite_t=%d\n", (int)t);
    if (noarb_report_verdict(report, "bogus", &t) != NOARB_STATUS_INVALID_ARGUMENT) return 14;
    char *json = NULL;
    if (noarb_report_to_json(report, &json) != NOARB_STATUS_OK) return 15;
    printf("json_starts=%c\n", json[0]);
    noarb_string_free(json);
    noarb_report_free(report);
    noarb_model_free(model);
    printf("version=%s\n", noarb_version());
    return 0;
}

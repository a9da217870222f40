#include <stdio.h>
#include <string.h>

#include "evopipe.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__,   \
                    #cond, evp_last_error());                         \
            return 1;                                                 \
        }                                                             \
    } while (0)

static const char *PIPELINE =
    "evopipe-export v1\n"
    "[metadata]\n"
    "cv_score = none\n"
    "dataset = none\n"
    "seed = none\n"
    "[tree]\n"
    "Classifier KNearest k=1\n"
    "  Source\n"
    "[script]\n"
    "[end]\n";

int main(void) {
    double x[8] = {0, 0, 0, 1, 1, 0, 1, 1};
    size_t y[4] = {0, 1, 1, 0};
    EvpDataset *ds = NULL;
    EvpPipeline *p = NULL;
    EvpFitted *fit = NULL;
    size_t labels[4];
    char *text = NULL;
    int i;

    CHECK(evp_dataset_from_arrays(x, 4, 2, y, 2, &ds) == EVP_STATUS_OK);
    CHECK(evp_dataset_rows(ds) == 4);
    CHECK(evp_pipeline_import(PIPELINE, &p) == EVP_STATUS_OK);
    CHECK(evp_pipeline_fit(p, ds, 0, &fit) == EVP_STATUS_OK);
    CHECK(evp_fitted_predict(fit, x, 4, 2, labels) == EVP_STATUS_OK);
    for (i = 0; i < 4; i++) {
        CHECK(labels[i] == y[i]);
    }
    CHECK(evp_pipeline_export(p, &text) == EVP_STATUS_OK);
    CHECK(strstr(text, "Classifier KNearest k=1") != NULL);
    evp_string_free(text);

    CHECK(evp_pipeline_import("garbage", &p) == EVP_STATUS_PARSE);
    CHECK(strlen(evp_last_error()) > 0);

    evp_fitted_free(fit);
    evp_pipeline_free(p);
    evp_dataset_free(ds);
    printf("ok %s\n", evp_version());
    return 0;
}

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "ddtune.h"

#define CHECK(cond)                                                     \
    do {                                                                \
        if (!(cond)) {                                                  \
            const char *m = ddtune_last_error_message();                \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #cond, m ? m : "-"); \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main(void) {
    double v = 0.0;
    CHECK(ddtune_pdim_gj(1, 0, 0, 1, "2", &v) == DDTUNE_STATUS_OK);
    CHECK(fabs(v - 18.0) < 1e-12);

    CHECK(ddtune_family_bound("H1", 3, 1, -1, &v) == DDTUNE_STATUS_OK);
    CHECK(fabs(v - 3385.8982672610058) < 1e-6);

    CHECK(ddtune_family_bound("H9", 3, 1, -1, &v) == DDTUNE_STATUS_INVALID_INPUT);
    CHECK(strstr(ddtune_last_error_message(), "family") != NULL);

    DdtuneInstance *inst = NULL;
    CHECK(ddtune_instance_generate("{\"task\": \"logreg\", \"m\": 20, \"p\": 3, \"m_val\": 20}", 5, &inst) ==
          DDTUNE_STATUS_OK);
    DdtunePath *path = NULL;
    CHECK(ddtune_path_new(inst, 0.1, 0.1, 1.1, DDTUNE_PENALTY_L2, &path) == DDTUNE_STATUS_OK);
    CHECK(ddtune_path_dim(path) == 3);
    double beta[3];
    CHECK(ddtune_path_eval(path, 0.5, beta, 3) == DDTUNE_STATUS_OK);
    CHECK(ddtune_path_eval(path, 5.0, beta, 3) == DDTUNE_STATUS_INVALID_INPUT);
    ddtune_path_free(path);

    DdtuneBatch *batch = ddtune_batch_new();
    CHECK(ddtune_batch_push(batch, inst) == DDTUNE_STATUS_OK);
    char *json = NULL;
    CHECK(ddtune_tune_batch(batch, "{\"task\": \"logreg\"}", &json) == DDTUNE_STATUS_OK);
    CHECK(strstr(json, "best_param") != NULL);
    ddtune_string_free(json);
    ddtune_batch_free(batch);
    ddtune_instance_free(inst);

    CHECK(ddtune_instance_generate(NULL, 0, &inst) == DDTUNE_STATUS_NULL_POINTER);
    printf("ok %s\n", ddtune_version());
    return 0;
}

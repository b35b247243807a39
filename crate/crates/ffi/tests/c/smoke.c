#include <math.h>
#include <stdio.h>
#include <string.h>

#include "grople.h"

#define CHECK(call)                                                          \
  do {                                                                       \
    enum GropleStatus s_ = (call);                                           \
    if (s_ != GROPLE_STATUS_OK) {                                            \
      const char *m_ = grople_last_error_message();                          \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, m_ ? m_ : "(none)"); \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(int argc, char **argv) {
  if (argc != 2) return 2;
  enum { N = 8, D = 2, L = 2 };
  double x[N * D], y[N * L];
  for (int i = 0; i < N; i++) {
    x[i * D] = (double)(i % 2 ? 1 : -1) * (1 + i);
    x[i * D + 1] = (double)(i < 4 ? 1 : -1);
    y[i * L] = x[i * D] > 0 ? 1 : -1;
    y[i * L + 1] = x[i * D + 1] > 0 ? 1 : -1;
  }
  GropleDataset *ds = NULL;
  CHECK(grople_dataset_from_arrays(x, y, N, D, L, &ds));

  GropleHyperparameters hp = grople_hyperparameters_default();
  hp.latent_dim = 4;
  hp.n_groups = 2;
  GropleModel *model = NULL;
  CHECK(grople_fit(ds, &hp, &model));
  if (grople_model_n_labels(model) != L) return 3;

  double pred[N * L];
  CHECK(grople_predict(model, x, N, D, pred));
  for (int i = 0; i < N * L; i++)
    if (pred[i] != 1.0 && pred[i] != -1.0) return 4;

  CHECK(grople_model_save(model, argv[1]));
  GropleModel *back = NULL;
  CHECK(grople_model_load(argv[1], &back));
  double pred2[N * L];
  CHECK(grople_predict(back, x, N, D, pred2));
  if (memcmp(pred, pred2, sizeof pred) != 0) return 5;

  GropleMetrics m;
  CHECK(grople_metrics(y, y, N, L, &m));
  if (m.accuracy != 1.0 || m.micro_f1 != 1.0) return 6;

  if (grople_predict(model, x, N, D + 1, pred) != GROPLE_STATUS_DIMENSION) return 7;
  if (grople_last_error_message() == NULL) return 8;
  if (grople_fit(NULL, &hp, &model) != GROPLE_STATUS_NULL_POINTER) return 9;
  if (fabs(grople_nemenyi_cd(8, 11, 3.031) - 3.1658) > 1e-4) return 10;

  grople_model_free(back);
  grople_model_free(model);
  grople_dataset_free(ds);
  printf("ok %s\n", grople_version());
  return 0;
}

#include <math.h>
#include <stdio.h>
#include <string.h>
#include "splinelab.h"

static double square(const double *x, size_t d, void *user) {
  (void)user;
  double s = 0.0;
  for (size_t i = 0; i < d; i++) s += x[i] * x[i];
  return s;
}

#define CHECK(c) do { if (!(c)) { fprintf(stderr, "failed: %s (line %d): %s\n", #c, __LINE__, \
  spl_last_error_message() ? spl_last_error_message() : "-"); return 1; } } while (0)

int main(void) {
  SplKnots *kv = NULL;
  CHECK(spl_knots_uniform(8, 3, &kv) == SPL_STATUS_OK);
  CHECK(spl_knots_basis_count(kv) == 10);

  const SplKnots *axes[2] = {kv, kv};
  SplSpline *s = NULL;
  CHECK(spl_project_fn(axes, 2, square, NULL, &s) == SPL_STATUS_OK);
  double p[2] = {0.3, 0.6}, v = 0.0;
  CHECK(spl_spline_eval(s, p, 2, &v) == SPL_STATUS_OK);
  CHECK(fabs(v - 0.45) < 1e-12);
  spl_spline_free(s);

  SplKnots *bad = NULL;
  double knots[3] = {0.0, 1.0, 0.5};
  CHECK(spl_knots_new(knots, 3, 1, &bad) == SPL_STATUS_INVALID_KNOTS);
  CHECK(bad == NULL);
  CHECK(spl_last_error_message() != NULL);

  SplBohr *b = NULL;
  CHECK(spl_bohr_new(5.0, &b) == SPL_STATUS_OK);
  double mass = 0.0;
  CHECK(spl_bohr_mass(b, &mass) == SPL_STATUS_OK);
  CHECK(mass > 0.0 && mass < 5.0);
  size_t need = 0;
  CHECK(spl_bohr_to_json(b, 0, NULL, 0, &need) == SPL_STATUS_OK);
  char small[4];
  CHECK(spl_bohr_to_json(b, 0, small, sizeof small, &need) == SPL_STATUS_BUFFER_TOO_SMALL);
  spl_bohr_free(b);
  spl_knots_free(kv);
  printf("ok %s\n", spl_version());
  return 0;
}

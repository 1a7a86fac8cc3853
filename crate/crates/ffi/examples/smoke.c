#include <stdio.h>
#include "mobius_lab.h"
int main(void) {
  MlMobiusTable *t = NULL;
  if (ml_mobius_table_new(1, 100, &t) != ML_STATUS_OK) return 1;
  int8_t v; ml_mobius_table_get(t, 30, &v);
  double raw, ln, h; ml_chowla_log_sum(t, 0, 1, 99, &raw, &ln, &h);
  printf("%s mu(30)=%d raw=%f\n", ml_version(), v, raw);
  if (ml_mobius_table_get(t, 101, &v) != ML_STATUS_OUT_OF_RANGE) return 2;
  printf("err: %s\n", ml_last_error_message());
  ml_mobius_table_free(t);
  return 0;
}

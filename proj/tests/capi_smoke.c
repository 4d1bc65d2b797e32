/* Builds as C to keep the public header C-compatible. */
#include <stdio.h>

#include "fatswarm/fatswarm.h"

int main(void) {
  fs_config* cfg = NULL;
  fs_env* env = NULL;
  double signal = 0.0;
  if (fs_config_from_experiment("B", &cfg) != FS_OK) return 1;
  if (fs_env_create(cfg, 0, &env) != FS_OK) return 2;
  if (fs_env_reset(env, 1) != FS_OK) return 3;
  if (fs_env_robots(env) != 8) return 4;
  if (fs_env_signal(env, &signal) != FS_OK || signal < 0.0 || signal > 4.0) return 5;
  fs_env_free(env);
  fs_config_free(cfg);
  printf("fatswarm %s\n", fs_version());
  return 0;
}

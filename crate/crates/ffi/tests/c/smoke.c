#include <math.h>
#include <stdio.h>

#include "pulsed_rotor.h"

#define CHECK(cond)                                                    \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__, __LINE__, #cond); \
      return 1;                                                        \
    }                                                                  \
  } while (0)

int main(void) {
  double v = 0.0;
  CHECK(pr_keff_square(0.0, 5.3, 42.0, &v) == PR_STATUS_OK);
  CHECK(fabs(v - 5.3) < 1e-12);
  CHECK(pr_keff_square(42.0, 5.3, 42.0, &v) == PR_STATUS_OK);
  CHECK(fabs(v) < 1e-12);

  PrPulse *pulse = NULL;
  CHECK(pr_pulse_square(1.5, &pulse) == PR_STATUS_DOMAIN);
  char msg[256];
  CHECK(pr_last_error_message(msg, sizeof msg) > 0);
  CHECK(pr_pulse_square(0.15, &pulse) == PR_STATUS_OK);

  PrProfile *profile = NULL;
  CHECK(pr_profile_new(pulse, 5.3 / 0.15, &profile) == PR_STATUS_OK);
  double zero = 0.0;
  int found = 0;
  CHECK(pr_profile_first_zero(profile, &zero, &found) == PR_STATUS_OK);
  CHECK(found == 1);
  CHECK(fabs(zero - 2.0 * M_PI / 0.15) < 1e-6);

  PrPhaseState traj[11];
  PrPhaseState start = {1.0, zero};
  CHECK(pr_map_iterate(profile, PR_RULE_EXPLICIT, start, 10, traj, 5) == PR_STATUS_BUFFER_TOO_SMALL);
  CHECK(pr_map_iterate(profile, PR_RULE_EXPLICIT, start, 10, traj, 11) == PR_STATUS_OK);
  CHECK(fabs(traj[10].rho - zero) < 1e-9);

  PrEnsembleConfig cfg = {1000, 4.0, 0.0, 7};
  PrEnsemble *ens = NULL;
  CHECK(pr_ensemble_new(&cfg, &ens) == PR_STATUS_OK);
  CHECK(pr_ensemble_advance(ens, profile, PR_RULE_CANONICAL, 20) == PR_STATUS_OK);
  PrMoments m;
  CHECK(pr_ensemble_moments(ens, 0.0, &m) == PR_STATUS_OK);
  CHECK(m.energy > 8.0);

  CHECK(pr_profile_new(NULL, 1.0, &profile) == PR_STATUS_NULL_POINTER);

  pr_ensemble_free(ens);
  pr_profile_free(profile);
  pr_pulse_free(pulse);
  printf("ok %s\n", pr_version());
  return 0;
}

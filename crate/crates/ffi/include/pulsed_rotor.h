#ifndef PULSED_ROTOR_H
#define PULSED_ROTOR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Kick rule selector for the classical map.
#define PR_RULE_EXPLICIT 0

#define PR_RULE_CANONICAL 1

// Result code of every fallible call.
typedef enum PrStatus {
  PR_STATUS_OK = 0,
  // A required pointer argument was null.
  PR_STATUS_NULL_POINTER = 1,
  // Parameters outside the physical domain (for example η ≥ 1).
  PR_STATUS_DOMAIN = 2,
  // Malformed input data.
  PR_STATUS_VALIDATION = 3,
  // Inconsistent configuration.
  PR_STATUS_CONFIG = 4,
  PR_STATUS_IO = 5,
  // Output buffer too small; the required length was still reported.
  PR_STATUS_BUFFER_TOO_SMALL = 6,
  // Internal failure; the library state is unchanged.
  PR_STATUS_PANIC = 7,
} PrStatus;

// Opaque atom cloud.
typedef struct PrEnsemble PrEnsemble;

// Opaque momentum-dependent kick profile.
typedef struct PrProfile PrProfile;

// Opaque pulse envelope.
typedef struct PrPulse PrPulse;

// Laboratory parameters, SI units.
typedef struct PrPhysicalParams {
  double atom_mass;
  double wavelength;
  double potential_depth;
  double pulse_width;
  double kick_period;
  double frequency_offset;
} PrPhysicalParams;

typedef struct PrScaledParams {
  double recoil_frequency;
  double hbar_eff;
  double kick_amplitude;
  double stochasticity;
  double duty;
  double boundary_momentum;
  double lattice_momentum;
} PrScaledParams;

// Point of phase space: lattice phase `phi` in `[0, 2π)` and momentum `rho`.
typedef struct PrPhaseState {
  double phi;
  double rho;
} PrPhaseState;

typedef struct PrEnsembleConfig {
  size_t n_atoms;
  double sigma_rho;
  double rho_l;
  uint64_t seed;
} PrEnsembleConfig;

typedef struct PrMoments {
  double mean;
  double variance;
  double energy;
  double asymmetry;
  double standard_error;
} PrMoments;

typedef struct PrQuantumConfig {
  // Momentum grid points, a power of two.
  size_t grid_size;
  double k;
  double hbar_eff;
  size_t n_kicks;
  size_t n_beta;
  // Non-zero fixes the quasimomentum of every sample to `beta`.
  int32_t fix_beta;
  double beta;
  double sigma_rho;
  double rho_l;
  uint64_t seed;
  // Strang slices per pulse; 0 picks a default from the grid.
  size_t substeps;
} PrQuantumConfig;

typedef struct PrQuantumKickStats {
  size_t kick;
  double mean_rho;
  double energy;
  double norm_drift;
} PrQuantumKickStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `cap`) and returns the full message length without the NUL.
// Pass a null `buf` to query the length.
//
// # Safety
// `buf` must be null or point to `cap` writable bytes.
size_t pr_last_error_message(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *pr_version(void);

// Converts laboratory parameters to scaled rotor parameters.
//
// # Safety
// `params` and `out` must be valid pointers.
enum PrStatus pr_scale_params(const struct PrPhysicalParams *params, struct PrScaledParams *out);

// `K_eff(ρ) = K sinc(πρ/ρ_b)` for a square pulse.
//
// # Safety
// `out` must be a valid pointer.
enum PrStatus pr_keff_square(double rho, double stochasticity, double rho_b, double *out);

// Unit-height square pulse of duration `duty` (in kick periods).
//
// # Safety
// `out` must be a valid pointer.
enum PrStatus pr_pulse_square(double duty, struct PrPulse **out);

// Ideal delta pulse.
//
// # Safety
// `out` must be a valid pointer.
enum PrStatus pr_pulse_delta(struct PrPulse **out);

// Piecewise-linear envelope through `len` samples `(times[i], amplitudes[i])`.
//
// # Safety
// `times` and `amplitudes` must each point to `len` readable doubles.
enum PrStatus pr_pulse_sampled(const double *times,
                               const double *amplitudes,
                               size_t len,
                               struct PrPulse **out);

// `∫ f(τ) dτ`.
//
// # Safety
// `pulse` and `out` must be valid pointers.
enum PrStatus pr_pulse_area(const struct PrPulse *pulse, double *out);

// # Safety
// `pulse` must be null or a handle from a `pr_pulse_*` constructor, freed once.
void pr_pulse_free(struct PrPulse *pulse);

// Kick profile of `pulse` with strength `k`. The pulse handle stays owned by
// the caller.
//
// # Safety
// `pulse` and `out` must be valid pointers.
enum PrStatus pr_profile_new(const struct PrPulse *pulse, double k, struct PrProfile **out);

// Square-pulse profile with peak `stochasticity` and first zero at `rho_b`.
//
// # Safety
// `out` must be a valid pointer.
enum PrStatus pr_profile_sinc(double stochasticity, double rho_b, struct PrProfile **out);

// # Safety
// `profile` must be null or a handle from a `pr_profile_*` constructor, freed once.
void pr_profile_free(struct PrProfile *profile);

// Signed kick amplitude at momentum `rho`.
//
// # Safety
// `profile` and `out` must be valid pointers.
enum PrStatus pr_profile_amplitude(const struct PrProfile *profile, double rho, double *out);

// Phase `arg G(ρ)` of the pulse transform at momentum `rho`.
//
// # Safety
// `profile` and `out` must be valid pointers.
enum PrStatus pr_profile_phase(const struct PrProfile *profile, double rho, double *out);

// First positive zero of the profile. `*found` is 0 when there is none.
//
// # Safety
// `profile`, `out` and `found` must be valid pointers.
enum PrStatus pr_profile_first_zero(const struct PrProfile *profile, double *out, int32_t *found);

// Advances `state` in place by one kick period.
//
// # Safety
// `profile` and `state` must be valid pointers.
enum PrStatus pr_map_step(const struct PrProfile *profile,
                          uint32_t rule,
                          struct PrPhaseState *state);

// Writes the `n_kicks + 1` states of the trajectory from `start` to `out`.
// Returns `BufferTooSmall` without writing when `cap < n_kicks + 1`.
//
// # Safety
// `profile` must be valid and `out` must point to `cap` writable states.
enum PrStatus pr_map_iterate(const struct PrProfile *profile,
                             uint32_t rule,
                             struct PrPhaseState start,
                             size_t n_kicks,
                             struct PrPhaseState *out,
                             size_t cap);

// Samples a Gaussian cloud. The same seed always yields the same atoms.
//
// # Safety
// `config` and `out` must be valid pointers.
enum PrStatus pr_ensemble_new(const struct PrEnsembleConfig *config, struct PrEnsemble **out);

// # Safety
// `ens` must be null or a handle from [`pr_ensemble_new`], freed once.
void pr_ensemble_free(struct PrEnsemble *ens);

// Number of atoms.
//
// # Safety
// `ens` and `out` must be valid pointers.
enum PrStatus pr_ensemble_len(const struct PrEnsemble *ens, size_t *out);

// Applies `n_kicks` kick periods to every atom.
//
// # Safety
// `ens` and `profile` must be valid pointers.
enum PrStatus pr_ensemble_advance(struct PrEnsemble *ens,
                                  const struct PrProfile *profile,
                                  uint32_t rule,
                                  size_t n_kicks);

// Moments of the current momenta; asymmetry is measured from `rho_l`.
//
// # Safety
// `ens` and `out` must be valid pointers.
enum PrStatus pr_ensemble_moments(const struct PrEnsemble *ens,
                                  double rho_l,
                                  struct PrMoments *out);

// Copies the atom states into `out`. `*written` receives the atom count,
// also when the buffer is too small.
//
// # Safety
// `ens` and `written` must be valid; `out` must point to `cap` writable states.
enum PrStatus pr_ensemble_states(const struct PrEnsemble *ens,
                                 struct PrPhaseState *out,
                                 size_t cap,
                                 size_t *written);

// Least-squares slope of `values` against `kicks` for kicks ≥ 5.
//
// # Safety
// `kicks` and `values` must each point to `len` readable doubles.
enum PrStatus pr_diffusion_coefficient(const double *kicks,
                                       const double *values,
                                       size_t len,
                                       double *out);

// Runs the quantum rotor and writes `n_kicks + 1` rows of averaged
// observables to `out`.
//
// # Safety
// `config` and `pulse` must be valid; `out` must point to `cap` writable rows.
enum PrStatus pr_quantum_run(const struct PrQuantumConfig *config,
                             const struct PrPulse *pulse,
                             struct PrQuantumKickStats *out,
                             size_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PULSED_ROTOR_H */

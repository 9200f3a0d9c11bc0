use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use pulsed_rotor::classmap::{step_with, wrap_angle, KickRule, PhaseState};
use pulsed_rotor::ensemble::{histogram, sample_initial, EnsembleConfig};
use pulsed_rotor::pulses::{keff_square, KickProfile, PulseShape};
use pulsed_rotor::quantum::{free_evolve, kick_delta, WaveState};
use pulsed_rotor::units::{lattice_momentum, scale_params, PhysicalParams, CAESIUM_MASS};

fn rule() -> impl Strategy<Value = KickRule> {
    prop_oneof![Just(KickRule::Explicit), Just(KickRule::Canonical)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn keff_vanishes_at_boundary_multiples(k in -20.0..20.0f64, rho_b in 7.0..300.0f64, n in 1i32..50) {
        prop_assert_eq!(keff_square(n as f64 * rho_b, k, rho_b).unwrap(), 0.0);
        prop_assert_eq!(keff_square(-n as f64 * rho_b, k, rho_b).unwrap(), 0.0);
    }

    #[test]
    fn keff_is_even_linear_and_bounded(k in 0.0..20.0f64, rho_b in 7.0..300.0f64, rho in -1e3..1e3f64) {
        let v = keff_square(rho, k, rho_b).unwrap();
        prop_assert_eq!(v, keff_square(-rho, k, rho_b).unwrap());
        prop_assert!((keff_square(rho, 2.0 * k, rho_b).unwrap() - 2.0 * v).abs() <= 1e-12 * k.max(1.0));
        prop_assert!(v.abs() <= k);
    }

    #[test]
    fn boundary_is_fixed_for_every_phase(phi in 0.0..TAU, k in 0.1..15.0f64, rho_b in 7.0..200.0f64,
                                         sign in prop_oneof![Just(-1.0), Just(1.0)], rule in rule()) {
        let profile = KickProfile::sinc(k, rho_b).unwrap();
        let mut s = PhaseState::new(phi, sign * rho_b);
        for _ in 0..20 {
            s = step_with(s, &profile, rule);
        }
        prop_assert_eq!(s.rho, sign * rho_b);
    }

    #[test]
    fn map_commutes_with_mirror(phi in 0.0..TAU, rho in -100.0..100.0f64, k in 0.1..10.0f64, rule in rule()) {
        let profile = KickProfile::new(PulseShape::square(0.15).unwrap(), k / 0.15).unwrap();
        let a = step_with(PhaseState::new(phi, rho), &profile, rule);
        let b = step_with(PhaseState::new(TAU - phi, -rho), &profile, rule);
        prop_assert!((a.rho + b.rho).abs() < 1e-9 * (1.0 + rho.abs()));
        let d = wrap_angle(a.phi + b.phi);
        prop_assert!(d.min(TAU - d) < 1e-8);
    }

    #[test]
    fn wrapped_angles_stay_in_range(x in -1e6..1e6f64) {
        let w = wrap_angle(x);
        prop_assert!((0.0..TAU).contains(&w));
        let d = ((x - w) / TAU).round() * TAU - (x - w);
        prop_assert!(d.abs() < 1e-6);
    }

    #[test]
    fn boundary_identity_holds(tp_frac in 1e-3..0.999f64, period in 1e-6..1e-3f64, lambda in 4e-7..2e-6f64) {
        let p = PhysicalParams {
            atom_mass: CAESIUM_MASS,
            wavelength: lambda,
            potential_depth: 0.0,
            pulse_width: tp_frac * period,
            kick_period: period,
            frequency_offset: 0.0,
        };
        let s = scale_params(&p).unwrap();
        prop_assert!((s.boundary_momentum * s.duty / (2.0 * PI) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn lattice_momentum_is_four_pi_t_delta_f(period in 1e-6..1e-3f64, df in -1e7..1e7f64) {
        let p = PhysicalParams { frequency_offset: df, ..PhysicalParams::caesium(0.1 * period, period) };
        let s = scale_params(&p).unwrap();
        let expected = 4.0 * PI * period * df;
        prop_assert!((s.lattice_momentum - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        prop_assert_eq!(lattice_momentum(&p, s.hbar_eff), s.lattice_momentum);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn atoms_do_not_depend_on_ensemble_size(seed in any::<u64>(), n in 1usize..400, extra in 1usize..400) {
        let small = EnsembleConfig { n_atoms: n, sigma_rho: 4.0, rho_l: 3.0, n_kicks: 0, seed, rule: KickRule::Canonical };
        let large = EnsembleConfig { n_atoms: n + extra, ..small };
        let a = sample_initial(&small).unwrap();
        let b = sample_initial(&large).unwrap();
        prop_assert_eq!(&a[..], &b[..n]);
    }

    #[test]
    fn histogram_conserves_atoms(seed in any::<u64>(), width in 0.1..5.0f64, lo in -60.0..0.0f64, span in 1.0..80.0f64) {
        let cfg = EnsembleConfig { n_atoms: 500, sigma_rho: 20.0, rho_l: 0.0, n_kicks: 0, seed, rule: KickRule::Canonical };
        let states = sample_initial(&cfg).unwrap();
        let h = histogram(&states, width, (lo, lo + span)).unwrap();
        prop_assert_eq!(h.total(), 500.0);
        let inside = states.iter().filter(|s| s.rho >= lo && s.rho < *h.bin_edges.last().unwrap()).count();
        prop_assert_eq!(h.counts.iter().sum::<f64>(), inside as f64);
    }

    #[test]
    fn quantum_steps_are_unitary(k in 0.0..20.0f64, t in 0.0..10.0f64, rho0 in -20.0..20.0f64, beta in 0.0..1.0f64) {
        let s = WaveState::gaussian(256, beta, 1.0, rho0, 2.0, 0.3).unwrap();
        let kicked = kick_delta(&s, k).unwrap();
        prop_assert!((kicked.norm() - 1.0).abs() < 1e-10);
        let free = free_evolve(&kicked, t);
        prop_assert!((free.norm() - 1.0).abs() < 1e-10);
        for (p, q) in kicked.probabilities().iter().zip(free.probabilities()) {
            prop_assert!((p - q).abs() < 1e-14);
        }
    }
}

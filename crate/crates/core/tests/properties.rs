use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use proptest::prelude::*;
use xpmsim::atomic_model::{
    complex_voigt, manifold_susceptibility, HyperfineComponent, HyperfineManifold, LineshapeParams,
};
use xpmsim::config::RunConfig;
use xpmsim::detection::{measure_cross_phase, wrap_phase, DetectorModel, Measurement, ToneConfig};
use xpmsim::fitting::{least_squares_fit, FitProblem, Model};
use xpmsim::harness::{Harness, OperatingPoint, SweepConfig};
use xpmsim::kerr_engine::{n2_from_phase, BeamPowers, KerrEngine};

const MHZ: f64 = TAU * 1e6;

fn engine() -> &'static KerrEngine {
    static E: OnceLock<KerrEngine> = OnceLock::new();
    E.get_or_init(|| KerrEngine::with_defaults().unwrap())
}

fn short_detector() -> DetectorModel {
    DetectorModel {
        duration: 20e-6,
        ..DetectorModel::default()
    }
}

fn manifolds() -> impl Strategy<Value = Vec<HyperfineComponent>> {
    prop::collection::vec((-50.0..50.0f64, 1e-3..100.0f64), 1..7).prop_map(|v| {
        v.into_iter()
            .map(|(o, s)| HyperfineComponent {
                offset: o * MHZ,
                strength: s,
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn susceptibility_is_passive(
        comps in manifolds(),
        gamma in 0.1..20.0f64,
        sigma in 0.0..20.0f64,
        delta in -500.0..500.0f64,
    ) {
        let m = HyperfineManifold::new(comps).unwrap();
        let p = LineshapeParams::new(gamma * MHZ, sigma * MHZ).unwrap();
        let chi = manifold_susceptibility(delta * MHZ, &m, &p).unwrap();
        prop_assert!(chi.im >= 0.0, "{chi}");
    }

    #[test]
    fn strengths_normalise_at_any_scale(comps in manifolds(), scale in 1e-12..1e12f64) {
        let scaled: Vec<_> = comps
            .iter()
            .map(|c| HyperfineComponent { offset: c.offset, strength: c.strength * scale })
            .collect();
        let m = HyperfineManifold::new(scaled).unwrap();
        let total: f64 = m.components().iter().map(|c| c.strength).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn voigt_parity(gamma in 0.1..20.0f64, sigma in 0.0..20.0f64, delta in 0.0..300.0f64) {
        let p = LineshapeParams::new(gamma * MHZ, sigma * MHZ).unwrap();
        let a = complex_voigt(delta * MHZ, &p).unwrap();
        let b = complex_voigt(-delta * MHZ, &p).unwrap();
        prop_assert!((a.re + b.re).abs() <= 1e-12 * a.norm().max(1e-300));
        prop_assert!((a.im - b.im).abs() <= 1e-12 * a.norm().max(1e-300));
    }

    #[test]
    fn phase_is_exactly_linear_in_signal(
        p_met in 0.0..100e-6f64,
        p_sig in 1e-7..1e-4f64,
        alpha in 1e-3..1e3f64,
        delta in -80.0..80.0f64,
    ) {
        let e = engine();
        let base = e.meter_phase_shift(BeamPowers::new(p_met, p_sig).unwrap(), delta * MHZ).unwrap();
        let scaled = e.meter_phase_shift(BeamPowers::new(p_met, alpha * p_sig).unwrap(), delta * MHZ).unwrap();
        prop_assert!((scaled - alpha * base).abs() <= 1e-13 * (alpha * base).abs());
    }

    #[test]
    fn saturation_is_monotone_in_meter_power(p_met in 0.0..100e-6f64, step in 1e-8..1e-4f64) {
        let e = engine();
        let d = e.max_phase_detuning();
        let lo = BeamPowers::new(p_met, 25e-6).unwrap();
        let hi = BeamPowers::new(p_met + step, 25e-6).unwrap();
        prop_assert!(e.meter_phase_shift(hi, d).unwrap() < e.meter_phase_shift(lo, d).unwrap());
        let peak = e.shape().absorption_peak().detuning;
        prop_assert!(e.transmission(hi, peak).unwrap() > e.transmission(lo, peak).unwrap());
    }

    #[test]
    fn n2_inverts_the_forward_model(p_sig in 1e-7..1e-4f64) {
        let e = engine();
        let phi = e.meter_phase_shift(BeamPowers::new(0.0, p_sig).unwrap(), e.max_phase_detuning()).unwrap();
        let n2 = n2_from_phase(phi, e.cell(), p_sig, e.consts()).unwrap();
        prop_assert!((n2 / e.n2() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrapped_phase_in_half_open_interval(phi in -1e3..1e3f64) {
        let w = wrap_phase(phi);
        prop_assert!(w > -PI && w <= PI);
        let k = ((phi - w) / TAU).round();
        prop_assert!((phi - w - k * TAU).abs() < 1e-9);
    }

    #[test]
    fn sweep_matches_engine_and_ignores_value_order(
        values in prop::collection::btree_set(1u32..500, 2..10),
        p_met in 0.0..50e-6f64,
        shuffle_seed in any::<u64>(),
    ) {
        let h = Harness::new(engine().clone());
        let values: Vec<f64> = values.into_iter().map(|v| v as f64 * 1e-7).collect();
        let mut shuffled = values.clone();
        let n = shuffled.len();
        for i in 0..n {
            let j = (shuffle_seed.rotate_left(i as u32) as usize) % n;
            shuffled.swap(i, j);
        }
        let cfg = SweepConfig { values: values.clone(), fixed_power: p_met, ..SweepConfig::signal_default() };
        let a = h.run_signal_sweep(&cfg).unwrap();
        let b = h.run_signal_sweep(&SweepConfig { values: shuffled, ..cfg.clone() }).unwrap();
        prop_assert_eq!(&a, &b);
        let (d, _) = h.operating_point(OperatingPoint::MaxPhase);
        for (i, p_sig) in a.axis_values.iter().enumerate() {
            let direct = h.engine.meter_phase_shift(BeamPowers::new(p_met, *p_sig).unwrap(), d).unwrap();
            prop_assert!((a.phase[i] - direct).abs() <= 1e-12 * direct.abs());
        }
    }

    #[test]
    fn power_law_fit_ignores_point_order(
        a in 0.1..10.0f64,
        b in -2.0..2.0f64,
        noise in prop::collection::vec(-0.05..0.05f64, 12),
        rotate in 1usize..11,
    ) {
        let x: Vec<f64> = (1..=12).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().zip(&noise).map(|(x, n)| a * x.powf(b) * (1.0 + n)).collect();
        let fit = |x: Vec<f64>, y: Vec<f64>| {
            let p = FitProblem::with_initial_guess(x, y, None, &Model::PowerLaw).unwrap();
            least_squares_fit(&p, None).unwrap()
        };
        let r1 = fit(x.clone(), y.clone());
        let (mut x2, mut y2) = (x, y);
        x2.rotate_left(rotate);
        y2.rotate_left(rotate);
        let r2 = fit(x2, y2);
        for (p, q) in r1.params.iter().zip(&r2.params) {
            prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
        }
        prop_assert!((r1.residual_rms - r2.residual_rms).abs() <= 1e-12 * r1.residual_rms.max(1e-300));
    }

    #[test]
    fn config_hash_round_trips(seed in any::<u64>(), points in 2usize..5000, len in 0.01..10.0f64) {
        let json = format!(r#"{{"seed": {seed}, "scan": {{"points": {points}}}, "fiber": {{"length_m": {len}}}}}"#);
        let cfg = RunConfig::from_json(&json).unwrap();
        let again = RunConfig::from_json(&cfg.canonical_json()).unwrap();
        prop_assert_eq!(cfg.hash(), again.hash());
        prop_assert_eq!(cfg, again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn demodulator_has_unit_slope(phi in -PI / 2.0 + 1e-3..PI / 2.0 - 1e-3) {
        let r = measure_cross_phase(
            &Measurement::phase_only(phi),
            1e-6,
            &ToneConfig::default(),
            &short_detector(),
            2e-6,
            None,
        )
        .unwrap();
        prop_assert!((r.phase - phi).abs() < 1e-6 * phi.abs().max(1.0), "{} vs {phi}", r.phase);
    }

    #[test]
    fn common_phase_is_rejected(phi in -3.0..3.0f64, psi in -10.0..10.0f64, t in 0.05..1.0f64) {
        let tones = ToneConfig::default();
        let det = short_detector();
        let m = Measurement { cross_phase: phi, common_phase: 0.0, transmission: t };
        let base = measure_cross_phase(&m, 1e-6, &tones, &det, 2e-6, None).unwrap();
        let moved = measure_cross_phase(&Measurement { common_phase: psi, ..m }, 1e-6, &tones, &det, 2e-6, None).unwrap();
        prop_assert!(wrap_phase(moved.phase - base.phase).abs() < 1e-9);
    }
}

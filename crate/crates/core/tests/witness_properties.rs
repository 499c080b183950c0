use nonclassical::witness::{power_moments, DEFAULT_FIT_TOL, DEFAULT_PSD_TOL};
use nonclassical::*;
use num_complex::Complex64;
use proptest::prelude::*;

const DIM: usize = 14;

/// Random superposition with the top six levels empty, so moments up to
/// order four stay clear of the truncation guard.
fn pure_state() -> impl Strategy<Value = StateVector> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), DIM - 6)
        .prop_filter("nonzero", |c| c.iter().any(|(re, im)| re.abs() + im.abs() > 1e-3))
        .prop_map(|c| {
            let mut coeffs: Vec<Complex64> = c.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
            coeffs.resize(DIM, Complex64::new(0.0, 0.0));
            superposition(make_space(DIM).unwrap(), &coeffs).unwrap()
        })
}

fn state() -> impl Strategy<Value = PhotonState> {
    prop_oneof![
        pure_state().prop_map(PhotonState::from),
        proptest::collection::vec((0.01f64..1.0, pure_state()), 1..4).prop_map(|parts| {
            let total: f64 = parts.iter().map(|p| p.0).sum();
            let parts: Vec<(f64, StateVector)> = parts.into_iter().map(|(w, s)| (w / total, s)).collect();
            DensityOperator::mixture(&parts).unwrap().into()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn negative_k_is_never_classical(st in state()) {
        let k = k_measure(&st).unwrap();
        let report = hankel_witness(&factorial_moments(&st, 4).unwrap(), DEFAULT_PSD_TOL);
        if k < -1e-8 {
            prop_assert!(!report.classical_feasible);
            prop_assert!((report.cb_margin - k).abs() < 1e-9);
        }
    }

    #[test]
    fn power_moments_match_direct_sums(st in state()) {
        let moments = factorial_moments(&st, 4).unwrap();
        let dist = photon_distribution(&st);
        let power = power_moments(&moments);
        for (k, &mu) in power.iter().enumerate() {
            let direct: f64 = dist.weights().iter().enumerate().map(|(n, x)| x * (n as f64).powi(k as i32)).sum();
            prop_assert!((mu - direct).abs() < 1e-9 * direct.max(1.0), "k = {k}: {mu} vs {direct}");
        }
    }

    #[test]
    fn fit_feasible_implies_hankel_feasible(st in state()) {
        let moments = factorial_moments(&st, 4).unwrap();
        let fit = fit_classical_measure(&moments, &GridSpec::default(), DEFAULT_FIT_TOL).unwrap();
        if fit.feasible {
            prop_assert!(hankel_witness(&moments, DEFAULT_PSD_TOL).classical_feasible);
        }
        prop_assert!(fit.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn coherent_mixtures_are_fitted(
        atoms in proptest::collection::vec((0.0f64..2.0, 0.0f64..std::f64::consts::TAU, 0.05f64..1.0), 1..5),
    ) {
        let total: f64 = atoms.iter().map(|a| a.2).sum();
        let space = make_space(40).unwrap();
        let parts: Vec<(f64, StateVector)> = atoms
            .iter()
            .map(|&(r, phi, w)| (w / total, coherent_state(space, Complex64::from_polar(r, phi), 1e-12).unwrap()))
            .collect();
        let rho = DensityOperator::mixture(&parts).unwrap();
        prop_assert!(k_measure(&rho).unwrap() >= -1e-8);
        let moments = factorial_moments(&rho, 4).unwrap();
        let fit = fit_classical_measure(&moments, &GridSpec::default(), DEFAULT_FIT_TOL).unwrap();
        prop_assert!(fit.feasible, "residual {}", fit.residual);
        prop_assert!(hankel_witness(&moments, DEFAULT_PSD_TOL).classical_feasible);
    }
}

/// Any probability measure on s ≥ 0 has E[p(s)] ≥ 0 for p(s) = s(s − 1)²,
/// while the moments (1, 2, 2, 0) of |2⟩ give E[p] = m₃ − 2m₂ + m₁ = −2
/// (the order-4 moment is not needed). With c = (0, 1, −2, 1) the scaled
/// residual r of any measure obeys |Σ c_k (fitted_k − m_k)| = |E_μ[p] + 2|
/// ≥ 2, so ‖r‖ ≥ 2 / ‖c / scale‖ by Cauchy–Schwarz.
#[test]
fn two_photon_residual_respects_dual_bound() {
    let space = make_space(10).unwrap();
    let moments = factorial_moments(&fock_state(space, 2).unwrap(), 4).unwrap();
    for (got, want) in moments.values().iter().zip([1.0, 2.0, 2.0, 0.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    let fit = fit_classical_measure(&moments, &GridSpec::default(), DEFAULT_FIT_TOL).unwrap();
    let scale: Vec<f64> = moments.values().iter().map(|m| m.max(1.0)).collect();
    let c = [0.0, 1.0, -2.0, 1.0, 0.0];
    let norm: f64 = c.iter().zip(&scale).map(|(ck, sk)| (ck * sk).powi(2)).sum::<f64>().sqrt();
    let bound = 2.0 / norm;
    assert!(!fit.feasible);
    assert!(fit.residual >= bound - 1e-12, "residual {} < bound {bound}", fit.residual);
}

#[test]
fn reports_round_trip_through_json() {
    let space = make_space(60).unwrap();
    let th = thermal_state(space, 1.0, 1e-12).unwrap();
    let moments = factorial_moments(&th, 4).unwrap();
    let report = hankel_witness(&moments, DEFAULT_PSD_TOL);
    let back: WitnessReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(back, report);
    let fit = fit_classical_measure(&moments, &GridSpec::default(), DEFAULT_FIT_TOL).unwrap();
    let back: MeasureFitResult = serde_json::from_str(&serde_json::to_string(&fit).unwrap()).unwrap();
    assert_eq!(back, fit);
    let seq: MomentSequence = serde_json::from_str("[1.0, 1.0, 2.0]").unwrap();
    assert_eq!(seq.order(), 2);
    assert!(serde_json::from_str::<MomentSequence>("[0.5, 1.0, 2.0]").is_err());
}

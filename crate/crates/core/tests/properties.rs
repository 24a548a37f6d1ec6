use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use floquet_ep::epmetrics::{inner_product_metric, observe, DEFAULT_REALITY_TOL};
use floquet_ep::liouvillian::{hermitian_basis, vectorized_identity};
use floquet_ep::model::{DissipatorKind, FamilyPoint, ModelFamily};
use floquet_ep::propagator::{
    interval_propagator, one_period_propagator, propagator_spectrum, IntegratorOptions, Steps,
};

fn family() -> impl Strategy<Value = ModelFamily> {
    prop::sample::select(ModelFamily::MODULATED.to_vec())
}

fn dissipator() -> impl Strategy<Value = DissipatorKind> {
    prop::sample::select(DissipatorKind::ALL.to_vec())
}

fn point() -> impl Strategy<Value = FamilyPoint> {
    (family(), dissipator(), 0.0..6.0f64, 0.2..8.0f64, 0.0..1.5f64)
        .prop_map(|(f, d, g, w, delta)| FamilyPoint::new(f, d, g, w).with_delta(delta))
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn apply(g: &DMatrix<C64>, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let n = rho.nrows();
    let v = g * DVector::from_column_slice(rho.as_slice());
    DMatrix::from_column_slice(n, n, v.as_slice())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn propagator_preserves_trace_and_hermiticity(p in point()) {
        let g = one_period_propagator(&p.build(), Steps::Auto).unwrap();
        let id = vectorized_identity(2);
        let defect = (id.adjoint() * &g - id.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(defect < 1e-10);
        for b in hermitian_basis(2) {
            let out = apply(&g, &b);
            prop_assert!(max_abs(&(&out - out.adjoint())) < 1e-10);
        }
    }

    #[test]
    fn pure_states_stay_positive(p in point(), theta in 0.0..std::f64::consts::PI, phi in 0.0..6.3f64) {
        let g = one_period_propagator(&p.build(), Steps::Auto).unwrap();
        let psi = DVector::from_vec(vec![
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ]);
        let out = apply(&g, &(&psi * psi.adjoint()));
        let herm = (&out + out.adjoint()) * C64::new(0.5, 0.0);
        let min = herm.symmetric_eigen().eigenvalues.min();
        prop_assert!(min >= -1e-9, "{min}");
    }

    #[test]
    fn spectrum_is_closed_under_conjugation(p in point()) {
        let s = propagator_spectrum(&p.build()).unwrap();
        for l in &s.eigenvalues {
            prop_assert!(l.norm() <= 1.0 + 1e-9);
            let d = s.eigenvalues.iter().map(|m| (m - l.conj()).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d < 1e-8, "{l}: {d}");
        }
        prop_assert!((s.eigenvalues[s.steady_index] - 1.0).norm() < 1e-12);
    }

    #[test]
    fn propagators_compose_over_a_split_period(p in point(), frac in 0.05..0.95f64) {
        let m = p.build();
        let opts = IntegratorOptions::default();
        let t = m.period();
        let full = interval_propagator(&m, 0.0, t, Steps::Auto, &opts).unwrap();
        let a = interval_propagator(&m, 0.0, frac * t, Steps::Auto, &opts).unwrap();
        let b = interval_propagator(&m, frac * t, t, Steps::Auto, &opts).unwrap();
        prop_assert!(max_abs(&(full - b * a)) < 1e-9);
    }

    #[test]
    fn metric_ignores_eigenmatrix_phases(p in point(), phases in prop::collection::vec(0.0..6.3f64, 4)) {
        let mut s = propagator_spectrum(&p.build()).unwrap();
        let Ok(ip) = inner_product_metric(&s) else { return Ok(()) };
        for (v, ph) in s.eigenmatrices.iter_mut().zip(phases) {
            *v *= C64::from_polar(1.0, ph);
        }
        prop_assert!((inner_product_metric(&s).unwrap() - ip).abs() < 1e-12);
    }

    #[test]
    fn zero_depth_cosine_drive_is_frequency_independent(
        d in dissipator(), g in 0.1..5.0f64, w1 in 0.3..6.0f64, w2 in 0.3..6.0f64,
    ) {
        // δ = 0 leaves a static generator; only the period changes, and the
        // metric depends on eigenvectors alone
        let obs = |w: f64| {
            let m = FamilyPoint::new(ModelFamily::DriveCos, d, g, w).with_delta(0.0).build();
            observe(&propagator_spectrum(&m).unwrap(), g, DEFAULT_REALITY_TOL).unwrap()
        };
        let (a, b) = (obs(w1), obs(w2));
        prop_assume!(!a.degenerate && !b.degenerate);
        prop_assert!((a.ip - b.ip).abs() < 1e-6, "{} vs {}", a.ip, b.ip);
    }
}

use std::f64::consts::PI;

use adiabat_core::diagnostics::{classify, loglog_fit, ClassifierSample, Thresholds};
use adiabat_core::gauge::{couplings, kato_operator, CouplingRoute, EigenFrame};
use adiabat_core::grid::cumulative_integral;
use adiabat_core::linalg::{c, herm_eig, identity, unitarity_defect, unitary_exp, ComplexMatrix};
use adiabat_core::{propagate, Grid, HamiltonianPath, SpinHalf};
use proptest::prelude::*;

fn hermitian(n: usize, scale: f64) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * n * n).prop_map(move |v| {
        let a = ComplexMatrix::from_fn(n, n, |i, j| c(v[2 * (i * n + j)], v[2 * (i * n + j) + 1]));
        (&a + a.adjoint()) * c(0.5 * scale, 0.0)
    })
}

/// `D + A cos 2πs + B sin 2πs` with a spread-out diagonal.
fn smooth_path(n: usize) -> impl Strategy<Value = HamiltonianPath> {
    (hermitian(n, 0.25), hermitian(n, 0.25)).prop_map(move |(a, b)| {
        let d = ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(1.5 * i as f64, 0.0) } else { c(0.0, 0.0) });
        let (a2, b2) = (a.clone(), b.clone());
        HamiltonianPath::new(n, (0.0, 1.0), move |s, _| {
            let (sn, cs) = (2.0 * PI * s).sin_cos();
            &d + &a * c(cs, 0.0) + &b * c(sn, 0.0)
        })
        .with_derivative(move |s, _| {
            let (sn, cs) = (2.0 * PI * s).sin_cos();
            (&b2 * c(cs, 0.0) - &a2 * c(sn, 0.0)) * c(2.0 * PI, 0.0)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn eig_reconstructs(m in (1usize..7).prop_flat_map(|n| hermitian(n, 3.0))) {
        let e = herm_eig(&m).unwrap();
        let n = m.nrows();
        let d = ComplexMatrix::from_fn(n, n, |i, j| if i == j { c(e.values[i], 0.0) } else { c(0.0, 0.0) });
        let back = &e.vectors * d * e.vectors.adjoint();
        prop_assert!((back - &m).norm() <= 1e-11 * m.norm().max(1.0));
        prop_assert!(unitarity_defect(&e.vectors) <= 1e-12);
        prop_assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let again = herm_eig(&m).unwrap();
        prop_assert_eq!(e.values, again.values);
        prop_assert_eq!(e.vectors, again.vectors);
    }

    #[test]
    fn exp_is_additive(m in hermitian(4, 2.0), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let lhs = unitary_exp(&m, a + b).unwrap();
        let rhs = unitary_exp(&m, a).unwrap() * unitary_exp(&m, b).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
        prop_assert!((unitary_exp(&m, 0.0).unwrap() - identity(4)).norm() <= 1e-13);
    }

    #[test]
    fn propagation_stays_unitary(h in smooth_path(3), tau in 1.0f64..50.0) {
        let grid = Grid::new(0.0, 1.0, 257).unwrap();
        let r = propagate(&h, tau, &grid).unwrap();
        prop_assert!(r.max_unitarity_defect <= 1e-12);
    }

    #[test]
    fn coupling_routes_agree(h in smooth_path(3)) {
        let f = EigenFrame::build(&h, 10.0, &Grid::new(0.0, 1.0, 2001).unwrap()).unwrap();
        let hf = couplings(&f, CouplingRoute::HellmannFeynman).unwrap();
        let fd = couplings(&f, CouplingRoute::FiniteDifference).unwrap();
        for (a, b) in hf.iter().zip(&fd) {
            for m in 0..3 {
                for n in 0..3 {
                    if m != n {
                        prop_assert!((a[(m, n)] - b[(m, n)]).norm() <= 1e-6);
                    }
                }
            }
            // anti-Hermitian: C_nm = −conj(C_mn)
            prop_assert!((a + a.adjoint()).norm() <= 1e-9);
        }
    }

    #[test]
    fn frame_invariants(h in smooth_path(3)) {
        let f = EigenFrame::build(&h, 10.0, &Grid::new(0.0, 1.0, 1001).unwrap()).unwrap();
        prop_assert!(f.completeness_defect() <= 1e-10);
        prop_assert!(f.transport_residual() <= 1e-5);
        for (x, y) in f.regauged().iter().zip(&f.vectors) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
        let ua = kato_operator(&f);
        for k in (0..f.len()).step_by(50) {
            for l in 0..3 {
                prop_assert!((&ua[k] * f.projector(0, l) - f.projector(k, l) * &ua[k]).norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn cumulative_integral_is_exact_for_cubics(a in -2.0f64..2.0, b in -2.0f64..2.0, d in -2.0f64..2.0, n in 4usize..60) {
        let h = 1.0 / (n - 1) as f64;
        let f: Vec<_> = (0..n).map(|k| { let x = k as f64 * h; c(a * x * x * x + b * x, d * x * x) }).collect();
        let v = cumulative_integral(&f, h);
        for (k, z) in v.iter().enumerate() {
            let x = k as f64 * h;
            let want = c(a * x.powi(4) / 4.0 + b * x * x / 2.0, d * x.powi(3) / 3.0);
            prop_assert!((z - want).norm() <= 1e-12);
        }
    }

    #[test]
    fn loglog_fit_recovers_power_laws(p in -3.0f64..3.0, scale in 0.01f64..100.0) {
        let x = [1.0f64, 10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|t| scale * t.powf(p)).collect();
        let fit = loglog_fit(&x, &y, 3).unwrap();
        prop_assert!((fit.slope - p).abs() <= 1e-10);
        prop_assert!(fit.residual <= 1e-10);
    }

    #[test]
    fn classifier_is_deterministic(q in 0.0f64..0.2, r in 0.0f64..0.5) {
        let t = Thresholds::default();
        let samples = [ClassifierSample { tau: 10.0, qac_max: q, resonance_max: r, f_norm: 0.1 }];
        let first = classify(&samples, &t);
        let second = classify(&samples, &t);
        prop_assert_eq!(first.is_ok(), second.is_ok());
        if let (Ok(x), Ok(y)) = (first, second) {
            prop_assert_eq!(x, y);
        }
        if q < t.eps_q {
            prop_assert!(classify(&samples, &t).is_ok());
        }
    }

    #[test]
    fn spin_half_qac_matches_closed_form(theta in 0.05f64..3.0, w in 0.001f64..0.1) {
        let m = SpinHalf::new(theta, 1.0);
        let tau = SpinHalf::tau_for_omega(w);
        let f = EigenFrame::build_with(&m.hamiltonian(), tau, &Grid::new(0.0, 2.0 * PI, 257).unwrap(),
            &adiabat_core::FrameOptions::with_reference(m.reference_basis())).unwrap();
        let cm = couplings(&f, CouplingRoute::HellmannFeynman).unwrap();
        let q = adiabat_core::diagnostics::qac_max(&f, &cm).unwrap();
        prop_assert!((q - m.qac(w)).abs() <= 1e-10 * m.qac(w).max(1e-300) + 1e-15);
    }
}

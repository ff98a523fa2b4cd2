use nalgebra::Matrix3;
use num_complex::Complex64;
use proptest::prelude::*;
use topoflow_core::halfline::{dispersion_residual, essential_gap_edge, transverse_roots};
use topoflow_core::model::{
    bulk_bands, bulk_hamiltonian, bulk_hamiltonian_complex, characteristic_quartic, deficiency_residual,
    omega_plus, section_inf, Deficiency,
};
use topoflow_core::model::BulkMomentum;
use topoflow_core::scatter::{scattering_amplitude, ScatterPoint};
use topoflow_core::{model, CylinderPoint, ModelParams};

fn p() -> ModelParams {
    ModelParams::default()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn hamiltonian_hermitian_with_band_spectrum(kx in -20.0..20.0f64, ky in -20.0..20.0f64) {
        let h = bulk_hamiltonian(&p(), kx, ky);
        prop_assert_eq!(h, h.adjoint());
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let b = bulk_bands(&p(), &BulkMomentum::finite(kx, ky));
        let scale = 1.0 + b.plus;
        prop_assert!((ev[0] - b.minus).abs() < 1e-12 * scale);
        prop_assert!(ev[1].abs() < 1e-12 * scale);
        prop_assert!((ev[2] - b.plus).abs() < 1e-12 * scale);
    }

    #[test]
    fn section_inf_is_an_eigenvector_of_norm_sqrt2(kx in -10.0..10.0f64, ky in -10.0..10.0f64) {
        prop_assume!(kx.hypot(ky) > 1e-3);
        let w = omega_plus(&p(), kx, ky);
        let psi = section_inf(&p(), w, kx, c(ky)).unwrap();
        let r = bulk_hamiltonian(&p(), kx, ky) * psi - psi * c(w);
        prop_assert!(r.norm() <= 1e-10 * psi.norm() * (1.0 + w));
        prop_assert!((psi.norm_squared() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn sections_at_complex_roots(kx in -3.0..3.0f64, s in 0.05..0.95f64) {
        let w = s * essential_gap_edge(&p(), kx);
        let roots = transverse_roots(&p(), kx, w).unwrap();
        for ky in roots {
            let scale = 1.0 + ky.norm_sqr().powi(2);
            prop_assert!(dispersion_residual(&p(), kx, w, ky).norm() <= 1e-10 * scale);
            let Ok(psi) = section_inf(&p(), w, kx, ky) else { continue };
            let h = bulk_hamiltonian_complex(&p(), kx, ky);
            let r = h * psi - psi * c(w);
            prop_assert!(r.norm() <= 1e-9 * psi.norm() * (1.0 + ky.norm_sqr()));
        }
    }

    #[test]
    fn scattering_amplitude_is_unimodular(kx in -4.0..4.0f64, kappa in 0.01..4.0f64, a in -6.0..6.0f64) {
        let Ok(pt) = ScatterPoint::new(kx, kappa, a) else { return Ok(()) };
        let s = scattering_amplitude(&p(), &pt).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beta_is_unimodular(kx in -10.0..10.0f64, a in -10.0..10.0f64) {
        prop_assume!(kx.hypot(a) > 1e-6);
        let b = model::beta_map(&CylinderPoint::from_kx_a(kx, a).unwrap());
        prop_assert!((b.norm() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn deficiency_residuals() {
    for which in Deficiency::ALL {
        let r = deficiency_residual(&p(), which, 10.0, 1e-3).unwrap();
        assert!(r < 1e-6, "{which:?}: {r:e}");
    }
}

#[test]
fn characteristic_roots_are_double() {
    let nu = p().nu();
    let lam = 1.0 / (2f64.sqrt() * nu);
    for l in [lam, -lam] {
        assert!(characteristic_quartic(nu, l).abs() < 1e-12);
        let d = (characteristic_quartic(nu, l + 1e-5) - characteristic_quartic(nu, l - 1e-5)) / 2e-5;
        assert!(d.abs() < 1e-6);
    }
    assert!(characteristic_quartic(nu, 0.0) > 0.0);
}

#[test]
fn hermiticity_of_complex_hamiltonian_on_real_axis() {
    let h = bulk_hamiltonian_complex(&p(), 0.7, c(-1.3));
    assert_eq!(h, bulk_hamiltonian(&p(), 0.7, -1.3));
    assert_eq!(h, h.adjoint());
    let _: Matrix3<Complex64> = h;
}

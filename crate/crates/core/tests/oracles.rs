use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topoflow_core::fd::{fd_edge_eigenvalues, FdConfig, PerturbationSpec};
use topoflow_core::flow::robin_lowest_eigenvalue;
use topoflow_core::halfline::{essential_gap_edge, upper_gap_eigenvalues};
use topoflow_core::model::{bulk_hamiltonian_complex, chern_number, omega_plus, BandIndex};
use topoflow_core::scatter::{kappa_ev, winding_of};
use topoflow_core::{model, BoundaryParam, CylinderPoint, ModelParams};

fn p() -> ModelParams {
    ModelParams::default()
}

fn det(m: &Matrix3<Complex64>) -> Complex64 {
    m.determinant()
}

#[test]
fn chern_numbers_at_coarse_grid() {
    let got: Vec<i32> = [BandIndex::Minus, BandIndex::Zero, BandIndex::Plus]
        .iter()
        .map(|&b| chern_number(&p(), b, 50).unwrap())
        .collect();
    assert_eq!(got, [-2, 0, 2]);
}

#[test]
fn kappa_ev_is_a_root_of_the_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let kx: f64 = rng.gen_range(-3.0..3.0);
        let kappa: f64 = rng.gen_range(0.01..3.0);
        let w = omega_plus(&p(), kx, kappa);
        let k = kappa_ev(&p(), kx, kappa).unwrap();
        assert!(k.re == 0.0 && k.im > kappa);
        let h = bulk_hamiltonian_complex(&p(), kx, k) - Matrix3::identity() * Complex64::new(w, 0.0);
        let scale = (1.0 + w * w) * (1.0 + k.norm_sqr());
        assert!(det(&h).norm() < 1e-10 * scale * w, "kx={kx} kappa={kappa}");
    }
}

#[test]
fn kelvin_wave_for_every_boundary_parameter() {
    for kx in [-0.3, -1.0, -2.0] {
        for a in [-4.0, -0.5, 0.7, 3.0] {
            let pt = CylinderPoint::from_kx_a(kx, a).unwrap();
            let ev = upper_gap_eigenvalues(&p(), &pt).unwrap();
            assert!(ev.iter().any(|&w| (w + kx).abs() < 1e-9), "kx={kx} a={a}: {ev:?}");
        }
    }
}

#[test]
fn beta_winds_minus_sign_kx() {
    for kx in [0.1, 1.0, 10.0, -0.1, -1.0, -10.0] {
        let w = winding_of(
            |t| {
                let phi = -FRAC_PI_2 + PI * t;
                let bc = if t == 0.0 || t == 1.0 { BoundaryParam::infinity() } else { BoundaryParam::from_angle(phi) };
                Ok(model::beta_map(&CylinderPoint::new(kx, bc)?))
            },
            256,
        )
        .unwrap();
        assert_eq!(w.value, -kx.signum() as i64, "kx={kx}");
    }
}

#[test]
fn robin_lowest_is_minus_a_squared() {
    let cfg = FdConfig::new(20.0, 4000).unwrap();
    for a in [0.5, 1.0, 2.0] {
        let e = robin_lowest_eigenvalue(&cfg, a).unwrap();
        assert!((e + a * a).abs() < 1e-3, "a={a}: {e}");
    }
}

/// fd eigenvalues at two resolutions, Richardson-extrapolated.
fn fd_extrapolated(pt: &CylinderPoint) -> Vec<f64> {
    let coarse = FdConfig::new(20.0, 4000).unwrap();
    let fine = FdConfig::new(20.0, 8000).unwrap();
    let (f, _) = fd_edge_eigenvalues(&p(), pt, &fine, &PerturbationSpec::None).unwrap();
    let (c, _) = fd_edge_eigenvalues(&p(), pt, &coarse, &PerturbationSpec::None).unwrap();
    f.iter()
        .filter_map(|&x| {
            let y = c.iter().copied().min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))?;
            ((y - x).abs() < 1e-2).then(|| (4.0 * x - y) / 3.0)
        })
        .collect()
}

#[test]
fn semi_analytic_matches_fd() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let points: Vec<(f64, f64)> = (0..50).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5))).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::thread::scope(|s| {
        for chunk in points.chunks(points.len().div_ceil(workers)) {
            s.spawn(move || {
                for &(kx, phi) in chunk {
                    let pt = CylinderPoint::new(kx, BoundaryParam::from_angle(phi)).unwrap();
                    let semi = upper_gap_eigenvalues(&p(), &pt).unwrap();
                    let fd = fd_extrapolated(&pt);
                    let edge = essential_gap_edge(&p(), kx);
                    let inside = |e: f64| e > 0.05 && e < edge - 0.02;
                    for e in fd.iter().filter(|&&e| inside(e)) {
                        let d = semi.iter().map(|s| (s - e).abs()).fold(f64::INFINITY, f64::min);
                        assert!(d < 1e-4, "kx={kx} phi={phi}: fd {e} vs {semi:?}");
                    }
                    for s in semi.iter().filter(|&&s| inside(s)) {
                        assert!(fd.iter().any(|e| (e - s).abs() < 1e-4), "kx={kx} phi={phi}: semi {s} missing from {fd:?}");
                    }
                }
            });
        }
    });
}

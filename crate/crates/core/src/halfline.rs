//! Semi-analytic spectral theory of the half-line operator `H#(kx, a)`:
//! transverse roots, decaying modes, the boundary determinant and the
//! discrete eigenvalues inside the essential-spectrum gaps.

use alloc::vec::Vec;

use num_traits::Float;

use crate::cylinder::CylinderPoint;
use crate::error::{Error, Result};
use crate::linalg::{c, Mat3, Vec3};
use crate::model::{bulk_hamiltonian_complex, section_inf, ModelParams};
use crate::C64;

/// Normalized determinant threshold for accepting an eigenvalue.
pub const DET_TOL: f64 = 1e-6;
/// Points in the initial frequency scan of a window.
pub const SCAN_POINTS: usize = 2000;
/// Normalized boundary-column size below which both columns count as zero.
const MULTIPLICITY_TOL: f64 = 1e-7;

/// `sqrt(kx^2 + (f - nu kx^2)^2)`; the essential spectrum is
/// `(-inf, -edge] U {0} U [edge, inf)`.
pub fn essential_gap_edge(params: &ModelParams, kx: f64) -> f64 {
    Float::sqrt(kx * kx + params.mass(kx * kx).powi(2))
}

/// Roots `K = ky^2` of `nu^2 K^2 + (1 - 2 nu F) K + (edge^2 - w^2) = 0`,
/// `F = f - nu kx^2`.
pub fn transverse_k_squared(params: &ModelParams, kx: f64, omega: f64) -> [C64; 2] {
    let nu = params.nu();
    let big_f = params.mass(kx * kx);
    let a = nu * nu;
    let b = 1.0 - 2.0 * nu * big_f;
    let cc = kx * kx + big_f * big_f - omega * omega;
    let disc = c(b * b - 4.0 * a * cc, 0.0).sqrt();
    // b > 0 whenever 1 - 2 f nu > 0, so b + disc never cancels.
    let q = (disc + b) * -0.5;
    [q / a, c(cc, 0.0) / q]
}

/// The four roots `ky` of the transverse dispersion relation at `(kx, w)`,
/// as `[+sqrt K1, -sqrt K1, +sqrt K2, -sqrt K2]` with principal square roots.
pub fn transverse_roots(params: &ModelParams, kx: f64, omega: f64) -> Result<[C64; 4]> {
    let [k1, k2] = transverse_k_squared(params, kx, omega);
    let scale = 1.0f64.max(k1.norm()).max(k2.norm());
    if (k1 - k2).norm() < 1e-8 * scale {
        return Err(Error::DegenerateRoots { omega });
    }
    let (s1, s2) = (k1.sqrt(), k2.sqrt());
    Ok([s1, -s1, s2, -s2])
}

/// Residual of the transverse quartic at `ky`.
pub fn dispersion_residual(params: &ModelParams, kx: f64, omega: f64, ky: C64) -> C64 {
    let nu = params.nu();
    let big_f = params.mass(kx * kx);
    let k = ky * ky;
    k * k * (nu * nu) + k * (1.0 - 2.0 * nu * big_f) + (kx * kx + big_f * big_f - omega * omega)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMode {
    pub ky: C64,
    /// `(eta, u, v)`.
    pub vec: Vec3,
    /// `Im ky > 0`.
    pub decaying: bool,
}

/// Eigenvector formula used for both decaying modes at a given `(kx, w)`.
/// Using one analytic formula for both roots keeps the divided difference of
/// the boundary columns regular when the roots coalesce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VecFormula {
    Section,
    /// Plain (unconjugated) cross product of two rows of `H - w`.
    Rows(usize, usize),
}

fn section_quality(params: &ModelParams, omega: f64, kx: f64, ky: C64) -> f64 {
    let k2 = ky * ky + kx * kx;
    let q = (-k2 * params.nu() + params.f()) / omega;
    let n = Vec3::new(
        k2 / omega,
        c(kx, 0.0) - C64::i() * ky * q,
        ky + C64::i() * q * kx,
    );
    let scale = k2.norm() / omega.abs() + kx.abs() * (1.0 + q.norm()) + ky.norm() * (1.0 + q.norm());
    let denom = (c(kx, 0.0) - C64::i() * ky).norm() / (1.0 + kx.abs() + ky.norm());
    (n.norm() / scale).min(1e3 * denom)
}

fn rows_vector(params: &ModelParams, omega: f64, kx: f64, ky: C64, r: (usize, usize)) -> (Vec3, f64) {
    let m = bulk_hamiltonian_complex(params, kx, ky) - Mat3::identity() * c(omega, 0.0);
    let a = m.row(r.0).transpose();
    let b = m.row(r.1).transpose();
    let v = Vec3::new(
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    );
    let q = v.norm() / (a.norm() * b.norm()).max(f64::MIN_POSITIVE);
    (v, q)
}

impl VecFormula {
    fn eval(self, params: &ModelParams, omega: f64, kx: f64, ky: C64) -> Result<Vec3> {
        match self {
            VecFormula::Section => section_inf(params, omega, kx, ky),
            VecFormula::Rows(i, j) => Ok(rows_vector(params, omega, kx, ky, (i, j)).0),
        }
    }

    fn choose(params: &ModelParams, omega: f64, kx: f64, kys: &[C64; 2]) -> VecFormula {
        let sq = kys
            .iter()
            .map(|&k| section_quality(params, omega, kx, k))
            .fold(f64::INFINITY, f64::min);
        if sq > 0.1 {
            return VecFormula::Section;
        }
        let mut best = (VecFormula::Section, sq);
        for r in [(0, 1), (0, 2), (1, 2)] {
            let q = kys
                .iter()
                .map(|&k| rows_vector(params, omega, kx, k, r).1)
                .fold(f64::INFINITY, f64::min);
            if q > best.1 {
                best = (VecFormula::Rows(r.0, r.1), q);
            }
        }
        best.0
    }
}

struct DecayingPair {
    kys: [C64; 2],
    formula: VecFormula,
}

fn decaying_pair(params: &ModelParams, kx: f64, omega: f64) -> Result<DecayingPair> {
    let roots = transverse_roots(params, kx, omega)?;
    let tol_im = 1e-12 * (1.0 + roots.iter().map(|r| r.norm()).fold(0.0, f64::max));
    let mut kys: Vec<C64> = roots.iter().copied().filter(|r| r.im > tol_im).collect();
    if kys.len() != 2 {
        return Err(Error::Multiplicity { found: kys.len() });
    }
    kys.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let kys = [kys[0], kys[1]];
    let formula = VecFormula::choose(params, omega, kx, &kys);
    Ok(DecayingPair { kys, formula })
}

/// The two modes with `Im ky > 0` at an in-gap frequency.
pub fn decaying_modes(params: &ModelParams, kx: f64, omega: f64) -> Result<[ComplexMode; 2]> {
    let pair = decaying_pair(params, kx, omega)?;
    let mk = |ky: C64| -> Result<ComplexMode> {
        Ok(ComplexMode {
            ky,
            vec: pair.formula.eval(params, omega, kx, ky)?,
            decaying: true,
        })
    };
    Ok([mk(pair.kys[0])?, mk(pair.kys[1])?])
}

/// Boundary rows `(v(0), p i kx u(0) + q i ky v(0))` of one mode.
pub fn boundary_column(point: &CylinderPoint, ky: C64, vec: &Vec3) -> [C64; 2] {
    let (p, q) = (point.bc().p(), point.bc().q());
    let kx = point.kx();
    [vec[2], C64::i() * (vec[1] * (p * kx) + ky * vec[2] * q)]
}

/// 2x2 boundary determinant of two modes (columns in the given order).
pub fn boundary_determinant_of(point: &CylinderPoint, modes: &[ComplexMode; 2]) -> C64 {
    let a = boundary_column(point, modes[0].ky, &modes[0].vec);
    let b = boundary_column(point, modes[1].ky, &modes[1].vec);
    a[0] * b[1] - a[1] * b[0]
}

/// Boundary determinant of the two decaying modes at `w`; zero exactly when
/// some decaying combination satisfies the boundary conditions.
pub fn boundary_determinant(params: &ModelParams, point: &CylinderPoint, omega: f64) -> Result<C64> {
    let modes = decaying_modes(params, point.kx(), omega)?;
    Ok(boundary_determinant_of(point, &modes))
}

/// Scale-free version of the boundary determinant.
///
/// With mode vectors `e1 = e(ky1)`, `e2 = e(ky2)` from one analytic formula
/// and boundary columns `c(e)` (second row divided by `1 + |kx| + max|ky|`),
/// returns `|det(c(e1), c(d))| / (|e1| |d_perp|)` for the divided difference
/// `d = (e2 - e1) / (ky2 - ky1)` and its component `d_perp` orthogonal to
/// `e1` (`|d|` on the Kelvin line `w = -kx`). The value vanishes exactly
/// on eigenvalues,
/// stays regular where the two roots coalesce, and is normalized by the mode
/// vectors rather than the boundary columns, which may vanish themselves.
pub fn normalized_boundary_determinant(params: &ModelParams, point: &CylinderPoint, omega: f64) -> Result<f64> {
    boundary_system(params, point, omega).map(|b| b.0)
}

/// Normalized determinant and the normalized norms of its two columns.
fn boundary_system(params: &ModelParams, point: &CylinderPoint, omega: f64) -> Result<(f64, f64, f64)> {
    let kx = point.kx();
    let pair = decaying_pair(params, kx, omega)?;
    let [k1, k2] = pair.kys;
    let s = 1.0 + kx.abs() + k1.norm().max(k2.norm());
    let (p, q) = (point.bc().p(), point.bc().q());
    let vec = |ky: C64| pair.formula.eval(params, omega, kx, ky);
    // Boundary rows are linear in e but also depend on ky through q i ky v.
    let col = |ky: C64, e: &Vec3, de: &Vec3, dky: C64| -> [C64; 2] {
        [de[2], C64::i() * (de[1] * (p * kx) + (ky * de[2] + dky * e[2]) * q) / s]
    };
    let e1 = vec(k1)?;
    let c1 = col(k1, &e1, &e1, c(0.0, 0.0));
    let dk = k2 - k1;
    let (d, cd) = if dk.norm() > 1e-6 * (1.0 + k1.norm()) {
        let e2 = vec(k2)?;
        let c2 = col(k2, &e2, &e2, c(0.0, 0.0));
        ((e2 - e1) / dk, [(c2[0] - c1[0]) / dk, (c2[1] - c1[1]) / dk])
    } else {
        let h = 1e-5 * (1.0 + k1.norm());
        let d = (vec(k1 + h)? - vec(k1 - h)?) / c(2.0 * h, 0.0);
        (d, col(k1, &e1, &d, c(1.0, 0.0)))
    };
    let det = c1[0] * cd[1] - c1[1] * cd[0];
    let (e1n, dn) = (e1.norm(), d.norm());
    if e1n * dn == 0.0 || !(e1n * dn).is_finite() {
        return Ok((0.0, 0.0, 0.0));
    }
    // Rescaling the mode vectors by lambda(ky) maps d to lambda2 d + beta e1,
    // so normalizing by the part of d orthogonal to e1 makes the value
    // independent of the vector formula. On the Kelvin line w = -kx both
    // decaying vectors are parallel and the plain norm is used instead.
    let d_perp = (d - e1 * (e1.dotc(&d) / (e1n * e1n))).norm();
    let on_kelvin = (omega + kx).abs() <= 1e-12 * (1.0 + kx.abs());
    let dd = if on_kelvin || d_perp == 0.0 { dn } else { d_perp };
    let norm2 = |v: [C64; 2]| Float::sqrt(v[0].norm_sqr() + v[1].norm_sqr());
    Ok((det.norm() / (e1n * dd), norm2(c1) / e1n, norm2(cd) / dd))
}

/// Multiplicity (1 or 2) of an eigenvalue `omega` found by the scan: two when
/// every decaying mode satisfies the boundary condition.
pub fn eigenvalue_multiplicity(params: &ModelParams, point: &CylinderPoint, omega: f64) -> usize {
    match boundary_system(params, point, omega) {
        Ok((_, n1, n2)) if n1.max(n2) < MULTIPLICITY_TOL => 2,
        _ => 1,
    }
}

fn det_nudged(params: &ModelParams, point: &CylinderPoint, omega: f64) -> Result<f64> {
    match normalized_boundary_determinant(params, point, omega) {
        Err(Error::DegenerateRoots { .. }) => {
            log::debug!("degenerate transverse roots at omega = {omega}, nudging");
            normalized_boundary_determinant(params, point, omega + 1e-9)
                .or_else(|_| normalized_boundary_determinant(params, point, omega - 1e-9))
        }
        r => r,
    }
}

fn golden_min<F: FnMut(f64) -> f64>(mut a: f64, mut b: f64, tol: f64, mut g: F) -> f64 {
    let r = 0.5 * (Float::sqrt(5.0) - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    while b - a > tol {
        if g1 < g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = g(x2);
        }
    }
    0.5 * (a + b)
}

/// Allowed frequency sets inside the two gaps at `kx`, with margins.
fn gap_windows(params: &ModelParams, kx: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let m = params.gap_margin();
    let edge = essential_gap_edge(params, kx);
    let mut out = Vec::new();
    for (a, b) in [(-edge + m, -m), (m, edge - m)] {
        let (a, b) = (a.max(lo), b.min(hi));
        if b > a {
            out.push((a, b));
        }
    }
    out
}

/// Discrete eigenvalues of `H#(kx, a)` in `[lo, hi]`, intersected with the
/// gaps `(-edge, 0)` and `(0, edge)` shrunk by the gap margin.
pub fn edge_eigenvalues(params: &ModelParams, point: &CylinderPoint, window: (f64, f64)) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lo, hi) in gap_windows(params, point.kx(), window.0, window.1) {
        out.extend(scan_window(params, point, lo, hi)?);
    }
    Ok(out)
}

/// Uniform grid on `[lo, hi]` merged with a geometric grid in `|w|`, which
/// resolves branches that approach the flat band in proportion to `kx`.
fn scan_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    let mut ws: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let (near, far, sign) = if lo >= 0.0 { (lo, hi, 1.0) } else { (-hi, -lo, -1.0) };
    if near > 0.0 {
        let ratio = 1.0 + 20.0 / n as f64;
        let mut g = near * ratio;
        while g < far && g - near < 0.1 * (far - near) {
            ws.push(sign * g);
            g *= ratio;
        }
    }
    ws.sort_by(f64::total_cmp);
    ws.dedup();
    ws
}

fn scan_window(params: &ModelParams, point: &CylinderPoint, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let mut n = SCAN_POINTS;
    for attempt in 0..=3 {
        let ws = scan_grid(lo, hi, n);
        let len = ws.len();
        let ds: Vec<f64> = ws
            .iter()
            .map(|&w| det_nudged(params, point, w))
            .collect::<Result<_>>()?;
        let mut minima = Vec::new();
        for i in 1..len - 1 {
            if ds[i] < ds[i - 1] && ds[i] <= ds[i + 1] {
                minima.push(i);
            }
        }
        let crowded = minima.windows(2).any(|w| w[1] - w[0] < 4);
        if crowded && attempt < 3 {
            n *= 2;
            continue;
        }
        let kelvin = -point.kx();
        let mut found: Vec<f64> = Vec::new();
        for i in minima {
            let (a, b) = (ws[i - 1], ws[i + 1]);
            let g = |w: f64| det_nudged(params, point, w).unwrap_or(f64::INFINITY);
            let w = golden_min(a, b, 1e-10 * (1.0 + hi.abs()), g);
            let w = if (w - kelvin).abs() < 1e-8 { kelvin } else { w };
            if g(w) < DET_TOL && w >= lo && w <= hi
                && found.last().map_or(true, |&l| (w - l).abs() > 1e-8) {
                    for _ in 0..eigenvalue_multiplicity(params, point, w) {
                        found.push(w);
                    }
                }
        }
        if kelvin >= lo && kelvin <= hi && !found.iter().any(|&w| (w - kelvin).abs() < 1e-8)
            && det_nudged(params, point, kelvin)? < DET_TOL {
                let at = found.partition_point(|&w| w < kelvin);
                for _ in 0..eigenvalue_multiplicity(params, point, kelvin) {
                    found.insert(at, kelvin);
                }
            }
        return Ok(found);
    }
    unreachable!()
}

/// Discrete eigenvalues in the upper gap `(0, edge)`.
pub fn upper_gap_eigenvalues(params: &ModelParams, point: &CylinderPoint) -> Result<Vec<f64>> {
    edge_eigenvalues(params, point, (0.0, f64::INFINITY))
}

/// Discrete eigenvalues in the lower gap `(-edge, 0)`.
pub fn lower_gap_eigenvalues(params: &ModelParams, point: &CylinderPoint) -> Result<Vec<f64>> {
    edge_eigenvalues(params, point, (f64::NEG_INFINITY, 0.0))
}

/// Gap edge and the discrete eigenvalues in both gaps at one loop parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSample {
    pub loop_param: f64,
    pub gap_edge: f64,
    pub eigenvalues_upper: Vec<f64>,
    pub eigenvalues_lower: Vec<f64>,
}

pub fn spectrum_sample(params: &ModelParams, point: &CylinderPoint, loop_param: f64) -> Result<SpectrumSample> {
    Ok(SpectrumSample {
        loop_param,
        gap_edge: essential_gap_edge(params, point.kx()),
        eigenvalues_upper: upper_gap_eigenvalues(params, point)?,
        eigenvalues_lower: lower_gap_eigenvalues(params, point)?,
    })
}

/// Bound state `-a^2` of `-d^2/dx^2` with `psi'(0) + a psi(0) = 0`, present for `a > 0`.
pub fn robin_laplacian_bound_state(a: f64) -> Option<f64> {
    if a > 0.0 {
        Some(-a * a)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::BoundaryParam;
    use crate::model::bulk_hamiltonian;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn gap_edge_values() {
        assert_eq!(essential_gap_edge(&p(), 0.0), 1.0);
        assert!((essential_gap_edge(&p(), 1.0) - Float::sqrt(1.64)).abs() < 1e-15);
        assert_eq!(essential_gap_edge(&p(), 0.7), essential_gap_edge(&p(), -0.7));
    }

    #[test]
    fn roots_at_gap_center() {
        let r = transverse_roots(&p(), 0.0, 0.5).unwrap();
        for ky in r {
            assert!(ky.re.abs() < 1e-14, "{ky}");
            assert!(dispersion_residual(&p(), 0.0, 0.5, ky).norm() < 1e-10);
        }
        assert_eq!(r.iter().filter(|k| k.im > 0.0).count(), 2);
    }

    #[test]
    fn on_band_roots_contain_real_pair() {
        let kappa = 0.8;
        let w = crate::model::omega_plus(&p(), 0.3, kappa);
        let r = transverse_roots(&p(), 0.3, w).unwrap();
        assert!(r.iter().any(|k| (k - c(kappa, 0.0)).norm() < 1e-10));
        assert!(r.iter().any(|k| (k + c(kappa, 0.0)).norm() < 1e-10));
    }

    #[test]
    fn decaying_modes_are_eigenvectors() {
        for (kx, w) in [(0.0, 0.5), (-0.8, 0.3), (1.5, 1.2), (-2.0, 0.9), (0.4, -0.6)] {
            let modes = decaying_modes(&p(), kx, w).unwrap();
            for m in modes {
                assert!(m.ky.im > 0.0);
                let h = bulk_hamiltonian_complex(&p(), kx, m.ky);
                let r = h * m.vec - m.vec * c(w, 0.0);
                assert!(r.norm() <= 1e-9 * m.vec.norm(), "{kx} {w}: {}", r.norm());
            }
        }
    }

    #[test]
    fn determinant_column_scaling() {
        let pt = CylinderPoint::from_kx_a(0.5, -0.7).unwrap();
        let mut modes = decaying_modes(&p(), 0.5, 0.6).unwrap();
        let d0 = boundary_determinant_of(&pt, &modes);
        let s = c(0.3, -2.0);
        modes[1].vec *= s;
        let d1 = boundary_determinant_of(&pt, &modes);
        assert!((d1 - d0 * s).norm() < 1e-12 * d1.norm());
    }

    #[test]
    fn kelvin_wave_for_negative_kx() {
        // v = 0, w = -kx solves the boundary problem for every a.
        for a in [-2.0, 0.0, 0.7] {
            let pt = CylinderPoint::from_kx_a(-0.6, a).unwrap();
            let ev = upper_gap_eigenvalues(&p(), &pt).unwrap();
            assert!(ev.iter().any(|&w| (w - 0.6).abs() < 1e-8), "a = {a}: {ev:?}");
        }
        let pt = CylinderPoint::new(-0.6, BoundaryParam::infinity()).unwrap();
        let ev = upper_gap_eigenvalues(&p(), &pt).unwrap();
        let hits = ev.iter().filter(|&&w| (w - 0.6).abs() < 1e-8).count();
        assert_eq!(hits, 2, "double at a = inf: {ev:?}");
        let pt = CylinderPoint::from_kx_a(-0.6, 0.7).unwrap();
        assert_eq!(eigenvalue_multiplicity(&p(), &pt, 0.6), 1);
    }

    #[test]
    fn spectrum_reflects_under_kx_sign() {
        for (kx, a) in [(0.7, 0.4), (1.3, -1.0), (0.2, 3.0)] {
            let s1 = edge_eigenvalues(&p(), &CylinderPoint::from_kx_a(kx, a).unwrap(), (-10.0, 10.0)).unwrap();
            let s2 = edge_eigenvalues(&p(), &CylinderPoint::from_kx_a(-kx, a).unwrap(), (-10.0, 10.0)).unwrap();
            let mut m: Vec<f64> = s2.iter().map(|w| -w).collect();
            m.sort_by(f64::total_cmp);
            assert_eq!(s1.len(), m.len(), "{s1:?} {s2:?}");
            for (x, y) in s1.iter().zip(&m) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn robin_reference() {
        assert_eq!(robin_laplacian_bound_state(1.0), Some(-1.0));
        assert_eq!(robin_laplacian_bound_state(0.5), Some(-0.25));
        assert_eq!(robin_laplacian_bound_state(-1.0), None);
    }

    #[test]
    fn real_momentum_hamiltonian_matches() {
        let a = bulk_hamiltonian_complex(&p(), 0.3, c(-0.8, 0.0));
        assert!((a - bulk_hamiltonian(&p(), 0.3, -0.8)).norm() < 1e-15);
    }
}

//! Bulk momentum-space model: the 3x3 Hamiltonian, its bands, eigenvector
//! sections, Chern numbers and the boundary-condition classifying map.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

use num_traits::Float;

use crate::cylinder::CylinderPoint;
use crate::error::{config, Error, Result};
use crate::linalg::{c, ci, eigh3, Mat3, Vec3};
use crate::C64;

/// Coriolis parameter `f` and odd viscosity `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    f: f64,
    nu: f64,
}

impl ModelParams {
    pub fn new(f: f64, nu: f64) -> Result<Self> {
        if !(f.is_finite() && f > 0.0) {
            return config(format!("f must be positive, got {f}"));
        }
        if !(nu.is_finite() && nu > 0.0) {
            return config(format!("nu must be positive, got {nu}"));
        }
        if !(1.0 - 4.0 * f * nu > 0.0) {
            return config(format!("1 - 4 f nu must be positive, got f nu = {}", f * nu));
        }
        Ok(ModelParams { f, nu })
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// `f - nu k^2`.
    pub fn mass(&self, k2: f64) -> f64 {
        self.f - self.nu * k2
    }

    /// Eigenvalues closer than this to 0 or a band edge are not reported.
    pub fn gap_margin(&self) -> f64 {
        1e-3 * self.f
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { f: 1.0, nu: 0.2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    FinitePlane,
    /// Inverted coordinates `(kx / k^2, -ky / k^2)`; the origin is `k = inf`.
    InfinityChart,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkMomentum {
    pub kx: f64,
    pub ky: f64,
    pub chart: Chart,
}

impl BulkMomentum {
    pub fn finite(kx: f64, ky: f64) -> Self {
        BulkMomentum { kx, ky, chart: Chart::FinitePlane }
    }

    /// Point given by inverted coordinates `(a, b) = (kx / k^2, -ky / k^2)`.
    pub fn infinity_chart(a: f64, b: f64) -> Self {
        BulkMomentum { kx: a, ky: b, chart: Chart::InfinityChart }
    }

    /// Finite-plane coordinates, `None` for the point at infinity.
    pub fn finite_coords(&self) -> Option<(f64, f64)> {
        match self.chart {
            Chart::FinitePlane => Some((self.kx, self.ky)),
            Chart::InfinityChart => {
                let r2 = self.kx * self.kx + self.ky * self.ky;
                if r2 == 0.0 {
                    None
                } else {
                    Some((self.kx / r2, -self.ky / r2))
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BandIndex {
    Minus,
    Zero,
    Plus,
}

impl BandIndex {
    pub const ALL: [BandIndex; 3] = [BandIndex::Minus, BandIndex::Zero, BandIndex::Plus];

    /// Position in the ascending eigenvalue order.
    pub fn index(self) -> usize {
        match self {
            BandIndex::Minus => 0,
            BandIndex::Zero => 1,
            BandIndex::Plus => 2,
        }
    }
}

/// `H(k)` with rows `(0, kx, ky)`, `(kx, 0, -i m)`, `(ky, i m, 0)`, `m = f - nu k^2`.
pub fn bulk_hamiltonian(params: &ModelParams, kx: f64, ky: f64) -> Mat3 {
    let m = params.mass(kx * kx + ky * ky);
    let z = C64::new(0.0, 0.0);
    Mat3::new(
        z,
        c(kx, 0.0),
        c(ky, 0.0),
        c(kx, 0.0),
        z,
        ci(-m),
        c(ky, 0.0),
        ci(m),
        z,
    )
}

/// `H(kx, ky)` continued to complex `ky` (`k^2 = kx^2 + ky^2`, no conjugation).
pub fn bulk_hamiltonian_complex(params: &ModelParams, kx: f64, ky: C64) -> Mat3 {
    let k2 = ky * ky + kx * kx;
    let m = -k2 * params.nu + params.f;
    let z = C64::new(0.0, 0.0);
    let im = C64::i() * m;
    Mat3::new(z, c(kx, 0.0), ky, c(kx, 0.0), z, -im, ky, im, z)
}

/// `H` in the chart of `k`: `H(k)` on the finite plane, `H(k) / k^2` (regular
/// at `k = inf`) in the infinity chart. Both have the same eigenvectors.
pub fn chart_hamiltonian(params: &ModelParams, k: &BulkMomentum) -> Mat3 {
    match k.chart {
        Chart::FinitePlane => bulk_hamiltonian(params, k.kx, k.ky),
        Chart::InfinityChart => {
            let (a, b) = (k.kx, k.ky);
            let m = params.f * (a * a + b * b) - params.nu;
            let z = C64::new(0.0, 0.0);
            Mat3::new(
                z,
                c(a, 0.0),
                c(-b, 0.0),
                c(a, 0.0),
                z,
                ci(-m),
                c(-b, 0.0),
                ci(m),
                z,
            )
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bands {
    pub minus: f64,
    pub zero: f64,
    pub plus: f64,
}

/// `omega_+ = sqrt(k^2 + (f - nu k^2)^2)`.
pub fn omega_plus(params: &ModelParams, kx: f64, ky: f64) -> f64 {
    let k2 = kx * kx + ky * ky;
    Float::sqrt(k2 + params.mass(k2).powi(2))
}

/// Band triple; `(-inf, 0, inf)` at `k = inf`.
pub fn bulk_bands(params: &ModelParams, k: &BulkMomentum) -> Bands {
    match k.finite_coords() {
        Some((kx, ky)) => {
            let w = omega_plus(params, kx, ky);
            Bands { minus: -w, zero: 0.0, plus: w }
        }
        None => Bands { minus: f64::NEG_INFINITY, zero: 0.0, plus: f64::INFINITY },
    }
}

/// Section `psi^inf = N / (kx - i ky)` with
/// `N = (k^2 / w, kx - i ky q, ky + i kx q)`, `q = (f - nu k^2) / w`.
///
/// `ky` may be complex: `k^2 = kx^2 + ky^2` is the analytic square (no
/// conjugation). The result is an eigenvector of `H(kx, ky)` with eigenvalue
/// `omega` whenever `omega^2 = k^2 + (f - nu k^2)^2`.
pub fn section_inf(params: &ModelParams, omega: f64, kx: f64, ky: C64) -> Result<Vec3> {
    if omega == 0.0 {
        return Err(Error::DivisionByZero);
    }
    let denom = c(kx, 0.0) - C64::i() * ky;
    if denom.norm() <= 1e-14 * (1.0 + kx.abs() + ky.norm()) {
        return Err(Error::SingularSection);
    }
    let k2 = ky * ky + kx * kx;
    let q = (-k2 * params.nu + params.f) / omega;
    let n = Vec3::new(
        k2 / omega,
        c(kx, 0.0) - C64::i() * ky * q,
        ky + C64::i() * q * kx,
    );
    Ok(n / denom)
}

/// `psi^zeta = t psi^inf`, `t = (conj(z) - conj(zeta)) / (z - zeta)`, `z = kx + i ky`.
/// Defined for real momenta only.
pub fn section_zeta(params: &ModelParams, omega: f64, kx: f64, ky: f64, zeta: C64) -> Result<Vec3> {
    let z = c(kx, ky);
    let d = z - zeta;
    if d.norm() <= 1e-14 * (1.0 + z.norm()) {
        return Err(Error::SingularSection);
    }
    let t = (z.conj() - zeta.conj()) / d;
    Ok(section_inf(params, omega, kx, c(ky, 0.0))? * t)
}

/// Chern number of one band by plaquette Berry-flux summation.
///
/// The sphere is covered by two polar disks glued along `|k| = sqrt(f / nu)`:
/// the finite plane, and the inverted coordinates with reversed angle so the
/// two disks share their boundary vertices. Radii are `R sqrt(i / n)` (equal
/// area); the flux through each cell is the argument of the product of the
/// normalized overlaps around it, which makes the total an exact integer.
pub fn chern_number(params: &ModelParams, band: BandIndex, grid_n: usize) -> Result<i32> {
    if grid_n < 24 {
        return config(format!("chern grid must have at least 24 points, got {grid_n}"));
    }
    let n = grid_n;
    let rho = Float::sqrt(params.f / params.nu);
    let b = band.index();
    let eigvec = |chart: Chart, r: f64, t: f64| -> Result<Vec3> {
        let (s, co) = Float::sin_cos(t);
        let k = match chart {
            Chart::FinitePlane => BulkMomentum::finite(r * co, r * s),
            Chart::InfinityChart => BulkMomentum::infinity_chart(r * co, -r * s),
        };
        let (vals, vecs) = eigh3(&chart_hamiltonian(params, &k));
        let sep = match b {
            0 => vals[1] - vals[0],
            1 => (vals[1] - vals[0]).min(vals[2] - vals[1]),
            _ => vals[2] - vals[1],
        };
        if sep < 1e-9 {
            return Err(Error::GapClosure { separation: sep });
        }
        Ok(vecs.column(b).into_owned())
    };
    let link = |u: &Vec3, v: &Vec3| -> C64 {
        let z = u.dotc(v);
        z / z.norm()
    };
    let angles: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
    let mut total = 0.0;
    for (chart, radius, sign) in [
        (Chart::FinitePlane, rho, 1.0),
        (Chart::InfinityChart, 1.0 / rho, -1.0),
    ] {
        let center = eigvec(chart, 0.0, 0.0)?;
        let ring = |i: usize| -> Result<Vec<Vec3>> {
            let r = radius * Float::sqrt(i as f64 / n as f64);
            angles.iter().map(|&t| eigvec(chart, r, t)).collect()
        };
        let mut inner = ring(1)?;
        let mut flux = 0.0;
        for j in 0..n {
            let j2 = (j + 1) % n;
            let w = link(&center, &inner[j]) * link(&inner[j], &inner[j2]) * link(&inner[j2], &center);
            flux += w.arg();
        }
        for i in 1..n {
            let outer = ring(i + 1)?;
            for j in 0..n {
                let j2 = (j + 1) % n;
                let w = link(&inner[j], &outer[j])
                    * link(&outer[j], &outer[j2])
                    * link(&outer[j2], &inner[j2])
                    * link(&inner[j2], &inner[j]);
                flux += w.arg();
            }
            inner = outer;
        }
        total += sign * flux;
    }
    let value = total / (2.0 * PI);
    let rounded = Float::round(value);
    debug_assert!((value - rounded).abs() < 1e-6, "non-integer lattice flux {value}");
    Ok(rounded as i32)
}

/// `beta(kx, a) = (a + i sqrt2 kx) / (a - i sqrt2 kx)`, evaluated projectively
/// as `(q + i sqrt2 kx p) / (q - i sqrt2 kx p)`, so `a = inf` gives 1.
pub fn beta_map(point: &CylinderPoint) -> C64 {
    let (p, q) = (point.bc().p(), point.bc().q());
    let s = SQRT_2 * point.kx() * p;
    if q == 0.0 {
        // kx != 0 on the cylinder, so this is the a = 0 value.
        return c(-1.0, 0.0);
    }
    c(q, s) / c(q, -s)
}

/// The deficiency basis functions `psi_{1,+-}`, `psi_{2,+-}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Deficiency {
    OnePlus,
    OneMinus,
    TwoPlus,
    TwoMinus,
}

impl Deficiency {
    pub const ALL: [Deficiency; 4] = [
        Deficiency::OnePlus,
        Deficiency::OneMinus,
        Deficiency::TwoPlus,
        Deficiency::TwoMinus,
    ];

    /// `+1` for the `+i / 2 nu` eigenfunctions, `-1` for `-i / 2 nu`.
    pub fn sign(self) -> f64 {
        match self {
            Deficiency::OnePlus | Deficiency::TwoPlus => 1.0,
            _ => -1.0,
        }
    }
}

/// Closed form `(eta, u, v)` at `y`, with `y~ = y / 2 nu`:
/// `psi_1 = (sqrt2 y~ - 1, sqrt2 - y~, +-y~) e^{-sqrt2 y~}`,
/// `psi_2 = (sqrt2 y~ + 1, -y~, +-(y~ + sqrt2)) e^{-sqrt2 y~}`.
pub fn deficiency_vector(nu: f64, which: Deficiency, y: f64) -> [f64; 3] {
    let t = y / (2.0 * nu);
    let e = Float::exp(-SQRT_2 * t);
    let s = which.sign();
    match which {
        Deficiency::OnePlus | Deficiency::OneMinus => {
            [(SQRT_2 * t - 1.0) * e, (SQRT_2 - t) * e, s * t * e]
        }
        Deficiency::TwoPlus | Deficiency::TwoMinus => {
            [(SQRT_2 * t + 1.0) * e, -t * e, s * (t + SQRT_2) * e]
        }
    }
}

const D1: [f64; 9] = [
    1.0 / 280.0,
    -4.0 / 105.0,
    1.0 / 5.0,
    -4.0 / 5.0,
    0.0,
    4.0 / 5.0,
    -1.0 / 5.0,
    4.0 / 105.0,
    -1.0 / 280.0,
];
const D2: [f64; 9] = [
    -1.0 / 560.0,
    8.0 / 315.0,
    -1.0 / 5.0,
    8.0 / 5.0,
    -205.0 / 72.0,
    8.0 / 5.0,
    -1.0 / 5.0,
    8.0 / 315.0,
    -1.0 / 560.0,
];

/// Relative discrete L2 residual `|H0 psi -+ (i / 2 nu) psi| / |psi|` on the
/// uniform grid `0, h, ..., y_max`, with
/// `H0 = [[0, 0, -i d], [0, 0, -i nu d^2], [-i d, i nu d^2, 0]]` applied by
/// eighth-order central differences at interior nodes.
pub fn deficiency_residual(params: &ModelParams, which: Deficiency, y_max: f64, h: f64) -> Result<f64> {
    let nu = params.nu;
    if !(y_max >= 20.0 * nu) {
        return config(format!("deficiency grid must reach 20 nu = {}", 20.0 * nu));
    }
    if !(h > 0.0 && h <= 1e-3 * y_max) {
        return config("deficiency grid spacing must satisfy 0 < h <= 1e-3 Y");
    }
    let n = Float::floor(y_max / h) as usize;
    let vals: Vec<[f64; 3]> = (0..=n).map(|j| deficiency_vector(nu, which, j as f64 * h)).collect();
    let lam = which.sign() / (2.0 * nu);
    let (mut num, mut den) = (0.0, 0.0);
    for j in 4..=n.saturating_sub(4) {
        let (mut dv, mut d2u, mut d2v, mut deta) = (0.0, 0.0, 0.0, 0.0);
        for s in 0..9 {
            let v = &vals[j + s - 4];
            deta += D1[s] * v[0];
            dv += D1[s] * v[2];
            d2u += D2[s] * v[1];
            d2v += D2[s] * v[2];
        }
        let (deta, dv, d2u, d2v) = (deta / h, dv / h, d2u / (h * h), d2v / (h * h));
        // All entries of H0 are imaginary, so the residual is i times a real vector.
        let psi = &vals[j];
        let r = [
            -dv - lam * psi[0],
            -nu * d2v - lam * psi[1],
            -deta + nu * d2u - lam * psi[2],
        ];
        num += r.iter().map(|x| x * x).sum::<f64>();
        den += psi.iter().map(|x| x * x).sum::<f64>();
    }
    Ok(Float::sqrt(num / den))
}

/// `4 nu^4 l^4 - 4 nu^2 l^2 + 1 = (2 nu^2 l^2 - 1)^2`.
pub fn characteristic_quartic(nu: f64, lambda: f64) -> f64 {
    let t = nu * nu * lambda * lambda;
    4.0 * t * t - 4.0 * t + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::BoundaryParam;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.0, 0.2).is_ok());
        assert!(ModelParams::new(-1.0, 0.2).is_err());
        assert!(ModelParams::new(1.0, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.26).is_err());
        assert!(ModelParams::new(1.0, 0.3).is_err());
        assert!(ModelParams::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn hamiltonian_at_origin() {
        let h = bulk_hamiltonian(&p(), 0.0, 0.0);
        let (vals, _) = eigh3(&h);
        assert!((vals[0] + 1.0).abs() < 1e-14 && vals[1].abs() < 1e-14 && (vals[2] - 1.0).abs() < 1e-14);
        assert_eq!(h[(1, 2)], ci(-1.0));
        assert_eq!(h[(2, 1)], ci(1.0));
    }

    #[test]
    fn bands_at_unit_kx() {
        let b = bulk_bands(&p(), &BulkMomentum::finite(1.0, 0.0));
        assert!((b.plus - Float::sqrt(1.64)).abs() < 1e-14);
        assert!((b.minus + Float::sqrt(1.64)).abs() < 1e-14);
        assert_eq!(b.zero, 0.0);
        let inf = bulk_bands(&p(), &BulkMomentum::infinity_chart(0.0, 0.0));
        assert!(inf.plus.is_infinite() && inf.minus.is_infinite());
    }

    #[test]
    fn infinity_chart_agrees_with_plane() {
        let k = BulkMomentum::infinity_chart(0.3, -0.4);
        let (kx, ky) = k.finite_coords().unwrap();
        let k2 = kx * kx + ky * ky;
        let lhs = chart_hamiltonian(&p(), &k) * c(k2, 0.0);
        assert!((lhs - bulk_hamiltonian(&p(), kx, ky)).norm() < 1e-12);
    }

    #[test]
    fn section_inf_errors() {
        assert_eq!(section_inf(&p(), 0.0, 1.0, c(0.0, 0.0)), Err(Error::DivisionByZero));
        assert_eq!(section_inf(&p(), 1.0, 0.0, c(0.0, 0.0)), Err(Error::SingularSection));
        // kx - i ky = 0 for ky = -i kx.
        assert_eq!(section_inf(&p(), 1.0, 0.5, c(0.0, -0.5)), Err(Error::SingularSection));
    }

    #[test]
    fn section_at_unit_kx() {
        let w = omega_plus(&p(), 1.0, 0.0);
        let psi = section_inf(&p(), w, 1.0, c(0.0, 0.0)).unwrap();
        let r = bulk_hamiltonian(&p(), 1.0, 0.0) * psi - psi * c(w, 0.0);
        assert!(r.norm() < 1e-12);
        assert!((psi.norm_squared() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zeta_section_unit_factor() {
        let w = omega_plus(&p(), 1.0, 0.0);
        let a = section_inf(&p(), w, 1.0, c(0.0, 0.0)).unwrap();
        let b = section_zeta(&p(), w, 1.0, 0.0, C64::i()).unwrap();
        assert!((a.norm() - b.norm()).abs() < 1e-14);
        assert_eq!(section_zeta(&p(), 1.0, 0.0, 1.0, C64::i()), Err(Error::SingularSection));
    }

    #[test]
    fn chern_numbers() {
        for (band, want) in [(BandIndex::Minus, -2), (BandIndex::Zero, 0), (BandIndex::Plus, 2)] {
            assert_eq!(chern_number(&p(), band, 30).unwrap(), want);
        }
        assert!(chern_number(&p(), BandIndex::Plus, 10).is_err());
    }

    #[test]
    fn beta_examples() {
        let b = beta_map(&CylinderPoint::from_kx_a(0.0, 1.0).unwrap());
        assert!((b - c(1.0, 0.0)).norm() < 1e-15);
        let b = beta_map(&CylinderPoint::from_kx_a(1.0, 0.0).unwrap());
        assert!((b - c(-1.0, 0.0)).norm() < 1e-15);
        let b = beta_map(&CylinderPoint::new(2.0, BoundaryParam::infinity()).unwrap());
        assert!((b - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn deficiency_boundary_values() {
        let v0 = deficiency_vector(0.2, Deficiency::OnePlus, 0.0);
        assert_eq!(v0[2], 0.0);
        let h = 1e-6;
        let dv = deficiency_vector(0.2, Deficiency::OnePlus, h)[2] / h;
        assert!((dv - 1.0 / 0.4).abs() < 1e-4);
    }

    #[test]
    fn deficiency_residuals_small() {
        for which in Deficiency::ALL {
            let r = deficiency_residual(&p(), which, 10.0, 1e-3).unwrap();
            assert!(r < 1e-6, "{which:?}: {r}");
        }
        assert!(deficiency_residual(&p(), Deficiency::OnePlus, 1.0, 1e-3).is_err());
    }

    #[test]
    fn quartic_root() {
        let nu = 0.2;
        assert!(characteristic_quartic(nu, 1.0 / (SQRT_2 * nu)).abs() < 1e-14);
        assert!(characteristic_quartic(nu, 1.0) > 0.0);
    }
}

//! Small dense and banded Hermitian linear algebra.
//!
//! Eigenvalue counts below a shift are computed from inertia (Sylvester's law)
//! of a block LDL^H factorization, which turns bisection into an exact,
//! deterministic eigenvalue locator for large banded matrices.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix3, Vector3};
use num_traits::Float;

use crate::C64;

pub type Mat3 = Matrix3<C64>;
pub type Vec3 = Vector3<C64>;

/// Pivot growth beyond which the count is redone in the opposite order.
const GROWTH_LIMIT: f64 = 100.0;

const I: C64 = C64 { re: 0.0, im: 1.0 };

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) fn ci(im: f64) -> C64 {
    I * im
}

/// Sorted eigenvalues and matching orthonormal eigenvectors (as columns).
pub fn eigh3(m: &Mat3) -> ([f64; 3], Mat3) {
    let eig = m.symmetric_eigen();
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = [
        eig.eigenvalues[idx[0]],
        eig.eigenvalues[idx[1]],
        eig.eigenvalues[idx[2]],
    ];
    let vecs = Mat3::from_columns(&[
        eig.eigenvectors.column(idx[0]).into_owned(),
        eig.eigenvectors.column(idx[1]).into_owned(),
        eig.eigenvectors.column(idx[2]).into_owned(),
    ]);
    (vals, vecs)
}

/// Closed-form (trigonometric) eigenvalues of a Hermitian 3x3 matrix, ascending.
/// Only the upper triangle and the real part of the diagonal are read.
pub fn eigvals_herm3(m: &Mat3) -> [f64; 3] {
    let a00 = m[(0, 0)].re;
    let a11 = m[(1, 1)].re;
    let a22 = m[(2, 2)].re;
    let a01 = m[(0, 1)];
    let a02 = m[(0, 2)];
    let a12 = m[(1, 2)];
    let p1 = a01.norm_sqr() + a02.norm_sqr() + a12.norm_sqr();
    let q = (a00 + a11 + a22) / 3.0;
    let (b00, b11, b22) = (a00 - q, a11 - q, a22 - q);
    let p2 = b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * p1;
    if p2 == 0.0 {
        return [q, q, q];
    }
    let p = Float::sqrt(p2 / 6.0);
    // det(A - qI) for a Hermitian matrix is real.
    let det = b00 * b11 * b22 + 2.0 * (a01 * a12 * a02.conj()).re
        - b00 * a12.norm_sqr()
        - b11 * a02.norm_sqr()
        - b22 * a01.norm_sqr();
    let r = (det / (2.0 * p * p * p)).clamp(-1.0, 1.0);
    let phi = Float::acos(r) / 3.0;
    let third = 2.0 * core::f64::consts::PI / 3.0;
    let hi = q + 2.0 * p * Float::cos(phi);
    let lo = q + 2.0 * p * Float::cos(phi + third);
    let mid = 3.0 * q - hi - lo;
    [lo, mid.clamp(lo, hi), hi]
}

/// Inverse via the adjugate; `None` when the determinant is not finite and nonzero.
pub fn inv3(m: &Mat3) -> Option<Mat3> {
    let cof = |r0: usize, r1: usize, c0: usize, c1: usize| {
        m[(r0, c0)] * m[(r1, c1)] - m[(r0, c1)] * m[(r1, c0)]
    };
    let adj = Mat3::new(
        cof(1, 2, 1, 2),
        -cof(0, 2, 1, 2),
        cof(0, 1, 1, 2),
        -cof(1, 2, 0, 2),
        cof(0, 2, 0, 2),
        -cof(0, 1, 0, 2),
        cof(1, 2, 0, 1),
        -cof(0, 2, 0, 1),
        cof(0, 1, 0, 1),
    );
    let det = m[(0, 0)] * adj[(0, 0)] + m[(0, 1)] * adj[(1, 0)] + m[(0, 2)] * adj[(2, 0)];
    if det.norm() == 0.0 || !det.re.is_finite() || !det.im.is_finite() {
        return None;
    }
    Some(adj / det)
}

/// Hermitian part `(m + m^H) / 2`.
pub fn hermitian_part(m: &Mat3) -> Mat3 {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Anything whose eigenvalue count below a real shift can be evaluated.
pub trait SpectralCount {
    fn dim(&self) -> usize;

    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize;

    /// Eigenvalues in `[lo, hi)`, ascending, each located to within `tol`.
    /// Clusters narrower than `tol` are reported with multiplicity.
    fn eigenvalues_in(&self, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if !(hi > lo) {
            return out;
        }
        let clo = self.count_below(lo);
        let chi = self.count_below(hi);
        bisect(self, lo, hi, clo, chi, tol, &mut out);
        out
    }
}

fn bisect<S: SpectralCount + ?Sized>(
    op: &S,
    lo: f64,
    hi: f64,
    clo: usize,
    chi: usize,
    tol: f64,
    out: &mut Vec<f64>,
) {
    if chi <= clo {
        return;
    }
    let mid = 0.5 * (lo + hi);
    if hi - lo <= tol || mid <= lo || mid >= hi {
        out.extend(core::iter::repeat(mid).take(chi - clo));
        return;
    }
    let cmid = op.count_below(mid);
    bisect(op, lo, mid, clo, cmid.clamp(clo, chi), tol, out);
    bisect(op, mid, hi, cmid.clamp(clo, chi), chi, tol, out);
}

/// Dense Hermitian matrix with its spectrum computed once up front.
#[derive(Debug, Clone)]
pub struct DenseHermitian {
    matrix: DMatrix<C64>,
    eigenvalues: Vec<f64>,
}

impl DenseHermitian {
    /// Uses the Hermitian part of `matrix`.
    pub fn new(matrix: DMatrix<C64>) -> Self {
        let matrix = (&matrix + matrix.adjoint()) * c(0.5, 0.0);
        let mut eigenvalues: Vec<f64> = matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigenvalues.sort_by(f64::total_cmp);
        DenseHermitian {
            matrix,
            eigenvalues,
        }
    }

    pub fn from_real_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(d[i], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

impl SpectralCount for DenseHermitian {
    fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn count_below(&self, x: f64) -> usize {
        self.eigenvalues.partition_point(|&e| e < x)
    }

    fn eigenvalues_in(&self, lo: f64, hi: f64, _tol: f64) -> Vec<f64> {
        self.eigenvalues
            .iter()
            .copied()
            .filter(|&e| e >= lo && e < hi)
            .collect()
    }
}

/// Hermitian block-tridiagonal matrix with 3x3 blocks.
///
/// Components flagged inactive are excluded from the operator: their rows and
/// columns must be zero and they are skipped by `dim`, `to_dense` and the
/// inertia count.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    diag: Vec<Mat3>,
    upper: Vec<Mat3>,
    active: Vec<[bool; 3]>,
}

impl BlockTridiagonal {
    /// `diag[j]` must be Hermitian (its Hermitian part is stored), `upper[j]`
    /// couples block `j` to block `j + 1`.
    pub fn new(diag: Vec<Mat3>, upper: Vec<Mat3>, active: Vec<[bool; 3]>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(upper.len() + 1, diag.len());
        assert_eq!(active.len(), diag.len());
        let mut diag: Vec<Mat3> = diag.iter().map(hermitian_part).collect();
        let mut upper = upper;
        for (j, act) in active.iter().enumerate() {
            for k in 0..3 {
                if act[k] {
                    continue;
                }
                for l in 0..3 {
                    diag[j][(k, l)] = C64::new(0.0, 0.0);
                    diag[j][(l, k)] = C64::new(0.0, 0.0);
                    if j + 1 < active.len() {
                        upper[j][(k, l)] = C64::new(0.0, 0.0);
                    }
                    if j > 0 {
                        upper[j - 1][(l, k)] = C64::new(0.0, 0.0);
                    }
                }
            }
        }
        BlockTridiagonal {
            diag,
            upper,
            active,
        }
    }

    pub fn blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[Mat3] {
        &self.diag
    }

    pub fn upper(&self) -> &[Mat3] {
        &self.upper
    }

    pub fn active(&self) -> &[[bool; 3]] {
        &self.active
    }

    /// Global index of each active component, in block order.
    fn index_map(&self) -> Vec<(usize, usize)> {
        let mut map = Vec::with_capacity(3 * self.diag.len());
        for (j, act) in self.active.iter().enumerate() {
            map.extend((0..3).filter(|&k| act[k]).map(|k| (j, k)));
        }
        map
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let map = self.index_map();
        let n = map.len();
        DMatrix::from_fn(n, n, |r, s| {
            let (jr, kr) = map[r];
            let (js, ks) = map[s];
            if jr == js {
                self.diag[jr][(kr, ks)]
            } else if js == jr + 1 {
                self.upper[jr][(kr, ks)]
            } else if jr == js + 1 {
                self.upper[js][(ks, kr)].conj()
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    fn shifted_diag(&self, j: usize, x: f64) -> Mat3 {
        let mut s = self.diag[j];
        for k in 0..3 {
            if self.active[j][k] {
                s[(k, k)] -= x;
            } else {
                s[(k, k)] = C64::new(1.0, 0.0);
            }
        }
        s
    }

    fn scale(&self) -> f64 {
        let mut s: f64 = 1.0;
        for m in self.diag.iter().chain(self.upper.iter()) {
            s = s.max(m.norm());
        }
        s
    }

    /// Pivot `j` of the elimination order (reversed when `rev`) with the
    /// coupling from the previously eliminated block.
    fn step(&self, j: usize, rev: bool, x: f64) -> (Mat3, Option<Mat3>) {
        let n = self.diag.len();
        if rev {
            let b = n - 1 - j;
            let coupling = (j > 0).then(|| self.upper[b].adjoint());
            (self.shifted_diag(b, x), coupling)
        } else {
            (self.shifted_diag(j, x), (j > 0).then(|| self.upper[j - 1]))
        }
    }

    /// Inertia count at exactly `x` together with the pivot growth (largest
    /// inverse pivot norm, last pivot excluded); `None` on a (numerically)
    /// singular pivot.
    fn try_count(&self, x: f64, tiny: f64, rev: bool) -> Option<(usize, f64)> {
        let n = self.diag.len();
        let scale = self.scale();
        let mut count = 0usize;
        let mut growth: f64 = 0.0;
        let mut prev_inv: Option<Mat3> = None;
        for j in 0..n {
            let (mut s, b) = self.step(j, rev, x);
            if let (Some(pinv), Some(b)) = (prev_inv, b) {
                s -= b.adjoint() * pinv * b;
                s = hermitian_part(&s);
            }
            let ev = eigvals_herm3(&s);
            let small = ev.iter().fold(f64::INFINITY, |m, e| m.min(e.abs()));
            if small < tiny {
                return None;
            }
            if j + 1 < n {
                let big = ev.iter().fold(0.0f64, |m, e| m.max(e.abs()));
                growth = growth.max(1.0 / small).max(0.1 * big / scale);
            }
            count += ev.iter().filter(|&&e| e < 0.0).count();
            prev_inv = Some(hermitian_part(&inv3(&s)?));
        }
        Some((count, growth))
    }

    fn count_dir(&self, x: f64, rev: bool) -> (usize, f64) {
        let scale = self.scale();
        let tiny = 1e-14 * scale;
        let mut shift = 0.0;
        for k in 0..8 {
            if let Some(r) = self.try_count(x + shift, tiny, rev) {
                return r;
            }
            shift = 1e-13 * scale * (1 << k) as f64;
        }
        self.try_count(x + shift, 0.0, rev)
            .unwrap_or((0, f64::INFINITY))
    }

    /// Block LU solve of `(A - sigma) x = b`, eliminating in the given order,
    /// together with the pivot growth of that order.
    fn solve_dir(&self, sigma: f64, b: &[Vec3], rev: bool) -> Option<(Vec<Vec3>, f64)> {
        let n = self.diag.len();
        assert_eq!(b.len(), n);
        let idx = |j: usize| if rev { n - 1 - j } else { j };
        let mut inv: Vec<Mat3> = Vec::with_capacity(n);
        let mut y: Vec<Vec3> = Vec::with_capacity(n);
        let mut couplings: Vec<Option<Mat3>> = Vec::with_capacity(n);
        let mut growth: f64 = 0.0;
        for j in 0..n {
            let (mut s, bm) = self.step(j, rev, sigma);
            let mut rhs = b[idx(j)];
            for k in 0..3 {
                if !self.active[idx(j)][k] {
                    rhs[k] = C64::new(0.0, 0.0);
                }
            }
            if let Some(bm) = bm {
                let pinv = &inv[j - 1];
                s -= bm.adjoint() * pinv * bm;
                rhs -= bm.adjoint() * (pinv * y[j - 1]);
            }
            couplings.push(bm);
            let si = inv3(&s)?;
            if j + 1 < n {
                growth = growth.max(si.norm());
            }
            inv.push(si);
            y.push(rhs);
        }
        let mut x = vec![Vec3::zeros(); n];
        let mut next = inv[n - 1] * y[n - 1];
        x[idx(n - 1)] = next;
        for j in (0..n - 1).rev() {
            let bm = couplings[j + 1].expect("coupling");
            next = inv[j] * (y[j] - bm * next);
            x[idx(j)] = next;
        }
        Some((x, growth))
    }

    /// Block LU solve of `(A - sigma) x = b` without pivoting across blocks,
    /// in whichever elimination order has the smaller pivot growth.
    pub fn solve_shifted(&self, sigma: f64, b: &[Vec3]) -> Option<Vec<Vec3>> {
        let rev = self.solve_dir(sigma, b, true);
        if let Some((x, g)) = &rev {
            if *g < GROWTH_LIMIT {
                return Some(x.clone());
            }
        }
        let fwd = self.solve_dir(sigma, b, false);
        match (rev, fwd) {
            (Some((xr, gr)), Some((xf, gf))) => Some(if gr <= gf { xr } else { xf }),
            (r, f) => r.or(f).map(|p| p.0),
        }
    }

    fn masked(&self, mut x: Vec<Vec3>) -> Vec<Vec3> {
        for (v, act) in x.iter_mut().zip(&self.active) {
            for k in 0..3 {
                if !act[k] {
                    v[k] = C64::new(0.0, 0.0);
                }
            }
        }
        x
    }

    /// `A x`, with inactive components treated as zero.
    pub fn apply(&self, x: &[Vec3]) -> Vec<Vec3> {
        let n = self.diag.len();
        let mask = |j: usize, mut v: Vec3| {
            for k in 0..3 {
                if !self.active[j][k] {
                    v[k] = C64::new(0.0, 0.0);
                }
            }
            v
        };
        let xs: Vec<Vec3> = (0..n).map(|j| mask(j, x[j])).collect();
        (0..n)
            .map(|j| {
                let mut y = self.diag[j] * xs[j];
                if j + 1 < n {
                    y += self.upper[j] * xs[j + 1];
                }
                if j > 0 {
                    y += self.upper[j - 1].adjoint() * xs[j - 1];
                }
                mask(j, y)
            })
            .collect()
    }

    /// Eigenvalues in `[lo, hi)` located to within `tol`, each with a unit
    /// eigenvector when it is isolated.
    ///
    /// Bisection on the inertia count isolates each eigenvalue, Rayleigh
    /// quotient iteration refines it and two counts at `lambda -+ tol` certify
    /// the result; clusters narrower than `tol` fall back to bisection.
    pub fn eigenpairs_in(&self, lo: f64, hi: f64, tol: f64) -> Vec<(f64, Option<Vec<Vec3>>)> {
        let mut out = Vec::new();
        if !(hi > lo) {
            return out;
        }
        let clo = self.count_below(lo);
        let chi = self.count_below(hi);
        self.isolate(lo, hi, clo, chi, tol, &mut out);
        out
    }

    fn isolate(&self, lo: f64, hi: f64, clo: usize, chi: usize, tol: f64, out: &mut Vec<(f64, Option<Vec<Vec3>>)>) {
        if chi <= clo {
            return;
        }
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            out.extend(core::iter::repeat((mid, None)).take(chi - clo));
            return;
        }
        if chi - clo == 1 {
            if let Some(pair) = self.refine(lo, hi, clo, tol) {
                out.push(pair);
                return;
            }
        }
        let cmid = self.count_below(mid).clamp(clo, chi);
        self.isolate(lo, mid, clo, cmid, tol, out);
        self.isolate(mid, hi, cmid, chi, tol, out);
    }

    fn refine(&self, lo: f64, hi: f64, clo: usize, tol: f64) -> Option<(f64, Option<Vec<Vec3>>)> {
        let mut x = start_vector(self.diag.len());
        let mut sigma = 0.5 * (lo + hi);
        for _ in 0..12 {
            let y = match self.solve_shifted(sigma, &x) {
                Some(y) => self.masked(y),
                None => {
                    sigma += tol;
                    continue;
                }
            };
            let norm = Float::sqrt(y.iter().map(|v| v.norm_squared()).sum::<f64>());
            if !(norm.is_finite() && norm > 0.0) {
                return None;
            }
            x = y.iter().map(|v| v / c(norm, 0.0)).collect();
            let ax = self.apply(&x);
            let next: f64 = x.iter().zip(&ax).map(|(a, b)| a.dotc(b).re).sum();
            if !(next > lo && next < hi) {
                return None;
            }
            let step = (next - sigma).abs();
            sigma = next;
            if step <= 0.1 * tol {
                let ok = self.count_below(sigma - tol) == clo && self.count_below(sigma + tol) == clo + 1;
                return ok.then_some((sigma, Some(x)));
            }
        }
        None
    }

    /// Normalized eigenvector for an eigenvalue `lambda` known to about 1e-9,
    /// by shifted inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Option<Vec<Vec3>> {
        let n = self.diag.len();
        let shift = lambda + 1e-10 * (1.0 + lambda.abs());
        let mut x = start_vector(n);
        for _ in 0..3 {
            let y = self.masked(self.solve_shifted(shift, &x)?);
            let norm = Float::sqrt(y.iter().map(|v| v.norm_squared()).sum::<f64>());
            if !(norm.is_finite() && norm > 0.0) {
                return None;
            }
            x = y.iter().map(|v| v / c(norm, 0.0)).collect();
        }
        Some(x)
    }
}

fn start_vector(n: usize) -> Vec<Vec3> {
    (0..n)
        .map(|j| {
            let t = j as f64;
            Vec3::new(
                c(1.0, 0.3 * Float::sin(t)),
                c(Float::cos(0.7 * t), 0.5),
                c(0.4, Float::sin(1.3 * t)),
            )
        })
        .collect()
}

impl SpectralCount for BlockTridiagonal {
    fn eigenvalues_in(&self, lo: f64, hi: f64, tol: f64) -> Vec<f64> {
        self.eigenpairs_in(lo, hi, tol).into_iter().map(|p| p.0).collect()
    }

    fn dim(&self) -> usize {
        self.active
            .iter()
            .map(|a| a.iter().filter(|&&b| b).count())
            .sum()
    }

    fn count_below(&self, x: f64) -> usize {
        let (cnt, growth) = self.count_dir(x, true);
        if growth < GROWTH_LIMIT {
            return cnt;
        }
        let (cnt_fwd, growth_fwd) = self.count_dir(x, false);
        if growth_fwd < growth {
            cnt_fwd
        } else {
            cnt
        }
    }
}

/// Real symmetric tridiagonal matrix, Sturm-sequence counting.
#[derive(Debug, Clone)]
pub struct SymTridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(!diag.is_empty());
        assert_eq!(off.len() + 1, diag.len());
        SymTridiagonal { diag, off }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let n = self.diag.len();
        DMatrix::from_fn(n, n, |i, j| {
            let v = if i == j {
                self.diag[i]
            } else if j == i + 1 {
                self.off[i]
            } else if i == j + 1 {
                self.off[j]
            } else {
                0.0
            };
            c(v, 0.0)
        })
    }

    /// Smallest eigenvalue, to within `tol`.
    pub fn lowest_eigenvalue(&self, tol: f64) -> f64 {
        let (lo, hi) = self.gershgorin();
        let (mut a, mut b) = (lo, hi);
        while b - a > tol {
            let m = 0.5 * (a + b);
            if self.count_below(m) >= 1 {
                b = m;
            } else {
                a = m;
            }
        }
        0.5 * (a + b)
    }

    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }
}

impl SpectralCount for SymTridiagonal {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn count_below(&self, x: f64) -> usize {
        let scale = self
            .diag
            .iter()
            .chain(self.off.iter())
            .fold(1.0f64, |m, v| m.max(v.abs()));
        let tiny = f64::EPSILON * scale;
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            d = self.diag[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -tiny;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_herm(seed: u64) -> Mat3 {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let mut m = Mat3::from_fn(|_, _| c(next(), next()));
        m = m + m.adjoint();
        m
    }

    #[test]
    fn closed_form_eigenvalues_match_nalgebra() {
        for seed in 0..200 {
            let m = random_herm(seed);
            let (ref_vals, _) = eigh3(&m);
            let vals = eigvals_herm3(&m);
            for k in 0..3 {
                assert!((vals[k] - ref_vals[k]).abs() < 1e-12, "{vals:?} {ref_vals:?}");
            }
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = random_herm(7);
        let inv = inv3(&m).unwrap();
        assert!((m * inv - Mat3::identity()).norm() < 1e-12);
    }

    #[test]
    fn block_inertia_matches_dense() {
        let n = 12;
        let diag: Vec<Mat3> = (0..n).map(|j| random_herm(100 + j as u64)).collect();
        let upper: Vec<Mat3> = (0..n - 1)
            .map(|j| random_herm(500 + j as u64) * c(0.3, 0.2))
            .collect();
        let mut active = vec![[true; 3]; n];
        active[0] = [true, true, false];
        let bt = BlockTridiagonal::new(diag, upper, active);
        let dense = DenseHermitian::new(bt.to_dense());
        assert_eq!(bt.dim(), 3 * n - 1);
        for x in [-4.0, -1.3, -0.2, 0.0, 0.7, 2.5, 5.0] {
            assert_eq!(bt.count_below(x), dense.count_below(x), "x = {x}");
        }
        let ev = bt.eigenvalues_in(-10.0, 10.0, 1e-11);
        assert_eq!(ev.len(), dense.dim());
        for (a, b) in ev.iter().zip(dense.eigenvalues()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn inverse_iteration_gives_eigenvector() {
        let n = 10;
        let diag: Vec<Mat3> = (0..n).map(|j| random_herm(40 + j as u64)).collect();
        let upper: Vec<Mat3> = (0..n - 1).map(|j| random_herm(90 + j as u64)).collect();
        let bt = BlockTridiagonal::new(diag, upper, vec![[true; 3]; n]);
        let dense = bt.to_dense();
        let lam = bt.eigenvalues_in(-20.0, 20.0, 1e-12)[5];
        let x = bt.eigenvector(lam).unwrap();
        let flat = nalgebra::DVector::from_iterator(3 * n, x.iter().flat_map(|v| v.iter().copied()));
        let r = &dense * &flat - &flat * c(lam, 0.0);
        assert!(r.norm() < 1e-8, "{}", r.norm());
    }

    #[test]
    fn sturm_count_matches_dense() {
        let d: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let o: Vec<f64> = (0..29).map(|i| 0.5 + (i as f64 * 0.11).cos()).collect();
        let t = SymTridiagonal::new(d, o);
        let dense = DenseHermitian::new(t.to_dense());
        for x in [-2.0, -0.5, 0.0, 0.33, 1.9] {
            assert_eq!(t.count_below(x), dense.count_below(x));
        }
        assert!((t.lowest_eigenvalue(1e-13) - dense.eigenvalues()[0]).abs() < 1e-11);
    }
}

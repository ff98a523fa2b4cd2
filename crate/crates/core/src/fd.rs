//! Finite-difference oracle: truncated-interval discretizations of the
//! half-line operator and the Robin Laplacian, and Phillips spectral flow of
//! sampled Hermitian families.
//!
//! The half-line operator is discretized through its quadratic form with
//! trapezoid weights (`h / 2` at `y = 0`, `h` elsewhere), which makes the
//! matrix `W^{-1/2} K W^{-1/2}` Hermitian by construction. Unknowns per node
//! are `(eta, u, v)`; `v(0) = 0` is eliminated, `u(0)` too when `a = 0`, and
//! the Robin-type condition enters as the natural boundary term
//! `nu kx (p / q) |u(0)|^2`. All components vanish at `y = L`.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Float;

use crate::cylinder::{BoundaryParam, CylinderPoint};
use crate::error::{config, Error, Result};
use crate::halfline::essential_gap_edge;
use crate::linalg::{c, ci, BlockTridiagonal, Mat3, SpectralCount, SymTridiagonal, Vec3};
use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FarBc {
    DirichletAll,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    pub length: f64,
    pub n: usize,
    pub far_bc: FarBc,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig { length: 40.0, n: 4000, far_bc: FarBc::DirichletAll }
    }
}

impl FdConfig {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        let cfg = FdConfig { length, n, far_bc: FarBc::DirichletAll };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Grid checks that do not depend on the model.
    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > 0.0) {
            return config(format!("fd length must be positive, got {}", self.length));
        }
        if self.n < 500 {
            return config(format!("fd grid needs n >= 500, got {}", self.n));
        }
        if self.h() > 0.02 {
            return config(format!("fd spacing h = L / n = {} exceeds 0.02", self.h()));
        }
        Ok(())
    }

    /// Also requires `L >= 20 / sqrt(rate)` with `rate = sqrt(1 - 2 nu f) / nu`,
    /// the evanescent decay rate at `kx = 0` and the bottom of the band.
    pub fn validate_for(&self, params: &ModelParams) -> Result<()> {
        self.validate()?;
        let rate = Float::sqrt(1.0 - 2.0 * params.nu() * params.f()) / params.nu();
        let min_len = 20.0 / Float::sqrt(rate);
        if self.length < min_len {
            return config(format!("fd length {} below 20 / sqrt(decay rate) = {min_len}", self.length));
        }
        Ok(())
    }
}

/// `y -> g(y)`, a Hermitian 3x3 potential decaying into the bulk.
#[derive(Clone)]
pub struct MatrixPotential {
    g: Arc<dyn Fn(f64) -> Mat3 + Send + Sync>,
    label: &'static str,
}

impl fmt::Debug for MatrixPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixPotential").field("label", &self.label).finish()
    }
}

impl MatrixPotential {
    pub fn new(label: &'static str, g: impl Fn(f64) -> Mat3 + Send + Sync + 'static) -> Self {
        MatrixPotential { g: Arc::new(g), label }
    }

    /// `g(y) = c e^{-y} I`.
    pub fn exp_identity(c_: f64) -> Self {
        Self::new("c*exp(-y)*I", move |y| Mat3::identity() * c(c_ * Float::exp(-y), 0.0))
    }

    pub fn eval(&self, y: f64) -> Mat3 {
        (self.g)(y)
    }

    pub fn label(&self) -> &'static str {
        self.label
    }
}

#[derive(Debug, Clone, Default)]
pub enum PerturbationSpec {
    #[default]
    None,
    MatrixPotential(MatrixPotential),
}

impl PerturbationSpec {
    pub fn exp_identity(c_: f64) -> Self {
        PerturbationSpec::MatrixPotential(MatrixPotential::exp_identity(c_))
    }

    pub fn is_none(&self) -> bool {
        matches!(self, PerturbationSpec::None)
    }

    /// Hermitian at every grid node and `|g(L)| < 1e-6`.
    pub fn validate(&self, cfg: &FdConfig) -> Result<()> {
        let PerturbationSpec::MatrixPotential(g) = self else {
            return Ok(());
        };
        let h = cfg.h();
        for j in 0..=cfg.n {
            let m = g.eval(j as f64 * h);
            if (m - m.adjoint()).norm() > 1e-12 * (1.0 + m.norm()) {
                return config(format!("perturbation is not Hermitian at y = {}", j as f64 * h));
            }
        }
        let tail = g.eval(cfg.length).norm();
        if !(tail < 1e-6) {
            return config(format!("perturbation does not decay: |g(L)| = {tail:e}"));
        }
        Ok(())
    }

    /// Bound on `sup_y |g(y)|` over the grid (maximum absolute row sum).
    pub fn norm_bound(&self, cfg: &FdConfig) -> f64 {
        let PerturbationSpec::MatrixPotential(g) = self else {
            return 0.0;
        };
        let h = cfg.h();
        (0..=cfg.n)
            .map(|j| {
                let m = g.eval(j as f64 * h);
                (0..3).map(|r| (0..3).map(|c| m[(r, c)].norm()).sum::<f64>()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    fn eval(&self, y: f64) -> Option<Mat3> {
        match self {
            PerturbationSpec::None => None,
            PerturbationSpec::MatrixPotential(g) => Some(g.eval(y)),
        }
    }
}

/// Discretized `H#(kx, a) + g(y)` on `[0, L]` as a block-tridiagonal Hermitian
/// matrix over the nodes `y_j = j h`, `j < n`.
pub fn discretize_halfline(
    params: &ModelParams,
    point: &CylinderPoint,
    cfg: &FdConfig,
    pert: &PerturbationSpec,
) -> Result<BlockTridiagonal> {
    cfg.validate()?;
    let n = cfg.n;
    let h = cfg.h();
    let kx = point.kx();
    let big_f = params.mass(kx * kx);
    let nu = params.nu();
    let (p, q) = (point.bc().p(), point.bc().q());
    let w = |j: usize| if j == 0 { 0.5 * h } else { h };
    let zero = c(0.0, 0.0);
    // Near a = 0 the boundary penalty on u(0) becomes the constraint u(0) = 0.
    let penalty = nu * kx * p / q;
    let constrained = q == 0.0 || !(penalty.abs() / w(0) <= PENALTY_CAP * stiffness(params, cfg, kx));

    let mut diag = Vec::with_capacity(n);
    for j in 0..n {
        let wj = w(j);
        let cells = if j == 0 { 1.0 } else { 2.0 };
        let uv = ci(-big_f * wj + cells * nu / h);
        let mut k = Mat3::new(
            zero,
            c(kx * wj, 0.0),
            zero,
            c(kx * wj, 0.0),
            zero,
            uv,
            zero,
            uv.conj(),
            zero,
        );
        if j == 0 && !constrained {
            k[(1, 1)] += penalty;
        }
        if let Some(g) = pert.eval(j as f64 * h) {
            k += g * c(wj, 0.0);
        }
        diag.push(k / c(wj, 0.0));
    }
    let mut upper = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let mut k = Mat3::zeros();
        k[(0, 2)] = ci(-0.5);
        k[(2, 0)] = ci(-0.5);
        k[(1, 2)] = ci(-nu / h);
        k[(2, 1)] = ci(nu / h);
        upper.push(k / c(Float::sqrt(w(j) * w(j + 1)), 0.0));
    }
    let mut active = vec![[true; 3]; n];
    active[0] = [true, !constrained, false];
    Ok(BlockTridiagonal::new(diag, upper, active))
}

/// Boundary penalties larger than this multiple of [`stiffness`] are imposed
/// as constraints.
const PENALTY_CAP: f64 = 1e6;

/// Size of the largest interior matrix entries of the discretized operator.
pub fn stiffness(params: &ModelParams, cfg: &FdConfig, kx: f64) -> f64 {
    let h = cfg.h();
    params.nu() / (h * h) + 1.0 / h + params.mass(kx * kx).abs() + kx.abs()
}

/// Eigenvalues beyond `+-` this bound are ignored by the outside counts of a
/// [`LocalSpectrum`]; only a boundary penalty can put one there.
pub fn spectral_cutoff(params: &ModelParams, cfg: &FdConfig, kx: f64) -> f64 {
    100.0 * stiffness(params, cfg, kx)
}

/// `-d^2/dx^2` on `[0, L]` with `psi'(0) + a psi(0) = 0` (ghost-point
/// elimination, symmetrized by the trapezoid weight at `x = 0`) and
/// `psi(L) = 0`. `a = inf` is the Dirichlet condition at both ends.
pub fn discretize_robin(bc: BoundaryParam, cfg: &FdConfig) -> Result<SymTridiagonal> {
    cfg.validate()?;
    let h = cfg.h();
    let n = cfg.n;
    let inv = 1.0 / (h * h);
    match bc.a() {
        None => Ok(SymTridiagonal::new(vec![2.0 * inv; n - 1], vec![-inv; n - 2])),
        Some(a) => {
            let mut d = vec![2.0 * inv; n];
            let mut o = vec![-inv; n - 1];
            d[0] = 2.0 * inv - 2.0 * a / h;
            o[0] = -core::f64::consts::SQRT_2 * inv;
            Ok(SymTridiagonal::new(d, o))
        }
    }
}

/// Half-width of the frequency band around 0 excluded from fd spectra.
///
/// The discretization has a spurious eigenvalue of size about `2.4 h |kx|`
/// next to the flat band; everything within this margin is discarded.
pub fn flat_band_margin(params: &ModelParams, cfg: &FdConfig, kx: f64) -> f64 {
    params.gap_margin() + 4.0 * cfg.h() * kx.abs().max(1.0)
}

/// An fd eigenvalue with the fraction of its L2 mass in `[0, L / 2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEigenvalue {
    pub value: f64,
    pub localization: f64,
}

/// Eigenvalues with at least this mass fraction in `[0, L / 2]` are edge modes.
pub const LOCALIZATION_THRESHOLD: f64 = 0.8;

pub fn localization(m: &BlockTridiagonal, cfg: &FdConfig, lambda: f64) -> f64 {
    m.eigenvector(lambda).map_or(0.0, |x| mass_fraction(&x, cfg))
}

fn mass_fraction(x: &[Vec3], cfg: &FdConfig) -> f64 {
    let half = cfg.n / 2;
    let total: f64 = x.iter().map(|v| v.norm_squared()).sum();
    let near: f64 = x[..half].iter().map(|v| v.norm_squared()).sum();
    near / total
}

/// All fd eigenvalues in `[lo, hi)` with their localization.
pub fn fd_eigenvalues(m: &BlockTridiagonal, cfg: &FdConfig, lo: f64, hi: f64, tol: f64) -> Vec<FdEigenvalue> {
    m.eigenpairs_in(lo, hi, tol)
        .into_iter()
        .map(|(value, x)| FdEigenvalue {
            value,
            localization: match x {
                Some(x) => mass_fraction(&x, cfg),
                None => localization(m, cfg, value),
            },
        })
        .collect()
}

/// Edge-mode eigenvalues of the fd operator in both gaps, i.e. localized
/// eigenvalues in `(margin0, edge - gap_margin)` and its mirror, where
/// `margin0` is the flat-band margin.
pub fn fd_edge_eigenvalues(
    params: &ModelParams,
    point: &CylinderPoint,
    cfg: &FdConfig,
    pert: &PerturbationSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = discretize_halfline(params, point, cfg, pert)?;
    let edge = essential_gap_edge(params, point.kx()) - params.gap_margin();
    let flat = flat_band_margin(params, cfg, point.kx());
    let keep = |lo: f64, hi: f64| -> Vec<f64> {
        if hi <= lo {
            return Vec::new();
        }
        fd_eigenvalues(&m, cfg, lo, hi, 1e-11)
            .into_iter()
            .filter(|e| e.localization >= LOCALIZATION_THRESHOLD)
            .map(|e| e.value)
            .collect()
    };
    Ok((keep(flat, edge), keep(-edge, -flat)))
}

/// Eigenvalues of `F(t) - mu(t)` inside `[-window, window]` at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSpectrum {
    pub t: f64,
    pub window: f64,
    pub eigenvalues: Vec<f64>,
    /// Numbers of eigenvalues below and above the window, when known.
    pub outside: Option<(usize, usize)>,
}

impl LocalSpectrum {
    /// Local spectrum of `op - mu` with eigenvalues located to `tol`.
    pub fn of<S: SpectralCount + ?Sized>(op: &S, t: f64, mu: f64, window: f64, tol: f64) -> Self {
        Self::within(op, t, mu, window, tol, f64::INFINITY)
    }

    /// Like [`LocalSpectrum::of`], with outside counts restricted to
    /// `(-cutoff, cutoff)`.
    pub fn within<S: SpectralCount + ?Sized>(op: &S, t: f64, mu: f64, window: f64, tol: f64, cutoff: f64) -> Self {
        let eigenvalues = op
            .eigenvalues_in(mu - window, mu + window, tol)
            .into_iter()
            .map(|e| e - mu)
            .collect();
        let (floor, ceil) = if cutoff.is_finite() {
            (op.count_below(-cutoff), op.count_below(cutoff))
        } else {
            (0, op.dim())
        };
        let below = op.count_below(mu - window).saturating_sub(floor);
        let above = ceil.saturating_sub(op.count_below(mu + window));
        LocalSpectrum { t, window, eigenvalues, outside: Some((below, above)) }
    }

    fn count_abs_below(&self, a: f64) -> usize {
        self.eigenvalues.iter().filter(|e| e.abs() < a).count()
    }

    fn count_nonneg_below(&self, a: f64) -> usize {
        self.eigenvalues.iter().filter(|&&e| e >= 0.0 && e < a).count()
    }
}

/// One piece of a Phillips partition: samples `start..=end` share the level `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub a: f64,
    /// `r+(end) - r+(start)` with `r+ = #eigenvalues in [0, a)`.
    pub flow: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhillipsOutcome {
    pub value: i64,
    pub segments: Vec<Segment>,
    pub samples: usize,
}

/// Level `a` for samples `s[lo..=hi]`: the midpoint of the widest interval of
/// `(0, min window)` free of every `|lambda|` (with margin) on which the
/// counts `#{|lambda| < a}` agree across the samples.
fn common_level(s: &[LocalSpectrum]) -> Option<f64> {
    let wmin = s.iter().map(|x| x.window).fold(f64::INFINITY, f64::min);
    if !(wmin > 0.0) {
        return None;
    }
    let delta = 1e-7 * (1.0 + wmin);
    let mut cuts: Vec<f64> = s
        .iter()
        .flat_map(|x| x.eigenvalues.iter().map(|e| e.abs()))
        .filter(|&e| e < wmin)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(0.0);
    bounds.extend(cuts);
    bounds.push(wmin);
    let mut best: Option<(f64, f64)> = None;
    for pair in bounds.windows(2) {
        let (lo, hi) = (pair[0] + delta, pair[1] - delta);
        if hi <= lo {
            continue;
        }
        let a = 0.5 * (lo + hi);
        let r0 = s[0].count_abs_below(a);
        let consistent = s.iter().all(|x| x.count_abs_below(a) == r0)
            && s.windows(2).all(|w| !jumps_level(&w[0], &w[1], a));
        if consistent && best.map_or(true, |(w, _)| hi - lo > w) {
            best = Some((hi - lo, a));
        }
    }
    best.map(|(_, a)| a)
}

/// True when the counts below and above the windows move in opposite
/// directions, i.e. an eigenvalue may have crossed a whole window unseen.
fn traverses(x: &LocalSpectrum, y: &LocalSpectrum) -> bool {
    match (x.outside, y.outside) {
        (Some((b0, a0)), Some((b1, a1))) => (b1 as i64 - b0 as i64) * (a1 as i64 - a0 as i64) < 0,
        _ => false,
    }
}

/// True when the counts above `a` and below `-a` move in opposite
/// directions between two samples, i.e. an eigenvalue may have passed
/// through `(-a, a)` between them.
fn jumps_level(x: &LocalSpectrum, y: &LocalSpectrum, a: f64) -> bool {
    let counts = |s: &LocalSpectrum| {
        let (below, above) = s.outside.unwrap_or((0, 0));
        let up = s.eigenvalues.iter().filter(|&&e| e >= a).count() + above;
        let down = s.eigenvalues.iter().filter(|&&e| e <= -a).count() + below;
        (up as i64, down as i64)
    };
    let ((u0, d0), (u1, d1)) = (counts(x), counts(y));
    (u1 - u0) * (d1 - d0) < 0
}

/// Greedy left-to-right Phillips partition of time-ordered local spectra.
/// On failure returns the index `i` such that samples `i, i + 1` admit no
/// common level.
pub fn phillips_partition(samples: &[LocalSpectrum]) -> core::result::Result<PhillipsOutcome, usize> {
    let mut segments = Vec::new();
    let mut value = 0i64;
    let mut s = 0usize;
    while s + 1 < samples.len() {
        let mut e = s + 1;
        if traverses(&samples[s], &samples[e]) {
            return Err(s);
        }
        let Some(mut a) = common_level(&samples[s..=e]) else {
            return Err(s);
        };
        while e + 1 < samples.len() && !traverses(&samples[e], &samples[e + 1]) {
            match common_level(&samples[s..=e + 1]) {
                Some(next) => {
                    a = next;
                    e += 1;
                }
                None => break,
            }
        }
        let flow = samples[e].count_nonneg_below(a) as i64 - samples[s].count_nonneg_below(a) as i64;
        value += flow;
        segments.push(Segment { t_start: samples[s].t, t_end: samples[e].t, a, flow });
        s = e;
    }
    Ok(PhillipsOutcome { value, segments, samples: samples.len() })
}

/// Phillips spectral flow of a sampled family `F(t_i)` across `mu_i`, with
/// local spectra taken in `[mu_i - window, mu_i + window]`.
pub fn phillips_spectral_flow<S: SpectralCount>(family: &[S], mu_fid: &[f64], window: f64) -> Result<i64> {
    if family.len() != mu_fid.len() {
        return config("family and fiducial must have the same length");
    }
    let samples: Vec<LocalSpectrum> = family
        .iter()
        .zip(mu_fid)
        .enumerate()
        .map(|(i, (op, &mu))| LocalSpectrum::of(op, i as f64, mu, window, 1e-10 * (1.0 + window)))
        .collect();
    phillips_partition(&samples)
        .map(|o| o.value)
        .map_err(|i| Error::PartitionFailure { at: i as f64 })
}

/// Maximum number of bisections between two initial samples.
pub const MAX_REFINE_DEPTH: u32 = 12;

/// Phillips spectral flow over `t in [t0, t1]`, sampling `local(t)` on an
/// initial uniform grid and bisecting sample intervals (up to
/// [`MAX_REFINE_DEPTH`] levels) where eigenvalues near the fiducial are not
/// resolved or no common level exists.
pub fn spectral_flow_adaptive(
    t0: f64,
    t1: f64,
    initial: usize,
    local: &(dyn Fn(f64) -> Result<LocalSpectrum> + Sync),
) -> Result<PhillipsOutcome> {
    let initial = initial.max(2);
    let ts: Vec<f64> = (0..initial)
        .map(|i| t0 + (t1 - t0) * i as f64 / (initial - 1) as f64)
        .collect();
    let first: Vec<Result<LocalSpectrum>> = crate::par::map(&ts, |&t| local(t));
    let mut samples: Vec<(LocalSpectrum, u32)> = Vec::with_capacity(initial);
    for s in first {
        samples.push((s?, 0));
    }
    // Resolution pass: every eigenvalue in the inner part of a window must
    // have a partner within window / 4 at the neighbouring sample.
    let mut i = 0;
    while i + 1 < samples.len() {
        let (a, da) = (&samples[i].0, samples[i].1);
        let (b, db) = (&samples[i + 1].0, samples[i + 1].1);
        if unresolved(a, b) && da.max(db) < MAX_REFINE_DEPTH {
            let t = 0.5 * (a.t + b.t);
            let depth = da.max(db) + 1;
            samples.insert(i + 1, (local(t)?, depth));
            continue;
        }
        i += 1;
    }
    loop {
        let plain: Vec<LocalSpectrum> = samples.iter().map(|s| s.0.clone()).collect();
        match phillips_partition(&plain) {
            Ok(o) => return Ok(o),
            Err(k) => {
                let depth = samples[k].1.max(samples[k + 1].1);
                let t = 0.5 * (samples[k].0.t + samples[k + 1].0.t);
                if depth >= MAX_REFINE_DEPTH {
                    return Err(Error::PartitionFailure { at: t });
                }
                log::debug!("refining Phillips partition at t = {t}");
                samples.insert(k + 1, (local(t)?, depth + 1));
            }
        }
    }
}

fn unresolved(a: &LocalSpectrum, b: &LocalSpectrum) -> bool {
    let missing = |x: &LocalSpectrum, y: &LocalSpectrum| {
        let inner = 0.75 * x.window.min(y.window);
        let rho = 0.25 * x.window.min(y.window);
        x.eigenvalues
            .iter()
            .filter(|e| e.abs() < inner)
            .any(|e| !y.eigenvalues.iter().any(|f| (f - e).abs() < rho))
    };
    missing(a, b) || missing(b, a)
}

/// Boxed local-spectrum sampler, for callers assembling families at runtime.
pub type Sampler<'a> = Box<dyn Fn(f64) -> Result<LocalSpectrum> + Sync + 'a>;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseHermitian;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    fn small_cfg() -> FdConfig {
        FdConfig::new(10.0, 500).unwrap()
    }

    #[test]
    fn config_checks() {
        assert!(FdConfig::new(40.0, 4000).is_ok());
        assert!(FdConfig::new(40.0, 400).is_err());
        assert!(FdConfig::new(40.0, 1000).is_err());
        assert!(FdConfig::new(5.0, 1000).unwrap().validate_for(&p()).is_err());
        assert!(FdConfig::default().validate_for(&p()).is_ok());
    }

    #[test]
    fn halfline_matrix_is_hermitian() {
        for (kx, a) in [(0.5, 1.0), (-1.0, 0.0), (0.0, -2.0)] {
            let pt = CylinderPoint::from_kx_a(kx, a).unwrap();
            let m = discretize_halfline(&p(), &pt, &small_cfg(), &PerturbationSpec::exp_identity(0.1)).unwrap();
            let d = m.to_dense();
            assert_eq!(d, d.adjoint());
        }
    }

    #[test]
    fn inactive_components() {
        let cfg = small_cfg();
        let pt = CylinderPoint::from_kx_a(0.7, 0.0).unwrap();
        let m = discretize_halfline(&p(), &pt, &cfg, &PerturbationSpec::None).unwrap();
        assert_eq!(m.dim(), 3 * cfg.n - 2);
        let pt = CylinderPoint::from_kx_a(0.7, 0.5).unwrap();
        let m = discretize_halfline(&p(), &pt, &cfg, &PerturbationSpec::None).unwrap();
        assert_eq!(m.dim(), 3 * cfg.n - 1);
    }

    #[test]
    fn robin_lowest_eigenvalue() {
        let cfg = FdConfig::new(30.0, 3000).unwrap();
        let m = discretize_robin(BoundaryParam::from_a(1.0).unwrap(), &cfg).unwrap();
        assert!((m.lowest_eigenvalue(1e-12) + 1.0).abs() < 1e-3);
        let m = discretize_robin(BoundaryParam::from_a(0.0).unwrap(), &cfg).unwrap();
        assert!(m.lowest_eigenvalue(1e-12) > -1e-3);
        let m = discretize_robin(BoundaryParam::infinity(), &cfg).unwrap();
        assert!(m.lowest_eigenvalue(1e-12) > -1e-6);
    }

    #[test]
    fn perturbation_validation() {
        let cfg = FdConfig::default();
        assert!(PerturbationSpec::exp_identity(0.1).validate(&cfg).is_ok());
        let slow = PerturbationSpec::MatrixPotential(MatrixPotential::new("const", |_| Mat3::identity()));
        assert!(slow.validate(&cfg).is_err());
        let skew = PerturbationSpec::MatrixPotential(MatrixPotential::new("skew", |y| {
            let mut m = Mat3::zeros();
            m[(0, 1)] = c(Float::exp(-y), 0.0);
            m
        }));
        assert!(skew.validate(&cfg).is_err());
    }

    #[test]
    fn constant_family_has_no_flow() {
        let m = DenseHermitian::from_real_diagonal(&[-1.0, -0.2, 0.3, 2.0]);
        let fam = vec![m.clone(), m.clone(), m];
        assert_eq!(phillips_spectral_flow(&fam, &[0.0, 0.0, 0.0], 1.0).unwrap(), 0);
    }

    #[test]
    fn single_eigenvalue_crossings() {
        // diag(sin t - 1/2) plus fixed spectrum: crosses 0 upward at pi/6 and
        // downward at 5 pi/6.
        let fam = |t0: f64, t1: f64| -> i64 {
            let n = 200;
            let family: Vec<DenseHermitian> = (0..=n)
                .map(|i| {
                    let t = t0 + (t1 - t0) * i as f64 / n as f64;
                    DenseHermitian::from_real_diagonal(&[Float::sin(t) - 0.5, 3.0, -3.0])
                })
                .collect();
            phillips_spectral_flow(&family, &vec![0.0; n + 1], 1.0).unwrap()
        };
        assert_eq!(fam(0.0, 1.0), 1);
        assert_eq!(fam(0.0, 2.0 * core::f64::consts::PI), 0);
        assert_eq!(fam(1.0, 3.0), -1);
    }

    #[test]
    fn jump_over_the_level_is_not_hidden() {
        let at = |t: f64, e: &[f64]| LocalSpectrum { t, window: 0.5, eigenvalues: e.to_vec(), outside: None };
        let s = [at(0.0, &[0.3]), at(1.0, &[0.05]), at(2.0, &[-0.16]), at(3.0, &[-0.3])];
        let o = phillips_partition(&s).unwrap();
        assert_eq!(o.value, -1);
        let mut pass = [at(0.0, &[]), at(1.0, &[])];
        pass[0].outside = Some((3, 5));
        pass[1].outside = Some((4, 4));
        assert!(phillips_partition(&pass).is_err());
    }

    #[test]
    fn adaptive_resolves_fast_crossing() {
        let local = |t: f64| -> Result<LocalSpectrum> {
            let m = DenseHermitian::from_real_diagonal(&[Float::tanh(40.0 * (0.5 - t)), 5.0]);
            Ok(LocalSpectrum::of(&m, t, 0.0, 0.8, 1e-12))
        };
        assert_eq!(spectral_flow_adaptive(0.0, 1.0, 8, &local).unwrap().value, -1);
    }
}

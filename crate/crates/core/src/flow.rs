//! Loops in the punctured cylinder, edge-branch tracing, crossing and merge
//! counts, and Phillips spectral flow along loops.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};
use core::fmt;

use num_traits::Float;

use crate::cylinder::{BoundaryParam, CylinderPoint};
use crate::error::{config, Error, Result};
use crate::fd::{
    discretize_halfline, discretize_robin, fd_edge_eigenvalues, flat_band_margin, spectral_cutoff,
    spectral_flow_adaptive,
    FdConfig, LocalSpectrum, PerturbationSpec,
};
use crate::halfline::{edge_eigenvalues, essential_gap_edge};
use crate::model::ModelParams;

pub const MIN_SAMPLES: usize = 64;
pub const DEFAULT_SAMPLES: usize = 512;
/// Bisection depth of branch tracing between two initial samples.
pub const MAX_TRACE_DEPTH: u32 = 10;
const MIN_PUNCTURE_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum LoopKind {
    /// `(kx, a) = (R cos theta, R sin theta)`, `theta` in `[-pi, pi]`.
    CircleCR { radius: f64 },
    /// Fixed `kx` with `(p, q) = (cos phi, sin phi)`, `phi` in `[-pi/2, pi/2]`,
    /// i.e. increasing `a` through infinity.
    FixedKx { kx: f64 },
    /// The ellipse `(kx, a) = (rx cos theta, ra sin theta)` around the puncture.
    AroundPuncture { kx_radius: f64, a_radius: f64 },
    /// Closed polyline, linear in `kx` and in the boundary angle.
    Polyline(Vec<CylinderPoint>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopSpec {
    pub kind: LoopKind,
    pub samples: usize,
    pub orientation: Orientation,
}

impl LoopSpec {
    pub fn new(kind: LoopKind, samples: usize, orientation: Orientation) -> Result<Self> {
        let l = LoopSpec { kind, samples, orientation };
        l.validate()?;
        Ok(l)
    }

    pub fn circle(radius: f64, samples: usize) -> Result<Self> {
        Self::new(LoopKind::CircleCR { radius }, samples, Orientation::Positive)
    }

    pub fn fixed_kx(kx: f64, samples: usize) -> Result<Self> {
        Self::new(LoopKind::FixedKx { kx }, samples, Orientation::Positive)
    }

    /// The default loop around the puncture, `rx = 0.5`, `ra = 2`.
    pub fn around_puncture(samples: usize) -> Result<Self> {
        Self::new(
            LoopKind::AroundPuncture { kx_radius: 0.5, a_radius: 2.0 },
            samples,
            Orientation::Positive,
        )
    }

    pub fn reversed(&self) -> Self {
        let orientation = match self.orientation {
            Orientation::Positive => Orientation::Negative,
            Orientation::Negative => Orientation::Positive,
        };
        LoopSpec { orientation, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return config(format!("loop needs at least {MIN_SAMPLES} samples"));
        }
        let finite_pos = |x: f64| x.is_finite() && x > 0.0;
        match &self.kind {
            LoopKind::CircleCR { radius } if !finite_pos(*radius) => {
                return config("loop radius must be positive and finite")
            }
            LoopKind::FixedKx { kx } if !(kx.is_finite() && kx.abs() >= MIN_PUNCTURE_DISTANCE) => {
                return config("fixed-kx loop needs a finite kx away from 0")
            }
            LoopKind::AroundPuncture { kx_radius, a_radius } if !(finite_pos(*kx_radius) && finite_pos(*a_radius)) => {
                return config("ellipse radii must be positive and finite")
            }
            LoopKind::Polyline(pts) => {
                if pts.len() < 3 {
                    return config("polyline loop needs at least 3 points");
                }
                let (a, b) = (pts[0], pts[pts.len() - 1]);
                if a.kx() != b.kx() || a.bc() != b.bc() {
                    return config("polyline loop must be closed (first point = last point)");
                }
            }
            _ => {}
        }
        for i in 0..self.samples {
            let d = self.point_at(self.t(i))?.puncture_distance();
            if d < MIN_PUNCTURE_DISTANCE {
                return config(format!("loop passes within {d:e} of the puncture"));
            }
        }
        Ok(())
    }

    /// Parameter of sample `i` in `[0, 1]`.
    pub fn t(&self, i: usize) -> f64 {
        i as f64 / (self.samples - 1) as f64
    }

    /// Natural loop parameter at `t`: `theta` for circles and ellipses, `phi`
    /// for fixed-kx loops, `t` itself for polylines. Always increasing in `t`.
    pub fn theta(&self, t: f64) -> f64 {
        match self.kind {
            LoopKind::CircleCR { .. } | LoopKind::AroundPuncture { .. } => -PI + 2.0 * PI * t,
            LoopKind::FixedKx { .. } => -FRAC_PI_2 + PI * t,
            LoopKind::Polyline(_) => t,
        }
    }

    pub fn point_at(&self, t: f64) -> Result<CylinderPoint> {
        let t = match self.orientation {
            Orientation::Positive => t,
            Orientation::Negative => 1.0 - t,
        };
        match &self.kind {
            LoopKind::CircleCR { radius } => {
                let th = -PI + 2.0 * PI * t;
                let bc = BoundaryParam::new(1.0, radius * Float::sin(th))?;
                CylinderPoint::new(radius * Float::cos(th), bc)
            }
            LoopKind::AroundPuncture { kx_radius, a_radius } => {
                let th = -PI + 2.0 * PI * t;
                let bc = BoundaryParam::new(1.0, a_radius * Float::sin(th))?;
                CylinderPoint::new(kx_radius * Float::cos(th), bc)
            }
            LoopKind::FixedKx { kx } => {
                let phi = -FRAC_PI_2 + PI * t;
                let bc = if Float::abs(Float::abs(phi) - FRAC_PI_2) < 1e-15 {
                    BoundaryParam::infinity()
                } else {
                    BoundaryParam::from_angle(phi)
                };
                CylinderPoint::new(*kx, bc)
            }
            LoopKind::Polyline(pts) => {
                let segs = pts.len() - 1;
                let x = t.clamp(0.0, 1.0) * segs as f64;
                let i = (Float::floor(x) as usize).min(segs - 1);
                let s = x - i as f64;
                let (a, b) = (pts[i], pts[i + 1]);
                let (pa, mut pb) = (a.bc().angle(), b.bc().angle());
                // Shortest way round the projective circle (period pi).
                while pb - pa > FRAC_PI_2 {
                    pb -= PI;
                }
                while pb - pa < -FRAC_PI_2 {
                    pb += PI;
                }
                let kx = a.kx() + s * (b.kx() - a.kx());
                CylinderPoint::new(kx, BoundaryParam::from_angle(pa + s * (pb - pa)))
            }
        }
    }

    /// The loop kx at `t`, used for perturbations depending on kx only.
    fn kx_at(&self, t: f64) -> Result<f64> {
        Ok(self.point_at(t)?.kx())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gap {
    /// `(0, edge)`.
    Upper,
    /// `(-edge, 0)`.
    Lower,
}

impl Gap {
    fn sign(self) -> f64 {
        match self {
            Gap::Upper => 1.0,
            Gap::Lower => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    SemiAnalytic,
    FdOracle(FdConfig),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::SemiAnalytic => "semi",
            Backend::FdOracle(_) => "fd",
        }
    }
}

/// Gap eigenvalues at one loop sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSample {
    pub t: f64,
    pub theta: f64,
    /// Essential gap edge `omega_theta`.
    pub edge: f64,
    /// Sorted eigenvalues inside the chosen gap.
    pub eigenvalues: Vec<f64>,
}

pub fn gap_sample(params: &ModelParams, lp: &LoopSpec, gap: Gap, backend: &Backend, t: f64) -> Result<GapSample> {
    let pt = lp.point_at(t)?;
    let edge = essential_gap_edge(params, pt.kx());
    let mut eigenvalues = match backend {
        Backend::SemiAnalytic => {
            let window = match gap {
                Gap::Upper => (0.0, f64::INFINITY),
                Gap::Lower => (f64::NEG_INFINITY, 0.0),
            };
            edge_eigenvalues(params, &pt, window)?
        }
        Backend::FdOracle(cfg) => {
            let (up, low) = fd_edge_eigenvalues(params, &pt, cfg, &PerturbationSpec::None)?;
            match gap {
                Gap::Upper => up,
                Gap::Lower => low,
            }
        }
    };
    eigenvalues.sort_by(f64::total_cmp);
    Ok(GapSample { t, theta: lp.theta(t), edge, eigenvalues })
}

/// Gap samples at the loop's uniform sample points.
pub fn loop_spectra(params: &ModelParams, lp: &LoopSpec, gap: Gap, backend: &Backend) -> Result<Vec<GapSample>> {
    lp.validate()?;
    let ts: Vec<f64> = (0..lp.samples).map(|i| lp.t(i)).collect();
    crate::par::map(&ts, |&t| gap_sample(params, lp, gap, backend, t))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchEnd {
    /// Reaches the bulk band bounding the gap (`+` band for the upper gap,
    /// `-` band for the lower gap).
    MergesBulkBand,
    MergesFlatBand,
    /// Runs into the start or end of the loop parameter range.
    ClosesLoop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeBranch {
    /// `(theta, omega)` with `theta` strictly increasing.
    pub points: Vec<(f64, f64)>,
    pub start: BranchEnd,
    pub end: BranchEnd,
}

/// Largest jump of a branch between adjacent samples before the interval is
/// bisected.
fn jump_tol(params: &ModelParams) -> f64 {
    0.02 * params.f()
}

/// Distances from a band within which a branch end is labeled as merging:
/// `(bulk band, flat band)`.
fn merge_tols(params: &ModelParams, backend: &Backend, kx: f64) -> (f64, f64) {
    let gm = params.gap_margin();
    match backend {
        Backend::SemiAnalytic => (3.0 * gm, 3.0 * gm),
        Backend::FdOracle(cfg) => {
            // fd modes delocalize before reaching the band edge.
            let deloc = 60.0 / (cfg.length * cfg.length);
            (3.0 * gm + deloc, 3.0 * flat_band_margin(params, cfg, kx))
        }
    }
}

/// Largest `|d omega / dt|` over the sorted pairing of two samples with equal
/// eigenvalue counts.
fn pair_speed(a: &GapSample, b: &GapSample) -> Option<f64> {
    let dt = b.t - a.t;
    (a.eigenvalues.len() == b.eigenvalues.len() && dt > 0.0).then(|| {
        a.eigenvalues
            .iter()
            .zip(&b.eigenvalues)
            .map(|(x, y)| (x - y).abs() / dt)
            .fold(0.0, f64::max)
    })
}

/// Matching window for the interval `samples[i]..samples[i + 1]`:
/// three times the step times the slope seen on the neighboring intervals,
/// and never below `floor`.
fn match_window(samples: &[GapSample], i: usize, floor: f64) -> f64 {
    let speed = |k: usize| {
        (k + 1 < samples.len())
            .then(|| pair_speed(&samples[k], &samples[k + 1]))
            .flatten()
            .unwrap_or(0.0)
    };
    let slope = if i > 0 { speed(i - 1) } else { 0.0 }.max(speed(i + 1));
    floor.max(3.0 * (samples[i + 1].t - samples[i].t) * slope)
}

fn compatible(a: &GapSample, b: &GapSample, tol: f64) -> bool {
    a.eigenvalues.len() == b.eigenvalues.len()
        && a.eigenvalues
            .iter()
            .zip(&b.eigenvalues)
            .all(|(x, y)| (x - y).abs() <= tol)
}

/// Traces continuous eigenvalue branches inside `gap` along the loop.
///
/// Adjacent samples are linked in sorted order when their eigenvalue counts
/// agree and no eigenvalue moves by more than the matching window (three
/// times the step times the neighboring slope, at least `0.02 f`); otherwise
/// the interval is bisected, up to [`MAX_TRACE_DEPTH`] times. Remaining
/// mismatches are branch ends, matched greedily by distance and labeled by the
/// band they are close to.
pub fn trace_branches(params: &ModelParams, lp: &LoopSpec, gap: Gap, backend: &Backend) -> Result<Vec<EdgeBranch>> {
    let mut samples = loop_spectra(params, lp, gap, backend)?;
    let mut depth = alloc::vec![0u32; samples.len()];
    let floor = jump_tol(params);
    let mut i = 0;
    while i + 1 < samples.len() {
        let d = depth[i].max(depth[i + 1]);
        if d < MAX_TRACE_DEPTH && !compatible(&samples[i], &samples[i + 1], match_window(&samples, i, floor)) {
            let t = 0.5 * (samples[i].t + samples[i + 1].t);
            samples.insert(i + 1, gap_sample(params, lp, gap, backend, t)?);
            depth.insert(i + 1, d + 1);
            i = i.saturating_sub(1);
            continue;
        }
        i += 1;
    }
    link(params, lp, gap, backend, &samples, floor)
}

fn link(
    params: &ModelParams,
    lp: &LoopSpec,
    gap: Gap,
    backend: &Backend,
    samples: &[GapSample],
    floor: f64,
) -> Result<Vec<EdgeBranch>> {
    let label = |s: &GapSample, w: f64, lo: f64, hi: f64| -> Result<BranchEnd> {
        let kx = lp.kx_at(s.t)?;
        let (tb, tf) = merge_tols(params, backend, kx);
        let w = w * gap.sign();
        if s.edge - w <= tb {
            Ok(BranchEnd::MergesBulkBand)
        } else if w <= tf {
            Ok(BranchEnd::MergesFlatBand)
        } else {
            Err(Error::TracingAmbiguity { lo, hi })
        }
    };
    let mut done: Vec<EdgeBranch> = Vec::new();
    let first = &samples[0];
    // Open branches, indexed like the current sample's eigenvalues.
    let mut open: Vec<EdgeBranch> = first
        .eigenvalues
        .iter()
        .map(|&w| EdgeBranch { points: alloc::vec![(first.theta, w)], start: BranchEnd::ClosesLoop, end: BranchEnd::ClosesLoop })
        .collect();
    for (i, pair) in samples.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        let tol = match_window(samples, i, floor);
        let matches: Vec<(usize, usize)> = if compatible(a, b, tol) {
            (0..a.eigenvalues.len()).map(|k| (k, k)).collect()
        } else {
            greedy_matches(&a.eigenvalues, &b.eigenvalues, tol)
        };
        let mut next: Vec<Option<EdgeBranch>> = alloc::vec![None; b.eigenvalues.len()];
        let mut taken = alloc::vec![false; a.eigenvalues.len()];
        for &(ia, ib) in &matches {
            let mut br = core::mem::replace(
                &mut open[ia],
                EdgeBranch { points: Vec::new(), start: BranchEnd::ClosesLoop, end: BranchEnd::ClosesLoop },
            );
            br.points.push((b.theta, b.eigenvalues[ib]));
            next[ib] = Some(br);
            taken[ia] = true;
        }
        for (ia, br) in open.into_iter().enumerate() {
            if !taken[ia] {
                let mut br = br;
                br.end = label(a, a.eigenvalues[ia], a.t, b.t)?;
                done.push(br);
            }
        }
        open = next
            .into_iter()
            .enumerate()
            .map(|(ib, br)| match br {
                Some(br) => Ok(br),
                None => Ok(EdgeBranch {
                    points: alloc::vec![(b.theta, b.eigenvalues[ib])],
                    start: label(b, b.eigenvalues[ib], a.t, b.t)?,
                    end: BranchEnd::ClosesLoop,
                }),
            })
            .collect::<Result<_>>()?;
    }
    done.extend(open);
    Ok(done)
}

/// Pairs `(i, j)` of closest eigenvalues within `tol`, each used once.
fn greedy_matches(a: &[f64], b: &[f64], tol: f64) -> Vec<(usize, usize)> {
    let mut cand: Vec<(f64, usize, usize)> = Vec::new();
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            let d = (x - y).abs();
            if d <= tol {
                cand.push((d, i, j));
            }
        }
    }
    cand.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut ua, mut ub) = (alloc::vec![false; a.len()], alloc::vec![false; b.len()]);
    let mut out = Vec::new();
    for (_, i, j) in cand {
        if !ua[i] && !ub[j] {
            ua[i] = true;
            ub[j] = true;
            out.push((i, j));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowMethod {
    CrossingCount,
    MergeCount,
    PhillipsRank,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub theta: f64,
    pub omega: f64,
    pub sign: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    pub value: i64,
    pub crossings: Vec<Crossing>,
    pub method: FlowMethod,
}

fn crossings_at(branches: &[EdgeBranch], mu: f64) -> Vec<Crossing> {
    let mut out = Vec::new();
    for br in branches {
        for w in br.points.windows(2) {
            let ((t0, w0), (t1, w1)) = (w[0], w[1]);
            if (w0 >= mu) == (w1 >= mu) {
                continue;
            }
            let s = (mu - w0) / (w1 - w0);
            let sign = if w1 < w0 { 1 } else { -1 };
            out.push(Crossing { theta: t0 + s * (t1 - t0), omega: mu, sign });
        }
    }
    out.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    out
}

/// Signed crossings of the branches with `omega = mu`: `+1` for a branch
/// going down as the loop parameter increases, `-1` going up. The count is
/// repeated at `mu +- 1e-4 f` and must agree.
pub fn edge_index_crossings(params: &ModelParams, branches: &[EdgeBranch], gap: Gap, mu: f64) -> Result<FlowResult> {
    let f = params.f();
    let inside = match gap {
        Gap::Upper => mu > 0.0 && mu < f,
        Gap::Lower => mu < 0.0 && mu > -f,
    };
    if !inside {
        return config(format!("fiducial level {mu} is outside the global gap"));
    }
    let delta = 1e-4 * f;
    let crossings = crossings_at(branches, mu);
    let value: i64 = crossings.iter().map(|c| c.sign).sum();
    for m in [mu - delta, mu + delta] {
        let v: i64 = crossings_at(branches, m).iter().map(|c| c.sign).sum();
        if v != value {
            return Err(Error::TangencyUnresolved { mu });
        }
    }
    Ok(FlowResult { value, crossings, method: FlowMethod::CrossingCount })
}

/// Which band edge a merge count refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeBand {
    /// `n_b+`: branches below the `+` band; emerging counts `+1`.
    PlusBelow,
    /// `n_a0`: branches above the flat band; disappearing counts `+1`.
    FlatAbove,
    /// `n_b0`: branches below the flat band; emerging counts `+1`.
    FlatBelow,
    /// `n_a-`: branches above the `-` band; disappearing counts `+1`.
    MinusAbove,
}

impl MergeBand {
    /// The gap whose branches this count reads.
    pub fn gap(self) -> Gap {
        match self {
            MergeBand::PlusBelow | MergeBand::FlatAbove => Gap::Upper,
            MergeBand::FlatBelow | MergeBand::MinusAbove => Gap::Lower,
        }
    }
}

/// Signed count of branch ends merging with `band` (branches must come from
/// a closed loop in `band.gap()`).
pub fn edge_index_merges(branches: &[EdgeBranch], band: MergeBand) -> FlowResult {
    let (kind, emerge_sign) = match band {
        MergeBand::PlusBelow => (BranchEnd::MergesBulkBand, 1),
        MergeBand::FlatAbove => (BranchEnd::MergesFlatBand, -1),
        MergeBand::FlatBelow => (BranchEnd::MergesFlatBand, 1),
        MergeBand::MinusAbove => (BranchEnd::MergesBulkBand, -1),
    };
    let mut crossings = Vec::new();
    for br in branches {
        if br.start == kind {
            let (theta, omega) = br.points[0];
            crossings.push(Crossing { theta, omega, sign: emerge_sign });
        }
        if br.end == kind {
            let (theta, omega) = br.points[br.points.len() - 1];
            crossings.push(Crossing { theta, omega, sign: -emerge_sign });
        }
    }
    crossings.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let value = crossings.iter().map(|c| c.sign).sum();
    FlowResult { value, crossings, method: FlowMethod::MergeCount }
}

/// Fiducial energy curve for spectral flow, given in the gap's sign
/// convention (a positive level means `-level` for the lower gap).
#[derive(Clone)]
pub enum Fiducial {
    /// `f / 2`, i.e. `1/2 min(f, gap_edge)`.
    Default,
    Constant(f64),
    /// Level as a function of the loop parameter `t` in `[0, 1]`; must
    /// take the same value at both ends.
    Curve(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Fiducial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fiducial::Default => write!(f, "Default"),
            Fiducial::Constant(c) => write!(f, "Constant({c})"),
            Fiducial::Curve(_) => write!(f, "Curve"),
        }
    }
}

impl Fiducial {
    pub fn curve(g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Fiducial::Curve(Arc::new(g))
    }

    fn level(&self, params: &ModelParams, edge: f64, t: f64) -> f64 {
        match self {
            Fiducial::Default => 0.5 * params.f().min(edge),
            Fiducial::Constant(c) => *c,
            Fiducial::Curve(g) => g(t),
        }
    }
}

/// Options for [`spectral_flow`].
#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub gap: Gap,
    pub fiducial: Fiducial,
    pub perturbation: PerturbationSpec,
}

impl FlowOptions {
    pub fn new(gap: Gap) -> Self {
        FlowOptions { gap, fiducial: Fiducial::Default, perturbation: PerturbationSpec::None }
    }
}

/// Phillips spectral flow of `H#(loop(t)) + V - mu_fid(t)` in the given gap.
/// An eigenvalue crossing the fiducial upwards counts `+1`.
pub fn spectral_flow(params: &ModelParams, lp: &LoopSpec, backend: &Backend, opts: &FlowOptions) -> Result<FlowResult> {
    lp.validate()?;
    let s = opts.gap.sign();
    if let Fiducial::Curve(g) = &opts.fiducial {
        if (g(0.0) - g(1.0)).abs() > 1e-12 {
            return config("fiducial curve must close up along the loop");
        }
    }
    let gm = params.gap_margin();
    let local = |t: f64| -> Result<LocalSpectrum> {
        let pt = lp.point_at(t)?;
        let kx = pt.kx();
        let edge = essential_gap_edge(params, kx);
        let level = opts.fiducial.level(params, edge, t);
        let low = match backend {
            Backend::SemiAnalytic => gm,
            Backend::FdOracle(cfg) => flat_band_margin(params, cfg, kx) + opts.perturbation.norm_bound(cfg),
        };
        let room = (level - low).min(edge - gm - level);
        if !(room > 0.0) {
            return config(format!("fiducial level {level} leaves the gap at t = {t}"));
        }
        let window = 0.95 * room;
        let mu = s * level;
        match backend {
            Backend::SemiAnalytic => {
                let gap_window = match opts.gap {
                    Gap::Upper => (0.0, f64::INFINITY),
                    Gap::Lower => (f64::NEG_INFINITY, 0.0),
                };
                let ev = edge_eigenvalues(params, &pt, gap_window)?;
                let below = ev.iter().filter(|&&e| e < mu - window).count();
                let above = ev.iter().filter(|&&e| e > mu + window).count();
                let eigenvalues = ev
                    .into_iter()
                    .filter(|e| (e - mu).abs() <= window)
                    .map(|e| e - mu)
                    .collect();
                Ok(LocalSpectrum { t, window, eigenvalues, outside: Some((below, above)) })
            }
            Backend::FdOracle(cfg) => {
                let m = discretize_halfline(params, &pt, cfg, &opts.perturbation)?;
                Ok(LocalSpectrum::within(&m, t, mu, window, 1e-10, spectral_cutoff(params, cfg, kx)))
            }
        }
    };
    match backend {
        Backend::SemiAnalytic if !opts.perturbation.is_none() => {
            return config("the semi-analytic backend cannot include a perturbation")
        }
        Backend::FdOracle(cfg) => {
            cfg.validate_for(params)?;
            opts.perturbation.validate(cfg)?;
        }
        _ => {}
    }
    let outcome = spectral_flow_adaptive(0.0, 1.0, lp.samples, &local)?;
    let crossings = outcome
        .segments
        .iter()
        .filter(|seg| seg.flow != 0)
        .map(|seg| Crossing { theta: lp.theta(0.5 * (seg.t_start + seg.t_end)), omega: f64::NAN, sign: seg.flow })
        .collect();
    Ok(FlowResult { value: outcome.value, crossings, method: FlowMethod::PhillipsRank })
}

/// `Sf+` with the default fiducial curve.
pub fn spectral_flow_plus(params: &ModelParams, lp: &LoopSpec, pert: &PerturbationSpec, backend: &Backend) -> Result<i64> {
    let opts = FlowOptions { perturbation: pert.clone(), ..FlowOptions::new(Gap::Upper) };
    spectral_flow(params, lp, backend, &opts).map(|r| r.value)
}

/// `Sf-` with the default fiducial curve in the lower gap.
pub fn spectral_flow_minus(params: &ModelParams, lp: &LoopSpec, pert: &PerturbationSpec, backend: &Backend) -> Result<i64> {
    let opts = FlowOptions { perturbation: pert.clone(), ..FlowOptions::new(Gap::Lower) };
    spectral_flow(params, lp, backend, &opts).map(|r| r.value)
}

/// Spectral flows of the generators of the fundamental group of the
/// punctured cylinder and the relations between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Pi1Report {
    pub ell_plus: i64,
    pub ell_minus: i64,
    pub ell_minus_op: i64,
    pub ell_zero: i64,
    /// `(kx, Sf+(l+ at kx), Sf+(l- at -kx))` for the homotopy check.
    pub homotopy: Vec<(f64, i64, i64)>,
    pub violations: Vec<String>,
}

impl Pi1Report {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Computes `Sf+` on `l+` (kx = 1), `l-` (kx = -1), the reverse of `l-`
/// and `l0`, and checks `Sf+(l0) = Sf+(l+) - Sf+(l-) = 2 Sf+(l+)` and
/// `Sf+(l-op) = -Sf+(l-)`; `homotopy_kx` adds fixed-kx loops at `+-kx`
/// which must reproduce `Sf+(l+)` and `Sf+(l-)`.
pub fn pi1_decomposition_check(
    params: &ModelParams,
    backend: &Backend,
    samples: usize,
    homotopy_kx: &[f64],
) -> Result<Pi1Report> {
    let none = PerturbationSpec::None;
    let lp = LoopSpec::fixed_kx(1.0, samples)?;
    let lm = LoopSpec::fixed_kx(-1.0, samples)?;
    let ell_plus = spectral_flow_plus(params, &lp, &none, backend)?;
    let ell_minus = spectral_flow_plus(params, &lm, &none, backend)?;
    let ell_minus_op = spectral_flow_plus(params, &lm.reversed(), &none, backend)?;
    let ell_zero = spectral_flow_plus(params, &LoopSpec::around_puncture(samples)?, &none, backend)?;
    let mut violations = Vec::new();
    if ell_minus_op != -ell_minus {
        violations.push(format!("Sf+(l-op) = {ell_minus_op} but -Sf+(l-) = {}", -ell_minus));
    }
    if ell_zero != ell_plus - ell_minus {
        violations.push(format!("Sf+(l0) = {ell_zero} but Sf+(l+) - Sf+(l-) = {}", ell_plus - ell_minus));
    }
    if ell_zero != 2 * ell_plus {
        violations.push(format!("Sf+(l0) = {ell_zero} but 2 Sf+(l+) = {}", 2 * ell_plus));
    }
    let mut homotopy = Vec::new();
    for &kx in homotopy_kx {
        let sp = spectral_flow_plus(params, &LoopSpec::fixed_kx(kx.abs(), samples)?, &none, backend)?;
        let sm = spectral_flow_plus(params, &LoopSpec::fixed_kx(-kx.abs(), samples)?, &none, backend)?;
        if sp != ell_plus || sm != ell_minus {
            violations.push(format!("fixed-kx loops at +-{kx} give ({sp}, {sm}), expected ({ell_plus}, {ell_minus})"));
        }
        homotopy.push((kx.abs(), sp, sm));
    }
    Ok(Pi1Report { ell_plus, ell_minus, ell_minus_op, ell_zero, homotopy, violations })
}

/// Phillips flow of the fd Robin Laplacian `-d^2/dy^2` with `u'(0) + a u(0) = 0`
/// across the level `mu < 0` as `a` runs once around the projective line
/// (`phi` from `-pi/2` to `pi/2`, `a = tan phi`; reversed if `orientation`
/// is negative).
pub fn robin_pump_flow(cfg: &FdConfig, mu: f64, samples: usize, orientation: Orientation) -> Result<i64> {
    if !(mu < 0.0 && mu.is_finite()) {
        return config("Robin pump level must be negative");
    }
    cfg.validate()?;
    let window = 0.5 * mu.abs();
    let local = |t: f64| -> Result<LocalSpectrum> {
        let s = match orientation {
            Orientation::Positive => t,
            Orientation::Negative => 1.0 - t,
        };
        let phi = -FRAC_PI_2 + PI * s;
        let bc = if Float::abs(Float::abs(phi) - FRAC_PI_2) < 1e-15 {
            BoundaryParam::infinity()
        } else {
            BoundaryParam::from_angle(phi)
        };
        let op = discretize_robin(bc, cfg)?;
        Ok(LocalSpectrum::of(&op, t, mu, window, 1e-10 * (1.0 + mu.abs())))
    };
    spectral_flow_adaptive(0.0, 1.0, samples.max(MIN_SAMPLES), &local).map(|o| o.value)
}

/// Lowest fd Robin eigenvalue at finite `a`.
pub fn robin_lowest_eigenvalue(cfg: &FdConfig, a: f64) -> Result<f64> {
    let op = discretize_robin(BoundaryParam::from_a(a)?, cfg)?;
    Ok(op.lowest_eigenvalue(1e-12 * (1.0 + a * a)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    fn branch(points: &[(f64, f64)], start: BranchEnd, end: BranchEnd) -> EdgeBranch {
        EdgeBranch { points: points.to_vec(), start, end }
    }

    #[test]
    fn loop_validation() {
        assert!(LoopSpec::circle(1.0, 10).is_err());
        assert!(LoopSpec::circle(0.0, 64).is_err());
        assert!(LoopSpec::fixed_kx(0.0, 64).is_err());
        assert!(LoopSpec::fixed_kx(1e-3, 64).is_ok());
        let open = alloc::vec![
            CylinderPoint::from_kx_a(1.0, 0.0).unwrap(),
            CylinderPoint::from_kx_a(1.0, 1.0).unwrap(),
            CylinderPoint::from_kx_a(2.0, 1.0).unwrap(),
        ];
        assert!(LoopSpec::new(LoopKind::Polyline(open), 64, Orientation::Positive).is_err());
    }

    #[test]
    fn loops_are_closed() {
        for lp in [
            LoopSpec::circle(2.0, 64).unwrap(),
            LoopSpec::fixed_kx(-1.0, 64).unwrap(),
            LoopSpec::around_puncture(64).unwrap(),
        ] {
            let (a, b) = (lp.point_at(0.0).unwrap(), lp.point_at(1.0).unwrap());
            assert!((a.kx() - b.kx()).abs() < 1e-12);
            let da = (a.bc().angle() - b.bc().angle()).abs();
            assert!(da < 1e-12 || (da - PI).abs() < 1e-12);
        }
    }

    #[test]
    fn fixed_kx_loop_passes_infinity_at_ends() {
        let lp = LoopSpec::fixed_kx(1.0, 64).unwrap();
        assert_eq!(lp.point_at(0.0).unwrap().bc(), BoundaryParam::infinity());
        assert_eq!(lp.point_at(0.5).unwrap().bc().a(), Some(0.0));
        let q = lp.point_at(0.75).unwrap().bc().a().unwrap();
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversal_retraces() {
        let lp = LoopSpec::circle(1.0, 64).unwrap();
        let r = lp.reversed();
        let (x, y) = (lp.point_at(0.3).unwrap(), r.point_at(0.7).unwrap());
        assert!((x.kx() - y.kx()).abs() < 1e-12);
        assert!((x.bc().angle() - y.bc().angle()).abs() < 1e-12);
    }

    #[test]
    fn polyline_goes_through_infinity_the_short_way() {
        let pts = alloc::vec![
            CylinderPoint::from_kx_a(1.0, 10.0).unwrap(),
            CylinderPoint::from_kx_a(1.0, -10.0).unwrap(),
            CylinderPoint::from_kx_a(2.0, 0.0).unwrap(),
            CylinderPoint::from_kx_a(1.0, 10.0).unwrap(),
        ];
        let lp = LoopSpec::new(LoopKind::Polyline(pts), 64, Orientation::Positive).unwrap();
        let mid = lp.point_at(1.0 / 6.0).unwrap();
        assert!(mid.bc().a().map_or(true, |a| a.abs() > 10.0));
    }

    #[test]
    fn crossing_signs() {
        let down = branch(&[(0.0, 0.9), (1.0, 0.1)], BranchEnd::MergesBulkBand, BranchEnd::MergesFlatBand);
        let up = branch(&[(2.0, 0.1), (3.0, 0.3), (4.0, 0.9)], BranchEnd::MergesFlatBand, BranchEnd::MergesBulkBand);
        let r = edge_index_crossings(&p(), std::slice::from_ref(&down), Gap::Upper, 0.5).unwrap();
        assert_eq!(r.value, 1);
        assert!((r.crossings[0].theta - 0.5).abs() < 1e-12);
        let r = edge_index_crossings(&p(), &[down, up], Gap::Upper, 0.5).unwrap();
        assert_eq!(r.value, 0);
        assert_eq!(edge_index_crossings(&p(), &[], Gap::Upper, 0.5).unwrap().value, 0);
        assert!(edge_index_crossings(&p(), &[], Gap::Upper, 1.5).is_err());
        assert!(edge_index_crossings(&p(), &[], Gap::Lower, 0.5).is_err());
    }

    #[test]
    fn tangency_is_reported() {
        let touch = branch(&[(0.0, 0.4), (1.0, 0.5)], BranchEnd::ClosesLoop, BranchEnd::ClosesLoop);
        assert_eq!(
            edge_index_crossings(&p(), &[touch], Gap::Upper, 0.5),
            Err(Error::TangencyUnresolved { mu: 0.5 })
        );
    }

    #[test]
    fn merge_conventions() {
        let down = branch(&[(0.0, 0.99), (1.0, 0.001)], BranchEnd::MergesBulkBand, BranchEnd::MergesFlatBand);
        assert_eq!(edge_index_merges(std::slice::from_ref(&down), MergeBand::PlusBelow).value, 1);
        assert_eq!(edge_index_merges(&[down], MergeBand::FlatAbove).value, 1);
        let low = branch(&[(0.0, -0.001), (1.0, -0.99)], BranchEnd::MergesFlatBand, BranchEnd::MergesBulkBand);
        assert_eq!(edge_index_merges(std::slice::from_ref(&low), MergeBand::FlatBelow).value, 1);
        assert_eq!(edge_index_merges(&[low], MergeBand::MinusAbove).value, 1);
        assert_eq!(edge_index_merges(&[], MergeBand::PlusBelow).value, 0);
    }

    #[test]
    fn greedy_matching_prefers_closest() {
        let m = greedy_matches(&[0.1, 0.5], &[0.49, 0.11, 0.8], 0.05);
        assert_eq!(m, alloc::vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn robin_pump_is_minus_one() {
        let cfg = FdConfig::new(15.0, 1500).unwrap();
        assert_eq!(robin_pump_flow(&cfg, -1.0, 64, Orientation::Positive).unwrap(), -1);
        assert_eq!(robin_pump_flow(&cfg, -1.0, 64, Orientation::Negative).unwrap(), 1);
    }

    #[test]
    fn robin_lowest_matches_minus_a_squared() {
        let cfg = FdConfig::new(20.0, 4000).unwrap();
        let e = robin_lowest_eigenvalue(&cfg, 1.0).unwrap();
        assert!((e + 1.0).abs() < 1e-3, "{e}");
    }
}

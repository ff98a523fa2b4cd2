//! Scattering amplitude of the upper band off the boundary and its winding
//! numbers along loops in `(kx, kappa, a)`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{config, Error, Result};
use crate::linalg::{c, Vec3};
use crate::model::{omega_plus, section_inf, section_zeta, ModelParams};
use crate::par;
use crate::C64;

/// Smallest distance from a point to the excluded lines.
pub const POINT_MARGIN: f64 = 1e-9;
/// Smallest distance from a loop to the excluded lines.
pub const LOOP_MARGIN: f64 = 1e-6;
/// Maximum bisection depth when a phase increment reaches `pi / 2`.
pub const MAX_UNWRAP_DEPTH: u32 = 14;

/// `+i sqrt(kappa^2 + 2 kx^2 + (1 - 2 nu f) / nu^2)`, the decaying imaginary
/// momentum at the frequency `omega_+(kx, kappa)`.
pub fn kappa_ev(params: &ModelParams, kx: f64, kappa: f64) -> Result<C64> {
    let nu = params.nu();
    let radicand = kappa * kappa + 2.0 * kx * kx + (1.0 - 2.0 * nu * params.f()) / (nu * nu);
    if !(radicand > 0.0) {
        return Err(Error::Radicand { radicand });
    }
    Ok(c(0.0, radicand.sqrt()))
}

/// A point of the scattering domain `kappa > 0` minus the lines
/// `{kx = 0, a = 0}` and `{kx = Re zeta, kappa = Im zeta}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    kx: f64,
    kappa: f64,
    a: f64,
    zeta: C64,
}

impl ScatterPoint {
    pub fn new(kx: f64, kappa: f64, a: f64) -> Result<Self> {
        Self::with_zeta(kx, kappa, a, C64::i())
    }

    pub fn with_zeta(kx: f64, kappa: f64, a: f64, zeta: C64) -> Result<Self> {
        if !(kx.is_finite() && a.is_finite() && kappa.is_finite() && kappa > 0.0) {
            return config(format!("scatter point needs finite kx, a and kappa > 0, got ({kx}, {kappa}, {a})"));
        }
        if !(zeta.im > 0.0 && zeta.re.is_finite() && zeta.im.is_finite()) {
            return config("reference zeta must lie in the upper half plane");
        }
        let pt = ScatterPoint { kx, kappa, a, zeta };
        if pt.exclusion_distance() < POINT_MARGIN {
            return Err(Error::Domain);
        }
        Ok(pt)
    }

    pub fn kx(&self) -> f64 {
        self.kx
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn zeta(&self) -> C64 {
        self.zeta
    }

    /// Distance to the nearer excluded line.
    pub fn exclusion_distance(&self) -> f64 {
        exclusion_distance(self.kx, self.kappa, self.a, self.zeta)
    }
}

fn exclusion_distance(kx: f64, kappa: f64, a: f64, zeta: C64) -> f64 {
    let puncture = kx.hypot(a);
    let pole = (kx - zeta.re).hypot(kappa - zeta.im);
    puncture.min(pole)
}

/// `(kx u + a ky v, v)` for a section with transverse momentum `ky`.
fn bc_column(kx: f64, a: f64, ky: C64, psi: &Vec3) -> (C64, C64) {
    (psi[1] * kx + ky * psi[2] * a, psi[2])
}

/// The determinant `g(kx, s kappa, a)` for `s = +1` or `-1`.
fn g_det(params: &ModelParams, pt: &ScatterPoint, sign: f64) -> Result<C64> {
    let (kx, a) = (pt.kx, pt.a);
    let ky = sign * pt.kappa;
    let omega = omega_plus(params, kx, pt.kappa);
    let kev = kappa_ev(params, kx, pt.kappa)?;
    let psi = section_zeta(params, omega, kx, ky, pt.zeta)?;
    let ev = section_inf(params, omega, kx, kev)?;
    let (r1, v1) = bc_column(kx, a, c(ky, 0.0), &psi);
    let (r2, v2) = bc_column(kx, a, kev, &ev);
    let g = r1 * v2 - r2 * v1;
    let scale = r1.hypot(v1) * r2.hypot(v2);
    if !(g.norm() > 1e-12 * scale) {
        return Err(Error::SingularG { kx, kappa: ky, a });
    }
    Ok(g)
}

trait Hypot {
    fn hypot(self, other: C64) -> f64;
}

impl Hypot for C64 {
    fn hypot(self, other: C64) -> f64 {
        (self.norm_sqr() + other.norm_sqr()).sqrt()
    }
}

/// `S = -g(kx, -kappa, a) / g(kx, kappa, a)`.
pub fn scattering_amplitude(params: &ModelParams, pt: &ScatterPoint) -> Result<C64> {
    let out = g_det(params, pt, 1.0)?;
    let inc = g_det(params, pt, -1.0)?;
    Ok(-inc / out)
}

/// Closed loops in `(kx, kappa, a)`, each parametrized by `t` in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum LoopKind {
    /// `(R cos th, eps, R sin th)`, `th` from `-pi` to `pi`.
    CrEpsilon { r: f64, eps: f64 },
    /// `(delta cos al, 1 + delta sin al, a0)`, `al` from `-pi` to `pi`.
    Gamma { delta: f64, a0: f64 },
    /// `(alpha cos th, 1 - alpha sin th, alpha sin th)`, `th` from `0` to `2 pi`.
    EllAlpha { alpha: f64 },
    /// Straight segments through the vertices, closed back to the first;
    /// each segment takes an equal share of `t`.
    Polyline(Vec<[f64; 3]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterLoop {
    pub kind: LoopKind,
    pub samples: usize,
    pub zeta: C64,
}

impl ScatterLoop {
    pub fn new(kind: LoopKind, samples: usize) -> Self {
        ScatterLoop { kind, samples, zeta: C64::i() }
    }

    /// Square of side 1 in the plane `kappa = eps` around `kx = a = 0`.
    pub fn square_c(eps: f64, samples: usize) -> Self {
        Self::new(
            LoopKind::Polyline(alloc::vec![[0.5, eps, -0.5], [0.5, eps, 0.5], [-0.5, eps, 0.5], [-0.5, eps, -0.5]]),
            samples,
        )
    }

    /// Square of side 1 in the plane `a = -1` around `(kx, kappa) = (0, 1)`.
    pub fn square_gamma(samples: usize) -> Self {
        Self::new(
            LoopKind::Polyline(alloc::vec![[0.5, 0.5, -1.0], [0.5, 1.5, -1.0], [-0.5, 1.5, -1.0], [-0.5, 0.5, -1.0]]),
            samples,
        )
    }

    /// Square in the plane `kappa + a = 1` around `(0, 1, 0)`.
    pub fn square_l(samples: usize) -> Self {
        Self::new(
            LoopKind::Polyline(alloc::vec![[0.5, 1.5, -0.5], [0.5, 0.5, 0.5], [-0.5, 0.5, 0.5], [-0.5, 1.5, -0.5]]),
            samples,
        )
    }

    pub fn label(&self) -> alloc::string::String {
        match &self.kind {
            LoopKind::CrEpsilon { r, eps } => format!("C_R(R={r},eps={eps})"),
            LoopKind::Gamma { delta, a0 } => format!("Gamma(delta={delta},a0={a0})"),
            LoopKind::EllAlpha { alpha } => format!("ell(alpha={alpha})"),
            LoopKind::Polyline(v) => format!("polyline({} vertices)", v.len()),
        }
    }

    pub fn point_at(&self, t: f64) -> [f64; 3] {
        match &self.kind {
            LoopKind::CrEpsilon { r, eps } => {
                let th = -PI + 2.0 * PI * t;
                [r * th.cos(), *eps, r * th.sin()]
            }
            LoopKind::Gamma { delta, a0 } => {
                let al = -PI + 2.0 * PI * t;
                [delta * al.cos(), 1.0 + delta * al.sin(), *a0]
            }
            LoopKind::EllAlpha { alpha } => {
                let th = 2.0 * PI * t;
                [alpha * th.cos(), 1.0 - alpha * th.sin(), alpha * th.sin()]
            }
            LoopKind::Polyline(v) => {
                let n = v.len();
                let s = (t * n as f64).clamp(0.0, n as f64);
                let i = (s.floor() as usize).min(n - 1);
                let u = s - i as f64;
                let (p, q) = (v[i], v[(i + 1) % n]);
                [p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1]), p[2] + u * (q[2] - p[2])]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 8 {
            return config(format!("scatter loop needs at least 8 samples, got {}", self.samples));
        }
        if !(self.zeta.im > 0.0) {
            return config("reference zeta must lie in the upper half plane");
        }
        match &self.kind {
            LoopKind::CrEpsilon { r, eps } => {
                if !(*r > 0.0 && *eps > 0.0) {
                    return config(format!("C_R needs R > 0 and eps > 0, got R = {r}, eps = {eps}"));
                }
            }
            LoopKind::Gamma { delta, a0 } => {
                if !(*delta > 0.0 && *delta < 1.0 && *a0 != 0.0 && a0.is_finite()) {
                    return config(format!("Gamma needs 0 < delta < 1 and a0 != 0, got delta = {delta}, a0 = {a0}"));
                }
                if self.zeta.re.hypot(self.zeta.im - 1.0) >= *delta {
                    return config("zeta must lie inside Gamma");
                }
            }
            LoopKind::EllAlpha { alpha } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return config(format!("ell needs 0 < alpha < 1, got {alpha}"));
                }
            }
            LoopKind::Polyline(v) => {
                if v.len() < 3 || v.iter().flatten().any(|x| !x.is_finite()) {
                    return config("polyline needs at least 3 finite vertices");
                }
            }
        }
        let probe = 4096.max(self.samples);
        for i in 0..probe {
            let [kx, kappa, a] = self.point_at(i as f64 / probe as f64);
            if !(kappa > 0.0) || exclusion_distance(kx, kappa, a, self.zeta) < LOOP_MARGIN {
                return Err(Error::Domain);
            }
        }
        Ok(())
    }
}

/// One sample along a loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterSample {
    pub t: f64,
    pub kx: f64,
    pub kappa: f64,
    pub a: f64,
    pub s: C64,
    pub arg_unwrapped: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindingResult {
    pub value: i64,
    pub total_phase: f64,
    pub max_step: f64,
    pub samples: Vec<(f64, C64, f64)>,
}

/// Winding number of a closed unimodular curve `s(t)`, `t` in `[0, 1]`.
///
/// Starts from `n` uniform samples. An interval is accepted when its phase
/// increment is below `pi / 2` and the two half steps add up to it and are
/// close to each other; otherwise it is bisected. Returns the samples with their unwrapped
/// arguments.
pub fn winding_of<F>(s: F, n: usize) -> Result<WindingResult>
where
    F: Fn(f64) -> Result<C64> + Sync + Send,
{
    if n < 2 {
        return config("winding needs at least 2 samples");
    }
    let ts: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let values: Vec<C64> = par::map(&ts, |&t| s(t)).into_iter().collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(ts.len());
    let mut phase = values[0].arg();
    let mut max_step: f64 = 0.0;
    out.push((0.0, values[0], phase));
    for i in 0..n {
        let mut stack = alloc::vec![(ts[i + 1], values[i + 1], 0u32)];
        let (mut t0, mut s0) = (ts[i], values[i]);
        while let Some((t1, s1, depth)) = stack.pop() {
            let tm = 0.5 * (t0 + t1);
            let sm = s(tm)?;
            let d = (s1 / s0).arg();
            let (d1, d2) = ((sm / s0).arg(), (s1 / sm).arg());
            let consistent = (d1 + d2 - d).abs() < 1e-6;
            let smooth = (d1 - d2).abs() < 0.5 * d.abs() + 0.02;
            if d.abs() < 0.5 * PI && consistent && (smooth || depth >= MAX_UNWRAP_DEPTH) {
                for (tt, ss, dd) in [(tm, sm, d1), (t1, s1, d2)] {
                    phase += dd;
                    max_step = max_step.max(dd.abs());
                    out.push((tt, ss, phase));
                }
                t0 = t1;
                s0 = s1;
            } else if depth >= MAX_UNWRAP_DEPTH {
                return Err(Error::UnwrapFailure { at: t0 });
            } else {
                stack.push((t1, s1, depth + 1));
                stack.push((tm, sm, depth + 1));
            }
        }
    }
    let total = phase - values[0].arg();
    let turns = total / (2.0 * PI);
    let value = turns.round();
    if (turns - value).abs() > 1e-3 {
        return Err(Error::Assertion(format!("winding residual {:e} turns", turns - value)));
    }
    Ok(WindingResult { value: value as i64, total_phase: total, max_step, samples: out })
}

/// Winding of `S` along a loop.
pub fn winding_number(params: &ModelParams, lp: &ScatterLoop) -> Result<WindingResult> {
    lp.validate()?;
    winding_of(
        |t| {
            let [kx, kappa, a] = lp.point_at(t);
            scattering_amplitude(params, &ScatterPoint::with_zeta(kx, kappa, a, lp.zeta)?)
        },
        lp.samples,
    )
}

/// Samples of a winding result with their loop coordinates.
pub fn loop_samples(lp: &ScatterLoop, w: &WindingResult) -> Vec<ScatterSample> {
    w.samples
        .iter()
        .map(|&(t, s, arg)| {
            let [kx, kappa, a] = lp.point_at(t);
            ScatterSample { t, kx, kappa, a, s, arg_unwrapped: arg }
        })
        .collect()
}

/// Winding of `S` along `C_R^eps` and along `C_R^{eps/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevinsonCount {
    pub value: i64,
    pub half_eps: i64,
}

impl LevinsonCount {
    pub fn converged(&self) -> bool {
        self.value == self.half_eps
    }
}

pub fn levinson_edge_count(params: &ModelParams, r: f64, eps: f64, samples: usize) -> Result<LevinsonCount> {
    if !(eps > 0.0 && eps < 1.0) {
        return config(format!("eps must lie in (0, Im zeta) = (0, 1), got {eps}"));
    }
    let at = |e: f64| winding_number(params, &ScatterLoop::new(LoopKind::CrEpsilon { r, eps: e }, samples)).map(|w| w.value);
    Ok(LevinsonCount { value: at(eps)?, half_eps: at(0.5 * eps)? })
}

/// Limits of the sections on `ell_alpha` as `alpha -> 0`:
/// `u^zeta -> (f - nu) / sqrt(1 + (f - nu)^2) e^{2 i th}`, `v^zeta -> i e^{2 i th}`,
/// `kappa_ev -> i sqrt(1 + 1/nu^2 - 2 f / nu)`,
/// `u^inf -> (1 - f nu + nu^2) / (nu sqrt(1 + (f - nu)^2))`, `v^inf -> i`.
pub fn section_limits(params: &ModelParams, theta: f64) -> [C64; 5] {
    let (f, nu) = (params.f(), params.nu());
    let e2 = C64::from_polar(1.0, 2.0 * theta);
    let norm = (1.0 + (f - nu).powi(2)).sqrt();
    [
        e2 * ((f - nu) / norm),
        C64::i() * e2,
        c(0.0, (1.0 + 1.0 / (nu * nu) - 2.0 * f / nu).sqrt()),
        c((1.0 - f * nu + nu * nu) / (nu * norm), 0.0),
        C64::i(),
    ]
}

/// `[u^zeta, v^zeta, kappa_ev, u^inf, v^inf]` at `(alpha cos th, 1 - alpha sin th)`.
pub fn sections_on_ell(params: &ModelParams, alpha: f64, theta: f64) -> Result<[C64; 5]> {
    let (kx, kappa) = (alpha * theta.cos(), 1.0 - alpha * theta.sin());
    let omega = omega_plus(params, kx, kappa);
    let kev = kappa_ev(params, kx, kappa)?;
    let z = section_zeta(params, omega, kx, kappa, C64::i())?;
    let inf = section_inf(params, omega, kx, kev)?;
    Ok([z[1], z[2], kev, inf[1], inf[2]])
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllAlphaReport {
    /// `(alpha, winding)` for each requested `alpha`.
    pub windings: Vec<(f64, i64)>,
    /// `(alpha, max_th |section - limit|)` over the five quantities.
    pub deviations: Vec<(f64, f64)>,
    /// Largest `deviation / alpha`.
    pub fitted_constant: f64,
    /// Windings along the square loops `C`, `Gamma` and `L`.
    pub squares: [i64; 3],
}

impl EllAlphaReport {
    pub fn holds(&self) -> bool {
        self.windings.iter().all(|w| w.1 == 0)
            && self.squares[0] - self.squares[1] == self.squares[2]
            && self.squares[2] == 0
            && self.fitted_constant.is_finite()
    }
}

pub fn ell_alpha_limit_check(params: &ModelParams, alphas: &[f64], samples: usize) -> Result<EllAlphaReport> {
    if alphas.is_empty() || alphas.iter().any(|&a| !(a > 0.0 && a <= 0.3)) {
        return config("alpha values must lie in (0, 0.3]");
    }
    let mut windings = Vec::new();
    let mut deviations = Vec::new();
    let mut fitted_constant: f64 = 0.0;
    for &alpha in alphas {
        let w = winding_number(params, &ScatterLoop::new(LoopKind::EllAlpha { alpha }, samples))?;
        windings.push((alpha, w.value));
        let mut dev: f64 = 0.0;
        for i in 0..64 {
            let th = 2.0 * PI * i as f64 / 64.0;
            let got = sections_on_ell(params, alpha, th)?;
            let lim = section_limits(params, th);
            for (g, l) in got.iter().zip(lim.iter()) {
                dev = dev.max((g - l).norm());
            }
        }
        deviations.push((alpha, dev));
        fitted_constant = fitted_constant.max(dev / alpha);
    }
    let wind = |lp: ScatterLoop| winding_number(params, &lp).map(|w| w.value);
    let squares = [wind(ScatterLoop::square_c(0.05, samples))?, wind(ScatterLoop::square_gamma(samples))?, wind(ScatterLoop::square_l(samples))?];
    Ok(EllAlphaReport { windings, deviations, fitted_constant, squares })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn kappa_ev_value() {
        let k = kappa_ev(&p(), 0.0, 1.0).unwrap();
        assert!((k - c(0.0, 4.0)).norm() < 1e-14);
    }

    #[test]
    fn synthetic_winding() {
        let w = winding_of(|t| Ok(C64::from_polar(1.0, -2.0 * 2.0 * PI * t)), 16).unwrap();
        assert_eq!(w.value, -2);
        assert!(w.max_step < 0.5 * PI);
    }

    #[test]
    fn coarse_samples_refine() {
        let w = winding_of(|t| Ok(C64::from_polar(1.0, 7.0 * 2.0 * PI * t)), 16).unwrap();
        assert_eq!(w.value, 7);
    }

    #[test]
    fn domain_guards() {
        assert_eq!(ScatterPoint::new(0.0, 0.5, 0.0), Err(Error::Domain));
        assert_eq!(ScatterPoint::new(0.0, 1.0, 3.0), Err(Error::Domain));
        assert!(ScatterPoint::new(0.0, 0.5, 1e-3).is_ok());
        assert!(ScatterPoint::new(0.1, -0.5, 1.0).unwrap_err().is_config());
    }

    #[test]
    fn unimodular() {
        for &(kx, kappa, a) in &[(0.3, 0.2, -1.0), (-2.0, 3.0, 0.5), (0.0, 0.4, 2.0), (1.0, 1.0, 0.0)] {
            let s = scattering_amplitude(&p(), &ScatterPoint::new(kx, kappa, a).unwrap()).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-9, "{s}");
        }
    }

    #[test]
    fn polyline_closes() {
        let lp = ScatterLoop::square_l(64);
        let (a, b) = (lp.point_at(0.0), lp.point_at(1.0));
        assert_eq!(a, b);
        assert!(lp.validate().is_ok());
    }
}

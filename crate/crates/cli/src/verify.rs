//! The acceptance suite: twelve criteria with pinned tolerances.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use topoflow_core::fd::{fd_edge_eigenvalues, FdConfig, PerturbationSpec};
use topoflow_core::flow::{
    edge_index_crossings, edge_index_merges, pi1_decomposition_check, robin_lowest_eigenvalue, robin_pump_flow,
    spectral_flow, spectral_flow_minus, spectral_flow_plus, trace_branches, Backend, Fiducial, FlowOptions, Gap,
    LoopSpec, MergeBand, Orientation,
};
use topoflow_core::halfline::{dispersion_residual, essential_gap_edge, transverse_roots, upper_gap_eigenvalues};
use topoflow_core::linalg::eigvals_herm3;
use topoflow_core::model::{
    beta_map, bulk_bands, bulk_hamiltonian, chern_number, characteristic_quartic, deficiency_residual, omega_plus,
    section_inf, BandIndex, BulkMomentum, Deficiency,
};
use topoflow_core::scatter::{
    ell_alpha_limit_check, scattering_amplitude, winding_number, winding_of, LoopKind, ScatterLoop, ScatterPoint,
};
use topoflow_core::{BoundaryParam, CylinderPoint, Error, ModelParams, C64};

use crate::config::RunConfig;
use crate::{CliError, CliResult};

pub const CHERN_GRIDS: [usize; 3] = [50, 100, 200];
pub const CHERN_TIME_LIMIT: Duration = Duration::from_secs(30);
pub const RADII: [f64; 3] = [1.0, 2.0, 4.0];
pub const LEVELS: [f64; 3] = [0.25, 0.5, 0.75];
pub const SEMI_SAMPLES: usize = 512;
/// fd backend for the crossing counts: coarser than the flow grid, which
/// keeps localized branches well separated from the bulk edge.
pub const CROSSING_FD: (f64, usize) = (20.0, 2000);
pub const CROSSING_FD_SAMPLES: usize = 128;
pub const SCATTER_EPS: f64 = 0.05;
pub const SCATTER_SAMPLES: usize = 256;
pub const PHASE_RESIDUAL: f64 = 1e-3;
pub const GAMMA_LOOPS: [(f64, f64); 3] = [(0.5, -1.0), (0.9, -1.0), (0.5, -3.0)];
pub const ALPHAS: [f64; 3] = [0.2, 0.1, 0.05];
/// Bound on `max |section - limit| / alpha`.
pub const SECTION_CONSTANT: f64 = 5.0;
pub const HOMOTOPY_KX: [f64; 2] = [0.5, 3.0];
pub const PERTURBATIONS: [f64; 3] = [0.05, 0.1, 0.2];
pub const FLOW_FD: (f64, usize) = (40.0, 4000);
pub const FD_FLOW_SAMPLES: usize = 128;
pub const ROBIN_FD: (f64, usize) = (20.0, 4000);
pub const ROBIN_A: [f64; 3] = [0.5, 1.0, 2.0];
pub const ROBIN_TOL: f64 = 1e-3;
pub const ROBIN_LEVELS: [f64; 2] = [-1.0, -2.0];
pub const ORACLE_POINTS: usize = 50;
pub const ORACLE_TOL: f64 = 1e-4;
/// Coarse fd grid of the extrapolation; the fine grid doubles `n`.
pub const ORACLE_FD: (f64, usize) = (20.0, 4000);
/// Distances from the flat band and from the band edge below which
/// eigenvalues are not compared.
pub const ORACLE_MARGINS: (f64, f64) = (0.05, 0.02);
/// Pairing distance between the two fd resolutions.
pub const RICHARDSON_PAIRING: f64 = 1e-2;
pub const PROPERTY_SAMPLES: usize = 2000;
pub const DEFICIENCY_TOL: f64 = 1e-6;
pub const TOTAL_TIME_LIMIT: Duration = Duration::from_secs(600);

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2}: {} {} ({:.1} s) {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub criteria: Vec<Criterion>,
}

impl Report {
    pub fn failed(&self) -> Vec<u32> {
        self.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }
}

type Check = CliResult<(bool, String)>;

/// Runs all criteria in order, calling `done` after each. Numerical failures
/// fail the criterion; configuration errors abort the run.
pub fn run(cfg: &RunConfig, mut done: impl FnMut(&Criterion)) -> CliResult<Report> {
    let p = cfg.params()?;
    let start = Instant::now();
    let mut criteria = Vec::new();
    let mut record = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Check| -> CliResult<()> {
        info!("criterion {id}: {name}");
        let t = Instant::now();
        let (passed, detail) = match f() {
            Ok(r) => r,
            Err(CliError::Numerical(e)) => (false, format!("numerical failure: {e}")),
            Err(e) => return Err(e),
        };
        let c = Criterion { id, name, passed, detail, elapsed: t.elapsed() };
        done(&c);
        criteria.push(c);
        Ok(())
    };
    let mut semi_upper = Vec::new();
    record(1, "Chern numbers", &mut || chern(&p))?;
    record(2, "edge crossing counts", &mut || crossings(&p, &mut semi_upper))?;
    record(3, "relative Levinson winding", &mut || levinson(&p, &semi_upper))?;
    record(4, "bulk-scattering winding", &mut || gamma(&p))?;
    record(5, "ell_alpha winding and section limits", &mut || ell_alpha(&p))?;
    record(6, "spectral flow structure", &mut || pi1(&p))?;
    record(7, "perturbation robustness", &mut || perturbed(&p))?;
    record(8, "lower gap flow", &mut || lower_gap(&p))?;
    record(9, "Robin pump", &mut robin)?;
    record(10, "semi-analytic vs fd spectra", &mut || oracle(&p, cfg.seed))?;
    record(11, "fiducial independence", &mut || fiducials(&p))?;
    record(12, "property suites", &mut || properties(&p, cfg.seed, start))?;
    let passed = criteria.iter().all(|c| c.passed);
    Ok(Report { passed, criteria })
}

fn num(e: Error) -> CliError {
    CliError::from(e)
}

fn chern(p: &ModelParams) -> Check {
    let t = Instant::now();
    let mut got = Vec::new();
    for n in CHERN_GRIDS {
        let c: Vec<i32> = [BandIndex::Minus, BandIndex::Zero, BandIndex::Plus]
            .iter()
            .map(|&b| chern_number(p, b, n))
            .collect::<Result<_, _>>()
            .map_err(num)?;
        got.push((n, c));
    }
    let el = t.elapsed();
    let ok = got.iter().all(|(_, c)| c == &[-2, 0, 2]) && el < CHERN_TIME_LIMIT;
    Ok((ok, format!("{got:?} in {:.1} s", el.as_secs_f64())))
}

fn crossings(p: &ModelParams, semi_upper: &mut Vec<Vec<topoflow_core::flow::EdgeBranch>>) -> Check {
    let fd = FdConfig::new(CROSSING_FD.0, CROSSING_FD.1).map_err(num)?;
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, backend, samples) in
        [("semi", Backend::SemiAnalytic, SEMI_SAMPLES), ("fd", Backend::FdOracle(fd), CROSSING_FD_SAMPLES)]
    {
        let mut counts = Vec::new();
        for r in RADII {
            let lp = LoopSpec::circle(r, samples).map_err(num)?;
            let branches = trace_branches(p, &lp, Gap::Upper, &backend).map_err(num)?;
            for mu in LEVELS {
                let v = edge_index_crossings(p, &branches, Gap::Upper, mu).map_err(num)?.value;
                ok &= v == 2;
                counts.push(v);
            }
            if name == "semi" {
                semi_upper.push(branches);
            }
        }
        detail.push(format!("{name} {counts:?}"));
    }
    Ok((ok, detail.join(", ")))
}

fn levinson(p: &ModelParams, semi_upper: &[Vec<topoflow_core::flow::EdgeBranch>]) -> Check {
    let mut ok = semi_upper.len() == RADII.len();
    let mut detail = Vec::new();
    for (i, r) in RADII.into_iter().enumerate() {
        let w = winding_number(p, &ScatterLoop::new(LoopKind::CrEpsilon { r, eps: SCATTER_EPS }, SCATTER_SAMPLES))
            .map_err(num)?;
        let residual = (w.total_phase / (2.0 * PI) - w.value as f64).abs();
        let merges = semi_upper.get(i).map(|b| edge_index_merges(b, MergeBand::PlusBelow).value);
        ok &= w.value == 2 && merges == Some(2) && residual < PHASE_RESIDUAL;
        detail.push(format!("R={r}: winding {} n_b+ {merges:?} residual {residual:.1e}", w.value));
    }
    Ok((ok, detail.join("; ")))
}

fn gamma(p: &ModelParams) -> Check {
    let mut got = Vec::new();
    for (delta, a0) in GAMMA_LOOPS {
        let w = winding_number(p, &ScatterLoop::new(LoopKind::Gamma { delta, a0 }, SCATTER_SAMPLES)).map_err(num)?;
        got.push(w.value);
    }
    Ok((got.iter().all(|&w| w == 2), format!("{GAMMA_LOOPS:?} -> {got:?}")))
}

fn ell_alpha(p: &ModelParams) -> Check {
    let r = ell_alpha_limit_check(p, &ALPHAS, SCATTER_SAMPLES).map_err(num)?;
    let ok = r.holds() && r.fitted_constant <= SECTION_CONSTANT;
    Ok((
        ok,
        format!(
            "windings {:?}, deviation/alpha <= {:.3}, squares C {} Gamma {} L {}",
            r.windings.iter().map(|w| w.1).collect::<Vec<_>>(),
            r.fitted_constant,
            r.squares[0],
            r.squares[1],
            r.squares[2]
        ),
    ))
}

fn pi1(p: &ModelParams) -> Check {
    let r = pi1_decomposition_check(p, &Backend::SemiAnalytic, SEMI_SAMPLES, &HOMOTOPY_KX).map_err(num)?;
    let ok = r.holds() && r.ell_plus == -1 && r.ell_minus == 1 && r.ell_zero == -2;
    Ok((
        ok,
        format!(
            "l+ {} l- {} l0 {} homotopy {:?} {}",
            r.ell_plus,
            r.ell_minus,
            r.ell_zero,
            r.homotopy,
            r.violations.join("; ")
        ),
    ))
}

fn perturbed(p: &ModelParams) -> Check {
    let backend = Backend::FdOracle(FdConfig::new(FLOW_FD.0, FLOW_FD.1).map_err(num)?);
    let lp = LoopSpec::around_puncture(FD_FLOW_SAMPLES).map_err(num)?;
    let mut got = Vec::new();
    for c in PERTURBATIONS {
        got.push(spectral_flow_plus(p, &lp, &PerturbationSpec::exp_identity(c), &backend).map_err(num)?);
    }
    Ok((got.iter().all(|&v| v == -2), format!("c = {PERTURBATIONS:?} -> {got:?}")))
}

fn lower_gap(p: &ModelParams) -> Check {
    let none = PerturbationSpec::None;
    let semi = LoopSpec::around_puncture(SEMI_SAMPLES).map_err(num)?;
    let plus = spectral_flow_plus(p, &semi, &none, &Backend::SemiAnalytic).map_err(num)?;
    let minus = spectral_flow_minus(p, &semi, &none, &Backend::SemiAnalytic).map_err(num)?;
    let fd = Backend::FdOracle(FdConfig::new(FLOW_FD.0, FLOW_FD.1).map_err(num)?);
    let lp = LoopSpec::around_puncture(FD_FLOW_SAMPLES).map_err(num)?;
    let fd_minus = spectral_flow_minus(p, &lp, &none, &fd).map_err(num)?;
    let ok = plus == -2 && minus == -2 && fd_minus == -2;
    Ok((ok, format!("Sf+ {plus}, Sf- {minus} (semi), Sf- {fd_minus} (fd)")))
}

fn robin() -> Check {
    let cfg = FdConfig::new(ROBIN_FD.0, ROBIN_FD.1).map_err(num)?;
    let mut ok = true;
    let mut errs = Vec::new();
    for a in ROBIN_A {
        let e = robin_lowest_eigenvalue(&cfg, a).map_err(num)? + a * a;
        ok &= e.abs() < ROBIN_TOL;
        errs.push(format!("{e:.1e}"));
    }
    let mut flows = Vec::new();
    for mu in ROBIN_LEVELS {
        let f = robin_pump_flow(&cfg, mu, 256, Orientation::Positive).map_err(num)?;
        let b = robin_pump_flow(&cfg, mu, 256, Orientation::Negative).map_err(num)?;
        ok &= f == -1 && b == 1;
        flows.push((mu, f, b));
    }
    Ok((ok, format!("eigenvalue errors [{}], (mu, flow, reversed) {flows:?}", errs.join(", "))))
}

/// fd edge eigenvalues at two resolutions, Richardson-extrapolated.
fn fd_extrapolated(p: &ModelParams, pt: &CylinderPoint) -> topoflow_core::Result<Vec<f64>> {
    let coarse = FdConfig::new(ORACLE_FD.0, ORACLE_FD.1)?;
    let fine = FdConfig::new(ORACLE_FD.0, 2 * ORACLE_FD.1)?;
    let (f, _) = fd_edge_eigenvalues(p, pt, &fine, &PerturbationSpec::None)?;
    let (c, _) = fd_edge_eigenvalues(p, pt, &coarse, &PerturbationSpec::None)?;
    Ok(f.iter()
        .filter_map(|&x| {
            let y = c.iter().copied().min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))?;
            ((y - x).abs() < RICHARDSON_PAIRING).then(|| (4.0 * x - y) / 3.0)
        })
        .collect())
}

fn oracle(p: &ModelParams, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> =
        (0..ORACLE_POINTS).map(|_| (rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5))).collect();
    let spectra: Vec<(f64, Vec<f64>, Vec<f64>)> = points
        .par_iter()
        .map(|&(kx, phi)| {
            let pt = CylinderPoint::new(kx, BoundaryParam::from_angle(phi))?;
            Ok((kx, upper_gap_eigenvalues(p, &pt)?, fd_extrapolated(p, &pt)?))
        })
        .collect::<topoflow_core::Result<_>>()
        .map_err(num)?;
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    let mut compared = 0;
    for (kx, semi, fd) in spectra {
        // Modes close to the flat band or the band edge are too extended for the fd box.
        let edge = essential_gap_edge(p, kx);
        let inside = |e: f64| e > ORACLE_MARGINS.0 && e < edge - ORACLE_MARGINS.1;
        for e in fd.iter().filter(|&&e| inside(e)) {
            worst = worst.max(semi.iter().map(|s| (s - e).abs()).fold(f64::INFINITY, f64::min));
            compared += 1;
        }
        missing += semi
            .iter()
            .filter(|&&s| inside(s) && !fd.iter().any(|e| (e - s).abs() < ORACLE_TOL))
            .count();
    }
    let ok = worst < ORACLE_TOL && missing == 0;
    Ok((ok, format!("{compared} eigenvalues, max deviation {worst:.1e}, unmatched semi-analytic {missing}")))
}

fn fiducials(p: &ModelParams) -> Check {
    let lp = LoopSpec::around_puncture(SEMI_SAMPLES).map_err(num)?;
    let mut got = Vec::new();
    for fid in [
        Fiducial::Constant(0.25),
        Fiducial::Constant(0.75),
        Fiducial::curve(|t| 0.5 + 0.2 * (2.0 * PI * t).sin()),
        Fiducial::Default,
    ] {
        let opts = FlowOptions { fiducial: fid, ..FlowOptions::new(Gap::Upper) };
        got.push(spectral_flow(p, &lp, &Backend::SemiAnalytic, &opts).map_err(num)?.value);
    }
    Ok((got.iter().all(|&v| v == -2), format!("0.25, 0.75, sinusoid, default -> {got:?}")))
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn properties(p: &ModelParams, seed: u64, start: Instant) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut bad = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok && bad.len() < 5 {
            bad.push(what);
        }
    };
    for _ in 0..PROPERTY_SAMPLES {
        let (kx, ky): (f64, f64) = (rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
        let h = bulk_hamiltonian(p, kx, ky);
        let b = bulk_bands(p, &BulkMomentum::finite(kx, ky));
        let ev = eigvals_herm3(&h);
        let scale = 1.0 + b.plus;
        let spectrum = (ev[0] - b.minus).abs() + ev[1].abs() + (ev[2] - b.plus).abs();
        check(h == h.adjoint() && spectrum < 1e-10 * scale, format!("hamiltonian at ({kx}, {ky})"));

        let (kx, ky): (f64, f64) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        if kx.hypot(ky) > 1e-3 {
            let w = omega_plus(p, kx, ky);
            match section_inf(p, w, kx, c(ky)) {
                Ok(psi) => {
                    let r = (bulk_hamiltonian(p, kx, ky) * psi - psi * c(w)).norm();
                    check(r <= 1e-10 * psi.norm() * (1.0 + w), format!("section residual at ({kx}, {ky})"));
                    check((psi.norm_squared() - 2.0).abs() < 1e-10, format!("section norm at ({kx}, {ky})"));
                }
                Err(e) => check(false, format!("section at ({kx}, {ky}): {e}")),
            }
        }

        let kx: f64 = rng.gen_range(-3.0..3.0);
        let w = rng.gen_range(0.05..0.95) * essential_gap_edge(p, kx);
        match transverse_roots(p, kx, w) {
            Ok(roots) => {
                for ky in roots {
                    let r = dispersion_residual(p, kx, w, ky).norm();
                    check(r <= 1e-10 * (1.0 + ky.norm_sqr().powi(2)), format!("root residual at ({kx}, {w})"));
                }
            }
            Err(e) => check(false, format!("roots at ({kx}, {w}): {e}")),
        }

        let (kx, kappa, a): (f64, f64, f64) =
            (rng.gen_range(-4.0..4.0), rng.gen_range(0.01..4.0), rng.gen_range(-6.0..6.0));
        if let Ok(pt) = ScatterPoint::new(kx, kappa, a) {
            match scattering_amplitude(p, &pt) {
                Ok(s) => check((s.norm() - 1.0).abs() < 1e-9, format!("|S| at ({kx}, {kappa}, {a})")),
                Err(e) => check(false, format!("S at ({kx}, {kappa}, {a}): {e}")),
            }
        }

        let (kx, a): (f64, f64) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        if let Ok(pt) = CylinderPoint::from_kx_a(kx, a) {
            check((beta_map(&pt).norm() - 1.0).abs() < 1e-14, format!("|beta| at ({kx}, {a})"));
        }

        let (nu, l): (f64, f64) = (rng.gen_range(0.01..1.0), rng.gen_range(-50.0..50.0));
        let t = 2.0 * nu * nu * l * l - 1.0;
        check(
            (characteristic_quartic(nu, l) - t * t).abs() <= 1e-12 * (1.0 + t * t),
            format!("quartic at ({nu}, {l})"),
        );
    }
    for kx in [0.1, 1.0, 10.0, -0.1, -1.0, -10.0] {
        let w = winding_of(
            |t| {
                let bc = if t == 0.0 || t == 1.0 {
                    BoundaryParam::infinity()
                } else {
                    BoundaryParam::from_angle(-FRAC_PI_2 + PI * t)
                };
                Ok(beta_map(&CylinderPoint::new(kx, bc)?))
            },
            256,
        )
        .map_err(num)?;
        check(w.value == -kx.signum() as i64, format!("beta winding at kx = {kx}: {}", w.value));
    }
    let mut worst_deficiency: f64 = 0.0;
    for which in Deficiency::ALL {
        worst_deficiency = worst_deficiency.max(deficiency_residual(p, which, 10.0, 1e-3).map_err(num)?);
    }
    check(worst_deficiency < DEFICIENCY_TOL, format!("deficiency residual {worst_deficiency:e}"));
    let nu = p.nu();
    let root = 1.0 / (2f64.sqrt() * nu);
    for l in [root, -root] {
        let slope = (characteristic_quartic(nu, l + 1e-5) - characteristic_quartic(nu, l - 1e-5)) / 2e-5;
        check(characteristic_quartic(nu, l).abs() < 1e-12 && slope.abs() < 1e-6, format!("double root at {l}"));
    }
    let total = start.elapsed();
    check(total < TOTAL_TIME_LIMIT, format!("suite ran {:.0} s", total.as_secs_f64()));
    let ok = bad.is_empty();
    let detail = if ok {
        format!(
            "{PROPERTY_SAMPLES} samples per property, deficiency residual {worst_deficiency:.1e}, suite {:.0} s",
            total.as_secs_f64()
        )
    } else {
        bad.join("; ")
    };
    Ok((ok, detail))
}

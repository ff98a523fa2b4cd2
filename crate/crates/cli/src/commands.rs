//! The subcommands. Each validates the whole configuration first and writes
//! its files only after every computation succeeded.

use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;
use topoflow_core::flow::{
    edge_index_crossings, edge_index_merges, spectral_flow, trace_branches, BranchEnd, FlowOptions, FlowResult,
    Gap, LoopSpec, MergeBand, Orientation, robin_lowest_eigenvalue, robin_pump_flow,
};
use topoflow_core::fd::FdConfig;
use topoflow_core::halfline::essential_gap_edge;
use topoflow_core::model::{bulk_bands, chern_number, BandIndex, BulkMomentum};
use topoflow_core::scatter::{loop_samples, winding_number};

use crate::config::{GapName, RunConfig};
use crate::output::{fmt_f64, write_json, Csv, Written};
use crate::{verify, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ChernTriple {
    pub minus: i32,
    pub zero: i32,
    pub plus: i32,
}

pub fn chern_triple(cfg: &RunConfig, grid: usize) -> CliResult<ChernTriple> {
    let p = cfg.params()?;
    Ok(ChernTriple {
        minus: chern_number(&p, BandIndex::Minus, grid)?,
        zero: chern_number(&p, BandIndex::Zero, grid)?,
        plus: chern_number(&p, BandIndex::Plus, grid)?,
    })
}

pub fn bulk(cfg: &RunConfig, out: &Path) -> CliResult<Written> {
    let p = cfg.params()?;
    let n = cfg.band_grid;
    let e = cfg.band_extent;
    let mut csv = Csv::new(&["kx", "ky", "omega_minus", "omega_zero", "omega_plus"]);
    for i in 0..n {
        let kx = -e + 2.0 * e * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let ky = -e + 2.0 * e * j as f64 / (n - 1) as f64;
            let b = bulk_bands(&p, &BulkMomentum::finite(kx, ky));
            csv.floats(&[kx, ky, b.minus, b.zero, b.plus]);
        }
    }
    let chern = chern_triple(cfg, cfg.chern_grid)?;
    info!("chern numbers {chern:?} at grid {}", cfg.chern_grid);
    let mut w = Written::default();
    csv.write(w.push(out.join("bands.csv")))?;
    write_json(w.push(out.join("chern.json")), &chern)?;
    Ok(w)
}

fn loop_specs(cfg: &RunConfig) -> CliResult<Vec<(String, LoopSpec)>> {
    if cfg.loops.is_empty() {
        return Err(CliError::Config("no loops configured".into()));
    }
    cfg.loops
        .iter()
        .map(|l| Ok((l.label(), l.spec(cfg.samples)?)))
        .collect()
}

fn end_name(e: BranchEnd) -> &'static str {
    match e {
        BranchEnd::MergesBulkBand => "bulk_band",
        BranchEnd::MergesFlatBand => "flat_band",
        BranchEnd::ClosesLoop => "loop_end",
    }
}

#[derive(Debug, Serialize)]
struct CrossingSummary {
    mu: f64,
    value: i64,
    thetas: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct EdgeSummary {
    index: usize,
    label: String,
    backend: &'static str,
    branches_upper: usize,
    branches_lower: usize,
    crossings: Vec<CrossingSummary>,
    merges_plus_below: i64,
}

pub fn edge_spectrum(cfg: &RunConfig, out: &Path) -> CliResult<Written> {
    let p = cfg.params()?;
    let backend = cfg.backend()?;
    let loops = loop_specs(cfg)?;
    let mut files: Vec<(PathBuf, Csv)> = Vec::new();
    let mut summary = Vec::new();
    for (i, (label, lp)) in loops.iter().enumerate() {
        info!("tracing {label}");
        let upper = trace_branches(&p, lp, Gap::Upper, &backend)?;
        let lower = trace_branches(&p, lp, Gap::Lower, &backend)?;
        let mut br = Csv::new(&["gap", "branch", "theta", "omega", "start", "end"]);
        for (gap, set) in [("upper", &upper), ("lower", &lower)] {
            for (b, branch) in set.iter().enumerate() {
                for &(theta, omega) in &branch.points {
                    br.row(&[
                        gap.into(),
                        b.to_string(),
                        fmt_f64(theta),
                        fmt_f64(omega),
                        end_name(branch.start).into(),
                        end_name(branch.end).into(),
                    ]);
                }
            }
        }
        let mut ess = Csv::new(&["theta", "omega_plus_edge", "omega_minus_edge"]);
        for k in 0..lp.samples {
            let t = lp.t(k);
            let edge = essential_gap_edge(&p, lp.point_at(t)?.kx());
            ess.floats(&[lp.theta(t), edge, -edge]);
        }
        let mut crossings = Vec::new();
        for &mu in &cfg.levels {
            let (gap, set) = if mu > 0.0 { (Gap::Upper, &upper) } else { (Gap::Lower, &lower) };
            let r = edge_index_crossings(&p, set, gap, mu)?;
            crossings.push(CrossingSummary { mu, value: r.value, thetas: r.crossings.iter().map(|c| c.theta).collect() });
        }
        summary.push(EdgeSummary {
            index: i,
            label: label.clone(),
            backend: backend.name(),
            branches_upper: upper.len(),
            branches_lower: lower.len(),
            crossings,
            merges_plus_below: edge_index_merges(&upper, MergeBand::PlusBelow).value,
        });
        files.push((out.join(format!("branches_{i}.csv")), br));
        files.push((out.join(format!("ess_edges_{i}.csv")), ess));
    }
    let mut w = Written::default();
    for (path, csv) in &mut files {
        csv.write(w.push(path.clone()))?;
    }
    write_json(w.push(out.join("edge_spectrum.json")), &summary)?;
    Ok(w)
}

#[derive(Debug, Serialize)]
struct FlowRecord {
    index: usize,
    label: String,
    backend: &'static str,
    gap: GapName,
    perturbation: Option<f64>,
    value: i64,
    /// `(theta, sign)` of the partition segments carrying flow.
    segments: Vec<(f64, i64)>,
}

pub fn flow_records(cfg: &RunConfig) -> CliResult<Vec<FlowResult>> {
    let p = cfg.params()?;
    let backend = cfg.backend()?;
    let opts = FlowOptions { perturbation: cfg.perturbation_spec(), ..FlowOptions::new(cfg.gap.into()) };
    loop_specs(cfg)?
        .iter()
        .map(|(label, lp)| {
            info!("spectral flow along {label}");
            Ok(spectral_flow(&p, lp, &backend, &opts)?)
        })
        .collect()
}

pub fn spectral_flow_cmd(cfg: &RunConfig, out: &Path) -> CliResult<Written> {
    let backend = cfg.backend()?;
    let results = flow_records(cfg)?;
    let records: Vec<FlowRecord> = cfg
        .loops
        .iter()
        .zip(results)
        .enumerate()
        .map(|(i, (l, r))| FlowRecord {
            index: i,
            label: l.label(),
            backend: backend.name(),
            gap: cfg.gap,
            perturbation: cfg.perturbation,
            value: r.value,
            segments: r.crossings.iter().map(|c| (c.theta, c.sign)).collect(),
        })
        .collect();
    let mut w = Written::default();
    write_json(w.push(out.join("flow.json")), &records)?;
    Ok(w)
}

#[derive(Debug, Serialize)]
struct WindingRecord {
    index: usize,
    #[serde(rename = "loop")]
    label: String,
    value: i64,
    total_phase: f64,
    max_step: f64,
}

pub fn scattering(cfg: &RunConfig, out: &Path) -> CliResult<Written> {
    let p = cfg.params()?;
    if cfg.scatter_loops.is_empty() {
        return Err(CliError::Config("no scattering loops configured".into()));
    }
    let mut files = Vec::new();
    let mut records = Vec::new();
    for (i, l) in cfg.scatter_loops.iter().enumerate() {
        let lp = l.build(cfg.scatter_samples);
        info!("winding along {}", lp.label());
        let w = winding_number(&p, &lp)?;
        let mut csv = Csv::new(&["t", "kx", "kappa", "a", "re_S", "im_S", "arg_S_unwrapped"]);
        for s in loop_samples(&lp, &w) {
            csv.floats(&[s.t, s.kx, s.kappa, s.a, s.s.re, s.s.im, s.arg_unwrapped]);
        }
        files.push((out.join(format!("scatter_{i}.csv")), csv));
        records.push(WindingRecord {
            index: i,
            label: lp.label(),
            value: w.value,
            total_phase: w.total_phase,
            max_step: w.max_step,
        });
    }
    let mut w = Written::default();
    for (path, csv) in &mut files {
        csv.write(w.push(path.clone()))?;
    }
    write_json(w.push(out.join("winding.json")), &records)?;
    Ok(w)
}

#[derive(Debug, Serialize)]
struct RobinLevel {
    mu: f64,
    flow: i64,
    flow_reversed: i64,
}

pub fn robin_demo(cfg: &RunConfig, out: &Path) -> CliResult<Written> {
    let r = &cfg.robin;
    let fd = FdConfig::new(r.length, r.n)?;
    let mut csv = Csv::new(&["a", "lowest_eigenvalue", "minus_a_squared"]);
    for &a in &r.a_values {
        csv.floats(&[a, robin_lowest_eigenvalue(&fd, a)?, -a * a]);
    }
    let mut levels = Vec::new();
    for &mu in &r.levels {
        levels.push(RobinLevel {
            mu,
            flow: robin_pump_flow(&fd, mu, r.samples, Orientation::Positive)?,
            flow_reversed: robin_pump_flow(&fd, mu, r.samples, Orientation::Negative)?,
        });
    }
    let mut w = Written::default();
    csv.write(w.push(out.join("robin.csv")))?;
    write_json(w.push(out.join("robin.json")), &levels)?;
    Ok(w)
}

pub fn verify_cmd(cfg: &RunConfig, out: &Path) -> CliResult<Written> {
    let report = verify::run(cfg, |c| eprintln!("{}", c.line()))?;
    let mut w = Written::default();
    write_json(w.push(out.join("report.json")), &report)?;
    let failed = report.failed();
    if failed.is_empty() {
        Ok(w)
    } else {
        Err(CliError::Acceptance(failed))
    }
}

//! Scenario-grid simulation harness.
//!
//! A configuration fixes a two-level model template (constant pre/post mean
//! matrices), grids of minimal spacings and privacy budgets, the privacy
//! scenarios to run, and detector settings. For each cell
//! `(scenario, alpha, spacing)` and repetition the harness:
//!
//! 1. builds the instance with per-sequence horizon `T = 2 * spacing` and a
//!    single balanced change at `spacing` (a raw sequence of length `2 T`
//!    is simulated with its change at `2 * spacing`, so the even/odd split
//!    yields two length-`T` sequences both changing exactly at `spacing`);
//! 2. samples, privatizes per scenario, and splits into the two detector
//!    inputs;
//! 3. detects with the scenario's threshold rule and scores the scaled
//!    Hausdorff error against the true change point.
//!
//! Repetition seeds derive from (master seed, scenario, alpha, spacing,
//! repetition), so any cell is reproducible in isolation and parallel and
//! serial execution agree exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{
    bs_detect, gen_random_intervals, nbs_detect, scan_detect, DetectorConfig, Estimate,
};
use crate::error::{Error, Result};
use crate::ldp::node::{node_constants, node_privatize_frame, NodeSampler, RowScratch};
use crate::ldp::rr::{rr_privatize_frame, EdgeRrParams};
use crate::metrics::scaled_error;
use crate::netgen::{
    sample_frame, validate_spec, Dependence, Domain, ModelSpec, NetworkSequence, ProbMatrix,
};
use crate::seed::SeedSpace;

/// Privacy scenario of a simulation cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Raw data, no privatization.
    None,
    /// Edge-level randomized response on symmetric networks.
    Edge,
    /// Row-level mechanism on bipartite networks.
    Node,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scenario::None => "none",
            Scenario::Edge => "edge",
            Scenario::Node => "node",
        }
    }

    fn index(&self) -> u64 {
        match self {
            Scenario::None => 0,
            Scenario::Edge => 1,
            Scenario::Node => 2,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Scenario::None),
            "edge" => Ok(Scenario::Edge),
            "node" => Ok(Scenario::Node),
            other => Err(Error::InvalidParameter(format!(
                "unknown scenario `{other}` (expected none, edge, or node)"
            ))),
        }
    }
}

/// Default detection threshold for a scenario, as a function of the network
/// size and the per-sequence horizon (natural logarithms).
pub fn paper_threshold(scenario: Scenario, n1: usize, n2: usize, horizon: usize) -> f64 {
    let t = horizon as f64;
    match scenario {
        Scenario::None => n1 as f64 * t.ln().powf(1.5) / 10.0,
        Scenario::Edge => n1 as f64 * t.ln().powf(1.5) / 30.0,
        Scenario::Node => {
            let cells = (n1 * n2) as f64;
            cells * (cells * t).ln().powi(2) / 10.0
        }
    }
}

/// Two-level model template; each cell instantiates it at its own horizon.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelTemplate {
    pub n1: usize,
    pub n2: usize,
    pub theta_pre: f64,
    pub theta_post: f64,
}

/// Which detection algorithm the harness runs.
///
/// The default is the single-pass scan: with exactly one balanced change
/// point per cell and the published threshold constants, recursing into the
/// two sides after a detection floods the estimate with spurious points
/// (the thresholds sit below the noise level of pure-noise segments), so
/// the reproduction declares at most one point per repetition. The full
/// recursive detectors remain available as options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// One scan of the whole horizon, at most one detection (default).
    Scan,
    /// Recursive full-segment binary segmentation.
    Bs,
    /// Recursive segmentation over random intervals.
    Nbs,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Scan
}

fn default_intervals() -> usize {
    100
}

fn default_cap_multiplier() -> f64 {
    2.0
}

/// Detector section of the experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectorSettings {
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    /// Number of random intervals `M` (nbs only).
    #[serde(default = "default_intervals")]
    pub intervals: usize,
    /// Interval length cap as a multiple of the minimal spacing (nbs only).
    #[serde(default = "default_cap_multiplier")]
    pub cap_multiplier: f64,
    /// Fixed threshold overriding the per-scenario rules.
    #[serde(default)]
    pub tau: Option<f64>,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        DetectorSettings {
            algorithm: default_algorithm(),
            intervals: default_intervals(),
            cap_multiplier: default_cap_multiplier(),
            tau: None,
        }
    }
}

/// Grid section of the experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub scenarios: Vec<Scenario>,
    /// Privacy budgets for the edge and node scenarios (ignored by `none`).
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// Minimal spacing grid shared by all scenarios.
    pub deltas: Vec<usize>,
    /// Per-scenario overrides of the spacing grid, keyed by scenario name.
    #[serde(default)]
    pub deltas_by_scenario: BTreeMap<String, Vec<usize>>,
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Output section of the experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSettings {
    pub dir: PathBuf,
    /// When false (default) the `runtime_ms` column is written as 0 so that
    /// reruns with the same config and seed are byte-identical.
    #[serde(default)]
    pub record_runtime: bool,
}

/// Full experiment configuration (TOML sections `[model]`, `[grid]`,
/// `[detector]`, `[output]`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelTemplate,
    pub grid: GridConfig,
    #[serde(default)]
    pub detector: DetectorSettings,
    pub output: OutputSettings,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config {
            key: "experiment config".into(),
            message: e.to_string(),
        })
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml_str(&text)
    }

    fn deltas_for(&self, scenario: Scenario) -> &[usize] {
        self.grid
            .deltas_by_scenario
            .get(scenario.as_str())
            .map(|v| v.as_slice())
            .unwrap_or(&self.grid.deltas)
    }

    fn alphas_for(&self, scenario: Scenario) -> Vec<f64> {
        match scenario {
            Scenario::None => vec![0.0],
            _ => self.grid.alphas.clone(),
        }
    }
}

/// One repetition's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scenario: Scenario,
    pub alpha: f64,
    pub delta: usize,
    pub rep: usize,
    pub scaled_error: f64,
    pub k_hat: usize,
    pub runtime_ms: u64,
}

/// Per-cell median summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario: Scenario,
    pub alpha: f64,
    pub delta: usize,
    pub median: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentResults {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResults {
    /// Median scaled error of a cell, if it was run.
    pub fn median_for(&self, scenario: Scenario, alpha: f64, delta: usize) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.scenario == scenario && s.alpha == alpha && s.delta == delta)
            .map(|s| s.median)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Cell {
    scenario: Scenario,
    alpha: f64,
    delta: usize,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scenario={}, alpha={}, delta={}",
            self.scenario, self.alpha, self.delta
        )
    }
}

fn validate_config(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.grid.repetitions == 0 {
        return Err(Error::Config {
            key: "grid.repetitions".into(),
            message: "must be at least 1".into(),
        });
    }
    if cfg.grid.scenarios.is_empty() {
        return Err(Error::Config {
            key: "grid.scenarios".into(),
            message: "must be nonempty".into(),
        });
    }
    for scenario in &cfg.grid.scenarios {
        if cfg.deltas_for(*scenario).is_empty() {
            return Err(Error::Config {
                key: "grid.deltas".into(),
                message: format!("empty spacing grid for scenario {scenario}"),
            });
        }
        if *scenario != Scenario::None && cfg.grid.alphas.is_empty() {
            return Err(Error::Config {
                key: "grid.alphas".into(),
                message: format!("scenario {scenario} requires at least one alpha"),
            });
        }
    }
    for key in cfg.grid.deltas_by_scenario.keys() {
        key.parse::<Scenario>().map_err(|e| Error::Config {
            key: format!("grid.deltas_by_scenario.{key}"),
            message: e.to_string(),
        })?;
    }
    for &p in [&cfg.model.theta_pre, &cfg.model.theta_post] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config {
                key: "model".into(),
                message: format!("mean {p} outside [0, 1]"),
            });
        }
    }
    if cfg.model.n1 == 0 || cfg.model.n2 == 0 {
        return Err(Error::Config {
            key: "model".into(),
            message: "n1 and n2 must be positive".into(),
        });
    }
    Ok(())
}

/// Builds the raw-scale model for one cell: length `4 * delta` with a single
/// change at `2 * delta`, so both split halves change at `delta`.
fn cell_spec(template: &ModelTemplate, scenario: Scenario, delta: usize) -> Result<ModelSpec<f64>> {
    let symmetric = scenario != Scenario::Node;
    let (n1, n2) = if symmetric {
        (template.n1, template.n1)
    } else {
        (template.n1, template.n2)
    };
    let raw_horizon = 4 * delta;
    let pre = ProbMatrix::constant(n1, n2, template.theta_pre, symmetric)?;
    if template.theta_pre == template.theta_post {
        return Ok(ModelSpec {
            horizon: raw_horizon,
            n1,
            n2,
            symmetric,
            dependence: Dependence::Independent,
            change_points: vec![],
            segment_thetas: vec![pre],
        });
    }
    let post = ProbMatrix::constant(n1, n2, template.theta_post, symmetric)?;
    Ok(ModelSpec {
        horizon: raw_horizon,
        n1,
        n2,
        symmetric,
        dependence: Dependence::Independent,
        change_points: vec![2 * delta],
        segment_thetas: vec![pre, post],
    })
}

/// Samples, privatizes, and splits one repetition, streaming frame by frame
/// so only the two detector inputs are retained.
fn build_inputs(
    spec: &ModelSpec<f64>,
    scenario: Scenario,
    alpha: f64,
    sample_seed: u64,
    mech_seed: u64,
) -> Result<(NetworkSequence<f64>, NetworkSequence<f64>)> {
    validate_spec(spec)?;
    let sample_space = SeedSpace::new(sample_seed);
    let mech_space = SeedSpace::new(mech_seed);
    let half = spec.horizon / 2;
    let mut odd = Vec::with_capacity(half);
    let mut even = Vec::with_capacity(half);

    let edge_params = match scenario {
        Scenario::Edge => Some(EdgeRrParams::new(alpha)?),
        _ => None,
    };
    let node_sampler = match scenario {
        Scenario::Node => Some(NodeSampler::new(node_constants(spec.n2, alpha)?)),
        _ => None,
    };
    let mut scratch = RowScratch::new(spec.n2);

    for t in 1..=spec.horizon {
        let raw = sample_frame(spec, t, &sample_space);
        let frame = match scenario {
            Scenario::None => raw,
            Scenario::Edge => {
                let mut rng = mech_space.stream("ldp/rr/frame", &[t as u64]);
                rr_privatize_frame(
                    &raw,
                    edge_params.as_ref().expect("edge params"),
                    &mut rng,
                )
            }
            Scenario::Node => {
                let mut rng = mech_space.stream("ldp/node/frame", &[t as u64]);
                node_privatize_frame(
                    &raw,
                    node_sampler.as_ref().expect("node sampler"),
                    &mut rng,
                    &mut scratch,
                )?
            }
        };
        if t % 2 == 1 {
            odd.push(frame);
        } else {
            even.push(frame);
        }
    }
    let domain = match &node_sampler {
        Some(s) => Domain::PlusMinus {
            magnitude: s.params.magnitude,
        },
        None => Domain::Binary01,
    };
    Ok((
        NetworkSequence::from_parts(odd, domain, spec.symmetric),
        NetworkSequence::from_parts(even, domain, spec.symmetric),
    ))
}

fn detect(
    cfg: &ExperimentConfig,
    cell: Cell,
    u: &NetworkSequence<f64>,
    v: &NetworkSequence<f64>,
    interval_seed: u64,
) -> Result<Estimate> {
    let horizon = u.horizon();
    let tau = cfg.detector.tau.unwrap_or_else(|| {
        paper_threshold(cell.scenario, u.n1(), u.n2(), horizon)
    });
    let det = DetectorConfig::new(tau)?;
    match cfg.detector.algorithm {
        Algorithm::Scan => scan_detect(u, v, &det),
        Algorithm::Bs => bs_detect(u, v, &det),
        Algorithm::Nbs => {
            let cap = ((cfg.detector.cap_multiplier * cell.delta as f64).round() as usize)
                .clamp(2, horizon);
            let intervals =
                gen_random_intervals(horizon, cfg.detector.intervals, Some(cap), interval_seed)?;
            nbs_detect(u, v, &intervals, &det)
        }
    }
}

fn run_repetition(cfg: &ExperimentConfig, cell: Cell, rep: usize) -> Result<(f64, usize)> {
    let spec = cell_spec(&cfg.model, cell.scenario, cell.delta)?;
    let space = SeedSpace::new(cfg.grid.seed);
    let tags = [
        cell.scenario.index(),
        cell.alpha.to_bits(),
        cell.delta as u64,
        rep as u64,
    ];
    let sample_seed = space.derive("simlab/sample", &tags);
    let mech_seed = space.derive("simlab/mech", &tags);
    let interval_seed = space.derive("simlab/intervals", &tags);

    let (u, v) = build_inputs(&spec, cell.scenario, cell.alpha, sample_seed, mech_seed)?;
    let estimate = detect(cfg, cell, &u, &v, interval_seed)?;
    let truth: Vec<usize> = if spec.change_points.is_empty() {
        vec![]
    } else {
        vec![cell.delta]
    };
    Ok((
        scaled_error(&estimate, &truth, cell.delta),
        estimate.len(),
    ))
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Runs the full scenario grid.
///
/// Repetitions execute in parallel; results are keyed by cell and
/// repetition, so the output is independent of scheduling. A cell is
/// aborted (with its coordinates in the error) after three consecutive
/// repetition failures; isolated failures are reported on stderr and
/// skipped.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    validate_config(cfg)?;
    let mut cells = Vec::new();
    for &scenario in &cfg.grid.scenarios {
        for alpha in cfg.alphas_for(scenario) {
            for &delta in cfg.deltas_for(scenario) {
                cells.push(Cell {
                    scenario,
                    alpha,
                    delta,
                });
            }
        }
    }
    let reps = cfg.grid.repetitions;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..reps).map(move |r| (c, r)))
        .collect();
    let mut outcomes: Vec<(usize, usize, Result<(f64, usize)>, u64)> = jobs
        .into_par_iter()
        .map(|(c, r)| {
            let start = Instant::now();
            let out = run_repetition(cfg, cells[c], r);
            let elapsed = if cfg.output.record_runtime {
                start.elapsed().as_millis() as u64
            } else {
                0
            };
            (c, r, out, elapsed)
        })
        .collect();
    outcomes.sort_by_key(|&(c, r, _, _)| (c, r));

    let mut rows = Vec::with_capacity(cells.len() * reps);
    let mut summary = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let cell_outcomes = &outcomes[c * reps..(c + 1) * reps];
        let mut consecutive = 0usize;
        let mut errors = Vec::new();
        let mut cell_errs = Vec::new();
        for (_, r, out, elapsed) in cell_outcomes {
            match out {
                Ok((err, k_hat)) => {
                    consecutive = 0;
                    cell_errs.push(*err);
                    rows.push(ResultRow {
                        scenario: cell.scenario,
                        alpha: cell.alpha,
                        delta: cell.delta,
                        rep: r + 1,
                        scaled_error: *err,
                        k_hat: *k_hat,
                        runtime_ms: *elapsed,
                    });
                }
                Err(e) => {
                    consecutive += 1;
                    errors.push((r + 1, e.to_string()));
                    eprintln!("warning: cell ({cell}) repetition {} failed: {e}", r + 1);
                    if consecutive >= 3 {
                        return Err(Error::Cell {
                            cell: cell.to_string(),
                            message: format!(
                                "3 consecutive repetition failures, last: {}",
                                errors.last().map(|(_, m)| m.as_str()).unwrap_or("?")
                            ),
                        });
                    }
                }
            }
        }
        if cell_errs.is_empty() {
            return Err(Error::Cell {
                cell: cell.to_string(),
                message: "no successful repetitions".into(),
            });
        }
        cell_errs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN errors"));
        summary.push(SummaryRow {
            scenario: cell.scenario,
            alpha: cell.alpha,
            delta: cell.delta,
            median: median(&cell_errs),
        });
    }
    Ok(ExperimentResults { rows, summary })
}

const RAW_HEADER: &str = "scenario,alpha,delta,rep,scaled_error,k_hat,runtime_ms";
const SUMMARY_HEADER: &str = "scenario,alpha,delta,median";

/// Renders the raw per-repetition table as CSV.
pub fn raw_csv(results: &ExperimentResults) -> String {
    let mut out = String::from(RAW_HEADER);
    out.push('\n');
    for r in &results.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.scenario, r.alpha, r.delta, r.rep, r.scaled_error, r.k_hat, r.runtime_ms
        ));
    }
    out
}

/// Parses a CSV produced by [`raw_csv`].
pub fn parse_raw_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == RAW_HEADER => {}
        other => {
            return Err(Error::InvalidParameter(format!(
                "unexpected raw CSV header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::InvalidParameter(format!(
                "raw CSV line {}: expected 7 fields",
                ln + 2
            )));
        }
        let parse_err = |what: &str| {
            Error::InvalidParameter(format!("raw CSV line {}: bad {what}", ln + 2))
        };
        rows.push(ResultRow {
            scenario: fields[0].parse()?,
            alpha: fields[1].parse().map_err(|_| parse_err("alpha"))?,
            delta: fields[2].parse().map_err(|_| parse_err("delta"))?,
            rep: fields[3].parse().map_err(|_| parse_err("rep"))?,
            scaled_error: fields[4].parse().map_err(|_| parse_err("scaled_error"))?,
            k_hat: fields[5].parse().map_err(|_| parse_err("k_hat"))?,
            runtime_ms: fields[6].parse().map_err(|_| parse_err("runtime_ms"))?,
        });
    }
    Ok(rows)
}

/// Renders the per-cell median table as CSV.
pub fn summary_csv(results: &ExperimentResults) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in &results.summary {
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.scenario, s.alpha, s.delta, s.median
        ));
    }
    out
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Self-contained SVG line plot for one scenario: median scaled error
/// against the spacing grid, one polyline per privacy budget.
fn scenario_svg(scenario: Scenario, summary: &[&SummaryRow]) -> String {
    let deltas: Vec<usize> = {
        let mut seen = Vec::new();
        for s in summary {
            if !seen.contains(&s.delta) {
                seen.push(s.delta);
            }
        }
        seen
    };
    let alphas: Vec<f64> = {
        let mut seen = Vec::new();
        for s in summary {
            if !seen.contains(&s.alpha) {
                seen.push(s.alpha);
            }
        }
        seen
    };
    let (width, height) = (640.0, 440.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 60.0);
    let plot_w = width - left - right;
    let plot_h = height - top - bottom;
    let x_of = |i: usize| {
        if deltas.len() <= 1 {
            left + plot_w / 2.0
        } else {
            left + plot_w * i as f64 / (deltas.len() - 1) as f64
        }
    };
    let y_of = |v: f64| top + plot_h * (1.0 - v.clamp(0.0, 1.0));

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" \
         text-anchor=\"middle\">median scaled error, scenario: {}</text>\n",
        left + plot_w / 2.0,
        scenario
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{left:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        top + plot_h,
        left + plot_w,
        top + plot_h
    ));
    svg.push_str(&format!(
        "<line x1=\"{left:.1}\" y1=\"{top:.1}\" x2=\"{left:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
        top + plot_h
    ));
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let y = y_of(v);
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{left:.1}\" y2=\"{y:.1}\" stroke=\"black\"/>\n",
            left - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{v}</text>\n",
            left - 9.0,
            y + 4.0
        ));
    }
    for (i, &d) in deltas.iter().enumerate() {
        let x = x_of(i);
        svg.push_str(&format!(
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            top + plot_h,
            top + plot_h + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{d}</text>\n",
            top + plot_h + 20.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">minimal spacing</text>\n",
        left + plot_w / 2.0,
        top + plot_h + 42.0
    ));

    for (ai, &alpha) in alphas.iter().enumerate() {
        let color = PALETTE[ai % PALETTE.len()];
        let mut points = String::new();
        for (i, &d) in deltas.iter().enumerate() {
            if let Some(s) = summary
                .iter()
                .find(|s| s.alpha == alpha && s.delta == d)
            {
                points.push_str(&format!("{:.1},{:.1} ", x_of(i), y_of(s.median)));
            }
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            points.trim_end()
        ));
        for (i, &d) in deltas.iter().enumerate() {
            if let Some(s) = summary
                .iter()
                .find(|s| s.alpha == alpha && s.delta == d)
            {
                svg.push_str(&format!(
                    "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                    x_of(i),
                    y_of(s.median)
                ));
            }
        }
        let ly = top + 14.0 + 20.0 * ai as f64;
        let lx = left + plot_w + 18.0;
        svg.push_str(&format!(
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" \
             stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 22.0
        ));
        let label = if scenario == Scenario::None {
            "no privacy".to_string()
        } else {
            format!("alpha = {alpha}")
        };
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>\n",
            lx + 28.0,
            ly + 4.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes the raw CSV, summary CSV, and one SVG plot per scenario.
///
/// Returns the written paths. Fails without writing anything when the
/// results are empty.
pub fn emit_outputs(results: &ExperimentResults, output: &OutputSettings) -> Result<Vec<PathBuf>> {
    if results.rows.is_empty() || results.summary.is_empty() {
        return Err(Error::InvalidParameter(
            "no results to emit (empty grid?)".into(),
        ));
    }
    let dir = &output.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut written = Vec::new();

    let raw_path = dir.join("raw.csv");
    fs::write(&raw_path, raw_csv(results))
        .map_err(|e| Error::io(raw_path.display().to_string(), e))?;
    written.push(raw_path);

    let summary_path = dir.join("summary.csv");
    fs::write(&summary_path, summary_csv(results))
        .map_err(|e| Error::io(summary_path.display().to_string(), e))?;
    written.push(summary_path);

    let mut scenarios = Vec::new();
    for s in &results.summary {
        if !scenarios.contains(&s.scenario) {
            scenarios.push(s.scenario);
        }
    }
    for scenario in scenarios {
        let rows: Vec<&SummaryRow> = results
            .summary
            .iter()
            .filter(|s| s.scenario == scenario)
            .collect();
        let path = dir.join(format!("plot_{scenario}.svg"));
        fs::write(&path, scenario_svg(scenario, &rows))
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::split_even_odd;
    use crate::ldp::{node_privatize, rr_privatize};
    use crate::netgen::sample_sequence;

    fn tiny_config(dir: PathBuf) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelTemplate {
                n1: 8,
                n2: 8,
                theta_pre: 0.1,
                theta_post: 0.6,
            },
            grid: GridConfig {
                scenarios: vec![Scenario::None, Scenario::Edge],
                alphas: vec![1.0],
                deltas: vec![6, 10],
                deltas_by_scenario: BTreeMap::new(),
                repetitions: 4,
                seed: 5,
            },
            detector: DetectorSettings::default(),
            output: OutputSettings {
                dir,
                record_runtime: false,
            },
        }
    }

    #[test]
    fn streamed_pipeline_matches_library_composition() {
        for (scenario, alpha) in [
            (Scenario::None, 0.0),
            (Scenario::Edge, 0.7),
            (Scenario::Node, 0.7),
        ] {
            let template = ModelTemplate {
                n1: 5,
                n2: 4,
                theta_pre: 0.2,
                theta_post: 0.7,
            };
            let spec = cell_spec(&template, scenario, 5).unwrap();
            let (u, v) = build_inputs(&spec, scenario, alpha, 11, 13).unwrap();

            let raw = sample_sequence(&spec, 11).unwrap();
            let privatized = match scenario {
                Scenario::None => raw,
                Scenario::Edge => rr_privatize(&raw, alpha, 13).unwrap(),
                Scenario::Node => node_privatize(&raw, alpha, 13).unwrap(),
            };
            let (a, b, _) = split_even_odd(&privatized).unwrap();
            assert_eq!(u, a, "odd half differs for {scenario}");
            assert_eq!(v, b, "even half differs for {scenario}");
        }
    }

    #[test]
    fn split_halves_change_at_delta() {
        let template = ModelTemplate {
            n1: 4,
            n2: 4,
            theta_pre: 0.1,
            theta_post: 0.9,
        };
        // Odd spacing: the doubled raw change at 2*delta still lands at
        // delta in both halves.
        let delta = 7;
        let spec = cell_spec(&template, Scenario::None, delta).unwrap();
        let (u, v) = build_inputs(&spec, Scenario::None, 0.0, 1, 2).unwrap();
        assert_eq!(u.horizon(), 2 * delta);
        assert_eq!(v.horizon(), 2 * delta);
        // Population check via the segment lookup.
        for t in 1..=2 * delta {
            let raw_t_odd = 2 * t - 1;
            let raw_t_even = 2 * t;
            assert_eq!(
                spec.theta_at(raw_t_odd).get(0, 0) < 0.5,
                t <= delta,
                "odd half time {t}"
            );
            assert_eq!(
                spec.theta_at(raw_t_even).get(0, 0) < 0.5,
                t <= delta,
                "even half time {t}"
            );
        }
    }

    #[test]
    fn experiment_is_deterministic_and_parsable() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path().join("out"));
        let res1 = run_experiment(&cfg).unwrap();
        let res2 = run_experiment(&cfg).unwrap();
        assert_eq!(raw_csv(&res1), raw_csv(&res2));
        assert_eq!(summary_csv(&res1), summary_csv(&res2));

        let parsed = parse_raw_csv(&raw_csv(&res1)).unwrap();
        assert_eq!(parsed, res1.rows);

        let written = emit_outputs(&res1, &cfg.output).unwrap();
        assert_eq!(written.len(), 2 + 2); // raw, summary, two scenario plots
        for p in &written {
            assert!(p.exists());
        }
    }

    #[test]
    fn parallel_and_serial_medians_agree() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path().join("out"));
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg))
            .unwrap();
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg))
            .unwrap();
        assert_eq!(summary_csv(&serial), summary_csv(&parallel));
        assert_eq!(raw_csv(&serial), raw_csv(&parallel));
    }

    #[test]
    fn flat_model_scores_one_without_detection() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path().join("out"));
        cfg.model.theta_post = cfg.model.theta_pre;
        cfg.grid.scenarios = vec![Scenario::None];
        cfg.grid.deltas = vec![8];
        cfg.detector.tau = Some(1e6);
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.median_for(Scenario::None, 0.0, 8), Some(1.0));
        assert!(res.rows.iter().all(|r| r.k_hat == 0));
    }

    #[test]
    fn empty_grids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path().join("out"));
        cfg.grid.deltas = vec![];
        assert!(run_experiment(&cfg).is_err());

        let mut cfg2 = tiny_config(dir.path().join("out2"));
        cfg2.grid.scenarios = vec![];
        assert!(run_experiment(&cfg2).is_err());

        assert!(emit_outputs(
            &ExperimentResults::default(),
            &OutputSettings {
                dir: dir.path().join("out3"),
                record_runtime: false
            }
        )
        .is_err());
    }

    #[test]
    fn config_parses_from_toml_sections() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
[model]
n1 = 50
n2 = 50
theta_pre = 0.1
theta_post = 0.4

[grid]
scenarios = ["none", "edge"]
alphas = [1.0, 0.5]
deltas = [7, 10]
repetitions = 100
seed = 7

[grid.deltas_by_scenario]
edge = [16, 32]

[detector]
algorithm = "bs"

[output]
dir = "out"
"#,
        )
        .unwrap();
        assert_eq!(cfg.grid.scenarios, vec![Scenario::None, Scenario::Edge]);
        assert_eq!(cfg.deltas_for(Scenario::Edge), &[16, 32]);
        assert_eq!(cfg.deltas_for(Scenario::None), &[7, 10]);
        assert!(!cfg.output.record_runtime);

        let bad = ExperimentConfig::from_toml_str("[model]\nn1 = \"x\"\n");
        assert!(bad.is_err());
    }

    #[test]
    fn nbs_path_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path().join("out"));
        cfg.detector.algorithm = Algorithm::Nbs;
        cfg.detector.intervals = 40;
        // The default rules are sized for n = 50; pin a threshold between
        // the n = 8 noise level and the signal (d/2) * jump^2 = 64.
        cfg.detector.tau = Some(30.0);
        cfg.grid.deltas = vec![8];
        cfg.grid.repetitions = 3;
        let res = run_experiment(&cfg).unwrap();
        // Strong signal: the none scenario should localize exactly.
        assert_eq!(res.median_for(Scenario::None, 0.0, 8), Some(0.0));
    }
}

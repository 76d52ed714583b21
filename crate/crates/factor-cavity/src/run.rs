//! Operations behind the CLI subcommands.
//!
//! Every operation expands the configured grid in-process, evaluates points
//! (and graphs within points) on the worker pool, and writes one CSV whose
//! rows follow grid order, plus `manifest.json`. Point `i` draws from
//! `derive_seed(seed, i)`; graph `j` of that point from substream `j`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use factor_cavity_core::assumptions::{check_bal, check_deg, check_pos, check_sym, CheckReport};
use factor_cavity_core::bethe::annealed_free_entropy;
use factor_cavity_core::exact::{bethe_instance, bp_run, partition_function, two_point, STATE_CAP};
use factor_cavity_core::model::SYM_TOL;
use factor_cavity_core::rng::{derive_seed, substream, SimRng};
use factor_cavity_core::sampling::{
    pin_rng, pin_with, sample_degree_sequence_rng, sample_nishimori_rng, sample_null_given_rng,
    sample_planted_rng, sample_pruned_sequence_rng, uniform_assignment, HistogramMethod,
    NishimoriMode,
};
use factor_cavity_core::{Assignment, Error, FactorGraph, ModelSpec, Pin};
use serde_json::{json, Value};

use crate::acceptance::{run_criterion, run_suite, to_table, CriterionResult};
use crate::config::{ExperimentConfig, GraphKind};
use crate::graph_io::{parse_graph, write_graph};
use crate::parallel::{self, Workers};
use crate::report::{
    num, sha256_hex, write_json, write_table, ErrorRecord, Manifest, OutputEntry, Table,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    Check,
    Sample,
    Exact,
    Bp,
    Bethe,
    MiScan,
    Threshold,
    Selftest,
}

impl Operation {
    pub const ALL: [Operation; 8] = [
        Operation::Check,
        Operation::Sample,
        Operation::Exact,
        Operation::Bp,
        Operation::Bethe,
        Operation::MiScan,
        Operation::Threshold,
        Operation::Selftest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Operation::Check => "check",
            Operation::Sample => "sample",
            Operation::Exact => "exact",
            Operation::Bp => "bp",
            Operation::Bethe => "bethe",
            Operation::MiScan => "mi-scan",
            Operation::Threshold => "threshold",
            Operation::Selftest => "selftest",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|op| op.name() == s)
    }
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A failed assumption or acceptance check; maps to exit code 1.
#[derive(Debug)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Violation {}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

fn core_kind(e: &Error) -> &'static str {
    match e {
        Error::AttemptsExhausted { .. } => "attempts-exhausted",
        Error::CapExceeded { .. } => "cap-exceeded",
        Error::InvalidSpec(_) => "invalid-spec",
        Error::InvalidFamily(_) => "invalid-family",
        Error::InvalidGraph(_) => "invalid-graph",
        Error::InvalidArgument(_) => "invalid-argument",
        Error::ZeroMean => "zero-mean",
        Error::SymViolation(_) => "sym-violation",
        Error::AssumptionViolation { .. } => "assumption-violation",
        Error::NumericalUnderflow => "numerical-underflow",
        Error::NotConverged { .. } => "not-converged",
        Error::GridTooCoarse(_) => "grid-too-coarse",
        Error::NoCrossing => "no-crossing",
    }
}

/// Error kind and exit code.
pub fn classify(err: &anyhow::Error) -> (String, i32) {
    for cause in err.chain() {
        if cause.is::<Violation>() {
            return ("check-failed".into(), EXIT_VIOLATION);
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            let code = match e {
                Error::SymViolation(_) | Error::AssumptionViolation { .. } => EXIT_VIOLATION,
                _ => EXIT_RUNTIME,
            };
            return (core_kind(e).into(), code);
        }
    }
    ("runtime".into(), EXIT_RUNTIME)
}

pub fn error_record(operation: &str, err: &anyhow::Error) -> ErrorRecord {
    let (kind, exit_code) = classify(err);
    ErrorRecord {
        operation: operation.into(),
        kind,
        message: format!("{err:#}"),
        exit_code,
    }
}

pub struct RunOptions {
    pub seed: u64,
    pub out: PathBuf,
    /// Criteria for `selftest`; empty runs the whole suite.
    pub criteria: Vec<u8>,
    /// Print human-readable progress to stdout.
    pub verbose: bool,
}

struct Point {
    index: usize,
    value: Option<f64>,
    model: ModelSpec,
    seed: u64,
}

fn points(cfg: &ExperimentConfig, seed: u64) -> anyhow::Result<Vec<Point>> {
    cfg.points()
        .into_iter()
        .enumerate()
        .map(|(i, value)| {
            let model = cfg
                .model_at(value)?
                .build()
                .with_context(|| format!("grid point {i}"))?;
            Ok(Point {
                index: i,
                value,
                model,
                seed: derive_seed(seed, i as u64),
            })
        })
        .collect()
}

fn param_name(cfg: &ExperimentConfig) -> String {
    cfg.grid
        .as_ref()
        .map(|g| g.param.clone())
        .unwrap_or_default()
}

fn cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn point_label(param: &str, p: &Point) -> String {
    match p.value {
        Some(v) => format!("point {} ({param}={v})", p.index),
        None => format!("point {}", p.index),
    }
}

/// Digest of the effective configuration, seed included.
pub fn inputs_digest(cfg: &ExperimentConfig, op: Operation, seed: u64) -> String {
    sha256_hex(format!("operation = {op:?}\nseed = {seed}\n{}", cfg.canonical()).as_bytes())
}

/// The four assumption reports for one model.
pub fn check_model(
    model: &ModelSpec,
    cfg: &ExperimentConfig,
    seed: u64,
) -> anyhow::Result<Vec<CheckReport>> {
    let b = &cfg.budget;
    Ok(vec![
        check_deg(&model.dspec, &model.kspec),
        check_sym(&model.family, SYM_TOL),
        check_bal(&model.family, b.bal_resolution)?,
        check_pos(&model.family, b.pos_trials, b.pos_samples, seed),
    ])
}

/// Hypotheses required before a mutual-information estimate.
fn require_assumptions(
    model: &ModelSpec,
    cfg: &ExperimentConfig,
    seed: u64,
) -> anyhow::Result<f64> {
    let xi = model.xi()?;
    let b = &cfg.budget;
    if b.check_bal {
        check_bal(&model.family, b.bal_resolution)?.require()?;
    }
    if b.pos_trials > 0 {
        check_pos(&model.family, b.pos_trials, b.pos_samples, seed).require()?;
    }
    Ok(xi)
}

struct Drawn {
    graph: FactorGraph,
    sigma: Option<Assignment>,
    method: String,
}

fn method_name(m: HistogramMethod) -> String {
    match m {
        HistogramMethod::Rejection { rejections } => format!("rejection:{rejections}"),
        HistogramMethod::Metropolis { steps } => format!("metropolis:{steps}"),
    }
}

fn nishimori_mode(n: usize, q: usize) -> NishimoriMode {
    match (q as f64).powi(n as i32) <= STATE_CAP as f64 {
        true => NishimoriMode::Exact { cap: STATE_CAP },
        false => NishimoriMode::Approximate,
    }
}

fn draw(model: &ModelSpec, cfg: &ExperimentConfig, rng: &mut SimRng) -> anyhow::Result<Drawn> {
    let n = cfg.budget.n;
    let s = &cfg.sample;
    let sc = s.sampler();
    let fam = &model.family;
    let seq = |rng: &mut SimRng| match s.eps {
        Some(eps) => sample_pruned_sequence_rng(n, eps, &model.dspec, &model.kspec, &sc, rng),
        None => sample_degree_sequence_rng(n, &model.dspec, &model.kspec, &sc, rng),
    };
    Ok(match s.kind {
        GraphKind::Null => {
            let mut graph = sample_null_given_rng(&seq(rng)?, fam, &sc, rng)?;
            if s.theta > 0 {
                graph = pin_rng(&graph, s.theta, rng)?;
            }
            Drawn {
                graph,
                sigma: None,
                method: "pairing".into(),
            }
        }
        GraphKind::Planted => {
            let seq = seq(rng)?;
            let sigma = uniform_assignment(n, model.q(), rng);
            let p = sample_planted_rng(&seq, &sigma, fam, s.theta, &sc, rng)?;
            Drawn {
                graph: p.graph,
                sigma: Some(sigma),
                method: method_name(p.method),
            }
        }
        GraphKind::Nishimori => {
            if s.eps.is_some() {
                bail!("sample.eps is not supported for nishimori graphs");
            }
            let mode = nishimori_mode(n, model.q());
            let ns = sample_nishimori_rng(n, &model.dspec, &model.kspec, fam, mode, &sc, rng)?;
            let pins: Vec<Pin> = (0..s.theta.min(n))
                .map(|v| Pin {
                    var: v,
                    spin: ns.sigma.0[v],
                })
                .collect();
            let graph = if pins.is_empty() {
                ns.graph
            } else {
                pin_with(&ns.graph, pins)?
            };
            let method = if ns.exact { "exact" } else { "approximate" };
            Drawn {
                graph,
                sigma: Some(ns.sigma),
                method: method.into(),
            }
        }
    })
}

/// Graphs of one point: the configured graph file, or `budget.graphs` draws.
fn graph_tasks(cfg: &ExperimentConfig, pts: &[Point]) -> Vec<(usize, usize)> {
    let per = if cfg.graph.is_some() {
        1
    } else {
        cfg.budget.graphs
    };
    pts.iter()
        .flat_map(|p| (0..per).map(move |j| (p.index, j)))
        .collect()
}

fn task_graph(
    cfg: &ExperimentConfig,
    loaded: Option<&str>,
    p: &Point,
    j: usize,
) -> anyhow::Result<Drawn> {
    match loaded {
        Some(text) => {
            let graph = parse_graph(text)?.into_graph(p.model.family.clone())?;
            Ok(Drawn {
                graph,
                sigma: None,
                method: "file".into(),
            })
        }
        None => draw(&p.model, cfg, &mut substream(p.seed, j as u64)),
    }
}

fn load_graph_text(cfg: &ExperimentConfig) -> anyhow::Result<Option<String>> {
    cfg.graph
        .as_ref()
        .map(|path| {
            std::fs::read_to_string(path).with_context(|| format!("reading graph file {path}"))
        })
        .transpose()
}

fn spins_cell(sigma: &Option<Assignment>) -> String {
    sigma
        .as_ref()
        .map(|s| {
            s.0.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_default()
}

struct Output {
    table: Table,
    summary: Value,
    extra: Vec<OutputEntry>,
    violations: Vec<String>,
    notes: Vec<String>,
}

impl Output {
    fn new(table: Table) -> Self {
        Self {
            table,
            summary: Value::Null,
            extra: Vec::new(),
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }
}

fn op_check(
    cfg: &ExperimentConfig,
    pts: &[Point],
    workers: &Workers,
    verbose: bool,
) -> anyhow::Result<Output> {
    let param = param_name(cfg);
    let reports = workers.map(pts.len(), |i| check_model(&pts[i].model, cfg, pts[i].seed));
    let mut out = Output::new(Table::new(&[
        "param",
        "value",
        "assumption",
        "passed",
        "magnitude",
        "xi",
        "witness",
        "detail",
    ]));
    let mut summary = Vec::new();
    for (p, reps) in pts.iter().zip(reports) {
        let reps = reps.with_context(|| point_label(&param, p))?;
        if verbose {
            println!("{}: model {}", point_label(&param, p), p.model.kind.name());
        }
        for r in &reps {
            if verbose {
                let verdict = if r.passed { "pass" } else { "FAIL" };
                println!("  {:<3} {verdict}: {}", r.name.to_string(), r.detail);
                if let Some(w) = &r.witness {
                    println!("      witness: {w}");
                }
                if let Some(xi) = r.xi {
                    println!("      xi = {xi}");
                }
            }
            if !r.passed {
                out.violations.push(format!(
                    "{}: {} failed: {}",
                    point_label(&param, p),
                    r.name,
                    r.detail
                ));
            }
            out.table.push(vec![
                param.clone(),
                cell(p.value),
                r.name.to_string(),
                r.passed.to_string(),
                num(r.magnitude),
                cell(r.xi),
                r.witness.clone().unwrap_or_default(),
                r.detail.clone(),
            ]);
        }
        summary.push(json!({
            "point": p.index,
            "value": p.value,
            "passed": reps.iter().all(|r| r.passed),
            "xi": reps.iter().find_map(|r| r.xi),
        }));
    }
    out.summary = Value::Array(summary);
    Ok(out)
}

fn op_sample(
    cfg: &ExperimentConfig,
    pts: &[Point],
    workers: &Workers,
    dir: &Path,
) -> anyhow::Result<Output> {
    let param = param_name(cfg);
    let loaded = load_graph_text(cfg)?;
    let tasks = graph_tasks(cfg, pts);
    let drawn = workers.map(tasks.len(), |t| {
        let (i, j) = tasks[t];
        task_graph(cfg, loaded.as_deref(), &pts[i], j)
    });
    let mut out = Output::new(Table::new(&[
        "param", "value", "graph", "n", "m", "simple", "pins", "method", "sigma", "file",
    ]));
    let gdir = dir.join("graphs");
    std::fs::create_dir_all(&gdir)?;
    for (&(i, j), d) in tasks.iter().zip(drawn) {
        let d = d.with_context(|| format!("{}, graph {j}", point_label(&param, &pts[i])))?;
        let name = format!("p{i}-g{j}.txt");
        let text = write_graph(&d.graph);
        std::fs::write(gdir.join(&name), &text)?;
        out.extra.push(OutputEntry {
            path: format!("graphs/{name}"),
            sha256: sha256_hex(text.as_bytes()),
            rows: d.graph.m(),
        });
        out.table.push(vec![
            param.clone(),
            cell(pts[i].value),
            j.to_string(),
            d.graph.n().to_string(),
            d.graph.m().to_string(),
            d.graph.is_simple().to_string(),
            d.graph.pins().len().to_string(),
            d.method,
            spins_cell(&d.sigma),
            format!("graphs/{name}"),
        ]);
    }
    Ok(out)
}

fn op_exact(cfg: &ExperimentConfig, pts: &[Point], workers: &Workers) -> anyhow::Result<Output> {
    let param = param_name(cfg);
    let loaded = load_graph_text(cfg)?;
    let tasks = graph_tasks(cfg, pts);
    let rows = workers.map(
        tasks.len(),
        |t| -> anyhow::Result<(usize, usize, f64, f64, f64)> {
            let (i, j) = tasks[t];
            let d = task_graph(cfg, loaded.as_deref(), &pts[i], j)?;
            let z = partition_function(&d.graph)?;
            let c = if d.graph.n() >= 2 {
                two_point(&d.graph)?
            } else {
                0.0
            };
            Ok((
                d.graph.n(),
                d.graph.m(),
                z.log_z,
                z.log_z / d.graph.n() as f64,
                c,
            ))
        },
    );
    let mut out = Output::new(Table::new(&[
        "param",
        "value",
        "graph",
        "n",
        "m",
        "log_z",
        "log_z_per_n",
        "two_point",
    ]));
    let mut acc = vec![factor_cavity_core::stats::MeanAcc::default(); pts.len()];
    for (&(i, j), r) in tasks.iter().zip(rows) {
        let (n, m, log_z, per_n, c) =
            r.with_context(|| format!("{}, graph {j}", point_label(&param, &pts[i])))?;
        acc[i].push(per_n);
        out.table.push(vec![
            param.clone(),
            cell(pts[i].value),
            j.to_string(),
            n.to_string(),
            m.to_string(),
            num(log_z),
            num(per_n),
            num(c),
        ]);
    }
    out.summary = Value::Array(
        pts.iter()
            .zip(&acc)
            .map(|(p, a)| json!({"point": p.index, "value": p.value, "mean_log_z_per_n": a.mean(), "stderr": a.stderr()}))
            .collect(),
    );
    Ok(out)
}

fn op_bp(cfg: &ExperimentConfig, pts: &[Point], workers: &Workers) -> anyhow::Result<Output> {
    let param = param_name(cfg);
    let loaded = load_graph_text(cfg)?;
    let tasks = graph_tasks(cfg, pts);
    let b = &cfg.budget;
    let rows = workers.map(tasks.len(), |t| -> anyhow::Result<Vec<String>> {
        let (i, j) = tasks[t];
        let d = task_graph(cfg, loaded.as_deref(), &pts[i], j)?;
        let g = &d.graph;
        let state = bp_run(g, b.bp_iters, b.damping, b.tol)?;
        let bethe = if state.converged {
            Some(bethe_instance(g, &state)?)
        } else {
            None
        };
        let log_z = match partition_function(g) {
            Ok(z) => Some(z.log_z),
            Err(Error::CapExceeded { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let diff = bethe.zip(log_z).map(|(a, b)| (a - b).abs());
        Ok(vec![
            param.clone(),
            cell(pts[i].value),
            j.to_string(),
            g.n().to_string(),
            g.m().to_string(),
            state.converged.to_string(),
            state.iterations.to_string(),
            num(state.max_change),
            cell(bethe),
            cell(log_z),
            cell(diff),
        ])
    });
    let mut out = Output::new(Table::new(&[
        "param",
        "value",
        "graph",
        "n",
        "m",
        "converged",
        "iterations",
        "max_change",
        "bethe",
        "log_z",
        "abs_diff",
    ]));
    for (&(i, j), r) in tasks.iter().zip(rows) {
        out.table
            .push(r.with_context(|| format!("{}, graph {j}", point_label(&param, &pts[i])))?);
    }
    Ok(out)
}

fn op_bethe(cfg: &ExperimentConfig, pts: &[Point], workers: &Workers) -> anyhow::Result<Output> {
    let param = param_name(cfg);
    let budget = cfg.budget.pd();
    let mut out = Output::new(Table::new(&[
        "param",
        "value",
        "candidate",
        "bethe",
        "stderr",
        "samples",
        "selected",
    ]));
    let mut summary = Vec::new();
    for p in pts {
        let ctx = || point_label(&param, p);
        let sup = parallel::sup_bethe(workers, &p.model, &budget, p.seed).with_context(ctx)?;
        let phi_a = annealed_free_entropy(&p.model).with_context(ctx)?;
        for (c, e) in &sup.candidates {
            out.table.push(vec![
                param.clone(),
                cell(p.value),
                c.tag(),
                num(e.value),
                num(e.stderr),
                e.samples.to_string(),
                (*c == sup.argmax).to_string(),
            ]);
        }
        out.table.push(vec![
            param.clone(),
            cell(p.value),
            "annealed".into(),
            num(phi_a),
            "0".into(),
            "0".into(),
            "false".into(),
        ]);
        summary.push(json!({"point": p.index, "value": p.value, "sup_bethe": sup.value, "argmax": sup.argmax.tag(), "phi_a": phi_a}));
    }
    out.summary = Value::Array(summary);
    Ok(out)
}

fn op_mi_scan(cfg: &ExperimentConfig, pts: &[Point], workers: &Workers) -> anyhow::Result<Output> {
    use factor_cavity_core::bethe::mutual_information_from;
    let param = param_name(cfg);
    let budget = cfg.budget.pd();
    let mut out = Output::new(Table::new(&[
        "param",
        "value",
        "mi",
        "stderr",
        "information_term",
        "sup_bethe",
        "argmax",
        "xi",
        "heuristic",
    ]));
    for p in pts {
        let ctx = || point_label(&param, p);
        let xi = require_assumptions(&p.model, cfg, derive_seed(p.seed, 1)).with_context(ctx)?;
        let sup = parallel::sup_bethe(workers, &p.model, &budget, p.seed).with_context(ctx)?;
        let mi = mutual_information_from(&p.model, sup).with_context(ctx)?;
        out.table.push(vec![
            param.clone(),
            cell(p.value),
            num(mi.value),
            num(mi.stderr),
            num(mi.information_term),
            num(mi.sup.value),
            mi.sup.argmax.tag(),
            num(xi),
            mi.sup.heuristic.to_string(),
        ]);
    }
    Ok(out)
}

fn op_threshold(
    cfg: &ExperimentConfig,
    pts: &[Point],
    workers: &Workers,
    seed: u64,
) -> anyhow::Result<Output> {
    let grid = cfg
        .grid
        .as_ref()
        .ok_or_else(|| anyhow!("threshold needs a [grid]"))?;
    let comparator = match &cfg.comparator {
        Some(c) => c.build()?,
        None => factor_cavity_core::bethe::Comparator::Annealed,
    };
    let by_value: Vec<(f64, ModelSpec)> = pts
        .iter()
        .map(|p| (p.value.expect("grid point"), p.model.clone()))
        .collect();
    let build = |v: f64| -> factor_cavity_core::Result<ModelSpec> {
        by_value
            .iter()
            .find(|(x, _)| *x == v)
            .map(|(_, m)| m.clone())
            .ok_or_else(|| Error::InvalidArgument(format!("{v} is not a grid value")))
    };
    let scan = parallel::threshold_scan(
        workers,
        build,
        &grid.values,
        comparator,
        &cfg.budget.pd(),
        seed,
    )?;
    let mut out = Output::new(Table::new(&[
        "param",
        "value",
        "b_uniform",
        "b_pd_uniform",
        "b_pd_uniform_stderr",
        "b_pd_planted",
        "b_pd_planted_stderr",
        "phi_a",
        "comparator",
        "crosses",
    ]));
    for r in &scan.rows {
        out.table.push(vec![
            grid.param.clone(),
            num(r.param),
            num(r.b_uniform),
            num(r.b_pd_uniform.value),
            num(r.b_pd_uniform.stderr),
            num(r.b_pd_planted.value),
            num(r.b_pd_planted.stderr),
            num(r.phi_a),
            num(r.comparator),
            r.crosses().to_string(),
        ]);
    }
    out.summary = match scan.bracket() {
        Ok((lo, hi)) => json!({"bracket": [lo, hi]}),
        Err(_) => {
            out.notes.push("no crossing on this grid".into());
            json!({"bracket": null})
        }
    };
    Ok(out)
}

fn op_selftest(
    cfg: Option<&ExperimentConfig>,
    pts: &[Point],
    workers: &Workers,
    opts: &RunOptions,
) -> anyhow::Result<Output> {
    if let Some(cfg) = cfg {
        // A supplied config is vetted first; a corrupted family stops here.
        for p in pts {
            let r = check_sym(&p.model.family, SYM_TOL);
            if !r.passed {
                return Err(Violation(format!(
                    "{}: SYM failed: {} (witness: {})",
                    point_label(&param_name(cfg), p),
                    r.detail,
                    r.witness.unwrap_or_default()
                ))
                .into());
            }
        }
    }
    let progress = |r: &CriterionResult| {
        if opts.verbose {
            println!("{}", r.line());
        }
    };
    let (results, table) = if opts.criteria.is_empty() {
        let alt = Workers::new(Some(if workers.count() > 1 { 1 } else { 2 }))?;
        let report = run_suite(workers, &alt, opts.seed, progress);
        (report.results, report.table)
    } else {
        let results: Vec<_> = opts
            .criteria
            .iter()
            .map(|&id| run_criterion(id, workers, opts.seed))
            .inspect(progress)
            .collect();
        let table = to_table(&results);
        (results, table)
    };
    let mut out = Output::new(table);
    out.summary = Value::Array(
        results
            .iter()
            .map(|r| json!({"criterion": r.id, "passed": r.passed(), "elapsed_s": r.elapsed.as_secs_f64(), "budget_s": r.budget.as_secs_f64()}))
            .collect(),
    );
    for r in results.iter().filter(|r| !r.passed()) {
        out.violations.push(format!("criterion {} failed", r.id));
    }
    Ok(out)
}

/// Runs `op`, writes `<op>.csv` and `manifest.json` under `opts.out`, and
/// returns an error for violations or failures. The caller records errors.
pub fn execute(
    op: Operation,
    cfg: Option<&ExperimentConfig>,
    workers: &Workers,
    opts: &RunOptions,
) -> anyhow::Result<Manifest> {
    let start = Instant::now();
    let pts = match cfg {
        Some(c) => points(c, opts.seed)?,
        None => Vec::new(),
    };
    fn need(op: Operation, c: Option<&ExperimentConfig>) -> anyhow::Result<&ExperimentConfig> {
        c.ok_or_else(|| anyhow!("{op} needs a model (--config or --model)"))
    }
    let out = match op {
        Operation::Check => op_check(need(op, cfg)?, &pts, workers, opts.verbose)?,
        Operation::Sample => op_sample(need(op, cfg)?, &pts, workers, &opts.out)?,
        Operation::Exact => op_exact(need(op, cfg)?, &pts, workers)?,
        Operation::Bp => op_bp(need(op, cfg)?, &pts, workers)?,
        Operation::Bethe => op_bethe(need(op, cfg)?, &pts, workers)?,
        Operation::MiScan => op_mi_scan(need(op, cfg)?, &pts, workers)?,
        Operation::Threshold => op_threshold(need(op, cfg)?, &pts, workers, opts.seed)?,
        Operation::Selftest => op_selftest(cfg, &pts, workers, opts)?,
    };
    let digest = match cfg {
        Some(c) => inputs_digest(c, op, opts.seed),
        None => sha256_hex(
            format!(
                "operation = {op:?}\nseed = {}\ncriteria = {:?}\n",
                opts.seed, opts.criteria
            )
            .as_bytes(),
        ),
    };
    let budget = cfg
        .map(|c| serde_json::to_value(&c.budget))
        .transpose()?
        .unwrap_or(Value::Null);
    let mut manifest = Manifest::new(op.name(), digest, opts.seed, budget, workers.count());
    write_table(&opts.out, op.name(), &out.table, &mut manifest)?;
    manifest.outputs.extend(out.extra);
    manifest.summary = out.summary;
    manifest.notes = out.notes;
    manifest.notes.extend(out.violations.iter().cloned());
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    write_json(&opts.out, "manifest.json", &manifest)?;
    if !out.violations.is_empty() {
        return Err(Violation(out.violations.join("; ")).into());
    }
    Ok(manifest)
}

/// Writes `error.json` next to the other outputs and returns the exit code.
pub fn record_error(op: &str, out: &Path, err: &anyhow::Error) -> i32 {
    let rec = error_record(op, err);
    if let Err(e) = write_json(out, "error.json", &rec) {
        eprintln!("could not write error record: {e:#}");
    }
    rec.exit_code
}

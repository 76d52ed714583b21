use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use factor_cavity::config::{ExperimentConfig, GridConfig, ModelConfig, SpecConfig};
use factor_cavity::parallel::{Workers, WORKERS_ENV};
use factor_cavity::run::{execute, record_error, Operation, RunOptions, EXIT_OK};

#[derive(Parser)]
#[command(
    name = "factor-cavity",
    version,
    about = "Sparse random factor-graph models: samplers, exact oracles, Bethe estimates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the config value, then all cores.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Output directory; defaults to the config value, then `factor-cavity-out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress human-readable output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Subcommand)]
enum Command {
    /// DEG, SYM, BAL and POS reports for every grid point.
    Check,
    /// Draw null, planted or Nishimori graphs and save them.
    Sample,
    /// Exact partition functions and two-point correlations.
    Exact,
    /// Belief propagation and the instance Bethe free entropy.
    Bp,
    /// Bethe functional candidates and the annealed free entropy.
    Bethe,
    /// Mutual information per grid point.
    MiScan,
    /// Condensation / long-range-correlation threshold scan.
    Threshold,
    /// Acceptance suite.
    Selftest {
        /// Run only these criteria (the determinism rerun is skipped).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
}

impl Command {
    fn operation(&self) -> Operation {
        match self {
            Command::Check => Operation::Check,
            Command::Sample => Operation::Sample,
            Command::Exact => Operation::Exact,
            Command::Bp => Operation::Bp,
            Command::Bethe => Operation::Bethe,
            Command::MiScan => Operation::MiScan,
            Command::Threshold => Operation::Threshold,
            Command::Selftest { .. } => Operation::Selftest,
        }
    }
}

/// Model flags; each overrides the matching config field.
#[derive(Args, Default)]
struct ModelArgs {
    /// ldgm, sbm, potts, assortative-sbm, kspin.
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    q: Option<usize>,
    #[arg(long, global = true)]
    d: Option<f64>,
    #[arg(long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    r: Option<usize>,
    /// `3`, `poisson:2.5` or `2:0.5,3:0.5`.
    #[arg(long, global = true)]
    dspec: Option<String>,
    #[arg(long, global = true)]
    kspec: Option<String>,
    /// `param=v1,v2,...`
    #[arg(long, global = true)]
    grid: Option<String>,
}

fn parse_spec(s: &str) -> anyhow::Result<SpecConfig> {
    if let Some(mean) = s.strip_prefix("poisson:") {
        return Ok(SpecConfig::Poisson {
            poisson: mean.parse().context("poisson mean")?,
            max: None,
        });
    }
    if !s.contains(':') {
        return Ok(SpecConfig::Constant {
            constant: s.parse().with_context(|| format!("degree spec {s:?}"))?,
        });
    }
    let (mut support, mut mass) = (Vec::new(), Vec::new());
    for part in s.split(',') {
        let (v, p) = part
            .split_once(':')
            .ok_or_else(|| anyhow!("expected value:mass in {part:?}"))?;
        support.push(v.trim().parse()?);
        mass.push(p.trim().parse()?);
    }
    Ok(SpecConfig::Table { support, mass })
}

fn parse_grid(s: &str) -> anyhow::Result<GridConfig> {
    let (param, values) = s
        .split_once('=')
        .ok_or_else(|| anyhow!("grid must look like param=v1,v2"))?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GridConfig {
        param: param.trim().into(),
        values,
    })
}

impl ModelArgs {
    fn is_empty(&self) -> bool {
        self.model.is_none()
            && self.eta.is_none()
            && self.beta.is_none()
            && self.q.is_none()
            && self.d.is_none()
            && self.k.is_none()
            && self.r.is_none()
            && self.dspec.is_none()
            && self.kspec.is_none()
            && self.grid.is_none()
    }

    fn apply(&self, m: &mut ModelConfig) -> anyhow::Result<()> {
        if let Some(name) = &self.model {
            m.name = name.clone();
        }
        m.eta = self.eta.or(m.eta);
        m.beta = self.beta.or(m.beta);
        m.q = self.q.or(m.q);
        m.d = self.d.or(m.d);
        m.k = self.k.or(m.k);
        m.r = self.r.or(m.r);
        if let Some(s) = &self.dspec {
            m.dspec = Some(parse_spec(s)?);
        }
        if let Some(s) = &self.kspec {
            m.kspec = Some(parse_spec(s)?);
        }
        Ok(())
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<Option<ExperimentConfig>> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(
                toml::from_str::<ExperimentConfig>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?,
            )
        }
        None if cli.model.is_empty() => None,
        None => {
            let name = cli
                .model
                .model
                .clone()
                .ok_or_else(|| anyhow!("--model is required without --config"))?;
            Some(ExperimentConfig {
                operation: None,
                seed: None,
                workers: None,
                model: ModelConfig {
                    name,
                    ..ModelConfig::default()
                },
                grid: None,
                budget: Default::default(),
                sample: Default::default(),
                comparator: None,
                graph: None,
                output: Default::default(),
            })
        }
    };
    if let Some(c) = cfg.as_mut() {
        cli.model.apply(&mut c.model)?;
        if let Some(g) = &cli.model.grid {
            c.grid = Some(parse_grid(g)?);
        }
        if let Some(op) = &c.operation {
            if Operation::parse(op).is_none() {
                bail!("unknown operation {op:?} in config");
            }
        }
        c.validate()?;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let op = cli.command.operation();
    let cfg = load_config(&cli);
    let out = cli
        .out
        .clone()
        .or_else(|| {
            cfg.as_ref()
                .ok()
                .and_then(|c| c.as_ref()?.output.dir.clone().map(PathBuf::from))
        })
        .unwrap_or_else(|| PathBuf::from("factor-cavity-out"));
    let code = run(&cli, op, cfg, &out).unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        record_error(op.name(), &out, &e)
    });
    ExitCode::from(code as u8)
}

fn run(
    cli: &Cli,
    op: Operation,
    cfg: anyhow::Result<Option<ExperimentConfig>>,
    out: &std::path::Path,
) -> anyhow::Result<i32> {
    let cfg = cfg?;
    let workers = Workers::new(cli.workers.or(cfg.as_ref().and_then(|c| c.workers)))?;
    let seed = cli.seed.or(cfg.as_ref().and_then(|c| c.seed)).unwrap_or(0);
    let criteria = match &cli.command {
        Command::Selftest { criteria } => criteria.clone(),
        _ => Vec::new(),
    };
    let opts = RunOptions {
        seed,
        out: out.to_path_buf(),
        criteria,
        verbose: !cli.quiet,
    };
    let manifest = execute(op, cfg.as_ref(), &workers, &opts)?;
    if !cli.quiet {
        for o in &manifest.outputs {
            if !o.path.contains('/') {
                println!("wrote {} ({} rows)", out.join(&o.path).display(), o.rows);
            }
        }
    }
    Ok(EXIT_OK)
}

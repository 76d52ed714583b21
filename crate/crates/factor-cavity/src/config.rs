//! Experiment configuration (TOML).
//!
//! ```toml
//! operation = "mi-scan"
//! seed = 7
//!
//! [model]
//! name = "ldgm"
//! eta = 0.1
//! dspec = { constant = 2 }
//! kspec = { constant = 2 }
//!
//! [grid]
//! param = "eta"
//! values = [0.1, 0.3, 0.5]
//!
//! [budget]
//! pop_size = 10000
//! sweeps = 200
//! ```

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use factor_cavity_core::bethe::{AssumptionPolicy, Comparator, PdBudget};
use factor_cavity_core::models::{
    assortative_sbm, kspin, ldgm, poisson_degrees, potts, sbm, KSPIN_DEFAULT_R,
};
use factor_cavity_core::sampling::SamplerConfig;
use factor_cavity_core::{
    ArityFamily, DegreeSpec, ModelKind, ModelSpec, WeightFamily, WeightTable,
};
use serde::{Deserialize, Serialize};

/// Model names understood by [`ModelConfig::build`].
pub const MODEL_NAMES: [&str; 6] = ["ldgm", "sbm", "potts", "assortative-sbm", "kspin", "custom"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum SpecConfig {
    Constant { constant: usize },
    Poisson { poisson: f64, max: Option<usize> },
    Table { support: Vec<usize>, mass: Vec<f64> },
}

impl SpecConfig {
    pub fn build(&self) -> anyhow::Result<DegreeSpec> {
        Ok(match self {
            SpecConfig::Constant { constant } => DegreeSpec::constant(*constant)?,
            SpecConfig::Poisson { poisson, max: None } => poisson_degrees(*poisson)?,
            SpecConfig::Poisson {
                poisson,
                max: Some(m),
            } => DegreeSpec::poisson(*poisson, *m)?,
            SpecConfig::Table { support, mass } => {
                if support.len() != mass.len() {
                    bail!("support and mass differ in length");
                }
                let pairs: Vec<(usize, f64)> =
                    support.iter().copied().zip(mass.iter().copied()).collect();
                DegreeSpec::new(&pairs)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArityConfig {
    pub k: usize,
    /// Flat tables in lexicographic order of `Ω^k`.
    pub tables: Vec<Vec<f64>>,
    /// Defaults to uniform over the tables.
    pub mass: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub q: usize,
    pub arity: Vec<ArityConfig>,
}

impl FamilyConfig {
    pub fn build(&self) -> anyhow::Result<WeightFamily> {
        let fams = self
            .arity
            .iter()
            .map(|a| {
                let len = (self.q as u64)
                    .checked_pow(a.k as u32)
                    .ok_or_else(|| anyhow!("q^k overflows"))?;
                if let Some(bad) = a.tables.iter().find(|t| t.len() as u64 != len) {
                    bail!(
                        "arity {} table has {} entries, expected {len}",
                        a.k,
                        bad.len()
                    );
                }
                // Positivity is left to the SYM checker so a bad entry is
                // reported as an assumption violation with a witness.
                let tables: Vec<WeightTable> = a
                    .tables
                    .iter()
                    .map(|v| WeightTable::new_unchecked(self.q, a.k, v.clone()))
                    .collect();
                let mass = a
                    .mass
                    .clone()
                    .unwrap_or_else(|| vec![1.0 / tables.len() as f64; tables.len()]);
                Ok(ArityFamily::new(tables, mass)?)
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        Ok(WeightFamily::new(self.q, fams)?)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    pub eta: Option<f64>,
    pub q: Option<usize>,
    pub beta: Option<f64>,
    /// Degree for the SBM family, mean Poisson degree for k-spin, constant
    /// variable degree for LDGM.
    pub d: Option<f64>,
    /// Constant arity shorthand for LDGM.
    pub k: Option<usize>,
    pub r: Option<usize>,
    pub dspec: Option<SpecConfig>,
    pub kspec: Option<SpecConfig>,
    pub family: Option<FamilyConfig>,
}

fn need<T: Copy>(v: Option<T>, what: &str, model: &str) -> anyhow::Result<T> {
    v.ok_or_else(|| anyhow!("model {model} needs `{what}`"))
}

fn integer(x: f64, what: &str) -> anyhow::Result<usize> {
    if x >= 0.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        bail!("`{what}` must be a non-negative integer here, got {x}")
    }
}

impl ModelConfig {
    fn spec_or(
        &self,
        spec: &Option<SpecConfig>,
        constant: Option<usize>,
        what: &str,
    ) -> anyhow::Result<DegreeSpec> {
        match (spec, constant) {
            (Some(s), _) => s.build(),
            (None, Some(c)) => Ok(DegreeSpec::constant(c)?),
            (None, None) => bail!("model {} needs `{what}`", self.name),
        }
    }

    pub fn build(&self) -> anyhow::Result<ModelSpec> {
        let name = self.name.as_str();
        let spec = match name {
            "ldgm" => {
                let d = self.d.map(|d| integer(d, "d")).transpose()?;
                ldgm(
                    need(self.eta, "eta", name)?,
                    self.spec_or(&self.dspec, d, "dspec")?,
                    self.spec_or(&self.kspec, self.k, "kspec")?,
                )?
            }
            "sbm" | "potts" | "assortative-sbm" => {
                let q = self.q.unwrap_or(2);
                let beta = need(self.beta, "beta", name)?;
                let d = integer(need(self.d, "d", name)?, "d")?;
                match name {
                    "sbm" => sbm(q, beta, d)?,
                    "potts" => potts(q, beta, d)?,
                    _ => assortative_sbm(q, beta, d)?,
                }
            }
            "kspin" => {
                let kspec = match &self.kspec {
                    Some(s) => s.build()?,
                    None => DegreeSpec::constant(self.k.unwrap_or(2))?,
                };
                let dspec = match &self.dspec {
                    Some(s) => s.build()?,
                    None => poisson_degrees(need(self.d, "d", name)?)?,
                };
                kspin(
                    need(self.beta, "beta", name)?,
                    kspec,
                    dspec,
                    self.r.unwrap_or(KSPIN_DEFAULT_R),
                )?
            }
            "custom" => {
                let fam = self
                    .family
                    .as_ref()
                    .ok_or_else(|| anyhow!("model custom needs [model.family]"))?
                    .build()?;
                ModelSpec::new(
                    ModelKind::Custom {
                        name: "custom".into(),
                    },
                    self.spec_or(&self.dspec, None, "dspec")?,
                    self.spec_or(&self.kspec, None, "kspec")?,
                    fam,
                )?
            }
            other => bail!(
                "unknown model {other:?}; expected one of {}",
                MODEL_NAMES.join(", ")
            ),
        };
        Ok(spec)
    }

    /// Copy with one scalar parameter replaced by a grid value.
    pub fn with_param(&self, param: &str, value: f64) -> anyhow::Result<Self> {
        let mut m = self.clone();
        match param {
            "eta" => m.eta = Some(value),
            "beta" => m.beta = Some(value),
            "d" => {
                m.d = Some(value);
                m.dspec = None;
            }
            "q" => m.q = Some(integer(value, "q")?),
            "r" => m.r = Some(integer(value, "r")?),
            "k" => {
                m.k = Some(integer(value, "k")?);
                m.kspec = None;
            }
            other => bail!("unknown grid parameter {other:?}"),
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub pop_size: usize,
    pub sweeps: usize,
    pub eval_samples: usize,
    pub restarts: usize,
    /// Variables per graph for samplers and exact estimators.
    pub n: usize,
    /// Planted graphs per Monte-Carlo estimate.
    pub graphs: usize,
    pub pos_trials: usize,
    pub pos_samples: usize,
    pub bal_resolution: usize,
    pub check_bal: bool,
    pub bp_iters: usize,
    pub damping: f64,
    pub tol: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let pd = PdBudget::default();
        Self {
            pop_size: pd.pop_size,
            sweeps: pd.sweeps,
            eval_samples: pd.eval_samples,
            restarts: pd.restarts,
            n: 10,
            graphs: 100,
            pos_trials: 100,
            pos_samples: factor_cavity_core::bethe::POS_SAMPLES,
            bal_resolution: factor_cavity_core::bethe::BAL_RESOLUTION,
            check_bal: true,
            bp_iters: 10_000,
            damping: 0.5,
            tol: 1e-10,
        }
    }
}

impl BudgetConfig {
    pub fn pd(&self) -> PdBudget {
        PdBudget {
            pop_size: self.pop_size,
            sweeps: self.sweeps,
            eval_samples: self.eval_samples,
            restarts: self.restarts,
        }
    }

    pub fn policy(&self, seed: u64) -> AssumptionPolicy {
        AssumptionPolicy {
            check_bal: self.check_bal,
            pos_trials: self.pos_trials,
            seed,
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let positive = [
            ("pop_size", self.pop_size),
            ("eval_samples", self.eval_samples),
            ("n", self.n),
            ("graphs", self.graphs),
            ("bal_resolution", self.bal_resolution),
            ("bp_iters", self.bp_iters),
        ];
        for (name, v) in positive {
            if v == 0 {
                bail!("budget.{name} must be positive");
            }
        }
        if !(0.0..1.0).contains(&self.damping) {
            bail!("budget.damping must lie in [0, 1)");
        }
        if !(self.tol > 0.0) {
            bail!("budget.tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    #[default]
    Null,
    Planted,
    Nishimori,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SampleConfig {
    pub kind: GraphKind,
    /// Pins appended to planted graphs.
    pub theta: usize,
    pub simple_only: bool,
    /// Pruned sequences with this `eps` instead of balanced ones.
    pub eps: Option<f64>,
}

impl SampleConfig {
    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            simple_only: self.simple_only,
            ..SamplerConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComparatorConfig {
    Named(String),
    Value(f64),
}

impl ComparatorConfig {
    pub fn build(&self) -> anyhow::Result<Comparator> {
        match self {
            ComparatorConfig::Named(s) if s == "annealed" => Ok(Comparator::Annealed),
            ComparatorConfig::Named(s) if s == "ln2" => {
                Ok(Comparator::Explicit(std::f64::consts::LN_2))
            }
            ComparatorConfig::Named(s) => {
                bail!("unknown comparator {s:?}; use \"annealed\", \"ln2\" or a number")
            }
            ComparatorConfig::Value(v) => Ok(Comparator::Explicit(*v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub operation: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub model: ModelConfig,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub budget: BudgetConfig,
    #[serde(default)]
    pub sample: SampleConfig,
    pub comparator: Option<ComparatorConfig>,
    /// Graph file for `exact` and `bp`; sampled from the model when absent.
    pub graph: Option<String>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !MODEL_NAMES.contains(&self.model.name.as_str()) {
            bail!(
                "unknown model {:?}; expected one of {}",
                self.model.name,
                MODEL_NAMES.join(", ")
            );
        }
        if let Some(g) = &self.grid {
            if g.values.is_empty() {
                bail!("grid.values must be nonempty");
            }
        }
        self.budget.validate()?;
        for point in self.points() {
            self.model_at(point)?.build()?;
        }
        Ok(())
    }

    /// Grid values, or a single point without override.
    pub fn points(&self) -> Vec<Option<f64>> {
        match &self.grid {
            Some(g) => g.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        }
    }

    pub fn model_at(&self, point: Option<f64>) -> anyhow::Result<ModelConfig> {
        match (point, &self.grid) {
            (Some(v), Some(g)) => self.model.with_param(&g.param, v),
            _ => Ok(self.model.clone()),
        }
    }

    /// Canonical serialisation used for the inputs digest.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

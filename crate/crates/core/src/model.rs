//! A model: degree laws on both sides plus a weight family.

use alloc::string::String;
use alloc::sync::Arc;

use crate::assumptions::check_sym;
use crate::degree::DegreeSpec;
use crate::error::{Error, Result};
use crate::family::WeightFamily;

/// Which constructor produced a spec, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Ldgm {
        eta: f64,
    },
    Sbm {
        q: usize,
        beta: f64,
    },
    /// Same tables as [`ModelKind::Sbm`]; the quantity of interest is the
    /// null model's free entropy.
    Potts {
        q: usize,
        beta: f64,
    },
    /// `exp(+β·1{σ1=σ2})`. Violates POS; only used by the falsifier.
    AssortativeSbm {
        q: usize,
        beta: f64,
    },
    KSpin {
        beta: f64,
        r: usize,
    },
    Custom {
        name: String,
    },
}

impl ModelKind {
    pub fn name(&self) -> &str {
        match self {
            ModelKind::Ldgm { .. } => "ldgm",
            ModelKind::Sbm { .. } => "sbm",
            ModelKind::Potts { .. } => "potts",
            ModelKind::AssortativeSbm { .. } => "assortative-sbm",
            ModelKind::KSpin { .. } => "kspin",
            ModelKind::Custom { name } => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub dspec: DegreeSpec,
    pub kspec: DegreeSpec,
    pub family: Arc<WeightFamily>,
}

/// Relative tolerance used when a spec computes its own `ξ`.
pub const SYM_TOL: f64 = 1e-12;

impl ModelSpec {
    pub fn new(
        kind: ModelKind,
        dspec: DegreeSpec,
        kspec: DegreeSpec,
        family: WeightFamily,
    ) -> Result<Self> {
        if !family.supports(kspec.support()) {
            return Err(Error::InvalidFamily(
                "family misses an arity in the arity spec".into(),
            ));
        }
        Ok(Self {
            kind,
            dspec,
            kspec,
            family: Arc::new(family),
        })
    }

    pub fn q(&self) -> usize {
        self.family.q()
    }

    /// `ξ` from the exact SYM check, or `SymViolation`.
    pub fn xi(&self) -> Result<f64> {
        let report = check_sym(&self.family, SYM_TOL);
        match report.xi {
            Some(xi) if report.passed => Ok(xi),
            _ => Err(Error::SymViolation(report.detail)),
        }
    }

    /// Same model with different degree laws.
    pub fn with_degrees(&self, dspec: DegreeSpec, kspec: DegreeSpec) -> Result<Self> {
        if !self.family.supports(kspec.support()) {
            return Err(Error::InvalidFamily(
                "family misses an arity in the arity spec".into(),
            ));
        }
        Ok(Self {
            kind: self.kind.clone(),
            dspec,
            kspec,
            family: self.family.clone(),
        })
    }
}

//! Degree sequences, factor graphs and spin assignments.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::family::{encode, WeightFamily, WeightTable};

/// Target degrees of the variables and arities of the factors.
///
/// Balanced sequences have `Σd = Σk`; pruned ones have `Σd ≥ Σk` and the
/// surplus becomes cavities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequence {
    pub var_degrees: Vec<usize>,
    pub arities: Vec<usize>,
    /// Draws rejected before this one was accepted.
    pub rejections: u64,
}

impl DegreeSequence {
    pub fn new(var_degrees: Vec<usize>, arities: Vec<usize>) -> Result<Self> {
        let seq = Self {
            var_degrees,
            arities,
            rejections: 0,
        };
        if seq.total_factor_degree() > seq.total_var_degree() {
            return Err(Error::InvalidGraph(format!(
                "factor degree {} exceeds variable degree {}",
                seq.total_factor_degree(),
                seq.total_var_degree()
            )));
        }
        Ok(seq)
    }

    pub fn n(&self) -> usize {
        self.var_degrees.len()
    }

    pub fn m(&self) -> usize {
        self.arities.len()
    }

    pub fn total_var_degree(&self) -> usize {
        self.var_degrees.iter().sum()
    }

    pub fn total_factor_degree(&self) -> usize {
        self.arities.iter().sum()
    }

    /// `Δ = Σd − Σk`.
    pub fn cavity_count(&self) -> usize {
        self.total_var_degree() - self.total_factor_degree()
    }

    pub fn is_balanced(&self) -> bool {
        self.cavity_count() == 0
    }

    /// Owner variable of every variable clone, clones numbered variable by variable.
    pub fn clone_owners(&self) -> Vec<usize> {
        clone_owners(&self.var_degrees)
    }

    /// Offset of each factor's first clone in the flattened factor-clone list.
    pub fn factor_offsets(&self) -> Vec<usize> {
        offsets(&self.arities)
    }
}

pub(crate) fn clone_owners(degrees: &[usize]) -> Vec<usize> {
    degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| core::iter::repeat_n(v, d))
        .collect()
}

pub(crate) fn offsets(lengths: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    lengths
        .iter()
        .map(|&l| {
            let o = acc;
            acc += l;
            o
        })
        .collect()
}

/// A spin configuration `σ ∈ Ω^n`, spins encoded as `0..q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[usize] {
        &self.0
    }

    /// The `index`-th assignment of `Ω^n` in lexicographic order.
    pub fn from_index(index: usize, n: usize, q: usize) -> Self {
        let mut spins = vec![0; n];
        crate::family::decode(index, q, &mut spins);
        Self(spins)
    }

    pub fn index(&self, q: usize) -> usize {
        encode(self.0.iter().copied(), q)
    }

    pub fn validate(&self, n: usize, q: usize) -> Result<()> {
        if self.0.len() != n {
            return Err(Error::InvalidArgument(format!(
                "assignment has length {}, expected {n}",
                self.0.len()
            )));
        }
        if let Some(s) = self.0.iter().find(|&&s| s >= q) {
            return Err(Error::InvalidArgument(format!(
                "spin {s} outside alphabet of size {q}"
            )));
        }
        Ok(())
    }

    /// Counts of each spin.
    pub fn histogram(&self, q: usize) -> Vec<usize> {
        let mut h = vec![0; q];
        for &s in &self.0 {
            h[s] += 1;
        }
        h
    }
}

/// A unary factor `1{σ_var = spin}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pin {
    pub var: usize,
    pub spin: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    /// Index of the weight table within the family for this arity.
    pub weight: usize,
    /// Neighbour tuple in clone order; repeated entries are multi-edges.
    pub vars: Vec<usize>,
}

impl Factor {
    pub fn arity(&self) -> usize {
        self.vars.len()
    }
}

/// A factor graph with clone-level pairing information.
#[derive(Debug, Clone)]
pub struct FactorGraph {
    family: Arc<WeightFamily>,
    var_degrees: Vec<usize>,
    factors: Vec<Factor>,
    /// Factor clone (flattened in factor order) → variable clone.
    pairing: Vec<usize>,
    /// Variable clones left unmatched.
    cavities: Vec<usize>,
    pins: Vec<Pin>,
}

impl PartialEq for FactorGraph {
    fn eq(&self, other: &Self) -> bool {
        self.var_degrees == other.var_degrees
            && self.factors == other.factors
            && self.pairing == other.pairing
            && self.cavities == other.cavities
            && self.pins == other.pins
            && (Arc::ptr_eq(&self.family, &other.family) || self.family == other.family)
    }
}

impl FactorGraph {
    /// Builds a graph from a clone-level pairing of `seq`: `pairing[c]` is the
    /// variable clone matched to factor clone `c`.
    pub fn from_pairing(
        family: Arc<WeightFamily>,
        seq: &DegreeSequence,
        pairing: Vec<usize>,
        weights: Vec<usize>,
    ) -> Result<Self> {
        let owners = seq.clone_owners();
        if pairing.len() != seq.total_factor_degree() {
            return Err(Error::InvalidGraph(
                "pairing does not cover every factor clone".into(),
            ));
        }
        if weights.len() != seq.m() {
            return Err(Error::InvalidGraph("need one weight id per factor".into()));
        }
        let mut used = vec![false; owners.len()];
        for &c in &pairing {
            if c >= owners.len() || core::mem::replace(&mut used[c], true) {
                return Err(Error::InvalidGraph(format!(
                    "variable clone {c} is out of range or matched twice"
                )));
            }
        }
        let cavities = (0..owners.len()).filter(|&c| !used[c]).collect();
        let mut factors = Vec::with_capacity(seq.m());
        let mut cursor = 0;
        for (&k, &w) in seq.arities.iter().zip(&weights) {
            let vars = pairing[cursor..cursor + k]
                .iter()
                .map(|&c| owners[c])
                .collect();
            cursor += k;
            factors.push(Factor { weight: w, vars });
        }
        let g = Self {
            family,
            var_degrees: seq.var_degrees.clone(),
            factors,
            pairing,
            cavities,
            pins: Vec::new(),
        };
        g.validate_weights()?;
        Ok(g)
    }

    /// Builds a graph from explicit factors on `n` variables. Variable degrees
    /// are the observed ones and clones are assigned in order of appearance.
    pub fn from_factors(family: Arc<WeightFamily>, n: usize, factors: Vec<Factor>) -> Result<Self> {
        let mut var_degrees = vec![0; n];
        for f in &factors {
            for &v in &f.vars {
                if v >= n {
                    return Err(Error::InvalidGraph(format!(
                        "variable {v} out of range for n = {n}"
                    )));
                }
                var_degrees[v] += 1;
            }
        }
        let starts = offsets(&var_degrees);
        let mut next = vec![0; n];
        let pairing = factors
            .iter()
            .flat_map(|f| f.vars.iter())
            .map(|&v| {
                let c = starts[v] + next[v];
                next[v] += 1;
                c
            })
            .collect();
        let g = Self {
            family,
            var_degrees,
            factors,
            pairing,
            cavities: Vec::new(),
            pins: Vec::new(),
        };
        g.validate_weights()?;
        Ok(g)
    }

    fn validate_weights(&self) -> Result<()> {
        for (i, f) in self.factors.iter().enumerate() {
            let fam = self.family.arity(f.arity())?;
            if f.weight >= fam.tables().len() {
                return Err(Error::InvalidGraph(format!(
                    "factor {i} uses unknown weight id {}",
                    f.weight
                )));
            }
        }
        Ok(())
    }

    pub fn with_pins(mut self, pins: Vec<Pin>) -> Result<Self> {
        for p in &pins {
            if p.var >= self.n() || p.spin >= self.q() {
                return Err(Error::InvalidGraph(format!("pin {p:?} out of range")));
            }
        }
        self.pins = pins;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.var_degrees.len()
    }

    pub fn m(&self) -> usize {
        self.factors.len()
    }

    pub fn q(&self) -> usize {
        self.family.q()
    }

    pub fn family(&self) -> &Arc<WeightFamily> {
        &self.family
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn var_degrees(&self) -> &[usize] {
        &self.var_degrees
    }

    pub fn pairing(&self) -> &[usize] {
        &self.pairing
    }

    pub fn cavities(&self) -> &[usize] {
        &self.cavities
    }

    pub fn pins(&self) -> &[Pin] {
        &self.pins
    }

    pub fn table(&self, factor: usize) -> &WeightTable {
        let f = &self.factors[factor];
        self.family.table(f.arity(), f.weight)
    }

    /// The degree sequence this graph realises (pins excluded).
    pub fn degree_sequence(&self) -> DegreeSequence {
        DegreeSequence {
            var_degrees: self.var_degrees.clone(),
            arities: self.factors.iter().map(Factor::arity).collect(),
            rejections: 0,
        }
    }

    /// True when no variable occurs twice in the same factor.
    pub fn is_simple(&self) -> bool {
        self.factors.iter().all(|f| {
            let mut vs = f.vars.clone();
            vs.sort_unstable();
            vs.windows(2).all(|w| w[0] != w[1])
        })
    }

    pub fn pins_satisfied(&self, sigma: &[usize]) -> bool {
        self.pins.iter().all(|p| sigma[p.var] == p.spin)
    }

    /// `ln ψ_G(σ)`, `-∞` when a pin is violated.
    pub fn log_weight(&self, sigma: &[usize]) -> f64 {
        if !self.pins_satisfied(sigma) {
            return f64::NEG_INFINITY;
        }
        let q = self.q();
        self.factors
            .iter()
            .enumerate()
            .map(|(i, f)| {
                self.table(i)
                    .at_index(encode(f.vars.iter().map(|&v| sigma[v]), q))
                    .ln()
            })
            .sum()
    }

    /// `ψ_G(σ)` as a plain product.
    pub fn weight(&self, sigma: &[usize]) -> f64 {
        if !self.pins_satisfied(sigma) {
            return 0.0;
        }
        let q = self.q();
        self.factors
            .iter()
            .enumerate()
            .map(|(i, f)| {
                self.table(i)
                    .at_index(encode(f.vars.iter().map(|&v| sigma[v]), q))
            })
            .product()
    }

    /// Clone-level identity of the graph: the pairing plus weight ids.
    pub fn key(&self) -> GraphKey {
        GraphKey {
            pairing: self.pairing.clone(),
            weights: self.factors.iter().map(|f| f.weight).collect(),
        }
    }

    /// Replaces the weight ids, keeping topology.
    pub fn with_weights(mut self, weights: &[usize]) -> Result<Self> {
        if weights.len() != self.m() {
            return Err(Error::InvalidGraph("need one weight id per factor".into()));
        }
        for (f, &w) in self.factors.iter_mut().zip(weights) {
            f.weight = w;
        }
        self.validate_weights()?;
        Ok(self)
    }
}

/// Identifies a factor graph at clone level, ignoring pins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphKey {
    pub pairing: Vec<usize>,
    pub weights: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{ArityFamily, WeightTable};

    fn fam() -> Arc<WeightFamily> {
        let t = WeightTable::from_fn(2, 2, |s| if s[0] == s[1] { 2.0 } else { 1.0 }).unwrap();
        Arc::new(WeightFamily::new(2, vec![ArityFamily::single(t).unwrap()]).unwrap())
    }

    #[test]
    fn pairing_must_be_injective() {
        let seq = DegreeSequence::new(vec![1, 1], vec![2]).unwrap();
        assert!(FactorGraph::from_pairing(fam(), &seq, vec![0, 0], vec![0]).is_err());
        let g = FactorGraph::from_pairing(fam(), &seq, vec![1, 0], vec![0]).unwrap();
        assert_eq!(g.factors()[0].vars, vec![1, 0]);
        assert!(g.cavities().is_empty());
    }

    #[test]
    fn cavities_are_unmatched_clones() {
        let seq = DegreeSequence::new(vec![2, 1], vec![2]).unwrap();
        let g = FactorGraph::from_pairing(fam(), &seq, vec![2, 1], vec![0]).unwrap();
        assert_eq!(g.cavities(), &[0]);
        assert_eq!(g.factors()[0].vars, vec![1, 0]);
    }

    #[test]
    fn pins_zero_out_weight() {
        let g = FactorGraph::from_factors(
            fam(),
            2,
            vec![Factor {
                weight: 0,
                vars: vec![0, 1],
            }],
        )
        .unwrap()
        .with_pins(vec![Pin { var: 0, spin: 1 }])
        .unwrap();
        assert_eq!(g.weight(&[0, 0]), 0.0);
        assert_eq!(g.weight(&[1, 1]), 2.0);
        assert_eq!(g.log_weight(&[0, 1]), f64::NEG_INFINITY);
    }

    #[test]
    fn simple_detection() {
        let g = FactorGraph::from_factors(
            fam(),
            2,
            vec![Factor {
                weight: 0,
                vars: vec![0, 0],
            }],
        )
        .unwrap();
        assert!(!g.is_simple());
    }
}

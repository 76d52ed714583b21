//! Sum-product belief propagation on a single instance.
//!
//! Messages live on factor clones (one per edge, multi-edges included).
//! Pins act as priors on their variables.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::family::{contract, contract_except};
use crate::graph::FactorGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct BpState {
    q: usize,
    /// Variable-to-factor messages, `q` entries per factor clone.
    pub to_factor: Vec<f64>,
    /// Factor-to-variable messages, `q` entries per factor clone.
    pub to_var: Vec<f64>,
    pub iterations: usize,
    /// Sup-norm change of the last sweep.
    pub max_change: f64,
    pub converged: bool,
}

impl BpState {
    /// `Ok` when converged, otherwise `NotConverged` with the last change.
    pub fn require_converged(&self) -> Result<&Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                change: self.max_change,
            })
        }
    }

    pub fn message_to_var(&self, edge: usize) -> &[f64] {
        &self.to_var[edge * self.q..(edge + 1) * self.q]
    }

    pub fn message_to_factor(&self, edge: usize) -> &[f64] {
        &self.to_factor[edge * self.q..(edge + 1) * self.q]
    }
}

/// Edge indices incident to every variable, plus pin priors.
struct Layout {
    offsets: Vec<usize>,
    edges_of: Vec<Vec<usize>>,
    var_of: Vec<usize>,
    prior: Vec<f64>,
}

impl Layout {
    fn new(g: &FactorGraph) -> Result<Self> {
        let q = g.q();
        let mut offsets = Vec::with_capacity(g.m());
        let mut edges_of = vec![Vec::new(); g.n()];
        let mut var_of = Vec::new();
        for f in g.factors() {
            offsets.push(var_of.len());
            for &v in &f.vars {
                edges_of[v].push(var_of.len());
                var_of.push(v);
            }
        }
        let mut prior = vec![1.0; g.n() * q];
        for p in g.pins() {
            for s in 0..q {
                if s != p.spin {
                    prior[p.var * q + s] = 0.0;
                }
            }
        }
        for v in 0..g.n() {
            if prior[v * q..(v + 1) * q].iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidGraph(
                    "conflicting pins on one variable".into(),
                ));
            }
        }
        Ok(Self {
            offsets,
            edges_of,
            var_of,
            prior,
        })
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Synchronous damped sum-product. `damping` in `[0, 1)` is the weight kept
/// on the previous message.
pub fn bp_run(g: &FactorGraph, max_iters: usize, damping: f64, tol: f64) -> Result<BpState> {
    if !(0.0..1.0).contains(&damping) {
        return Err(Error::InvalidArgument("damping must lie in [0, 1)".into()));
    }
    let q = g.q();
    let layout = Layout::new(g)?;
    let edges = layout.var_of.len();
    let mut state = BpState {
        q,
        to_factor: vec![1.0 / q as f64; edges * q],
        to_var: vec![1.0 / q as f64; edges * q],
        iterations: 0,
        max_change: 0.0,
        converged: edges == 0,
    };
    let mut scratch = Vec::new();
    let mut new_to_var = vec![0.0; edges * q];
    let mut new_to_factor = vec![0.0; edges * q];
    let mut buf = vec![0.0; q];
    while !state.converged && state.iterations < max_iters {
        for (a, f) in g.factors().iter().enumerate() {
            let o = layout.offsets[a];
            let k = f.vars.len();
            let vecs: Vec<&[f64]> = (0..k).map(|j| state.message_to_factor(o + j)).collect();
            for j in 0..k {
                contract_except(g.table(a).values(), q, &vecs, j, &mut buf, &mut scratch);
                normalize(&mut buf);
                new_to_var[(o + j) * q..(o + j + 1) * q].copy_from_slice(&buf);
            }
        }
        for (v, incident) in layout.edges_of.iter().enumerate() {
            for &e in incident {
                buf.copy_from_slice(&layout.prior[v * q..(v + 1) * q]);
                for &other in incident {
                    if other != e {
                        for s in 0..q {
                            buf[s] *= state.to_var[other * q + s];
                        }
                    }
                }
                normalize(&mut buf);
                new_to_factor[e * q..(e + 1) * q].copy_from_slice(&buf);
            }
        }
        let mut change = 0.0f64;
        for (old, new) in state
            .to_var
            .iter_mut()
            .zip(&new_to_var)
            .chain(state.to_factor.iter_mut().zip(&new_to_factor))
        {
            let next = damping * *old + (1.0 - damping) * new;
            change = change.max((next - *old).abs());
            *old = next;
        }
        state.iterations += 1;
        state.max_change = change;
        state.converged = change < tol;
    }
    Ok(state)
}

/// Beliefs `b_v(σ) ∝ prior_v(σ) ∏ m̂_{a→v}(σ)`.
pub fn bp_marginals(g: &FactorGraph, state: &BpState) -> Result<Vec<Vec<f64>>> {
    let q = g.q();
    let layout = Layout::new(g)?;
    Ok(layout
        .edges_of
        .iter()
        .enumerate()
        .map(|(v, incident)| {
            let mut b = layout.prior[v * q..(v + 1) * q].to_vec();
            for &e in incident {
                for s in 0..q {
                    b[s] *= state.to_var[e * q + s];
                }
            }
            normalize(&mut b);
            b
        })
        .collect())
}

/// Bethe free entropy of the instance at the current messages:
/// `Σ_a ln Z_a + Σ_v ln Z_v − Σ_{(a,v)} ln Z_{av}`.
pub fn bethe_instance(g: &FactorGraph, state: &BpState) -> Result<f64> {
    let q = g.q();
    let layout = Layout::new(g)?;
    let mut scratch = Vec::new();
    let mut total = 0.0;
    for (a, f) in g.factors().iter().enumerate() {
        let o = layout.offsets[a];
        let vecs: Vec<&[f64]> = (0..f.vars.len())
            .map(|j| state.message_to_factor(o + j))
            .collect();
        total += contract(g.table(a).values(), q, &vecs, &mut scratch).ln();
    }
    for (v, incident) in layout.edges_of.iter().enumerate() {
        let z: f64 = (0..q)
            .map(|s| {
                layout.prior[v * q + s]
                    * incident
                        .iter()
                        .map(|&e| state.to_var[e * q + s])
                        .product::<f64>()
            })
            .sum();
        total += z.ln();
    }
    for e in 0..layout.var_of.len() {
        let z: f64 = (0..q)
            .map(|s| state.to_factor[e * q + s] * state.to_var[e * q + s])
            .sum();
        total -= z.ln();
    }
    Ok(total)
}

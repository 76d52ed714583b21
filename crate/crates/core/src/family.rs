//! Weight functions and their per-arity distributions.
//!
//! Tables are stored flat in row-major lexicographic order of `Ω^k`: the
//! configuration `(σ_1, ..., σ_k)` lives at index `Σ σ_i q^{k-i}`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use rand::Rng;

use crate::error::{Error, Result};

/// Number of entries in a table over `Ω^k`, or `None` on overflow.
pub fn table_len(q: usize, arity: usize) -> Option<usize> {
    q.checked_pow(arity as u32)
}

/// Writes the spins of configuration `index` into `out` (length = arity).
pub fn decode(mut index: usize, q: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = index % q;
        index /= q;
    }
}

pub fn encode(spins: impl IntoIterator<Item = usize>, q: usize) -> usize {
    spins.into_iter().fold(0, |acc, s| acc * q + s)
}

/// `Σ_τ ψ(τ) ∏_l μ_l(τ_l)` for a flat table over `Ω^k` and `k` vectors.
/// `scratch` is reused between calls to avoid allocation.
pub fn contract(values: &[f64], q: usize, vecs: &[&[f64]], scratch: &mut Vec<f64>) -> f64 {
    let k = vecs.len();
    if k == 0 {
        return values[0];
    }
    scratch.clear();
    scratch.extend_from_slice(values);
    let mut len = values.len();
    for l in (0..k).rev() {
        let mu = vecs[l];
        len /= q;
        for i in 0..len {
            let row = &scratch[i * q..i * q + q];
            let mut acc = 0.0;
            for s in 0..q {
                acc += row[s] * mu[s];
            }
            scratch[i] = acc;
        }
    }
    scratch[0]
}

/// `out[σ] = Σ_τ 1{τ_h = σ} ψ(τ) ∏_{l≠h} μ_l(τ_l)`; `vecs[h]` is ignored.
pub fn contract_except(
    values: &[f64],
    q: usize,
    vecs: &[&[f64]],
    h: usize,
    out: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    let k = vecs.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    // Fold the coordinates after h, then the ones before h, keeping h free.
    scratch.clear();
    scratch.extend_from_slice(values);
    let mut len = values.len();
    for l in (h + 1..k).rev() {
        let mu = vecs[l];
        len /= q;
        for i in 0..len {
            let mut acc = 0.0;
            for s in 0..q {
                acc += scratch[i * q + s] * mu[s];
            }
            scratch[i] = acc;
        }
    }
    debug_assert_eq!(len, q.pow((h + 1) as u32));
    // scratch[..len] is indexed by (τ_1..τ_h); weight the prefix.
    let prefix = len / q;
    for p in 0..prefix {
        let mut w = 1.0;
        let mut rest = p;
        for l in (0..h).rev() {
            w *= vecs[l][rest % q];
            rest /= q;
        }
        for s in 0..q {
            out[s] += w * scratch[p * q + s];
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    arity: usize,
    q: usize,
    values: Vec<f64>,
    /// `ln c` such that `c · ψ` is the weight in the model's native
    /// convention. Zero unless a constructor normalised the table.
    log_scale: f64,
}

impl WeightTable {
    pub fn new(q: usize, arity: usize, values: Vec<f64>) -> Result<Self> {
        let len = table_len(q, arity)
            .ok_or_else(|| Error::InvalidFamily(format!("q^{arity} overflows")))?;
        if values.len() != len {
            return Err(Error::InvalidFamily(format!(
                "table for arity {arity} has {} entries, expected {len}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidFamily(format!(
                "table entry {bad} is not strictly positive"
            )));
        }
        Ok(Self {
            arity,
            q,
            values,
            log_scale: 0.0,
        })
    }

    /// Builds a table by evaluating `f` on every configuration.
    pub fn from_fn(q: usize, arity: usize, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let len = table_len(q, arity)
            .ok_or_else(|| Error::InvalidFamily(format!("q^{arity} overflows")))?;
        let mut spins = vec![0; arity];
        let values = (0..len)
            .map(|i| {
                decode(i, q, &mut spins);
                f(&spins)
            })
            .collect();
        Self::new(q, arity, values)
    }

    /// Bypasses the positivity check. Only for building deliberately broken
    /// families in tests of the checkers.
    pub fn new_unchecked(q: usize, arity: usize, values: Vec<f64>) -> Self {
        Self {
            arity,
            q,
            values,
            log_scale: 0.0,
        }
    }

    pub fn with_log_scale(mut self, log_scale: f64) -> Self {
        self.log_scale = log_scale;
        self
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    #[inline]
    pub fn at_index(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn eval(&self, spins: &[usize]) -> f64 {
        debug_assert_eq!(spins.len(), self.arity);
        self.values[encode(spins.iter().copied(), self.q)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies a spin relabelling `perm` to every coordinate:
    /// `ψ'(σ) = ψ(perm(σ_1), ..., perm(σ_k))`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut spins = vec![0; self.arity];
        let values = (0..self.values.len())
            .map(|i| {
                decode(i, self.q, &mut spins);
                self.values[encode(spins.iter().map(|&s| perm[s]), self.q)]
            })
            .collect();
        Self {
            arity: self.arity,
            q: self.q,
            values,
            log_scale: self.log_scale,
        }
    }
}

/// The finite set `Ψ_k` with its law `P_k`, for one arity.
#[derive(Debug, Clone, PartialEq)]
pub struct ArityFamily {
    arity: usize,
    tables: Vec<WeightTable>,
    mass: Vec<f64>,
    cumulative: Vec<f64>,
    /// `E[ψ_k(σ)]` for every configuration.
    mean_table: Vec<f64>,
    mean_cumulative: Vec<f64>,
}

fn cumulative(xs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    xs.iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect()
}

fn sample_cumulative<R: Rng + ?Sized>(cum: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>() * cum[cum.len() - 1];
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

impl ArityFamily {
    pub fn new(tables: Vec<WeightTable>, mass: Vec<f64>) -> Result<Self> {
        if tables.is_empty() || tables.len() != mass.len() {
            return Err(Error::InvalidFamily(
                "need one mass per table and at least one table".into(),
            ));
        }
        let arity = tables[0].arity;
        let q = tables[0].q;
        if tables.iter().any(|t| t.arity != arity || t.q != q) {
            return Err(Error::InvalidFamily(
                "tables disagree on arity or alphabet".into(),
            ));
        }
        if mass.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidFamily("negative table mass".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidFamily(format!(
                "table masses for arity {arity} sum to {total}"
            )));
        }
        let len = tables[0].values.len();
        let mean_table: Vec<f64> = (0..len)
            .map(|i| tables.iter().zip(&mass).map(|(t, p)| p * t.values[i]).sum())
            .collect();
        Ok(Self {
            arity,
            cumulative: cumulative(&mass),
            mean_cumulative: cumulative(&mean_table),
            tables,
            mass,
            mean_table,
        })
    }

    pub fn single(table: WeightTable) -> Result<Self> {
        Self::new(vec![table], vec![1.0])
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tables(&self) -> &[WeightTable] {
        &self.tables
    }

    pub fn table(&self, id: usize) -> &WeightTable {
        &self.tables[id]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mean_table(&self) -> &[f64] {
        &self.mean_table
    }

    /// `Σ_σ E[ψ_k(σ)]`.
    pub fn mean_total(&self) -> f64 {
        self.mean_table.iter().sum()
    }

    pub fn sample_table<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_cumulative(&self.cumulative, rng)
    }

    /// Draws a configuration index with probability `∝ E[ψ_k(σ)]`.
    pub fn sample_config_by_mean<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_cumulative(&self.mean_cumulative, rng)
    }

    /// Draws a table id with probability `∝ P_k(ψ) ψ(config)`.
    pub fn sample_table_given<R: Rng + ?Sized>(&self, config: usize, rng: &mut R) -> usize {
        let w: Vec<f64> = self
            .tables
            .iter()
            .zip(&self.mass)
            .map(|(t, p)| p * t.values[config])
            .collect();
        sample_cumulative(&cumulative(&w), rng)
    }

    /// `P[ψ = table id | configuration]` under the tilt `P_k(ψ) ψ(config)`.
    pub fn posterior_given(&self, config: usize) -> Vec<f64> {
        let z = self.mean_table[config];
        self.tables
            .iter()
            .zip(&self.mass)
            .map(|(t, p)| p * t.values[config] / z)
            .collect()
    }
}

/// Weight functions for every arity a model may use, over an alphabet of size `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFamily {
    q: usize,
    by_arity: Vec<Option<ArityFamily>>,
}

impl WeightFamily {
    pub fn new(q: usize, families: Vec<ArityFamily>) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidFamily("empty alphabet".into()));
        }
        let mut by_arity: Vec<Option<ArityFamily>> = Vec::new();
        for fam in families {
            if fam.tables[0].q != q {
                return Err(Error::InvalidFamily(format!(
                    "table alphabet {} != {q}",
                    fam.tables[0].q
                )));
            }
            let k = fam.arity;
            if by_arity.len() <= k {
                by_arity.resize(k + 1, None);
            }
            if by_arity[k].is_some() {
                return Err(Error::InvalidFamily(format!("arity {k} given twice")));
            }
            by_arity[k] = Some(fam);
        }
        Ok(Self { q, by_arity })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn get(&self, arity: usize) -> Option<&ArityFamily> {
        self.by_arity.get(arity).and_then(Option::as_ref)
    }

    /// Like [`get`](Self::get) but errors for an unsupported arity.
    pub fn arity(&self, arity: usize) -> Result<&ArityFamily> {
        self.get(arity)
            .ok_or_else(|| Error::InvalidFamily(format!("no weight functions of arity {arity}")))
    }

    pub fn arities(&self) -> impl Iterator<Item = &ArityFamily> + '_ {
        self.by_arity.iter().filter_map(Option::as_ref)
    }

    pub fn supports(&self, arities: &[usize]) -> bool {
        arities.iter().all(|&k| self.get(k).is_some())
    }

    pub fn table(&self, arity: usize, id: usize) -> &WeightTable {
        self.get(arity).expect("arity present").table(id)
    }

    /// The family with every table relabelled by `perm`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let by_arity = self
            .by_arity
            .iter()
            .map(|f| {
                f.as_ref().map(|f| {
                    ArityFamily::new(
                        f.tables.iter().map(|t| t.relabel(perm)).collect(),
                        f.mass.clone(),
                    )
                    .expect("relabelling preserves validity")
                })
            })
            .collect();
        Self {
            q: self.q,
            by_arity,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_order() {
        let t = WeightTable::from_fn(3, 2, |s| (s[0] * 10 + s[1] + 1) as f64).unwrap();
        assert_eq!(t.values()[0], 1.0);
        assert_eq!(t.values()[1], 2.0);
        assert_eq!(t.values()[3], 11.0);
        assert_eq!(t.eval(&[2, 1]), 22.0);
        let mut buf = [0; 2];
        decode(7, 3, &mut buf);
        assert_eq!(buf, [2, 1]);
    }

    #[test]
    fn contraction_matches_direct_sum() {
        let t = WeightTable::from_fn(3, 3, |s| 1.0 + (s[0] * 9 + s[1] * 3 + s[2]) as f64 * 0.1)
            .unwrap();
        let mu = [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [0.25, 0.25, 0.5]];
        let vecs: Vec<&[f64]> = mu.iter().map(|m| &m[..]).collect();
        let mut direct = 0.0;
        let mut spins = [0; 3];
        for i in 0..27 {
            decode(i, 3, &mut spins);
            direct += t.values()[i] * mu[0][spins[0]] * mu[1][spins[1]] * mu[2][spins[2]];
        }
        let mut scratch = Vec::new();
        assert!((contract(t.values(), 3, &vecs, &mut scratch) - direct).abs() < 1e-14);
        for h in 0..3 {
            let mut out = [0.0; 3];
            contract_except(t.values(), 3, &vecs, h, &mut out, &mut scratch);
            let mut expect = [0.0; 3];
            for i in 0..27 {
                decode(i, 3, &mut spins);
                let w: f64 = (0..3)
                    .filter(|&l| l != h)
                    .map(|l| mu[l][spins[l]])
                    .product();
                expect[spins[h]] += t.values()[i] * w;
            }
            for s in 0..3 {
                assert!((out[s] - expect[s]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_nonpositive_entries() {
        assert!(WeightTable::new(2, 1, vec![1.0, 0.0]).is_err());
        assert!(WeightTable::new(2, 1, vec![1.0, -1.0]).is_err());
        assert!(WeightTable::new(2, 2, vec![1.0; 3]).is_err());
    }

    #[test]
    fn mean_table_and_posterior() {
        let a = WeightTable::new(2, 1, vec![1.0, 3.0]).unwrap();
        let b = WeightTable::new(2, 1, vec![3.0, 1.0]).unwrap();
        let fam = ArityFamily::new(vec![a, b], vec![0.25, 0.75]).unwrap();
        assert_eq!(fam.mean_table(), &[2.5, 1.5]);
        let post = fam.posterior_given(0);
        assert!((post[0] - 0.1).abs() < 1e-15);
        assert!((post[1] - 0.9).abs() < 1e-15);
    }
}

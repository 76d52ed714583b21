//! Bounded integer distributions for variable degrees and factor arities.

use alloc::format;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};

/// Largest degree or arity a spec may carry unless configured otherwise.
pub const DEFAULT_MAX_DEGREE: usize = 64;

const MASS_TOL: f64 = 1e-12;

/// A probability mass function on `{0, 1, ..., max}` stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSpec {
    support: Vec<usize>,
    mass: Vec<f64>,
    cumulative: Vec<f64>,
    mean: f64,
    second_moment: f64,
    truncated_mass: f64,
}

impl DegreeSpec {
    /// Builds a spec from `(value, mass)` pairs. Zero-mass entries are dropped,
    /// duplicate values are merged, and masses must sum to one within `1e-12`.
    pub fn new(pairs: &[(usize, f64)]) -> Result<Self> {
        Self::with_max(pairs, DEFAULT_MAX_DEGREE)
    }

    pub fn with_max(pairs: &[(usize, f64)], max: usize) -> Result<Self> {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for &(value, p) in pairs {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "mass {p} at {value} is not a probability"
                )));
            }
            if value > max {
                return Err(Error::InvalidSpec(format!(
                    "value {value} exceeds the support cap {max}"
                )));
            }
            if p == 0.0 {
                continue;
            }
            match entries.iter_mut().find(|(v, _)| *v == value) {
                Some(e) => e.1 += p,
                None => entries.push((value, p)),
            }
        }
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidSpec(format!("masses sum to {total}, not 1")));
        }
        entries.sort_by_key(|e| e.0);
        let support: Vec<usize> = entries.iter().map(|e| e.0).collect();
        let mass: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let spec = Self::from_parts(support, mass, 0.0);
        if !(spec.mean > 0.0) {
            return Err(Error::ZeroMean);
        }
        Ok(spec)
    }

    fn from_parts(support: Vec<usize>, mass: Vec<f64>, truncated_mass: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = mass
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let mean = support.iter().zip(&mass).map(|(&v, p)| v as f64 * p).sum();
        let second_moment = support
            .iter()
            .zip(&mass)
            .map(|(&v, p)| (v * v) as f64 * p)
            .sum();
        Self {
            support,
            mass,
            cumulative,
            mean,
            second_moment,
            truncated_mass,
        }
    }

    /// Point mass at `value`.
    pub fn constant(value: usize) -> Result<Self> {
        Self::new(&[(value, 1.0)])
    }

    /// Poisson law with the given mean, truncated at `max` and renormalised.
    pub fn poisson(mean: f64, max: usize) -> Result<Self> {
        if !(mean > 0.0) {
            return Err(Error::ZeroMean);
        }
        let mut pmf = Vec::with_capacity(max + 1);
        let mut p = (-mean).exp();
        for k in 0..=max {
            if k > 0 {
                p *= mean / k as f64;
            }
            pmf.push((k, p));
        }
        Self::truncate_and_renormalize(&pmf, max)
    }

    /// Drops mass above `max`, renormalises, and remembers how much was cut.
    /// The input need not sum to one; the deficit relative to one counts as
    /// truncated mass.
    pub fn truncate_and_renormalize(pairs: &[(usize, f64)], max: usize) -> Result<Self> {
        let kept: Vec<(usize, f64)> = pairs
            .iter()
            .copied()
            .filter(|&(v, p)| v <= max && p > 0.0)
            .collect();
        let kept_mass: f64 = kept.iter().map(|e| e.1).sum();
        if !(kept_mass > 0.0) {
            return Err(Error::InvalidSpec(format!("no mass at or below {max}")));
        }
        let normalized: Vec<(usize, f64)> = kept.iter().map(|&(v, p)| (v, p / kept_mass)).collect();
        let mut spec = Self::with_max(&normalized, max)?;
        spec.truncated_mass = (1.0 - kept_mass).max(0.0);
        Ok(spec)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    pub fn pmf(&self, value: usize) -> f64 {
        self.support
            .iter()
            .position(|&v| v == value)
            .map_or(0.0, |i| self.mass[i])
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second_moment
    }

    pub fn max(&self) -> usize {
        *self.support.last().expect("non-empty support")
    }

    pub fn is_constant(&self) -> bool {
        self.support.len() == 1
    }

    /// Mass removed by [`DegreeSpec::truncate_and_renormalize`], zero otherwise.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// The size-biased law `ℓ·P[ℓ]/E[ℓ]`: the degree seen from a uniformly
    /// random half-edge.
    pub fn size_biased(&self) -> Result<Self> {
        if !(self.mean > 0.0) {
            return Err(Error::ZeroMean);
        }
        let (support, mass): (Vec<usize>, Vec<f64>) = self
            .iter()
            .filter(|&(v, _)| v > 0)
            .map(|(v, p)| (v, v as f64 * p / self.mean))
            .unzip();
        Ok(Self::from_parts(support, mass, 0.0))
    }

    /// The excess-degree law: size-biased value minus one.
    pub fn excess(&self) -> Result<Self> {
        let sb = self.size_biased()?;
        let support = sb.support.iter().map(|&v| v - 1).collect();
        Ok(Self::from_parts(support, sb.mass.clone(), 0.0))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random::<f64>() * self.cumulative.last().copied().unwrap_or(1.0);
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.support[i.min(self.support.len() - 1)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_mass() {
        assert!(DegreeSpec::new(&[(2, 0.5), (3, 0.4)]).is_err());
        assert!(DegreeSpec::new(&[(2, -0.5), (3, 1.5)]).is_err());
        assert_eq!(DegreeSpec::new(&[(0, 1.0)]), Err(Error::ZeroMean));
        assert!(DegreeSpec::new(&[(65, 1.0)]).is_err());
    }

    #[test]
    fn moments() {
        let d = DegreeSpec::new(&[(0, 0.5), (4, 0.5)]).unwrap();
        assert_eq!(d.mean(), 2.0);
        assert_eq!(d.second_moment(), 8.0);
    }

    #[test]
    fn size_bias_examples() {
        let k = DegreeSpec::constant(3).unwrap().size_biased().unwrap();
        assert_eq!(k.support(), &[3]);
        assert_eq!(k.masses(), &[1.0]);

        let k = DegreeSpec::new(&[(2, 0.5), (3, 0.5)])
            .unwrap()
            .size_biased()
            .unwrap();
        assert!((k.pmf(2) - 0.4).abs() < 1e-15);
        assert!((k.pmf(3) - 0.6).abs() < 1e-15);

        let k = DegreeSpec::new(&[(0, 0.3), (1, 0.3), (5, 0.4)])
            .unwrap()
            .size_biased()
            .unwrap();
        assert_eq!(k.pmf(0), 0.0);
    }

    #[test]
    fn poisson_truncation_records_tail() {
        let d = DegreeSpec::poisson(3.0, 64).unwrap();
        assert!((d.mean() - 3.0).abs() < 1e-12);
        assert!(d.truncated_mass() < 1e-15);
        let d = DegreeSpec::poisson(3.0, 4).unwrap();
        assert!(d.truncated_mass() > 0.1);
        let total: f64 = d.masses().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn excess_of_poisson_is_poisson() {
        let d = DegreeSpec::poisson(2.0, 64).unwrap();
        let e = d.excess().unwrap();
        for k in 0..10 {
            assert!((e.pmf(k) - d.pmf(k)).abs() < 1e-12, "k={k}");
        }
    }
}

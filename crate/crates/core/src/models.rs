//! Concrete models: LDGM codes over a binary symmetric channel, the regular
//! stochastic block model / Potts antiferromagnet, and the diluted k-spin
//! model with discretised Gaussian couplings.
//!
//! Binary alphabets encode `+1` as spin `0` and `−1` as spin `1`, so the
//! spin index is also the `F_2` bit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;

use crate::bethe::{threshold_scan, Comparator, PdBudget, ThresholdScan};
use crate::degree::{DegreeSpec, DEFAULT_MAX_DEGREE};
use crate::error::{Error, Result};
use crate::family::{ArityFamily, WeightFamily, WeightTable};
use crate::graph::{Assignment, FactorGraph};
use crate::math::binary_entropy;
use crate::model::{ModelKind, ModelSpec};
use crate::rng::substream;

/// `±1` value of a binary spin index.
#[inline]
pub fn spin_sign(s: usize) -> f64 {
    if s == 0 {
        1.0
    } else {
        -1.0
    }
}

fn parity_sign(spins: &[usize]) -> f64 {
    if spins.iter().filter(|&&s| s == 1).count() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Table id of `ψ_{η,k,+1}`; `ψ_{η,k,−1}` has id 1.
pub const LDGM_J_PLUS: usize = 0;
pub const LDGM_J_MINUS: usize = 1;

/// `ψ_{η,k,J}(σ) = 1 − (1−2η) J ∏σ_i`.
pub fn ldgm_table(eta: f64, k: usize, j: f64) -> Result<WeightTable> {
    WeightTable::from_fn(2, k, |s| 1.0 - (1.0 - 2.0 * eta) * j * parity_sign(s))
}

/// LDGM code with flip probability `eta`: per arity the two tables
/// `ψ_{η,k,±1}` with mass 1/2 each.
pub fn ldgm(eta: f64, dspec: DegreeSpec, kspec: DegreeSpec) -> Result<ModelSpec> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "eta = {eta} outside (0, 1)"
        )));
    }
    let fams = kspec
        .support()
        .iter()
        .map(|&k| {
            ArityFamily::new(
                vec![ldgm_table(eta, k, 1.0)?, ldgm_table(eta, k, -1.0)?],
                vec![0.5, 0.5],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ModelSpec::new(
        ModelKind::Ldgm { eta },
        dspec,
        kspec,
        WeightFamily::new(2, fams)?,
    )
}

/// Noisy parities `y* = A(G)x ⊕ noise` over `F_2`, one bit per factor, each
/// flipped independently with probability `eta`. Table ids are ignored.
pub fn ldgm_channel_rng<R: Rng + ?Sized>(
    g: &FactorGraph,
    x: &Assignment,
    eta: f64,
    rng: &mut R,
) -> Result<Vec<u8>> {
    if g.q() != 2 {
        return Err(Error::InvalidGraph(
            "LDGM channel needs a binary alphabet".into(),
        ));
    }
    x.validate(g.n(), 2)?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!(
            "eta = {eta} outside [0, 1]"
        )));
    }
    Ok(g.factors()
        .iter()
        .map(|f| {
            let parity = f.vars.iter().fold(0u8, |acc, &v| acc ^ x.0[v] as u8);
            let flip = rng.random::<f64>() < eta;
            parity ^ flip as u8
        })
        .collect())
}

pub fn ldgm_channel(g: &FactorGraph, x: &Assignment, eta: f64, seed: u64) -> Result<Vec<u8>> {
    ldgm_channel_rng(g, x, eta, &mut substream(seed, 0))
}

/// Table ids matching observed bits. The table favouring parity `b` is
/// `ψ_{η,k,J}` with `J = −(−1)^b`, so bit 0 selects `J = −1`.
pub fn ldgm_weights_for_bits(bits: &[u8]) -> Vec<usize> {
    bits.iter()
        .map(|&b| if b == 0 { LDGM_J_MINUS } else { LDGM_J_PLUS })
        .collect()
}

/// `ln 2 − H(η)`, the LDGM information term.
pub fn ldgm_info_closed_form(eta: f64) -> f64 {
    core::f64::consts::LN_2 - binary_entropy(eta)
}

fn pair_table(q: usize, beta: f64) -> Result<WeightTable> {
    WeightTable::from_fn(q, 2, |s| if s[0] == s[1] { (-beta).exp() } else { 1.0 })
}

fn pair_model(kind: ModelKind, q: usize, beta: f64, d: usize) -> Result<ModelSpec> {
    if q < 2 {
        return Err(Error::InvalidArgument(format!("need q >= 2, got {q}")));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta = {beta} must be finite and >= 0"
        )));
    }
    if d == 0 {
        return Err(Error::InvalidArgument("degree must be positive".into()));
    }
    let fam = WeightFamily::new(q, vec![ArityFamily::single(pair_table(q, beta)?)?])?;
    ModelSpec::new(
        kind,
        DegreeSpec::constant(d)?,
        DegreeSpec::constant(2)?,
        fam,
    )
}

/// `d`-regular stochastic block model: `ψ(σ1,σ2) = exp(−β·1{σ1=σ2})`.
pub fn sbm(q: usize, beta: f64, d: usize) -> Result<ModelSpec> {
    pair_model(ModelKind::Sbm { q, beta }, q, beta, d)
}

/// Potts antiferromagnet; tables identical to [`sbm`].
pub fn potts(q: usize, beta: f64, d: usize) -> Result<ModelSpec> {
    pair_model(ModelKind::Potts { q, beta }, q, beta, d)
}

/// Assortative variant `exp(+β·1{σ1=σ2})`, stored as `exp(−(−β)·…)`.
pub fn assortative_sbm(q: usize, beta: f64, d: usize) -> Result<ModelSpec> {
    let mut spec = pair_model(ModelKind::AssortativeSbm { q, beta }, q, 0.0, d)?;
    let fam = WeightFamily::new(q, vec![ArityFamily::single(pair_table(q, -beta)?)?])?;
    spec.family = alloc::sync::Arc::new(fam);
    Ok(spec)
}

/// `ξ = (q − 1 + e^{−β})/q` for the SBM table.
pub fn sbm_xi(q: usize, beta: f64) -> f64 {
    (q as f64 - 1.0 + (-beta).exp()) / q as f64
}

/// `ln q + (d/2) ln(1 − (1 − e^{−β})/q)`.
pub fn sbm_phi_a(q: usize, d: f64, beta: f64) -> f64 {
    (q as f64).ln() + 0.5 * d * (1.0 - (1.0 - (-beta).exp()) / q as f64).ln()
}

/// Symmetric discretisation of a standard Gaussian on the levels
/// `±j/r, j = 1..r²`. Positive intervals round up to their right end,
/// negative ones down to their left end, and the tails sit on `±r`.
/// Returns `(level, mass)` with negative levels first.
pub fn discretized_gaussian(r: usize) -> Vec<(f64, f64)> {
    let rf = r as f64;
    let top = r * r;
    let upper_tail = |x: f64| 0.5 * libm::erfc(x / core::f64::consts::SQRT_2);
    let positive: Vec<(f64, f64)> = (1..=top)
        .map(|j| {
            let lo = (j - 1) as f64 / rf;
            let hi = j as f64 / rf;
            let mass = if j == top {
                upper_tail(lo)
            } else {
                upper_tail(lo) - upper_tail(hi)
            };
            (hi, mass)
        })
        .collect();
    positive
        .iter()
        .rev()
        .map(|&(a, p)| (-a, p))
        .chain(positive.iter().copied())
        .collect()
}

/// `1 + tanh(βJ) ∏σ_i`, with log-scale `ln cosh(βJ)` back to `exp(βJ∏σ)`.
pub fn kspin_table(beta: f64, coupling: f64, k: usize) -> Result<WeightTable> {
    let t = (beta * coupling).tanh();
    Ok(WeightTable::from_fn(2, k, |s| 1.0 + t * parity_sign(s))?
        .with_log_scale((beta * coupling).cosh().ln()))
}

/// Diluted mixed k-spin model with couplings discretised at level `r` and
/// variable degrees `Po(d)` supplied by the caller through `dspec`.
pub fn kspin(beta: f64, kspec: DegreeSpec, dspec: DegreeSpec, r: usize) -> Result<ModelSpec> {
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta = {beta} must be finite and >= 0"
        )));
    }
    if r == 0 {
        return Err(Error::InvalidArgument(
            "discretisation level must be >= 1".into(),
        ));
    }
    if kspec.pmf(2) <= 0.0 {
        return Err(Error::InvalidArgument("k-spin needs P[k = 2] > 0".into()));
    }
    let levels = discretized_gaussian(r);
    let total: f64 = levels.iter().map(|l| l.1).sum();
    let masses: Vec<f64> = levels.iter().map(|l| l.1 / total).collect();
    let fams = kspec
        .support()
        .iter()
        .map(|&k| {
            let tables = levels
                .iter()
                .map(|&(a, _)| kspin_table(beta, a, k))
                .collect::<Result<Vec<_>>>()?;
            ArityFamily::new(tables, masses.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    ModelSpec::new(
        ModelKind::KSpin { beta, r },
        dspec,
        kspec,
        WeightFamily::new(2, fams)?,
    )
}

/// Default coupling discretisation.
pub const KSPIN_DEFAULT_R: usize = 6;

/// `Po(d)` truncated at the default support cap.
pub fn poisson_degrees(d: f64) -> Result<DegreeSpec> {
    DegreeSpec::poisson(d, DEFAULT_MAX_DEGREE)
}

/// `E[tanh(βJ)^2]` under the discretised law.
pub fn kspin_tanh_sq(beta: f64, r: usize) -> f64 {
    let levels = discretized_gaussian(r);
    let total: f64 = levels.iter().map(|l| l.1).sum();
    levels
        .iter()
        .map(|&(a, p)| p / total * (beta * a).tanh().powi(2))
        .sum()
}

/// Bracket for the long-range-correlation threshold `d_{β,k}`: the first
/// grid degree where the planted population beats `ln 2`.
pub fn lrc_threshold(
    beta: f64,
    kspec: &DegreeSpec,
    d_grid: &[f64],
    r: usize,
    budget: &PdBudget,
    seed: u64,
) -> Result<ThresholdScan> {
    let build = |d: f64| kspin(beta, kspec.clone(), poisson_degrees(d)?, r);
    threshold_scan(
        build,
        d_grid,
        Comparator::Explicit(core::f64::consts::LN_2),
        budget,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ldgm_plug_in() {
        let m = ldgm(
            0.1,
            DegreeSpec::constant(2).unwrap(),
            DegreeSpec::constant(2).unwrap(),
        )
        .unwrap();
        let t = m.family.table(2, LDGM_J_PLUS);
        assert!((t.eval(&[0, 0]) - 0.2).abs() < 1e-15);
        let half = ldgm(
            0.5,
            DegreeSpec::constant(2).unwrap(),
            DegreeSpec::constant(3).unwrap(),
        )
        .unwrap();
        for t in half.family.get(3).unwrap().tables() {
            assert!(t.values().iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn sbm_plug_in() {
        let m = sbm(3, 2f64.ln(), 3).unwrap();
        assert!((m.family.table(2, 0).eval(&[1, 1]) - 0.5).abs() < 1e-15);
        assert_eq!(m.family.table(2, 0).eval(&[1, 2]), 1.0);
        assert_eq!(
            sbm(2, 0.0, 3).unwrap().family.table(2, 0).values(),
            &[1.0; 4]
        );
    }

    #[test]
    fn gaussian_levels_are_symmetric() {
        let levels = discretized_gaussian(4);
        assert_eq!(levels.len(), 32);
        for i in 0..16 {
            assert_eq!(levels[i].0, -levels[31 - i].0);
            assert_eq!(levels[i].1, levels[31 - i].1);
        }
        let total: f64 = levels.iter().map(|l| l.1).sum();
        assert!((total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn channel_without_noise_is_parity() {
        let m = ldgm(
            0.2,
            DegreeSpec::constant(2).unwrap(),
            DegreeSpec::constant(2).unwrap(),
        )
        .unwrap();
        let g = FactorGraph::from_factors(
            m.family.clone(),
            3,
            vec![
                crate::graph::Factor {
                    weight: 0,
                    vars: vec![0, 1],
                },
                crate::graph::Factor {
                    weight: 0,
                    vars: vec![1, 2],
                },
            ],
        )
        .unwrap();
        let y = ldgm_channel(&g, &Assignment(vec![1, 1, 0]), 0.0, 3).unwrap();
        assert_eq!(y, vec![0, 1]);
        assert_eq!(
            ldgm_channel(&g, &Assignment(vec![0; 3]), 0.0, 3).unwrap(),
            vec![0, 0]
        );
    }
}

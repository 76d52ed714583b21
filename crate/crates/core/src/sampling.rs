//! Samplers for degree sequences and the null, planted and Nishimori ensembles.
//!
//! Every public sampler has a seed-taking form and an `_rng` form that draws
//! from a caller-supplied generator. The seed forms use stream 0 of
//! [`crate::rng::substream`].

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::degree::DegreeSpec;
use crate::error::{Error, Result};
use crate::family::{encode, WeightFamily};
use crate::graph::{Assignment, DegreeSequence, FactorGraph, Pin};
use crate::rng::substream;

/// Caps and switches shared by the samplers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Rejection cap for degree sequences and simple-graph pairing.
    pub max_attempts: u64,
    /// Reject pairings until the graph has no repeated variable in a factor.
    pub simple_only: bool,
    /// Fall back to a colour-swap Metropolis chain when histogram rejection
    /// in the planted construction runs out of attempts.
    pub mcmc_fallback: bool,
    /// Overrides the planted rejection cap `10^4·√(total degree)`.
    pub planted_attempts: Option<u64>,
    /// Metropolis burn-in per clone.
    pub mcmc_sweeps: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            max_attempts: 1_000_000,
            simple_only: false,
            mcmc_fallback: true,
            planted_attempts: None,
            mcmc_sweeps: 50,
        }
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite mean");
    dist.sample(rng) as usize
}

/// One unconditioned draw: `d_i` iid, `m ~ Po(n E[d]/E[k])`, `k_j` iid.
/// Returns `Some` only when the totals match.
pub fn try_degree_sequence<R: Rng + ?Sized>(
    n: usize,
    dspec: &DegreeSpec,
    kspec: &DegreeSpec,
    rng: &mut R,
) -> Option<DegreeSequence> {
    let var_degrees: Vec<usize> = (0..n).map(|_| dspec.sample(rng)).collect();
    let m = poisson(n as f64 * dspec.mean() / kspec.mean(), rng);
    let arities: Vec<usize> = (0..m).map(|_| kspec.sample(rng)).collect();
    let balanced = var_degrees.iter().sum::<usize>() == arities.iter().sum::<usize>();
    balanced.then_some(DegreeSequence {
        var_degrees,
        arities,
        rejections: 0,
    })
}

pub fn sample_degree_sequence_rng<R: Rng + ?Sized>(
    n: usize,
    dspec: &DegreeSpec,
    kspec: &DegreeSpec,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<DegreeSequence> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one variable".into()));
    }
    for attempt in 0..cfg.max_attempts {
        if let Some(mut seq) = try_degree_sequence(n, dspec, kspec, rng) {
            seq.rejections = attempt;
            return Ok(seq);
        }
    }
    Err(Error::AttemptsExhausted {
        attempts: cfg.max_attempts,
    })
}

/// Balanced degree sequence by rejection on `Σd = Σk`.
pub fn sample_degree_sequence(
    n: usize,
    dspec: &DegreeSpec,
    kspec: &DegreeSpec,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<DegreeSequence> {
    sample_degree_sequence_rng(n, dspec, kspec, cfg, &mut substream(seed, 0))
}

pub fn sample_pruned_sequence_rng<R: Rng + ?Sized>(
    n: usize,
    eps: f64,
    dspec: &DegreeSpec,
    kspec: &DegreeSpec,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<DegreeSequence> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument("eps must lie in (0, 1)".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one variable".into()));
    }
    let mean_m = (1.0 - eps) * dspec.mean() * n as f64 / kspec.mean();
    for attempt in 0..cfg.max_attempts {
        let var_degrees: Vec<usize> = (0..n).map(|_| dspec.sample(rng)).collect();
        let m = poisson(mean_m, rng);
        let arities: Vec<usize> = (0..m).map(|_| kspec.sample(rng)).collect();
        if var_degrees.iter().sum::<usize>() >= arities.iter().sum::<usize>() {
            return Ok(DegreeSequence {
                var_degrees,
                arities,
                rejections: attempt,
            });
        }
    }
    Err(Error::AttemptsExhausted {
        attempts: cfg.max_attempts,
    })
}

/// Pruned sequence with `m_ε ~ Po((1−ε) E[d] n / E[k])` conditioned on `Σd ≥ Σk`.
pub fn sample_pruned_sequence(
    n: usize,
    eps: f64,
    dspec: &DegreeSpec,
    kspec: &DegreeSpec,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<DegreeSequence> {
    sample_pruned_sequence_rng(n, eps, dspec, kspec, cfg, &mut substream(seed, 0))
}

/// Uniform random maximal matching of variable clones to factor clones.
/// All weight ids are left at 0.
pub fn pair_uniform_rng<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    family: &Arc<WeightFamily>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<FactorGraph> {
    let total = seq.total_var_degree();
    let k = seq.total_factor_degree();
    if k > total {
        return Err(Error::InvalidArgument(
            "factor degree exceeds variable degree".into(),
        ));
    }
    let attempts = if cfg.simple_only { cfg.max_attempts } else { 1 };
    let mut clones: Vec<usize> = (0..total).collect();
    for _ in 0..attempts {
        clones.shuffle(rng);
        let g =
            FactorGraph::from_pairing(family.clone(), seq, clones[..k].to_vec(), vec![0; seq.m()])?;
        if !cfg.simple_only || g.is_simple() {
            return Ok(g);
        }
    }
    Err(Error::AttemptsExhausted { attempts })
}

pub fn pair_uniform(
    seq: &DegreeSequence,
    family: &Arc<WeightFamily>,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<FactorGraph> {
    pair_uniform_rng(seq, family, cfg, &mut substream(seed, 0))
}

/// Null model on a given sequence: uniform pairing plus iid weights `ψ_{a} ~ P_{k_a}`.
pub fn sample_null_given_rng<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    family: &Arc<WeightFamily>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<FactorGraph> {
    if !family.supports(&seq.arities) {
        return Err(Error::InvalidFamily(
            "family misses an arity of the sequence".into(),
        ));
    }
    let g = pair_uniform_rng(seq, family, cfg, rng)?;
    let weights: Vec<usize> = seq
        .arities
        .iter()
        .map(|&k| family.arity(k).unwrap().sample_table(rng))
        .collect();
    g.with_weights(&weights)
}

pub fn sample_null_rng<R: Rng + ?Sized>(
    n: usize,
    dspec: &DegreeSpec,
    kspec: &DegreeSpec,
    family: &Arc<WeightFamily>,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<FactorGraph> {
    if !family.supports(kspec.support()) {
        return Err(Error::InvalidFamily(
            "family misses an arity in the arity spec".into(),
        ));
    }
    let seq = sample_degree_sequence_rng(n, dspec, kspec, cfg, rng)?;
    sample_null_given_rng(&seq, family, cfg, rng)
}

/// The null random factor graph `G`.
pub fn sample_null(
    n: usize,
    dspec: &DegreeSpec,
    kspec: &DegreeSpec,
    family: &Arc<WeightFamily>,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<FactorGraph> {
    sample_null_rng(n, dspec, kspec, family, cfg, &mut substream(seed, 0))
}

/// How the factor-side colouring was conditioned on its histogram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramMethod {
    Rejection { rejections: u64 },
    Metropolis { steps: u64 },
}

/// Output of [`sample_planted`].
#[derive(Debug, Clone)]
pub struct PlantedSample {
    pub graph: FactorGraph,
    pub method: HistogramMethod,
}

/// Colour of every variable clone under `sigma`.
pub fn clone_colours(seq: &DegreeSequence, sigma: &Assignment) -> Vec<usize> {
    seq.clone_owners().iter().map(|&v| sigma.0[v]).collect()
}

/// Factor-side colouring: factor clones in order, then one slot per cavity.
fn draw_factor_colouring<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    family: &WeightFamily,
    buf: &mut Vec<usize>,
    rng: &mut R,
) {
    let q = family.q();
    buf.clear();
    for &k in &seq.arities {
        let fam = family.get(k).expect("arity checked");
        let mut cfg = fam.sample_config_by_mean(rng);
        let start = buf.len();
        buf.resize(start + k, 0);
        for slot in buf[start..].iter_mut().rev() {
            *slot = cfg % q;
            cfg /= q;
        }
    }
    for _ in 0..seq.cavity_count() {
        buf.push(rng.random_range(0..q));
    }
}

/// Colour-swap Metropolis chain on the factor-side colouring, targeting the
/// per-factor law `∏_a E[ψ_a(y_a)]` restricted to colourings with the given
/// histogram. Cavity slots carry weight one.
fn metropolis_colouring<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    family: &WeightFamily,
    colours: &[usize],
    steps: u64,
    rng: &mut R,
) -> Vec<usize> {
    let q = family.q();
    let mut y = colours.to_vec();
    y.shuffle(rng);
    let offsets = seq.factor_offsets();
    let k_total = seq.total_factor_degree();
    let mut owner = vec![usize::MAX; y.len()];
    for (a, &o) in offsets.iter().enumerate() {
        for c in o..o + seq.arities[a] {
            owner[c] = a;
        }
    }
    let factor_weight = |y: &[usize], a: usize| -> f64 {
        let o = offsets[a];
        let k = seq.arities[a];
        family.get(k).expect("arity checked").mean_table()[encode(y[o..o + k].iter().copied(), q)]
    };
    let len = y.len();
    if len < 2 {
        return y;
    }
    for _ in 0..steps {
        let i = rng.random_range(0..len);
        let j = rng.random_range(0..len);
        if y[i] == y[j] {
            continue;
        }
        let fi = if i < k_total { Some(owner[i]) } else { None };
        let fj = if j < k_total { Some(owner[j]) } else { None };
        let mut touched: Vec<usize> = fi.into_iter().chain(fj).collect();
        touched.dedup();
        let before: f64 = touched.iter().map(|&a| factor_weight(&y, a)).product();
        y.swap(i, j);
        let after: f64 = touched.iter().map(|&a| factor_weight(&y, a)).product();
        if !(rng.random::<f64>() * before < after) {
            y.swap(i, j);
        }
    }
    y
}

pub fn sample_planted_rng<R: Rng + ?Sized>(
    seq: &DegreeSequence,
    sigma: &Assignment,
    family: &Arc<WeightFamily>,
    theta: usize,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<PlantedSample> {
    let q = family.q();
    sigma.validate(seq.n(), q)?;
    if !family.supports(&seq.arities) {
        return Err(Error::InvalidFamily(
            "family misses an arity of the sequence".into(),
        ));
    }
    if theta > seq.n() {
        return Err(Error::InvalidArgument("more pins than variables".into()));
    }
    let chi = clone_colours(seq, sigma);
    let mut target = vec![0usize; q];
    for &c in &chi {
        target[c] += 1;
    }

    // Stage 1: factor-side colouring conditioned on matching the clone histogram.
    let cap = cfg
        .planted_attempts
        .unwrap_or_else(|| (1e4 * (chi.len().max(1) as f64).sqrt()).ceil() as u64);
    let mut y = Vec::with_capacity(chi.len());
    let mut hist = vec![0usize; q];
    let mut method = None;
    for attempt in 0..cap {
        draw_factor_colouring(seq, family, &mut y, rng);
        hist.iter_mut().for_each(|h| *h = 0);
        for &c in &y {
            hist[c] += 1;
        }
        if hist == target {
            method = Some(HistogramMethod::Rejection {
                rejections: attempt,
            });
            break;
        }
    }
    if method.is_none() {
        if !cfg.mcmc_fallback {
            return Err(Error::AttemptsExhausted { attempts: cap });
        }
        let steps = cfg.mcmc_sweeps * chi.len() as u64;
        y = metropolis_colouring(seq, family, &chi, steps, rng);
        method = Some(HistogramMethod::Metropolis { steps });
    }

    // Stage 2: weight tables tilted by the colouring.
    let offsets = seq.factor_offsets();
    let weights: Vec<usize> = seq
        .arities
        .iter()
        .zip(&offsets)
        .map(|(&k, &o)| {
            let cfg_index = encode(y[o..o + k].iter().copied(), q);
            family.get(k).unwrap().sample_table_given(cfg_index, rng)
        })
        .collect();

    // Stage 3: uniform colour-consistent bijection from variable clones to slots.
    let mut by_colour_vars: Vec<Vec<usize>> = vec![Vec::new(); q];
    for (c, &col) in chi.iter().enumerate() {
        by_colour_vars[col].push(c);
    }
    for list in by_colour_vars.iter_mut() {
        list.shuffle(rng);
    }
    let mut next = vec![0usize; q];
    let k_total = seq.total_factor_degree();
    let mut pairing = Vec::with_capacity(k_total);
    for &col in &y[..k_total] {
        pairing.push(by_colour_vars[col][next[col]]);
        next[col] += 1;
    }

    let pins = (0..theta)
        .map(|v| Pin {
            var: v,
            spin: sigma.0[v],
        })
        .collect();
    let graph =
        FactorGraph::from_pairing(family.clone(), seq, pairing, weights)?.with_pins(pins)?;
    Ok(PlantedSample {
        graph,
        method: method.expect("set above"),
    })
}

/// Teacher-student graph `G*(σ)` on a fixed sequence via the three-stage
/// colour-first construction, plus `theta` pins fixing `x_1..x_θ` to `σ`.
pub fn sample_planted(
    seq: &DegreeSequence,
    sigma: &Assignment,
    family: &Arc<WeightFamily>,
    theta: usize,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<PlantedSample> {
    sample_planted_rng(seq, sigma, family, theta, cfg, &mut substream(seed, 0))
}

pub fn uniform_assignment<R: Rng + ?Sized>(n: usize, q: usize, rng: &mut R) -> Assignment {
    Assignment((0..n).map(|_| rng.random_range(0..q)).collect())
}

/// Whether [`sample_nishimori`] enumerates the assignment law exactly or
/// substitutes the uniform ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NishimoriMode {
    Exact {
        cap: u64,
    },
    /// Returns `(σ*, G*(σ*))`; only contiguous to the Nishimori pair.
    Approximate,
}

#[derive(Debug, Clone)]
pub struct NishimoriSample {
    pub sigma: Assignment,
    pub graph: FactorGraph,
    pub exact: bool,
}

pub fn sample_nishimori_rng<R: Rng + ?Sized>(
    n: usize,
    dspec: &DegreeSpec,
    kspec: &DegreeSpec,
    family: &Arc<WeightFamily>,
    mode: NishimoriMode,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<NishimoriSample> {
    let seq = sample_degree_sequence_rng(n, dspec, kspec, cfg, rng)?;
    let (sigma, exact) = match mode {
        NishimoriMode::Exact { cap } => {
            let law = crate::exact::nishimori_assignment_law(&seq, family, cap)?;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut idx = law.len() - 1;
            for (i, p) in law.iter().enumerate() {
                acc += p;
                if u < acc {
                    idx = i;
                    break;
                }
            }
            (Assignment::from_index(idx, n, family.q()), true)
        }
        NishimoriMode::Approximate => (uniform_assignment(n, family.q(), rng), false),
    };
    let planted = sample_planted_rng(&seq, &sigma, family, 0, cfg, rng)?;
    Ok(NishimoriSample {
        sigma,
        graph: planted.graph,
        exact,
    })
}

/// Nishimori pair `(σ̂, G*(σ̂))` with `P[σ̂ = σ] ∝ E[ψ_G(σ) | degrees]`.
pub fn sample_nishimori(
    n: usize,
    dspec: &DegreeSpec,
    kspec: &DegreeSpec,
    family: &Arc<WeightFamily>,
    mode: NishimoriMode,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<NishimoriSample> {
    sample_nishimori_rng(n, dspec, kspec, family, mode, cfg, &mut substream(seed, 0))
}

/// Direct pinning: fixes `x_1..x_θ` to independent uniform spins, replacing
/// any existing pins on those variables.
pub fn pin_rng<R: Rng + ?Sized>(g: &FactorGraph, theta: usize, rng: &mut R) -> Result<FactorGraph> {
    let vars: Vec<usize> = (0..theta).collect();
    pin_vars_rng(g, &vars, rng)
}

pub fn pin(g: &FactorGraph, theta: usize, seed: u64) -> Result<FactorGraph> {
    pin_rng(g, theta, &mut substream(seed, 0))
}

/// Pins the named variables to independent uniform spins.
pub fn pin_vars_rng<R: Rng + ?Sized>(
    g: &FactorGraph,
    vars: &[usize],
    rng: &mut R,
) -> Result<FactorGraph> {
    if vars.iter().any(|&v| v >= g.n()) {
        return Err(Error::InvalidArgument(
            "pinned variable out of range".into(),
        ));
    }
    let q = g.q();
    let pins = vars
        .iter()
        .map(|&v| Pin {
            var: v,
            spin: rng.random_range(0..q),
        })
        .collect();
    pin_with(g, pins)
}

/// Adds the given pins, replacing existing pins on the same variables.
pub fn pin_with(g: &FactorGraph, pins: Vec<Pin>) -> Result<FactorGraph> {
    let mut all: Vec<Pin> = g
        .pins()
        .iter()
        .copied()
        .filter(|p| !pins.iter().any(|n| n.var == p.var))
        .collect();
    all.extend(pins);
    all.sort();
    g.clone().with_pins(all)
}

/// A random factor tree on `n` variables: each new factor draws its arity
/// from `kspec` (restricted to arities that still fit), attaches to one
/// existing variable and introduces `k - 1` fresh ones. Weight ids are drawn
/// from the family masses. Stops early only when no supported arity fits.
pub fn random_factor_tree_rng<R: Rng + ?Sized>(
    n: usize,
    kspec: &DegreeSpec,
    family: &Arc<WeightFamily>,
    rng: &mut R,
) -> Result<FactorGraph> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "a tree needs at least one variable".into(),
        ));
    }
    let mut factors = Vec::new();
    let mut used = 1;
    loop {
        let fits: Vec<(usize, f64)> = kspec
            .iter()
            .filter(|&(k, p)| k >= 2 && k - 1 <= n - used && p > 0.0)
            .collect();
        if fits.is_empty() {
            break;
        }
        let total: f64 = fits.iter().map(|&(_, p)| p).sum();
        let mut u = rng.random::<f64>() * total;
        let mut k = fits[fits.len() - 1].0;
        for &(kk, p) in &fits {
            if u < p {
                k = kk;
                break;
            }
            u -= p;
        }
        let mut vars: Vec<usize> = (used..used + k - 1).collect();
        vars.push(rng.random_range(0..used));
        vars.shuffle(rng);
        used += k - 1;
        let weight = family.arity(k)?.sample_table(rng);
        factors.push(crate::graph::Factor { weight, vars });
    }
    FactorGraph::from_factors(family.clone(), used, factors)
}

pub fn random_factor_tree(
    n: usize,
    kspec: &DegreeSpec,
    family: &Arc<WeightFamily>,
    seed: u64,
) -> Result<FactorGraph> {
    random_factor_tree_rng(n, kspec, family, &mut substream(seed, 0))
}

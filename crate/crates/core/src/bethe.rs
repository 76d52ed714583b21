//! The Bethe functional over measures on the spin simplex, population
//! dynamics, the annealed free entropy and the mutual-information formula.
//!
//! With `π` a law on simplex points `μ`, the functional is
//!
//! ```text
//! B(π) = E[ ξ^{−d}/q · Λ(Σ_σ ∏_{i≤d} m_i(σ))
//!          − E[d]/(ξ E[k]) · (k−1) · Λ(Σ_τ ψ_k(τ) ∏_j μ_j(τ_j)) ]
//! m_i(σ) = Σ_τ 1{τ_h = σ} ψ_{k̂_i}(τ) ∏_{j≠h} μ_{i,j}(τ_j)
//! ```
//!
//! with `k̂` size-biased and `h` uniform in `[k̂]`. Population dynamics
//! iterates the distributional fixed-point map obtained from stationarity of
//! `B`: a new point is the normalised product of `d* = d̂ − 1` messages and
//! carries weight `Σ_σ ∏ m_i(σ) / (q ξ^{d*})`. Each sweep draws a full batch
//! of candidates and resamples them by weight.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::assumptions::{check_bal, check_pos};
use crate::degree::DegreeSpec;
use crate::error::{Error, Result};
use crate::family::{contract, contract_except, WeightFamily};
use crate::math::{lambda, KahanSum};
use crate::model::ModelSpec;
use crate::rng::{derive_seed, substream};
use crate::stats::MeanAcc;

/// `ℓ·P[k=ℓ]/E[k]`.
pub fn size_biased(kspec: &DegreeSpec) -> Result<DegreeSpec> {
    kspec.size_biased()
}

/// How a population was initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Init {
    /// Uniform point with a small random perturbation per point.
    UniformPerturbed,
    /// Point `i` is the vertex `e_{i mod q}`.
    PlantedPolarized,
    /// Built directly, e.g. the single uniform atom.
    Given,
}

impl Init {
    pub fn name(&self) -> &'static str {
        match self {
            Init::UniformPerturbed => "uniform-perturbed",
            Init::PlantedPolarized => "planted-polarized",
            Init::Given => "given",
        }
    }
}

/// Empirical measure on the simplex over `q` spins.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPopulation {
    q: usize,
    /// Points stored flat, `q` entries each.
    points: Vec<f64>,
    pub generation: u64,
    pub init: Init,
    /// When set, every draw applies a uniformly random spin permutation,
    /// i.e. the population stands for its closure under relabelling.
    pub symmetrized: bool,
}

/// Amplitude of the uniform-perturbed initialisation.
pub const INIT_PERTURBATION: f64 = 0.1;
/// Mean deviation that triggers symmetrisation. Applies to both
/// initialisations: resampling amplifies colour imbalance in antiferromagnetic
/// families, and a population that leaves `P_*(Ω)` overstates `B`.
pub const RECENTER_BAND: f64 = 0.02;

impl SimplexPopulation {
    pub fn from_points(q: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("empty population".into()));
        }
        let mut flat = Vec::with_capacity(points.len() * q);
        for p in &points {
            let s: f64 = p.iter().sum();
            if p.len() != q || (s - 1.0).abs() > 1e-10 || p.iter().any(|&x| !(x >= 0.0)) {
                return Err(Error::InvalidArgument(
                    "population point is not on the simplex".into(),
                ));
            }
            flat.extend_from_slice(p);
        }
        Ok(Self {
            q,
            points: flat,
            generation: 0,
            init: Init::Given,
            symmetrized: false,
        })
    }

    /// The single atom at the uniform distribution.
    pub fn uniform_atom(q: usize) -> Self {
        Self {
            q,
            points: vec![1.0 / q as f64; q],
            generation: 0,
            init: Init::Given,
            symmetrized: false,
        }
    }

    pub fn initial<R: Rng + ?Sized>(q: usize, size: usize, init: Init, rng: &mut R) -> Self {
        let mut points = vec![0.0; q * size];
        match init {
            Init::PlantedPolarized => {
                for i in 0..size {
                    points[i * q + i % q] = 1.0;
                }
            }
            _ => {
                for p in points.chunks_mut(q) {
                    for x in p.iter_mut() {
                        *x = 1.0 + INIT_PERTURBATION * (rng.random::<f64>() - 0.5);
                    }
                    let s: f64 = p.iter().sum();
                    p.iter_mut().for_each(|x| *x /= s);
                }
            }
        }
        Self {
            q,
            points,
            generation: 0,
            init,
            symmetrized: false,
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.q
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.q..(i + 1) * self.q]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.chunks(self.q)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.q];
        for p in self.points() {
            for s in 0..self.q {
                m[s] += p[s];
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|x| *x /= n);
        m
    }

    /// Sup-norm distance of the population mean from the barycenter.
    pub fn mean_deviation(&self) -> f64 {
        let u = 1.0 / self.q as f64;
        self.mean()
            .iter()
            .map(|&x| (x - u).abs())
            .fold(0.0, f64::max)
    }

    /// Mean Euclidean distance of the points from the barycenter.
    pub fn distance_to_barycenter(&self) -> f64 {
        let u = 1.0 / self.q as f64;
        let total: f64 = self
            .points()
            .map(|p| p.iter().map(|&x| (x - u) * (x - u)).sum::<f64>().sqrt())
            .sum();
        total / self.len() as f64
    }

    /// Largest deviation of any point's total mass from one.
    pub fn simplex_error(&self) -> f64 {
        self.points()
            .map(|p| (p.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Copies a random point into `out`, relabelled when symmetrised.
    fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64], perm: &mut [usize]) {
        let i = rng.random_range(0..self.len());
        let p = self.point(i);
        if self.symmetrized {
            perm.shuffle(rng);
            for s in 0..self.q {
                out[s] = p[perm[s]];
            }
        } else {
            out.copy_from_slice(p);
        }
    }

    /// The population with every point relabelled: `μ'(σ) = μ(perm[σ])`.
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let mut out = self.clone();
        for (dst, src) in out
            .points
            .chunks_mut(self.q)
            .zip(self.points.chunks(self.q))
        {
            for s in 0..self.q {
                dst[s] = src[perm[s]];
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetheEstimate {
    /// Nats per variable.
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl From<MeanAcc> for BetheEstimate {
    fn from(acc: MeanAcc) -> Self {
        Self {
            value: acc.mean(),
            stderr: acc.stderr(),
            samples: acc.count,
        }
    }
}

/// Model quantities reused by every Bethe evaluation.
#[derive(Debug, Clone)]
pub struct BetheContext {
    pub q: usize,
    pub xi: f64,
    pub family: Arc<WeightFamily>,
    pub dspec: DegreeSpec,
    pub kspec: DegreeSpec,
    pub khat: DegreeSpec,
    /// Size-biased variable degree minus one.
    pub excess: DegreeSpec,
    /// `E[d]/(ξ E[k])`.
    pub factor_coef: f64,
}

impl BetheContext {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        let xi = model.xi()?;
        Ok(Self {
            q: model.q(),
            xi,
            family: model.family.clone(),
            dspec: model.dspec.clone(),
            kspec: model.kspec.clone(),
            khat: size_biased(&model.kspec)?,
            excess: model.dspec.excess()?,
            factor_coef: model.dspec.mean() / (xi * model.kspec.mean()),
        })
    }
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    neighbours: Vec<f64>,
    messages: Vec<f64>,
    contract: Vec<f64>,
    perm: Vec<usize>,
}

impl Scratch {
    fn new(q: usize) -> Self {
        Self {
            perm: (0..q).collect(),
            ..Default::default()
        }
    }
}

/// Draws `k` neighbour points into `scr.neighbours`.
fn draw_neighbours<R: Rng + ?Sized>(
    pop: &SimplexPopulation,
    k: usize,
    scr: &mut Scratch,
    rng: &mut R,
) {
    let q = pop.q;
    scr.neighbours.resize(k * q, 0.0);
    for j in 0..k {
        pop.draw_into(rng, &mut scr.neighbours[j * q..(j + 1) * q], &mut scr.perm);
    }
}

/// Fills `scr.messages[slot*q..]` with one message `m(·)`, divided by `ξ`.
fn draw_message<R: Rng + ?Sized>(
    ctx: &BetheContext,
    pop: &SimplexPopulation,
    slot: usize,
    scr: &mut Scratch,
    rng: &mut R,
) {
    let q = ctx.q;
    let k = ctx.khat.sample(rng);
    let fam = ctx.family.get(k).expect("arity checked at construction");
    let h = rng.random_range(0..k);
    let values = fam.table(fam.sample_table(rng)).values();
    draw_neighbours(pop, k, scr, rng);
    let Scratch {
        neighbours,
        messages,
        contract,
        ..
    } = scr;
    let vecs: Vec<&[f64]> = neighbours.chunks(q).collect();
    let out = &mut messages[slot * q..(slot + 1) * q];
    contract_except(values, q, &vecs, h, out, contract);
    out.iter_mut().for_each(|x| *x /= ctx.xi);
}

/// Draws `d` messages and returns `Σ_σ ∏_i m_i(σ)/ξ`, leaving the
/// unnormalised product in `scr.messages[..q]`.
fn message_product<R: Rng + ?Sized>(
    ctx: &BetheContext,
    pop: &SimplexPopulation,
    d: usize,
    scr: &mut Scratch,
    rng: &mut R,
) -> f64 {
    let q = ctx.q;
    scr.messages.resize((d + 1) * q, 0.0);
    for i in 0..d {
        draw_message(ctx, pop, i + 1, scr, rng);
    }
    let (acc, rest) = scr.messages.split_at_mut(q);
    acc.iter_mut().for_each(|x| *x = 1.0);
    for m in rest.chunks(q) {
        for s in 0..q {
            acc[s] *= m[s];
        }
    }
    acc.iter().sum()
}

/// One sample of the Bethe integrand (variable term minus factor term).
fn bethe_sample<R: Rng + ?Sized>(
    ctx: &BetheContext,
    pop: &SimplexPopulation,
    scr: &mut Scratch,
    rng: &mut R,
) -> f64 {
    let q = ctx.q;
    let d = ctx.dspec.sample(rng);
    let s = message_product(ctx, pop, d, scr, rng);
    let var_term = if s > 0.0 {
        s * (s.ln() + d as f64 * ctx.xi.ln()) / q as f64
    } else {
        0.0
    };

    let k = ctx.kspec.sample(rng);
    let fam = ctx.family.get(k).expect("arity checked at construction");
    let values = fam.table(fam.sample_table(rng)).values();
    draw_neighbours(pop, k, scr, rng);
    let vecs: Vec<&[f64]> = scr.neighbours.chunks(q).collect();
    let z = contract(values, q, &vecs, &mut scr.contract);
    var_term - ctx.factor_coef * (k as f64 - 1.0) * lambda(z)
}

/// Samples per independently seeded chunk of [`bethe_estimate`].
pub const EVAL_CHUNK: usize = 4096;

/// Accumulator for chunk `chunk` of a Bethe evaluation; chunk `c` draws
/// from stream `c` of `seed`. Merging chunks in index order reproduces
/// [`bethe_estimate_ctx`] exactly.
pub fn bethe_chunk(
    ctx: &BetheContext,
    pop: &SimplexPopulation,
    samples: usize,
    chunk: usize,
    seed: u64,
) -> MeanAcc {
    let start = chunk * EVAL_CHUNK;
    let len = EVAL_CHUNK.min(samples.saturating_sub(start));
    let mut rng = substream(seed, chunk as u64);
    let mut scr = Scratch::new(ctx.q);
    let mut acc = MeanAcc::default();
    for _ in 0..len {
        acc.push(bethe_sample(ctx, pop, &mut scr, &mut rng));
    }
    acc
}

pub fn chunk_count(samples: usize) -> usize {
    samples.div_ceil(EVAL_CHUNK)
}

pub fn bethe_estimate_ctx(
    ctx: &BetheContext,
    pop: &SimplexPopulation,
    samples: usize,
    seed: u64,
) -> BetheEstimate {
    let mut acc = MeanAcc::default();
    for c in 0..chunk_count(samples) {
        acc.merge(&bethe_chunk(ctx, pop, samples, c, seed));
    }
    acc.into()
}

/// Monte-Carlo estimate of `B(π)` with its standard error.
pub fn bethe_estimate(
    pi: &SimplexPopulation,
    model: &ModelSpec,
    samples: usize,
    seed: u64,
) -> Result<BetheEstimate> {
    if pi.q() != model.q() {
        return Err(Error::InvalidArgument(
            "population and model disagree on q".into(),
        ));
    }
    Ok(bethe_estimate_ctx(
        &BetheContext::new(model)?,
        pi,
        samples,
        seed,
    ))
}

/// Enumeration cap for [`bethe_uniform_atom`] when messages differ.
pub const UNIFORM_ATOM_CAP: f64 = 1e7;

/// `B(δ_u)` by exact summation over the finite randomness of the functional
/// (degrees, arities, tables, positions); no Monte Carlo involved.
pub fn bethe_uniform_atom(model: &ModelSpec) -> Result<f64> {
    let ctx = BetheContext::new(model)?;
    let q = ctx.q;
    let u = vec![1.0 / q as f64; q];
    let mut scratch = Vec::new();

    // Law of a single message at the uniform atom, merged over equal vectors.
    let mut messages: Vec<(Vec<f64>, f64)> = Vec::new();
    for (k, pk) in ctx.khat.iter() {
        let fam = ctx.family.arity(k)?;
        let vecs: Vec<&[f64]> = vec![&u[..]; k];
        for (t, pt) in fam.tables().iter().zip(fam.masses()) {
            for h in 0..k {
                let mut m = vec![0.0; q];
                contract_except(t.values(), q, &vecs, h, &mut m, &mut scratch);
                m.iter_mut().for_each(|x| *x /= ctx.xi);
                let p = pk * pt / k as f64;
                match messages.iter_mut().find(|(v, _)| v == &m) {
                    Some(e) => e.1 += p,
                    None => messages.push((m, p)),
                }
            }
        }
    }

    let mut var_term = KahanSum::default();
    for (d, pd) in ctx.dspec.iter() {
        let needed = (messages.len() as f64).powi(d as i32);
        if needed > UNIFORM_ATOM_CAP {
            return Err(Error::CapExceeded {
                needed,
                cap: UNIFORM_ATOM_CAP as u64,
            });
        }
        let mut idx = vec![0usize; d];
        loop {
            let mut prob = pd;
            let mut s = 0.0;
            for sigma in 0..q {
                let mut prod = 1.0;
                for &i in &idx {
                    prod *= messages[i].0[sigma];
                }
                s += prod;
            }
            for &i in &idx {
                prob *= messages[i].1;
            }
            if s > 0.0 {
                var_term.add(prob * s * (s.ln() + d as f64 * ctx.xi.ln()) / q as f64);
            }
            let mut l = d;
            let done = loop {
                if l == 0 {
                    break true;
                }
                l -= 1;
                idx[l] += 1;
                if idx[l] < messages.len() {
                    break false;
                }
                idx[l] = 0;
            };
            if done {
                break;
            }
        }
    }

    let mut factor_term = KahanSum::default();
    for (k, pk) in ctx.kspec.iter() {
        let fam = ctx.family.arity(k)?;
        let vecs: Vec<&[f64]> = vec![&u[..]; k];
        for (t, pt) in fam.tables().iter().zip(fam.masses()) {
            factor_term.add(
                pk * pt * (k as f64 - 1.0) * lambda(contract(t.values(), q, &vecs, &mut scratch)),
            );
        }
    }
    Ok(var_term.value() - ctx.factor_coef * factor_term.value())
}

/// `φ_a = (1 − E[d]) ln q + (E[d]/E[k]) E[ln Z̄_k]`, `Z̄_k = Σ_τ E[ψ_k(τ)]`.
pub fn annealed_free_entropy(model: &ModelSpec) -> Result<f64> {
    model.xi()?;
    let q = model.q() as f64;
    let mut e_ln_z = KahanSum::default();
    for (k, pk) in model.kspec.iter() {
        e_ln_z.add(pk * model.family.arity(k)?.mean_total().ln());
    }
    let d = model.dspec.mean();
    Ok((1.0 - d) * q.ln() + d / model.kspec.mean() * e_ln_z.value())
}

/// `E[q^{−k} Σ_τ Λ(ψ_k(τ))]` by exact summation over the family.
pub fn information_term(model: &ModelSpec) -> Result<f64> {
    let q = model.q() as f64;
    let mut acc = KahanSum::default();
    for (k, pk) in model.kspec.iter() {
        let fam = model.family.arity(k)?;
        let scale = q.powi(-(k as i32));
        for (t, pt) in fam.tables().iter().zip(fam.masses()) {
            let s: f64 = t.values().iter().map(|&v| lambda(v)).sum();
            acc.add(pk * pt * scale * s);
        }
    }
    Ok(acc.value())
}

/// Population-dynamics budget and restart count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdBudget {
    pub pop_size: usize,
    pub sweeps: usize,
    pub eval_samples: usize,
    pub restarts: usize,
}

impl Default for PdBudget {
    fn default() -> Self {
        Self {
            pop_size: 10_000,
            sweeps: 200,
            eval_samples: 100_000,
            restarts: 1,
        }
    }
}

/// A finished population-dynamics run.
#[derive(Debug, Clone)]
pub struct PdRun {
    pub population: SimplexPopulation,
    /// [`SimplexPopulation::distance_to_barycenter`] after each sweep.
    pub trajectory: Vec<f64>,
}

/// One sweep: draw `len` weighted candidates, then resample systematically.
fn pd_sweep<R: Rng + ?Sized>(
    ctx: &BetheContext,
    pop: &SimplexPopulation,
    scr: &mut Scratch,
    rng: &mut R,
) -> Result<SimplexPopulation> {
    let q = ctx.q;
    let size = pop.len();
    let mut candidates = vec![0.0; size * q];
    let mut weights = vec![0.0; size];
    for i in 0..size {
        let d = ctx.excess.sample(rng);
        let s = message_product(ctx, pop, d, scr, rng);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NumericalUnderflow);
        }
        for sigma in 0..q {
            candidates[i * q + sigma] = scr.messages[sigma] / s;
        }
        weights[i] = s / q as f64;
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::NumericalUnderflow);
    }
    let step = total / size as f64;
    let mut u = rng.random::<f64>() * step;
    let mut points = Vec::with_capacity(size * q);
    let mut cum = 0.0;
    let mut j = 0;
    for _ in 0..size {
        while j + 1 < size && cum + weights[j] <= u {
            cum += weights[j];
            j += 1;
        }
        points.extend_from_slice(&candidates[j * q..(j + 1) * q]);
        u += step;
    }
    Ok(SimplexPopulation {
        q,
        points,
        generation: pop.generation + 1,
        init: pop.init,
        symmetrized: pop.symmetrized,
    })
}

pub fn population_dynamics_ctx(
    ctx: &BetheContext,
    pop_size: usize,
    sweeps: usize,
    init: Init,
    seed: u64,
) -> Result<PdRun> {
    if pop_size < 100 {
        return Err(Error::InvalidArgument(
            "population size must be at least 100".into(),
        ));
    }
    let mut rng = substream(seed, 0);
    let mut pop = SimplexPopulation::initial(ctx.q, pop_size, init, &mut rng);
    let mut scr = Scratch::new(ctx.q);
    let mut trajectory = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        pop = pd_sweep(ctx, &pop, &mut scr, &mut rng)?;
        if !pop.symmetrized && pop.mean_deviation() > RECENTER_BAND {
            pop.symmetrized = true;
        }
        trajectory.push(pop.distance_to_barycenter());
    }
    Ok(PdRun {
        population: pop,
        trajectory,
    })
}

/// Iterates the distributional BP map for `sweeps` full population sweeps.
pub fn population_dynamics(
    model: &ModelSpec,
    pop_size: usize,
    sweeps: usize,
    init: Init,
    seed: u64,
) -> Result<PdRun> {
    population_dynamics_ctx(&BetheContext::new(model)?, pop_size, sweeps, init, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Candidate {
    UniformAtom,
    PdUniform { restart: usize },
    PdPlanted { restart: usize },
}

impl Candidate {
    pub fn tag(&self) -> String {
        match self {
            Candidate::UniformAtom => "uniform-atom".into(),
            Candidate::PdUniform { restart } => alloc::format!("pd-uniform-{restart}"),
            Candidate::PdPlanted { restart } => alloc::format!("pd-planted-{restart}"),
        }
    }
}

/// Best Bethe value found. A lower bound on `sup_π B(π)`; heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct SupBethe {
    pub value: f64,
    pub stderr: f64,
    pub argmax: Candidate,
    pub candidates: Vec<(Candidate, BetheEstimate)>,
    pub heuristic: bool,
}

impl SupBethe {
    pub fn candidate(&self, c: Candidate) -> Option<BetheEstimate> {
        self.candidates.iter().find(|e| e.0 == c).map(|e| e.1)
    }

    /// Best estimate among runs started from the given initialisation.
    pub fn best_pd(&self, planted: bool) -> Option<BetheEstimate> {
        self.candidates
            .iter()
            .filter(|(c, _)| match c {
                Candidate::PdUniform { .. } => !planted,
                Candidate::PdPlanted { .. } => planted,
                Candidate::UniformAtom => false,
            })
            .map(|e| e.1)
            .max_by(|a, b| a.value.total_cmp(&b.value))
    }
}

/// Relative margin by which a candidate must beat the incumbent.
pub const SUP_TIE_TOL: f64 = 1e-12;

/// Runs one population-dynamics candidate and evaluates it.
pub fn pd_candidate(
    ctx: &BetheContext,
    budget: &PdBudget,
    candidate: Candidate,
    seed: u64,
) -> Result<BetheEstimate> {
    let (init, tag) = match candidate {
        Candidate::UniformAtom => {
            return Ok(BetheEstimate {
                value: bethe_uniform_atom_ctx(ctx)?,
                stderr: 0.0,
                samples: 0,
            });
        }
        Candidate::PdUniform { restart } => (Init::UniformPerturbed, 2 * restart as u64),
        Candidate::PdPlanted { restart } => (Init::PlantedPolarized, 2 * restart as u64 + 1),
    };
    let run = population_dynamics_ctx(
        ctx,
        budget.pop_size,
        budget.sweeps,
        init,
        derive_seed(seed, tag),
    )?;
    Ok(bethe_estimate_ctx(
        ctx,
        &run.population,
        budget.eval_samples,
        derive_seed(seed, 1 << 32 | tag),
    ))
}

fn bethe_uniform_atom_ctx(ctx: &BetheContext) -> Result<f64> {
    let spec = ModelSpec {
        kind: crate::model::ModelKind::Custom {
            name: "context".into(),
        },
        dspec: ctx.dspec.clone(),
        kspec: ctx.kspec.clone(),
        family: ctx.family.clone(),
    };
    bethe_uniform_atom(&spec)
}

/// Candidates evaluated by [`sup_bethe`], in order.
pub fn candidates(restarts: usize) -> Vec<Candidate> {
    let mut out = vec![Candidate::UniformAtom];
    for r in 0..restarts {
        out.push(Candidate::PdUniform { restart: r });
        out.push(Candidate::PdPlanted { restart: r });
    }
    out
}

/// Picks the best of already evaluated candidates; the uniform atom wins ties.
pub fn select_sup(evaluated: Vec<(Candidate, BetheEstimate)>) -> SupBethe {
    let mut best = 0;
    for (i, (_, e)) in evaluated.iter().enumerate().skip(1) {
        let inc = evaluated[best].1.value;
        if e.value > inc + SUP_TIE_TOL * (1.0 + inc.abs()) {
            best = i;
        }
    }
    let (argmax, est) = evaluated[best];
    SupBethe {
        value: est.value,
        stderr: est.stderr,
        argmax,
        candidates: evaluated,
        heuristic: true,
    }
}

/// Best of the uniform atom and population dynamics from both
/// initialisations across `budget.restarts` restarts.
pub fn sup_bethe(model: &ModelSpec, budget: &PdBudget, seed: u64) -> Result<SupBethe> {
    let ctx = BetheContext::new(model)?;
    let evaluated = candidates(budget.restarts)
        .into_iter()
        .map(|c| pd_candidate(&ctx, budget, c, seed).map(|e| (c, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok(select_sup(evaluated))
}

/// Which hypotheses [`mutual_information`] verifies before computing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssumptionPolicy {
    pub check_bal: bool,
    /// POS falsifier trials; zero waives POS.
    pub pos_trials: usize,
    pub seed: u64,
}

impl Default for AssumptionPolicy {
    fn default() -> Self {
        Self {
            check_bal: true,
            pos_trials: 100,
            seed: 0,
        }
    }
}

impl AssumptionPolicy {
    pub fn waived() -> Self {
        Self {
            check_bal: false,
            pos_trials: 0,
            seed: 0,
        }
    }
}

/// Simplex grid resolution used by the BAL precondition.
pub const BAL_RESOLUTION: usize = 64;
/// Monte-Carlo samples per POS trial when exact evaluation is too costly.
pub const POS_SAMPLES: usize = 20_000;

pub fn check_policy(model: &ModelSpec, policy: &AssumptionPolicy) -> Result<()> {
    model.xi()?;
    if policy.check_bal {
        check_bal(&model.family, BAL_RESOLUTION)?.require()?;
    }
    if policy.pos_trials > 0 {
        check_pos(&model.family, policy.pos_trials, POS_SAMPLES, policy.seed).require()?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutualInformation {
    /// Nats per variable.
    pub value: f64,
    pub stderr: f64,
    pub information_term: f64,
    pub sup: SupBethe,
}

/// `ln q + E[d]/(ξE[k]) · E[q^{−k} Σ_τ Λ(ψ(τ))] − sup B`.
pub fn mutual_information_from(model: &ModelSpec, sup: SupBethe) -> Result<MutualInformation> {
    let ctx = BetheContext::new(model)?;
    let info = information_term(model)?;
    let value = (ctx.q as f64).ln() + ctx.factor_coef * info - sup.value;
    Ok(MutualInformation {
        value,
        stderr: sup.stderr,
        information_term: info,
        sup,
    })
}

pub fn mutual_information(
    model: &ModelSpec,
    budget: &PdBudget,
    policy: &AssumptionPolicy,
    seed: u64,
) -> Result<MutualInformation> {
    check_policy(model, policy)?;
    let sup = sup_bethe(model, budget, seed)?;
    mutual_information_from(model, sup)
}

/// Reference value a scan compares against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Comparator {
    /// The annealed free entropy of each grid point.
    Annealed,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub param: f64,
    pub b_uniform: f64,
    pub b_pd_uniform: BetheEstimate,
    pub b_pd_planted: BetheEstimate,
    pub phi_a: f64,
    pub comparator: f64,
}

impl ScanRow {
    /// Best population estimate and its margin over the comparator in SE.
    pub fn best(&self) -> BetheEstimate {
        if self.b_pd_planted.value >= self.b_pd_uniform.value {
            self.b_pd_planted
        } else {
            self.b_pd_uniform
        }
    }

    /// Zero-variance estimates still need a rounding margin, the same one
    /// [`select_sup`] uses for ties.
    pub fn crosses(&self) -> bool {
        let b = self.best();
        b.value - self.comparator
            > SCAN_SE_FACTOR * b.stderr + SUP_TIE_TOL * (1.0 + self.comparator.abs())
    }
}

/// A crossing must clear the comparator by this many standard errors.
pub const SCAN_SE_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdScan {
    pub rows: Vec<ScanRow>,
    /// Index of the first crossing row.
    pub crossing: Option<usize>,
}

impl ThresholdScan {
    /// `[previous grid point, first crossing]`, or `NoCrossing`.
    pub fn bracket(&self) -> Result<(f64, f64)> {
        let i = self.crossing.ok_or(Error::NoCrossing)?;
        let lo = if i == 0 {
            self.rows[0].param
        } else {
            self.rows[i - 1].param
        };
        Ok((lo, self.rows[i].param))
    }
}

/// Evaluates one scan grid point with one population run per initialisation.
pub fn scan_row(
    model: &ModelSpec,
    param: f64,
    comparator: Comparator,
    budget: &PdBudget,
    seed: u64,
) -> Result<ScanRow> {
    let ctx = BetheContext::new(model)?;
    let phi_a = annealed_free_entropy(model)?;
    let b_uniform = bethe_uniform_atom(model)?;
    let b_pd_uniform = pd_candidate(&ctx, budget, Candidate::PdUniform { restart: 0 }, seed)?;
    let b_pd_planted = pd_candidate(&ctx, budget, Candidate::PdPlanted { restart: 0 }, seed)?;
    let comparator = match comparator {
        Comparator::Annealed => phi_a,
        Comparator::Explicit(v) => v,
    };
    Ok(ScanRow {
        param,
        b_uniform,
        b_pd_uniform,
        b_pd_planted,
        phi_a,
        comparator,
    })
}

/// Assembles a scan from evaluated rows.
pub fn finish_scan(rows: Vec<ScanRow>) -> ThresholdScan {
    let crossing = rows.iter().position(ScanRow::crosses);
    ThresholdScan { rows, crossing }
}

/// Scans `grid` (sorted ascending) and locates the first point where the
/// population estimate exceeds the comparator by more than three SE.
pub fn threshold_scan<F>(
    build: F,
    grid: &[f64],
    comparator: Comparator,
    budget: &PdBudget,
    seed: u64,
) -> Result<ThresholdScan>
where
    F: Fn(f64) -> Result<ModelSpec>,
{
    validate_grid(grid)?;
    let rows = grid
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            scan_row(
                &build(p)?,
                p,
                comparator,
                budget,
                derive_seed(seed, i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish_scan(rows))
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty parameter grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "parameter grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{ArityFamily, WeightTable};
    use crate::model::ModelKind;

    fn constant_model(c: f64) -> ModelSpec {
        let t = WeightTable::from_fn(3, 2, |_| c).unwrap();
        let fam = WeightFamily::new(3, vec![ArityFamily::single(t).unwrap()]).unwrap();
        ModelSpec::new(
            ModelKind::Custom {
                name: "const".into(),
            },
            DegreeSpec::constant(2).unwrap(),
            DegreeSpec::constant(2).unwrap(),
            fam,
        )
        .unwrap()
    }

    #[test]
    fn constant_weights_give_ln_q_plus_ln_c() {
        let m = constant_model(1.7);
        let expect = 3f64.ln() + 1.7f64.ln();
        assert!((annealed_free_entropy(&m).unwrap() - expect).abs() < 1e-12);
        assert!((bethe_uniform_atom(&m).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn pd_with_constant_weights_is_uniform() {
        let m = constant_model(2.0);
        let run = population_dynamics(&m, 200, 2, Init::PlantedPolarized, 1).unwrap();
        for p in run.population.points() {
            for &x in p {
                assert!((x - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bracket_requires_crossing() {
        let scan = ThresholdScan {
            rows: Vec::new(),
            crossing: None,
        };
        assert_eq!(scan.bracket(), Err(Error::NoCrossing));
    }
}

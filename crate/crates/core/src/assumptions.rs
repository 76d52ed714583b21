//! Executable checks of the model hypotheses DEG, SYM, BAL and POS.
//!
//! SYM and BAL are deterministic. POS quantifies over all pairs of measures
//! on the simplex, so [`check_pos`] is a falsifier: passing means no
//! violation was found.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::degree::DegreeSpec;
use crate::error::{Error, Result};
use crate::family::{contract, decode, ArityFamily, WeightFamily};
use crate::math::{lambda, KahanSum};
use crate::rng::substream;
use crate::stats::MeanAcc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assumption {
    Deg,
    Sym,
    Bal,
    Pos,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Assumption::Deg => "DEG",
            Assumption::Sym => "SYM",
            Assumption::Bal => "BAL",
            Assumption::Pos => "POS",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: Assumption,
    pub passed: bool,
    /// Violating configuration; present iff the check failed.
    pub witness: Option<String>,
    /// Largest violation seen (zero or negative means none).
    pub magnitude: f64,
    pub detail: String,
    /// `ξ`, filled by the SYM check.
    pub xi: Option<f64>,
}

impl CheckReport {
    fn pass(name: Assumption, magnitude: f64, detail: String) -> Self {
        Self {
            name,
            passed: true,
            witness: None,
            magnitude,
            detail,
            xi: None,
        }
    }

    fn fail(name: Assumption, witness: String, magnitude: f64, detail: String) -> Self {
        Self {
            name,
            passed: false,
            witness: Some(witness),
            magnitude,
            detail,
            xi: None,
        }
    }

    /// `Ok(())` when passed, otherwise `AssumptionViolation`.
    pub fn require(&self) -> Result<()> {
        if self.passed {
            Ok(())
        } else {
            Err(Error::AssumptionViolation {
                name: self.name.to_string(),
                detail: format!(
                    "{} (witness: {})",
                    self.detail,
                    self.witness.as_deref().unwrap_or("")
                ),
            })
        }
    }
}

/// Bounded support makes every moment finite, so DEG reduces to positive means.
pub fn check_deg(dspec: &DegreeSpec, kspec: &DegreeSpec) -> CheckReport {
    let detail = format!(
        "E[d]={}, E[d^2]={}, E[k]={}, E[k^2]={}, max d={}, max k={}",
        dspec.mean(),
        dspec.second_moment(),
        kspec.mean(),
        kspec.second_moment(),
        dspec.max(),
        kspec.max()
    );
    for (label, spec) in [("d", dspec), ("k", kspec)] {
        if !(spec.mean() > 0.0) {
            return CheckReport::fail(Assumption::Deg, format!("E[{label}]=0"), 0.0, detail);
        }
    }
    CheckReport::pass(Assumption::Deg, 0.0, detail)
}

/// DEG on raw `(value, mass)` pairs, which may describe a zero-mean law that
/// [`DegreeSpec`] refuses to build.
pub fn check_deg_pairs(d: &[(usize, f64)], k: &[(usize, f64)]) -> CheckReport {
    let build = |label: &str, pairs: &[(usize, f64)]| match DegreeSpec::new(pairs) {
        Ok(s) => Ok(s),
        Err(Error::ZeroMean) => Err(CheckReport::fail(
            Assumption::Deg,
            format!("E[{label}]=0"),
            0.0,
            format!("{label} has all mass on 0"),
        )),
        Err(e) => Err(CheckReport::fail(
            Assumption::Deg,
            format!("{label}: {e}"),
            0.0,
            e.to_string(),
        )),
    };
    match (build("d", d), build("k", k)) {
        (Ok(ds), Ok(ks)) => check_deg(&ds, &ks),
        (Err(r), _) | (_, Err(r)) => r,
    }
}

/// Exact SYM check: every `q^{1−k} Σ_{σ_j=ω} ψ(σ)` must equal a common `ξ`
/// within `tol` (relative to `ξ`) and every entry must be positive.
pub fn check_sym(family: &WeightFamily, tol: f64) -> CheckReport {
    let q = family.q();
    let mut xi: Option<f64> = None;
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut min_entry = f64::INFINITY;
    let mut max_entry = 0.0f64;
    for fam in family.arities() {
        let k = fam.arity();
        let scale = (q as f64).powi(1 - k as i32);
        let mut spins = vec![0; k];
        for (id, table) in fam.tables().iter().enumerate() {
            min_entry = min_entry.min(table.min());
            max_entry = max_entry.max(table.max());
            if !(table.min() > 0.0) {
                return CheckReport::fail(
                    Assumption::Sym,
                    format!("k={k} table={id} has a non-positive entry {}", table.min()),
                    -table.min(),
                    "weight tables must be strictly positive".into(),
                );
            }
            let mut sums = vec![KahanSum::default(); k * q];
            for (i, &v) in table.values().iter().enumerate() {
                decode(i, q, &mut spins);
                for (j, &s) in spins.iter().enumerate() {
                    sums[j * q + s].add(v);
                }
            }
            for j in 0..k {
                for w in 0..q {
                    let s = sums[j * q + w].value() * scale;
                    let x = *xi.get_or_insert(s);
                    let dev = (s - x).abs() / x;
                    if dev > worst {
                        worst = dev;
                        if dev > tol {
                            witness = Some(format!(
                                "k={k} table={id} j={} omega={w}: {s} vs xi={x}",
                                j + 1
                            ));
                        }
                    }
                }
            }
        }
    }
    let detail = format!("xi={:?}, min entry={min_entry}, max entry={max_entry}", xi);
    let mut report = match witness {
        Some(w) => CheckReport::fail(Assumption::Sym, w, worst, detail),
        None => CheckReport::pass(Assumption::Sym, worst, detail),
    };
    report.xi = xi;
    report
}

/// `Σ_σ E[ψ_k(σ)] ∏ μ(σ_i)`.
pub fn bal_objective(fam: &ArityFamily, q: usize, mu: &[f64], scratch: &mut Vec<f64>) -> f64 {
    let vecs: Vec<&[f64]> = vec![mu; fam.arity()];
    contract(fam.mean_table(), q, &vecs, scratch)
}

fn simplex_grid(q: usize, res: usize) -> Vec<Vec<f64>> {
    fn rec(q: usize, left: usize, res: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if cur.len() == q - 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / res as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(q, left - c, res, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(q, res, res, &mut Vec::new(), &mut out);
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Largest simplex grid [`check_bal`] will build.
pub const BAL_GRID_CAP: f64 = 2e6;
/// Midpoint-concavity pairs drawn per arity.
pub const BAL_PAIRS: usize = 4096;

/// BAL on a simplex grid of step `1/resolution`: the uniform point must be a
/// grid maximum of the objective and midpoint concavity must hold on sampled
/// grid pairs. Both comparisons allow `1e-12` relative slack.
pub fn check_bal(family: &WeightFamily, resolution: usize) -> Result<CheckReport> {
    let q = family.q();
    if resolution < q {
        return Err(Error::GridTooCoarse(format!(
            "resolution {resolution} cannot resolve q = {q}"
        )));
    }
    let points = binomial(resolution + q - 1, q - 1);
    if points > BAL_GRID_CAP {
        return Err(Error::CapExceeded {
            needed: points,
            cap: BAL_GRID_CAP as u64,
        });
    }
    let grid = simplex_grid(q, resolution);
    let uniform = vec![1.0 / q as f64; q];
    let mut scratch = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut rng = substream(0xBA1, 0);
    for fam in family.arities() {
        let k = fam.arity();
        let at_uniform = bal_objective(fam, q, &uniform, &mut scratch);
        let values: Vec<f64> = grid
            .iter()
            .map(|mu| bal_objective(fam, q, mu, &mut scratch))
            .collect();
        let slack = 1e-12 * values.iter().fold(at_uniform.abs(), |m, v| m.max(v.abs()));
        for (mu, &v) in grid.iter().zip(&values) {
            let excess = v - at_uniform;
            worst = worst.max(excess);
            if excess > slack {
                return Ok(CheckReport::fail(
                    Assumption::Bal,
                    format!("k={k} mu={mu:?} gives {v} > {at_uniform} at uniform"),
                    excess,
                    "uniform distribution is not the maximiser".into(),
                ));
            }
        }
        let mut mid = vec![0.0; q];
        for _ in 0..BAL_PAIRS {
            let a = rng.random_range(0..grid.len());
            let b = rng.random_range(0..grid.len());
            for s in 0..q {
                mid[s] = 0.5 * (grid[a][s] + grid[b][s]);
            }
            let gap = 0.5 * (values[a] + values[b]) - bal_objective(fam, q, &mid, &mut scratch);
            worst = worst.max(gap);
            if gap > slack {
                return Ok(CheckReport::fail(
                    Assumption::Bal,
                    format!("k={k} midpoint of {:?} and {:?}", grid[a], grid[b]),
                    gap,
                    "objective is not concave".into(),
                ));
            }
        }
    }
    Ok(CheckReport::pass(
        Assumption::Bal,
        worst.max(0.0),
        format!("grid of {} points, step 1/{resolution}", grid.len()),
    ))
}

/// A finitely supported measure on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomMeasure {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl AtomMeasure {
    pub fn mean(&self) -> Vec<f64> {
        let q = self.points[0].len();
        let mut m = vec![0.0; q];
        for (p, w) in self.points.iter().zip(&self.weights) {
            for s in 0..q {
                m[s] += w * p[s];
            }
        }
        m
    }

    fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect()
    }

    /// Closes the measure under cyclic spin shifts, which centres its mean.
    pub fn symmetrize(&self) -> Self {
        let q = self.points[0].len();
        let mut points = Vec::with_capacity(self.points.len() * q);
        let mut weights = Vec::with_capacity(self.points.len() * q);
        for (p, &w) in self.points.iter().zip(&self.weights) {
            for c in 0..q {
                points.push((0..q).map(|s| p[(s + c) % q]).collect());
                weights.push(w / q as f64);
            }
        }
        Self { points, weights }
    }
}

fn dirichlet<R: Rng + ?Sized>(q: usize, alpha: f64, rng: &mut R) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).expect("positive shape");
    loop {
        let v: Vec<f64> = (0..q).map(|_| g.sample(rng)).collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 && s.is_finite() {
            return v.into_iter().map(|x| x / s).collect();
        }
    }
}

/// Random atoms plus one corrective atom placing the mean at the barycenter.
fn corrected_atoms<R: Rng + ?Sized>(q: usize, atoms: usize, rng: &mut R) -> AtomMeasure {
    let alpha = [0.2, 1.0, 5.0][rng.random_range(0..3)];
    let mut points: Vec<Vec<f64>> = (0..atoms).map(|_| dirichlet(q, alpha, rng)).collect();
    let mut weights: Vec<f64> = (0..atoms).map(|_| 0.1 + rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let mut mbar = vec![0.0; q];
    for (p, w) in points.iter().zip(&weights) {
        for s in 0..q {
            mbar[s] += w * p[s] / total;
        }
    }
    let u = 1.0 / q as f64;
    let excess = mbar.iter().map(|&m| q as f64 * (m - u)).fold(0.0, f64::max);
    let w0 = total * excess.max(1e-3) * (1.0 + rng.random::<f64>());
    let nu: Vec<f64> = mbar
        .iter()
        .map(|&m| (u + total / w0 * (u - m)).max(0.0))
        .collect();
    let s: f64 = nu.iter().sum();
    points.push(nu.into_iter().map(|x| x / s).collect());
    weights.push(w0);
    let z = total + w0;
    weights.iter_mut().for_each(|w| *w /= z);
    AtomMeasure { points, weights }
}

/// Mixtures `(1−s)·uniform + s·e_ω` for every `ω`, equal weights.
fn polarized<R: Rng + ?Sized>(q: usize, rng: &mut R) -> AtomMeasure {
    let s = [1.0, 0.9, 0.5, rng.random::<f64>()][rng.random_range(0..4)];
    let u = (1.0 - s) / q as f64;
    let points = (0..q)
        .map(|w| (0..q).map(|t| if t == w { u + s } else { u }).collect())
        .collect();
    AtomMeasure {
        points,
        weights: vec![1.0 / q as f64; q],
    }
}

/// Draws a measure in `P_*(Ω)` from the falsifier's generator mix.
pub fn random_pstar<R: Rng + ?Sized>(q: usize, max_atoms: usize, rng: &mut R) -> AtomMeasure {
    match rng.random_range(0..4) {
        0 | 1 => corrected_atoms(q, rng.random_range(1..max_atoms.max(2)), rng),
        2 => polarized(q, rng),
        _ => {
            let base = AtomMeasure {
                points: vec![dirichlet(q, 0.5, rng)],
                weights: vec![1.0],
            };
            base.symmetrize()
        }
    }
}

/// The three POS terms for one arity:
/// `E Λ(ψ∏μ)`, `(k−1) E Λ(ψ∏μ′)` and `Σ_j E Λ(ψ μ_j ∏_{i≠j} μ′_i)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosTerms {
    pub all_pi: f64,
    pub all_pi_prime: f64,
    pub mixed: f64,
    /// Standard error of the gap; zero for exact evaluation.
    pub stderr: f64,
}

impl PosTerms {
    /// Left side minus right side; negative values violate POS.
    pub fn gap(&self) -> f64 {
        self.all_pi + self.all_pi_prime - self.mixed
    }

    pub fn scale(&self) -> f64 {
        self.all_pi.abs() + self.all_pi_prime.abs() + self.mixed.abs()
    }
}

/// Atom combinations above which [`pos_terms`] switches to Monte Carlo.
pub const POS_EXACT_CAP: f64 = 2e5;

/// Evaluates the POS terms for one arity, exactly over atom combinations
/// when cheap enough, else by `samples` shared Monte-Carlo draws.
pub fn pos_terms<R: Rng + ?Sized>(
    fam: &ArityFamily,
    q: usize,
    pi: &AtomMeasure,
    pi_prime: &AtomMeasure,
    samples: usize,
    rng: &mut R,
) -> PosTerms {
    let k = fam.arity();
    let a = pi.points.len() as f64;
    let b = pi_prime.points.len() as f64;
    let combos = (a.powi(k as i32) + b.powi(k as i32) + k as f64 * a * b.powi(k as i32 - 1))
        * fam.tables().len() as f64;
    if combos <= POS_EXACT_CAP {
        pos_terms_exact(fam, q, pi, pi_prime)
    } else {
        pos_terms_mc(fam, q, pi, pi_prime, samples, rng)
    }
}

fn expected_lambda(fam: &ArityFamily, q: usize, vecs: &[&[f64]], scratch: &mut Vec<f64>) -> f64 {
    fam.tables()
        .iter()
        .zip(fam.masses())
        .map(|(t, p)| p * lambda(contract(t.values(), q, vecs, scratch)))
        .sum()
}

/// `Σ` over atom tuples where coordinate `l` is drawn from `sources[l]`.
fn tuple_sum(fam: &ArityFamily, q: usize, sources: &[&AtomMeasure], scratch: &mut Vec<f64>) -> f64 {
    let k = sources.len();
    let mut idx = vec![0usize; k];
    let mut acc = KahanSum::default();
    loop {
        let w: f64 = (0..k).map(|l| sources[l].weights[idx[l]]).product();
        let vecs: Vec<&[f64]> = (0..k).map(|l| &sources[l].points[idx[l]][..]).collect();
        acc.add(w * expected_lambda(fam, q, &vecs, scratch));
        let mut l = k;
        loop {
            if l == 0 {
                return acc.value();
            }
            l -= 1;
            idx[l] += 1;
            if idx[l] < sources[l].points.len() {
                break;
            }
            idx[l] = 0;
        }
    }
}

pub fn pos_terms_exact(
    fam: &ArityFamily,
    q: usize,
    pi: &AtomMeasure,
    pi_prime: &AtomMeasure,
) -> PosTerms {
    let k = fam.arity();
    let mut scratch = Vec::new();
    let all_pi = tuple_sum(fam, q, &vec![pi; k], &mut scratch);
    let all_pi_prime = (k - 1) as f64 * tuple_sum(fam, q, &vec![pi_prime; k], &mut scratch);
    let mut mixed = 0.0;
    for j in 0..k {
        let sources: Vec<&AtomMeasure> =
            (0..k).map(|l| if l == j { pi } else { pi_prime }).collect();
        mixed += tuple_sum(fam, q, &sources, &mut scratch);
    }
    PosTerms {
        all_pi,
        all_pi_prime,
        mixed,
        stderr: 0.0,
    }
}

fn pick<'a, R: Rng + ?Sized>(m: &'a AtomMeasure, cum: &[f64], rng: &mut R) -> &'a [f64] {
    let u = rng.random::<f64>() * cum[cum.len() - 1];
    &m.points[cum.partition_point(|&c| c <= u).min(cum.len() - 1)]
}

pub fn pos_terms_mc<R: Rng + ?Sized>(
    fam: &ArityFamily,
    q: usize,
    pi: &AtomMeasure,
    pi_prime: &AtomMeasure,
    samples: usize,
    rng: &mut R,
) -> PosTerms {
    let k = fam.arity();
    let (ca, cb) = (pi.cumulative(), pi_prime.cumulative());
    let mut scratch = Vec::new();
    let (mut t1, mut t3, mut t2, mut gap) = (
        MeanAcc::default(),
        MeanAcc::default(),
        MeanAcc::default(),
        MeanAcc::default(),
    );
    let mut mixed: Vec<&[f64]> = Vec::with_capacity(k);
    for _ in 0..samples.max(2) {
        let id = fam.sample_table(rng);
        let values = fam.table(id).values();
        let mu: Vec<&[f64]> = (0..k).map(|_| pick(pi, &ca, rng)).collect();
        let nu: Vec<&[f64]> = (0..k).map(|_| pick(pi_prime, &cb, rng)).collect();
        let a = lambda(contract(values, q, &mu, &mut scratch));
        let c = (k - 1) as f64 * lambda(contract(values, q, &nu, &mut scratch));
        let mut b = 0.0;
        for j in 0..k {
            mixed.clear();
            mixed.extend((0..k).map(|l| if l == j { mu[j] } else { nu[l] }));
            b += lambda(contract(values, q, &mixed, &mut scratch));
        }
        t1.push(a);
        t3.push(c);
        t2.push(b);
        gap.push(a + c - b);
    }
    PosTerms {
        all_pi: t1.mean(),
        all_pi_prime: t3.mean(),
        mixed: t2.mean(),
        stderr: gap.stderr(),
    }
}

/// Largest atom count per generated measure.
pub const POS_MAX_ATOMS: usize = 5;

/// How a POS trial's pair of measures was produced.
fn trial_pair<R: Rng + ?Sized>(
    trial: usize,
    q: usize,
    rng: &mut R,
) -> (&'static str, AtomMeasure, AtomMeasure) {
    match trial % 5 {
        0 => (
            "independent",
            random_pstar(q, POS_MAX_ATOMS, rng),
            random_pstar(q, POS_MAX_ATOMS, rng),
        ),
        1 => {
            let p = random_pstar(q, POS_MAX_ATOMS, rng);
            ("identical", p.clone(), p)
        }
        2 => (
            "polarized",
            polarized(q, rng),
            random_pstar(q, POS_MAX_ATOMS, rng),
        ),
        3 => {
            let skew = corrected_atoms(q, rng.random_range(1..POS_MAX_ATOMS), rng);
            ("symmetrized-vs-skewed", skew.symmetrize(), skew)
        }
        _ => {
            let skew = corrected_atoms(q, rng.random_range(1..POS_MAX_ATOMS), rng);
            ("skewed-vs-symmetrized", skew.clone(), skew.symmetrize())
        }
    }
}

/// Relative slack for exact POS evaluation.
pub const POS_EXACT_TOL: f64 = 1e-12;
/// Monte-Carlo violations must exceed this many standard errors.
pub const POS_SE_FACTOR: f64 = 4.0;

/// Randomised POS falsifier over `trials` measure pairs, checked per arity.
/// `population_size` is the Monte-Carlo sample count used when exact
/// evaluation over atoms is too expensive.
pub fn check_pos(
    family: &WeightFamily,
    trials: usize,
    population_size: usize,
    seed: u64,
) -> CheckReport {
    let q = family.q();
    let mut worst = f64::NEG_INFINITY;
    let mut evaluated = 0usize;
    for t in 0..trials {
        let mut rng = substream(seed, t as u64);
        let (kind, pi, pi_prime) = trial_pair(t, q, &mut rng);
        for fam in family.arities() {
            let terms = pos_terms(fam, q, &pi, &pi_prime, population_size, &mut rng);
            evaluated += 1;
            let threshold = if terms.stderr == 0.0 {
                // The terms can cancel to zero while each Λ argument is of
                // order one, so the largest table entry bounds the rounding.
                let entry = fam.tables().iter().map(|t| t.max()).fold(0.0, f64::max);
                POS_EXACT_TOL * (terms.scale() + 2.0 * fam.arity() as f64 * entry)
            } else {
                POS_SE_FACTOR * terms.stderr
            };
            let violation = -terms.gap() - threshold;
            worst = worst.max(-terms.gap());
            if violation > 0.0 {
                return CheckReport::fail(
                    Assumption::Pos,
                    format!(
                        "trial {t} ({kind}), k={}: pi={:?}, pi'={:?}",
                        fam.arity(),
                        pi,
                        pi_prime
                    ),
                    -terms.gap(),
                    format!("gap {} below -{threshold}", terms.gap()),
                );
            }
        }
    }
    CheckReport::pass(
        Assumption::Pos,
        worst,
        format!("no violation found in {trials} trials ({evaluated} arity evaluations)"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::WeightTable;

    fn single(q: usize, k: usize, f: impl FnMut(&[usize]) -> f64) -> WeightFamily {
        WeightFamily::new(
            q,
            vec![ArityFamily::single(WeightTable::from_fn(q, k, f).unwrap()).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn corrected_atoms_have_barycentric_mean() {
        let mut rng = substream(1, 0);
        for q in 2..5 {
            for _ in 0..100 {
                let m = corrected_atoms(q, 4, &mut rng);
                assert!(m.points.iter().all(|p| p.iter().all(|&x| x >= 0.0)));
                for x in m.mean() {
                    assert!((x - 1.0 / q as f64).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sym_witness_for_biased_table() {
        let fam = single(2, 2, |s| if s[0] == 1 { 1.1 } else { 0.1 });
        let r = check_sym(&fam, 1e-12);
        assert!(!r.passed);
        assert!(r.witness.unwrap().contains("j=1"));
    }

    #[test]
    fn bal_on_simple_tables() {
        let dis = single(2, 2, |s| if s[0] == s[1] { (-1.0f64).exp() } else { 1.0 });
        assert!(check_bal(&dis, 64).unwrap().passed);
        let ass = single(2, 2, |s| if s[0] == s[1] { 2f64.exp() } else { 1.0 });
        assert!(!check_bal(&ass, 64).unwrap().passed);
        assert!(matches!(check_bal(&ass, 1), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn identical_measures_close_the_gap() {
        let fam = single(2, 2, |s| if s[0] == s[1] { 0.5 } else { 1.5 });
        let mut rng = substream(4, 0);
        let p = random_pstar(2, 4, &mut rng);
        let t = pos_terms_exact(fam.get(2).unwrap(), 2, &p, &p);
        assert!(t.gap().abs() < 1e-12 * t.scale());
    }
}

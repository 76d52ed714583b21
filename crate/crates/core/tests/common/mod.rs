//! Brute-force oracles written independently of the crate's enumerators.
#![allow(dead_code)]

use factor_cavity_core::{Assignment, DegreeSequence, FactorGraph, WeightFamily};

/// Every permutation of `0..n`, by Heap's algorithm.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (0..n).collect();
    let mut c = vec![0; n];
    let mut out = vec![a.clone()];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

pub fn owners(seq: &DegreeSequence) -> Vec<usize> {
    seq.var_degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat(v).take(d))
        .collect()
}

/// Per-factor variable tuples for a bijection of clones.
pub fn contract(seq: &DegreeSequence, perm: &[usize]) -> Vec<Vec<usize>> {
    let own = owners(seq);
    let mut out = Vec::new();
    let mut at = 0;
    for &k in &seq.arities {
        out.push(perm[at..at + k].iter().map(|&c| own[c]).collect());
        at += k;
    }
    out
}

/// `E[ψ_G(σ) | degrees]` for a balanced sequence: average over all clone
/// bijections of the product of per-factor mean weights.
pub fn expected_weight_oracle(seq: &DegreeSequence, family: &WeightFamily, sigma: &[usize]) -> f64 {
    let perms = permutations(seq.var_degrees.iter().sum());
    let mut total = 0.0;
    for p in &perms {
        let mut w = 1.0;
        for vars in contract(seq, p) {
            let fam = family.get(vars.len()).unwrap();
            let spins: Vec<usize> = vars.iter().map(|&v| sigma[v]).collect();
            w *= fam
                .tables()
                .iter()
                .zip(fam.masses())
                .map(|(t, &m)| m * t.eval(&spins))
                .sum::<f64>();
        }
        total += w;
    }
    total / perms.len() as f64
}

/// Product of table entries, pins ignored.
pub fn raw_weight(g: &FactorGraph, sigma: &[usize]) -> f64 {
    g.factors()
        .iter()
        .map(|f| {
            let spins: Vec<usize> = f.vars.iter().map(|&v| sigma[v]).collect();
            g.family().table(f.vars.len(), f.weight).eval(&spins)
        })
        .product()
}

/// All assignments of `n` spins over `q` values, first variable fastest.
pub fn assignments(n: usize, q: usize) -> Vec<Vec<usize>> {
    (0..q.pow(n as u32))
        .map(|mut i| {
            (0..n)
                .map(|_| {
                    let s = i % q;
                    i /= q;
                    s
                })
                .collect()
        })
        .collect()
}

/// `ln Z` by nested summation over variables, pins respected.
pub fn log_z_oracle(g: &FactorGraph) -> f64 {
    fn rec(g: &FactorGraph, sigma: &mut Vec<usize>, v: usize) -> f64 {
        if v == g.n() {
            return raw_weight(g, sigma);
        }
        let mut s = 0.0;
        for x in 0..g.q() {
            if g.pins().iter().any(|p| p.var == v && p.spin != x) {
                continue;
            }
            sigma[v] = x;
            s += rec(g, sigma, v + 1);
        }
        s
    }
    rec(g, &mut vec![0; g.n()], 0).ln()
}

pub fn assignment_of(sigma: &[usize]) -> Assignment {
    Assignment(sigma.to_vec())
}

/// `|x − p| ≤ z·sqrt(p(1−p)/n)`.
pub fn within_binomial(hits: usize, n: usize, p: f64, z: f64) -> bool {
    let x = hits as f64 / n as f64;
    (x - p).abs() <= z * (p * (1.0 - p) / n as f64).sqrt()
}

mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::*;
use factor_cavity_core::exact::{
    law_distance, nishimori_assignment_law, null_law, partition_function, planted_law_sharp,
    PAIRING_CAP,
};
use factor_cavity_core::math::ln_factorial;
use factor_cavity_core::models::{ldgm, sbm, LDGM_J_MINUS, LDGM_J_PLUS};
use factor_cavity_core::rng::substream;
use factor_cavity_core::sampling::{
    pair_uniform_rng, pin, pin_with, sample_null, sample_null_rng, sample_planted,
    sample_pruned_sequence, try_degree_sequence, SamplerConfig,
};
use factor_cavity_core::{
    ArityFamily, Assignment, DegreeSequence, DegreeSpec, FactorGraph, Pin, WeightFamily,
    WeightTable,
};

fn c(v: usize) -> DegreeSpec {
    DegreeSpec::constant(v).unwrap()
}

#[test]
fn acceptance_rate_matches_exact_convolution() {
    let n = 100u64;
    let d = DegreeSpec::new(&[(2, 0.5), (3, 0.5)]).unwrap();
    let lambda = n as f64 * 2.5 / 3.0;
    // Σd = 2n + B with B ~ Bin(n, 1/2); accepted iff Σd = 3m with m ~ Po(λ).
    let mut p = 0.0;
    for b in 0..=n {
        let total = 2 * n + b;
        if total % 3 != 0 {
            continue;
        }
        let m = total / 3;
        let ln_binom =
            ln_factorial(n) - ln_factorial(b) - ln_factorial(n - b) - n as f64 * 2f64.ln();
        let ln_po = -lambda + m as f64 * lambda.ln() - ln_factorial(m);
        p += (ln_binom + ln_po).exp();
    }
    let trials = 10_000;
    let mut rng = substream(17, 0);
    let hits = (0..trials)
        .filter(|_| try_degree_sequence(n as usize, &d, &c(3), &mut rng).is_some())
        .count();
    assert!(
        within_binomial(hits, trials, p, 3.0),
        "rate {} vs {p}",
        hits as f64 / trials as f64
    );
}

#[test]
fn pruned_cavity_density_is_eps_times_mean_degree() {
    let (n, eps) = (10_000, 0.1);
    let draws: Vec<f64> = (0..100)
        .map(|i| {
            sample_pruned_sequence(n, eps, &c(3), &c(3), i, &SamplerConfig::default())
                .unwrap()
                .cavity_count() as f64
                / n as f64
        })
        .collect();
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
    let se = (var / draws.len() as f64).sqrt();
    assert!((mean - 0.3).abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn pruned_sequences_never_overshoot() {
    for seed in 0..50 {
        let s =
            sample_pruned_sequence(10, 0.5, &c(2), &c(2), seed, &SamplerConfig::default()).unwrap();
        assert_eq!(s.cavity_count(), 20 - 2 * s.m());
    }
}

fn unit_family(q: usize, arity: usize) -> Arc<WeightFamily> {
    let t = WeightTable::from_fn(q, arity, |_| 1.0).unwrap();
    Arc::new(WeightFamily::new(q, vec![ArityFamily::single(t).unwrap()]).unwrap())
}

#[test]
fn pairing_law_matches_enumeration_of_clone_matchings() {
    let seq = DegreeSequence::new(vec![2, 2, 2], vec![2, 2, 2]).unwrap();
    let mut exact: BTreeMap<Vec<Vec<usize>>, f64> = BTreeMap::new();
    let perms = permutations(6);
    for p in &perms {
        *exact.entry(contract(&seq, p)).or_default() += 1.0 / perms.len() as f64;
    }
    let fam = unit_family(2, 2);
    let draws = 100_000;
    let mut rng = substream(5, 0);
    let mut seen: BTreeMap<Vec<Vec<usize>>, usize> = BTreeMap::new();
    for _ in 0..draws {
        let g = pair_uniform_rng(&seq, &fam, &SamplerConfig::default(), &mut rng).unwrap();
        *seen
            .entry(g.factors().iter().map(|f| f.vars.clone()).collect())
            .or_default() += 1;
    }
    assert!(seen.keys().all(|k| exact.contains_key(k)));
    for (key, &p) in &exact {
        let hits = seen.get(key).copied().unwrap_or(0);
        assert!(
            within_binomial(hits, draws, p, 4.0),
            "{key:?}: {hits} vs {p}"
        );
    }
}

#[test]
fn two_single_clones_give_one_factor() {
    let seq = DegreeSequence::new(vec![1, 1], vec![2]).unwrap();
    let g = pair_uniform_rng(
        &seq,
        &unit_family(2, 2),
        &SamplerConfig::default(),
        &mut substream(0, 0),
    )
    .unwrap();
    let mut vars = g.factors()[0].vars.clone();
    vars.sort();
    assert_eq!(vars, [0, 1]);
    assert!(g.cavities().is_empty());
}

#[test]
fn ldgm_labels_are_fair_coins() {
    let m = ldgm(0.2, c(3), c(3)).unwrap();
    let (mut plus, mut total) = (0, 0);
    for seed in 0..2000 {
        let g = sample_null(
            10,
            &m.dspec,
            &m.kspec,
            &m.family,
            seed,
            &SamplerConfig::default(),
        )
        .unwrap();
        plus += g
            .factors()
            .iter()
            .filter(|f| f.weight == LDGM_J_PLUS)
            .count();
        total += g.m();
    }
    assert!(within_binomial(plus, total, 0.5, 4.0), "{plus} of {total}");
}

#[test]
fn weights_are_independent_of_topology() {
    let m = ldgm(0.3, c(2), c(2)).unwrap();
    let draws = 100_000;
    let mut rng = substream(9, 0);
    let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
    for _ in 0..draws {
        let g = sample_null_rng(
            4,
            &m.dspec,
            &m.kspec,
            &m.family,
            &SamplerConfig::default(),
            &mut rng,
        )
        .unwrap();
        let x = g.factors()[0].vars.contains(&0) as u8 as f64;
        let y = (g.factors()[0].weight == LDGM_J_PLUS) as u8 as f64;
        sx += x;
        sy += y;
        sxy += x * y;
    }
    let n = draws as f64;
    let (mx, my) = (sx / n, sy / n);
    let cov = sxy / n - mx * my;
    let corr = cov / (mx * (1.0 - mx) * my * (1.0 - my)).sqrt();
    assert!(corr.abs() <= 4.0 / n.sqrt(), "correlation {corr}");
}

#[test]
fn planted_labels_follow_the_parity_of_the_ground_truth() {
    // With σ ≡ +1 every factor sees even parity; ψ_{η,k,−1} is the table
    // that puts weight 1 − η on it.
    let eta = 0.2;
    let m = ldgm(eta, c(2), c(2)).unwrap();
    let seq = DegreeSequence::new(vec![2; 4], vec![2; 4]).unwrap();
    let sigma = Assignment(vec![0; 4]);
    let (mut minus, mut total) = (0, 0);
    for seed in 0..5000 {
        let g = sample_planted(&seq, &sigma, &m.family, 0, seed, &SamplerConfig::default())
            .unwrap()
            .graph;
        minus += g
            .factors()
            .iter()
            .filter(|f| f.weight == LDGM_J_MINUS)
            .count();
        total += g.m();
    }
    assert!(
        within_binomial(minus, total, 1.0 - eta, 4.0),
        "{minus} of {total}"
    );
}

#[test]
fn constant_tables_make_planted_equal_null() {
    let t = WeightTable::from_fn(2, 2, |_| 1.5).unwrap();
    let fam = WeightFamily::new(
        2,
        vec![ArityFamily::new(vec![t.clone(), t], vec![0.3, 0.7]).unwrap()],
    )
    .unwrap();
    let seq = DegreeSequence::new(vec![2, 1, 1], vec![2, 2]).unwrap();
    let null = null_law(&seq, &fam, PAIRING_CAP).unwrap();
    for sigma in assignments(3, 2) {
        let planted = planted_law_sharp(&seq, &fam, &Assignment(sigma), PAIRING_CAP).unwrap();
        assert!(law_distance(&planted, &null) <= 1e-10);
    }
}

#[test]
fn single_letter_alphabet_makes_pins_vacuous() {
    let fam = unit_family(1, 2);
    let seq = DegreeSequence::new(vec![2; 3], vec![2; 3]).unwrap();
    let g = sample_planted(
        &seq,
        &Assignment(vec![0; 3]),
        &fam,
        3,
        1,
        &SamplerConfig::default(),
    )
    .unwrap()
    .graph;
    assert_eq!(g.pins().len(), 3);
    assert_eq!(g.weight(&[0, 0, 0]), 1.0);
    assert_eq!(partition_function(&g).unwrap().log_z, 0.0);
}

#[test]
fn nishimori_law_at_zero_beta_is_uniform() {
    let m = sbm(2, 0.0, 2).unwrap();
    let seq = DegreeSequence::new(vec![2; 3], vec![2; 3]).unwrap();
    let law = nishimori_assignment_law(&seq, &m.family, PAIRING_CAP).unwrap();
    assert!(law.iter().all(|p| (p - 0.125).abs() < 1e-15));
}

#[test]
fn nishimori_law_matches_independent_enumeration() {
    let m = ldgm(0.1, c(2), c(2)).unwrap();
    let seq = DegreeSequence::new(vec![2, 1, 1], vec![2, 2]).unwrap();
    let law = nishimori_assignment_law(&seq, &m.family, PAIRING_CAP).unwrap();
    assert!((law.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    let weights: Vec<f64> = (0..8)
        .map(|i| expected_weight_oracle(&seq, &m.family, &Assignment::from_index(i, 3, 2).0))
        .collect();
    let total: f64 = weights.iter().sum();
    for (p, w) in law.iter().zip(&weights) {
        assert!((p - w / total).abs() <= 1e-10, "{p} vs {}", w / total);
    }
}

fn small_sbm_graph(seed: u64) -> FactorGraph {
    let m = sbm(2, 0.8, 2).unwrap();
    sample_null(
        4,
        &m.dspec,
        &m.kspec,
        &m.family,
        seed,
        &SamplerConfig::default(),
    )
    .unwrap()
}

#[test]
fn pinned_partition_function_restricts_the_sum() {
    for seed in 0..10 {
        let g = small_sbm_graph(seed);
        let pinned = pin(&g, 2, seed).unwrap();
        let fixed: Vec<(usize, usize)> = pinned.pins().iter().map(|p| (p.var, p.spin)).collect();
        let z: f64 = assignments(4, 2)
            .into_iter()
            .filter(|s| fixed.iter().all(|&(v, x)| s[v] == x))
            .map(|s| raw_weight(&g, &s))
            .sum();
        let lz = partition_function(&pinned).unwrap().log_z;
        assert!((lz - z.ln()).abs() <= 1e-12);
        assert!(lz <= partition_function(&g).unwrap().log_z);
    }
}

#[test]
fn pinning_every_variable_leaves_one_term() {
    let g = small_sbm_graph(3);
    let sigma = [1, 0, 0, 1];
    let pins = sigma
        .iter()
        .enumerate()
        .map(|(v, &s)| Pin { var: v, spin: s })
        .collect();
    let pinned = pin_with(&g, pins).unwrap();
    let lz = partition_function(&pinned).unwrap().log_z;
    assert!((lz - raw_weight(&g, &sigma).ln()).abs() <= 1e-12);
    assert_eq!(pin(&g, 0, 1).unwrap(), g);
}

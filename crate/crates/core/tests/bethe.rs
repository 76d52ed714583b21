use rand::Rng;

use factor_cavity_core::bethe::{
    annealed_free_entropy, bethe_estimate, bethe_uniform_atom, information_term,
    mutual_information, population_dynamics, size_biased, sup_bethe, threshold_scan,
    AssumptionPolicy, Candidate, Comparator, Init, PdBudget, SimplexPopulation,
};
use factor_cavity_core::model::{ModelKind, ModelSpec};
use factor_cavity_core::models::{kspin, ldgm, lrc_threshold, sbm, sbm_phi_a};
use factor_cavity_core::rng::substream;
use factor_cavity_core::{ArityFamily, DegreeSpec, Error, WeightFamily, WeightTable};

fn c(v: usize) -> DegreeSpec {
    DegreeSpec::constant(v).unwrap()
}

fn small_budget() -> PdBudget {
    PdBudget {
        pop_size: 2000,
        sweeps: 40,
        eval_samples: 40_000,
        restarts: 1,
    }
}

fn random_population(q: usize, size: usize, seed: u64) -> SimplexPopulation {
    let mut rng = substream(seed, 0);
    let points = (0..size)
        .map(|_| {
            let raw: Vec<f64> = (0..q).map(|_| rng.random::<f64>() + 0.01).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / s).collect()
        })
        .collect();
    SimplexPopulation::from_points(q, points).unwrap()
}

/// `ψ(a, b) = 1 + 0.3·M[a][b]` with `M` having zero row and column sums.
fn skew_model() -> ModelSpec {
    const M: [[f64; 3]; 3] = [[1.0, -1.0, 0.0], [0.0, 1.0, -1.0], [-1.0, 0.0, 1.0]];
    let t = WeightTable::from_fn(3, 2, |s| 1.0 + 0.3 * M[s[0]][s[1]]).unwrap();
    let fam = WeightFamily::new(3, vec![ArityFamily::single(t).unwrap()]).unwrap();
    ModelSpec::new(
        ModelKind::Custom {
            name: "skew".into(),
        },
        c(3),
        c(2),
        fam,
    )
    .unwrap()
}

fn constant_model(value: f64) -> ModelSpec {
    let t = WeightTable::from_fn(2, 3, |_| value).unwrap();
    let fam = WeightFamily::new(2, vec![ArityFamily::single(t).unwrap()]).unwrap();
    ModelSpec::new(
        ModelKind::Custom {
            name: "const".into(),
        },
        c(3),
        c(3),
        fam,
    )
    .unwrap()
}

#[test]
fn size_bias_examples() {
    assert_eq!(size_biased(&c(3)).unwrap(), c(3));
    let k = size_biased(&DegreeSpec::new(&[(2, 0.5), (3, 0.5)]).unwrap()).unwrap();
    assert!((k.pmf(2) - 0.4).abs() < 1e-15 && (k.pmf(3) - 0.6).abs() < 1e-15);
    let with_zero =
        size_biased(&DegreeSpec::new(&[(0, 0.3), (1, 0.3), (4, 0.4)]).unwrap()).unwrap();
    assert_eq!(with_zero.pmf(0), 0.0);
}

#[test]
fn uniform_atom_reproduces_the_annealed_free_entropy() {
    for m in [
        sbm(2, 1.3, 3).unwrap(),
        sbm(4, 0.6, 5).unwrap(),
        ldgm(0.15, c(3), c(3)).unwrap(),
        skew_model(),
    ] {
        let atom = SimplexPopulation::uniform_atom(m.q());
        let b = bethe_estimate(&atom, &m, 1000, 1).unwrap();
        let phi = annealed_free_entropy(&m).unwrap();
        assert!(
            (b.value - phi).abs() <= 1e-10,
            "{}: {} vs {phi}",
            m.kind.name(),
            b.value
        );
        assert!((bethe_uniform_atom(&m).unwrap() - phi).abs() <= 1e-10);
    }
}

#[test]
fn sbm_uniform_atom_has_a_closed_form() {
    for (q, beta, d) in [(2, 0.5, 3), (3, 2.0, 4), (5, 4.0, 7)] {
        let m = sbm(q, beta, d).unwrap();
        assert!((bethe_uniform_atom(&m).unwrap() - sbm_phi_a(q, d as f64, beta)).abs() <= 1e-12);
    }
}

#[test]
fn fair_ldgm_is_ln_two_for_every_population() {
    let m = ldgm(0.5, DegreeSpec::new(&[(2, 0.5), (4, 0.5)]).unwrap(), c(3)).unwrap();
    for seed in 0..3 {
        let b = bethe_estimate(&random_population(2, 300, seed), &m, 5000, seed).unwrap();
        assert!((b.value - 2f64.ln()).abs() <= 1e-12);
        assert!(b.stderr <= 1e-12);
    }
}

#[test]
fn fair_ldgm_population_is_uniform_after_one_sweep() {
    let m = ldgm(0.5, c(3), c(3)).unwrap();
    for init in [Init::UniformPerturbed, Init::PlantedPolarized] {
        let run = population_dynamics(&m, 500, 1, init, 2).unwrap();
        assert!(run
            .population
            .points()
            .flatten()
            .all(|&x| (x - 0.5).abs() <= 1e-12));
    }
}

#[test]
fn weak_sbm_contracts_to_the_barycenter() {
    let m = sbm(2, 0.3, 3).unwrap();
    let runs: Vec<Vec<f64>> = (0..8)
        .map(|s| {
            population_dynamics(&m, 2000, 6, Init::UniformPerturbed, s)
                .unwrap()
                .trajectory
        })
        .collect();
    for w in 0..5 {
        let diffs: Vec<f64> = runs.iter().map(|t| t[w] - t[w + 1]).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let sd = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64)
            .sqrt();
        let se = sd / (diffs.len() as f64).sqrt();
        assert!(mean > 3.0 * se, "sweep {w}: decrease {mean} se {se}");
    }
}

#[test]
fn population_points_stay_on_the_simplex() {
    let run = population_dynamics(
        &sbm(3, 3.0, 4).unwrap(),
        1000,
        10,
        Init::PlantedPolarized,
        9,
    )
    .unwrap();
    assert!(run.population.simplex_error() <= 1e-10);
    assert!(run.population.points().flatten().all(|&x| x >= 0.0));
}

#[test]
fn sup_of_a_constant_model_is_the_uniform_atom() {
    let m = constant_model(1.7);
    let sup = sup_bethe(&m, &small_budget(), 4).unwrap();
    assert_eq!(sup.argmax, Candidate::UniformAtom);
    assert_eq!(sup.argmax.tag(), "uniform-atom");
    assert!((sup.value - annealed_free_entropy(&m).unwrap()).abs() <= 1e-12);
}

#[test]
fn sup_of_fair_ldgm_is_ln_two() {
    let sup = sup_bethe(&ldgm(0.5, c(3), c(3)).unwrap(), &small_budget(), 4).unwrap();
    assert!((sup.value - 2f64.ln()).abs() <= 1e-12);
}

#[test]
fn strong_sbm_population_beats_the_uniform_atom() {
    let m = sbm(2, 2.0, 5).unwrap();
    let sup = sup_bethe(&m, &small_budget(), 6).unwrap();
    let planted = sup.best_pd(true).unwrap();
    let atom = bethe_uniform_atom(&m).unwrap();
    assert!(
        planted.value - atom > 3.0 * planted.stderr,
        "{} ± {} vs {atom}",
        planted.value,
        planted.stderr
    );
    assert!(sup.value >= planted.value);
}

#[test]
fn mutual_information_is_not_negative() {
    let policy = AssumptionPolicy::waived();
    for m in [
        sbm(2, 2.0, 5).unwrap(),
        sbm(3, 1.0, 3).unwrap(),
        ldgm(0.2, c(3), c(3)).unwrap(),
    ] {
        let mi = mutual_information(&m, &small_budget(), &policy, 3).unwrap();
        assert!(
            mi.value >= -3.0 * mi.stderr - 1e-12,
            "{}: {} ± {}",
            m.kind.name(),
            mi.value,
            mi.stderr
        );
    }
}

#[test]
fn constant_and_fair_models_carry_no_information() {
    let policy = AssumptionPolicy::waived();
    let mi = mutual_information(&constant_model(2.0), &small_budget(), &policy, 1).unwrap();
    assert!(mi.value.abs() <= 1e-12);
    let fair =
        mutual_information(&ldgm(0.5, c(2), c(3)).unwrap(), &small_budget(), &policy, 1).unwrap();
    assert!(fair.value.abs() <= 3.0 * fair.stderr + 1e-12);
    assert!(fair.information_term.abs() <= 1e-15);
    assert!(
        information_term(&ldgm(0.5, c(3), c(3)).unwrap())
            .unwrap()
            .abs()
            <= 1e-15
    );
}

#[test]
fn trivial_models_never_cross() {
    let sbm_scan = threshold_scan(
        |d| sbm(2, 0.0, d as usize),
        &[2.0, 3.0, 5.0, 8.0],
        Comparator::Annealed,
        &small_budget(),
        1,
    )
    .unwrap();
    assert_eq!(sbm_scan.bracket(), Err(Error::NoCrossing));
    let ldgm_scan = threshold_scan(
        |d| ldgm(0.5, c(d as usize), c(3)),
        &[2.0, 3.0, 6.0],
        Comparator::Annealed,
        &small_budget(),
        2,
    )
    .unwrap();
    assert_eq!(ldgm_scan.bracket(), Err(Error::NoCrossing));
    assert_eq!(ldgm_scan.rows.len(), 3);
}

#[test]
fn unsorted_grids_are_rejected() {
    let r = threshold_scan(
        |d| sbm(2, 1.0, d as usize),
        &[3.0, 2.0],
        Comparator::Annealed,
        &small_budget(),
        1,
    );
    assert!(matches!(r, Err(Error::InvalidArgument(_))));
}

#[test]
fn kspin_bracket_is_one_grid_step_wide() {
    let grid = [1.0, 2.0, 3.0, 4.0, 6.0, 8.0];
    let scan = lrc_threshold(1.0, &c(2), &grid, 4, &small_budget(), 5).unwrap();
    let (lo, hi) = scan.bracket().unwrap();
    let i = scan.crossing.unwrap();
    assert!(i > 0, "crossing already at the first grid point");
    assert_eq!((lo, hi), (grid[i - 1], grid[i]));
    assert!(scan.rows[..i].iter().all(|r| !r.crosses()));
    assert!(scan.rows[i].crosses());
    let b = scan.rows[i].best();
    assert!(b.value - 2f64.ln() > 3.0 * b.stderr);
}

#[test]
fn relabelling_family_and_population_together_changes_nothing() {
    let m = skew_model();
    let pop = population_dynamics(&m, 2000, 15, Init::PlantedPolarized, 3)
        .unwrap()
        .population;
    let perm = [2, 0, 1];
    let mut relabelled = m.clone();
    relabelled.family = std::sync::Arc::new(m.family.relabel(&perm));
    let a = bethe_estimate(&pop, &m, 40_000, 10).unwrap();
    let b = bethe_estimate(&pop.relabel(&perm), &relabelled, 40_000, 11).unwrap();
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    assert!(
        (a.value - b.value).abs() <= 3.0 * se,
        "{} vs {} (se {se})",
        a.value,
        b.value
    );
}

#[test]
fn kspin_tables_match_the_symmetric_comparator_at_tiny_beta() {
    let m = kspin(1e-9, c(2), c(3), 4).unwrap();
    assert!((bethe_uniform_atom(&m).unwrap() - annealed_free_entropy(&m).unwrap()).abs() <= 1e-12);
}

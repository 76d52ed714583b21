use factor_cavity_core::assumptions::{
    check_bal, check_deg, check_deg_pairs, check_pos, check_sym, pos_terms_exact, random_pstar,
    Assumption, AtomMeasure,
};
use factor_cavity_core::models::{assortative_sbm, kspin, ldgm, sbm};
use factor_cavity_core::rng::substream;
use factor_cavity_core::{ArityFamily, DegreeSpec, Error, WeightFamily, WeightTable};

fn c(v: usize) -> DegreeSpec {
    DegreeSpec::constant(v).unwrap()
}

fn single(q: usize, k: usize, f: impl FnMut(&[usize]) -> f64) -> WeightFamily {
    WeightFamily::new(
        q,
        vec![ArityFamily::single(WeightTable::from_fn(q, k, f).unwrap()).unwrap()],
    )
    .unwrap()
}

#[test]
fn deg_examples() {
    let r = check_deg(&c(2), &c(3));
    assert!(r.passed && r.witness.is_none());
    assert_eq!(r.name, Assumption::Deg);

    let r = check_deg_pairs(&[(0, 1.0)], &[(3, 1.0)]);
    assert!(!r.passed);
    assert_eq!(r.witness.as_deref(), Some("E[d]=0"));
    assert!(matches!(
        r.require(),
        Err(Error::AssumptionViolation { .. })
    ));

    let r = check_deg(&DegreeSpec::new(&[(0, 0.5), (4, 0.5)]).unwrap(), &c(2));
    assert!(r.passed);
    assert!(r.detail.starts_with("E[d]=2,"), "{}", r.detail);
}

#[test]
fn ldgm_is_symmetric_with_xi_one() {
    for eta in [0.01, 0.1, 0.3, 0.5, 0.9] {
        let m = ldgm(
            eta,
            c(3),
            DegreeSpec::new(&[(2, 0.3), (3, 0.3), (5, 0.4)]).unwrap(),
        )
        .unwrap();
        let r = check_sym(&m.family, 1e-12);
        assert!(r.passed, "eta {eta}: {}", r.detail);
        assert!((r.xi.unwrap() - 1.0).abs() <= 1e-12);
    }
}

#[test]
fn kspin_is_symmetric_with_xi_one_and_positive_floor() {
    for (beta, r) in [(0.3, 2), (1.0, 4), (2.0, 6)] {
        let m = kspin(
            beta,
            DegreeSpec::new(&[(2, 0.5), (3, 0.5)]).unwrap(),
            c(3),
            r,
        )
        .unwrap();
        let report = check_sym(&m.family, 1e-12);
        assert!(report.passed);
        assert!((report.xi.unwrap() - 1.0).abs() <= 1e-12);
        let floor = m
            .family
            .arities()
            .flat_map(|f| f.tables().iter().map(|t| t.min()))
            .fold(f64::INFINITY, f64::min);
        assert!((floor - (1.0 - (beta * r as f64).tanh())).abs() <= 1e-12);
    }
}

#[test]
fn biased_table_fails_sym_with_a_witness() {
    let fam = single(2, 2, |s| (s[0] == 0) as u8 as f64 + 0.1);
    let r = check_sym(&fam, 1e-12);
    assert!(!r.passed);
    assert!(r.witness.as_deref().unwrap().contains("j=1"));
    assert!(r.magnitude > 0.0);
}

#[test]
fn sym_is_invariant_under_relabelling() {
    let m = sbm(4, 1.3, 3).unwrap();
    let a = check_sym(&m.family, 1e-12).xi.unwrap();
    let b = check_sym(&m.family.relabel(&[3, 1, 0, 2]), 1e-12)
        .xi
        .unwrap();
    assert_eq!(a, b);
}

#[test]
fn bal_examples() {
    assert!(
        check_bal(&sbm(3, 2.0, 3).unwrap().family, 32)
            .unwrap()
            .passed
    );
    assert!(check_bal(&single(3, 3, |_| 2.0), 24).unwrap().passed);
    let assortative = single(2, 2, |s| if s[0] == s[1] { 2f64.exp() } else { 1.0 });
    let r = check_bal(&assortative, 64).unwrap();
    assert!(!r.passed);
    assert!(r.witness.is_some() && r.magnitude > 0.0);
}

#[test]
fn bal_requires_a_grid_that_resolves_q() {
    assert!(matches!(
        check_bal(&sbm(5, 1.0, 3).unwrap().family, 3),
        Err(Error::GridTooCoarse(_))
    ));
}

#[test]
fn pos_finds_no_violation_for_ldgm_and_kspin() {
    for eta in [0.05, 0.2, 0.4] {
        let m = ldgm(eta, c(3), DegreeSpec::new(&[(2, 0.5), (3, 0.5)]).unwrap()).unwrap();
        let r = check_pos(&m.family, 40, 5000, 1);
        assert!(r.passed, "eta {eta}: {:?}", r.witness);
        assert!(r.detail.starts_with("no violation found"));
    }
    for beta in [0.5, 1.5] {
        let m = kspin(beta, c(2), c(3), 3).unwrap();
        assert!(check_pos(&m.family, 20, 5000, 2).passed, "beta {beta}");
    }
}

#[test]
fn pos_fails_for_assortative_sbm() {
    let m = assortative_sbm(2, 2.0, 3).unwrap();
    let r = check_pos(&m.family, 200, 20_000, 3);
    assert!(!r.passed);
    assert!(r.witness.as_deref().unwrap().contains("k=2"));
}

#[test]
fn pos_is_deterministic_given_the_seed() {
    let m = sbm(3, 1.0, 3).unwrap();
    assert_eq!(
        check_pos(&m.family, 15, 2000, 7),
        check_pos(&m.family, 15, 2000, 7)
    );
}

#[test]
fn identical_measures_leave_zero_gap() {
    let fam = ldgm(0.2, c(3), c(3)).unwrap().family;
    let mut rng = substream(8, 0);
    for _ in 0..20 {
        let p = random_pstar(2, 4, &mut rng);
        let t = pos_terms_exact(fam.get(3).unwrap(), 2, &p, &p);
        assert!(t.gap().abs() <= 1e-12 * t.scale().max(1.0), "{t:?}");
    }
    let atom = AtomMeasure {
        points: vec![vec![0.5, 0.5]],
        weights: vec![1.0],
    };
    let t = pos_terms_exact(fam.get(3).unwrap(), 2, &atom, &atom);
    assert!(t.gap().abs() <= 1e-14);
}

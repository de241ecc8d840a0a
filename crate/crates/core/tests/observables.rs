mod common;

use common::{c, plus_minus, rng, space, tol, tr_prod, zero_one, M};
use proptest::prelude::*;
use qmulti_core::{
    commuting_joint, luders_sequential, random, tensor_observables, verify_joint, verify_product_structure, Error,
    FactorDims, ObservableF64, OutcomeMap, OutcomeSpace, ProductCheck, StateF64,
};

fn diag_pair(p: f64) -> ObservableF64 {
    ObservableF64::from_labelled([("0", M::diag(&[p, 1.0 - p])), ("1", M::diag(&[1.0 - p, p]))], tol()).unwrap()
}

fn three_outcome() -> ObservableF64 {
    ObservableF64::from_labelled(
        [("0", M::diag(&[0.5, 0.1])), ("1", M::diag(&[0.25, 0.6])), ("2", M::diag(&[0.25, 0.3]))],
        tol(),
    )
    .unwrap()
}

#[test]
fn validation_examples() {
    assert!(ObservableF64::from_labelled([("a", M::identity(2))], tol()).is_ok());
    assert!(diag_pair(0.75).effects().len() == 2);
    let err =
        ObservableF64::from_labelled([("0", M::diag(&[0.9, 0.9])), ("1", M::diag(&[0.2, 0.2]))], tol()).unwrap_err();
    match err {
        Error::InvalidObservable { residual: Some(r), .. } => {
            let expected = [(0.1, 0.0), (0.0, 0.0), (0.0, 0.0), (0.1, 0.0)];
            for (got, want) in r.iter().zip(expected) {
                assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12);
            }
        }
        other => panic!("unexpected {other:?}"),
    }
    let bad = ObservableF64::from_labelled([("0", M::diag(&[1.5, 0.0])), ("1", M::diag(&[-0.5, 1.0]))], tol());
    match bad {
        Err(Error::InvalidObservable { problems, .. }) => assert_eq!(problems.len(), 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn distribution_examples() {
    let ground = StateF64::basis(2, 0);
    let d = diag_pair(0.75).distribution(&ground).unwrap();
    assert!((d.get("0").unwrap() - 0.75).abs() < 1e-15);
    assert!((d.get("1").unwrap() - 0.25).abs() < 1e-15);

    // <0|+><+|0> = |1/√2|² = ½
    let d = plus_minus().distribution(&ground).unwrap();
    assert!((d.get("+").unwrap() - 0.5).abs() < 1e-15);
    assert!((d.get("-").unwrap() - 0.5).abs() < 1e-15);

    let rho: StateF64 = random::state(&mut rng(3), 2);
    assert!((three_outcome().probability(&rho, &["0", "1", "2"]).unwrap() - 1.0).abs() < 1e-12);
    assert!(three_outcome().probability(&rho, &["7"]).is_err());
    assert!(three_outcome().distribution(&StateF64::basis(3, 0)).is_err());
}

#[test]
fn part_examples() {
    let a = three_outcome();
    assert_eq!(a.part(&OutcomeMap::identity(a.space())).unwrap(), a);

    let trivial = a.part(&OutcomeMap::constant(a.space(), "*").unwrap()).unwrap();
    assert!(trivial.is_trivial());
    assert!(trivial.effects()[0].deviation(&M::identity(2)) < 1e-12);

    let merge = OutcomeMap::from_pairs(a.space(), [("0", "x"), ("1", "y"), ("2", "y")]).unwrap();
    let b = a.part(&merge).unwrap();
    assert_eq!(b.effect("x").unwrap(), a.effect("0").unwrap());
    assert_eq!(b.effect("y").unwrap(), &(a.effect("1").unwrap() + a.effect("2").unwrap()));

    let target = OutcomeSpace::numbered(3);
    assert!(OutcomeMap::new(a.space().clone(), target, vec![0, 0, 1]).is_err());
}

#[test]
fn marginal_examples() {
    let (a, b) = (diag_pair(0.8), diag_pair(0.3));
    let joint = commuting_joint(&[a.clone(), b.clone()]).unwrap();
    assert!(joint.marginal(0).unwrap().deviation(&a) < 1e-12);
    assert!(joint.marginal(1).unwrap().deviation(&b) < 1e-12);
    assert!(joint.marginal(2).is_err());
    // a single-axis observable is its own marginal
    assert_eq!(a.marginal(0).unwrap(), a);

    let t = tensor_observables(&[plus_minus(), three_outcome()]).unwrap();
    for (k, e) in plus_minus().effects().iter().enumerate() {
        assert!(t.marginal(0).unwrap().effects()[k].deviation(&e.kron(&M::identity(2))) < 1e-12);
    }
    for (k, e) in three_outcome().effects().iter().enumerate() {
        assert!(t.marginal(1).unwrap().effects()[k].deviation(&M::identity(2).kron(e)) < 1e-12);
    }

    let l = luders_sequential(&[plus_minus(), zero_one()]).unwrap();
    assert!(l.marginal(0).unwrap().deviation(&plus_minus()) < 1e-12);
}

#[test]
fn tensor_examples() {
    let i = ObservableF64::trivial(2, "*", tol()).unwrap();
    let t = tensor_observables(&[i.clone(), i.clone()]).unwrap();
    assert_eq!(t.effects().len(), 1);
    assert_eq!(t.space().key(0), "*|*");
    assert!(t.effects()[0].deviation(&M::identity(4)) < 1e-15);
    assert!(tensor_observables(&[i]).is_err());

    let mut r = rng(21);
    let (a1, a2) = (
        random::observable::<f64, _>(&mut r, &space(&[3]), 2, tol()).unwrap(),
        random::observable::<f64, _>(&mut r, &space(&[2]), 3, tol()).unwrap(),
    );
    let (r1, r2): (StateF64, StateF64) = (random::state(&mut r, 2), random::state(&mut r, 3));
    let joint = tensor_observables(&[a1.clone(), a2.clone()]).unwrap().distribution(&r1.tensor(&r2)).unwrap();
    let (d1, d2) = (a1.distribution(&r1).unwrap(), a2.distribution(&r2).unwrap());
    for x in 0..3 {
        for y in 0..2 {
            assert!((joint.probs[x * 2 + y] - d1.probs[x] * d2.probs[y]).abs() < 1e-12);
        }
    }
}

#[test]
fn reduced_examples() {
    let (a1, a2) = (diag_pair(0.9), three_outcome());
    let mut r = rng(5);
    let a3 = random::observable::<f64, _>(&mut r, &space(&[2]), 3, tol()).unwrap();
    let t = tensor_observables(&[a1.clone(), a3.clone()]).unwrap();
    let dims = FactorDims::new(vec![2, 3]).unwrap();
    let first = t.reduced(0, &dims).unwrap();
    assert_eq!(first.space(), t.space());
    assert!(first.marginal(0).unwrap().deviation(&a1) < 1e-9);
    let mixed = first.marginal(1).unwrap().identity_weights(tol()).unwrap();
    for (k, e) in a3.effects().iter().enumerate() {
        assert!((mixed[k] - e.trace().re / 3.0).abs() < 1e-9);
    }
    assert!(t.reduced(1, &dims).unwrap().marginal(1).unwrap().deviation(&a3) < 1e-9);

    assert_eq!(a2.reduced(0, &FactorDims::single(2)).unwrap(), a2);
    assert!(t.reduced(0, &FactorDims::new(vec![2, 2]).unwrap()).is_err());
}

#[test]
fn identity_weight_examples() {
    let halves =
        ObservableF64::from_labelled([("0", M::diag(&[0.5, 0.5])), ("1", M::diag(&[0.5, 0.5]))], tol()).unwrap();
    assert_eq!(halves.identity_weights(tol()), Some(vec![0.5, 0.5]));
    assert_eq!(zero_one().identity_weights(tol()), None);
}

#[test]
fn luders_examples() {
    let (a, b) = (diag_pair(0.8), diag_pair(0.35));
    let l = luders_sequential(&[a.clone(), b.clone()]).unwrap();
    for x in 0..2 {
        for y in 0..2 {
            let want = M::from_fn(2, 2, |i, j| a.effects()[x][(i, j)] * b.effects()[y][(i, j)]);
            assert!(l.effects()[x * 2 + y].deviation(&want) < 1e-12);
        }
    }

    // P₊ |0><0| P₊ = |<0|+>|² P₊ = ½ P₊; Σ_x P_x |y><y| P_x = ½ I
    let l = luders_sequential(&[plus_minus(), zero_one()]).unwrap();
    let p_plus = plus_minus().effect("+").unwrap().clone();
    assert!(l.effect("+|0").unwrap().deviation(&p_plus.scale_real(0.5)) < 1e-12);
    let second = l.marginal(1).unwrap();
    assert!(second.effect("0").unwrap().deviation(&M::diag(&[0.5, 0.5])) < 1e-12);
    assert!(second.effect("1").unwrap().deviation(&M::diag(&[0.5, 0.5])) < 1e-12);
    assert!(luders_sequential(&[plus_minus(), three_outcome(), diag_pair(0.1)]).is_ok());
}

#[test]
fn commuting_joint_examples() {
    let (a, b) = (diag_pair(0.6), diag_pair(0.1));
    let j = commuting_joint(&[a.clone(), b.clone()]).unwrap();
    assert!(verify_joint(&j, &[a.clone(), b], tol()).unwrap().pass);

    let j = commuting_joint(&[a.clone(), ObservableF64::trivial(2, "*", tol()).unwrap()]).unwrap();
    assert_eq!(j.space().key(1), "1|*");
    assert!(j.effect("0|*").unwrap().deviation(a.effect("0").unwrap()) < 1e-15);

    assert!(matches!(commuting_joint(&[plus_minus(), zero_one()]), Err(Error::NotCommuting { .. })));
}

#[test]
fn verify_joint_examples() {
    let (a1, a2) = (plus_minus(), three_outcome());
    let t = tensor_observables(&[a1.clone(), a2.clone()]).unwrap();
    let lift = |o: &ObservableF64, left: bool| {
        let effects =
            o.effects().iter().map(|e| if left { e.kron(&M::identity(2)) } else { M::identity(2).kron(e) }).collect();
        ObservableF64::new(o.space().clone(), effects, tol()).unwrap()
    };
    assert!(verify_joint(&t, &[lift(&a1, true), lift(&a2, false)], tol()).unwrap().pass);

    let l = luders_sequential(&[plus_minus(), zero_one()]).unwrap();
    let second = l.marginal(1).unwrap();
    assert!(verify_joint(&l, &[plus_minus(), second], tol()).unwrap().pass);

    // Σ_x P_x |0><0| P_x = I/2 differs from |0><0| by ½ in the diagonal entries
    let report = verify_joint(&l, &[plus_minus(), zero_one()], tol()).unwrap();
    assert!(!report.pass);
    assert!(report.deviations[0] < 1e-12);
    assert!((report.deviations[1] - 0.5).abs() < 1e-12);

    assert!(verify_joint(&l, &[plus_minus()], tol()).is_err());
    assert!(verify_joint(&l, &[plus_minus(), three_outcome()], tol()).is_err());
}

#[test]
fn product_structure_examples() {
    let mut r = rng(9);
    let sp = space(&[2, 2]);
    let a = random::observable::<f64, _>(&mut r, &sp, 2, tol()).unwrap();
    let fs = [OutcomeMap::projection(&sp, 0).unwrap(), OutcomeMap::projection(&sp, 1).unwrap()];
    let report = verify_product_structure(&a, &fs, tol()).unwrap();
    assert!(report.pass);
    match report.check {
        ProductCheck::Bijection { h, .. } => assert_eq!(h, vec![0, 1, 2, 3]),
        other => panic!("unexpected {other:?}"),
    }

    let flat = OutcomeSpace::flat(["00", "01", "10", "11"]).unwrap();
    let b = random::observable::<f64, _>(&mut r, &flat, 2, tol()).unwrap();
    let bit = |k: usize| OutcomeMap::from_pairs(&flat, ["00", "01", "10", "11"].map(|x| (x, &x[k..k + 1]))).unwrap();
    let report = verify_product_structure(&b, &[bit(0), bit(1)], tol()).unwrap();
    assert!(report.pass);
    match &report.check {
        ProductCheck::Bijection { product, h } => {
            for (x, &t) in h.iter().enumerate() {
                assert_eq!(product.key(t).replace('|', ""), flat.key(x));
            }
        }
        other => panic!("unexpected {other:?}"),
    }
    let grid = b
        .reindexed(
            match &report.check {
                ProductCheck::Bijection { product, .. } => product,
                _ => unreachable!(),
            },
            &[0, 1, 2, 3],
        )
        .unwrap();
    assert!(verify_joint(&grid, &[b.part(&bit(0)).unwrap(), b.part(&bit(1)).unwrap()], tol()).unwrap().pass);
}

#[test]
fn three_outcomes_never_carry_a_two_by_two_structure() {
    let three = OutcomeSpace::numbered(3);
    let a = three_outcome();
    let two = OutcomeSpace::numbered(2);
    let mut maps = Vec::new();
    for code in 0..8usize {
        let mapping: Vec<usize> = (0..3).map(|k| (code >> k) & 1).collect();
        if let Ok(f) = OutcomeMap::new(three.clone(), two.clone(), mapping) {
            maps.push(f);
        }
    }
    assert_eq!(maps.len(), 6);
    for f in &maps {
        for g in &maps {
            let report = verify_product_structure(&a, &[f.clone(), g.clone()], tol()).unwrap();
            assert!(!report.pass);
            match report.check {
                ProductCheck::BadIntersection { count, .. } => assert_ne!(count, 1),
                other => panic!("unexpected {other:?}"),
            }
        }
    }
    let constant = OutcomeMap::constant(&three, "*").unwrap();
    assert!(verify_product_structure(&a, &[constant, maps[0].clone()], tol()).is_err());
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![Just(vec![2, 2]), Just(vec![2, 3]), Just(vec![3, 2]), Just(vec![2, 2, 2])]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn marginal_is_projection_part_and_coexists(seed in any::<u64>(), shape in shape_strategy(), dim in 2usize..4) {
        let mut r = rng(seed);
        let sp = space(&shape);
        let a = random::observable::<f64, _>(&mut r, &sp, dim, tol()).unwrap();
        let mut marginals = Vec::new();
        for i in 0..shape.len() {
            let m = a.marginal(i).unwrap();
            let p = a.part(&OutcomeMap::projection(&sp, i).unwrap()).unwrap();
            prop_assert_eq!(&m, &p);
            marginals.push(m);
        }
        prop_assert!(verify_joint(&a, &marginals, tol()).unwrap().pass);
    }

    #[test]
    fn subset_effects_are_effects(seed in any::<u64>(), mask in 0u32..16) {
        let mut r = rng(seed);
        let a = random::observable::<f64, _>(&mut r, &space(&[2, 2]), 3, tol()).unwrap();
        let delta: Vec<usize> = (0..4).filter(|k| mask >> k & 1 == 1).collect();
        prop_assert!(qmulti_core::validate_effect(&a.effect_of(&delta), tol()).is_ok());
    }

    #[test]
    fn reduced_marginals_recover_parts(seed in any::<u64>(), dims in prop_oneof![Just(vec![2, 2]), Just(vec![2, 3]), Just(vec![2, 2, 2])]) {
        let mut r = rng(seed);
        let parts: Vec<ObservableF64> = dims
            .iter()
            .enumerate()
            .map(|(k, &m)| random::observable(&mut r, &space(&[2 + k % 2]), m, tol()).unwrap())
            .collect();
        let t = tensor_observables(&parts).unwrap();
        let fd = FactorDims::new(dims.clone()).unwrap();
        for i in 0..dims.len() {
            let red = t.reduced(i, &fd).unwrap();
            for (j, part) in parts.iter().enumerate() {
                let m = red.marginal(j).unwrap();
                if i == j {
                    prop_assert!(m.deviation(part) <= 1e-9);
                } else {
                    let w = m.identity_weights(tol()).unwrap();
                    for (k, e) in part.effects().iter().enumerate() {
                        prop_assert!((w[k] - e.trace().re / dims[j] as f64).abs() <= 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn luders_first_marginal_is_first_part(seed in any::<u64>(), n in 2usize..4, dim in 2usize..4) {
        let mut r = rng(seed);
        let parts: Vec<ObservableF64> =
            (0..n).map(|k| random::observable(&mut r, &space(&[2 + k % 2]), dim, tol()).unwrap()).collect();
        let l = luders_sequential(&parts).unwrap();
        prop_assert!(l.marginal(0).unwrap().deviation(&parts[0]) <= 1e-9);
    }

    #[test]
    fn commuting_joint_recovers_parts(seed in any::<u64>(), dim in 2usize..5) {
        // effects diagonal in a shared random basis commute
        let mut r = rng(seed);
        let u = qmulti_core::eigh(&random::hermitian::<f64, _>(&mut r, dim)).unwrap().vectors;
        let mut diag_obs = |k: usize| {
            let d = random::observable::<f64, _>(&mut r, &space(&[k]), dim, tol()).unwrap();
            let effects = d
                .effects()
                .iter()
                .map(|e| {
                    let diag = M::from_fn(dim, dim, |i, j| if i == j { c(e[(i, i)].re, 0.0) } else { c(0.0, 0.0) });
                    let raw = &(&u * &diag) * &u.adjoint();
                    raw.hermitian_part()
                })
                .collect();
            ObservableF64::new(d.space().clone(), effects, tol())
        };
        // the diagonal of a POVM is again a POVM
        let (a, b) = (diag_obs(2).unwrap(), diag_obs(3).unwrap());
        let j = commuting_joint(&[a.clone(), b.clone()]).unwrap();
        prop_assert!(verify_joint(&j, &[a, b], tol()).unwrap().pass);
    }

    #[test]
    fn coordinate_projections_give_a_bijection(seed in any::<u64>(), shape in shape_strategy()) {
        let mut r = rng(seed);
        let sp = space(&shape);
        let a = random::observable::<f64, _>(&mut r, &sp, 2, tol()).unwrap();
        let fs: Vec<OutcomeMap> = (0..shape.len()).map(|i| OutcomeMap::projection(&sp, i).unwrap()).collect();
        let report = verify_product_structure(&a, &fs, tol()).unwrap();
        prop_assert!(report.pass);
        match report.check {
            ProductCheck::Bijection { h, .. } => {
                let mut sorted = h.clone();
                sorted.sort_unstable();
                prop_assert_eq!(sorted, (0..sp.len()).collect::<Vec<_>>());
            }
            ProductCheck::BadIntersection { .. } => prop_assert!(false),
        }
    }

    #[test]
    fn distributions_sum_to_one(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let a = random::observable::<f64, _>(&mut r, &space(&[2, 3]), dim, tol()).unwrap();
        let rho: StateF64 = random::state(&mut r, dim);
        let d = a.distribution(&rho).unwrap();
        prop_assert!((d.total() - 1.0).abs() <= 1e-9);
        for (k, e) in a.effects().iter().enumerate() {
            prop_assert!((d.probs[k] - tr_prod(rho.matrix(), e).re).abs() <= 1e-12);
            prop_assert!(d.probs[k] >= -1e-12);
        }
    }
}

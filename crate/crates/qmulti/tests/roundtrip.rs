use proptest::prelude::*;
use qmulti::{parse_scenario, Item};
use qmulti_core::{random, OutcomeSpace, Tolerance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn space(sizes: &[usize]) -> OutcomeSpace {
    OutcomeSpace::new(
        sizes
            .iter()
            .enumerate()
            .map(|(i, &n)| (0..n).map(|k| format!("{}{k}", (b'a' + i as u8) as char)).collect())
            .collect(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn declarations_survive_serialization(
        seed in any::<u64>(),
        sizes in prop::collection::vec(1usize..4, 1..3),
        dim in 1usize..4,
        out_dim in 1usize..4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerance::default();
        let sp = space(&sizes);
        let a = random::observable(&mut rng, &sp, dim, tol).unwrap();
        let i = random::instrument(&mut rng, &sp, dim, out_dim, 2, tol).unwrap();
        let rho = random::state(&mut rng, dim);
        let m = random::matrix::<f64, _>(&mut rng, dim, out_dim);
        let doc = json!({
            "matrices": { "m": Item::Matrix(m.clone()).to_json() },
            "states": { "rho": Item::State(rho.clone()).to_json() },
            "observables": { "a": Item::Observable(a.clone()).to_json() },
            "instruments": { "i": Item::Instrument(i.clone()).to_json() },
        });
        let s = parse_scenario(&doc.to_string(), None).unwrap();
        match &s.declarations["m"] { Item::Matrix(x) => prop_assert_eq!(x, &m), _ => unreachable!() }
        match &s.declarations["rho"] { Item::State(x) => prop_assert_eq!(x, &rho), _ => unreachable!() }
        match &s.declarations["a"] {
            Item::Observable(x) => { prop_assert_eq!(x.space(), a.space()); prop_assert!(x.deviation(&a) == 0.0) }
            _ => unreachable!(),
        }
        match &s.declarations["i"] {
            Item::Instrument(x) => { prop_assert_eq!(x.space(), i.space()); prop_assert!(x.deviation(&i) == 0.0) }
            _ => unreachable!(),
        }
    }

    #[test]
    fn tensor_instruments_keep_factors_through_serialization(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = Tolerance::default();
        let parts = [
            random::instrument(&mut rng, &space(&[2]), 2, 2, 1, tol).unwrap(),
            random::instrument(&mut rng, &space(&[3]), 2, 3, 1, tol).unwrap(),
        ];
        let t = qmulti_core::tensor_instruments(&parts).unwrap();
        let doc = json!({ "instruments": { "t": Item::Instrument(t.clone()).to_json() } });
        let s = parse_scenario(&doc.to_string(), None).unwrap();
        match &s.declarations["t"] {
            Item::Instrument(x) => prop_assert_eq!(x.out_factors(), t.out_factors()),
            _ => unreachable!(),
        }
    }
}

use percolation_core::oracle::{p1_strategy_floor, p2_strategy_ceiling, strategy_counts};
use percolation_core::{
    brute_force_game, brute_force_value, extract_strategy, solve, Environment, EnvironmentModel, Error, Exact,
    GameSpec, LatticePoint, PayoffMatrix, ValueTable,
};
use proptest::prelude::*;

fn table_model(rows: usize, cols: usize, support: Vec<Vec<u8>>) -> EnvironmentModel {
    let k = support.len();
    EnvironmentModel::IidTable {
        support: support
            .into_iter()
            .map(|m| PayoffMatrix::new(rows, cols, m.into_iter().map(f64::from).collect()).unwrap())
            .collect(),
        probs: vec![1.0 / k as f64; k],
    }
}

fn d1_spec(ni: usize, nj: usize, steps: Vec<i64>) -> GameSpec {
    GameSpec::new(1, ni, nj, steps.into_iter().map(|s| vec![s]).collect(), None).unwrap()
}

fn small_instance(ni: usize, nj: usize) -> impl Strategy<Value = (Vec<i64>, Vec<Vec<u8>>, u64, usize)> {
    let pairs = ni * nj;
    (
        prop::collection::vec(-1i64..=1, pairs),
        prop::collection::vec(prop::collection::vec(0u8..=1, pairs), 1..4),
        any::<u64>(),
        1usize..=3,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solver_matches_strategy_enumeration_2x2((steps, support, seed, n) in small_instance(2, 2)) {
        let spec = d1_spec(2, 2, steps);
        let env = Environment::new(table_model(2, 2, support), seed).unwrap();
        let origin = LatticePoint::origin(1);
        let out = brute_force_game::<Exact, _>(&env, &spec, &origin, n).unwrap();
        prop_assert_eq!(out.maxmin, out.minmax);
        let t: ValueTable<Exact> = solve(&env, &spec, &origin, n).unwrap();
        prop_assert_eq!(t.value(), out.maxmin);
        let (r, s) = strategy_counts(2, 2, n);
        prop_assert_eq!((out.p1_strategies as u128, out.p2_strategies as u128), (r, s));
    }

    #[test]
    fn solver_matches_strategy_enumeration_f64((steps, support, seed, n) in small_instance(2, 2)) {
        let spec = d1_spec(2, 2, steps);
        let env = Environment::new(table_model(2, 2, support), seed).unwrap();
        let origin = LatticePoint::origin(1);
        let brute: f64 = brute_force_value(&env, &spec, &origin, n).unwrap();
        let t: ValueTable<f64> = solve(&env, &spec, &origin, n).unwrap();
        prop_assert_eq!(t.value(), brute);
    }

    #[test]
    fn solver_matches_enumeration_with_three_actions((steps, support, seed, _) in small_instance(3, 2)) {
        let spec = d1_spec(3, 2, steps);
        let env = Environment::new(table_model(3, 2, support), seed).unwrap();
        let origin = LatticePoint::origin(1);
        for n in 1..=2 {
            let brute: Exact = brute_force_value(&env, &spec, &origin, n).unwrap();
            let t: ValueTable<Exact> = solve(&env, &spec, &origin, n).unwrap();
            prop_assert_eq!(t.value(), brute);
        }
    }

    #[test]
    fn extracted_strategies_are_sound((steps, support, seed, n) in small_instance(2, 2)) {
        let spec = d1_spec(2, 2, steps);
        let env = Environment::new(table_model(2, 2, support), seed).unwrap();
        let origin = LatticePoint::origin(1);
        let t: ValueTable<Exact> = solve(&env, &spec, &origin, n).unwrap();
        let s = extract_strategy(&t, &env, &spec).unwrap();
        // against every history-dependent opponent strategy
        let floor: Exact = p1_strategy_floor(&env, &spec, &origin, n, |m, z| s.p1_action(m, z).unwrap()).unwrap();
        let ceil: Exact = p2_strategy_ceiling(&env, &spec, &origin, n, |m, z, i| s.p2_reply(m, z, i).unwrap()).unwrap();
        prop_assert_eq!(floor, t.value());
        prop_assert_eq!(ceil, t.value());
    }
}

#[test]
fn documented_small_games() {
    let origin = LatticePoint::origin(1);
    let spec = d1_spec(2, 2, vec![1; 4]);
    let env = Environment::new(
        EnvironmentModel::IidTable {
            support: vec![PayoffMatrix::from_rows(vec![vec![3.0, 0.0], vec![2.0, 1.0]]).unwrap()],
            probs: vec![1.0],
        },
        5,
    )
    .unwrap();
    let expected = Exact::from_integer(1);
    assert_eq!(brute_force_value::<Exact, _>(&env, &spec, &origin, 1).unwrap(), expected);
    assert_eq!(solve::<Exact, _>(&env, &spec, &origin, 1).unwrap().value(), expected);

    let constant = Environment::new(EnvironmentModel::constant(2, 2, 0.5), 0).unwrap();
    for n in 1..=3 {
        assert_eq!(brute_force_value::<f64, _>(&constant, &spec, &origin, n).unwrap(), 0.5);
    }
}

#[test]
fn guard_refuses_large_instances() {
    let env = Environment::new(EnvironmentModel::constant(2, 2, 1.0), 0).unwrap();
    let spec = d1_spec(2, 2, vec![1; 4]);
    let r = brute_force_value::<f64, _>(&env, &spec, &LatticePoint::origin(1), 4);
    assert!(matches!(r, Err(Error::OracleTooLarge(_))));
    let big = Environment::new(EnvironmentModel::constant(4, 2, 1.0), 0).unwrap();
    let spec4 = d1_spec(4, 2, vec![1; 8]);
    assert!(matches!(
        brute_force_value::<f64, _>(&big, &spec4, &LatticePoint::origin(1), 1),
        Err(Error::OracleTooLarge(_))
    ));
}

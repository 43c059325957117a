use std::collections::BTreeSet;

use percolation_core::solver::{cone_level_range, value_profile};
use percolation_core::{
    extract_strategy, hyperplane_zeroed_value, reachable_cone, solve, solve_value, validate_orientation,
    Environment, EnvironmentModel, Exact, GameSpec, LatticePoint, PayoffField, PayoffMatrix, SquareKind,
    SquarePlant, SquaresModel, ValueTable,
};
use proptest::prelude::*;

fn random_spec(dim: usize) -> impl Strategy<Value = GameSpec> {
    (1usize..=3, 1usize..=3).prop_flat_map(move |(ni, nj)| {
        prop::collection::vec(prop::collection::vec(-2i64..=2, dim), ni * nj)
            .prop_map(move |t| GameSpec::new(dim, ni, nj, t, None).unwrap())
    })
}

fn oriented_spec() -> impl Strategy<Value = GameSpec> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(ni, nj)| {
        prop::collection::vec((-2i64..=2, 1i64..=3), ni * nj).prop_map(move |t| {
            let rows = t.into_iter().map(|(a, b)| vec![a, b]).collect();
            GameSpec::new(2, ni, nj, rows, Some(vec![0, 1])).unwrap()
        })
    })
}

fn matrices(ni: usize, nj: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec((-4i32..=4).prop_map(f64::from), ni * nj), 1..4)
}

fn table(ni: usize, nj: usize, support: &[Vec<f64>]) -> EnvironmentModel {
    EnvironmentModel::IidTable {
        support: support.iter().map(|m| PayoffMatrix::new(ni, nj, m.clone()).unwrap()).collect(),
        probs: vec![1.0 / support.len() as f64; support.len()],
    }
}

fn payoff_range(env: &Environment, spec: &GameSpec, n: usize) -> (f64, f64) {
    let cone = reachable_cone(spec, &LatticePoint::origin(spec.dim()), n).unwrap();
    let mut g = vec![0.0; spec.num_pairs()];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for m in 1..=n {
        for z in cone.stage(m).states() {
            env.stage_payoffs(&z, &mut g);
            lo = g.iter().fold(lo, |a, &b| a.min(b));
            hi = g.iter().fold(hi, |a, &b| a.max(b));
        }
    }
    (lo, hi)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cone_stages_follow_the_transition_closure(spec in random_spec(2), n in 1usize..6) {
        let origin = LatticePoint::from(vec![3, -1]);
        let cone = reachable_cone(&spec, &origin, n).unwrap();
        let mut frontier: BTreeSet<Vec<i64>> = BTreeSet::from([origin.0.clone()]);
        for m in 1..=n {
            let got: BTreeSet<Vec<i64>> = cone.stage(m).states().map(|p| p.0).collect();
            prop_assert_eq!(&got, &frontier);
            let mut next = BTreeSet::new();
            for z in &frontier {
                for q in spec.transition() {
                    next.insert(vec![z[0] + q[0], z[1] + q[1]]);
                }
            }
            frontier = next;
        }
        // prefix independence of the horizon
        let longer = reachable_cone(&spec, &origin, n + 3).unwrap();
        for m in 1..=n {
            prop_assert!(longer.stage(m).states().eq(cone.stage(m).states()));
        }
    }

    #[test]
    fn oriented_cones_drift_at_least_the_minimum_step(spec in oriented_spec(), n in 1usize..8) {
        prop_assert!(validate_orientation(&spec).unwrap());
        let r = spec.transition().iter().map(|q| q[1]).min().unwrap();
        let cone = reachable_cone(&spec, &LatticePoint::origin(2), n).unwrap();
        for m in 1..=n {
            for z in cone.stage(m).states() {
                prop_assert!(z[1] >= (m as i64 - 1) * r);
            }
        }
    }

    #[test]
    fn value_lies_within_cone_payoff_range(
        spec in random_spec(2),
        seed in any::<u64>(),
        n in 1usize..6,
        support in matrices(3, 3),
    ) {
        let (ni, nj) = (spec.num_actions_p1(), spec.num_actions_p2());
        let support: Vec<Vec<f64>> = support.into_iter().map(|m| m[..ni * nj].to_vec()).collect();
        let env = Environment::new(table(ni, nj, &support), seed).unwrap();
        let v: f64 = solve_value(&env, &spec, &LatticePoint::origin(2), n).unwrap();
        let (lo, hi) = payoff_range(&env, &spec, n);
        prop_assert!(lo <= v && v <= hi);
    }

    #[test]
    fn dominating_payoffs_dominate_values(
        spec in random_spec(2),
        seed in any::<u64>(),
        n in 1usize..6,
        support in matrices(3, 3),
        bump in prop::collection::vec(0u8..=2, 9),
    ) {
        let (ni, nj) = (spec.num_actions_p1(), spec.num_actions_p2());
        let base: Vec<Vec<f64>> = support.iter().map(|m| m[..ni * nj].to_vec()).collect();
        let raised: Vec<Vec<f64>> = base
            .iter()
            .map(|m| m.iter().zip(&bump).map(|(g, b)| g + f64::from(*b)).collect())
            .collect();
        let origin = LatticePoint::origin(2);
        let low = Environment::new(table(ni, nj, &base), seed).unwrap();
        let high = Environment::new(table(ni, nj, &raised), seed).unwrap();
        let v: Exact = solve_value(&low, &spec, &origin, n).unwrap();
        let w: Exact = solve_value(&high, &spec, &origin, n).unwrap();
        prop_assert!(w >= v);
    }

    #[test]
    fn full_table_and_rolling_sweep_agree(spec in random_spec(2), seed in any::<u64>(), n in 1usize..7) {
        let env = Environment::new(EnvironmentModel::IidBernoulli { p: 0.5 }, seed).unwrap();
        let origin = LatticePoint::origin(2);
        let t: ValueTable<Exact> = solve(&env, &spec, &origin, n).unwrap();
        let v: Exact = solve_value(&env, &spec, &origin, n).unwrap();
        prop_assert_eq!(t.value(), v);
        let profile: Vec<(LatticePoint, Exact)> = value_profile(&env, &spec, std::slice::from_ref(&origin), n).unwrap();
        prop_assert_eq!(profile[0].1, v);
    }
}

#[test]
fn bellman_consistency_on_squares_environment() {
    let spec = GameSpec::counterexample();
    let origin = LatticePoint::origin(3);
    let n = 6;
    let env = Environment::for_cone(EnvironmentModel::Squares(SquaresModel::new(4)), 11, &spec, &origin, n).unwrap();
    let t: ValueTable<Exact> = solve(&env, &spec, &origin, n).unwrap();
    let mut g = vec![0.0; 9];
    for m in 1..=n {
        for z in t.stage(m).states() {
            env.stage_payoffs(&z, &mut g);
            let best = (0..3)
                .map(|i| {
                    (0..3)
                        .map(|j| {
                            let next = spec.successor(&z, i, j).unwrap();
                            let cont = if m == n { Exact::from_integer(0) } else { t.cumulative(m + 1, &next).unwrap() };
                            Exact::from_integer(g[i * 3 + j] as i64) + cont
                        })
                        .min()
                        .unwrap()
                })
                .max()
                .unwrap();
            assert_eq!(t.cumulative(m, &z), Some(best), "stage {m} state {z}");
        }
    }
}

#[test]
fn self_play_reproduces_the_value() {
    let spec = GameSpec::counterexample();
    let origin = LatticePoint::origin(3);
    for seed in 0..50 {
        let env = Environment::new(EnvironmentModel::IidBernoulli { p: 0.3 }, seed).unwrap();
        let t: ValueTable<f64> = solve(&env, &spec, &origin, 12).unwrap();
        let s = extract_strategy(&t, &env, &spec).unwrap();
        let tr = s.self_play::<f64, _>(&env, &spec).unwrap();
        assert_eq!(tr.average(), t.value());
    }
}

#[test]
fn forced_drift_averages_state_payoffs() {
    // payoff 0 at the origin, 1 at x = 1
    let spec = GameSpec::drift(1, 1, vec![1]).unwrap();
    let mut seed = 0;
    let env = loop {
        let env = Environment::new(EnvironmentModel::IidBernoulli { p: 0.5 }, seed).unwrap();
        if env.payoff(&[0], 0, 0).unwrap() == 0.0 && env.payoff(&[1], 0, 0).unwrap() == 1.0 {
            break env;
        }
        seed += 1;
    };
    let v: f64 = solve_value(&env, &spec, &LatticePoint::origin(1), 2).unwrap();
    assert_eq!(v, 0.5);
}

#[test]
fn hyperplane_zeroing_examples() {
    let spec = GameSpec::counterexample();
    let origin = LatticePoint::origin(3);
    let ones = Environment::new(EnvironmentModel::constant(3, 3, 1.0), 0).unwrap();
    let n = 8;
    let (lo, hi) = cone_level_range(&spec, &origin, n).unwrap();
    assert_eq!((lo, hi), (0, 7));
    for h in lo..=hi {
        let v: Exact = hyperplane_zeroed_value(&ones, &spec, &origin, n, h).unwrap();
        assert_eq!(v, Exact::new(7, 8));
    }
    let bern = Environment::new(EnvironmentModel::IidBernoulli { p: 0.5 }, 3).unwrap();
    let v: Exact = solve_value(&bern, &spec, &origin, n).unwrap();
    for h in [lo - 1, hi + 1, 100] {
        assert_eq!(hyperplane_zeroed_value::<Exact, _>(&bern, &spec, &origin, n, h).unwrap(), v);
    }
    let loose = GameSpec::benchmark_2d();
    assert!(hyperplane_zeroed_value::<f64, _>(&ones, &loose, &LatticePoint::origin(2), 4, 0).is_err());
}

#[test]
fn player_one_walks_to_the_planted_square_and_stays() {
    let spec = GameSpec::counterexample();
    let origin = LatticePoint::origin(3);
    let n = 16;
    let plant = SquarePlant { kind: SquareKind::One, scale: 6, center: [4, 0, 0] };
    let model = EnvironmentModel::Squares(SquaresModel::plants_only(6, vec![plant]));
    let env = Environment::for_cone(model, 0, &spec, &origin, n).unwrap();
    let t: ValueTable<f64> = solve(&env, &spec, &origin, n).unwrap();
    assert_eq!(t.value(), 0.75);
    let s = extract_strategy(&t, &env, &spec).unwrap();
    let tr = s.self_play::<f64, _>(&env, &spec).unwrap();
    let arrival = tr.states.iter().position(|z| z[0] == 4).unwrap();
    assert_eq!(arrival, 4);
    for m in arrival..n {
        assert_eq!(tr.states[m][0], 4);
        assert_eq!(tr.payoffs[m], 1.0);
    }
    // the last stage has no continuation, so every action ties there
    for m in arrival..n - 1 {
        assert_eq!(tr.actions[m].0, 1, "Player 1 keeps the x coordinate fixed");
    }
    assert_eq!(tr.average(), 0.75);
}

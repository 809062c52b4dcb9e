mod common;

use std::cmp::Ordering;

use proptest::prelude::*;

use tpg::data::{DataSource, NativeData, NativeShape, OperandType, Shape, StateSource, Value};
use tpg::evolution::random_program;
use tpg::frontend::{export_dot, import_dot};
use tpg::graph::{bid_order, EdgeId, TeamId};
use tpg::parallel::Rng;
use tpg::program::{validate_program, Executor};

use common::*;

fn bid() -> impl Strategy<Value = f64> {
    prop_oneof![
        6 => -1e6f64..1e6,
        1 => Just(f64::NAN),
        1 => Just(f64::INFINITY),
        1 => Just(f64::NEG_INFINITY),
        1 => Just(0.0),
        1 => Just(-0.0),
    ]
}

fn winner(bids: &[f64]) -> usize {
    (0..bids.len())
        .min_by(|&a, &b| bid_order((bids[a], EdgeId(a as u64)), (bids[b], EdgeId(b as u64))))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bid_order_is_a_strict_total_order(a in bid(), b in bid(), c in bid(), i in 0u64..4, j in 0u64..4, k in 0u64..4) {
        let (x, y, z) = ((a, EdgeId(i)), (b, EdgeId(j)), (c, EdgeId(k)));
        // irreflexive, antisymmetric, total on distinct edges
        prop_assert_eq!(bid_order(x, x), Ordering::Equal);
        prop_assert_eq!(bid_order(x, y), bid_order(y, x).reverse());
        if i != j {
            prop_assert_ne!(bid_order(x, y), Ordering::Equal);
        }
        if bid_order(x, y) == Ordering::Less && bid_order(y, z) == Ordering::Less {
            prop_assert_eq!(bid_order(x, z), Ordering::Less);
        }
    }

    #[test]
    fn finite_bids_beat_non_finite(a in -1e300f64..1e300, special in prop_oneof![Just(f64::NAN), Just(f64::INFINITY), Just(f64::NEG_INFINITY)], i in 0u64..9, j in 0u64..9) {
        prop_assume!(i != j);
        prop_assert_eq!(bid_order((a, EdgeId(i)), (special, EdgeId(j))), Ordering::Less);
    }

    #[test]
    fn argmax_survives_positive_scaling(bids in prop::collection::vec(-1e3f64..1e3, 2..10), scale in 1e-3f64..1e3) {
        let scaled: Vec<f64> = bids.iter().map(|b| b * scale).collect();
        prop_assert_eq!(winner(&bids), winner(&scaled));
    }

    #[test]
    fn window_reads_stay_in_bounds(
        rows in 1usize..6, cols in 1usize..6, h in 1usize..4, w in 1usize..4, n in 1usize..8, seed in any::<u64>()
    ) {
        let mut rng = Rng::new(seed);
        let values: Vec<i8> = (0..rows * cols).map(|_| rng.next_u64() as i8).collect();
        let grid = StateSource::new(NativeShape::Grid(rows, cols), NativeData::I8(values.clone())).unwrap();
        let flat = StateSource::new(NativeShape::Flat(rows * cols), NativeData::I8(values.clone())).unwrap();

        let matrix = OperandType::matrix(tpg::data::ElementKind::I8, h, w);
        let count = grid.addressable_count(&matrix);
        let expected = if h <= rows && w <= cols { (rows - h + 1) * (cols - w + 1) } else { 0 };
        prop_assert_eq!(count, expected);
        prop_assert_eq!(flat.addressable_count(&matrix), 0);
        for location in 0..count {
            let Value::Array { shape, data: NativeData::I8(read) } = grid.get_data(&matrix, location).unwrap() else {
                panic!("matrix read must give an i8 array");
            };
            prop_assert_eq!(shape, Shape::Matrix(h, w));
            let (r, c) = (location / (cols - w + 1), location % (cols - w + 1));
            for i in 0..h {
                for j in 0..w {
                    prop_assert_eq!(read[i * w + j], values[(r + i) * cols + c + j]);
                }
            }
        }
        prop_assert!(grid.get_data(&matrix, count).is_err());

        let vector = OperandType::vector(tpg::data::ElementKind::I64, n);
        let count = flat.addressable_count(&vector);
        prop_assert_eq!(count, (rows * cols + 1).saturating_sub(n));
        for location in 0..count {
            let Value::Array { data: NativeData::I64(read), .. } = flat.get_data(&vector, location).unwrap() else {
                panic!("vector read must give an i64 array");
            };
            let expected: Vec<i64> = values[location..location + n].iter().map(|&v| i64::from(v)).collect();
            prop_assert_eq!(read, expected);
        }
        prop_assert!(flat.get_data(&vector, count).is_err());
    }

    #[test]
    fn engine_matches_naive_oracle(seed in any::<u64>(), complex in any::<bool>()) {
        let set = if complex { typed_complex() } else { typed_simple() };
        let ctx = typed_context(set.clone());
        let mut rng = Rng::new(seed);
        let mut executor = Executor::for_context(&ctx);
        let program = random_program(&ctx, 20, &mut rng);
        prop_assert!(validate_program(&program, &ctx, Some(20)).is_empty());
        for _ in 0..4 {
            let state = random_state(&mut rng);
            let fast = executor.execute(&ctx, &program, &to_snapshot(&state)).unwrap();
            let slow = naive_execute(&set, &program, &state);
            prop_assert_eq!(fast.to_bits(), slow.to_bits());
        }
    }

    #[test]
    fn inference_terminates_on_a_legal_action(seed in any::<u64>()) {
        let ctx = typed_context(typed_simple());
        let mut rng = Rng::new(seed);
        let graph = random_graph(&ctx, 5, &mut rng);
        let mut executor = Executor::for_context(&ctx);
        for team in graph.team_ids() {
            let state = to_snapshot(&random_state(&mut rng));
            let inference = graph.infer(team, &state, &mut executor).unwrap();
            prop_assert!(inference.action < 5);
            prop_assert!(inference.trace.len() <= graph.edge_count());
        }
    }

    #[test]
    fn dot_round_trips_three_times(seed in any::<u64>()) {
        let registry = typed_registry();
        let ctx = typed_context(if seed % 2 == 0 { typed_simple() } else { typed_complex() });
        let graph = random_graph(&ctx, 4, &mut Rng::new(seed));
        prop_assert!(graph.check_invariants().is_empty());
        let first = export_dot(&graph);
        let mut text = first.clone();
        for _ in 0..3 {
            let back = import_dot(&text, &registry).unwrap();
            prop_assert!(back.check_invariants().is_empty());
            prop_assert_eq!(back.team_ids(), graph.team_ids());
            text = export_dot(&back);
            prop_assert_eq!(&text, &first);
        }
    }
}

#[test]
fn root_zero_is_always_a_root() {
    let ctx = typed_context(typed_simple());
    for seed in 0..50 {
        let graph = random_graph(&ctx, 3, &mut Rng::new(seed));
        assert!(graph.roots().contains(&TeamId(0)));
    }
}

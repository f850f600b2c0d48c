// Library results checked against brute-force or closed-form computations
// written independently here.

use beepnet::analysis::amplify::{amplification_rounds, jitterjump_success_probability};
use beepnet::analysis::ballsbins::{bb_enumerate, bb_exact};
use beepnet::analysis::lowerbound::build_lowerbound_graph;
use beepnet::jitterjump::{free_slots, measure_interval};
use beepnet::{circular_distance, to_global, ClockOffset, JjParams, PhaseSet};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

fn phases(set: &PhaseSet<i64>) -> Vec<i64> {
    set.iter().collect()
}

// Walk the arc slot by slot.
fn naive_arc(set: &[i64], a: i64, b: i64, tau: i64) -> Vec<i64> {
    let start = a.rem_euclid(tau);
    let len = (b - a).rem_euclid(tau);
    let mut out: Vec<i64> = (0..=len)
        .map(|k| (start + k) % tau)
        .filter(|p| set.contains(p))
        .collect();
    out.sort();
    out
}

#[test]
fn range_query_wraps_across_the_boundary() {
    let s = PhaseSet::from_phases(10, [1, 5, 9]);
    assert_eq!(phases(&s.range_query(4, 6)), vec![5]);
    assert_eq!(phases(&s.range_query(8, 2)), vec![1, 9]);
    assert_eq!(s.last_in(8, 2), Some(1));
}

#[test]
fn global_frame_examples() {
    assert_eq!(to_global(3i64, ClockOffset(5), 16).0, 8);
    assert_eq!(to_global(10i64, ClockOffset(10), 16).0, 4);
    assert_eq!(circular_distance(1i64, 15, 16), 2);
}

#[test]
fn buffer_shrinks_with_degree_estimate() {
    let p = JjParams::new(1.0 / 16.0, 512);
    assert_eq!(p.buffer_for(1), 16);
    assert_eq!(p.buffer_for(0), 32);
    assert_eq!(p.buffer_for(1000), 1);
}

#[test]
fn free_slots_exclude_the_guard_window() {
    let s = PhaseSet::from_phases(32, [10]);
    let free = free_slots(&s, None, 2);
    assert_eq!(free.len(), 24);
    assert!((7..=14).all(|p| !free.contains(&p)));
    let empty = PhaseSet::new(32);
    assert_eq!(free_slots(&empty, None, 2), (0..32).collect::<Vec<_>>());
}

#[test]
fn interval_is_gap_to_previous_beep() {
    let s = PhaseSet::from_phases(16, [3, 12]);
    assert_eq!(measure_interval(&s, 10), 6);
    assert_eq!(measure_interval(&s, 2), 5);
    assert_eq!(measure_interval(&PhaseSet::new(16), 4), 15);
}

fn exact_expected_occupied(m: u32, n: u32) -> BigRational {
    // n·(1 - ((n-1)/n)^m)
    let n_big = BigInt::from(n);
    let miss = BigRational::new(BigInt::from(n - 1).pow(m), n_big.pow(m));
    BigRational::from_integer(n_big.clone()) * (BigRational::from_integer(1.into()) - miss)
}

#[test]
fn occupancy_mean_matches_closed_form() {
    for (m, n) in [(1, 1), (2, 2), (5, 3), (12, 100), (20, 7)] {
        assert_eq!(bb_exact(m, n).exact_mean(), exact_expected_occupied(m, n), "m={m} n={n}");
    }
}

#[test]
fn two_balls_two_bins() {
    let d = bb_exact(2, 2);
    let half = BigRational::new(1.into(), 2.into());
    assert_eq!(d.exact_prob(1), half);
    assert_eq!(d.exact_prob(2), half);
}

#[test]
fn many_bins_tail_exceeds_half() {
    let d = bb_exact(12, 100);
    assert!(d.quarter_gate().tail_prob > 0.5);
}

#[test]
fn enumeration_agrees_with_exact_counts() {
    for (m, n) in [(3, 4), (6, 3), (5, 5)] {
        let counts = bb_enumerate(m, n);
        let exact = bb_exact(m, n);
        let total: u64 = counts.iter().sum();
        assert_eq!(total, (n as u64).pow(m));
        for (k, &c) in counts.iter().enumerate() {
            let p = BigRational::new(BigInt::from(c), BigInt::from(total));
            assert_eq!(exact.exact_prob(k), p, "m={m} n={n} k={k}");
        }
    }
}

#[test]
fn amplification_examples() {
    let r = amplification_rounds(1.0, 0.25, 1.0, 16.0).unwrap();
    assert!((r - 8.0 * 16f64.ln()).abs() < 1e-12);
    assert!((amplification_rounds(1.0, 1.0, 0.0, 2.0).unwrap() - 2f64.ln()).abs() < 1e-12);
    let p = jitterjump_success_probability(1.0 / 16.0);
    assert!((p - 0.5 * (-1.0f64 / (1.0 - 3.0 / 16.0)).exp()).abs() < 1e-15);
    assert!((p - 0.14604).abs() < 5e-5);
}

#[test]
fn two_block_lowerbound_graph() {
    let g = build_lowerbound_graph(2).unwrap();
    assert_eq!(g.node_count(), 8);
    assert_eq!(g.edge_count(), 12);
}

proptest! {
    #[test]
    fn range_query_matches_slot_walk(
        tau in 1i64..64,
        raw in proptest::collection::vec(0i64..64, 0..20),
        a in -200i64..200,
        b in -200i64..200,
    ) {
        let items: Vec<i64> = raw.iter().map(|x| x % tau).collect();
        let set = PhaseSet::from_phases(tau, items.clone());
        prop_assert_eq!(phases(&set.range_query(a, b)), naive_arc(&items, a, b, tau));
    }

    #[test]
    fn arcs_split_at_a_point_partition_the_set(
        tau in 2i64..64,
        raw in proptest::collection::vec(0i64..64, 0..20),
        a in 0i64..64,
        cut in 0i64..64,
    ) {
        let set = PhaseSet::from_phases(tau, raw.iter().map(|x| x % tau));
        let a = a % tau;
        let cut = cut % (tau - 1);
        // [a, a+cut] and [a+cut+1, a-1] cover the circle exactly once.
        let left = set.count_in(a, a + cut);
        let right = set.count_in(a + cut + 1, a + tau - 1);
        prop_assert_eq!(left + right, set.len());
    }

    #[test]
    fn free_slots_match_definition(
        tau in 8i64..96,
        raw in proptest::collection::vec(0i64..96, 0..6),
        own in proptest::option::of(0i64..96),
        b in 1i64..6,
    ) {
        let set = PhaseSet::from_phases(tau, raw.iter().map(|x| x % tau));
        let own = own.map(|x| x % tau);
        let occupied: Vec<i64> = set.iter().chain(own).collect();
        let expected: Vec<i64> = (0..tau)
            .filter(|&p| {
                let lo = p - b - 2;
                let hi = p + b + 1;
                if hi - lo + 1 >= tau {
                    return occupied.is_empty();
                }
                !occupied.iter().any(|&h| (lo..=hi).any(|x| x.rem_euclid(tau) == h))
            })
            .collect();
        prop_assert_eq!(free_slots(&set, own, b), expected);
    }

    #[test]
    fn global_and_back(tau in 1i64..1000, p in 0i64..1000, off in 0i64..1000) {
        let p = p % tau;
        let g = to_global(p, ClockOffset(off), tau).0;
        prop_assert!((0..tau).contains(&g));
        prop_assert_eq!((g - off).rem_euclid(tau), p);
    }

    #[test]
    fn occupancy_law_sums_to_one(m in 0u32..30, n in 1u32..40) {
        let d = bb_exact(m, n);
        let sum = (0..=m.min(n) as usize)
            .map(|k| d.exact_prob(k))
            .fold(BigRational::from_integer(0.into()), |acc, x| acc + x);
        prop_assert_eq!(sum, BigRational::from_integer(1.into()));
    }
}

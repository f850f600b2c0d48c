//! Phase arithmetic shared by both engines and all protocols.
//!
//! A phase is a position inside one period: an integer slot in `[0, Q)` for
//! the discrete model, a real time point in `[0, T)` for the continuous one.
//! [`PhaseSet`] stores the phases a node heard and answers wrap-aware range
//! queries: a range `[a, b]` whose endpoints reduce to `x > y` is the arc that
//! starts at `x`, crosses the period boundary, and ends at `y`.

use std::fmt::Debug;

/// Numeric type usable as a phase: `i64` slots or `f64` time points.
pub trait PhaseValue: Copy + PartialOrd + Debug {
    fn zero() -> Self;
    /// Reduces `self` into `[0, tau)`.
    fn wrap(self, tau: Self) -> Self;
    fn add(self, other: Self) -> Self;
    fn sub(self, other: Self) -> Self;
}

impl PhaseValue for i64 {
    fn zero() -> Self {
        0
    }

    fn wrap(self, tau: Self) -> Self {
        self.rem_euclid(tau)
    }

    fn add(self, other: Self) -> Self {
        self + other
    }

    fn sub(self, other: Self) -> Self {
        self - other
    }
}

impl PhaseValue for f64 {
    fn zero() -> Self {
        0.0
    }

    fn wrap(self, tau: Self) -> Self {
        let r = self.rem_euclid(tau);
        // rem_euclid can round up to exactly tau for tiny negative inputs.
        if r >= tau {
            0.0
        } else {
            r
        }
    }

    fn add(self, other: Self) -> Self {
        self + other
    }

    fn sub(self, other: Self) -> Self {
        self - other
    }
}

/// Offset of a node's local period origin in the global frame (`Θ_v`).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ClockOffset<P>(pub P);

/// A phase expressed in the global reference frame.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct GlobalPhase<P>(pub P);

/// Maps a local phase to the global frame: `(p + Θ) mod τ`.
pub fn to_global<P: PhaseValue>(phase: P, offset: ClockOffset<P>, tau: P) -> GlobalPhase<P> {
    GlobalPhase(phase.add(offset.0).wrap(tau))
}

/// Shortest distance between two phases on the circle of length `tau`.
pub fn circular_distance<P: PhaseValue>(a: P, b: P, tau: P) -> P {
    let forward = b.sub(a).wrap(tau);
    let backward = a.sub(b).wrap(tau);
    if forward <= backward {
        forward
    } else {
        backward
    }
}

/// True when `point` lies on the closed arc `[start, end]` walked forward.
pub fn on_arc<P: PhaseValue>(point: P, start: P, end: P, tau: P) -> bool {
    let x = start.wrap(tau);
    let y = end.wrap(tau);
    let p = point.wrap(tau);
    if x <= y {
        x <= p && p <= y
    } else {
        p >= x || p <= y
    }
}

/// Sorted, duplicate-free set of phases within one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSet<P> {
    period: P,
    phases: Vec<P>,
}

impl<P: PhaseValue> PhaseSet<P> {
    pub fn new(period: P) -> Self {
        assert!(period > P::zero(), "period length must be positive");
        PhaseSet {
            period,
            phases: Vec::new(),
        }
    }

    /// Builds a set from arbitrary values, reducing each into `[0, τ)`.
    pub fn from_phases(period: P, phases: impl IntoIterator<Item = P>) -> Self {
        let mut set = Self::new(period);
        for p in phases {
            set.insert(p);
        }
        set
    }

    pub fn period(&self) -> P {
        self.period
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = P> + '_ {
        self.phases.iter().copied()
    }

    pub fn as_slice(&self) -> &[P] {
        &self.phases
    }

    pub fn clear(&mut self) {
        self.phases.clear();
    }

    /// Inserts a phase (wrapped into the period). Returns false if an equal
    /// phase was already present.
    pub fn insert(&mut self, phase: P) -> bool {
        let p = phase.wrap(self.period);
        let idx = self.phases.partition_point(|&q| q < p);
        if idx < self.phases.len() && self.phases[idx] == p {
            return false;
        }
        self.phases.insert(idx, p);
        true
    }

    pub fn contains(&self, phase: P) -> bool {
        let p = phase.wrap(self.period);
        let idx = self.phases.partition_point(|&q| q < p);
        idx < self.phases.len() && self.phases[idx] == p
    }

    pub fn union_with(&mut self, other: &PhaseSet<P>) {
        for p in other.iter() {
            self.insert(p);
        }
    }

    /// The two index ranges making up `S[a, b]`, in forward-scan order.
    fn arc_bounds(&self, a: P, b: P) -> [(usize, usize); 2] {
        let x = a.wrap(self.period);
        let y = b.wrap(self.period);
        let lo = self.phases.partition_point(|&q| q < x);
        let hi = self.phases.partition_point(|&q| q <= y);
        if x <= y {
            [(lo, hi.max(lo)), (0, 0)]
        } else {
            [(lo, self.phases.len()), (0, hi)]
        }
    }

    /// Phases in `S[a, b]`, starting at `a mod τ` and walking forward.
    pub fn arc(&self, a: P, b: P) -> impl Iterator<Item = P> + '_ {
        let [first, second] = self.arc_bounds(a, b);
        self.phases[first.0..first.1]
            .iter()
            .chain(self.phases[second.0..second.1].iter())
            .copied()
    }

    /// `S[a, b]` as a new set.
    pub fn range_query(&self, a: P, b: P) -> PhaseSet<P> {
        let mut phases: Vec<P> = self.arc(a, b).collect();
        phases.sort_by(|l, r| l.partial_cmp(r).expect("phases are totally ordered"));
        PhaseSet {
            period: self.period,
            phases,
        }
    }

    pub fn any_in(&self, a: P, b: P) -> bool {
        let [first, second] = self.arc_bounds(a, b);
        first.1 > first.0 || second.1 > second.0
    }

    pub fn count_in(&self, a: P, b: P) -> usize {
        let [first, second] = self.arc_bounds(a, b);
        (first.1 - first.0) + (second.1 - second.0)
    }

    /// Last phase met when scanning `S[a, b]` forward from `a mod τ`.
    pub fn last_in(&self, a: P, b: P) -> Option<P> {
        let [first, second] = self.arc_bounds(a, b);
        if second.1 > second.0 {
            Some(self.phases[second.1 - 1])
        } else if first.1 > first.0 {
            Some(self.phases[first.1 - 1])
        } else {
            None
        }
    }
}

/// `S[a, b]` for arbitrary (possibly negative or out-of-period) endpoints.
pub fn range_query<P: PhaseValue>(set: &PhaseSet<P>, a: P, b: P) -> PhaseSet<P> {
    set.range_query(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn slots(set: &PhaseSet<i64>) -> Vec<i64> {
        set.iter().collect()
    }

    #[test]
    fn non_wrapping_range() {
        let s = PhaseSet::from_phases(10, [1, 5, 9]);
        assert_eq!(slots(&range_query(&s, 4, 6)), vec![5]);
    }

    #[test]
    fn wrapping_range_is_the_arc_through_the_boundary() {
        let s = PhaseSet::from_phases(10, [1, 5, 9]);
        assert_eq!(s.arc(8, 2).collect::<Vec<_>>(), vec![9, 1]);
        assert_eq!(slots(&range_query(&s, 8, 2)), vec![1, 9]);
        assert_eq!(s.last_in(8, 2), Some(1));
    }

    #[test]
    fn empty_set_queries() {
        let s = PhaseSet::<i64>::new(10);
        assert!(range_query(&s, 0, 9).is_empty());
        assert_eq!(s.last_in(3, 1), None);
    }

    #[test]
    fn negative_and_large_endpoints() {
        let s = PhaseSet::from_phases(16, [0, 3, 15]);
        assert_eq!(s.arc(-2, 1).collect::<Vec<_>>(), vec![15, 0]);
        assert_eq!(s.arc(31, 35).collect::<Vec<_>>(), vec![15, 0, 3]);
    }

    #[test]
    fn continuous_range() {
        let s = PhaseSet::from_phases(1.0, [0.1, 0.5, 0.95]);
        assert_eq!(s.arc(0.9, 0.2).collect::<Vec<_>>(), vec![0.95, 0.1]);
        assert_eq!(s.arc(-0.1, 0.2).collect::<Vec<_>>(), vec![0.95, 0.1]);
        assert!(!s.any_in(0.2, 0.4));
    }

    #[test]
    fn to_global_examples() {
        assert_eq!(to_global(3, ClockOffset(5), 16), GlobalPhase(8));
        assert_eq!(to_global(0, ClockOffset(0), 16), GlobalPhase(0));
        assert_eq!(to_global(10, ClockOffset(10), 16), GlobalPhase(4));
    }

    #[test]
    fn insert_wraps_and_dedups() {
        let mut s = PhaseSet::new(8);
        assert!(s.insert(9));
        assert!(!s.insert(1));
        assert!(s.insert(-1));
        assert_eq!(slots(&s), vec![1, 7]);
    }

    #[test]
    fn circular_distance_is_symmetric() {
        assert_eq!(circular_distance(1, 15, 16), 2);
        assert_eq!(circular_distance(15, 1, 16), 2);
        assert_eq!(circular_distance(4, 12, 16), 8);
    }

    fn set_strategy() -> impl Strategy<Value = (i64, Vec<i64>)> {
        (2i64..64).prop_flat_map(|q| (Just(q), proptest::collection::vec(0..q, 0..20)))
    }

    proptest! {
        #[test]
        fn full_range_is_identity((q, raw) in set_strategy()) {
            let s = PhaseSet::from_phases(q, raw);
            prop_assert_eq!(range_query(&s, 0, q - 1), s.clone());
            let c = PhaseSet::from_phases(1.0, s.iter().map(|p| p as f64 / q as f64));
            let top = 1.0f64 - f64::EPSILON / 2.0;
            prop_assert_eq!(range_query(&c, 0.0, top), c.clone());
        }

        #[test]
        fn complementary_ranges_partition((q, raw) in set_strategy(), a in -100i64..100, len in 0i64..62) {
            let len = len % (q - 1);
            let b = a + len;
            let s = PhaseSet::from_phases(q, raw);
            let left = range_query(&s, a, b);
            let right = range_query(&s, b + 1, a - 1);
            prop_assert_eq!(left.len() + right.len(), s.len());
            for p in left.iter() {
                prop_assert!(!right.contains(p));
            }
        }

        #[test]
        fn to_global_round_trips(q in 1i64..500, p in 0i64..500, theta in 0i64..500) {
            let p = p % q;
            let theta = theta % q;
            let g = to_global(p, ClockOffset(theta), q).0;
            prop_assert!((0..q).contains(&g));
            let back = to_global(g, ClockOffset((q - theta) % q), q).0;
            prop_assert_eq!(back, p);
        }

        #[test]
        fn arc_matches_on_arc((q, raw) in set_strategy(), a in -100i64..100, b in -100i64..100) {
            let s = PhaseSet::from_phases(q, raw);
            let got: Vec<i64> = range_query(&s, a, b).iter().collect();
            let want: Vec<i64> = s.iter().filter(|&p| on_arc(p, a, b, q)).collect();
            prop_assert_eq!(got, want);
        }
    }
}

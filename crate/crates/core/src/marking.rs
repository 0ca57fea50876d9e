//! Marking rules: greedy, Dörfler and the greedy hp split.
//!
//! All rules take the local estimates directly, so they depend only on
//! ratios of the field and not on its scale.

use crate::real::Real;

/// Elements selected for h- and p-refinement, each sorted ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkResult {
    pub h_set: Vec<usize>,
    pub p_set: Vec<usize>,
}

fn max_of<T: Real>(eta: &[T]) -> T {
    eta.iter().copied().fold(T::zero(), T::max)
}

/// `{ T : theta * max eta <= eta_T }`.
pub fn mark_greedy<T: Real>(eta: &[T], theta: T) -> MarkResult {
    let threshold = theta * max_of(eta);
    let h_set = (0..eta.len()).filter(|&i| threshold <= eta[i]).collect();
    MarkResult { h_set, p_set: Vec::new() }
}

/// Shortest prefix of the estimates sorted descending (ties by index) whose
/// squared sum reaches `theta` times the total. The test is made on the mass
/// left outside the prefix, so `theta = 1` marks every nonzero estimate.
pub fn mark_dorfler<T: Real>(eta: &[T], theta: T) -> MarkResult {
    let mut order: Vec<usize> = (0..eta.len()).collect();
    order.sort_by(|&a, &b| eta[b].partial_cmp(&eta[a]).expect("finite estimates").then(a.cmp(&b)));
    // rest[j]: squared mass of order[j..], accumulated from the smallest
    let mut rest = vec![T::zero(); order.len() + 1];
    for j in (0..order.len()).rev() {
        rest[j] = rest[j + 1] + eta[order[j]] * eta[order[j]];
    }
    let allowed = (T::one() - theta) * rest[0];
    let len = (0..=order.len()).find(|&j| rest[j] <= allowed).unwrap_or(order.len());
    let mut h_set = order[..len].to_vec();
    h_set.sort_unstable();
    MarkResult { h_set, p_set: Vec::new() }
}

/// h-refine `{ theta max < eta_T }`, p-refine `{ rho theta max <= eta_T < theta max }`.
pub fn mark_hp<T: Real>(eta: &[T], theta: T, rho: T) -> MarkResult {
    let max = max_of(eta);
    let h_threshold = theta * max;
    let p_threshold = rho * theta * max;
    let mut out = MarkResult::default();
    for (i, &e) in eta.iter().enumerate() {
        if h_threshold < e {
            out.h_set.push(i);
        } else if p_threshold <= e && e < h_threshold {
            out.p_set.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn greedy_examples() {
        assert_eq!(mark_greedy(&[4.0, 2.0, 1.0], 0.5).h_set, vec![0, 1]);
        assert_eq!(mark_greedy(&[4.0, 2.0, 1.0], 0.0).h_set, vec![0, 1, 2]);
        assert_eq!(mark_greedy(&[4.0, 2.0, 4.0, 1.0], 1.0).h_set, vec![0, 2]);
        assert!(mark_greedy(&[4.0, 2.0], 0.3).p_set.is_empty());
    }

    #[test]
    fn dorfler_examples() {
        assert_eq!(mark_dorfler(&[3.0, 2.0, 1.0], 0.5).h_set, vec![0]);
        assert!(mark_dorfler(&[3.0, 2.0, 1.0], 0.0).h_set.is_empty());
        assert_eq!(mark_dorfler(&[3.0, 0.0, 1.0, 2.0], 1.0).h_set, vec![0, 2, 3]);
        // ties broken by index
        assert_eq!(mark_dorfler(&[1.0, 1.0, 1.0], 0.3).h_set, vec![0]);
    }

    #[test]
    fn hp_examples() {
        let m = mark_hp(&[4.0, 2.0, 1.0], 0.6, 0.5);
        assert_eq!(m.h_set, vec![0]);
        assert_eq!(m.p_set, vec![1]);
        // the p band is half-open, so at theta = 1 the maximal element is left alone
        let only_p = mark_hp(&[4.0, 2.0, 1.0], 1.0, 0.2);
        assert!(only_p.h_set.is_empty());
        assert_eq!(only_p.p_set, vec![1, 2]);
        assert_eq!(mark_hp(&[4.0, 2.4, 2.0], 0.6, 0.5), MarkResult { h_set: vec![0], p_set: vec![2] });
        let only_h = mark_hp(&[4.0, 2.0, 1.0], 0.4, 1.0);
        assert_eq!(only_h.h_set, vec![0, 1]);
        assert!(only_h.p_set.is_empty());
    }

    /// Smallest cardinality of any subset meeting the bulk criterion, judged
    /// by the mass it leaves out.
    fn brute_force_min(eta: &[f64], theta: f64) -> usize {
        let n = eta.len();
        let total: f64 = eta.iter().map(|e| e * e).sum();
        (0u32..1 << n)
            .filter(|mask| {
                let rest: f64 = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| eta[i] * eta[i]).sum();
                rest <= (1.0 - theta) * total
            })
            .map(|m| m.count_ones() as usize)
            .min()
            .unwrap()
    }

    fn field() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0, (1u32..5).prop_map(|k| k as f64 * 0.25)], 1..=12)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(400))]

        #[test]
        fn dorfler_is_minimal_and_tight(eta in field(), theta in 0.0f64..=1.0) {
            let set = mark_dorfler(&eta, theta).h_set;
            let total: f64 = eta.iter().map(|e| e * e).sum();
            let sum: f64 = set.iter().map(|&i| eta[i] * eta[i]).sum();
            prop_assert!(theta * total <= sum * (1.0 + 1e-12));
            prop_assert_eq!(set.len(), brute_force_min(&eta, theta));
            if let Some(&smallest) = set.iter().min_by(|&&a, &&b| eta[a].partial_cmp(&eta[b]).unwrap()) {
                prop_assert!(theta * total > sum - eta[smallest] * eta[smallest]);
            }
        }

        #[test]
        fn greedy_is_monotone_in_theta(eta in field(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let big = mark_greedy(&eta, lo).h_set;
            let small = mark_greedy(&eta, hi).h_set;
            prop_assert!(small.iter().all(|i| big.contains(i)));
        }

        #[test]
        fn hp_sets_are_disjoint_and_cover_the_band(eta in field(), theta in 0.0f64..=1.0, rho in 0.0f64..=1.0) {
            let m = mark_hp(&eta, theta, rho);
            prop_assert!(m.h_set.iter().all(|i| !m.p_set.contains(i)));
            let max = eta.iter().copied().fold(0.0, f64::max);
            let band: Vec<usize> =
                (0..eta.len()).filter(|&i| rho * theta * max <= eta[i] && eta[i] != theta * max).collect();
            let mut union = m.h_set.clone();
            union.extend(&m.p_set);
            union.sort_unstable();
            prop_assert_eq!(union, band);
        }

        #[test]
        fn hp_limits(eta in field(), theta in 0.0f64..=1.0, rho in 0.0f64..=1.0) {
            prop_assert!(mark_hp(&eta, 1.0, rho).h_set.is_empty());
            prop_assert!(mark_hp(&eta, theta, 1.0).p_set.is_empty());
            let max = eta.iter().copied().fold(0.0, f64::max);
            let positive: Vec<usize> = (0..eta.len()).filter(|&i| eta[i] > 0.0).collect();
            prop_assert_eq!(mark_hp(&eta, 0.0, rho).h_set, positive);
            if max > 0.0 {
                prop_assert_eq!(mark_dorfler(&eta, 1.0).h_set.len(), eta.iter().filter(|&&e| e > 0.0).count());
            }
        }

        #[test]
        fn rules_ignore_scale(eta in field(), theta in 0.0f64..=1.0, rho in 0.0f64..=1.0, k in -20i32..20) {
            // powers of two keep every comparison exact
            let scale = 2f64.powi(k);
            let scaled: Vec<f64> = eta.iter().map(|e| e * scale).collect();
            prop_assert_eq!(mark_greedy(&eta, theta), mark_greedy(&scaled, theta));
            prop_assert_eq!(mark_dorfler(&eta, theta), mark_dorfler(&scaled, theta));
            prop_assert_eq!(mark_hp(&eta, theta, rho), mark_hp(&scaled, theta, rho));
        }
    }
}

use crng_core::access::{linear_extension, linear_extension_order, validate};
use crng_core::{AccessStructure, IdSet};
use proptest::prelude::*;

/// Encoder count, then one nonempty encoder mask per message, then one
/// nonempty message mask per decoder.
fn structure() -> impl Strategy<Value = (usize, Vec<u64>, Vec<u64>)> {
    (1usize..=4, 1usize..=6).prop_flat_map(|(ni, ns)| {
        (
            Just(ni),
            prop::collection::vec(1u64..(1 << ni), ns),
            prop::collection::vec(1u64..(1 << ns), 1..=3),
        )
    })
}

fn build(ni: usize, holders: &[u64], demands: &[u64]) -> AccessStructure {
    let msgs: Vec<String> = (0..holders.len()).map(|s| format!("m{s}")).collect();
    let encs: Vec<String> = (0..ni).map(|i| format!("e{i}")).collect();
    let decs: Vec<String> = (0..demands.len()).map(|j| format!("d{j}")).collect();
    let mut arcs = Vec::new();
    for (s, &mask) in holders.iter().enumerate() {
        for i in IdSet(mask).iter() {
            arcs.push((msgs[s].clone(), encs[i].clone()));
        }
    }
    let dem: Vec<(String, Vec<String>)> = demands
        .iter()
        .enumerate()
        .map(|(j, &mask)| (decs[j].clone(), IdSet(mask).iter().map(|s| msgs[s].clone()).collect()))
        .collect();
    AccessStructure::new(&msgs, &encs, &decs, &arcs, &dem).unwrap()
}

/// Messages whose holder set is exactly `group`, straight from the masks.
fn group_oracle(holders: &[u64], group: u64) -> IdSet {
    holders.iter().enumerate().filter(|(_, &m)| m == group).map(|(s, _)| s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lemmas_hold_on_random_structures((ni, holders, demands) in structure()) {
        let a = build(ni, &holders, &demands);
        let sorted = a.sorted_family();

        // keys are exactly the holder sets that occur; values partition S
        let mut keys: Vec<u64> = holders.clone();
        keys.sort();
        keys.dedup();
        let mut got: Vec<u64> = sorted.groups.iter().map(|g| g.0).collect();
        got.sort();
        prop_assert_eq!(&got, &keys);
        let mut covered = IdSet::EMPTY;
        for k in 0..sorted.len() {
            prop_assert_eq!(sorted.group_messages[k], group_oracle(&holders, sorted.groups[k].0));
            prop_assert!(covered.is_disjoint(sorted.group_messages[k]));
            covered = covered.union(sorted.group_messages[k]);
        }
        prop_assert_eq!(covered, IdSet::full(holders.len()));

        for k in 0..sorted.len() {
            for kp in 0..sorted.len() {
                if sorted.groups[k].is_strict_subset(sorted.groups[kp]) {
                    prop_assert!(kp < k, "superset placed after subset");
                }
            }
            let gk = sorted.groups[k];
            let upper: IdSet = keys.iter().filter(|&&g| IdSet(g) != gk && gk.is_subset(IdSet(g)))
                .flat_map(|&g| group_oracle(&holders, g).iter()).collect();
            let lower: IdSet = keys.iter().filter(|&&g| IdSet(g).is_subset(gk))
                .flat_map(|&g| group_oracle(&holders, g).iter()).collect();
            prop_assert_eq!(sorted.upper_closure(k).unwrap(), upper);
            prop_assert_eq!(sorted.lower_closure(k).unwrap(), lower);
            prop_assert!(sorted.group_messages[k].is_disjoint(upper));

            let common = gk.iter().fold(IdSet::full(holders.len()), |acc, i| {
                acc.intersection(a.messages_of_encoder(i).unwrap())
            });
            prop_assert_eq!(common, upper.union(sorted.group_messages[k]));

            for kp in 0..k {
                prop_assert!(sorted.group_messages[kp].is_disjoint(lower));
            }
        }
        for i in 0..ni {
            let assembled: IdSet = (0..sorted.len())
                .filter(|&k| sorted.groups[k].contains(i))
                .flat_map(|k| sorted.group_messages[k].iter())
                .collect();
            prop_assert_eq!(assembled, a.messages_of_encoder(i).unwrap());
        }
        prop_assert!(validate(&sorted, &a).all_passed());
    }

    #[test]
    fn linear_extension_on_random_families(masks in prop::collection::btree_set(1u64..64, 1..20)) {
        let family: Vec<IdSet> = masks.iter().map(|&m| IdSet(m)).collect();
        let order = linear_extension_order(&family, 6);
        let mut seen = order.clone();
        seen.sort();
        prop_assert_eq!(seen, (0..family.len()).collect::<Vec<_>>());
        let out = linear_extension(&family, 6);
        for k in 0..out.len() {
            for kp in 0..out.len() {
                if out[k].is_strict_subset(out[kp]) {
                    prop_assert!(kp < k);
                }
            }
            if k > 0 {
                prop_assert!(out[k - 1].len() >= out[k].len());
            }
        }
    }

    #[test]
    fn moving_a_message_is_detected((ni, holders, demands) in structure()) {
        let a = build(ni, &holders, &demands);
        let mut sorted = a.sorted_family();
        prop_assume!(sorted.len() >= 2);
        let from = (0..sorted.len()).find(|&k| !sorted.group_messages[k].is_empty()).unwrap();
        let to = (from + 1) % sorted.len();
        let s = sorted.group_messages[from].iter().next().unwrap();
        sorted.group_messages[from].remove(s);
        sorted.group_messages[to].insert(s);
        let report = validate(&sorted, &a);
        let l1 = report.get("lemma1-cover").unwrap();
        let l2 = report.get("lemma2-disjoint").unwrap();
        prop_assert!(!l1.passed || !l2.passed);
    }
}

use crng_core::access::SortedFamily;
use crng_core::prob::{
    build_joint_z, check_markov, refactorize, ConditionalKernel, FiniteDist, GroupKernel, JointSourceSpec,
};
use crng_core::{AccessStructure, IdSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_structure(rng: &mut ChaCha8Rng) -> AccessStructure {
    let ni = rng.gen_range(1..=3);
    let ns = rng.gen_range(1..=4);
    let msgs: Vec<String> = (0..ns).map(|s| format!("m{s}")).collect();
    let encs: Vec<String> = (0..ni).map(|i| format!("e{i}")).collect();
    let mut arcs = Vec::new();
    for m in &msgs {
        let mask: u64 = rng.gen_range(1..(1u64 << ni));
        for i in IdSet(mask).iter() {
            arcs.push((m.clone(), encs[i].clone()));
        }
    }
    let demands = vec![("d".to_string(), msgs.clone())];
    AccessStructure::new(&msgs, &encs, &["d".to_string()], &arcs, &demands).unwrap()
}

fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen::<f64>() }).collect();
    if row.iter().all(|&x| x == 0.0) {
        row[0] = 1.0;
    }
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= s);
    row
}

fn random_source(rng: &mut ChaCha8Rng, sorted: &SortedFamily, ns: usize) -> JointSourceSpec {
    let alphabets: Vec<usize> = (0..ns).map(|_| rng.gen_range(2..=3)).collect();
    let card = |s: IdSet| s.iter().map(|m| alphabets[m]).collect::<Vec<_>>();
    let groups = (0..sorted.len())
        .map(|k| {
            let ins = card(sorted.upper_closure[k]);
            let outs = card(sorted.group_messages[k]);
            let rows = (0..ins.iter().product::<usize>()).map(|_| random_row(rng, outs.iter().product())).collect();
            GroupKernel {
                encoders: sorted.groups[k],
                messages: sorted.group_messages[k],
                conditioning: sorted.upper_closure[k],
                kernel: ConditionalKernel::new(ins, outs, rows).unwrap(),
            }
        })
        .collect();
    JointSourceSpec { alphabets, groups }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn factorized_sources_pass_markov(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_structure(&mut rng);
        let sorted = a.sorted_family();
        let spec = random_source(&mut rng, &sorted, a.num_messages());
        let joint = build_joint_z(&spec, &sorted).unwrap();
        let report = check_markov(&joint, &a, &sorted, 1e-9).unwrap();
        prop_assert!(report.all_passed(), "{:?}", report.failures().collect::<Vec<_>>());
    }

    #[test]
    fn markov_joints_refactorize(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_structure(&mut rng);
        let sorted = a.sorted_family();
        let spec = random_source(&mut rng, &sorted, a.num_messages());
        let joint = build_joint_z(&spec, &sorted).unwrap();
        prop_assume!(check_markov(&joint, &a, &sorted, 1e-9).unwrap().all_passed());
        let back = refactorize(&joint, &sorted).unwrap();
        let rebuilt = build_joint_z(&back, &sorted).unwrap();
        prop_assert!(joint.total_variation(&rebuilt).unwrap() <= 1e-9);
    }

    #[test]
    fn joint_is_order_free(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_structure(&mut rng);
        let sorted = a.sorted_family();
        let spec = random_source(&mut rng, &sorted, a.num_messages());
        let joint = build_joint_z(&spec, &sorted).unwrap();
        // another linear extension: stable sort by decreasing size after reversing
        let mut idx: Vec<usize> = (0..sorted.len()).rev().collect();
        idx.sort_by_key(|&k| std::cmp::Reverse(sorted.groups[k].len()));
        let other = SortedFamily::from_groups(
            idx.iter().map(|&k| sorted.groups[k]).collect(),
            idx.iter().map(|&k| sorted.group_messages[k]).collect(),
        );
        let joint2 = build_joint_z(&spec, &other).unwrap();
        for (p, q) in joint.probs().iter().zip(joint2.probs()) {
            prop_assert!((p - q).abs() <= 1e-12);
        }
    }

    #[test]
    fn chain_rule(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cards: Vec<usize> = (0..3).map(|_| rng.gen_range(2..=3)).collect();
        let probs = random_row(&mut rng, cards.iter().product());
        let d = FiniteDist::new(cards, probs).unwrap();
        let lhs = d.conditional_entropy(&[0, 1], &[2]).unwrap();
        let rhs = d.conditional_entropy(&[0], &[2]).unwrap() + d.conditional_entropy(&[1], &[0, 2]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }
}

#[test]
fn dependent_private_message_fails_markov() {
    // one encoder holds 1 and 12, the other holds 2 and 12; make 1 and 2 equal
    let a = crng_core::access::catalog::two_user_common();
    let sorted = a.sorted_family();
    let mut probs = vec![0.0; 8];
    for z1 in 0..2 {
        for z12 in 0..2 {
            // factor order is message id order: 1, 2, 12
            probs[z1 * 4 + z1 * 2 + z12] = 0.25;
        }
    }
    let joint = FiniteDist::new(vec![2, 2, 2], probs).unwrap();
    assert!(!check_markov(&joint, &a, &sorted, 1e-9).unwrap().all_passed());
}

use std::collections::HashSet;

use crng_core::field::{Field, FunctionPair, LinearMap, StorageKind};
use crng_core::hash::{hash_alpha_beta, Ensemble, HashEnsembleSpec};
use num_rational::Ratio;
use proptest::prelude::*;

fn field() -> impl Strategy<Value = Field> {
    prop::sample::select(vec![2u16, 3, 5, 7]).prop_map(|q| Field::new(q).unwrap())
}

fn map_and_vectors() -> impl Strategy<Value = (LinearMap, Vec<u16>, Vec<u16>)> {
    (field(), 0usize..=4, 1usize..=6).prop_flat_map(|(f, rows, cols)| {
        let q = f.order();
        (
            prop::collection::vec(0..q, rows * cols),
            prop::collection::vec(0..q, cols),
            prop::collection::vec(0..q, cols),
            any::<bool>(),
        )
            .prop_map(move |(data, u, v, sparse)| {
                let kind = if sparse { StorageKind::Sparse } else { StorageKind::Dense };
                (LinearMap::from_data(f, rows, cols, data, kind).unwrap(), u, v)
            })
    })
}

/// Plain matrix-vector product mod q.
fn oracle_apply(m: &LinearMap, v: &[u16]) -> Vec<u16> {
    let q = m.field().order() as u32;
    (0..m.rows())
        .map(|r| ((0..m.cols()).map(|c| m.entry(r, c) as u32 * v[c] as u32).sum::<u32>() % q) as u16)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn apply_is_linear((m, u, v) in map_and_vectors()) {
        let f = m.field();
        let lhs = m.apply(&f.add_vec(&u, &v)).unwrap();
        let rhs = f.add_vec(&m.apply(&u).unwrap(), &m.apply(&v).unwrap());
        prop_assert_eq!(&lhs, &rhs);
        prop_assert_eq!(m.apply(&u).unwrap(), oracle_apply(&m, &u));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_nullity((m, u, _v) in map_and_vectors()) {
        let f = m.field();
        let space = (f.order() as u64).pow(m.cols() as u32);
        let image: HashSet<Vec<u16>> = f.all_vectors(m.cols()).unwrap().map(|z| oracle_apply(&m, &z)).collect();
        prop_assert_eq!(image.len() as u64, m.image_indices().unwrap().len() as u64);
        let c = oracle_apply(&m, &u);
        let members: Vec<Vec<u16>> = m.coset_members(&c).unwrap().collect();
        prop_assert_eq!(members.len() as u64 * image.len() as u64, space);
        for z in &members {
            prop_assert_eq!(&oracle_apply(&m, z), &c);
        }
        // a value outside the image has an empty coset
        if (image.len() as u64) < (f.order() as u64).pow(m.rows() as u32) {
            let outside = f.all_vectors(m.rows()).unwrap().find(|c| !image.contains(c)).unwrap();
            prop_assert!(m.coset(&outside).unwrap().is_none());
            prop_assert_eq!(m.coset_members(&outside).unwrap().count(), 0);
        }
    }

    #[test]
    fn joint_cosets_partition_the_space(
        (fm, _u, _v) in map_and_vectors(),
        g_rows in 0usize..=3,
        seed in any::<u64>(),
    ) {
        prop_assume!(fm.rows() <= fm.cols() && g_rows <= fm.cols());
        let f = fm.field();
        let cols = fm.cols();
        let q = f.order() as u64;
        let data: Vec<u16> = (0..g_rows * cols).map(|i| ((seed >> (i % 60)) % q) as u16).collect();
        let g = LinearMap::from_data(f, g_rows, cols, data, StorageKind::Dense).unwrap();
        let pair = FunctionPair::new(fm.clone(), g.clone()).unwrap();
        let mut seen = HashSet::new();
        for c in f.all_vectors(fm.rows()).unwrap() {
            for m in f.all_vectors(g_rows).unwrap() {
                for z in pair.joint_coset_members(&c, &m).unwrap() {
                    prop_assert_eq!(&oracle_apply(&fm, &z), &c);
                    prop_assert_eq!(&oracle_apply(&g, &z), &m);
                    prop_assert!(seen.insert(z), "vector in two joint cosets");
                }
            }
        }
        prop_assert_eq!(seen.len() as u64, q.pow(cols as u32));
    }
}

#[test]
fn uniform_ensembles_are_ideal() {
    for q in [2u16, 3] {
        let f = Field::new(q).unwrap();
        for rows in 0..=3usize {
            for cols in 1..=4usize {
                if rows > cols || (q == 3 && rows * cols > 8) {
                    continue;
                }
                let spec = HashEnsembleSpec::uniform(f, rows, cols);
                let m = hash_alpha_beta(&spec).unwrap();
                assert_eq!(m.alpha, Ratio::from_integer(1), "q={q} {rows}x{cols}");
                assert_eq!(m.beta, Ratio::from_integer(0), "q={q} {rows}x{cols}");
                let ens = Ensemble::from_spec(&spec).unwrap();
                let z = f.vector_at(0, cols);
                for idx in 1..(q as u64).pow(cols as u32) {
                    let zp = f.vector_at(idx, cols);
                    assert_eq!(
                        ens.collision_probability(&z, &zp).unwrap(),
                        Ratio::new(1, (q as u64).pow(rows as u32))
                    );
                }
            }
        }
    }
}

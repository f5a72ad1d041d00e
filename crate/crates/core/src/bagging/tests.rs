use super::*;
use crate::testutil::{cat_table, modulo_table};

fn fig1_table() -> InstanceTable {
    // (F1, F2, F3) for i1..i9; F1,F2 groups: {i1,i2,i3}, {i4,i5}, {i6,i8,i9}, {i7}
    let rows = vec![
        vec![0, 0, 0],
        vec![0, 0, 1],
        vec![0, 0, 0],
        vec![0, 1, 1],
        vec![0, 1, 0],
        vec![1, 0, 1],
        vec![1, 1, 0],
        vec![1, 0, 0],
        vec![1, 0, 1],
    ];
    cat_table(&rows, &[1., 0., 1., 0., 0., 1., 1., 0., 0.])
}

fn member_sets(c: &BagCollection) -> Vec<Vec<usize>> {
    c.bags.iter().map(|b| b.members().to_vec()).collect()
}

#[test]
fn groups_example_table() {
    let t = fig1_table();
    let c = group_by_key(&t, &GroupingKey::new(vec![0, 1]).unwrap()).unwrap();
    assert_eq!(
        member_sets(&c),
        vec![vec![0, 1, 2], vec![3, 4], vec![5, 7, 8], vec![6]]
    );
    assert_eq!(c.bags[0].label_sum(), 2.0);
    assert_eq!(c.bags[3].label_sum(), 1.0);
}

#[test]
fn constant_column_gives_one_bag() {
    let t = modulo_table(7, 1);
    let c = group_by_key(&t, &GroupingKey::new(vec![0]).unwrap()).unwrap();
    assert_eq!(c.len(), 1);
    assert_eq!(c.bags[0].len(), 7);
}

#[test]
fn distinct_column_gives_singletons() {
    let t = modulo_table(6, 6);
    let c = group_by_key(&t, &GroupingKey::new(vec![0]).unwrap()).unwrap();
    assert_eq!(c.sizes(), vec![1; 6]);
}

#[test]
fn key_validation() {
    assert!(GroupingKey::new(vec![]).is_err());
    assert!(GroupingKey::new(vec![0, 1, 2, 3]).is_err());
    assert!(GroupingKey::new(vec![1, 1]).is_err());
    let t = modulo_table(3, 2);
    assert!(group_by_key(&t, &GroupingKey::new(vec![1]).unwrap()).is_err());
}

#[test]
fn random_bags_exact_division() {
    let t = modulo_table(9, 3);
    let c = random_fixed_bags(&t, 3, 11).unwrap();
    assert_eq!(c.sizes(), vec![3, 3, 3]);
    assert_eq!(c.instances(), (0..9).collect::<Vec<_>>());
}

#[test]
fn random_bags_drop_remainder() {
    let t = modulo_table(10, 3);
    let c = random_fixed_bags(&t, 3, 5).unwrap();
    assert_eq!(c.len(), 10 / 3);
    let all = c.instances();
    assert_eq!(all.len(), 9);
    c.check_disjoint().unwrap();
}

#[test]
fn random_bags_deterministic_and_checked() {
    let t = modulo_table(20, 3);
    assert_eq!(random_fixed_bags(&t, 4, 9).unwrap(), random_fixed_bags(&t, 4, 9).unwrap());
    assert_ne!(random_fixed_bags(&t, 4, 9).unwrap(), random_fixed_bags(&t, 4, 10).unwrap());
    assert!(random_fixed_bags(&t, 21, 0).is_err());
    assert!(random_fixed_bags(&t, 0, 0).is_err());
}

#[test]
fn fixed_feature_single_group() {
    let t = modulo_table(4, 1);
    let c = fixed_size_feature_bags(&t, &GroupingKey::new(vec![0]).unwrap(), 2, 3).unwrap();
    assert_eq!(c.sizes(), vec![2, 2]);
    assert_eq!(c.instances(), vec![0, 1, 2, 3]);
}

#[test]
fn fixed_feature_aligned_groups() {
    let t = modulo_table(6, 2);
    let key = GroupingKey::new(vec![0]).unwrap();
    for seed in 0..20 {
        let c = fixed_size_feature_bags(&t, &key, 3, seed).unwrap();
        let mut sets = member_sets(&c);
        sets.sort();
        assert_eq!(sets, vec![vec![0, 2, 4], vec![1, 3, 5]]);
    }
}

#[test]
fn fixed_feature_q1_is_singletons() {
    let t = modulo_table(5, 2);
    let c = fixed_size_feature_bags(&t, &GroupingKey::new(vec![0]).unwrap(), 1, 0).unwrap();
    assert_eq!(c.sizes(), vec![1; 5]);
}

fn sized_collection(sizes: &[usize]) -> (InstanceTable, BagCollection) {
    let m: usize = sizes.iter().sum();
    let mut rows = Vec::with_capacity(m);
    for (g, &s) in sizes.iter().enumerate() {
        rows.extend(std::iter::repeat_n(vec![g as u32], s));
    }
    let t = cat_table(&rows, &vec![0.0; m]);
    let c = group_by_key(&t, &GroupingKey::new(vec![0]).unwrap()).unwrap();
    (t, c)
}

#[test]
fn filter_is_inclusive() {
    let (t, c) = sized_collection(&[49, 50, 2500, 2501]);
    let f = filter_bags(&c, 50, Some(2500)).unwrap();
    assert_eq!(f.sizes(), vec![50, 2500]);
    assert_eq!(f.filter, Some(FilterRecord { low: 50, high: Some(2500) }));
    let frac = retained_instance_fraction(&f, &t);
    assert!((frac - 2550.0 / 5100.0).abs() < 1e-15);
    assert!(passes_dataset_filter(&f, &t, 0.3));
}

#[test]
fn filter_identity_and_empty() {
    let (t, c) = sized_collection(&[1, 3, 4]);
    assert_eq!(filter_bags(&c, 1, None).unwrap().bags, c.bags);
    let e = filter_bags(&c, 10, Some(20)).unwrap();
    assert!(e.is_empty());
    assert_eq!(retained_instance_fraction(&e, &t), 0.0);
    assert!(!passes_dataset_filter(&e, &t, 0.3));
    assert!(filter_bags(&c, 5, Some(4)).is_err());
    assert_eq!(retained_instance_fraction(&c, &t), 1.0);
}

fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn candidate_key_counts() {
    assert_eq!(enumerate_candidate_keys(26, 2).unwrap().len(), 351);
    assert_eq!(enumerate_candidate_keys(17, 2).unwrap().len(), 153);
    assert_eq!(
        enumerate_candidate_keys(26, 3).unwrap().len(),
        351 + binom(26, 3)
    );
    assert_eq!(binom(26, 3), 2600);
}

#[test]
fn candidate_keys_order() {
    let keys = enumerate_candidate_keys(4, 2).unwrap();
    let cols: Vec<Vec<usize>> = keys.iter().map(|k| k.columns().to_vec()).collect();
    assert_eq!(
        cols,
        vec![
            vec![0], vec![1], vec![2], vec![3],
            vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]
        ]
    );
    assert_eq!(enumerate_candidate_keys(2, 3).unwrap().len(), 3);
    assert!(enumerate_candidate_keys(0, 2).is_err());
}

#[test]
fn bag_file_round_trip() {
    let t = fig1_table();
    let c = filter_bags(&group_by_key(&t, &GroupingKey::new(vec![0, 1]).unwrap()).unwrap(), 2, None)
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bags.jsonl");
    let mut buf = Vec::new();
    write_bag_file(&mut buf, &c, &t, Some("abc".into())).unwrap();
    std::fs::write(&path, &buf).unwrap();
    let (h, back) = read_bag_file(&path, &t).unwrap();
    assert_eq!(back, c);
    assert_eq!(h.m, 9);
    assert_eq!(h.config_hash.as_deref(), Some("abc"));

    let other = modulo_table(9, 2);
    assert!(matches!(read_bag_file(&path, &other), Err(Error::Provenance(_))));
}

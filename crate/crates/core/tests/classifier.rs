use std::collections::{BTreeMap, HashMap};

use caids::ca_engine::{Automaton, BinaryLattice, CaRule, DependencyMatrix};
use caids::classifier::*;
use caids::dataset;
use caids::ga_evolve::{Encoding, GaConfig};
use caids::seed;
use proptest::prelude::*;

fn quick_config(seed: u64, encoding: Encoding) -> TreeConfig {
    TreeConfig { ga: GaConfig { generations: 15, seed, encoding, ..GaConfig::default() }, ..TreeConfig::default() }
}

/// Attractor by plain iteration, without the engine's helpers.
fn oracle_attractor(automaton: &Automaton, state: u32, n: usize) -> u32 {
    let mut index = HashMap::new();
    let mut walk = vec![state];
    index.insert(state, 0usize);
    loop {
        let next = automaton.step_packed(*walk.last().unwrap(), n);
        if let Some(&i) = index.get(&next) {
            return *walk[i..].iter().min().unwrap();
        }
        index.insert(next, walk.len());
        walk.push(next);
    }
}

fn oracle_classify(node: &CaTreeNode, p: &PatternVector, n: usize) -> ClassId {
    match node {
        CaTreeNode::Leaf { class } => *class,
        CaTreeNode::Internal { automaton, majority, children } => {
            match children.get(&oracle_attractor(automaton, p.packed(), n)) {
                Some(child) => oracle_classify(child, p, n),
                None => *majority,
            }
        }
    }
}

#[test]
fn serialization_round_trips() {
    let data = dataset::two_cluster(80, 6, &mut seed::rng(3));
    for s in 0..6 {
        for encoding in [Encoding::Rule, Encoding::Matrix { n: 6 }] {
            let tree = build_tree(&data, &quick_config(s, encoding)).unwrap();
            let text = tree.serialize();
            let back = CaTree::parse(&text).unwrap();
            assert_eq!(back, tree);
            assert_eq!(back.serialize(), text);
        }
    }
}

#[test]
fn malformed_tree_text_is_rejected() {
    let good = "catree 1\nlattice 2\nclasses 2\ndepth_limit 4\nnodes 3\n0 rule 204 0 0:1 3:2\n1 leaf 0\n2 leaf 1\n";
    assert!(CaTree::parse(good).is_ok());
    let cases = [
        good.replace("catree 1", "catree 2"),
        good.replace("nodes 3", "nodes 4"),
        good.replace("3:2", "3:1"),
        good.replace("0:1 3:2", "0:1 3:0"),
        good.replace("rule 204", "rule 999"),
        good.replace("1 leaf 0\n", ""),
    ];
    for bad in cases {
        assert!(
            matches!(CaTree::parse(&bad), Err(ClassifierError::Format { .. })),
            "accepted:\n{bad}"
        );
    }
}

#[test]
fn classify_matches_offline_routing() {
    let data = dataset::two_cluster(100, 8, &mut seed::rng(8));
    let probe = dataset::two_cluster(200, 8, &mut seed::rng(9));
    for s in 0..4 {
        let tree = build_tree(&data, &quick_config(s, Encoding::Rule)).unwrap();
        for p in data.iter().chain(&probe) {
            assert_eq!(tree.classify(p).unwrap(), oracle_classify(&tree.root, p, 8));
        }
    }
}

#[test]
fn unseen_basin_falls_back_to_node_majority() {
    let mut children = BTreeMap::new();
    children.insert(0b00, CaTreeNode::Leaf { class: 1 });
    let tree = CaTree {
        root: CaTreeNode::Internal { automaton: Automaton::Rule(CaRule(204)), majority: 7, children },
        lattice_size: 2,
        depth_limit: 4,
        class_count: 8,
    };
    assert_eq!(tree.classify(&PatternVector::parse("00", None).unwrap()).unwrap(), 1);
    assert_eq!(tree.classify(&PatternVector::parse("01", None).unwrap()).unwrap(), 7);
    assert!(matches!(
        tree.classify(&PatternVector::parse("011", None).unwrap()),
        Err(ClassifierError::LengthMismatch { .. })
    ));
}

#[test]
fn training_rejects_bad_input() {
    let config = TreeConfig::default();
    assert!(matches!(build_tree(&[], &config), Err(ClassifierError::EmptyTrainingSet)));
    let mixed = vec![PatternVector::parse("0101", Some(0)).unwrap(), PatternVector::parse("011", Some(1)).unwrap()];
    assert!(build_tree(&mixed, &config).is_err());
    let unlabelled = vec![PatternVector::parse("0101", None).unwrap()];
    assert!(matches!(build_tree(&unlabelled, &config), Err(ClassifierError::Unlabelled(0))));
}

#[test]
fn separable_data_is_learned() {
    let data = dataset::two_cluster(200, 8, &mut seed::rng(1));
    let tree = build_tree(&data, &quick_config(0, Encoding::Rule)).unwrap();
    assert!(tree.accuracy(&data).unwrap() >= 0.9);
    assert!(tree.depth() <= TreeConfig::default().depth_limit);
}

#[test]
fn depth_limit_zero_gives_a_majority_leaf() {
    let mut data = dataset::two_cluster(30, 6, &mut seed::rng(2));
    data.push(PatternVector::parse("111111", Some(1)).unwrap());
    let config = TreeConfig { depth_limit: 0, ..quick_config(0, Encoding::Rule) };
    let tree = build_tree(&data, &config).unwrap();
    assert_eq!(tree.root, CaTreeNode::Leaf { class: 1 });
}

#[test]
fn matrix_trees_route_through_boolean_steps() {
    let rows = vec![vec![1, 0, 0], vec![1, 1, 0], vec![0, 0, 1]];
    let automaton = Automaton::Matrix(DependencyMatrix::new(rows).unwrap());
    let b = automaton.basins(3).unwrap();
    for s in 0..8 {
        assert_eq!(b.attractor_of(s), oracle_attractor(&automaton, s, 3));
    }
}

#[test]
fn thermometer_encoding() {
    let cuts = vec![vec![0.5], vec![1.0, 2.0, 3.0]];
    let p = encode_pattern(&[0.7, 2.0], &cuts).unwrap();
    assert_eq!(p.cells(), &BinaryLattice::parse("1110").unwrap());
    let p = encode_pattern(&[0.2, 0.0], &cuts).unwrap();
    assert_eq!(p.cells(), &BinaryLattice::parse("0000").unwrap());
    assert!(encode_pattern(&[0.2], &cuts).is_err());
    assert!(encode_pattern(&[0.2, 1.0], &[vec![0.5], vec![2.0, 1.0]]).is_err());
}

proptest! {
    #[test]
    fn relevance_index_is_majority_fraction(routed in prop::collection::vec((0u32..6, 0u32..3), 1..60)) {
        let d = BasinDistribution::from_routed(routed.iter().copied());
        let mut per_basin: BTreeMap<u32, BTreeMap<u32, usize>> = BTreeMap::new();
        for &(b, c) in &routed {
            *per_basin.entry(b).or_default().entry(c).or_default() += 1;
        }
        let majority: usize = per_basin.values().map(|h| *h.values().max().unwrap()).sum();
        let ri = d.relevance_index().unwrap();
        prop_assert!((ri - majority as f64 / routed.len() as f64).abs() < 1e-12);
        let all_pure = per_basin.values().all(|h| h.len() == 1);
        prop_assert_eq!(ri == 1.0, all_pure);
    }
}

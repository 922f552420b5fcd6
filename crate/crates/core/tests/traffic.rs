use std::collections::BTreeMap;

use proptest::prelude::*;
use vnfrep_core::topology::{annotate_gateways, parse_topology, Topology};
use vnfrep_core::traffic::{build_traffic, default_chain_template, gen_background, DemandClass};

const ANCHORS: [(&str, &str); 9] = [
    ("Denver", "SanFrancisco"),
    ("LosAngeles", "SanFrancisco"),
    ("SaltLakeCity", "SanFrancisco"),
    ("Dallas", "Tulsa"),
    ("Houston", "Tulsa"),
    ("KansasCity", "Tulsa"),
    ("Chicago", "Indianapolis"),
    ("Cleveland", "Indianapolis"),
    ("StLouis", "Indianapolis"),
];

fn janos() -> Topology {
    let text = std::fs::read_to_string(format!("{}/../../data/janos-us.txt", env!("CARGO_MANIFEST_DIR"))).unwrap();
    let topo = parse_topology(&text).unwrap();
    let anchors: BTreeMap<usize, usize> =
        ANCHORS.iter().map(|(s, p)| (topo.node_id(s).unwrap(), topo.node_id(p).unwrap())).collect();
    let s_nes: Vec<usize> = anchors.keys().copied().collect();
    annotate_gateways(&topo, &s_nes, &anchors).unwrap()
}

#[test]
fn janos_traffic_shape() {
    let topo = janos();
    let t = build_traffic(&topo, 1.0, 4.0, 7, &default_chain_template(), 10, 4.4).unwrap();
    assert_eq!(t.background.len(), 26 * 25);
    assert!(t.background.iter().all(|d| (1.0..=4.0).contains(&d.volume_gbps)));
    assert!(t.background.iter().all(|d| d.class == DemandClass::Background && d.src != d.dst));
    assert_eq!(t.chains.len(), 9);
    assert_eq!(t.chain_demands.len(), 90);
    let total: f64 = t.chain_demands.iter().map(|d| d.volume_gbps).sum();
    assert!((total - 396.0).abs() < 1e-9, "{total}");
    for c in &t.chains {
        let ds = t.chain_demands_of(c);
        assert_eq!(ds.len(), 10);
        assert!(ds.iter().all(|d| d.src == c.s_ne && d.dst == c.p_ne && d.chain_id == Some(c.id)));
    }
    let ids: Vec<usize> = t.all_demands().iter().map(|d| d.id).collect();
    assert_eq!(ids, (0..740).collect::<Vec<_>>());
}

#[test]
fn background_covers_every_ordered_pair_once() {
    let topo = janos();
    let bg = gen_background(&topo, 1.0, 4.0, 3).unwrap();
    let mut pairs: Vec<(usize, usize)> = bg.iter().map(|d| (d.src, d.dst)).collect();
    pairs.sort_unstable();
    pairs.dedup();
    assert_eq!(pairs.len(), 650);
}

#[test]
fn volumes_do_not_depend_on_roles() {
    let plain = parse_topology(&janos().to_native_text()).unwrap();
    let a = gen_background(&plain, 1.0, 4.0, 11).unwrap();
    let b = gen_background(&janos(), 1.0, 4.0, 11).unwrap();
    assert_eq!(a, b);
}

#[test]
fn seeds_change_the_draw() {
    let topo = janos();
    let a = gen_background(&topo, 1.0, 4.0, 1).unwrap();
    let b = gen_background(&topo, 1.0, 4.0, 2).unwrap();
    assert_ne!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_same_traffic(seed in any::<u64>(), low in 0.5f64..3.0, width in 0.0f64..5.0) {
        let topo = janos();
        let a = build_traffic(&topo, low, low + width, seed, &default_chain_template(), 3, 2.0).unwrap();
        let b = build_traffic(&topo, low, low + width, seed, &default_chain_template(), 3, 2.0).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.background.iter().all(|d| d.volume_gbps >= low && d.volume_gbps <= low + width));
    }
}

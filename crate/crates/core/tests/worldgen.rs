use iqarena::arbiter::run_life;
use iqarena::machine::TestConfig;
use iqarena::strategy::RandomStrategy;
use iqarena::worldgen::{
    build_manifest, generate_world_zero, is_interesting, mutate_world, mutated_states, reconstruct_world, Manifest,
    MANIFEST_VERSION,
};
use num_rational::Ratio;

const WORLD_ZERO_HASH: &str = "7632c0267ef8dcf388380e7a107d84d48f46a29b7e15d607a1f3db07289f5a0f";
const WORLD_ONE_HASH: &str = "f2496caa8504ca987bdb10813314f3d158b2e40cf255a318c84866ed62e37570";
const DESK_SEEDS: [u64; 20] = [
    15, 581, 1252, 1342, 1458, 1638, 2424, 2888, 3293, 3755, 4987, 5179, 5562, 5947, 6561, 7113, 7196, 7509, 8155,
    8618,
];
const DESK_MANIFEST_HASH: &str = "4beb524b88c669efcd24b753b924324ccc034d41536d5ce8a145443edd2f04a6";
const DESK_WORLD0_HASH: &str = "0c19c0b14cfe182dd914fbf2552fb073a849d8e8d75882abfa2e8b85f2e6e633";

fn desk_manifest() -> Manifest {
    let mut config = TestConfig::desk();
    config.world_count = 20;
    Manifest { config, format_version: MANIFEST_VERSION, batch: 0, prefix: vec![], seeds: DESK_SEEDS.to_vec() }
}

#[test]
fn frozen_tables() {
    let cfg = TestConfig::desk();
    let zero = generate_world_zero(&cfg);
    assert_eq!(zero.hash_hex(), WORLD_ZERO_HASH);
    assert_eq!(mutate_world(&zero, 1, &cfg).hash_hex(), WORLD_ONE_HASH);
    assert_eq!(mutated_states(1, &cfg), vec![1, 2, 3, 425, 611, 458, 754, 374, 955, 912, 539, 953, 116]);
}

#[test]
fn desk_manifest_prefix_and_identity() {
    let built = build_manifest(&TestConfig::desk(), 3).unwrap();
    assert_eq!(built.seeds, DESK_SEEDS[..3]);
    let m = desk_manifest();
    assert_eq!(m.hash_hex(), DESK_MANIFEST_HASH);
    assert_eq!(Manifest::parse(&m.to_text()).unwrap(), m);
    assert_eq!(reconstruct_world(&m, 0).unwrap().hash_hex(), DESK_WORLD0_HASH);
}

#[test]
fn every_desk_world_is_interesting() {
    let m = desk_manifest();
    for (i, table) in m.worlds().enumerate() {
        let (ok, stats) = is_interesting(&table, &m.config).unwrap();
        assert!(ok, "world {i}: {stats:?}");
        assert!(stats.victories >= 1 && stats.losses + stats.utility_losses >= 1);
        assert!(stats.utility_results() <= 10 && !stats.blind_alley);
    }
}

#[test]
fn frozen_probe_life() {
    let m = desk_manifest();
    let t0 = reconstruct_world(&m, 0).unwrap();
    let r = run_life(&t0, &mut RandomStrategy::new(1, &m.config), &m.config).unwrap();
    assert_eq!(r.success(), Ratio::new(47, 50));
    let t = r.tally();
    assert_eq!((t.victories, t.losses, t.draws), (47, 3, 0));
}

#[test]
fn rejected_counters_are_skipped() {
    // Counters between accepted seeds were tried and rejected; 14 of them
    // precede the first world.
    let cfg = TestConfig::desk();
    let zero = generate_world_zero(&cfg);
    for c in [1, 2, 7, 14] {
        assert!(!is_interesting(&mutate_world(&zero, c, &cfg), &cfg).unwrap().0);
    }
    assert!(is_interesting(&mutate_world(&zero, 15, &cfg), &cfg).unwrap().0);
}

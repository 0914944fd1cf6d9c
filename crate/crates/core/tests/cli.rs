use std::path::Path;
use std::process::{Command, Output};

use iqarena::harness::{local_iq, StrategySpec};
use iqarena::worldgen::{reconstruct_world, Manifest};

const TOY_CONFIG: &str = "\
# small enough for a quick test
n=1
m=2
k=4,5,4
num_states=40
steps_per_move=200
moves_per_game=20
games_per_life=10
world_count=3
";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iqarena")).args(args).output().unwrap()
}

fn gen_manifest(dir: &Path) -> String {
    let conf = dir.join("toy.conf");
    std::fs::write(&conf, TOY_CONFIG).unwrap();
    let out = dir.join("toy.manifest");
    let o = run(&["gen", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.to_str().unwrap().to_string()
}

#[test]
fn gen_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = gen_manifest(dir.path());
    let manifest = Manifest::parse(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest.len(), 3);

    let report = dir.path().join("report.txt");
    let o = run(&["eval", "--manifest", &manifest_path, "--builtin", "random", "--seed", "4", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let expected = local_iq(&manifest, &StrategySpec::Random { seed: 4 }).unwrap().to_text();
    assert_eq!(std::fs::read_to_string(&report).unwrap(), expected);
    assert!(String::from_utf8_lossy(&o.stdout).contains("local_iq="));
}

#[test]
fn gen_count_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("toy.conf");
    std::fs::write(&conf, TOY_CONFIG).unwrap();
    let out = dir.path().join("m");
    let o = run(&["gen", "--config", conf.to_str().unwrap(), "--count", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let m = Manifest::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!((m.len(), m.config.world_count), (2, 2));
}

#[test]
fn followup_batch_report() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = gen_manifest(dir.path());
    let report = dir.path().join("r1.txt");
    let o = run(&[
        "eval", "--manifest", &manifest_path, "--builtin", "random", "--batch", "1", "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.lines().next().unwrap().ends_with(" batch=1"));
    assert_eq!(text.lines().filter(|l| l.starts_with("world=")).count(), 3);
}

#[test]
fn disqualified_majority_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = gen_manifest(dir.path());
    let report = dir.path().join("r.txt");
    let o = run(&["eval", "--manifest", &manifest_path, "--exec", "while read l; do echo nonsense; done", "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(std::fs::read_to_string(&report).unwrap().contains("verdict=false"));
}

#[test]
fn harness_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let o = run(&["eval", "--manifest", missing.to_str().unwrap(), "--builtin", "random", "--report", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    let manifest_path = gen_manifest(dir.path());
    let o = run(&["eval", "--manifest", &manifest_path, "--report", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["eval", "--manifest", &manifest_path, "--exec", "/no/such/candidate", "--report", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["inspect", "--manifest", &manifest_path, "--world", "3", "--hash"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn inspect_modes() {
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = gen_manifest(dir.path());
    let manifest = Manifest::parse(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    let table = reconstruct_world(&manifest, 1).unwrap();

    let o = run(&["inspect", "--manifest", &manifest_path, "--world", "1", "--hash"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), table.hash_hex());

    let o = run(&["inspect", "--manifest", &manifest_path, "--world", "1", "--dump"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout), table.dump());

    let o = run(&["inspect", "--manifest", &manifest_path, "--world", "1", "--replay", "--builtin", "random", "--seed", "2"]);
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("success="), "{last}");
    assert!(out.lines().next().unwrap().starts_with("game=0 moment=0 action="));
}

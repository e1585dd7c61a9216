use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn caids(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_caids")).args(args).output().expect("spawn caids")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write_scenario(dir: &Path, body: &str) -> String {
    let p = dir.join("s.scn");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "node_count = 15\narea_side = 150\nradio_range = 70\nenergy_init = uniform:300:600\n\
threshold = 10\nticks = 60\nseed = 4\nga_generations = 5\ntrain_size = 40\n";

fn two_class_file(dir: &Path) -> String {
    let mut body = String::from("# two classes split on the first two bits\n");
    for i in 0..40u32 {
        let class = i % 2;
        let prefix = if class == 1 { "11" } else { "00" };
        body.push_str(&format!("{prefix}{:06b} {class}\n", (i * 37) % 64));
    }
    let p = dir.join("patterns.txt");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn basins_of_identity_rule_lists_singletons() {
    let out = caids(&["basins", "--rule", "204", "--n", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("basin_count = 8"));
    let rows: Vec<&str> = text.lines().filter(|l| l.starts_with("basin ")).collect();
    assert_eq!(rows.len(), 8);
    for (s, row) in rows.iter().enumerate() {
        let bits = format!("{s:03b}");
        assert_eq!(*row, format!("basin {bits} cycle 1 size 1: {bits}"));
    }
}

#[test]
fn basins_rejects_large_lattice() {
    let out = caids(&["basins", "--rule", "30", "--n", "17"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[lattice_too_large]:"), "{err}");
}

#[test]
fn train_single_class_is_a_leaf() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("one.txt");
    fs::write(&p, "0101 1\n0111 1\n1100 1\n").unwrap();
    let out = caids(&["train", p.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("training_accuracy = 1.000000"));
    assert!(text.contains("depth = 0"));
    assert!(text.contains("0 leaf 1"));
}

#[test]
fn train_is_repeatable_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let patterns = two_class_file(dir.path());
    let a = dir.path().join("a.tree");
    let b = dir.path().join("b.tree");
    for t in [&a, &b] {
        let out = caids(&["train", &patterns, "--seed", "11", "--generations", "10", "--out", t.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let ta = fs::read(&a).unwrap();
    assert!(!ta.is_empty());
    assert_eq!(ta, fs::read(&b).unwrap());
}

#[test]
fn trained_tree_feeds_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), SMALL);
    let patterns = two_class_file(dir.path());
    let tree = dir.path().join("t.tree");
    assert!(caids(&["train", &patterns, "--out", tree.to_str().unwrap()]).status.success());
    let out_dir = dir.path().join("out");
    let out = caids(&["run", &scn, "--tree", tree.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("summary.txt").exists());
}

#[test]
fn malformed_pattern_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.txt");
    fs::write(&p, "0101 1\n01 0\n").unwrap();
    let out = caids(&["train", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("error[pattern_file]:"), "{err}");
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn run_prints_resolved_config_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = caids(&["run", &scn, "--mode", "spaid", "--ticks", "20", "--seed", "9", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let header: Vec<&str> = text.lines().take_while(|l| *l != "# end scenario").collect();
    assert!(header.contains(&"mode = spaid"));
    assert!(header.contains(&"ticks = 20"));
    assert!(header.contains(&"seed = 9"));
    // defaults the file omitted are spelled out
    assert!(header.contains(&"hop_radius = 1"));
    assert!(header.contains(&"monitor_drain = 10"));
    for f in ["trace.csv", "nodes.csv", "summary.txt", "series_spaid.csv", "scenario.txt"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let trace = fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 21);

    // the written scenario reproduces the run
    let again = dir.path().join("again");
    let out = caids(&["run", out_dir.join("scenario.txt").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(trace, fs::read_to_string(again.join("trace.csv")).unwrap());
}

#[test]
fn run_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = caids(&["run", &scn, "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for f in ["trace.csv", "nodes.csv", "summary.txt", "series_idfadnwca.csv", "scenario.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn compare_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write_scenario(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = caids(&["compare", &scn, "--seed", "1", "--seed", "2", "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for f in names {
        assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f:?}");
    }
    let report = fs::read_to_string(a.join("compare.txt")).unwrap();
    assert!(report.contains("seeds = 2"));
}

#[test]
fn scenario_errors_have_categories() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("", "missing_key"),
        ("node_count = 5\nfoo = 1\n", "parse"),
        ("node_count = five\n", "parse"),
        ("node_count = 5\nmember_drain = 4\nmonitor_drain = 2\n", "validation"),
    ];
    for (body, category) in cases {
        let scn = write_scenario(dir.path(), body);
        let out = caids(&["run", &scn, "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{body}");
        let err = stderr(&out);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with(&format!("error[{category}]:")), "{body}: {err}");
    }
}

#[test]
fn missing_file_and_bad_flags() {
    let out = caids(&["run", "/definitely/not/here.scn"]);
    assert!(stderr(&out).starts_with("error[io]:"));
    assert_eq!(out.status.code(), Some(1));

    let out = caids(&["run", "x.scn", "--mode", "fastest"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error[usage]:"), "{err}");
}

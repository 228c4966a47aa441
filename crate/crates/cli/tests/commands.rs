use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fhmm");

fn fhmm(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .env_remove("FHMM_CONFIG")
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = fhmm(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(p).unwrap()
}

/// The single data row of an evaluate table, keyed by column.
fn row(table: &str, key: &str) -> String {
    let lines: Vec<&str> = table.lines().filter(|l| !l.starts_with("##")).collect();
    let col = lines[0].split('\t').position(|c| c == key).unwrap();
    lines[1].split('\t').nth(col).unwrap().to_string()
}

fn small_sim(dir: &Path, extra: &[&str]) {
    let mut args = vec![
        "simulate", "--out-dir", "data", "--sim-founders", "3", "--loci", "60", "--samples", "20",
        "--reference-haplotypes", "40", "--switch-rate", "0.01", "--seed", "7",
    ];
    args.extend_from_slice(extra);
    ok(dir, &args);
}

#[test]
fn identity_channel_evaluates_to_zero() {
    let tmp = tempfile::tempdir().unwrap();
    small_sim(tmp.path(), &[]);
    let out = ok(tmp.path(), &["evaluate", "--truth", "data/truth.gen", "--genotypes", "data/observed.gen", "--map", "data/loci.map"]);
    let table = String::from_utf8(out.stdout).unwrap();
    assert_eq!(row(&table, "rate"), "0");
    assert_eq!(row(&table, "scored"), "1200");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    assert_eq!(fhmm(d, &["--help"]).status.code(), Some(0));
    assert_eq!(fhmm(d, &["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(fhmm(d, &["frobnicate"]).status.code(), Some(1));

    std::fs::write(d.join("bad.hap"), "#haplotypes=1 loci=3\nh0\t01x\n").unwrap();
    let out = fhmm(d, &["train", "--panel", "bad.hap", "--founders", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8(out.stderr).unwrap();
    assert!(msg.contains("bad.hap:2: symbol 3"), "{msg}");

    std::fs::write(d.join("ok.hap"), "#haplotypes=2 loci=3\nh0\t011\nh1\t010\n").unwrap();
    let out = fhmm(d, &["train", "--panel", "ok.hap", "--founders", "2", "--out", "missing/dir/m.model"]);
    assert_eq!(out.status.code(), Some(2));
    let out = fhmm(d, &["train", "--panel", "ok.hap", "--founders", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_config_file_and_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("ok.hap"), "#haplotypes=3 loci=4\nh0\t0110\nh1\t0100\nh2\t1101\n").unwrap();
    std::fs::write(d.join("c.toml"), "founders = 3\nmax_iterations = 4\n").unwrap();
    let header = |out: Output| String::from_utf8(out.stdout).unwrap().lines().next().unwrap().to_string();
    let from_file = ok(d, &["train", "--panel", "ok.hap", "--config", "c.toml"]);
    assert!(header(from_file).contains("founders=3"));
    let from_flag = ok(d, &["train", "--panel", "ok.hap", "--config", "c.toml", "--founders", "2"]);
    assert!(header(from_flag).contains("founders=2"));
    let from_env = Command::new(BIN)
        .current_dir(d)
        .env("FHMM_CONFIG", "c.toml")
        .args(["train", "--panel", "ok.hap"])
        .output()
        .unwrap();
    let text = String::from_utf8(from_env.stdout).unwrap();
    assert!(text.contains("##max_iterations=4"), "{text}");
    std::fs::write(d.join("bad.toml"), "founder = 3\n").unwrap();
    assert_eq!(fhmm(d, &["train", "--panel", "ok.hap", "--config", "bad.toml"]).status.code(), Some(1));
}

#[test]
fn naive_and_trie_outputs_are_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_sim(d, &["--error-rate", "0.02", "--missing-rate", "0.02", "--mask-fraction", "0.1"]);
    let common = [
        "pipeline", "--panel", "data/reference.hap", "--genotypes", "data/observed.gen", "--map", "data/loci.map",
        "--founders", "3", "--timing-log",
    ];
    let mut a = common.to_vec();
    a.extend(["a.log", "--out", "a.tsv", "--repaired", "a.gen"]);
    let mut b = common.to_vec();
    b.extend(["b.log", "--out", "b.tsv", "--repaired", "b.gen", "--naive"]);
    ok(d, &a);
    ok(d, &b);
    assert_eq!(read(d.join("a.tsv")), read(d.join("b.tsv")));
    assert_eq!(read(d.join("a.gen")), read(d.join("b.gen")));
    assert!(read(d.join("a.log")).lines().any(|l| l.starts_with("impute\t")));

    ok(d, &["train", "--panel", "data/reference.hap", "--founders", "3", "--out", "full.model"]);
    for cmd in ["detect", "recover"] {
        let trie = ok(d, &[cmd, "--model", "full.model", "--genotypes", "data/truth.gen"]);
        let naive = ok(d, &[cmd, "--model", "full.model", "--genotypes", "data/truth.gen", "--naive"]);
        assert_eq!(trie.stdout, naive.stdout, "{cmd}");
    }
}

#[test]
fn serial_reruns_are_byte_identical() {
    let runs: Vec<Vec<String>> = (0..2)
        .map(|_| {
            let tmp = tempfile::tempdir().unwrap();
            let d = tmp.path();
            small_sim(d, &["--error-rate", "0.01", "--missing-rate", "0.01", "--mask-fraction", "0.1"]);
            ok(d, &["--threads", "1", "pipeline", "--panel", "data/reference.hap", "--genotypes", "data/observed.gen",
                "--map", "data/loci.map", "--founders", "3", "--out", "imp.tsv", "--timing-log", "t.log"]);
            ok(d, &["--threads", "1", "sweep", "--founders", "2,3", "--panels", "20,40", "--modes", "imp",
                "--sim-founders", "3", "--loci", "50", "--samples", "10", "--repetitions", "1", "--out", "sweep.tsv",
                "--plot", "sweep.dat", "--timing-log", "s.log"]);
            ["data/observed.gen", "data/truth.gen", "data/errors.tsv", "data/loci.map", "imp.tsv", "sweep.tsv", "sweep.dat"]
                .iter()
                .map(|f| read(d.join(f)))
                .collect()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0][5].lines().filter(|l| l.ends_with("\tok")).count() == 4);
}

#[test]
fn detect_correct_and_score() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_sim(d, &["--error-rate", "0.02"]);
    ok(d, &["train", "--panel", "data/reference.hap", "--founders", "3", "--out", "m.model"]);
    ok(d, &["detect", "--model", "m.model", "--genotypes", "data/observed.gen", "--map", "data/loci.map", "--out", "r.tsv"]);
    ok(d, &["correct", "--genotypes", "data/observed.gen", "--report", "r.tsv", "--map", "data/loci.map", "--out", "fixed.gen"]);
    let score = |g: &str| {
        let out = ok(d, &["evaluate", "--truth", "data/truth.gen", "--genotypes", g, "--map", "data/loci.map"]);
        row(&String::from_utf8(out.stdout).unwrap(), "discordant").parse::<usize>().unwrap()
    };
    assert!(score("fixed.gen") < score("data/observed.gen"));
    let out = ok(d, &["evaluate", "--detections", "r.tsv", "--injected", "data/errors.tsv", "--json"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["command"], "evaluate");
    assert!(doc["records"][0]["true_positives"].as_u64().unwrap() > 0);
}

#[test]
fn phase_and_impute_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    small_sim(d, &["--mask-fraction", "0.1"]);
    ok(d, &["train", "--panel", "data/founders.hap", "--founders", "3", "--out", "m.model"]);
    ok(d, &["phase", "--model", "m.model", "--genotypes", "data/truth.gen", "--out", "p.hap", "--paths", "p.tsv"]);
    let hap = read(d.join("p.hap"));
    assert!(hap.starts_with("#haplotypes=40 loci=60\n"));
    assert!(hap.contains("S1_a\t") && hap.contains("S1_b\t"));
    assert_eq!(read(d.join("p.tsv")).lines().filter(|l| !l.starts_with("##")).count(), 21);

    let out = ok(d, &["impute", "--panel", "data/reference.hap", "--genotypes", "data/observed.gen", "--map",
        "data/loci.map", "--founders", "3", "--flank", "10", "--json"]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["flank"], "10");
    assert_eq!(doc["records"].as_array().unwrap().len(), 6 * 20);
}

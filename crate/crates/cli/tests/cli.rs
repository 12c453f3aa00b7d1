use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nn2logic::dataset::{LabeledDataset, SplitManifest};
use nn2logic::fixedpoint::FixedPointFormat;
use nn2logic::mlp::Mlp;
use nn2logic::netlist::RescaleShift;
use nn2logic::pipeline::direct_software_accuracy;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nn2logic"))
        .current_dir(dir)
        .env("NN2LOGIC_THREADS", "1")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Small dataset, trained weights and split in `dir`.
fn trained(dir: &Path) {
    ok(dir, &["synth", "--samples", "300", "--features", "5", "--informative", "3", "--seed", "4"]);
    ok(dir, &["train", "--data", "data.csv", "--seed", "4", "--config", "train.cfg"]);
}

fn with_train_config(dir: &Path) {
    fs::write(dir.join("train.cfg"), "hidden = 4\nepochs = 30\nlearning_rate = 0.01\n").unwrap();
}

const CONST_ZERO: &str = "aag 1 1 0 1 0\n2\n0\n";
const BUFFER: &str = "aag 1 1 0 1 0\n2\n2\n";
const INVERTER: &str = "aag 1 1 0 1 0\n2\n3\n";

#[test]
fn equiv_of_a_file_with_itself() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.aag"), BUFFER).unwrap();
    assert_eq!(ok(dir.path(), &["equiv", "x.aag", "x.aag"]), "EQUIVALENT\n");
}

#[test]
fn equiv_reports_a_counterexample() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("a.aag"), BUFFER).unwrap();
    fs::write(dir.path().join("b.aag"), INVERTER).unwrap();
    let out = run(dir.path(), &["equiv", "a.aag", "b.aag"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("NOT EQUIVALENT\ncounterexample: "), "{text}");
}

#[test]
fn sat_on_constant_zero() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("z.aag"), CONST_ZERO).unwrap();
    assert_eq!(ok(dir.path(), &["sat", "z.aag"]), "unsatisfiable\n");
    fs::write(dir.path().join("b.aag"), BUFFER).unwrap();
    assert_eq!(ok(dir.path(), &["sat", "b.aag", "--output", "0"]), "1\n");
}

#[test]
fn errors_are_one_line_and_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["equiv", "missing.aag", "missing.aag"][..],
        &["sat", "missing.aag"],
        &["evaluate", "missing.aag", "--data", "none.csv"],
        &["compile"],
        &["train", "--data", "none.csv"],
    ] {
        let out = run(dir.path(), args);
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with("error: ") && err.lines().count() == 1, "{args:?}: {err}");
    }
    fs::write(dir.path().join("bad.cfg"), "colour = red\n").unwrap();
    assert!(!run(dir.path(), &["--config", "bad.cfg", "sat", "x.aag"]).status.success());
}

#[test]
fn direct_compile_reproduces_quantized_forward_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    with_train_config(d);
    trained(d);
    ok(d, &["compile", "--data", "data.csv", "--bits", "8", "--frac", "6"]);
    let report = ok(d, &["evaluate", "circuit.aag", "--data", "data.csv", "--split", "split.txt"]);
    let counts = report
        .lines()
        .find_map(|l| l.strip_prefix("accuracy: "))
        .and_then(|l| l.split_once('(').map(|(_, r)| r.trim_end_matches(')').to_string()))
        .expect("accuracy line");
    let (correct, total) = counts.split_once('/').unwrap();
    let (correct, total): (usize, usize) = (correct.parse().unwrap(), total.parse().unwrap());

    let data = LabeledDataset::read_csv(d.join("data.csv")).unwrap();
    let split = SplitManifest::from_text(&fs::read_to_string(d.join("split.txt")).unwrap()).unwrap();
    let test = data.subset(&split.test).unwrap();
    let net = Mlp::load(d.join("weights.txt")).unwrap();
    let fmt = FixedPointFormat::new(8, 6).unwrap();
    let software = direct_software_accuracy(&net, &test, fmt, RescaleShift::TwiceFractional).unwrap();
    assert_eq!(total, test.len());
    assert_eq!(correct as f64 / total as f64, software);
}

#[test]
fn identical_configs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    with_train_config(d);
    trained(d);
    fs::write(d.join("rf.cfg"), "pipeline = rf\nbits = 4\nfrac = 2\nrf.depth = 4\nrf.estimators = 2\nseed = 9\n").unwrap();
    for out in ["one", "two"] {
        ok(d, &["--config", "rf.cfg", "--out", out, "compile", "--data", "data.csv", "--weights", "weights.txt", "--split", "split.txt"]);
        ok(d, &["--out", out, "report", &format!("{out}/circuit.aag"), "--name", "net"]);
    }
    for file in ["circuit.aag", "models.txt", "net.report.txt"] {
        assert_eq!(
            fs::read(d.join("one").join(file)).unwrap(),
            fs::read(d.join("two").join(file)).unwrap(),
            "{file}"
        );
    }
    let report = fs::read_to_string(d.join("one/net.report.txt")).unwrap();
    assert!(report.starts_with("Logic Report: net\n"));
    // flags override the config file
    ok(d, &["--config", "rf.cfg", "--pipeline", "logicnet", "--out", "lgn", "compile", "--data", "data.csv", "--weights", "weights.txt", "--split", "split.txt"]);
    let models = fs::read_to_string(d.join("lgn/models.txt")).unwrap();
    assert!(models.contains("logicnet depth="), "{}", &models[..200.min(models.len())]);
}

#[test]
fn sweep_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    with_train_config(d);
    trained(d);
    fs::write(
        d.join("grid.cfg"),
        "bits = 4\nfrac = 2\nsweep.pipelines = direct, rf, logicnet\nsweep.rf.depths = 2, 3\nsweep.rf.estimators = 1\nsweep.lgn.depths = 2\nsweep.lgn.widths = 6\nsweep.lgn.luts = 3\n",
    )
    .unwrap();
    let table = ok(d, &["--config", "grid.cfg", "sweep", "--data", "data.csv"]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "pipeline,total_bits,fractional_bits,settings,aig_nodes,aig_levels,accuracy");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("direct,4,2,"));
    assert!(lines[2].starts_with("rf,4,2,\"depth=2 estimators=1\","));
    assert!(lines[4].starts_with("logicnet,4,2,"));
    assert_eq!(fs::read_to_string(d.join("sweep.csv")).unwrap(), table);
}

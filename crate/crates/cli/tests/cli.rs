use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn combu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_combu"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_writes_csvs_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let out = combu(&[
        "generate",
        "gs",
        "--n",
        "5000",
        "--seed",
        "7",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let train = fs::read_to_string(dir.path().join("gs_train.csv")).unwrap();
    let test = fs::read_to_string(dir.path().join("gs_test.csv")).unwrap();
    assert_eq!(train.lines().count(), 4001);
    assert_eq!(test.lines().count(), 1001);
    assert_eq!(train.lines().next().unwrap(), "x1,x2,x3,x4,x5,x6,x7,x8,v,f");
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["n_train"], 4000);
    assert_eq!(
        meta["preprocessor"]["features"].as_array().unwrap().len(),
        9
    );
    assert!(meta["bin_edges"].is_null());
}

#[test]
fn generate_with_bins_records_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = combu(&[
        "generate",
        "ar",
        "--n",
        "500",
        "--bins",
        "4",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["bin_edges"].as_array().unwrap().len(), 3);
}

#[test]
fn compile_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let expr = dir.path().join("expr.sexp");
    let bounds = dir.path().join("bounds.json");
    let net = dir.path().join("net.json");
    fs::write(
        &expr,
        "; x1^2 / x2\n(sum (term 2.0 (pow x1 2) (pow x2 -1)))\n",
    )
    .unwrap();
    fs::write(&bounds, r#"{"x1":{"lo":1,"hi":10},"x2":{"lo":1,"hi":10}}"#).unwrap();
    let out = combu(&[
        "compile",
        s(&expr),
        "--bounds",
        s(&bounds),
        "--out",
        s(&net),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = combu(&["verify", s(&net), s(&expr), "--bounds", s(&bounds)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["max_error"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["samples"], 10_000);
}

#[test]
fn verify_flags_a_mismatched_network() {
    let dir = tempfile::tempdir().unwrap();
    let expr = dir.path().join("e.sexp");
    let other = dir.path().join("o.sexp");
    let bounds = dir.path().join("b.json");
    let net = dir.path().join("n.json");
    fs::write(&expr, "(exp x1)").unwrap();
    fs::write(&other, "(lin 2 x1)").unwrap();
    fs::write(&bounds, r#"{"x1":{"lo":-1,"hi":1}}"#).unwrap();
    assert_eq!(
        code(&combu(&[
            "compile",
            s(&expr),
            "--bounds",
            s(&bounds),
            "--out",
            s(&net)
        ])),
        0
    );
    assert_eq!(
        code(&combu(&[
            "verify",
            s(&net),
            s(&other),
            "--bounds",
            s(&bounds)
        ])),
        2
    );
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&combu(&["bench", "--config", s(&missing)])), 1);
    assert_eq!(code(&combu(&["frobnicate"])), 1);
    assert_eq!(code(&combu(&["generate", "gs", "--n", "many"])), 1);
    assert_eq!(code(&combu(&["generate", "zz"])), 1);
    let bad = dir.path().join("bad.json");
    fs::write(
        &bad,
        r#"{"dataset":{"kind":"formula","formula":"gs","n":10},"repeats":0}"#,
    )
    .unwrap();
    assert_eq!(code(&combu(&["bench", "--config", s(&bad)])), 1);
    assert_eq!(code(&combu(&["--help"])), 0);
}

#[test]
fn domain_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let expr = dir.path().join("e.sexp");
    let bounds = dir.path().join("b.json");
    fs::write(&expr, "(log x1)").unwrap();
    fs::write(&bounds, r#"{"x1":{"lo":-1,"hi":1}}"#).unwrap();
    let out = combu(&["compile", s(&expr), "--bounds", s(&bounds)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("domain"));
    fs::write(&expr, "(log x1").unwrap();
    assert_eq!(
        code(&combu(&["compile", s(&expr), "--bounds", s(&bounds)])),
        2
    );
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn diverged_runs_over_the_limit_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // A learning rate of 1e300 pushes weights to overflow on the first step.
    let cfg = write_config(
        dir.path(),
        r#"{"dataset":{"kind":"formula","formula":"ar","n":200},"schemes":["relu"],
            "model":"small","train":{"epochs":2,"learning_rate":1e300},"repeats":2}"#,
    );
    let out_dir = dir.path().join("out");
    let out = combu(&["bench", "--config", s(&cfg), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("ar.json")).unwrap()).unwrap();
    assert_eq!(report["diverged_runs"], 2);
}

#[test]
fn bench_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"[{"name":"a","dataset":{"kind":"formula","formula":"ns","n":200},"schemes":["relu","combu"],
             "model":"small","train":{"epochs":2,"batch_size":50},"repeats":2},
            {"name":"b","dataset":{"kind":"formula","formula":"gs","n":200},"task":{"kind":"binned","n_bins":3},
             "schemes":["relu","combu"],"model":"small","train":{"epochs":2,"batch_size":50},"repeats":2}]"#,
    );
    let out_dir = dir.path().join("out");
    let out = combu(&[
        "bench",
        "--config",
        s(&cfg),
        "--out",
        s(&out_dir),
        "--repeats",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(out_dir.join("a.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("scheme,metric,mean,std,avg_rank"));
    assert_eq!(lines.count(), 4);
    let b: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("b.json")).unwrap()).unwrap();
    assert_eq!(b["runs"].as_array().unwrap().len(), 6);
    assert_eq!(b["bin_edges"].as_array().unwrap().len(), 2);
    assert!(out_dir.join("cross_dataset.csv").exists());
}

#[test]
fn train_writes_model_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = combu(&[
        "train",
        "bs",
        "--n",
        "300",
        "--size",
        "small",
        "--epochs",
        "2",
        "--scheme",
        "gelu",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mae"));
    let model = fs::read_to_string(dir.path().join("model.json")).unwrap();
    assert!(model.contains("gelu"));
    assert!(dir.path().join("train_report.json").exists());
}

#[test]
fn train_reads_generated_csv() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&combu(&[
            "generate",
            "ar",
            "--n",
            "300",
            "--out",
            s(dir.path())
        ])),
        0
    );
    let csv = dir.path().join("ar_train.csv");
    let out_dir = dir.path().join("m");
    let out = combu(&[
        "train",
        s(&csv),
        "--target",
        "k",
        "--size",
        "small",
        "--epochs",
        "2",
        "--out",
        s(&out_dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&combu(&["train", s(&csv), "--epochs", "1"])), 1);
}

#[test]
fn repeated_invocations_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        assert_eq!(
            code(&combu(&[
                "generate",
                "ns",
                "--n",
                "400",
                "--seed",
                "3",
                "--out",
                s(d)
            ])),
            0
        );
    }
    for f in ["ns_train.csv", "ns_test.csv", "meta.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn custom_ratio_order_survives_config_parsing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"name":"r","dataset":{"kind":"formula","formula":"ar","n":200},
            "schemes":[{"combu":{"relu":0.5,"gelu":0.25,"elu":0.25}}],
            "model":"small","train":{"epochs":1},"repeats":1}"#,
    );
    let out_dir = dir.path().join("out");
    assert_eq!(
        code(&combu(&[
            "bench",
            "--config",
            s(&cfg),
            "--out",
            s(&out_dir)
        ])),
        0
    );
    let table = fs::read_to_string(out_dir.join("r.csv")).unwrap();
    assert!(
        table.contains("combu[relu:0.5,gelu:0.25,elu:0.25]"),
        "{table}"
    );
}

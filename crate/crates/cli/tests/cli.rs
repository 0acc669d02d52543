use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(file)
}

fn miniwhy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_miniwhy")).args(args).env_remove("MINIWHY_SEED").output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn check_accepts_every_corpus_file() {
    for f in ["rectangle_translate.mjml", "quickselect.mjml", "sqrt_newton.mjml", "calculate_std_dev.mjml", "lemmas.mjml"] {
        let out = miniwhy(&["check", corpus(f).to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{f}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["command"], "check");
    }
}

#[test]
fn check_rejects_ill_typed_input_with_a_location() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.mjml");
    std::fs::write(&p, "int f(int x) { return x && true; }\n").unwrap();
    let out = miniwhy(&["check", p.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.mjml"));
}

#[test]
fn run_quickselect_example() {
    let f = corpus("quickselect.mjml");
    let out = miniwhy(&["run", f.to_str().unwrap(), "--method", "find_nth_lowest_number", "--args", "[[3,1,2],3,1]"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["run"]["status"], "normal");
    assert_eq!(r["run"]["result"].as_f64(), Some(2.0));
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn run_reports_precondition_violation_with_exit_1() {
    let f = corpus("quickselect.mjml");
    let out = miniwhy(&["run", f.to_str().unwrap(), "--method", "find_nth_lowest_number", "--args", "[[3,1,2],3,5]"]);
    assert_eq!(code(&out), 1);
    let r = json(&out);
    assert_eq!(r["run"]["status"], "contract-violation");
    assert_eq!(r["run"]["violations"][0]["kind"], "requires");
}

#[test]
fn run_usage_errors_exit_2() {
    let f = corpus("sqrt_newton.mjml");
    let f = f.to_str().unwrap();
    for args in [
        vec!["run", f, "--method", "sqrt", "--args", "[1,2]"],
        vec!["run", f, "--method", "nope", "--args", "[1]"],
        vec!["run", f, "--method", "sqrt", "--args", "{"],
        vec!["run", f, "--method", "sqrt", "--args", "[true]"],
        vec!["run", f, "--method", "sqrt", "--args", "[1]", "--mode", "decimal"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&miniwhy(&args)), 2, "{args:?}");
    }
}

#[test]
fn run_sqrt_in_both_modes() {
    let f = corpus("sqrt_newton.mjml");
    for mode in ["rational", "binary64"] {
        let out = miniwhy(&["run", f.to_str().unwrap(), "--method", "sqrt", "--args", "[2]", "--mode", mode]);
        assert_eq!(code(&out), 0, "{mode}");
        let r = json(&out);
        assert_eq!(r["run"]["mode"], mode);
        let v: f64 = match &r["run"]["result"] {
            serde_json::Value::Number(n) => n.as_f64().unwrap(),
            serde_json::Value::String(s) => {
                let (p, q) = s.split_once('/').unwrap();
                p.parse::<f64>().unwrap() / q.parse::<f64>().unwrap()
            }
            other => panic!("{other}"),
        };
        assert!((v * v - 2.0).abs() < 1.2e-7 + 1e-12);
    }
}

#[test]
fn reports_are_byte_identical_and_timing_is_opt_in() {
    let f = corpus("calculate_std_dev.mjml");
    let a = miniwhy(&["vc", f.to_str().unwrap()]);
    let b = miniwhy(&["vc", f.to_str().unwrap()]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert!(json(&a).get("timing_ms").is_none());
    let t = miniwhy(&["vc", f.to_str().unwrap(), "--timing"]);
    assert!(json(&t)["timing_ms"].is_number());
}

#[test]
fn vc_method_filter_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("vc.json");
    let f = corpus("sqrt_newton.mjml");
    let out = miniwhy(&["vc", f.to_str().unwrap(), "--method", "sqrt", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let obs = r["obligations"].as_array().unwrap();
    assert!(!obs.is_empty());
    assert!(obs.iter().all(|o| o["method"] == "sqrt"));
    assert!(obs.iter().all(|o| o["status"] == "unknown"));
}

#[test]
fn prove_lemmas_and_translate_fully() {
    for f in ["lemmas.mjml", "rectangle_translate.mjml"] {
        let out = miniwhy(&["prove", corpus(f).to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{f}");
        let r = json(&out);
        assert!(r["obligations"].as_array().unwrap().iter().all(|o| o["status"] == "proved-internal"));
    }
}

#[test]
fn prove_without_export_fails_on_unknowns_and_exports_in_every_format() {
    let f = corpus("sqrt_newton.mjml");
    let f = f.to_str().unwrap();
    assert_eq!(code(&miniwhy(&["prove", f])), 1);
    for (fmt, ext) in [("smt2", "smt2"), ("xml", "xll.xml"), ("sexp", "lisp.sexp")] {
        let dir = tempfile::tempdir().unwrap();
        let out = miniwhy(&["prove", f, "--export-unproved", fmt, "--out-dir", dir.path().to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{fmt}: {}", String::from_utf8_lossy(&out.stderr));
        let r = json(&out);
        let exported: Vec<&serde_json::Value> =
            r["obligations"].as_array().unwrap().iter().filter(|o| o["status"] == "exported").collect();
        assert!(!exported.is_empty());
        for o in exported {
            let p = dir.path().join(format!("{}.{ext}", o["id"].as_str().unwrap()));
            assert!(p.exists(), "{}", p.display());
        }
    }
}

#[test]
fn prove_export_requires_an_out_dir() {
    let f = corpus("sqrt_newton.mjml");
    assert_eq!(code(&miniwhy(&["prove", f.to_str().unwrap(), "--export-unproved", "smt2"])), 2);
    assert_eq!(code(&miniwhy(&["prove", f.to_str().unwrap(), "--export-unproved", "pdf", "--out-dir", "/tmp"])), 2);
}

#[test]
fn test_command_is_seeded_and_exits_0_without_failures() {
    let a = miniwhy(&["test", "--entry", "rectangle_translate", "--cases", "50", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    let r = json(&a);
    assert_eq!(r["harness"][0]["seed"], 7);
    assert_eq!(r["summary"]["failures"], 0);
    let b = Command::new(env!("CARGO_BIN_EXE_miniwhy"))
        .args(["test", "--entry", "rectangle_translate", "--cases", "50"])
        .env("MINIWHY_SEED", "7")
        .output()
        .unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn test_command_runs_the_stddev_and_quickselect_harnesses() {
    for entry in ["calculate_std_dev", "find_nth_lowest_number"] {
        let out = miniwhy(&["test", "--entry", entry, "--cases", "40", "--seed", "3"]);
        assert_eq!(code(&out), 0, "{entry}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn test_command_usage_errors() {
    assert_eq!(code(&miniwhy(&["test", "--entry", "nope"])), 2);
    assert_eq!(code(&miniwhy(&["test", "--entry", "lemmas"])), 2);
    assert_eq!(code(&miniwhy(&["test", "--entry", "sqrt_newton", "--exhaustive"])), 2);
    let bad_env = Command::new(env!("CARGO_BIN_EXE_miniwhy"))
        .args(["test", "--entry", "rectangle_translate", "--cases", "1"])
        .env("MINIWHY_SEED", "seven")
        .output()
        .unwrap();
    assert_eq!(code(&bad_env), 2);
}

#[test]
fn corpus_list_prints_entry_names() {
    let out = miniwhy(&["corpus", "list"]);
    assert_eq!(code(&out), 0);
    let names: Vec<String> = String::from_utf8(out.stdout).unwrap().lines().map(str::to_string).collect();
    assert_eq!(names, ["rectangle_translate", "find_nth_lowest_number", "sqrt_newton", "calculate_std_dev", "lemmas"]);
}

// Keys of real reports against the property lists of the JSON Schema. Full
// schema validation needs a validator crate; listing keys catches the
// common drift of adding a field on one side only.
#[test]
fn report_keys_match_the_schema() {
    let schema_text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas/report.schema.json")).unwrap();
    let schema: serde_json::Value = serde_json::from_str(&schema_text).unwrap();
    let props = |node: &serde_json::Value| -> (Vec<String>, Vec<String>) {
        let keys = node["properties"].as_object().unwrap().keys().cloned().collect();
        let required = node["required"].as_array().unwrap().iter().map(|k| k.as_str().unwrap().to_string()).collect();
        (keys, required)
    };
    let conforms = |obj: &serde_json::Value, node: &serde_json::Value, what: &str| {
        let (keys, required) = props(node);
        let obj = obj.as_object().unwrap_or_else(|| panic!("{what} is not an object"));
        for k in obj.keys() {
            assert!(keys.contains(k), "{what}: key `{k}` is not in the schema");
        }
        for k in &required {
            assert!(obj.contains_key(k), "{what}: required key `{k}` missing");
        }
    };
    let defs = &schema["$defs"];
    let quickselect = corpus("quickselect.mjml");
    let sqrt = corpus("sqrt_newton.mjml");
    let reports = [
        miniwhy(&["check", quickselect.to_str().unwrap()]),
        miniwhy(&["run", quickselect.to_str().unwrap(), "--method", "find_nth_lowest_number", "--args", "[[3,1,2],3,1]"]),
        miniwhy(&["run", sqrt.to_str().unwrap(), "--method", "sqrt", "--args", "[-1]"]),
        miniwhy(&["--timing", "vc", sqrt.to_str().unwrap()]),
        miniwhy(&["prove", sqrt.to_str().unwrap()]),
        miniwhy(&["test", "--entry", "sqrt_newton", "--cases", "200"]),
    ];
    for out in &reports {
        let r = json(out);
        conforms(&r, &schema, "report");
        for ob in r["obligations"].as_array().into_iter().flatten() {
            conforms(ob, &defs["obligation"], "obligation");
        }
        for c in r["checks"].as_array().into_iter().flatten() {
            conforms(c, &defs["check"], "check");
        }
        if !r["run"].is_null() {
            conforms(&r["run"], &defs["run"], "run");
        }
        for h in r["harness"].as_array().into_iter().flatten() {
            conforms(h, &defs["harness"], "harness record");
        }
    }
}

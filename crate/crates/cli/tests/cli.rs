//! End-to-end runs of the `ktcy` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ktcy(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktcy"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("run ktcy")
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("report.json")).expect("report.json")).expect("valid JSON")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn solve_zero_preset() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["solve", "--preset", "zero", "--n", "16", "--dump-fields", "ktcy"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    assert_eq!(f(&r["final"]["sup_u"]), 2.0);
    assert_eq!(f(&r["final"]["residual_sup"]), 0.0);
    assert_eq!(r["path"].as_array().unwrap().len(), 1);
    let phi = ktcy_core::field_io::read_ktcy(dir.path().join("path000_phi.ktcy")).unwrap();
    assert!(phi.values().iter().all(|&v| v == 0.0));
}

#[test]
fn solve_checker_at_128() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["solve", "--preset", "checker", "--n", "128"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    for key in ["spec_echo", "grid_n", "path", "final", "timings"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    let fin = &r["final"];
    for key in [
        "residual_sup",
        "residual_l2",
        "sup_u",
        "min_nu",
        "min_A",
        "lemma22_margin",
        "key_identity_sup",
        "alpha",
        "beta",
        "c_t",
    ] {
        assert!(fin.get(key).is_some(), "final.{key} missing");
    }
    assert!(f(&fin["residual_sup"]) <= 1e-11);
    assert_eq!(f(&fin["t"]), 1.0);
    assert_eq!(r["grid_n"], 128);
    assert_eq!(r["status"], "converged");
    // nonlinear regime: the volume ratio moves more than 10% away from 1
    assert!(f(&fin["min_nu"]) < 0.9);
}

#[test]
fn zero_fourier_mode_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["solve", "--fourier", "1,0,0.5,0; 0,0,1,0", "--n", "16"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("(0, 0)"), "{}", stderr(&o));
}

#[test]
fn fourier_density_matches_preset() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let o = ktcy(&["solve", "--preset", "oneD", "--n", "32"], a.path());
    assert_eq!(o.status.code(), Some(0));
    let o = ktcy(&["solve", "--fourier", "1,0,0.5,0", "--n", "32"], b.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let (ra, rb) = (report(a.path()), report(b.path()));
    assert!((f(&ra["final"]["sup_u"]) - f(&rb["final"]["sup_u"])).abs() < 1e-13);
}

#[test]
fn field_dump_density() {
    let dir = TempDir::new().unwrap();
    let g = ktcy_core::Grid::new(32).unwrap();
    let field = ktcy_core::presets::Preset::Skew.field(&g, 0.5, 0.3);
    let path = dir.path().join("F.ktcy");
    ktcy_core::field_io::write_ktcy(&path, &field).unwrap();
    let out = dir.path().join("out");
    let o = ktcy(&["solve", "--field", path.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let from_dump = report(&out);
    assert_eq!(from_dump["grid_n"], 32);
    let preset_out = dir.path().join("preset");
    ktcy(&["solve", "--preset", "skew", "--n", "32"], &preset_out);
    assert!((f(&from_dump["final"]["sup_u"]) - f(&report(&preset_out)["final"]["sup_u"])).abs() < 1e-13);

    let o = ktcy(&["solve", "--field", path.to_str().unwrap(), "--n", "64"], &out);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stall_writes_partial_report() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("stall.cfg");
    fs::write(
        &cfg,
        "preset = checker\nn = 16\nmax_newton_iters = 1\nnewton_tol = 1e-14\nt_step_initial = 0.5\nt_step_min = 0.1\n",
    )
    .unwrap();
    let o = ktcy(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["status"], "stalled");
    assert!(f(&r["stall"]["t"]) < 1.0);
    assert!(r["final"].get("sup_u").is_some());
}

#[test]
fn config_errors_point_at_the_line() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "preset = checker\nn = sixty-four\n").unwrap();
    let o = ktcy(&["solve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2, field 'n'"), "{}", stderr(&o));

    let json = dir.path().join("bad.json");
    fs::write(&json, "{\n  \"preset\": \"checker\",\n  \"newton_toll\": 1e-9\n}").unwrap();
    let o = ktcy(&["solve", "--config", json.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("newton_toll") && stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn json_config_and_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"preset": "oneD", "n": 64, "a": 0.25, "seed": 3}"#).unwrap();
    let o = ktcy(&["solve", "--config", cfg.to_str().unwrap(), "--n", "16"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    assert_eq!(r["grid_n"], 16);
    assert_eq!(r["spec_echo"]["density"]["preset"], "oneD");
    assert_eq!(f(&r["spec_echo"]["density"]["a"]), 0.25);
    assert_eq!(r["spec_echo"]["solver"]["seed"], 3);
}

#[test]
fn reports_are_deterministic_apart_from_timings() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timings");
        serde_json::to_string(&v).unwrap()
    };
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        let o = ktcy(&["solve", "--preset", "skew", "--n", "32", "--seed", "5"], d.path());
        assert_eq!(o.status.code(), Some(0));
    }
    assert_eq!(strip(report(a.path())), strip(report(b.path())));
}

#[test]
fn field_dumps_in_both_formats() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["solve", "--preset", "checker", "--n", "16", "--dump-fields", "both"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let states = report(dir.path())["path"].as_array().unwrap().len();
    for idx in 0..states {
        for name in ["phi", "u", "nu", "residual"] {
            let stem = format!("path{idx:03}_{name}");
            let field = ktcy_core::field_io::read_ktcy(dir.path().join(format!("{stem}.ktcy"))).unwrap();
            assert_eq!(field.n(), 16);
            let csv = fs::read_to_string(dir.path().join(format!("{stem}.csv"))).unwrap();
            assert_eq!(csv.lines().count(), 16);
        }
    }
    for stem in ["omega_tilde", "ricci_tilde"] {
        assert!(dir.path().join(format!("{stem}.manifest")).exists());
        assert!(dir.path().join(format!("{stem}_e6.ktcy")).exists());
        assert!(dir.path().join(format!("{stem}_e6.csv")).exists());
    }
}

fn checks(r: &Value) -> Vec<(String, f64, bool)> {
    r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["name"].as_str().unwrap().to_string(), f(&c["measured"]), c["pass"].as_bool().unwrap()))
        .collect()
}

#[test]
fn verify_connection_is_exact() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["verify", "--suite", "connection", "--preset", "zero", "--n", "8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    assert!(checks(&r).iter().all(|(_, m, p)| *p && *m == 0.0));
    let text = fs::read_to_string(dir.path().join("connection.txt")).unwrap();
    assert!(text.contains("Ψ1_1"));
}

#[test]
fn verify_identities_on_checker() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["verify", "--suite", "identities", "--preset", "checker", "--n", "128"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    let key = checks(&r).into_iter().find(|c| c.0 == "key_identity_sup").unwrap();
    assert!(key.1 <= 1e-8 && key.2);
}

#[test]
fn verify_uniqueness_and_lemma22() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(
        &["verify", "--suite", "all", "--preset", "checker", "--n", "64", "--starts", "4", "--seed", "11"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    let all = checks(&r);
    let uniq = all.iter().find(|c| c.0 == "max_pairwise_potential_distance").unwrap();
    assert!(uniq.1 <= 1e-8);
    assert!(all.iter().any(|c| c.0 == "min_margin_along_path"));
    assert_eq!(r["all_pass"], true);
}

#[test]
fn verify_failure_exits_3_and_names_the_check() {
    // an 8-point grid cannot resolve the key identity to 1e-8
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["verify", "--suite", "identities", "--preset", "oneD", "--n", "8"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("identities/key_identity_sup"), "{}", stderr(&o));
    assert_eq!(report(dir.path())["all_pass"], false);
}

#[test]
fn verify_rejects_single_start() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["verify", "--suite", "uniqueness", "--preset", "zero", "--n", "8", "--starts", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_zero_is_at_machine_precision() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["sweep", "--preset", "zero", "--resolutions", "8,16,32"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let r = report(dir.path());
    for e in r["resolutions"].as_array().unwrap() {
        let fin = &e["final_state"];
        assert_eq!(f(&fin["residual_sup"]), 0.0);
        assert_eq!(f(&fin["key_identity_sup"]), 0.0);
        assert_eq!(f(&fin["sup_u"]), 2.0);
    }
}

#[test]
fn sweep_checker_sup_u_converges() {
    let dir = TempDir::new().unwrap();
    ktcy(&["sweep", "--preset", "checker", "--resolutions", "64,128"], dir.path());
    let r = report(dir.path());
    assert!(f(&r["sup_u_max_change"]) <= 1e-6);
}

#[test]
fn sweep_checker_key_identity_decreases() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["sweep", "--preset", "checker", "--resolutions", "32,64,128"], dir.path());
    let r = report(dir.path());
    let gaps: Vec<f64> = r["resolutions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| f(&e["final_state"]["key_identity_sup"]))
        .collect();
    assert_eq!(r["key_identity_strictly_decreasing"], true, "key_identity_sup by resolution: {gaps:?}");
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn sweep_rejects_bad_resolutions() {
    let dir = TempDir::new().unwrap();
    let o = ktcy(&["sweep", "--preset", "zero", "--resolutions", "64,32"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = ktcy(&["sweep", "--preset", "zero", "--resolutions", "31"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

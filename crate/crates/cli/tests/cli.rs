use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn weylap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylap")).args(args).output().expect("binary runs")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write_sine_grid(path: &Path, count: usize) {
    let mut s = format!("dim 1\naxis 0 0 {} {count}\narity 1\nkind real\ndata\n", std::f64::consts::TAU);
    for i in 0..count {
        s.push_str(&format!("{}\n", (std::f64::consts::TAU * i as f64 / (count - 1) as f64).sin()));
    }
    std::fs::write(path, s).unwrap();
}

#[test]
fn norm_record_has_every_field() {
    let o = weylap(&["norm", "--gallery", "chi-half", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    for k in ["command", "config", "value", "report", "grid_fingerprint", "version", "warnings"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
    assert!((v["value"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-10);
    assert_eq!(v["config"]["quad"]["quad_points"], 16);
}

#[test]
fn gallery_lists_every_id() {
    let v = json(&weylap(&["gallery"]));
    let ids: Vec<&str> = v["value"].as_array().unwrap().iter().map(|e| e["id"].as_str().unwrap()).collect();
    assert_eq!(ids, weylap::function_model::GALLERY_IDS);
    let o = weylap(&["gallery", "--id", "nope"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope"));
}

#[test]
fn heaviside_equi_exits_two() {
    let o = weylap(&["certify", "--gallery", "heaviside-n1", "--equi", "--sigma", "1", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(json(&o)["value"].get("NotCertified").is_some());
}

#[test]
fn grid_file_norm_matches_period_integral() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("sin.grid");
    write_sine_grid(&p, 2001);
    let o = weylap(&["norm", "--grid", p.to_str().unwrap(), "--p", "2", "--lo", "0", "--side", "6.283185307179586"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    // ‖sin‖₂ on one period is √π.
    assert!((json(&o)["value"].as_f64().unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-5);
}

#[test]
fn bad_grid_file_reports_line() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("bad.grid");
    std::fs::write(&p, "dim 1\naxis 0 0 1 3\ndata\n1\ninf\n2\n").unwrap();
    let o = weylap(&["norm", "--grid", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5") && err.contains("non-finite"), "{err}");
}

#[test]
fn grid_sampled_outside_box_warns() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path().join("sin.grid");
    write_sine_grid(&p, 101);
    let o = weylap(&["norm", "--grid", p.to_str().unwrap(), "--p", "1", "--lo", "-1", "--side", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let w = json(&o)["warnings"].as_array().unwrap().clone();
    assert!(!w.is_empty(), "expected an outside-the-box warning");
}

#[test]
fn distance_writes_plot_file() {
    let d = tempfile::tempdir().unwrap();
    let plot = d.path().join("d.dat");
    let out = d.path().join("d.json");
    let o = weylap(&[
        "distance", "--gallery", "chi-half", "--p", "1", "--steps", "4", "--grid-lo", "-4", "--grid-hi", "4",
        "--plot", plot.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&plot).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(|x| x.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 5);
    for (l, v) in rows {
        assert!((v - 1.0 / (2.0 * l)).abs() < 1e-9, "l={l}: {v}");
    }
    let rec: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rec["command"], "distance");
}

#[test]
fn fourier_coefficient_and_scan() {
    let v = json(&weylap(&["fourier", "--gallery", "plane-wave-2d", "--lambda", "1,-1"]));
    // Complex values serialize as `[re, im]`.
    let re = v["value"][0][0].as_f64().unwrap();
    assert!((re - 3.0).abs() < 1e-6, "{v}");
    let o = weylap(&["fourier", "--gallery", "chi-half"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["value"].as_array().unwrap().len(), 0);
}

#[test]
fn wave_table_matches_closed_form() {
    let v = json(&weylap(&["wave", "--x", "0.5,1.5", "--t", "0.25,2"]));
    let rows = v["value"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        // Rows are `[x, t, re u, im u]`.
        let (x, t, u) = (r[0].as_f64().unwrap(), r[1].as_f64().unwrap(), r[2].as_f64().unwrap());
        assert!((u - x.sin() * t.cos()).abs() < 1e-8);
    }
}

#[test]
fn convolve_heat_of_constant() {
    let v = json(&weylap(&["convolve", "--gallery", "constant-one", "--t0", "0.5", "--at", "0", "--at", "3"]));
    for r in v["value"].as_array().unwrap() {
        // Rows are `[point, [[re, im], ...]]`.
        assert!((r[1][0][0].as_f64().unwrap() - 1.0).abs() < 1e-7, "{r}");
    }
}

#[test]
fn unknown_reproduce_target_is_an_error() {
    let o = weylap(&["reproduce", "nothing"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("heaviside"));
}

#[test]
fn replay_rejects_failure_records() {
    let d = tempfile::tempdir().unwrap();
    let rec = d.path().join("fail.json");
    let o = Command::new(env!("CARGO_BIN_EXE_weylap"))
        .args(["--out", rec.to_str().unwrap(), "certify", "--gallery", "heaviside-n1", "--equi"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = weylap(&["certify", "--replay", rec.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("failure trace"));
}

use std::process::{Command, Output};

use serde_json::Value;

fn confinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confinv")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

#[test]
fn sphere_willmore_report() {
    let out = confinv(&["energy", "--surface", "sphere(2,1)", "--energy", "willmore"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["rng"], "ChaCha8");
    assert_eq!(v["seed"], 42);
    let w = v["report"]["value"].as_f64().unwrap();
    assert!((w - 12.566370614).abs() < 1e-8);
}

#[test]
fn traceless_square_is_invariant_on_torus() {
    let out = confinv(&[
        "invariance", "--surface", "torus(2,1)", "--P", "g-1(a,b) g-1(c,d) ho(a,c) ho(b,d)", "--phi", "0.1*x1*x2",
        "--resolution", "32",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "invariant");
}

#[test]
fn mean_square_is_flagged() {
    let out = confinv(&[
        "invariance", "--surface", "torus(2,1)", "--P", "g-1(a,b) g-1(c,d) Hg(a,c) Hg(b,d)", "--phi",
        "0.2*sin(x1 + x3)", "--resolution", "32",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["verdict"], "not invariant");
}

#[test]
fn enumeration_lists_classes() {
    let out = confinv(&["enumerate", "--weight", "-2", "--m", "2", "--codim", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["count"], 9);
    assert_eq!(v["matches_bruteforce"], true);
}

#[test]
fn energy_csv_columns() {
    let out = confinv(&["energy", "--surface", "torus(2,1)", "--energy", "gauss_curvature_total", "--resolution", "16,24", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("surface,energy,value,resolution,est_error,min_integrand"));
    assert!(lines.next().unwrap().contains(",16x24,"));
}

#[test]
fn input_errors_exit_two() {
    for args in [
        &["energy", "--surface", "dodecahedron"][..],
        &["energy", "--surface", "sphere(2,1)", "--energy", "bogus"],
        &["energy", "--surface", "sphere(2,1)", "--resolution", "2"],
        &["energy", "--surface", "sphere(4,1)", "--energy", "willmore", "--resolution", "4"],
        &["invariance", "--surface", "torus(2,1)", "--P", "g-1(a,b) ho(a,c)"],
        &["invariance", "--surface", "torus(2,1)", "--P", "g-1(a,b) Hg(a,b)"],
        &["energy", "--surface", "sphere(2,1)", "--mobius", "/nonexistent.json"],
        &["enumerate"],
    ] {
        assert_eq!(confinv(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn job_files_and_mobius_maps() {
    let dir = std::env::temp_dir().join(format!("confinv-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let map = dir.join("map.json");
    std::fs::write(&map, r#"[{"inversion": {"center": [0.0, 0.0, 3.0], "radius": 1.0}}, {"dilation": 2.0}]"#).unwrap();
    let job = dir.join("job.json");
    std::fs::write(
        &job,
        format!(r#"{{"command": "energy", "surface": "sphere(2,1)", "mobius": "{}", "resolution": "32"}}"#, map.display()),
    )
    .unwrap();
    let out = confinv(&["run", job.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let w = json(&out)["report"]["value"].as_f64().unwrap();
    assert!((w - 4.0 * std::f64::consts::PI).abs() < 1e-8);
    let target = dir.join("report.csv");
    let out = confinv(&["energy", "--surface", "sphere(2,1)", "--format", "csv", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&target).unwrap().starts_with("surface,"));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn custom_surface_spec() {
    let spec = r#"{"m":2,"n":3,"components":["(2+cos(u1))*cos(u2)","(2+cos(u1))*sin(u2)","sin(u1)"],
        "domain":[{"min":0,"max":6.283185307179586,"periodic":true},{"min":0,"max":6.283185307179586,"periodic":true}]}"#;
    let out = confinv(&["energy", "--surface", spec, "--energy", "gauss_curvature_total", "--resolution", "32"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["report"]["value"].as_f64().unwrap().abs() < 1e-10);
}

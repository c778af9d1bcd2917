use std::process::{Command, Output};

use serde_json::Value;

fn gpvortex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpvortex")).args(args).output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn spectrum_at_zero_amplitude() {
    let out = gpvortex(&["spectrum", "--m0", "2", "--a", "0", "--m", "4"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "-4,0,4,4,8,8");
}

#[test]
fn atlas_examples() {
    let v = json_of(&gpvortex(&["atlas", "--m0", "3"]));
    assert_eq!(v["schema"], 1);
    assert_eq!(v["toolkit"], "gpvortex");
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    let mut curves: Vec<(i64, i64, i64, i64)> = v["result"]["curves"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            let f = |k: &str| c[k].as_i64().unwrap();
            (f("m"), f("n"), c["omega0"]["num"].as_i64().unwrap(), c["omega0"]["den"].as_i64().unwrap())
        })
        .collect();
    curves.sort();
    assert_eq!(curves, vec![(6, 1, 2, 3), (7, 0, 1, 1), (8, 0, 2, 5)]);

    let v = json_of(&gpvortex(&["atlas", "--m0", "6"]));
    assert_eq!(v["result"]["midrange"]["r"], 2);
    assert_eq!(v["result"]["midrange"]["r_modes"], serde_json::json!([11, 12]));

    let v = json_of(&gpvortex(&["atlas", "--m0", "1"]));
    assert_eq!(v["result"]["counts"]["b"], 0);
    assert!(v["result"]["curves"].as_array().unwrap().is_empty());
}

#[test]
fn crossings_example() {
    let a: f64 = 0.02;
    let out = gpvortex(&["crossings", "--m0", "2", "--a", "0.02", "--steps", "20"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let cs = v["result"]["crossings"].as_array().unwrap();
    assert_eq!(cs.len(), 2);
    let om: Vec<f64> = cs.iter().map(|c| c["omega_star"].as_f64().unwrap()).collect();
    assert!(om.iter().any(|w| (w - 2.0 / 3.0).abs() < 1e-3));
    let last = 2.0 - a * a / 8.0;
    assert!(om.iter().any(|w| (w - last).abs() < 0.05 * a * a / 8.0), "{om:?}");

    let out = gpvortex(&["crossings", "--m0", "2", "--a", "0.02", "--steps", "20", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# gpvortex"));
    assert_eq!(lines.next().unwrap(), "m,n_track,Omega,eigenvalue,krein_sign");
    // blocks 3, 4, 5 with 4 tracks of 20 points
    assert_eq!(lines.count(), 3 * 4 * 20);
}

#[test]
fn zeros_example() {
    let v = json_of(&gpvortex(&["zeros", "--m0", "2", "--m", "5", "--a", "0.1", "--b", "0.01"]));
    let zeros = v["result"]["configuration"]["zeros"].as_array().unwrap();
    let charges: Vec<i64> = zeros.iter().map(|z| z["charge"].as_i64().unwrap()).collect();
    assert_eq!(charges.iter().filter(|&&c| c == 1).count(), 3);
    assert_eq!(charges.iter().filter(|&&c| c == -1).count(), 1);
    assert_eq!(charges.len(), 4);
    assert_eq!(v["result"]["configuration"]["total_winding"], 2);
    assert_eq!(v["result"]["polygon"]["charge"], 1);
}

#[test]
fn output_is_deterministic() {
    let args = ["secondary", "--m0", "2", "--m", "5", "--a", "0.1", "--b", "0.005,0.01", "--nr", "24"];
    let (x, y) = (gpvortex(&args), gpvortex(&args));
    assert!(x.status.success());
    assert_eq!(x.stdout, y.stdout);
    let v = json_of(&x);
    let fit = &v["result"]["fit"];
    assert!((fit["exponent"].as_f64().unwrap() - 2.0).abs() < 0.1);
    // every float carries 17 significant digits
    let text = String::from_utf8(x.stdout).unwrap();
    assert!(text.contains("\"a\": 1.0000000000000001e-1"));
}

#[test]
fn exit_codes() {
    let out = gpvortex(&["bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = gpvortex(&["branch", "--m0", "2", "--a", "0.2,0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"]["kind"], "config");

    let out = gpvortex(&["secondary", "--m0", "2", "--m", "4", "--a", "0.1", "--b", "0.01"]);
    assert_eq!(out.status.code(), Some(2));

    // tolerance tighter than roundoff: the residual check fails
    let out = gpvortex(&["secondary", "--m0", "2", "--m", "5", "--a", "0.1", "--b", "0.01", "--nr", "16", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json_of(&out);
    assert_eq!(v["error"]["exit_code"], 3);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn field_grid_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub/field.csv");
    let out = gpvortex(&[
        "field", "--m0", "3", "--m", "8", "--a", "0.1", "--b", "0.01", "--points", "11", "--format", "csv", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[1], "x,y,re,im,abs,phase");
    assert_eq!(lines.len(), 2 + 121);
}

#[test]
fn reproduce_writes_a_checked_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = gpvortex(&["reproduce", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["result"]["all_passed"], true);
    let files = m["result"]["files"].as_array().unwrap();
    assert_eq!(files.len(), 14);
    for f in files {
        let body = std::fs::read_to_string(dir.path().join(f["name"].as_str().unwrap())).unwrap();
        assert!(body.contains(m["config_hash"].as_str().unwrap()));
    }
    let out = gpvortex(&["reproduce"]);
    assert_eq!(out.status.code(), Some(2));
}

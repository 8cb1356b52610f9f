use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn run(args: &[&str], out: &Path, config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kacvortex"));
    cmd.args(args).arg("--out").arg(out).arg("--threads").arg("1");
    if let Some(text) = config {
        let path = out.with_extension("toml");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn unknown_key_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let res = run(&["meanfield"], &out, Some("[model]\nbetta = 3.0\n"));
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("betta"), "{err}");
}

#[test]
fn invalid_value_is_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let res = run(&["relax"], &tmp.path().join("bad"), Some("[flow]\ndt = -1.0\n"));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("dt"));
}

#[test]
fn verify_battery_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("verify");
    let res = run(&["verify"], &out, None);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stdout));
    assert_eq!(manifest(&out)["status"], "ok");
}

#[test]
fn meanfield_table_and_checksums() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mf");
    let res = run(&["meanfield"], &out, None);
    assert!(res.status.success());

    let mut rdr = csv::Reader::from_path(out.join("meanfield.csv")).unwrap();
    let rows: Vec<(f64, f64)> = rdr
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0], (2.0, 0.0));
    assert!((rows[3].1 - 0.831462024754257).abs() < 1e-12);

    let m = manifest(&out);
    let files = m["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for rec in files {
        let bytes = fs::read(out.join(rec["path"].as_str().unwrap())).unwrap();
        assert_eq!(rec["bytes"].as_u64().unwrap() as usize, bytes.len());
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(rec["sha256"].as_str().unwrap(), digest);
    }
}

#[test]
fn small_relaxation_converges_reproducibly() {
    let cfg = "[grid]\nnodes = 64\nradius = 16.0\n\n[barrier]\nlambdas = [4.0, 8.0]\n\n[flow]\nt_total = 60.0\nconvergence_tol = 1e-7\n";
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run(&["relax"], &a, Some(cfg)).status.success());
    assert!(run(&["relax"], &b, Some(cfg)).status.success());
    assert_eq!(fs::read(a.join("profile.csv")).unwrap(), fs::read(b.join("profile.csv")).unwrap());

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("relax.json")).unwrap()).unwrap();
    assert_eq!(summary["converged"], true);
    assert!(summary["residual_f0"].as_f64().unwrap() < 1e-6);
    assert_eq!(summary["maximum_principle"]["holds"], true);
}

#[test]
fn lattice_run_is_seeded() {
    let cfg = "[lattice]\nside = 16\ngamma_log2 = 2\nsweeps = 20\nburn_in = 5\nsample_every = 5\n";
    let tmp = tempfile::tempdir().unwrap();
    let paths = [tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c")];
    for (p, seed) in paths.iter().zip(["7", "7", "8"]) {
        assert!(run(&["lattice", "--seed", seed], p, Some(cfg)).status.success());
    }
    let read = |p: &Path| fs::read(p.join("lattice_trace.csv")).unwrap();
    assert_eq!(read(&paths[0]), read(&paths[1]));
    assert_ne!(read(&paths[0]), read(&paths[2]));
    assert_eq!(manifest(&paths[0])["seed"], 7);
}

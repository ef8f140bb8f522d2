use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn vprecon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vprecon"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn sphere_scene() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenes/sphere.scene")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn full_pipeline_passes_verification() {
    let dir = tempfile::tempdir().unwrap();
    let (t, g, r, rep, ply) = (
        dir.path().join("t.csv"),
        dir.path().join("g.csv"),
        dir.path().join("r.json"),
        dir.path().join("report.json"),
        dir.path().join("ply"),
    );
    let out = vprecon(&[
        "simulate",
        "--scene",
        s(&sphere_scene()),
        "--tracks-out",
        s(&t),
        "--truth-out",
        s(&g),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = vprecon(&[
        "reconstruct",
        "--tracks",
        s(&t),
        "--focal",
        "1",
        "--out",
        s(&r),
        "--ply-dir",
        s(&ply),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_dir(&ply).unwrap().count(), 5);
    let out = vprecon(&["verify", "--recon", s(&r), "--truth", s(&g), "--report", s(&rep)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["truncated_tracks"], 0);
    assert!(report["worst_rmse"].as_f64().unwrap() <= 1e-9);

    let out = vprecon(&["vp", "--tracks", s(&t), "--object", "0", "--interval", "0"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["estimate"]["n_lines"], 200);
    // Motion (0, -2, 4) has its vanishing point at f (0, -2) / 4.
    let vp: Vec<f64> = doc["estimate"]["vp"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!(
        (vp[1] / vp[2] + 0.5).abs() < 1e-12 && (vp[0] / vp[2]).abs() < 1e-12,
        "{vp:?}"
    );
}

#[test]
fn failed_verification_still_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (t, g, r, rep) = (
        dir.path().join("t.csv"),
        dir.path().join("g.csv"),
        dir.path().join("r.json"),
        dir.path().join("report.json"),
    );
    let noisy = fs::read_to_string(sphere_scene())
        .unwrap()
        .replace("noise_sigma = 0.0", "noise_sigma = 0.001");
    let scene = dir.path().join("noisy.scene");
    fs::write(&scene, noisy).unwrap();
    assert_eq!(
        code(&vprecon(&[
            "simulate",
            "--scene",
            s(&scene),
            "--tracks-out",
            s(&t),
            "--truth-out",
            s(&g)
        ])),
        0
    );
    assert_eq!(
        code(&vprecon(&[
            "reconstruct",
            "--tracks",
            s(&t),
            "--focal",
            "1",
            "--out",
            s(&r)
        ])),
        0
    );
    assert_eq!(
        code(&vprecon(&[
            "verify",
            "--recon",
            s(&r),
            "--truth",
            s(&g),
            "--report",
            s(&rep)
        ])),
        0
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}

#[test]
fn single_track_is_a_geometric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    let r = dir.path().join("r.json");
    fs::write(&t, "track_id,object_id,frame,u,v\n7,0,0,0.1,0.2\n7,0,1,0.2,0.3\n").unwrap();
    let out = vprecon(&["reconstruct", "--tracks", s(&t), "--focal", "1", "--out", s(&r)]);
    assert_eq!(code(&out), 3);
    let doc = fs::read_to_string(&r).unwrap();
    assert!(doc.contains("insufficient_lines"), "{doc}");
    assert_eq!(
        code(&vprecon(&[
            "vp",
            "--tracks",
            s(&t),
            "--object",
            "0",
            "--interval",
            "0"
        ])),
        3
    );
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(
        code(&vprecon(&[
            "reconstruct",
            "--tracks",
            "t.csv",
            "--focal",
            "1",
            "--out",
            "r",
            "--bogus"
        ])),
        1
    );
    assert_eq!(code(&vprecon(&["teleport"])), 1);
    assert_eq!(
        code(&vprecon(&[
            "vp",
            "--tracks",
            "t.csv",
            "--object",
            "x",
            "--interval",
            "0"
        ])),
        1
    );
    assert_eq!(code(&vprecon(&[])), 1);
    assert_eq!(code(&vprecon(&["--help"])), 0);
}

#[test]
fn bad_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("bad.scene");
    let text = fs::read_to_string(sphere_scene()).unwrap();
    fs::write(&scene, &text[..text.find("radius").unwrap()]).unwrap();
    let t = dir.path().join("t.csv");
    let out = vprecon(&["simulate", "--scene", s(&scene), "--tracks-out", s(&t)]);
    assert_eq!(code(&out), 2);
    assert!(!t.exists());

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&vprecon(&[
            "reconstruct",
            "--tracks",
            s(&missing),
            "--focal",
            "1",
            "--out",
            "r"
        ])),
        2
    );
    fs::write(&t, "track_id,object_id,frame,u,v\n1,0,0,0.1,0.1\n1,0,2,0.1,0.1\n").unwrap();
    let r = dir.path().join("r.json");
    assert_eq!(
        code(&vprecon(&[
            "reconstruct",
            "--tracks",
            s(&t),
            "--focal",
            "1",
            "--out",
            s(&r)
        ])),
        2
    );
    assert_eq!(
        code(&vprecon(&[
            "reconstruct",
            "--tracks",
            s(&t),
            "--focal=-1",
            "--out",
            s(&r)
        ])),
        2
    );
    assert!(!r.exists());
}

#[test]
fn unsorted_input_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.csv");
    fs::write(
        &t,
        "track_id,object_id,frame,u,v\n2,0,1,0.5,0.2\n1,0,0,0.1,0.1\n1,0,1,0.2,0.3\n2,0,0,0.4,0.0\n",
    )
    .unwrap();
    let out = vprecon(&["vp", "--tracks", s(&t), "--object", "0", "--interval", "0"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for run in 0..2 {
        let t = dir.path().join(format!("t{run}.csv"));
        let g = dir.path().join(format!("g{run}.csv"));
        let r = dir.path().join(format!("r{run}.json"));
        let ply = dir.path().join(format!("ply{run}"));
        vprecon(&[
            "simulate",
            "--scene",
            s(&sphere_scene()),
            "--tracks-out",
            s(&t),
            "--truth-out",
            s(&g),
        ]);
        vprecon(&[
            "reconstruct",
            "--tracks",
            s(&t),
            "--focal",
            "1",
            "--out",
            s(&r),
            "--ply-dir",
            s(&ply),
        ]);
        let mut bytes = vec![
            fs::read(&t).unwrap(),
            fs::read(&g).unwrap(),
            fs::read(&r).unwrap(),
        ];
        let mut plys: Vec<_> = fs::read_dir(&ply).unwrap().map(|e| e.unwrap().path()).collect();
        plys.sort();
        bytes.extend(plys.iter().map(|p| fs::read(p).unwrap()));
        outputs.push(bytes);
    }
    assert_eq!(outputs[0], outputs[1]);
}

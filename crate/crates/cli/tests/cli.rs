use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use vnlkit::io::pfm::{normals_to_pfm, write_depth_pfm, write_pfm_file, PfmImage};
use vnlkit::surface_normal::NormalField;
use vnlkit::{DepthMap, Point3};

fn vnlkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vnlkit")).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn error_kind(out: &Output) -> String {
    assert!(!out.status.success());
    let line: Value = serde_json::from_slice(&out.stderr).expect("stderr is a JSON error line");
    line["error"]["kind"].as_str().unwrap().to_string()
}

struct Scene {
    dir: TempDir,
}

impl Scene {
    fn new() -> Self {
        Self { dir: TempDir::new().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    fn intrinsics(&self, w: usize, h: usize) -> String {
        let text = format!(
            r#"{{"fx": {w}, "fy": {h}, "u0": {}, "v0": {}, "width": {w}, "height": {h}}}"#,
            (w as f64 - 1.0) / 2.0,
            (h as f64 - 1.0) / 2.0
        );
        std::fs::write(self.path("cam.json"), text).unwrap();
        self.s("cam.json")
    }

    fn depth(&self, name: &str, w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> String {
        let data = (0..w * h).map(|k| f(k % w, k / w)).collect();
        write_depth_pfm(self.path(name), &DepthMap::new(w, h, data).unwrap()).unwrap();
        self.s(name)
    }
}

fn gt_depth(u: usize, v: usize) -> f64 {
    3.0 + 0.1 * u as f64 - 0.05 * v as f64 + 0.2 * ((u * v) as f64 * 0.3).sin()
}

#[test]
fn eval_depth_recovers_affine_prediction() {
    let sc = Scene::new();
    // dyadic depths, so 2 * gt + 3 is exact in f32
    let dyadic = |u: usize, v: usize| 2.0 + ((u * 7 + v * 3) % 32) as f64 / 16.0;
    let gt = sc.depth("gt.pfm", 16, 12, dyadic);
    let pred = sc.depth("pred.pfm", 16, 12, |u, v| 2.0 * dyadic(u, v) + 3.0);
    let v = json_stdout(&vnlkit(&["eval-depth", "--pred", &pred, "--gt", &gt, "--align", "affine"]));
    let abs_rel = v["metrics"]["abs_rel"].as_f64().unwrap();
    assert!(abs_rel < 1e-9, "abs_rel {abs_rel}");
    assert_eq!(v["config"]["align"], "affine");
    assert!((v["affine"]["scale"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!((v["affine"]["shift"].as_f64().unwrap() + 1.5).abs() < 1e-12);

    let none = json_stdout(&vnlkit(&["eval-depth", "--pred", &pred, "--gt", &gt, "--align", "none"]));
    assert!(none["metrics"]["abs_rel"].as_f64().unwrap() > 1.0);
}

#[test]
fn raw_depth_matches_pfm() {
    let sc = Scene::new();
    let cam = sc.intrinsics(8, 6);
    let gt = sc.depth("gt.pfm", 8, 6, gt_depth);
    let raw: Vec<u8> = (0..48).flat_map(|k| (gt_depth(k % 8, k / 8) as f32).to_le_bytes()).collect();
    std::fs::write(sc.path("gt.raw"), raw).unwrap();
    let raw_path = sc.s("gt.raw");
    let v = json_stdout(&vnlkit(&["eval-depth", "--pred", &raw_path, "--gt", &gt, "--intrinsics", &cam, "--align", "none"]));
    assert_eq!(v["metrics"]["abs_rel"].as_f64().unwrap(), 0.0);
    assert_eq!(error_kind(&vnlkit(&["eval-depth", "--pred", &raw_path, "--gt", &gt])), "config");
}

#[test]
fn vnl_of_identical_maps_is_zero() {
    let sc = Scene::new();
    let cam = sc.intrinsics(16, 16);
    let gt = sc.depth("gt.pfm", 16, 16, gt_depth);
    let grad = sc.s("grad.pfm");
    let out = vnlkit(&["vnl", "--pred", &gt, "--gt", &gt, "--intrinsics", &cam, "--samples", "500", "--seed", "7", "--grad-out", &grad]);
    let v = json_stdout(&out);
    assert_eq!(v["value"].as_f64().unwrap(), 0.0);
    assert_eq!(v["n_kept"].as_u64().unwrap(), 425);
    assert_eq!(v["config"]["sampling"]["seed"], 7);
    assert_eq!(v["config"]["sampling"]["theta"], 0.1);
    assert_eq!(v["config"]["hem"], 0.15);
    assert!(Path::new(&grad).exists());

    let pred = sc.depth("pred.pfm", 16, 16, |u, v| gt_depth(u, v) * (1.0 + 0.1 * ((u + 2 * v) as f64).sin()));
    let a = vnlkit(&["vnl", "--pred", &pred, "--gt", &gt, "--intrinsics", &cam, "--samples", "500", "--seed", "3"]);
    let b = vnlkit(&["vnl", "--pred", &pred, "--gt", &gt, "--intrinsics", &cam, "--samples", "500", "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    assert!(json_stdout(&a)["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn sphere_exp_without_noise() {
    let out = vnlkit(&["sphere-exp", "--sigmas", "0", "--points", "3000", "--vn-groups", "3000", "--sn-points", "2000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sigma,vn_mean_deg,sn_mean_deg"));
    let row: Vec<f64> = lines.next().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(row[0], 0.0);
    assert!(row[1] < 1e-6 && row[2] < 1e-6, "{row:?}");
}

#[test]
fn sphere_exp_summary_when_writing_a_file() {
    let sc = Scene::new();
    let csv = sc.s("rows.csv");
    let args = ["sphere-exp", "--sigmas", "0.01,0", "--points", "3000", "--vn-groups", "3000", "--sn-points", "2000", "--out", &csv];
    let v = json_stdout(&vnlkit(&args));
    assert_eq!(v["config"]["knn"], 9);
    assert_eq!(v["rows"][0]["sigma"], 0.0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);
}

#[test]
fn reconstruct_writes_ply() {
    let sc = Scene::new();
    let cam = sc.intrinsics(6, 5);
    let depth = sc.depth("d.pfm", 6, 5, |u, _| if u == 0 { 0.0 } else { 2.0 });
    let ply = sc.s("cloud.ply");
    let v = json_stdout(&vnlkit(&["reconstruct", "--depth", &depth, "--intrinsics", &cam, "--out", &ply]));
    assert_eq!(v["n_points"], 25);
    assert!(std::fs::read_to_string(&ply).unwrap().contains("element vertex 25\n"));

    let wrong = sc.intrinsics(7, 5);
    assert_eq!(error_kind(&vnlkit(&["reconstruct", "--depth", &depth, "--intrinsics", &wrong, "--out", &ply])), "dimension_mismatch");
}

#[test]
fn eval_normals_on_a_plane() {
    let sc = Scene::new();
    let (w, h) = (20, 16);
    let cam = sc.intrinsics(w, h);
    let n = Point3::new(0.2, -0.1, -1.0);
    let depth = sc.depth("plane.pfm", w, h, |u, v| {
        let ray = Point3::new((u as f64 - 9.5) / 20.0, (v as f64 - 7.5) / 16.0, 1.0);
        -2.0 / n.dot(&ray)
    });
    let field = NormalField::from_vectors(w, h, vec![n.normalize(); w * h]).unwrap();
    write_pfm_file(sc.path("normals.pfm"), &normals_to_pfm(&field)).unwrap();
    let normals = sc.s("normals.pfm");
    let v = json_stdout(&vnlkit(&["eval-normals", "--pred-depth", &depth, "--gt-normals", &normals, "--intrinsics", &cam, "--window", "2"]));
    assert!(v["metrics"]["mean_deg"].as_f64().unwrap() < 0.01);
    assert_eq!(v["metrics"]["pct_11_2"], 100.0);
}

#[test]
fn whdr_and_window_study() {
    let sc = Scene::new();
    let cam = sc.intrinsics(12, 12);
    let depth = sc.depth("d.pfm", 12, 12, gt_depth);
    std::fs::write(sc.path("pairs.csv"), "idx_a,idx_b,weight,label\n0,11,1,<\n0,1,2,=\n").unwrap();
    let pairs = sc.s("pairs.csv");
    let v = json_stdout(&vnlkit(&["whdr", "--pred", &depth, "--pairs", &pairs]));
    // depth[0] = 3 < depth[11] = 4.1; depth[1] = 3.1 differs from depth[0] by more than 2%
    assert!((v["whdr"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["config"]["tau"], 0.02);

    let out = vnlkit(&["window-study", "--depth", &depth, "--intrinsics", &cam, "--windows", "1,2,3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("window,i=1,i=2,i=3"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn curriculum_records() {
    let sc = Scene::new();
    std::fs::write(sc.path("easy.csv"), "sample_id,score\na0,0.5\na1,0.1\na2,0.9\na3,0.3\n").unwrap();
    std::fs::write(sc.path("hard.csv"), "b0,2\nb1,1\n").unwrap();
    let parts = format!("{},{}", sc.s("easy.csv"), sc.s("hard.csv"));
    let args = ["curriculum", "--parts", &parts, "--p", "0.5", "--step-len", "2", "--batch", "1", "--iters", "6", "--seed", "1"];
    let out = vnlkit(&args);
    assert!(out.status.success());
    let recs: Vec<Value> = String::from_utf8(out.stdout.clone()).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 6);
    assert_eq!(recs[0]["subset_sizes"], serde_json::json!([2, 1]));
    assert_eq!(recs[0]["batch"][1], serde_json::json!(["b1"]));
    assert!(["a1", "a3"].contains(&recs[0]["batch"][0][0].as_str().unwrap()));
    assert_eq!(recs[5]["subset_sizes"], serde_json::json!([4, 2]));
    assert_eq!(vnlkit(&args).stdout, out.stdout);

    let bad = ["curriculum", "--parts", &parts, "--p", "0.5", "--step-len", "2", "--batch", "3", "--iters", "6"];
    assert_eq!(error_kind(&vnlkit(&bad)), "config");
}

#[test]
fn filter_disparity_verdict_and_mask() {
    let sc = Scene::new();
    let (w, h) = (10, 4);
    let flow = |dx: f32, dy: f32| PfmImage::new(w, h, 3, (0..w * h).flat_map(|_| [dx, dy, 0.0]).collect()).unwrap();
    write_pfm_file(sc.path("lr.pfm"), &flow(0.0, 0.0)).unwrap();
    write_pfm_file(sc.path("rl.pfm"), &flow(0.0, 0.0)).unwrap();
    write_pfm_file(sc.path("lr_bad.pfm"), &flow(0.0, 6.0)).unwrap();
    let (lr, rl, bad, mask) = (sc.s("lr.pfm"), sc.s("rl.pfm"), sc.s("lr_bad.pfm"), sc.s("mask.pfm"));
    let v = json_stdout(&vnlkit(&["filter-disparity", "--lr", &lr, "--rl", &rl, "--out", &mask]));
    assert_eq!(v["keep"], true);
    assert_eq!(v["n_valid"], 40);
    let m = vnlkit::io::pfm::read_pfm_file(&mask).unwrap();
    assert!(m.data.iter().all(|&x| x == 1.0));
    let v = json_stdout(&vnlkit(&["filter-disparity", "--lr", &bad, "--rl", &rl]));
    assert_eq!(v["keep"], false);
    assert_eq!(v["config"]["filter"]["max_vertical"], 5.0);
}

#[test]
fn errors_are_machine_readable() {
    let sc = Scene::new();
    let missing = sc.s("nope.pfm");
    assert_eq!(error_kind(&vnlkit(&["eval-depth", "--pred", &missing, "--gt", &missing])), "io");
    std::fs::write(sc.path("x.png"), b"").unwrap();
    let png = sc.s("x.png");
    assert_eq!(error_kind(&vnlkit(&["eval-depth", "--pred", &png, "--gt", &png])), "unsupported_format");
    std::fs::write(sc.path("bad.pfm"), b"P6\n1 1\n-1\n").unwrap();
    let bad = sc.s("bad.pfm");
    assert_eq!(error_kind(&vnlkit(&["eval-depth", "--pred", &bad, "--gt", &bad])), "malformed");
}

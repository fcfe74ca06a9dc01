use std::path::Path;
use std::process::{Command, Output};

use haartv::io::{load_volume, stem_paths};
use haartv::metrics::rel_l2;
use tempfile::tempdir;

fn haartv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_haartv"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = haartv(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn load(dir: &Path, stem: &str) -> haartv::Volume64 {
    let (h, d) = stem_paths(&dir.join(stem));
    load_volume(&h, &d).unwrap()
}

#[test]
fn constant_phantom_has_zero_tv() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "phantom", "--kind", "constant", "--value", "5", "--dims", "16,16", "-o", "c",
        ],
    );
    assert!(load(d, "c").data().iter().all(|&x| x == 5.0));
    let out = ok(d, &["tv-estimate", "-i", "c"]);
    assert!(out.lines().any(|l| l == "tv = 0"), "{out}");
    let out = ok(d, &["tv-estimate", "-i", "c", "--level", "2"]);
    assert!(out.lines().any(|l| l == "tv = 0"), "{out}");
}

#[test]
fn zero_lambda_denoise_returns_input() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "phantom",
            "--kind",
            "gaussian_bump",
            "--dims",
            "12,20,9",
            "-o",
            "b",
        ],
    );
    for mode in ["live", "sparse", "single"] {
        ok(
            d,
            &[
                "denoise", "-i", "b", "-o", "u", "--lambda", "0", "--mode", mode,
            ],
        );
        let (f, u) = (load(d, "b"), load(d, "u"));
        assert!(rel_l2(&f, &u).unwrap() <= 1e-10, "{mode}");
    }
}

#[test]
fn noisy_sphere_pipeline_reports_all_metrics() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "phantom", "--kind", "sphere", "--dims", "64,64,64", "-o", "clean",
        ],
    );
    ok(
        d,
        &[
            "add-noise",
            "-i",
            "clean",
            "-o",
            "noisy",
            "--sigma",
            "0.2",
            "--seed",
            "11",
        ],
    );
    let table = ok(
        d,
        &[
            "denoise", "-i", "noisy", "-o", "den", "--lambda", "1", "--mode", "sparse", "--report",
            "r.toml",
        ],
    );
    for row in [
        "relative discrete TV",
        "relative wavelet TV",
        "relative L2 error",
        "PSNR",
        "coefficient sparsity",
    ] {
        assert!(table.contains(row), "{row} missing from\n{table}");
    }
    let report = std::fs::read_to_string(d.join("r.toml")).unwrap();
    for key in [
        "relative_discrete_tv",
        "relative_wavelet_tv",
        "rel_l2_error",
        "psnr",
        "sparsity",
        "lambda",
        "mode",
        "window",
    ] {
        assert!(
            report.lines().any(|l| l.starts_with(&format!("{key} ="))),
            "{key} missing from\n{report}"
        );
    }
    let machine = ok(
        d,
        &["metrics", "--reference", "clean", "--test", "den", "--toml"],
    );
    let parsed: haartv::TvReport = toml::from_str(&machine).unwrap();
    assert!(parsed.psnr.unwrap() > 0.0);
}

#[test]
fn decompose_reconstruct_round_trip() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["phantom", "--kind", "linear", "--dims", "7,10", "-o", "v"],
    );
    let out = ok(d, &["decompose", "-i", "v", "-o", "p"]);
    assert!(out.contains("m = 4"), "{out}");
    ok(d, &["reconstruct", "-i", "p", "-o", "w"]);
    let (v, w) = (load(d, "v"), load(d, "w"));
    assert_eq!(v.dims(), w.dims());
    assert!(rel_l2(&v, &w).unwrap() <= 1e-14);
    // tv-estimate accepts the stored pyramid as well as the volume
    assert_eq!(
        ok(d, &["tv-estimate", "-i", "p"]),
        ok(d, &["tv-estimate", "-i", "v"])
    );
}

#[test]
fn gradients_and_slices() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["phantom", "--kind", "step", "--dims", "8,8,8", "-o", "s"],
    );
    ok(
        d,
        &[
            "gradients",
            "-i",
            "s",
            "-o",
            "g.csv",
            "--mode",
            "edge",
            "--level",
            "2",
        ],
    );
    let csv = std::fs::read_to_string(d.join("g.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 64);
    assert!(csv.starts_with("level,alpha_1,alpha_2,alpha_3,x_1,x_2,x_3,g_1,g_2,g_3\n"));
    ok(
        d,
        &[
            "slice", "-i", "s", "-o", "s.pgm", "--axis", "2", "--index", "0",
        ],
    );
    let pgm = std::fs::read(d.join("s.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n8 8\n255\n"));
    assert_eq!(pgm.len(), 11 + 64);
}

#[test]
fn sweep_emits_one_run_per_lambda() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "phantom", "--kind", "sphere", "--dims", "16,16,16", "-o", "s",
        ],
    );
    ok(d, &["add-noise", "-i", "s", "-o", "n", "--sigma", "0.1"]);
    ok(
        d,
        &[
            "sweep",
            "-i",
            "n",
            "--lambdas",
            "0.01,0.1,1",
            "--mode",
            "sparse",
            "--report",
            "sweep.toml",
        ],
    );
    let text = std::fs::read_to_string(d.join("sweep.toml")).unwrap();
    assert_eq!(text.matches("[[run]]").count(), 3);
}

#[test]
fn failures_exit_nonzero_with_category() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    let out = haartv(d, &["tv-estimate", "-i", "missing"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]"));

    std::fs::write(d.join("bad.toml"), "shape = [2]\nsample_type = \"c64\"\n").unwrap();
    std::fs::write(d.join("bad.raw"), [0u8; 16]).unwrap();
    let out = haartv(d, &["tv-estimate", "-i", "bad"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[format]"));

    let out = haartv(d, &["phantom", "--kind", "torus", "--dims", "4", "-o", "t"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[usage]"));

    ok(
        d,
        &["phantom", "--kind", "constant", "--dims", "8", "-o", "c"],
    );
    let out = haartv(d, &["tv-estimate", "-i", "c", "--level", "3"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[domain]"));
}

#[test]
fn report_may_not_clobber_the_output_header() {
    let dir = tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &["phantom", "--kind", "sphere", "--dims", "8,8", "-o", "s"],
    );
    let out = haartv(
        d,
        &[
            "denoise", "-i", "s", "-o", "u", "--lambda", "1", "--report", "u.toml",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.join("u.toml").exists());
}

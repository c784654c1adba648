use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn cpd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpd"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn synthetic_pipeline_reports_the_spectral_gap_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(cpd(d, &["synth", "--model", "linear", "--phi-scale", "0.8", "--rmax", "12", "-o", "s.txt"]));
    ok(cpd(d, &["estimate", "--input", "s.txt", "-o", "e.csv", "--curve-csv", "curve.csv"]));
    let out = ok(cpd(d, &["spectrum", "--estimate", "e.csv", "--csv", "report.csv"]));
    let report = String::from_utf8(out.stdout).unwrap();
    for line in ["flag_A=true", "flag_B=true", "flag_C=true", "source=dataset", "consistent=true"] {
        assert!(report.lines().any(|l| l == line), "missing {line} in\n{report}");
    }
    assert!(report.starts_with("# tool=cpd "));
    assert!(read(d.join("report.csv")).lines().any(|l| l.starts_with("group,")));
    let curve = read(d.join("curve.csv"));
    assert!(curve.contains("gauge,radius,log_count\n"));
    assert_eq!(curve.lines().filter(|l| l.starts_with("riemannian,")).count(), 256);
}

#[test]
fn enumerating_a_free_group_counts_its_ball() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("free2.txt"), "# ping-pong pair\na = 2:1,2,0,1\nb = 2:1,0,2,1\n").unwrap();
    ok(cpd(d, &["enumerate", "--group", "sl2", "--gens", "free2.txt", "--maxlen", "8", "-o", "ball.txt"]));
    let text = read(d.join("ball.txt"));
    let records = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(records, 2 * 3usize.pow(8) - 1);
    assert!(text.contains("#meta config.maxlen=8\n"));
    assert!(text.lines().any(|l| l.starts_with("#meta input.gens.sha256=")));
}

#[test]
fn analytic_verification_passes_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = ok(cpd(dir.path(), &["verify", "--suite", "analytic"]));
    assert!(start.elapsed() < Duration::from_secs(60));
    assert!(String::from_utf8(out.stdout).unwrap().ends_with("result=pass\n"));
}

#[test]
fn analytic_spectrum_for_the_top_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(cpd(dir.path(), &["spectrum", "--group", "sl3", "--model", "linear", "--phi-scale", "2"]));
    let report = String::from_utf8(out.stdout).unwrap();
    for line in ["flag_A=false", "flag_ii=true", "flag_iv=true", "flag_v=true", "flag_vi=true", "source=analytic"] {
        assert!(report.lines().any(|l| l == line), "missing {line} in\n{report}");
    }
}

#[test]
fn inconsistent_inputs_exit_one_and_name_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = cpd(
        dir.path(),
        &["spectrum", "--group", "sl3", "--model", "linear", "--phi-scale", "2", "--delta-tilde", "0.42"],
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("consistency check"), "{}", stderr(&out));
    assert!(String::from_utf8(out.stdout).unwrap().contains("flag_A=withheld"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cpd(d, &["frobnicate"])), 2);
    assert_eq!(code(&cpd(d, &["synth", "-o", "x.txt"])), 2);
    assert_eq!(code(&cpd(d, &["synth", "--model", "linear", "--phi-scale", "2.5", "-o", "x.txt"])), 2);
    assert_eq!(code(&cpd(d, &["estimate", "--input", "x", "-o", "y", "--window-fraction", "1.5"])), 2);
    assert_eq!(code(&cpd(d, &["verify", "--threads", "0"])), 2);
    let out = cpd(d, &["synth", "--group", "sl5x", "--model", "radial", "--phi-scale", "1", "-o", "x.txt"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("sl5x") || stderr(&out).contains("factor"));
    assert_eq!(code(&cpd(d, &["--help"])), 0);
}

#[test]
fn file_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&cpd(d, &["estimate", "--input", "missing.txt", "-o", "e.csv"])), 3);
    std::fs::write(d.join("bad.txt"), "#cpd 1\n#group sl2\n#rank seven\n").unwrap();
    let out = cpd(d, &["estimate", "--input", "bad.txt", "-o", "e.csv"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    std::fs::write(d.join("gens.txt"), "2:1,2,0\n").unwrap();
    let out = cpd(d, &["enumerate", "--group", "sl2", "--gens", "gens.txt", "--maxlen", "2", "-o", "b.txt"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("line 1"));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (t, name) in [("1", "a"), ("4", "b")] {
        ok(cpd(
            d,
            &["synth", "--threads", t, "--model", "linear", "--phi-scale", "1.5", "--jitter", "0.3", "--seed", "9", "-o", "s.txt"],
        ));
        std::fs::rename(d.join("s.txt"), d.join(format!("{name}.txt"))).unwrap();
    }
    assert_eq!(read(d.join("a.txt")), read(d.join("b.txt")));
    for (t, name) in [("1", "a"), ("3", "b")] {
        ok(cpd(d, &["estimate", "--threads", t, "--input", "a.txt", "-o", &format!("{name}.csv")]));
    }
    assert_eq!(read(d.join("a.csv")), read(d.join("b.csv")));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.cfg"), "model = radial\nphi_scale = 0.5\ngroup = sl2\nrmax = 8\n").unwrap();
    ok(cpd(d, &["synth", "--config", "run.cfg", "--rmax", "6", "-o", "s.txt"]));
    let text = read(d.join("s.txt"));
    assert!(text.contains("#meta config.rmax=6.0\n"), "{text}");
    assert!(text.contains("#meta config.phi_scale=0.5\n"));
    assert!(text.contains("#group synthetic sl2\n"));
}

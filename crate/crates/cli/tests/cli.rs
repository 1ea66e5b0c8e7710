use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: [&str; 10] = ["--preset", "two-rate-discount", "--x-lo", "-5", "--x-hi", "5", "--nx", "61", "--nt", "64"];

fn tic(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tic-solve"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn summary(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout.clone()).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1, "one JSON line expected: {stdout}");
    serde_json::from_str(lines[0]).unwrap()
}

fn hashes(v: &Value) -> Vec<(String, String)> {
    v["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["file"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect()
}

fn hash_of(v: &Value, file: &str) -> String {
    hashes(v).into_iter().find(|(f, _)| f == file).unwrap_or_else(|| panic!("{file} not exported")).1
}

#[test]
fn cascade_writes_fields_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let v = summary(&tic(&[&SMALL[..], &["cascade", "--partition", "uniform:4"]].concat(), dir.path()));
    assert_eq!(v["command"], "cascade");
    assert_eq!(v["result"]["players"], 4);
    assert!(v["result"]["max_jump"].as_f64().unwrap() > 0.0);
    for f in ["config.toml", "value.csv", "value.json", "strategy.csv", "jumps.json", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(dir.path().join("value.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 65);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 1 + 61);
}

#[test]
fn local_optimality_flag_reports_every_player() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--preset", "exp-discount-lq", "--nx", "61", "--nt", "64", "cascade", "--partition", "uniform:4", "--check-players", "3"];
    let v = summary(&tic(&args, dir.path()));
    assert_eq!(v["result"]["local_optimality"]["passed"], true);
}

#[test]
fn equilibrium_methods_agree() {
    // Coarser x-grids put the finite-difference routes in their upwind regime,
    // whose numerical diffusion the kernel route does not share.
    let grid = ["--preset", "two-rate-discount", "--x-lo", "-5", "--x-hi", "5", "--nx", "161", "--nt", "128"];
    let mut values = Vec::new();
    for method in ["march", "picard", "kernel"] {
        let dir = tempfile::tempdir().unwrap();
        let v = summary(&tic(&[&grid[..], &["equilibrium", "--method", method]].concat(), dir.path()));
        assert_eq!(v["result"]["method"], if method == "march" { "diagonal-march" } else if method == "kernel" { "kernel-picard" } else { "picard" });
        let csv = std::fs::read_to_string(dir.path().join("value.csv")).unwrap();
        // Row t = 0, inner half of the domain.
        let row: Vec<f64> = csv.lines().nth(1).unwrap().split(',').skip(1).map(|c| c.parse().unwrap()).collect();
        values.push(row[40..=120].to_vec());
    }
    for other in &values[1..] {
        let gap = values[0].iter().zip(other).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-2, "methods differ by {gap}");
    }
}

#[test]
fn same_seed_reproduces_and_new_seed_changes_only_mc() {
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let args = [&SMALL[..], &["--seed", seed, "export", "--partition", "uniform:4", "--paths", "2000"]].concat();
        summary(&tic(&args, dir.path()))
    };
    let (a, b, c) = (run("5"), run("5"), run("6"));
    // config.toml records the output directory, which differs between runs here.
    let data = |v: &Value| hashes(v).into_iter().filter(|(f, _)| f != "config.toml").collect::<Vec<_>>();
    assert_eq!(data(&a), data(&b));
    assert_ne!(hash_of(&a, "mc.json"), hash_of(&c, "mc.json"));
    for f in ["equilibrium_value.csv", "equilibrium_strategy.csv", "cascade_value.csv", "cascade_strategy.csv"] {
        assert_eq!(hash_of(&a, f), hash_of(&c, f), "{f}");
    }
}

#[test]
fn mc_negative_control_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let args = [&SMALL[..], &["mc", "--partition", "uniform:4", "--paths", "4000", "--negative-control"]].concat();
    let v = summary(&tic(&args, dir.path()));
    assert!(v["result"]["z_score"].as_f64().unwrap().abs() <= 4.0, "{v}");
    assert!(v["result"]["negative_control_z"].as_f64().unwrap().abs() > 3.0, "{v}");
}

#[test]
fn converge_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let v = summary(&tic(&[&SMALL[..], &["converge", "--ladder", "2,4,8"]].concat(), dir.path()));
    assert!(v["result"]["fitted_rate"].as_f64().unwrap() > 0.5, "{v}");
    let csv = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn consistency_passes_on_tau_free_and_refuses_two_rate() {
    let dir = tempfile::tempdir().unwrap();
    let ok = tic(&["--preset", "tau-free", "--nx", "61", "--nt", "64", "consistency"], dir.path());
    assert_eq!(summary(&ok)["result"]["passed"], true);
    let refused = tic(&[&SMALL[..], &["consistency"]].concat(), dir.path());
    assert_eq!(refused.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[problem]\npreset = \"tau-free\"\n[grid]\nx_lo = -3.0\nx_hi = 3.0\nnx = 41\nnt = 64\n").unwrap();
    let out = dir.path().join("out");
    let v = summary(&tic(&["--config", cfg.to_str().unwrap(), "--nx", "51", "--param", "sigma=0.2", "equilibrium"], &out));
    assert_eq!(v["grid"]["nx"], 51);
    assert_eq!(v["grid"]["x_lo"], -3.0);
    let written = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(written.contains("sigma = 0.2"), "{written}");
}

#[test]
fn problem_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let prob = dir.path().join("lq.prob");
    std::fs::write(&prob, "b = u\nsigma = 0.3\ng = x^2 + u^2\nh = x^2\ncontrols = [-4, 4]\n").unwrap();
    let v = summary(&tic(&["--problem-file", prob.to_str().unwrap(), "--nx", "41", "--nt", "32", "cascade"], &dir.path().join("o")));
    assert_eq!(v["result"]["players"], 8);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| tic(args, dir.path()).status.code();
    assert_eq!(code(&["--preset", "nope", "cascade"]), Some(2));
    assert_eq!(code(&["cascade", "--partition", "uniform:x"]), Some(2));
    assert_eq!(code(&["--nx", "201", "--nt", "8", "cascade"]), Some(2), "CFL violation");
    assert_eq!(code(&["--cfl", "1.5", "cascade"]), Some(2));
    assert_eq!(code(&["--seed", "18446744073709551615", "cascade"]), Some(2));
    let narrow = ["--preset", "two-rate-discount", "--x-lo", "-1", "--x-hi", "1", "--nx", "41", "--nt", "auto"];
    assert_eq!(code(&[&narrow[..], &["equilibrium", "--method", "kernel"]].concat()), Some(3), "kernel tails leave the domain");
    let prob = dir.path().join("state_sigma.prob");
    std::fs::write(&prob, "b = u\nsigma = 0.2 + 0.1*u\ng = x^2 + u^2\nh = x^2\ncontrols = [-1, 1]\n").unwrap();
    assert_eq!(code(&["--problem-file", prob.to_str().unwrap(), "--nx", "41", "--nt", "64", "equilibrium"]), Some(4));
    let bad = dir.path().join("bad.prob");
    std::fs::write(&bad, "b = u\nsigma = (0.3\n").unwrap();
    let o = tic(&["--problem-file", bad.to_str().unwrap(), "cascade"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn thread_count_does_not_change_outputs() {
    let run = |threads: &str| {
        let dir = tempfile::tempdir().unwrap();
        let args = [&SMALL[..], &["--threads", threads, "export", "--method", "picard", "--paths", "3000"]].concat();
        let v = summary(&tic(&args, dir.path()));
        hashes(&v).into_iter().filter(|(f, _)| f != "config.toml").collect::<Vec<_>>()
    };
    assert_eq!(run("1"), run("3"));
}

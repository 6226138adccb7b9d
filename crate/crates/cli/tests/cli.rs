//! End-to-end runs of the `leakbound` binary on tiny configurations:
//! output schemas, provenance lines, byte-level determinism, and exit
//! codes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_leakbound")
}

struct Workspace {
    root: PathBuf,
}

impl Workspace {
    fn new(tag: &str) -> Self {
        let root = std::env::temp_dir().join(format!("leakbound_cli_{tag}_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&root);
        std::fs::create_dir_all(&root).unwrap();
        Self { root }
    }

    fn write_config(&self, name: &str, body: &str) -> PathBuf {
        let path = self.root.join(name);
        std::fs::write(&path, body).unwrap();
        path
    }

    fn out_dir(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }
}

impl Drop for Workspace {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.root);
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary launches")
}

fn tiny_config(out_dir: &Path, extra: &str) -> String {
    format!(
        "\
# tiny smoke configuration
ell = 3
sbox = identity
masked = true
sigma2_list = 1.0
q_grid = 1,2,4
n_draws = 400
seed = 11
output_dir = {}
{extra}",
        out_dir.display()
    )
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("missing output {}: {e}", path.display()))
}

fn assert_csv_shape(text: &str, header: &str) {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# seed="));
    assert!(lines.next().unwrap().starts_with("# n_draws="));
    assert!(lines.next().unwrap().starts_with("# config_hash="));
    let head = lines.next().unwrap();
    assert_eq!(head, header);
    let cols = head.split(',').count();
    let mut rows = 0;
    for line in lines {
        assert_eq!(line.split(',').count(), cols, "ragged row: {line}");
        rows += 1;
    }
    assert!(rows > 0, "no data rows");
}

#[test]
fn mi_command_writes_curves_and_plot() {
    let ws = Workspace::new("mi");
    let out = ws.out_dir("out");
    let cfg = ws.write_config("mi.conf", &tiny_config(&out, ""));
    let res = run(&["mi", "--config", cfg.to_str().unwrap(), "--threads", "2"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = read(&out.join("mi_curves.csv"));
    assert_csv_shape(&csv, "kind,sigma2,q,mi_bits,std_err");
    // Masked run: both MI kinds plus the capacity line, 3 grid points each.
    for kind in ["I_XYT", "I_UYT", "capacity"] {
        assert_eq!(
            csv.lines().filter(|l| l.starts_with(kind)).count(),
            3,
            "rows for {kind}"
        );
    }
    let svg = read(&out.join("mi_curves.svg"));
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn bound_command_writes_bounds_qmin_and_respects_empirical_column() {
    let ws = Workspace::new("bound");
    let out = ws.out_dir("out");
    let cfg = ws.write_config("b.conf", &tiny_config(&out, "target_ps = 0.9\n"));
    let res = run(&["bound", "--config", cfg.to_str().unwrap(), "--threads", "2"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert_csv_shape(
        &read(&out.join("bounds.csv")),
        "sigma2,q,ps_ceiling_uyt,ps_ceiling_xyt,capacity_bits",
    );
    assert_csv_shape(
        &read(&out.join("qmin.csv")),
        "sigma2,q_min_uyt,q_min_xyt,q_min_linear",
    );
    assert!(out.join("bounds_sr.svg").exists());

    // With n_attacks present the qmin table gains the empirical column.
    let out2 = ws.out_dir("out2");
    let cfg2 = ws.write_config(
        "b2.conf",
        &tiny_config(&out2, "target_ps = 0.9\nn_attacks = 50\n"),
    );
    let res2 = run(&["bound", "--config", cfg2.to_str().unwrap()]);
    assert!(res2.status.success());
    assert_csv_shape(
        &read(&out2.join("qmin.csv")),
        "sigma2,q_min_uyt,q_min_xyt,q_min_linear,q_min_empirical",
    );
}

#[test]
fn attack_command_writes_success_rates_and_overlays_bounds() {
    let ws = Workspace::new("attack");
    let out = ws.out_dir("out");
    let cfg = ws.write_config("a.conf", &tiny_config(&out, "n_attacks = 60\n"));
    let res = run(&["attack", "--config", cfg.to_str().unwrap(), "--threads", "2"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = read(&out.join("attack_sr.csv"));
    assert_csv_shape(&csv, "sigma2,q,success_rate,ci_low,ci_high,ties");
    // success_rate must be an exact multiple of 1/n_attacks in [0, 1].
    for line in csv.lines().skip(4) {
        let sr: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&sr));
        let scaled = sr * 60.0;
        assert!((scaled - scaled.round()).abs() < 1e-9);
    }
    let svg_before = read(&out.join("attack_sr.svg"));
    assert!(!svg_before.contains("ceiling"));

    // After `bound` has produced bounds.csv, the plot gains the overlay.
    let res = run(&["bound", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let res = run(&["attack", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success());
    let svg_after = read(&out.join("attack_sr.svg"));
    assert!(svg_after.contains("ceiling"));
}

#[test]
fn converge_command_writes_one_row_per_budget() {
    let ws = Workspace::new("converge");
    let out = ws.out_dir("out");
    let cfg = ws.write_config(
        "c.conf",
        &format!(
            "\
ell = 2
sbox = identity
masked = false
sigma2_list = 5.0
q_fixed = 2
n_draws_list = 100,400
seed = 3
output_dir = {}
",
            out.display()
        ),
    );
    let res = run(&["converge", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = read(&out.join("convergence.csv"));
    assert_csv_shape(&csv, "n_draws,q,mi_bits,std_err");
    assert_eq!(csv.lines().count(), 4 + 2, "one row per draw budget");
    assert!(out.join("convergence.svg").exists());
}

#[test]
fn oracle_command_compares_exact_and_monte_carlo() {
    let ws = Workspace::new("oracle");
    let out = ws.out_dir("out");
    let cfg = ws.write_config(
        "o.conf",
        &format!(
            "\
ell = 2
sbox = identity
masked = true
sigma2_list = 1.0, 10000.0
q_grid = 1,2
n_draws = 5000
seed = 5
output_dir = {}
",
            out.display()
        ),
    );
    let res = run(&["oracle", "--config", cfg.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = read(&out.join("oracle.csv"));
    assert_csv_shape(&csv, "ell,q,sigma2,mi_exact,mi_mc,std_err,z_score");
    let mut zs = Vec::new();
    for line in csv.lines().skip(4) {
        let fields: Vec<&str> = line.split(',').collect();
        let exact: f64 = fields[3].parse().unwrap();
        let z: f64 = fields[6].parse().unwrap();
        zs.push(z.abs());
        // Vanishing SNR rows carry essentially zero information.
        let sigma2: f64 = fields[2].parse().unwrap();
        if sigma2 > 100.0 {
            assert!(exact <= 0.01, "sigma2={sigma2} exact={exact}");
        }
    }
    let within = zs.iter().filter(|z| **z <= 3.0).count();
    assert!(
        within as f64 >= 0.95 * zs.len() as f64,
        "too many oracle outliers: {zs:?}"
    );
}

#[test]
fn reruns_are_byte_identical() {
    let ws = Workspace::new("determinism");
    let out_a = ws.out_dir("a");
    let out_b = ws.out_dir("b");
    // Same config contents except the output directory; same seed.
    let cfg_a = ws.write_config("a.conf", &tiny_config(&out_a, "n_attacks = 40\n"));
    let cfg_b = ws.write_config("b.conf", &tiny_config(&out_b, "n_attacks = 40\n"));
    for cmd in ["mi", "bound", "attack"] {
        // Different thread counts on purpose: results must not depend on
        // the worker count.
        let ra = run(&[cmd, "--config", cfg_a.to_str().unwrap(), "--threads", "1"]);
        let rb = run(&[cmd, "--config", cfg_b.to_str().unwrap(), "--threads", "2"]);
        assert!(ra.status.success() && rb.status.success());
    }
    for file in ["mi_curves.csv", "bounds.csv", "qmin.csv", "attack_sr.csv"] {
        let a = read(&out_a.join(file));
        let b = read(&out_b.join(file));
        // The config hash differs (different output_dir value), so compare
        // the bodies below the provenance block.
        let body = |s: &str| {
            s.lines()
                .filter(|l| !l.starts_with('#'))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(body(&a), body(&b), "{file} differs across runs");
    }

    // Re-running into the same directory reproduces the full file.
    let before = read(&out_a.join("mi_curves.csv"));
    let res = run(&["mi", "--config", cfg_a.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(before, read(&out_a.join("mi_curves.csv")));
}

#[test]
fn config_errors_exit_2() {
    let ws = Workspace::new("config_errors");
    let out = ws.out_dir("out");

    let missing = run(&["mi"]);
    assert_eq!(missing.status.code(), Some(2));

    let no_file = run(&["mi", "--config", "/nonexistent/x.conf"]);
    assert_eq!(no_file.status.code(), Some(2));

    let empty_sigmas = ws.write_config(
        "bad1.conf",
        &tiny_config(&out, "").replace("sigma2_list = 1.0", "sigma2_list ="),
    );
    assert_eq!(
        run(&["mi", "--config", empty_sigmas.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let unknown_key = ws.write_config("bad2.conf", &tiny_config(&out, "wat = 1\n"));
    assert_eq!(
        run(&["mi", "--config", unknown_key.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    // Oracle width cap.
    let wide = ws.write_config(
        "bad3.conf",
        &tiny_config(&out, "")
            .replace("ell = 3", "ell = 8")
            .replace("sbox = identity", "sbox = aes-subbytes"),
    );
    assert_eq!(
        run(&["oracle", "--config", wide.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    // Converge without its required keys.
    let no_fixed = ws.write_config("bad4.conf", &tiny_config(&out, ""));
    assert_eq!(
        run(&["converge", "--config", no_fixed.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn io_errors_exit_3() {
    let ws = Workspace::new("io_errors");
    // Point output_dir at a path whose parent is a regular file.
    let blocker = ws.root.join("blocker");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("out");
    let cfg = ws.write_config("io.conf", &tiny_config(&out, ""));
    let res = run(&["mi", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
}

//! The five experiment commands. Each one loads a validated
//! configuration, runs the computation at the requested profile, and
//! writes CSV tables (the contract) plus SVG line plots (a convenience)
//! into the configured output directory.

use std::path::{Path, PathBuf};

use leakbound_core::attack::{success_rate_curve, AttackConfig, AttackResult};
use leakbound_core::bounds::BoundReport;
use leakbound_core::mi::{convergence_sweep, estimate_mi_curves, MiCurve, QGrid};
use leakbound_core::oracle::mi_exact_small;
use leakbound_core::rng::{derive_seed, SeededRng};

use crate::config::{ExperimentConfig, Profile};
use crate::error::{CliError, Result};
use crate::plot::{line_plot, Series};
use crate::table::{fmt_f64, fmt_opt_q, Provenance, ResultTable};

fn ensure_output_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::io(&format!("creating {}", cfg.output_dir.display()), e))?;
    Ok(cfg.output_dir.clone())
}

fn provenance(cfg: &ExperimentConfig, n_draws: usize) -> Provenance {
    Provenance {
        seed: cfg.seed,
        n_draws,
        config_hash: cfg.config_hash.clone(),
    }
}

/// MI curves per noise level; masked runs also emit the capacity line.
pub fn cmd_mi(cfg: &ExperimentConfig, profile: Profile) -> Result<()> {
    let grid = cfg.require_q_grid()?.clone();
    let n_draws = cfg.resolved_n_draws(profile);
    let dir = ensure_output_dir(cfg)?;

    let mut table = ResultTable::new(vec!["kind", "sigma2", "q", "mi_bits", "std_err"]);
    let mut series = Vec::new();
    for (i, &sigma2) in cfg.sigma2_list.iter().enumerate() {
        let lcfg = cfg.leakage_config(sigma2)?;
        let rng = SeededRng::new(derive_seed(cfg.seed, i as u64));
        let curves = estimate_mi_curves(&lcfg, &grid, n_draws, &rng)?;
        for curve in [&curves.i_xyt, &curves.i_uyt] {
            let values = curve.clamped();
            for (g, &q) in grid.points().iter().enumerate() {
                table.push(vec![
                    curve.kind.to_string(),
                    fmt_f64(sigma2),
                    q.to_string(),
                    fmt_f64(values[g]),
                    fmt_f64(curve.std_errors[g]),
                ]);
            }
            series.push(Series {
                label: format!("{} s2={sigma2}", curve.kind),
                points: grid
                    .points()
                    .iter()
                    .zip(&values)
                    .map(|(&q, &v)| (q as f64, v))
                    .collect(),
                dashed: false,
            });
        }
        if cfg.masked {
            let snr = leakbound_core::bounds::snr_of(&lcfg);
            let caps: Vec<f64> = grid
                .points()
                .iter()
                .map(|&q| leakbound_core::bounds::capacity_bound(q, snr))
                .collect();
            for (g, &q) in grid.points().iter().enumerate() {
                table.push(vec![
                    "capacity".to_string(),
                    fmt_f64(sigma2),
                    q.to_string(),
                    fmt_f64(caps[g]),
                    fmt_f64(0.0),
                ]);
            }
            series.push(Series {
                label: format!("capacity s2={sigma2}"),
                points: grid
                    .points()
                    .iter()
                    .zip(&caps)
                    .map(|(&q, &v)| (q as f64, v))
                    .collect(),
                dashed: true,
            });
        }
    }
    table.write(&dir.join("mi_curves.csv"), &provenance(cfg, n_draws))?;
    line_plot(
        &dir.join("mi_curves.svg"),
        "Mutual information vs trace count",
        "traces q",
        "bits",
        &series,
    )
}

/// Success-rate ceilings, the capacity line, and minimum-trace
/// predictions; optionally the empirical q_min when `n_attacks` is set.
pub fn cmd_bound(cfg: &ExperimentConfig, profile: Profile) -> Result<()> {
    let grid = cfg.require_q_grid()?.clone();
    let n_draws = cfg.resolved_n_draws(profile);
    let target = cfg.resolved_target_ps();
    let dir = ensure_output_dir(cfg)?;
    let with_empirical = cfg.n_attacks.is_some();

    let mut bounds = ResultTable::new(vec![
        "sigma2",
        "q",
        "ps_ceiling_uyt",
        "ps_ceiling_xyt",
        "capacity_bits",
    ]);
    let mut qmin_header = vec!["sigma2", "q_min_uyt", "q_min_xyt", "q_min_linear"];
    if with_empirical {
        qmin_header.push("q_min_empirical");
    }
    let mut qmin = ResultTable::new(qmin_header);
    let mut series = Vec::new();

    for (i, &sigma2) in cfg.sigma2_list.iter().enumerate() {
        let lcfg = cfg.leakage_config(sigma2)?;
        let rng = SeededRng::new(derive_seed(cfg.seed, i as u64));
        let curves = estimate_mi_curves(&lcfg, &grid, n_draws, &rng)?;
        let single_letter = single_letter_uyt(&curves.i_uyt, cfg, sigma2, n_draws, i)?;
        let report = BoundReport::from_curves(&curves, target, single_letter)?;

        for (g, &q) in grid.points().iter().enumerate() {
            bounds.push(vec![
                fmt_f64(sigma2),
                q.to_string(),
                fmt_f64(report.ps_upper_uyt[g]),
                fmt_f64(report.ps_upper_xyt[g]),
                fmt_f64(report.capacity_line[g]),
            ]);
        }
        let mut row = vec![
            fmt_f64(sigma2),
            fmt_opt_q(report.q_min_uyt),
            fmt_opt_q(report.q_min_xyt),
            fmt_opt_q(report.q_min_linear),
        ];
        if with_empirical {
            let attack = run_attack(cfg, sigma2, &grid, i)?;
            row.push(fmt_opt_q(empirical_q_min(&attack, target)));
        }
        qmin.push(row);

        series.push(Series {
            label: format!("ceiling I_UYT s2={sigma2}"),
            points: grid
                .points()
                .iter()
                .zip(&report.ps_upper_uyt)
                .map(|(&q, &v)| (q as f64, v))
                .collect(),
            dashed: false,
        });
        series.push(Series {
            label: format!("ceiling I_XYT s2={sigma2}"),
            points: grid
                .points()
                .iter()
                .zip(&report.ps_upper_xyt)
                .map(|(&q, &v)| (q as f64, v))
                .collect(),
            dashed: true,
        });
    }
    let prov = provenance(cfg, n_draws);
    bounds.write(&dir.join("bounds.csv"), &prov)?;
    qmin.write(&dir.join("qmin.csv"), &prov)?;
    line_plot(
        &dir.join("bounds_sr.svg"),
        "Success-rate ceilings vs trace count",
        "traces q",
        "success rate",
        &series,
    )
}

/// The I(U;Y|T) estimate at q = 1 that feeds the linear bound: taken from
/// the curve when the grid starts at 1, otherwise from a dedicated
/// single-point run.
fn single_letter_uyt(
    curve: &MiCurve,
    cfg: &ExperimentConfig,
    sigma2: f64,
    n_draws: usize,
    index: usize,
) -> Result<f64> {
    if let Some(g) = curve.grid.index_of(1) {
        return Ok(curve.clamped()[g]);
    }
    let lcfg = cfg.leakage_config(sigma2)?;
    let rng = SeededRng::new(derive_seed(cfg.seed, 0x0100_0000 + index as u64));
    let single = estimate_mi_curves(&lcfg, &QGrid::single(1)?, n_draws, &rng)?;
    Ok(single.i_uyt.clamped()[0])
}

fn run_attack(
    cfg: &ExperimentConfig,
    sigma2: f64,
    grid: &QGrid,
    index: usize,
) -> Result<AttackResult> {
    let acfg = AttackConfig {
        leakage: cfg.leakage_config(sigma2)?,
        grid: grid.clone(),
        n_attacks: cfg.resolved_n_attacks(),
        seed: derive_seed(cfg.seed, 0x8000_0000 + index as u64),
        confusion_at: None,
    };
    Ok(success_rate_curve(&acfg)?)
}

/// First trace count at which the empirical curve reaches the target,
/// interpolating linearly in the success rate and rounding up.
fn empirical_q_min(attack: &AttackResult, target: f64) -> Option<usize> {
    let qs = attack.grid.points();
    let sr = &attack.success_rate;
    let first = sr.iter().position(|&v| v >= target)?;
    if first == 0 {
        return Some(qs[0]);
    }
    let (q0, v0) = (qs[first - 1] as f64, sr[first - 1]);
    let (q1, v1) = (qs[first] as f64, sr[first]);
    Some((q0 + (target - v0) * (q1 - q0) / (v1 - v0)).ceil() as usize)
}

/// Empirical ML success-rate curves, with the Fano ceiling overlaid when
/// the bound command already ran into the same directory.
pub fn cmd_attack(cfg: &ExperimentConfig, _profile: Profile) -> Result<()> {
    let grid = cfg.require_q_grid()?.clone();
    let dir = ensure_output_dir(cfg)?;
    let n_attacks = cfg.resolved_n_attacks();

    let mut table = ResultTable::new(vec![
        "sigma2",
        "q",
        "success_rate",
        "ci_low",
        "ci_high",
        "ties",
    ]);
    let mut series = Vec::new();
    for (i, &sigma2) in cfg.sigma2_list.iter().enumerate() {
        let attack = run_attack(cfg, sigma2, &grid, i)?;
        for (g, &q) in grid.points().iter().enumerate() {
            table.push(vec![
                fmt_f64(sigma2),
                q.to_string(),
                fmt_f64(attack.success_rate[g]),
                fmt_f64(attack.wilson_ci[g].0),
                fmt_f64(attack.wilson_ci[g].1),
                attack.ties_by_q[g].to_string(),
            ]);
        }
        series.push(Series {
            label: format!("ML attack s2={sigma2}"),
            points: grid
                .points()
                .iter()
                .zip(&attack.success_rate)
                .map(|(&q, &v)| (q as f64, v))
                .collect(),
            dashed: false,
        });
    }

    // Overlay previously computed ceilings, if present.
    for (sigma2, points) in load_uyt_ceilings(&dir.join("bounds.csv"), &cfg.sigma2_list) {
        series.push(Series {
            label: format!("ceiling s2={sigma2}"),
            points,
            dashed: true,
        });
    }

    table.write(&dir.join("attack_sr.csv"), &provenance(cfg, n_attacks))?;
    line_plot(
        &dir.join("attack_sr.svg"),
        "ML attack success rate vs trace count",
        "traces q",
        "success rate",
        &series,
    )
}

/// Best-effort parse of `bounds.csv` for the I(U;Y|T) ceilings of the
/// requested noise levels. Missing or foreign files are silently ignored.
fn load_uyt_ceilings(path: &Path, sigma2_list: &[f64]) -> Vec<(f64, Vec<(f64, f64)>)> {
    let Ok(text) = std::fs::read_to_string(path) else {
        return Vec::new();
    };
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let Some(header) = lines.next() else {
        return Vec::new();
    };
    let cols: Vec<&str> = header.split(',').collect();
    let (Some(c_s2), Some(c_q), Some(c_uyt)) = (
        cols.iter().position(|&c| c == "sigma2"),
        cols.iter().position(|&c| c == "q"),
        cols.iter().position(|&c| c == "ps_ceiling_uyt"),
    ) else {
        return Vec::new();
    };
    let mut out: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| fields.get(i).and_then(|s| s.parse::<f64>().ok());
        let (Some(s2), Some(q), Some(p)) = (parse(c_s2), parse(c_q), parse(c_uyt)) else {
            continue;
        };
        if !sigma2_list.contains(&s2) {
            continue;
        }
        match out.iter_mut().find(|(v, _)| *v == s2) {
            Some((_, pts)) => pts.push((q, p)),
            None => out.push((s2, vec![(q, p)])),
        }
    }
    out
}

/// Convergence of the estimate with the Monte-Carlo draw budget.
pub fn cmd_converge(cfg: &ExperimentConfig, _profile: Profile) -> Result<()> {
    let q_fixed = cfg
        .q_fixed
        .ok_or_else(|| CliError::config("converge requires `q_fixed`"))?;
    let list = cfg
        .n_draws_list
        .clone()
        .ok_or_else(|| CliError::config("converge requires `n_draws_list`"))?;
    if cfg.sigma2_list.len() != 1 {
        return Err(CliError::config(
            "converge expects a single-entry sigma2_list (the output schema has no sigma2 column)",
        ));
    }
    let dir = ensure_output_dir(cfg)?;
    let lcfg = cfg.leakage_config(cfg.sigma2_list[0])?;
    let rng = SeededRng::new(derive_seed(cfg.seed, 0));
    let sweep = convergence_sweep(&lcfg, q_fixed, &list, &rng)?;

    let mut table = ResultTable::new(vec!["n_draws", "q", "mi_bits", "std_err"]);
    for p in &sweep {
        table.push(vec![
            p.n_draws.to_string(),
            p.q.to_string(),
            fmt_f64(p.mi_bits),
            fmt_f64(p.std_error),
        ]);
    }
    let max_draws = list.iter().copied().max().unwrap_or(0);
    table.write(&dir.join("convergence.csv"), &provenance(cfg, max_draws))?;

    let mut sorted: Vec<_> = sweep.iter().collect();
    sorted.sort_by_key(|p| p.n_draws);
    let mk = |f: &dyn Fn(&leakbound_core::mi::ConvergencePoint) -> f64| -> Vec<(f64, f64)> {
        sorted.iter().map(|p| (p.n_draws as f64, f(p))).collect()
    };
    line_plot(
        &dir.join("convergence.svg"),
        "Estimate vs Monte-Carlo draw budget",
        "draws N",
        "bits",
        &[
            Series {
                label: format!("I_XYT at q={q_fixed}"),
                points: mk(&|p| p.mi_bits),
                dashed: false,
            },
            Series {
                label: "+3 SE".into(),
                points: mk(&|p| p.mi_bits + 3.0 * p.std_error),
                dashed: true,
            },
            Series {
                label: "-3 SE".into(),
                points: mk(&|p| p.mi_bits - 3.0 * p.std_error),
                dashed: true,
            },
        ],
    )
}

/// Exact-vs-Monte-Carlo comparison at tiny parameters. The compared MI is
/// the mode's primary one: I(U;Y|T) masked, I(X;Y|T) unprotected.
pub fn cmd_oracle(cfg: &ExperimentConfig, profile: Profile) -> Result<()> {
    let grid = cfg.require_q_grid()?.clone();
    if cfg.ell > 3 || grid.q_max() > 2 {
        return Err(CliError::config(format!(
            "oracle requires ell <= 3 and q <= 2, got ell={} and q up to {}",
            cfg.ell,
            grid.q_max()
        )));
    }
    let n_draws = cfg.resolved_n_draws(profile);
    let dir = ensure_output_dir(cfg)?;

    let mut table = ResultTable::new(vec![
        "ell", "q", "sigma2", "mi_exact", "mi_mc", "std_err", "z_score",
    ]);
    for (i, &sigma2) in cfg.sigma2_list.iter().enumerate() {
        let lcfg = cfg.leakage_config(sigma2)?;
        for &q in grid.points() {
            let (exact_x, exact_u) = mi_exact_small(&lcfg, q)?;
            let rng = SeededRng::new(derive_seed(cfg.seed, (i * grid.len() + q) as u64));
            let mc = estimate_mi_curves(&lcfg, &QGrid::single(q)?, n_draws, &rng)?;
            let (exact, est, se) = if cfg.masked {
                (exact_u, mc.i_uyt.raw[0], mc.i_uyt.std_errors[0])
            } else {
                (exact_x, mc.i_xyt.raw[0], mc.i_xyt.std_errors[0])
            };
            let z = (est - exact) / se;
            table.push(vec![
                cfg.ell.to_string(),
                q.to_string(),
                fmt_f64(sigma2),
                fmt_f64(exact),
                fmt_f64(est),
                fmt_f64(se),
                fmt_f64(z),
            ]);
        }
    }
    table.write(&dir.join("oracle.csv"), &provenance(cfg, n_draws))
}

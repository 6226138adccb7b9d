//! Naive reference evaluators shared by the integration tests.
//!
//! These deliberately mirror the definitions, not the implementation:
//! direct sums over every key and every mask, plain f64 products of
//! densities, no log-sum-exp, no Hamming-class factorization and no prefix
//! tricks. They are only usable at tiny `ell` and `q`, which is exactly
//! where they serve as ground truth.

#![allow(dead_code)]

use leakbound_core::leakage::{hamming_weight, LeakageConfig, Word};

/// `p(y|u)` for one trace by direct enumeration.
pub fn naive_density_given_u(cfg: &LeakageConfig, u: Word, y: f64) -> f64 {
    let s2 = cfg.sigma2();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * s2).sqrt();
    if cfg.masked {
        let order = cfg.field.order() as Word;
        let mut sum = 0.0;
        for m in 0..order {
            let mean = (hamming_weight(u ^ m) + hamming_weight(m)) as f64;
            sum += norm * (-(y - mean) * (y - mean) / (2.0 * s2)).exp();
        }
        sum / order as f64
    } else {
        let mean = hamming_weight(u) as f64;
        norm * (-(y - mean) * (y - mean) / (2.0 * s2)).exp()
    }
}

/// `log2 p(y|t)`: plain sum over keys of plain products over traces.
pub fn naive_log2_pyt(cfg: &LeakageConfig, t: &[Word], y: &[f64]) -> f64 {
    let order = cfg.field.order() as Word;
    let mut total = 0.0;
    for k in 0..order {
        let mut prod = 1.0;
        for (&ti, &yi) in t.iter().zip(y) {
            prod *= naive_density_given_u(cfg, cfg.sbox.apply(ti ^ k), yi);
        }
        total += prod;
    }
    (total / order as f64).log2()
}

/// `log2 p(y|u)`: per-trace densities multiplied out.
pub fn naive_log2_pyu(cfg: &LeakageConfig, u: &[Word], y: &[f64]) -> f64 {
    u.iter()
        .zip(y)
        .map(|(&ui, &yi)| naive_density_given_u(cfg, ui, yi).log2())
        .sum()
}

/// Per-key ML scores by direct enumeration: unprotected the matched-filter
/// sum, masked the log of the raw mask sum per trace.
pub fn naive_ml_scores(cfg: &LeakageConfig, t: &[Word], y: &[f64]) -> Vec<f64> {
    let order = cfg.field.order() as Word;
    let s2 = cfg.sigma2();
    (0..order)
        .map(|k| {
            t.iter()
                .zip(y)
                .map(|(&ti, &yi)| {
                    let u = cfg.sbox.apply(ti ^ k);
                    if cfg.masked {
                        let mut sum = 0.0;
                        for m in 0..order {
                            let mean = (hamming_weight(u ^ m) + hamming_weight(m)) as f64;
                            sum += (-(yi - mean) * (yi - mean) / (2.0 * s2)).exp();
                        }
                        sum.ln()
                    } else {
                        let mean = hamming_weight(u) as f64;
                        -(yi - mean) * (yi - mean) / (2.0 * s2)
                    }
                })
                .sum()
        })
        .collect()
}

/// Relative agreement: `|a - b| <= tol * max(|a|, |b|)`.
pub fn assert_rel_close(a: f64, b: f64, tol: f64, what: &str) {
    let scale = a.abs().max(b.abs());
    assert!(
        (a - b).abs() <= tol * scale,
        "{what}: {a} vs {b} (rel diff {})",
        (a - b).abs() / scale
    );
}

/// Standard normal density.
pub fn phi(z: f64) -> f64 {
    (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

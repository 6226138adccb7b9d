//! Log-likelihood kernels `log2 p(y|t)` and `log2 p(y|u)`.
//!
//! Both likelihoods are finite Gaussian mixtures. For `p(y|t)` the mixture
//! runs over the `2^ell` key hypotheses; per key the traces factor, so a
//! single pass over the traces maintains one running log-likelihood per key
//! and takes a log-sum-exp snapshot at every requested prefix length. One
//! pass therefore yields the value at every grid point.
//!
//! In the masked case the per-trace, per-key factor is itself a sum over
//! the `2^ell` masks. That sum depends on the key only through
//! `h = w_H(S(t_i XOR k))` and collapses, via [`MaskClassCounts`], to the
//! `2*ell + 1` attainable leakage values:
//!
//! `sum_m exp(-(y_i - f(t_i,k,m))^2 / 2s2) = sum_s N[h][s] exp(-(y_i - s)^2 / 2s2)`
//!
//! so each trace costs one small table build plus a lookup per key instead
//! of a fresh `2^ell`-term sum per key.
//!
//! Everything is accumulated in natural log with shift-by-max
//! stabilization and converted to bits at the prefix snapshots.

use std::f64::consts::LN_2;

use crate::leakage::{hamming_weight, LeakageConfig, MaskClassCounts, Word};
use crate::stats::log_sum_exp;

use super::QGrid;

/// Lookup tables shared by every draw evaluated under one configuration.
pub(crate) struct KernelTables {
    /// `w_H(S[w])` for every word `w`.
    hw_of_sbox: Vec<u8>,
    /// Mask multiplicities, masked configurations only.
    counts: Option<MaskClassCounts>,
}

impl KernelTables {
    pub(crate) fn new(cfg: &LeakageConfig) -> Self {
        let hw_of_sbox = (0..cfg.field.order())
            .map(|w| hamming_weight(cfg.sbox.apply(w as Word)) as u8)
            .collect();
        let counts = cfg.masked.then(|| MaskClassCounts::new(cfg.field));
        Self { hw_of_sbox, counts }
    }
}

/// Streaming evaluator for one draw at a time; owns the scratch buffers so
/// a worker can reuse them across draws.
pub(crate) struct PrefixEvaluator<'a> {
    tables: &'a KernelTables,
    inv_two_sigma2: f64,
    /// `log2(2 pi sigma^2)`.
    log2_norm: f64,
    ell: f64,
    masked: bool,
    /// Per-trace value for each sensitive-weight class `h`:
    /// unmasked `-(y-h)^2/2s2`, masked `ln sum_s N[h][s] e^{-(y-s)^2/2s2}`.
    class_table: Vec<f64>,
    /// Running per-key log-likelihood, natural log.
    key_acc: Vec<f64>,
    /// Raw Gaussian exponents over attainable leakage values (masked).
    exponents: Vec<f64>,
}

impl<'a> PrefixEvaluator<'a> {
    pub(crate) fn new(cfg: &LeakageConfig, tables: &'a KernelTables) -> Self {
        let ell = cfg.field.ell();
        Self {
            tables,
            inv_two_sigma2: 1.0 / (2.0 * cfg.sigma2()),
            log2_norm: (2.0 * std::f64::consts::PI * cfg.sigma2()).log2(),
            ell: ell as f64,
            masked: cfg.masked,
            class_table: vec![0.0; ell as usize + 1],
            key_acc: vec![0.0; cfg.field.order()],
            exponents: vec![0.0; 2 * ell as usize + 1],
        }
    }

    fn fill_class_table(&mut self, y_i: f64) {
        match &self.tables.counts {
            None => {
                for (h, slot) in self.class_table.iter_mut().enumerate() {
                    let d = y_i - h as f64;
                    *slot = -d * d * self.inv_two_sigma2;
                }
            }
            Some(counts) => {
                let mut shift = f64::NEG_INFINITY;
                for (s, slot) in self.exponents.iter_mut().enumerate() {
                    let d = y_i - s as f64;
                    let e = -d * d * self.inv_two_sigma2;
                    *slot = e;
                    if e > shift {
                        shift = e;
                    }
                }
                for e in self.exponents.iter_mut() {
                    *e = (*e - shift).exp();
                }
                let s_max = self.exponents.len() - 1;
                for (h, slot) in self.class_table.iter_mut().enumerate() {
                    let row = counts.row(h as u32);
                    let mut sum = 0.0;
                    // Only s = h, h+2, ... are attainable for class h.
                    let mut s = h;
                    while s <= s_max {
                        sum += row[s] as f64 * self.exponents[s];
                        s += 2;
                    }
                    *slot = shift + sum.ln();
                }
            }
        }
    }

    /// `log2 p(y|t)` at prefix `q`: normalization constants plus the
    /// log-sum-exp over key hypotheses. The `-ell` term is the uniform key
    /// prior; masked runs carry one more `-ell` per trace for the mask
    /// prior.
    fn finish_pyt(&self, q: usize, lse_nats: f64) -> f64 {
        let q = q as f64;
        let mask_prior = if self.masked { self.ell * q } else { 0.0 };
        -self.ell - mask_prior - 0.5 * q * self.log2_norm + lse_nats / LN_2
    }

    /// `log2 p(y|u)` at prefix `q`; no key sum, mask prior only.
    fn finish_pyu(&self, q: usize, acc_nats: f64) -> f64 {
        let q = q as f64;
        let mask_prior = if self.masked { self.ell * q } else { 0.0 };
        -mask_prior - 0.5 * q * self.log2_norm + acc_nats / LN_2
    }

    /// Fills `out_t[g] = log2 p(y|t)` and `out_u[g] = log2 p(y|u)` for every
    /// prefix length in `grid`, in one pass over the traces.
    pub(crate) fn eval_joint(
        &mut self,
        t: &[Word],
        u: &[Word],
        y: &[f64],
        grid: &QGrid,
        out_t: &mut [f64],
        out_u: &mut [f64],
    ) {
        assert_eq!(t.len(), y.len());
        assert_eq!(u.len(), y.len());
        assert!(grid.q_max() <= y.len(), "grid extends past the trace count");
        assert_eq!(out_t.len(), grid.len());
        assert_eq!(out_u.len(), grid.len());

        self.key_acc.fill(0.0);
        let mut acc_u = 0.0;
        let mut gi = 0;
        for i in 0..grid.q_max() {
            self.fill_class_table(y[i]);
            let cls = &self.class_table;
            let hw_s = &self.tables.hw_of_sbox;
            let ti = t[i] as usize;
            for (k, acc) in self.key_acc.iter_mut().enumerate() {
                *acc += cls[hw_s[ti ^ k] as usize];
            }
            acc_u += cls[hamming_weight(u[i]) as usize];
            if grid.points()[gi] == i + 1 {
                out_t[gi] = self.finish_pyt(i + 1, log_sum_exp(&self.key_acc));
                out_u[gi] = self.finish_pyu(i + 1, acc_u);
                gi += 1;
                if gi == grid.len() {
                    break;
                }
            }
        }
        debug_assert_eq!(gi, grid.len());
    }

    /// `log2 p(y|u)` only, skipping the per-key work.
    pub(crate) fn eval_pyu(&mut self, u: &[Word], y: &[f64], grid: &QGrid, out_u: &mut [f64]) {
        assert_eq!(u.len(), y.len());
        assert!(grid.q_max() <= y.len(), "grid extends past the trace count");
        assert_eq!(out_u.len(), grid.len());
        let mut acc_u = 0.0;
        let mut gi = 0;
        for i in 0..grid.q_max() {
            self.fill_class_table(y[i]);
            acc_u += self.class_table[hamming_weight(u[i]) as usize];
            if grid.points()[gi] == i + 1 {
                out_u[gi] = self.finish_pyu(i + 1, acc_u);
                gi += 1;
                if gi == grid.len() {
                    break;
                }
            }
        }
        debug_assert_eq!(gi, grid.len());
    }

    /// Per-trace score table for the maximum-likelihood distinguisher:
    /// `out[h]` is the log-likelihood contribution of a trace for any key
    /// hypothesis whose sensitive value has Hamming weight `h` (unmasked:
    /// the raw Gaussian exponent; masked: the mask-marginalized log sum).
    pub(crate) fn score_table(&mut self, y_i: f64, out: &mut [f64]) {
        self.fill_class_table(y_i);
        out.copy_from_slice(&self.class_table);
    }

    pub(crate) fn hw_of_sbox(&self) -> &[u8] {
        &self.tables.hw_of_sbox
    }
}

/// `log2 p(y|t)` for an unprotected configuration, evaluated at every
/// prefix length in `grid`.
pub fn log2_p_y_given_t_unmasked(
    t: &[Word],
    y: &[f64],
    cfg: &LeakageConfig,
    grid: &QGrid,
) -> Vec<f64> {
    assert!(!cfg.masked, "unmasked kernel called on a masked config");
    eval_pyt(t, y, cfg, grid)
}

/// `log2 p(y|t)` for a first-order masked configuration, at every prefix
/// length in `grid`. The inner mask sum uses the Hamming-class counts.
pub fn log2_p_y_given_t_masked(
    t: &[Word],
    y: &[f64],
    cfg: &LeakageConfig,
    grid: &QGrid,
) -> Vec<f64> {
    assert!(cfg.masked, "masked kernel called on an unmasked config");
    eval_pyt(t, y, cfg, grid)
}

/// `log2 p(y|u)` for a masked configuration, at every prefix length.
pub fn log2_p_y_given_u_masked(
    u: &[Word],
    y: &[f64],
    cfg: &LeakageConfig,
    grid: &QGrid,
) -> Vec<f64> {
    assert!(cfg.masked, "masked kernel called on an unmasked config");
    eval_pyu_only(u, y, cfg, grid)
}

/// `log2 p(y|u)` for an unprotected configuration (a plain Gaussian
/// product; the kernel depends on `u` only through its Hamming weight).
pub fn log2_p_y_given_u_unmasked(
    u: &[Word],
    y: &[f64],
    cfg: &LeakageConfig,
    grid: &QGrid,
) -> Vec<f64> {
    assert!(!cfg.masked, "unmasked kernel called on a masked config");
    eval_pyu_only(u, y, cfg, grid)
}

fn eval_pyt(t: &[Word], y: &[f64], cfg: &LeakageConfig, grid: &QGrid) -> Vec<f64> {
    let tables = KernelTables::new(cfg);
    let mut eval = PrefixEvaluator::new(cfg, &tables);
    let mut out_t = vec![0.0; grid.len()];
    let mut out_u = vec![0.0; grid.len()];
    // The sensitive values are irrelevant for p(y|t); feed t as a stand-in.
    eval.eval_joint(t, t, y, grid, &mut out_t, &mut out_u);
    out_t
}

fn eval_pyu_only(u: &[Word], y: &[f64], cfg: &LeakageConfig, grid: &QGrid) -> Vec<f64> {
    let tables = KernelTables::new(cfg);
    let mut eval = PrefixEvaluator::new(cfg, &tables);
    let mut out_u = vec![0.0; grid.len()];
    eval.eval_pyu(u, y, grid, &mut out_u);
    out_u
}

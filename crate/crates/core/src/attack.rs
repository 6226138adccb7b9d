//! The optimal maximum-likelihood attack, used as the empirical baseline
//! the bounds must dominate.
//!
//! The distinguisher scores every key hypothesis by its log-likelihood and
//! returns the argmax. Unprotected, the score is the matched-filter sum
//! `sum_i -(y_i - w_H(S(t_i^k)))^2 / 2s2`; masked, each trace contributes
//! the mask-marginalized `log sum_s N[h_k][s] exp(-(y_i-s)^2/2s2)`, reusing
//! the Hamming-class factorization of the likelihood kernels. The attacker
//! knows the true noise variance.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::leakage::{sample_draw, LeakageConfig, Word};
use crate::mi::kernels::{KernelTables, PrefixEvaluator};
use crate::mi::QGrid;
use crate::rng::SeededRng;
use crate::stats::wilson_interval;

/// z quantile of the reported Wilson intervals (95%).
const WILSON_Z: f64 = 1.96;

/// One full attack campaign: repetitions of fresh-key experiments over a
/// grid of trace budgets.
#[derive(Debug, Clone)]
pub struct AttackConfig {
    pub leakage: LeakageConfig,
    pub grid: QGrid,
    /// Independent repetitions per grid point.
    pub n_attacks: usize,
    pub seed: u64,
    /// Record a (true key x guessed key) confusion matrix at this grid
    /// point, if set.
    pub confusion_at: Option<usize>,
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_attacks < 1 {
            return Err(Error::NoRepetitions);
        }
        if let Some(q) = self.confusion_at {
            if self.grid.index_of(q).is_none() {
                return Err(Error::ConfusionOffGrid(q));
            }
        }
        Ok(())
    }
}

/// Joint (true key, guessed key) counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confusion {
    order: usize,
    counts: Vec<u64>,
}

impl Confusion {
    fn new(order: usize) -> Self {
        Self {
            order,
            counts: vec![0; order * order],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn count(&self, truth: Word, guess: Word) -> u64 {
        self.counts[truth as usize * self.order + guess as usize]
    }

    fn record(&mut self, truth: Word, guess: Word) {
        self.counts[truth as usize * self.order + guess as usize] += 1;
    }

    fn absorb(&mut self, other: &Confusion) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Empirical success-rate curve of the ML attack.
#[derive(Debug, Clone)]
pub struct AttackResult {
    pub grid: QGrid,
    pub n_attacks: usize,
    /// `successes / n_attacks` per grid point, exactly.
    pub success_rate: Vec<f64>,
    /// 95% Wilson score interval per grid point.
    pub wilson_ci: Vec<(f64, f64)>,
    /// Argmax ties observed per grid point (broken to the smallest key).
    pub ties_by_q: Vec<u64>,
    pub confusion: Option<Confusion>,
}

impl AttackResult {
    /// Total ties across all grid points.
    pub fn ties(&self) -> u64 {
        self.ties_by_q.iter().sum()
    }
}

/// Argmax with deterministic tie-breaking: the smallest index wins and the
/// tie is flagged.
pub fn argmax_smallest(scores: &[f64]) -> (usize, bool) {
    assert!(!scores.is_empty());
    let mut best = 0;
    let mut tied = false;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
            tied = false;
        } else if s == scores[best] {
            tied = true;
        }
    }
    (best, tied)
}

/// Outcome of one distinguishing attempt.
#[derive(Debug, Clone)]
pub struct MlOutcome {
    pub guess: Word,
    /// Per-key log-likelihood scores (natural log; constants common to all
    /// keys are kept so the masked scores match the naive mask sums).
    pub scores: Vec<f64>,
    pub tied: bool,
}

/// Runs the ML distinguisher on one set of traces.
pub fn ml_distinguish(t: &[Word], y: &[f64], cfg: &LeakageConfig) -> MlOutcome {
    assert!(!t.is_empty(), "the distinguisher needs at least one trace");
    assert_eq!(t.len(), y.len());
    let tables = KernelTables::new(cfg);
    let mut eval = PrefixEvaluator::new(cfg, &tables);
    let mut scores = vec![0.0f64; cfg.field.order()];
    let mut class = vec![0.0f64; cfg.field.ell() as usize + 1];
    for (&ti, &yi) in t.iter().zip(y) {
        eval.score_table(yi, &mut class);
        let hw_s = eval.hw_of_sbox();
        let ti = ti as usize;
        for (k, s) in scores.iter_mut().enumerate() {
            *s += class[hw_s[ti ^ k] as usize];
        }
    }
    let (guess, tied) = argmax_smallest(&scores);
    MlOutcome {
        guess: guess as Word,
        scores,
        tied,
    }
}

/// Estimates the success-rate curve: `n_attacks` independent experiments
/// (fresh key, plaintexts, masks, noise) per configuration; within one
/// repetition, larger trace budgets extend the same trace stream, so every
/// grid point of a repetition shares its prefix with the smaller ones.
pub fn success_rate_curve(acfg: &AttackConfig) -> Result<AttackResult> {
    acfg.validate()?;
    let cfg = &acfg.leakage;
    let grid = &acfg.grid;
    let tables = KernelTables::new(cfg);
    let rng = SeededRng::new(acfg.seed);
    let order = cfg.field.order();
    let confusion_idx = acfg.confusion_at.and_then(|q| grid.index_of(q));

    struct RepTally {
        successes: Vec<u64>,
        ties: Vec<u64>,
        confusion: Option<Confusion>,
    }

    let tally = (0..acfg.n_attacks)
        .into_par_iter()
        .fold(
            || RepTally {
                successes: vec![0; grid.len()],
                ties: vec![0; grid.len()],
                confusion: confusion_idx.map(|_| Confusion::new(order)),
            },
            |mut tally, rep| {
                let batch = sample_draw(cfg, grid.q_max(), &rng, rep as u64);
                let mut eval = PrefixEvaluator::new(cfg, &tables);
                let mut scores = vec![0.0f64; order];
                let mut class = vec![0.0f64; cfg.field.ell() as usize + 1];
                let mut gi = 0;
                for i in 0..grid.q_max() {
                    eval.score_table(batch.y[i], &mut class);
                    let hw_s = eval.hw_of_sbox();
                    let ti = batch.t[i] as usize;
                    for (k, s) in scores.iter_mut().enumerate() {
                        *s += class[hw_s[ti ^ k] as usize];
                    }
                    if grid.points()[gi] == i + 1 {
                        let (guess, tied) = argmax_smallest(&scores);
                        if guess as Word == batch.k {
                            tally.successes[gi] += 1;
                        }
                        if tied {
                            tally.ties[gi] += 1;
                        }
                        if confusion_idx == Some(gi) {
                            tally
                                .confusion
                                .as_mut()
                                .expect("confusion tally exists")
                                .record(batch.k, guess as Word);
                        }
                        gi += 1;
                        if gi == grid.len() {
                            break;
                        }
                    }
                }
                tally
            },
        )
        .reduce(
            || RepTally {
                successes: vec![0; grid.len()],
                ties: vec![0; grid.len()],
                confusion: confusion_idx.map(|_| Confusion::new(order)),
            },
            |mut a, b| {
                for (x, y) in a.successes.iter_mut().zip(&b.successes) {
                    *x += y;
                }
                for (x, y) in a.ties.iter_mut().zip(&b.ties) {
                    *x += y;
                }
                if let (Some(ca), Some(cb)) = (a.confusion.as_mut(), b.confusion.as_ref()) {
                    ca.absorb(cb);
                }
                a
            },
        );

    let n = acfg.n_attacks as u64;
    let success_rate = tally
        .successes
        .iter()
        .map(|&s| s as f64 / n as f64)
        .collect();
    let wilson_ci = tally
        .successes
        .iter()
        .map(|&s| wilson_interval(s, n, WILSON_Z))
        .collect();
    Ok(AttackResult {
        grid: grid.clone(),
        n_attacks: acfg.n_attacks,
        success_rate,
        wilson_ci,
        ties_by_q: tally.ties,
        confusion: tally.confusion,
    })
}

/// Plug-in mutual information `I(K; K_hat)` in bits from a confusion
/// matrix: `sum_ij p_ij log2(p_ij / (p_i. p_.j))` over its empirical joint
/// distribution.
pub fn empirical_ki_khat(confusion: &Confusion) -> f64 {
    let n = confusion.total() as f64;
    assert!(n > 0.0, "confusion matrix is empty");
    let order = confusion.order();
    let mut row = vec![0.0f64; order];
    let mut col = vec![0.0f64; order];
    for (truth, r) in row.iter_mut().enumerate() {
        for (guess, c) in col.iter_mut().enumerate() {
            let count = confusion.count(truth as Word, guess as Word) as f64;
            *r += count;
            *c += count;
        }
    }
    let mut mi = 0.0;
    for (truth, &r) in row.iter().enumerate() {
        for (guess, &c) in col.iter().enumerate() {
            let count = confusion.count(truth as Word, guess as Word) as f64;
            if count > 0.0 {
                mi += count / n * ((count * n) / (r * c)).log2();
            }
        }
    }
    mi
}

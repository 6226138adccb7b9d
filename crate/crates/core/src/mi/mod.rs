//! Monte-Carlo estimation of `I(X;Y|T)` and `I(U;Y|T)` over a grid of
//! trace counts.
//!
//! Both mutual informations are differences of conditional entropies:
//!
//! * `I(X;Y|T) = H(Y|T) - H(Y|X)`, with `H(Y|X)` the closed-form noise
//!   entropy `q/2 * log2(2 pi e sigma^2)`;
//! * `I(U;Y|T) = H(Y|T) - H(Y|U)`.
//!
//! `H(Y|T)` and `H(Y|U)` are estimated as `-(1/N) sum_j log2 p(y^j | .)`
//! over `N` independent draws. Both use the *same* draws, and the standard
//! error of `I(U;Y|T)` is taken from the per-draw differences, which is far
//! tighter than combining the two entropies' errors. The per-prefix kernels
//! make one pass over each draw cover every grid point.
//!
//! Raw estimates can leave the admissible range through Monte-Carlo noise
//! (e.g. slightly negative at tiny `q`); they are kept raw and clamped only
//! when reported.

pub mod kernels;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::leakage::{sample_draw, LeakageConfig};
use crate::rng::SeededRng;
use crate::stats::RunningStats;

use kernels::{KernelTables, PrefixEvaluator};

/// Fixed number of draws per reduction chunk. Chunks are processed
/// sequentially inside and merged in index order, so estimates do not
/// depend on the rayon thread count.
const DRAW_CHUNK: usize = 256;

/// Strictly increasing trace counts at which curves are evaluated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QGrid {
    points: Vec<usize>,
}

impl QGrid {
    pub fn new(points: Vec<usize>) -> Result<Self> {
        if points.is_empty() || points[0] < 1 || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid);
        }
        Ok(Self { points })
    }

    pub fn single(q: usize) -> Result<Self> {
        Self::new(vec![q])
    }

    /// `count` integer points spread evenly over `[start, stop]`,
    /// deduplicated after rounding.
    pub fn linspace(start: usize, stop: usize, count: usize) -> Result<Self> {
        if count == 0 || stop < start {
            return Err(Error::InvalidGrid);
        }
        let mut points: Vec<usize> = (0..count)
            .map(|i| {
                if count == 1 {
                    stop
                } else {
                    let f = i as f64 / (count - 1) as f64;
                    (start as f64 + f * (stop - start) as f64).round() as usize
                }
            })
            .collect();
        points.dedup();
        Self::new(points)
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn q_max(&self) -> usize {
        *self.points.last().expect("grid is never empty")
    }

    /// Index of `q` in the grid, if present.
    pub fn index_of(&self, q: usize) -> Option<usize> {
        self.points.binary_search(&q).ok()
    }
}

/// `H(Y|X) = q/2 * log2(2 pi e sigma^2)` bits: the entropy of the additive
/// Gaussian noise on `q` independent samples.
pub fn noise_entropy(sigma2: f64, q: usize) -> f64 {
    debug_assert!(sigma2 > 0.0);
    q as f64 * 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * sigma2).log2()
}

/// A Monte-Carlo entropy (or MI) estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    /// Bits.
    pub value: f64,
    /// Sample standard deviation of the per-draw terms over sqrt(n_draws).
    pub std_error: f64,
    pub n_draws: usize,
}

/// Which mutual information a curve estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MiKind {
    /// `I(X;Y|T)`: noiseless leakage vs noisy leakage.
    Xyt,
    /// `I(U;Y|T)`: sensitive variable vs noisy leakage (equals `I(K;Y|T)`).
    Uyt,
}

impl std::fmt::Display for MiKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MiKind::Xyt => write!(f, "I_XYT"),
            MiKind::Uyt => write!(f, "I_UYT"),
        }
    }
}

/// An estimated MI curve over a grid of trace counts.
#[derive(Debug, Clone, PartialEq)]
pub struct MiCurve {
    pub kind: MiKind,
    pub grid: QGrid,
    /// Raw (unclamped) estimates in bits, one per grid point.
    pub raw: Vec<f64>,
    /// Standard errors in bits, one per grid point.
    pub std_errors: Vec<f64>,
    pub n_draws: usize,
    pub config: LeakageConfig,
}

impl MiCurve {
    /// Admissible upper limit for reported values: `H(K) = ell` bits for
    /// `I(U;Y|T)`; none for `I(X;Y|T)`, which is not bounded by the key
    /// entropy in masked implementations.
    pub fn upper_clamp(&self) -> Option<f64> {
        match self.kind {
            MiKind::Xyt => None,
            MiKind::Uyt => Some(self.config.field.ell() as f64),
        }
    }

    /// Values clamped into the admissible range, for reporting and for the
    /// bounds. Raw values stay available in `raw`.
    pub fn clamped(&self) -> Vec<f64> {
        let hi = self.upper_clamp().unwrap_or(f64::INFINITY);
        self.raw.iter().map(|&v| v.clamp(0.0, hi)).collect()
    }

    /// Number of grid points whose raw value fell outside the admissible
    /// range (a Monte-Carlo noise warning, not an error).
    pub fn clamp_count(&self) -> usize {
        let hi = self.upper_clamp().unwrap_or(f64::INFINITY);
        self.raw.iter().filter(|&&v| v < 0.0 || v > hi).count()
    }
}

/// The two curves estimated from one set of common draws.
#[derive(Debug, Clone, PartialEq)]
pub struct MiCurves {
    pub i_xyt: MiCurve,
    pub i_uyt: MiCurve,
}

/// Per-grid-point running statistics of `-log2 p(y|t)` (for `H(Y|T)`) and
/// of `log2 p(y|u) - log2 p(y|t)` (the per-draw `I(U;Y|T)` terms).
struct DrawStats {
    hyt: Vec<RunningStats>,
    diff: Vec<RunningStats>,
}

impl DrawStats {
    fn new(grid_len: usize) -> Self {
        Self {
            hyt: vec![RunningStats::new(); grid_len],
            diff: vec![RunningStats::new(); grid_len],
        }
    }

    fn merge(&mut self, other: &DrawStats) {
        for (a, b) in self.hyt.iter_mut().zip(&other.hyt) {
            a.merge(b);
        }
        for (a, b) in self.diff.iter_mut().zip(&other.diff) {
            a.merge(b);
        }
    }
}

/// Evaluates draws `lo..hi` in fixed-size chunks, in parallel, and merges
/// the chunk statistics in index order.
fn draw_range_stats(
    cfg: &LeakageConfig,
    grid: &QGrid,
    lo: usize,
    hi: usize,
    rng: &SeededRng,
    tables: &KernelTables,
) -> DrawStats {
    let n_chunks = (hi - lo).div_ceil(DRAW_CHUNK);
    let partials: Vec<DrawStats> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let chunk_lo = lo + ci * DRAW_CHUNK;
            let chunk_hi = (chunk_lo + DRAW_CHUNK).min(hi);
            let mut eval = PrefixEvaluator::new(cfg, tables);
            let mut out_t = vec![0.0; grid.len()];
            let mut out_u = vec![0.0; grid.len()];
            let mut stats = DrawStats::new(grid.len());
            for j in chunk_lo..chunk_hi {
                let batch = sample_draw(cfg, grid.q_max(), rng, j as u64);
                eval.eval_joint(&batch.t, &batch.u, &batch.y, grid, &mut out_t, &mut out_u);
                for g in 0..grid.len() {
                    stats.hyt[g].push(-out_t[g]);
                    stats.diff[g].push(out_u[g] - out_t[g]);
                }
            }
            stats
        })
        .collect();

    let mut total = DrawStats::new(grid.len());
    for part in &partials {
        total.merge(part);
    }
    total
}

fn curves_from_stats(
    cfg: &LeakageConfig,
    grid: &QGrid,
    stats: &DrawStats,
    n_draws: usize,
) -> MiCurves {
    let mut xyt_raw = Vec::with_capacity(grid.len());
    let mut xyt_se = Vec::with_capacity(grid.len());
    let mut uyt_raw = Vec::with_capacity(grid.len());
    let mut uyt_se = Vec::with_capacity(grid.len());
    for (g, &q) in grid.points().iter().enumerate() {
        xyt_raw.push(stats.hyt[g].mean() - noise_entropy(cfg.sigma2(), q));
        xyt_se.push(stats.hyt[g].std_error());
        uyt_raw.push(stats.diff[g].mean());
        uyt_se.push(stats.diff[g].std_error());
    }
    MiCurves {
        i_xyt: MiCurve {
            kind: MiKind::Xyt,
            grid: grid.clone(),
            raw: xyt_raw,
            std_errors: xyt_se,
            n_draws,
            config: cfg.clone(),
        },
        i_uyt: MiCurve {
            kind: MiKind::Uyt,
            grid: grid.clone(),
            raw: uyt_raw,
            std_errors: uyt_se,
            n_draws,
            config: cfg.clone(),
        },
    }
}

/// Estimates `I(X;Y|T)` and `I(U;Y|T)` at every grid point from `n_draws`
/// common draws. Needs `n_draws >= 2` for the variance estimates.
pub fn estimate_mi_curves(
    cfg: &LeakageConfig,
    grid: &QGrid,
    n_draws: usize,
    rng: &SeededRng,
) -> Result<MiCurves> {
    if n_draws < 2 {
        return Err(Error::TooFewDraws(n_draws));
    }
    let tables = KernelTables::new(cfg);
    let stats = draw_range_stats(cfg, grid, 0, n_draws, rng, &tables);
    Ok(curves_from_stats(cfg, grid, &stats, n_draws))
}

/// One point of a convergence sweep: the `I(X;Y|T)` estimate at a fixed
/// trace count after `n_draws` Monte-Carlo draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub n_draws: usize,
    pub q: usize,
    pub mi_bits: f64,
    pub std_error: f64,
}

/// Estimates `I(X;Y|T)` at `q_fixed` for each draw budget in
/// `n_draws_list`, reporting the estimate and its shrinking standard error.
///
/// Budgets are evaluated on nested draw sets (the larger budget extends the
/// smaller), so the whole sweep costs one pass at the largest budget.
pub fn convergence_sweep(
    cfg: &LeakageConfig,
    q_fixed: usize,
    n_draws_list: &[usize],
    rng: &SeededRng,
) -> Result<Vec<ConvergencePoint>> {
    if n_draws_list.is_empty() {
        return Err(Error::InvalidGrid);
    }
    if let Some(&bad) = n_draws_list.iter().find(|&&n| n < 2) {
        return Err(Error::TooFewDraws(bad));
    }
    let grid = QGrid::single(q_fixed)?;
    let tables = KernelTables::new(cfg);

    let mut checkpoints: Vec<usize> = n_draws_list.to_vec();
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let mut snapshots = Vec::with_capacity(checkpoints.len());
    let mut running = DrawStats::new(1);
    let mut done = 0;
    for &target in &checkpoints {
        let segment = draw_range_stats(cfg, &grid, done, target, rng, &tables);
        running.merge(&segment);
        done = target;
        let mi = running.hyt[0].mean() - noise_entropy(cfg.sigma2(), q_fixed);
        snapshots.push((target, mi, running.hyt[0].std_error()));
    }

    // Report in the caller's order.
    Ok(n_draws_list
        .iter()
        .map(|&n| {
            let &(_, mi, se) = snapshots
                .iter()
                .find(|&&(cp, _, _)| cp == n)
                .expect("every requested budget has a checkpoint");
            ConvergencePoint {
                n_draws: n,
                q: q_fixed,
                mi_bits: mi,
                std_error: se,
            }
        })
        .collect())
}

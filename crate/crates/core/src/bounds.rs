//! Success-rate bounds from mutual information.
//!
//! Fano's inequality links the success rate `p` of *any* key-recovery
//! attack to the information available about the key:
//!
//! `f_P(p) = H(K) - H_2(p) - (1 - p) * log2(2^ell - 1) <= I(U;Y|T)`
//!
//! with `H(K) = ell` bits for a uniform key. `f_P` is strictly increasing
//! on `[2^-ell, 1]`, so inverting it turns an MI estimate into a ceiling on
//! the success rate, and an MI-vs-q curve into a lower bound on the number
//! of traces needed to reach a target success rate. The same machinery
//! applies to the looser `I(X;Y|T)` variant, and `I(X;Y|T)` itself is
//! dominated by the Shannon capacity line `q/2 * log2(1 + SNR)`.

use crate::error::{Error, Result};
use crate::leakage::{hamming_weight, LeakageConfig, Word};
use crate::mi::{MiCurve, MiCurves, QGrid};

/// Bisection tolerance (in success-rate units) for the Fano inversion.
const INVERSE_TOL: f64 = 1e-9;
const INVERSE_MAX_ITER: u32 = 200;

/// Binary entropy `H_2(p)` in bits, with `H_2(0) = H_2(1) = 0` by
/// continuity.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Key-alphabet context for the Fano bound: `H(K) = ell` bits and the
/// uniform-guessing floor `2^-ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FanoContext {
    ell: u32,
}

impl FanoContext {
    pub fn new(ell: u32) -> Result<Self> {
        if !(1..=16).contains(&ell) {
            return Err(Error::InvalidWordWidth(ell));
        }
        Ok(Self { ell })
    }

    pub fn for_config(cfg: &LeakageConfig) -> Self {
        Self {
            ell: cfg.field.ell(),
        }
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// `H(K)` in bits for a uniform key.
    pub fn key_entropy(&self) -> f64 {
        self.ell as f64
    }

    /// Success rate of blind uniform guessing, `2^-ell`.
    pub fn p_floor(&self) -> f64 {
        (-(self.ell as f64)).exp2()
    }
}

/// `f_P(p) = H(K) - H_2(p) - (1-p) log2(2^ell - 1)`, defined (and strictly
/// increasing) for `p` in `[2^-ell, 1]`.
pub fn fano_fp(p: f64, ctx: &FanoContext) -> Result<f64> {
    if !(ctx.p_floor()..=1.0).contains(&p) {
        return Err(Error::SuccessRateOutOfDomain(p));
    }
    let alt = (ctx.key_entropy().exp2() - 1.0).log2();
    Ok(ctx.key_entropy() - binary_entropy(p)? - (1.0 - p) * alt)
}

/// Inverts `f_P`: the largest success rate compatible with `mi_bits` bits
/// of information. The MI is clamped into `[0, ell]` first (negative
/// Monte-Carlo estimates floor at blind guessing; `I(K;Y|T) <= H(K)` caps
/// the top). Bisection to 1e-9 absolute in `p`.
pub fn fano_inverse(mi_bits: f64, ctx: &FanoContext) -> f64 {
    let mi = mi_bits.clamp(0.0, ctx.key_entropy());
    if mi <= 0.0 {
        return ctx.p_floor();
    }
    if mi >= ctx.key_entropy() {
        return 1.0;
    }
    let mut lo = ctx.p_floor();
    let mut hi = 1.0;
    for _ in 0..INVERSE_MAX_ITER {
        if hi - lo <= INVERSE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let f = fano_fp(mid, ctx).expect("mid stays inside the domain");
        if f < mi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Pointwise success-rate ceiling for an MI curve (clamped values).
pub fn ps_ceiling_curve(curve: &MiCurve, ctx: &FanoContext) -> Vec<f64> {
    curve
        .clamped()
        .iter()
        .map(|&mi| fano_inverse(mi, ctx))
        .collect()
}

/// Smallest trace count at which the curve's (clamped) MI reaches
/// `f_P(target_ps)`, interpolating linearly in MI between grid points and
/// rounding up. `None` when the curve never reaches the threshold.
pub fn q_min_predict(
    curve: &MiCurve,
    target_ps: f64,
    ctx: &FanoContext,
) -> Result<Option<usize>> {
    let threshold = fano_fp(target_ps, ctx)?;
    let values = curve.clamped();
    let qs = curve.grid.points();
    let Some(first) = values.iter().position(|&v| v >= threshold) else {
        return Ok(None);
    };
    if first == 0 {
        return Ok(Some(qs[0]));
    }
    let (q0, v0) = (qs[first - 1] as f64, values[first - 1]);
    let (q1, v1) = (qs[first] as f64, values[first]);
    let q_star = q0 + (threshold - v0) * (q1 - q0) / (v1 - v0);
    Ok(Some(q_star.ceil() as usize))
}

/// Signal-to-noise ratio `Var(X) / sigma2`, with the noiseless-leakage
/// variance computed by exhaustive enumeration of the leakage alphabet
/// under uniform inputs (masked: both shares enumerated via the
/// Hamming-weight histogram convolution).
pub fn snr_of(cfg: &LeakageConfig) -> f64 {
    let ell = cfg.field.ell();
    let order = cfg.field.order();
    let mut hist = vec![0u64; ell as usize + 1];
    for w in 0..order {
        hist[hamming_weight(w as Word) as usize] += 1;
    }
    let var_x = if cfg.masked {
        // X = w_H(u^m) + w_H(m); (u^m, m) ranges uniformly over all pairs,
        // so the leakage distribution is the convolution of the histogram
        // with itself.
        let mut conv = vec![0u64; 2 * ell as usize + 1];
        for (a, &ca) in hist.iter().enumerate() {
            for (b, &cb) in hist.iter().enumerate() {
                conv[a + b] += ca * cb;
            }
        }
        histogram_variance(&conv)
    } else {
        histogram_variance(&hist)
    };
    var_x / cfg.sigma2()
}

fn histogram_variance(hist: &[u64]) -> f64 {
    let total: u64 = hist.iter().sum();
    let n = total as f64;
    let mean: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as f64 * c as f64)
        .sum::<f64>()
        / n;
    hist.iter()
        .enumerate()
        .map(|(v, &c)| (v as f64 - mean).powi(2) * c as f64)
        .sum::<f64>()
        / n
}

/// Shannon capacity line: `I(X;Y|T) <= q/2 * log2(1 + SNR)` bits.
pub fn capacity_bound(q: usize, snr: f64) -> f64 {
    debug_assert!(snr >= 0.0);
    q as f64 * 0.5 * (1.0 + snr).log2()
}

/// Single-letter linear bound `q * I_1` on a `q`-trace MI.
pub fn linear_mi_bound(single_letter_mi: f64, q: usize) -> f64 {
    q as f64 * single_letter_mi
}

/// Trace count predicted by the linear single-letter bound:
/// `ceil(threshold / I_1)`, at least 1. `None` when the single-letter MI
/// carries no information.
pub fn q_min_linear(single_letter_mi: f64, threshold_bits: f64) -> Option<usize> {
    if single_letter_mi <= 0.0 {
        return None;
    }
    Some(((threshold_bits / single_letter_mi).ceil() as usize).max(1))
}

/// Everything the bound commands report for one configuration: pointwise
/// success-rate ceilings, the capacity line, and the minimum-trace
/// predictions for a target success rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub config: LeakageConfig,
    pub grid: QGrid,
    pub target_ps: f64,
    /// Ceiling from `I(U;Y|T)` (the tight bound).
    pub ps_upper_uyt: Vec<f64>,
    /// Ceiling from `I(X;Y|T)` (the loose variant).
    pub ps_upper_xyt: Vec<f64>,
    /// `q/2 * log2(1 + SNR)` per grid point.
    pub capacity_line: Vec<f64>,
    pub snr: f64,
    pub q_min_uyt: Option<usize>,
    pub q_min_xyt: Option<usize>,
    pub q_min_linear: Option<usize>,
}

impl BoundReport {
    /// Builds the report from a pair of estimated curves.
    /// `single_letter_mi_uyt` is the `I(U;Y|T)` estimate at `q = 1`, which
    /// feeds the linear bound (callers take it from the curve when the grid
    /// starts at 1, or from a dedicated single-point run).
    pub fn from_curves(
        curves: &MiCurves,
        target_ps: f64,
        single_letter_mi_uyt: f64,
    ) -> Result<Self> {
        let cfg = &curves.i_uyt.config;
        let ctx = FanoContext::for_config(cfg);
        let threshold = fano_fp(target_ps, &ctx)?;
        let snr = snr_of(cfg);
        let grid = curves.i_uyt.grid.clone();
        let capacity_line = grid
            .points()
            .iter()
            .map(|&q| capacity_bound(q, snr))
            .collect();
        Ok(Self {
            config: cfg.clone(),
            grid,
            target_ps,
            ps_upper_uyt: ps_ceiling_curve(&curves.i_uyt, &ctx),
            ps_upper_xyt: ps_ceiling_curve(&curves.i_xyt, &ctx),
            capacity_line,
            snr,
            q_min_uyt: q_min_predict(&curves.i_uyt, target_ps, &ctx)?,
            q_min_xyt: q_min_predict(&curves.i_xyt, target_ps, &ctx)?,
            q_min_linear: q_min_linear(single_letter_mi_uyt.max(0.0), threshold),
        })
    }
}

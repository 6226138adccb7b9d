//! Exact ground truth at tiny parameters.
//!
//! For `ell <= 3` and `q <= 2` the conditional densities are small finite
//! Gaussian mixtures that can be enumerated outright and integrated by
//! composite Simpson quadrature, giving `H(Y|T)`, `H(Y|U)`, `H(Y|X)` and
//! hence both mutual informations without any Monte-Carlo step. This is
//! the independent route used to validate the estimators: mixtures are
//! enumerated naively (every key, every mask), with none of the
//! factorizations or log-domain tricks of the estimation path.
//!
//! `q = 2` needs a genuine two-dimensional integral for `H(Y|T)` (the two
//! traces share the key, so the mixture does not factor given `t`), while
//! `H(Y|U)` and `H(Y|X)` factor exactly across traces because masks and
//! noise are drawn per trace.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::leakage::{hamming_weight, LeakageConfig, Word};

/// Quadrature layout: composite Simpson with step `sigma/50` on
/// `[0 - 8*sigma, s_max + 8*sigma]` per trace dimension, where `s` ranges
/// over the attainable leakage values. The truncated Gaussian tail mass
/// (< 1e-15) is negligible against the 1e-6 bit accuracy target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub step: f64,
    pub pad: f64,
}

impl QuadratureSpec {
    pub fn for_config(cfg: &LeakageConfig) -> Self {
        Self {
            step: cfg.sigma() / 50.0,
            pad: 8.0 * cfg.sigma(),
        }
    }

    pub fn halved(&self) -> Self {
        Self {
            step: self.step / 2.0,
            pad: self.pad,
        }
    }
}

/// Which variable the reported entropy conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// `H(Y|T)`.
    Plaintexts,
    /// `H(Y|U)`.
    Sensitive,
    /// `H(Y|X)`; must agree with the closed-form noise entropy.
    Leakage,
}

fn check_caps(cfg: &LeakageConfig, q: usize) -> Result<()> {
    if cfg.field.ell() > 3 || q == 0 || q > 2 {
        return Err(Error::OracleLimit {
            ell: cfg.field.ell(),
            q,
        });
    }
    Ok(())
}

/// One-dimensional Simpson grid with fused weights.
struct Quad {
    ys: Vec<f64>,
    w: Vec<f64>,
}

impl Quad {
    fn build(cfg: &LeakageConfig, spec: &QuadratureSpec) -> Self {
        assert!(spec.step > 0.0, "quadrature step must be positive");
        let s_max = cfg.max_leakage() as f64;
        let lo = -spec.pad;
        let hi = s_max + spec.pad;
        assert!(
            spec.pad >= 8.0 * cfg.sigma(),
            "support must cover all mixture means +- 8 sigma"
        );
        let mut n = ((hi - lo) / spec.step).ceil() as usize;
        if n % 2 == 1 {
            n += 1;
        }
        let h = (hi - lo) / n as f64;
        let ys = (0..=n).map(|i| lo + i as f64 * h).collect();
        let w = (0..=n)
            .map(|i| {
                let c = if i == 0 || i == n {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect();
        Self { ys, w }
    }
}

/// `p(y|u)` for a single trace, by naive enumeration: a plain Gaussian
/// unprotected, the uniform mixture over all masks otherwise.
fn density_given_u(cfg: &LeakageConfig, u: Word, y: f64) -> f64 {
    let s2 = cfg.sigma2();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * s2).sqrt();
    if cfg.masked {
        let order = cfg.field.order();
        let mut sum = 0.0;
        for m in 0..order as Word {
            let mean = (hamming_weight(u ^ m) + hamming_weight(m)) as f64;
            sum += norm * (-(y - mean).powi(2) / (2.0 * s2)).exp();
        }
        sum / order as f64
    } else {
        let mean = hamming_weight(u) as f64;
        norm * (-(y - mean).powi(2) / (2.0 * s2)).exp()
    }
}

/// Rows `d[u][g] = p(y_g | u)` over the quadrature grid.
fn density_rows(cfg: &LeakageConfig, quad: &Quad) -> Vec<Vec<f64>> {
    (0..cfg.field.order())
        .map(|u| {
            quad.ys
                .iter()
                .map(|&y| density_given_u(cfg, u as Word, y))
                .collect()
        })
        .collect()
}

#[inline]
fn neg_p_log2_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// `-integral p log2 p` over one dimension.
fn entropy_of_row(row: &[f64], quad: &Quad) -> f64 {
    row.iter()
        .zip(&quad.w)
        .map(|(&p, &w)| w * neg_p_log2_p(p))
        .sum()
}

fn h_y_given_x_single(cfg: &LeakageConfig, quad: &Quad) -> f64 {
    // p(y|x) is the same Gaussian for every attainable x; mean 0 lies
    // inside the support.
    let s2 = cfg.sigma2();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * s2).sqrt();
    let row: Vec<f64> = quad
        .ys
        .iter()
        .map(|&y| norm * (-y * y / (2.0 * s2)).exp())
        .collect();
    entropy_of_row(&row, quad)
}

fn h_y_given_u_single(rows: &[Vec<f64>], quad: &Quad) -> f64 {
    // U is uniform (bijective S-box on uniform t XOR k).
    rows.iter().map(|row| entropy_of_row(row, quad)).sum::<f64>() / rows.len() as f64
}

fn h_y_given_t_single(cfg: &LeakageConfig, rows: &[Vec<f64>], quad: &Quad) -> f64 {
    // Given any t, the key sweeps u = S(t XOR k) over the whole alphabet,
    // so p(y|t) is the full uniform mixture for every t.
    let order = cfg.field.order() as f64;
    let mix: Vec<f64> = (0..quad.ys.len())
        .map(|g| rows.iter().map(|row| row[g]).sum::<f64>() / order)
        .collect();
    entropy_of_row(&mix, quad)
}

fn h_y_given_t_pair(cfg: &LeakageConfig, rows: &[Vec<f64>], quad: &Quad) -> f64 {
    // p(y1, y2 | t1, t2) = 2^-ell sum_k p(y1|S(t1^k)) p(y2|S(t2^k)).
    // Substituting w = t1 XOR k shows the mixture depends on (t1, t2) only
    // through delta = t1 XOR t2, so averaging over plaintext pairs reduces
    // to averaging over delta.
    let order = cfg.field.order();
    let npts = quad.ys.len();
    let per_delta: Vec<f64> = (0..order as Word)
        .into_par_iter()
        .map(|delta| {
            let mut h = 0.0;
            let mut p_row = vec![0.0f64; npts];
            for g1 in 0..npts {
                p_row.fill(0.0);
                for w in 0..order as Word {
                    let r1 = &rows[cfg.sbox.apply(w) as usize];
                    let r2 = &rows[cfg.sbox.apply(w ^ delta) as usize];
                    let c = r1[g1] / order as f64;
                    for (acc, &d) in p_row.iter_mut().zip(r2) {
                        *acc += c * d;
                    }
                }
                let w1 = quad.w[g1];
                h += w1
                    * p_row
                        .iter()
                        .zip(&quad.w)
                        .map(|(&p, &w2)| w2 * neg_p_log2_p(p))
                        .sum::<f64>();
            }
            h
        })
        .collect();
    per_delta.iter().sum::<f64>() / order as f64
}

/// Exact conditional entropy in bits at tiny parameters, by enumeration
/// plus quadrature.
pub fn entropy_exact_small_with(
    cfg: &LeakageConfig,
    q: usize,
    cond: Conditioning,
    spec: &QuadratureSpec,
) -> Result<f64> {
    check_caps(cfg, q)?;
    let quad = Quad::build(cfg, spec);
    let value = match cond {
        Conditioning::Leakage => q as f64 * h_y_given_x_single(cfg, &quad),
        Conditioning::Sensitive => {
            // Given u, traces factor (masks and noise are per trace), and
            // each u_i is marginally uniform, so H(Y|U) = q * H(Y_1|U_1).
            let rows = density_rows(cfg, &quad);
            q as f64 * h_y_given_u_single(&rows, &quad)
        }
        Conditioning::Plaintexts => {
            let rows = density_rows(cfg, &quad);
            match q {
                1 => h_y_given_t_single(cfg, &rows, &quad),
                2 => h_y_given_t_pair(cfg, &rows, &quad),
                _ => unreachable!("caps checked"),
            }
        }
    };
    Ok(value)
}

/// [`entropy_exact_small_with`] at the default quadrature layout.
pub fn entropy_exact_small(cfg: &LeakageConfig, q: usize, cond: Conditioning) -> Result<f64> {
    entropy_exact_small_with(cfg, q, cond, &QuadratureSpec::for_config(cfg))
}

/// Exact `(I(X;Y|T), I(U;Y|T))` in bits at tiny parameters. Both are
/// entropy differences against the same quadrature layout, so the
/// integration bias largely cancels.
pub fn mi_exact_small_with(
    cfg: &LeakageConfig,
    q: usize,
    spec: &QuadratureSpec,
) -> Result<(f64, f64)> {
    let h_yt = entropy_exact_small_with(cfg, q, Conditioning::Plaintexts, spec)?;
    let h_yu = entropy_exact_small_with(cfg, q, Conditioning::Sensitive, spec)?;
    let h_yx = entropy_exact_small_with(cfg, q, Conditioning::Leakage, spec)?;
    Ok((h_yt - h_yx, h_yt - h_yu))
}

/// [`mi_exact_small_with`] at the default quadrature layout.
pub fn mi_exact_small(cfg: &LeakageConfig, q: usize) -> Result<(f64, f64)> {
    mi_exact_small_with(cfg, q, &QuadratureSpec::for_config(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leakage::{FieldParams, SboxSpec};
    use crate::mi::noise_entropy;

    fn config(ell: u32, masked: bool, sigma2: f64) -> LeakageConfig {
        let field = FieldParams::new(ell).unwrap();
        LeakageConfig::new(field, SboxSpec::identity(field), masked, sigma2).unwrap()
    }

    #[test]
    fn caps_are_enforced() {
        let cfg = config(2, false, 1.0);
        assert!(matches!(
            mi_exact_small(&cfg, 3),
            Err(Error::OracleLimit { q: 3, .. })
        ));
        assert!(mi_exact_small(&cfg, 0).is_err());
        let wide = config(4, false, 1.0);
        assert!(matches!(
            mi_exact_small(&wide, 1),
            Err(Error::OracleLimit { ell: 4, .. })
        ));
    }

    #[test]
    fn noise_conditional_entropy_matches_closed_form() {
        for (sigma2, q) in [(1.0, 1), (0.5, 2), (5.0, 1)] {
            let cfg = config(2, true, sigma2);
            let got = entropy_exact_small(&cfg, q, Conditioning::Leakage).unwrap();
            let expect = noise_entropy(sigma2, q);
            assert!(
                (got - expect).abs() < 1e-6,
                "sigma2={sigma2} q={q}: {got} vs {expect}"
            );
        }
        // sigma2 = 1, q = 1: 0.5*log2(2 pi e) = 2.0470956.
        let cfg = config(1, false, 1.0);
        let got = entropy_exact_small(&cfg, 1, Conditioning::Leakage).unwrap();
        assert!((got - 2.0470955852).abs() < 1e-6);
    }

    #[test]
    fn conditioning_chain_is_ordered() {
        // Conditioning on a coarser variable can only increase entropy:
        // H(Y|T) >= H(Y|U) >= H(Y|X).
        for masked in [false, true] {
            for q in [1, 2] {
                let cfg = config(2, masked, 0.8);
                let ht = entropy_exact_small(&cfg, q, Conditioning::Plaintexts).unwrap();
                let hu = entropy_exact_small(&cfg, q, Conditioning::Sensitive).unwrap();
                let hx = entropy_exact_small(&cfg, q, Conditioning::Leakage).unwrap();
                assert!(ht >= hu - 1e-9, "masked={masked} q={q}");
                assert!(hu >= hx - 1e-9, "masked={masked} q={q}");
            }
        }
    }

    #[test]
    fn vanishing_snr_kills_both_mis() {
        let cfg = config(2, false, 1e4);
        let (ixyt, iuyt) = mi_exact_small(&cfg, 1).unwrap();
        assert!(ixyt.abs() <= 0.01, "I_XYT={ixyt}");
        assert!(iuyt.abs() <= 0.01, "I_UYT={iuyt}");
    }

    #[test]
    fn masking_separates_the_two_mis() {
        let cfg = config(2, true, 1.0);
        let (ixyt, iuyt) = mi_exact_small(&cfg, 1).unwrap();
        assert!(iuyt <= ixyt, "I_UYT={iuyt} must not exceed I_XYT={ixyt}");
        assert!(iuyt > 0.0 && ixyt > 0.0);
        // Unprotected, they coincide exactly (X determines U up to the
        // kernel's Hamming-weight collapse).
        let plain = config(2, false, 1.0);
        let (jx, ju) = mi_exact_small(&plain, 1).unwrap();
        assert!((jx - ju).abs() < 1e-9);
    }

    #[test]
    fn quadrature_step_halving_is_stable() {
        // Richardson-style self-consistency: errors shrink by ~16x per
        // halving, so successive refinements must agree tightly.
        let cfg = config(1, false, 1.0);
        let fine = QuadratureSpec {
            step: cfg.sigma() / 100.0,
            pad: 8.0 * cfg.sigma(),
        };
        let finer = fine.halved();
        let (a_x, a_u) = mi_exact_small_with(&cfg, 1, &fine).unwrap();
        let (b_x, b_u) = mi_exact_small_with(&cfg, 1, &finer).unwrap();
        assert!((a_x - b_x).abs() < 1e-8, "{a_x} vs {b_x}");
        assert!((a_u - b_u).abs() < 1e-8);

        // The default layout already meets the 1e-6 bit target.
        let default = QuadratureSpec::for_config(&cfg);
        let (d_x, _) = mi_exact_small_with(&cfg, 1, &default).unwrap();
        assert!((d_x - b_x).abs() < 1e-6);
    }
}

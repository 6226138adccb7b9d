//! The leakage channel model.
//!
//! A secret key `k` and per-trace plaintexts `t_i` produce the sensitive
//! variable `u_i = S(t_i XOR k)`. Unprotected devices leak the Hamming
//! weight of `u_i`; first-order Boolean masking splits `u_i` into the share
//! pair `(u_i XOR m_i, m_i)` with a fresh uniform mask per trace and leaks
//! the sum of the two shares' Hamming weights (zero-offset model). White
//! Gaussian noise of variance `sigma2` is added to every sample.

mod sbox;

pub use sbox::{SboxKind, SboxSpec, AES_SBOX};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::stats::binomial;

/// A word of the target alphabet; at most 16 bits are used.
pub type Word = u16;

/// Number of set bits of a word.
#[inline]
pub fn hamming_weight(w: Word) -> u32 {
    w.count_ones()
}

/// Word width `ell` and the derived alphabet size `2^ell`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldParams {
    ell: u32,
}

impl FieldParams {
    /// `ell` must lie in 1..=16: every estimator enumerates all `2^ell`
    /// keys and masks exhaustively.
    pub fn new(ell: u32) -> Result<Self> {
        if !(1..=16).contains(&ell) {
            return Err(Error::InvalidWordWidth(ell));
        }
        Ok(Self { ell })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// Alphabet cardinality `2^ell`.
    pub fn order(&self) -> usize {
        1 << self.ell
    }
}

/// Full channel specification: word width, S-box, masking switch and noise.
#[derive(Debug, Clone, PartialEq)]
pub struct LeakageConfig {
    pub field: FieldParams,
    pub sbox: SboxSpec,
    pub masked: bool,
    sigma2: f64,
}

impl LeakageConfig {
    pub fn new(field: FieldParams, sbox: SboxSpec, masked: bool, sigma2: f64) -> Result<Self> {
        if sigma2 <= 0.0 || !sigma2.is_finite() {
            return Err(Error::InvalidNoiseVariance(sigma2));
        }
        assert_eq!(
            sbox.table().len(),
            field.order(),
            "S-box table does not match the word width"
        );
        Ok(Self {
            field,
            sbox,
            masked,
            sigma2,
        })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// Largest attainable noiseless leakage value: `ell` unprotected,
    /// `2*ell` with the two summed shares.
    pub fn max_leakage(&self) -> u32 {
        if self.masked {
            2 * self.field.ell()
        } else {
            self.field.ell()
        }
    }
}

/// Per-trace intermediates as seen by the channel: the single sensitive
/// value, or the masked share pair `(u XOR m, m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shares {
    Unmasked(Vec<Word>),
    Masked(Vec<(Word, Word)>),
}

/// One Monte-Carlo draw: a key, `q` plaintexts and the induced leakage.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawBatch {
    pub t: Vec<Word>,
    pub k: Word,
    pub m: Option<Vec<Word>>,
    pub u: Vec<Word>,
    pub v: Shares,
    /// Noiseless leakage `x_i = w_H(shares)`.
    pub x: Vec<f64>,
    /// Noisy leakage `y_i = x_i + N(0, sigma2)`.
    pub y: Vec<f64>,
}

impl DrawBatch {
    pub fn q(&self) -> usize {
        self.t.len()
    }
}

/// Draws one i.i.d. batch of `q` traces for draw number `draw_index`.
///
/// Plaintexts, key and masks are uniform; noise samples are independent
/// N(0, sigma2). The draw depends only on `(rng.master_seed, draw_index)`.
pub fn sample_draw(
    config: &LeakageConfig,
    q: usize,
    rng: &SeededRng,
    draw_index: u64,
) -> DrawBatch {
    assert!(q >= 1, "a draw needs at least one trace");
    let mut stream = rng.substream(draw_index);
    let order = config.field.order() as Word;
    let sigma = config.sigma();

    let t: Vec<Word> = (0..q).map(|_| stream.random_range(0..order)).collect();
    let k: Word = stream.random_range(0..order);
    let m: Option<Vec<Word>> = config
        .masked
        .then(|| (0..q).map(|_| stream.random_range(0..order)).collect());

    let u: Vec<Word> = t.iter().map(|&ti| config.sbox.apply(ti ^ k)).collect();
    let (v, x): (Shares, Vec<f64>) = match &m {
        Some(masks) => {
            let pairs: Vec<(Word, Word)> = u
                .iter()
                .zip(masks)
                .map(|(&ui, &mi)| (ui ^ mi, mi))
                .collect();
            let x = pairs
                .iter()
                .map(|&(a, b)| (hamming_weight(a) + hamming_weight(b)) as f64)
                .collect();
            (Shares::Masked(pairs), x)
        }
        None => {
            let x = u.iter().map(|&ui| hamming_weight(ui) as f64).collect();
            (Shares::Unmasked(u.clone()), x)
        }
    };

    let y: Vec<f64> = x
        .iter()
        .map(|&xi| xi + sigma * stream.sample::<f64, _>(StandardNormal))
        .collect();

    DrawBatch { t, k, m, u, v, x, y }
}

/// Mask multiplicity table `N[h][s]`: for any `u` with `w_H(u) = h`, the
/// number of masks `m` with `w_H(u XOR m) + w_H(m) = s`.
///
/// Writing `j` for the number of mask bits set outside the support of `u`,
/// the summed weight is always `h + 2j`, giving the closed form
/// `N[h][h + 2j] = 2^h * C(ell - h, j)` and zero elsewhere. Grouping masks
/// by this count shrinks the inner sum of the masked likelihood from
/// `2^ell` terms to the `2*ell + 1` attainable leakage values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskClassCounts {
    ell: u32,
    /// Row-major `(ell + 1) x (2*ell + 1)`.
    counts: Vec<u64>,
}

impl MaskClassCounts {
    pub fn new(field: FieldParams) -> Self {
        let ell = field.ell();
        let width = (2 * ell + 1) as usize;
        let mut counts = vec![0u64; (ell as usize + 1) * width];
        for h in 0..=ell {
            for j in 0..=(ell - h) {
                counts[h as usize * width + (h + 2 * j) as usize] =
                    (1u64 << h) * binomial(ell - h, j);
            }
        }
        Self { ell, counts }
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// `N[h][s]`.
    pub fn count(&self, h: u32, s: u32) -> u64 {
        self.row(h)[s as usize]
    }

    /// All counts for sensitive-value weight `h`, indexed by summed weight.
    pub fn row(&self, h: u32) -> &[u64] {
        let width = (2 * self.ell + 1) as usize;
        &self.counts[h as usize * width..(h as usize + 1) * width]
    }
}

/// See [`MaskClassCounts`].
pub fn mask_class_counts(field: FieldParams) -> MaskClassCounts {
    MaskClassCounts::new(field)
}

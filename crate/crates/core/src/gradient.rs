//! Gradient and total-variation estimates from single-wavelet coefficients.
//!
//! At level `n` the vector `d^n_α = (d^n_{ε_1,α}, .., d^n_{ε_s,α})` of
//! coefficients with exactly one wavelet factor, renormalised by
//! `-2^{n(1+s/2)+2}`, approximates `∇f` at the cell centre
//! `x_α^n = 2^{-n}(α + ε/2)`. Summing the lengths with weight
//! `2^{n(1-s/2)+2}` approximates `‖f‖_TV`.
//!
//! All quantities refer to the continuum function on the unit cube, whose
//! amplitude is [`crate::haar::continuum_scale`] times the voxel values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{WaveletPyramid, WaveletType};
use crate::sum::sum_map;
use crate::Real;

/// Gradient renormalisation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientMode {
    /// `-2^{n(1+s/2)+2} d^n_α`: approximates `∇f` for smooth `f`.
    Smooth,
    /// `-2^{ns/2+2} d^n_α`: smooth mode divided by `2^n`, so that jumps of a
    /// piecewise-constant image give level-independent lengths.
    Edge,
}

impl GradientMode {
    /// Factor applied to the raw coefficient vector at level `n`.
    pub fn factor<T: Real>(self, s: usize, n: usize) -> T {
        let (n, s) = (n as f64, s as f64);
        let e = match self {
            GradientMode::Smooth => n * (1.0 + s / 2.0) + 2.0,
            GradientMode::Edge => n * s / 2.0 + 2.0,
        };
        -T::pow2(e)
    }
}

/// One gradient estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample<T> {
    pub level: usize,
    /// `α`, coordinate order.
    pub alpha: Vec<usize>,
    /// `x_α^n` in unit-cube coordinates.
    pub position: Vec<T>,
    pub vec: Vec<T>,
}

impl<T: Real> GradientSample<T> {
    pub fn length(&self) -> T {
        self.vec.iter().map(|&v| v * v).sum::<T>().sqrt()
    }
}

/// `x_α^n = 2^{-n}(α + ε/2)`; exact in binary floating point.
pub fn sample_position<T: Real>(n: usize, alpha: &[usize]) -> Vec<T> {
    let denom = T::pow2(n as f64 + 1.0);
    alpha
        .iter()
        .map(|&a| T::of((2 * a + 1) as f64) / denom)
        .collect()
}

/// `α` with rank `idx` in lexicographic order of `(α_1, .., α_s)`.
fn lex_alpha(idx: usize, side: usize, s: usize) -> Vec<usize> {
    let mut alpha = vec![0; s];
    let mut rem = idx;
    for a in alpha.iter_mut().rev() {
        *a = rem % side;
        rem /= side;
    }
    alpha
}

/// Renormalised gradient samples of level `n`, lexicographic in `α`.
pub fn renormalized_gradients<T: Real>(
    p: &WaveletPyramid<T>,
    n: usize,
    mode: GradientMode,
) -> Result<Vec<GradientSample<T>>> {
    let coeffs = p.gradient_coefficients(n)?;
    let s = p.dim();
    let side = 1usize << n;
    let factor: T = mode.factor(s, n);
    Ok((0..p.cells(n))
        .map(|idx| {
            let alpha = lex_alpha(idx, side, s);
            let vec = coeffs.get(&alpha).iter().map(|&d| factor * d).collect();
            GradientSample {
                level: n,
                position: sample_position(n, &alpha),
                alpha,
                vec,
            }
        })
        .collect())
}

/// Gradient samples over several levels, ordered by level then `α`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField<T> {
    s: usize,
    m: u32,
    mode: GradientMode,
    samples: Vec<GradientSample<T>>,
}

impl<T: Real> GradientField<T> {
    /// Collects the samples of every level in `levels`.
    pub fn extract(
        p: &WaveletPyramid<T>,
        levels: impl IntoIterator<Item = usize>,
        mode: GradientMode,
    ) -> Result<Self> {
        let mut lv: Vec<usize> = levels.into_iter().collect();
        lv.sort_unstable();
        lv.dedup();
        let mut samples = Vec::new();
        for n in lv {
            samples.extend(renormalized_gradients(p, n, mode)?);
        }
        Ok(GradientField {
            s: p.dim(),
            m: p.m(),
            mode,
            samples,
        })
    }

    pub fn empty(s: usize, m: u32, mode: GradientMode) -> Self {
        GradientField {
            s,
            m,
            mode,
            samples: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.s
    }

    pub fn mode(&self) -> GradientMode {
        self.mode
    }

    pub fn samples(&self) -> &[GradientSample<T>] {
        &self.samples
    }

    pub fn level(&self, n: usize) -> impl Iterator<Item = &GradientSample<T>> {
        self.samples.iter().filter(move |g| g.level == n)
    }

    /// Converts a unit-cube position to voxel coordinates (times `2^m`).
    pub fn to_voxel(&self, position: &[T]) -> Vec<T> {
        let side = T::pow2(self.m as f64);
        position.iter().map(|&x| x * side).collect()
    }
}

/// Level weights `μ_n = 2^{n-n1} / (2 - 2^{n0-n1})`, `n = n0..=n1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelWeights<T> {
    n0: usize,
    n1: usize,
    mu: Vec<T>,
}

impl<T: Real> LevelWeights<T> {
    pub fn new(n0: usize, n1: usize) -> Result<Self> {
        if n0 > n1 {
            return Err(Error::InvalidParameter(format!(
                "level window [{n0}, {n1}] has n0 > n1"
            )));
        }
        let denom = 2.0 - ((n0 as f64) - (n1 as f64)).exp2();
        let mu = (n0..=n1)
            .map(|n| T::of(((n as f64) - (n1 as f64)).exp2() / denom))
            .collect();
        Ok(LevelWeights { n0, n1, mu })
    }

    /// The top four levels of a pyramid with `levels` detail levels:
    /// `n1 = levels - 1`, `n0 = max(0, n1 - 3)`.
    pub fn default_window(levels: usize) -> Result<Self> {
        let n1 = levels.checked_sub(1).ok_or(Error::InvalidWindow {
            n0: 0,
            n1: 0,
            levels,
        })?;
        LevelWeights::new(n1.saturating_sub(3), n1)
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn window(&self) -> std::ops::RangeInclusive<usize> {
        self.n0..=self.n1
    }

    pub fn weights(&self) -> &[T] {
        &self.mu
    }

    /// `μ_n`, zero outside the window.
    pub fn mu(&self, n: usize) -> T {
        if self.window().contains(&n) {
            self.mu[n - self.n0]
        } else {
            T::zero()
        }
    }

    /// Errors unless the window fits inside a pyramid with `levels` levels.
    pub fn check_against(&self, levels: usize) -> Result<()> {
        if self.n1 >= levels {
            return Err(Error::InvalidWindow {
                n0: self.n0,
                n1: self.n1,
                levels,
            });
        }
        Ok(())
    }
}

/// Same as [`LevelWeights::new`].
pub fn make_level_weights<T: Real>(n0: usize, n1: usize) -> Result<LevelWeights<T>> {
    LevelWeights::new(n0, n1)
}

/// `Σ_α |d^n_α|_2` over the raw (un-renormalised) vectors of level `n`.
pub(crate) fn raw_gradient_length_sum<T: Real>(p: &WaveletPyramid<T>, n: usize) -> Result<T> {
    let lvl = p.level(n)?;
    let cells = p.cells(n);
    let s = p.dim();
    let blocks: Vec<&[T]> = (0..s)
        .map(|j| {
            let b = WaveletType::unit(j).bits() as usize - 1;
            &lvl[b * cells..(b + 1) * cells]
        })
        .collect();
    Ok(sum_map(cells, |c| {
        blocks.iter().map(|b| b[c] * b[c]).sum::<T>().sqrt()
    }))
}

/// `‖|d̂^n|_2‖_1 = 2^{n(1-s/2)+2} Σ_α |d^n_α|_2`.
pub fn tv_estimate_level<T: Real>(p: &WaveletPyramid<T>, n: usize) -> Result<T> {
    let s = p.dim() as f64;
    let w = T::pow2(n as f64 * (1.0 - s / 2.0) + 2.0);
    Ok(w * raw_gradient_length_sum(p, n)?)
}

/// `Σ_{n=n0}^{n1} μ_n ‖|d̂^n|_2‖_1`.
pub fn tv_estimate_averaged<T: Real>(p: &WaveletPyramid<T>, w: &LevelWeights<T>) -> Result<T> {
    w.check_against(p.levels())?;
    let mut acc = T::zero();
    for n in w.window() {
        acc += w.mu(n) * tv_estimate_level(p, n)?;
    }
    Ok(acc)
}

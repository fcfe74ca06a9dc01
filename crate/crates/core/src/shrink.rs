//! Approximate TV regularisation by group soft-thresholding.
//!
//! Minimising `½‖f − u‖² + λ Σ_n μ_n Σ_α |d^n_α(u)|_2` over orthonormal Haar
//! coefficients decouples into one problem per gradient vector `d^n_α`,
//! solved exactly by shrinking its length:
//!
//! ```text
//! d^n_α(u) = (1 − μ_n λ / |d^n_α(f)|_2)_+ d^n_α(f)
//! ```
//!
//! Scaling coefficients, coefficients with two or more wavelet factors and
//! levels outside `[n0, n1]` are not regularised and are copied. The
//! sparsifying variant additionally drops the multi-factor coefficients of
//! every location whose gradient vector was thresholded to zero.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::LevelWeights;
use crate::grid::Volume;
use crate::haar::{forward, inverse, WaveletPyramid, WaveletType};
use crate::metrics::TvReport;
use crate::sum::max_map;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShrinkMode {
    /// Multi-level weighted group soft-thresholding (LiveTV).
    Live,
    /// LiveTV plus zeroing of multi-factor coefficients at thresholded
    /// locations (SparseTV).
    Sparse,
    /// Unweighted thresholding with `λ` on every level of the window.
    Single,
}

impl fmt::Display for ShrinkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShrinkMode::Live => "live",
            ShrinkMode::Sparse => "sparse",
            ShrinkMode::Single => "single",
        })
    }
}

impl FromStr for ShrinkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "live" | "livetv" => Ok(ShrinkMode::Live),
            "sparse" | "sparsetv" => Ok(ShrinkMode::Sparse),
            "single" | "single-level" => Ok(ShrinkMode::Single),
            other => Err(Error::InvalidParameter(format!(
                "unknown shrink mode `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkConfig<T> {
    pub lambda: T,
    pub mode: ShrinkMode,
    /// Level window and weights `μ_n`; the weights are unused in
    /// [`ShrinkMode::Single`].
    pub weights: LevelWeights<T>,
}

impl<T: Real> ShrinkConfig<T> {
    pub fn new(lambda: T, mode: ShrinkMode, n0: usize, n1: usize) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and non-negative, got {lambda}"
            )));
        }
        Ok(ShrinkConfig {
            lambda,
            mode,
            weights: LevelWeights::new(n0, n1)?,
        })
    }

    /// Config with the default window for a pyramid of `levels` levels.
    pub fn with_default_window(lambda: T, mode: ShrinkMode, levels: usize) -> Result<Self> {
        let w = LevelWeights::<T>::default_window(levels)?;
        ShrinkConfig::new(lambda, mode, w.n0(), w.n1())
    }

    pub fn n0(&self) -> usize {
        self.weights.n0()
    }

    pub fn n1(&self) -> usize {
        self.weights.n1()
    }

    /// Length threshold applied at level `n`: `μ_n λ`, or `λ` in single
    /// mode; zero outside the window.
    pub fn threshold(&self, n: usize) -> T {
        if !self.weights.window().contains(&n) {
            return T::zero();
        }
        match self.mode {
            ShrinkMode::Single => self.lambda,
            ShrinkMode::Live | ShrinkMode::Sparse => self.weights.mu(n) * self.lambda,
        }
    }
}

/// Shrinks every gradient vector of level `n` by `threshold`.
///
/// Lengths `≤ threshold` (including zero vectors) map to the zero vector.
/// With `sparsify`, multi-factor coefficients at zeroed locations are
/// cleared as well.
fn shrink_level<T: Real>(
    p: &mut WaveletPyramid<T>,
    n: usize,
    threshold: T,
    sparsify: bool,
) -> Result<()> {
    let s = p.dim();
    let cells = p.cells(n);
    let lvl = p.level_mut(n)?;
    let units: Vec<usize> = (0..s)
        .map(|j| WaveletType::unit(j).bits() as usize - 1)
        .collect();
    let factors: Vec<T> = {
        let lvl = &*lvl;
        (0..cells)
            .into_par_iter()
            .map(|c| {
                let len = units
                    .iter()
                    .map(|&b| {
                        let d = lvl[b * cells + c];
                        d * d
                    })
                    .sum::<T>()
                    .sqrt();
                if len <= threshold {
                    T::zero()
                } else {
                    T::one() - threshold / len
                }
            })
            .collect()
    };
    for (b, block) in lvl.chunks_exact_mut(cells).enumerate() {
        let theta = WaveletType::from_bits(b as u8 + 1);
        if theta.order() == 1 {
            for (d, &k) in block.iter_mut().zip(&factors) {
                if k == T::zero() {
                    *d = T::zero();
                } else {
                    *d *= k;
                }
            }
        } else if sparsify {
            for (d, &k) in block.iter_mut().zip(&factors) {
                if k == T::zero() {
                    *d = T::zero();
                }
            }
        }
    }
    Ok(())
}

fn shrink_window<T: Real>(
    p: &WaveletPyramid<T>,
    cfg: &ShrinkConfig<T>,
    single: bool,
    sparsify: bool,
) -> Result<WaveletPyramid<T>> {
    cfg.weights.check_against(p.levels())?;
    let mut out = p.clone();
    for n in cfg.weights.window() {
        let t = if single {
            cfg.lambda
        } else {
            cfg.weights.mu(n) * cfg.lambda
        };
        shrink_level(&mut out, n, t, sparsify)?;
    }
    Ok(out)
}

/// LiveTV: `d^n_α ← (1 − μ_n λ/|d^n_α|)_+ d^n_α` for `n` in the window.
/// `cfg.mode` is not consulted.
pub fn shrink_live<T: Real>(
    p: &WaveletPyramid<T>,
    cfg: &ShrinkConfig<T>,
) -> Result<WaveletPyramid<T>> {
    shrink_window(p, cfg, false, false)
}

/// SparseTV: LiveTV, plus every `|θ| ≥ 2` coefficient at a location whose
/// gradient vector ends up zero is set to zero. `cfg.mode` is not consulted.
pub fn shrink_sparse<T: Real>(
    p: &WaveletPyramid<T>,
    cfg: &ShrinkConfig<T>,
) -> Result<WaveletPyramid<T>> {
    shrink_window(p, cfg, false, true)
}

/// Unweighted group soft-threshold with `lambda` at level `n` only.
pub fn shrink_single_level<T: Real>(
    p: &WaveletPyramid<T>,
    n: usize,
    lambda: T,
) -> Result<WaveletPyramid<T>> {
    p.check_level(n)?;
    let mut out = p.clone();
    shrink_level(&mut out, n, lambda, false)?;
    Ok(out)
}

/// Applies the shrinkage selected by `cfg.mode`.
pub fn shrink<T: Real>(p: &WaveletPyramid<T>, cfg: &ShrinkConfig<T>) -> Result<WaveletPyramid<T>> {
    match cfg.mode {
        ShrinkMode::Live => shrink_live(p, cfg),
        ShrinkMode::Sparse => shrink_sparse(p, cfg),
        ShrinkMode::Single => shrink_window(p, cfg, true, false),
    }
}

/// Largest violation of the optimality conditions of the shrinkage problem
/// by the candidate `u`.
///
/// For each windowed gradient vector with threshold `t` (see
/// [`ShrinkConfig::threshold`]): `|d(f) − d(u) − t d(u)/|d(u)||` where
/// `d(u) ≠ 0`, and `(|d(f)| − t)_+` where `d(u) = 0`. Every other
/// coefficient must be unchanged and contributes `|c(f) − c(u)|`.
pub fn optimality_residual<T: Real>(
    f: &WaveletPyramid<T>,
    u: &WaveletPyramid<T>,
    cfg: &ShrinkConfig<T>,
) -> Result<T> {
    f.same_shape(u)?;
    cfg.weights.check_against(f.levels())?;
    let s = f.dim();
    let mut worst = (f.scaling() - u.scaling()).abs();
    for n in 0..f.levels() {
        let cells = f.cells(n);
        let lf = f.level(n)?;
        let lu = u.level(n)?;
        let windowed = cfg.weights.window().contains(&n);
        let t = cfg.threshold(n);
        let r = max_map(lf.len().max(cells), |i| {
            if i >= lf.len() {
                return T::zero();
            }
            let b = i / cells;
            let theta = WaveletType::from_bits(b as u8 + 1);
            if !windowed || theta.order() > 1 {
                return (lf[i] - lu[i]).abs();
            }
            if b != 0 {
                // each group is evaluated once, from its ε_1 entry
                return T::zero();
            }
            let c = i % cells;
            let mut nf = T::zero();
            let mut nu = T::zero();
            for j in 0..s {
                let k = (WaveletType::unit(j).bits() as usize - 1) * cells + c;
                nf += lf[k] * lf[k];
                nu += lu[k] * lu[k];
            }
            let (nf, nu) = (nf.sqrt(), nu.sqrt());
            if nu == T::zero() {
                return (nf - t).max(T::zero());
            }
            let mut acc = T::zero();
            for j in 0..s {
                let k = (WaveletType::unit(j).bits() as usize - 1) * cells + c;
                let r = lf[k] - lu[k] - t * lu[k] / nu;
                acc += r * r;
            }
            acc.sqrt()
        });
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Full pipeline: pad with zeros, decompose, shrink, reconstruct, crop.
pub fn denoise<T: Real>(v: &Volume<T>, cfg: &ShrinkConfig<T>) -> Result<(Volume<T>, TvReport)> {
    denoise_with_fill(v, cfg, T::zero())
}

/// [`denoise`] with an explicit padding value.
pub fn denoise_with_fill<T: Real>(
    v: &Volume<T>,
    cfg: &ShrinkConfig<T>,
    fill: T,
) -> Result<(Volume<T>, TvReport)> {
    let padded = v.pad_to_dyadic(fill);
    let pf = forward(&padded)?;
    let pu = shrink(&pf, cfg)?;
    let out = inverse(&pu)?.crop_to_origin()?;
    let report = TvReport::compare(v, &out, &pf, &pu, &cfg.weights)?
        .with_config(cfg.lambda.widen(), cfg.mode);
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pyr_with_vector(s: usize, m: u32, n: usize, vals: &[f64]) -> WaveletPyramid<f64> {
        let mut p = WaveletPyramid::zeros(s, m).unwrap();
        for (b, &v) in vals.iter().enumerate() {
            p.block_mut(n, WaveletType::from_bits(b as u8 + 1)).unwrap()[0] = v;
        }
        p
    }

    #[test]
    fn live_shrinks_vector_length() {
        // (3,4) has length 5; threshold μλ = 2 leaves length 3
        let p = pyr_with_vector(2, 1, 0, &[3.0, 4.0, 0.0]);
        let cfg = ShrinkConfig::new(2.0, ShrinkMode::Live, 0, 0).unwrap();
        let u = shrink_live(&p, &cfg).unwrap();
        let g = u.gradient_coefficients(0).unwrap();
        assert_abs_diff_eq!(g.get(&[0, 0])[0], 1.8, epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(&[0, 0])[1], 2.4, epsilon = 1e-15);
        for lam in [5.0, 5.5, 100.0] {
            let cfg = ShrinkConfig::new(lam, ShrinkMode::Live, 0, 0).unwrap();
            let u = shrink_live(&p, &cfg).unwrap();
            assert_eq!(
                u.gradient_coefficients(0).unwrap().get(&[0, 0]),
                &[0.0, 0.0]
            );
        }
    }

    #[test]
    fn zero_lambda_is_identity() {
        let v = Volume::from_fn(vec![8, 8, 8], |i| {
            ((i[0] * 13 + i[1] * 7 + i[2]) % 5) as f64
        })
        .unwrap();
        let p = forward(&v).unwrap();
        for mode in [ShrinkMode::Live, ShrinkMode::Sparse, ShrinkMode::Single] {
            let cfg = ShrinkConfig::new(0.0, mode, 0, 2).unwrap();
            assert_eq!(shrink(&p, &cfg).unwrap(), p);
        }
        assert_eq!(shrink_single_level(&p, 1, 0.0).unwrap(), p);
    }

    #[test]
    fn sparse_clears_multi_factor_coefficients() {
        let p = pyr_with_vector(2, 1, 0, &[0.1, 0.1, 7.0]);
        let cfg = ShrinkConfig::new(1.0, ShrinkMode::Sparse, 0, 0).unwrap();
        let u = shrink_sparse(&p, &cfg).unwrap();
        assert!(u.level(0).unwrap().iter().all(|&d| d == 0.0));
        let live = shrink_live(&p, &cfg).unwrap();
        assert_eq!(live.level(0).unwrap(), &[0.0, 0.0, 7.0]);
        // surviving gradient keeps the |θ| = 2 coefficient
        let p = pyr_with_vector(2, 1, 0, &[3.0, 4.0, 7.0]);
        let u = shrink_sparse(&p, &cfg).unwrap();
        assert_eq!(u.level(0).unwrap()[2], 7.0);
    }

    #[test]
    fn single_level_threshold() {
        let p = pyr_with_vector(2, 2, 1, &[6.0, 8.0, 1.0]);
        let u = shrink_single_level(&p, 1, 5.0).unwrap();
        assert_eq!(
            u.gradient_coefficients(1).unwrap().get(&[0, 0]),
            &[3.0, 4.0]
        );
        // |d| == λ exactly maps to zero
        let u = shrink_single_level(&p, 1, 10.0).unwrap();
        assert_eq!(
            u.gradient_coefficients(1).unwrap().get(&[0, 0]),
            &[0.0, 0.0]
        );
        assert!(shrink_single_level(&p, 2, 1.0).is_err());
    }

    #[test]
    fn scaling_and_out_of_window_levels_untouched() {
        let v = Volume::from_fn(vec![16, 16], |i| ((i[0] * 5 + i[1] * 3) % 7) as f64).unwrap();
        let p = forward(&v).unwrap();
        let cfg = ShrinkConfig::new(1e6, ShrinkMode::Sparse, 2, 3).unwrap();
        let u = shrink(&p, &cfg).unwrap();
        assert_eq!(u.scaling(), p.scaling());
        assert_eq!(u.level(0).unwrap(), p.level(0).unwrap());
        assert_eq!(u.level(1).unwrap(), p.level(1).unwrap());
        assert!(u.level(2).unwrap().iter().all(|&d| d == 0.0));
        assert!(u.level(3).unwrap().iter().all(|&d| d == 0.0));
    }

    #[test]
    fn residual_cases() {
        let v = Volume::from_fn(vec![16, 16], |i| ((i[0] * 5 + i[1] * 3) % 7) as f64).unwrap();
        let f = forward(&v).unwrap();
        let cfg = ShrinkConfig::new(2.0, ShrinkMode::Live, 1, 3).unwrap();
        let u = shrink_live(&f, &cfg).unwrap();
        assert!(optimality_residual(&f, &u, &cfg).unwrap() <= 1e-12);
        assert!(optimality_residual(&f, &f, &cfg).unwrap() > 0.0);
        let other = WaveletPyramid::<f64>::zeros(2, 3).unwrap();
        assert!(matches!(
            optimality_residual(&f, &other, &cfg),
            Err(Error::PyramidMismatch { .. })
        ));
    }

    #[test]
    fn invalid_configs() {
        assert!(ShrinkConfig::new(-1.0, ShrinkMode::Live, 0, 1).is_err());
        assert!(ShrinkConfig::new(f64::NAN, ShrinkMode::Live, 0, 1).is_err());
        let p = WaveletPyramid::<f64>::zeros(1, 3).unwrap();
        let cfg = ShrinkConfig::new(1.0, ShrinkMode::Live, 0, 3).unwrap();
        assert!(matches!(
            shrink_live(&p, &cfg),
            Err(Error::InvalidWindow { .. })
        ));
        assert_eq!("sparse".parse::<ShrinkMode>().unwrap(), ShrinkMode::Sparse);
        assert!("hard".parse::<ShrinkMode>().is_err());
    }
}

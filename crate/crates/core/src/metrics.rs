//! Ground-truth measurements: finite-difference TV, image quality metrics,
//! coefficient sparsity and an exact-integration moment oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::{tv_estimate_averaged, LevelWeights};
use crate::grid::Volume;
use crate::haar::{forward, WaveletPyramid, WaveletType};
use crate::shrink::ShrinkMode;
use crate::sum::sum_map;
use crate::Real;

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut st = vec![1; dims.len()];
    for a in (0..dims.len().saturating_sub(1)).rev() {
        st[a] = st[a + 1] * dims[a + 1];
    }
    st
}

/// `Σ_voxels |∇⁺v|_2` with forward differences; a difference that would
/// leave the grid counts as zero.
pub fn discrete_tv<T: Real>(v: &Volume<T>) -> T {
    let dims = v.dims();
    let st = strides(dims);
    let data = v.data();
    sum_map(data.len(), |off| {
        let mut acc = T::zero();
        for (&d, &stride) in dims.iter().zip(&st) {
            if (off / stride) % d + 1 < d {
                let diff = data[off + stride] - data[off];
                acc += diff * diff;
            }
        }
        acc.sqrt()
    })
}

fn check_same<T: Real>(f: &Volume<T>, u: &Volume<T>) -> Result<()> {
    if f.dims() != u.dims() {
        return Err(Error::VolumeMismatch {
            a: f.dims().to_vec(),
            b: u.dims().to_vec(),
        });
    }
    Ok(())
}

/// Mean squared difference.
pub fn mse<T: Real>(f: &Volume<T>, u: &Volume<T>) -> Result<T> {
    check_same(f, u)?;
    let (a, b) = (f.data(), u.data());
    let n = T::of(a.len() as f64);
    Ok(sum_map(a.len(), |i| {
        let d = a[i] - b[i];
        d * d
    }) / n)
}

/// `10 log10(peak² / MSE)` with `peak = max f`; `None` when `f == u`.
pub fn psnr<T: Real>(f: &Volume<T>, u: &Volume<T>) -> Result<Option<T>> {
    let e = mse(f, u)?;
    if e == T::zero() {
        return Ok(None);
    }
    let peak = f.max_value();
    Ok(Some(T::of(10.0) * (peak * peak / e).log10()))
}

/// `‖f − u‖_2 / ‖f‖_2`. Zero when both vanish, infinite when only `f` does.
pub fn rel_l2<T: Real>(f: &Volume<T>, u: &Volume<T>) -> Result<T> {
    check_same(f, u)?;
    let (a, b) = (f.data(), u.data());
    let num = sum_map(a.len(), |i| {
        let d = a[i] - b[i];
        d * d
    })
    .sqrt();
    let den = sum_map(a.len(), |i| a[i] * a[i]).sqrt();
    Ok(if den == T::zero() {
        if num == T::zero() {
            T::zero()
        } else {
            T::infinity()
        }
    } else {
        num / den
    })
}

/// Fraction of coefficients (scaling included) that are exactly zero.
pub fn sparsity<T: Real>(p: &WaveletPyramid<T>) -> f64 {
    let zeros = p.coefficients().filter(|&c| c == T::zero()).count();
    zeros as f64 / p.len() as f64
}

/// `∫_a^b (x − c)^g dx`.
fn monomial_integral(a: f64, b: f64, c: f64, g: u32) -> f64 {
    let k = g as i32 + 1;
    ((b - c).powi(k) - (a - c).powi(k)) / k as f64
}

/// `∫ (x − x_α^n)^γ ψ^n_{θ,α}(x) dx` by exact integration.
///
/// The integrand is a product of one-dimensional polynomials on dyadic
/// intervals, so the integral is a product of closed-form antiderivative
/// differences, one per coordinate. `None` for inconsistent index lengths
/// or an out-of-range `α`.
pub fn moment_oracle(
    s: usize,
    n: u32,
    theta: WaveletType,
    gamma: &[u32],
    alpha: &[usize],
) -> Option<f64> {
    if gamma.len() != s || alpha.len() != s || theta.bits() as usize >= 1 << s {
        return None;
    }
    let h = (-(n as f64)).exp2();
    if alpha.iter().any(|&a| a as f64 * h >= 1.0) {
        return None;
    }
    let amp = (n as f64 / 2.0).exp2();
    let mut out = 1.0;
    for j in 0..s {
        let lo = alpha[j] as f64 * h;
        let mid = lo + h / 2.0;
        let hi = lo + h;
        let g = gamma[j];
        let axis = if theta.component(j) {
            monomial_integral(lo, mid, mid, g) - monomial_integral(mid, hi, mid, g)
        } else {
            monomial_integral(lo, hi, mid, g)
        };
        out *= amp * axis;
    }
    Some(out)
}

/// Quality and TV metrics for one input/output pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvReport {
    pub discrete_tv_in: f64,
    pub discrete_tv_out: f64,
    /// `discrete_tv_out / discrete_tv_in`.
    pub relative_discrete_tv: f64,
    pub wavelet_tv_in: f64,
    pub wavelet_tv_out: f64,
    pub relative_wavelet_tv: f64,
    pub rel_l2_error: f64,
    /// Peak is the maximum of the input volume; absent when input == output.
    pub psnr: Option<f64>,
    pub sparsity_in: f64,
    pub sparsity: f64,
    pub window: [usize; 2],
    pub lambda: Option<f64>,
    pub mode: Option<ShrinkMode>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        a / b
    }
}

impl TvReport {
    /// Metrics of `u` against `f`, using their (padded) pyramids for the
    /// wavelet TV estimate and sparsity.
    pub fn compare<T: Real>(
        f: &Volume<T>,
        u: &Volume<T>,
        pf: &WaveletPyramid<T>,
        pu: &WaveletPyramid<T>,
        weights: &LevelWeights<T>,
    ) -> Result<TvReport> {
        pf.same_shape(pu)?;
        let dtv_in = discrete_tv(f).widen();
        let dtv_out = discrete_tv(u).widen();
        let wtv_in = tv_estimate_averaged(pf, weights)?.widen();
        let wtv_out = tv_estimate_averaged(pu, weights)?.widen();
        Ok(TvReport {
            discrete_tv_in: dtv_in,
            discrete_tv_out: dtv_out,
            relative_discrete_tv: ratio(dtv_out, dtv_in),
            wavelet_tv_in: wtv_in,
            wavelet_tv_out: wtv_out,
            relative_wavelet_tv: ratio(wtv_out, wtv_in),
            rel_l2_error: rel_l2(f, u)?.widen(),
            psnr: psnr(f, u)?.map(Real::widen),
            sparsity_in: sparsity(pf),
            sparsity: sparsity(pu),
            window: [weights.n0(), weights.n1()],
            lambda: None,
            mode: None,
        })
    }

    /// Pads both volumes with zeros, decomposes them and compares over the
    /// default window.
    pub fn between<T: Real>(f: &Volume<T>, u: &Volume<T>) -> Result<TvReport> {
        check_same(f, u)?;
        let pf = forward(&f.pad_to_dyadic(T::zero()))?;
        let pu = forward(&u.pad_to_dyadic(T::zero()))?;
        let w = LevelWeights::default_window(pf.levels())?;
        TvReport::compare(f, u, &pf, &pu, &w)
    }

    pub fn with_config(mut self, lambda: f64, mode: ShrinkMode) -> Self {
        self.lambda = Some(lambda);
        self.mode = Some(mode);
        self
    }

    /// Aligned two-column table.
    pub fn to_table(&self) -> String {
        let psnr = self
            .psnr
            .map_or("inf".to_string(), |p| format!("{p:.4} dB"));
        let mut rows = vec![
            (
                "relative discrete TV",
                format!("{:.6}", self.relative_discrete_tv),
            ),
            (
                "relative wavelet TV",
                format!("{:.6}", self.relative_wavelet_tv),
            ),
            ("relative L2 error", format!("{:.6e}", self.rel_l2_error)),
            ("PSNR (peak = max input)", psnr),
            (
                "coefficient sparsity",
                format!("{:.4}%", 100.0 * self.sparsity),
            ),
            (
                "discrete TV in/out",
                format!("{:.6e} / {:.6e}", self.discrete_tv_in, self.discrete_tv_out),
            ),
            (
                "wavelet TV in/out",
                format!("{:.6e} / {:.6e}", self.wavelet_tv_in, self.wavelet_tv_out),
            ),
            (
                "input sparsity",
                format!("{:.4}%", 100.0 * self.sparsity_in),
            ),
            (
                "window",
                format!("[{}, {}]", self.window[0], self.window[1]),
            ),
        ];
        if let (Some(l), Some(m)) = (self.lambda, self.mode) {
            rows.push(("lambda", format!("{l}")));
            rows.push(("mode", m.to_string()));
        }
        let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| format!("{k:<w$}  {v}\n"))
            .collect()
    }
}

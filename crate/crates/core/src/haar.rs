//! Orthonormal tensor-product Haar decomposition.
//!
//! A dyadic volume of side `2^m` is decomposed completely: one scaling
//! coefficient plus, for every level `n in 0..m` and every wavelet type
//! `θ ≠ 0`, a block of `2^{ns}` detail coefficients. Level `n` has `2^n`
//! coefficients per axis, so `n = m - 1` holds the finest details.
//!
//! The coefficients produced here are exactly the continuous-model
//! coefficients `d^n_{θ,α}(f)` of `f = 2^{ms/2} g(2^m ·)` on the unit cube,
//! where `g` is the piecewise-constant voxel function. No rescaling is
//! needed between the discrete filter bank and the continuous model; only
//! amplitudes pick up the factor [`continuum_scale`].
//!
//! Within a block, `α = (α_1, .., α_s)` is stored with `α_1` fastest, which
//! matches the row-major layout of the source volume (see [`crate::grid`]).

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Volume, MAX_DIM};
use crate::Real;

/// Maximum number of corners of a Haar cell (`2^3`).
const MAX_CORNERS: usize = 1 << MAX_DIM;

/// Wavelet type `θ ∈ {0,1}^s`; bit `j` is the factor along coordinate `x_{j+1}`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveletType(u8);

impl WaveletType {
    pub const fn from_bits(bits: u8) -> Self {
        WaveletType(bits)
    }

    /// Builds `θ` from its components `(θ_1, .., θ_s)`.
    pub fn from_components(theta: &[u8]) -> Self {
        WaveletType(
            theta
                .iter()
                .enumerate()
                .fold(0u8, |b, (j, &t)| b | (((t != 0) as u8) << j)),
        )
    }

    /// `ε_{j+1}`: the single-wavelet type along coordinate `j` (zero based).
    pub const fn unit(j: usize) -> Self {
        WaveletType(1 << j)
    }

    pub const fn bits(self) -> u8 {
        self.0
    }

    /// `|θ|`, the number of wavelet factors.
    pub const fn order(self) -> u32 {
        self.0.count_ones()
    }

    pub const fn component(self, j: usize) -> bool {
        self.0 >> j & 1 == 1
    }

    pub const fn is_scaling(self) -> bool {
        self.0 == 0
    }

    /// Detail types `θ ≠ 0` in ascending bit-pattern order.
    pub fn details(s: usize) -> impl Iterator<Item = WaveletType> {
        (1u8..(1u8 << s)).map(WaveletType)
    }

    fn block_index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Debug for WaveletType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "θ{:03b}", self.0)
    }
}

/// `2^{ms/2}`: amplitude of the continuous model relative to voxel values.
pub fn continuum_scale<T: Real>(s: usize, m: u32) -> T {
    T::pow2(m as f64 * s as f64 / 2.0)
}

/// Closed-form Haar moment
/// `∫ (x - x_α^n)^γ ψ^n_{θ,α}(x) dx = (-1)^{|θ|} 2^{-(n+2)|θ| - ns/2} δ_{γ,θ}`,
/// valid for `|γ| ≤ |θ|` (`None` otherwise). Independent of `α`.
pub fn saturation_moment<T: Real>(
    s: usize,
    n: u32,
    theta: WaveletType,
    gamma: &[u32],
) -> Option<T> {
    let order_gamma: u32 = gamma.iter().sum();
    if gamma.len() != s || order_gamma > theta.order() {
        return None;
    }
    let matches = gamma
        .iter()
        .enumerate()
        .all(|(j, &g)| g == theta.component(j) as u32);
    if !matches {
        return Some(T::zero());
    }
    let k = theta.order() as f64;
    let mag = T::pow2(-(n as f64 + 2.0) * k - n as f64 * s as f64 / 2.0);
    Some(if theta.order() % 2 == 1 { -mag } else { mag })
}

/// Complete Haar coefficient set of a dyadic volume.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid<T> {
    s: usize,
    m: u32,
    scaling: T,
    /// `details[n]` holds the `2^s - 1` blocks of level `n`, θ ascending.
    details: Vec<Vec<T>>,
    origin: Option<Vec<usize>>,
}

/// Offset of `α` (coordinate order) inside a block of side `side`.
pub(crate) fn alpha_offset(alpha: &[usize], side: usize) -> usize {
    alpha.iter().rev().fold(0, |off, &a| off * side + a)
}

impl<T: Real> WaveletPyramid<T> {
    /// All-zero pyramid for a volume of side `2^m` in `s` dimensions.
    pub fn zeros(s: usize, m: u32) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&s) {
            return Err(Error::UnsupportedDimension(s));
        }
        let details = (0..m)
            .map(|n| vec![T::zero(); ((1 << s) - 1) * (1usize << (n as usize * s))])
            .collect();
        Ok(WaveletPyramid {
            s,
            m,
            scaling: T::zero(),
            details,
            origin: None,
        })
    }

    /// Assembles a pyramid from raw blocks, validating every block size.
    pub fn from_parts(s: usize, m: u32, scaling: T, details: Vec<Vec<T>>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&s) {
            return Err(Error::UnsupportedDimension(s));
        }
        if details.len() != m as usize {
            return Err(Error::Structure(format!(
                "expected {} detail levels, found {}",
                m,
                details.len()
            )));
        }
        for (n, level) in details.iter().enumerate() {
            let want = ((1 << s) - 1) * (1usize << (n * s));
            if level.len() != want {
                return Err(Error::Structure(format!(
                    "level {n} holds {} coefficients, expected {want}",
                    level.len()
                )));
            }
        }
        Ok(WaveletPyramid {
            s,
            m,
            scaling,
            details,
            origin: None,
        })
    }

    pub fn with_origin_extent(mut self, origin: Option<Vec<usize>>) -> Self {
        self.origin = origin;
        self
    }

    pub fn origin_extent(&self) -> Option<&[usize]> {
        self.origin.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.s
    }

    /// Dyadic exponent of the source volume (side `2^m`).
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Number of detail levels (`m`); valid levels are `0..levels()`.
    pub fn levels(&self) -> usize {
        self.m as usize
    }

    /// `n1 = m - 1`, the finest detail level.
    pub fn finest_level(&self) -> Option<usize> {
        self.levels().checked_sub(1)
    }

    pub fn scaling(&self) -> T {
        self.scaling
    }

    pub fn scaling_mut(&mut self) -> &mut T {
        &mut self.scaling
    }

    pub fn check_level(&self, n: usize) -> Result<()> {
        if n < self.levels() {
            Ok(())
        } else {
            Err(Error::LevelOutOfRange {
                level: n,
                levels: self.levels(),
            })
        }
    }

    /// Number of positions `α` at level `n`, i.e. `2^{ns}`.
    pub fn cells(&self, n: usize) -> usize {
        1usize << (n * self.s)
    }

    /// All blocks of level `n`, θ ascending.
    pub fn level(&self, n: usize) -> Result<&[T]> {
        self.check_level(n)?;
        Ok(&self.details[n])
    }

    pub fn level_mut(&mut self, n: usize) -> Result<&mut [T]> {
        self.check_level(n)?;
        Ok(&mut self.details[n])
    }

    fn check_theta(&self, theta: WaveletType) -> Result<()> {
        if theta.is_scaling() || theta.bits() as usize >= 1 << self.s {
            return Err(Error::InvalidParameter(format!(
                "{theta:?} is not a detail type in {} dimensions",
                self.s
            )));
        }
        Ok(())
    }

    pub fn block(&self, n: usize, theta: WaveletType) -> Result<&[T]> {
        self.check_theta(theta)?;
        let cells = self.cells(n);
        let lvl = self.level(n)?;
        let i = theta.block_index();
        Ok(&lvl[i * cells..(i + 1) * cells])
    }

    pub fn block_mut(&mut self, n: usize, theta: WaveletType) -> Result<&mut [T]> {
        self.check_theta(theta)?;
        let cells = self.cells(n);
        let i = theta.block_index();
        let lvl = self.level_mut(n)?;
        Ok(&mut lvl[i * cells..(i + 1) * cells])
    }

    /// `d^n_{θ,α}`, with `α` in coordinate order.
    pub fn coeff(&self, n: usize, theta: WaveletType, alpha: &[usize]) -> Result<T> {
        let side = 1usize << n;
        if alpha.len() != self.s || alpha.iter().any(|&a| a >= side) {
            return Err(Error::IndexOutOfBounds {
                index: alpha.to_vec(),
                dims: vec![side; self.s],
            });
        }
        Ok(self.block(n, theta)?[alpha_offset(alpha, side)])
    }

    /// Total number of coefficients, `2^{ms}`.
    pub fn len(&self) -> usize {
        1 + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Every coefficient, scaling first, then levels coarse to fine.
    pub fn coefficients(&self) -> impl Iterator<Item = T> + '_ {
        std::iter::once(self.scaling).chain(self.details.iter().flatten().copied())
    }

    pub fn same_shape(&self, other: &WaveletPyramid<T>) -> Result<()> {
        if self.s != other.s || self.m != other.m {
            return Err(Error::PyramidMismatch {
                s_a: self.s,
                m_a: self.m,
                s_b: other.s,
                m_b: other.m,
            });
        }
        Ok(())
    }

    /// Vectors `d^n_α = (d^n_{ε_j,α} : j = 1..s)` for every `α` at level `n`.
    pub fn gradient_coefficients(&self, n: usize) -> Result<GradientCoefficients<T>> {
        let cells = self.cells(n);
        let lvl = self.level(n)?;
        let s = self.s;
        let mut vectors = vec![T::zero(); cells * s];
        for j in 0..s {
            let blk = WaveletType::unit(j).block_index();
            let src = &lvl[blk * cells..(blk + 1) * cells];
            for (c, &v) in src.iter().enumerate() {
                vectors[c * s + j] = v;
            }
        }
        Ok(GradientCoefficients {
            s,
            level: n,
            vectors,
        })
    }
}

/// Block of single-wavelet coefficient vectors at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCoefficients<T> {
    s: usize,
    level: usize,
    vectors: Vec<T>,
}

impl<T: Real> GradientCoefficients<T> {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn len(&self) -> usize {
        self.vectors.len() / self.s
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Vector at `α` (coordinate order).
    pub fn get(&self, alpha: &[usize]) -> &[T] {
        let c = alpha_offset(alpha, 1 << self.level);
        &self.vectors[c * self.s..(c + 1) * self.s]
    }

    /// Vectors in block storage order.
    pub fn iter(&self) -> std::slice::ChunksExact<'_, T> {
        self.vectors.chunks_exact(self.s)
    }
}

/// `2^s`-point Haar butterfly over the corners of one cell, unnormalised.
///
/// Corner `k` has bit `j` set when it lies in the upper half along
/// coordinate `j`; after the sweep, slot `θ` holds the type-`θ` sum.
#[inline]
fn butterfly<T: Real>(vals: &mut [T; MAX_CORNERS], s: usize) {
    for j in 0..s {
        let bit = 1 << j;
        for k in 0..(1 << s) {
            if k & bit == 0 {
                let (a, b) = (vals[k], vals[k | bit]);
                vals[k] = a + b;
                vals[k | bit] = a - b;
            }
        }
    }
}

/// Normalisation `2^{-s/2}` applied once per butterfly; exact for even `s`.
fn cell_norm<T: Real>(s: usize) -> T {
    let half = T::of(0.5).powi((s / 2) as i32);
    if s % 2 == 1 {
        half * T::FRAC_1_SQRT_2()
    } else {
        half
    }
}

/// Offsets of the `2^s` corners of cell `c` of a half-side block inside a
/// block of side `2 * half`, indexed by corner bit pattern.
#[inline]
fn corner_offsets(c: usize, half: usize, s: usize) -> [usize; MAX_CORNERS] {
    let side = 2 * half;
    let mut base = 0;
    let mut stride = 1;
    let mut rem = c;
    let mut strides = [0usize; MAX_DIM];
    for st in strides.iter_mut().take(s) {
        let cj = rem % half;
        rem /= half;
        base += 2 * cj * stride;
        *st = stride;
        stride *= side;
    }
    let mut offs = [0usize; MAX_CORNERS];
    for (k, o) in offs.iter_mut().enumerate().take(1 << s) {
        *o = base
            + (0..s)
                .filter(|&j| k >> j & 1 == 1)
                .map(|j| strides[j])
                .sum::<usize>();
    }
    offs
}

/// Full forward decomposition of a dyadic volume.
pub fn forward<T: Real>(v: &Volume<T>) -> Result<WaveletPyramid<T>> {
    let m = v
        .dyadic_exponent()
        .ok_or_else(|| Error::NotDyadic(v.dims().to_vec()))?;
    let s = v.ndim();
    let norm = cell_norm::<T>(s);
    let corners = 1 << s;
    let mut approx = v.data().to_vec();
    let mut details = vec![Vec::new(); m as usize];
    for n in (0..m as usize).rev() {
        let half = 1usize << n;
        let cells = 1usize << (n * s);
        let sums: Vec<[T; MAX_CORNERS]> = (0..cells)
            .into_par_iter()
            .map(|c| {
                let offs = corner_offsets(c, half, s);
                let mut vals = [T::zero(); MAX_CORNERS];
                for k in 0..corners {
                    vals[k] = approx[offs[k]];
                }
                butterfly(&mut vals, s);
                for x in vals.iter_mut().take(corners) {
                    *x *= norm;
                }
                vals
            })
            .collect();
        let mut next = Vec::with_capacity(cells);
        let mut level = vec![T::zero(); (corners - 1) * cells];
        for (c, vals) in sums.iter().enumerate() {
            next.push(vals[0]);
            for theta in 1..corners {
                level[(theta - 1) * cells + c] = vals[theta];
            }
        }
        details[n] = level;
        approx = next;
    }
    Ok(WaveletPyramid {
        s,
        m,
        scaling: approx[0],
        details,
        origin: v.origin_extent().map(<[usize]>::to_vec),
    })
}

/// Exact synthesis; inverse of [`forward`].
pub fn inverse<T: Real>(p: &WaveletPyramid<T>) -> Result<Volume<T>> {
    let s = p.s;
    let corners = 1 << s;
    let norm = cell_norm::<T>(s);
    for (n, lvl) in p.details.iter().enumerate() {
        if lvl.len() != (corners - 1) << (n * s) {
            return Err(Error::Structure(format!(
                "level {n} has {} coefficients",
                lvl.len()
            )));
        }
    }
    let mut approx = vec![p.scaling];
    for n in 0..p.levels() {
        let half = 1usize << n;
        let cells = 1usize << (n * s);
        let lvl = &p.details[n];
        let outs: Vec<[T; MAX_CORNERS]> = (0..cells)
            .into_par_iter()
            .map(|c| {
                let mut vals = [T::zero(); MAX_CORNERS];
                vals[0] = approx[c];
                for theta in 1..corners {
                    vals[theta] = lvl[(theta - 1) * cells + c];
                }
                butterfly(&mut vals, s);
                for x in vals.iter_mut().take(corners) {
                    *x *= norm;
                }
                vals
            })
            .collect();
        let mut next = vec![T::zero(); cells << s];
        for (c, vals) in outs.iter().enumerate() {
            let offs = corner_offsets(c, half, s);
            for k in 0..corners {
                next[offs[k]] = vals[k];
            }
        }
        approx = next;
    }
    let side = 1usize << p.m;
    let vol = Volume::new(vec![side; s], approx)?;
    match &p.origin {
        Some(o) => vol.with_origin_extent(o.clone()),
        None => Ok(vol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn one_dimensional_pair() {
        let v = Volume::new(vec![2], vec![1.0, 2.0]).unwrap();
        let p = forward(&v).unwrap();
        assert_abs_diff_eq!(p.scaling(), 3.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            p.block(0, WaveletType::unit(0)).unwrap()[0],
            -1.0 / 2f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn two_by_two_hand_oracle() {
        let (a, b, c, d) = (1.5, -2.0, 4.25, 0.5);
        let v = Volume::new(vec![2, 2], vec![a, b, c, d]).unwrap();
        let p = forward(&v).unwrap();
        let get = |t: [u8; 2]| {
            p.coeff(0, WaveletType::from_components(&t), &[0, 0])
                .unwrap()
        };
        assert_eq!(p.scaling(), (a + b + c + d) / 2.0);
        assert_eq!(get([1, 0]), (a - b + c - d) / 2.0);
        assert_eq!(get([0, 1]), (a + b - c - d) / 2.0);
        assert_eq!(get([1, 1]), (a - b - c + d) / 2.0);
        let g = p.gradient_coefficients(0).unwrap();
        assert_eq!(
            g.get(&[0, 0]),
            &[(a - b + c - d) / 2.0, (a + b - c - d) / 2.0]
        );
        let back = inverse(&p).unwrap();
        assert_eq!(back.data(), v.data());
    }

    #[test]
    fn constant_volume_has_no_details() {
        for s in 1..=3 {
            let m = 3;
            let k = 2.5;
            let v = Volume::filled(vec![1 << m; s], k).unwrap();
            let p = forward(&v).unwrap();
            assert!(p.coefficients().skip(1).all(|c: f64| c.abs() < 1e-12));
            assert_abs_diff_eq!(
                p.scaling(),
                k * continuum_scale::<f64>(s, m),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn scaling_only_pyramid_reconstructs_constant() {
        let m = 4;
        let mut p = WaveletPyramid::<f64>::zeros(1, m).unwrap();
        // constant k in 1D carries scaling k * 2^{m/2}
        *p.scaling_mut() = 3.0 * continuum_scale::<f64>(1, m);
        let v = inverse(&p).unwrap();
        assert!(v.data().iter().all(|&x| (x - 3.0).abs() < 1e-14));
    }

    #[test]
    fn gradient_coefficients_1d_equal_detail_block() {
        let v = Volume::from_fn(vec![16], |i| (i[0] as f64).sin()).unwrap();
        let p = forward(&v).unwrap();
        for n in 0..4 {
            let g = p.gradient_coefficients(n).unwrap();
            let blk = p.block(n, WaveletType::unit(0)).unwrap();
            let flat: Vec<f64> = g.iter().map(|x| x[0]).collect();
            assert_eq!(flat, blk);
        }
        assert!(matches!(
            p.gradient_coefficients(4),
            Err(Error::LevelOutOfRange {
                level: 4,
                levels: 4
            })
        ));
    }

    #[test]
    fn non_dyadic_is_rejected() {
        let v = Volume::<f64>::filled(vec![4, 8], 0.0).unwrap();
        assert!(matches!(forward(&v), Err(Error::NotDyadic(_))));
        let v = Volume::<f64>::filled(vec![6], 0.0).unwrap();
        assert!(matches!(forward(&v), Err(Error::NotDyadic(_))));
    }

    #[test]
    fn single_voxel_volume() {
        let v = Volume::new(vec![1, 1, 1], vec![7.0]).unwrap();
        let p = forward(&v).unwrap();
        assert_eq!(p.levels(), 0);
        assert_eq!(p.finest_level(), None);
        assert_eq!(inverse(&p).unwrap().data(), &[7.0]);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            WaveletPyramid::<f64>::from_parts(2, 2, 0.0, vec![vec![0.0; 3], vec![0.0; 5]]),
            Err(Error::Structure(_))
        ));
        assert!(
            WaveletPyramid::<f64>::from_parts(2, 2, 0.0, vec![vec![0.0; 3], vec![0.0; 12]]).is_ok()
        );
        let p = WaveletPyramid::<f64>::zeros(2, 2).unwrap();
        assert!(p.block(0, WaveletType::from_bits(0)).is_err());
        assert!(p.block(0, WaveletType::from_bits(4)).is_err());
        assert!(p.coeff(1, WaveletType::unit(0), &[2, 0]).is_err());
    }

    #[test]
    fn coefficient_count_is_bijective() {
        for s in 1..=3 {
            for m in 0..4u32 {
                let p = WaveletPyramid::<f64>::zeros(s, m).unwrap();
                assert_eq!(p.len(), 1usize << (m as usize * s));
            }
        }
    }

    #[test]
    fn closed_form_moment_values() {
        let t = WaveletType::unit(0);
        assert_eq!(saturation_moment::<f64>(1, 0, t, &[1]), Some(-0.25));
        assert_eq!(saturation_moment::<f64>(1, 0, t, &[0]), Some(0.0));
        assert_eq!(saturation_moment::<f64>(1, 0, t, &[2]), None);
        assert_eq!(saturation_moment::<f64>(2, 1, t, &[1, 0]), Some(-0.0625));
        let t11 = WaveletType::from_bits(3);
        assert_eq!(
            saturation_moment::<f64>(2, 0, t11, &[1, 1]),
            Some(1.0 / 16.0)
        );
    }

    #[test]
    fn f32_pipeline_roundtrips() {
        let v =
            Volume::<f32>::from_fn(vec![8, 8, 8], |i| (i[0] * 3 + i[1] * 5 + i[2]) as f32).unwrap();
        let back = inverse(&forward(&v).unwrap()).unwrap();
        for (a, b) in back.data().iter().zip(v.data()) {
            assert!((a - b).abs() <= 1e-4 * 64.0);
        }
    }
}

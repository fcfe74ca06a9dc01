//! Dense 1-3D scalar volumes.
//!
//! Samples are stored row-major: the last axis varies fastest. A voxel
//! index is given in storage-axis order `(i_0, .., i_{s-1})`.
//!
//! Wavelet-domain quantities (wavelet types, coefficient positions and
//! gradient vectors) use *coordinate* order instead: coordinate `x_j`
//! (`j = 1..=s`) runs along storage axis `s - j`. For an image stored as
//! `rows x columns` this is the familiar `(x, y) = (column, row)`.

use crate::error::{Error, Result};
use crate::Real;

pub const MAX_DIM: usize = 3;

/// Smallest `m` with `2^m >= max(dims)`.
pub fn dyadic_exponent(dims: &[usize]) -> u32 {
    let max = dims.iter().copied().max().unwrap_or(1).max(1);
    max.next_power_of_two().trailing_zeros()
}

/// Storage axis that carries coordinate `j` (zero based).
#[inline]
pub fn axis_of_coord(j: usize, s: usize) -> usize {
    s - 1 - j
}

/// A validated voxel index, in storage-axis order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VoxelIndex(Vec<usize>);

impl VoxelIndex {
    pub fn new(coords: &[usize], dims: &[usize]) -> Result<Self> {
        if coords.len() != dims.len() || coords.iter().zip(dims).any(|(c, d)| c >= d) {
            return Err(Error::IndexOutOfBounds {
                index: coords.to_vec(),
                dims: dims.to_vec(),
            });
        }
        Ok(VoxelIndex(coords.to_vec()))
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

/// Dense scalar grid with optional pre-padding extents.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    dims: Vec<usize>,
    data: Vec<T>,
    origin: Option<Vec<usize>>,
}

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.len() > MAX_DIM {
        return Err(Error::UnsupportedDimension(dims.len()));
    }
    if dims.contains(&0) {
        return Err(Error::EmptyVolume);
    }
    Ok(dims.iter().product())
}

impl<T: Real> Volume<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let expected = check_dims(&dims)?;
        if expected != data.len() {
            return Err(Error::ShapeMismatch {
                dims,
                expected,
                actual: data.len(),
            });
        }
        Ok(Volume {
            dims,
            data,
            origin: None,
        })
    }

    pub fn filled(dims: Vec<usize>, value: T) -> Result<Self> {
        let len = check_dims(&dims)?;
        Volume::new(dims, vec![value; len])
    }

    /// Builds a volume from a function of the voxel index (storage order).
    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Result<Self> {
        let len = check_dims(&dims)?;
        let mut idx = vec![0usize; dims.len()];
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f(&idx));
            increment(&mut idx, &dims);
        }
        Volume::new(dims, data)
    }

    /// Samples `f` at voxel centres of the unit cube.
    ///
    /// `f` receives unit coordinates in coordinate order: `x[j]` is
    /// `(i + 1/2) / extent` along storage axis `s - 1 - j`.
    pub fn from_unit_fn(dims: Vec<usize>, mut f: impl FnMut(&[f64]) -> T) -> Result<Self> {
        let s = dims.len();
        let ext = dims.clone();
        let mut x = vec![0.0; s];
        Volume::from_fn(dims, move |idx| {
            for (j, xj) in x.iter_mut().enumerate() {
                let a = axis_of_coord(j, s);
                *xj = (idx[a] as f64 + 0.5) / ext[a] as f64;
            }
            f(&x)
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    /// Extents before `pad_to_dyadic`, if this volume was padded.
    pub fn origin_extent(&self) -> Option<&[usize]> {
        self.origin.as_deref()
    }

    /// Attaches origin extents, e.g. when reloading a padded volume.
    pub fn with_origin_extent(mut self, origin: Vec<usize>) -> Result<Self> {
        if origin.len() != self.dims.len() || origin.iter().zip(&self.dims).any(|(o, d)| o > d) {
            return Err(Error::OriginExceedsDims {
                origin,
                dims: self.dims.clone(),
            });
        }
        self.origin = Some(origin);
        Ok(self)
    }

    pub fn offset(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.dims.len() {
            return None;
        }
        let mut off = 0;
        for (&i, &d) in index.iter().zip(&self.dims) {
            if i >= d {
                return None;
            }
            off = off * d + i;
        }
        Some(off)
    }

    pub fn get(&self, index: &[usize]) -> Option<T> {
        self.offset(index).map(|o| self.data[o])
    }

    pub fn at(&self, index: &VoxelIndex) -> Option<T> {
        self.get(index.coords())
    }

    pub fn unravel(&self, mut offset: usize) -> Option<VoxelIndex> {
        if offset >= self.data.len() {
            return None;
        }
        let mut coords = vec![0; self.dims.len()];
        for (c, &d) in coords.iter_mut().zip(&self.dims).rev() {
            *c = offset % d;
            offset /= d;
        }
        Some(VoxelIndex(coords))
    }

    /// The common dyadic exponent `m` if every extent equals `2^m`.
    pub fn dyadic_exponent(&self) -> Option<u32> {
        let d0 = self.dims[0];
        (d0.is_power_of_two() && self.dims.iter().all(|&d| d == d0)).then(|| d0.trailing_zeros())
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Volume<T> {
        Volume {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
            origin: self.origin.clone(),
        }
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    /// Embeds the volume into the low corner of a cube of side `2^m`,
    /// `m` minimal, filling the remainder with `fill`.
    ///
    /// The original extents are kept as `origin_extent` so that
    /// [`Volume::crop_to_origin`] can undo the embedding.
    pub fn pad_to_dyadic(&self, fill: T) -> Volume<T> {
        let origin = self.origin.clone().unwrap_or_else(|| self.dims.clone());
        let side = 1usize << dyadic_exponent(&self.dims);
        if self.dims.iter().all(|&d| d == side) {
            return Volume {
                dims: self.dims.clone(),
                data: self.data.clone(),
                origin: Some(origin),
            };
        }
        let s = self.dims.len();
        let out_dims = vec![side; s];
        let mut data = vec![fill; side.pow(s as u32)];
        copy_corner(&self.data, &self.dims, &mut data, &out_dims, &self.dims);
        Volume {
            dims: out_dims,
            data,
            origin: Some(origin),
        }
    }

    /// Returns the low-index corner of size `origin_extent`.
    pub fn crop_to_origin(&self) -> Result<Volume<T>> {
        let origin = self.origin.as_ref().ok_or(Error::NotPadded)?;
        if origin.len() != self.dims.len() || origin.iter().zip(&self.dims).any(|(o, d)| o > d) {
            return Err(Error::OriginExceedsDims {
                origin: origin.clone(),
                dims: self.dims.clone(),
            });
        }
        let mut data = vec![T::zero(); origin.iter().product()];
        copy_corner(&self.data, &self.dims, &mut data, origin, origin);
        Ok(Volume {
            dims: origin.clone(),
            data,
            origin: None,
        })
    }
}

/// Copies the `extent` corner of `src` (shape `src_dims`) into the low
/// corner of `dst` (shape `dst_dims`), one contiguous row at a time.
fn copy_corner<T: Copy>(
    src: &[T],
    src_dims: &[usize],
    dst: &mut [T],
    dst_dims: &[usize],
    extent: &[usize],
) {
    let s = extent.len();
    let row = extent[s - 1];
    let prefix = &extent[..s - 1];
    let rows: usize = prefix.iter().product();
    let mut idx = vec![0usize; s - 1];
    for _ in 0..rows {
        let mut so = 0;
        let mut d_o = 0;
        for (a, &i) in idx.iter().enumerate() {
            so = so * src_dims[a] + i;
            d_o = d_o * dst_dims[a] + i;
        }
        so *= src_dims[s - 1];
        d_o *= dst_dims[s - 1];
        dst[d_o..d_o + row].copy_from_slice(&src[so..so + row]);
        increment(&mut idx, prefix);
    }
}

/// Odometer increment of a row-major multi-index.
pub(crate) fn increment(idx: &mut [usize], dims: &[usize]) {
    for (i, &d) in idx.iter_mut().zip(dims).rev() {
        *i += 1;
        if *i < d {
            return;
        }
        *i = 0;
    }
}

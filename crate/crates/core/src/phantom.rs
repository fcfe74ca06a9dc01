//! Synthetic test volumes and seeded noise.
//!
//! Continuous phantoms are sampled at voxel centres of the unit cube, with
//! positions in coordinate order (see [`Volume::from_unit_fn`]).

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Volume;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    Constant,
    Linear,
    GaussianBump,
    Sphere,
    Step,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 5] = [
        PhantomKind::Constant,
        PhantomKind::Linear,
        PhantomKind::GaussianBump,
        PhantomKind::Sphere,
        PhantomKind::Step,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhantomKind::Constant => "constant",
            PhantomKind::Linear => "linear",
            PhantomKind::GaussianBump => "gaussian_bump",
            PhantomKind::Sphere => "sphere",
            PhantomKind::Step => "step",
        }
    }
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_").to_ascii_lowercase();
        PhantomKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::UnknownPhantom(s.to_string()))
    }
}

/// Parameters shared by all phantom kinds; each kind reads only its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomParams {
    /// Constant value; background for sphere and step.
    pub value: f64,
    /// Foreground value (sphere inside, step high side) and bump amplitude.
    pub amplitude: f64,
    /// Bump and sphere centre in unit coordinates, coordinate order. Empty
    /// means the cube centre.
    pub center: Vec<f64>,
    pub sigma: f64,
    pub radius: f64,
    /// Slope per coordinate for `linear`; missing entries are 1.
    pub slope: Vec<f64>,
    /// Storage axis of the step edge.
    pub axis: usize,
    /// First voxel index on the high side of the step; `None` = midpoint.
    pub edge: Option<usize>,
}

impl Default for PhantomParams {
    fn default() -> Self {
        PhantomParams {
            value: 0.0,
            amplitude: 1.0,
            center: Vec::new(),
            sigma: 0.1,
            radius: 0.3,
            slope: Vec::new(),
            axis: 0,
            edge: None,
        }
    }
}

impl PhantomParams {
    fn centre(&self, s: usize) -> Vec<f64> {
        (0..s)
            .map(|j| self.center.get(j).copied().unwrap_or(0.5))
            .collect()
    }
}

/// `amplitude · exp(−|x − c|² / (2σ²))`.
pub fn gaussian_bump(x: &[f64], center: &[f64], sigma: f64, amplitude: f64) -> f64 {
    let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
    amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
}

/// Analytic gradient of [`gaussian_bump`], coordinate order.
pub fn gaussian_bump_gradient(x: &[f64], center: &[f64], sigma: f64, amplitude: f64) -> Vec<f64> {
    let g = gaussian_bump(x, center, sigma, amplitude);
    x.iter()
        .zip(center)
        .map(|(a, c)| -g * (a - c) / (sigma * sigma))
        .collect()
}

/// Deterministic phantom of the given storage-order `dims`.
pub fn phantom<T: Real>(
    kind: PhantomKind,
    dims: &[usize],
    params: &PhantomParams,
) -> Result<Volume<T>> {
    let dims = dims.to_vec();
    let s = dims.len();
    let c = params.centre(s);
    match kind {
        PhantomKind::Constant => Volume::filled(dims, T::of(params.value)),
        PhantomKind::Linear => {
            let slope: Vec<f64> = (0..s)
                .map(|j| params.slope.get(j).copied().unwrap_or(1.0))
                .collect();
            Volume::from_unit_fn(dims, |x| {
                T::of(params.value + x.iter().zip(&slope).map(|(a, b)| a * b).sum::<f64>())
            })
        }
        PhantomKind::GaussianBump => {
            if params.sigma.is_nan() || params.sigma <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "sigma must be positive, got {}",
                    params.sigma
                )));
            }
            Volume::from_unit_fn(dims, |x| {
                T::of(params.value + gaussian_bump(x, &c, params.sigma, params.amplitude))
            })
        }
        PhantomKind::Sphere => {
            let r2 = params.radius * params.radius;
            Volume::from_unit_fn(dims, |x| {
                let d2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum();
                T::of(if d2 <= r2 {
                    params.amplitude
                } else {
                    params.value
                })
            })
        }
        PhantomKind::Step => {
            if params.axis >= s {
                return Err(Error::InvalidParameter(format!(
                    "step axis {} out of range for {s} dimensions",
                    params.axis
                )));
            }
            let edge = params.edge.unwrap_or(dims[params.axis] / 2);
            let axis = params.axis;
            Volume::from_fn(dims, |i| {
                T::of(if i[axis] >= edge {
                    params.value + params.amplitude
                } else {
                    params.value
                })
            })
        }
    }
}

/// Adds i.i.d. `N(0, σ²)` noise drawn from a ChaCha8 stream seeded with
/// `seed`, in storage order.
pub fn add_noise<T: Real>(v: &Volume<T>, sigma: f64, seed: u64) -> Result<Volume<T>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and non-negative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(v.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = v.clone();
    for x in out.data_mut() {
        *x += T::of(normal.sample(&mut rng));
    }
    Ok(out)
}

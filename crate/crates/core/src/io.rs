//! File formats: raw volumes with a TOML sidecar header, pyramids in the
//! same scheme, PGM slices, gradient CSV and TOML reports.
//!
//! Payloads are little-endian, row-major with the last axis fastest. A
//! pyramid payload is `f64` values: the scaling coefficient, then levels
//! coarse to fine, each level as its `2^s − 1` blocks in ascending `θ`
//! bit-pattern order, each block indexed by `α` with `α_1` fastest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gradient::GradientField;
use crate::grid::Volume;
use crate::haar::WaveletPyramid;
use crate::metrics::TvReport;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleType {
    U8,
    U16,
    F32,
    F64,
}

impl SampleType {
    pub fn size(self) -> usize {
        match self {
            SampleType::U8 => 1,
            SampleType::U16 => 2,
            SampleType::F32 => 4,
            SampleType::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SampleType::U8 => "u8",
            SampleType::U16 => "u16",
            SampleType::F32 => "f32",
            SampleType::F64 => "f64",
        }
    }

    pub fn parse(name: &str) -> Option<SampleType> {
        [
            SampleType::U8,
            SampleType::U16,
            SampleType::F32,
            SampleType::F64,
        ]
        .into_iter()
        .find(|t| t.name() == name)
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            SampleType::U8 => b[0] as f64,
            SampleType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            SampleType::F32 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
            SampleType::F64 => f64::from_le_bytes(b.try_into().unwrap()),
        }
    }

    fn encode(self, x: f64, out: &mut Vec<u8>) {
        match self {
            SampleType::U8 => out.push(x.round_ties_even().clamp(0.0, u8::MAX as f64) as u8),
            SampleType::U16 => out.extend_from_slice(
                &(x.round_ties_even().clamp(0.0, u16::MAX as f64) as u16).to_le_bytes(),
            ),
            SampleType::F32 => out.extend_from_slice(&(x as f32).to_le_bytes()),
            SampleType::F64 => out.extend_from_slice(&x.to_le_bytes()),
        }
    }
}

/// What a payload holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Content {
    #[default]
    Volume,
    HaarPyramid,
}

/// Sidecar header describing a raw payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeHeader {
    /// Extents per storage axis.
    pub shape: Vec<usize>,
    pub sample_type: SampleType,
    pub byte_order: String,
    pub layout: String,
    /// Loaded value is `value_offset + value_scale * raw`.
    pub value_offset: f64,
    pub value_scale: f64,
    /// Original extents before dyadic padding, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_shape: Option<Vec<usize>>,
    #[serde(default)]
    pub content: Content,
}

pub const BYTE_ORDER: &str = "little-endian";
pub const LAYOUT: &str = "row-major";

impl VolumeHeader {
    pub fn new(shape: Vec<usize>, sample_type: SampleType) -> Self {
        VolumeHeader {
            shape,
            sample_type,
            byte_order: BYTE_ORDER.into(),
            layout: LAYOUT.into(),
            value_offset: 0.0,
            value_scale: 1.0,
            origin_shape: None,
            content: Content::Volume,
        }
    }

    pub fn payload_len(&self) -> u64 {
        self.shape.iter().product::<usize>() as u64 * self.sample_type.size() as u64
    }

    /// Parses header text; `path` is only used in error messages.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            shape: Vec<usize>,
            sample_type: toml::Spanned<String>,
            #[serde(default = "default_order")]
            byte_order: toml::Spanned<String>,
            #[serde(default = "default_layout")]
            layout: toml::Spanned<String>,
            #[serde(default)]
            value_offset: f64,
            #[serde(default = "one")]
            value_scale: f64,
            #[serde(default)]
            origin_shape: Option<Vec<usize>>,
            #[serde(default)]
            content: Content,
        }
        fn default_order() -> toml::Spanned<String> {
            toml::Spanned::new(0..0, BYTE_ORDER.into())
        }
        fn default_layout() -> toml::Spanned<String> {
            toml::Spanned::new(0..0, LAYOUT.into())
        }
        fn one() -> f64 {
            1.0
        }

        let malformed = |offset: usize, message: String| Error::MalformedHeader {
            path: path.to_path_buf(),
            offset,
            message,
        };
        let raw: Raw = toml::from_str(text).map_err(|e| {
            let off = e.span().map_or(0, |s| s.start);
            malformed(off, e.message().to_string())
        })?;
        let sample_type = SampleType::parse(raw.sample_type.get_ref()).ok_or_else(|| {
            Error::UnknownSampleType {
                path: path.to_path_buf(),
                name: raw.sample_type.get_ref().clone(),
                offset: raw.sample_type.span().start,
            }
        })?;
        if !matches!(
            raw.byte_order.get_ref().as_str(),
            "little-endian" | "little" | "le"
        ) {
            return Err(malformed(
                raw.byte_order.span().start,
                format!("unsupported byte_order `{}`", raw.byte_order.get_ref()),
            ));
        }
        if !matches!(raw.layout.get_ref().as_str(), "row-major" | "c") {
            return Err(malformed(
                raw.layout.span().start,
                format!("unsupported layout `{}`", raw.layout.get_ref()),
            ));
        }
        if raw.shape.is_empty() || raw.shape.len() > crate::grid::MAX_DIM || raw.shape.contains(&0)
        {
            return Err(malformed(
                text.find("shape").unwrap_or(0),
                format!("shape {:?} must have 1 to 3 nonzero extents", raw.shape),
            ));
        }
        if !(raw.value_scale.is_finite() && raw.value_scale != 0.0 && raw.value_offset.is_finite())
        {
            return Err(malformed(
                text.find("value_").unwrap_or(0),
                "value_scale must be finite and nonzero, value_offset finite".into(),
            ));
        }
        Ok(VolumeHeader {
            shape: raw.shape,
            sample_type,
            byte_order: BYTE_ORDER.into(),
            layout: LAYOUT.into(),
            value_offset: raw.value_offset,
            value_scale: raw.value_scale,
            origin_shape: raw.origin_shape,
            content: raw.content,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("header serialises")
    }
}

/// Header and payload paths for a file stem: `stem.toml` and `stem.raw`.
/// A trailing `.toml` or `.raw` on `stem` is ignored.
pub fn stem_paths(stem: &Path) -> (PathBuf, PathBuf) {
    let base = match stem.extension().and_then(|e| e.to_str()) {
        Some("toml") | Some("raw") => stem.with_extension(""),
        _ => stem.to_path_buf(),
    };
    let mut h = base.clone().into_os_string();
    h.push(".toml");
    let mut d = base.into_os_string();
    d.push(".raw");
    (h.into(), d.into())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_payload(h: &VolumeHeader, data_path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(data_path).map_err(|e| Error::io(data_path, e))?;
    let expected = h.payload_len();
    if bytes.len() as u64 != expected {
        return Err(Error::PayloadSize {
            path: data_path.to_path_buf(),
            expected,
            actual: bytes.len() as u64,
            offset: expected.min(bytes.len() as u64),
        });
    }
    let t = h.sample_type;
    Ok(bytes
        .chunks_exact(t.size())
        .map(|b| h.value_offset + h.value_scale * t.decode(b))
        .collect())
}

/// Reads a volume; samples are widened to `f64` and mapped through the
/// header's affine transform.
pub fn load_volume(header_path: &Path, data_path: &Path) -> Result<Volume<f64>> {
    let h = VolumeHeader::parse(&read_text(header_path)?, header_path)?;
    let data = read_payload(&h, data_path)?;
    let v = Volume::new(h.shape.clone(), data)?;
    match h.origin_shape {
        Some(o) => v.with_origin_extent(o),
        None => Ok(v),
    }
}

/// Writes `v` as `sample_type` with the identity affine map. Integer types
/// round half to even and clamp to their range.
pub fn save_volume<T: Real>(
    v: &Volume<T>,
    header_path: &Path,
    data_path: &Path,
    sample_type: SampleType,
) -> Result<()> {
    let mut h = VolumeHeader::new(v.dims().to_vec(), sample_type);
    h.origin_shape = v.origin_extent().map(<[usize]>::to_vec);
    let mut bytes = Vec::with_capacity(v.len() * sample_type.size());
    for &x in v.data() {
        sample_type.encode(x.widen(), &mut bytes);
    }
    write_bytes(data_path, &bytes)?;
    write_bytes(header_path, h.to_toml().as_bytes())
}

/// Writes a pyramid as `f64` in the documented coefficient order.
pub fn save_pyramid<T: Real>(
    p: &WaveletPyramid<T>,
    header_path: &Path,
    data_path: &Path,
) -> Result<()> {
    let side = 1usize << p.m();
    let mut h = VolumeHeader::new(vec![side; p.dim()], SampleType::F64);
    h.content = Content::HaarPyramid;
    h.origin_shape = p.origin_extent().map(<[usize]>::to_vec);
    let mut bytes = Vec::with_capacity(p.len() * 8);
    for c in p.coefficients() {
        bytes.extend_from_slice(&c.widen().to_le_bytes());
    }
    write_bytes(data_path, &bytes)?;
    write_bytes(header_path, h.to_toml().as_bytes())
}

pub fn load_pyramid(header_path: &Path, data_path: &Path) -> Result<WaveletPyramid<f64>> {
    let h = VolumeHeader::parse(&read_text(header_path)?, header_path)?;
    let malformed = |message: String| Error::MalformedHeader {
        path: header_path.to_path_buf(),
        offset: 0,
        message,
    };
    if h.content != Content::HaarPyramid {
        return Err(malformed("content is not haar_pyramid".into()));
    }
    let side = h.shape[0];
    if !side.is_power_of_two() || h.shape.iter().any(|&e| e != side) {
        return Err(malformed(format!(
            "pyramid shape {:?} is not a dyadic cube",
            h.shape
        )));
    }
    let data = read_payload(&h, data_path)?;
    let s = h.shape.len();
    let m = side.trailing_zeros();
    let mut details = Vec::with_capacity(m as usize);
    let mut at = 1;
    for n in 0..m as usize {
        let len = ((1usize << s) - 1) << (n * s);
        details.push(data[at..at + len].to_vec());
        at += len;
    }
    Ok(WaveletPyramid::from_parts(s, m, data[0], details)?.with_origin_extent(h.origin_shape))
}

/// The `(s−1)`-dimensional slice of `v` at `index` along storage `axis`.
pub fn slice<T: Real>(v: &Volume<T>, axis: usize, index: usize) -> Result<Volume<T>> {
    let dims = v.dims();
    if axis >= dims.len() {
        return Err(Error::InvalidParameter(format!(
            "axis {axis} out of range for {} axes",
            dims.len()
        )));
    }
    if index >= dims[axis] {
        return Err(Error::IndexOutOfBounds {
            index: vec![index],
            dims: vec![dims[axis]],
        });
    }
    if dims.len() == 1 {
        return Volume::new(vec![1], vec![v.data()[index]]);
    }
    let rest: Vec<usize> = dims
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != axis)
        .map(|(_, &d)| d)
        .collect();
    let mut full = vec![0; dims.len()];
    Volume::from_fn(rest, |i| {
        let mut k = 0;
        for (a, f) in full.iter_mut().enumerate() {
            if a == axis {
                *f = index;
            } else {
                *f = i[k];
                k += 1;
            }
        }
        v.get(&full).expect("index in range")
    })
}

/// Encodes a 1D or 2D volume as a binary 8-bit PGM.
///
/// Values are min-max normalised to `t ∈ [0,1]` and written as
/// `round(255 t^{1/γ})`; a constant image is uniform 128.
pub fn encode_pgm<T: Real>(img: &Volume<T>, gamma: f64) -> Result<Vec<u8>> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let (h, w) = match *img.dims() {
        [w] => (1, w),
        [h, w] => (h, w),
        ref d => {
            return Err(Error::InvalidParameter(format!(
                "PGM needs a 1D or 2D image, got extents {d:?}"
            )))
        }
    };
    let lo = img.min_value().widen();
    let hi = img.max_value().widen();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(img.data().iter().map(|&x| {
        if hi > lo {
            let t = ((x.widen() - lo) / (hi - lo)).clamp(0.0, 1.0);
            (255.0 * t.powf(1.0 / gamma)).round() as u8
        } else {
            128
        }
    }));
    Ok(out)
}

/// Writes the slice at `index` along `axis` as PGM. For a 3D volume of
/// extents `(a, b, c)` and `axis = 2` the image has `a` rows of `b` pixels.
pub fn export_slice<T: Real>(
    v: &Volume<T>,
    axis: usize,
    index: usize,
    path: &Path,
    gamma: f64,
) -> Result<()> {
    let img = if v.ndim() == 1 {
        v.clone()
    } else {
        slice(v, axis, index)?
    };
    write_bytes(path, &encode_pgm(&img, gamma)?)
}

/// CSV of a gradient field: `level, alpha_1.., x_1.., g_1..`, one row per
/// sample in the field's order (level, then lexicographic `α`).
pub fn gradients_csv<T: Real>(field: &GradientField<T>) -> String {
    let s = field.dim();
    let mut out = String::from("level");
    for prefix in ["alpha", "x", "g"] {
        for j in 1..=s {
            let _ = write!(out, ",{prefix}_{j}");
        }
    }
    out.push('\n');
    for smp in field.samples() {
        let _ = write!(out, "{}", smp.level);
        for a in &smp.alpha {
            let _ = write!(out, ",{a}");
        }
        for x in smp.position.iter().chain(&smp.vec) {
            // `+ 0.0` prints negative zero as `0`
            let _ = write!(out, ",{}", x.widen() + 0.0);
        }
        out.push('\n');
    }
    out
}

pub fn export_gradients<T: Real>(field: &GradientField<T>, path: &Path) -> Result<()> {
    write_bytes(path, gradients_csv(field).as_bytes())
}

/// Several reports, e.g. one per swept `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSet {
    pub run: Vec<TvReport>,
}

pub fn report_to_toml(r: &TvReport) -> String {
    toml::to_string(r).expect("report serialises")
}

pub fn write_report(r: &TvReport, path: &Path) -> Result<()> {
    write_bytes(path, report_to_toml(r).as_bytes())
}

pub fn write_reports(runs: &[TvReport], path: &Path) -> Result<()> {
    let text = toml::to_string(&ReportSet { run: runs.to_vec() }).expect("reports serialise");
    write_bytes(path, text.as_bytes())
}

pub fn read_report(path: &Path) -> Result<TvReport> {
    let text = read_text(path)?;
    toml::from_str(&text).map_err(|e| Error::MalformedHeader {
        path: path.to_path_buf(),
        offset: e.span().map_or(0, |s| s.start),
        message: e.message().to_string(),
    })
}

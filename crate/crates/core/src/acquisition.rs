//! Multicoset sampling, 1-bit and b-bit quantization, and Bussgang/SQNR
//! diagnostics.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::linalg::CMatrix;
use crate::seed::{self, tag};
use crate::{Error, Real, Result};

/// The `p` distinct coset offsets `c_i ∈ {0..L-1}`, stored ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CosetPattern {
    offsets: Vec<usize>,
    channels: usize,
}

impl CosetPattern {
    pub fn new(channels: usize, offsets: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut offsets: Vec<usize> = offsets.into_iter().collect();
        offsets.sort_unstable();
        if offsets.is_empty() || offsets.len() > channels {
            return Err(Error::Parameter(format!(
                "coset count {} outside 1..={channels}",
                offsets.len()
            )));
        }
        if let Some(bad) = offsets.iter().find(|&&c| c >= channels) {
            return Err(Error::Parameter(format!("coset offset {bad} outside 0..{channels}")));
        }
        if offsets.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("coset offsets must be distinct".into()));
        }
        Ok(Self { offsets, channels })
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Coset count `p`.
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// `p` offsets drawn uniformly without replacement from `{0..L-1}`.
pub fn draw_pattern(l: usize, p: usize, seed: u64) -> Result<CosetPattern> {
    if p == 0 || p > l {
        return Err(Error::Parameter(format!("coset count {p} outside 1..={l}")));
    }
    let mut rng = seed::stream(seed, tag::PATTERN);
    CosetPattern::new(l, index::sample(&mut rng, l, p))
}

/// Quantizer resolution: a bit count, or `None` for the unquantized path.
///
/// Parses from and prints as `"none"` or a decimal bit count. Depths of 53
/// bits and more are indistinguishable from `f64` and act as the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "BitDepthRepr", into = "BitDepthRepr")]
pub struct BitDepth(Option<u32>);

impl BitDepth {
    pub const UNQUANTIZED: Self = Self(None);
    pub const ONE_BIT: Self = Self(Some(1));

    pub fn bits(bits: u32) -> Result<Self> {
        if (1..=64).contains(&bits) {
            Ok(Self(Some(bits)))
        } else {
            Err(Error::Parameter(format!("bit depth {bits} outside 1..=64")))
        }
    }

    pub fn get(self) -> Option<u32> {
        self.0
    }

    pub fn is_identity(self) -> bool {
        self.0.is_none_or(|b| b >= IDENTITY_BITS)
    }
}

/// From this depth on the quantizer step is below `f64` resolution.
pub const IDENTITY_BITS: u32 = 53;

impl fmt::Display for BitDepth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("none"),
            Some(b) => write!(f, "{b}"),
        }
    }
}

impl FromStr for BitDepth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("none") {
            return Ok(Self::UNQUANTIZED);
        }
        let bits = s
            .parse::<u32>()
            .map_err(|_| Error::Parameter(format!("bit depth must be 'none' or an integer, got '{s}'")))?;
        Self::bits(bits)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BitDepthRepr {
    Bits(u32),
    Text(String),
}

impl TryFrom<BitDepthRepr> for BitDepth {
    type Error = Error;

    fn try_from(r: BitDepthRepr) -> Result<Self> {
        match r {
            BitDepthRepr::Bits(b) => Self::bits(b),
            BitDepthRepr::Text(s) => s.parse(),
        }
    }
}

impl From<BitDepth> for BitDepthRepr {
    fn from(b: BitDepth) -> Self {
        match b.0 {
            Some(bits) => Self::Bits(bits),
            None => Self::Text("none".into()),
        }
    }
}

/// Quantizer selection plus the clip range used by multi-bit quantizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerSpec {
    pub bits: BitDepth,
    /// Full-scale range as a multiple of the per-component input σ.
    pub clip_sigma: f64,
}

pub const DEFAULT_CLIP_SIGMA: f64 = 3.0;

impl QuantizerSpec {
    pub fn new(bits: BitDepth) -> Self {
        Self {
            bits,
            clip_sigma: DEFAULT_CLIP_SIGMA,
        }
    }

    /// Quantizes `y` at the configured depth; the unquantized setting returns a copy.
    pub fn apply<T: Real>(&self, y: &CosetSamples<T>) -> Result<CosetSamples<T>> {
        match self.bits.get() {
            Some(1) => quantize_1bit(y),
            Some(_) if !self.bits.is_identity() => quantize_bbit(y, self),
            _ => Ok(y.clone()),
        }
    }
}

/// Quantization state of a sample block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantization {
    None,
    OneBit,
    Uniform { bits: u32 },
}

impl fmt::Display for Quantization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("unquantized"),
            Self::OneBit => f.write_str("1-bit"),
            Self::Uniform { bits } => write!(f, "{bits}-bit"),
        }
    }
}

/// `p × N` block of coset samples; row `i` is coset `i` of the pattern.
#[derive(Debug, Clone)]
pub struct CosetSamples<T> {
    pub data: CMatrix<T>,
    pub pattern: CosetPattern,
    pub quantized: Quantization,
}

impl<T: Real> CosetSamples<T> {
    pub fn cosets(&self) -> usize {
        self.data.rows()
    }

    /// Samples per coset, `N`.
    pub fn frame_len(&self) -> usize {
        self.data.cols()
    }

    fn with_data(&self, data: CMatrix<T>, quantized: Quantization) -> Self {
        Self {
            data,
            pattern: self.pattern.clone(),
            quantized,
        }
    }

    fn ensure_unquantized(&self) -> Result<()> {
        match self.quantized {
            Quantization::None => Ok(()),
            q => Err(Error::AlreadyQuantized(q.to_string())),
        }
    }
}

/// `y_i[m] = x[m·L + c_i]` for `m = 0..N-1`.
pub fn multicoset_sample<T: Real>(x: &[Complex<T>], pattern: &CosetPattern, frame_len: usize) -> Result<CosetSamples<T>> {
    let l = pattern.channels();
    if frame_len == 0 || x.len() < l * frame_len {
        return Err(Error::Shape(format!(
            "{} Nyquist samples cannot feed {frame_len} samples per coset at L = {l}",
            x.len()
        )));
    }
    let data = CMatrix::from_fn(pattern.len(), frame_len, |i, m| x[m * l + pattern.offsets[i]]);
    Ok(CosetSamples {
        data,
        pattern: pattern.clone(),
        quantized: Quantization::None,
    })
}

/// `(sign(Re z) + j·sign(Im z))/√2` with `sign(0) = +1`.
#[inline]
pub fn one_bit<T: Real>(z: Complex<T>) -> Complex<T> {
    let h = T::FRAC_1_SQRT_2();
    let sign = |v: T| if v >= T::zero() { h } else { -h };
    Complex::new(sign(z.re), sign(z.im))
}

pub fn quantize_1bit_slice<T: Real>(x: &[Complex<T>]) -> Vec<Complex<T>> {
    x.iter().copied().map(one_bit).collect()
}

pub fn quantize_1bit<T: Real>(y: &CosetSamples<T>) -> Result<CosetSamples<T>> {
    y.ensure_unquantized()?;
    Ok(y.with_data(y.data.map(one_bit), Quantization::OneBit))
}

/// Uniform mid-rise quantizer with `2^bits` levels over ±clip_sigma·σ applied
/// independently to real and imaginary parts; σ is the per-component RMS of
/// each coset row.
pub fn quantize_bbit<T: Real>(y: &CosetSamples<T>, spec: &QuantizerSpec) -> Result<CosetSamples<T>> {
    y.ensure_unquantized()?;
    let bits = match spec.bits.get() {
        Some(b) if b >= 2 => b,
        _ => {
            return Err(Error::Parameter(format!(
                "multi-bit quantizer needs at least 2 bits, got {}",
                spec.bits
            )))
        }
    };
    if bits >= IDENTITY_BITS {
        return Ok(y.clone());
    }
    if !(spec.clip_sigma.is_finite() && spec.clip_sigma > 0.0) {
        return Err(Error::Parameter(format!("clip range must be positive, got {}", spec.clip_sigma)));
    }

    let mut data = y.data.clone();
    for i in 0..data.rows() {
        let row = data.row_mut(i);
        let mean_power = row.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b) / T::of(row.len() as f64);
        let sigma = (mean_power / T::of(2.0)).sqrt();
        let q = UniformQuantizer::new(bits, T::of(spec.clip_sigma) * sigma);
        for z in row.iter_mut() {
            *z = Complex::new(q.apply(z.re), q.apply(z.im));
        }
    }
    Ok(y.with_data(data, Quantization::Uniform { bits }))
}

#[derive(Debug, Clone, Copy)]
struct UniformQuantizer<T> {
    step: T,
    max_index: T,
}

impl<T: Real> UniformQuantizer<T> {
    fn new(bits: u32, full_scale: T) -> Self {
        let levels = T::of(2f64.powi(bits as i32));
        Self {
            step: (full_scale + full_scale) / levels,
            max_index: levels / T::of(2.0) - T::one(),
        }
    }

    fn apply(&self, v: T) -> T {
        if self.step <= T::zero() {
            return T::zero();
        }
        let idx = (v / self.step).floor().max(-self.max_index - T::one()).min(self.max_index);
        (idx + T::of(0.5)) * self.step
    }
}

fn check_pair<T: Real>(y: &CosetSamples<T>, q: &CosetSamples<T>) -> Result<()> {
    if (y.data.rows(), y.data.cols()) != (q.data.rows(), q.data.cols()) {
        return Err(Error::Shape(format!(
            "input is {}×{}, quantized output is {}×{}",
            y.data.rows(),
            y.data.cols(),
            q.data.rows(),
            q.data.cols()
        )));
    }
    Ok(())
}

/// Least-squares real gain `Re(Σ q·conj(y)) / Σ|y|²`.
pub fn bussgang_gain_slices<T: Real>(y: &[Complex<T>], q: &[Complex<T>]) -> Result<T> {
    if y.len() != q.len() {
        return Err(Error::Shape(format!("{} inputs vs {} outputs", y.len(), q.len())));
    }
    let mut cross = T::zero();
    let mut energy = T::zero();
    for (a, b) in y.iter().zip(q) {
        cross += (b * a.conj()).re;
        energy += a.norm_sqr();
    }
    if energy <= T::zero() {
        return Err(Error::UndefinedGain);
    }
    Ok(cross / energy)
}

pub fn bussgang_gain<T: Real>(y: &CosetSamples<T>, q: &CosetSamples<T>) -> Result<T> {
    check_pair(y, q)?;
    bussgang_gain_slices(y.data.as_slice(), q.data.as_slice())
}

/// Powers of the linear part `B̂·y` and of the distortion `ψ = q − B̂·y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BussgangSplit<T> {
    pub gain: T,
    pub signal_power: T,
    pub distortion_power: T,
}

impl<T: Real> BussgangSplit<T> {
    pub fn sqnr_db(&self) -> T {
        if self.distortion_power <= T::zero() {
            return T::infinity();
        }
        T::of(10.0) * (self.signal_power / self.distortion_power).log10()
    }
}

pub fn bussgang_split_slices<T: Real>(y: &[Complex<T>], q: &[Complex<T>]) -> Result<BussgangSplit<T>> {
    let gain = bussgang_gain_slices(y, q)?;
    let n = T::of(y.len() as f64);
    let mut signal = T::zero();
    let mut distortion = T::zero();
    for (a, b) in y.iter().zip(q) {
        let linear = a.scale(gain);
        signal += linear.norm_sqr();
        distortion += (b - linear).norm_sqr();
    }
    Ok(BussgangSplit {
        gain,
        signal_power: signal / n,
        distortion_power: distortion / n,
    })
}

/// `10·log10(P_s/P_ψ)`; `+inf` when the output is an exact linear copy.
pub fn sqnr<T: Real>(y: &CosetSamples<T>, q: &CosetSamples<T>) -> Result<T> {
    check_pair(y, q)?;
    Ok(bussgang_split_slices(y.data.as_slice(), q.data.as_slice())?.sqnr_db())
}

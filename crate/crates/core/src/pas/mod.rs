//! Amplitude-to-symbol mapping for probabilistic amplitude shaping.
//!
//! Four DM blocks of `N` amplitudes plus `4N` uniform signs fill `N`
//! dual-polarization (4D) symbols. The serial map keeps each DM block inside
//! `N/4` consecutive 4D symbols; the parallel map spreads it over one
//! component of all `N` symbols.

use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::shaping::{AmplitudeAlphabet, AmplitudeBlock};
use crate::{Error, Result};

/// LLR magnitude cap.
pub const LLR_CLIP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Serial,
    Parallel,
}

/// Square QAM built from a per-dimension ASK with reflected-binary labels.
///
/// The label of the `p`-th point (counting from the most negative) is
/// `p ^ (p >> 1)`, so the most significant bit is the sign and the remaining
/// bits are a Gray label of the amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    alphabet: AmplitudeAlphabet,
    bits_per_dim: u32,
    scale: f64,
    odd_grid: bool,
}

impl QamConstellation {
    /// Constellation scaled to unit average symbol energy when amplitudes
    /// follow `amplitude_probs`.
    pub fn new(alphabet: AmplitudeAlphabet, amplitude_probs: &[f64]) -> Result<Self> {
        let amp_bits = alphabet.label_bits().ok_or_else(|| {
            Error::Alphabet(format!(
                "{} levels do not admit a binary label",
                alphabet.len()
            ))
        })?;
        if amplitude_probs.len() != alphabet.len() {
            return Err(Error::LengthMismatch(format!(
                "{} probabilities for {} levels",
                amplitude_probs.len(),
                alphabet.len()
            )));
        }
        let e: f64 = amplitude_probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * alphabet.energy(i) as f64)
            .sum();
        if e <= 0.0 {
            return Err(Error::Config("amplitude distribution has no energy".into()));
        }
        let odd_grid = alphabet.levels().iter().enumerate().all(|(i, &l)| l == 2 * i as u32 + 1);
        Ok(Self {
            alphabet,
            bits_per_dim: amp_bits + 1,
            scale: 1.0 / (2.0 * e).sqrt(),
            odd_grid,
        })
    }

    pub fn uniform(alphabet: AmplitudeAlphabet) -> Result<Self> {
        let p = vec![1.0 / alphabet.len() as f64; alphabet.len()];
        Self::new(alphabet, &p)
    }

    pub fn alphabet(&self) -> &AmplitudeAlphabet {
        &self.alphabet
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn bits_per_dim(&self) -> u32 {
        self.bits_per_dim
    }

    /// Points per polarization, `(2A)²`.
    pub fn size(&self) -> usize {
        let m = 2 * self.alphabet.len();
        m * m
    }

    /// Real ASK points, most negative first.
    pub fn ask_points(&self) -> Vec<f64> {
        let a = self.alphabet.len();
        (0..2 * a).map(|p| self.scale * signed_level(&self.alphabet, p) as f64).collect()
    }

    /// Position (most negative first) of a signed level.
    pub fn ask_position(&self, signed: i32) -> Option<usize> {
        let a = self.alphabet.len();
        let idx = self.alphabet.index_of(signed.unsigned_abs())?;
        Some(if signed < 0 { a - 1 - idx } else { a + idx })
    }

    pub fn label(&self, position: usize) -> u32 {
        let p = position as u32;
        p ^ (p >> 1)
    }

    /// All complex points, in-phase position major.
    pub fn points(&self) -> Vec<Complex64> {
        let ask = self.ask_points();
        let mut out = Vec::with_capacity(ask.len() * ask.len());
        for &re in &ask {
            for &im in &ask {
                out.push(Complex64::new(re, im));
            }
        }
        out
    }

    /// Nearest constellation point to `z`.
    pub fn decide(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.decide_dim(z.re), self.decide_dim(z.im))
    }

    fn decide_dim(&self, v: f64) -> f64 {
        let top = *self.alphabet.levels().last().unwrap() as f64;
        if self.odd_grid {
            let q = 2.0 * (0.5 * v / self.scale).floor() + 1.0;
            return q.clamp(-top, top) * self.scale;
        }
        self.ask_points()
            .into_iter()
            .min_by(|a, b| (a - v).abs().total_cmp(&(b - v).abs()))
            .unwrap()
    }
}

fn signed_level(alphabet: &AmplitudeAlphabet, position: usize) -> i32 {
    let a = alphabet.len();
    if position < a {
        -(alphabet.level(a - 1 - position) as i32)
    } else {
        alphabet.level(position - a) as i32
    }
}

/// Dual-polarization symbols as signed integer levels `(xI, xQ, yI, yQ)`
/// times a common scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FourDSymbolFrame {
    pub symbols: Vec<[i32; 4]>,
    pub scale: f64,
}

impl FourDSymbolFrame {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn x(&self) -> Vec<Complex64> {
        self.symbols
            .iter()
            .map(|s| Complex64::new(s[0] as f64, s[1] as f64) * self.scale)
            .collect()
    }

    pub fn y(&self) -> Vec<Complex64> {
        self.symbols
            .iter()
            .map(|s| Complex64::new(s[2] as f64, s[3] as f64) * self.scale)
            .collect()
    }

    /// Per-symbol `|x|² + |y|²`.
    pub fn intensities(&self) -> Vec<f64> {
        self.symbols
            .iter()
            .map(|s| s.iter().map(|&c| (c as f64).powi(2)).sum::<f64>() * self.scale * self.scale)
            .collect()
    }

    pub fn concat(frames: &[FourDSymbolFrame]) -> Result<Self> {
        let scale = frames.first().map_or(1.0, |f| f.scale);
        if frames.iter().any(|f| f.scale != scale) {
            return Err(Error::Shape("frames have different scales".into()));
        }
        Ok(Self {
            symbols: frames.iter().flat_map(|f| f.symbols.iter().copied()).collect(),
            scale,
        })
    }

    /// CSV dump: header `t,x_i,x_q,y_i,y_q`, one row per 4D symbol, values
    /// in scaled units.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "x_i", "x_q", "y_i", "y_q"])?;
        for (t, s) in self.symbols.iter().enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(s.iter().map(|&c| (c as f64 * self.scale).to_string()));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a dump written by [`write_csv`](Self::write_csv) given the
    /// scale it was written with.
    pub fn read_csv<R: Read>(r: R, scale: f64) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut symbols = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let mut s = [0i32; 4];
            for (c, slot) in s.iter_mut().enumerate() {
                let v: f64 = rec
                    .get(c + 1)
                    .ok_or_else(|| Error::Parse("short frame row".into()))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("{e}")))?;
                *slot = (v / scale).round() as i32;
            }
            symbols.push(s);
        }
        Ok(Self { symbols, scale })
    }
}

/// Seeded source of uniform signs (`true` = negative).
#[derive(Debug, Clone)]
pub struct SignSource {
    rng: ChaCha8Rng,
}

impl SignSource {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_rng(rng: ChaCha8Rng) -> Self {
        Self { rng }
    }

    pub fn take(&mut self, n: usize) -> Vec<bool> {
        (0..n).map(|_| self.rng.random::<bool>()).collect()
    }
}

fn signed(a: u32, negative: bool) -> i32 {
    if negative {
        -(a as i32)
    } else {
        a as i32
    }
}

fn check_blocks(blocks: &[AmplitudeBlock], signs: &[bool]) -> Result<usize> {
    if blocks.len() != 4 {
        return Err(Error::Shape(format!("need 4 DM blocks, got {}", blocks.len())));
    }
    let n = blocks[0].len();
    if blocks.iter().any(|b| b.len() != n) {
        return Err(Error::Shape("DM blocks have different lengths".into()));
    }
    if signs.len() != 4 * n {
        return Err(Error::Shape(format!(
            "need {} signs, got {}",
            4 * n,
            signs.len()
        )));
    }
    Ok(n)
}

/// DM `j` fills the four components of 4D symbols `j·N/4 .. (j+1)·N/4`.
/// Signs are consumed in frame order.
pub fn map_serial(blocks: &[AmplitudeBlock], signs: &[bool], scale: f64) -> Result<FourDSymbolFrame> {
    let n = check_blocks(blocks, signs)?;
    if n % 4 != 0 {
        return Err(Error::Shape(format!("block length {n} is not a multiple of 4")));
    }
    let symbols = blocks
        .iter()
        .flat_map(|b| b.amplitudes.chunks_exact(4))
        .enumerate()
        .map(|(t, c)| std::array::from_fn(|j| signed(c[j], signs[4 * t + j])))
        .collect();
    Ok(FourDSymbolFrame { symbols, scale })
}

/// Component `j` of 4D symbol `t` is amplitude `t` of DM `j`.
pub fn map_parallel(blocks: &[AmplitudeBlock], signs: &[bool], scale: f64) -> Result<FourDSymbolFrame> {
    let n = check_blocks(blocks, signs)?;
    let symbols = (0..n)
        .map(|t| std::array::from_fn(|j| signed(blocks[j].amplitudes[t], signs[4 * t + j])))
        .collect();
    Ok(FourDSymbolFrame { symbols, scale })
}

pub fn map_blocks(
    kind: MapKind,
    blocks: &[AmplitudeBlock],
    signs: &[bool],
    scale: f64,
) -> Result<FourDSymbolFrame> {
    match kind {
        MapKind::Serial => map_serial(blocks, signs, scale),
        MapKind::Parallel => map_parallel(blocks, signs, scale),
    }
}

/// Inverse of [`map_blocks`] for one group of four DM blocks.
pub fn unmap(kind: MapKind, frame: &FourDSymbolFrame) -> Result<(Vec<AmplitudeBlock>, Vec<bool>)> {
    let len = frame.len();
    let signs = frame
        .symbols
        .iter()
        .flat_map(|s| s.iter().map(|&c| c < 0))
        .collect();
    let blocks = match kind {
        MapKind::Serial => {
            if len % 4 != 0 {
                return Err(Error::Shape(format!("{len} symbols do not split into 4 DM blocks")));
            }
            frame
                .symbols
                .chunks_exact(len / 4)
                .map(|seg| {
                    AmplitudeBlock::new(seg.iter().flat_map(|s| s.map(|c| c.unsigned_abs())).collect())
                })
                .collect()
        }
        MapKind::Parallel => (0..4)
            .map(|j| AmplitudeBlock::new(frame.symbols.iter().map(|s| s[j].unsigned_abs()).collect()))
            .collect(),
    };
    Ok((blocks, signs))
}

/// Amplitude priors and signs combined into per-dimension ASK point priors.
fn ask_priors(c: &QamConstellation, amplitude_probs: &[f64]) -> Vec<f64> {
    let a = c.alphabet.len();
    (0..2 * a)
        .map(|p| {
            let idx = if p < a { a - 1 - p } else { p - a };
            0.5 * amplitude_probs[idx]
        })
        .collect()
}

/// Per-bit LLRs `log P(b=0|r)/P(b=1|r)` for each received complex sample,
/// under a circular Gaussian law with total variance `noise_var` and the
/// given amplitude priors (uniform signs). Output order per sample: the
/// in-phase bits (MSB first) then the quadrature bits; values are clipped to
/// `±LLR_CLIP`.
pub fn demap_bit_metrics(
    received: &[Complex64],
    noise_var: f64,
    constellation: &QamConstellation,
    amplitude_probs: &[f64],
) -> Result<Vec<f64>> {
    if !(noise_var > 0.0) {
        return Err(Error::Config("noise variance must be positive".into()));
    }
    if amplitude_probs.len() != constellation.alphabet.len() {
        return Err(Error::LengthMismatch("amplitude priors".into()));
    }
    let points = constellation.ask_points();
    let log_prior: Vec<f64> = ask_priors(constellation, amplitude_probs)
        .iter()
        .map(|&p| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY })
        .collect();
    let labels: Vec<u32> = (0..points.len()).map(|p| constellation.label(p)).collect();
    let bits = constellation.bits_per_dim as usize;
    let inv = 1.0 / noise_var;
    let mut out = Vec::with_capacity(received.len() * 2 * bits);
    let mut metric = vec![0.0; points.len()];
    for r in received {
        for v in [r.re, r.im] {
            for (m, (&s, &lp)) in metric.iter_mut().zip(points.iter().zip(&log_prior)) {
                *m = lp - (v - s) * (v - s) * inv;
            }
            for b in (0..bits).rev() {
                let mut zero = f64::NEG_INFINITY;
                let mut one = f64::NEG_INFINITY;
                for (m, &l) in metric.iter().zip(&labels) {
                    if (l >> b) & 1 == 0 {
                        zero = log_add(zero, *m);
                    } else {
                        one = log_add(one, *m);
                    }
                }
                let llr = zero - one;
                out.push(if llr.is_nan() { 0.0 } else { llr.clamp(-LLR_CLIP, LLR_CLIP) });
            }
        }
    }
    Ok(out)
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Transmitted bits in the demapper's order for each complex symbol given
/// as signed integer levels.
pub fn symbol_bits(constellation: &QamConstellation, levels: &[(i32, i32)]) -> Result<Vec<u8>> {
    let bits = constellation.bits_per_dim;
    let mut out = Vec::with_capacity(levels.len() * 2 * bits as usize);
    for &(i, q) in levels {
        for v in [i, q] {
            let p = constellation
                .ask_position(v)
                .ok_or_else(|| Error::Decode(format!("{v} is not a constellation level")))?;
            let l = constellation.label(p);
            for b in (0..bits).rev() {
                out.push(((l >> b) & 1) as u8);
            }
        }
    }
    Ok(out)
}

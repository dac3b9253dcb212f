//! Bit-metric AIR with batch-means confidence intervals, effective SNR and
//! correlation statistics.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::shaping::entropy;
use crate::{Error, Result};

/// Monte-Carlo estimate with a 95 % confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirEstimate {
    pub value: f64,
    pub half_width: f64,
}

/// Number of batches used for confidence half-widths.
pub const BATCHES: usize = 32;
/// Two-sided 97.5 % Student-t quantile with `BATCHES − 1` degrees of freedom.
const T_QUANTILE: f64 = 2.0395;

/// `log2(1 + e^x)` without overflow.
fn log2_1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        (x + (-x).exp().ln_1p()) / LN_2
    } else {
        x.exp().ln_1p() / LN_2
    }
}

/// Entropy of a PAS QAM symbol per polarization: two amplitudes and two
/// uniform signs.
pub fn qam_entropy(amplitude_probs: &[f64]) -> f64 {
    2.0 * (entropy(amplitude_probs) + 1.0)
}

/// Per-symbol contributions `H − Σ_i log2(1 + e^{−(1−2b_i)·LLR_i})`, with
/// `bits_per_symbol` consecutive LLRs per symbol.
pub fn air_contributions(
    llrs: &[f64],
    bits: &[u8],
    bits_per_symbol: usize,
    prior_entropy: f64,
) -> Result<Vec<f64>> {
    if llrs.len() != bits.len() {
        return Err(Error::LengthMismatch(format!("{} LLRs vs {} bits", llrs.len(), bits.len())));
    }
    if bits_per_symbol == 0 || llrs.len() % bits_per_symbol != 0 {
        return Err(Error::Shape("LLR count is not a multiple of the bits per symbol".into()));
    }
    Ok(llrs
        .chunks(bits_per_symbol)
        .zip(bits.chunks(bits_per_symbol))
        .map(|(l, b)| {
            let loss: f64 = l
                .iter()
                .zip(b)
                .map(|(&l, &b)| {
                    let s = if b == 0 { 1.0 } else { -1.0 };
                    log2_1p_exp(-s * l)
                })
                .sum();
            prior_entropy - loss
        })
        .collect())
}

/// Mean and batch-means half-width over [`BATCHES`] contiguous batches.
pub fn batch_means(values: &[f64]) -> Result<AirEstimate> {
    let n = values.len();
    if n < BATCHES {
        return Err(Error::SeriesTooShort { needed: BATCHES, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let size = n / BATCHES;
    let means: Vec<f64> = (0..BATCHES)
        .map(|b| {
            let hi = if b + 1 == BATCHES { n } else { (b + 1) * size };
            let s = &values[b * size..hi];
            s.iter().sum::<f64>() / s.len() as f64
        })
        .collect();
    let bm = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - bm) * (m - bm)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(AirEstimate {
        value: mean,
        half_width: T_QUANTILE * (var / BATCHES as f64).sqrt(),
    })
}

/// AIR under bit-metric decoding, in bits per complex symbol.
pub fn air_bmd(llrs: &[f64], bits: &[u8], bits_per_symbol: usize, prior_entropy: f64) -> Result<AirEstimate> {
    batch_means(&air_contributions(llrs, bits, bits_per_symbol, prior_entropy)?)
}

/// Real least-squares gain `h` and residual variance `E|r/h − t|²`, used as
/// the AWGN-matched demapper noise.
pub fn gain_and_noise(received: &[Complex64], transmitted: &[Complex64]) -> Result<(f64, f64)> {
    if received.len() != transmitted.len() || received.is_empty() {
        return Err(Error::LengthMismatch("gain fit needs aligned non-empty sequences".into()));
    }
    let num: f64 = received.iter().zip(transmitted).map(|(r, t)| (r * t.conj()).re).sum();
    let den: f64 = transmitted.iter().map(|t| t.norm_sqr()).sum();
    if !(den > 0.0) || num == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let h = num / den;
    let var = received
        .iter()
        .zip(transmitted)
        .map(|(r, t)| (r / h - t).norm_sqr())
        .sum::<f64>()
        / received.len() as f64;
    Ok((h, var))
}

pub const SNR_CAP_DB: f64 = 100.0;

/// `E|t|² / E|r − h·t|²` in dB with `h` the complex least-squares fit,
/// capped at [`SNR_CAP_DB`].
pub fn effective_snr_db(received: &[Complex64], transmitted: &[Complex64]) -> Result<f64> {
    if received.len() != transmitted.len() || received.is_empty() {
        return Err(Error::LengthMismatch("SNR needs aligned non-empty sequences".into()));
    }
    let num: Complex64 = received.iter().zip(transmitted).map(|(r, t)| r * t.conj()).sum();
    let den: f64 = transmitted.iter().map(|t| t.norm_sqr()).sum();
    if !(den > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let h = num / den;
    let err: f64 = received.iter().zip(transmitted).map(|(r, t)| (r - h * t).norm_sqr()).sum();
    if err <= 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (den / err).log10()).min(SNR_CAP_DB))
}

/// Pearson product-moment correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch("correlation series differ in length".into()));
    }
    if a.len() < 3 {
        return Err(Error::SeriesTooShort { needed: 3, got: a.len() });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

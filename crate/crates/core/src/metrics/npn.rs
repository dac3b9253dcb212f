//! Intensity-driven nonlinear phase model, the CPR-aware NPN metric and the
//! (exponentially weighted) energy dispersion index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernel::{KernelCoefficients, KernelLink};
use crate::{Error, Result};

/// `φ̄_iℓ = (3/2 − δ_iℓ/2)·γ·N_s·P_ℓ·L_eff` for a link of identical spans.
///
/// `power_w` is the power that multiplies a unit-mean intensity sequence;
/// see [`NpnSpec`] for the normalization used by the harness.
pub fn nominal_phase_rotation(i: usize, l: usize, link: &KernelLink, gamma_per_w_km: f64, power_w: f64) -> f64 {
    let factor = if i == l { 1.0 } else { 1.5 };
    factor * gamma_per_w_km * link.spans as f64 * power_w * link.effective_length_km()
}

/// Parameters of the NPN metric for channel `channel` of an `M`-channel
/// grid.
///
/// Symbol sequences are normalized to unit average power per polarization
/// and the per-polarization launch power is folded into `φ̄`, so
/// `phi_bar[ℓ]` is the rotation induced by channel ℓ per unit of
/// `|x_ℓ|² + |y_ℓ|²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NpnSpec {
    pub channel: usize,
    pub channels: usize,
    pub n_cpr: usize,
    /// Linear `E_s/N_0`.
    pub es_n0: f64,
    #[serde(default = "default_efficiency")]
    pub e_cpr: f64,
    pub phi_bar: Vec<f64>,
}

pub fn default_efficiency() -> f64 {
    0.008
}

impl NpnSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.e_cpr > 0.0 && self.e_cpr <= 1.0) {
            return Err(Error::Config(format!("e_CPR = {} outside (0, 1]", self.e_cpr)));
        }
        if !(self.es_n0 > 0.0) {
            return Err(Error::Config("Es/N0 must be positive".into()));
        }
        if self.channel >= self.channels || self.phi_bar.len() != self.channels {
            return Err(Error::Config("NPN channel index or φ̄ length inconsistent".into()));
        }
        Ok(())
    }

    /// CPR noise floor `σ_ξ² = (2Es/N0)^{−1}/(2N_CPR+1)/e_CPR`.
    pub fn cpr_noise(&self) -> f64 {
        1.0 / (2.0 * self.es_n0) / (2 * self.n_cpr + 1) as f64 / self.e_cpr
    }
}

/// Model phase `θ[k]` and its windowed CPR estimate `θ̂[k]`, with the
/// number of edge samples to leave out of variances.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub theta: Vec<f64>,
    pub estimate: Vec<f64>,
    pub edge: usize,
}

impl PhaseSeries {
    pub fn new(theta: Vec<f64>, edge: usize) -> Self {
        let estimate = theta.clone();
        PhaseSeries { theta, estimate, edge }
    }

    /// Recomputes `θ̂` as the centred moving average of half-width `n_cpr`,
    /// truncated to the available samples at the ends.
    pub fn with_cpr(mut self, n_cpr: usize) -> Self {
        self.estimate = moving_average(&self.theta, n_cpr);
        self
    }

    pub fn interior(&self) -> std::ops::Range<usize> {
        let n = self.theta.len();
        let e = self.edge.min(n / 2);
        e..n - e
    }
}

pub(crate) fn moving_average(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, v) in x.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half);
            let hi = (k + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Per-symbol intensity `|x|² + |y|²`.
pub fn intensity(x: &[Complex64], y: &[Complex64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch("polarization lengths differ".into()));
    }
    Ok(x.iter().zip(y).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect())
}

/// `θ_i[k] = Σ_ℓ φ̄_iℓ Σ_{|m|≤N_c} C_{ℓ−i}[m]·I_ℓ[k+m]`, with `I_ℓ` the
/// per-symbol intensity of channel ℓ. Terms that fall outside the frame are
/// dropped, and the first and last `N_c` samples are marked as edge.
pub fn npn_phase_series(
    intensities: &[Vec<f64>],
    coefficients: &KernelCoefficients,
    channel: usize,
    phi_bar: &[f64],
) -> Result<PhaseSeries> {
    let m = intensities.len();
    if m == 0 || channel >= m || phi_bar.len() != m {
        return Err(Error::Config("phase series needs one φ̄ per channel".into()));
    }
    let len = intensities[0].len();
    if intensities.iter().any(|s| s.len() != len) {
        return Err(Error::LengthMismatch("channel sequences differ in length".into()));
    }
    let nc = coefficients.n_c as i64;
    let mut theta = vec![0.0; len];
    for (l, seq) in intensities.iter().enumerate() {
        let n = l as i64 - channel as i64;
        let row = coefficients
            .row(n)
            .ok_or_else(|| Error::Config(format!("no kernel row for channel offset {n}")))?;
        let pb = phi_bar[l];
        for (k, out) in theta.iter_mut().enumerate() {
            let lo = (-nc).max(-(k as i64));
            let hi = nc.min(len as i64 - 1 - k as i64);
            let mut acc = 0.0;
            for mm in lo..=hi {
                acc += row[(mm + nc) as usize] * seq[(k as i64 + mm) as usize];
            }
            *out += pb * acc;
        }
    }
    Ok(PhaseSeries::new(theta, coefficients.n_c))
}

fn variance(x: impl Iterator<Item = f64> + Clone) -> Option<f64> {
    let n = x.clone().count();
    if n < 2 {
        return None;
    }
    let mean = x.clone().sum::<f64>() / n as f64;
    Some(x.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64)
}

/// `σ_θ² = Var(θ − θ̂) + σ_ξ²` over the interior samples, with `θ̂` the
/// moving average of half-width `N_CPR` (truncated at the frame ends).
pub fn npn_metric(series: &PhaseSeries, spec: &NpnSpec) -> Result<f64> {
    spec.validate()?;
    let est = moving_average(&series.theta, spec.n_cpr);
    let r = series.interior();
    let needed = 2 * series.edge + 2;
    let v = variance(r.clone().map(|k| series.theta[k] - est[k])).ok_or(Error::SeriesTooShort {
        needed,
        got: series.theta.len(),
    })?;
    Ok(v + spec.cpr_noise())
}

/// Variance of the model phase itself over the interior.
pub fn phase_variance(series: &PhaseSeries) -> Result<f64> {
    variance(series.interior().map(|k| series.theta[k])).ok_or(Error::SeriesTooShort {
        needed: 2 * series.edge + 2,
        got: series.theta.len(),
    })
}

/// Truncation depth `⌈log(1e−6)/log λ⌉` of the EEDI weights.
pub fn eedi_depth(lambda: f64) -> usize {
    if lambda <= 0.0 {
        0
    } else {
        (1e-6f64.ln() / lambda.ln()).ceil() as usize
    }
}

fn dispersion_index(g: &[f64]) -> Result<f64> {
    let n = g.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { needed: 2, got: n });
    }
    let mean = g.iter().sum::<f64>() / n as f64;
    if mean == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let var = g.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    Ok(var / mean)
}

/// `Var(G)/E(G)` with `G[k] = Σ_{|m|≤M} λ^{|m|}·|x[k+m]|²` over the samples
/// where the truncated sum is complete. `λ = 1` is rejected; use [`edi`].
pub fn eedi(symbols: &[Complex64], lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Config(format!("forgetting factor {lambda} outside [0, 1)")));
    }
    let e: Vec<f64> = symbols.iter().map(|s| s.norm_sqr()).collect();
    let depth = eedi_depth(lambda);
    let n = e.len();
    if n <= 2 * depth + 1 {
        return Err(Error::SeriesTooShort {
            needed: 2 * depth + 3,
            got: n,
        });
    }
    let w: Vec<f64> = (0..=depth).map(|m| lambda.powi(m as i32)).collect();
    let g: Vec<f64> = (depth..n - depth)
        .map(|k| {
            let mut acc = e[k];
            for (m, wm) in w.iter().enumerate().skip(1) {
                acc += wm * (e[k - m] + e[k + m]);
            }
            acc
        })
        .collect();
    dispersion_index(&g)
}

/// EDI: `Var(G)/E(G)` with `G[k]` the energy of `W` consecutive symbols.
pub fn edi(symbols: &[Complex64], window: usize) -> Result<f64> {
    if window == 0 {
        return Err(Error::Config("EDI window must be at least 1".into()));
    }
    let e: Vec<f64> = symbols.iter().map(|s| s.norm_sqr()).collect();
    if e.len() < window + 1 {
        return Err(Error::SeriesTooShort {
            needed: window + 1,
            got: e.len(),
        });
    }
    let mut acc: f64 = e[..window].iter().sum();
    let mut g = vec![acc];
    for k in window..e.len() {
        acc += e[k] - e[k - window];
        g.push(acc);
    }
    dispersion_index(&g)
}

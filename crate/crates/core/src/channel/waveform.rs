use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rustfft::{Fft, FftPlanner};

use super::{WaveformGrid, WdmGrid};
use crate::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward/inverse plans for one transform length.
#[derive(Clone)]
pub struct FftCache {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    len: usize,
}

impl std::fmt::Debug for FftCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftCache").field("len", &self.len).finish()
    }
}

impl FftCache {
    pub fn new(len: usize) -> Self {
        PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            FftCache {
                fwd: p.plan_fft_forward(len),
                inv: p.plan_fft_inverse(len),
                len,
            }
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Unnormalized forward transform, `X[q] = Σ x[n] e^{−j2πqn/N}`.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    /// Normalized inverse transform.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
        let s = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= s;
        }
    }
}

/// Signed index of DFT bin `q` of an `n`-point transform.
pub(crate) fn signed_bin(q: usize, n: usize) -> i64 {
    if q < n.div_ceil(2) {
        q as i64
    } else {
        q as i64 - n as i64
    }
}

/// Raised-cosine spectrum at normalized frequency `u = f·T`.
fn raised_cosine(u: f64, rolloff: f64) -> f64 {
    let a = u.abs();
    let lo = 0.5 * (1.0 - rolloff);
    let hi = 0.5 * (1.0 + rolloff);
    if a <= lo {
        1.0
    } else if a > hi {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI / rolloff * (a - lo)).cos())
    }
}

/// Root-raised-cosine amplitude response `√H_rc(f·T)`.
pub fn rrc_response(u: f64, rolloff: f64) -> f64 {
    raised_cosine(u, rolloff).sqrt()
}

fn check_oversampling(sps: usize, rolloff: f64) -> Result<()> {
    if (sps as f64) < 1.0 + rolloff {
        return Err(Error::Config(format!(
            "{sps} samples per symbol cannot hold an RRC pulse with rolloff {rolloff}"
        )));
    }
    Ok(())
}

/// Circular RRC pulse shaping of one symbol sequence at `sps` samples per
/// symbol. A unit-power symbol sequence gives a unit-power waveform;
/// [`matched_filter`] followed by [`sample_symbols`] returns the symbols.
pub fn rrc_shape_pol(symbols: &[Complex64], rolloff: f64, sps: usize) -> Result<Vec<Complex64>> {
    check_oversampling(sps, rolloff)?;
    let k = symbols.len();
    let n = k * sps;
    let mut s = symbols.to_vec();
    FftCache::new(k).forward(&mut s);
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    for (q, v) in w.iter_mut().enumerate() {
        let b = signed_bin(q, n);
        let g = rrc_response(b as f64 / k as f64, rolloff);
        if g > 0.0 {
            *v = s[b.rem_euclid(k as i64) as usize] * (g * sps as f64);
        }
    }
    FftCache::new(n).inverse(&mut w);
    Ok(w)
}

/// Shapes unit-power dual-polarization symbols into a baseband channel
/// waveform at the grid's simulation rate with total power `power_w`.
pub fn rrc_shape(
    x: &[Complex64],
    y: &[Complex64],
    grid: &WdmGrid,
    power_w: f64,
) -> Result<WaveformGrid> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch("polarization symbol counts differ".into()));
    }
    let amp = (power_w / 2.0).sqrt();
    let sps = grid.samples_per_symbol;
    let scale = |v: Vec<Complex64>| v.into_iter().map(|s| s * amp).collect::<Vec<_>>();
    WaveformGrid::new(
        scale(rrc_shape_pol(x, grid.rolloff, sps)?),
        scale(rrc_shape_pol(y, grid.rolloff, sps)?),
        grid.sample_rate_ghz() * 1e-3,
        power_w,
    )
}

/// Matched RRC filter on samples taken at `sps` samples per symbol.
pub fn matched_filter(samples: &[Complex64], rolloff: f64, sps: usize) -> Result<Vec<Complex64>> {
    check_oversampling(sps, rolloff)?;
    let n = samples.len();
    if n % sps != 0 {
        return Err(Error::Shape(format!("{n} samples are not whole symbols at {sps} sps")));
    }
    let k = n / sps;
    let fft = FftCache::new(n);
    let mut w = samples.to_vec();
    fft.forward(&mut w);
    for (q, v) in w.iter_mut().enumerate() {
        *v *= rrc_response(signed_bin(q, n) as f64 / k as f64, rolloff);
    }
    fft.inverse(&mut w);
    Ok(w)
}

/// Every `sps`-th sample, starting at the first.
pub fn sample_symbols(samples: &[Complex64], sps: usize) -> Vec<Complex64> {
    samples.iter().step_by(sps).copied().collect()
}

/// Sum of channel waveforms, each shifted to its grid center by a whole
/// number of bins.
pub fn wdm_mux(channels: &[WaveformGrid], grid: &WdmGrid) -> Result<WaveformGrid> {
    grid.validate()?;
    if channels.len() != grid.channels {
        return Err(Error::LengthMismatch(format!(
            "{} waveforms for {} channels",
            channels.len(),
            grid.channels
        )));
    }
    let n = channels[0].len();
    if channels.iter().any(|c| c.len() != n) {
        return Err(Error::LengthMismatch("channel waveforms differ in length".into()));
    }
    if n % grid.samples_per_symbol != 0 {
        return Err(Error::Shape("waveform is not whole symbols".into()));
    }
    let bins = grid.center_bins(n / grid.samples_per_symbol);
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    let mut y = x.clone();
    for (c, ch) in channels.iter().enumerate() {
        let b = bins[c].rem_euclid(n as i64) as usize;
        for t in 0..n {
            let phase = 2.0 * std::f64::consts::PI * ((b * t) % n) as f64 / n as f64;
            let rot = Complex64::from_polar(1.0, phase);
            x[t] += ch.x[t] * rot;
            y[t] += ch.y[t] * rot;
        }
    }
    WaveformGrid::new(
        x,
        y,
        channels[0].sample_rate_thz,
        channels[0].reference_power_w,
    )
}

/// Selects channel `index`, shifts it to baseband, keeps the bins inside its
/// RRC band and resamples to the grid's receiver rate.
pub fn wdm_demux(w: &WaveformGrid, grid: &WdmGrid, index: usize) -> Result<WaveformGrid> {
    grid.validate()?;
    if index >= grid.channels {
        return Err(Error::Config(format!("no channel {index}")));
    }
    let n = w.len();
    let sps = grid.samples_per_symbol;
    if n % sps != 0 {
        return Err(Error::Shape("waveform is not whole symbols".into()));
    }
    let k = n / sps;
    let ns = k * grid.rx_samples_per_symbol;
    let center = grid.center_bins(k)[index];
    let half_band = (0.5 * (1.0 + grid.rolloff) * k as f64).floor() as i64;
    let half_band = half_band.min(ns as i64 / 2 - 1);
    let big = FftCache::new(n);
    let small = FftCache::new(ns);
    let ratio = ns as f64 / n as f64;
    let select = |pol: &[Complex64]| {
        let mut spec = pol.to_vec();
        big.forward(&mut spec);
        let mut out = vec![Complex64::new(0.0, 0.0); ns];
        for s in -half_band..=half_band {
            let src = (center + s).rem_euclid(n as i64) as usize;
            out[s.rem_euclid(ns as i64) as usize] = spec[src] * ratio;
        }
        small.inverse(&mut out);
        out
    };
    WaveformGrid::new(
        select(&w.x),
        select(&w.y),
        grid.baud_gbd * 1e-3 * grid.rx_samples_per_symbol as f64,
        w.reference_power_w,
    )
}

/// Multiplies both polarizations by `e^{jφ[k]}`, with `φ` a Wiener walk of
/// increment variance `2π·Δν·Δt` starting at `φ[0] = 0`. Returns `φ`.
pub fn apply_laser_phase_noise<R: Rng + ?Sized>(
    x: &mut [Complex64],
    y: &mut [Complex64],
    linewidth_hz: f64,
    sample_period_ps: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(linewidth_hz >= 0.0) {
        return Err(Error::Config("linewidth must be non-negative".into()));
    }
    let n = x.len().max(y.len());
    if linewidth_hz == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let var = 2.0 * std::f64::consts::PI * linewidth_hz * sample_period_ps * 1e-12;
    let step = Normal::new(0.0, var.sqrt()).map_err(|e| Error::Config(e.to_string()))?;
    let mut phi = Vec::with_capacity(n);
    let mut p = 0.0;
    for t in 0..n {
        if t > 0 {
            p += step.sample(rng);
        }
        phi.push(p);
        let rot = Complex64::from_polar(1.0, p);
        if let Some(v) = x.get_mut(t) {
            *v *= rot;
        }
        if let Some(v) = y.get_mut(t) {
            *v *= rot;
        }
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qpsk(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let re = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let im = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Complex64::new(re, im) / 2f64.sqrt()
            })
            .collect()
    }

    fn max_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn rrc_back_to_back_is_isi_free() {
        let s = qpsk(512, 1);
        for sps in [2, 3, 8] {
            let w = rrc_shape_pol(&s, 0.1, sps).unwrap();
            let p: f64 = w.iter().map(|v| v.norm_sqr()).sum::<f64>() / w.len() as f64;
            assert!((p - 1.0).abs() < 1e-9);
            let r = sample_symbols(&matched_filter(&w, 0.1, sps).unwrap(), sps);
            assert!(max_err(&r, &s) < 1e-9);
        }
        assert!(matches!(rrc_shape_pol(&s, 0.5, 1), Err(Error::Config(_))));
    }

    #[test]
    fn single_impulse_peaks_at_symbol_instant() {
        let mut s = vec![Complex64::new(0.0, 0.0); 64];
        s[10] = Complex64::new(1.0, 0.0);
        let w = rrc_shape_pol(&s, 0.1, 4).unwrap();
        let peak = w
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap()
            .0;
        assert_eq!(peak, 40);
        // p(0) = ∫ √H_rc df · T, slightly above 1 for small rolloff.
        let r = 0.1f64;
        let expect = 1.0 - r + 4.0 * r / std::f64::consts::PI;
        assert!((w[40].re - expect).abs() < 1e-2);
    }

    #[test]
    fn mux_demux_round_trip() {
        let grid = WdmGrid {
            channels: 2,
            spacing_ghz: 18.0,
            baud_gbd: 10.0,
            rolloff: 0.1,
            samples_per_symbol: 6,
            rx_samples_per_symbol: 2,
        };
        let n = 1024;
        let syms: Vec<_> = (0..2).map(|c| (qpsk(n, 10 + c), qpsk(n, 20 + c))).collect();
        let chans: Vec<_> = syms
            .iter()
            .map(|(x, y)| rrc_shape(x, y, &grid, 1e-3).unwrap())
            .collect();
        let total = wdm_mux(&chans, &grid).unwrap();
        let e: f64 = chans.iter().map(|c| c.energy()).sum();
        assert!((total.energy() - e).abs() / e < 1e-6);
        for (c, (x, _)) in syms.iter().enumerate() {
            let d = wdm_demux(&total, &grid, c).unwrap();
            let r = sample_symbols(&matched_filter(&d.x, 0.1, 2).unwrap(), 2);
            let a = (0.5e-3f64).sqrt();
            let rs: Vec<_> = r.iter().map(|v| v / a).collect();
            assert!(max_err(&rs, x) < 1e-4);
        }
        let single = WdmGrid {
            channels: 1,
            ..grid
        };
        let one = wdm_mux(&chans[..1], &single).unwrap();
        assert!(max_err(&one.x, &chans[0].x) < 1e-15);
    }

    #[test]
    fn laser_phase_noise_statistics() {
        let n = 1_000_000;
        let mut x = vec![Complex64::new(1.0, 0.0); n];
        let mut y = x.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let phi = apply_laser_phase_noise(&mut x, &mut y, 100e3, 24.0, &mut rng).unwrap();
        assert_eq!(phi[0], 0.0);
        let var = 2.0 * std::f64::consts::PI * 100e3 * 24e-12;
        let inc: Vec<f64> = phi.windows(2).map(|w| w[1] - w[0]).collect();
        let est = inc.iter().map(|d| d * d).sum::<f64>() / inc.len() as f64;
        assert!((est / var - 1.0).abs() < 0.02);
        assert!((x[n - 1].arg() - phi[n - 1]).sin().abs() < 1e-9);
        let mut z = vec![Complex64::new(0.3, 0.1); 10];
        let z0 = z.clone();
        apply_laser_phase_noise(&mut z, &mut [], 0.0, 1.0, &mut rng).unwrap();
        assert_eq!(z, z0);
    }
}

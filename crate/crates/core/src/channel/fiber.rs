use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use super::waveform::{signed_bin, FftCache};
use super::{db_to_lin, FiberSpan, LinkSpec, WaveformGrid, MANAKOV};
use crate::{Error, Result};

/// Per-run diagnostics of a split-step propagation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropagationReport {
    pub steps: usize,
    /// Largest nonlinear phase applied in one step, rad.
    pub max_step_phase_rad: f64,
    pub warnings: Vec<String>,
}

/// Angular frequencies (rad/ps) of the DFT bins, offset by `center_thz`.
fn omegas(n: usize, sample_rate_thz: f64, center_thz: f64) -> Vec<f64> {
    (0..n)
        .map(|q| {
            let f = signed_bin(q, n) as f64 * sample_rate_thz / n as f64 + center_thz;
            2.0 * std::f64::consts::PI * f
        })
        .collect()
}

struct Stepper<'a> {
    fft: FftCache,
    omega: &'a [f64],
}

impl Stepper<'_> {
    fn linear(&self, x: &mut [Complex64], y: &mut [Complex64], beta2: f64, alpha: f64, h: f64) {
        let h_of: Vec<Complex64> = self
            .omega
            .iter()
            .map(|w| Complex64::from_polar((-0.5 * alpha * h).exp(), -0.5 * beta2 * w * w * h))
            .collect();
        for pol in [x, y] {
            self.fft.forward(pol);
            for (v, hh) in pol.iter_mut().zip(&h_of) {
                *v *= hh;
            }
            self.fft.inverse(pol);
        }
    }
}

fn nonlinear(x: &mut [Complex64], y: &mut [Complex64], coeff: f64) -> f64 {
    let mut max_phase = 0.0f64;
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let phase = -coeff * (a.norm_sqr() + b.norm_sqr());
        max_phase = max_phase.max(phase.abs());
        let rot = Complex64::from_polar(1.0, phase);
        *a *= rot;
        *b *= rot;
    }
    max_phase
}

/// Length over which a step of size `h` centred on the evaluation point
/// accumulates nonlinear phase: `∫_{−h/2}^{h/2} e^{−αs} ds`.
fn step_effective_length(alpha: f64, h: f64) -> f64 {
    if (alpha * h).abs() < 1e-12 {
        h
    } else {
        2.0 / alpha * (0.5 * alpha * h).sinh()
    }
}

/// Symmetric split-step propagation through one fiber element with the
/// Manakov nonlinearity. `center_thz` shifts the dispersion operator for a
/// waveform whose baseband sits at that optical offset. Negated `beta2`,
/// `alpha`, `gamma` back-propagate. Returns (steps, max step phase).
#[allow(clippy::too_many_arguments)]
fn propagate_fiber(
    x: &mut [Complex64],
    y: &mut [Complex64],
    sample_rate_thz: f64,
    center_thz: f64,
    length: f64,
    step: f64,
    beta2: f64,
    alpha: f64,
    gamma: f64,
) -> (usize, f64) {
    let n = x.len();
    let omega = omegas(n, sample_rate_thz, center_thz);
    let fft = FftCache::new(n);
    let st = Stepper { fft, omega: &omega };
    let steps = ((length / step) - 1e-9).ceil().max(1.0) as usize;
    let h = length / steps as f64;
    let coeff = MANAKOV * gamma * step_effective_length(alpha, h);
    let mut max_phase = 0.0f64;
    if gamma == 0.0 {
        st.linear(x, y, beta2, alpha, length);
        return (steps, 0.0);
    }
    st.linear(x, y, beta2, alpha, 0.5 * h);
    for i in 0..steps {
        max_phase = max_phase.max(nonlinear(x, y, coeff));
        let hh = if i + 1 < steps { h } else { 0.5 * h };
        st.linear(x, y, beta2, alpha, hh);
    }
    (steps, max_phase)
}

/// Propagates through one span (no amplifier).
pub fn propagate_span(w: &mut WaveformGrid, span: &FiberSpan) -> PropagationReport {
    let (steps, phase) = propagate_fiber(
        &mut w.x,
        &mut w.y,
        w.sample_rate_thz,
        0.0,
        span.length_km,
        span.step_km,
        span.beta2_ps2_per_km,
        span.alpha_per_km(),
        span.gamma_per_w_km,
    );
    PropagationReport {
        steps,
        max_step_phase_rad: phase,
        warnings: Vec::new(),
    }
}

/// Amplifies by `gain_db` and adds circular Gaussian ASE on each
/// polarization with per-sample variance `(G−1)·n_sp·hν·f_s`, where
/// `n_sp = (F·G − 1)/(2(G − 1))`.
pub fn edfa<R: RngCore + ?Sized>(
    w: &mut WaveformGrid,
    gain_db: f64,
    noise_figure_db: f64,
    photon_energy_j: f64,
    rng: Option<&mut R>,
) -> Result<f64> {
    if gain_db < 0.0 {
        return Err(Error::Config(format!("EDFA gain {gain_db} dB is negative")));
    }
    let g = db_to_lin(gain_db);
    let f = db_to_lin(noise_figure_db);
    let amp = g.sqrt();
    for v in w.x.iter_mut().chain(w.y.iter_mut()) {
        *v *= amp;
    }
    let var = ((f * g - 1.0) / 2.0).max(0.0) * photon_energy_j * w.sample_rate_thz * 1e12;
    if let Some(rng) = rng {
        if var > 0.0 {
            let s = (0.5 * var).sqrt();
            for v in w.x.iter_mut().chain(w.y.iter_mut()) {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                *v += Complex64::new(re, im) * s;
            }
        }
    }
    Ok(var)
}

/// Full link: every fiber element followed by its EDFA. ASE is drawn from
/// `rng` when the link enables it.
pub fn ssfm_propagate<R: RngCore + ?Sized>(
    mut w: WaveformGrid,
    link: &LinkSpec,
    mut rng: Option<&mut R>,
) -> Result<(WaveformGrid, PropagationReport)> {
    link.validate()?;
    let mut report = PropagationReport::default();
    let start = db_to_lin(link.cell[0].launch_offset_db).sqrt();
    if start != 1.0 {
        for v in w.x.iter_mut().chain(w.y.iter_mut()) {
            *v *= start;
        }
    }
    let hv = link.photon_energy_j();
    for (j, span) in link.elements().enumerate() {
        let r = propagate_span(&mut w, span);
        report.steps += r.steps;
        report.max_step_phase_rad = report.max_step_phase_rad.max(r.max_step_phase_rad);
        let noise = match (&mut rng, link.ase) {
            (Some(r), true) => Some(&mut **r),
            _ => None,
        };
        edfa(&mut w, link.gain_db(j), link.noise_figure_db, hv, noise)?;
    }
    if report.max_step_phase_rad > link.max_step_phase_rad {
        report.warnings.push(format!(
            "step too coarse: nonlinear phase {:.3} rad per step exceeds {:.3}",
            report.max_step_phase_rad, link.max_step_phase_rad
        ));
    }
    Ok((w, report))
}

/// Inverts the accumulated dispersion of `link` for a channel whose baseband
/// sits at optical offset `center_thz`.
pub fn edc(w: &WaveformGrid, link: &LinkSpec, center_thz: f64) -> WaveformGrid {
    let n = w.len();
    let omega = omegas(n, w.sample_rate_thz, center_thz);
    let fft = FftCache::new(n);
    let d = link.total_dispersion_ps2();
    let h: Vec<Complex64> = omega
        .iter()
        .map(|om| Complex64::from_polar(1.0, 0.5 * d * om * om))
        .collect();
    let apply = |pol: &[Complex64]| {
        let mut v = pol.to_vec();
        fft.forward(&mut v);
        for (a, b) in v.iter_mut().zip(&h) {
            *a *= b;
        }
        fft.inverse(&mut v);
        v
    };
    WaveformGrid {
        x: apply(&w.x),
        y: apply(&w.y),
        ..w.clone()
    }
}

/// Ideal single-channel digital back-propagation: undoes each EDFA gain and
/// propagates each element in reverse with negated parameters, using
/// `steps_per_span` steps per element (0 keeps the forward step size).
pub fn dbp_single_channel(
    w: &WaveformGrid,
    link: &LinkSpec,
    center_thz: f64,
    steps_per_span: usize,
) -> Result<WaveformGrid> {
    link.validate()?;
    let mut out = w.clone();
    let elements: Vec<&FiberSpan> = link.elements().collect();
    for (j, span) in elements.iter().enumerate().rev() {
        let g = db_to_lin(link.gain_db(j)).sqrt();
        for v in out.x.iter_mut().chain(out.y.iter_mut()) {
            *v /= g;
        }
        let step = if steps_per_span == 0 {
            span.step_km
        } else {
            span.length_km / steps_per_span as f64
        };
        propagate_fiber(
            &mut out.x,
            &mut out.y,
            out.sample_rate_thz,
            center_thz,
            span.length_km,
            step,
            -span.beta2_ps2_per_km,
            -span.alpha_per_km(),
            -span.gamma_per_w_km,
        );
    }
    let start = db_to_lin(link.cell[0].launch_offset_db).sqrt();
    if start != 1.0 {
        for v in out.x.iter_mut().chain(out.y.iter_mut()) {
            *v /= start;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FiberSpan;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_wave(n: usize, seed: u64, p: f64) -> WaveformGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = || {
            (0..n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * p.sqrt())
                .collect::<Vec<_>>()
        };
        let x = v();
        let y = v();
        WaveformGrid::new(x, y, 0.3, p).unwrap()
    }

    fn max_err(a: &WaveformGrid, b: &WaveformGrid) -> f64 {
        a.x.iter()
            .chain(&a.y)
            .zip(b.x.iter().chain(&b.y))
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max)
    }

    fn lossless(span: FiberSpan) -> FiberSpan {
        FiberSpan {
            attenuation_db_per_km: 0.0,
            ..span
        }
    }

    #[test]
    fn dispersion_only_round_trip() {
        let w = random_wave(1024, 1, 1e-3);
        let mut span = FiberSpan::smf(80.0);
        span.gamma_per_w_km = 0.0;
        let link = LinkSpec::new(vec![span], 3).unwrap().without_ase();
        let (out, _) = ssfm_propagate::<ChaCha8Rng>(w.clone(), &link, None).unwrap();
        let back = edc(&out, &link, 0.0);
        assert!(max_err(&back, &w) < 1e-9 * w.x[0].norm().max(1e-3));
    }

    #[test]
    fn linear_steps_compose() {
        let w = random_wave(512, 2, 1e-3);
        let mut a = w.clone();
        let mut b = w.clone();
        let mut span = lossless(FiberSpan::smf(100.0));
        span.gamma_per_w_km = 0.0;
        span.step_km = 100.0;
        propagate_span(&mut a, &span);
        span.step_km = 1.0;
        let one = FiberSpan { length_km: 1.0, ..span.clone() };
        for _ in 0..100 {
            propagate_span(&mut b, &one);
        }
        assert!(max_err(&a, &b) < 1e-9 * 1e-3f64.sqrt() * 10.0);
        assert!((a.energy() - w.energy()).abs() / w.energy() < 1e-9);
    }

    #[test]
    fn lossless_nonlinear_step_conserves_energy() {
        let w = random_wave(512, 3, 1e-2);
        let mut a = w.clone();
        propagate_span(&mut a, &lossless(FiberSpan::smf(20.0)));
        assert!((a.energy() - w.energy()).abs() / w.energy() < 1e-9);
    }

    #[test]
    fn dispersion_free_spm_matches_closed_form() {
        let w = random_wave(256, 4, 5e-3);
        let mut span = FiberSpan::smf(80.0);
        span.beta2_ps2_per_km = 0.0;
        let link = LinkSpec::new(vec![span.clone()], 2).unwrap().without_ase();
        let (out, rep) = ssfm_propagate::<ChaCha8Rng>(w.clone(), &link, None).unwrap();
        assert!(rep.warnings.is_empty());
        let leff = 2.0 * span.effective_length_km();
        for t in 0..w.len() {
            let p = w.x[t].norm_sqr() + w.y[t].norm_sqr();
            let rot = Complex64::from_polar(1.0, -MANAKOV * span.gamma_per_w_km * p * leff);
            assert!((out.x[t] - w.x[t] * rot).norm() < 1e-6 * w.x[t].norm().max(1e-3));
            assert!((out.y[t] - w.y[t] * rot).norm() < 1e-6 * w.y[t].norm().max(1e-3));
        }
    }

    #[test]
    fn coarse_steps_raise_a_warning() {
        let w = random_wave(128, 5, 1.0);
        let mut span = FiberSpan::smf(80.0);
        span.step_km = 40.0;
        let link = LinkSpec::new(vec![span], 1).unwrap().without_ase();
        let (_, rep) = ssfm_propagate::<ChaCha8Rng>(w, &link, None).unwrap();
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn edfa_noise_matches_formula() {
        let n = 100_000;
        let mut w = WaveformGrid::new(
            vec![Complex64::new(0.0, 0.0); n],
            vec![Complex64::new(0.0, 0.0); n],
            0.3,
            1.0,
        )
        .unwrap();
        let hv = 1.28e-19;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let var = edfa(&mut w, 16.0, 5.0, hv, Some(&mut rng)).unwrap();
        let g = db_to_lin(16.0);
        let f = db_to_lin(5.0);
        let nsp = (f * g - 1.0) / (2.0 * (g - 1.0));
        let psd = (g - 1.0) * nsp * hv;
        assert!((var / (psd * 0.3e12) - 1.0).abs() < 1e-12);
        let est = w.x.iter().map(|v| v.norm_sqr()).sum::<f64>() / n as f64;
        assert!((est / var - 1.0).abs() < 0.01);

        let sig = random_wave(64, 9, 1e-3);
        let mut a = sig.clone();
        edfa(&mut a, 0.0, 0.0, hv, Some(&mut rng)).unwrap();
        assert_eq!(a, sig);

        let mut b = sig.clone();
        let mut c = sig.clone();
        edfa(&mut b, 10.0, 5.0, hv, Some(&mut ChaCha8Rng::seed_from_u64(1))).unwrap();
        edfa(&mut c, 10.0, 5.0, hv, Some(&mut ChaCha8Rng::seed_from_u64(2))).unwrap();
        let mut d = sig.clone();
        edfa::<ChaCha8Rng>(&mut d, 10.0, 5.0, hv, None).unwrap();
        assert_ne!(b, c);
        let mean_b: Complex64 = b.x.iter().zip(&d.x).map(|(u, v)| u - v).sum();
        assert!(mean_b.norm() / 64.0 < 1e-3);
    }

    #[test]
    fn dbp_inverts_noiseless_single_channel() {
        let w = random_wave(1024, 10, 5e-3);
        let link = LinkSpec::smf(2, 80.0).unwrap().without_ase();
        let (out, _) = ssfm_propagate::<ChaCha8Rng>(w.clone(), &link, None).unwrap();
        let back = dbp_single_channel(&out, &link, 0.0, 0).unwrap();
        let rel = max_err(&back, &w) / w.x.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(rel < 1e-6, "{rel}");
        assert!(edfa::<ChaCha8Rng>(&mut back.clone(), -1.0, 5.0, 1e-19, None).is_err());
    }
}

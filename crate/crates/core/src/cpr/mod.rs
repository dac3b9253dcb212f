//! Carrier phase recovery: data-aided mean phase rotation (MPR), blind
//! phase search (BPS) and supervised cycle-slip compensation.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::pas::QamConstellation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CprKind {
    Mpr,
    Bps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CprSpec {
    pub kind: CprKind,
    /// Half window `N_CPR`; the BPS window spans `2·N_CPR + 1` symbols.
    #[serde(default)]
    pub half_window: usize,
    #[serde(default = "default_phases")]
    pub test_phases: usize,
    #[serde(default = "default_range")]
    pub phase_range_rad: f64,
    /// Block length of the supervised cycle-slip fix.
    #[serde(default = "default_slip_block")]
    pub slip_block: usize,
}

fn default_phases() -> usize {
    64
}
fn default_range() -> f64 {
    FRAC_PI_2
}
fn default_slip_block() -> usize {
    64
}

impl CprSpec {
    pub fn mpr() -> Self {
        CprSpec {
            kind: CprKind::Mpr,
            half_window: 0,
            test_phases: default_phases(),
            phase_range_rad: default_range(),
            slip_block: default_slip_block(),
        }
    }

    pub fn bps(half_window: usize) -> Self {
        CprSpec {
            kind: CprKind::Bps,
            half_window,
            ..Self::mpr()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == CprKind::Bps && self.test_phases < 2 {
            return Err(Error::Config("BPS needs at least two test phases".into()));
        }
        if !(self.phase_range_rad > 0.0) {
            return Err(Error::Config("test-phase range must be positive".into()));
        }
        if self.slip_block == 0 {
            return Err(Error::Config("cycle-slip block must be at least 1".into()));
        }
        Ok(())
    }

    /// `θ_b = −range/2 + b·range/B`.
    pub fn test_grid(&self) -> Vec<f64> {
        let b = self.test_phases as f64;
        (0..self.test_phases)
            .map(|i| -0.5 * self.phase_range_rad + i as f64 * self.phase_range_rad / b)
            .collect()
    }
}

/// Data-aided global phase `arg Σ r·t*` and the derotated sequence.
pub fn mpr(received: &[Complex64], transmitted: &[Complex64]) -> Result<(f64, Vec<Complex64>)> {
    if received.len() != transmitted.len() {
        return Err(Error::LengthMismatch(format!(
            "{} received vs {} transmitted symbols",
            received.len(),
            transmitted.len()
        )));
    }
    let acc: Complex64 = received
        .iter()
        .zip(transmitted)
        .map(|(r, t)| r * t.conj())
        .sum();
    if acc.norm() == 0.0 || !acc.norm().is_finite() {
        return Err(Error::UndefinedPhase);
    }
    let phi = acc.arg();
    let rot = Complex64::from_polar(1.0, -phi);
    Ok((phi, received.iter().map(|r| r * rot).collect()))
}

/// Blind phase search. Returns the per-symbol phase estimate `φ̂[k]`
/// (unwrapped) and `r[k]·e^{−jφ̂[k]}`.
///
/// For each test phase the squared distance of the rotated symbol to its
/// nearest constellation point is summed over the centred window; near the
/// ends of the sequence the window keeps its length and shifts inward.
pub fn bps(
    received: &[Complex64],
    constellation: &QamConstellation,
    spec: &CprSpec,
) -> Result<(Vec<f64>, Vec<Complex64>)> {
    spec.validate()?;
    let n = received.len();
    if n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    let grid = spec.test_grid();
    let rots: Vec<Complex64> = grid.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    // Prefix sums of per-symbol distances, one row per test phase.
    let mut prefix = vec![0.0f64; grid.len() * (n + 1)];
    for (b, rot) in rots.iter().enumerate() {
        let row = &mut prefix[b * (n + 1)..(b + 1) * (n + 1)];
        let mut acc = 0.0;
        for (k, r) in received.iter().enumerate() {
            let z = r * rot;
            acc += (z - constellation.decide(z)).norm_sqr();
            row[k + 1] = acc;
        }
    }
    let mut theta = Vec::with_capacity(n);
    for k in 0..n {
        let span = (2 * spec.half_window + 1).min(n);
        let lo = k.saturating_sub(spec.half_window).min(n - span);
        let hi = lo + span;
        let mut best = (f64::INFINITY, 0usize);
        for b in 0..grid.len() {
            let row = &prefix[b * (n + 1)..(b + 1) * (n + 1)];
            let d = row[hi] - row[lo];
            if d < best.0 {
                best = (d, b);
            }
        }
        theta.push(grid[best.1]);
    }
    unwrap_quadrant(&mut theta, spec.phase_range_rad);
    let phases: Vec<f64> = theta.iter().map(|t| -t).collect();
    let corrected = received
        .iter()
        .zip(&theta)
        .map(|(r, &t)| r * Complex64::from_polar(1.0, t))
        .collect();
    Ok((phases, corrected))
}

/// Nearest-neighbour continuation modulo `period`.
fn unwrap_quadrant(theta: &mut [f64], period: f64) {
    for k in 1..theta.len() {
        let d = theta[k] - theta[k - 1];
        theta[k] -= (d / period).round() * period;
    }
}

/// Per block of `block` symbols, rotates by the multiple of π/2 that
/// minimizes the squared error to the reference.
pub fn cycle_slip_fix(
    corrected: &[Complex64],
    reference: &[Complex64],
    block: usize,
) -> Result<Vec<Complex64>> {
    if corrected.len() != reference.len() {
        return Err(Error::LengthMismatch("cycle-slip reference length".into()));
    }
    if block == 0 {
        return Err(Error::Config("cycle-slip block must be at least 1".into()));
    }
    let quarter = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut out = Vec::with_capacity(corrected.len());
    for (c, t) in corrected.chunks(block).zip(reference.chunks(block)) {
        let err = |q: &Complex64| -> f64 { c.iter().zip(t).map(|(a, b)| (a * q - b).norm_sqr()).sum() };
        let best = quarter
            .iter()
            .min_by(|a, b| err(a).total_cmp(&err(b)))
            .unwrap();
        out.extend(c.iter().map(|a| a * best));
    }
    Ok(out)
}

/// Runs the configured CPR on one polarization, followed by the supervised
/// cycle-slip fix for BPS.
pub fn recover(
    received: &[Complex64],
    transmitted: &[Complex64],
    constellation: &QamConstellation,
    spec: &CprSpec,
) -> Result<Vec<Complex64>> {
    match spec.kind {
        CprKind::Mpr => Ok(mpr(received, transmitted)?.1),
        CprKind::Bps => {
            let (_, c) = bps(received, constellation, spec)?;
            cycle_slip_fix(&c, transmitted, spec.slip_block)
        }
    }
}

/// Largest phase error of the BPS grid against a constant offset.
pub fn grid_quantization(spec: &CprSpec) -> f64 {
    0.5 * spec.phase_range_rad / spec.test_phases as f64
}

/// Reduces a phase to the quadrant interval `[−π/4, π/4)`.
pub fn wrap_quadrant(phi: f64) -> f64 {
    let p = phi.rem_euclid(FRAC_PI_2);
    if p >= FRAC_PI_4 {
        p - FRAC_PI_2
    } else {
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shaping::AmplitudeAlphabet;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qam(n: usize, seed: u64) -> (QamConstellation, Vec<Complex64>) {
        let c = QamConstellation::uniform(AmplitudeAlphabet::odd(8).unwrap()).unwrap();
        let pts = c.points();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = (0..n).map(|_| pts[rng.random_range(0..pts.len())]).collect();
        (c, t)
    }

    #[test]
    fn mpr_examples() {
        let (_, t) = qam(1000, 1);
        let r: Vec<_> = t.iter().map(|v| v * Complex64::from_polar(1.0, 0.3)).collect();
        let (phi, c) = mpr(&r, &t).unwrap();
        assert!((phi - 0.3).abs() < 1e-12);
        assert!((c[5] - t[5]).norm() < 1e-12);
        assert!(mpr(&t, &t).unwrap().0.abs() < 1e-15);
        let z = vec![Complex64::new(0.0, 0.0); 4];
        assert!(matches!(mpr(&z, &t[..4]), Err(Error::UndefinedPhase)));
    }

    #[test]
    fn bps_recovers_grid_phase_and_preserves_power() {
        let (c, t) = qam(2000, 2);
        let spec = CprSpec::bps(8);
        let theta = spec.test_grid()[40];
        let r: Vec<_> = t.iter().map(|v| v * Complex64::from_polar(1.0, -theta)).collect();
        let (phi, out) = bps(&r, &c, &spec).unwrap();
        for (p, (a, b)) in phi.iter().zip(r.iter().zip(&out)) {
            assert!(wrap_quadrant(p + theta).abs() < 1e-12);
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
        let off = 0.3 * grid_quantization(&spec) + spec.test_grid()[10];
        let r: Vec<_> = t.iter().map(|v| v * Complex64::from_polar(1.0, off)).collect();
        let (phi, _) = bps(&r, &c, &spec).unwrap();
        assert!(phi.iter().all(|p| wrap_quadrant(p - off).abs() <= grid_quantization(&spec) + 1e-12));
    }

    #[test]
    fn cycle_slip_examples() {
        let (_, t) = qam(256, 3);
        let rot: Vec<_> = t.iter().map(|v| v * Complex64::new(0.0, 1.0)).collect();
        let fixed = cycle_slip_fix(&rot, &t, 64).unwrap();
        assert!(fixed.iter().zip(&t).all(|(a, b)| (a - b).norm() < 1e-12));
        assert_eq!(cycle_slip_fix(&t, &t, 64).unwrap(), t);
    }
}

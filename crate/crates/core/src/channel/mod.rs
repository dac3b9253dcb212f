//! WDM transmission chain: RRC pulse shaping, multiplexing, split-step
//! Manakov propagation over amplified spans, laser phase noise, and
//! per-channel EDC or DBP at the receiver.
//!
//! Internal units: time in ps, frequency in THz, length in km, power in W.
//! Waveform samples are in √W.

mod fiber;
mod waveform;

use serde::{Deserialize, Serialize};

pub use fiber::{
    dbp_single_channel, edc, edfa, propagate_span, ssfm_propagate, PropagationReport,
};
pub use waveform::{
    apply_laser_phase_noise, matched_filter, rrc_response, rrc_shape, rrc_shape_pol, sample_symbols,
    wdm_demux,
    wdm_mux, FftCache,
};

use crate::{Error, Result};

/// Speed of light in nm/ps.
pub const C_NM_PER_PS: f64 = 2.997_924_58e5;
/// Planck constant in J·s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Manakov averaging factor for the dual-polarization Kerr term.
pub const MANAKOV: f64 = 8.0 / 9.0;

/// One fiber element followed by an EDFA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpanRecord", into = "SpanRecord")]
pub struct FiberSpan {
    pub length_km: f64,
    pub attenuation_db_per_km: f64,
    /// Group-velocity dispersion `β₂` in ps²/km.
    pub beta2_ps2_per_km: f64,
    pub gamma_per_w_km: f64,
    /// Launch power into this element relative to the link reference, dB.
    pub launch_offset_db: f64,
    pub step_km: f64,
}

#[derive(Serialize, Deserialize)]
struct SpanRecord {
    length_km: f64,
    attenuation_db_per_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dispersion_ps_per_nm_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta2_ps2_per_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    wavelength_nm: Option<f64>,
    gamma_per_w_km: f64,
    #[serde(default)]
    launch_offset_db: f64,
    #[serde(default)]
    step_km: Option<f64>,
}

impl TryFrom<SpanRecord> for FiberSpan {
    type Error = Error;

    fn try_from(r: SpanRecord) -> Result<Self> {
        let beta2 = match (r.beta2_ps2_per_km, r.dispersion_ps_per_nm_km) {
            (Some(b), None) => b,
            (None, Some(d)) => dispersion_to_beta2(d, r.wavelength_nm.unwrap_or(1550.0)),
            (None, None) => {
                return Err(Error::Config(
                    "span needs dispersion_ps_per_nm_km or beta2_ps2_per_km".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "give either dispersion_ps_per_nm_km or beta2_ps2_per_km, not both".into(),
                ))
            }
        };
        let span = FiberSpan {
            length_km: r.length_km,
            attenuation_db_per_km: r.attenuation_db_per_km,
            beta2_ps2_per_km: beta2,
            gamma_per_w_km: r.gamma_per_w_km,
            launch_offset_db: r.launch_offset_db,
            step_km: r.step_km.unwrap_or(1.0),
        };
        span.validate()?;
        Ok(span)
    }
}

impl From<FiberSpan> for SpanRecord {
    fn from(s: FiberSpan) -> Self {
        SpanRecord {
            length_km: s.length_km,
            attenuation_db_per_km: s.attenuation_db_per_km,
            dispersion_ps_per_nm_km: None,
            beta2_ps2_per_km: Some(s.beta2_ps2_per_km),
            wavelength_nm: None,
            gamma_per_w_km: s.gamma_per_w_km,
            launch_offset_db: s.launch_offset_db,
            step_km: Some(s.step_km),
        }
    }
}

/// `β₂ = −D λ² / (2π c)`.
pub fn dispersion_to_beta2(d_ps_per_nm_km: f64, wavelength_nm: f64) -> f64 {
    -d_ps_per_nm_km * wavelength_nm * wavelength_nm / (2.0 * std::f64::consts::PI * C_NM_PER_PS)
}

impl FiberSpan {
    /// Standard single-mode fiber at 1550 nm.
    pub fn smf(length_km: f64) -> Self {
        FiberSpan {
            length_km,
            attenuation_db_per_km: 0.2,
            beta2_ps2_per_km: dispersion_to_beta2(17.0, 1550.0),
            gamma_per_w_km: 1.3,
            launch_offset_db: 0.0,
            step_km: 1.0,
        }
    }

    /// Dispersion compensating fiber with launch power 4 dB below the SMF.
    pub fn dcf(length_km: f64) -> Self {
        FiberSpan {
            length_km,
            attenuation_db_per_km: 0.57,
            beta2_ps2_per_km: 127.5,
            gamma_per_w_km: 6.5,
            launch_offset_db: -4.0,
            step_km: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_km > 0.0) {
            return Err(Error::Config("span length must be positive".into()));
        }
        if !(self.attenuation_db_per_km >= 0.0) {
            return Err(Error::Config("attenuation must be non-negative".into()));
        }
        if !(self.step_km > 0.0) {
            return Err(Error::Config("step must be positive".into()));
        }
        if !self.beta2_ps2_per_km.is_finite() || !self.gamma_per_w_km.is_finite() {
            return Err(Error::Config("non-finite fiber parameter".into()));
        }
        Ok(())
    }

    /// Attenuation in 1/km (power, nepers).
    pub fn alpha_per_km(&self) -> f64 {
        self.attenuation_db_per_km * std::f64::consts::LN_10 / 10.0
    }

    pub fn loss_db(&self) -> f64 {
        self.attenuation_db_per_km * self.length_km
    }

    /// `(1 − e^{−αL})/α`, or `L` for a lossless fiber.
    pub fn effective_length_km(&self) -> f64 {
        effective_length(self.alpha_per_km(), self.length_km)
    }

    pub fn dispersion_ps2(&self) -> f64 {
        self.beta2_ps2_per_km * self.length_km
    }
}

pub(crate) fn effective_length(alpha: f64, length: f64) -> f64 {
    if alpha.abs() * length < 1e-12 {
        length
    } else {
        -(-alpha * length).exp_m1() / alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Amplification {
    /// An EDFA after every fiber element restores the next element's launch
    /// power (the reference power after the last element).
    #[default]
    AfterEachFiber,
    /// No amplifiers; losses accumulate.
    None,
}

/// Fiber link: a cell of fiber elements repeated `repeat` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub cell: Vec<FiberSpan>,
    #[serde(default = "one")]
    pub repeat: usize,
    #[serde(default = "default_nf")]
    pub noise_figure_db: f64,
    #[serde(default)]
    pub amplification: Amplification,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
    #[serde(default = "default_true")]
    pub ase: bool,
    #[serde(default = "default_phase_cap")]
    pub max_step_phase_rad: f64,
}

fn one() -> usize {
    1
}
fn default_nf() -> f64 {
    5.0
}
fn default_wavelength() -> f64 {
    1550.0
}
fn default_true() -> bool {
    true
}
fn default_phase_cap() -> f64 {
    0.05
}

impl LinkSpec {
    pub fn new(cell: Vec<FiberSpan>, repeat: usize) -> Result<Self> {
        let l = LinkSpec {
            cell,
            repeat,
            noise_figure_db: default_nf(),
            amplification: Amplification::AfterEachFiber,
            wavelength_nm: default_wavelength(),
            ase: true,
            max_step_phase_rad: default_phase_cap(),
        };
        l.validate()?;
        Ok(l)
    }

    /// `count` identical SMF spans.
    pub fn smf(count: usize, length_km: f64) -> Result<Self> {
        Self::new(vec![FiberSpan::smf(length_km)], count)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell.is_empty() || self.repeat == 0 {
            return Err(Error::Config("link has no spans".into()));
        }
        for s in &self.cell {
            s.validate()?;
        }
        if !(self.noise_figure_db >= 0.0) && self.ase {
            return Err(Error::Config("noise figure must be non-negative".into()));
        }
        Ok(())
    }

    pub fn elements(&self) -> impl Iterator<Item = &FiberSpan> + Clone {
        (0..self.repeat).flat_map(move |_| self.cell.iter())
    }

    pub fn element_count(&self) -> usize {
        self.cell.len() * self.repeat
    }

    pub fn total_dispersion_ps2(&self) -> f64 {
        self.elements().map(|s| s.dispersion_ps2()).sum()
    }

    pub fn total_length_km(&self) -> f64 {
        self.elements().map(|s| s.length_km).sum()
    }

    /// True when the link net dispersion is compensated inline.
    pub fn dispersion_managed(&self) -> bool {
        let per_cell: f64 = self.cell.iter().map(|s| s.dispersion_ps2()).sum();
        let gross: f64 = self.cell.iter().map(|s| s.dispersion_ps2().abs()).sum();
        self.cell.len() > 1 && per_cell.abs() < 0.05 * gross
    }

    /// Identical-span parameters `(span, count)` when every element is the
    /// same fiber.
    pub fn identical_spans(&self) -> Option<(&FiberSpan, usize)> {
        let first = &self.cell[0];
        self.cell
            .iter()
            .all(|s| s == first)
            .then_some((first, self.element_count()))
    }

    /// EDFA gain in dB after element `j`.
    pub fn gain_db(&self, j: usize) -> f64 {
        let n = self.element_count();
        let el = &self.cell[j % self.cell.len()];
        let next_offset = if j + 1 < n {
            self.cell[(j + 1) % self.cell.len()].launch_offset_db
        } else {
            0.0
        };
        match self.amplification {
            Amplification::AfterEachFiber => el.loss_db() + next_offset - el.launch_offset_db,
            Amplification::None => 0.0,
        }
    }

    /// Photon energy `hν` in J at the link wavelength.
    pub fn photon_energy_j(&self) -> f64 {
        PLANCK * C_NM_PER_PS * 1e12 / self.wavelength_nm
    }

    pub fn with_step_scale(&self, scale: f64) -> Self {
        let mut l = self.clone();
        for s in &mut l.cell {
            s.step_km *= scale;
        }
        l
    }

    pub fn without_ase(&self) -> Self {
        LinkSpec {
            ase: false,
            ..self.clone()
        }
    }
}

/// WDM channel grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdmGrid {
    pub channels: usize,
    pub spacing_ghz: f64,
    pub baud_gbd: f64,
    pub rolloff: f64,
    /// Simulation samples per symbol of the aggregate waveform.
    pub samples_per_symbol: usize,
    /// Samples per symbol kept by the receiver after demultiplexing.
    #[serde(default = "default_rx_sps")]
    pub rx_samples_per_symbol: usize,
}

fn default_rx_sps() -> usize {
    2
}

impl WdmGrid {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 {
            return Err(Error::Config("grid needs at least one channel".into()));
        }
        if !(0.0..=1.0).contains(&self.rolloff) {
            return Err(Error::Config("rolloff must lie in [0, 1]".into()));
        }
        if !(self.baud_gbd > 0.0) {
            return Err(Error::Config("baud rate must be positive".into()));
        }
        if self.channels > 1 && self.spacing_ghz < (1.0 + self.rolloff) * self.baud_gbd - 1e-9 {
            return Err(Error::Config(format!(
                "spacing {} GHz is below (1+rolloff)·baud = {} GHz",
                self.spacing_ghz,
                (1.0 + self.rolloff) * self.baud_gbd
            )));
        }
        let edge = self.center_frequencies_ghz().last().copied().unwrap_or(0.0)
            + 0.5 * (1.0 + self.rolloff) * self.baud_gbd;
        if edge > 0.5 * self.sample_rate_ghz() {
            return Err(Error::Config(format!(
                "aliasing: band edge {edge} GHz exceeds half the sample rate {} GHz",
                0.5 * self.sample_rate_ghz()
            )));
        }
        if (self.rx_samples_per_symbol as f64) < 1.0 + self.rolloff
            || self.rx_samples_per_symbol > self.samples_per_symbol
        {
            return Err(Error::Config(
                "receiver oversampling must be at least 1 + rolloff and at most the simulation rate"
                    .into(),
            ));
        }
        Ok(())
    }

    pub fn sample_rate_ghz(&self) -> f64 {
        self.baud_gbd * self.samples_per_symbol as f64
    }

    pub fn symbol_time_ps(&self) -> f64 {
        1e3 / self.baud_gbd
    }

    /// Nominal centers, symmetric about 0.
    pub fn center_frequencies_ghz(&self) -> Vec<f64> {
        let mid = (self.channels as f64 - 1.0) / 2.0;
        (0..self.channels)
            .map(|c| (c as f64 - mid) * self.spacing_ghz)
            .collect()
    }

    /// Center offsets rounded to whole FFT bins for a frame of `symbols`
    /// symbols, so that frequency shifts are exact circular shifts.
    pub fn center_bins(&self, symbols: usize) -> Vec<i64> {
        let bin_ghz = self.baud_gbd / symbols as f64;
        self.center_frequencies_ghz()
            .iter()
            .map(|f| (f / bin_ghz).round() as i64)
            .collect()
    }

    /// Bin-quantized center frequencies in THz.
    pub fn center_frequencies_thz(&self, symbols: usize) -> Vec<f64> {
        let bin_thz = self.baud_gbd * 1e-3 / symbols as f64;
        self.center_bins(symbols)
            .iter()
            .map(|&b| b as f64 * bin_thz)
            .collect()
    }
}

/// Transmitter and local-oscillator linewidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct LaserSpec {
    #[serde(default)]
    pub tx_linewidth_hz: f64,
    #[serde(default)]
    pub rx_linewidth_hz: f64,
}

impl LaserSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tx_linewidth_hz >= 0.0 && self.rx_linewidth_hz >= 0.0) {
            return Err(Error::Config("laser linewidth must be non-negative".into()));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.tx_linewidth_hz == 0.0 && self.rx_linewidth_hz == 0.0
    }
}

/// Dual-polarization samples on a shared time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformGrid {
    pub x: Vec<num_complex::Complex64>,
    pub y: Vec<num_complex::Complex64>,
    /// Samples per ps (THz).
    pub sample_rate_thz: f64,
    /// Reference power in W that unit-power symbols were scaled to.
    pub reference_power_w: f64,
}

impl WaveformGrid {
    pub fn new(
        x: Vec<num_complex::Complex64>,
        y: Vec<num_complex::Complex64>,
        sample_rate_thz: f64,
        reference_power_w: f64,
    ) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(format!(
                "polarizations have {} and {} samples",
                x.len(),
                y.len()
            )));
        }
        Ok(Self {
            x,
            y,
            sample_rate_thz,
            reference_power_w,
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `Σ |x|² + |y|²` over all samples.
    pub fn energy(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v.norm_sqr()).sum()
    }

    /// Mean total power in W.
    pub fn power_w(&self) -> f64 {
        self.energy() / self.len().max(1) as f64
    }

    pub fn sample_period_ps(&self) -> f64 {
        1.0 / self.sample_rate_thz
    }

    /// Binary dump: magic `WFG1`, sample rate (f64, THz), sample count
    /// (u64), reference power (f64, W), then `x` and `y` as interleaved
    /// little-endian `(re, im)` f64 pairs, `x` first.
    pub fn write_binary<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"WFG1")?;
        w.write_all(&self.sample_rate_thz.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.reference_power_w.to_le_bytes())?;
        for v in self.x.iter().chain(&self.y) {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: std::io::Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"WFG1" {
            return Err(Error::Parse("not a waveform dump".into()));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let rate = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let p = f64::from_le_bytes(b8);
        let mut read = |count: usize| -> Result<Vec<num_complex::Complex64>> {
            (0..count)
                .map(|_| {
                    let mut re = [0u8; 8];
                    let mut im = [0u8; 8];
                    r.read_exact(&mut re)?;
                    r.read_exact(&mut im)?;
                    Ok(num_complex::Complex64::new(
                        f64::from_le_bytes(re),
                        f64::from_le_bytes(im),
                    ))
                })
                .collect()
        };
        let x = read(n)?;
        let y = read(n)?;
        Self::new(x, y, rate, p)
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smf_parameters() {
        let s = FiberSpan::smf(80.0);
        assert!((s.beta2_ps2_per_km + 21.68).abs() < 0.01);
        assert!((s.effective_length_km() - 21.17).abs() < 0.01);
        assert!((s.loss_db() - 16.0).abs() < 1e-12);
        let lossless = FiberSpan {
            attenuation_db_per_km: 0.0,
            ..s
        };
        assert_eq!(lossless.effective_length_km(), 80.0);
    }

    #[test]
    fn gains_restore_launch_profile() {
        let l = LinkSpec::new(vec![FiberSpan::smf(80.0), FiberSpan::dcf(13.0)], 2).unwrap();
        assert!((l.gain_db(0) - 12.0).abs() < 1e-12);
        assert!((l.gain_db(1) - (0.57 * 13.0 + 4.0)).abs() < 1e-12);
        let total: f64 = (0..4).map(|j| l.gain_db(j)).sum();
        let loss: f64 = l.elements().map(|s| s.loss_db()).sum();
        assert!((total - loss).abs() < 1e-9);
        assert!(l.dispersion_managed() || l.total_dispersion_ps2().abs() > 0.0);
        assert!(l.identical_spans().is_none());
        assert_eq!(LinkSpec::smf(4, 80.0).unwrap().identical_spans().unwrap().1, 4);
    }

    #[test]
    fn grid_checks() {
        let g = WdmGrid {
            channels: 3,
            spacing_ghz: 75.0,
            baud_gbd: 41.67,
            rolloff: 0.1,
            samples_per_symbol: 8,
            rx_samples_per_symbol: 2,
        };
        g.validate().unwrap();
        assert_eq!(g.center_frequencies_ghz(), vec![-75.0, 0.0, 75.0]);
        let tight = WdmGrid {
            spacing_ghz: 40.0,
            ..g.clone()
        };
        assert!(tight.validate().is_err());
        let aliased = WdmGrid {
            samples_per_symbol: 4,
            ..g
        };
        assert!(matches!(aliased.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn span_record_accepts_either_dispersion_key() {
        let a: FiberSpan = toml::from_str(
            "length_km = 80\nattenuation_db_per_km = 0.2\ndispersion_ps_per_nm_km = 17\ngamma_per_w_km = 1.3\n",
        )
        .unwrap();
        assert_eq!(a, FiberSpan::smf(80.0));
        let b: FiberSpan = toml::from_str(&toml::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(toml::from_str::<FiberSpan>(
            "length_km = 0\nattenuation_db_per_km = 0.2\nbeta2_ps2_per_km = 1\ngamma_per_w_km = 1.3\n"
        )
        .is_err());
    }

    #[test]
    fn waveform_binary_round_trip() {
        use num_complex::Complex64;
        let w = WaveformGrid::new(
            vec![Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0)],
            vec![Complex64::new(0.0, 3.0), Complex64::new(4.0, -1.0)],
            0.3,
            1e-3,
        )
        .unwrap();
        let mut buf = Vec::new();
        w.write_binary(&mut buf).unwrap();
        assert_eq!(WaveformGrid::read_binary(&buf[..]).unwrap(), w);
    }
}

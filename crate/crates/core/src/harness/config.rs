use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{LaserSpec, LinkSpec, WdmGrid};
use crate::cpr::{CprKind, CprSpec};
use crate::pas::MapKind;
use crate::shaping::{AmplitudeAlphabet, Composition, DmKind, DmSpec};
use crate::{Error, Result};

/// Propagation model of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModel {
    /// Full WDM chain: RRC, mux, split-step link, demux, EDC or DBP.
    #[default]
    Ssfm,
    /// Symbol-rate complex AWGN at a configured `E_s/N_0`.
    Awgn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Compensation {
    #[default]
    Edc,
    Dbp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    #[serde(default)]
    pub compensation: Compensation,
    /// Steps per span for DBP; 0 reuses the forward step.
    #[serde(default)]
    pub dbp_steps_per_span: usize,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        ReceiverConfig {
            compensation: Compensation::Edc,
            dbp_steps_per_span: 0,
        }
    }
}

/// DM families swept by the harness. Compositions and `k` are derived per
/// block length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmFamily {
    Ss,
    Sm1,
    Sm2,
    SmMax,
    Ccdm,
}

impl DmFamily {
    pub fn label(self) -> &'static str {
        match self {
            DmFamily::Ss => "ss",
            DmFamily::Sm1 => "sm1",
            DmFamily::Sm2 => "sm2",
            DmFamily::SmMax => "sm_max",
            DmFamily::Ccdm => "ccdm",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ss" => DmFamily::Ss,
            "sm1" => DmFamily::Sm1,
            "sm2" => DmFamily::Sm2,
            "sm_max" => DmFamily::SmMax,
            "ccdm" => DmFamily::Ccdm,
            _ => return Err(Error::Parse(format!("unknown DM family {s}"))),
        })
    }

    pub(crate) fn id(self) -> u64 {
        self as u64 + 1
    }

    /// The concrete spec at block length `n` with `k` input bits.
    pub fn spec(self, n: usize, k: u32, alphabet: &AmplitudeAlphabet) -> Result<DmSpec> {
        let kind = match self {
            DmFamily::Ss => DmKind::Ss,
            DmFamily::Sm1 => DmKind::Sm { shells: 1 },
            DmFamily::Sm2 => DmKind::Sm { shells: 2 },
            DmFamily::SmMax => DmKind::SmMax,
            DmFamily::Ccdm => DmKind::Ccdm {
                composition: Composition::for_rate(alphabet, n, k)?,
            },
        };
        DmSpec::new(kind, n, k, alphabet.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapingConfig {
    pub alphabet: Vec<u32>,
    /// DM rate in bits per amplitude; `k = round(rate·N)`.
    #[serde(default = "default_rate")]
    pub bits_per_amplitude: f64,
    pub families: Vec<DmFamily>,
    pub block_lengths: Vec<usize>,
    /// Block lengths above this are emulated by concatenating independent
    /// DMs of this length followed by an interleaver.
    #[serde(default = "default_emulation")]
    pub emulation_block: usize,
}

fn default_rate() -> f64 {
    2.0
}
fn default_emulation() -> usize {
    512
}

impl ShapingConfig {
    pub fn alphabet(&self) -> Result<AmplitudeAlphabet> {
        AmplitudeAlphabet::new(self.alphabet.clone())
    }

    /// Physical DM length and concatenation factor for nominal length `n`.
    pub fn realization(&self, n: usize) -> Result<(usize, usize)> {
        if n <= self.emulation_block {
            return Ok((n, 1));
        }
        if n % self.emulation_block != 0 {
            return Err(Error::Config(format!(
                "block length {n} is not a multiple of the emulation block {}",
                self.emulation_block
            )));
        }
        Ok((self.emulation_block, n / self.emulation_block))
    }

    pub fn input_bits(&self, n: usize) -> u32 {
        (self.bits_per_amplitude * n as f64).round() as u32
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct CprConfig {
    #[serde(default)]
    pub mpr: bool,
    #[serde(default)]
    pub bps_half_windows: Vec<usize>,
    #[serde(default = "default_phases")]
    pub test_phases: usize,
    #[serde(default = "default_slip_block")]
    pub slip_block: usize,
}

fn default_phases() -> usize {
    64
}
fn default_slip_block() -> usize {
    64
}

impl CprConfig {
    pub fn variants(&self) -> Vec<CprSpec> {
        let mut v = Vec::new();
        if self.mpr {
            v.push(CprSpec::mpr());
        }
        for &h in &self.bps_half_windows {
            v.push(CprSpec {
                test_phases: self.test_phases,
                slip_block: self.slip_block,
                ..CprSpec::bps(h)
            });
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    /// Per-channel launch powers (SSFM) in dBm.
    #[serde(default)]
    pub launch_power_dbm: Vec<f64>,
    /// Symbol SNRs (AWGN model) in dB.
    #[serde(default)]
    pub es_n0_db: Vec<f64>,
    /// Refine the best coarse power by ±`refine_step_db`.
    #[serde(default)]
    pub optimize: bool,
    #[serde(default = "default_refine")]
    pub refine_step_db: f64,
}

fn default_refine() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Air,
    Snr,
    Npn,
    Eedi,
    Edi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsConfig {
    pub list: Vec<MetricKind>,
    #[serde(default = "default_lambda")]
    pub eedi_lambda: f64,
    #[serde(default = "default_edi_window")]
    pub edi_window: usize,
    #[serde(default = "crate::metrics::default_efficiency")]
    pub e_cpr: f64,
    /// `E_s/N_0` used in the CPR noise floor; defaults to the link's
    /// ASE-limited value at the point's launch power.
    #[serde(default)]
    pub npn_es_n0_db: Option<f64>,
    #[serde(default)]
    pub kernel_memory: Option<usize>,
    #[serde(default = "default_kernel_tol")]
    pub kernel_rel_tol: f64,
}

fn default_lambda() -> f64 {
    0.985
}
fn default_edi_window() -> usize {
    64
}
fn default_kernel_tol() -> f64 {
    1e-6
}

impl MetricsConfig {
    pub fn wants(&self, m: MetricKind) -> bool {
        self.list.contains(&m)
    }
}

/// A complete experiment description. Units are carried in key names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    /// Symbols per polarization and channel.
    pub symbols: usize,
    #[serde(default = "default_guard")]
    pub guard_symbols: usize,
    #[serde(default = "default_map")]
    pub map: MapKind,
    #[serde(default)]
    pub model: ChannelModel,
    /// Channel used for the SNR and NPN columns; defaults to the middle one.
    #[serde(default)]
    pub channel_of_interest: Option<usize>,
    /// Channels whose AIR is averaged; empty means all.
    #[serde(default)]
    pub air_channels: Vec<usize>,
    pub grid: WdmGrid,
    pub link: LinkSpec,
    #[serde(default)]
    pub laser: LaserSpec,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    pub shaping: ShapingConfig,
    pub cpr: CprConfig,
    pub power: PowerConfig,
    pub metrics: MetricsConfig,
}

fn default_guard() -> usize {
    256
}
fn default_map() -> MapKind {
    MapKind::Serial
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn coi(&self) -> usize {
        self.channel_of_interest.unwrap_or(self.grid.channels / 2)
    }

    pub fn air_channels(&self) -> Vec<usize> {
        if self.air_channels.is_empty() {
            (0..self.grid.channels).collect()
        } else {
            self.air_channels.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.link.validate()?;
        self.laser.validate()?;
        let alphabet = self.shaping.alphabet()?;
        if alphabet.label_bits().is_none() {
            return Err(Error::Config("alphabet size must be a power of two".into()));
        }
        if self.shaping.families.is_empty() || self.shaping.block_lengths.is_empty() {
            return Err(Error::Config("shaping sweep lists must be non-empty".into()));
        }
        for &n in &self.shaping.block_lengths {
            if n == 0 || n % 4 != 0 {
                return Err(Error::Config(format!("block length {n} must be a positive multiple of 4")));
            }
            self.shaping.realization(n)?;
            if self.symbols % n != 0 {
                return Err(Error::Config(format!(
                    "{} symbols are not a whole number of length-{n} DM groups",
                    self.symbols
                )));
            }
        }
        if self.cpr.variants().is_empty() {
            return Err(Error::Config("at least one CPR variant is required".into()));
        }
        for v in self.cpr.variants() {
            v.validate()?;
        }
        let axis = match self.model {
            ChannelModel::Ssfm => &self.power.launch_power_dbm,
            ChannelModel::Awgn => &self.power.es_n0_db,
        };
        if axis.is_empty() {
            return Err(Error::Config("power sweep list must be non-empty".into()));
        }
        if self.metrics.list.is_empty() {
            return Err(Error::Config("metric list must be non-empty".into()));
        }
        if 2 * self.guard_symbols >= self.symbols {
            return Err(Error::Config("guard symbols leave no interior".into()));
        }
        if self.air_channels().iter().any(|&c| c >= self.grid.channels) {
            return Err(Error::Config("AIR channel is outside the grid".into()));
        }
        if self.coi() >= self.grid.channels {
            return Err(Error::Config("channel of interest is outside the grid".into()));
        }
        if !(self.metrics.e_cpr > 0.0 && self.metrics.e_cpr <= 1.0) {
            return Err(Error::Config("e_cpr must lie in (0, 1]".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical TOML serialization.
    pub fn hash(&self) -> String {
        let text = self.to_toml().unwrap_or_default();
        hex(&Sha256::digest(text.as_bytes()))
    }

    /// Hash of the link, grid and kernel settings, used as the kernel cache
    /// key.
    pub fn kernel_key(&self) -> String {
        kernel_key(&self.link, &self.grid, self.metrics.kernel_memory, self.metrics.kernel_rel_tol)
    }

    /// The preset config named `name`.
    pub fn preset(name: &str) -> Result<Self> {
        let text = super::presets::text(name)
            .ok_or_else(|| Error::Config(format!("unknown preset {name}")))?;
        Self::from_toml(text)
    }

    /// The power axis of the configured model.
    pub fn power_axis(&self) -> &[f64] {
        match self.model {
            ChannelModel::Ssfm => &self.power.launch_power_dbm,
            ChannelModel::Awgn => &self.power.es_n0_db,
        }
    }
}

/// Cache key of the kernel coefficients for a link, grid and quadrature
/// setting.
pub fn kernel_key(link: &LinkSpec, grid: &WdmGrid, memory: Option<usize>, rel_tol: f64) -> String {
    #[derive(Serialize)]
    struct Key<'a> {
        link: &'a LinkSpec,
        grid: &'a WdmGrid,
        memory: Option<usize>,
        tol: f64,
    }
    let k = Key {
        link,
        grid,
        memory,
        tol: rel_tol,
    };
    hex(&Sha256::digest(toml::to_string(&k).unwrap_or_default().as_bytes()))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn cpr_label(spec: &CprSpec) -> String {
    match spec.kind {
        CprKind::Mpr => "mpr".into(),
        CprKind::Bps => format!("bps{}", spec.half_window),
    }
}

//! Shaping-and-metrics laboratory for probabilistic amplitude shaping over
//! nonlinear WDM fiber links.
//!
//! The crate is organised bottom-up:
//!
//! * [`shaping`]: distribution matchers (enumerative sphere shaping, shell
//!   mapping, constant-composition DM) and their rate/energy statistics.
//! * [`pas`]: amplitude-to-symbol maps, the QAM constellation and the
//!   bit-metric demapper.
//! * [`channel`]: RRC pulse shaping, WDM multiplexing, split-step Manakov
//!   propagation, amplifier and laser noise, EDC and DBP.
//! * [`cpr`]: mean phase rotation, blind phase search and supervised
//!   cycle-slip compensation.
//! * [`metrics`]: nonlinear phase noise metric, EDI/EEDI, bit-metric AIR,
//!   effective SNR and correlation statistics.
//! * [`harness`]: experiment configs, presets, sweeps and result emitters.

pub mod channel;
pub mod cpr;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod pas;
pub mod rng;
pub mod shaping;

pub use error::{Error, Result};

pub use num_bigint::BigUint;
pub use num_complex::Complex64;

pub use channel::{FiberSpan, LaserSpec, LinkSpec, WaveformGrid, WdmGrid};
pub use pas::{FourDSymbolFrame, MapKind, QamConstellation};
pub use shaping::{
    AmplitudeAlphabet, AmplitudeBlock, Composition, DistributionMatcher, DmKind, DmSpec, Matcher,
    ShellSupport, TrellisCounts,
};
pub use cpr::{CprKind, CprSpec};
pub use metrics::{AirEstimate, KernelCoefficients, NpnSpec, PhaseSeries};
pub use harness::{ExperimentConfig, ExperimentPoint};

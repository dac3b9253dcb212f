//! Performance and prediction metrics: the intensity phase model with its
//! interaction kernel, the CPR-aware NPN metric, EDI/EEDI, bit-metric AIR,
//! effective SNR and correlation.

mod air;
mod kernel;
mod npn;
mod quad;

pub use air::{
    air_bmd, air_contributions, batch_means, effective_snr_db, gain_and_noise, pearson, qam_entropy,
    AirEstimate, BATCHES, SNR_CAP_DB,
};
pub use kernel::{
    compute_coefficients, interaction_kernel, walk_off_memory, KernelCoefficients, KernelLink, KernelRow,
};
pub use npn::{
    default_efficiency, edi, eedi, eedi_depth, intensity, nominal_phase_rotation, npn_metric,
    npn_phase_series, phase_variance, NpnSpec, PhaseSeries,
};

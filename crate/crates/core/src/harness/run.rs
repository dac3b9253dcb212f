use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{cpr_label, kernel_key, ChannelModel, Compensation, DmFamily, ExperimentConfig, MetricKind};
use crate::channel::{
    apply_laser_phase_noise, db_to_lin, dbm_to_w, dbp_single_channel, edc, matched_filter, rrc_shape,
    sample_symbols, ssfm_propagate, wdm_demux, wdm_mux, LinkSpec, WaveformGrid, WdmGrid,
};
use crate::cpr::{recover, CprKind, CprSpec};
use crate::error::{Stage, StageExt};
use crate::metrics::{
    air_contributions, batch_means, edi, eedi, effective_snr_db, gain_and_noise, intensity, nominal_phase_rotation,
    npn_metric, npn_phase_series, qam_entropy, KernelCoefficients, KernelLink, NpnSpec,
};
use crate::pas::{demap_bit_metrics, map_blocks, symbol_bits, FourDSymbolFrame, MapKind, QamConstellation, SignSource};
use crate::rng::{stream, StreamId};
use crate::shaping::{emulate_long_block, entropy, random_index, AmplitudeAlphabet, AmplitudeBlock, DistributionMatcher, Matcher};
use crate::{Error, Result};

/// A metric cell: a value, an explicit failure, or not requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Metric {
    Value(f64),
    Failed,
    Skipped,
}

impl Metric {
    pub fn value(self) -> Option<f64> {
        match self {
            Metric::Value(v) => Some(v),
            _ => None,
        }
    }

    fn from_result(r: Result<f64>, name: &str, warnings: &mut Vec<String>) -> Self {
        match r {
            Ok(v) => Metric::Value(v),
            Err(e) => {
                warnings.push(format!("{name} failed: {e}"));
                Metric::Failed
            }
        }
    }
}

/// Result of one (DM, N, power, CPR) coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPoint {
    pub family: DmFamily,
    pub n: usize,
    pub map: MapKind,
    /// Launch power per channel in dBm (SSFM) or `E_s/N_0` in dB (AWGN).
    pub power_db: f64,
    pub cpr: String,
    pub n_cpr: usize,
    pub snr_db: Metric,
    /// Bits per symbol per polarization.
    pub air: Metric,
    pub air_half_width: Metric,
    pub npn: Metric,
    pub eedi: Metric,
    pub edi: Metric,
    /// Best power for this (DM, N, CPR) in the sweep.
    pub optimal: bool,
    pub runtime_s: f64,
    pub warnings: Vec<String>,
}

impl ExperimentPoint {
    fn failed(family: DmFamily, n: usize, map: MapKind, power_db: f64, cpr: &CprSpec, err: &Error) -> Self {
        ExperimentPoint {
            family,
            n,
            map,
            power_db,
            cpr: cpr_label(cpr),
            n_cpr: cpr.half_window,
            snr_db: Metric::Failed,
            air: Metric::Failed,
            air_half_width: Metric::Failed,
            npn: Metric::Failed,
            eedi: Metric::Failed,
            edi: Metric::Failed,
            optimal: false,
            runtime_s: 0.0,
            warnings: vec![err.to_string()],
        }
    }

    /// Sort key: coordinates in sweep order.
    pub(crate) fn key(&self) -> (DmFamily, usize, String, i64) {
        (self.family, self.n, self.cpr.clone(), (self.power_db * 1e6).round() as i64)
    }
}

/// Shared, read-only state of one experiment: matchers and kernel
/// coefficients are built once per config.
pub struct Context {
    pub config: ExperimentConfig,
    alphabet: AmplitudeAlphabet,
    matchers: BTreeMap<(DmFamily, usize), Arc<Matcher>>,
    kernel: Option<Arc<KernelCoefficients>>,
    pub warnings: Vec<String>,
}

impl Context {
    /// Builds every matcher and, when NPN is requested, the kernel
    /// coefficients (read from `cache_dir` when present).
    pub fn new(config: ExperimentConfig, cache_dir: Option<&Path>) -> Result<Self> {
        config.validate()?;
        let alphabet = config.shaping.alphabet()?;
        let mut keys = Vec::new();
        for &f in &config.shaping.families {
            for &n in &config.shaping.block_lengths {
                let (base, _) = config.shaping.realization(n)?;
                if !keys.contains(&(f, base)) {
                    keys.push((f, base));
                }
            }
        }
        let built: Result<Vec<_>> = keys
            .par_iter()
            .map(|&(f, base)| {
                let spec = f.spec(base, config.shaping.input_bits(base), &alphabet)?;
                Ok(((f, base), Arc::new(Matcher::new(&spec)?)))
            })
            .collect();
        let matchers = built.stage(Stage::Shaping)?.into_iter().collect();
        let mut warnings = Vec::new();
        let kernel = if config.metrics.wants(MetricKind::Npn) && config.model == ChannelModel::Ssfm {
            let k = load_kernel(&config, cache_dir).stage(Stage::Metrics)?;
            if k.residual_flagged() {
                warnings.push(format!(
                    "kernel imaginary residual {:.3e} of peak discarded",
                    k.imaginary_residual()
                ));
            }
            Some(Arc::new(k))
        } else {
            None
        };
        Ok(Context {
            config,
            alphabet,
            matchers,
            kernel,
            warnings,
        })
    }

    pub fn kernel(&self) -> Option<&KernelCoefficients> {
        self.kernel.as_deref()
    }

    fn matcher(&self, family: DmFamily, n: usize) -> Result<(&Matcher, usize)> {
        let (base, c) = self.config.shaping.realization(n)?;
        let m = self
            .matchers
            .get(&(family, base))
            .ok_or_else(|| Error::Config(format!("{} at N = {n} is not in the sweep", family.label())))?;
        Ok((m, c))
    }
}

/// Kernel coefficients for the config's link and grid, cached under
/// `cache_dir`.
pub fn load_kernel(config: &ExperimentConfig, cache_dir: Option<&Path>) -> Result<KernelCoefficients> {
    let m = &config.metrics;
    Ok(cached_kernel(&config.link, &config.grid, m.kernel_memory, m.kernel_rel_tol, cache_dir)?.0)
}

/// Kernel coefficients read from `cache_dir` when present, otherwise
/// computed and written there. The flag reports a cache hit.
pub fn cached_kernel(
    link: &LinkSpec,
    grid: &WdmGrid,
    memory: Option<usize>,
    rel_tol: f64,
    cache_dir: Option<&Path>,
) -> Result<(KernelCoefficients, bool)> {
    let file = cache_dir.map(|d| kernel_cache_file(d, link, grid, memory, rel_tol));
    if let Some(f) = &file {
        if f.exists() {
            log::info!("kernel cache hit {}", f.display());
            return Ok((KernelCoefficients::read_csv(fs::File::open(f)?)?, true));
        }
    }
    let k = KernelCoefficients::compute(link, grid, memory, rel_tol)?;
    if let Some(f) = &file {
        if let Some(d) = f.parent() {
            fs::create_dir_all(d)?;
        }
        k.write_csv(fs::File::create(f)?)?;
    }
    Ok((k, false))
}

pub fn kernel_cache_file(dir: &Path, link: &LinkSpec, grid: &WdmGrid, memory: Option<usize>, rel_tol: f64) -> PathBuf {
    let key = kernel_key(link, grid, memory, rel_tol);
    dir.join(format!("kernel-{}.csv", &key[..16]))
}

/// ASE-limited `E_s/N_0` (linear) of a channel launched at `power_w`, with
/// noise referred to the receiver.
pub fn ase_es_n0(link: &LinkSpec, grid: &WdmGrid, power_w: f64) -> f64 {
    let f = db_to_lin(link.noise_figure_db);
    let hv = link.photon_energy_j();
    let b = grid.baud_gbd * 1e9;
    let n = link.element_count();
    let noise: f64 = (0..n)
        .map(|j| {
            let g = db_to_lin(link.gain_db(j));
            let next = if j + 1 < n {
                link.cell[(j + 1) % link.cell.len()].launch_offset_db
            } else {
                0.0
            };
            ((f * g - 1.0).max(0.0)) * hv * b / db_to_lin(next)
        })
        .sum();
    if noise > 0.0 {
        power_w / noise
    } else {
        f64::INFINITY
    }
}

fn power_tag(p: f64) -> u64 {
    (p * 1e6).round() as i64 as u64
}

fn levels(frame: &FourDSymbolFrame) -> (Vec<(i32, i32)>, Vec<(i32, i32)>) {
    frame.symbols.iter().map(|s| ((s[0], s[1]), (s[2], s[3]))).unzip()
}

/// Transmitted 4D frame of channel `ch`.
pub fn transmit_frame(ctx: &Context, family: DmFamily, n: usize, ch: usize) -> Result<(FourDSymbolFrame, QamConstellation)> {
    let cfg = &ctx.config;
    let (matcher, concat) = ctx.matcher(family, n)?;
    let k = matcher.spec().k;
    let coord = [family.id(), n as u64, ch as u64];
    let mut inputs = stream(cfg.seed, &[&[StreamId::DmInput as u64][..], &coord].concat());
    let mut inter = stream(cfg.seed, &[&[StreamId::Interleaver as u64][..], &coord].concat());
    let mut signs = SignSource::from_rng(stream(cfg.seed, &[&[StreamId::Signs as u64][..], &coord].concat()));
    let count = 4 * cfg.symbols / n;
    let blocks: Vec<AmplitudeBlock> = (0..count)
        .map(|_| {
            if concat == 1 {
                matcher.encode(&random_index(&mut inputs, k))
            } else {
                let idx: Vec<_> = (0..concat).map(|_| random_index(&mut inputs, k)).collect();
                emulate_long_block(matcher, &idx, &mut inter)
            }
        })
        .collect::<Result<_>>()
        .stage(Stage::Shaping)?;
    let constellation =
        QamConstellation::new(ctx.alphabet.clone(), &matcher.amplitude_distribution()).stage(Stage::Mapping)?;
    let frames = blocks
        .chunks(4)
        .map(|g| map_blocks(cfg.map, g, &signs.take(4 * n), constellation.scale()))
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Mapping)?;
    let frame = FourDSymbolFrame::concat(&frames).stage(Stage::Mapping)?;
    Ok((frame, constellation))
}

struct Received {
    x: Vec<Complex64>,
    y: Vec<Complex64>,
}

fn gaussian(rng: &mut dyn RngCore, sigma: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * sigma
}

fn seeded(ctx: &Context, id: StreamId, family: DmFamily, n: usize, power: f64, ch: usize) -> rand_chacha::ChaCha8Rng {
    stream(
        ctx.config.seed,
        &[id as u64, family.id(), n as u64, power_tag(power), ch as u64],
    )
}

/// Symbol-rate AWGN with laser phase noise at the symbol period.
fn awgn_channel(ctx: &Context, frames: &[FourDSymbolFrame], family: DmFamily, n: usize, es_n0_db: f64) -> Result<Vec<Received>> {
    let cfg = &ctx.config;
    let sigma = (0.5 / db_to_lin(es_n0_db)).sqrt();
    let linewidth = cfg.laser.tx_linewidth_hz + cfg.laser.rx_linewidth_hz;
    frames
        .par_iter()
        .enumerate()
        .map(|(ch, f)| {
            let mut x = f.x();
            let mut y = f.y();
            let mut rng = seeded(ctx, StreamId::LaserTx, family, n, es_n0_db, ch);
            apply_laser_phase_noise(&mut x, &mut y, linewidth, cfg.grid.symbol_time_ps(), &mut rng)?;
            let mut rng = seeded(ctx, StreamId::Awgn, family, n, es_n0_db, ch);
            for v in x.iter_mut().chain(y.iter_mut()) {
                *v += gaussian(&mut rng, sigma);
            }
            Ok(Received { x, y })
        })
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Channel)
}

fn ssfm_channel(
    ctx: &Context,
    frames: &[FourDSymbolFrame],
    family: DmFamily,
    n: usize,
    power_dbm: f64,
    warnings: &mut Vec<String>,
) -> Result<Vec<Received>> {
    let cfg = &ctx.config;
    let grid = &cfg.grid;
    let p = dbm_to_w(power_dbm);
    let waves = frames
        .par_iter()
        .enumerate()
        .map(|(ch, f)| {
            let mut w = rrc_shape(&f.x(), &f.y(), grid, p)?;
            let mut rng = seeded(ctx, StreamId::LaserTx, family, n, power_dbm, ch);
            let period = w.sample_period_ps();
            apply_laser_phase_noise(&mut w.x, &mut w.y, cfg.laser.tx_linewidth_hz, period, &mut rng)?;
            Ok(w)
        })
        .collect::<Result<Vec<WaveformGrid>>>()
        .stage(Stage::Transmitter)?;
    let mux = wdm_mux(&waves, grid).stage(Stage::Transmitter)?;
    drop(waves);
    let mut ase = stream(cfg.seed, &[StreamId::Ase as u64, family.id(), n as u64, power_tag(power_dbm)]);
    let (out, report) = ssfm_propagate(mux, &cfg.link, Some(&mut ase)).stage(Stage::Channel)?;
    warnings.extend(report.warnings);
    let centers = grid.center_frequencies_thz(cfg.symbols);
    let amp = (p / 2.0).sqrt();
    (0..grid.channels)
        .into_par_iter()
        .map(|ch| {
            let mut w = wdm_demux(&out, grid, ch)?;
            let mut rng = seeded(ctx, StreamId::LaserRx, family, n, power_dbm, ch);
            let period = w.sample_period_ps();
            apply_laser_phase_noise(&mut w.x, &mut w.y, cfg.laser.rx_linewidth_hz, period, &mut rng)?;
            let w = match cfg.receiver.compensation {
                Compensation::Edc => edc(&w, &cfg.link, centers[ch]),
                Compensation::Dbp => {
                    dbp_single_channel(&w, &cfg.link, centers[ch], cfg.receiver.dbp_steps_per_span)?
                }
            };
            let sps = grid.rx_samples_per_symbol;
            let pick = |pol: &[Complex64]| -> Result<Vec<Complex64>> {
                let mf = matched_filter(pol, grid.rolloff, sps)?;
                Ok(sample_symbols(&mf, sps).into_iter().map(|v| v / amp).collect())
            };
            Ok(Received {
                x: pick(&w.x)?,
                y: pick(&w.y)?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage(Stage::Receiver)
}

/// One transmission at (DM, N, power), evaluated under every configured CPR
/// variant. Stage errors become failed points.
pub fn run_transmission(ctx: &Context, family: DmFamily, n: usize, power_db: f64) -> Vec<ExperimentPoint> {
    let start = Instant::now();
    let variants = ctx.config.cpr.variants();
    match transmission(ctx, family, n, power_db) {
        Ok(points) => {
            let share = start.elapsed().as_secs_f64() / points.len().max(1) as f64;
            points
                .into_iter()
                .map(|mut p| {
                    p.runtime_s += share;
                    p
                })
                .collect()
        }
        Err(e) => variants
            .iter()
            .map(|v| ExperimentPoint::failed(family, n, ctx.config.map, power_db, v, &e))
            .collect(),
    }
}

/// A single coordinate: the transmission at (DM, N, power) evaluated with
/// the `cpr`-th CPR variant.
pub fn run_point(ctx: &Context, family: DmFamily, n: usize, power_db: f64, cpr: usize) -> Result<ExperimentPoint> {
    let mut pts = run_transmission(ctx, family, n, power_db);
    if cpr >= pts.len() {
        return Err(Error::Config(format!("no CPR variant {cpr}")));
    }
    Ok(pts.swap_remove(cpr))
}

/// Transmitted frames and received, normalized symbols of every channel
/// before CPR.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub frames: Vec<FourDSymbolFrame>,
    /// Per channel: x and y symbols scaled to unit power per polarization.
    pub received: Vec<[Vec<Complex64>; 2]>,
    pub constellation: QamConstellation,
    pub warnings: Vec<String>,
}

/// TX, channel and RX front end at (DM, N, power).
pub fn simulate(ctx: &Context, family: DmFamily, n: usize, power_db: f64) -> Result<Simulation> {
    let cfg = &ctx.config;
    let tx: Vec<(FourDSymbolFrame, QamConstellation)> = (0..cfg.grid.channels)
        .into_par_iter()
        .map(|ch| transmit_frame(ctx, family, n, ch))
        .collect::<Result<_>>()?;
    let constellation = tx[0].1.clone();
    let frames: Vec<FourDSymbolFrame> = tx.into_iter().map(|(f, _)| f).collect();
    let mut warnings = Vec::new();
    let rx = match cfg.model {
        ChannelModel::Awgn => awgn_channel(ctx, &frames, family, n, power_db)?,
        ChannelModel::Ssfm => ssfm_channel(ctx, &frames, family, n, power_db, &mut warnings)?,
    };
    Ok(Simulation {
        frames,
        received: rx.into_iter().map(|r| [r.x, r.y]).collect(),
        constellation,
        warnings,
    })
}

fn transmission(ctx: &Context, family: DmFamily, n: usize, power_db: f64) -> Result<Vec<ExperimentPoint>> {
    let cfg = &ctx.config;
    let Simulation {
        frames,
        received: rx,
        constellation,
        mut warnings,
    } = simulate(ctx, family, n, power_db)?;
    let (matcher, _) = ctx.matcher(family, n)?;
    let probs = matcher.amplitude_distribution();
    let spec = matcher.spec();
    let rate_term = 2.0 * (entropy(&probs) - spec.k as f64 / spec.n as f64);

    let coi = cfg.coi();
    let m = &cfg.metrics;
    let (eedi_v, edi_v) = {
        let mut w = Vec::new();
        let x = frames[coi].x();
        let y = frames[coi].y();
        let e = m.wants(MetricKind::Eedi).then(|| {
            Metric::from_result(
                eedi(&x, m.eedi_lambda).and_then(|a| Ok(0.5 * (a + eedi(&y, m.eedi_lambda)?))),
                "eedi",
                &mut w,
            )
        });
        let d = m.wants(MetricKind::Edi).then(|| {
            Metric::from_result(
                edi(&x, m.edi_window).and_then(|a| Ok(0.5 * (a + edi(&y, m.edi_window)?))),
                "edi",
                &mut w,
            )
        });
        warnings.extend(w);
        (e.unwrap_or(Metric::Skipped), d.unwrap_or(Metric::Skipped))
    };

    let npn_base = if m.wants(MetricKind::Npn) {
        Some(npn_inputs(ctx, &frames, power_db))
    } else {
        None
    };

    let guard = cfg.guard_symbols;
    let keep = guard..cfg.symbols - guard;
    let lv: Vec<_> = frames.iter().map(levels).collect();

    cfg.cpr
        .variants()
        .par_iter()
        .map(|variant| {
            let t0 = Instant::now();
            let mut w = warnings.clone();
            let label = cpr_label(variant);
            // Corrected, guard-trimmed streams per channel and polarization.
            let streams: Vec<[(Vec<Complex64>, Vec<Complex64>); 2]> = frames
                .par_iter()
                .zip(&rx)
                .map(|(f, r)| {
                    let fx = f.x();
                    let fy = f.y();
                    let cx = recover(&r[0], &fx, &constellation, variant)?;
                    let cy = recover(&r[1], &fy, &constellation, variant)?;
                    Ok([
                        (cx[keep.clone()].to_vec(), fx[keep.clone()].to_vec()),
                        (cy[keep.clone()].to_vec(), fy[keep.clone()].to_vec()),
                    ])
                })
                .collect::<Result<_>>()
                .stage(Stage::Cpr)?;

            let snr = if m.wants(MetricKind::Snr) {
                let (r, t): (Vec<Complex64>, Vec<Complex64>) = streams[coi]
                    .iter()
                    .flat_map(|(r, t)| r.iter().copied().zip(t.iter().copied()))
                    .unzip();
                Metric::from_result(effective_snr_db(&r, &t), "snr", &mut w)
            } else {
                Metric::Skipped
            };

            let (air, hw) = if m.wants(MetricKind::Air) {
                let res = air_streams(&cfg.air_channels(), &streams, &lv, &keep, &constellation, &probs)
                    .and_then(|v| batch_means(&v))
                    .stage(Stage::Metrics);
                match res {
                    Ok(e) => (Metric::Value(e.value - rate_term), Metric::Value(e.half_width)),
                    Err(e) => {
                        w.push(format!("air failed: {e}"));
                        (Metric::Failed, Metric::Failed)
                    }
                }
            } else {
                (Metric::Skipped, Metric::Skipped)
            };

            let npn = match &npn_base {
                None => Metric::Skipped,
                Some(Err(e)) => {
                    w.push(format!("npn failed: {e}"));
                    Metric::Failed
                }
                Some(Ok((series, spec))) => {
                    let n_cpr = match variant.kind {
                        CprKind::Mpr => cfg.symbols,
                        CprKind::Bps => variant.half_window,
                    };
                    let spec = NpnSpec { n_cpr, ..spec.clone() };
                    Metric::from_result(npn_metric(series, &spec), "npn", &mut w)
                }
            };

            Ok(ExperimentPoint {
                family,
                n,
                map: cfg.map,
                power_db,
                cpr: label,
                n_cpr: variant.half_window,
                snr_db: snr,
                air,
                air_half_width: hw,
                npn,
                eedi: eedi_v,
                edi: edi_v,
                optimal: false,
                runtime_s: t0.elapsed().as_secs_f64(),
                warnings: w,
            })
        })
        .collect()
}

/// Per-time-index AIR contributions averaged over the selected channels and
/// both polarizations.
fn air_streams(
    channels: &[usize],
    streams: &[[(Vec<Complex64>, Vec<Complex64>); 2]],
    lv: &[(Vec<(i32, i32)>, Vec<(i32, i32)>)],
    keep: &std::ops::Range<usize>,
    constellation: &QamConstellation,
    probs: &[f64],
) -> Result<Vec<f64>> {
    let h = qam_entropy(probs);
    let bps = 2 * constellation.bits_per_dim() as usize;
    let per: Vec<Vec<f64>> = channels
        .par_iter()
        .flat_map_iter(|&c| (0..2).map(move |p| (c, p)))
        .map(|(c, p)| {
            let (r, t) = &streams[c][p];
            let (g, var) = gain_and_noise(r, t)?;
            let scaled: Vec<Complex64> = r.iter().map(|v| v / g).collect();
            let llrs = demap_bit_metrics(&scaled, var, constellation, probs)?;
            let levels = if p == 0 { &lv[c].0 } else { &lv[c].1 };
            let bits = symbol_bits(constellation, &levels[keep.clone()])?;
            air_contributions(&llrs, &bits, bps, h)
        })
        .collect::<Result<_>>()?;
    let len = per[0].len();
    let s = per.len() as f64;
    Ok((0..len).map(|k| per.iter().map(|v| v[k]).sum::<f64>() / s).collect())
}

/// NPN phase series of the channel of interest and the spec without its CPR
/// window.
fn npn_inputs(
    ctx: &Context,
    frames: &[FourDSymbolFrame],
    power_db: f64,
) -> Result<(crate::metrics::PhaseSeries, NpnSpec)> {
    let cfg = &ctx.config;
    let kernel = ctx
        .kernel()
        .ok_or_else(|| Error::Config("NPN needs the SSFM model".into()))?;
    let link = KernelLink::from_link(&cfg.link)?;
    let gamma = cfg.link.cell[0].gamma_per_w_km;
    let p = dbm_to_w(power_db);
    let coi = cfg.coi();
    let phi_bar: Vec<f64> = (0..cfg.grid.channels)
        .map(|l| nominal_phase_rotation(coi, l, &link, gamma, 0.5 * p))
        .collect();
    let intensities = frames
        .iter()
        .map(|f| intensity(&f.x(), &f.y()))
        .collect::<Result<Vec<_>>>()?;
    let series = npn_phase_series(&intensities, kernel, coi, &phi_bar)?;
    let es_n0 = match cfg.metrics.npn_es_n0_db {
        Some(db) => db_to_lin(db),
        None => ase_es_n0(&cfg.link, &cfg.grid, p),
    };
    let spec = NpnSpec {
        channel: coi,
        channels: cfg.grid.channels,
        n_cpr: 0,
        es_n0,
        e_cpr: cfg.metrics.e_cpr,
        phi_bar,
    };
    Ok((series, spec))
}

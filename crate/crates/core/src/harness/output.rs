use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{DmFamily, ExperimentConfig};
use super::run::{ExperimentPoint, Metric};
use crate::pas::MapKind;
use crate::{Error, Result};

pub const COORDINATE_COLUMNS: [&str; 6] = ["family", "n", "map", "power_db", "cpr", "n_cpr"];
pub const RESULT_COLUMNS: [&str; 9] = [
    "snr_db",
    "air",
    "air_half_width",
    "npn",
    "eedi",
    "edi",
    "optimal",
    "runtime_s",
    "warnings",
];

fn cell(m: Metric) -> String {
    match m {
        Metric::Value(v) => v.to_string(),
        Metric::Failed => "failed".into(),
        Metric::Skipped => String::new(),
    }
}

fn parse_cell(s: &str) -> Result<Metric> {
    Ok(match s {
        "" => Metric::Skipped,
        "failed" => Metric::Failed,
        v => Metric::Value(v.parse().map_err(|e| Error::Parse(format!("{v}: {e}")))?),
    })
}

fn map_label(m: MapKind) -> &'static str {
    match m {
        MapKind::Serial => "serial",
        MapKind::Parallel => "parallel",
    }
}

pub fn write_csv<W: Write>(points: &[ExperimentPoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(COORDINATE_COLUMNS.iter().chain(&RESULT_COLUMNS))?;
    for p in points {
        wr.write_record([
            p.family.label().to_string(),
            p.n.to_string(),
            map_label(p.map).into(),
            p.power_db.to_string(),
            p.cpr.clone(),
            p.n_cpr.to_string(),
            cell(p.snr_db),
            cell(p.air),
            cell(p.air_half_width),
            cell(p.npn),
            cell(p.eedi),
            cell(p.edi),
            p.optimal.to_string(),
            p.runtime_s.to_string(),
            p.warnings.join(" | "),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<ExperimentPoint>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<&str> = COORDINATE_COLUMNS.iter().chain(&RESULT_COLUMNS).copied().collect();
    if header != expected {
        return Err(Error::Parse("unexpected result columns".into()));
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|e| Error::Parse(format!("{s}: {e}"))) };
    let int = |s: &str| -> Result<usize> { s.parse().map_err(|e| Error::Parse(format!("{s}: {e}"))) };
    rd.records()
        .map(|rec| {
            let r = rec?;
            let g = |i: usize| r.get(i).unwrap_or("");
            Ok(ExperimentPoint {
                family: DmFamily::parse(g(0))?,
                n: int(g(1))?,
                map: match g(2) {
                    "serial" => MapKind::Serial,
                    "parallel" => MapKind::Parallel,
                    m => return Err(Error::Parse(format!("unknown map {m}"))),
                },
                power_db: num(g(3))?,
                cpr: g(4).to_string(),
                n_cpr: int(g(5))?,
                snr_db: parse_cell(g(6))?,
                air: parse_cell(g(7))?,
                air_half_width: parse_cell(g(8))?,
                npn: parse_cell(g(9))?,
                eedi: parse_cell(g(10))?,
                edi: parse_cell(g(11))?,
                optimal: g(12) == "true",
                runtime_s: num(g(13))?,
                warnings: if g(14).is_empty() {
                    Vec::new()
                } else {
                    g(14).split(" | ").map(str::to_string).collect()
                },
            })
        })
        .collect()
}

/// Heat-map rows `family,n,cpr,n_cpr,metric,value` for the optimal-power
/// points.
pub fn write_long<W: Write>(points: &[ExperimentPoint], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["family", "n", "cpr", "n_cpr", "metric", "value"])?;
    for p in points.iter().filter(|p| p.optimal) {
        for (name, m) in [
            ("snr_db", p.snr_db),
            ("air", p.air),
            ("npn", p.npn),
            ("eedi", p.eedi),
            ("edi", p.edi),
        ] {
            if let Metric::Value(v) = m {
                wr.write_record([
                    p.family.label().to_string(),
                    p.n.to_string(),
                    p.cpr.clone(),
                    p.n_cpr.to_string(),
                    name.into(),
                    v.to_string(),
                ])?;
            }
        }
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub name: String,
    pub config_hash: String,
    pub kernel_key: String,
    pub seed: u64,
    pub version: String,
    pub points: usize,
    pub failed_points: usize,
    pub columns: Vec<String>,
}

impl Manifest {
    pub fn new(config: &ExperimentConfig, points: &[ExperimentPoint]) -> Self {
        Manifest {
            name: config.name.clone(),
            config_hash: config.hash(),
            kernel_key: config.kernel_key(),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            points: points.len(),
            failed_points: points.iter().filter(|p| p.air == Metric::Failed).count(),
            columns: COORDINATE_COLUMNS
                .iter()
                .chain(&RESULT_COLUMNS)
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

/// Writes `<name>.csv`, `<name>.long.csv`, `<name>.manifest.json` and the
/// resolved `<name>.toml` into `dir`. Returns the CSV path.
pub fn emit_results(config: &ExperimentConfig, points: &[ExperimentPoint], dir: &Path) -> Result<PathBuf> {
    if points.is_empty() {
        return Err(Error::Config("no points to emit".into()));
    }
    fs::create_dir_all(dir)?;
    let base = dir.join(&config.name);
    let csv_path = base.with_extension("csv");
    write_csv(points, fs::File::create(&csv_path)?)?;
    write_long(points, fs::File::create(base.with_extension("long.csv"))?)?;
    let manifest = serde_json::to_string_pretty(&Manifest::new(config, points))
        .map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(base.with_extension("manifest.json"), manifest)?;
    fs::write(base.with_extension("toml"), config.to_toml()?)?;
    Ok(csv_path)
}

fn fmt_metric(m: Metric) -> String {
    match m {
        Metric::Value(v) => format!("{v:.4}"),
        Metric::Failed => "failed".into(),
        Metric::Skipped => "-".into(),
    }
}

/// Plain-text table of the optimal-power points.
pub fn summarize(points: &[ExperimentPoint]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<7} {:>6} {:<7} {:>8} {:>9} {:>9} {:>8} {:>11} {:>9}",
        "family", "N", "cpr", "power", "snr_db", "air", "±", "npn", "eedi"
    );
    let mut groups: BTreeMap<(DmFamily, String), Vec<&ExperimentPoint>> = BTreeMap::new();
    for p in points.iter().filter(|p| p.optimal) {
        groups.entry((p.family, p.cpr.clone())).or_default().push(p);
    }
    for ps in groups.values() {
        for p in ps {
            let _ = writeln!(
                out,
                "{:<7} {:>6} {:<7} {:>8.2} {:>9} {:>9} {:>8} {:>11} {:>9}",
                p.family.label(),
                p.n,
                p.cpr,
                p.power_db,
                fmt_metric(p.snr_db),
                fmt_metric(p.air),
                fmt_metric(p.air_half_width),
                fmt_metric(p.npn),
                fmt_metric(p.eedi),
            );
        }
    }
    let failed = points.iter().filter(|p| !p.warnings.is_empty()).count();
    if failed > 0 {
        let _ = writeln!(out, "{failed} points carry warnings");
    }
    out
}

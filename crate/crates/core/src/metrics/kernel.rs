//! Interaction kernel `K(μ, ν)` of a dispersion-unmanaged link and the
//! memory coefficients `C_n[m]` of the intensity phase model.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quad::{integrate, integrate_vec};
use crate::channel::{LinkSpec, WdmGrid};
use crate::{Error, Result};

/// Parameters of `N_s` identical spans with ideal end-of-link dispersion
/// compensation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelLink {
    /// Field attenuation is `α/2`; this is the power attenuation in 1/km.
    pub alpha_per_km: f64,
    pub beta2_ps2_per_km: f64,
    pub span_km: f64,
    pub spans: usize,
}

impl KernelLink {
    pub fn from_link(link: &LinkSpec) -> Result<Self> {
        let (span, spans) = link.identical_spans().ok_or_else(|| {
            Error::UnsupportedLink(
                "the interaction kernel needs identical spans; dispersion-managed links are not covered".into(),
            )
        })?;
        Ok(KernelLink {
            alpha_per_km: span.alpha_per_km(),
            beta2_ps2_per_km: span.beta2_ps2_per_km,
            span_km: span.length_km,
            spans,
        })
    }

    pub fn effective_length_km(&self) -> f64 {
        crate::channel::effective_length(self.alpha_per_km, self.span_km)
    }

    /// `K` as a function of `Ω = 4π²β₂ν(ν−μ)` in 1/km.
    pub fn kernel_at(&self, omega: f64) -> Complex64 {
        let l = self.span_km;
        let z = Complex64::new(-self.alpha_per_km, omega);
        let zl = z * l;
        let first = if zl.norm() < 1e-3 {
            l * (1.0 + zl / 2.0 + zl * zl / 6.0 + zl * zl * zl / 24.0)
        } else {
            let (a, b) = (zl.re, zl.im);
            let half = (0.5 * b).sin();
            let em1 = Complex64::new(
                a.exp_m1() * b.cos() - 2.0 * half * half,
                a.exp() * b.sin(),
            );
            em1 / z
        };
        let step = Complex64::from_polar(1.0, omega * l);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..self.spans {
            acc += p;
            p *= step;
        }
        first / self.effective_length_km() * acc / self.spans as f64
    }

    pub fn interaction(&self, mu_thz: f64, nu_thz: f64) -> Complex64 {
        self.kernel_at(omega(self.beta2_ps2_per_km, mu_thz, nu_thz))
    }
}

fn omega(beta2: f64, mu: f64, nu: f64) -> f64 {
    4.0 * PI * PI * beta2 * nu * (nu - mu)
}

/// `K(μ, ν)` for frequencies in THz. Errors on links without identical spans.
pub fn interaction_kernel(mu_thz: f64, nu_thz: f64, link: &LinkSpec) -> Result<Complex64> {
    Ok(KernelLink::from_link(link)?.interaction(mu_thz, nu_thz))
}

/// Walk-off memory rule `N_c = ⌈|β₂|·2π·Δf·N_s·L_s / T⌉ + 4`, with `Δf`
/// the largest channel separation (at least `1/T`).
pub fn walk_off_memory(link: &KernelLink, grid: &WdmGrid) -> usize {
    let t = grid.symbol_time_ps();
    let df = ((grid.channels.max(1) - 1) as f64 * grid.spacing_ghz * 1e-3).max(1.0 / t);
    let total = link.spans as f64 * link.span_km;
    (link.beta2_ps2_per_km.abs() * 2.0 * PI * df * total / t).ceil() as usize + 4
}

/// One row `C_n[−N_c..=N_c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub n: i64,
    /// Real parts, index `m + N_c`.
    pub c: Vec<f64>,
    /// Discarded imaginary parts, same indexing.
    pub imag: Vec<f64>,
    /// Quadrature error estimate on the coefficient scale.
    pub error: f64,
}

/// Band-integrated coefficients for channel offsets `|n| < M`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCoefficients {
    pub symbol_time_ps: f64,
    pub spacing_ghz: f64,
    pub n_c: usize,
    pub rows: BTreeMap<i64, KernelRow>,
}

const MAX_OUTER: usize = 40_000;
const MAX_INNER: usize = 4_000;

/// Computes `C_n[m] = T²∬ K(μ,ν) e^{−j2π(μ−ν)mT} dμ dν` over the band of
/// width `1/T` centred on `n·Δf`, for all `|m| ≤ N_c`.
///
/// With `Δ = μ − ν` the integral becomes an outer integral over `Δ` of the
/// inner band integral of `K(ν+Δ, ν)`; the outer integrand is vector-valued
/// over `m`. Both levels are adaptive Gauss–Kronrod with breaks at `Δ = 0`
/// and `ν = 0`, where the kernel's removable singularities sit.
pub fn compute_coefficients(
    link: &KernelLink,
    symbol_time_ps: f64,
    spacing_ghz: f64,
    n_c: usize,
    n: i64,
    rel_tol: f64,
) -> Result<KernelRow> {
    if !(symbol_time_ps > 0.0) {
        return Err(Error::Config("symbol time must be positive".into()));
    }
    let t = symbol_time_ps;
    let w = 1.0 / t;
    let center = n as f64 * spacing_ghz * 1e-3;
    let (a, b) = (center - 0.5 * w, center + 0.5 * w);
    let dim = 2 * n_c + 1;
    let inner_tol = 1e-12 * w;
    let mut inner_ok = true;

    let mut run = |abs_tol: f64| {
        let mut h = |d: f64| -> Complex64 {
            let lo = a.max(a - d);
            let hi = b.min(b - d);
            if hi <= lo {
                return Complex64::new(0.0, 0.0);
            }
            let mut breaks = vec![lo];
            if lo < 0.0 && hi > 0.0 {
                breaks.push(0.0);
            }
            breaks.push(hi);
            let (v, _, ok) = integrate(|nu| link.interaction(nu + d, nu), &breaks, inner_tol, MAX_INNER);
            inner_ok &= ok;
            v
        };
        integrate_vec(
            |d, out| {
                let hv = h(d) * (t * t);
                let base = Complex64::from_polar(1.0, -2.0 * PI * d * t);
                let mut e = Complex64::from_polar(1.0, 2.0 * PI * d * t * n_c as f64);
                for o in out.iter_mut() {
                    *o = hv * e;
                    e *= base;
                }
            },
            &[-w, 0.0, w],
            dim,
            abs_tol,
            MAX_OUTER,
        )
    };
    let first = run(1e-8);
    let peak = first.value.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let want = rel_tol * peak.max(f64::MIN_POSITIVE);
    let result = if first.error > want && first.converged {
        run(want)
    } else {
        first
    };
    if !result.converged || result.error > want || !inner_ok {
        return Err(Error::Accuracy {
            achieved: result.error / peak.max(f64::MIN_POSITIVE),
            requested: rel_tol,
        });
    }
    Ok(KernelRow {
        n,
        c: result.value.iter().map(|c| c.re).collect(),
        imag: result.value.iter().map(|c| c.im).collect(),
        error: result.error,
    })
}

impl KernelCoefficients {
    /// Rows for every offset `|n| < grid.channels`, computed in parallel.
    pub fn compute(link: &LinkSpec, grid: &WdmGrid, n_c: Option<usize>, rel_tol: f64) -> Result<Self> {
        let kl = KernelLink::from_link(link)?;
        let n_c = n_c.unwrap_or_else(|| walk_off_memory(&kl, grid));
        let m = grid.channels as i64;
        let t = grid.symbol_time_ps();
        let rows: Result<Vec<KernelRow>> = (-(m - 1)..m)
            .into_par_iter()
            .map(|n| compute_coefficients(&kl, t, grid.spacing_ghz, n_c, n, rel_tol))
            .collect();
        Ok(KernelCoefficients {
            symbol_time_ps: t,
            spacing_ghz: grid.spacing_ghz,
            n_c,
            rows: rows?.into_iter().map(|r| (r.n, r)).collect(),
        })
    }

    /// Memoryless coefficients `C_n[m] = δ[m]`.
    pub fn memoryless(channels: usize, symbol_time_ps: f64, spacing_ghz: f64) -> Self {
        let m = channels as i64;
        let rows = (-(m - 1)..m)
            .map(|n| {
                (
                    n,
                    KernelRow {
                        n,
                        c: vec![1.0],
                        imag: vec![0.0],
                        error: 0.0,
                    },
                )
            })
            .collect();
        KernelCoefficients {
            symbol_time_ps,
            spacing_ghz,
            n_c: 0,
            rows,
        }
    }

    /// `C_n[m]`, zero outside the stored memory.
    pub fn get(&self, n: i64, m: i64) -> f64 {
        if m.unsigned_abs() as usize > self.n_c {
            return 0.0;
        }
        self.rows
            .get(&n)
            .map(|r| r.c[(m + self.n_c as i64) as usize])
            .unwrap_or(0.0)
    }

    pub fn row(&self, n: i64) -> Option<&[f64]> {
        self.rows.get(&n).map(|r| r.c.as_slice())
    }

    pub fn peak(&self) -> f64 {
        self.rows
            .values()
            .flat_map(|r| r.c.iter().zip(&r.imag).map(|(a, b)| a.hypot(*b)))
            .fold(0.0, f64::max)
    }

    /// Largest discarded imaginary part relative to the peak magnitude.
    pub fn imaginary_residual(&self) -> f64 {
        let im = self
            .rows
            .values()
            .flat_map(|r| r.imag.iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        im / self.peak().max(f64::MIN_POSITIVE)
    }

    /// True when the imaginary residual exceeds `1e−6` of the peak.
    pub fn residual_flagged(&self) -> bool {
        self.imaginary_residual() > 1e-6
    }

    /// CSV with a `#` metadata line, then columns `n,m,c,imag`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# symbol_time_ps={:e} spacing_ghz={:e} n_c={}",
            self.symbol_time_ps, self.spacing_ghz, self.n_c
        )?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["n", "m", "c", "imag"])?;
        for r in self.rows.values() {
            for (i, (c, im)) in r.c.iter().zip(&r.imag).enumerate() {
                let m = i as i64 - self.n_c as i64;
                wr.write_record([r.n.to_string(), m.to_string(), format!("{c:e}"), format!("{im:e}")])?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text)?;
        let meta = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Parse("kernel CSV lacks its metadata line".into()))?;
        let mut t = None;
        let mut sp = None;
        let mut n_c = None;
        for kv in meta.split_whitespace() {
            match kv.split_once('=') {
                Some(("symbol_time_ps", v)) => t = v.parse::<f64>().ok(),
                Some(("spacing_ghz", v)) => sp = v.parse::<f64>().ok(),
                Some(("n_c", v)) => n_c = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let (t, sp, n_c) = match (t, sp, n_c) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(Error::Parse(format!("bad kernel metadata: {meta}"))),
        };
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows: BTreeMap<i64, KernelRow> = BTreeMap::new();
        for rec in rd.deserialize() {
            let (n, m, c, im): (i64, i64, f64, f64) = rec?;
            if m.unsigned_abs() as usize > n_c {
                return Err(Error::Parse(format!("memory index {m} beyond n_c = {n_c}")));
            }
            let row = rows.entry(n).or_insert_with(|| KernelRow {
                n,
                c: vec![0.0; 2 * n_c + 1],
                imag: vec![0.0; 2 * n_c + 1],
                error: 0.0,
            });
            let i = (m + n_c as i64) as usize;
            row.c[i] = c;
            row.imag[i] = im;
        }
        Ok(KernelCoefficients {
            symbol_time_ps: t,
            spacing_ghz: sp,
            n_c,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smf(spans: usize) -> KernelLink {
        KernelLink::from_link(&LinkSpec::smf(spans, 80.0).unwrap()).unwrap()
    }

    #[test]
    fn kernel_limits() {
        let k = smf(15);
        assert!((k.kernel_at(0.0) - 1.0).norm() < 1e-12);
        assert!((k.interaction(0.01, 0.01) - 1.0).norm() < 1e-12);
        assert!((k.interaction(0.02, 0.0) - 1.0).norm() < 1e-12);
        let flat = KernelLink {
            beta2_ps2_per_km: 0.0,
            ..k
        };
        assert!((flat.interaction(0.03, -0.05) - 1.0).norm() < 1e-12);
        // Near the removable points the series and closed forms agree.
        let a = k.kernel_at(1e-9);
        let b = k.kernel_at(-1e-9);
        assert!((a - 1.0).norm() < 1e-6 && (b - 1.0).norm() < 1e-6);
        // Resonance of the span sum: ΩL = 2π.
        let res = k.kernel_at(2.0 * PI / 80.0);
        let near = k.kernel_at(2.0 * PI / 80.0 * (1.0 + 1e-9));
        assert!((res - near).norm() < 1e-6);
    }

    #[test]
    fn memoryless_without_dispersion() {
        let k = KernelLink {
            beta2_ps2_per_km: 0.0,
            ..smf(4)
        };
        let row = compute_coefficients(&k, 24.0, 75.0, 5, 1, 1e-6).unwrap();
        for (i, c) in row.c.iter().enumerate() {
            let want = if i == 5 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-6, "m={} c={}", i as i64 - 5, c);
        }
    }

    #[test]
    fn csv_round_trip() {
        let k = KernelLink {
            beta2_ps2_per_km: -21.7,
            ..smf(1)
        };
        let row = compute_coefficients(&k, 24.0, 75.0, 3, 0, 1e-6).unwrap();
        let mut kc = KernelCoefficients::memoryless(1, 24.0, 75.0);
        kc.n_c = 3;
        kc.rows.insert(0, row);
        let mut buf = Vec::new();
        kc.write_csv(&mut buf).unwrap();
        let back = KernelCoefficients::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.n_c, 3);
        assert_eq!(back.rows[&0].c, kc.rows[&0].c);
        assert_eq!(back.rows[&0].imag, kc.rows[&0].imag);
    }
}

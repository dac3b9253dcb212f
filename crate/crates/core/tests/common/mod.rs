//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use shapelab::metrics::{air_bmd, gain_and_noise};
use shapelab::pas::{demap_bit_metrics, symbol_bits};
use shapelab::{AmplitudeAlphabet, QamConstellation};

/// All length-`n` index sequences over `a` letters in lexicographic order.
pub fn lex_sequences(a: usize, n: usize) -> Vec<Vec<usize>> {
    let total = a.pow(n as u32);
    (0..total)
        .map(|mut v| {
            let mut s = vec![0; n];
            for slot in s.iter_mut().rev() {
                *slot = v % a;
                v /= a;
            }
            s
        })
        .collect()
}

pub fn energy(levels: &[u32], seq: &[usize]) -> u64 {
    seq.iter().map(|&i| (levels[i] as u64).pow(2)).sum()
}

/// First `2^k` sequences, in lexicographic order, whose energy is one of
/// `admitted`.
pub fn lex_image(levels: &[u32], n: usize, k: u32, admitted: &[u64]) -> Vec<Vec<u32>> {
    lex_sequences(levels.len(), n)
        .into_iter()
        .filter(|s| admitted.contains(&energy(levels, s)))
        .take(1 << k)
        .map(|s| s.iter().map(|&i| levels[i]).collect())
        .collect()
}

/// Smallest `E_max` whose sphere holds at least `2^k` sequences, by brute
/// force.
pub fn brute_sphere_energy(levels: &[u32], n: usize, k: u32) -> u64 {
    let mut e: Vec<u64> = lex_sequences(levels.len(), n).iter().map(|s| energy(levels, s)).collect();
    e.sort_unstable();
    e[(1usize << k) - 1]
}

/// Gauss–Hermite nodes and weights for `∫ e^{−t²} f(t) dt`, by Newton
/// iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = z * (2.0 / j as f64).sqrt() * p2 - ((j as f64 - 1.0) / j as f64).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Bit-metric GMI per complex symbol of square QAM with per-dimension PAM
/// points `ask` (most negative first), reflected-binary labels and point
/// priors `prior`, over complex AWGN of total variance `noise_var`.
pub fn bmd_gmi(ask: &[f64], prior: &[f64], noise_var: f64) -> f64 {
    let (t, wt) = gauss_hermite(64);
    let bits = (ask.len() as f64).log2().round() as u32;
    let labels: Vec<u32> = (0..ask.len() as u32).map(|p| p ^ (p >> 1)).collect();
    let sigma = noise_var.sqrt();
    let h: f64 = prior.iter().filter(|&&p| p > 0.0).map(|p| -p * p.log2()).sum();
    let mut loss = 0.0;
    for (xi, (&x, &px)) in ask.iter().zip(prior).enumerate() {
        if px == 0.0 {
            continue;
        }
        for (&ti, &wi) in t.iter().zip(&wt) {
            let y = x + sigma * ti;
            let lik: Vec<f64> = ask
                .iter()
                .zip(prior)
                .map(|(&s, &p)| p * (-(y - s) * (y - s) / noise_var + (y - x) * (y - x) / noise_var).exp())
                .collect();
            let all: f64 = lik.iter().sum();
            for b in 0..bits {
                let mine = (labels[xi] >> b) & 1;
                let same: f64 = lik
                    .iter()
                    .zip(&labels)
                    .filter(|(_, &l)| (l >> b) & 1 == mine)
                    .map(|(v, _)| v)
                    .sum();
                loss += px * wi / PI.sqrt() * (all / same).log2();
            }
        }
    }
    2.0 * (h - loss)
}

/// Unit-energy PAM points and priors of a square `4^b`-QAM with amplitude
/// levels `1, 3, …` and amplitude probabilities `amp`.
pub fn pam(amp: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let a = amp.len();
    let e: f64 = amp.iter().enumerate().map(|(i, p)| p * ((2 * i + 1) as f64).powi(2)).sum();
    let s = 1.0 / (2.0 * e).sqrt();
    let mut pts = Vec::new();
    let mut pr = Vec::new();
    for i in (0..a).rev() {
        pts.push(-((2 * i + 1) as f64) * s);
        pr.push(0.5 * amp[i]);
    }
    for (i, &p) in amp.iter().enumerate() {
        pts.push((2 * i + 1) as f64 * s);
        pr.push(0.5 * p);
    }
    (pts, pr)
}

const GL10: [(f64, f64); 5] = [
    (0.148_874_338_981_631_21, 0.295_524_224_714_752_87),
    (0.433_395_394_129_247_19, 0.269_266_719_309_996_36),
    (0.679_409_568_299_024_41, 0.219_086_362_515_982_04),
    (0.865_063_366_688_984_51, 0.149_451_349_150_580_59),
    (0.973_906_528_517_171_72, 0.066_671_344_308_688_14),
];

/// Composite 10-point Gauss–Legendre over `[a, b]` with `panels` panels.
pub fn gauss_legendre<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let h = (b - a) / panels as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for &(x, w) in &GL10 {
            acc += (f(mid - 0.5 * h * x) + f(mid + 0.5 * h * x)) * (w * 0.5 * h);
        }
    }
    acc
}

/// Semi-analytic `C_n[m]` for `spans` identical spans: the `μ` integral is
/// done in closed form and the remaining `(z, ν)` integral by dense
/// Gauss–Legendre.
pub struct KernelOracle {
    pub alpha: f64,
    pub beta2: f64,
    pub span_km: f64,
    pub spans: usize,
    pub t_ps: f64,
    pub spacing_thz: f64,
}

impl KernelOracle {
    pub fn coefficient(&self, n: i64, m: i64) -> Complex64 {
        let t = self.t_ps;
        let w = 1.0 / t;
        let c = n as f64 * self.spacing_thz;
        let (a, b) = (c - 0.5 * w, c + 0.5 * w);
        let k = 4.0 * PI * PI * self.beta2;
        let l = self.span_km;
        let leff = (1.0 - (-self.alpha * l).exp()) / self.alpha;
        let zmax = self.spans as f64 * l;
        let numax = a.abs().max(b.abs());
        // Panels follow the fastest phase of e^{jkZν²} and of the μ factor.
        let nu_panels = ((k.abs() * zmax * 2.0 * numax * w + 2.0 * PI * m.unsigned_abs() as f64) / 2.0).ceil() as usize + 8;
        let z_panels = ((k.abs() * numax * numax * l + k.abs() * numax * w * l) / 2.0).ceil() as usize + 8;
        let mut total = Complex64::new(0.0, 0.0);
        for s in 0..self.spans {
            let off = s as f64 * l;
            total += gauss_legendre(
                |z| {
                    let zz = z + off;
                    let inner = gauss_legendre(
                        |nu| {
                            let q = k * zz * nu + 2.0 * PI * m as f64 * t;
                            let mu_int = if (q * w).abs() < 1e-9 {
                                Complex64::new(w, 0.0)
                            } else {
                                (Complex64::from_polar(1.0, -q * b) - Complex64::from_polar(1.0, -q * a))
                                    / Complex64::new(0.0, -q)
                            };
                            Complex64::from_polar(1.0, k * zz * nu * nu + 2.0 * PI * nu * m as f64 * t) * mu_int
                        },
                        a,
                        b,
                        nu_panels,
                    );
                    inner * (-self.alpha * z).exp()
                },
                0.0,
                l,
                z_panels,
            );
        }
        total * (t * t / (leff * self.spans as f64))
    }
}

/// Monte-Carlo bit-metric AIR of i.i.d. shaped QAM over AWGN through the
/// crate's demapper, and the Gauss–Hermite oracle for the same prior.
pub fn awgn_air(amp: &[f64], es_n0_db: f64, symbols: usize, seed: u64) -> (f64, f64) {
    let alphabet = AmplitudeAlphabet::odd(amp.len()).unwrap();
    let c = QamConstellation::new(alphabet, amp).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cdf: Vec<f64> = amp.iter().scan(0.0, |s, p| {
        *s += p;
        Some(*s)
    }).collect();
    let draw = |rng: &mut ChaCha8Rng| {
        let u: f64 = rng.random();
        let a = cdf.iter().position(|&c| u < c).unwrap_or(amp.len() - 1);
        let l = (2 * a + 1) as i32;
        if rng.random::<bool>() { -l } else { l }
    };
    let levels: Vec<(i32, i32)> = (0..symbols).map(|_| (draw(&mut rng), draw(&mut rng))).collect();
    let tx: Vec<Complex64> = levels
        .iter()
        .map(|&(i, q)| Complex64::new(i as f64, q as f64) * c.scale())
        .collect();
    let n0 = 10f64.powf(-es_n0_db / 10.0);
    let s = (0.5 * n0).sqrt();
    let rx: Vec<Complex64> = tx
        .iter()
        .map(|t| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            t + Complex64::new(re, im) * s
        })
        .collect();
    let (h, var) = gain_and_noise(&rx, &tx).unwrap();
    let scaled: Vec<Complex64> = rx.iter().map(|v| v / h).collect();
    let llr = demap_bit_metrics(&scaled, var, &c, amp).unwrap();
    let bits = symbol_bits(&c, &levels).unwrap();
    let h_sym = 2.0 * (shapelab::shaping::entropy(amp) + 1.0);
    let e = air_bmd(&llr, &bits, 2 * c.bits_per_dim() as usize, h_sym).unwrap();
    let (pts, pr) = pam(amp);
    (e.value, bmd_gmi(&pts, &pr, n0))
}

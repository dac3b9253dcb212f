//! Distribution matchers for probabilistic amplitude shaping.
//!
//! A matcher maps a `k`-bit word (an index `< 2^k`) to a block of `N`
//! amplitudes and back. Three families are provided:
//!
//! * sphere shaping (SS), by enumerative indexing of the lexicographically
//!   first `2^k` sequences inside the smallest sufficient energy sphere;
//! * shell mapping with at most `m` shells (SM-m) and the SM-max variant;
//! * constant-composition DM (CCDM) by exact arithmetic coding.

mod alphabet;
mod ccdm;
mod enumerative;
mod trellis;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

pub use alphabet::AmplitudeAlphabet;
pub use ccdm::{CcdmMatcher, Composition};
pub use enumerative::{shell_support, EnumerativeMatcher, Shell, ShellSupport};
pub use trellis::{min_sphere_energy, TrellisCounts};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DmKind {
    Ss,
    Sm { shells: u32 },
    SmMax,
    Ccdm { composition: Composition },
}

/// A distribution matcher: `k` input bits to `n` amplitudes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmSpec {
    #[serde(flatten)]
    pub kind: DmKind,
    pub n: usize,
    pub k: u32,
    pub alphabet: AmplitudeAlphabet,
}

impl DmSpec {
    pub fn new(kind: DmKind, n: usize, k: u32, alphabet: AmplitudeAlphabet) -> Result<Self> {
        let spec = Self {
            kind,
            n,
            k,
            alphabet,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("block length must be at least 1".into()));
        }
        match &self.kind {
            DmKind::Sm { shells: 0 } => {
                Err(Error::Config("shell mapping needs at least one shell".into()))
            }
            DmKind::Ccdm { composition } => {
                if composition.0.len() != self.alphabet.len() {
                    return Err(Error::Config(format!(
                        "composition has {} entries for {} levels",
                        composition.0.len(),
                        self.alphabet.len()
                    )));
                }
                if composition.block_len() != self.n {
                    return Err(Error::Config(format!(
                        "composition sums to {}, block length is {}",
                        composition.block_len(),
                        self.n
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// DM rate in bits per amplitude.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(&DmRecord {
            spec: self.clone(),
            seed: None,
        })
        .map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Textual config record: a [`DmSpec`] plus an optional RNG seed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmRecord {
    #[serde(flatten)]
    pub spec: DmSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl DmRecord {
    pub fn from_toml(text: &str) -> Result<Self> {
        let r: DmRecord = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        r.spec.validate()?;
        Ok(r)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// One DM output: `N` alphabet levels and their total energy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AmplitudeBlock {
    pub amplitudes: Vec<u32>,
    pub energy: u64,
}

impl AmplitudeBlock {
    pub fn new(amplitudes: Vec<u32>) -> Self {
        let energy = amplitudes.iter().map(|&a| (a as u64) * (a as u64)).sum();
        Self { amplitudes, energy }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub(crate) fn alphabet_indices(
        &self,
        alphabet: &AmplitudeAlphabet,
        n: usize,
    ) -> Result<Vec<usize>> {
        if self.amplitudes.len() != n {
            return Err(Error::Decode(format!(
                "block has {} amplitudes, expected {n}",
                self.amplitudes.len()
            )));
        }
        self.amplitudes
            .iter()
            .map(|&a| {
                alphabet
                    .index_of(a)
                    .ok_or_else(|| Error::Decode(format!("{a} is not an alphabet level")))
            })
            .collect()
    }
}

pub trait DistributionMatcher: Send + Sync {
    fn spec(&self) -> &DmSpec;

    /// Maps an index `< 2^k` to a block.
    fn encode(&self, index: &BigUint) -> Result<AmplitudeBlock>;

    /// Inverse of [`encode`](Self::encode); fails on blocks outside the
    /// support or the encoder image.
    fn decode(&self, block: &AmplitudeBlock) -> Result<BigUint>;

    /// Occurrences of each level summed over the `2^k` image sequences.
    fn letter_totals(&self) -> Vec<BigUint>;

    /// Amplitude marginal of the image under uniform inputs.
    fn amplitude_distribution(&self) -> Vec<f64> {
        let totals = self.letter_totals();
        let spec = self.spec();
        let denom = trellis::two_pow(spec.k) * spec.n;
        totals.iter().map(|t| ratio(t, &denom)).collect()
    }

    /// Mean per-sequence energy over the image.
    fn average_energy(&self) -> f64 {
        let spec = self.spec();
        enumerative::average_energy_from_totals(
            &spec.alphabet,
            &self.letter_totals(),
            &trellis::two_pow(spec.k),
        )
    }
}

/// Any matcher buildable from a [`DmSpec`].
#[derive(Debug, Clone)]
pub enum Matcher {
    Enumerative(EnumerativeMatcher),
    Ccdm(CcdmMatcher),
}

impl Matcher {
    pub fn new(spec: &DmSpec) -> Result<Self> {
        match spec.kind {
            DmKind::Ccdm { .. } => Ok(Matcher::Ccdm(CcdmMatcher::new(spec)?)),
            _ => Ok(Matcher::Enumerative(EnumerativeMatcher::new(spec)?)),
        }
    }

    fn inner(&self) -> &dyn DistributionMatcher {
        match self {
            Matcher::Enumerative(m) => m,
            Matcher::Ccdm(m) => m,
        }
    }
}

impl DistributionMatcher for Matcher {
    fn spec(&self) -> &DmSpec {
        self.inner().spec()
    }

    fn encode(&self, index: &BigUint) -> Result<AmplitudeBlock> {
        self.inner().encode(index)
    }

    fn decode(&self, block: &AmplitudeBlock) -> Result<BigUint> {
        self.inner().decode(block)
    }

    fn letter_totals(&self) -> Vec<BigUint> {
        self.inner().letter_totals()
    }
}

/// `a / b` as a float, robust to operands far beyond `f64` range.
pub(crate) fn ratio(a: &BigUint, b: &BigUint) -> f64 {
    let shift = a.bits().max(b.bits()).saturating_sub(120) as usize;
    let num = (a >> shift).to_f64().unwrap_or(f64::INFINITY);
    let den = (b >> shift).to_f64().unwrap_or(f64::INFINITY);
    num / den
}

pub fn build_energy_trellis(
    alphabet: &AmplitudeAlphabet,
    n: usize,
    e_max: u64,
) -> Result<TrellisCounts> {
    TrellisCounts::build(alphabet, n, e_max)
}

/// Big-endian bit string to index.
pub fn index_from_bits(bits: &[bool]) -> BigUint {
    bits.iter().fold(BigUint::default(), |acc, &b| {
        (acc << 1usize) + BigUint::from(b as u8)
    })
}

/// Index to a big-endian bit string of length `k`.
pub fn bits_from_index(index: &BigUint, k: u32) -> Vec<bool> {
    (0..k as u64).rev().map(|i| index.bit(i)).collect()
}

/// Uniform random `k`-bit index.
pub fn random_index<R: RngCore + ?Sized>(rng: &mut R, k: u32) -> BigUint {
    let nbytes = (k as usize).div_ceil(8);
    let mut bytes = vec![0u8; nbytes];
    rng.fill_bytes(&mut bytes);
    let extra = nbytes * 8 - k as usize;
    if extra > 0 {
        bytes[0] &= 0xff >> extra;
    }
    BigUint::from_bytes_be(&bytes)
}

pub fn ess_encode(spec: &DmSpec, index: &BigUint) -> Result<AmplitudeBlock> {
    require_kind(spec, |k| matches!(k, DmKind::Ss))?;
    EnumerativeMatcher::new(spec)?.encode(index)
}

pub fn ess_decode(spec: &DmSpec, block: &AmplitudeBlock) -> Result<BigUint> {
    require_kind(spec, |k| matches!(k, DmKind::Ss))?;
    EnumerativeMatcher::new(spec)?.decode(block)
}

pub fn sm_encode(spec: &DmSpec, index: &BigUint) -> Result<AmplitudeBlock> {
    require_kind(spec, |k| matches!(k, DmKind::Sm { .. } | DmKind::SmMax))?;
    EnumerativeMatcher::new(spec)?.encode(index)
}

pub fn sm_decode(spec: &DmSpec, block: &AmplitudeBlock) -> Result<BigUint> {
    require_kind(spec, |k| matches!(k, DmKind::Sm { .. } | DmKind::SmMax))?;
    EnumerativeMatcher::new(spec)?.decode(block)
}

pub fn ccdm_encode(spec: &DmSpec, index: &BigUint) -> Result<AmplitudeBlock> {
    CcdmMatcher::new(spec)?.encode(index)
}

pub fn ccdm_decode(spec: &DmSpec, block: &AmplitudeBlock) -> Result<BigUint> {
    CcdmMatcher::new(spec)?.decode(block)
}

fn require_kind(spec: &DmSpec, ok: impl Fn(&DmKind) -> bool) -> Result<()> {
    if ok(&spec.kind) {
        Ok(())
    } else {
        Err(Error::Config(format!("unexpected DM kind {:?}", spec.kind)))
    }
}

pub fn average_sequence_energy(spec: &DmSpec) -> Result<f64> {
    Ok(Matcher::new(spec)?.average_energy())
}

/// Entropy in bits.
pub fn entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// `H(target) − k/N` against the matcher's own amplitude marginal.
pub fn dm_rate_loss(spec: &DmSpec) -> Result<f64> {
    let m = Matcher::new(spec)?;
    Ok(rate_loss_against(spec, &m.amplitude_distribution()))
}

/// `H(target) − k/N` against an explicit target distribution.
pub fn rate_loss_against(spec: &DmSpec, target: &[f64]) -> f64 {
    entropy(target) - spec.rate()
}

/// `P(a) ∝ exp(−λ a²)` over the alphabet.
pub fn maxwell_boltzmann(alphabet: &AmplitudeAlphabet, lambda: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..alphabet.len())
        .map(|i| (-lambda * alphabet.energy(i) as f64).exp())
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Maxwell–Boltzmann distribution with the given entropy (bits/amplitude).
pub fn maxwell_boltzmann_for_entropy(alphabet: &AmplitudeAlphabet, bits: f64) -> Result<Vec<f64>> {
    let h_max = (alphabet.len() as f64).log2();
    if !(0.0..=h_max).contains(&bits) {
        return Err(Error::Config(format!(
            "entropy {bits} outside [0, {h_max}]"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while entropy(&maxwell_boltzmann(alphabet, hi)) > bits {
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if entropy(&maxwell_boltzmann(alphabet, mid)) > bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(maxwell_boltzmann(alphabet, 0.5 * (lo + hi)))
}

/// Seeded uniform permutation of the concatenated blocks.
pub fn interleave<R: Rng + ?Sized>(blocks: &[AmplitudeBlock], rng: &mut R) -> AmplitudeBlock {
    let mut all: Vec<u32> = blocks
        .iter()
        .flat_map(|b| b.amplitudes.iter().copied())
        .collect();
    all.shuffle(rng);
    AmplitudeBlock::new(all)
}

/// Emulates a DM of block length `c·N` by `c` independent uses of `matcher`
/// followed by a length-`c·N` interleaver.
pub fn emulate_long_block<M, R>(
    matcher: &M,
    inputs: &[BigUint],
    interleaver_rng: &mut R,
) -> Result<AmplitudeBlock>
where
    M: DistributionMatcher + ?Sized,
    R: Rng + ?Sized,
{
    if inputs.is_empty() {
        return Err(Error::Config("concatenation factor must be at least 1".into()));
    }
    let blocks = inputs
        .iter()
        .map(|b| matcher.encode(b))
        .collect::<Result<Vec<_>>>()?;
    Ok(interleave(&blocks, interleaver_rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bin() -> AmplitudeAlphabet {
        AmplitudeAlphabet::new(vec![1, 3]).unwrap()
    }

    #[test]
    fn rates_and_energies() {
        let ss = DmSpec::new(DmKind::Ss, 4, 3, bin()).unwrap();
        let ccdm = DmSpec::new(
            DmKind::Ccdm {
                composition: Composition(vec![2, 2]),
            },
            4,
            2,
            bin(),
        )
        .unwrap();
        let sm1 = DmSpec::new(DmKind::Sm { shells: 1 }, 4, 2, bin()).unwrap();
        assert!((average_sequence_energy(&ss).unwrap() - 14.0).abs() < 1e-12);
        assert!((average_sequence_energy(&sm1).unwrap() - 12.0).abs() < 1e-12);
        assert!((average_sequence_energy(&ccdm).unwrap() - 20.0).abs() < 1e-12);
        assert!((dm_rate_loss(&ccdm).unwrap() - 0.5).abs() < 1e-12);
        assert!(ss.rate() > ccdm.rate());
        assert!(dm_rate_loss(&ss).unwrap() >= -1e-9);
    }

    #[test]
    fn dm_record_round_trip() {
        let spec = DmSpec::new(
            DmKind::Ccdm {
                composition: Composition(vec![3, 1]),
            },
            4,
            2,
            bin(),
        )
        .unwrap();
        let rec = DmRecord {
            spec: spec.clone(),
            seed: Some(9),
        };
        let text = rec.to_toml().unwrap();
        assert_eq!(DmRecord::from_toml(&text).unwrap(), rec);
        let sm = DmSpec::new(DmKind::Sm { shells: 2 }, 8, 5, bin()).unwrap();
        let back = DmRecord::from_toml(&sm.to_toml().unwrap()).unwrap();
        assert_eq!(back.spec, sm);
        assert!(DmRecord::from_toml("kind = \"ccdm\"\nn = 4\nk = 1\ncomposition = [1, 1]\n[alphabet]\nlevels = [1, 3]\n").is_err());
    }

    #[test]
    fn bit_helpers() {
        let idx = index_from_bits(&[true, false, true]);
        assert_eq!(idx, 5u32.into());
        assert_eq!(bits_from_index(&idx, 4), vec![false, true, false, true]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(random_index(&mut rng, 11) < BigUint::from(2048u32));
        }
    }

    #[test]
    fn emulation_is_a_seeded_permutation() {
        let spec = DmSpec::new(DmKind::Ss, 4, 3, bin()).unwrap();
        let m = Matcher::new(&spec).unwrap();
        let inputs: Vec<BigUint> = vec![3u32.into(), 7u32.into()];
        let a = emulate_long_block(&m, &inputs, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = emulate_long_block(&m, &inputs, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        let mut got = a.amplitudes.clone();
        got.sort();
        let mut want = [vec![1, 1, 3, 3], vec![3, 1, 1, 1]].concat();
        want.sort();
        assert_eq!(got, want);
        let one = emulate_long_block(&m, &inputs[..1], &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(one.energy, 20);
    }

    #[test]
    fn mb_for_entropy_hits_target() {
        let a = AmplitudeAlphabet::odd(8).unwrap();
        let p = maxwell_boltzmann_for_entropy(&a, 2.2).unwrap();
        assert!((entropy(&p) - 2.2).abs() < 1e-9);
    }
}

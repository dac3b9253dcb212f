//! Constant-composition distribution matching by exact arithmetic coding.
//!
//! The unit interval is partitioned among all permutations of the
//! composition in lexicographic order, each subinterval having width
//! `1 / M` where `M` is the multinomial coefficient. Input index `b` (a
//! `k`-bit word) is the point `b / 2^k` and is mapped to the permutation whose
//! subinterval contains it, i.e. to lexicographic rank `⌊b·M / 2^k⌋`. With
//! `M ≥ 2^k` the map is injective and decoding is exact.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::trellis::two_pow;
use super::{AmplitudeAlphabet, AmplitudeBlock, DistributionMatcher, DmKind, DmSpec};
use crate::{Error, Result};

/// Number of occurrences of each alphabet level in every output block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Composition(pub Vec<usize>);

impl Composition {
    pub fn block_len(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    /// `N! / Π n_a!`.
    pub fn multinomial(&self) -> BigUint {
        let mut m = BigUint::one();
        let mut placed = 0u64;
        for &c in &self.0 {
            // Running product of binomials keeps every step integral.
            for j in 1..=c as u64 {
                placed += 1;
                m *= placed;
                m /= j;
            }
        }
        m
    }

    /// `⌊log2 M⌋`, the largest admissible input length.
    pub fn max_input_bits(&self) -> u32 {
        (self.multinomial().bits().max(1) - 1) as u32
    }

    /// Largest-remainder quantization of a distribution to `n` counts.
    pub fn from_distribution(probs: &[f64], n: usize) -> Self {
        let total: f64 = probs.iter().sum();
        let scaled: Vec<f64> = probs.iter().map(|p| p / total * n as f64).collect();
        let mut counts: Vec<usize> = scaled.iter().map(|x| x.floor() as usize).collect();
        let mut rest = n - counts.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..probs.len()).collect();
        // Stable sort keeps ties in alphabet order.
        order.sort_by(|&a, &b| {
            let ra = scaled[a] - scaled[a].floor();
            let rb = scaled[b] - scaled[b].floor();
            rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
        });
        for &i in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            counts[i] += 1;
            rest -= 1;
        }
        Composition(counts)
    }

    pub fn energy(&self, alphabet: &AmplitudeAlphabet) -> u64 {
        self.0
            .iter()
            .enumerate()
            .map(|(i, &c)| c as u64 * alphabet.energy(i))
            .sum()
    }

    /// Minimum-energy composition obtained by quantizing a Maxwell–Boltzmann
    /// distribution whose permutation count reaches `2^k`.
    pub fn for_rate(alphabet: &AmplitudeAlphabet, n: usize, k: u32) -> Result<Self> {
        let max_bits = n as f64 * (alphabet.len() as f64).log2();
        if k as f64 > max_bits {
            return Err(Error::Capacity(format!(
                "k = {k} exceeds {max_bits:.1} bits of length-{n} sequences"
            )));
        }
        let feasible = |c: &Composition| c.max_input_bits() >= k;
        let at = |lambda: f64| {
            Composition::from_distribution(&super::maxwell_boltzmann(alphabet, lambda), n)
        };
        // Entropy of the quantized MB decreases with lambda; bracket the
        // largest feasible lambda by bisection, then sweep a neighbourhood
        // because rounding makes the map non-monotone.
        let uniform = at(0.0);
        if !feasible(&uniform) {
            return Err(Error::Capacity(format!(
                "no composition of length {n} admits 2^{k} permutations"
            )));
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while feasible(&at(hi)) && hi < 1e3 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible(&at(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut best = at(lo);
        for j in 0..=200 {
            let c = at(lo * (0.8 + 0.4 * j as f64 / 200.0));
            if feasible(&c) && c.energy(alphabet) < best.energy(alphabet) {
                best = c;
            }
        }
        Ok(best)
    }
}

/// Exact arithmetic-coding CCDM.
#[derive(Debug, Clone)]
pub struct CcdmMatcher {
    spec: DmSpec,
    composition: Composition,
    multinomial: BigUint,
    image: BigUint,
}

impl CcdmMatcher {
    pub fn new(spec: &DmSpec) -> Result<Self> {
        spec.validate()?;
        let DmKind::Ccdm { composition } = &spec.kind else {
            return Err(Error::Config("CCDM matcher needs a CCDM spec".into()));
        };
        let multinomial = composition.multinomial();
        let image = two_pow(spec.k);
        if image > multinomial {
            return Err(Error::Capacity(format!(
                "composition has {multinomial} permutations, fewer than 2^{}",
                spec.k
            )));
        }
        Ok(Self {
            spec: spec.clone(),
            composition: composition.clone(),
            multinomial,
            image,
        })
    }

    pub fn composition(&self) -> &Composition {
        &self.composition
    }

    fn unrank(&self, mut rank: BigUint) -> Vec<u32> {
        let alphabet = &self.spec.alphabet;
        let mut remaining = self.composition.0.clone();
        let mut left = self.spec.n as u64;
        let mut m = self.multinomial.clone();
        let mut out = Vec::with_capacity(self.spec.n);
        while left > 0 {
            for (i, cnt) in remaining.iter_mut().enumerate() {
                if *cnt == 0 {
                    continue;
                }
                let c = &m * *cnt as u64 / left;
                if rank < c {
                    out.push(alphabet.level(i));
                    *cnt -= 1;
                    m = c;
                    break;
                }
                rank -= c;
            }
            left -= 1;
        }
        out
    }

    fn rank(&self, indices: &[usize]) -> BigUint {
        let mut remaining = self.composition.0.clone();
        let mut left = self.spec.n as u64;
        let mut m = self.multinomial.clone();
        let mut rank = BigUint::zero();
        for &sym in indices {
            for &cnt in remaining.iter().take(sym) {
                if cnt > 0 {
                    rank += &m * cnt as u64 / left;
                }
            }
            m = &m * remaining[sym] as u64 / left;
            remaining[sym] -= 1;
            left -= 1;
        }
        rank
    }
}

impl DistributionMatcher for CcdmMatcher {
    fn spec(&self) -> &DmSpec {
        &self.spec
    }

    fn encode(&self, index: &BigUint) -> Result<AmplitudeBlock> {
        if *index >= self.image {
            return Err(Error::Capacity(format!(
                "index does not fit in {} bits",
                self.spec.k
            )));
        }
        let rank = (index * &self.multinomial) >> self.spec.k as usize;
        Ok(AmplitudeBlock::new(self.unrank(rank)))
    }

    fn decode(&self, block: &AmplitudeBlock) -> Result<BigUint> {
        let indices = block.alphabet_indices(&self.spec.alphabet, self.spec.n)?;
        let mut counts = vec![0usize; self.spec.alphabet.len()];
        for &i in &indices {
            counts[i] += 1;
        }
        if counts != self.composition.0 {
            return Err(Error::Decode(format!(
                "composition {counts:?} differs from {:?}",
                self.composition.0
            )));
        }
        let rank = self.rank(&indices);
        // Smallest b with ⌊b·M / 2^k⌋ ≥ rank.
        let scaled = rank.clone() << self.spec.k as usize;
        let b = Integer::div_ceil(&scaled, &self.multinomial);
        if b >= self.image || (&b * &self.multinomial) >> self.spec.k as usize != rank {
            return Err(Error::OutOfImage);
        }
        Ok(b)
    }

    fn letter_totals(&self) -> Vec<BigUint> {
        self.composition
            .0
            .iter()
            .map(|&c| &self.image * c as u64)
            .collect()
    }
}

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Positive, strictly increasing amplitude levels of one real dimension of
/// the QAM constellation (e.g. `1, 3, 5, 7` for 64-QAM).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetRecord", into = "AlphabetRecord")]
pub struct AmplitudeAlphabet {
    levels: Vec<u32>,
    normalize: bool,
}

#[derive(Serialize, Deserialize)]
struct AlphabetRecord {
    levels: Vec<u32>,
    #[serde(default)]
    normalize: bool,
}

impl TryFrom<AlphabetRecord> for AmplitudeAlphabet {
    type Error = Error;

    fn try_from(r: AlphabetRecord) -> Result<Self> {
        Ok(Self::new(r.levels)?.with_normalization(r.normalize))
    }
}

impl From<AmplitudeAlphabet> for AlphabetRecord {
    fn from(a: AmplitudeAlphabet) -> Self {
        AlphabetRecord {
            levels: a.levels,
            normalize: a.normalize,
        }
    }
}

impl AmplitudeAlphabet {
    pub fn new(levels: Vec<u32>) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::Alphabet("at least two levels are required".into()));
        }
        if levels[0] == 0 {
            return Err(Error::Alphabet("levels must be positive".into()));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Alphabet("levels must be strictly increasing".into()));
        }
        Ok(Self {
            levels,
            normalize: false,
        })
    }

    /// The odd levels `1, 3, …, 2·count − 1` of a `(2·count)`-ary ASK.
    pub fn odd(count: usize) -> Result<Self> {
        Self::new((0..count as u32).map(|i| 2 * i + 1).collect())
    }

    pub fn with_normalization(mut self, normalize: bool) -> Self {
        self.normalize = normalize;
        self
    }

    pub fn normalize(&self) -> bool {
        self.normalize
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, index: usize) -> u32 {
        self.levels[index]
    }

    pub fn index_of(&self, level: u32) -> Option<usize> {
        self.levels.binary_search(&level).ok()
    }

    pub fn energy(&self, index: usize) -> u64 {
        let a = self.levels[index] as u64;
        a * a
    }

    pub fn min_energy(&self) -> u64 {
        self.energy(0)
    }

    pub fn max_energy(&self) -> u64 {
        self.energy(self.len() - 1)
    }

    /// Bits carried by the amplitude label, `log2(len)`, when the size is a
    /// power of two.
    pub fn label_bits(&self) -> Option<u32> {
        self.len()
            .is_power_of_two()
            .then(|| self.len().trailing_zeros())
    }

    pub(crate) fn lattice(&self) -> EnergyLattice {
        let base = self.min_energy();
        let step = (1..self.len())
            .map(|i| self.energy(i) - base)
            .fold(0u64, |g, d| g.gcd(&d))
            .max(1);
        let steps = (0..self.len())
            .map(|i| ((self.energy(i) - base) / step) as usize)
            .collect();
        EnergyLattice { base, step, steps }
    }
}

/// Integer lattice on which sequence energies live: a length-`L` sequence
/// has energy `L·base + step·r` for a non-negative reduced energy `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct EnergyLattice {
    pub base: u64,
    pub step: u64,
    pub steps: Vec<usize>,
}

impl EnergyLattice {
    pub fn energy(&self, len: usize, reduced: usize) -> u64 {
        len as u64 * self.base + self.step * reduced as u64
    }

    /// Largest reduced energy whose absolute energy does not exceed `e`.
    pub fn floor_reduced(&self, len: usize, e: u64) -> Option<usize> {
        let floor = len as u64 * self.base;
        (e >= floor).then(|| ((e - floor) / self.step) as usize)
    }

    pub fn max_step(&self) -> usize {
        *self.steps.iter().max().unwrap_or(&0)
    }
}

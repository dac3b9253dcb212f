//! Suffix-count trellis behind enumerative sphere shaping and shell mapping.

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};

use super::alphabet::{AmplitudeAlphabet, EnergyLattice};
use crate::{Error, Result};

/// Exact counts of amplitude suffixes under an energy budget.
///
/// `count(n, e)` is the number of length-`(N − n)` suffixes whose energy does
/// not exceed the remaining budget `e`; it obeys
/// `count(n, e) = Σ_a count(n + 1, e − a²)` with `count(N, e) = 1` for
/// every `e ≥ 0`. Internally budgets are stored on the reduced energy lattice
/// of the alphabet, one row per suffix length.
#[derive(Debug, Clone)]
pub struct TrellisCounts {
    alphabet: AmplitudeAlphabet,
    n: usize,
    e_max: u64,
    lattice: EnergyLattice,
    width: usize,
    cum: Vec<BigUint>,
}

impl TrellisCounts {
    pub fn build(alphabet: &AmplitudeAlphabet, n: usize, e_max: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("block length must be at least 1".into()));
        }
        let lattice = alphabet.lattice();
        let r_max = lattice.floor_reduced(n, e_max).ok_or_else(|| {
            Error::EmptySupport(format!(
                "E_max = {e_max} is below the minimum sequence energy {}",
                n as u64 * lattice.base
            ))
        })?;
        let width = r_max + 1;
        let mut cum = Vec::with_capacity((n + 1) * width);
        cum.extend((0..width).map(|_| BigUint::one()));
        for len in 1..=n {
            let prev = (len - 1) * width;
            for r in 0..width {
                let mut acc = BigUint::zero();
                for &t in &lattice.steps {
                    if t > r {
                        continue;
                    }
                    acc += &cum[prev + r - t];
                }
                cum.push(acc);
            }
        }
        Ok(Self {
            alphabet: alphabet.clone(),
            n,
            e_max: lattice.energy(n, r_max),
            lattice,
            width,
            cum,
        })
    }

    pub fn alphabet(&self) -> &AmplitudeAlphabet {
        &self.alphabet
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    /// Largest admissible sequence energy (the requested budget, floored onto
    /// the energy lattice).
    pub fn e_max(&self) -> u64 {
        self.e_max
    }

    pub fn max_reduced(&self) -> usize {
        self.width - 1
    }

    pub(crate) fn lattice(&self) -> &EnergyLattice {
        &self.lattice
    }

    /// Suffixes of length `len` with reduced energy at most `r`.
    pub(crate) fn cumulative(&self, len: usize, r: usize) -> &BigUint {
        &self.cum[len * self.width + r.min(self.width - 1)]
    }

    /// Suffixes of length `len` with reduced energy in `[lo, hi]`.
    pub(crate) fn interval(&self, len: usize, lo: i64, hi: i64) -> BigUint {
        if hi < 0 || hi < lo {
            return BigUint::zero();
        }
        let upper = self.cumulative(len, hi as usize);
        if lo <= 0 {
            upper.clone()
        } else {
            upper - self.cumulative(len, (lo - 1) as usize)
        }
    }

    /// `counts[position][energy]`: suffixes of length `N − position` whose
    /// energy is at most `energy`.
    pub fn count(&self, position: usize, energy: u64) -> BigUint {
        assert!(position <= self.n, "position out of range");
        let len = self.n - position;
        match self.lattice.floor_reduced(len, energy) {
            Some(r) => self.cumulative(len, r).clone(),
            None => BigUint::zero(),
        }
    }

    /// Number of full-length sequences with energy at most `E_max`.
    pub fn total(&self) -> &BigUint {
        self.cumulative(self.n, self.width - 1)
    }

    /// Reachable full-length sequence energies up to `E_max` together with
    /// the number of sequences of exactly that energy.
    pub fn shells(&self) -> Vec<(u64, BigUint)> {
        let mut out = Vec::new();
        let mut prev = BigUint::zero();
        for r in 0..self.width {
            let c = self.cumulative(self.n, r);
            if *c > prev {
                out.push((self.lattice.energy(self.n, r), c - &prev));
            }
            prev = c.clone();
        }
        out
    }

    /// Sorted list of reachable full-length energies up to `E_max`.
    pub fn energy_levels(&self) -> Vec<u64> {
        self.shells().into_iter().map(|(e, _)| e).collect()
    }

    /// Recomputes every row from the recurrence and compares with the
    /// stored counts.
    pub fn is_self_consistent(&self) -> bool {
        let row0_ok = (0..self.width).all(|r| self.cumulative(0, r).is_one());
        row0_ok
            && (1..=self.n).all(|len| {
                (0..self.width).all(|r| {
                    let sum: BigUint = self
                        .lattice
                        .steps
                        .iter()
                        .filter(|&&t| t <= r)
                        .map(|&t| self.cumulative(len - 1, r - t))
                        .sum();
                    sum == *self.cumulative(len, r)
                })
            })
    }
}

/// Exact number of length-`n` sequences of each reduced energy `0..=r_cap`.
pub(crate) fn exact_spectrum(lattice: &EnergyLattice, n: usize, r_cap: usize) -> Vec<BigUint> {
    let width = r_cap + 1;
    let mut row = vec![BigUint::zero(); width];
    row[0] = BigUint::one();
    let mut next = vec![BigUint::zero(); width];
    for _ in 0..n {
        for slot in next.iter_mut() {
            slot.set_zero();
        }
        for (r, c) in row.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for &t in &lattice.steps {
                if r + t < width {
                    next[r + t] += c;
                }
            }
        }
        std::mem::swap(&mut row, &mut next);
    }
    row
}

pub(crate) fn two_pow(k: u32) -> BigUint {
    BigUint::one() << k as usize
}

pub(crate) fn sequence_space(alphabet: &AmplitudeAlphabet, n: usize) -> BigUint {
    Pow::pow(BigUint::from(alphabet.len()), n)
}

/// Smallest reachable energy `E_max` such that at least `2^k` sequences of
/// length `n` have energy `≤ E_max`.
pub fn min_sphere_energy(alphabet: &AmplitudeAlphabet, n: usize, k: u32) -> Result<u64> {
    if n == 0 {
        return Err(Error::Config("block length must be at least 1".into()));
    }
    let target = two_pow(k);
    if target > sequence_space(alphabet, n) {
        return Err(Error::Capacity(format!(
            "2^{k} exceeds the {} sequences of length {n}",
            alphabet.len()
        )));
    }
    let lattice = alphabet.lattice();
    let r_full = n * lattice.max_step();
    let mut cap = (n * lattice.max_step() / 4).max(lattice.max_step()).min(r_full);
    loop {
        let spectrum = exact_spectrum(&lattice, n, cap);
        let mut acc = BigUint::zero();
        for (r, c) in spectrum.iter().enumerate() {
            acc += c;
            if acc >= target {
                return Ok(lattice.energy(n, r));
            }
        }
        if cap == r_full {
            unreachable!("total sequence count was checked against 2^k");
        }
        cap = (cap * 2).min(r_full);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin() -> AmplitudeAlphabet {
        AmplitudeAlphabet::new(vec![1, 3]).unwrap()
    }

    #[test]
    fn small_trellis_counts() {
        let t = TrellisCounts::build(&bin(), 4, 4).unwrap();
        assert_eq!(t.count(0, 4), BigUint::from(1u32));
        let t = TrellisCounts::build(&bin(), 4, 20).unwrap();
        assert_eq!(t.count(0, 20), BigUint::from(11u32));
        assert_eq!(t.count(4, 0), BigUint::from(1u32));
        let t = TrellisCounts::build(&bin(), 2, 18).unwrap();
        assert_eq!(t.count(0, 18), BigUint::from(4u32));
        assert!(t.is_self_consistent());
    }

    #[test]
    fn last_row_is_binary() {
        let t = TrellisCounts::build(&bin(), 4, 20).unwrap();
        for e in 0..=20 {
            assert!(t.count(4, e) <= BigUint::one());
        }
    }

    #[test]
    fn unreachable_budget_is_empty_support() {
        assert!(matches!(
            TrellisCounts::build(&bin(), 4, 3),
            Err(Error::EmptySupport(_))
        ));
    }

    #[test]
    fn shells_of_binary_alphabet() {
        let t = TrellisCounts::build(&bin(), 4, 36).unwrap();
        let sizes: Vec<u32> = t
            .shells()
            .iter()
            .map(|(_, c)| c.try_into().unwrap())
            .collect();
        assert_eq!(sizes, vec![1, 4, 6, 4, 1]);
        assert_eq!(t.energy_levels(), vec![4, 12, 20, 28, 36]);
    }

    #[test]
    fn sphere_energy_examples() {
        assert_eq!(min_sphere_energy(&bin(), 4, 0).unwrap(), 4);
        assert_eq!(min_sphere_energy(&bin(), 4, 2).unwrap(), 12);
        assert_eq!(min_sphere_energy(&bin(), 4, 3).unwrap(), 20);
        assert_eq!(min_sphere_energy(&bin(), 4, 4).unwrap(), 36);
        assert!(matches!(
            min_sphere_energy(&bin(), 4, 5),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn trellis_is_self_consistent_for_larger_alphabet() {
        let a = AmplitudeAlphabet::odd(4).unwrap();
        let e = min_sphere_energy(&a, 12, 18).unwrap();
        let t = TrellisCounts::build(&a, 12, e).unwrap();
        assert!(t.is_self_consistent());
        assert!(*t.total() >= two_pow(18));
    }
}

//! Enumerative sphere shaping and shell mapping.
//!
//! Both matchers index, in lexicographic order of alphabet indices, the
//! sequences whose energy lies in a contiguous energy interval: `[0, E_max]`
//! for sphere shaping and a window of shells for shell mapping. The first
//! `2^k` sequences of that order form the encoder image.

use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;

use super::alphabet::EnergyLattice;
use super::trellis::{exact_spectrum, min_sphere_energy, two_pow, TrellisCounts};
use super::{ratio, AmplitudeBlock, DistributionMatcher, DmKind, DmSpec};
use crate::{Error, Result};

/// One energy level (shell) and the number of length-`N` sequences on it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shell {
    pub energy: u64,
    pub count: BigUint,
}

/// Shells a matcher is allowed to use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellSupport {
    pub shells: Vec<Shell>,
}

impl ShellSupport {
    pub fn admitted_energies(&self) -> Vec<u64> {
        self.shells.iter().map(|s| s.energy).collect()
    }

    pub fn total(&self) -> BigUint {
        self.shells.iter().map(|s| &s.count).sum()
    }

    pub fn min_energy(&self) -> u64 {
        self.shells.first().map_or(0, |s| s.energy)
    }

    pub fn max_energy(&self) -> u64 {
        self.shells.last().map_or(0, |s| s.energy)
    }
}

fn shells_from_spectrum(lattice: &EnergyLattice, n: usize, spectrum: &[BigUint]) -> Vec<Shell> {
    spectrum
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(r, c)| Shell {
            energy: lattice.energy(n, r),
            count: c.clone(),
        })
        .collect()
}

/// Shells admitted by an SS, SM(m) or SM-max specification.
pub fn shell_support(spec: &DmSpec) -> Result<ShellSupport> {
    spec.validate()?;
    let alphabet = &spec.alphabet;
    let n = spec.n;
    let lattice = alphabet.lattice();
    let target = two_pow(spec.k);
    let e_ss = min_sphere_energy(alphabet, n, spec.k)?;
    let r_ss = lattice.floor_reduced(n, e_ss).expect("sphere energy is reachable");
    let r_full = n * lattice.max_step();

    match &spec.kind {
        DmKind::Ss => {
            let spectrum = exact_spectrum(&lattice, n, r_ss);
            Ok(ShellSupport {
                shells: shells_from_spectrum(&lattice, n, &spectrum),
            })
        }
        DmKind::SmMax => {
            let cap = (r_ss + lattice.max_step()).min(r_full);
            let spectrum = exact_spectrum(&lattice, n, cap);
            let mut shells = shells_from_spectrum(&lattice, n, &spectrum);
            // SS shells plus the first shell above E_max (if any).
            let n_ss = shells.iter().take_while(|s| s.energy <= e_ss).count();
            shells.truncate((n_ss + 1).min(shells.len()));
            let mut total: BigUint = shells.iter().map(|s| &s.count).sum();
            while shells.len() > 1 && &total - &shells[0].count >= target {
                total -= &shells[0].count;
                shells.remove(0);
            }
            Ok(ShellSupport { shells })
        }
        DmKind::Sm { shells: m } => {
            let m = *m as usize;
            let mut cap = (r_ss + 2 * m * lattice.max_step()).min(r_full);
            loop {
                let spectrum = exact_spectrum(&lattice, n, cap);
                let shells = shells_from_spectrum(&lattice, n, &spectrum);
                let trellis = (m > 1)
                    .then(|| TrellisCounts::build(alphabet, n, lattice.energy(n, cap)))
                    .transpose()?;
                let complete = cap == r_full;
                match best_window(&shells, m, &target, trellis.as_ref(), &lattice, n, complete) {
                    WindowSearch::Found(w) => return Ok(ShellSupport { shells: w }),
                    WindowSearch::NeedMore => cap = (cap * 2).min(r_full),
                    WindowSearch::Infeasible => {
                        return Err(Error::Capacity(format!(
                            "no window of {m} shells holds 2^{} sequences",
                            spec.k
                        )))
                    }
                }
            }
        }
        DmKind::Ccdm { .. } => Err(Error::Config(
            "shell support is defined for SS and SM kinds only".into(),
        )),
    }
}

enum WindowSearch {
    Found(Vec<Shell>),
    NeedMore,
    Infeasible,
}

/// Contiguous window of at most `m` shells with at least `target` sequences
/// whose lexicographically-first `target` sequences have minimum average
/// energy.
fn best_window(
    shells: &[Shell],
    m: usize,
    target: &BigUint,
    trellis: Option<&TrellisCounts>,
    lattice: &EnergyLattice,
    n: usize,
    complete: bool,
) -> WindowSearch {
    let mut best: Option<(f64, usize, usize)> = None;
    for start in 0..shells.len() {
        if let Some((avg, _, _)) = best {
            if shells[start].energy as f64 >= avg {
                return finish(shells, best);
            }
        }
        let mut count = BigUint::zero();
        for w in 1..=m {
            let end = start + w;
            if end > shells.len() {
                if complete {
                    break;
                }
                // The window runs past the computed spectrum.
                return WindowSearch::NeedMore;
            }
            count += &shells[end - 1].count;
            if &count < target {
                continue;
            }
            let avg = if w == 1 {
                shells[start].energy as f64
            } else {
                let t = trellis.expect("trellis is built for multi-shell windows");
                let lo = lattice.floor_reduced(n, shells[start].energy).unwrap();
                let hi = lattice.floor_reduced(n, shells[end - 1].energy).unwrap();
                let totals = lex_image_letter_totals(t, lo, hi, target);
                average_energy_from_totals(t.alphabet(), &totals, target)
            };
            if best.is_none_or(|(b, _, _)| avg < b) {
                best = Some((avg, start, end));
            }
        }
    }
    match best {
        Some(_) if complete => finish(shells, best),
        _ if !complete => WindowSearch::NeedMore,
        _ => WindowSearch::Infeasible,
    }
}

fn finish(shells: &[Shell], best: Option<(f64, usize, usize)>) -> WindowSearch {
    let (_, s, e) = best.expect("called with a candidate");
    WindowSearch::Found(shells[s..e].to_vec())
}

pub(crate) fn average_energy_from_totals(
    alphabet: &super::AmplitudeAlphabet,
    totals: &[BigUint],
    count: &BigUint,
) -> f64 {
    let energy_sum: BigUint = totals
        .iter()
        .enumerate()
        .map(|(i, c)| c * alphabet.energy(i))
        .sum();
    ratio(&energy_sum, count)
}

/// Sphere shaping (`[0, E_max]`) or shell mapping (shell window) matcher.
#[derive(Debug, Clone)]
pub struct EnumerativeMatcher {
    spec: DmSpec,
    trellis: Arc<TrellisCounts>,
    support: ShellSupport,
    lo: usize,
    hi: usize,
    image: BigUint,
}

impl EnumerativeMatcher {
    pub fn new(spec: &DmSpec) -> Result<Self> {
        let support = shell_support(spec)?;
        let trellis = Arc::new(TrellisCounts::build(
            &spec.alphabet,
            spec.n,
            support.max_energy(),
        )?);
        Self::with_trellis(spec, support, trellis)
    }

    /// Reuses a trellis built for at least the support's top energy.
    pub fn with_trellis(
        spec: &DmSpec,
        support: ShellSupport,
        trellis: Arc<TrellisCounts>,
    ) -> Result<Self> {
        let lattice = trellis.lattice();
        let lo = lattice
            .floor_reduced(spec.n, support.min_energy())
            .ok_or_else(|| Error::EmptySupport("support below minimum energy".into()))?;
        let hi = lattice
            .floor_reduced(spec.n, support.max_energy())
            .ok_or_else(|| Error::EmptySupport("support below minimum energy".into()))?;
        if hi > trellis.max_reduced() || trellis.block_len() != spec.n {
            return Err(Error::Config("trellis does not cover the support".into()));
        }
        let matcher = Self {
            spec: spec.clone(),
            trellis,
            support,
            lo,
            hi,
            image: two_pow(spec.k),
        };
        let available = matcher.trellis.interval(spec.n, lo as i64, hi as i64);
        if available < matcher.image {
            return Err(Error::Capacity(format!(
                "support holds {available} sequences, fewer than 2^{}",
                spec.k
            )));
        }
        Ok(matcher)
    }

    pub fn support(&self) -> &ShellSupport {
        &self.support
    }

    pub fn trellis(&self) -> &Arc<TrellisCounts> {
        &self.trellis
    }

    fn completions(&self, len: usize, consumed: usize) -> BigUint {
        let lo = self.lo as i64 - consumed as i64;
        let hi = self.hi as i64 - consumed as i64;
        self.trellis.interval(len, lo, hi)
    }
}

impl DistributionMatcher for EnumerativeMatcher {
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
        let alphabet = &self.spec.alphabet;
        let steps = &self.trellis.lattice().steps;
        let n = self.spec.n;
        let mut idx = index.clone();
        let mut consumed = 0usize;
        let mut out = Vec::with_capacity(n);
        for pos in 0..n {
            let len = n - pos - 1;
            let mut chosen = None;
            for (i, &t) in steps.iter().enumerate() {
                if consumed + t > self.hi {
                    break;
                }
                let c = self.completions(len, consumed + t);
                if idx < c {
                    chosen = Some(i);
                    consumed += t;
                    break;
                }
                idx -= c;
            }
            let i = chosen.expect("index below the support size always has a branch");
            out.push(alphabet.level(i));
        }
        Ok(AmplitudeBlock::new(out))
    }

    fn decode(&self, block: &AmplitudeBlock) -> Result<BigUint> {
        let n = self.spec.n;
        let indices = block.alphabet_indices(&self.spec.alphabet, n)?;
        let steps = &self.trellis.lattice().steps;
        let total: usize = indices.iter().map(|&i| steps[i]).sum();
        if total < self.lo || total > self.hi {
            return Err(Error::Decode(format!(
                "energy {} is outside the support [{}, {}]",
                block.energy,
                self.support.min_energy(),
                self.support.max_energy()
            )));
        }
        let mut idx = BigUint::zero();
        let mut consumed = 0usize;
        for (pos, &sym) in indices.iter().enumerate() {
            let len = n - pos - 1;
            for &t in &steps[..sym] {
                idx += self.completions(len, consumed + t);
            }
            consumed += steps[sym];
        }
        if idx >= self.image {
            return Err(Error::OutOfImage);
        }
        Ok(idx)
    }

    fn letter_totals(&self) -> Vec<BigUint> {
        lex_image_letter_totals(&self.trellis, self.lo, self.hi, &self.image)
    }
}

struct Branch {
    len: usize,
    lo: i64,
    hi: i64,
    count: BigUint,
    prefix: Vec<u64>,
}

/// Per-level occurrence totals over the first `count` sequences (in
/// lexicographic order) whose reduced energy lies in `[lo, hi]`.
pub(crate) fn lex_image_letter_totals(
    trellis: &TrellisCounts,
    lo: usize,
    hi: usize,
    count: &BigUint,
) -> Vec<BigUint> {
    let steps = &trellis.lattice().steps;
    let a = steps.len();
    let n = trellis.block_len();

    // Decompose the image into full subtrees hanging off the boundary path.
    let mut branches: Vec<Branch> = Vec::new();
    let mut idx = count.clone();
    let mut prefix = vec![0u64; a];
    let mut consumed = 0usize;
    'walk: for pos in 0..n {
        let len = n - pos - 1;
        for (i, &t) in steps.iter().enumerate() {
            if idx.is_zero() {
                break 'walk;
            }
            if consumed + t > hi {
                break 'walk;
            }
            let blo = lo as i64 - (consumed + t) as i64;
            let bhi = hi as i64 - (consumed + t) as i64;
            let c = trellis.interval(len, blo, bhi);
            if c.is_zero() {
                continue;
            }
            if idx >= c {
                let mut p = prefix.clone();
                p[i] += 1;
                idx -= &c;
                branches.push(Branch {
                    len,
                    lo: blo,
                    hi: bhi,
                    count: c,
                    prefix: p,
                });
            } else {
                prefix[i] += 1;
                consumed += t;
                continue 'walk;
            }
        }
        break;
    }

    let mut totals = vec![BigUint::zero(); a];
    for b in &branches {
        for (tot, &p) in totals.iter_mut().zip(&b.prefix) {
            if p > 0 {
                *tot += &b.count * p;
            }
        }
    }

    // Occurrence counts inside the subtrees, one suffix length at a time.
    let max_len = branches.iter().map(|b| b.len).max();
    let Some(max_len) = max_len else {
        return totals;
    };
    let width = trellis.max_reduced() + 1;
    let mut row = vec![BigUint::zero(); width * a];
    let mut next = vec![BigUint::zero(); width * a];
    for len in 0..=max_len {
        if len > 0 {
            for r in 0..width {
                for letter in 0..a {
                    let mut acc = BigUint::zero();
                    for (i, &t) in steps.iter().enumerate() {
                        if t > r {
                            continue;
                        }
                        acc += &row[(r - t) * a + letter];
                        if i == letter {
                            acc += trellis.cumulative(len - 1, r - t);
                        }
                    }
                    next[r * a + letter] = acc;
                }
            }
            std::mem::swap(&mut row, &mut next);
        }
        for b in branches.iter().filter(|b| b.len == len && b.hi >= 0) {
            let upper = (b.hi as usize).min(width - 1);
            for (letter, tot) in totals.iter_mut().enumerate() {
                *tot += &row[upper * a + letter];
                if b.lo > 0 {
                    *tot -= &row[(b.lo as usize - 1) * a + letter];
                }
            }
        }
    }
    totals
}

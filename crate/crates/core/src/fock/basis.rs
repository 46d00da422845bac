use std::collections::HashMap;

use crate::error::{Error, Result};

/// Default limit on the number of basis states.
pub const DEFAULT_MEMORY_CAP: usize = 2_000_000;

/// Largest occupation representable in the packed basis.
const MAX_OCCUPATION: usize = u8::MAX as usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sector {
    /// All states with at most this many particles.
    Cutoff(usize),
    /// Exactly this many particles.
    Fixed(usize),
}

impl Sector {
    pub fn max_particles(self) -> usize {
        match self {
            Sector::Cutoff(n) | Sector::Fixed(n) => n,
        }
    }
}

/// Occupation-number basis in lexicographic order.
#[derive(Clone, Debug)]
pub struct FockBasis {
    modes: usize,
    sector: Sector,
    occupations: Vec<u8>,
    totals: Vec<u16>,
    index: HashMap<Box<[u8]>, usize>,
}

/// `C(n, k)` saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of basis states of a sector.
pub fn sector_dimension(modes: usize, sector: Sector) -> u128 {
    if modes == 0 {
        return 1;
    }
    match sector {
        Sector::Cutoff(n) => binomial(n + modes, modes),
        Sector::Fixed(n) => binomial(n + modes - 1, modes - 1),
    }
}

impl FockBasis {
    pub fn new(modes: usize, sector: Sector, cap: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::config("oracle.modes", "need at least one mode"));
        }
        if sector.max_particles() > MAX_OCCUPATION {
            return Err(Error::config(
                "oracle.N_max",
                format!("particle number above {MAX_OCCUPATION}"),
            ));
        }
        let dim = sector_dimension(modes, sector);
        if dim > cap as u128 {
            return Err(Error::Capacity {
                dimension: usize::try_from(dim).unwrap_or(usize::MAX),
                cap,
            });
        }
        let dim = dim as usize;
        let mut occupations = Vec::with_capacity(dim * modes);
        let mut current = vec![0u8; modes];
        match sector {
            Sector::Cutoff(n) => enumerate(&mut current, 0, n, false, &mut occupations),
            Sector::Fixed(n) => enumerate(&mut current, 0, n, true, &mut occupations),
        }
        debug_assert_eq!(occupations.len(), dim * modes);
        let mut index = HashMap::with_capacity(dim);
        let mut totals = Vec::with_capacity(dim);
        for (i, occ) in occupations.chunks_exact(modes).enumerate() {
            index.insert(occ.to_vec().into_boxed_slice(), i);
            totals.push(occ.iter().map(|&x| x as u16).sum());
        }
        Ok(Self {
            modes,
            sector,
            occupations,
            totals,
            index,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.totals.len()
    }

    pub fn max_particles(&self) -> usize {
        self.sector.max_particles()
    }

    pub fn occupation(&self, i: usize) -> &[u8] {
        &self.occupations[i * self.modes..(i + 1) * self.modes]
    }

    /// Total particle number of state `i`.
    pub fn particles(&self, i: usize) -> usize {
        self.totals[i] as usize
    }

    pub fn index_of(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn is_same(&self, other: &FockBasis) -> bool {
        self.modes == other.modes && self.sector == other.sector
    }
}

// lexicographic: the first mode is the most significant digit
fn enumerate(current: &mut [u8], pos: usize, remaining: usize, exact: bool, out: &mut Vec<u8>) {
    if pos + 1 == current.len() {
        let lo = if exact { remaining } else { 0 };
        for v in lo..=remaining {
            current[pos] = v as u8;
            out.extend_from_slice(current);
        }
        current[pos] = 0;
        return;
    }
    for v in 0..=remaining {
        current[pos] = v as u8;
        enumerate(current, pos + 1, remaining - v, exact, out);
    }
    current[pos] = 0;
}

/// A creation or annihilation operator on one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

impl Ladder {
    pub fn mode(self) -> usize {
        match self {
            Ladder::Create(m) | Ladder::Annihilate(m) => m,
        }
    }

    pub fn is_creation(self) -> bool {
        matches!(self, Ladder::Create(_))
    }
}

/// Applies the operator product `word[0] word[1] … word[k-1]` to the occupation ket in place
/// and returns its amplitude; 0 when a mode is emptied below zero.
pub fn apply_word(occ: &mut [u8], word: &[Ladder]) -> f64 {
    // accumulate the squared amplitude as an exact integer product
    let mut amp2 = 1.0f64;
    for op in word.iter().rev() {
        match *op {
            Ladder::Annihilate(m) => {
                let n = occ[m];
                if n == 0 {
                    return 0.0;
                }
                amp2 *= n as f64;
                occ[m] = n - 1;
            }
            Ladder::Create(m) => {
                let n = occ[m];
                if n as usize >= MAX_OCCUPATION {
                    return 0.0;
                }
                occ[m] = n + 1;
                amp2 *= (n + 1) as f64;
            }
        }
    }
    amp2.sqrt()
}

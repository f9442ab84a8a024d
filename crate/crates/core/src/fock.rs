//! Fixed-particle-number occupation bases over two-level modes.
//!
//! Mode 0 is the system site, modes `1..n_modes` are bath modes. A basis ket
//! is the product of creation operators in descending mode order acting on
//! the vacuum, e.g. `c_2† c_0† |vac>` for occupied modes {0, 2}. Under that
//! convention a hop `c_i† c_j` picks up `(-1)^m` with `m` the number of
//! occupied modes strictly between `i` and `j`; spin ladder operators commute
//! across sites and never produce a sign.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of modes a single-word bitmask can hold.
pub const MAX_MODES: usize = 64;

/// Default cap on the number of basis states of one sector.
pub const DEFAULT_MAX_DIM: usize = 500_000;

/// Operator algebra of the two-level modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermion,
    Spin,
}

impl Statistics {
    pub const ALL: [Statistics; 2] = [Statistics::Fermion, Statistics::Spin];

    pub fn as_str(self) -> &'static str {
        match self {
            Statistics::Fermion => "fermion",
            Statistics::Spin => "spin",
        }
    }
}

impl fmt::Display for Statistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Statistics {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fermion" | "fermions" | "fermionic" => Ok(Statistics::Fermion),
            "spin" | "spins" => Ok(Statistics::Spin),
            other => Err(Error::arg(format!(
                "unknown statistics '{other}' (expected 'fermion' or 'spin')"
            ))),
        }
    }
}

/// Occupation bitmask: bit `j` set means mode `j` is occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationState(pub u64);

impl OccupationState {
    /// Builds the state with exactly the listed modes occupied.
    pub fn from_modes(modes: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &m in modes {
            if m >= MAX_MODES {
                return Err(Error::arg(format!("mode index {m} exceeds {MAX_MODES}")));
            }
            if bits & (1 << m) != 0 {
                return Err(Error::arg(format!("mode {m} listed twice")));
            }
            bits |= 1 << m;
        }
        Ok(OccupationState(bits))
    }

    #[inline]
    pub fn bits(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_occupied(self, mode: usize) -> bool {
        (self.0 >> mode) & 1 == 1
    }

    #[inline]
    pub fn particle_count(self) -> u32 {
        self.0.count_ones()
    }

    /// Occupied modes in ascending order.
    pub fn occupied_modes(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let m = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(m)
            }
        })
    }
}

impl fmt::Display for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// Result of applying `O_i† O_j` to a basis ket.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hop {
    pub state: OccupationState,
    pub sign: i8,
}

/// Applies `O_i† O_j` to `s`.
///
/// Returns `Ok(None)` when mode `j` is empty or mode `i` is already occupied.
pub fn apply_hop(
    s: OccupationState,
    i: usize,
    j: usize,
    statistics: Statistics,
) -> Result<Option<Hop>> {
    if i == j {
        return Err(Error::arg(format!(
            "hop from mode {j} onto itself is an occupation, not a hop"
        )));
    }
    if i >= MAX_MODES || j >= MAX_MODES {
        return Err(Error::arg(format!(
            "hop ({i} <- {j}) outside {MAX_MODES} modes"
        )));
    }
    if !s.is_occupied(j) || s.is_occupied(i) {
        return Ok(None);
    }
    let state = OccupationState((s.0 & !(1 << j)) | (1 << i));
    let sign = match statistics {
        Statistics::Spin => 1,
        Statistics::Fermion => {
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            // bits strictly between lo and hi
            let between = ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1);
            if (s.0 & between).count_ones().is_multiple_of(2) {
                1
            } else {
                -1
            }
        }
    };
    Ok(Some(Hop { state, sign }))
}

/// Pascal triangle `C(n, k)` for `0 <= k <= n <= max_n`.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    max_n: usize,
    rows: Vec<Vec<u128>>,
}

impl BinomialTable {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = vec![1u128; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        Self { max_n, rows }
    }

    /// `C(n, k)`, zero when `k > n`.
    pub fn get(&self, n: usize, k: usize) -> u128 {
        assert!(n <= self.max_n, "binomial table holds n <= {}", self.max_n);
        if k > n {
            0
        } else {
            self.rows[n][k]
        }
    }
}

/// All occupation states with a fixed particle number, in increasing bitmask order.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    n_modes: usize,
    n_particles: usize,
    states: Vec<OccupationState>,
    binomial: BinomialTable,
}

impl SectorBasis {
    /// Enumerates the sector under [`DEFAULT_MAX_DIM`].
    pub fn enumerate(n_modes: usize, n_particles: usize) -> Result<Self> {
        Self::enumerate_with_budget(n_modes, n_particles, DEFAULT_MAX_DIM)
    }

    pub fn enumerate_with_budget(
        n_modes: usize,
        n_particles: usize,
        max_dim: usize,
    ) -> Result<Self> {
        if n_modes == 0 || n_modes > MAX_MODES {
            return Err(Error::arg(format!(
                "number of modes must be in 1..={MAX_MODES}, got {n_modes}"
            )));
        }
        if n_particles > n_modes {
            return Err(Error::arg(format!(
                "{n_particles} particles do not fit into {n_modes} modes"
            )));
        }
        let binomial = BinomialTable::new(n_modes);
        let dim = binomial.get(n_modes, n_particles);
        if dim > max_dim as u128 {
            return Err(Error::Capacity {
                what: format!("sector C({n_modes}, {n_particles})"),
                dim,
                budget: max_dim as u128,
            });
        }

        let mut states = Vec::with_capacity(dim as usize);
        if n_particles == 0 {
            states.push(OccupationState(0));
        } else {
            let limit: u128 = 1u128 << n_modes;
            let mut v: u128 = (1u128 << n_particles) - 1;
            while v < limit {
                states.push(OccupationState(v as u64));
                // Gosper's hack: next larger integer with the same popcount.
                let t = v | (v - 1);
                let not_t = !t;
                v = (t + 1) | (((not_t & not_t.wrapping_neg()) - 1) >> (v.trailing_zeros() + 1));
            }
        }
        debug_assert_eq!(states.len() as u128, dim);

        Ok(Self {
            n_modes,
            n_particles,
            states,
            binomial,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[OccupationState] {
        &self.states
    }

    /// Basis state at position `index`.
    pub fn unrank(&self, index: usize) -> OccupationState {
        self.states[index]
    }

    fn check_member(&self, s: OccupationState) -> Result<()> {
        if s.particle_count() as usize != self.n_particles {
            return Err(Error::arg(format!(
                "state {s} has {} particles, sector holds {}",
                s.particle_count(),
                self.n_particles
            )));
        }
        if self.n_modes < MAX_MODES && s.0 >> self.n_modes != 0 {
            return Err(Error::arg(format!(
                "state {s} occupies modes beyond {}",
                self.n_modes
            )));
        }
        Ok(())
    }

    /// Position of `s` via the combinatorial number system.
    pub fn rank(&self, s: OccupationState) -> Result<usize> {
        self.check_member(s)?;
        let idx: u128 = s
            .occupied_modes()
            .enumerate()
            .map(|(t, mode)| self.binomial.get(mode, t + 1))
            .sum();
        Ok(idx as usize)
    }

    /// Position of `s` by binary search over the stored states.
    pub fn rank_by_lookup(&self, s: OccupationState) -> Result<usize> {
        self.check_member(s)?;
        self.states
            .binary_search(&s)
            .map_err(|_| Error::arg(format!("state {s} not in sector")))
    }
}

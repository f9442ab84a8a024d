//! Resonant-level Hamiltonian in a particle-number sector, and the
//! single-particle matrix of the fermionic model.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{apply_hop, SectorBasis, Statistics};

/// One system level coupled to `N_E` bath modes with real couplings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub omega0: f64,
    pub omegas: Vec<f64>,
    pub couplings: Vec<f64>,
    pub statistics: Statistics,
}

impl ModelSpec {
    pub fn new(
        omega0: f64,
        omegas: Vec<f64>,
        couplings: Vec<f64>,
        statistics: Statistics,
    ) -> Result<Self> {
        let model = Self {
            omega0,
            omegas,
            couplings,
            statistics,
        };
        model.validate()?;
        Ok(model)
    }

    /// Uniform coupling `v` to every mode.
    pub fn uniform(omega0: f64, omegas: Vec<f64>, v: f64, statistics: Statistics) -> Result<Self> {
        let couplings = vec![v; omegas.len()];
        Self::new(omega0, omegas, couplings, statistics)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omegas.is_empty() {
            return Err(Error::arg("the bath needs at least one mode"));
        }
        if self.omegas.len() != self.couplings.len() {
            return Err(Error::arg(format!(
                "{} bath frequencies but {} couplings",
                self.omegas.len(),
                self.couplings.len()
            )));
        }
        if self.omegas.len() + 1 > crate::fock::MAX_MODES {
            return Err(Error::arg("too many bath modes for a single-word bitmask"));
        }
        let all_finite = std::iter::once(&self.omega0)
            .chain(&self.omegas)
            .chain(&self.couplings)
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::arg("frequencies and couplings must be finite"));
        }
        Ok(())
    }

    pub fn n_bath(&self) -> usize {
        self.omegas.len()
    }

    pub fn n_modes(&self) -> usize {
        self.omegas.len() + 1
    }

    /// Frequency of mode `j`, with mode 0 the system.
    pub fn mode_frequency(&self, j: usize) -> f64 {
        if j == 0 {
            self.omega0
        } else {
            self.omegas[j - 1]
        }
    }

    pub fn with_statistics(&self, statistics: Statistics) -> Self {
        Self {
            statistics,
            ..self.clone()
        }
    }
}

/// Equally spaced bath frequencies spanning `[-bandwidth/2, bandwidth/2]`.
///
/// A single mode sits at zero.
pub fn uniform_band(n_bath: usize, bandwidth: f64) -> Vec<f64> {
    match n_bath {
        0 => Vec::new(),
        1 => vec![0.0],
        n => {
            let spacing = bandwidth / (n - 1) as f64;
            (0..n)
                .map(|k| -bandwidth / 2.0 + k as f64 * spacing)
                .collect()
        }
    }
}

/// Real symmetric matrix stored as upper-triangle coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    /// `(row, col, value)` with `row <= col`, sorted by row then column.
    entries: Vec<(usize, usize, f64)>,
}

impl SparseHermitian {
    pub fn from_upper_entries(dim: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, v) in &entries {
            if r > c || c >= dim {
                return Err(Error::arg(format!(
                    "entry ({r}, {c}) is not in the upper triangle of a {dim}x{dim} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::arg(format!("entry ({r}, {c}) is not finite")));
            }
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Element `(r, c)`, summing duplicate coordinates.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        let start = self
            .entries
            .partition_point(|&(er, ec, _)| (er, ec) < (r, c));
        self.entries[start..]
            .iter()
            .take_while(|&&(er, ec, _)| er == r && ec == c)
            .map(|&(_, _, v)| v)
            .sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
            if r != c {
                m[(c, r)] += v;
            }
        }
        m
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for &(r, c, v) in &self.entries {
            y[r] += x[c] * v;
            if r != c {
                y[c] += x[r] * v;
            }
        }
    }

    /// `<x|H|x>`, real for Hermitian `H`.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        self.entries
            .iter()
            .map(|&(r, c, v)| {
                let term = (x[r].conj() * x[c]).re * v;
                if r == c {
                    term
                } else {
                    2.0 * term
                }
            })
            .sum()
    }
}

/// Assembles the many-body Hamiltonian of `model` in `basis`.
pub fn build_many_body(model: &ModelSpec, basis: &SectorBasis) -> Result<SparseHermitian> {
    model.validate()?;
    if basis.n_modes() != model.n_modes() {
        return Err(Error::arg(format!(
            "basis has {} modes but the model has {}",
            basis.n_modes(),
            model.n_modes()
        )));
    }
    let mut entries = Vec::new();
    for (r, &s) in basis.states().iter().enumerate() {
        let diag: f64 = s.occupied_modes().map(|j| model.mode_frequency(j)).sum();
        entries.push((r, r, diag));
        // Each coupled pair is emitted once, from the state holding the
        // particle on the system site.
        if !s.is_occupied(0) {
            continue;
        }
        for k in 1..model.n_modes() {
            let v = model.couplings[k - 1];
            if v == 0.0 {
                continue;
            }
            if let Some(hop) = apply_hop(s, k, 0, model.statistics)? {
                let c = basis.rank(hop.state)?;
                let (lo, hi) = if r < c { (r, c) } else { (c, r) };
                entries.push((lo, hi, f64::from(hop.sign) * v));
            }
        }
    }
    SparseHermitian::from_upper_entries(basis.dim(), entries)
}

/// Single-particle matrix `A` with `H = Σ A_ij c_i† c_j`.
///
/// Only the fermionic model reduces to this form.
pub fn build_single_body(model: &ModelSpec) -> Result<DMatrix<f64>> {
    model.validate()?;
    let n = model.n_modes();
    let mut a = DMatrix::zeros(n, n);
    a[(0, 0)] = model.omega0;
    for k in 1..n {
        a[(k, k)] = model.omegas[k - 1];
        a[(0, k)] = model.couplings[k - 1];
        a[(k, 0)] = model.couplings[k - 1];
    }
    Ok(a)
}

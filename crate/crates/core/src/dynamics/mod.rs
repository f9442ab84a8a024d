//! Pure-state propagation in a particle-number sector and population
//! observables, plus the single-particle route for the fermionic model.

mod krylov;
mod single_body;

use faer::{Col, Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{OccupationState, SectorBasis};
use crate::hamiltonian::SparseHermitian;

pub use krylov::KrylovOptions;
pub use single_body::single_body_population;

/// Samples reconstructed per matrix product by the dense backend.
const DENSE_BATCH: usize = 64;

/// Sectors up to this dimension are propagated by full diagonalization.
pub const DEFAULT_DENSE_THRESHOLD: usize = 4000;

/// Uniform sampling `t_i = i * t_max / n_steps`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::arg(format!(
                "time horizon must be positive, got {t_max}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::arg("time grid needs at least one step"));
        }
        Ok(Self { t_max, n_steps })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_samples(&self) -> usize {
        self.n_steps + 1
    }

    pub fn step(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.t_max / self.n_steps as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples()).map(|i| self.time(i))
    }

    /// Same horizon, twice as many steps.
    pub fn refined(&self) -> Self {
        Self {
            t_max: self.t_max,
            n_steps: 2 * self.n_steps,
        }
    }
}

/// Observable sampled on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub label: String,
}

impl TimeSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.n_samples() {
            return Err(Error::arg(format!(
                "{} values for a grid of {} samples",
                values.len(),
                grid.n_samples()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::numerical(format!("non-finite value at sample {i}")));
        }
        Ok(Self {
            grid,
            values,
            label: label.into(),
        })
    }
}

/// Amplitudes over the states of a [`SectorBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<Complex64>);

impl StateVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Unit amplitude on the basis state with exactly `occupied_modes` filled.
pub fn initial_state(basis: &SectorBasis, occupied_modes: &[usize]) -> Result<StateVector> {
    if occupied_modes.len() != basis.n_particles() {
        return Err(Error::arg(format!(
            "{} occupied modes given for a {}-particle sector",
            occupied_modes.len(),
            basis.n_particles()
        )));
    }
    let s = OccupationState::from_modes(occupied_modes)?;
    let idx = basis.rank(s)?;
    let mut amps = vec![Complex64::default(); basis.dim()];
    amps[idx] = Complex64::new(1.0, 0.0);
    Ok(StateVector(amps))
}

/// `<O_0† O_0>`: weight on basis states with the system site occupied.
pub fn system_population(psi: &StateVector, basis: &SectorBasis) -> f64 {
    debug_assert_eq!(psi.dim(), basis.dim());
    basis
        .states()
        .iter()
        .zip(&psi.0)
        .filter(|(s, _)| s.is_occupied(0))
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Propagation backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    /// Full diagonalization, exact phase evolution per sample.
    DenseEig,
    /// Adaptive Lanczos exponential between samples.
    Krylov(KrylovOptions),
}

impl Method {
    /// Dense up to `dense_threshold`, Krylov with default options above.
    pub fn for_dim(dim: usize, dense_threshold: usize) -> Self {
        if dim <= dense_threshold {
            Method::DenseEig
        } else {
            Method::Krylov(KrylovOptions::default())
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::DenseEig => "dense-eig",
            Method::Krylov(_) => "krylov",
        }
    }
}

/// Conservation diagnostics of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PropagationReport {
    pub max_norm_drift: f64,
    pub max_energy_drift: f64,
    /// Krylov substeps taken (zero for the dense backend).
    pub substeps: usize,
}

/// Propagates `psi0` and hands each sampled state to `observe`.
pub fn evolve_with<F>(
    h: &SparseHermitian,
    psi0: &StateVector,
    grid: &TimeGrid,
    method: Method,
    dense_threshold: usize,
    mut observe: F,
) -> Result<PropagationReport>
where
    F: FnMut(usize, &StateVector),
{
    if h.dim() != psi0.dim() {
        return Err(Error::arg(format!(
            "Hamiltonian dimension {} does not match state dimension {}",
            h.dim(),
            psi0.dim()
        )));
    }
    let norm0 = psi0.norm();
    let energy0 = h.expectation(&psi0.0);
    let mut report = PropagationReport::default();
    let track = |psi: &StateVector, report: &mut PropagationReport| {
        report.max_norm_drift = report.max_norm_drift.max((psi.norm() - norm0).abs());
        report.max_energy_drift = report
            .max_energy_drift
            .max((h.expectation(&psi.0) - energy0).abs());
    };

    match method {
        Method::DenseEig => {
            if h.dim() > dense_threshold {
                return Err(Error::Capacity {
                    what: "dense diagonalization".into(),
                    dim: h.dim() as u128,
                    budget: dense_threshold as u128,
                });
            }
            let spectral = Spectral::new(h)?;
            let coeffs = spectral.coefficients(psi0);
            let samples: Vec<usize> = (0..grid.n_samples()).collect();
            for chunk in samples.chunks(DENSE_BATCH) {
                let times: Vec<f64> = chunk.iter().map(|&i| grid.time(i)).collect();
                for (&i, psi) in chunk.iter().zip(spectral.states_at(&coeffs, &times)) {
                    track(&psi, &mut report);
                    observe(i, &psi);
                }
            }
        }
        Method::Krylov(options) => {
            let mut propagator = krylov::KrylovPropagator::new(h, options)?;
            let mut psi = psi0.clone();
            track(&psi, &mut report);
            observe(0, &psi);
            let dt = grid.step();
            for i in 1..grid.n_samples() {
                propagator.advance(&mut psi.0, dt)?;
                track(&psi, &mut report);
                observe(i, &psi);
            }
            report.substeps = propagator.substeps;
        }
    }
    Ok(report)
}

/// Every sampled state of the trajectory.
pub fn evolve(
    h: &SparseHermitian,
    psi0: &StateVector,
    grid: &TimeGrid,
    method: Method,
) -> Result<Vec<StateVector>> {
    let mut states = Vec::with_capacity(grid.n_samples());
    evolve_with(h, psi0, grid, method, usize::MAX, |_, psi| {
        states.push(psi.clone())
    })?;
    Ok(states)
}

/// Streams only the system population `n_S(t)`.
pub fn population_series(
    h: &SparseHermitian,
    basis: &SectorBasis,
    psi0: &StateVector,
    grid: &TimeGrid,
    method: Method,
    label: &str,
) -> Result<(TimeSeries, PropagationReport)> {
    let mut values = Vec::with_capacity(grid.n_samples());
    let report = evolve_with(h, psi0, grid, method, usize::MAX, |_, psi| {
        values.push(system_population(psi, basis))
    })?;
    Ok((TimeSeries::new(*grid, values, label)?, report))
}

/// Eigendecomposition `H = U diag(E) U^T` of a real symmetric matrix.
struct Spectral {
    energies: Vec<f64>,
    vectors: Mat<f64>,
}

impl Spectral {
    fn new(h: &SparseHermitian) -> Result<Self> {
        let mut dense = Mat::<f64>::zeros(h.dim(), h.dim());
        for &(r, c, v) in h.entries() {
            dense[(r, c)] = v;
            dense[(c, r)] = v;
        }
        let eig = dense.self_adjoint_eigen(Side::Lower).map_err(|e| {
            Error::numerical(format!(
                "symmetric eigensolver failed (dim {}): {e:?}",
                h.dim()
            ))
        })?;
        Ok(Self {
            energies: eig.S().column_vector().iter().copied().collect(),
            vectors: eig.U().to_owned(),
        })
    }

    /// `<Phi_a|psi>` split into real and imaginary parts.
    fn coefficients(&self, psi: &StateVector) -> (Col<f64>, Col<f64>) {
        let re = Col::from_fn(psi.dim(), |i| psi.0[i].re);
        let im = Col::from_fn(psi.dim(), |i| psi.0[i].im);
        (
            self.vectors.transpose() * &re,
            self.vectors.transpose() * &im,
        )
    }

    /// States at several times from one pass over the eigenvectors.
    fn states_at(&self, coeffs: &(Col<f64>, Col<f64>), times: &[f64]) -> Vec<StateVector> {
        let n = self.energies.len();
        let mut d_re = Mat::<f64>::zeros(n, times.len());
        let mut d_im = Mat::<f64>::zeros(n, times.len());
        for (col, &t) in times.iter().enumerate() {
            for a in 0..n {
                let c = Complex64::new(coeffs.0[a], coeffs.1[a])
                    * Complex64::from_polar(1.0, -self.energies[a] * t);
                d_re[(a, col)] = c.re;
                d_im[(a, col)] = c.im;
            }
        }
        let re = &self.vectors * &d_re;
        let im = &self.vectors * &d_im;
        (0..times.len())
            .map(|col| {
                StateVector(
                    (0..n)
                        .map(|i| Complex64::new(re[(i, col)], im[(i, col)]))
                        .collect(),
                )
            })
            .collect()
    }
}

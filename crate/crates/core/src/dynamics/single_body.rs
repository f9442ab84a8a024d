use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{TimeGrid, TimeSeries};
use crate::error::{Error, Result};

/// System occupation `n_0(t) = Σ_j occ_j |U(t)_{0j}|²` with `U(t) = exp(-iAt)`.
///
/// Valid for the fermionic model started from a Fock state, where the
/// one-particle propagator fixes every population.
pub fn single_body_population(
    a: &DMatrix<f64>,
    initial_occupations: &[u8],
    grid: &TimeGrid,
) -> Result<TimeSeries> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::arg("single-particle matrix must be square"));
    }
    if initial_occupations.len() != n {
        return Err(Error::arg(format!(
            "{} occupations for {n} modes",
            initial_occupations.len()
        )));
    }
    if initial_occupations.iter().any(|&o| o > 1) {
        return Err(Error::arg("occupations must be 0 or 1"));
    }
    if (a - a.transpose()).amax() > 0.0 {
        return Err(Error::arg("single-particle matrix must be symmetric"));
    }
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("single-particle eigensolver did not converge"))?;
    let p = &eig.eigenvectors;
    let occupied: Vec<usize> = (0..n).filter(|&j| initial_occupations[j] == 1).collect();

    let values = grid
        .times()
        .map(|t| {
            let phases: Vec<Complex64> = eig
                .eigenvalues
                .iter()
                .map(|&l| Complex64::from_polar(1.0, -l * t))
                .collect();
            occupied
                .iter()
                .map(|&j| {
                    let u0j: Complex64 = (0..n).map(|k| phases[k] * p[(0, k)] * p[(j, k)]).sum();
                    u0j.norm_sqr()
                })
                .sum()
        })
        .collect();
    TimeSeries::new(*grid, values, "single-body")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Statistics;
    use crate::hamiltonian::{build_single_body, uniform_band, ModelSpec};

    #[test]
    fn empty_and_decoupled_cases() {
        let grid = TimeGrid::new(5.0, 20).unwrap();
        let m = ModelSpec::uniform(0.0, uniform_band(3, 2.0), 1.0, Statistics::Fermion).unwrap();
        let a = build_single_body(&m).unwrap();
        let s = single_body_population(&a, &[0, 0, 0, 0], &grid).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));

        let m = ModelSpec::uniform(0.0, uniform_band(3, 2.0), 0.0, Statistics::Fermion).unwrap();
        let a = build_single_body(&m).unwrap();
        let s = single_body_population(&a, &[1, 0, 1, 0], &grid).unwrap();
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn full_band_stays_full() {
        let grid = TimeGrid::new(5.0, 20).unwrap();
        let m = ModelSpec::uniform(0.1, uniform_band(4, 2.0), 0.8, Statistics::Fermion).unwrap();
        let a = build_single_body(&m).unwrap();
        let s = single_body_population(&a, &[1; 5], &grid).unwrap();
        assert!(s.values.iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn argument_checks() {
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(single_body_population(&a, &[1], &grid).is_err());
        assert!(single_body_population(&a, &[2, 0], &grid).is_err());
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(single_body_population(&b, &[1, 0], &grid).is_err());
    }
}

//! Explicit `2^n`-dimensional operator matrices built from Kronecker products.
//!
//! Index bit `j` is the occupation of mode `j`. Fermionic annihilators carry a
//! Jordan-Wigner string of parity factors over all modes with smaller index;
//! spin lowering operators are bare local ladder operators. Nothing here
//! touches the bitmask logic of [`crate::fock`], which makes these matrices a
//! usable cross-check for it.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::fock::{SectorBasis, Statistics};

/// Largest mode count for which dense operators are built by default.
pub const DEFAULT_MAX_DENSE_MODES: usize = 12;

fn identity() -> Matrix2<f64> {
    Matrix2::identity()
}

/// `|0><1|` in the local basis (empty, occupied).
fn local_lowering() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, 0.0, 0.0)
}

fn parity() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

fn check_modes(n_modes: usize, mode: usize, max_modes: usize) -> Result<()> {
    if n_modes > max_modes {
        return Err(Error::Capacity {
            what: format!("dense operator on {n_modes} modes"),
            dim: 1u128 << n_modes.min(127),
            budget: 1u128 << max_modes,
        });
    }
    if mode >= n_modes {
        return Err(Error::arg(format!("mode {mode} outside {n_modes} modes")));
    }
    Ok(())
}

/// Tensor product with mode `n-1` leftmost so index bit `j` belongs to mode `j`.
fn tensor_chain(n_modes: usize, local: impl Fn(usize) -> Matrix2<f64>) -> DMatrix<f64> {
    let mut acc = DMatrix::<f64>::identity(1, 1);
    for mode in 0..n_modes {
        let m = local(mode);
        let m = DMatrix::from_fn(2, 2, |r, c| m[(r, c)]);
        acc = m.kronecker(&acc);
    }
    acc
}

/// Annihilation (`c_j`) or lowering (`σ_j^-`) operator on `n_modes` modes.
pub fn lowering(n_modes: usize, mode: usize, statistics: Statistics) -> Result<DMatrix<f64>> {
    lowering_with_limit(n_modes, mode, statistics, DEFAULT_MAX_DENSE_MODES)
}

pub fn lowering_with_limit(
    n_modes: usize,
    mode: usize,
    statistics: Statistics,
    max_modes: usize,
) -> Result<DMatrix<f64>> {
    check_modes(n_modes, mode, max_modes)?;
    Ok(tensor_chain(n_modes, |m| {
        if m == mode {
            local_lowering()
        } else if m < mode && statistics == Statistics::Fermion {
            parity()
        } else {
            identity()
        }
    }))
}

/// Creation (`c_j†`) or raising (`σ_j^+`) operator.
pub fn raising(n_modes: usize, mode: usize, statistics: Statistics) -> Result<DMatrix<f64>> {
    Ok(lowering(n_modes, mode, statistics)?.transpose())
}

/// Dense resonant-level Hamiltonian on the full `2^(N_E+1)` space.
pub fn resonant_level_hamiltonian(
    omega0: f64,
    omegas: &[f64],
    couplings: &[f64],
    statistics: Statistics,
) -> Result<DMatrix<f64>> {
    if omegas.len() != couplings.len() {
        return Err(Error::arg("frequency and coupling lists differ in length"));
    }
    let n = omegas.len() + 1;
    let ops: Vec<DMatrix<f64>> = (0..n)
        .map(|j| lowering(n, j, statistics))
        .collect::<Result<_>>()?;
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let number = |j: usize| ops[j].transpose() * &ops[j];
    h += number(0) * omega0;
    for (k, (&w, &v)) in omegas.iter().zip(couplings).enumerate() {
        let k = k + 1;
        h += number(k) * w;
        let hop = ops[0].transpose() * &ops[k];
        h += (&hop + hop.transpose()) * v;
    }
    Ok(h)
}

/// Restriction of a full-space operator to the rows and columns of a sector.
pub fn project(full: &DMatrix<f64>, basis: &SectorBasis) -> DMatrix<f64> {
    let states = basis.states();
    DMatrix::from_fn(states.len(), states.len(), |r, c| {
        full[(states[r].bits() as usize, states[c].bits() as usize)]
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn anticommutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a * b + b * a
    }

    fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        a * b - b * a
    }

    #[test]
    fn canonical_anticommutation() {
        let n = 4;
        let id = DMatrix::<f64>::identity(1 << n, 1 << n);
        for i in 0..n {
            for j in 0..n {
                let ci = lowering(n, i, Statistics::Fermion).unwrap();
                let cj = lowering(n, j, Statistics::Fermion).unwrap();
                let expect = if i == j { id.clone() } else { id.clone() * 0.0 };
                assert_eq!(anticommutator(&ci, &cj.transpose()), expect);
                assert_eq!(anticommutator(&ci, &cj).amax(), 0.0);
            }
        }
    }

    #[test]
    fn spins_commute_across_sites() {
        let n = 4;
        let id = DMatrix::<f64>::identity(1 << n, 1 << n);
        for i in 0..n {
            let si = lowering(n, i, Statistics::Spin).unwrap();
            assert_eq!(anticommutator(&si, &si.transpose()), id);
            for j in 0..n {
                if i != j {
                    let sj = lowering(n, j, Statistics::Spin).unwrap();
                    assert_eq!(commutator(&si, &sj).amax(), 0.0);
                    assert_eq!(commutator(&si, &sj.transpose()).amax(), 0.0);
                }
            }
        }
    }

    #[test]
    fn lowering_clears_its_own_bit() {
        let c = lowering(3, 1, Statistics::Spin).unwrap();
        // |0b010> -> |0b000>
        assert_eq!(c[(0b000, 0b010)], 1.0);
        assert_eq!(c[(0b001, 0b011)], 1.0);
        assert_eq!(c.iter().filter(|&&x| x != 0.0).count(), 4);
    }

    #[test]
    fn refuses_oversized_spaces() {
        assert!(matches!(
            lowering(13, 0, Statistics::Fermion),
            Err(Error::Capacity { .. })
        ));
        assert!(lowering(3, 3, Statistics::Fermion).is_err());
    }
}

//! Short-iterate Lanczos propagation of `exp(-iHt) psi`.
//!
//! Each substep builds an orthonormal Krylov basis from the current state,
//! grows it until the a-posteriori error estimate
//! `|psi| * beta_m * |[exp(-i T_m tau)]_{m,1}|` drops below the tolerance,
//! and halves the substep when the subspace cap is reached first.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::SparseHermitian;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    /// Largest Krylov subspace per substep.
    pub max_subspace: usize,
    /// Accepted error estimate per substep.
    pub tolerance: f64,
    /// Substep halvings allowed before giving up.
    pub max_halvings: u32,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            max_subspace: 30,
            tolerance: 1e-10,
            max_halvings: 40,
        }
    }
}

/// Small-matrix exponential `exp(-i T tau) e_1` from an eigendecomposition of `T`.
struct TridiagonalExp {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl TridiagonalExp {
    fn new(alpha: &[f64], beta: &[f64]) -> Result<Self> {
        let m = alpha.len();
        let mut t = DMatrix::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::try_new(t, f64::EPSILON, 0).ok_or_else(|| {
            Error::numerical(format!(
                "Lanczos tridiagonal eigensolver failed at size {m}"
            ))
        })?;
        Ok(Self {
            values: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    fn apply(&self, tau: f64) -> Vec<Complex64> {
        let m = self.values.len();
        let weights: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(self.vectors[(0, k)], -self.values[k] * tau))
            .collect();
        (0..m)
            .map(|j| (0..m).map(|k| weights[k] * self.vectors[(j, k)]).sum())
            .collect()
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) struct KrylovPropagator<'a> {
    h: &'a SparseHermitian,
    options: KrylovOptions,
    basis: Vec<Vec<Complex64>>,
    work: Vec<Complex64>,
    /// Substep that succeeded last; reused as the first guess.
    last_tau: Option<f64>,
    pub(crate) substeps: usize,
    pub(crate) max_subspace_used: usize,
}

impl<'a> KrylovPropagator<'a> {
    pub(crate) fn new(h: &'a SparseHermitian, options: KrylovOptions) -> Result<Self> {
        if options.max_subspace < 2 {
            return Err(Error::arg("Krylov subspace must hold at least two vectors"));
        }
        if options.tolerance.is_nan() || options.tolerance <= 0.0 {
            return Err(Error::arg("Krylov tolerance must be positive"));
        }
        Ok(Self {
            h,
            options,
            basis: Vec::with_capacity(options.max_subspace + 1),
            work: vec![Complex64::default(); h.dim()],
            last_tau: None,
            substeps: 0,
            max_subspace_used: 0,
        })
    }

    /// Advances `psi` by `dt`.
    pub(crate) fn advance(&mut self, psi: &mut [Complex64], dt: f64) -> Result<()> {
        let mut remaining = dt;
        let mut halvings = 0u32;
        while remaining > 0.0 {
            let mut tau = self.last_tau.map_or(remaining, |t| t.min(remaining));
            // The Krylov basis does not depend on tau; only the small
            // exponential is re-evaluated when the substep shrinks.
            let (scale, alpha, beta, residual) = self.build(psi, tau)?;
            let m = alpha.len();
            let exp = TridiagonalExp::new(&alpha, &beta)?;
            let coeffs = loop {
                let y = exp.apply(tau);
                let err = scale * residual * y[m - 1].norm();
                if err <= self.options.tolerance {
                    break y;
                }
                halvings += 1;
                if halvings > self.options.max_halvings {
                    return Err(Error::numerical(format!(
                        "Krylov step did not reach tolerance {:e}: estimate {err:e} \
                         with subspace {m} and substep {tau:e}",
                        self.options.tolerance
                    )));
                }
                tau *= 0.5;
            };

            for x in psi.iter_mut() {
                *x = Complex64::default();
            }
            for (v, &c) in self.basis.iter().zip(&coeffs) {
                let c = c * scale;
                for (x, &b) in psi.iter_mut().zip(v) {
                    *x += c * b;
                }
            }
            self.substeps += 1;
            self.max_subspace_used = self.max_subspace_used.max(m);
            // Grow the guess again after a run of successful substeps.
            self.last_tau = if tau < remaining { Some(tau) } else { None };
            remaining = if tau >= remaining {
                0.0
            } else {
                remaining - tau
            };
        }
        Ok(())
    }

    /// Lanczos with full reorthogonalization.
    ///
    /// Returns `(|psi|, alpha, beta, beta_m)`; stops early once the error
    /// estimate for `tau` is met or the residual vanishes.
    fn build(&mut self, psi: &[Complex64], tau: f64) -> Result<(f64, Vec<f64>, Vec<f64>, f64)> {
        let scale = norm(psi);
        if !scale.is_finite() {
            return Err(Error::numerical("state vector is not finite"));
        }
        self.basis.clear();
        if scale == 0.0 {
            self.basis.push(vec![Complex64::default(); psi.len()]);
            return Ok((0.0, vec![0.0], vec![], 0.0));
        }
        self.basis.push(psi.iter().map(|&x| x / scale).collect());

        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        let h_norm_guess = self
            .h
            .entries()
            .iter()
            .map(|e| e.2.abs())
            .fold(0.0, f64::max);
        let breakdown = 1e-13 * (1.0 + h_norm_guess);
        loop {
            let j = self.basis.len() - 1;
            self.h.apply(&self.basis[j], &mut self.work);
            let a = dot(&self.basis[j], &self.work).re;
            alpha.push(a);
            for (w, &v) in self.work.iter_mut().zip(&self.basis[j]) {
                *w -= v * a;
            }
            if j > 0 {
                let b = beta[j - 1];
                for (w, &v) in self.work.iter_mut().zip(&self.basis[j - 1]) {
                    *w -= v * b;
                }
            }
            for v in &self.basis {
                let overlap = dot(v, &self.work);
                for (w, &x) in self.work.iter_mut().zip(v) {
                    *w -= x * overlap;
                }
            }
            let residual = norm(&self.work);
            if residual <= breakdown {
                return Ok((scale, alpha, beta, 0.0));
            }
            let m = alpha.len();
            if m >= 2 || m == self.options.max_subspace {
                let y = TridiagonalExp::new(&alpha, &beta)?.apply(tau);
                let err = scale * residual * y[m - 1].norm();
                if err <= self.options.tolerance || m == self.options.max_subspace {
                    return Ok((scale, alpha, beta, residual));
                }
            }
            beta.push(residual);
            let next = self.work.iter().map(|&w| w / residual).collect();
            self.basis.push(next);
        }
    }
}

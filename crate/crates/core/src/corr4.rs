//! Four-point bath correlator `Tr_B[O†_{k1} O_{k2} O_{k3} O†_{k4} ρ_B]` over a
//! product bath state `ρ_B = ⊗_k [(1-f_k)|0><0| + f_k|1><1|]`.
//!
//! Indices address bath modes `0..N_E` and map to operator positions exactly
//! as written, creators at positions 1 and 4.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::dense;
use crate::error::{Error, Result};
use crate::fock::Statistics;
use crate::me2::BathOccupation;

/// Largest bath accepted by the dense oracle.
pub const MAX_BRUTEFORCE_MODES: usize = dense::DEFAULT_MAX_DENSE_MODES;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrQuery {
    pub indices: [usize; 4],
    pub statistics: Statistics,
    pub occ: BathOccupation,
}

impl CorrQuery {
    pub fn new(indices: [usize; 4], statistics: Statistics, occ: BathOccupation) -> Result<Self> {
        let q = Self {
            indices,
            statistics,
            occ,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.occ.len();
        if let Some(k) = self.indices.iter().find(|&&k| k >= n) {
            return Err(Error::arg(format!(
                "mode index {k} outside a bath of {n} modes"
            )));
        }
        Ok(())
    }

    pub fn pattern(&self) -> Pattern {
        Pattern::of(self.indices)
    }
}

/// Index coincidence pattern of a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// `k1 = k2 ≠ k3 = k4`.
    DirectPairing,
    /// `k1 = k3 ≠ k2 = k4`, the crossing pairing that carries the exchange sign.
    ExchangePairing,
    /// `k1 = k4 ≠ k2 = k3`.
    DoubleCreation,
    /// `k1 = k2 = k3 = k4`.
    EqualMode,
    /// Anything else.
    Unpaired,
}

impl Pattern {
    pub fn of([k1, k2, k3, k4]: [usize; 4]) -> Self {
        if k1 == k2 && k2 == k3 && k3 == k4 {
            Pattern::EqualMode
        } else if k1 == k2 && k3 == k4 {
            Pattern::DirectPairing
        } else if k1 == k3 && k2 == k4 {
            Pattern::ExchangePairing
        } else if k1 == k4 && k2 == k3 {
            Pattern::DoubleCreation
        } else {
            Pattern::Unpaired
        }
    }
}

/// Closed-form value.
///
/// The three pairings have explicit formulas; the equal-mode and unpaired
/// patterns are reduced mode by mode (2×2 products with parity strings for
/// fermions) and factorized over the product state.
pub fn corr4_closed(q: &CorrQuery) -> Result<Complex64> {
    q.validate()?;
    let f = q.occ.values();
    let [k1, k2, k3, _] = q.indices;
    let value = match q.pattern() {
        Pattern::DirectPairing => f[k1] * (1.0 - f[k3]),
        Pattern::ExchangePairing => {
            let magnitude = f[k1] * (1.0 - f[k2]);
            match q.statistics {
                Statistics::Fermion => -magnitude,
                Statistics::Spin => magnitude,
            }
        }
        Pattern::DoubleCreation => 0.0,
        Pattern::EqualMode | Pattern::Unpaired => per_mode_reduction(q),
    };
    Ok(Complex64::new(value, 0.0))
}

#[derive(Clone, Copy)]
enum Ladder {
    Create,
    Annihilate,
}

const ORDER: [Ladder; 4] = [
    Ladder::Create,
    Ladder::Annihilate,
    Ladder::Annihilate,
    Ladder::Create,
];

fn per_mode_reduction(q: &CorrQuery) -> f64 {
    let lowering = Matrix2::new(0.0, 1.0, 0.0, 0.0);
    let raising = lowering.transpose();
    let parity = Matrix2::new(1.0, 0.0, 0.0, -1.0);
    q.occ
        .values()
        .iter()
        .enumerate()
        .map(|(mode, &f)| {
            let local = q.indices.iter().zip(ORDER).fold(
                Matrix2::<f64>::identity(),
                |acc, (&k, ladder)| {
                    let factor = if k == mode {
                        match ladder {
                            Ladder::Create => raising,
                            Ladder::Annihilate => lowering,
                        }
                    } else if mode < k && q.statistics == Statistics::Fermion {
                        parity
                    } else {
                        Matrix2::identity()
                    };
                    acc * factor
                },
            );
            (1.0 - f) * local[(0, 0)] + f * local[(1, 1)]
        })
        .product()
}

/// Dense oracle: explicit `2^N_E` matrices multiplied in the written order
/// and traced against the product state.
pub fn corr4_bruteforce(q: &CorrQuery) -> Result<Complex64> {
    q.validate()?;
    let n = q.occ.len();
    if n > MAX_BRUTEFORCE_MODES {
        return Err(Error::Capacity {
            what: format!("dense correlator on {n} modes"),
            dim: 1u128 << n.min(127),
            budget: 1u128 << MAX_BRUTEFORCE_MODES,
        });
    }
    let [k1, k2, k3, k4] = q.indices;
    let stat = q.statistics;
    let product = dense::raising(n, k1, stat)?
        * dense::lowering(n, k2, stat)?
        * dense::lowering(n, k3, stat)?
        * dense::raising(n, k4, stat)?;
    let f = q.occ.values();
    let trace: f64 = (0..1usize << n)
        .map(|idx| {
            let weight: f64 = f
                .iter()
                .enumerate()
                .map(|(m, &fm)| if idx >> m & 1 == 1 { fm } else { 1.0 - fm })
                .product();
            product[(idx, idx)] * weight
        })
        .sum();
    Ok(Complex64::new(trace, 0.0))
}

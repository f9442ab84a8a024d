//! Second-order master equation for the system level.
//!
//! The reduced state obeys
//!
//! ```text
//! dρ/dt = -∫_0^t dt' ( C1(t-t') [O, O† ρ(t')] + C2(t-t') [ρ(t') O†, O] + h.c. )
//! ```
//!
//! where the Hermitian-conjugate terms carry either the delayed state `ρ(t')`
//! ([`KernelForm::TimeNonlocal`]) or the current state `ρ(t)`
//! ([`KernelForm::Mixed`], the default). With discrete-bath kernels
//! `C1(τ) = Σ_k |V_k|² e^{-i(ω0-ω_k)τ} f_k` and the same sum weighted by
//! `1 - f_k` for `C2`. The kernels only involve mode occupations, so the
//! solver is identical for fermionic and spin baths. `ρ` is expressed in the
//! interaction picture of the system level; populations are unaffected.
//!
//! The memory integral uses the trapezoid rule and the outer integration is a
//! Heun predictor-corrector over the full history, both on a grid
//! [`Me2Options::substeps`] times finer than the output grid.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{TimeGrid, TimeSeries};
use crate::error::{Error, Result};
use crate::hamiltonian::ModelSpec;

/// Trace drift above which a trajectory is rejected.
pub const MAX_TRACE_DRIFT: f64 = 1e-6;

/// How the per-mode occupations were obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OccupationSource {
    /// Zero-temperature step: the listed number of modes completely filled.
    Step {
        n_exc: usize,
    },
    FermiDirac {
        beta: f64,
        mu: f64,
    },
    Explicit,
}

/// Occupation probabilities `f_k` of the bath modes (index `k-1` for mode `k`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathOccupation {
    f: Vec<f64>,
    source: OccupationSource,
}

impl BathOccupation {
    /// Modes listed in `occupied` (numbered `1..=n_bath`) are filled, all others empty.
    pub fn step(n_bath: usize, occupied: &[usize]) -> Result<Self> {
        let mut f = vec![0.0; n_bath];
        for &k in occupied {
            if k == 0 || k > n_bath {
                return Err(Error::arg(format!("bath mode {k} outside 1..={n_bath}")));
            }
            if f[k - 1] == 1.0 {
                return Err(Error::arg(format!("bath mode {k} listed twice")));
            }
            f[k - 1] = 1.0;
        }
        Ok(Self {
            f,
            source: OccupationSource::Step {
                n_exc: occupied.len(),
            },
        })
    }

    /// Fermi-Dirac occupations. `beta = +inf` gives the zero-temperature
    /// step with `f = 1/2` exactly at the chemical potential.
    pub fn fermi_dirac(omegas: &[f64], beta: f64, mu: f64) -> Result<Self> {
        if beta.is_nan() || beta <= 0.0 || !mu.is_finite() {
            return Err(Error::arg("Fermi-Dirac needs beta > 0 and a finite mu"));
        }
        let f = omegas
            .iter()
            .map(|&w| {
                let d = w - mu;
                if d == 0.0 {
                    0.5
                } else if beta.is_infinite() {
                    if d < 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let x = beta * d;
                    if x > 0.0 {
                        let e = (-x).exp();
                        e / (1.0 + e)
                    } else {
                        1.0 / (1.0 + x.exp())
                    }
                }
            })
            .collect();
        Ok(Self {
            f,
            source: OccupationSource::FermiDirac { beta, mu },
        })
    }

    pub fn explicit(f: Vec<f64>) -> Result<Self> {
        if let Some(x) = f.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::arg(format!("occupation {x} outside [0, 1]")));
        }
        Ok(Self {
            f,
            source: OccupationSource::Explicit,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    pub fn source(&self) -> &OccupationSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// Bath correlation functions tabulated at `τ_n = n · step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub step: f64,
    pub c1: Vec<Complex64>,
    pub c2: Vec<Complex64>,
}

fn kernel_sums(model: &ModelSpec, occ: &BathOccupation, tau: f64) -> (Complex64, Complex64) {
    let mut c1 = Complex64::default();
    let mut c2 = Complex64::default();
    for ((&w, &v), &f) in model.omegas.iter().zip(&model.couplings).zip(occ.values()) {
        let term = Complex64::from_polar(v * v, -(model.omega0 - w) * tau);
        c1 += term * f;
        c2 += term * (1.0 - f);
    }
    (c1, c2)
}

/// Evaluates `C1` and `C2` at every grid delay as exact finite sums.
pub fn build_kernel(model: &ModelSpec, occ: &BathOccupation, grid: &TimeGrid) -> Result<Kernel> {
    model.validate()?;
    if occ.len() != model.n_bath() {
        return Err(Error::arg(format!(
            "{} occupations for {} bath modes",
            occ.len(),
            model.n_bath()
        )));
    }
    let (c1, c2) = grid.times().map(|tau| kernel_sums(model, occ, tau)).unzip();
    Ok(Kernel {
        step: grid.step(),
        c1,
        c2,
    })
}

/// 2×2 reduced density matrix in the basis (empty, occupied).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2(pub Matrix2<Complex64>);

impl DensityMatrix2 {
    pub fn empty() -> Self {
        Self::from_population(0.0)
    }

    pub fn occupied() -> Self {
        Self::from_population(1.0)
    }

    /// Diagonal state with occupation probability `n`.
    pub fn from_population(n: f64) -> Self {
        let z = Complex64::default();
        Self(Matrix2::new(
            Complex64::new(1.0 - n, 0.0),
            z,
            z,
            Complex64::new(n, 0.0),
        ))
    }

    pub fn population(&self) -> f64 {
        self.0[(1, 1)].re
    }

    pub fn coherence(&self) -> Complex64 {
        self.0[(0, 1)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.0[(0, 0)].re;
        let d = self.0[(1, 1)].re;
        let b = 0.5 * (self.0[(0, 1)] + self.0[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }

    pub fn validate(&self) -> Result<()> {
        if self
            .0
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::arg("density matrix has non-finite entries"));
        }
        if self.hermiticity_error() > 1e-10 {
            return Err(Error::arg("density matrix is not Hermitian"));
        }
        if (self.trace() - 1.0).norm() > 1e-8 {
            return Err(Error::arg(format!(
                "density matrix trace is {}",
                self.trace()
            )));
        }
        let [lo, hi] = self.eigenvalues();
        if lo < -1e-6 || hi > 1.0 + 1e-6 {
            return Err(Error::arg(format!(
                "density matrix eigenvalues [{lo}, {hi}] outside [0, 1]"
            )));
        }
        Ok(())
    }
}

/// Which terms of the memory integral see the delayed state `ρ(t')`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KernelForm {
    /// Every term carries `ρ(t')`.
    TimeNonlocal,
    /// The C1/C2 terms carry `ρ(t')`, their Hermitian conjugates carry `ρ(t)`.
    /// Only the Hermitian part of this generator is kept, which leaves the
    /// populations unchanged and keeps `ρ` Hermitian for asymmetric baths.
    /// A half-filled resonant mode relaxes to `n = 1/2` instead of oscillating.
    #[default]
    Mixed,
}

/// Solution of the second-order master equation.
#[derive(Debug, Clone)]
pub struct Me2Solution {
    pub population: TimeSeries,
    pub states: Vec<DensityMatrix2>,
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
}

type M2 = Matrix2<Complex64>;

fn lowering() -> M2 {
    let z = Complex64::default();
    Matrix2::new(z, Complex64::new(1.0, 0.0), z, z)
}

/// `[O, O† ρ]` and `[ρ O†, O]`.
#[derive(Clone, Copy)]
struct Superops {
    first: M2,
    second: M2,
}

impl Superops {
    fn of(rho: &M2) -> Self {
        let o = lowering();
        let od = o.adjoint();
        let od_rho = od * rho;
        let rho_od = rho * od;
        Self {
            first: o * od_rho - od_rho * o,
            second: rho_od * o - o * rho_od,
        }
    }
}

struct Integrator<'a> {
    kernel: &'a Kernel,
    form: KernelForm,
    history: Vec<Superops>,
    /// `∫_0^{t_n} C(τ) dτ` by the trapezoid rule, for the mixed form.
    kernel_integrals: Vec<(Complex64, Complex64)>,
}

impl<'a> Integrator<'a> {
    fn new(kernel: &'a Kernel, form: KernelForm) -> Self {
        let h = kernel.step;
        let mut kernel_integrals = Vec::with_capacity(kernel.c1.len());
        let mut acc = (Complex64::default(), Complex64::default());
        kernel_integrals.push(acc);
        for n in 1..kernel.c1.len() {
            acc.0 += (kernel.c1[n - 1] + kernel.c1[n]) * (0.5 * h);
            acc.1 += (kernel.c2[n - 1] + kernel.c2[n]) * (0.5 * h);
            kernel_integrals.push(acc);
        }
        Self {
            kernel,
            form,
            history: Vec::new(),
            kernel_integrals,
        }
    }

    /// Right-hand side at `t_n` where `n = history.len() - 1`, given `ρ(t_n)`.
    fn rhs(&self, rho_n: &M2) -> M2 {
        let n = self.history.len() - 1;
        if n == 0 {
            return M2::zeros();
        }
        let h = self.kernel.step;
        let mut x = M2::zeros();
        for (j, ops) in self.history.iter().enumerate() {
            let weight = if j == 0 || j == n { 0.5 * h } else { h };
            let lag = n - j;
            x += (ops.first * self.kernel.c1[lag] + ops.second * self.kernel.c2[lag])
                * Complex64::from(weight);
        }
        match self.form {
            KernelForm::TimeNonlocal => -(x + x.adjoint()),
            KernelForm::Mixed => {
                let (i1, i2) = self.kernel_integrals[n];
                let now = Superops::of(rho_n);
                let y = now.first * i1 + now.second * i2;
                let generator = x + y.adjoint();
                -(generator + generator.adjoint()) * Complex64::from(0.5)
            }
        }
    }
}

/// Internal grid refinement used by [`solve_me2`].
pub const DEFAULT_SUBSTEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Me2Options {
    pub form: KernelForm,
    /// Integration steps per output step; the memory integral and kernel
    /// tables live on the refined grid.
    pub substeps: usize,
}

impl Default for Me2Options {
    fn default() -> Self {
        Self {
            form: KernelForm::Mixed,
            substeps: DEFAULT_SUBSTEPS,
        }
    }
}

/// Integrates the master equation on `grid` from `rho0`.
pub fn solve_me2(
    model: &ModelSpec,
    occ: &BathOccupation,
    rho0: &DensityMatrix2,
    grid: &TimeGrid,
) -> Result<Me2Solution> {
    solve_me2_with(model, occ, rho0, grid, Me2Options::default())
}

pub fn solve_me2_with(
    model: &ModelSpec,
    occ: &BathOccupation,
    rho0: &DensityMatrix2,
    grid: &TimeGrid,
    options: Me2Options,
) -> Result<Me2Solution> {
    rho0.validate()?;
    if options.substeps == 0 {
        return Err(Error::arg("substeps must be positive"));
    }
    let fine = TimeGrid::new(grid.t_max(), grid.n_steps() * options.substeps)?;
    let kernel = build_kernel(model, occ, &fine)?;
    let h = fine.step();
    let mut integrator = Integrator::new(&kernel, options.form);

    let mut states = Vec::with_capacity(grid.n_samples());
    let mut rho = rho0.0;
    integrator.history.push(Superops::of(&rho));
    states.push(DensityMatrix2(rho));
    let mut slope = integrator.rhs(&rho);

    for n in 0..fine.n_steps() {
        let predicted = rho + slope * Complex64::from(h);
        integrator.history.push(Superops::of(&predicted));
        let predicted_slope = integrator.rhs(&predicted);
        rho += (slope + predicted_slope) * Complex64::from(0.5 * h);
        integrator.history[n + 1] = Superops::of(&rho);
        slope = integrator.rhs(&rho);
        if (n + 1) % options.substeps == 0 {
            states.push(DensityMatrix2(rho));
        }
    }

    let mut max_trace_drift: f64 = 0.0;
    let mut max_hermiticity_error: f64 = 0.0;
    for (i, s) in states.iter().enumerate() {
        let drift = (s.trace() - rho0.trace()).norm();
        if !drift.is_finite() || drift > MAX_TRACE_DRIFT {
            return Err(Error::numerical(format!(
                "trace drifted by {drift:e} at t = {}; refine the time grid",
                grid.time(i)
            )));
        }
        max_trace_drift = max_trace_drift.max(drift);
        max_hermiticity_error = max_hermiticity_error.max(s.hermiticity_error());
    }
    let values = states.iter().map(DensityMatrix2::population).collect();
    Ok(Me2Solution {
        population: TimeSeries::new(*grid, values, "me2")?,
        states,
        max_trace_drift,
        max_hermiticity_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Statistics;
    use crate::hamiltonian::uniform_band;

    fn band_model(n_bath: usize, v: f64, stat: Statistics) -> ModelSpec {
        ModelSpec::uniform(0.0, uniform_band(n_bath, 4.0), v, stat).unwrap()
    }

    #[test]
    fn empty_bath_kernel() {
        let m = band_model(4, 0.3, Statistics::Fermion);
        let occ = BathOccupation::step(4, &[]).unwrap();
        let grid = TimeGrid::new(2.0, 20).unwrap();
        let k = build_kernel(&m, &occ, &grid).unwrap();
        for (i, tau) in grid.times().enumerate() {
            assert_eq!(k.c1[i], Complex64::default());
            let expect: Complex64 = m
                .omegas
                .iter()
                .map(|&w| Complex64::from_polar(0.09, -(0.0 - w) * tau))
                .sum();
            assert!((k.c2[i] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn kernel_at_zero_delay_and_symmetry() {
        let v: f64 = 0.3;
        let m = band_model(4, v, Statistics::Fermion);
        let occ = BathOccupation::step(4, &[1, 2]).unwrap();
        let grid = TimeGrid::new(2.0, 20).unwrap();
        let k = build_kernel(&m, &occ, &grid).unwrap();
        assert!((k.c1[0] - Complex64::new(2.0 * v * v, 0.0)).norm() < 1e-15);
        assert!((k.c2[0] - Complex64::new(2.0 * v * v, 0.0)).norm() < 1e-15);
        for tau in [0.3, 1.7] {
            let (a, _) = kernel_sums(&m, &occ, tau);
            let (b, _) = kernel_sums(&m, &occ, -tau);
            assert!((a - b.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn resonant_filled_mode_has_flat_kernel() {
        let m = ModelSpec::new(0.7, vec![0.7], vec![0.4], Statistics::Spin).unwrap();
        let occ = BathOccupation::step(1, &[1]).unwrap();
        let grid = TimeGrid::new(3.0, 30).unwrap();
        let k = build_kernel(&m, &occ, &grid).unwrap();
        assert!(k
            .c1
            .iter()
            .all(|c| (c - Complex64::new(0.16, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn occupation_constructors() {
        assert!(BathOccupation::step(3, &[0]).is_err());
        assert!(BathOccupation::step(3, &[4]).is_err());
        assert!(BathOccupation::step(3, &[2, 2]).is_err());
        let occ = BathOccupation::step(3, &[1, 3]).unwrap();
        assert_eq!(occ.values(), &[1.0, 0.0, 1.0]);
        assert_eq!(occ.source(), &OccupationSource::Step { n_exc: 2 });
        assert!(BathOccupation::explicit(vec![1.2]).is_err());

        let fd = BathOccupation::fermi_dirac(&[-1.0, 0.0, 1.0], 2.0, 0.0).unwrap();
        let f = fd.values();
        assert!((f[0] - 1.0 / (1.0 + (-2.0f64).exp())).abs() < 1e-15);
        assert_eq!(f[1], 0.5);
        assert!((f[0] + f[2] - 1.0).abs() < 1e-15);
        let cold = BathOccupation::fermi_dirac(&[-1.0, 0.0, 1.0], f64::INFINITY, 0.0).unwrap();
        assert_eq!(cold.values(), &[1.0, 0.5, 0.0]);
        let hot = BathOccupation::fermi_dirac(&[-1e3, 1e3], 10.0, 0.0).unwrap();
        assert!(hot.values().iter().all(|x| x.is_finite()));
        assert!(BathOccupation::fermi_dirac(&[0.0], -1.0, 0.0).is_err());
    }

    #[test]
    fn density_matrix_checks() {
        assert!(DensityMatrix2::empty().validate().is_ok());
        assert!(DensityMatrix2::from_population(1.5).validate().is_err());
        let mut rho = DensityMatrix2::from_population(0.5);
        rho.0[(0, 1)] = Complex64::new(0.5, 0.0);
        assert!(rho.validate().is_err());
        rho.0[(1, 0)] = Complex64::new(0.5, 0.0);
        assert!(rho.validate().is_ok());
        assert!((rho.eigenvalues()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uncoupled_state_is_frozen() {
        let m = band_model(4, 0.0, Statistics::Fermion);
        let occ = BathOccupation::step(4, &[1, 2]).unwrap();
        let grid = TimeGrid::new(10.0, 100).unwrap();
        let mut rho0 = DensityMatrix2::from_population(0.3);
        rho0.0[(0, 1)] = Complex64::new(0.1, 0.2);
        rho0.0[(1, 0)] = Complex64::new(0.1, -0.2);
        let sol = solve_me2(&m, &occ, &rho0, &grid).unwrap();
        assert!(sol.states.iter().all(|s| *s == rho0));
    }

    fn nonlocal() -> Me2Options {
        Me2Options {
            form: KernelForm::TimeNonlocal,
            ..Me2Options::default()
        }
    }

    /// `e^{-y²} ∫_0^y e^{u²} du` by composite Simpson.
    fn dawson(y: f64) -> f64 {
        let n = 20_000;
        let h = y / n as f64;
        let g = |u: f64| (u * u - y * y).exp();
        let inner: f64 = (1..n)
            .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h))
            .sum();
        (g(0.0) + inner + g(y)) * h / 3.0
    }

    #[test]
    fn half_filled_resonant_mode_relaxes_to_one_half() {
        // With C1 = C2 = V²/2 and x = n_S - 1/2: x' = -V² (∫x + t x), solved by
        // x = x0 (1 - 2 y F(y)) with y = V t / sqrt 2 and F the Dawson integral.
        let v: f64 = 1.0;
        let m = ModelSpec::new(0.0, vec![0.0], vec![v], Statistics::Fermion).unwrap();
        let occ = BathOccupation::explicit(vec![0.5]).unwrap();
        let grid = TimeGrid::new(40.0, 2000).unwrap();
        let sol = solve_me2(&m, &occ, &DensityMatrix2::empty(), &grid).unwrap();
        for (t, n) in grid.times().zip(&sol.population.values).step_by(10) {
            let y = v * t / 2f64.sqrt();
            let exact = 0.5 - 0.5 * (1.0 - 2.0 * y * dawson(y));
            assert!((n - exact).abs() < 1e-6, "t={t}: {n} vs {exact}");
        }
        assert!((sol.population.values.last().unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn half_filled_resonant_mode_oscillates_without_relaxation_in_nonlocal_form() {
        // C1 = C2 = V²/2 gives x'' = -2V² x for x = n_S - 1/2.
        let v: f64 = 0.5;
        let m = ModelSpec::new(0.0, vec![0.0], vec![v], Statistics::Fermion).unwrap();
        let occ = BathOccupation::explicit(vec![0.5]).unwrap();
        let grid = TimeGrid::new(20.0, 1000).unwrap();
        let sol = solve_me2_with(&m, &occ, &DensityMatrix2::empty(), &grid, nonlocal()).unwrap();
        let omega = 2f64.sqrt() * v;
        for (t, n) in grid.times().zip(&sol.population.values) {
            let exact = 0.5 - 0.5 * (omega * t).cos();
            assert!((n - exact).abs() < 1e-5, "t={t}: {n} vs {exact}");
        }
    }

    #[test]
    fn coherence_of_resonant_mode() {
        // C1 + C2 = V² for a single resonant mode. Time-nonlocal: ρ01'' = -V² ρ01.
        // Mixed: ρ01' = -(V²/2)(∫ρ01 + t ρ01), i.e. ρ01 = ρ01(0)(1 - 2yF(y)), y = Vt/2.
        let v: f64 = 0.8;
        let m = ModelSpec::new(0.0, vec![0.0], vec![v], Statistics::Spin).unwrap();
        let occ = BathOccupation::explicit(vec![0.3]).unwrap();
        let grid = TimeGrid::new(10.0, 1000).unwrap();
        let mut rho0 = DensityMatrix2::from_population(0.5);
        rho0.0[(0, 1)] = Complex64::new(0.0, 0.4);
        rho0.0[(1, 0)] = Complex64::new(0.0, -0.4);
        let sol = solve_me2_with(&m, &occ, &rho0, &grid, nonlocal()).unwrap();
        for (t, s) in grid.times().zip(&sol.states) {
            let exact = Complex64::new(0.0, 0.4 * (v * t).cos());
            assert!((s.coherence() - exact).norm() < 1e-6, "t={t}");
        }
        let sol = solve_me2(&m, &occ, &rho0, &grid).unwrap();
        for (t, s) in grid.times().zip(&sol.states).step_by(10) {
            let y = v * t / 2.0;
            let exact = Complex64::new(0.0, 0.4 * (1.0 - 2.0 * y * dawson(y)));
            assert!((s.coherence() - exact).norm() < 1e-6, "t={t}");
            assert!(s.hermiticity_error() == 0.0);
        }
    }

    #[test]
    fn diagonal_start_never_builds_coherence() {
        let m = band_model(8, 0.35, Statistics::Fermion);
        let occ = BathOccupation::step(8, &[1, 2, 3, 4]).unwrap();
        let grid = TimeGrid::new(10.0, 1000).unwrap();
        let sol = solve_me2(&m, &occ, &DensityMatrix2::empty(), &grid).unwrap();
        assert!(sol.states.iter().all(|s| s.coherence().norm() <= 1e-10));
        assert!(sol.max_trace_drift <= 1e-8);
        assert!(sol.max_hermiticity_error <= 1e-10);
    }

    #[test]
    fn asymmetric_bath_keeps_state_hermitian() {
        let m = ModelSpec::uniform(0.3, uniform_band(6, 0.5), 0.39, Statistics::Fermion).unwrap();
        let occ = BathOccupation::explicit(vec![0.9, 0.1, 0.7, 0.3, 0.95, 0.2]).unwrap();
        let grid = TimeGrid::new(10.0, 500).unwrap();
        let mut rho0 = DensityMatrix2::from_population(0.4);
        rho0.0[(0, 1)] = Complex64::new(0.2, -0.1);
        rho0.0[(1, 0)] = Complex64::new(0.2, 0.1);
        for options in [Me2Options::default(), nonlocal()] {
            let sol = solve_me2_with(&m, &occ, &rho0, &grid, options).unwrap();
            assert!(sol.max_hermiticity_error <= 1e-10);
            assert!(sol.max_trace_drift <= 1e-8);
        }
    }

    #[test]
    fn solver_ignores_statistics() {
        let mf = band_model(6, 0.4, Statistics::Fermion);
        let ms = mf.with_statistics(Statistics::Spin);
        let occ = BathOccupation::step(6, &[1, 2, 3]).unwrap();
        let grid = TimeGrid::new(10.0, 300).unwrap();
        assert_eq!(
            build_kernel(&mf, &occ, &grid).unwrap(),
            build_kernel(&ms, &occ, &grid).unwrap()
        );
        let a = solve_me2(&mf, &occ, &DensityMatrix2::empty(), &grid).unwrap();
        let b = solve_me2(&ms, &occ, &DensityMatrix2::empty(), &grid).unwrap();
        assert_eq!(a.states, b.states);
    }

    #[test]
    fn forms_agree_at_early_times() {
        let m = band_model(
            16,
            (1.0f64 / (8.0 * std::f64::consts::PI)).sqrt(),
            Statistics::Fermion,
        );
        let occ = BathOccupation::step(16, &(1..=8).collect::<Vec<_>>()).unwrap();
        let grid = TimeGrid::new(10.0, 1000).unwrap();
        let rho0 = DensityMatrix2::empty();
        let a = solve_me2(&m, &occ, &rho0, &grid).unwrap();
        let b = solve_me2_with(&m, &occ, &rho0, &grid, nonlocal()).unwrap();
        // both are O(V²) accurate; they part ways only at higher order
        assert!((a.population.values[20] - b.population.values[20]).abs() < 1e-3);
        assert!(b.max_trace_drift <= 1e-8);
    }

    #[test]
    fn halving_the_step_changes_little() {
        let m = band_model(
            16,
            (1.0f64 / (8.0 * std::f64::consts::PI)).sqrt(),
            Statistics::Fermion,
        );
        let occ = BathOccupation::step(16, &(1..=8).collect::<Vec<_>>()).unwrap();
        let rho0 = DensityMatrix2::empty();
        for options in [Me2Options::default(), nonlocal()] {
            let solve = |steps| {
                solve_me2_with(
                    &m,
                    &occ,
                    &rho0,
                    &TimeGrid::new(10.0, steps).unwrap(),
                    options,
                )
                .unwrap()
            };
            let (coarse, fine) = (solve(1000), solve(2000));
            let gap = (0..=1000)
                .map(|i| (coarse.population.values[i] - fine.population.values[2 * i]).abs())
                .fold(0.0, f64::max);
            assert!(gap <= 1e-6, "{:?}: {gap:e}", options.form);
        }
    }

    #[test]
    fn rejects_invalid_start_and_sizes() {
        let m = band_model(2, 0.1, Statistics::Fermion);
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let occ = BathOccupation::step(2, &[1]).unwrap();
        assert!(solve_me2(&m, &occ, &DensityMatrix2::from_population(2.0), &grid).is_err());
        let wrong = BathOccupation::step(3, &[1]).unwrap();
        assert!(solve_me2(&m, &wrong, &DensityMatrix2::empty(), &grid).is_err());
        let none = Me2Options {
            substeps: 0,
            ..Me2Options::default()
        };
        assert!(solve_me2_with(&m, &occ, &DensityMatrix2::empty(), &grid, none).is_err());
    }
}

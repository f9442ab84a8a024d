//! Scenario pipeline: coupling parameterization, initial conditions, paired
//! fermion/spin propagation, the second-order master equation on the same
//! grid, and the `Δ_max` sweep over bath size and filling.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    initial_state, population_series, KrylovOptions, Method, PropagationReport, TimeGrid,
    TimeSeries, DEFAULT_DENSE_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::fock::{SectorBasis, Statistics, DEFAULT_MAX_DIM};
use crate::hamiltonian::{build_many_body, uniform_band, ModelSpec};
use crate::me2::{solve_me2, BathOccupation, DensityMatrix2};

/// Bandwidth in units of the golden-rule rate used by the bath-size scans.
pub const DEFAULT_BANDWIDTH_RATIO: f64 = 4.0;

/// Per-mode coupling `V = sqrt(γ ω_BW / (2π N_E))` that reproduces the
/// golden-rule rate `γ = 2π V² ρ` for a flat density `ρ = N_E / ω_BW`.
pub fn coupling_from_rate(gamma: f64, omega_bw: f64, n_bath: usize) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::arg(format!("rate must be positive, got {gamma}")));
    }
    if !(omega_bw > 0.0 && omega_bw.is_finite()) {
        return Err(Error::arg(format!(
            "bandwidth must be positive, got {omega_bw}"
        )));
    }
    if n_bath == 0 {
        return Err(Error::arg("bath needs at least one mode"));
    }
    Ok((gamma * omega_bw / (2.0 * PI * n_bath as f64)).sqrt())
}

/// Filling used for "half-filled" baths: `ceil(N_E / 2)`.
pub fn half_filling(n_bath: usize) -> usize {
    n_bath.div_ceil(2)
}

/// The `n_exc` lowest-frequency bath modes, numbered `1..=N_E`, ascending.
pub fn lowest_modes(omegas: &[f64], n_exc: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (1..=omegas.len()).collect();
    order.sort_by(|&a, &b| omegas[a - 1].total_cmp(&omegas[b - 1]));
    let mut chosen: Vec<usize> = order.into_iter().take(n_exc).collect();
    chosen.sort_unstable();
    chosen
}

fn default_horizon() -> f64 {
    10.0
}

fn default_steps() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

/// One fermion/spin/ME2 comparison run.
///
/// With `V` set, couplings are explicit and `horizon` is an absolute time.
/// Otherwise the couplings follow [`coupling_from_rate`] and `horizon` is
/// measured in units of `1/γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "N_E")]
    pub n_bath: usize,
    pub n_exc: usize,
    /// Bandwidth; defaults to `4γ`.
    #[serde(rename = "omega_BW", default)]
    pub omega_bw: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(rename = "V", default)]
    pub coupling: Option<f64>,
    #[serde(default)]
    pub omega0: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    /// Initially filled bath modes (`1..=N_E`); defaults to the lowest frequencies.
    #[serde(default)]
    pub occupied_modes: Option<Vec<usize>>,
    #[serde(default = "default_true")]
    pub me2: bool,
}

impl ScenarioConfig {
    /// Rate-parameterized run with `ω_BW = 4γ`.
    pub fn from_rate(n_bath: usize, n_exc: usize, gamma: f64) -> Self {
        Self {
            n_bath,
            n_exc,
            omega_bw: None,
            gamma: Some(gamma),
            coupling: None,
            omega0: 0.0,
            horizon: default_horizon(),
            n_steps: default_steps(),
            occupied_modes: None,
            me2: true,
        }
    }

    /// Explicit-coupling run over `t ∈ [0, horizon]`.
    pub fn explicit(n_bath: usize, n_exc: usize, v: f64, omega_bw: f64) -> Self {
        Self {
            coupling: Some(v),
            omega_bw: Some(omega_bw),
            gamma: None,
            ..Self::from_rate(n_bath, n_exc, 1.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bath == 0 {
            return Err(Error::arg("N_E must be at least 1"));
        }
        if self.n_exc > self.n_bath {
            return Err(Error::arg(format!(
                "n_exc = {} exceeds N_E = {}",
                self.n_exc, self.n_bath
            )));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::arg("gamma must be positive"));
            }
        }
        if let Some(v) = self.coupling {
            if !v.is_finite() {
                return Err(Error::arg("V must be finite"));
            }
        }
        if self.gamma.is_none() && self.coupling.is_none() {
            return Err(Error::arg("either gamma or an explicit V is required"));
        }
        if self.coupling.is_some() && self.omega_bw.is_none() && self.gamma.is_none() {
            return Err(Error::arg("an explicit V needs omega_BW or gamma"));
        }
        if !(self.bandwidth() > 0.0 && self.bandwidth().is_finite()) {
            return Err(Error::arg("omega_BW must be positive"));
        }
        if !self.omega0.is_finite() {
            return Err(Error::arg("omega0 must be finite"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::arg("horizon must be positive"));
        }
        if self.n_steps == 0 {
            return Err(Error::arg("n_steps must be positive"));
        }
        if let Some(modes) = &self.occupied_modes {
            if modes.len() != self.n_exc {
                return Err(Error::arg(format!(
                    "{} occupied modes listed for n_exc = {}",
                    modes.len(),
                    self.n_exc
                )));
            }
            // range and duplicates
            BathOccupation::step(self.n_bath, modes)?;
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> f64 {
        self.omega_bw
            .unwrap_or_else(|| DEFAULT_BANDWIDTH_RATIO * self.gamma.unwrap_or(f64::NAN))
    }

    /// Uniform per-mode coupling.
    pub fn resolved_coupling(&self) -> Result<f64> {
        match (self.coupling, self.gamma) {
            (Some(v), _) => Ok(v),
            (None, Some(g)) => coupling_from_rate(g, self.bandwidth(), self.n_bath),
            (None, None) => Err(Error::arg("either gamma or an explicit V is required")),
        }
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        let t_max = match (self.coupling, self.gamma) {
            (None, Some(g)) => self.horizon / g,
            _ => self.horizon,
        };
        TimeGrid::new(t_max, self.n_steps)
    }

    pub fn model(&self, statistics: Statistics) -> Result<ModelSpec> {
        let omegas = uniform_band(self.n_bath, self.bandwidth());
        ModelSpec::uniform(self.omega0, omegas, self.resolved_coupling()?, statistics)
    }

    pub fn resolved_occupied_modes(&self) -> Vec<usize> {
        match &self.occupied_modes {
            Some(modes) => {
                let mut m = modes.clone();
                m.sort_unstable();
                m
            }
            None => lowest_modes(&uniform_band(self.n_bath, self.bandwidth()), self.n_exc),
        }
    }
}

/// Limits shared by all runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub max_dim: usize,
    pub dense_threshold: usize,
    pub krylov: KrylovOptions,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_DIM,
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
            krylov: KrylovOptions::default(),
        }
    }
}

impl RunOptions {
    pub fn method_for(&self, dim: usize) -> Method {
        if dim <= self.dense_threshold {
            Method::DenseEig
        } else {
            Method::Krylov(self.krylov)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDiagnostics {
    pub sector_dim: usize,
    pub method: String,
    pub coupling: f64,
    pub occupied_modes: Vec<usize>,
    pub fermion: PropagationReport,
    pub spin: PropagationReport,
    pub me2_max_trace_drift: Option<f64>,
    pub me2_max_hermiticity_error: Option<f64>,
}

impl ScenarioDiagnostics {
    pub fn max_norm_drift(&self) -> f64 {
        self.fermion.max_norm_drift.max(self.spin.max_norm_drift)
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub fermion: TimeSeries,
    pub spin: TimeSeries,
    pub me2: Option<TimeSeries>,
    pub diagnostics: ScenarioDiagnostics,
}

/// Exact propagation of the system population for one statistics.
pub fn exact_population(
    cfg: &ScenarioConfig,
    statistics: Statistics,
    options: &RunOptions,
) -> Result<(TimeSeries, PropagationReport, usize)> {
    cfg.validate()?;
    let model = cfg.model(statistics)?;
    let basis = SectorBasis::enumerate_with_budget(model.n_modes(), cfg.n_exc, options.max_dim)?;
    let h = build_many_body(&model, &basis)?;
    let psi0 = initial_state(&basis, &cfg.resolved_occupied_modes())?;
    let method = options.method_for(basis.dim());
    let (series, report) =
        population_series(&h, &basis, &psi0, &cfg.grid()?, method, statistics.as_str())?;
    Ok((series, report, basis.dim()))
}

/// Runs both exact models and, if enabled, the master equation on one grid.
pub fn run_scenario(cfg: &ScenarioConfig, options: &RunOptions) -> Result<ScenarioResult> {
    cfg.validate()?;
    let (fermion, spin) = rayon::join(
        || exact_population(cfg, Statistics::Fermion, options),
        || exact_population(cfg, Statistics::Spin, options),
    );
    let (fermion, fermion_report, dim) = fermion?;
    let (spin, spin_report, _) = spin?;

    let occupied = cfg.resolved_occupied_modes();
    let (me2, drift, herm) = if cfg.me2 {
        let occ = BathOccupation::step(cfg.n_bath, &occupied)?;
        let sol = solve_me2(
            &cfg.model(Statistics::Fermion)?,
            &occ,
            &DensityMatrix2::empty(),
            &cfg.grid()?,
        )?;
        (
            Some(sol.population),
            Some(sol.max_trace_drift),
            Some(sol.max_hermiticity_error),
        )
    } else {
        (None, None, None)
    };

    Ok(ScenarioResult {
        fermion,
        spin,
        me2,
        diagnostics: ScenarioDiagnostics {
            sector_dim: dim,
            method: options.method_for(dim).name().to_string(),
            coupling: cfg.resolved_coupling()?,
            occupied_modes: occupied,
            fermion: fermion_report,
            spin: spin_report,
            me2_max_trace_drift: drift,
            me2_max_hermiticity_error: herm,
        },
    })
}

/// `max_i |a_i - b_i|` over a shared grid.
pub fn delta_max(a: &TimeSeries, b: &TimeSeries) -> Result<f64> {
    if a.grid != b.grid || a.values.len() != b.values.len() {
        return Err(Error::arg(format!(
            "series '{}' and '{}' live on different grids",
            a.label, b.label
        )));
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Bath-size/filling sweep at fixed rate and `ω_BW = 4γ` by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapConfig {
    #[serde(rename = "N_E_min", default = "default_min_bath")]
    pub n_bath_min: usize,
    #[serde(rename = "N_E_max", default = "default_max_bath")]
    pub n_bath_max: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(rename = "omega_BW", default)]
    pub omega_bw: Option<f64>,
    #[serde(default)]
    pub omega0: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    /// Also record `max_t |n_fermion - n_ME2|` per cell.
    #[serde(default)]
    pub me2: bool,
}

fn default_min_bath() -> usize {
    2
}

fn default_max_bath() -> usize {
    12
}

fn default_gamma() -> f64 {
    1.0
}

impl Default for HeatmapConfig {
    fn default() -> Self {
        Self {
            n_bath_min: default_min_bath(),
            n_bath_max: default_max_bath(),
            gamma: default_gamma(),
            omega_bw: None,
            omega0: 0.0,
            horizon: default_horizon(),
            n_steps: default_steps(),
            me2: false,
        }
    }
}

impl HeatmapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bath_min == 0 || self.n_bath_min > self.n_bath_max {
            return Err(Error::arg(format!(
                "invalid N_E range {}..={}",
                self.n_bath_min, self.n_bath_max
            )));
        }
        self.cell(self.n_bath_min, 0).validate()
    }

    pub fn cell(&self, n_bath: usize, n_exc: usize) -> ScenarioConfig {
        ScenarioConfig {
            n_bath,
            n_exc,
            omega_bw: self.omega_bw,
            gamma: Some(self.gamma),
            coupling: None,
            omega0: self.omega0,
            horizon: self.horizon,
            n_steps: self.n_steps,
            occupied_modes: None,
            me2: self.me2,
        }
    }

    pub fn cells(&self) -> Vec<(usize, usize)> {
        (self.n_bath_min..=self.n_bath_max)
            .flat_map(|n| (0..=n).map(move |k| (n, k)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    #[serde(rename = "N_E")]
    pub n_bath: usize,
    pub n_exc: usize,
    pub delta_max: f64,
    pub me2_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    #[serde(rename = "N_E")]
    pub n_bath: usize,
    pub n_exc: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HeatmapResult {
    pub rows: Vec<HeatmapRow>,
    pub failures: Vec<CellFailure>,
}

impl HeatmapResult {
    pub fn get(&self, n_bath: usize, n_exc: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.n_bath == n_bath && r.n_exc == n_exc)
            .map(|r| r.delta_max)
    }
}

fn run_cell(
    cfg: &HeatmapConfig,
    n_bath: usize,
    n_exc: usize,
    options: &RunOptions,
) -> Result<HeatmapRow> {
    let cell = cfg.cell(n_bath, n_exc);
    let (fermion, _, _) = exact_population(&cell, Statistics::Fermion, options)?;
    let (spin, _, _) = exact_population(&cell, Statistics::Spin, options)?;
    let me2_gap = if cfg.me2 {
        let occ = BathOccupation::step(n_bath, &cell.resolved_occupied_modes())?;
        let sol = solve_me2(
            &cell.model(Statistics::Fermion)?,
            &occ,
            &DensityMatrix2::empty(),
            &cell.grid()?,
        )?;
        Some(delta_max(&fermion, &sol.population)?)
    } else {
        None
    };
    Ok(HeatmapRow {
        n_bath,
        n_exc,
        delta_max: delta_max(&fermion, &spin)?,
        me2_gap,
    })
}

/// Runs every `(N_E, n_exc)` cell independently; failed cells are recorded
/// and the sweep continues.
pub fn heatmap_sweep(cfg: &HeatmapConfig, options: &RunOptions) -> Result<HeatmapResult> {
    cfg.validate()?;
    let cells = cfg.cells();
    // Largest sectors first keeps the worker pool busy until the end.
    let mut order = cells.clone();
    order.sort_by_key(|&(n, k)| {
        std::cmp::Reverse(crate::fock::BinomialTable::new(n + 1).get(n + 1, k))
    });
    let outcomes: Vec<_> = order
        .par_iter()
        .map(|&(n, k)| ((n, k), run_cell(cfg, n, k, options)))
        .collect();

    let mut result = HeatmapResult::default();
    for ((n, k), outcome) in outcomes {
        match outcome {
            Ok(row) => result.rows.push(row),
            Err(e) => result.failures.push(CellFailure {
                n_bath: n,
                n_exc: k,
                error: e.to_string(),
            }),
        }
    }
    result.rows.sort_by_key(|r| (r.n_bath, r.n_exc));
    result.failures.sort_by_key(|f| (f.n_bath, f.n_exc));
    Ok(result)
}

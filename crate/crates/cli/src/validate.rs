//! Built-in invariant suite behind `bathdiff validate`.

use bathdiff_core::corr4::{corr4_bruteforce, corr4_closed, CorrQuery};
use bathdiff_core::dense;
use bathdiff_core::dynamics::{
    initial_state, population_series, single_body_population, Method, TimeGrid,
};
use bathdiff_core::experiments::delta_max;
use bathdiff_core::fock::{apply_hop, OccupationState, SectorBasis, Statistics};
use bathdiff_core::hamiltonian::{build_many_body, build_single_body, uniform_band, ModelSpec};
use bathdiff_core::me2::{solve_me2, BathOccupation, DensityMatrix2};
use bathdiff_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x0b47_d1ff;

pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, run: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    match run() {
        Ok((passed, detail)) => CheckOutcome {
            name,
            passed,
            detail,
        },
        Err(e) => CheckOutcome {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

/// Every hop amplitude against the Jordan-Wigner operator product, up to 6 modes.
fn sign_oracle() -> Result<(bool, String)> {
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for stat in Statistics::ALL {
        for n in 2..=6 {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    let op = dense::raising(n, i, stat)? * dense::lowering(n, j, stat)?;
                    for s in 0..(1u64 << n) {
                        let column = op.column(s as usize);
                        let ok = match apply_hop(OccupationState(s), i, j, stat)? {
                            None => column.iter().all(|&x| x == 0.0),
                            Some(hop) => column.iter().enumerate().all(|(row, &x)| {
                                let expect = if row as u64 == hop.state.bits() {
                                    f64::from(hop.sign)
                                } else {
                                    0.0
                                };
                                x == expect
                            }),
                        };
                        checked += 1;
                        mismatches += usize::from(!ok);
                    }
                }
            }
        }
    }
    Ok((
        mismatches == 0,
        format!("{checked} hops, {mismatches} mismatches"),
    ))
}

/// Fermionic many-body population against the one-particle propagator.
fn single_body_equivalence(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let grid = TimeGrid::new(5.0, 200)?;
    let mut worst: f64 = 0.0;
    let trials = 12;
    for _ in 0..trials {
        let n_bath = rng.random_range(1..=7);
        let omegas = (0..n_bath).map(|_| rng.random_range(-2.0..2.0)).collect();
        let couplings = (0..n_bath).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = ModelSpec::new(
            rng.random_range(-1.0..1.0),
            omegas,
            couplings,
            Statistics::Fermion,
        )?;
        let occupations: Vec<u8> = (0..=n_bath)
            .map(|_| u8::from(rng.random_bool(0.5)))
            .collect();
        let occupied: Vec<usize> = (0..=n_bath).filter(|&j| occupations[j] == 1).collect();
        let basis = SectorBasis::enumerate(n_bath + 1, occupied.len())?;
        let h = build_many_body(&model, &basis)?;
        let (many, _) = population_series(
            &h,
            &basis,
            &initial_state(&basis, &occupied)?,
            &grid,
            Method::DenseEig,
            "many",
        )?;
        let single = single_body_population(&build_single_body(&model)?, &occupations, &grid)?;
        worst = worst.max(delta_max(&many, &single)?);
    }
    Ok((
        worst <= 1e-8,
        format!("{trials} models, max gap {worst:.2e}"),
    ))
}

/// Closed-form four-point correlators against the dense trace.
fn corr4_oracle(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut vectors = vec![vec![1.0, 0.0, 0.5], vec![0.0, 1.0, 1.0]];
    vectors.extend((0..30).map(|_| (0..3).map(|_| rng.random_range(0.0..=1.0)).collect()));
    let count = vectors.len();
    for f in vectors {
        let occ = BathOccupation::explicit(f)?;
        for t in 0..81 {
            let idx = [t / 27, (t / 9) % 3, (t / 3) % 3, t % 3];
            for stat in Statistics::ALL {
                let q = CorrQuery::new(idx, stat, occ.clone())?;
                worst = worst.max((corr4_closed(&q)? - corr4_bruteforce(&q)?).norm());
            }
        }
    }
    Ok((
        worst <= 1e-12,
        format!("{count} occupations x 81 tuples, max gap {worst:.2e}"),
    ))
}

/// Trace, Hermiticity and statistics-blindness of the master equation.
fn me2_conservation(rng: &mut ChaCha8Rng) -> Result<(bool, String)> {
    let grid = TimeGrid::new(10.0, 400)?;
    let mut trace: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let mut identical = true;
    let trials = 6;
    for _ in 0..trials {
        let n_bath = rng.random_range(1..=8);
        let v = rng.random_range(0.05..0.4);
        let model = ModelSpec::uniform(0.0, uniform_band(n_bath, 4.0), v, Statistics::Fermion)?;
        let occ =
            BathOccupation::explicit((0..n_bath).map(|_| rng.random_range(0.0..=1.0)).collect())?;
        let rho0 = DensityMatrix2::from_population(rng.random_range(0.0..=1.0));
        let fermion = solve_me2(&model, &occ, &rho0, &grid)?;
        let spin = solve_me2(&model.with_statistics(Statistics::Spin), &occ, &rho0, &grid)?;
        trace = trace.max(fermion.max_trace_drift);
        herm = herm.max(fermion.max_hermiticity_error);
        identical &= fermion
            .population
            .values
            .iter()
            .zip(&spin.population.values)
            .all(|(a, b)| a.to_bits() == b.to_bits());
    }
    Ok((
        trace <= 1e-8 && herm <= 1e-10 && identical,
        format!("{trials} runs, trace drift {trace:.2e}, hermiticity {herm:.2e}, statistics-blind {identical}"),
    ))
}

pub fn run_suite() -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    vec![
        outcome("sign oracle", sign_oracle),
        outcome("single-body equivalence", || {
            single_body_equivalence(&mut rng)
        }),
        outcome("corr4 oracle", || corr4_oracle(&mut rng)),
        outcome("me2 conservation", || me2_conservation(&mut rng)),
    ]
}

pub fn render(outcomes: &[CheckOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    outcomes
        .iter()
        .map(|o| {
            format!(
                "{:<4}  {:<width$}  {}\n",
                if o.passed { "PASS" } else { "FAIL" },
                o.name,
                o.detail
            )
        })
        .collect()
}

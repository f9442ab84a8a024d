use bathdiff_core::corr4::{corr4_bruteforce, corr4_closed, CorrQuery};
use bathdiff_core::dense;
use bathdiff_core::dynamics::{
    initial_state, population_series, single_body_population, Method, TimeGrid,
};
use bathdiff_core::experiments::delta_max;
use bathdiff_core::fock::{apply_hop, OccupationState, SectorBasis, Statistics};
use bathdiff_core::hamiltonian::{build_many_body, build_single_body, uniform_band, ModelSpec};
use bathdiff_core::me2::{solve_me2, BathOccupation, DensityMatrix2};
use proptest::prelude::*;

fn statistics() -> impl Strategy<Value = Statistics> {
    prop_oneof![Just(Statistics::Fermion), Just(Statistics::Spin)]
}

/// `<a† b>`, `<a b†>` and `<a† b†>` on a product state.
fn two_point(f: &[f64], a: usize, b: usize) -> (f64, f64) {
    if a == b {
        (f[a], 1.0 - f[a])
    } else {
        (0.0, 0.0)
    }
}

proptest! {
    #[test]
    fn rank_and_unrank_are_inverse((n_modes, n_particles, pick) in (1usize..=20)
        .prop_flat_map(|n| (Just(n), 0..=n, any::<prop::sample::Index>())))
    {
        let basis = SectorBasis::enumerate(n_modes, n_particles).unwrap();
        let i = pick.index(basis.dim());
        let s = basis.unrank(i);
        prop_assert_eq!(s, basis.states()[i]);
        prop_assert_eq!(basis.rank(s).unwrap(), i);
        prop_assert_eq!(basis.rank_by_lookup(s).unwrap(), i);
        prop_assert_eq!(s.particle_count() as usize, n_particles);
    }

    #[test]
    fn hop_matches_dense_operator_strings(
        n in 2usize..=6,
        bits in any::<u64>(),
        pair in any::<(prop::sample::Index, prop::sample::Index)>(),
        stat in statistics(),
    ) {
        let s = bits & ((1u64 << n) - 1);
        let i = pair.0.index(n);
        let j = pair.1.index(n);
        prop_assume!(i != j);
        let op = dense::raising(n, i, stat).unwrap() * dense::lowering(n, j, stat).unwrap();
        let column = op.column(s as usize);
        match apply_hop(OccupationState(s), i, j, stat).unwrap() {
            None => prop_assert!(column.iter().all(|&x| x == 0.0)),
            Some(hop) => {
                for (row, &x) in column.iter().enumerate() {
                    let expect = if row as u64 == hop.state.bits() { f64::from(hop.sign) } else { 0.0 };
                    prop_assert_eq!(x, expect);
                }
            }
        }
    }

    #[test]
    fn fermionic_correlator_obeys_wick(
        f in prop::collection::vec(0.0f64..=1.0, 1..=5),
        raw in any::<[prop::sample::Index; 4]>(),
    ) {
        let n = f.len();
        let idx = raw.map(|r| r.index(n));
        let [a, b, c, d] = idx;
        let (a_dag_b, _) = two_point(&f, a, b);
        let (_, c_d_dag) = two_point(&f, c, d);
        let (a_dag_c, _) = two_point(&f, a, c);
        let (_, b_d_dag) = two_point(&f, b, d);
        // <a† d†> and <b c> vanish on a number-diagonal state
        let wick = a_dag_b * c_d_dag - a_dag_c * b_d_dag;
        let q = CorrQuery::new(idx, Statistics::Fermion, BathOccupation::explicit(f).unwrap()).unwrap();
        prop_assert!((corr4_closed(&q).unwrap().re - wick).abs() <= 1e-12);
    }

    #[test]
    fn correlator_statistics_differ_only_by_exchange_sign(
        f in prop::collection::vec(0.0f64..=1.0, 2..=4),
        raw in any::<[prop::sample::Index; 4]>(),
    ) {
        let n = f.len();
        let idx = raw.map(|r| r.index(n));
        let occ = BathOccupation::explicit(f).unwrap();
        let fermion = corr4_closed(&CorrQuery::new(idx, Statistics::Fermion, occ.clone()).unwrap()).unwrap();
        let spin = corr4_closed(&CorrQuery::new(idx, Statistics::Spin, occ).unwrap()).unwrap();
        prop_assert!((fermion - spin).norm() <= 1e-12 || (fermion + spin).norm() <= 1e-12);
    }

    #[test]
    fn single_body_route_matches_many_body(
        n_bath in 1usize..=8,
        seed in prop::collection::vec((-2.0f64..2.0, -1.0f64..1.0), 8),
        omega0 in -1.0f64..1.0,
        occupied_bits in any::<u16>(),
    ) {
        let omegas: Vec<f64> = seed.iter().take(n_bath).map(|p| p.0).collect();
        let couplings: Vec<f64> = seed.iter().take(n_bath).map(|p| p.1).collect();
        let model = ModelSpec::new(omega0, omegas, couplings, Statistics::Fermion).unwrap();
        let occupations: Vec<u8> = (0..=n_bath).map(|j| ((occupied_bits >> j) & 1) as u8).collect();
        let occupied: Vec<usize> = (0..=n_bath).filter(|&j| occupations[j] == 1).collect();
        let grid = TimeGrid::new(5.0, 100).unwrap();

        let basis = SectorBasis::enumerate(n_bath + 1, occupied.len()).unwrap();
        let h = build_many_body(&model, &basis).unwrap();
        let psi0 = initial_state(&basis, &occupied).unwrap();
        let (many, _) = population_series(&h, &basis, &psi0, &grid, Method::DenseEig, "many").unwrap();
        let single = single_body_population(&build_single_body(&model).unwrap(), &occupations, &grid).unwrap();
        prop_assert!(delta_max(&many, &single).unwrap() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn correlator_closed_form_matches_dense_trace(
        f in prop::collection::vec(0.0f64..=1.0, 2..=4),
        raw in any::<[prop::sample::Index; 4]>(),
        stat in statistics(),
    ) {
        let idx = raw.map(|r| r.index(f.len()));
        let q = CorrQuery::new(idx, stat, BathOccupation::explicit(f).unwrap()).unwrap();
        prop_assert!((corr4_closed(&q).unwrap() - corr4_bruteforce(&q).unwrap()).norm() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn me2_conserves_trace_and_hermiticity(
        n_bath in 1usize..=10,
        v in 0.0f64..0.5,
        bandwidth in 0.5f64..6.0,
        f in prop::collection::vec(0.0f64..=1.0, 10),
        population in 0.0f64..=1.0,
    ) {
        let model = ModelSpec::uniform(0.0, uniform_band(n_bath, bandwidth), v, Statistics::Fermion).unwrap();
        let occ = BathOccupation::explicit(f[..n_bath].to_vec()).unwrap();
        let grid = TimeGrid::new(10.0, 200).unwrap();
        let sol = solve_me2(&model, &occ, &DensityMatrix2::from_population(population), &grid).unwrap();
        prop_assert!(sol.max_trace_drift <= 1e-8);
        prop_assert!(sol.max_hermiticity_error <= 1e-10);
        prop_assert!(sol.states.iter().all(|s| s.coherence().norm() <= 1e-10));
    }
}

#[test]
fn fully_filled_bath_differs_from_spins_by_a_diagonal_gauge() {
    for n_bath in 1..=6 {
        let model =
            ModelSpec::uniform(0.2, uniform_band(n_bath, 2.0), 0.7, Statistics::Fermion).unwrap();
        let basis = SectorBasis::enumerate(n_bath + 1, n_bath).unwrap();
        let hf = build_many_body(&model, &basis).unwrap().to_dense();
        let hs = build_many_body(&model.with_statistics(Statistics::Spin), &basis)
            .unwrap()
            .to_dense();
        // the sector is one hole hopping around: fix signs along the hole's path from mode 0
        let mut gauge = vec![0.0; basis.dim()];
        let start = basis
            .rank(OccupationState::from_modes(&(1..=n_bath).collect::<Vec<_>>()).unwrap())
            .unwrap();
        gauge[start] = 1.0;
        for r in 0..basis.dim() {
            if hf[(start, r)] != 0.0 {
                gauge[r] = hf[(start, r)] / hs[(start, r)];
            }
        }
        for r in 0..basis.dim() {
            for c in 0..basis.dim() {
                assert_eq!(
                    gauge[r] * hf[(r, c)] * gauge[c],
                    hs[(r, c)],
                    "N_E={n_bath} ({r},{c})"
                );
            }
        }
    }
}

#[test]
fn lexicographic_ket_labels_resolve_through_rank() {
    let basis = SectorBasis::enumerate(4, 2).unwrap();
    let labelled: [&[usize]; 6] = [&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3]];
    let psi = initial_state(&basis, &[1, 2]).unwrap();
    let idx = basis
        .rank(OccupationState::from_modes(labelled[3]).unwrap())
        .unwrap();
    assert_eq!(psi.0[idx].re, 1.0);
    assert_eq!(psi.0.iter().filter(|a| a.norm() > 0.0).count(), 1);
    let mut ranks: Vec<usize> = labelled
        .iter()
        .map(|m| basis.rank(OccupationState::from_modes(m).unwrap()).unwrap())
        .collect();
    ranks.sort_unstable();
    assert_eq!(ranks, (0..6).collect::<Vec<_>>());
}

use cgad::analytic::{box_mode, ModeIndex, PotentialKind};
use cgad::bec::{
    cgad_step, ground_state_ngf, gpe_residual, perturbed_state, solve_excited_state, GpeProblem, SolverSettings,
};
use cgad::dynamics::constraint_residuals;
use cgad::{Grid, GridField};
use proptest::prelude::*;

fn box_problem(beta: f64) -> GpeProblem {
    let grid = Grid::new_1d(0.0, 1.0, 31).unwrap();
    GpeProblem::with_potential(PotentialKind::Box, 0.0, &grid, beta).unwrap()
}

fn mode(p: &GpeProblem, j: usize) -> GridField {
    box_mode(&ModeIndex::new([j]), 1.0, p.grid()).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn orthonormality_is_restored_every_step(
        beta in 0.0..100.0f64,
        k in 0usize..4,
        seed in 0u64..1000,
        tau in 0.001..0.01f64,
    ) {
        let p = box_problem(beta);
        let v: Vec<GridField> = (0..k).map(|j| mode(&p, j)).collect();
        let mut state = perturbed_state(&mode(&p, k), &v, 0.2, seed).unwrap();
        for _ in 0..5 {
            state = cgad_step(&p, &state, tau).unwrap();
            let worst = constraint_residuals(&p, &state).iter().fold(0.0_f64, |a, r| a.max(r.abs()));
            prop_assert!(worst <= 1e-13, "residual {:e}", worst);
        }
    }

    #[test]
    fn single_direction_free_scheme_is_the_gradient_flow(beta in 0.0..50.0f64, seed in 0u64..1000) {
        let p = box_problem(beta);
        let state = perturbed_state(&mode(&p, 0), &[], 0.3, seed).unwrap();
        let phi = GridField::new(p.grid().clone(), state.u).unwrap();
        let start = cgad::bec::initial_state(&phi, &[]).unwrap();
        let stepped = cgad_step(&p, &start, 0.01).unwrap();
        let flow = ground_state_ngf(&p, &phi, &SolverSettings::new(0.01, 0.0, 1)).unwrap();
        prop_assert_eq!(stepped.u.as_slice(), flow.phi.values());
    }

    #[test]
    fn residual_is_orthogonal_to_state(beta in 0.0..100.0f64, seed in 0u64..1000) {
        let p = box_problem(beta);
        let state = perturbed_state(&mode(&p, 1), &[], 0.3, seed).unwrap();
        let phi = GridField::new(p.grid().clone(), state.u).unwrap();
        let (r, _) = gpe_residual(&p, &phi).unwrap();
        prop_assert!(r.inner_product(&phi).unwrap().abs() <= 1e-10 * (1.0 + r.norm()));
    }
}

/// Box modes are even or odd about `x = 1/2`; the iteration keeps that parity.
#[test]
fn box_reflection_parity_is_preserved() {
    let p = box_problem(100.0);
    for k in 0..4 {
        let v: Vec<GridField> = (0..k).map(|j| mode(&p, j)).collect();
        let init = cgad::bec::initial_state(&mode(&p, k), &v).unwrap();
        let record = solve_excited_state(&p, &init, &SolverSettings::new(0.005, 1e-12, 20_000)).unwrap();
        assert!(record.converged);
        let phi = record.phi.values();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let defect = phi.iter().zip(phi.iter().rev()).map(|(a, b)| (a - sign * b).abs()).fold(0.0, f64::max);
        assert!(defect < 1e-10, "k={k}: {defect:e}");
    }
}

#[test]
fn symmetry_option_keeps_unstable_symmetric_saddle() {
    let grid = Grid::new_2d(0.0, 1.0, 15).unwrap();
    let p = GpeProblem::with_potential(PotentialKind::Box, 0.0, &grid, 10.0).unwrap();
    let m = |a: usize, b: usize| box_mode(&ModeIndex::new([a, b]), 1.0, &grid).unwrap().0;
    let mut pair = m(1, 0);
    pair.values_mut().iter_mut().zip(m(0, 1).values()).for_each(|(a, b)| *a += b);
    let init = cgad::bec::initial_state(&pair, &[m(0, 0)]).unwrap();
    let settings = SolverSettings::new(0.01, 1e-10, 50_000).with_symmetry(true);
    let record = solve_excited_state(&p, &init, &settings).unwrap();
    assert!(record.converged);
    let n = 15;
    let phi = record.phi.values();
    for i in 0..n {
        for j in 0..n {
            assert!((phi[i * n + j] - phi[j * n + i]).abs() < 1e-12);
        }
    }
}

#[test]
fn nonlinear_energies_increase_with_index() {
    let p = box_problem(100.0);
    let mut last = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..4 {
        let v: Vec<GridField> = (0..k).map(|j| mode(&p, j)).collect();
        let init = cgad::bec::initial_state(&mode(&p, k), &v).unwrap();
        let r = solve_excited_state(&p, &init, &SolverSettings::new(0.005, 1e-12, 20_000)).unwrap();
        assert!(r.energy > last.0 && r.chemical_potential > last.1);
        last = (r.energy, r.chemical_potential);
    }
}

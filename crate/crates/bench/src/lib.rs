//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use cgad::analytic::{box_mode, hermite_mode};
use cgad::bec::{initial_state, GpeProblem};
use cgad::{CgadState, Grid, GridField, ModeIndex, PotentialKind};

/// 1D box on `[0, 1]` with `n` nodes and the index-`k` mode as initial data.
pub fn box_1d(n: usize, beta: f64, k: usize) -> (GpeProblem, CgadState) {
    let grid = Grid::new_1d(0.0, 1.0, n).expect("valid grid");
    let p = GpeProblem::with_potential(PotentialKind::Box, 0.0, &grid, beta).expect("finite beta");
    let m = |j: usize| box_mode(&ModeIndex::new([j]), 1.0, &grid).expect("box grid").0;
    let v: Vec<GridField> = (0..k).map(m).collect();
    let state = initial_state(&m(k), &v).expect("independent modes");
    (p, state)
}

/// 2D harmonic-plus-lattice trap on `[-10, 10]²` with the `10` mode and
/// the ground mode as ascent direction.
pub fn lattice_2d(n: usize, beta: f64) -> (GpeProblem, CgadState) {
    let grid: Arc<Grid> = Grid::new_2d(-10.0, 10.0, n).expect("valid grid");
    let p = GpeProblem::with_potential(PotentialKind::HarmonicLattice, 25.0, &grid, beta).expect("finite beta");
    let m = |a: usize, b: usize| hermite_mode(&ModeIndex::new([a, b]), &grid).expect("wide domain").0;
    let state = initial_state(&m(1, 0), &[m(0, 0)]).expect("independent modes");
    (p, state)
}

/// A smooth test field on `grid`.
pub fn smooth_field(grid: &Arc<Grid>) -> Vec<f64> {
    grid.sample(|x| x.iter().map(|t| (1.3 * t).sin() * (-0.1 * t * t).exp()).product())
}

//! Gross-Pitaevskii ground and excited states.
//!
//! `E(φ) = ∫ ½|∇φ|² + V φ² + β/2 φ⁴` on the unit sphere `‖φ‖ = 1`, discretized
//! with the sine-pseudospectral method. Excited states are computed with the
//! semi-implicit CGAD scheme (all `γ_i = 2`) followed by Gram-Schmidt
//! orthonormalization; `k = 0` gives the normalized gradient flow.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytic::{potential_field, PotentialKind};
use crate::dynamics::{CgadState, DEFAULT_GAMMA, DIVERGENCE_LIMIT};
use crate::eigen::{self, EigenOptions};
use crate::error::{Error, Result};
use crate::manifold::{axpy, scale, SaddleProblem};
use crate::spectral::{sup_norm, Grid, GridField};

pub const DEFAULT_TAU: f64 = 0.01;
pub const DEFAULT_EPSILON: f64 = 1e-12;
pub const DEFAULT_MAX_STEPS: usize = 2_000_000;

/// Largest `|‖φ‖² - 1|` accepted where a normalized state is required.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-8;

/// Largest `‖F‖_∞` accepted where a critical point is required.
pub const CRITICAL_TOLERANCE: f64 = 1e-8;

/// Minimum residual norm in Gram-Schmidt before input counts as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct GpeProblem {
    grid: Arc<Grid>,
    potential: GridField,
    beta: f64,
}

impl GpeProblem {
    pub fn new(potential: GridField, beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("interaction coefficient must be finite, got {beta}")));
        }
        Ok(Self { grid: potential.grid().clone(), potential, beta })
    }

    pub fn with_potential(kind: PotentialKind, kappa: f64, grid: &Arc<Grid>, beta: f64) -> Result<Self> {
        Self::new(potential_field(kind, kappa, grid), beta)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn potential(&self) -> &GridField {
        &self.potential
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn check(&self, field: &GridField) -> Result<()> {
        if field.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    fn field(&self, values: Vec<f64>) -> GridField {
        GridField::new(self.grid.clone(), values).expect("values sized for this grid")
    }

    /// `Σ λ a_m b_m` over spectral coefficients, which equals `<-Δa, b>`.
    fn stiffness(&self, ca: &[f64], cb: &[f64]) -> f64 {
        self.grid
            .neg_laplacian_symbol()
            .iter()
            .zip(ca.iter().zip(cb))
            .map(|(l, (a, b))| l * a * b)
            .sum()
    }

    fn spectral(&self, values: &[f64]) -> Vec<f64> {
        self.grid.forward(values).expect("values sized for this grid")
    }

    fn quartic(&self, phi: &[f64]) -> f64 {
        self.grid.cell_volume() * phi.iter().map(|p| p.powi(4)).sum::<f64>()
    }

    fn potential_energy(&self, phi: &[f64]) -> f64 {
        self.grid.cell_volume() * self.potential.values().iter().zip(phi).map(|(v, p)| v * p * p).sum::<f64>()
    }

    fn energy_parts(&self, phi: &[f64]) -> (f64, f64) {
        let c = self.spectral(phi);
        let energy = 0.5 * self.stiffness(&c, &c) + self.potential_energy(phi) + 0.5 * self.beta * self.quartic(phi);
        (energy, energy + 0.5 * self.beta * self.quartic(phi))
    }
}

impl SaddleProblem for GpeProblem {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.grid.dot(a, b)
    }

    fn energy(&self, u: &[f64]) -> f64 {
        self.energy_parts(u).0
    }

    fn energy_gradient(&self, u: &[f64]) -> Vec<f64> {
        let mut g = self.grid.apply_symbol(u, |l| l).expect("sized");
        for ((gi, v), p) in g.iter_mut().zip(self.potential.values()).zip(u) {
            *gi += 2.0 * v * p + 2.0 * self.beta * p * p * p;
        }
        g
    }

    fn energy_hessian_action(&self, u: &[f64], w: &[f64]) -> Vec<f64> {
        let mut g = self.grid.apply_symbol(w, |l| l).expect("sized");
        for (((gi, v), p), wi) in g.iter_mut().zip(self.potential.values()).zip(u).zip(w) {
            *gi += 2.0 * (v + 3.0 * self.beta * p * p) * wi;
        }
        g
    }

    fn constraint(&self, _l: usize, u: &[f64]) -> f64 {
        self.grid.dot(u, u) - 1.0
    }

    fn constraint_gradient(&self, _l: usize, u: &[f64]) -> Vec<f64> {
        u.iter().map(|x| 2.0 * x).collect()
    }

    fn constraint_hessian_action(&self, _l: usize, _u: &[f64], w: &[f64]) -> Vec<f64> {
        w.iter().map(|x| 2.0 * x).collect()
    }

    /// `(-Δ + 1)^{-1}`.
    fn precondition(&self, _u: &[f64], r: &[f64]) -> Vec<f64> {
        self.grid.apply_symbol(r, |l| 1.0 / (l + 1.0)).expect("sized")
    }
}

pub fn gp_energy(problem: &GpeProblem, phi: &GridField) -> Result<f64> {
    problem.check(phi)?;
    Ok(problem.energy_parts(phi.values()).0)
}

/// `μ(φ) = E(φ) + β/2 ∫ φ⁴`.
pub fn chemical_potential(problem: &GpeProblem, phi: &GridField) -> Result<f64> {
    problem.check(phi)?;
    Ok(problem.energy_parts(phi.values()).1)
}

fn check_normalized(problem: &GpeProblem, phi: &[f64]) -> Result<()> {
    let norm_sq = problem.grid.dot(phi, phi);
    if !((norm_sq - 1.0).abs() <= NORMALIZATION_TOLERANCE) {
        return Err(Error::NotNormalized { norm_sq });
    }
    Ok(())
}

/// `-½Δφ + Vφ + βφ³ - μ(φ)φ` and its sup-norm.
pub fn gpe_residual(problem: &GpeProblem, phi: &GridField) -> Result<(GridField, f64)> {
    problem.check(phi)?;
    check_normalized(problem, phi.values())?;
    let (_, mu) = problem.energy_parts(phi.values());
    let r = residual_values(problem, phi.values(), mu);
    let sup = sup_norm(&r);
    Ok((problem.field(r), sup))
}

fn residual_values(problem: &GpeProblem, phi: &[f64], mu: f64) -> Vec<f64> {
    let mut r = problem.grid.apply_symbol(phi, |l| 0.5 * l).expect("sized");
    let beta = problem.beta;
    for ((ri, v), p) in r.iter_mut().zip(problem.potential.values()).zip(phi) {
        *ri += (v + beta * p * p - mu) * p;
    }
    r
}

/// Coefficients of the semi-implicit scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct CgadCoefficients {
    /// `ξ_i = ∫ ½∇φ·∇v_i + Vφv_i + βφ³v_i`.
    pub xi: Vec<f64>,
    /// `ν_ij = (2 - δ_ij) ∫ ½∇v_i·∇v_j + V v_i v_j + 3βφ² v_i v_j`, `j <= i`.
    pub nu: DMatrix<f64>,
    /// `σ_i = 2β ∫ φ³ v_i`.
    pub sigma: Vec<f64>,
}

pub fn cgad_coefficients(problem: &GpeProblem, phi: &GridField, v: &[GridField]) -> Result<CgadCoefficients> {
    problem.check(phi)?;
    for f in v {
        problem.check(f)?;
    }
    let vs: Vec<&[f64]> = v.iter().map(|f| f.values()).collect();
    let cphi = problem.spectral(phi.values());
    let cv: Vec<Vec<f64>> = vs.iter().map(|x| problem.spectral(x)).collect();
    Ok(coefficients(problem, phi.values(), &cphi, &vs, &cv))
}

fn coefficients(problem: &GpeProblem, phi: &[f64], cphi: &[f64], v: &[&[f64]], cv: &[Vec<f64>]) -> CgadCoefficients {
    let k = v.len();
    let h = problem.grid.cell_volume();
    let beta = problem.beta;
    let pot = problem.potential.values();
    let mut xi = Vec::with_capacity(k);
    let mut sigma = Vec::with_capacity(k);
    for (vi, ci) in v.iter().zip(cv) {
        let mut local = 0.0;
        let mut cubic = 0.0;
        for ((p, w), vv) in phi.iter().zip(pot).zip(vi.iter()) {
            local += w * p * vv;
            cubic += p * p * p * vv;
        }
        xi.push(0.5 * problem.stiffness(cphi, ci) + h * (local + beta * cubic));
        sigma.push(2.0 * beta * h * cubic);
    }
    let mut nu = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let mut local = 0.0;
            for (((p, w), a), b) in phi.iter().zip(pot).zip(v[i].iter()).zip(v[j].iter()) {
                local += (w + 3.0 * beta * p * p) * a * b;
            }
            let factor = if i == j { 1.0 } else { 2.0 };
            nu[(i, j)] = factor * (0.5 * problem.stiffness(&cv[i], &cv[j]) + h * local);
        }
    }
    CgadCoefficients { xi, nu, sigma }
}

/// Classical Gram-Schmidt in the grid inner product, in order. A second
/// pass runs if the result is off by more than `1e-10`.
fn gson(grid: &Grid, fields: &mut [Vec<f64>]) -> Result<()> {
    for pass in 0..2 {
        for i in 0..fields.len() {
            let (done, rest) = fields.split_at_mut(i);
            let f = &mut rest[0];
            let coeffs: Vec<f64> = done.iter().map(|q| grid.dot(q, f)).collect();
            for (c, q) in coeffs.iter().zip(done.iter()) {
                axpy(-c, q, f);
            }
            let norm = grid.dot(f, f).sqrt();
            if !(norm > DEGENERACY_TOLERANCE) {
                return Err(Error::DegenerateInput { index: i, norm });
            }
            scale(1.0 / norm, f);
        }
        if pass == 0 && orthonormality_defect(grid, fields) <= 1e-10 {
            break;
        }
    }
    Ok(())
}

fn orthonormality_defect(grid: &Grid, fields: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..fields.len() {
        for j in 0..=i {
            let delta = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((grid.dot(&fields[i], &fields[j]) - delta).abs());
        }
    }
    worst
}

/// Orthonormalizes `[φ, v_1, .., v_k]` in order.
pub fn gram_schmidt_orthonormalize(fields: &[GridField]) -> Result<Vec<GridField>> {
    let Some(first) = fields.first() else {
        return Ok(Vec::new());
    };
    let grid = first.grid().clone();
    for f in fields {
        first.same_grid(f)?;
    }
    let mut values: Vec<Vec<f64>> = fields.iter().map(|f| f.values().to_vec()).collect();
    gson(&grid, &mut values)?;
    Ok(values.into_iter().map(|v| GridField::new(grid.clone(), v).expect("sized")).collect())
}

/// Grid involutions that commute with the discrete operators whenever the
/// potential shares the symmetry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Involution {
    Reflect(usize),
    Transpose,
}

fn involutions(grid: &Grid) -> Vec<Involution> {
    let axes = grid.axes();
    let mut out: Vec<Involution> = (0..axes.len()).map(Involution::Reflect).collect();
    if axes.len() == 2 && axes[0] == axes[1] {
        out.push(Involution::Transpose);
    }
    out
}

fn apply_involution(grid: &Grid, op: Involution, f: &[f64]) -> Vec<f64> {
    let axes = grid.axes();
    match (op, axes.len()) {
        (Involution::Reflect(_), 1) => f.iter().rev().copied().collect(),
        (Involution::Reflect(a), _) => {
            let (n0, n1) = (axes[0].n, axes[1].n);
            let mut out = vec![0.0; f.len()];
            for i in 0..n0 {
                for j in 0..n1 {
                    let (si, sj) = if a == 0 { (n0 - 1 - i, j) } else { (i, n1 - 1 - j) };
                    out[i * n1 + j] = f[si * n1 + sj];
                }
            }
            out
        }
        (Involution::Transpose, _) => {
            let n = axes[0].n;
            let mut out = vec![0.0; f.len()];
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = f[j * n + i];
                }
            }
            out
        }
    }
}

/// Parities `±1` that each field has under each grid involution the
/// potential is invariant under.
fn detect_parities(problem: &GpeProblem, fields: &[&[f64]]) -> Vec<Vec<(Involution, f64)>> {
    let grid = problem.grid.as_ref();
    let pot = problem.potential.values();
    let ops: Vec<Involution> = involutions(grid)
        .into_iter()
        .filter(|op| {
            let r = apply_involution(grid, *op, pot);
            sup_diff(&r, pot) <= 1e-12 * sup_norm(pot).max(1.0)
        })
        .collect();
    fields
        .iter()
        .map(|f| {
            let norm_sq = grid.dot(f, f);
            ops.iter()
                .filter_map(|op| {
                    let c = grid.dot(f, &apply_involution(grid, *op, f)) / norm_sq;
                    [1.0, -1.0].into_iter().find(|s| (c - s).abs() < 1e-10).map(|s| (*op, s))
                })
                .collect()
        })
        .collect()
}

fn symmetrize(grid: &Grid, parities: &[(Involution, f64)], f: &mut [f64]) {
    for (op, sign) in parities {
        let r = apply_involution(grid, *op, f);
        for (x, y) in f.iter_mut().zip(r) {
            *x = 0.5 * (*x + sign * y);
        }
    }
}

struct Advance {
    phi: Vec<f64>,
    v: Vec<Vec<f64>>,
    /// `‖F^n‖_∞` at the input state.
    residual_inf: f64,
}

fn advance(
    problem: &GpeProblem,
    phi: &[f64],
    v: &[Vec<f64>],
    tau: f64,
    parities: Option<&[Vec<(Involution, f64)>]>,
) -> Result<Advance> {
    let grid = &problem.grid;
    let beta = problem.beta;
    let pot = problem.potential.values();
    let cphi = problem.spectral(phi);
    let cv: Vec<Vec<f64>> = v.iter().map(|x| problem.spectral(x)).collect();
    let mu = 0.5 * problem.stiffness(&cphi, &cphi) + problem.potential_energy(phi) + beta * problem.quartic(phi);
    let residual_inf = sup_norm(&residual_values(problem, phi, mu));

    let vs: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
    let co = coefficients(problem, phi, &cphi, &vs, &cv);

    let mut rhs = Vec::with_capacity(v.len() + 1);
    let mut r0: Vec<f64> = phi
        .iter()
        .zip(pot)
        .map(|(p, w)| p + tau * (-w * p - beta * p * p * p + mu * p))
        .collect();
    for (x, vj) in co.xi.iter().zip(v) {
        axpy(2.0 * tau * x, vj, &mut r0);
    }
    rhs.push(r0);
    for i in 0..v.len() {
        let mut ri: Vec<f64> = v[i]
            .iter()
            .zip(pot)
            .zip(phi)
            .map(|((vi, w), p)| vi + tau * (-w * vi - 3.0 * beta * p * p * vi + co.sigma[i] * p))
            .collect();
        for j in 0..=i {
            axpy(tau * co.nu[(i, j)], &v[j], &mut ri);
        }
        rhs.push(ri);
    }
    let mut next = Vec::with_capacity(rhs.len());
    for r in &rhs {
        let s = grid.solve_helmholtz(r, tau)?;
        let peak = sup_norm(&s);
        if !(peak <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { step: 0, norm: peak });
        }
        next.push(s);
    }
    if let Some(parities) = parities {
        for (f, p) in next.iter_mut().zip(parities) {
            symmetrize(grid, p, f);
        }
    }
    gson(grid, &mut next)?;
    let phi_next = next.remove(0);
    Ok(Advance { phi: phi_next, v: next, residual_inf })
}

fn check_state(problem: &GpeProblem, state: &CgadState, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
    }
    if state.gamma.len() != state.k() + 1 {
        return Err(Error::SizeMismatch { expected: state.k() + 1, found: state.gamma.len() });
    }
    if state.gamma.iter().any(|g| *g != DEFAULT_GAMMA) {
        return Err(Error::InvalidArgument("the semi-implicit scheme requires every γ_i = 2".into()));
    }
    let n = problem.dim();
    for x in std::iter::once(&state.u).chain(&state.v) {
        if x.len() != n {
            return Err(Error::SizeMismatch { expected: n, found: x.len() });
        }
    }
    Ok(())
}

/// One step of the semi-implicit scheme followed by orthonormalization.
pub fn cgad_step(problem: &GpeProblem, state: &CgadState, tau: f64) -> Result<CgadState> {
    check_state(problem, state, tau)?;
    let a = advance(problem, &state.u, &state.v, tau, None)?;
    Ok(CgadState::new_unchecked(a.phi, a.v, state.gamma.clone()))
}

/// Builds a solver state from `φ` and `v_i`, orthonormalizing them first.
pub fn initial_state(phi: &GridField, v: &[GridField]) -> Result<CgadState> {
    let mut fields = vec![phi.clone()];
    fields.extend(v.iter().cloned());
    let mut out = gram_schmidt_orthonormalize(&fields)?.into_iter().map(GridField::into_values);
    let u = out.next().expect("non-empty");
    let v: Vec<Vec<f64>> = out.collect();
    let k = v.len();
    Ok(CgadState::new_unchecked(u, v, vec![DEFAULT_GAMMA; k + 1]))
}

/// Adds seeded uniform noise of the given sup-norm to every field, then
/// orthonormalizes.
pub fn perturbed_state(phi: &GridField, v: &[GridField], magnitude: f64, seed: u64) -> Result<CgadState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noisy = |f: &GridField| {
        let values = f.values().iter().map(|x| x + magnitude * rng.random_range(-1.0..1.0)).collect();
        GridField::new(f.grid().clone(), values)
    };
    let phi = noisy(phi)?;
    let v = v.iter().map(&mut noisy).collect::<Result<Vec<_>>>()?;
    initial_state(&phi, &v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tau: f64,
    pub epsilon: f64,
    pub max_steps: usize,
    /// Re-impose, after every step, each reflection parity the initial fields
    /// have (axis reflections, and the diagonal swap on square grids) whenever
    /// the potential shares it. The exact flow preserves these parities;
    /// round-off does not, and unstable symmetric saddles are lost without
    /// this.
    pub preserve_symmetry: bool,
}

impl SolverSettings {
    pub fn new(tau: f64, epsilon: f64, max_steps: usize) -> Self {
        Self { tau, epsilon, max_steps, preserve_symmetry: false }
    }

    pub fn with_symmetry(mut self, on: bool) -> Self {
        self.preserve_symmetry = on;
        self
    }
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self::new(DEFAULT_TAU, DEFAULT_EPSILON, DEFAULT_MAX_STEPS)
    }
}

#[derive(Debug, Clone)]
pub struct SolveRecord {
    pub phi: GridField,
    pub v: Vec<GridField>,
    pub energy: f64,
    pub chemical_potential: f64,
    /// `‖F^n‖_∞` at the last tested iterate.
    pub residual_inf: f64,
    /// `max(‖φ^{n+1} - φ^n‖_∞, ‖v_i^{n+1} - v_i^n‖_∞) / τ` at the last step.
    pub increment_inf: f64,
    pub steps: usize,
    pub converged: bool,
    pub morse_index_certified: Option<usize>,
    pub beta: f64,
    pub k: usize,
    /// Number of steps where the energy went up (ground-state flow only).
    pub energy_increases: usize,
}

fn iterate(problem: &GpeProblem, init: &CgadState, settings: &SolverSettings, monitor_energy: bool) -> Result<SolveRecord> {
    check_state(problem, init, settings.tau)?;
    check_normalized(problem, &init.u)?;
    let tau = settings.tau;
    let mut phi = init.u.clone();
    let mut v = init.v.clone();
    let mut residual_inf = f64::INFINITY;
    let mut increment_inf = f64::INFINITY;
    let mut steps = 0;
    let mut converged = false;
    let mut energy = problem.energy(&phi);
    let mut energy_increases = 0;
    let parities = settings.preserve_symmetry.then(|| {
        let fields: Vec<&[f64]> = std::iter::once(phi.as_slice()).chain(v.iter().map(|x| x.as_slice())).collect();
        detect_parities(problem, &fields)
    });
    while steps < settings.max_steps {
        let a = advance(problem, &phi, &v, tau, parities.as_deref()).map_err(|e| match e {
            Error::Diverged { norm, .. } => Error::Diverged { step: steps + 1, norm },
            other => other,
        })?;
        let mut inc = sup_diff(&a.phi, &phi);
        for (new, old) in a.v.iter().zip(&v) {
            inc = inc.max(sup_diff(new, old));
        }
        residual_inf = a.residual_inf;
        increment_inf = inc / tau;
        phi = a.phi;
        v = a.v;
        steps += 1;
        if monitor_energy {
            let e = problem.energy(&phi);
            if e > energy + 1e-12 * energy.abs().max(1.0) {
                if energy_increases == 0 {
                    log::warn!("energy increased at step {steps}: {energy:.12e} -> {e:.12e}");
                }
                energy_increases += 1;
            }
            energy = e;
        }
        if residual_inf < settings.epsilon && increment_inf < settings.epsilon {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!(
            "no convergence after {steps} steps (residual {residual_inf:.3e}, increment {increment_inf:.3e})"
        );
    }
    let (energy, chemical_potential) = problem.energy_parts(&phi);
    let k = v.len();
    Ok(SolveRecord {
        phi: problem.field(phi),
        v: v.into_iter().map(|x| problem.field(x)).collect(),
        energy,
        chemical_potential,
        residual_inf,
        increment_inf,
        steps,
        converged,
        morse_index_certified: None,
        beta: problem.beta,
        k,
        energy_increases,
    })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Iterates [`cgad_step`] until `‖F^n‖_∞ < ε` and the scaled increments of
/// `φ` and every `v_i` drop below `ε`. Running out of steps is not an error;
/// the record then has `converged = false`.
pub fn solve_excited_state(problem: &GpeProblem, init: &CgadState, settings: &SolverSettings) -> Result<SolveRecord> {
    iterate(problem, init, settings, false)
}

/// Normalized gradient flow: the `k = 0` scheme, with energy monitoring.
pub fn ground_state_ngf(problem: &GpeProblem, init_phi: &GridField, settings: &SolverSettings) -> Result<SolveRecord> {
    problem.check(init_phi)?;
    let state = initial_state(init_phi, &[])?;
    iterate(problem, &state, settings, true)
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Smallest eigenvalues of the projected Hessian, ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<GridField>,
    pub morse_index: usize,
    pub expected_index: usize,
    /// Smallest gap between consecutive reported eigenvalues.
    pub min_gap: f64,
    pub near_degenerate: bool,
    pub residual_inf: f64,
}

impl SpectrumReport {
    /// Exactly `k` negative eigenvalues and `λ_{k+1} > 0`.
    pub fn confirms_expected(&self) -> bool {
        self.morse_index == self.expected_index
            && self.eigenvalues.get(self.expected_index).is_none_or(|l| *l > 0.0)
    }
}

/// Relative gap below which consecutive eigenvalues count as degenerate.
pub const NEAR_DEGENERACY: f64 = 1e-6;

/// The `k_expected + 2` smallest eigenvalues of `Ĥ(φ*)` on the tangent space
/// and the resulting Morse index.
pub fn certify_morse_index(problem: &GpeProblem, phi: &GridField, k_expected: usize) -> Result<SpectrumReport> {
    certify_with(problem, phi, k_expected, &EigenOptions::default())
}

pub fn certify_with(
    problem: &GpeProblem,
    phi: &GridField,
    k_expected: usize,
    options: &EigenOptions,
) -> Result<SpectrumReport> {
    let (_, residual_inf) = gpe_residual(problem, phi)?;
    if !(residual_inf < CRITICAL_TOLERANCE) {
        return Err(Error::NotCritical { residual: residual_inf });
    }
    let count = (k_expected + 2).min(problem.dim() - 1);
    let spectrum = eigen::smallest_tangent_eigenpairs(problem, phi.values(), count, options)?;
    let min_gap = spectrum
        .eigenvalues
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(w[1].abs()).max(1.0))
        .fold(f64::INFINITY, f64::min);
    Ok(SpectrumReport {
        morse_index: spectrum.negative_count(),
        eigenvectors: spectrum.eigenvectors.into_iter().map(|x| problem.field(x)).collect(),
        eigenvalues: spectrum.eigenvalues,
        expected_index: k_expected,
        near_degenerate: min_gap < NEAR_DEGENERACY,
        min_gap,
        residual_inf,
    })
}

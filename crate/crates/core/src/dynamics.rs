//! Index-k constrained gentlest ascent dynamics.
//!
//! The state is `(u, v_1..v_k)` with relaxation parameters `γ_0..γ_k`:
//!
//! ```text
//! γ_0 u'   = -F(u) + 2 Σ_i <F(u), v_i> v_i
//! γ_i v_i' = -Ĥ(u) v_i + Σ_{j<=i} λ_ij v_j + Σ_l λ̄_il G_l'(u)
//! ```

use nalgebra::{Complex, DMatrix, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eigen::{self, fix_signs, EigenOptions};
use crate::error::{Error, Result};
use crate::manifold::{axpy, constraint_values, scale, Geometry, SaddleProblem, MANIFOLD_TOLERANCE};

/// Relaxation parameter used when none is given.
pub const DEFAULT_GAMMA: f64 = 2.0;

/// `cgad_rhs` norms below this count as a steady state.
pub const STEADY_TOLERANCE: f64 = 1e-8;

/// States with `|u|` beyond this are reported as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

/// Jacobian eigenvalues with real part above `-STABILITY_MARGIN * scale` are
/// not counted as strictly stable. Guards against finite-difference noise
/// around zero eigenvalues.
pub const STABILITY_MARGIN: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct CgadState {
    pub u: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
}

impl CgadState {
    /// Builds a state and checks every constraint residual against `1e-10`.
    pub fn new<P: SaddleProblem + ?Sized>(problem: &P, u: Vec<f64>, v: Vec<Vec<f64>>, gamma: Vec<f64>) -> Result<Self> {
        let state = Self::new_unchecked(u, v, gamma);
        state.check_shapes(problem)?;
        let worst = constraint_residuals(problem, &state).iter().fold(0.0_f64, |a, r| a.max(r.abs()));
        if !(worst <= MANIFOLD_TOLERANCE) {
            return Err(Error::InvalidArgument(format!(
                "state violates its constraints (max residual {worst:.3e})"
            )));
        }
        Ok(state)
    }

    /// Same as [`CgadState::new`] with every `γ_i` equal to 2.
    pub fn with_default_gamma<P: SaddleProblem + ?Sized>(problem: &P, u: Vec<f64>, v: Vec<Vec<f64>>) -> Result<Self> {
        let gamma = vec![DEFAULT_GAMMA; v.len() + 1];
        Self::new(problem, u, v, gamma)
    }

    pub fn new_unchecked(u: Vec<f64>, v: Vec<Vec<f64>>, gamma: Vec<f64>) -> Self {
        Self { u, v, gamma }
    }

    pub fn k(&self) -> usize {
        self.v.len()
    }

    fn check_shapes<P: SaddleProblem + ?Sized>(&self, problem: &P) -> Result<()> {
        let n = problem.dim();
        for x in std::iter::once(&self.u).chain(&self.v) {
            if x.len() != n {
                return Err(Error::SizeMismatch { expected: n, found: x.len() });
            }
        }
        if self.gamma.len() != self.k() + 1 {
            return Err(Error::SizeMismatch { expected: self.k() + 1, found: self.gamma.len() });
        }
        if self.gamma.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::InvalidArgument("relaxation parameters must be positive".into()));
        }
        Ok(())
    }

    /// Euclidean-style norm of the stacked state under the problem pairing.
    pub fn norm<P: SaddleProblem + ?Sized>(&self, problem: &P) -> f64 {
        let mut s = problem.inner(&self.u, &self.u);
        for v in &self.v {
            s += problem.inner(v, v);
        }
        s.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSet {
    /// `λ_ij`, zero above the diagonal.
    pub lambda: DMatrix<f64>,
    /// `λ̄_il`, k rows by m columns.
    pub lambda_bar: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CgadRhs {
    pub du: Vec<f64>,
    pub dv: Vec<Vec<f64>>,
}

impl CgadRhs {
    pub fn norm<P: SaddleProblem + ?Sized>(&self, problem: &P) -> f64 {
        let mut s = problem.inner(&self.du, &self.du);
        for d in &self.dv {
            s += problem.inner(d, d);
        }
        s.sqrt()
    }
}

struct Evaluation {
    rhs: CgadRhs,
    multipliers: MultiplierSet,
}

fn evaluate<P: SaddleProblem + ?Sized>(problem: &P, state: &CgadState) -> Result<Evaluation> {
    state.check_shapes(problem)?;
    let geom = Geometry::at(problem, &state.u)?;
    let k = state.k();
    let m = geom.gram.num_constraints();
    let gamma = &state.gamma;
    let f = &geom.gradient;

    let fv: Vec<f64> = state.v.iter().map(|v| problem.inner(f, v)).collect();
    // w = F - 2 Σ <F, v_j> v_j, so that γ_0 u' = -w.
    let mut w = f.clone();
    for (c, v) in fv.iter().zip(&state.v) {
        axpy(-2.0 * c, v, &mut w);
    }
    let mut du = w.clone();
    scale(-1.0 / gamma[0], &mut du);

    let hv: Vec<Vec<f64>> = state.v.iter().map(|v| geom.projected_hessian(v)).collect();
    let mut lambda = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let delta = if i == j { 1.0 } else { 0.0 };
            lambda[(i, j)] = (1.0 + gamma[i + 1] / gamma[j + 1] - delta) * problem.inner(&hv[i], &state.v[j]);
        }
    }
    let mut lambda_bar = DMatrix::zeros(k, m);
    for i in 0..k {
        let pairings: Vec<f64> = (0..m)
            .map(|l| problem.inner(&problem.constraint_hessian_action(l, &state.u, &state.v[i]), &w))
            .collect();
        for l in 0..m {
            let s: f64 = (0..m).map(|lp| geom.gram.gram_inverse[(l, lp)] * pairings[lp]).sum();
            lambda_bar[(i, l)] = gamma[i + 1] / gamma[0] * s;
        }
    }

    let mut dv = Vec::with_capacity(k);
    for i in 0..k {
        let mut d = hv[i].clone();
        scale(-1.0, &mut d);
        for j in 0..=i {
            axpy(lambda[(i, j)], &state.v[j], &mut d);
        }
        for l in 0..m {
            axpy(lambda_bar[(i, l)], &geom.gram.gradients[l], &mut d);
        }
        scale(1.0 / gamma[i + 1], &mut d);
        dv.push(d);
    }
    Ok(Evaluation { rhs: CgadRhs { du, dv }, multipliers: MultiplierSet { lambda, lambda_bar } })
}

pub fn multipliers<P: SaddleProblem + ?Sized>(problem: &P, state: &CgadState) -> Result<MultiplierSet> {
    Ok(evaluate(problem, state)?.multipliers)
}

pub fn cgad_rhs<P: SaddleProblem + ?Sized>(problem: &P, state: &CgadState) -> Result<CgadRhs> {
    Ok(evaluate(problem, state)?.rhs)
}

/// Residuals `G_l(u)`, then `<G_l'(u), v_i>` (i outer, l inner), then
/// `<v_i, v_j> - δ_ij` for `j <= i`.
pub fn constraint_residuals<P: SaddleProblem + ?Sized>(problem: &P, state: &CgadState) -> Vec<f64> {
    let m = problem.num_constraints();
    let k = state.k();
    let mut out = constraint_values(problem, &state.u);
    out.reserve(m * k + k * (k + 1) / 2);
    let gradients: Vec<Vec<f64>> = (0..m).map(|l| problem.constraint_gradient(l, &state.u)).collect();
    for v in &state.v {
        out.extend(gradients.iter().map(|g| problem.inner(g, v)));
    }
    for i in 0..k {
        for j in 0..=i {
            let delta = if i == j { 1.0 } else { 0.0 };
            out.push(problem.inner(&state.v[i], &state.v[j]) - delta);
        }
    }
    out
}

/// Newton retraction onto `M` along the span of the constraint gradients.
pub fn retract<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64]) -> Result<Vec<f64>> {
    let m = problem.num_constraints();
    let mut x = u.to_vec();
    for _ in 0..50 {
        let g = constraint_values(problem, &x);
        if g.iter().all(|r| r.abs() <= 1e-15) {
            break;
        }
        let gradients: Vec<Vec<f64>> = (0..m).map(|l| problem.constraint_gradient(l, &x)).collect();
        let gram = DMatrix::from_fn(m, m, |i, j| problem.inner(&gradients[i], &gradients[j]));
        let c = gram
            .lu()
            .solve(&nalgebra::DVector::from_vec(g))
            .ok_or(Error::SingularGram { condition: f64::INFINITY })?;
        let before = x.clone();
        for (ci, gi) in c.iter().zip(&gradients) {
            axpy(-ci, gi, &mut x);
        }
        if x == before {
            break;
        }
    }
    Ok(x)
}

/// Restores all constraints: retracts `u`, projects each `v_i` onto the new
/// tangent space and orthonormalizes them in order.
pub fn correct_state<P: SaddleProblem + ?Sized>(problem: &P, state: &CgadState) -> Result<CgadState> {
    let u = retract(problem, &state.u)?;
    let geom = Geometry::at(problem, &u)?;
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(state.k());
    for (i, vi) in state.v.iter().enumerate() {
        let mut w = geom.project(vi);
        for _ in 0..2 {
            for q in &v {
                let c = problem.inner(q, &w);
                axpy(-c, q, &mut w);
            }
            w = geom.project(&w);
        }
        let norm = problem.norm(&w);
        if !(norm > 1e-12) {
            return Err(Error::DegenerateInput { index: i + 1, norm });
        }
        scale(1.0 / norm, &mut w);
        v.push(w);
    }
    Ok(CgadState { u, v, gamma: state.gamma.clone() })
}

/// Forward Euler on [`cgad_rhs`], optionally followed by [`correct_state`]
/// after every step. Returns all `n_steps + 1` states.
pub fn integrate_explicit<P: SaddleProblem + ?Sized>(
    problem: &P,
    state: &CgadState,
    tau: f64,
    n_steps: usize,
    renormalize: bool,
) -> Result<Vec<CgadState>> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
    }
    let mut trajectory = Vec::with_capacity(n_steps + 1);
    trajectory.push(state.clone());
    let mut current = state.clone();
    for step in 1..=n_steps {
        let rhs = cgad_rhs(problem, &current)?;
        axpy(tau, &rhs.du, &mut current.u);
        for (v, d) in current.v.iter_mut().zip(&rhs.dv) {
            axpy(tau, d, v);
        }
        let norm = problem.norm(&current.u);
        if !(norm <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { step, norm });
        }
        if renormalize {
            current = correct_state(problem, &current)?;
        }
        trajectory.push(current.clone());
    }
    Ok(trajectory)
}

#[derive(Debug, Clone)]
pub struct IdealizedStep {
    pub du: Vec<f64>,
    pub f_norm: f64,
    /// The `k + 1` smallest eigenvalues of `Ĥ(u)` (fewer if the tangent space
    /// is smaller).
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors for the `k` smallest eigenvalues.
    pub eigenvectors: Vec<Vec<f64>>,
}

/// `u' = -F(u) + 2 Σ <F(u), v_i(u)> v_i(u)` with `v_i(u)` exact eigenvectors of
/// `Ĥ(u)`. `reference` orients the eigenvectors for continuity along a path.
pub fn idealized_cgad_step<P: SaddleProblem + ?Sized>(
    problem: &P,
    u: &[f64],
    k: usize,
    reference: Option<&[Vec<f64>]>,
) -> Result<IdealizedStep> {
    let geom = Geometry::at(problem, u)?;
    let tangent_dim = problem.dim().saturating_sub(problem.num_constraints());
    if k > tangent_dim {
        return Err(Error::InvalidArgument(format!("index {k} exceeds tangent dimension {tangent_dim}")));
    }
    let count = (k + 1).min(tangent_dim);
    let spectrum = eigen::smallest_tangent_eigenpairs(problem, u, count, &EigenOptions::default())?;
    if k > 0 && count > k {
        let (a, b) = (spectrum.eigenvalues[k - 1], spectrum.eigenvalues[k]);
        if (b - a).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0) {
            return Err(Error::EigensolverFailure(format!(
                "eigenvalues {k} and {} coincide ({a:.6e}); the unstable subspace is not resolved",
                k + 1
            )));
        }
    }
    let mut eigenvectors: Vec<Vec<f64>> = spectrum.eigenvectors[..k].to_vec();
    fix_signs(problem, &mut eigenvectors, reference);
    let f = &geom.gradient;
    let mut du = f.clone();
    scale(-1.0, &mut du);
    for v in &eigenvectors {
        axpy(2.0 * problem.inner(f, v), v, &mut du);
    }
    Ok(IdealizedStep { du, f_norm: problem.norm(f), eigenvalues: spectrum.eigenvalues, eigenvectors })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexChange {
    pub step: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone)]
pub struct IdealizedTrajectory {
    pub times: Vec<f64>,
    pub f_norms: Vec<f64>,
    /// `min{-λ_k, λ_{k+1}}` at each recorded point.
    pub gaps: Vec<f64>,
    pub index_changes: Vec<IndexChange>,
    pub final_u: Vec<f64>,
}

/// Forward Euler with retraction on the idealized flow. Stops early once
/// `|F|` drops below `f_tol`.
pub fn integrate_idealized<P: SaddleProblem + ?Sized>(
    problem: &P,
    u0: &[f64],
    k: usize,
    tau: f64,
    n_steps: usize,
    f_tol: f64,
) -> Result<IdealizedTrajectory> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
    }
    let mut u = retract(problem, u0)?;
    let mut out = IdealizedTrajectory {
        times: Vec::new(),
        f_norms: Vec::new(),
        gaps: Vec::new(),
        index_changes: Vec::new(),
        final_u: Vec::new(),
    };
    let mut reference: Option<Vec<Vec<f64>>> = None;
    let mut index: Option<usize> = None;
    for step in 0..=n_steps {
        let s = idealized_cgad_step(problem, &u, k, reference.as_deref())?;
        let negatives = s.eigenvalues.iter().filter(|l| **l < 0.0).count();
        if let Some(prev) = index {
            if prev != negatives {
                log::info!("step {step}: negative eigenvalue count changed {prev} -> {negatives}");
                out.index_changes.push(IndexChange { step, from: prev, to: negatives });
            }
        }
        index = Some(negatives);
        let lower = if k > 0 { -s.eigenvalues[k - 1] } else { f64::INFINITY };
        let upper = s.eigenvalues.get(k).copied().unwrap_or(f64::INFINITY);
        out.times.push(step as f64 * tau);
        out.f_norms.push(s.f_norm);
        out.gaps.push(lower.min(upper));
        if s.f_norm < f_tol || step == n_steps {
            break;
        }
        axpy(tau, &s.du, &mut u);
        let norm = problem.norm(&u);
        if !(norm <= DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { step: step + 1, norm });
        }
        u = retract(problem, &u)?;
        reference = Some(s.eigenvectors);
    }
    out.final_u = u;
    Ok(out)
}

/// Least-squares slope of `ln y` against `t`.
pub fn log_slope(t: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(_, v)| **v > 0.0).map(|(a, v)| (*a, v.ln())).collect();
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Eigenvalues of the finite-difference Jacobian on the tangent bundle.
    pub jacobian_eigenvalues: Vec<Complex<f64>>,
    pub max_real_part: f64,
    pub is_linearly_stable: bool,
    /// Closed-form prediction from the spectrum of `Ĥ(u)`, ascending.
    pub predicted_eigenvalues: Vec<f64>,
    /// Rayleigh quotients `<Ĥ v_i, v_i>`.
    pub direction_eigenvalues: Vec<f64>,
    /// The remaining tangent eigenvalues, ascending.
    pub complementary_eigenvalues: Vec<f64>,
}

/// The predicted Jacobian spectrum at a steady state where `v_i` carries the
/// eigenvalue `direction[i]` and `rest` lists the other tangent eigenvalues.
pub fn predicted_jacobian_spectrum(direction: &[f64], rest: &[f64], gamma: &[f64]) -> Vec<f64> {
    let k = direction.len();
    let all: Vec<f64> = direction.iter().chain(rest).copied().collect();
    let mut out = Vec::with_capacity((k + 1) * all.len());
    out.extend(direction.iter().map(|l| l / gamma[0]));
    out.extend(rest.iter().map(|l| -l / gamma[0]));
    for i in 0..k {
        for r in 0..=i {
            out.push(direction[i] / gamma[i + 1] + direction[r] / gamma[r + 1]);
        }
    }
    for i in 0..k {
        for s in (i + 1)..all.len() {
            out.push((direction[i] - all[s]) / gamma[i + 1]);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Eigenvalues of a general real matrix. The shifted QR iteration can stall
/// on highly structured input, in which case the matrix is conjugated by a
/// seeded random orthogonal matrix and the iteration retried.
fn general_eigenvalues(m: DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if let Some(schur) = Schur::try_new(m.clone(), f64::EPSILON, 2000) {
        return Ok(schur.complex_eigenvalues().iter().copied().collect());
    }
    let n = m.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..4 {
        let q = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        let conj = q.transpose() * &m * &q;
        if let Some(schur) = Schur::try_new(conj, f64::EPSILON, 2000) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::EigensolverFailure("QR iteration on the Jacobian did not converge".into()))
}

/// Linear stability of a steady state of the CGAD system.
///
/// The Jacobian is assembled by central differences in the chart
/// `(a, b_1..b_k) -> (R(u + Qa), P(v_i + Q b_i))`, where `Q` is an orthonormal
/// basis of the tangent space, `R` the retraction and `P` the tangent
/// projection at the retracted point.
pub fn classify_steady_state<P: SaddleProblem + ?Sized>(problem: &P, state: &CgadState) -> Result<StabilityReport> {
    let rhs = cgad_rhs(problem, state)?;
    let residual = rhs.norm(problem);
    if !(residual < STEADY_TOLERANCE) {
        return Err(Error::NotSteady { residual });
    }
    let k = state.k();
    let geom = Geometry::at(problem, &state.u)?;
    let basis = eigen::tangent_basis(&geom);
    let nt = basis.len();
    let size = (k + 1) * nt;
    let eps = 1e-6 * state.norm(problem).max(1.0);

    let chart = |coords: &[(usize, f64)]| -> Result<CgadState> {
        let mut u = state.u.clone();
        let mut v = state.v.clone();
        for &(idx, c) in coords {
            let (block, a) = (idx / nt, idx % nt);
            if block == 0 {
                axpy(c, &basis[a], &mut u);
            } else {
                axpy(c, &basis[a], &mut v[block - 1]);
            }
        }
        let u = retract(problem, &u)?;
        let g = Geometry::at(problem, &u)?;
        let v = v.iter().map(|x| g.project(x)).collect();
        Ok(CgadState { u, v, gamma: state.gamma.clone() })
    };

    let mut jac = DMatrix::zeros(size, size);
    for col in 0..size {
        let plus = cgad_rhs(problem, &chart(&[(col, eps)])?)?;
        let minus = cgad_rhs(problem, &chart(&[(col, -eps)])?)?;
        let blocks = std::iter::once((&plus.du, &minus.du)).chain(plus.dv.iter().zip(&minus.dv));
        for (b, (p, m)) in blocks.enumerate() {
            let mut d = p.clone();
            axpy(-1.0, m, &mut d);
            for (a, q) in basis.iter().enumerate() {
                jac[(b * nt + a, col)] = problem.inner(q, &d) / (2.0 * eps);
            }
        }
    }
    let mut jacobian_eigenvalues = general_eigenvalues(jac)?;
    jacobian_eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let max_real_part = jacobian_eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let scale_ = jacobian_eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let is_linearly_stable = max_real_part < -STABILITY_MARGIN * scale_;

    let direction_eigenvalues: Vec<f64> = state
        .v
        .iter()
        .map(|v| problem.inner(&geom.projected_hessian(v), v))
        .collect();
    let full = eigen::full_tangent_spectrum(problem, &state.u)?;
    let mut rest = full.eigenvalues.clone();
    for d in &direction_eigenvalues {
        if let Some((pos, _)) = rest
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - d).abs().total_cmp(&(b.1 - d).abs()))
        {
            rest.remove(pos);
        }
    }
    let predicted_eigenvalues = predicted_jacobian_spectrum(&direction_eigenvalues, &rest, &state.gamma);
    Ok(StabilityReport {
        jacobian_eigenvalues,
        max_real_part,
        is_linearly_stable,
        predicted_eigenvalues,
        direction_eigenvalues,
        complementary_eigenvalues: rest,
    })
}

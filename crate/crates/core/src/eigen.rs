//! Smallest eigenpairs of the projected Hessian `Ĥ(u)` on the tangent space.
//!
//! Small tangent spaces are handled densely through an orthonormal tangent
//! basis. Larger ones go through a preconditioned LOBPCG iteration that works
//! only with operator actions.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::manifold::{axpy, scale, Geometry, SaddleProblem};

/// Largest tangent dimension solved with a dense eigendecomposition.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenMethod {
    Auto,
    Dense,
    Lobpcg,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub method: EigenMethod,
    /// Residual tolerance `|Ĥx - λx| <= tol * max(1, |λ|)`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { method: EigenMethod::Auto, tol: 1e-8, max_iter: 5000, seed: 7 }
    }
}

#[derive(Debug, Clone)]
pub struct TangentSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub residual_norms: Vec<f64>,
    /// Dimension of the tangent space the operator acts on.
    pub tangent_dim: usize,
}

impl TangentSpectrum {
    pub fn negative_count(&self) -> usize {
        self.eigenvalues.iter().filter(|l| **l < 0.0).count()
    }
}

/// Canonical directions to leave out of the tangent basis: for each
/// constraint gradient (made orthogonal to the earlier ones) the coordinate
/// of largest magnitude. Without this pivoting the projected canonical
/// vectors become nearly dependent whenever a gradient is localized.
fn pivots<P: SaddleProblem + ?Sized>(geom: &Geometry<'_, P>) -> Vec<usize> {
    let problem = geom.problem;
    let mut normals: Vec<Vec<f64>> = Vec::new();
    let mut skip = Vec::new();
    for g in &geom.gram.gradients {
        let mut w = g.clone();
        for q in &normals {
            let c = problem.inner(q, &w) / problem.inner(q, q);
            axpy(-c, q, &mut w);
        }
        let pick = w
            .iter()
            .enumerate()
            .filter(|(i, _)| !skip.contains(i))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i);
        if let Some(i) = pick {
            skip.push(i);
        }
        normals.push(w);
    }
    skip
}

/// Orthonormal basis of `T_u M` by Gram-Schmidt on projected canonical
/// vectors, with one re-orthogonalization pass per vector.
pub fn tangent_basis<P: SaddleProblem + ?Sized>(geom: &Geometry<'_, P>) -> Vec<Vec<f64>> {
    let problem = geom.problem;
    let n = problem.dim();
    let target = n.saturating_sub(geom.gram.num_constraints());
    let skip = pivots(geom);
    let order = (0..n).filter(|j| !skip.contains(j)).chain(skip.iter().copied());
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(target);
    let mut e = vec![0.0; n];
    for j in order {
        if basis.len() == target {
            break;
        }
        e[j] = 1.0;
        let reference = problem.norm(&e);
        let mut w = geom.project(&e);
        e[j] = 0.0;
        for _ in 0..2 {
            for q in &basis {
                let c = problem.inner(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let norm = problem.norm(&w);
        if norm > 1e-6 * reference {
            scale(1.0 / norm, &mut w);
            basis.push(w);
        }
    }
    basis
}

/// Smallest `count` eigenpairs of `Ĥ(u)` restricted to `T_u M`.
pub fn smallest_tangent_eigenpairs<P: SaddleProblem + ?Sized>(
    problem: &P,
    u: &[f64],
    count: usize,
    options: &EigenOptions,
) -> Result<TangentSpectrum> {
    let geom = Geometry::at(problem, u)?;
    let tangent_dim = problem.dim().saturating_sub(problem.num_constraints());
    if count == 0 || count > tangent_dim {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs of a {tangent_dim}-dimensional tangent space"
        )));
    }
    let dense = match options.method {
        EigenMethod::Dense => true,
        EigenMethod::Lobpcg => false,
        EigenMethod::Auto => tangent_dim <= DENSE_LIMIT || 3 * count + 3 >= tangent_dim,
    };
    if dense {
        dense_spectrum(&geom, count)
    } else {
        lobpcg(&geom, count, options, None)
    }
}

/// All eigenvalues of `Ĥ(u)` on `T_u M`, ascending.
pub fn full_tangent_spectrum<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64]) -> Result<TangentSpectrum> {
    let geom = Geometry::at(problem, u)?;
    let tangent_dim = problem.dim().saturating_sub(problem.num_constraints());
    dense_spectrum(&geom, tangent_dim)
}

fn dense_spectrum<P: SaddleProblem + ?Sized>(geom: &Geometry<'_, P>, count: usize) -> Result<TangentSpectrum> {
    let problem = geom.problem;
    let basis = tangent_basis(geom);
    let nt = basis.len();
    if nt == 0 {
        return Err(Error::EigensolverFailure("tangent space is trivial".into()));
    }
    let count = count.min(nt);
    let images: Vec<Vec<f64>> = basis.iter().map(|q| geom.projected_hessian(q)).collect();
    let mut m = DMatrix::from_fn(nt, nt, |a, b| problem.inner(&basis[a], &images[b]));
    m = (&m + m.transpose()) * 0.5;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigensolverFailure("non-finite projected Hessian entries".into()));
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..nt).collect();
    order.sort_by(|a, b| eig.eigenvalues[*a].total_cmp(&eig.eigenvalues[*b]));
    let mut eigenvalues = Vec::with_capacity(count);
    let mut eigenvectors = Vec::with_capacity(count);
    let mut residual_norms = Vec::with_capacity(count);
    for &idx in order.iter().take(count) {
        let lambda = eig.eigenvalues[idx];
        let mut x = vec![0.0; problem.dim()];
        let mut hx = vec![0.0; problem.dim()];
        for a in 0..nt {
            let c = eig.eigenvectors[(a, idx)];
            axpy(c, &basis[a], &mut x);
            axpy(c, &images[a], &mut hx);
        }
        axpy(-lambda, &x, &mut hx);
        residual_norms.push(problem.norm(&hx));
        eigenvalues.push(lambda);
        eigenvectors.push(x);
    }
    Ok(TangentSpectrum { eigenvalues, eigenvectors, residual_norms, tangent_dim: nt })
}

/// Rayleigh-Ritz on `span(basis)`. Directions with Gram eigenvalue below
/// `1e-12` of the largest are discarded. Returns Ritz values (ascending) and
/// coefficient vectors with respect to `basis`.
fn rayleigh_ritz<P: SaddleProblem + ?Sized>(
    problem: &P,
    basis: &[Vec<f64>],
    images: &[Vec<f64>],
) -> (Vec<f64>, DMatrix<f64>) {
    let s = basis.len();
    let gram = DMatrix::from_fn(s, s, |a, b| problem.inner(&basis[a], &basis[b]));
    let gram = (&gram + gram.transpose()) * 0.5;
    let ge = SymmetricEigen::new(gram);
    let top = ge.eigenvalues.max();
    let keep: Vec<usize> = (0..s).filter(|&i| ge.eigenvalues[i] > 1e-12 * top).collect();
    let z = DMatrix::from_fn(s, keep.len(), |a, c| {
        ge.eigenvectors[(a, keep[c])] / ge.eigenvalues[keep[c]].sqrt()
    });
    let a = DMatrix::from_fn(s, s, |i, j| problem.inner(&basis[i], &images[j]));
    let a = (&a + a.transpose()) * 0.5;
    let reduced = z.transpose() * a * &z;
    let re = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by(|x, y| re.eigenvalues[*x].total_cmp(&re.eigenvalues[*y]));
    let values = order.iter().map(|&i| re.eigenvalues[i]).collect();
    let ordered = DMatrix::from_fn(keep.len(), keep.len(), |r, c| re.eigenvectors[(r, order[c])]);
    (values, z * ordered)
}

fn combine(vectors: &[Vec<f64>], coeffs: &DMatrix<f64>, col: usize, rows: std::ops::Range<usize>, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (r, v) in rows.zip(vectors) {
        let c = coeffs[(r, col)];
        if c != 0.0 {
            axpy(c, v, &mut out);
        }
    }
    out
}

/// Locally optimal block preconditioned conjugate gradient on the tangent
/// space, with the problem's preconditioner followed by projection.
pub fn lobpcg<P: SaddleProblem + ?Sized>(
    geom: &Geometry<'_, P>,
    count: usize,
    options: &EigenOptions,
    initial: Option<&[Vec<f64>]>,
) -> Result<TangentSpectrum> {
    let problem = geom.problem;
    let n = problem.dim();
    let tangent_dim = n.saturating_sub(geom.gram.num_constraints());
    let block = (count + 3).min(tangent_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut x: Vec<Vec<f64>> = Vec::with_capacity(block);
    if let Some(init) = initial {
        x.extend(init.iter().take(block).map(|v| geom.project(v)));
    }
    while x.len() < block {
        let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        x.push(geom.project(&r));
    }
    let mut hx: Vec<Vec<f64>> = x.iter().map(|v| geom.projected_hessian(v)).collect();
    let (vals, c) = rayleigh_ritz(problem, &x, &hx);
    if vals.len() < block {
        return Err(Error::EigensolverFailure("initial block is rank deficient".into()));
    }
    let mut theta = vals[..block].to_vec();
    let nx = x.len();
    let (mut xn, mut hxn) = (Vec::with_capacity(block), Vec::with_capacity(block));
    for col in 0..block {
        xn.push(combine(&x, &c, col, 0..nx, n));
        hxn.push(combine(&hx, &c, col, 0..nx, n));
    }
    x = xn;
    hx = hxn;
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut hp: Vec<Vec<f64>> = Vec::new();
    let mut residual_norms = vec![f64::INFINITY; block];

    for _ in 0..options.max_iter {
        let mut residuals = Vec::with_capacity(block);
        for i in 0..block {
            let mut r = hx[i].clone();
            axpy(-theta[i], &x[i], &mut r);
            residual_norms[i] = problem.norm(&r);
            residuals.push(r);
        }
        let converged = (0..count).all(|i| residual_norms[i] <= options.tol * theta[i].abs().max(1.0));
        if converged {
            let mut order: Vec<usize> = (0..count).collect();
            order.sort_by(|a, b| theta[*a].total_cmp(&theta[*b]));
            return Ok(TangentSpectrum {
                eigenvalues: order.iter().map(|&i| theta[i]).collect(),
                eigenvectors: order.iter().map(|&i| x[i].clone()).collect(),
                residual_norms: order.iter().map(|&i| residual_norms[i]).collect(),
                tangent_dim,
            });
        }
        let w: Vec<Vec<f64>> = residuals
            .iter()
            .enumerate()
            .filter(|(i, _)| residual_norms[*i] > 0.1 * options.tol * theta[*i].abs().max(1.0))
            .map(|(_, r)| {
                let mut t = geom.project(&problem.precondition(geom.u, r));
                let nrm = problem.norm(&t);
                if nrm > 0.0 {
                    scale(1.0 / nrm, &mut t);
                }
                t
            })
            .collect();
        let hw: Vec<Vec<f64>> = w.iter().map(|v| geom.projected_hessian(v)).collect();

        let mut basis = x.clone();
        basis.extend(w.iter().cloned());
        basis.extend(p.iter().cloned());
        let mut images = hx.clone();
        images.extend(hw.iter().cloned());
        images.extend(hp.iter().cloned());
        let (vals, c) = rayleigh_ritz(problem, &basis, &images);
        if vals.len() < block {
            return Err(Error::EigensolverFailure("search space collapsed".into()));
        }
        let nx_ = x.len();
        let total = basis.len();
        let mut xn = Vec::with_capacity(block);
        let mut hxn = Vec::with_capacity(block);
        let mut pn = Vec::with_capacity(block);
        let mut hpn = Vec::with_capacity(block);
        for col in 0..block {
            xn.push(combine(&basis, &c, col, 0..total, n));
            hxn.push(combine(&images, &c, col, 0..total, n));
            let mut d = combine(&basis[nx_..], &c, col, nx_..total, n);
            let mut hd = combine(&images[nx_..], &c, col, nx_..total, n);
            let nrm = problem.norm(&d);
            if nrm > 0.0 {
                scale(1.0 / nrm, &mut d);
                scale(1.0 / nrm, &mut hd);
                pn.push(d);
                hpn.push(hd);
            }
        }
        x = xn;
        hx = hxn;
        p = pn;
        hp = hpn;
        theta = vals[..block].to_vec();
    }
    Err(Error::EigensolverFailure(format!(
        "LOBPCG did not converge in {} iterations (max residual {:.3e})",
        options.max_iter,
        residual_norms[..count].iter().cloned().fold(0.0, f64::max)
    )))
}

/// Orients each vector to have nonnegative pairing with its reference, or,
/// without references, a nonnegative first significant component.
pub fn fix_signs<P: SaddleProblem + ?Sized>(problem: &P, vectors: &mut [Vec<f64>], references: Option<&[Vec<f64>]>) {
    for (i, v) in vectors.iter_mut().enumerate() {
        let flip = match references.and_then(|r| r.get(i)) {
            Some(r) => problem.inner(v, r) < 0.0,
            None => {
                let peak = v.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
                v.iter().find(|x| x.abs() > 1e-8 * peak).is_some_and(|x| *x < 0.0)
            }
        };
        if flip {
            scale(-1.0, v);
        }
    }
}

//! Geometry of the constraint manifold `M = {u : G_l(u) = 0}`.
//!
//! Everything here is matrix-free: problems expose actions of gradients and
//! Hessians on vectors, and vectors are plain `&[f64]` coordinate slices whose
//! pairing is defined by [`SaddleProblem::inner`]. Gradients are Riesz
//! representers with respect to that pairing.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Constraint values within this bound count as "on the manifold".
pub const MANIFOLD_TOLERANCE: f64 = 1e-10;

/// Gram matrices with a larger condition number are treated as singular.
pub const GRAM_CONDITION_LIMIT: f64 = 1e12;

/// An energy with `m` equality constraints on a real Hilbert space.
pub trait SaddleProblem {
    /// Dimension of the ambient coordinate space.
    fn dim(&self) -> usize;

    fn num_constraints(&self) -> usize;

    fn inner(&self, a: &[f64], b: &[f64]) -> f64;

    fn energy(&self, u: &[f64]) -> f64;

    fn energy_gradient(&self, u: &[f64]) -> Vec<f64>;

    fn energy_hessian_action(&self, u: &[f64], v: &[f64]) -> Vec<f64>;

    fn constraint(&self, l: usize, u: &[f64]) -> f64;

    fn constraint_gradient(&self, l: usize, u: &[f64]) -> Vec<f64>;

    fn constraint_hessian_action(&self, l: usize, u: &[f64], v: &[f64]) -> Vec<f64>;

    /// Preconditioner for iterative eigensolves of the projected Hessian.
    /// Should approximate the inverse of a positive shift of `E''(u)`.
    fn precondition(&self, _u: &[f64], r: &[f64]) -> Vec<f64> {
        r.to_vec()
    }

    fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }
}

/// Gram matrix of the constraint gradients and its inverse.
#[derive(Debug, Clone)]
pub struct GramData {
    pub gradients: Vec<Vec<f64>>,
    pub gram: DMatrix<f64>,
    pub gram_inverse: DMatrix<f64>,
}

impl GramData {
    pub fn num_constraints(&self) -> usize {
        self.gradients.len()
    }

    /// `sum_ij g_ij <G_j', w> G_i'` coefficients, i.e. `g (<G_j', w>)_j`.
    fn normal_coefficients<P: SaddleProblem + ?Sized>(&self, problem: &P, w: &[f64]) -> Vec<f64> {
        let m = self.num_constraints();
        let pairings: Vec<f64> = self.gradients.iter().map(|g| problem.inner(g, w)).collect();
        (0..m)
            .map(|i| (0..m).map(|j| self.gram_inverse[(i, j)] * pairings[j]).sum())
            .collect()
    }

    /// Orthogonal projection onto the tangent space.
    pub fn project<P: SaddleProblem + ?Sized>(&self, problem: &P, w: &[f64]) -> Vec<f64> {
        let coeffs = self.normal_coefficients(problem, w);
        let mut out = w.to_vec();
        for (c, g) in coeffs.iter().zip(&self.gradients) {
            axpy(-c, g, &mut out);
        }
        out
    }
}

/// Residuals `G_l(u)` for every constraint.
pub fn constraint_values<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64]) -> Vec<f64> {
    (0..problem.num_constraints()).map(|l| problem.constraint(l, u)).collect()
}

pub fn is_on_manifold<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64]) -> bool {
    constraint_values(problem, u).iter().all(|g| g.abs() <= MANIFOLD_TOLERANCE)
}

pub fn gram_data<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64]) -> Result<GramData> {
    let m = problem.num_constraints();
    if m == 0 {
        return Err(Error::InvalidArgument("problem has no constraints".into()));
    }
    if !is_on_manifold(problem, u) {
        log::warn!(
            "state is off the constraint manifold (max |G| = {:.3e})",
            constraint_values(problem, u).iter().fold(0.0_f64, |a, g| a.max(g.abs()))
        );
    }
    let gradients: Vec<Vec<f64>> = (0..m).map(|l| problem.constraint_gradient(l, u)).collect();
    let gram = DMatrix::from_fn(m, m, |i, j| problem.inner(&gradients[i], &gradients[j]));
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= GRAM_CONDITION_LIMIT) {
        return Err(Error::SingularGram { condition });
    }
    let gram_inverse = gram
        .clone()
        .try_inverse()
        .ok_or(Error::SingularGram { condition })?;
    Ok(GramData { gradients, gram, gram_inverse })
}

/// `P_u w = w - sum_ij g_ij <G_j'(u), w> G_i'(u)`.
pub fn project_tangent<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    Ok(gram_data(problem, u)?.project(problem, w))
}

/// Lagrange multipliers `mu_i(u) = sum_j g_ij <G_j'(u), E'(u)>`.
pub fn lagrange_mu<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64]) -> Result<Vec<f64>> {
    let gd = gram_data(problem, u)?;
    Ok(gd.normal_coefficients(problem, &problem.energy_gradient(u)))
}

/// Projected gradient `F(u) = E'(u) - sum_i mu_i G_i'(u)`.
pub fn projected_gradient<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64]) -> Result<Vec<f64>> {
    Ok(Geometry::at(problem, u)?.gradient)
}

/// `H(u) v = E''(u) v - sum_i mu_i(u) G_i''(u) v`.
pub fn effective_hessian_action<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    Ok(Geometry::at(problem, u)?.effective_hessian(v))
}

/// `Ĥ(u) v = P_u H(u) P_u v`.
pub fn projected_hessian_action<P: SaddleProblem + ?Sized>(problem: &P, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    Ok(Geometry::at(problem, u)?.projected_hessian(v))
}

/// `F'(u) v = Ĥ(u) v - sum_ij g_ij <G_j''(u) F(u), v> G_i'(u)` for tangent `v`.
pub fn projected_gradient_jacobian_action<P: SaddleProblem + ?Sized>(
    problem: &P,
    u: &[f64],
    v: &[f64],
) -> Result<Vec<f64>> {
    Ok(Geometry::at(problem, u)?.gradient_jacobian(v))
}

/// Everything that depends only on the base point `u`, computed once so that
/// repeated operator applications do not redo the Gram factorization.
pub struct Geometry<'a, P: SaddleProblem + ?Sized> {
    pub problem: &'a P,
    pub u: &'a [f64],
    pub gram: GramData,
    pub mu: Vec<f64>,
    pub gradient: Vec<f64>,
}

impl<'a, P: SaddleProblem + ?Sized> Geometry<'a, P> {
    pub fn at(problem: &'a P, u: &'a [f64]) -> Result<Self> {
        let gram = gram_data(problem, u)?;
        let eg = problem.energy_gradient(u);
        let mu = gram.normal_coefficients(problem, &eg);
        let mut gradient = eg;
        for (c, g) in mu.iter().zip(&gram.gradients) {
            axpy(-c, g, &mut gradient);
        }
        Ok(Self { problem, u, gram, mu, gradient })
    }

    pub fn project(&self, w: &[f64]) -> Vec<f64> {
        self.gram.project(self.problem, w)
    }

    pub fn effective_hessian(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.problem.energy_hessian_action(self.u, v);
        for (l, mu) in self.mu.iter().enumerate() {
            let gv = self.problem.constraint_hessian_action(l, self.u, v);
            axpy(-mu, &gv, &mut out);
        }
        out
    }

    pub fn projected_hessian(&self, v: &[f64]) -> Vec<f64> {
        let pv = self.project(v);
        self.project(&self.effective_hessian(&pv))
    }

    pub fn gradient_jacobian(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.projected_hessian(v);
        let m = self.gram.num_constraints();
        let pairings: Vec<f64> = (0..m)
            .map(|j| {
                let gf = self.problem.constraint_hessian_action(j, self.u, &self.gradient);
                self.problem.inner(&gf, v)
            })
            .collect();
        for i in 0..m {
            let c: f64 = (0..m).map(|j| self.gram.gram_inverse[(i, j)] * pairings[j]).sum();
            axpy(-c, &self.gram.gradients[i], &mut out);
        }
        out
    }
}

/// `y += a x`.
pub(crate) fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn scale(a: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= a);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::QuadraticSphere;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    /// `G_1 = |u|^2 - 1`, `G_2 = u_x` in R^3.
    struct SphereAndPlane;

    impl SaddleProblem for SphereAndPlane {
        fn dim(&self) -> usize {
            3
        }
        fn num_constraints(&self) -> usize {
            2
        }
        fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
            a.iter().zip(b).map(|(x, y)| x * y).sum()
        }
        fn energy(&self, _u: &[f64]) -> f64 {
            0.0
        }
        fn energy_gradient(&self, _u: &[f64]) -> Vec<f64> {
            vec![0.0; 3]
        }
        fn energy_hessian_action(&self, _u: &[f64], _v: &[f64]) -> Vec<f64> {
            vec![0.0; 3]
        }
        fn constraint(&self, l: usize, u: &[f64]) -> f64 {
            match l {
                0 => self.inner(u, u) - 1.0,
                _ => u[0],
            }
        }
        fn constraint_gradient(&self, l: usize, u: &[f64]) -> Vec<f64> {
            match l {
                0 => u.iter().map(|x| 2.0 * x).collect(),
                _ => vec![1.0, 0.0, 0.0],
            }
        }
        fn constraint_hessian_action(&self, l: usize, _u: &[f64], v: &[f64]) -> Vec<f64> {
            match l {
                0 => v.iter().map(|x| 2.0 * x).collect(),
                _ => vec![0.0; 3],
            }
        }
    }

    #[test]
    fn gram_examples() {
        let toy = QuadraticSphere::new(vec![1.0, 2.0]);
        let gd = gram_data(&toy, &[1.0, 0.0]).unwrap();
        assert_relative_eq!(gd.gram[(0, 0)], 4.0);
        assert_relative_eq!(gd.gram_inverse[(0, 0)], 0.25);

        let gd = gram_data(&SphereAndPlane, &[0.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(gd.gram, DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0]));
        let id = &gd.gram * &gd.gram_inverse;
        assert!((id - DMatrix::identity(2, 2)).abs().max() < 1e-10);

        assert!(matches!(gram_data(&toy, &[0.0, 0.0]), Err(Error::SingularGram { .. })));
    }

    #[test]
    fn projection_examples() {
        let toy = QuadraticSphere::new(vec![1.0, 2.0]);
        let u = [1.0, 0.0];
        let p = project_tangent(&toy, &u, &u).unwrap();
        assert!(p.iter().all(|x| x.abs() < 1e-15));
        let p = project_tangent(&toy, &u, &[0.0, 3.0]).unwrap();
        assert_eq!(p, vec![0.0, 3.0]);
        let p = project_tangent(&toy, &u, &[1.0, 1.0]).unwrap();
        assert_eq!(p, vec![0.0, 1.0]);
    }

    #[test]
    fn multiplier_and_gradient_examples() {
        let toy = QuadraticSphere::new(vec![1.0, 2.0]);
        assert_relative_eq!(lagrange_mu(&toy, &[1.0, 0.0]).unwrap()[0], 0.5);
        let u = [FRAC_1_SQRT_2, FRAC_1_SQRT_2];
        assert_relative_eq!(lagrange_mu(&toy, &u).unwrap()[0], 0.75, epsilon = 1e-15);
        let f = projected_gradient(&toy, &[1.0, 0.0]).unwrap();
        assert!(f.iter().all(|x| x.abs() < 1e-15));
        let f = projected_gradient(&toy, &u).unwrap();
        assert_relative_eq!(f[0], -0.353_553_390_593_273_8, epsilon = 1e-12);
        assert_relative_eq!(f[1], 0.353_553_390_593_273_8, epsilon = 1e-12);
    }

    #[test]
    fn hessian_examples() {
        let toy = QuadraticSphere::new(vec![1.0, 2.0]);
        let e1 = [1.0, 0.0];
        let h = effective_hessian_action(&toy, &e1, &[0.0, 1.0]).unwrap();
        assert_relative_eq!(h[1], 1.0, epsilon = 1e-15);
        let zero = effective_hessian_action(&toy, &e1, &[0.0, 0.0]).unwrap();
        assert!(zero.iter().all(|x| *x == 0.0));
        let hh = projected_hessian_action(&toy, &e1, &[0.0, 1.0]).unwrap();
        assert_relative_eq!(hh[1], 1.0, epsilon = 1e-15);
        let normal = projected_hessian_action(&toy, &e1, &e1).unwrap();
        assert!(normal.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn jacobian_reduces_on_sphere() {
        // G'' = 2I and g = 1/4 give F'(u)v = Ĥ(u)v - <F(u), v> u.
        let toy = QuadraticSphere::new(vec![1.0, 2.0, 5.0]);
        let s = 1.0 / 3f64.sqrt();
        let u = [s, s, s];
        let v = project_tangent(&toy, &u, &[0.3, -0.1, 0.7]).unwrap();
        let f = projected_gradient(&toy, &u).unwrap();
        let mut expect = projected_hessian_action(&toy, &u, &v).unwrap();
        let fv = toy.inner(&f, &v);
        axpy(-fv, &u, &mut expect);
        let got = projected_gradient_jacobian_action(&toy, &u, &v).unwrap();
        for (a, b) in got.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-14);
        }
        let zero = projected_gradient_jacobian_action(&toy, &u, &[0.0; 3]).unwrap();
        assert!(zero.iter().all(|x| x.abs() < 1e-15));
    }
}

//! Quadratic energy on the unit sphere of `R^n`: `E(u) = u^T D u / 2`,
//! `G(u) = |u|^2 - 1`, with `D` diagonal.

use crate::manifold::SaddleProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSphere {
    diag: Vec<f64>,
}

impl QuadraticSphere {
    pub fn new(diag: Vec<f64>) -> Self {
        assert!(!diag.is_empty(), "empty diagonal");
        Self { diag }
    }

    /// `D = diag(1, 2, ..., n)`.
    pub fn ladder(n: usize) -> Self {
        Self::new((1..=n).map(|i| i as f64).collect())
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Canonical basis vector `e_i` (zero-based).
    pub fn basis(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.diag.len()];
        e[i] = 1.0;
        e
    }
}

impl SaddleProblem for QuadraticSphere {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    fn energy(&self, u: &[f64]) -> f64 {
        0.5 * self.diag.iter().zip(u).map(|(d, x)| d * x * x).sum::<f64>()
    }

    fn energy_gradient(&self, u: &[f64]) -> Vec<f64> {
        self.diag.iter().zip(u).map(|(d, x)| d * x).collect()
    }

    fn energy_hessian_action(&self, _u: &[f64], v: &[f64]) -> Vec<f64> {
        self.energy_gradient(v)
    }

    fn constraint(&self, _l: usize, u: &[f64]) -> f64 {
        self.inner(u, u) - 1.0
    }

    fn constraint_gradient(&self, _l: usize, u: &[f64]) -> Vec<f64> {
        u.iter().map(|x| 2.0 * x).collect()
    }

    fn constraint_hessian_action(&self, _l: usize, _u: &[f64], v: &[f64]) -> Vec<f64> {
        v.iter().map(|x| 2.0 * x).collect()
    }
}

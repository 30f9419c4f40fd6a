//! Sine-pseudospectral discretization on 1D/2D boxes with homogeneous
//! Dirichlet boundaries.
//!
//! Fields live on the interior nodes `x_j = a + j h`, `j = 1..N`, with
//! `h = (b - a) / (N + 1)`; boundary values are identically zero. The
//! transform pair is the type-I discrete sine transform, normalized so that
//! the spectral coefficients are coordinates in the grid-orthonormal basis
//!
//! ```text
//! e_k(x_j) = sqrt(2 / L) sin(k pi (x_j - a) / L),   k = 1..N,
//! ```
//!
//! which makes `<f, g>_grid = h^d sum f g = sum c_f c_g` (Parseval).

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// One axis of a tensor-product grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    /// Number of interior nodes.
    pub n: usize,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("axis needs at least 2 interior nodes, got {n}")));
        }
        if !(upper > lower) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid axis bounds [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper, n })
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn spacing(&self) -> f64 {
        self.length() / (self.n + 1) as f64
    }

    /// Coordinate of interior node `j` (zero based, so node `j + 1` of the
    /// full grid).
    pub fn point(&self, j: usize) -> f64 {
        self.lower + (j + 1) as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Eigenvalue of `-d^2/dx^2` for sine mode `k` (one based).
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let w = k as f64 * std::f64::consts::PI / self.length();
        w * w
    }
}

/// Tensor-product interior grid of a box in one or two dimensions.
///
/// Holds pre-planned FFTs; those are immutable and shared, so a `Grid` is
/// `Send + Sync` and can back fields on many threads at once.
pub struct Grid {
    axes: Vec<Axis>,
    plans: Vec<Arc<dyn Fft<f64>>>,
    /// `-Δ` symbol for every spectral index, row-major like the values.
    neg_laplacian: Vec<f64>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("axes", &self.axes).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.axes == other.axes
    }
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Arc<Self>> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidArgument(format!(
                "grid dimension must be 1 or 2, got {}",
                axes.len()
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = axes
            .iter()
            .map(|ax| planner.plan_fft_forward(2 * (ax.n + 1)))
            .collect();
        let neg_laplacian = match axes.as_slice() {
            [x] => (1..=x.n).map(|k| x.laplacian_eigenvalue(k)).collect(),
            [x, y] => {
                let mut out = Vec::with_capacity(x.n * y.n);
                for kx in 1..=x.n {
                    let lx = x.laplacian_eigenvalue(kx);
                    out.extend((1..=y.n).map(|ky| lx + y.laplacian_eigenvalue(ky)));
                }
                out
            }
            _ => unreachable!(),
        };
        Ok(Arc::new(Self { axes, plans, neg_laplacian }))
    }

    /// `[lower, upper]` with `n` interior nodes.
    pub fn new_1d(lower: f64, upper: f64, n: usize) -> Result<Arc<Self>> {
        Self::new(vec![Axis::new(lower, upper, n)?])
    }

    /// Square `[lower, upper]^2` with `n` interior nodes per axis.
    pub fn new_2d(lower: f64, upper: f64, n: usize) -> Result<Arc<Self>> {
        let ax = Axis::new(lower, upper, n)?;
        Self::new(vec![ax, ax])
    }

    /// Interior count for a target mesh size, `N = L / h - 1` rounded.
    pub fn nodes_for_spacing(lower: f64, upper: f64, h: f64) -> usize {
        (((upper - lower) / h).round() as usize).saturating_sub(1)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight `h_1 ... h_d`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    pub fn neg_laplacian_symbol(&self) -> &[f64] {
        &self.neg_laplacian
    }

    /// Coordinates of flat node index `idx`.
    pub fn coordinates(&self, idx: usize) -> Vec<f64> {
        match self.axes.as_slice() {
            [x] => vec![x.point(idx)],
            [x, y] => vec![x.point(idx / y.n), y.point(idx % y.n)],
            _ => unreachable!(),
        }
    }

    /// Sample `f` at every interior node.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.coordinates(i))).collect()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::SizeMismatch { expected: self.len(), found: len });
        }
        Ok(())
    }

    /// Grid values to coefficients in the orthonormal sine basis.
    pub fn forward(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        let mut out = values.to_vec();
        self.dst_in_place(&mut out);
        let scale: f64 = self
            .axes
            .iter()
            .map(|a| a.spacing() * (2.0 / a.length()).sqrt())
            .product();
        out.iter_mut().for_each(|c| *c *= scale);
        Ok(out)
    }

    /// Coefficients back to grid values.
    pub fn inverse(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coeffs.len())?;
        let mut out = coeffs.to_vec();
        self.dst_in_place(&mut out);
        let scale: f64 = self.axes.iter().map(|a| (2.0 / a.length()).sqrt()).product();
        out.iter_mut().for_each(|c| *c *= scale);
        Ok(out)
    }

    /// Apply a diagonal spectral multiplier: `inverse(m * forward(values))`.
    pub fn apply_symbol(&self, values: &[f64], multiplier: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let mut c = self.forward(values)?;
        c.iter_mut()
            .zip(&self.neg_laplacian)
            .for_each(|(c, &lam)| *c *= multiplier(lam));
        self.inverse(&c)
    }

    /// Spectral Laplacian `Δ f` (negative definite).
    pub fn laplacian(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.apply_symbol(values, |lam| -lam)
    }

    /// Solve `(I - (tau/2) Δ) u = f` exactly in the sine basis.
    pub fn solve_helmholtz(&self, rhs: &[f64], tau: f64) -> Result<Vec<f64>> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidArgument(format!("helmholtz step must be nonnegative, got {tau}")));
        }
        let half = 0.5 * tau;
        self.apply_symbol(rhs, |lam| 1.0 / (1.0 + half * lam))
    }

    /// Uniform-weight quadrature `h^d sum a b`.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.cell_volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Quadrature of the pointwise product of up to four sampled factors.
    pub fn integrate_product(&self, factors: &[&[f64]]) -> Result<f64> {
        if factors.is_empty() || factors.len() > 4 {
            return Err(Error::InvalidArgument(format!(
                "integrate_product takes 1 to 4 factors, got {}",
                factors.len()
            )));
        }
        for f in factors {
            self.check_len(f.len())?;
        }
        let sum: f64 = (0..self.len())
            .map(|i| factors.iter().map(|f| f[i]).product::<f64>())
            .sum();
        Ok(self.cell_volume() * sum)
    }

    /// Unnormalized DST-I along every axis:
    /// `s_k = sum_j f_j sin(pi j k / (N + 1))`.
    fn dst_in_place(&self, data: &mut [f64]) {
        match self.axes.as_slice() {
            [x] => dst_rows(&*self.plans[0], x.n, data, 1),
            [x, y] => {
                // Rows (contiguous, fast axis) then columns (stride = y.n).
                dst_rows(&*self.plans[1], y.n, data, x.n);
                dst_columns(&*self.plans[0], x.n, y.n, data);
            }
            _ => unreachable!(),
        }
    }
}

/// DST-I of `count` contiguous rows of length `n` via one batched complex FFT
/// of the odd extension of each row.
fn dst_rows(plan: &dyn Fft<f64>, n: usize, data: &mut [f64], count: usize) {
    let m = 2 * (n + 1);
    let mut buf = vec![Complex::new(0.0, 0.0); m * count];
    for r in 0..count {
        let row = &data[r * n..(r + 1) * n];
        let ext = &mut buf[r * m..(r + 1) * m];
        for (j, &v) in row.iter().enumerate() {
            ext[j + 1].re = v;
            ext[m - 1 - j].re = -v;
        }
    }
    plan.process(&mut buf);
    for r in 0..count {
        let ext = &buf[r * m..(r + 1) * m];
        let row = &mut data[r * n..(r + 1) * n];
        for (k, out) in row.iter_mut().enumerate() {
            *out = -0.5 * ext[k + 1].im;
        }
    }
}

fn dst_columns(plan: &dyn Fft<f64>, nrows: usize, ncols: usize, data: &mut [f64]) {
    let mut t = vec![0.0; nrows * ncols];
    for i in 0..nrows {
        for j in 0..ncols {
            t[j * nrows + i] = data[i * ncols + j];
        }
    }
    dst_rows(plan, nrows, &mut t, ncols);
    for i in 0..nrows {
        for j in 0..ncols {
            data[i * ncols + j] = t[j * nrows + i];
        }
    }
}

/// A real field sampled on the interior nodes of a [`Grid`], row-major.
#[derive(Debug, Clone)]
pub struct GridField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field has non-finite entries".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = grid.sample(f);
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &GridField) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn to_spectral(&self) -> Vec<f64> {
        self.grid.forward(&self.values).expect("field length matches its grid")
    }

    pub fn from_spectral(grid: Arc<Grid>, coeffs: &[f64]) -> Result<Self> {
        let values = grid.inverse(coeffs)?;
        Ok(Self { grid, values })
    }

    pub fn laplacian(&self) -> GridField {
        let values = self.grid.laplacian(&self.values).expect("field length matches its grid");
        Self { grid: self.grid.clone(), values }
    }

    pub fn solve_helmholtz(&self, tau: f64) -> Result<GridField> {
        let values = self.grid.solve_helmholtz(&self.values, tau)?;
        Ok(Self { grid: self.grid.clone(), values })
    }

    pub fn inner_product(&self, other: &GridField) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self.grid.dot(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        self.grid.dot(&self.values, &self.values).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }
}

/// Quadrature of the product of up to four fields on a common grid.
pub fn integral_of(fields: &[&GridField]) -> Result<f64> {
    let first = fields
        .first()
        .ok_or_else(|| Error::InvalidArgument("integral_of needs at least one field".into()))?;
    for f in &fields[1..] {
        first.same_grid(f)?;
    }
    let slices: Vec<&[f64]> = fields.iter().map(|f| f.values()).collect();
    first.grid.integrate_product(&slices)
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

//! Closed-form states of the linear problem (`β = 0`) and the trapping
//! potentials.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::{Grid, GridField};

/// Multi-index `(j_1, .., j_d)` of a linear eigenmode, zero-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeIndex(pub Vec<usize>);

impl ModeIndex {
    pub fn new(j: impl Into<Vec<usize>>) -> Self {
        Self(j.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in &self.0 {
            write!(f, "{j}")?;
        }
        Ok(())
    }
}

impl FromStr for ModeIndex {
    type Err = Error;

    /// Accepts `"3"`, `"1,0"` or the compact `"10"` (one digit per axis).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Format(format!("invalid mode index {s:?}")))
        };
        if s.contains(',') {
            return s.split(',').map(parse).collect::<Result<Vec<_>>>().map(Self);
        }
        if s.is_empty() || !s.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::Format(format!("invalid mode index {s:?}")));
        }
        Ok(Self(s.chars().map(|c| c as usize - '0' as usize).collect()))
    }
}

fn check_dim(j: &ModeIndex, grid: &Grid) -> Result<()> {
    if j.dim() != grid.dim() {
        return Err(Error::SizeMismatch { expected: grid.dim(), found: j.dim() });
    }
    Ok(())
}

fn normalized(mut field: GridField) -> GridField {
    let n = field.norm();
    field.values_mut().iter_mut().for_each(|v| *v /= n);
    field
}

/// Box eigenmode `Π sqrt(2/L) sin((j+1)πx/L)` on `[0, L]^d`, renormalized on the
/// grid, with `μ = π²/(2L²) Σ (j+1)²`.
pub fn box_mode(j: &ModeIndex, length: f64, grid: &Arc<Grid>) -> Result<(GridField, f64)> {
    check_dim(j, grid)?;
    let spans = grid
        .axes()
        .iter()
        .all(|a| a.lower.abs() <= 1e-12 * length && (a.upper - length).abs() <= 1e-12 * length);
    if !spans {
        return Err(Error::GridMismatch);
    }
    let factor = (2.0 / length).sqrt();
    let field = GridField::from_fn(grid.clone(), |x| {
        x.iter()
            .zip(&j.0)
            .map(|(xa, ja)| factor * ((*ja as f64 + 1.0) * PI * xa / length).sin())
            .product()
    });
    let mu = PI * PI / (2.0 * length * length) * j.0.iter().map(|ja| (*ja as f64 + 1.0).powi(2)).sum::<f64>();
    Ok((normalized(field), mu))
}

/// Normalized Hermite function `ĥ_j(x)` by the three-term recurrence.
pub fn hermite_function(j: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for n in 0..j {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Harmonic-oscillator eigenmode `Π ĥ_{j_α}(x_α)`, renormalized on the grid,
/// with `μ = |j| + d/2`. The truncation box must be wide enough that the
/// mode is below `1e-12` at the boundary.
pub fn hermite_mode(j: &ModeIndex, grid: &Arc<Grid>) -> Result<(GridField, f64)> {
    check_dim(j, grid)?;
    for (axis, &ja) in grid.axes().iter().zip(&j.0) {
        let magnitude = hermite_function(ja, axis.lower).abs().max(hermite_function(ja, axis.upper).abs());
        if magnitude > 1e-12 {
            return Err(Error::TruncationTooSmall { magnitude });
        }
    }
    let field = GridField::from_fn(grid.clone(), |x| x.iter().zip(&j.0).map(|(xa, ja)| hermite_function(*ja, *xa)).product());
    let mu = j.total() as f64 + grid.dim() as f64 / 2.0;
    Ok((normalized(field), mu))
}

/// Morse index of the linear harmonic state at energy level `k` in `d`
/// dimensions: the number of multi-indices with `|j| <= k - 1`, i.e.
/// `C(k - 1 + d, d)`.
pub fn linear_morse_index(d: usize, k: usize) -> usize {
    if k == 0 {
        return 0;
    }
    // C(k-1+d, d) computed incrementally; each partial product is an integer.
    let mut c = 1usize;
    for i in 1..=d {
        c = c * (k - 1 + i) / i;
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialKind {
    /// Infinite well realized by the Dirichlet boundary; `V = 0` inside.
    Box,
    /// `V = |x|² / 2`.
    Harmonic,
    /// `V = |x|² / 2 + κ Σ sin²(πx_α/4)`.
    HarmonicLattice,
}

impl PotentialKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Box => "box",
            Self::Harmonic => "ho",
            Self::HarmonicLattice => "hol",
        }
    }
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PotentialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "box" => Ok(Self::Box),
            "ho" | "harmonic" => Ok(Self::Harmonic),
            "hol" => Ok(Self::HarmonicLattice),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

pub fn potential_value(kind: PotentialKind, kappa: f64, x: &[f64]) -> f64 {
    match kind {
        PotentialKind::Box => 0.0,
        PotentialKind::Harmonic => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
        PotentialKind::HarmonicLattice => x
            .iter()
            .map(|v| 0.5 * v * v + kappa * (PI * v / 4.0).sin().powi(2))
            .sum(),
    }
}

pub fn potential_field(kind: PotentialKind, kappa: f64, grid: &Arc<Grid>) -> GridField {
    GridField::from_fn(grid.clone(), |x| potential_value(kind, kappa, x))
}

/// One energy level of the linear 2D box problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearLevel {
    /// Degenerate modes on this level, in lexicographic order of `(j_2, j_1)`
    /// reversed so that `(1,0)` precedes `(0,1)`.
    pub modes: Vec<ModeIndex>,
    /// `μ · 2L²/π² = (j_1+1)² + (j_2+1)²`.
    pub scaled_mu: usize,
    /// Zero-based position of the level in ascending order.
    pub level: usize,
    /// Number of modes (with multiplicity) strictly below this level.
    pub index: usize,
}

/// The lowest `levels` energy levels of the linear 2D box problem.
pub fn linear_box_levels_2d(levels: usize) -> Vec<LinearLevel> {
    // Any level among the lowest `levels` has scaled value below this bound.
    let bound = 2 * (levels + 1) * (levels + 1);
    let side = ((bound as f64).sqrt() as usize) + 1;
    let mut modes: Vec<(usize, ModeIndex)> = Vec::new();
    for j1 in 0..side {
        for j2 in 0..side {
            let s = (j1 + 1).pow(2) + (j2 + 1).pow(2);
            if s <= bound {
                modes.push((s, ModeIndex(vec![j1, j2])));
            }
        }
    }
    modes.sort_by(|a, b| a.0.cmp(&b.0).then(b.1 .0.cmp(&a.1 .0)));
    let mut out: Vec<LinearLevel> = Vec::new();
    let mut below = 0;
    for (s, j) in modes {
        match out.last_mut() {
            Some(last) if last.scaled_mu == s => last.modes.push(j),
            _ => {
                if out.len() == levels {
                    break;
                }
                if let Some(last) = out.last() {
                    below += last.modes.len();
                }
                out.push(LinearLevel { modes: vec![j], scaled_mu: s, level: out.len(), index: below });
            }
        }
    }
    out
}

/// The seven lowest levels of the linear 2D box problem.
pub fn linear_box_table_2d() -> Vec<LinearLevel> {
    linear_box_levels_2d(7)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn box_mode_examples() {
        let g1 = Grid::new_1d(0.0, 1.0, 31).unwrap();
        let (phi, mu) = box_mode(&ModeIndex::new([0]), 1.0, &g1).unwrap();
        assert_relative_eq!(mu, 4.934_802_200_544_679, epsilon = 1e-12);
        assert_relative_eq!(phi.norm(), 1.0, epsilon = 1e-12);

        let g2 = Grid::new_2d(0.0, 1.0, 31).unwrap();
        let (_, mu) = box_mode(&ModeIndex::new([1, 0]), 1.0, &g2).unwrap();
        assert_relative_eq!(mu, 5.0 * PI * PI / 2.0, epsilon = 1e-12);
        let (_, mu) = box_mode(&ModeIndex::new([1, 1]), 1.0, &g2).unwrap();
        assert_relative_eq!(mu, 4.0 * PI * PI, epsilon = 1e-12);

        let shifted = Grid::new_1d(-1.0, 1.0, 31).unwrap();
        assert!(matches!(box_mode(&ModeIndex::new([0]), 1.0, &shifted), Err(Error::GridMismatch)));
    }

    #[test]
    fn hermite_examples() {
        assert_relative_eq!(hermite_function(0, 0.0), PI.powf(-0.25), epsilon = 1e-15);
        assert_relative_eq!(hermite_function(1, 1.0), 2f64.sqrt() * PI.powf(-0.25) * (-0.5f64).exp(), epsilon = 1e-15);
        let g1 = Grid::new_1d(-16.0, 16.0, 1023).unwrap();
        assert_relative_eq!(hermite_mode(&ModeIndex::new([0]), &g1).unwrap().1, 0.5);
        assert_relative_eq!(hermite_mode(&ModeIndex::new([9]), &g1).unwrap().1, 9.5);
        let g2 = Grid::new_2d(-10.0, 10.0, 31).unwrap();
        assert_relative_eq!(hermite_mode(&ModeIndex::new([1, 1]), &g2).unwrap().1, 3.0);
        let tight = Grid::new_1d(-3.0, 3.0, 63).unwrap();
        assert!(matches!(hermite_mode(&ModeIndex::new([2]), &tight), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn high_order_hermite_does_not_overflow() {
        let v = hermite_function(150, 3.0);
        assert!(v.is_finite() && v.abs() < 1.0);
    }

    #[test]
    fn morse_index_examples() {
        assert_eq!(linear_morse_index(1, 7), 7);
        assert_eq!(linear_morse_index(2, 2), 3);
        assert_eq!(linear_morse_index(3, 3), 10);
        assert_eq!(linear_morse_index(2, 0), 0);
        for k in 0..20 {
            assert_eq!(linear_morse_index(2, k), k * (k + 1) / 2);
            assert_eq!(linear_morse_index(3, k), k * (k + 1) * (k + 2) / 6);
        }
    }

    #[test]
    fn potential_examples() {
        let g = Grid::new_1d(-4.0, 4.0, 7).unwrap();
        let ho = potential_field(PotentialKind::Harmonic, 0.0, &g);
        assert_eq!(ho.values()[3], 0.0);
        assert_relative_eq!(potential_value(PotentialKind::HarmonicLattice, 25.0, &[2.0]), 27.0, epsilon = 1e-12);
        let b = potential_field(PotentialKind::Box, 3.0, &g);
        assert!(b.values().iter().all(|v| *v == 0.0));
        assert!(matches!("lattice".parse::<PotentialKind>(), Err(Error::UnsupportedKind(_))));
        assert_eq!("HO".parse::<PotentialKind>().unwrap(), PotentialKind::Harmonic);
    }

    #[test]
    fn table_of_linear_levels() {
        let t = linear_box_table_2d();
        let rows: Vec<(Vec<String>, usize, usize, usize)> = t
            .iter()
            .map(|l| (l.modes.iter().map(|m| m.to_string()).collect(), l.scaled_mu, l.level, l.index))
            .collect();
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        assert_eq!(
            rows,
            vec![
                (s(&["00"]), 2, 0, 0),
                (s(&["10", "01"]), 5, 1, 1),
                (s(&["11"]), 8, 2, 3),
                (s(&["20", "02"]), 10, 3, 4),
                (s(&["21", "12"]), 13, 4, 6),
                (s(&["30", "03"]), 17, 5, 8),
                (s(&["22"]), 18, 6, 10),
            ]
        );
    }

    #[test]
    fn mode_index_parsing() {
        assert_eq!("10".parse::<ModeIndex>().unwrap(), ModeIndex::new([1, 0]));
        assert_eq!("12,3".parse::<ModeIndex>().unwrap(), ModeIndex::new([12, 3]));
        assert_eq!("7".parse::<ModeIndex>().unwrap(), ModeIndex::new([7]));
        assert!("x1".parse::<ModeIndex>().is_err());
    }
}

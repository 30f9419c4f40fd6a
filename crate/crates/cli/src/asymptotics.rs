//! Weak- and strong-interaction scaling columns computed from a sweep's raw table.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::path::Path;

use cgad::PotentialKind;

#[derive(Debug, thiserror::Error)]
pub enum AsymptoticsError {
    #[error("need at least 3 distinct beta values among converged runs, found {0}")]
    InsufficientData(usize),
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputRow {
    pub case: String,
    pub potential: PotentialKind,
    pub dim: usize,
    pub lower: f64,
    pub upper: f64,
    pub beta: f64,
    pub k: usize,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticRow {
    pub input: InputRow,
    /// Energy of the same state without interaction, when known in closed form.
    pub linear: Option<f64>,
    /// `(E - E_linear) / β`.
    pub weak_slope: Option<f64>,
    /// `E` divided by its large-`β` scale.
    pub strong_ratio: Option<f64>,
}

/// Reads converged rows of a `raw.csv` table.
pub fn read_raw(path: &Path) -> Result<Vec<InputRow>, AsymptoticsError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| AsymptoticsError::Format(format!("missing column {name}")))
    };
    let idx = [
        col("case")?,
        col("potential")?,
        col("dim")?,
        col("lower")?,
        col("upper")?,
        col("beta")?,
        col("k")?,
        col("E")?,
        col("converged")?,
    ];
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.get(idx[8]) != Some("true") {
            continue;
        }
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        let bad = |what: &str| AsymptoticsError::Format(format!("row {}: bad {what}", line + 2));
        rows.push(InputRow {
            case: field(0).to_string(),
            potential: field(1).parse().map_err(|_| bad("potential"))?,
            dim: field(2).parse().map_err(|_| bad("dim"))?,
            lower: field(3).parse().map_err(|_| bad("lower"))?,
            upper: field(4).parse().map_err(|_| bad("upper"))?,
            beta: field(5).parse().map_err(|_| bad("beta"))?,
            k: field(6).parse().map_err(|_| bad("k"))?,
            energy: field(7).parse().map_err(|_| bad("E"))?,
        });
    }
    Ok(rows)
}

fn linear_energy(r: &InputRow) -> Option<f64> {
    match (r.potential, r.dim) {
        (PotentialKind::Box, 1) => {
            let l = r.upper - r.lower;
            Some(((r.k + 1) as f64 * PI).powi(2) / (2.0 * l * l))
        }
        (PotentialKind::Harmonic, 1) => Some(r.k as f64 + 0.5),
        _ => None,
    }
}

fn strong_scale(r: &InputRow) -> Option<f64> {
    if r.beta <= 0.0 {
        return None;
    }
    match (r.potential, r.dim) {
        (PotentialKind::Box, d) => Some(r.beta / (2.0 * (r.upper - r.lower).powi(d as i32))),
        (PotentialKind::Harmonic, 1) => Some(0.4 * r.beta.powf(2.0 / 3.0)),
        _ => None,
    }
}

pub fn emit_asymptotics(rows: &[InputRow]) -> Result<Vec<AsymptoticRow>, AsymptoticsError> {
    let betas: BTreeSet<u64> = rows.iter().map(|r| r.beta.to_bits()).collect();
    if betas.len() < 3 {
        return Err(AsymptoticsError::InsufficientData(betas.len()));
    }
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.case.cmp(&b.case).then(a.k.cmp(&b.k)).then(a.beta.total_cmp(&b.beta)));
    Ok(sorted
        .into_iter()
        .map(|r| {
            let linear = linear_energy(&r);
            let weak_slope = linear.filter(|_| r.beta != 0.0).map(|l| (r.energy - l) / r.beta);
            let strong_ratio = strong_scale(&r).map(|s| r.energy / s);
            AsymptoticRow { input: r, linear, weak_slope, strong_ratio }
        })
        .collect())
}

pub fn write_asymptotics(path: &Path, rows: &[AsymptoticRow]) -> Result<(), AsymptoticsError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["case", "potential", "dim", "k", "beta", "E", "E_linear", "E_minus_linear", "weak_slope", "strong_ratio"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let i = &r.input;
        w.write_record([
            i.case.clone(),
            i.potential.name().to_string(),
            i.dim.to_string(),
            i.k.to_string(),
            i.beta.to_string(),
            i.energy.to_string(),
            opt(r.linear),
            opt(r.linear.map(|l| i.energy - l)),
            opt(r.weak_slope),
            opt(r.strong_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(potential: PotentialKind, beta: f64, k: usize, energy: f64) -> InputRow {
        let (lower, upper) = if potential == PotentialKind::Box { (0.0, 1.0) } else { (-16.0, 16.0) };
        InputRow { case: "c".into(), potential, dim: 1, lower, upper, beta, k, energy }
    }

    #[test]
    fn box_strong_ratio_from_table_value() {
        let rows = [
            row(PotentialKind::Box, 0.0, 0, PI * PI / 2.0),
            row(PotentialKind::Box, 100.0, 0, 65.5472),
            row(PotentialKind::Box, 102400.0, 0, 51628.7),
        ];
        let out = emit_asymptotics(&rows).unwrap();
        let strong = out[2].strong_ratio.unwrap();
        assert!((strong - 1.0084).abs() < 1e-4);
        assert!(out[0].weak_slope.is_none());
    }

    #[test]
    fn harmonic_weak_slope() {
        let c0 = 1.0 / (2.0 * (2.0 * PI).sqrt());
        let rows: Vec<InputRow> =
            [0.001, 0.01, 0.1].iter().map(|&b| row(PotentialKind::Harmonic, b, 0, 0.5 + c0 * b)).collect();
        for r in emit_asymptotics(&rows).unwrap() {
            assert!((r.weak_slope.unwrap() - c0).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_betas() {
        let rows = [row(PotentialKind::Box, 0.0, 0, 1.0), row(PotentialKind::Box, 1.0, 0, 2.0)];
        assert!(matches!(emit_asymptotics(&rows), Err(AsymptoticsError::InsufficientData(2))));
    }
}

//! Result tables.

use std::path::Path;

use crate::config::RunConfig;
use crate::run::RunOutcome;

pub const RESULT_COLUMNS: [&str; 9] =
    ["case", "beta", "k", "E", "mu", "residual_inf", "steps", "converged", "certified_index"];

pub const RAW_COLUMNS: [&str; 17] = [
    "case",
    "potential",
    "kappa",
    "dim",
    "lower",
    "upper",
    "grid_n",
    "beta",
    "k",
    "E",
    "mu",
    "residual_inf",
    "increment_inf",
    "steps",
    "converged",
    "certified_index",
    "error",
];

/// Six significant digits, switching to exponent form outside `[1e-3, 1e6)`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let e = x.abs().log10().floor() as i32;
    if !(-3..6).contains(&e) {
        return format!("{x:.5e}");
    }
    let s = format!("{:.*}", (5 - e) as usize, x);
    // Rounding can carry into a new digit, e.g. 999999.5 -> 1000000.
    if s.trim_start_matches('-').split('.').next().map_or(0, str::len) > 6 {
        return format!("{x:.5e}");
    }
    s
}

fn opt(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_results(path: &Path, outcomes: &[RunOutcome]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULT_COLUMNS)?;
    for o in outcomes {
        let s = &o.spec;
        let row = match &o.record {
            Ok(r) => [
                s.case.clone(),
                s.beta.to_string(),
                s.k.to_string(),
                sig6(r.energy),
                sig6(r.chemical_potential),
                sig6(r.residual_inf),
                r.steps.to_string(),
                r.converged.to_string(),
                opt(o.certified_index),
            ],
            Err(_) => [
                s.case.clone(),
                s.beta.to_string(),
                s.k.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                "false".into(),
                String::new(),
            ],
        };
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_raw(path: &Path, cfg: &RunConfig, outcomes: &[RunOutcome]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RAW_COLUMNS)?;
    for o in outcomes {
        let s = &o.spec;
        let mut row = vec![
            s.case.clone(),
            cfg.potential.name().to_string(),
            cfg.kappa.to_string(),
            cfg.dim.to_string(),
            cfg.domain.0.to_string(),
            cfg.domain.1.to_string(),
            cfg.grid_n.to_string(),
            s.beta.to_string(),
            s.k.to_string(),
        ];
        match &o.record {
            Ok(r) => row.extend([
                r.energy.to_string(),
                r.chemical_potential.to_string(),
                r.residual_inf.to_string(),
                r.increment_inf.to_string(),
                r.steps.to_string(),
                r.converged.to_string(),
            ]),
            Err(_) => row.extend(["", "", "", "", "", "false"].map(String::from)),
        }
        row.push(opt(o.certified_index));
        row.push(o.error().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

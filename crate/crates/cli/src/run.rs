//! Sweep orchestration: one solve per `(β, k)` pair on a worker pool.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use cgad::analytic::{box_mode, hermite_mode};
use cgad::bec::{
    certify_morse_index, ground_state_ngf, initial_state, perturbed_state, solve_excited_state, GpeProblem,
    SolverSettings,
};
use cgad::fieldio::{load_field, save_field};
use cgad::{Axis, Grid, GridField, ModeIndex, PotentialKind, SolveRecord, SpectrumReport};
use rayon::prelude::*;

use crate::config::{mode_text, InitSpec, RunConfig};
use crate::output::{write_raw, write_results};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub case: String,
    pub beta: f64,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub spec: RunSpec,
    pub record: Result<SolveRecord, String>,
    pub certified_index: Option<usize>,
    pub certification: Option<Result<SpectrumReport, String>>,
}

impl RunOutcome {
    pub fn succeeded(&self) -> bool {
        matches!(&self.record, Ok(r) if r.converged)
    }

    pub fn error(&self) -> Option<String> {
        match (&self.record, &self.certification) {
            (Err(e), _) => Some(e.clone()),
            (Ok(r), _) if !r.converged => Some(format!("not converged after {} steps", r.steps)),
            (_, Some(Err(e))) => Some(format!("certification: {e}")),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub outcomes: Vec<RunOutcome>,
}

impl SweepReport {
    pub fn failures(&self) -> usize {
        self.outcomes.iter().filter(|o| !o.succeeded()).count()
    }
}

/// The `count` lowest linear modes, ordered by level; within a level
/// `(1,0)` precedes `(0,1)`.
pub fn default_modes(kind: PotentialKind, dim: usize, count: usize) -> Vec<ModeIndex> {
    if dim == 1 {
        return (0..count).map(|j| ModeIndex::new([j])).collect();
    }
    let level = |a: usize, b: usize| match kind {
        PotentialKind::Box => (a + 1).pow(2) + (b + 1).pow(2),
        _ => a + b,
    };
    let mut modes: Vec<(usize, [usize; 2])> =
        (0..=count).flat_map(|a| (0..=count).map(move |b| (level(a, b), [a, b]))).collect();
    modes.sort_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1)));
    modes.into_iter().take(count).map(|(_, m)| ModeIndex::new(m)).collect()
}

pub fn build_grid(cfg: &RunConfig) -> anyhow::Result<Arc<Grid>> {
    let axis = Axis::new(cfg.domain.0, cfg.domain.1, cfg.grid_n)?;
    Ok(Grid::new(vec![axis; cfg.dim])?)
}

pub fn mode_field(cfg: &RunConfig, grid: &Arc<Grid>, mode: &ModeIndex) -> cgad::Result<GridField> {
    Ok(match cfg.potential {
        PotentialKind::Box => box_mode(mode, cfg.domain.1, grid)?.0,
        _ => hermite_mode(mode, grid)?.0,
    })
}

fn label(cfg: &RunConfig, k: usize) -> String {
    let state = match &cfg.init {
        InitSpec::Modes if k == 0 => "g".to_string(),
        InitSpec::Modes => mode_text(&default_modes(cfg.potential, cfg.dim, k + 1)[k]),
        other => other.label(),
    };
    format!("{}{}d-{state}", cfg.potential.name(), cfg.dim)
}

pub fn plan(cfg: &RunConfig) -> Vec<RunSpec> {
    cfg.betas
        .iter()
        .flat_map(|&beta| cfg.indices.iter().map(move |&k| (beta, k)))
        .map(|(beta, k)| RunSpec { case: label(cfg, k), beta, k })
        .collect()
}

/// `φ^0` and `v_1^0..v_k^0` for index `k`.
pub fn initial_fields(cfg: &RunConfig, grid: &Arc<Grid>, k: usize) -> cgad::Result<(GridField, Vec<GridField>)> {
    let lower = default_modes(cfg.potential, cfg.dim, k + 1);
    let directions = |modes: &[ModeIndex]| modes.iter().map(|m| mode_field(cfg, grid, m)).collect::<cgad::Result<Vec<_>>>();
    match &cfg.init {
        InitSpec::Modes => Ok((mode_field(cfg, grid, &lower[k])?, directions(&lower[..k])?)),
        InitSpec::Expression { phi, directions: explicit } => {
            let mut field = GridField::zeros(grid.clone());
            for term in phi {
                let m = mode_field(cfg, grid, &term.mode)?;
                field.values_mut().iter_mut().zip(m.values()).for_each(|(a, b)| *a += term.sign * b);
            }
            let v = match explicit {
                Some(d) => directions(d)?,
                None => directions(&lower[..k])?,
            };
            Ok((field, v))
        }
        InitSpec::File(path) => {
            let field = load_field(path)?;
            if field.grid().as_ref() != grid.as_ref() {
                return Err(cgad::Error::GridMismatch);
            }
            Ok((field, directions(&lower[..k])?))
        }
    }
}

pub fn settings(cfg: &RunConfig) -> SolverSettings {
    SolverSettings::new(cfg.tau, cfg.tol, cfg.max_steps).with_symmetry(cfg.preserve_symmetry)
}

pub fn run_one(cfg: &RunConfig, grid: &Arc<Grid>, spec: &RunSpec) -> RunOutcome {
    let solve = || -> cgad::Result<(SolveRecord, GpeProblem)> {
        let problem = GpeProblem::with_potential(cfg.potential, cfg.kappa, grid, spec.beta)?;
        let (phi, v) = initial_fields(cfg, grid, spec.k)?;
        let init = match cfg.perturb {
            Some((magnitude, seed)) => perturbed_state(&phi, &v, magnitude, seed)?,
            None => initial_state(&phi, &v)?,
        };
        let record = if spec.k == 0 {
            let phi = GridField::new(grid.clone(), init.u)?;
            ground_state_ngf(&problem, &phi, &settings(cfg))?
        } else {
            solve_excited_state(&problem, &init, &settings(cfg))?
        };
        Ok((record, problem))
    };
    log::info!("{} beta={} k={}: start", spec.case, spec.beta, spec.k);
    match solve() {
        Ok((record, problem)) => {
            let certification = (cfg.certify && record.converged)
                .then(|| certify_morse_index(&problem, &record.phi, spec.k).map_err(|e| e.to_string()));
            let certified_index = match &certification {
                Some(Ok(r)) => Some(r.morse_index),
                _ => None,
            };
            log::info!(
                "{} beta={} k={}: E={} steps={} converged={}",
                spec.case,
                spec.beta,
                spec.k,
                record.energy,
                record.steps,
                record.converged
            );
            RunOutcome { spec: spec.clone(), record: Ok(record), certified_index, certification }
        }
        Err(e) => {
            log::warn!("{} beta={} k={}: {e}", spec.case, spec.beta, spec.k);
            RunOutcome { spec: spec.clone(), record: Err(e.to_string()), certified_index: None, certification: None }
        }
    }
}

pub fn field_file_name(spec: &RunSpec) -> String {
    format!("{}_beta{}_k{}.cgadfld", spec.case, spec.beta, spec.k)
}

/// Runs every planned solve, then writes `results.csv`, `raw.csv`,
/// `config.echo` and, when requested, `fields/`.
pub fn run_sweep(cfg: &RunConfig) -> anyhow::Result<SweepReport> {
    let grid = build_grid(cfg)?;
    let specs = plan(cfg);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs).build()?;
    let outcomes: Vec<RunOutcome> = pool.install(|| specs.par_iter().map(|s| run_one(cfg, &grid, s)).collect());
    let report = SweepReport { outcomes };
    write_outputs(cfg, &report)?;
    Ok(report)
}

pub fn write_outputs(cfg: &RunConfig, report: &SweepReport) -> anyhow::Result<()> {
    let out = &cfg.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("config.echo"), cfg.echo())?;
    write_results(&out.join("results.csv"), &report.outcomes)?;
    write_raw(&out.join("raw.csv"), cfg, &report.outcomes)?;
    if cfg.dump_fields {
        let dir = out.join("fields");
        fs::create_dir_all(&dir)?;
        for o in &report.outcomes {
            if let Ok(r) = &o.record {
                save_field(&dir.join(field_file_name(&o.spec)), &r.phi)?;
            }
        }
    }
    Ok(())
}

/// Loads a field and certifies its Morse index for the configured problem
/// (first `β` in the list).
pub fn certify_file(cfg: &RunConfig, path: &Path, k: usize) -> anyhow::Result<SpectrumReport> {
    let phi = load_field(path).with_context(|| format!("reading {}", path.display()))?;
    let problem = GpeProblem::with_potential(cfg.potential, cfg.kappa, phi.grid(), cfg.betas[0])?;
    Ok(certify_morse_index(&problem, &phi, k)?)
}

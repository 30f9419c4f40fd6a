//! The quadratic energy on the unit sphere: integrate CGAD from a random
//! start, classify the limit, and measure the idealized decay rate.

use std::path::Path;

use cgad::dynamics::{
    cgad_rhs, classify_steady_state, integrate_explicit, integrate_idealized, log_slope, CgadState,
};
use cgad::manifold::{project_tangent, SaddleProblem};
use cgad::{QuadraticSphere, StabilityReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ToySettings {
    pub n: usize,
    pub indices: Vec<usize>,
    pub tau: f64,
    pub tol: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for ToySettings {
    fn default() -> Self {
        Self { n: 3, indices: vec![1], tau: 0.01, tol: 1e-10, max_steps: 200_000, seed: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct ToyResult {
    pub k: usize,
    pub steps: usize,
    pub converged: bool,
    pub state: CgadState,
    /// Zero-based coordinate where `|u|` peaks.
    pub peak: usize,
    pub report: Option<StabilityReport>,
    pub catalogue_mismatch: Option<f64>,
    pub decay_slope: f64,
    pub decay_rate: f64,
}

impl ToyResult {
    pub fn decay_within(&self, fraction: f64) -> bool {
        self.decay_slope <= -(1.0 - fraction) * self.decay_rate
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.into_iter().map(|v| v / norm).collect()
}

fn initial(toy: &QuadraticSphere, k: usize, seed: u64) -> anyhow::Result<CgadState> {
    let n = toy.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_unit(&mut rng, n);
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(k);
    while v.len() < k {
        let mut w = project_tangent(toy, &u, &random_unit(&mut rng, n))?;
        for prev in &v {
            let c = toy.inner(&w, prev);
            w.iter_mut().zip(prev).for_each(|(a, b)| *a -= c * b);
        }
        let norm = toy.norm(&w);
        if norm > 1e-3 {
            v.push(w.into_iter().map(|x| x / norm).collect());
        }
    }
    Ok(CgadState::with_default_gamma(toy, u, v)?)
}

pub fn run_toy(settings: &ToySettings) -> anyhow::Result<Vec<ToyResult>> {
    let toy = QuadraticSphere::ladder(settings.n);
    let mut out = Vec::new();
    for &k in &settings.indices {
        if k >= settings.n {
            anyhow::bail!("index {k} needs at least {} dimensions", k + 1);
        }
        let start = initial(&toy, k, settings.seed)?;
        let mut state = start.clone();
        let mut steps = 0;
        let mut converged = false;
        while steps < settings.max_steps {
            let chunk = 100.min(settings.max_steps - steps);
            state = integrate_explicit(&toy, &state, settings.tau, chunk, true)?.pop().expect("non-empty");
            steps += chunk;
            if cgad_rhs(&toy, &state)?.norm(&toy) < settings.tol {
                converged = true;
                break;
            }
        }
        let peak = (0..settings.n).max_by(|&a, &b| state.u[a].abs().total_cmp(&state.u[b].abs())).unwrap_or(0);
        let report = if converged { Some(classify_steady_state(&toy, &state)?) } else { None };
        let catalogue_mismatch = report.as_ref().map(|r| {
            let mut measured: Vec<f64> = r.jacobian_eigenvalues.iter().map(|z| z.re).collect();
            measured.sort_by(f64::total_cmp);
            measured
                .iter()
                .zip(&r.predicted_eigenvalues)
                .map(|(m, p)| (m - p).abs() / p.abs().max(1.0))
                .fold(0.0, f64::max)
        });
        let traj = integrate_idealized(&toy, &start.u, k, settings.tau, 3000.min(settings.max_steps), 1e-12)?;
        let decay_rate = traj.gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        let decay_slope = log_slope(&traj.times, &traj.f_norms);
        out.push(ToyResult { k, steps, converged, state, peak, report, catalogue_mismatch, decay_slope, decay_rate });
    }
    Ok(out)
}

pub fn write_toy(dir: &Path, results: &[ToyResult]) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("toy.csv"))?;
    w.write_record([
        "k",
        "steps",
        "converged",
        "limit",
        "linearly_stable",
        "max_real_part",
        "catalogue_mismatch",
        "decay_slope",
        "decay_rate",
    ])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in results {
        w.write_record([
            r.k.to_string(),
            r.steps.to_string(),
            r.converged.to_string(),
            format!("e_{}", r.peak + 1),
            r.report.as_ref().map(|s| s.is_linearly_stable.to_string()).unwrap_or_default(),
            opt(r.report.as_ref().map(|s| s.max_real_part)),
            opt(r.catalogue_mismatch),
            r.decay_slope.to_string(),
            r.decay_rate.to_string(),
        ])?;
    }
    w.flush()?;
    let mut s = csv::Writer::from_path(dir.join("toy_spectrum.csv"))?;
    s.write_record(["k", "predicted", "measured_re", "measured_im"])?;
    for r in results {
        if let Some(rep) = &r.report {
            let mut measured = rep.jacobian_eigenvalues.clone();
            measured.sort_by(|a, b| a.re.total_cmp(&b.re));
            for (p, m) in rep.predicted_eigenvalues.iter().zip(&measured) {
                s.write_record([r.k.to_string(), p.to_string(), m.re.to_string(), m.im.to_string()])?;
            }
        }
    }
    s.flush()?;
    Ok(())
}

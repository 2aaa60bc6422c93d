//! End-to-end runs: config points, Monte-Carlo shot loops, sweeps and
//! crossover-rate calibration.

mod config;
mod sweep;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{build_memory_circuit, CircuitError, MemoryExperiment};
use crate::decoder::{extract_dem, RestrictionDecoder};
use crate::framesim::{Sampler, SimError};
use crate::lattice::{build_lattice, Color, LatticeError};
use crate::noise::{NoiseError, NoiseParams};
use crate::partition::{monolithic, partition_lattice, CheckType, PartitionError};
use crate::schedule::{estimate_crossover_rate, plan_rounds, CrossoverRate, Policy, ScheduleError};

pub use config::{ExperimentConfig, OutputFormat, Shots};
pub use sweep::{read_results, run_sweep, write_plot_files, PointKey, ResultSink, SweepReport};

/// Shots per batch under automatic budgeting.
pub const AUTO_BATCH: u64 = 10_000;
pub const DEFAULT_MAX_SHOTS: u64 = 10_000_000;
pub const DEFAULT_TARGET_FAILURES: u64 = 100;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("wilson interval needs at least one shot")]
    EmptySample,
    #[error("failures ({failures}) exceed shots ({shots})")]
    TooManyFailures { failures: u64, shots: u64 },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{point}: {source}")]
    Point {
        point: String,
        #[source]
        source: Box<ExperimentError>,
    },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
}

/// One fully specified simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub d: usize,
    pub policy: Policy,
    /// Physical error rate and every other noise knob; `noise.egr` is the
    /// point's rate.
    pub noise: NoiseParams,
    pub rounds: usize,
    pub shots: Shots,
    pub max_shots: u64,
    pub target_failures: u64,
    pub seed: u64,
}

impl Point {
    pub fn new(d: usize, policy: Policy, noise: NoiseParams, seed: u64) -> Self {
        Point {
            d,
            policy,
            noise,
            rounds: d,
            shots: Shots::Auto,
            max_shots: DEFAULT_MAX_SHOTS,
            target_failures: DEFAULT_TARGET_FAILURES,
            seed,
        }
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = Shots::Fixed(shots);
        self
    }

    /// Noise actually applied: `p = 0` turns off idle noise as well.
    pub fn effective_noise(&self) -> NoiseParams {
        if self.noise.p == 0.0 {
            NoiseParams { egr: self.noise.egr, ..NoiseParams::noiseless() }
        } else {
            self.noise
        }
    }

    pub fn label(&self) -> String {
        format!("d={} policy={} p={} egr={} seed={}", self.d, self.policy, self.noise.p, self.noise.egr, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub d: usize,
    pub policy: String,
    pub tau_effective: usize,
    pub p: f64,
    pub egr_hz: f64,
    pub shots: u64,
    pub failures: u64,
    pub ler: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub wall_s: f64,
}

impl SimResult {
    /// Equality ignoring wall-clock time.
    pub fn same_outcome(&self, other: &SimResult) -> bool {
        SimResult { wall_s: 0.0, ..self.clone() } == SimResult { wall_s: 0.0, ..other.clone() }
    }
}

/// Wilson score interval; `z = 1.96` gives 95%.
pub fn wilson_ci(failures: u64, shots: u64, z: f64) -> Result<(f64, f64), ExperimentError> {
    if shots == 0 {
        return Err(ExperimentError::EmptySample);
    }
    if failures > shots {
        return Err(ExperimentError::TooManyFailures { failures, shots });
    }
    let (k, n) = (failures as f64, shots as f64);
    let z2 = z * z;
    let c = k + z2 / 2.0;
    let h = z * (k * (n - k) / n + z2 / 4.0).sqrt();
    // low = (c - h) / (n + z^2) rewritten without the cancellation
    let low = if failures == 0 { 0.0 } else { k * k / (n * (c + h)) };
    let high = if failures == shots { 1.0 } else { (c + h) / (n + z2) };
    Ok((low, high))
}

/// Face colour of every Z-check detector, `None` for X-check detectors.
pub fn z_detector_colors(e: &MemoryExperiment) -> Vec<Option<Color>> {
    e.detectors
        .iter()
        .map(|i| (i.check.kind == CheckType::Z).then_some(i.color))
        .collect()
}

/// Lattice, partition, plan and circuit for a point.
pub fn build_point_circuit(point: &Point) -> Result<MemoryExperiment, ExperimentError> {
    let lattice = build_lattice(point.d)?;
    let partition = if point.policy.is_monolithic() {
        monolithic(&lattice)
    } else {
        partition_lattice(&lattice, point.seed)?
    };
    let noise = point.effective_noise();
    noise.validate()?;
    let plan = plan_rounds(&point.policy, point.d, point.rounds, noise.egr)?;
    Ok(build_memory_circuit(&lattice, &partition, &plan, &noise, point.rounds)?)
}

pub fn run_point(point: &Point) -> Result<SimResult, ExperimentError> {
    run_point_inner(point).map_err(|e| ExperimentError::Point { point: point.label(), source: Box::new(e) })
}

fn run_point_inner(point: &Point) -> Result<SimResult, ExperimentError> {
    let start = Instant::now();
    let tau = point.policy.effective_tau(point.d, point.noise.egr)?;
    let experiment = build_point_circuit(point)?;
    let sampler = Sampler::new(&experiment.circuit)?;
    let dem = extract_dem(&experiment.circuit);
    let decoder = RestrictionDecoder::new(&dem, &z_detector_colors(&experiment));

    let (budget, target) = match point.shots {
        Shots::Fixed(n) => (n, u64::MAX),
        Shots::Auto => (point.max_shots, point.target_failures),
    };
    let mut shots = 0u64;
    let mut failures = 0u64;
    while shots < budget && failures < target {
        let count = AUTO_BATCH.min(budget - shots);
        let batch = sampler.sample_range(shots as usize, count as usize, point.seed);
        failures += (0..batch.shots)
            .into_par_iter()
            .map_init(
                || decoder.workspace(),
                |ws, s| {
                    let r = decoder.decode_row(ws, batch.row(s));
                    (r.predicted_flip != batch.observable_flips[s]) as u64
                },
            )
            .sum::<u64>();
        shots += count;
    }
    let (ler, ci_low, ci_high) = if shots == 0 {
        (0.0, 0.0, 1.0)
    } else {
        let (lo, hi) = wilson_ci(failures, shots, 1.96)?;
        (failures as f64 / shots as f64, lo, hi)
    };
    Ok(SimResult {
        d: point.d,
        policy: point.policy.to_string(),
        tau_effective: tau,
        p: point.noise.p,
        egr_hz: point.noise.egr,
        shots,
        failures,
        ler,
        ci_low,
        ci_high,
        seed: point.seed,
        wall_s: start.elapsed().as_secs_f64(),
    })
}

/// Crossover rate for distance `d`: SS-2 against SS-((d-1)/2) over the
/// ascending `sweep`, each compared at the template point's noise and budget.
pub fn calibrate_crossover(template: &Point, sweep: &[f64]) -> Result<f64, ExperimentError> {
    let mut sorted = sweep.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let rate = estimate_crossover_rate(template.d, &sorted, |d, egr, tau| {
        let point = Point {
            d,
            policy: Policy::SkipSeam { tau },
            noise: NoiseParams { egr, ..template.noise },
            ..template.clone()
        };
        run_point(&point).map(|r| r.ler).map_err(|e| e.to_string())
    })?;
    Ok(rate)
}

/// Replace `ast:auto` by a calibrated adaptive policy.
pub fn resolve_policy(policy: Policy, template: &Point, sweep: &[f64]) -> Result<Policy, ExperimentError> {
    match policy {
        Policy::Adaptive { r_c: CrossoverRate::Auto } => {
            let r_c = calibrate_crossover(template, sweep)?;
            Ok(Policy::Adaptive { r_c: CrossoverRate::Fixed(r_c) })
        }
        other => Ok(other),
    }
}

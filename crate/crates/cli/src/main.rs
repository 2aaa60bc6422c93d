use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use seamsim_core::circuit::serialize;
use seamsim_core::experiment::{
    build_point_circuit, calibrate_crossover, resolve_policy, run_sweep, write_plot_files, ExperimentConfig,
    OutputFormat, Point, ResultSink, Shots,
};
use seamsim_core::framesim::Sampler;

#[derive(Parser)]
#[command(name = "seamsim", version, about = "Seam scheduling simulator for a distributed color code")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep (or emit circuits, dump detectors, calibrate R_c).
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    d: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    p: Vec<f64>,
    #[arg(long = "egr-hz", value_delimiter = ',')]
    egr_hz: Vec<f64>,
    /// ma, mono, ss:<tau>, ast:<r_c> or ast:auto.
    #[arg(long, value_delimiter = ',')]
    policy: Vec<String>,
    /// Shot count or `auto`.
    #[arg(long)]
    shots: Option<Shots>,
    #[arg(long)]
    max_shots: Option<u64>,
    #[arg(long)]
    target_failures: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    t1: Option<f64>,
    #[arg(long)]
    t2: Option<f64>,
    #[arg(long)]
    tro: Option<f64>,
    #[arg(long)]
    links: Option<u32>,
    #[arg(long = "fiber-length-m")]
    fiber_length_m: Option<f64>,
    /// Fiber loss in dB/km.
    #[arg(long = "fiber-loss")]
    fiber_loss: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Keep existing rows in --out and skip their points.
    #[arg(long)]
    resume: bool,
    /// Directory for `<d>_<policy>.dat` files (default: next to --out).
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    /// Print the compiled circuit of every point instead of simulating.
    #[arg(long)]
    emit_circuit: bool,
    /// Sample a single point and write its detector rows in b8 format.
    #[arg(long, value_name = "PATH")]
    dump_dets: Option<PathBuf>,
    /// Estimate the crossover rate for every (d, p) over the egr list.
    #[arg(long)]
    calibrate_rc: bool,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if !self.d.is_empty() {
            c.distances = self.d.clone();
        }
        if !self.p.is_empty() {
            c.p_values = self.p.clone();
        }
        if !self.egr_hz.is_empty() {
            c.egr_values = self.egr_hz.clone();
        }
        if !self.policy.is_empty() {
            c.policies = self.policy.clone();
        }
        c.shots = self.shots.unwrap_or(c.shots);
        c.max_shots = self.max_shots.unwrap_or(c.max_shots);
        c.target_failures = self.target_failures.unwrap_or(c.target_failures);
        c.seed = self.seed.unwrap_or(c.seed);
        c.rounds = self.rounds.or(c.rounds);
        c.t1 = self.t1.or(c.t1);
        c.t2 = self.t2.or(c.t2);
        c.t_ro = self.tro.or(c.t_ro);
        c.links = self.links.or(c.links);
        c.fiber_length_m = self.fiber_length_m.or(c.fiber_length_m);
        c.fiber_loss_db_per_km = self.fiber_loss.or(c.fiber_loss_db_per_km);
        if self.out.is_some() {
            c.output = self.out.clone();
        }
        c.format = self.format.unwrap_or(c.format);
        c.validate()?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run(args) = cli.command;
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let config = args.config()?;
    if args.emit_circuit {
        emit_circuits(&config)?;
    } else if let Some(path) = &args.dump_dets {
        dump_detectors(&config, path)?;
    } else if args.calibrate_rc {
        calibrate(&config)?;
    } else {
        return sweep(&config, args);
    }
    Ok(ExitCode::SUCCESS)
}

fn resolved_points(config: &ExperimentConfig) -> Result<Vec<Point>> {
    config
        .points()?
        .into_iter()
        .map(|mut p| {
            p.policy = resolve_policy(p.policy, &p, &config.egr_values)?;
            Ok(p)
        })
        .collect()
}

fn output(config: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &config.output {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout()),
    })
}

fn emit_circuits(config: &ExperimentConfig) -> Result<()> {
    let mut out = output(config)?;
    for point in resolved_points(config)? {
        let e = build_point_circuit(&point)?;
        writeln!(out, "# {}", point.label())?;
        out.write_all(serialize(&e.circuit).as_bytes())?;
    }
    Ok(())
}

fn dump_detectors(config: &ExperimentConfig, path: &Path) -> Result<()> {
    let points = resolved_points(config)?;
    let [point] = points.as_slice() else {
        bail!("--dump-dets needs exactly one point, the config gives {}", points.len());
    };
    let Shots::Fixed(shots) = point.shots else {
        bail!("--dump-dets needs a fixed --shots count");
    };
    let e = build_point_circuit(point)?;
    let samples = Sampler::new(&e.circuit)?.sample(shots as usize, point.seed);
    fs::write(path, samples.to_b8())?;
    let obs: Vec<u8> = samples.observable_flips.iter().map(|&b| b as u8).collect();
    let obs_path = path.with_extension("obs.b8");
    fs::write(&obs_path, obs)?;
    eprintln!(
        "{} shots x {} detectors ({} bytes per row) -> {}, observable -> {}",
        samples.shots,
        samples.num_detectors,
        samples.row_bytes(),
        path.display(),
        obs_path.display()
    );
    Ok(())
}

fn calibrate(config: &ExperimentConfig) -> Result<()> {
    let mut out = output(config)?;
    writeln!(out, "d,p,r_c_hz")?;
    for &d in &config.distances {
        for &p in &config.p_values {
            let template = config.point(d, seamsim_core::schedule::Policy::MeasureAll, p, config.egr_values[0]);
            let r_c = calibrate_crossover(&template, &config.egr_values)?;
            writeln!(out, "{d},{p},{r_c}")?;
        }
    }
    Ok(())
}

fn sweep(config: &ExperimentConfig, args: &RunArgs) -> Result<ExitCode> {
    let out = config.output.as_deref();
    if let Some(path) = out {
        let echo = path.with_extension("config.toml");
        fs::write(&echo, config.to_toml_string()).with_context(|| format!("writing {}", echo.display()))?;
    }
    let (mut sink, existing) = ResultSink::open(out, config.format, args.resume)?;
    let total = config.points()?.len();
    let mut done = existing.len();
    let report = run_sweep(config, &existing, |r| {
        done += 1;
        eprintln!(
            "[{done}/{total}] d={} {} p={} egr={:e}: {}/{} ler={:.3e} ({:.1}s)",
            r.d, r.policy, r.p, r.egr_hz, r.failures, r.shots, r.ler, r.wall_s
        );
        sink.write(r)
    })?;
    drop(sink);
    for (point, message) in &report.errors {
        eprintln!("failed: {point}: {message}");
    }
    let plot_dir = args.plot_dir.clone().or_else(|| out.map(|p| p.parent().unwrap_or(Path::new(".")).to_path_buf()));
    if let Some(dir) = plot_dir {
        let mut rows = existing;
        rows.extend(report.results.iter().cloned());
        if !rows.is_empty() {
            fs::create_dir_all(&dir)?;
            write_plot_files(&dir, &rows)?;
        }
    }
    Ok(if report.errors.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

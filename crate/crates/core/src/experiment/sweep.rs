use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{resolve_policy, run_point, ExperimentConfig, ExperimentError, OutputFormat, SimResult};
use crate::schedule::Policy;

/// Identity of a finished row for `--resume`. Adaptive policies share one
/// family key, so a calibrated row also covers `ast:auto`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PointKey {
    pub d: usize,
    pub policy: String,
    pub p_bits: u64,
    pub egr_bits: u64,
    pub seed: u64,
}

impl PointKey {
    fn family(policy: &str) -> String {
        match policy.split_once(':') {
            Some(("ast", _)) => "ast".to_string(),
            _ => policy.to_string(),
        }
    }

    pub fn of_result(r: &SimResult) -> Self {
        PointKey {
            d: r.d,
            policy: Self::family(&r.policy),
            p_bits: r.p.to_bits(),
            egr_bits: r.egr_hz.to_bits(),
            seed: r.seed,
        }
    }

    fn of_point(p: &super::Point) -> Self {
        PointKey {
            d: p.d,
            policy: Self::family(&p.policy.to_string()),
            p_bits: p.noise.p.to_bits(),
            egr_bits: p.noise.egr.to_bits(),
            seed: p.seed,
        }
    }
}

#[derive(Debug, Default)]
pub struct SweepReport {
    pub results: Vec<SimResult>,
    pub skipped: usize,
    /// `(point label, message)` for points that failed.
    pub errors: Vec<(String, String)>,
}

/// Run every point of `config` not already in `completed`, handing each
/// result to `emit` as soon as it is done. Point failures are collected and
/// the sweep moves on; `emit` failures abort.
pub fn run_sweep<F>(config: &ExperimentConfig, completed: &[SimResult], mut emit: F) -> Result<SweepReport, ExperimentError>
where
    F: FnMut(&SimResult) -> Result<(), ExperimentError>,
{
    config.validate()?;
    let done: HashSet<PointKey> = completed.iter().map(PointKey::of_result).collect();
    let mut report = SweepReport::default();
    // calibrated crossover rates per (d, p)
    let mut calibrated: HashMap<(usize, u64), Result<Policy, String>> = HashMap::new();
    for mut point in config.points()? {
        if done.contains(&PointKey::of_point(&point)) {
            report.skipped += 1;
            continue;
        }
        if matches!(point.policy, Policy::Adaptive { .. }) {
            let entry = calibrated
                .entry((point.d, point.noise.p.to_bits()))
                .or_insert_with(|| resolve_policy(point.policy, &point, &config.egr_values).map_err(|e| e.to_string()));
            match entry {
                Ok(policy) => point.policy = *policy,
                Err(e) => {
                    report.errors.push((point.label(), e.clone()));
                    continue;
                }
            }
        }
        match run_point(&point) {
            Ok(r) => {
                emit(&r)?;
                report.results.push(r);
            }
            Err(e) => report.errors.push((point.label(), e.to_string())),
        }
    }
    Ok(report)
}

/// Append-only writer for sweep rows.
pub struct ResultSink {
    format: OutputFormat,
    csv: Option<csv::Writer<Box<dyn Write>>>,
    json: Option<Box<dyn Write>>,
}

impl ResultSink {
    /// Open `path` (stdout when `None`). With `resume` an existing file is
    /// kept and its rows returned; otherwise it is truncated.
    pub fn open(path: Option<&Path>, format: OutputFormat, resume: bool) -> Result<(Self, Vec<SimResult>), ExperimentError> {
        let mut existing = Vec::new();
        let out: Box<dyn Write> = match path {
            None => Box::new(std::io::stdout()),
            Some(p) => {
                if resume && p.exists() {
                    existing = read_results(p, format)?;
                }
                let file = if resume {
                    OpenOptions::new().create(true).append(true).open(p)?
                } else {
                    File::create(p)?
                };
                Box::new(BufWriter::new(file))
            }
        };
        let sink = match format {
            OutputFormat::Csv => {
                let writer = csv::WriterBuilder::new().has_headers(existing.is_empty()).from_writer(out);
                ResultSink { format, csv: Some(writer), json: None }
            }
            OutputFormat::Json => ResultSink { format, csv: None, json: Some(out) },
        };
        Ok((sink, existing))
    }

    pub fn write(&mut self, r: &SimResult) -> Result<(), ExperimentError> {
        match self.format {
            OutputFormat::Csv => {
                let w = self.csv.as_mut().expect("csv writer");
                w.serialize(r)?;
                w.flush()?;
            }
            OutputFormat::Json => {
                let w = self.json.as_mut().expect("json writer");
                serde_json::to_writer(&mut *w, r)?;
                w.write_all(b"\n")?;
                w.flush()?;
            }
        }
        Ok(())
    }
}

/// Rows of a CSV file or a JSON-lines file.
pub fn read_results(path: &Path, format: OutputFormat) -> Result<Vec<SimResult>, ExperimentError> {
    match format {
        OutputFormat::Csv => {
            let mut reader = csv::Reader::from_path(path)?;
            Ok(reader.deserialize().collect::<Result<_, _>>()?)
        }
        OutputFormat::Json => {
            let mut out = Vec::new();
            for line in BufReader::new(File::open(path)?).lines() {
                let line = line?;
                if !line.trim().is_empty() {
                    out.push(serde_json::from_str(&line)?);
                }
            }
            Ok(out)
        }
    }
}

/// One `<d>_<policy>.dat` file per curve with `egr_hz ler` lines, sorted by
/// rate. Several `p` values in one curve are separated by a blank line.
pub fn write_plot_files(dir: &Path, results: &[SimResult]) -> Result<Vec<PathBuf>, ExperimentError> {
    let mut curves: BTreeMap<(usize, String), Vec<&SimResult>> = BTreeMap::new();
    for r in results {
        curves.entry((r.d, r.policy.clone())).or_default().push(r);
    }
    let mut written = Vec::new();
    for ((d, policy), mut rows) in curves {
        rows.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.egr_hz.total_cmp(&b.egr_hz)));
        let path = dir.join(format!("{d}_{policy}.dat"));
        let mut f = BufWriter::new(File::create(&path)?);
        writeln!(f, "# egr_hz ler")?;
        let mut last_p = None;
        for r in rows {
            if last_p.is_some_and(|p: f64| p != r.p) {
                writeln!(f)?;
            }
            last_p = Some(r.p);
            writeln!(f, "{} {}", r.egr_hz, r.ler)?;
        }
        f.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Shots;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            distances: vec![3],
            policies: vec!["ma".into(), "ss:2".into()],
            p_values: vec![2e-3],
            egr_values: vec![2e6, 2e8],
            shots: Shots::Fixed(2000),
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn stream_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let config = small();
        let (mut sink, existing) = ResultSink::open(Some(&path), OutputFormat::Csv, false).unwrap();
        assert!(existing.is_empty());
        // stop after the first row to mimic a crash
        let mut config_one = config.clone();
        config_one.egr_values.truncate(1);
        config_one.policies.truncate(1);
        run_sweep(&config_one, &[], |r| sink.write(r)).unwrap();
        drop(sink);

        let (mut sink, existing) = ResultSink::open(Some(&path), OutputFormat::Csv, true).unwrap();
        assert_eq!(existing.len(), 1);
        let report = run_sweep(&config, &existing, |r| sink.write(r)).unwrap();
        drop(sink);
        assert_eq!(report.skipped, 1);
        assert_eq!(report.results.len(), 3);
        let rows = read_results(&path, OutputFormat::Csv).unwrap();
        assert_eq!(rows.len(), 4);
        let header = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            header.lines().next().unwrap(),
            "d,policy,tau_effective,p,egr_hz,shots,failures,ler,ci_low,ci_high,seed,wall_s"
        );
        assert_eq!(header.lines().count(), 5);

        let files = write_plot_files(dir.path(), &rows).unwrap();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(dir.path().join("3_ss:2.dat")).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
    }

    #[test]
    fn json_lines_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.jsonl");
        let (mut sink, _) = ResultSink::open(Some(&path), OutputFormat::Json, false).unwrap();
        let report = run_sweep(&small(), &[], |r| sink.write(r)).unwrap();
        drop(sink);
        assert_eq!(read_results(&path, OutputFormat::Json).unwrap(), report.results);
    }

    #[test]
    fn bad_points_are_recorded() {
        let mut config = small();
        config.t1 = Some(1e-6);
        config.t2 = Some(5e-6);
        let report = run_sweep(&config, &[], |_| Ok(())).unwrap();
        assert!(report.results.is_empty());
        assert_eq!(report.errors.len(), 4);
    }

    #[test]
    fn empty_grid() {
        let report = run_sweep(&ExperimentConfig::default(), &[], |_| Ok(())).unwrap();
        assert!(report.results.is_empty() && report.errors.is_empty());
    }
}

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{ExperimentError, Point, DEFAULT_MAX_SHOTS, DEFAULT_TARGET_FAILURES};
use crate::noise::NoiseParams;
use crate::schedule::Policy;

/// Shot budget: a fixed count or `auto` (stop on target failures).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shots {
    #[default]
    Auto,
    Fixed(u64),
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Auto => f.write_str("auto"),
            Shots::Fixed(n) => write!(f, "{n}"),
        }
    }
}

impl std::str::FromStr for Shots {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Shots::Auto);
        }
        s.parse::<u64>().map(Shots::Fixed).map_err(|_| format!("shots must be a count or `auto`, got `{s}`"))
    }
}

impl Serialize for Shots {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Shots::Auto => s.serialize_str("auto"),
            Shots::Fixed(n) => s.serialize_u64(*n),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Shots::Fixed(n)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    /// One JSON object per line.
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            _ => Err(format!("unknown format `{s}` (csv|json)")),
        }
    }
}

fn default_max_shots() -> u64 {
    DEFAULT_MAX_SHOTS
}

fn default_target_failures() -> u64 {
    DEFAULT_TARGET_FAILURES
}

/// Sweep description; the TOML keys are the field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub distances: Vec<usize>,
    #[serde(default)]
    pub policies: Vec<String>,
    #[serde(default)]
    pub p_values: Vec<f64>,
    #[serde(default)]
    pub egr_values: Vec<f64>,
    #[serde(default)]
    pub shots: Shots,
    #[serde(default = "default_max_shots")]
    pub max_shots: u64,
    #[serde(default = "default_target_failures")]
    pub target_failures: u64,
    #[serde(default)]
    pub seed: u64,
    /// Rounds per point; `None` means `T = d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_1q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_2q: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_ro: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub links: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_length_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_loss_db_per_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            distances: Vec::new(),
            policies: Vec::new(),
            p_values: Vec::new(),
            egr_values: Vec::new(),
            shots: Shots::Auto,
            max_shots: DEFAULT_MAX_SHOTS,
            target_failures: DEFAULT_TARGET_FAILURES,
            seed: 0,
            rounds: None,
            t1: None,
            t2: None,
            t_1q: None,
            t_2q: None,
            t_ro: None,
            links: None,
            fiber_length_m: None,
            fiber_loss_db_per_km: None,
            output: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ExperimentError> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    /// Empty sweep lists are allowed and produce no points.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if let Some(&d) = self.distances.iter().find(|&&d| d < 3 || d % 2 == 0) {
            return bad(format!("distance {d} must be odd and >= 3"));
        }
        self.parsed_policies()?;
        if let Some(p) = self.p_values.iter().find(|&&p| !(0.0..0.75).contains(&p)) {
            return bad(format!("p = {p} outside [0, 0.75)"));
        }
        if let Some(r) = self.egr_values.iter().find(|&&r| !(r > 0.0)) {
            return bad(format!("egr {r} must be positive"));
        }
        if self.shots == Shots::Fixed(0) {
            return bad("shots must be positive or `auto`".into());
        }
        if self.max_shots == 0 || self.target_failures == 0 {
            return bad("max_shots and target_failures must be positive".into());
        }
        if self.rounds == Some(0) {
            return bad("rounds must be positive".into());
        }
        Ok(())
    }

    pub fn parsed_policies(&self) -> Result<Vec<Policy>, ExperimentError> {
        self.policies
            .iter()
            .map(|s| s.parse::<Policy>().map_err(|e| ExperimentError::Config(e.to_string())))
            .collect()
    }

    /// Noise parameters at `(p, egr)` with every override applied.
    pub fn noise(&self, p: f64, egr: f64) -> NoiseParams {
        let mut n = NoiseParams { p, egr, ..NoiseParams::default() };
        let set = |field: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *field = v;
            }
        };
        set(&mut n.t1, self.t1);
        set(&mut n.t2, self.t2);
        set(&mut n.t_1q, self.t_1q);
        set(&mut n.t_2q, self.t_2q);
        set(&mut n.t_ro, self.t_ro);
        set(&mut n.fiber_length_m, self.fiber_length_m);
        set(&mut n.fiber_loss_db_per_km, self.fiber_loss_db_per_km);
        if let Some(l) = self.links {
            n.links = l;
        }
        n
    }

    pub fn point(&self, d: usize, policy: Policy, p: f64, egr: f64) -> Point {
        Point {
            d,
            policy,
            noise: self.noise(p, egr),
            rounds: self.rounds.unwrap_or(d),
            shots: self.shots,
            max_shots: self.max_shots,
            target_failures: self.target_failures,
            seed: self.seed,
        }
    }

    /// Cartesian product in (d, policy, p, egr) order, policies unresolved.
    pub fn points(&self) -> Result<Vec<Point>, ExperimentError> {
        let policies = self.parsed_policies()?;
        let mut out = Vec::new();
        for &d in &self.distances {
            for &policy in &policies {
                for &p in &self.p_values {
                    for &egr in &self.egr_values {
                        out.push(self.point(d, policy, p, egr));
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_product() {
        let c = ExperimentConfig::from_toml_str(
            r#"
            distances = [3, 5]
            policies = ["ma", "ss:2"]
            p_values = [1e-3]
            egr_values = [2e6, 5e7, 2e8]
            shots = 1000
            seed = 7
            t1 = 1e-4
            "#,
        )
        .unwrap();
        assert_eq!(c.points().unwrap().len(), 12);
        assert_eq!(c.shots, Shots::Fixed(1000));
        assert_eq!(c.noise(1e-3, 2e6).t1, 1e-4);
        assert_eq!(c.noise(1e-3, 2e6).t2, NoiseParams::default().t2);
        let back = ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn auto_and_rejects() {
        let c = ExperimentConfig::from_toml_str("shots = \"auto\"").unwrap();
        assert_eq!(c.shots, Shots::Auto);
        assert!(c.points().unwrap().is_empty());
        for bad in ["distances = [4]", "policies = [\"ss:0\"]", "egr_values = [0.0]", "shots = 0", "bogus = 1"] {
            assert!(ExperimentConfig::from_toml_str(bad).is_err(), "{bad}");
        }
    }
}

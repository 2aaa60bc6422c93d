//! Seam-measurement schedules and the crossover-rate calibrator.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("cannot parse policy {0:?}: expected ma, mono, ss:<tau>, ast:<r_c> or ast:auto")]
    BadPolicy(String),
    #[error("tau must be at least 1")]
    ZeroTau,
    #[error("adaptive policy has no crossover rate; calibrate it first")]
    Uncalibrated,
    #[error("crossover sweep needs at least two ascending positive rates")]
    BadSweep,
    #[error("ler runner failed at rate {rate:e}: {message}")]
    Runner { rate: f64, message: String },
}

/// Crossover rate of an adaptive policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CrossoverRate {
    Fixed(f64),
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    /// Measure every seam check every round.
    MeasureAll,
    /// Measure-all on a single-QPU partition (no seams at all).
    Monolithic,
    SkipSeam { tau: usize },
    Adaptive { r_c: CrossoverRate },
}

impl Policy {
    pub fn is_monolithic(&self) -> bool {
        matches!(self, Policy::Monolithic)
    }

    /// τ used for a run at distance `d` and rate `egr`.
    pub fn effective_tau(&self, d: usize, egr: f64) -> Result<usize, ScheduleError> {
        match *self {
            Policy::MeasureAll | Policy::Monolithic => Ok(1),
            Policy::SkipSeam { tau: 0 } => Err(ScheduleError::ZeroTau),
            Policy::SkipSeam { tau } => Ok(tau),
            Policy::Adaptive { r_c: CrossoverRate::Fixed(r_c) } => Ok(tau_star(d, egr, r_c)),
            Policy::Adaptive { r_c: CrossoverRate::Auto } => Err(ScheduleError::Uncalibrated),
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::MeasureAll => f.write_str("ma"),
            Policy::Monolithic => f.write_str("mono"),
            Policy::SkipSeam { tau } => write!(f, "ss:{tau}"),
            Policy::Adaptive { r_c: CrossoverRate::Fixed(r) } => write!(f, "ast:{r}"),
            Policy::Adaptive { r_c: CrossoverRate::Auto } => f.write_str("ast:auto"),
        }
    }
}

impl FromStr for Policy {
    type Err = ScheduleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ScheduleError::BadPolicy(s.to_string());
        let lower = s.trim().to_ascii_lowercase();
        match lower.split_once(':') {
            None => match lower.as_str() {
                "ma" => Ok(Policy::MeasureAll),
                "mono" => Ok(Policy::Monolithic),
                _ => Err(bad()),
            },
            Some(("ss", tau)) => {
                let tau: usize = tau.parse().map_err(|_| bad())?;
                if tau == 0 {
                    return Err(ScheduleError::ZeroTau);
                }
                Ok(Policy::SkipSeam { tau })
            }
            Some(("ast", "auto")) => Ok(Policy::Adaptive { r_c: CrossoverRate::Auto }),
            Some(("ast", r)) => {
                let r: f64 = r.parse().map_err(|_| bad())?;
                if !(r > 0.0) {
                    return Err(bad());
                }
                Ok(Policy::Adaptive { r_c: CrossoverRate::Fixed(r) })
            }
            Some(_) => Err(bad()),
        }
    }
}

/// `(d-1)/2` below the crossover rate, 2 at or above it.
pub fn tau_star(d: usize, egr: f64, r_c: f64) -> usize {
    if egr < r_c {
        (d - 1) / 2
    } else {
        2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundPlan {
    /// `measure_seam[t]` for t = 0..=T.
    pub measure_seam: Vec<bool>,
    pub effective_tau: usize,
}

impl RoundPlan {
    /// Plan for τ over rounds `0..=rounds`; τ = 0 is treated as 1.
    pub fn every(tau: usize, rounds: usize) -> Self {
        let tau = tau.max(1);
        RoundPlan {
            measure_seam: (0..=rounds).map(|t| t % tau == 0).collect(),
            effective_tau: tau,
        }
    }

    pub fn rounds(&self) -> usize {
        self.measure_seam.len().saturating_sub(1)
    }

    pub fn measured_rounds(&self) -> impl Iterator<Item = usize> + '_ {
        self.measure_seam.iter().enumerate().filter(|(_, &m)| m).map(|(t, _)| t)
    }
}

pub fn plan_rounds(policy: &Policy, d: usize, rounds: usize, egr: f64) -> Result<RoundPlan, ScheduleError> {
    Ok(RoundPlan::every(policy.effective_tau(d, egr)?, rounds))
}

/// First rate in the ascending `sweep` where τ=2 is at least as good as
/// τ=(d-1)/2, interpolated in log-log space between the bracketing points.
///
/// Returns the lowest rate when τ=2 already wins there, and `+∞` when it
/// never does. With noisy curves the first crossing wins.
pub fn estimate_crossover_rate<F>(d: usize, sweep: &[f64], mut runner: F) -> Result<f64, ScheduleError>
where
    F: FnMut(usize, f64, usize) -> Result<f64, String>,
{
    if sweep.len() < 2 || sweep.iter().any(|&r| !(r > 0.0)) || sweep.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ScheduleError::BadSweep);
    }
    let slow = ((d - 1) / 2).max(1);
    let mut prev: Option<(f64, f64)> = None;
    for &rate in sweep {
        let call = |tau, runner: &mut F| {
            runner(d, rate, tau).map_err(|message| ScheduleError::Runner { rate, message })
        };
        let fast = call(2, &mut runner)?;
        let long = call(slow, &mut runner)?;
        // log of the ratio; <= 0 means τ=2 is no worse
        let gap = log_ratio(fast, long);
        if gap <= 0.0 {
            return Ok(match prev {
                None => rate,
                Some((r0, g0)) => {
                    let frac = g0 / (g0 - gap);
                    if !frac.is_finite() {
                        rate
                    } else {
                        (r0.ln() + frac * (rate.ln() - r0.ln())).exp()
                    }
                }
            });
        }
        prev = Some((rate, gap));
    }
    Ok(f64::INFINITY)
}

fn log_ratio(a: f64, b: f64) -> f64 {
    // zero LERs are floored so the log stays finite
    let floor = 1e-300;
    a.max(floor).ln() - b.max(floor).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_star_examples() {
        assert_eq!(tau_star(11, 1e6, 5e7), 5);
        assert_eq!(tau_star(9, 1e8, 5e7), 2);
        assert_eq!(tau_star(21, 1e6, 5e7), 10);
        assert_eq!(tau_star(9, 5e7, 5e7), 2);
        assert_eq!(tau_star(3, 1.0, 2.0), 1);
    }

    #[test]
    fn plan_examples() {
        let ma = plan_rounds(&Policy::MeasureAll, 5, 5, 1e6).unwrap();
        assert!(ma.measure_seam.iter().all(|&m| m));
        assert_eq!(ma.measure_seam.len(), 6);
        let ss3 = plan_rounds(&Policy::SkipSeam { tau: 3 }, 5, 6, 1e6).unwrap();
        assert_eq!(ss3.measured_rounds().collect::<Vec<_>>(), vec![0, 3, 6]);
        let ss1 = plan_rounds(&Policy::SkipSeam { tau: 1 }, 7, 9, 1e6).unwrap();
        assert_eq!(ss1, plan_rounds(&Policy::MeasureAll, 7, 9, 1e6).unwrap());
    }

    #[test]
    fn policy_strings() {
        for s in ["ma", "mono", "ss:3", "ast:auto", "ast:50000000"] {
            assert_eq!(s.parse::<Policy>().unwrap().to_string(), s);
        }
        assert_eq!("ast:5e7".parse::<Policy>().unwrap(), Policy::Adaptive { r_c: CrossoverRate::Fixed(5e7) });
        assert!("ss:0".parse::<Policy>().is_err());
        assert!("ss".parse::<Policy>().is_err());
        assert!("foo:1".parse::<Policy>().is_err());
        assert!("ast:-3".parse::<Policy>().is_err());
        assert_eq!(
            plan_rounds(&Policy::Adaptive { r_c: CrossoverRate::Auto }, 5, 5, 1e6),
            Err(ScheduleError::Uncalibrated)
        );
    }

    #[test]
    fn crossover_edges() {
        let sweep = [1e6, 1e7, 1e8];
        let always_fast = estimate_crossover_rate(9, &sweep, |_, _, tau| Ok(if tau == 2 { 1e-3 } else { 2e-3 }));
        assert_eq!(always_fast.unwrap(), 1e6);
        let never = estimate_crossover_rate(9, &sweep, |_, _, tau| Ok(if tau == 2 { 2e-3 } else { 1e-3 }));
        assert_eq!(never.unwrap(), f64::INFINITY);
        assert_eq!(estimate_crossover_rate(9, &[1e6], |_, _, _| Ok(0.1)), Err(ScheduleError::BadSweep));
        let err = estimate_crossover_rate(9, &sweep, |_, _, _| Err("boom".to_string()));
        assert!(matches!(err, Err(ScheduleError::Runner { .. })));
    }

    #[test]
    fn crossover_recovers_synthetic_intersection() {
        // two power laws in R meeting at R* = 3.3e7
        let r_star: f64 = 3.3e7;
        let curve = move |tau: usize, r: f64| {
            let slope = if tau == 2 { -1.2 } else { -0.4 };
            1e-3 * (r / r_star).powf(slope)
        };
        let sweep = [1e6, 2e6, 5e6, 1e7, 2e7, 5e7, 1e8, 1.5e8, 2e8];
        let got = estimate_crossover_rate(9, &sweep, |_, r, tau| Ok(curve(tau, r))).unwrap();
        assert!(got > 2e7 && got < 5e7);
        assert!((got - r_star).abs() / r_star < 0.01, "{got}");
    }
}

//! Gate, readout and idle noise parameters plus the network-wait model.
//!
//! Every gate/readout probability is tied to one physical error rate `p`;
//! remote two-qubit gates are ten times worse than local ones. Waiting for
//! Bell pairs turns into a twirled T1/T2 Pauli channel on the data qubits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("T2 = {t2:e} s exceeds 2·T1 = {:e} s; the idle Z probability would be negative", 2.0 * t1)]
    InvalidCoherence { t1: f64, t2: f64 },
    #[error("link attenuation is zero: Bell pairs never arrive")]
    InfiniteWait,
    #[error("invalid noise parameter: {0}")]
    InvalidParameter(String),
}

/// Ratio between remote and local two-qubit gate error.
pub const SEAM_GATE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Physical error rate.
    pub p: f64,
    /// Energy relaxation time (s).
    pub t1: f64,
    /// Dephasing time (s).
    pub t2: f64,
    /// Single-qubit gate duration (s).
    pub t_1q: f64,
    /// Two-qubit gate duration (s).
    pub t_2q: f64,
    /// Readout latency (s).
    pub t_ro: f64,
    /// Entanglement-generation attempt rate per link (1/s).
    pub egr: f64,
    /// Number of parallel photonic links.
    pub links: u32,
    pub fiber_length_m: f64,
    pub fiber_loss_db_per_km: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            p: 1e-3,
            t1: 200e-6,
            t2: 150e-6,
            t_1q: 50e-9,
            t_2q: 70e-9,
            t_ro: 1500e-9,
            egr: 50e6,
            links: 1,
            fiber_length_m: 0.0,
            fiber_loss_db_per_km: 0.2,
        }
    }
}

impl NoiseParams {
    pub fn with_p(p: f64) -> Self {
        NoiseParams { p, ..Default::default() }
    }

    /// No gate, readout or idle noise at all (infinite coherence).
    pub fn noiseless() -> Self {
        NoiseParams {
            p: 0.0,
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            ..Default::default()
        }
    }

    pub fn p_1q(&self) -> f64 {
        self.p
    }

    pub fn p_2q_bulk(&self) -> f64 {
        self.p
    }

    pub fn p_2q_seam(&self) -> f64 {
        SEAM_GATE_FACTOR * self.p
    }

    pub fn p_m(&self) -> f64 {
        self.p
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let bad = |what: &str| Err(NoiseError::InvalidParameter(what.to_string()));
        if !(0.0..=0.1).contains(&self.p) {
            return bad("p must lie in [0, 0.1]");
        }
        for (name, t) in [
            ("t1", self.t1),
            ("t2", self.t2),
            ("t_1q", self.t_1q),
            ("t_2q", self.t_2q),
            ("t_ro", self.t_ro),
        ] {
            if t.is_nan() || t <= 0.0 {
                return bad(&format!("{name} must be positive"));
            }
        }
        if self.t2 > 2.0 * self.t1 {
            return Err(NoiseError::InvalidCoherence { t1: self.t1, t2: self.t2 });
        }
        if self.egr.is_nan() || self.egr <= 0.0 {
            return bad("egr must be positive");
        }
        if self.links == 0 {
            return bad("links must be at least 1");
        }
        if self.fiber_length_m < 0.0 || self.fiber_loss_db_per_km < 0.0 {
            return bad("fiber length and loss must be non-negative");
        }
        Ok(())
    }

    pub fn attenuation(&self) -> f64 {
        attenuation(self.fiber_length_m, self.fiber_loss_db_per_km)
    }
}

/// Single-qubit Pauli channel with independent-outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliChannel1 {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
}

impl PauliChannel1 {
    pub fn total(&self) -> f64 {
        self.p_x + self.p_y + self.p_z
    }

    pub fn is_identity(&self) -> bool {
        self.total() == 0.0
    }
}

/// Twirled amplitude/phase damping over an idle window `delta_t`.
pub fn idle_pauli_probs(delta_t: f64, t1: f64, t2: f64) -> Result<PauliChannel1, NoiseError> {
    if t2 > 2.0 * t1 {
        return Err(NoiseError::InvalidCoherence { t1, t2 });
    }
    if delta_t.is_nan() || delta_t < 0.0 {
        return Err(NoiseError::InvalidParameter("idle time must be non-negative".into()));
    }
    // 1 - e^{-x} without cancellation at small x
    let decay = |t: f64| -(-delta_t / t).exp_m1();
    let dephase = decay(t2) / 4.0;
    let relax = decay(t1) / 2.0;
    Ok(PauliChannel1 {
        p_x: dephase,
        p_y: dephase,
        p_z: (relax - dephase).max(0.0),
    })
}

/// Per-attempt link success probability `10^(-ℓ·L/1000)`.
///
/// The exponent has no `/10` dB conversion; this is the expression the
/// scheduling model is calibrated against.
pub fn attenuation(length_m: f64, loss_db_per_km: f64) -> f64 {
    10f64.powf(-loss_db_per_km * (length_m / 1000.0))
}

/// Expected time to collect `n_pairs` Bell pairs: `n² / (C · p_att · R)`.
pub fn expected_wait(n_pairs: usize, links: u32, p_att: f64, egr: f64) -> Result<f64, NoiseError> {
    if n_pairs == 0 {
        return Ok(0.0);
    }
    if p_att <= 0.0 {
        return Err(NoiseError::InfiniteWait);
    }
    let n = n_pairs as f64;
    Ok(n * n / (links as f64 * p_att * egr))
}

/// Idle window of a round needing `n_remote` Bell pairs: the longer of the
/// readout latency and the expected wait.
pub fn round_idle_time(n_remote: usize, params: &NoiseParams) -> Result<f64, NoiseError> {
    let wait = expected_wait(n_remote, params.links, params.attenuation(), params.egr)?;
    Ok(params.t_ro.max(wait))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn idle_limits() {
        let z = idle_pauli_probs(0.0, 200e-6, 150e-6).unwrap();
        assert_eq!((z.p_x, z.p_y, z.p_z), (0.0, 0.0, 0.0));
        let inf = idle_pauli_probs(1.0, 200e-6, 150e-6).unwrap();
        assert!(close(inf.p_x, 0.25, 1e-12));
        assert!(close(inf.p_y, 0.25, 1e-12));
        assert!(close(inf.p_z, 0.25, 1e-12));
    }

    #[test]
    fn idle_readout_window() {
        let c = idle_pauli_probs(1.5e-6, 200e-6, 150e-6).unwrap();
        assert!(close(c.p_x, 2.487_541_562_707_987e-3, 1e-12), "{}", c.p_x);
        assert_eq!(c.p_x, c.p_y);
        assert!((c.p_z - 1.248e-3).abs() < 1e-6, "{}", c.p_z);
    }

    #[test]
    fn idle_rejects_bad_coherence() {
        assert!(matches!(
            idle_pauli_probs(1e-6, 100e-6, 250e-6),
            Err(NoiseError::InvalidCoherence { .. })
        ));
    }

    #[test]
    fn attenuation_examples() {
        assert_eq!(attenuation(0.0, 0.2), 1.0);
        assert!(close(attenuation(1000.0, 0.2), 0.630_957_344_480_193_2, 1e-14));
        assert!(close(attenuation(5000.0, 0.2), 0.1, 1e-14));
    }

    #[test]
    fn wait_examples() {
        assert_eq!(expected_wait(0, 1, 1.0, 1e6).unwrap(), 0.0);
        assert!(close(expected_wait(1, 1, 1.0, 1e6).unwrap(), 1e-6, 1e-15));
        assert!(close(expected_wait(4, 1, 1.0, 5e7).unwrap(), 0.32e-6, 1e-14));
        assert_eq!(expected_wait(3, 1, 0.0, 1e6), Err(NoiseError::InfiniteWait));
        for n in 1..40 {
            let a = expected_wait(n, 2, 0.5, 3e7).unwrap();
            let b = expected_wait(2 * n, 2, 0.5, 3e7).unwrap();
            assert_eq!(b / a, 4.0);
        }
    }

    #[test]
    fn idle_time_examples() {
        let defaults = NoiseParams::default();
        assert_eq!(round_idle_time(0, &defaults).unwrap(), 1.5e-6);
        let slow = NoiseParams { egr: 1e6, ..defaults };
        assert!(close(round_idle_time(10, &slow).unwrap(), 100e-6, 1e-14));
        let fast = NoiseParams { egr: 2e8, ..defaults };
        assert_eq!(round_idle_time(1, &fast).unwrap(), 1.5e-6);
    }

    #[test]
    fn gate_error_ratios() {
        let n = NoiseParams::with_p(1e-3);
        assert_eq!(n.p_2q_seam(), 1e-2);
        for p in [0.0, 1e-4, 3e-3, 0.05] {
            let n = NoiseParams::with_p(p);
            assert_eq!([n.p_1q(), n.p_2q_bulk(), n.p_m()], [p, p, p]);
            assert_eq!(n.p_2q_seam(), 10.0 * p);
        }
    }

    #[test]
    fn idle_is_monotone() {
        let mut prev = idle_pauli_probs(0.0, 200e-6, 150e-6).unwrap();
        for k in 1..200 {
            let dt = k as f64 * 5e-6;
            let cur = idle_pauli_probs(dt, 200e-6, 150e-6).unwrap();
            assert!(cur.p_x >= prev.p_x && cur.p_y >= prev.p_y && cur.p_z >= prev.p_z);
            prev = cur;
        }
    }

    #[test]
    fn noiseless_has_no_idle() {
        let n = NoiseParams::noiseless();
        n.validate().unwrap();
        let c = idle_pauli_probs(round_idle_time(50, &n).unwrap(), n.t1, n.t2).unwrap();
        assert!(c.is_identity());
    }
}

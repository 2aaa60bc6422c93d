//! Noisy Clifford circuit IR, its text form, the memory-experiment compiler
//! and a symbolic determinism check.

mod compile;
mod determinism;
mod text;

pub use compile::{
    build_code_capacity_circuit, build_memory_circuit, DetectorInfo, MemoryExperiment, RoundLayout,
};
pub use determinism::check_deterministic;
pub use text::{parse, serialize, ParseError};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("round plan covers {got} rounds but {want} were requested")]
    PlanLength { got: usize, want: usize },
    #[error("partition covers {got} data qubits, lattice has {want}")]
    PartitionSize { got: usize, want: usize },
    #[error("qubit {qubit} out of range (circuit has {num_qubits})")]
    QubitOutOfRange { qubit: u32, num_qubits: usize },
    #[error("instruction {index}: {message}")]
    BadInstruction { index: usize, message: String },
    #[error("{what} references measurement {record} but only {count} exist")]
    MissingRecord { what: String, record: usize, count: usize },
    #[error(transparent)]
    Noise(#[from] crate::noise::NoiseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    /// Reset to |0>.
    RZ,
    /// Reset to |+>.
    RX,
    H,
    /// Pairs of (control, target).
    CX,
    MZ,
    /// Identity; carries idle or injected noise.
    I,
}

impl Gate {
    pub fn name(self) -> &'static str {
        match self {
            Gate::RZ => "RZ",
            Gate::RX => "RX",
            Gate::H => "H",
            Gate::CX => "CX",
            Gate::MZ => "MZ",
            Gate::I => "I",
        }
    }

    pub fn from_name(s: &str) -> Option<Gate> {
        Some(match s {
            "RZ" => Gate::RZ,
            "RX" => Gate::RX,
            "H" => Gate::H,
            "CX" => Gate::CX,
            "MZ" => Gate::MZ,
            "I" => Gate::I,
            _ => return None,
        })
    }
}

/// Noise attached to an instruction, applied independently per target
/// (per pair for `DEP2`). `FLIP` flips the recorded outcome of a measurement;
/// the others act right after the gate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Dep1(f64),
    Dep2(f64),
    Flip(f64),
    Pauli1 { px: f64, py: f64, pz: f64 },
}

impl Noise {
    pub fn name(&self) -> &'static str {
        match self {
            Noise::Dep1(_) => "DEP1",
            Noise::Dep2(_) => "DEP2",
            Noise::Flip(_) => "FLIP",
            Noise::Pauli1 { .. } => "PAULI1",
        }
    }

    pub fn is_trivial(&self) -> bool {
        match *self {
            Noise::Dep1(p) | Noise::Dep2(p) | Noise::Flip(p) => p == 0.0,
            Noise::Pauli1 { px, py, pz } => px + py + pz == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instruction {
    pub gate: Gate,
    pub targets: Vec<u32>,
    pub noise: Option<Noise>,
}

impl Instruction {
    pub fn new(gate: Gate, targets: Vec<u32>) -> Self {
        Instruction { gate, targets, noise: None }
    }

    pub fn with_noise(mut self, noise: Noise) -> Self {
        if !noise.is_trivial() {
            self.noise = Some(noise);
        }
        self
    }

    /// Measurement records this instruction produces.
    pub fn records(&self) -> usize {
        if self.gate == Gate::MZ {
            self.targets.len()
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CircuitIR {
    pub num_qubits: usize,
    pub instructions: Vec<Instruction>,
    /// Each detector is the XOR of these measurement records.
    pub detectors: Vec<Vec<usize>>,
    pub observable: Vec<usize>,
}

impl CircuitIR {
    pub fn new(num_qubits: usize) -> Self {
        CircuitIR { num_qubits, ..Default::default() }
    }

    pub fn num_measurements(&self) -> usize {
        self.instructions.iter().map(Instruction::records).sum()
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    /// Copy with every noise annotation removed.
    pub fn without_noise(&self) -> CircuitIR {
        let mut c = self.clone();
        for ins in &mut c.instructions {
            ins.noise = None;
        }
        c
    }

    /// Structural checks: qubit ranges, CX pairing and record references.
    pub fn validate(&self) -> Result<(), CircuitError> {
        for (index, ins) in self.instructions.iter().enumerate() {
            let bad = |message: &str| CircuitError::BadInstruction { index, message: message.to_string() };
            for &q in &ins.targets {
                if q as usize >= self.num_qubits {
                    return Err(CircuitError::QubitOutOfRange { qubit: q, num_qubits: self.num_qubits });
                }
            }
            if ins.gate == Gate::CX {
                if ins.targets.len() % 2 != 0 {
                    return Err(bad("CX needs an even number of targets"));
                }
                if ins.targets.chunks(2).any(|p| p[0] == p[1]) {
                    return Err(bad("CX control equals target"));
                }
            }
            match (ins.gate, ins.noise) {
                (_, None) => {}
                (Gate::MZ, Some(Noise::Flip(_))) => {}
                (Gate::CX, Some(Noise::Dep2(_))) => {}
                (Gate::CX, Some(_)) => return Err(bad("CX only takes DEP2 noise")),
                (g, Some(Noise::Dep1(_) | Noise::Pauli1 { .. })) if g != Gate::MZ && g != Gate::CX => {}
                _ => return Err(bad("noise does not fit the gate")),
            }
            if let Some(n) = ins.noise {
                let ok = match n {
                    Noise::Dep1(p) | Noise::Dep2(p) | Noise::Flip(p) => (0.0..=1.0).contains(&p),
                    Noise::Pauli1 { px, py, pz } => {
                        px >= 0.0 && py >= 0.0 && pz >= 0.0 && px + py + pz <= 1.0 + 1e-12
                    }
                };
                if !ok {
                    return Err(bad("noise probability out of range"));
                }
            }
        }
        let count = self.num_measurements();
        for (k, det) in self.detectors.iter().enumerate() {
            if let Some(&record) = det.iter().find(|&&m| m >= count) {
                return Err(CircuitError::MissingRecord { what: format!("detector {k}"), record, count });
            }
        }
        if let Some(&record) = self.observable.iter().find(|&&m| m >= count) {
            return Err(CircuitError::MissingRecord { what: "observable".into(), record, count });
        }
        Ok(())
    }
}

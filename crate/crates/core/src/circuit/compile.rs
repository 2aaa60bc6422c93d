//! Z-basis memory experiment compiler.
//!
//! Qubit layout: data qubits `0..n`, then one ancilla per check at
//! `n + CheckId::index()` (X ancilla of face `f` at `n + 2f`, Z at `n + 2f + 1`).
//!
//! Each round applies the idle channel to every data qubit, then measures the
//! scheduled X checks (RX, CX ancilla→data, H, MZ) followed by the scheduled Z
//! checks (RZ, CX data→ancilla, MZ). CX layers follow the face qubit order;
//! weight-4 faces simply finish early.

use crate::lattice::{Color, ColorCodeLattice};
use crate::noise::{idle_pauli_probs, round_idle_time, NoiseParams, PauliChannel1};
use crate::partition::{CheckId, CheckType, Partition};
use crate::schedule::RoundPlan;

use super::{CircuitError, CircuitIR, Gate, Instruction, Noise};

#[derive(Debug, Clone, PartialEq)]
pub struct RoundLayout {
    pub round: usize,
    pub measure_seam: bool,
    /// Checks measured this round, by check index.
    pub checks: Vec<CheckId>,
    pub n_remote: usize,
    pub idle_time: f64,
    pub idle: PauliChannel1,
}

/// Where a detector sits in space-time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorInfo {
    pub check: CheckId,
    pub color: Color,
    /// Round of the later measurement; `rounds + 1` for the final data
    /// comparison.
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryExperiment {
    pub circuit: CircuitIR,
    pub detectors: Vec<DetectorInfo>,
    pub rounds: Vec<RoundLayout>,
    pub num_data: usize,
}

impl MemoryExperiment {
    /// Indices of detectors built from Z checks.
    pub fn z_detectors(&self) -> Vec<usize> {
        (0..self.detectors.len())
            .filter(|&k| self.detectors[k].check.kind == CheckType::Z)
            .collect()
    }

    pub fn remote_cx_count(&self) -> usize {
        self.rounds.iter().map(|r| r.n_remote).sum()
    }
}

/// Per-round data noise for the generic compiler.
enum DataNoise<'a> {
    /// Idle channel from the round's Bell-pair demand.
    Idle(&'a NoiseParams),
    /// Depolarizing on data before round 1 only, everything else perfect.
    CodeCapacity(f64),
}

pub fn build_memory_circuit(
    lattice: &ColorCodeLattice,
    partition: &Partition,
    plan: &RoundPlan,
    noise: &NoiseParams,
    rounds: usize,
) -> Result<MemoryExperiment, CircuitError> {
    if plan.measure_seam.len() != rounds + 1 {
        return Err(CircuitError::PlanLength { got: plan.measure_seam.len(), want: rounds + 1 });
    }
    compile(lattice, partition, plan, Some(noise), DataNoise::Idle(noise))
}

/// One perfect round, depolarizing noise of strength `p` on every data qubit,
/// a second perfect round, then perfect data readout.
pub fn build_code_capacity_circuit(lattice: &ColorCodeLattice, p: f64) -> Result<MemoryExperiment, CircuitError> {
    let partition = crate::partition::monolithic(lattice);
    let plan = RoundPlan::every(1, 1);
    compile(lattice, &partition, &plan, None, DataNoise::CodeCapacity(p))
}

fn compile(
    lattice: &ColorCodeLattice,
    partition: &Partition,
    plan: &RoundPlan,
    gate_noise: Option<&NoiseParams>,
    data_noise: DataNoise<'_>,
) -> Result<MemoryExperiment, CircuitError> {
    let n = lattice.num_data();
    if partition.qpu_of_data.len() != n {
        return Err(CircuitError::PartitionSize { got: partition.qpu_of_data.len(), want: n });
    }
    let num_checks = 2 * lattice.num_faces();
    let ancilla = |c: CheckId| (n + c.index()) as u32;
    let data: Vec<u32> = (0..n as u32).collect();
    let rounds = plan.rounds();

    let p1 = gate_noise.map_or(0.0, |g| g.p_1q());
    let pm = gate_noise.map_or(0.0, |g| g.p_m());
    let p2_local = gate_noise.map_or(0.0, |g| g.p_2q_bulk());
    let p2_remote = gate_noise.map_or(0.0, |g| g.p_2q_seam());

    let mut circuit = CircuitIR::new(n + num_checks);
    let mut infos = Vec::new();
    let mut layouts = Vec::new();
    let mut next_record = 0usize;
    // last measurement record of each check
    let mut last: Vec<Option<usize>> = vec![None; num_checks];

    circuit.instructions.push(Instruction::new(Gate::RZ, data.clone()));

    for t in 0..=rounds {
        let measure_seam = plan.measure_seam[t];
        let checks: Vec<CheckId> = (0..num_checks)
            .map(CheckId::from_index)
            .filter(|&c| measure_seam || !partition.is_seam(c))
            .collect();
        let n_remote: usize = checks.iter().map(|c| partition.remote_pairs[c.index()]).sum();

        let (idle_time, idle) = match data_noise {
            DataNoise::Idle(params) => {
                let dt = round_idle_time(n_remote, params)?;
                (dt, idle_pauli_probs(dt, params.t1, params.t2)?)
            }
            DataNoise::CodeCapacity(_) => (0.0, PauliChannel1 { p_x: 0.0, p_y: 0.0, p_z: 0.0 }),
        };
        match data_noise {
            DataNoise::Idle(_) => {
                let ch = Noise::Pauli1 { px: idle.p_x, py: idle.p_y, pz: idle.p_z };
                if !ch.is_trivial() {
                    circuit.instructions.push(Instruction::new(Gate::I, data.clone()).with_noise(ch));
                }
            }
            DataNoise::CodeCapacity(p) if t == 1 && p > 0.0 => {
                circuit.instructions.push(Instruction::new(Gate::I, data.clone()).with_noise(Noise::Dep1(p)));
            }
            DataNoise::CodeCapacity(_) => {}
        }

        for kind in [CheckType::X, CheckType::Z] {
            let block: Vec<CheckId> = checks.iter().copied().filter(|c| c.kind == kind).collect();
            if block.is_empty() {
                continue;
            }
            let ancillas: Vec<u32> = block.iter().map(|&c| ancilla(c)).collect();
            let reset = if kind == CheckType::X { Gate::RX } else { Gate::RZ };
            circuit.instructions.push(Instruction::new(reset, ancillas.clone()));

            let depth = block.iter().map(|c| lattice.faces[c.face].weight()).max().unwrap_or(0);
            for layer in 0..depth {
                let mut local = Vec::new();
                let mut remote = Vec::new();
                for &c in &block {
                    let Some(&q) = lattice.faces[c.face].qubits.get(layer) else {
                        continue;
                    };
                    let pair = match kind {
                        CheckType::X => [ancilla(c), q as u32],
                        CheckType::Z => [q as u32, ancilla(c)],
                    };
                    if partition.is_remote(c, q) {
                        remote.extend(pair);
                    } else {
                        local.extend(pair);
                    }
                }
                for (targets, p) in [(local, p2_local), (remote, p2_remote)] {
                    if !targets.is_empty() {
                        circuit.instructions.push(Instruction::new(Gate::CX, targets).with_noise(Noise::Dep2(p)));
                    }
                }
            }

            if kind == CheckType::X {
                circuit.instructions.push(Instruction::new(Gate::H, ancillas.clone()).with_noise(Noise::Dep1(p1)));
            }
            circuit.instructions.push(Instruction::new(Gate::MZ, ancillas).with_noise(Noise::Flip(pm)));

            for &c in &block {
                let record = next_record;
                next_record += 1;
                let detector = match (kind, last[c.index()]) {
                    // data starts in |0>, so Z checks are deterministic at once
                    (CheckType::Z, None) => Some(vec![record]),
                    (_, Some(prev)) => Some(vec![prev, record]),
                    (CheckType::X, None) => None,
                };
                if let Some(det) = detector {
                    circuit.detectors.push(det);
                    infos.push(DetectorInfo { check: c, color: lattice.faces[c.face].color, round: t });
                }
                last[c.index()] = Some(record);
            }
        }

        layouts.push(RoundLayout { round: t, measure_seam, checks, n_remote, idle_time, idle });
    }

    let final_base = next_record;
    circuit.instructions.push(Instruction::new(Gate::MZ, data));
    for face in &lattice.faces {
        let c = CheckId::new(face.id, CheckType::Z);
        let mut det: Vec<usize> = face.qubits.iter().map(|&q| final_base + q).collect();
        if let Some(prev) = last[c.index()] {
            det.insert(0, prev);
        }
        circuit.detectors.push(det);
        infos.push(DetectorInfo { check: c, color: face.color, round: rounds + 1 });
    }
    circuit.observable = lattice.logical_z_support.iter().map(|&q| final_base + q).collect();
    circuit.validate()?;

    Ok(MemoryExperiment { circuit, detectors: infos, rounds: layouts, num_data: n })
}

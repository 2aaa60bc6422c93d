//! Bit-packed Pauli-frame sampler.
//!
//! Shots are processed in blocks of [`BLOCK_SHOTS`]; within a block every
//! qubit carries `WORDS` 64-bit words of X and Z frame bits, one bit per shot.
//! Each (block, instruction) pair draws from its own ChaCha8 stream, so any
//! split of the shot range over threads reproduces the serial result bit for
//! bit. Shot `s` always lives in block `s / BLOCK_SHOTS`, bit `s % BLOCK_SHOTS`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::circuit::{check_deterministic, CircuitIR, Gate, Noise};
use crate::rng;

pub const BLOCK_SHOTS: usize = 1024;
const WORDS: usize = BLOCK_SHOTS / 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("circuit has non-deterministic detectors or observable; frame sampling would be invalid")]
    NotDeterministic,
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
}

/// Detector rows packed LSB-first, `row_bytes()` bytes per shot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorSamples {
    pub shots: usize,
    pub num_detectors: usize,
    pub seed: u64,
    pub detector_bits: Vec<u8>,
    pub observable_flips: Vec<bool>,
}

impl DetectorSamples {
    pub fn row_bytes(&self) -> usize {
        self.num_detectors.div_ceil(8)
    }

    pub fn row(&self, shot: usize) -> &[u8] {
        let w = self.row_bytes();
        &self.detector_bits[shot * w..(shot + 1) * w]
    }

    pub fn detector(&self, shot: usize, k: usize) -> bool {
        self.row(shot)[k / 8] >> (k % 8) & 1 == 1
    }

    /// Indices of detectors that fired in `shot`.
    pub fn fired(&self, shot: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (b, &byte) in self.row(shot).iter().enumerate() {
            let mut v = byte;
            while v != 0 {
                out.push(8 * b + v.trailing_zeros() as usize);
                v &= v - 1;
            }
        }
        out
    }

    /// Per-detector firing counts.
    pub fn detector_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_detectors];
        for s in 0..self.shots {
            for k in self.fired(s) {
                counts[k] += 1;
            }
        }
        counts
    }

    /// Raw `b8` dump: the packed rows back to back.
    pub fn to_b8(&self) -> &[u8] {
        &self.detector_bits
    }
}

#[derive(Debug, Clone, Copy)]
enum Channel {
    /// Uniform X/Y/Z.
    Dep1,
    /// Uniform over the 15 non-identity two-qubit Paulis.
    Dep2,
    Flip,
    /// Cumulative thresholds for X, Y within the total probability.
    Pauli { x: f64, xy: f64 },
}

#[derive(Debug, Clone)]
struct NoiseOp {
    channel: Channel,
    p: f64,
}

#[derive(Debug, Clone)]
struct Op {
    gate: Gate,
    targets: Vec<usize>,
    noise: Option<NoiseOp>,
    /// First measurement record produced by this op.
    record: usize,
}

/// A circuit prepared for repeated sampling; determinism is checked once.
#[derive(Debug, Clone)]
pub struct Sampler {
    num_qubits: usize,
    num_records: usize,
    ops: Vec<Op>,
    detectors: Vec<Vec<usize>>,
    observable: Vec<usize>,
}

impl Sampler {
    pub fn new(circuit: &CircuitIR) -> Result<Self, SimError> {
        circuit.validate()?;
        if !check_deterministic(circuit) {
            return Err(SimError::NotDeterministic);
        }
        Ok(Self::new_unchecked(circuit))
    }

    /// Skips the determinism check; only for circuits known to satisfy it.
    pub fn new_unchecked(circuit: &CircuitIR) -> Self {
        let mut record = 0;
        let ops = circuit
            .instructions
            .iter()
            .map(|ins| {
                let noise = ins.noise.map(|n| match n {
                    Noise::Dep1(p) => NoiseOp { channel: Channel::Dep1, p },
                    Noise::Dep2(p) => NoiseOp { channel: Channel::Dep2, p },
                    Noise::Flip(p) => NoiseOp { channel: Channel::Flip, p },
                    Noise::Pauli1 { px, py, pz } => {
                        let total = px + py + pz;
                        NoiseOp { channel: Channel::Pauli { x: px / total, xy: (px + py) / total }, p: total }
                    }
                });
                let op = Op {
                    gate: ins.gate,
                    targets: ins.targets.iter().map(|&t| t as usize).collect(),
                    noise,
                    record,
                };
                record += ins.records();
                op
            })
            .collect();
        Sampler {
            num_qubits: circuit.num_qubits,
            num_records: record,
            ops,
            detectors: circuit.detectors.clone(),
            observable: circuit.observable.clone(),
        }
    }

    pub fn num_detectors(&self) -> usize {
        self.detectors.len()
    }

    pub fn sample(&self, shots: usize, seed: u64) -> DetectorSamples {
        self.sample_range(0, shots, seed)
    }

    /// Shots `first..first + count` of the stream defined by `seed`.
    pub fn sample_range(&self, first: usize, count: usize, seed: u64) -> DetectorSamples {
        let row_bytes = self.detectors.len().div_ceil(8);
        let mut out = DetectorSamples {
            shots: count,
            num_detectors: self.detectors.len(),
            seed,
            detector_bits: vec![0; count * row_bytes],
            observable_flips: vec![false; count],
        };
        if count == 0 {
            return out;
        }
        let first_block = first / BLOCK_SHOTS;
        let last_block = (first + count - 1) / BLOCK_SHOTS;
        let blocks: Vec<(usize, Vec<[u64; WORDS]>, [u64; WORDS])> = (first_block..=last_block)
            .into_par_iter()
            .map(|b| {
                let (dets, obs) = self.run_block(b, seed);
                (b, dets, obs)
            })
            .collect();
        for (b, dets, obs) in blocks {
            let lo = (b * BLOCK_SHOTS).max(first);
            let hi = ((b + 1) * BLOCK_SHOTS).min(first + count);
            for s in lo..hi {
                let bit = s - b * BLOCK_SHOTS;
                let (w, m) = (bit / 64, 1u64 << (bit % 64));
                let row = &mut out.detector_bits[(s - first) * row_bytes..(s - first + 1) * row_bytes];
                for (k, det) in dets.iter().enumerate() {
                    if det[w] & m != 0 {
                        row[k / 8] |= 1 << (k % 8);
                    }
                }
                out.observable_flips[s - first] = obs[w] & m != 0;
            }
        }
        out
    }

    fn run_block(&self, block: usize, seed: u64) -> (Vec<[u64; WORDS]>, [u64; WORDS]) {
        let mut x = vec![[0u64; WORDS]; self.num_qubits];
        let mut z = vec![[0u64; WORDS]; self.num_qubits];
        let mut rec = vec![[0u64; WORDS]; self.num_records];
        let block_seed = rng::derive(seed, rng::DOMAIN_SAMPLER, block as u64);

        for (idx, op) in self.ops.iter().enumerate() {
            match op.gate {
                Gate::RZ | Gate::RX => {
                    for &q in &op.targets {
                        x[q] = [0; WORDS];
                        z[q] = [0; WORDS];
                    }
                }
                Gate::H => {
                    for &q in &op.targets {
                        std::mem::swap(&mut x[q], &mut z[q]);
                    }
                }
                Gate::CX => {
                    for pair in op.targets.chunks(2) {
                        let (c, t) = (pair[0], pair[1]);
                        for w in 0..WORDS {
                            x[t][w] ^= x[c][w];
                            z[c][w] ^= z[t][w];
                        }
                    }
                }
                Gate::MZ => {
                    for (k, &q) in op.targets.iter().enumerate() {
                        rec[op.record + k] = x[q];
                    }
                }
                Gate::I => {}
            }
            let Some(noise) = &op.noise else { continue };
            if noise.p <= 0.0 {
                continue;
            }
            let mut r = rng::chacha(rng::derive(block_seed, idx as u64, 0));
            let per_site = if matches!(noise.channel, Channel::Dep2) { 2 } else { 1 };
            let sites = op.targets.len() / per_site * BLOCK_SHOTS;
            for_each_hit(&mut r, noise.p, sites, |r, site| {
                let (slot, shot) = (site / BLOCK_SHOTS, site % BLOCK_SHOTS);
                let (w, m) = (shot / 64, 1u64 << (shot % 64));
                match noise.channel {
                    Channel::Flip => rec[op.record + slot][w] ^= m,
                    Channel::Dep1 => {
                        let q = op.targets[slot];
                        apply_pauli(&mut x[q][w], &mut z[q][w], m, r.gen_range(1..4u8));
                    }
                    Channel::Pauli { x: tx, xy } => {
                        let q = op.targets[slot];
                        let u: f64 = r.gen();
                        let pauli = if u < tx { 1 } else if u < xy { 3 } else { 2 };
                        apply_pauli(&mut x[q][w], &mut z[q][w], m, pauli);
                    }
                    Channel::Dep2 => {
                        let (a, b) = (op.targets[2 * slot], op.targets[2 * slot + 1]);
                        let k: u8 = r.gen_range(1..16);
                        apply_pauli(&mut x[a][w], &mut z[a][w], m, k & 3);
                        apply_pauli(&mut x[b][w], &mut z[b][w], m, k >> 2);
                    }
                }
            });
        }

        let xor = |set: &[usize]| {
            let mut acc = [0u64; WORDS];
            for &m in set {
                for w in 0..WORDS {
                    acc[w] ^= rec[m][w];
                }
            }
            acc
        };
        let dets = self.detectors.iter().map(|d| xor(d)).collect();
        let obs = xor(&self.observable);
        (dets, obs)
    }
}

/// Pauli code: bit 0 = X component, bit 1 = Z component (1=X, 2=Z, 3=Y).
fn apply_pauli(x: &mut u64, z: &mut u64, mask: u64, pauli: u8) {
    if pauli & 1 != 0 {
        *x ^= mask;
    }
    if pauli & 2 != 0 {
        *z ^= mask;
    }
}

/// Visit each of `sites` independently with probability `p`, using
/// geometric gaps between hits.
fn for_each_hit<F: FnMut(&mut ChaCha8Rng, usize)>(r: &mut ChaCha8Rng, p: f64, sites: usize, mut f: F) {
    if p >= 1.0 {
        for s in 0..sites {
            f(r, s);
        }
        return;
    }
    let log_q = (-p).ln_1p();
    let mut pos = 0usize;
    loop {
        let u: f64 = r.gen::<f64>();
        // 1 - u lies in (0, 1]
        let gap = ((1.0 - u).ln() / log_q).floor();
        if !(gap < (sites - pos) as f64) {
            return;
        }
        pos += gap as usize;
        f(r, pos);
        pos += 1;
        if pos >= sites {
            return;
        }
    }
}

/// One-shot convenience wrapper: check, then sample.
pub fn sample_shots(circuit: &CircuitIR, shots: usize, seed: u64) -> Result<DetectorSamples, SimError> {
    Ok(Sampler::new(circuit)?.sample(shots, seed))
}

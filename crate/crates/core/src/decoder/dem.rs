//! Detector error model extraction by backward sensitivity propagation.
//!
//! Walking the circuit from the end, each qubit keeps the set of detectors
//! (plus the observable) that an X or Z error at the current time would flip.
//! Every noise annotation is then split into independent Pauli mechanisms
//! whose signatures are read off those sets.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::circuit::{CircuitIR, Gate, Noise};

#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    pub probability: f64,
    /// Sorted detector indices.
    pub detectors: Vec<u32>,
    pub observable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorErrorModel {
    pub mechanisms: Vec<Mechanism>,
    pub detector_count: usize,
    pub merged: bool,
}

/// Probability that an odd number of two independent events happen.
pub fn xor_combine(p1: f64, p2: f64) -> f64 {
    p1 * (1.0 - p2) + p2 * (1.0 - p1)
}

/// Per-component probability when a DEP1(p) channel is written as three
/// independent X, Y, Z events.
pub fn dep1_component(p: f64) -> f64 {
    0.5 - 0.5 * (1.0 - 4.0 * p / 3.0).max(0.0).sqrt()
}

/// Same for the 15 independent components of DEP2(p).
pub fn dep2_component(p: f64) -> f64 {
    0.5 - 0.5 * (1.0 - 16.0 * p / 15.0).max(0.0).powf(0.125)
}

/// Independent X, Y, Z probabilities reproducing a Pauli channel with
/// disjoint probabilities `(px, py, pz)`.
pub fn pauli_components(px: f64, py: f64, pz: f64) -> [f64; 3] {
    // Pauli eigenvalues of the channel: f_P = 1 - 2·(sum of probs anticommuting with P)
    let fx = 1.0 - 2.0 * (py + pz);
    let fy = 1.0 - 2.0 * (px + pz);
    let fz = 1.0 - 2.0 * (px + py);
    let comp = |a: f64, b: f64, c: f64| {
        // (1 - 2q) = sqrt(a·b / c)
        if c <= 0.0 {
            return 0.5;
        }
        0.5 - 0.5 * (a * b / c).max(0.0).sqrt()
    };
    [comp(fy, fz, fx), comp(fx, fz, fy), comp(fx, fy, fz)]
}

type Bits = Vec<u64>;

fn xor_into(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x ^= y;
    }
}

struct Collector {
    detectors: usize,
    raw: Vec<(f64, Bits)>,
}

impl Collector {
    fn push(&mut self, p: f64, sig: Bits) {
        if p > 0.0 && sig.iter().any(|&w| w != 0) {
            self.raw.push((p, sig));
        }
    }

    fn decode(&self, sig: &[u64]) -> (Vec<u32>, bool) {
        let mut dets = Vec::new();
        let mut obs = false;
        for (w, &word) in sig.iter().enumerate() {
            let mut v = word;
            while v != 0 {
                let k = 64 * w + v.trailing_zeros() as usize;
                if k == self.detectors {
                    obs = true;
                } else {
                    dets.push(k as u32);
                }
                v &= v - 1;
            }
        }
        (dets, obs)
    }
}

/// Extract the merged detector error model of a (deterministic) circuit.
pub fn extract_dem(circuit: &CircuitIR) -> DetectorErrorModel {
    extract(circuit, true)
}

/// Same, keeping one mechanism per Pauli outcome of every annotation.
pub fn extract_dem_unmerged(circuit: &CircuitIR) -> DetectorErrorModel {
    extract(circuit, false)
}

fn extract(circuit: &CircuitIR, merge: bool) -> DetectorErrorModel {
    let nd = circuit.detectors.len();
    // bit `nd` stands for the observable
    let words = (nd + 1).div_ceil(64);
    let nrec = circuit.num_measurements();
    let mut rec_sens: Vec<Bits> = vec![vec![0; words]; nrec];
    for (k, det) in circuit.detectors.iter().enumerate() {
        for &m in det {
            rec_sens[m][k / 64] ^= 1 << (k % 64);
        }
    }
    for &m in &circuit.observable {
        rec_sens[m][nd / 64] ^= 1 << (nd % 64);
    }

    let n = circuit.num_qubits;
    let mut sx: Vec<Bits> = vec![vec![0; words]; n];
    let mut sz: Vec<Bits> = vec![vec![0; words]; n];
    let mut out = Collector { detectors: nd, raw: Vec::new() };
    let mut record = nrec;

    for ins in circuit.instructions.iter().rev() {
        let first_record = record - ins.records();
        // noise sits after the gate in time, so it is visited first
        if let Some(noise) = ins.noise {
            match noise {
                Noise::Flip(p) => {
                    for k in 0..ins.targets.len() {
                        out.push(p, rec_sens[first_record + k].clone());
                    }
                }
                Noise::Dep1(p) => {
                    let q = dep1_component(p);
                    for &t in &ins.targets {
                        let t = t as usize;
                        let mut y = sx[t].clone();
                        xor_into(&mut y, &sz[t]);
                        out.push(q, sx[t].clone());
                        out.push(q, y);
                        out.push(q, sz[t].clone());
                    }
                }
                Noise::Pauli1 { px, py, pz } => {
                    let [qx, qy, qz] = pauli_components(px, py, pz);
                    for &t in &ins.targets {
                        let t = t as usize;
                        let mut y = sx[t].clone();
                        xor_into(&mut y, &sz[t]);
                        out.push(qx, sx[t].clone());
                        out.push(qy, y);
                        out.push(qz, sz[t].clone());
                    }
                }
                Noise::Dep2(p) => {
                    let q = dep2_component(p);
                    for pair in ins.targets.chunks(2) {
                        let (a, b) = (pair[0] as usize, pair[1] as usize);
                        for k in 1..16u8 {
                            let mut sig = vec![0; words];
                            for (qubit, code) in [(a, k & 3), (b, k >> 2)] {
                                if code & 1 != 0 {
                                    xor_into(&mut sig, &sx[qubit]);
                                }
                                if code & 2 != 0 {
                                    xor_into(&mut sig, &sz[qubit]);
                                }
                            }
                            out.push(q, sig);
                        }
                    }
                }
            }
        }
        match ins.gate {
            Gate::I => {}
            Gate::RZ | Gate::RX => {
                for &t in &ins.targets {
                    sx[t as usize].iter_mut().for_each(|w| *w = 0);
                    sz[t as usize].iter_mut().for_each(|w| *w = 0);
                }
            }
            Gate::H => {
                for &t in &ins.targets {
                    let t = t as usize;
                    std::mem::swap(&mut sx[t], &mut sz[t]);
                }
            }
            Gate::CX => {
                for pair in ins.targets.chunks(2).rev() {
                    let (c, t) = (pair[0] as usize, pair[1] as usize);
                    let xt = sx[t].clone();
                    xor_into(&mut sx[c], &xt);
                    let zc = sz[c].clone();
                    xor_into(&mut sz[t], &zc);
                }
            }
            Gate::MZ => {
                for (k, &t) in ins.targets.iter().enumerate() {
                    let r = rec_sens[first_record + k].clone();
                    xor_into(&mut sx[t as usize], &r);
                }
            }
        }
        record = first_record;
    }

    let mechanisms = if merge {
        let mut index: HashMap<Bits, usize> = HashMap::new();
        let mut merged: Vec<(f64, Bits)> = Vec::new();
        for (p, sig) in out.raw.iter() {
            match index.get(sig) {
                Some(&i) => merged[i].0 = xor_combine(merged[i].0, *p),
                None => {
                    index.insert(sig.clone(), merged.len());
                    merged.push((*p, sig.clone()));
                }
            }
        }
        merged
            .iter()
            .map(|(p, sig)| {
                let (detectors, observable) = out.decode(sig);
                Mechanism { probability: *p, detectors, observable }
            })
            .collect()
    } else {
        out.raw
            .iter()
            .map(|(p, sig)| {
                let (detectors, observable) = out.decode(sig);
                Mechanism { probability: *p, detectors, observable }
            })
            .collect()
    };
    DetectorErrorModel { mechanisms, detector_count: nd, merged: merge }
}

impl DetectorErrorModel {
    /// One `E <p> D.. [L0]` line per mechanism.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for m in &self.mechanisms {
            let _ = write!(s, "E {}", m.probability);
            for d in &m.detectors {
                let _ = write!(s, " D{d}");
            }
            if m.observable {
                s.push_str(" L0");
            }
            s.push('\n');
        }
        s
    }

    /// Keep only detectors for which `keep` holds, renumbered densely in
    /// order, and merge the resulting duplicate signatures.
    pub fn restrict(&self, keep: &[bool]) -> (DetectorErrorModel, Vec<usize>) {
        let mut new_id = vec![usize::MAX; self.detector_count];
        let mut old_of_new = Vec::new();
        for (k, &kp) in keep.iter().enumerate().take(self.detector_count) {
            if kp {
                new_id[k] = old_of_new.len();
                old_of_new.push(k);
            }
        }
        let mut index: HashMap<(Vec<u32>, bool), usize> = HashMap::new();
        let mut mechanisms: Vec<Mechanism> = Vec::new();
        for m in &self.mechanisms {
            let dets: Vec<u32> = m
                .detectors
                .iter()
                .filter(|&&d| keep[d as usize])
                .map(|&d| new_id[d as usize] as u32)
                .collect();
            if dets.is_empty() && !m.observable {
                continue;
            }
            let key = (dets, m.observable);
            match index.get(&key) {
                Some(&i) => mechanisms[i].probability = xor_combine(mechanisms[i].probability, m.probability),
                None => {
                    index.insert(key.clone(), mechanisms.len());
                    mechanisms.push(Mechanism { probability: m.probability, detectors: key.0, observable: key.1 });
                }
            }
        }
        let dem = DetectorErrorModel { mechanisms, detector_count: old_of_new.len(), merged: true };
        (dem, old_of_new)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse;

    #[test]
    fn noiseless_has_no_mechanisms() {
        let c = parse("QUBITS 2\nRZ 0 1\nH 0\nCX 0 1\nMZ 0 1\nDETECTOR 0 1\n").unwrap();
        assert!(extract_dem(&c).mechanisms.is_empty());
    }

    #[test]
    fn repeated_measurement_flip() {
        let c = parse("QUBITS 1\nRZ 0\nMZ 0\nMZ 0 !FLIP 0.01\nMZ 0\nDETECTOR 0\nDETECTOR 0 1\nDETECTOR 1 2\n").unwrap();
        let dem = extract_dem(&c);
        assert_eq!(dem.mechanisms.len(), 1);
        assert_eq!(dem.mechanisms[0].detectors, vec![1, 2]);
        assert_eq!(dem.mechanisms[0].probability, 0.01);
    }

    #[test]
    fn cx_propagation() {
        // X on control before CX reaches both measurements
        let c = parse("QUBITS 2\nRZ 0 1\nI 0 !PAULI1 0.1 0 0\nCX 0 1\nMZ 0 1\nDETECTOR 0\nDETECTOR 1\nOBSERVABLE 1\n").unwrap();
        let dem = extract_dem(&c);
        assert_eq!(dem.mechanisms.len(), 1);
        assert_eq!(dem.mechanisms[0].detectors, vec![0, 1]);
        assert!(dem.mechanisms[0].observable);
        assert!((dem.mechanisms[0].probability - 0.1).abs() < 1e-15);
    }

    #[test]
    fn component_conversions_reproduce_channels() {
        for p in [1e-4, 1e-3, 0.01, 0.1, 0.5] {
            let q = dep1_component(p);
            assert!(((1.0 - 2.0 * q).powi(2) - (1.0 - 4.0 * p / 3.0)).abs() < 1e-14);
            let q2 = dep2_component(p);
            assert!(((1.0 - 2.0 * q2).powi(8) - (1.0 - 16.0 * p / 15.0)).abs() < 1e-13);
        }
        let [qx, qy, qz] = pauli_components(0.01, 0.01, 0.02);
        // compare Pauli eigenvalues of the product channel with the original
        let fz = (1.0 - 2.0 * qx) * (1.0 - 2.0 * qy);
        assert!((fz - (1.0 - 2.0 * 0.02)).abs() < 1e-14);
        let fx = (1.0 - 2.0 * qy) * (1.0 - 2.0 * qz);
        assert!((fx - (1.0 - 2.0 * 0.03)).abs() < 1e-14);
    }

    #[test]
    fn dump_lines() {
        let dem = DetectorErrorModel {
            mechanisms: vec![Mechanism { probability: 0.25, detectors: vec![0, 3], observable: true }],
            detector_count: 4,
            merged: true,
        };
        assert_eq!(dem.dump(), "E 0.25 D0 D3 L0\n");
    }
}

//! Line-oriented circuit text format.
//!
//! ```text
//! QUBITS 2
//! RZ 0 1
//! H 0 !DEP1 0.001
//! CX 0 1 !DEP2 0.01
//! MZ 0 1 !FLIP 0.001
//! DETECTOR 0 1
//! OBSERVABLE 1
//! ```
//!
//! Blank lines and `#` comments are ignored. Floats are written with Rust's
//! shortest round-trip formatting.

use std::fmt::Write as _;

use thiserror::Error;

use super::{CircuitIR, Gate, Instruction, Noise};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

pub fn serialize(c: &CircuitIR) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "QUBITS {}", c.num_qubits);
    for ins in &c.instructions {
        s.push_str(ins.gate.name());
        for t in &ins.targets {
            let _ = write!(s, " {t}");
        }
        match ins.noise {
            None => {}
            Some(Noise::Dep1(p)) => {
                let _ = write!(s, " !DEP1 {p}");
            }
            Some(Noise::Dep2(p)) => {
                let _ = write!(s, " !DEP2 {p}");
            }
            Some(Noise::Flip(p)) => {
                let _ = write!(s, " !FLIP {p}");
            }
            Some(Noise::Pauli1 { px, py, pz }) => {
                let _ = write!(s, " !PAULI1 {px} {py} {pz}");
            }
        }
        s.push('\n');
    }
    for det in &c.detectors {
        s.push_str("DETECTOR");
        for m in det {
            let _ = write!(s, " {m}");
        }
        s.push('\n');
    }
    if !c.observable.is_empty() {
        s.push_str("OBSERVABLE");
        for m in &c.observable {
            let _ = write!(s, " {m}");
        }
        s.push('\n');
    }
    s
}

pub fn parse(text: &str) -> Result<CircuitIR, ParseError> {
    let mut circuit: Option<CircuitIR> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let err = |message: String| ParseError { line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (ops, noise_part) = match body.split_once('!') {
            Some((a, b)) => (a, Some(b)),
            None => (body, None),
        };
        let mut words = ops.split_whitespace();
        let head = words.next().ok_or_else(|| err("missing opcode".into()))?;
        let ints = |words: std::str::SplitWhitespace<'_>| -> Result<Vec<usize>, ParseError> {
            words
                .map(|w| w.parse::<usize>().map_err(|_| err(format!("bad integer {w:?}"))))
                .collect()
        };

        if head == "QUBITS" {
            if circuit.is_some() {
                return Err(err("duplicate QUBITS header".into()));
            }
            let v = ints(words)?;
            if v.len() != 1 || noise_part.is_some() {
                return Err(err("QUBITS takes one integer".into()));
            }
            circuit = Some(CircuitIR::new(v[0]));
            continue;
        }
        let c = circuit.as_mut().ok_or_else(|| err("missing QUBITS header".into()))?;
        match head {
            "DETECTOR" | "OBSERVABLE" => {
                if noise_part.is_some() {
                    return Err(err(format!("{head} takes no noise")));
                }
                let v = ints(words)?;
                if head == "DETECTOR" {
                    c.detectors.push(v);
                } else {
                    c.observable = v;
                }
            }
            _ => {
                let gate = Gate::from_name(head).ok_or_else(|| err(format!("unknown opcode {head:?}")))?;
                let targets = ints(words)?
                    .into_iter()
                    .map(|t| u32::try_from(t).map_err(|_| err("target too large".into())))
                    .collect::<Result<Vec<u32>, _>>()?;
                for &t in &targets {
                    if t as usize >= c.num_qubits {
                        return Err(err(format!("qubit {t} out of range")));
                    }
                }
                if gate == Gate::CX && targets.len() % 2 != 0 {
                    return Err(err("CX needs target pairs".into()));
                }
                let noise = noise_part.map(|n| parse_noise(n).map_err(err)).transpose()?;
                c.instructions.push(Instruction { gate, targets, noise });
            }
        }
    }
    let c = circuit.ok_or(ParseError { line: 0, message: "missing QUBITS header".into() })?;
    let count = c.num_measurements();
    for m in c.detectors.iter().flatten().chain(&c.observable) {
        if *m >= count {
            return Err(ParseError { line: 0, message: format!("measurement {m} does not exist") });
        }
    }
    Ok(c)
}

fn parse_noise(s: &str) -> Result<Noise, String> {
    let mut words = s.split_whitespace();
    let name = words.next().ok_or("empty noise annotation")?;
    let vals: Vec<f64> = words
        .map(|w| w.parse::<f64>().map_err(|_| format!("bad probability {w:?}")))
        .collect::<Result<_, _>>()?;
    if vals.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err("probability outside [0, 1]".into());
    }
    let want = if name == "PAULI1" { 3 } else { 1 };
    if vals.len() != want {
        return Err(format!("{name} takes {want} argument(s)"));
    }
    Ok(match name {
        "DEP1" => Noise::Dep1(vals[0]),
        "DEP2" => Noise::Dep2(vals[0]),
        "FLIP" => Noise::Flip(vals[0]),
        "PAULI1" => Noise::Pauli1 { px: vals[0], py: vals[1], pz: vals[2] },
        _ => return Err(format!("unknown noise {name:?}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_circuit_is_header_only() {
        let text = serialize(&CircuitIR::new(0));
        assert_eq!(text, "QUBITS 0\n");
        assert_eq!(parse(&text).unwrap(), CircuitIR::new(0));
    }

    #[test]
    fn bell_snippet() {
        let text = "QUBITS 2\nRZ 0 1\nH 0 !DEP1 0.001\nCX 0 1 !DEP2 0.01\nMZ 0 1 !FLIP 0.001\nDETECTOR 0 1\n";
        let c = parse(text).unwrap();
        assert_eq!(c.instructions.len(), 4);
        assert_eq!(c.detectors, vec![vec![0, 1]]);
        assert_eq!(c.instructions[2].noise, Some(Noise::Dep2(0.01)));
        assert_eq!(parse(&serialize(&c)).unwrap(), c);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("QUBITS 2\nRZ 0\nFOO 1\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert_eq!(parse("RZ 0\n").unwrap_err().line, 1);
        assert_eq!(parse("QUBITS 2\nCX 0\n").unwrap_err().line, 2);
        assert_eq!(parse("QUBITS 2\nH 0 !DEP1 2\n").unwrap_err().line, 2);
        assert_eq!(parse("QUBITS 2\nH 5\n").unwrap_err().line, 2);
        assert!(parse("QUBITS 1\nMZ 0\nDETECTOR 1\n").is_err());
    }

    #[test]
    fn awkward_floats_round_trip() {
        let mut c = CircuitIR::new(1);
        let p = 0.1 + 0.2;
        c.instructions.push(
            Instruction::new(Gate::I, vec![0]).with_noise(Noise::Pauli1 { px: p, py: 1e-17, pz: 2.5e-3 / 3.0 }),
        );
        assert_eq!(parse(&serialize(&c)).unwrap(), c);
    }
}

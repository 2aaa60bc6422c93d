//! Symbolic check that every detector and the observable are deterministic
//! in the noiseless circuit.
//!
//! Runs a stabilizer tableau (with destabilizers) where each row's sign is an
//! affine GF(2) form over the outcomes of random measurements instead of a
//! single bit. A measurement record is then a form; a detector is
//! deterministic-zero iff the XOR of its records' forms is identically zero.

use super::{CircuitIR, Gate};

#[derive(Clone, PartialEq, Eq)]
struct Form {
    constant: bool,
    vars: Vec<u64>,
}

impl Form {
    fn zero(words: usize) -> Self {
        Form { constant: false, vars: vec![0; words] }
    }

    fn xor_assign(&mut self, other: &Form) {
        self.constant ^= other.constant;
        for (a, b) in self.vars.iter_mut().zip(&other.vars) {
            *a ^= b;
        }
    }

    fn is_zero(&self) -> bool {
        !self.constant && self.vars.iter().all(|&w| w == 0)
    }
}

struct Tableau {
    n: usize,
    x: Vec<Vec<bool>>,
    z: Vec<Vec<bool>>,
    sign: Vec<Form>,
    words: usize,
    next_var: usize,
}

/// Exponent of i contributed when multiplying single-qubit Paulis, as in
/// the Aaronson–Gottesman `g` function.
fn g(x1: bool, z1: bool, x2: bool, z2: bool) -> i32 {
    match (x1, z1) {
        (false, false) => 0,
        (true, true) => z2 as i32 - x2 as i32,
        (true, false) => z2 as i32 * (2 * x2 as i32 - 1),
        (false, true) => x2 as i32 * (1 - 2 * z2 as i32),
    }
}

impl Tableau {
    fn new(n: usize, vars: usize) -> Self {
        let words = vars.div_ceil(64).max(1);
        let mut x = vec![vec![false; n]; 2 * n];
        let mut z = vec![vec![false; n]; 2 * n];
        for q in 0..n {
            x[q][q] = true;
            z[n + q][q] = true;
        }
        Tableau { n, x, z, sign: vec![Form::zero(words); 2 * n], words, next_var: 0 }
    }

    fn h(&mut self, q: usize) {
        for r in 0..2 * self.n {
            if self.x[r][q] && self.z[r][q] {
                self.sign[r].constant ^= true;
            }
            let t = self.x[r][q];
            self.x[r][q] = self.z[r][q];
            self.z[r][q] = t;
        }
    }

    fn cx(&mut self, a: usize, b: usize) {
        for r in 0..2 * self.n {
            let (xa, za, xb, zb) = (self.x[r][a], self.z[r][a], self.x[r][b], self.z[r][b]);
            if xa && zb && (xb == za) {
                self.sign[r].constant ^= true;
            }
            self.x[r][b] = xb ^ xa;
            self.z[r][a] = za ^ zb;
        }
    }

    /// Row `h` ← row `h` · row `i`.
    fn rowsum(&mut self, h: usize, i: usize) {
        let mut e = 0i32;
        for q in 0..self.n {
            e += g(self.x[i][q], self.z[i][q], self.x[h][q], self.z[h][q]);
        }
        let e = e.rem_euclid(4);
        // destabilizer signs are never read; only stabilizer products stay Hermitian
        debug_assert!(h < self.n || e % 2 == 0);
        let src = self.sign[i].clone();
        self.sign[h].xor_assign(&src);
        if e == 2 {
            self.sign[h].constant ^= true;
        }
        for q in 0..self.n {
            self.x[h][q] ^= self.x[i][q];
            self.z[h][q] ^= self.z[i][q];
        }
    }

    fn measure(&mut self, q: usize) -> Form {
        let n = self.n;
        if let Some(p) = (n..2 * n).find(|&r| self.x[r][q]) {
            for r in 0..2 * n {
                if r != p && self.x[r][q] {
                    self.rowsum(r, p);
                }
            }
            self.x[p - n] = self.x[p].clone();
            self.z[p - n] = self.z[p].clone();
            self.sign[p - n] = self.sign[p].clone();
            self.x[p].iter_mut().for_each(|b| *b = false);
            self.z[p].iter_mut().for_each(|b| *b = false);
            self.z[p][q] = true;
            let mut f = Form::zero(self.words);
            let v = self.next_var;
            self.next_var += 1;
            f.vars[v / 64] |= 1 << (v % 64);
            self.sign[p] = f.clone();
            f
        } else {
            // accumulate into a scratch row appended at the end
            self.x.push(vec![false; n]);
            self.z.push(vec![false; n]);
            self.sign.push(Form::zero(self.words));
            let scratch = 2 * n;
            for r in 0..n {
                if self.x[r][q] {
                    self.rowsum(scratch, r + n);
                }
            }
            self.x.pop();
            self.z.pop();
            self.sign.pop().unwrap()
        }
    }

    fn reset_z(&mut self, q: usize) {
        let outcome = self.measure(q);
        // conditional X on q flips every row with a Z component there
        for r in 0..2 * self.n {
            if self.z[r][q] {
                self.sign[r].xor_assign(&outcome);
            }
        }
    }
}

/// True iff, with all noise stripped, every detector and the observable are
/// identically zero.
pub fn check_deterministic(circuit: &CircuitIR) -> bool {
    if circuit.validate().is_err() {
        return false;
    }
    let vars: usize = circuit
        .instructions
        .iter()
        .filter(|i| matches!(i.gate, Gate::MZ | Gate::RZ | Gate::RX))
        .map(|i| i.targets.len())
        .sum();
    let mut tab = Tableau::new(circuit.num_qubits, vars);
    let mut records: Vec<Form> = Vec::with_capacity(circuit.num_measurements());
    for ins in &circuit.instructions {
        match ins.gate {
            Gate::I => {}
            Gate::H => ins.targets.iter().for_each(|&q| tab.h(q as usize)),
            Gate::CX => ins.targets.chunks(2).for_each(|p| tab.cx(p[0] as usize, p[1] as usize)),
            Gate::RZ => ins.targets.iter().for_each(|&q| tab.reset_z(q as usize)),
            Gate::RX => {
                for &q in &ins.targets {
                    tab.h(q as usize);
                    tab.reset_z(q as usize);
                    tab.h(q as usize);
                }
            }
            Gate::MZ => {
                for &q in &ins.targets {
                    records.push(tab.measure(q as usize));
                }
            }
        }
    }
    let parity = |set: &[usize]| {
        let mut f = Form::zero(tab.words);
        for &m in set {
            f.xor_assign(&records[m]);
        }
        f.is_zero()
    };
    circuit.detectors.iter().all(|d| parity(d)) && parity(&circuit.observable)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse;

    #[test]
    fn bell_pair_parities() {
        let ok = parse("QUBITS 2\nRZ 0 1\nH 0\nCX 0 1\nMZ 0 1\nDETECTOR 0 1\n").unwrap();
        assert!(check_deterministic(&ok));
        let random = parse("QUBITS 2\nRZ 0 1\nH 0\nCX 0 1\nMZ 0 1\nDETECTOR 0\n").unwrap();
        assert!(!check_deterministic(&random));
    }

    #[test]
    fn reset_after_random_measurement() {
        let c = parse("QUBITS 1\nRX 0\nMZ 0\nRZ 0\nMZ 0\nDETECTOR 1\n").unwrap();
        assert!(check_deterministic(&c));
        let c = parse("QUBITS 1\nRX 0\nMZ 0\nMZ 0\nDETECTOR 0 1\n").unwrap();
        assert!(check_deterministic(&c));
    }
}

//! Triangular 6.6.6 color-code patches.
//!
//! The patch lives on a triangular point lattice in axial coordinates
//! `(i, j)` with `i, j >= 0` and `i + j <= 3(d-1)/2`. Points whose class
//! `(i - j) mod 3` equals 1 are hexagon centres (faces); every other point is
//! a data qubit. Face colour is `i mod 3`, which never repeats between
//! adjacent hexagons. The bottom edge (`j = 0`) touches no red face and carries
//! the logical operators.

use std::fmt::{self, Write as _};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("invalid code distance {0}: must be odd and at least 3")]
    InvalidDistance(usize),
}

/// Neighbour offsets in counter-clockwise order (0°, 60°, ..., 300°).
const RING: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Color {
    Red,
    Green,
    Blue,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Red, Color::Green, Color::Blue];

    pub fn index(self) -> usize {
        match self {
            Color::Red => 0,
            Color::Green => 1,
            Color::Blue => 2,
        }
    }

    pub fn from_index(i: usize) -> Color {
        Color::ALL[i % 3]
    }

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Axial coordinate on the triangular lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Axial {
    pub i: i32,
    pub j: i32,
}

impl Axial {
    pub fn new(i: i32, j: i32) -> Self {
        Axial { i, j }
    }

    /// Cartesian embedding with unit nearest-neighbour spacing.
    pub fn cartesian(self) -> (f64, f64) {
        let (i, j) = (self.i as f64, self.j as f64);
        (i + 0.5 * j, j * 3f64.sqrt() / 2.0)
    }

    fn offset(self, d: (i32, i32)) -> Axial {
        Axial::new(self.i + d.0, self.j + d.1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub id: usize,
    pub color: Color,
    pub center: Axial,
    /// Data qubits in CNOT time-label order: clockwise, starting from the
    /// qubit with the lowest `(y, x)` coordinate.
    pub qubits: Vec<usize>,
}

impl Face {
    pub fn weight(&self) -> usize {
        self.qubits.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorCodeLattice {
    pub distance: usize,
    /// Data-qubit coordinates, indexed by qubit id.
    pub data_qubits: Vec<Axial>,
    pub faces: Vec<Face>,
    /// `boundary_qubits[c]` holds the qubits that touch no face of colour `c`.
    pub boundary_qubits: [Vec<usize>; 3],
    pub logical_z_support: Vec<usize>,
    pub logical_x_support: Vec<usize>,
}

fn check_distance(d: usize) -> Result<(), LatticeError> {
    if d < 3 || d % 2 == 0 {
        return Err(LatticeError::InvalidDistance(d));
    }
    Ok(())
}

/// Data-qubit count `(3d² + 1) / 4` of a distance-`d` triangular patch.
pub fn data_qubit_count(d: usize) -> Result<usize, LatticeError> {
    check_distance(d)?;
    Ok((3 * d * d + 1) / 4)
}

/// Same formula without validation; `d = 1` gives the single-qubit patch.
pub(crate) fn patch_size(d: usize) -> usize {
    (3 * d * d + 1) / 4
}

/// Side length of the axial triangle that hosts a distance-`d` patch.
pub(crate) fn side_length(d: usize) -> i32 {
    (3 * (d as i32 - 1)) / 2
}

fn is_center(p: Axial) -> bool {
    (p.i - p.j).rem_euclid(3) == 1
}

pub fn build_lattice(d: usize) -> Result<ColorCodeLattice, LatticeError> {
    check_distance(d)?;
    let side = side_length(d);
    let inside = |p: Axial| p.i >= 0 && p.j >= 0 && p.i + p.j <= side;

    let mut data_qubits = Vec::new();
    let mut centers = Vec::new();
    for j in 0..=side {
        for i in 0..=(side - j) {
            let p = Axial::new(i, j);
            if is_center(p) {
                centers.push(p);
            } else {
                data_qubits.push(p);
            }
        }
    }
    let index_of = |p: Axial| data_qubits.binary_search_by(|q| (q.j, q.i).cmp(&(p.j, p.i))).ok();

    let faces: Vec<Face> = centers
        .iter()
        .enumerate()
        .map(|(id, &c)| {
            let present: Vec<usize> = (0..6).filter(|&k| inside(c.offset(RING[k]))).collect();
            // lowest (y, x): smallest j, then smallest i
            let start = *present
                .iter()
                .min_by_key(|&&k| {
                    let p = c.offset(RING[k]);
                    (p.j, p.i)
                })
                .expect("every face has neighbours");
            let qubits = (0..6)
                .map(|step| (start + 6 - step) % 6)
                .filter(|k| present.contains(k))
                .map(|k| index_of(c.offset(RING[k])).expect("neighbour is a data qubit"))
                .collect();
            Face {
                id,
                color: Color::from_index(c.i.rem_euclid(3) as usize),
                center: c,
                qubits,
            }
        })
        .collect();

    let mut touches = vec![[false; 3]; data_qubits.len()];
    for f in &faces {
        for &q in &f.qubits {
            touches[q][f.color.index()] = true;
        }
    }
    let boundary_qubits: [Vec<usize>; 3] = std::array::from_fn(|c| {
        (0..data_qubits.len()).filter(|&q| !touches[q][c]).collect()
    });
    let logical = boundary_qubits[Color::Red.index()].clone();

    Ok(ColorCodeLattice {
        distance: d,
        data_qubits,
        faces,
        boundary_qubits,
        logical_z_support: logical.clone(),
        logical_x_support: logical,
    })
}

impl ColorCodeLattice {
    pub fn num_data(&self) -> usize {
        self.data_qubits.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Faces containing each data qubit.
    pub fn faces_of_qubit(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_data()];
        for f in &self.faces {
            for &q in &f.qubits {
                out[q].push(f.id);
            }
        }
        out
    }

    pub fn qubit_at(&self, p: Axial) -> Option<usize> {
        self.data_qubits.iter().position(|&q| q == p)
    }

    /// Line-oriented text dump: `Q`, `F`, `LZ`, `LX` records.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (q, p) in self.data_qubits.iter().enumerate() {
            let _ = writeln!(s, "Q {} {} {}", q, p.i, p.j);
        }
        for f in &self.faces {
            let _ = write!(s, "F {} {}", f.id, f.color);
            for q in &f.qubits {
                let _ = write!(s, " {q}");
            }
            s.push('\n');
        }
        for (tag, support) in [("LZ", &self.logical_z_support), ("LX", &self.logical_x_support)] {
            s.push_str(tag);
            for q in support {
                let _ = write!(s, " {q}");
            }
            s.push('\n');
        }
        s
    }
}

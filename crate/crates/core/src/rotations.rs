//! Single-qubit rotation algebra and the 24-element Clifford group.
//!
//! Every Clifford is stored as `Z(post) · core · Z(pre)` where the core is the
//! only rotation that is not about the z-axis. z-rotations are frame shifts of
//! zero duration; all timing and noise coupling happens in the core.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::Mul;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// A rotation by `angle` about the unit vector `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation {
    pub axis: [f64; 3],
    pub angle: f64,
}

impl Rotation {
    pub fn new(axis: [f64; 3], angle: f64) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidRotation(format!("axis norm {norm} is not 1")));
        }
        if !(angle > -2.0 * PI && angle <= 4.0 * PI) {
            return Err(Error::InvalidRotation(format!("angle {angle} outside (-2π, 4π]")));
        }
        Ok(Self { axis, angle })
    }

    pub fn x(angle: f64) -> Self {
        Self { axis: [1.0, 0.0, 0.0], angle }
    }

    pub fn y(angle: f64) -> Self {
        Self { axis: [0.0, 1.0, 0.0], angle }
    }

    pub fn z(angle: f64) -> Self {
        Self { axis: [0.0, 0.0, 1.0], angle }
    }
}

/// `exp(-i θ n·σ / 2)`.
pub fn unitary_of(rotation: &Rotation) -> Unitary2 {
    let [nx, ny, nz] = rotation.axis;
    Unitary2::exp_pauli(
        rotation.angle * nx,
        rotation.angle * ny,
        rotation.angle * nz,
    )
}

/// A 2×2 complex matrix, row-major. Used for unitaries; equality is always
/// taken modulo global phase via [`Unitary2::fidelity`].
#[derive(Clone, Copy, PartialEq)]
pub struct Unitary2(pub [C64; 4]);

impl fmt::Debug for Unitary2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "[[{a:.6}, {b:.6}], [{c:.6}, {d:.6}]]")
    }
}

impl Unitary2 {
    pub const IDENTITY: Unitary2 = Unitary2([ONE, ZERO, ZERO, ONE]);

    /// `exp(-i (a·σ) / 2)` for a real 3-vector `a`.
    #[inline]
    pub fn exp_pauli(ax: f64, ay: f64, az: f64) -> Self {
        let norm = (ax * ax + ay * ay + az * az).sqrt();
        if norm == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (0.5 * norm).sin_cos();
        let k = s / norm;
        // c·I − i·k·(ax σx + ay σy + az σz)
        Unitary2([
            C64::new(c, -k * az),
            C64::new(-k * ay, -k * ax),
            C64::new(k * ay, -k * ax),
            C64::new(c, k * az),
        ])
    }

    /// Frame shift `exp(-i φ σz / 2)`.
    #[inline]
    pub fn rz(phi: f64) -> Self {
        let (s, c) = (0.5 * phi).sin_cos();
        Unitary2([C64::new(c, -s), ZERO, ZERO, C64::new(c, s)])
    }

    pub fn dagger(&self) -> Self {
        let [a, b, c, d] = self.0;
        Unitary2([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    pub fn trace(&self) -> C64 {
        self.0[0] + self.0[3]
    }

    /// Trace fidelity `|Tr(A†B)| / 2`; 1 iff equal up to global phase.
    pub fn fidelity(&self, other: &Unitary2) -> f64 {
        (self.dagger() * *other).trace().norm() / 2.0
    }

    /// `1 − fidelity`, with the square-root sensitivity near identity removed.
    pub fn infidelity(&self, other: &Unitary2) -> f64 {
        let f = self.fidelity(other);
        1.0 - f * f
    }

    /// Pauli coefficients `c_k = Tr(σ_k M) / 2`.
    pub fn pauli_components(&self) -> [C64; 3] {
        let [a, b, c, d] = self.0;
        let i = C64::new(0.0, 1.0);
        [(b + c) / 2.0, i * (b - c) / 2.0, (a - d) / 2.0]
    }

    /// The SO(3) matrix `O` with `U (v·σ) U† = (O v)·σ`.
    pub fn so3(&self) -> [[f64; 3]; 3] {
        let paulis = [pauli(0), pauli(1), pauli(2)];
        let mut out = [[0.0; 3]; 3];
        for (col, p) in paulis.iter().enumerate() {
            let conj = *self * *p * self.dagger();
            let comps = conj.pauli_components();
            for row in 0..3 {
                out[row][col] = comps[row].re;
            }
        }
        out
    }

    /// Rotation vector `a` with `self ∝ exp(-i a·σ/2)`, `|a| ≤ π` after fixing
    /// the global phase so the identity component is real and non-negative.
    pub fn rotation_vector(&self) -> [f64; 3] {
        let tr = self.trace() / 2.0;
        let phase = if tr.norm() > 1e-300 { tr.conj() / tr.norm() } else { ONE };
        let m = Unitary2(self.0.map(|z| z * phase));
        let comps = m.pauli_components();
        // m ≈ cos(|a|/2) I − i sin(|a|/2) n·σ  ⇒  comps = −i sin(|a|/2) n
        let v = [-comps[0].im, -comps[1].im, -comps[2].im];
        let s = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        let c = (m.trace() / 2.0).re;
        if s < 1e-300 {
            return [0.0; 3];
        }
        let half = s.atan2(c);
        let scale = 2.0 * half / s;
        [v[0] * scale, v[1] * scale, v[2] * scale]
    }

    pub fn unitarity_defect(&self) -> f64 {
        let p = self.dagger() * *self;
        let d = [p.0[0] - ONE, p.0[1], p.0[2], p.0[3] - ONE];
        d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Closest SU(2) element in Frobenius norm, for matrices already close to SU(2).
    pub fn project_su2(&self) -> Self {
        let [m00, m01, m10, m11] = self.0;
        let a = (m00 + m11.conj()) / 2.0;
        let b = (m01 - m10.conj()) / 2.0;
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let (a, b) = (a / n, b / n);
        Unitary2([a, b, -b.conj(), a.conj()])
    }

    /// `|⟨0|U|0⟩|²`.
    #[inline]
    pub fn survival(&self) -> f64 {
        self.0[0].norm_sqr()
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    #[inline]
    fn mul(self, rhs: Unitary2) -> Unitary2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = rhs.0;
        Unitary2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

pub(crate) fn pauli(k: usize) -> Unitary2 {
    match k {
        0 => Unitary2([ZERO, ONE, ONE, ZERO]),
        1 => Unitary2([ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO]),
        2 => Unitary2([ONE, ZERO, ZERO, -ONE]),
        _ => panic!("pauli index {k} out of range"),
    }
}

pub(crate) fn mat_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (row, o) in m.iter().zip(out.iter_mut()) {
        *o = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

pub(crate) fn mat_t_vec(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        *o = m[0][col] * v[0] + m[1][col] * v[1] + m[2][col] * v[2];
    }
    out
}

/// The single non-z rotation inside a Clifford.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Core {
    /// Identity realized as a π-duration idle.
    Wait,
    X90,
    Xm90,
    Y90,
    Ym90,
    X180,
    Y180,
    /// Pure z-rotation; no physical pulse.
    None,
}

/// Axis of a driven core rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreAxis {
    X,
    Y,
}

impl Core {
    pub const ALL: [Core; 8] = [
        Core::Wait,
        Core::X90,
        Core::Xm90,
        Core::Y90,
        Core::Ym90,
        Core::X180,
        Core::Y180,
        Core::None,
    ];

    /// Axis and signed angle for driven cores.
    pub fn target(self) -> Option<(CoreAxis, f64)> {
        match self {
            Core::X90 => Some((CoreAxis::X, FRAC_PI_2)),
            Core::Xm90 => Some((CoreAxis::X, -FRAC_PI_2)),
            Core::Y90 => Some((CoreAxis::Y, FRAC_PI_2)),
            Core::Ym90 => Some((CoreAxis::Y, -FRAC_PI_2)),
            Core::X180 => Some((CoreAxis::X, PI)),
            Core::Y180 => Some((CoreAxis::Y, PI)),
            Core::Wait | Core::None => None,
        }
    }

    pub fn rotation(self) -> Rotation {
        match self.target() {
            Some((CoreAxis::X, angle)) => Rotation::x(angle),
            Some((CoreAxis::Y, angle)) => Rotation::y(angle),
            None => Rotation::z(0.0),
        }
    }

    pub fn unitary(self) -> Unitary2 {
        unitary_of(&self.rotation())
    }

    pub fn is_half_turn(self) -> bool {
        matches!(self, Core::X180 | Core::Y180)
    }

    pub fn is_quarter_turn(self) -> bool {
        matches!(self, Core::X90 | Core::Xm90 | Core::Y90 | Core::Ym90)
    }
}

/// Clifford label in `1..=24`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct CliffordIndex(u8);

impl CliffordIndex {
    pub const IDENTITY: CliffordIndex = CliffordIndex(1);

    pub fn new(label: u8) -> Result<Self> {
        if (1..=24).contains(&label) {
            Ok(Self(label))
        } else {
            Err(Error::InvalidClifford(label as usize))
        }
    }

    pub(crate) fn from_slot(slot: usize) -> Self {
        debug_assert!(slot < 24);
        Self(slot as u8 + 1)
    }

    pub fn label(self) -> u8 {
        self.0
    }

    /// Zero-based position in the table.
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }

    pub fn all() -> impl Iterator<Item = CliffordIndex> {
        (1..=24u8).map(CliffordIndex)
    }
}

impl TryFrom<u8> for CliffordIndex {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CliffordIndex> for u8 {
    fn from(c: CliffordIndex) -> u8 {
        c.0
    }
}

impl fmt::Display for CliffordIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliffordElement {
    pub index: CliffordIndex,
    pub phi_pre: f64,
    pub core: Core,
    pub phi_post: f64,
    #[serde(skip)]
    pub unitary: Unitary2,
}

impl CliffordElement {
    fn new(slot: usize, phi_pre: f64, core: Core, phi_post: f64) -> Self {
        let unitary = Unitary2::rz(phi_post) * core.unitary() * Unitary2::rz(phi_pre);
        Self { index: CliffordIndex::from_slot(slot), phi_pre, core, phi_post, unitary }
    }

    /// Rebuilds the unitary from the stored decomposition.
    pub fn decomposed_unitary(&self) -> Unitary2 {
        Unitary2::rz(self.phi_post) * unitary_of(&self.core.rotation()) * Unitary2::rz(self.phi_pre)
    }
}

#[derive(Debug)]
pub struct CliffordTable {
    elements: Vec<CliffordElement>,
    cayley: [[u8; 24]; 24],
    inverse: [u8; 24],
    so3: Vec<[[f64; 3]; 3]>,
}

impl CliffordTable {
    fn build() -> Result<Self> {
        let quarter = [0.0, FRAC_PI_2, PI, -FRAC_PI_2];
        let mut specs: Vec<(f64, Core, f64)> = vec![(0.0, Core::Wait, 0.0)];
        for &post in &quarter[1..] {
            specs.push((0.0, Core::None, post));
        }
        for (core, post) in [
            (Core::X180, 0.0),
            (Core::Y180, 0.0),
            (Core::X180, FRAC_PI_2),
            (Core::Y180, FRAC_PI_2),
        ] {
            specs.push((0.0, core, post));
        }
        for core in [Core::X90, Core::Xm90, Core::Y90, Core::Ym90] {
            for &post in &quarter {
                specs.push((0.0, core, post));
            }
        }
        let elements: Vec<CliffordElement> = specs
            .into_iter()
            .enumerate()
            .map(|(slot, (pre, core, post))| CliffordElement::new(slot, pre, core, post))
            .collect();
        if elements.len() != 24 {
            return Err(Error::CliffordTable(format!("{} elements", elements.len())));
        }
        for a in 0..24 {
            for b in (a + 1)..24 {
                if elements[a].unitary.fidelity(&elements[b].unitary) > 1.0 - 1e-9 {
                    return Err(Error::CliffordTable(format!("elements {a} and {b} coincide")));
                }
            }
        }
        let lookup = |u: &Unitary2| -> Result<usize> {
            elements
                .iter()
                .position(|e| e.unitary.fidelity(u) > 1.0 - 1e-9)
                .ok_or_else(|| Error::CliffordTable("product left the group".into()))
        };
        let mut cayley = [[0u8; 24]; 24];
        for a in 0..24 {
            for b in 0..24 {
                // a acts first
                let prod = elements[b].unitary * elements[a].unitary;
                cayley[a][b] = lookup(&prod)? as u8;
            }
        }
        let mut inverse = [0u8; 24];
        for a in 0..24 {
            let inv = (0..24)
                .filter(|&b| cayley[a][b] == 0)
                .collect::<Vec<_>>();
            if inv.len() != 1 {
                return Err(Error::CliffordTable(format!("element {a} has {} inverses", inv.len())));
            }
            inverse[a] = inv[0] as u8;
        }
        let census = |pred: fn(Core) -> bool| elements.iter().filter(|e| pred(e.core)).count();
        let counts = (
            census(|c| c == Core::Wait),
            census(Core::is_half_turn),
            census(Core::is_quarter_turn),
            census(|c| c == Core::None),
        );
        if counts != (1, 4, 16, 3) {
            return Err(Error::CliffordTable(format!("census {counts:?}")));
        }
        let so3 = elements.iter().map(|e| round_so3(e.unitary.so3())).collect();
        Ok(Self { elements, cayley, inverse, so3 })
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn get(&self, index: CliffordIndex) -> &CliffordElement {
        &self.elements[index.slot()]
    }

    /// `c` with `U_c ∝ U_b · U_a` (`a` acts first).
    pub fn compose(&self, a: CliffordIndex, b: CliffordIndex) -> CliffordIndex {
        CliffordIndex::from_slot(self.cayley[a.slot()][b.slot()] as usize)
    }

    pub fn inverse(&self, a: CliffordIndex) -> CliffordIndex {
        CliffordIndex::from_slot(self.inverse[a.slot()] as usize)
    }

    /// Exact signed-permutation SO(3) matrix of an element.
    pub fn so3(&self, index: CliffordIndex) -> &[[f64; 3]; 3] {
        &self.so3[index.slot()]
    }

    /// Gate that returns the product of `prefix` to the identity.
    pub fn inverting_gate(&self, prefix: &[CliffordIndex]) -> CliffordIndex {
        let net = prefix
            .iter()
            .fold(CliffordIndex::IDENTITY, |acc, &g| self.compose(acc, g));
        self.inverse(net)
    }

    pub fn generate_sequence<R: Rng + ?Sized>(&self, gates: usize, rng: &mut R) -> Result<CliffordSequence> {
        if gates < 2 {
            return Err(Error::SequenceTooShort(gates));
        }
        let mut indices: Vec<CliffordIndex> = (0..gates - 1)
            .map(|_| CliffordIndex::from_slot(rng.random_range(0..24)))
            .collect();
        indices.push(self.inverting_gate(&indices));
        Ok(CliffordSequence { indices })
    }
}

fn round_so3(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    m.map(|row| row.map(|v| v.round()))
}

/// The process-wide Clifford table, built on first use.
pub fn clifford_table() -> &'static CliffordTable {
    static TABLE: OnceLock<CliffordTable> = OnceLock::new();
    TABLE.get_or_init(|| CliffordTable::build().expect("Clifford table construction"))
}

/// Ordered Clifford labels; the last gate inverts the product of the rest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CliffordSequence {
    indices: Vec<CliffordIndex>,
}

impl CliffordSequence {
    /// Wraps raw labels, checking that the sequence closes to the identity.
    pub fn from_indices(indices: Vec<CliffordIndex>) -> Result<Self> {
        let table = clifford_table();
        let net = indices
            .iter()
            .fold(CliffordIndex::IDENTITY, |acc, &g| table.compose(acc, g));
        if net != CliffordIndex::IDENTITY {
            return Err(Error::SequenceNotIdentity);
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[CliffordIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Ideal matrix product, later gates multiplying from the left.
    pub fn ideal_product(&self) -> Unitary2 {
        let table = clifford_table();
        let mut acc = Unitary2::IDENTITY;
        for (j, &g) in self.indices.iter().enumerate() {
            acc = table.get(g).unitary * acc;
            if j % 256 == 255 {
                acc = acc.project_su2();
            }
        }
        acc
    }
}

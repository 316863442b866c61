//! The reference systems: nearest-neighbor hopping / Heisenberg-XXX chains
//! and the `T6` / `F4` Goldilocks cellular automata, each built as a layered
//! circuit of k-local gates plus the matching edit map set.
//!
//! Boundary cells of the automata are handled by *reduced windows*: a window
//! that would extend past the chain is clipped, and the missing neighbors
//! are frozen to `|0>` by simply omitting them from the activation count.
//! This keeps the state length at `n` while reproducing fixed-zero boundary
//! conditions.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;

use crate::basis::{BasisState, LocalWindow};
use crate::editmap::{build_edit_map, EditMap, EditMapSet, LocalUnitary, DEFAULT_BITIZE_TOL};
use crate::{Error, Result};

/// Model selector used across the CLI and experiment presets.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ModelKind {
    /// Chain of partial iSWAP gates (the XX+YY hopping Trotterization).
    Hopping,
    /// Heisenberg-XXX chain: iSWAP(theta) * ZZ(theta) per bond, even/odd layers.
    Heisenberg,
    /// Three-cell Goldilocks rule: Hadamard on a cell iff exactly one
    /// neighbor is set.
    T6,
    /// Five-cell Goldilocks rule: Hadamard on a cell iff exactly two of the
    /// four (next-)nearest neighbors are set.
    F4,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Hopping => "hop",
            ModelKind::Heisenberg => "heis",
            ModelKind::T6 => "t6",
            ModelKind::F4 => "f4",
        }
    }

    /// Smallest chain the model is defined on.
    pub fn min_qubits(&self) -> u8 {
        match self {
            ModelKind::Hopping | ModelKind::Heisenberg => 2,
            ModelKind::T6 => 3,
            ModelKind::F4 => 5,
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hop" | "hopping" => Ok(ModelKind::Hopping),
            "heis" | "heisenberg" => Ok(ModelKind::Heisenberg),
            "t6" => Ok(ModelKind::T6),
            "f4" => Ok(ModelKind::F4),
            other => Err(Error::InvalidParameter(format!(
                "unknown model {other:?} (expected hop|heis|t6|f4)"
            ))),
        }
    }
}

/// Ordered layers of k-local gates. Gates within one layer commute (disjoint
/// targets with control-only overlaps); `step_cycle` lists which layers, in
/// which order, make up each discrete step, cycling when the circuit
/// alternates between step parities.
#[derive(Clone, Debug)]
pub struct Circuit {
    n: u8,
    gates: Vec<Arc<LocalUnitary>>,
    layers: Vec<Vec<usize>>,
    step_cycle: Vec<Vec<usize>>,
}

impl Circuit {
    pub fn new(
        n: u8,
        gates: Vec<LocalUnitary>,
        layers: Vec<Vec<usize>>,
        step_cycle: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if gates.is_empty() || layers.is_empty() || step_cycle.is_empty() {
            return Err(Error::InvalidParameter("circuit must have gates, layers and a step cycle".into()));
        }
        for g in &gates {
            g.window().validate_for(n)?;
        }
        for layer in &layers {
            for &gi in layer {
                if gi >= gates.len() {
                    return Err(Error::InvalidParameter(format!("layer references missing gate {gi}")));
                }
            }
        }
        for step in &step_cycle {
            for &li in step {
                if li >= layers.len() {
                    return Err(Error::InvalidParameter(format!("step cycle references missing layer {li}")));
                }
            }
        }
        Ok(Self { n, gates: gates.into_iter().map(Arc::new).collect(), layers, step_cycle })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn gates(&self) -> &[Arc<LocalUnitary>] {
        &self.gates
    }

    pub fn layers(&self) -> &[Vec<usize>] {
        &self.layers
    }

    pub fn step_cycle(&self) -> &[Vec<usize>] {
        &self.step_cycle
    }

    /// Layer indices applied (in order) at discrete step `j`.
    pub fn layers_for_step(&self, j: u64) -> &[usize] {
        &self.step_cycle[(j % self.step_cycle.len() as u64) as usize]
    }
}

/// A built model: its circuit, its edit maps, and any construction warnings
/// (degenerate gate parameters).
#[derive(Clone, Debug)]
pub struct Model {
    pub name: String,
    pub circuit: Circuit,
    pub maps: EditMapSet,
    pub warnings: Vec<String>,
}

/// Partial iSWAP: `exp(i theta (XX + YY) / 2)` on two qubits.
pub fn iswap_gate(theta: f64, window: LocalWindow) -> Result<LocalUnitary> {
    let (c, s) = (theta.cos(), theta.sin());
    let one = Complex64::ONE;
    let zero = Complex64::ZERO;
    let cc = Complex64::new(c, 0.0);
    let is = Complex64::new(0.0, s);
    // patterns: 0 = 00, 1 = 10, 2 = 01, 3 = 11 (bit j <-> window qubit j)
    let entries = vec![
        one, zero, zero, zero, //
        zero, cc, is, zero, //
        zero, is, cc, zero, //
        zero, zero, zero, one,
    ];
    LocalUnitary::new(format!("iswap({theta})"), window, entries)
}

/// Diagonal `exp(-i theta Z Z)` on two qubits.
pub fn zz_gate(theta: f64, window: LocalWindow) -> Result<LocalUnitary> {
    let minus = Complex64::from_polar(1.0, -theta);
    let plus = Complex64::from_polar(1.0, theta);
    let zero = Complex64::ZERO;
    let entries = vec![
        minus, zero, zero, zero, //
        zero, plus, zero, zero, //
        zero, zero, plus, zero, //
        zero, zero, zero, minus,
    ];
    LocalUnitary::new(format!("zz({theta})"), window, entries)
}

/// The Heisenberg-XXX bond gate `iSWAP(theta) * ZZ(theta)`, which equals
/// `exp(i theta (XX + YY + ZZ') )` up to diagonal phase conventions since
/// the two factors commute.
pub fn heisenberg_bond_gate(theta: f64, window: LocalWindow) -> Result<LocalUnitary> {
    let iswap = iswap_gate(theta, window.clone())?;
    let zz = zz_gate(theta, window.clone())?;
    // zz is diagonal, so the product just scales columns
    let mut entries = Vec::with_capacity(16);
    for r in 0..4 {
        for c in 0..4 {
            entries.push(iswap.entry(r, c) * zz.entry(c, c));
        }
    }
    LocalUnitary::new(format!("heis({theta})"), window, entries)
}

/// Projector-controlled Hadamard: applies `H` to the cell at `center_pos`
/// (a bit position within the window) iff exactly `threshold` of the cells
/// at `neighbor_pos` are set, and acts as identity otherwise. Neighbors
/// missing from a clipped boundary window are implicitly frozen to 0.
pub fn goldilocks_gate(
    label: impl Into<String>,
    window: LocalWindow,
    center_pos: usize,
    neighbor_pos: &[usize],
    threshold: u32,
) -> Result<LocalUnitary> {
    let k = window.k();
    if center_pos >= k || neighbor_pos.iter().any(|&p| p >= k || p == center_pos) {
        return Err(Error::InvalidParameter("goldilocks cell positions out of range".into()));
    }
    let dim = 1usize << k;
    let mut entries = vec![Complex64::ZERO; dim * dim];
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let center_bit = 1u32 << center_pos;
    for col in 0..dim as u32 {
        let active = neighbor_pos.iter().filter(|&&p| col >> p & 1 == 1).count() as u32;
        if active == threshold {
            let c0 = (col & !center_bit) as usize;
            let c1 = (col | center_bit) as usize;
            entries[c0 * dim + col as usize] = h;
            entries[c1 * dim + col as usize] = if col & center_bit == 0 { h } else { -h };
        } else {
            entries[col as usize * dim + col as usize] = Complex64::ONE;
        }
    }
    LocalUnitary::new(label, window, entries)
}

fn degenerate_theta_warnings(theta: f64) -> Vec<String> {
    let mut warnings = Vec::new();
    if theta.sin().abs() < 1e-9 || theta.cos().abs() < 1e-9 {
        let w = format!(
            "theta = {theta} is a degenerate gate parameter: matrix entries vanish and the \
             edit map loses edges; use a generic angle or a union over angles"
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    warnings
}

fn maps_for_gates(gates: &[LocalUnitary], n: u8) -> Result<EditMapSet> {
    let maps: Vec<EditMap> = gates
        .iter()
        .map(|g| build_edit_map(g, DEFAULT_BITIZE_TOL))
        .collect::<Result<_>>()?;
    EditMapSet::new(maps, n)
}

/// Staircase of partial iSWAPs `iSWAP(n-2,n-1) ... iSWAP(1,2) iSWAP(0,1)`,
/// one gate per layer, applied right to left.
pub fn build_hopping(n: u8, theta: f64) -> Result<Model> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("hopping chain needs n >= 2, got {n}")));
    }
    let warnings = degenerate_theta_warnings(theta);
    let gates: Vec<LocalUnitary> = (0..n - 1)
        .map(|i| iswap_gate(theta, LocalWindow::range(i, i + 1)?))
        .collect::<Result<_>>()?;
    let maps = maps_for_gates(&gates, n)?;
    // rightmost bond acts first
    let layers: Vec<Vec<usize>> = (0..n as usize - 1).rev().map(|i| vec![i]).collect();
    let step_cycle = vec![(0..layers.len()).collect()];
    Ok(Model {
        name: "hop".into(),
        circuit: Circuit::new(n, gates, layers, step_cycle)?,
        maps,
        warnings,
    })
}

/// Heisenberg-XXX chain: one step is the even-bond layer then the odd-bond
/// layer of `iSWAP(theta) * ZZ(theta)`.
pub fn build_heisenberg(n: u8, theta: f64) -> Result<Model> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("heisenberg chain needs n >= 2, got {n}")));
    }
    let warnings = degenerate_theta_warnings(theta);
    let gates: Vec<LocalUnitary> = (0..n - 1)
        .map(|i| heisenberg_bond_gate(theta, LocalWindow::range(i, i + 1)?))
        .collect::<Result<_>>()?;
    let maps = maps_for_gates(&gates, n)?;
    let even: Vec<usize> = (0..n as usize - 1).filter(|i| i % 2 == 0).collect();
    let odd: Vec<usize> = (0..n as usize - 1).filter(|i| i % 2 == 1).collect();
    let mut layers = vec![even];
    if !odd.is_empty() {
        layers.push(odd);
    }
    let step_cycle = vec![(0..layers.len()).collect()];
    Ok(Model {
        name: "heis".into(),
        circuit: Circuit::new(n, gates, layers, step_cycle)?,
        maps,
        warnings,
    })
}

/// The `T6` gate for the cell at `center`, clipping the window at the chain
/// boundary.
fn t6_gate(n: u8, center: u8) -> Result<LocalUnitary> {
    let lo = center.saturating_sub(1);
    let hi = (center + 1).min(n - 1);
    let window = LocalWindow::range(lo, hi)?;
    let center_pos = (center - lo) as usize;
    let neighbor_pos: Vec<usize> = (0..window.k()).filter(|&p| p != center_pos).collect();
    goldilocks_gate(format!("t6[{center}]"), window, center_pos, &neighbor_pos, 1)
}

/// `T6` cellular automaton: one step is the even-center layer then the
/// odd-center layer; cells beyond the chain are frozen to `|0>`.
pub fn build_t6(n: u8) -> Result<Model> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("t6 chain needs n >= 3, got {n}")));
    }
    let gates: Vec<LocalUnitary> = (0..n).map(|c| t6_gate(n, c)).collect::<Result<_>>()?;
    let maps = maps_for_gates(&gates, n)?;
    let even: Vec<usize> = (0..n as usize).filter(|c| c % 2 == 0).collect();
    let odd: Vec<usize> = (0..n as usize).filter(|c| c % 2 == 1).collect();
    let layers = vec![even, odd];
    Ok(Model {
        name: "t6".into(),
        circuit: Circuit::new(n, gates, layers, vec![vec![0, 1]])?,
        maps,
        warnings: Vec::new(),
    })
}

/// The `F4` gate for the cell at `center`; the five-cell window must fit
/// the chain.
fn f4_gate(center: u8) -> Result<LocalUnitary> {
    let window = LocalWindow::range(center - 2, center + 2)?;
    goldilocks_gate(format!("f4[{center}]"), window, 2, &[0, 1, 3, 4], 2)
}

/// `F4` cellular automaton with nearest- and next-nearest-neighbor cells.
///
/// Gates sit at every center whose five-cell window fits the chain
/// (centers `2..=n-3`); the outermost two cells on each side participate
/// only as controls, which is what produces the model's characteristic
/// subspace scaling. The three sub-layers group centers by residue mod 3
/// (`2,5,8,...`, `3,6,9,...`, `4,7,10,...`) so gates within a sub-layer
/// overlap only on controls; even steps apply them in that order and odd
/// steps swap the first two.
pub fn build_f4(n: u8) -> Result<Model> {
    if n < 5 {
        return Err(Error::InvalidParameter(format!("f4 chain needs n >= 5, got {n}")));
    }
    let centers: Vec<u8> = (2..=n - 3).collect();
    let gates: Vec<LocalUnitary> = centers.iter().map(|&c| f4_gate(c)).collect::<Result<_>>()?;
    let maps = maps_for_gates(&gates, n)?;
    let residue = |r: u8| -> Vec<usize> {
        centers
            .iter()
            .enumerate()
            .filter(|(_, &c)| c % 3 == r)
            .map(|(i, _)| i)
            .collect()
    };
    let mut layers = Vec::new();
    let mut layer_of = [usize::MAX; 3];
    for r in [2u8, 0, 1] {
        let members = residue(r);
        if !members.is_empty() {
            layer_of[r as usize] = layers.len();
            layers.push(members);
        }
    }
    let order = |rs: [u8; 3]| -> Vec<usize> {
        rs.iter().map(|&r| layer_of[r as usize]).filter(|&l| l != usize::MAX).collect()
    };
    let step_cycle = vec![order([2, 0, 1]), order([0, 2, 1])];
    Ok(Model {
        name: "f4".into(),
        circuit: Circuit::new(n, gates, layers, step_cycle)?,
        maps,
        warnings: Vec::new(),
    })
}

/// Build a model by kind. `theta` applies to the hopping and Heisenberg
/// models and is ignored by the automata.
pub fn build(kind: ModelKind, n: u8, theta: f64) -> Result<Model> {
    match kind {
        ModelKind::Hopping => build_hopping(n, theta),
        ModelKind::Heisenberg => build_heisenberg(n, theta),
        ModelKind::T6 => build_t6(n),
        ModelKind::F4 => build_f4(n),
    }
}

/// The conventional initial state for each model: antiferromagnetic for the
/// spin chains, a single center flip for `T6`, two flips around the center
/// for `F4`.
pub fn default_initial_state(kind: ModelKind, n: u8) -> Result<BasisState> {
    if n > crate::basis::MAX_QUBITS {
        return Err(Error::TooManyQubits(n as u32));
    }
    let code = match kind {
        ModelKind::Hopping | ModelKind::Heisenberg => {
            let mut code = 0u64;
            for i in (0..n).step_by(2) {
                code |= 1 << i;
            }
            code
        }
        ModelKind::T6 => 1u64 << (n / 2),
        ModelKind::F4 => {
            let center = n / 2;
            if center == 0 || center + 1 >= n {
                return Err(Error::InvalidParameter(format!("f4 initial state needs n >= 3, got {n}")));
            }
            (1u64 << (center - 1)) | (1u64 << (center + 1))
        }
    };
    BasisState::new(code, n)
}

/// The 15-cell `F4` initial conditions whose subspaces exhibit false search
/// minima even at a search width of 9, deduplicated and in first-appearance
/// order.
pub fn rocky_initial_states() -> Vec<BasisState> {
    const KETS: [&str; 18] = [
        "001000011111111",
        "011100000001000",
        "011110101011111",
        "011110000010001",
        "011101000001000",
        "011000000101010",
        "001000011111111",
        "011100000001000",
        "011110101011111",
        "011110000010001",
        "011101000001000",
        "011000000101010",
        "111111101111100",
        "110111111110101",
        "111111101010111",
        "111100010111110",
        "110111111010001",
        "110101000000100",
    ];
    let mut seen = std::collections::HashSet::new();
    KETS.iter()
        .filter(|k| seen.insert(**k))
        .map(|k| BasisState::from_ket(k).expect("static ket strings are valid"))
        .collect()
}

/// On-disk schema for user-defined models: gates carry their own windows,
/// layers index gates, and the step cycle indexes layers.
#[derive(Deserialize)]
struct CustomModelFile {
    n: u8,
    gates: Vec<LocalUnitary>,
    layers: Vec<Vec<usize>>,
    step_cycle: Vec<Vec<usize>>,
    #[serde(default)]
    name: Option<String>,
}

/// Load a custom model from JSON. Gates within one layer are trusted to
/// commute; the edit maps are built from the gate matrices at the stated
/// bitize tolerance.
pub fn custom_from_json(text: &str, tol: f64) -> Result<Model> {
    let raw: CustomModelFile =
        serde_json::from_str(text).map_err(|e| Error::MalformedRecord(e.to_string()))?;
    let maps: Vec<EditMap> = raw
        .gates
        .iter()
        .map(|g| build_edit_map(g, tol))
        .collect::<Result<_>>()?;
    let maps = EditMapSet::new(maps, raw.n)?;
    let circuit = Circuit::new(raw.n, raw.gates, raw.layers, raw.step_cycle)?;
    Ok(Model {
        name: raw.name.unwrap_or_else(|| "custom".into()),
        circuit,
        maps,
        warnings: Vec::new(),
    })
}

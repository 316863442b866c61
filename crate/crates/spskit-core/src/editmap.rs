//! Construction of basis string edit maps from local unitary matrices, and
//! their application to basis states.
//!
//! A k-local unitary is *bitized* into a boolean adjacency matrix over its
//! 2^k local patterns (an entry is set wherever the matrix element of U or
//! U^H is nonzero), the adjacency is transitively closed by repeated boolean
//! squaring, and the resulting equivalence classes become the [`EditMap`]:
//! the set of local patterns a pattern can evolve into for *some* gate
//! parameter. Applying a map to an n-qubit state only rewrites the bits in
//! its window, so a whole set of maps ([`EditMapSet`]) acts as an implicit
//! edge generator over the 2^n basis states.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{extract_code, BasisState, LocalWindow};
use crate::{Error, Result};

/// Default threshold below which a matrix entry counts as structurally zero.
pub const DEFAULT_BITIZE_TOL: f64 = 1e-12;

/// Tolerance for the unitarity check on gate matrices.
pub const DEFAULT_UNITARITY_TOL: f64 = 1e-9;

/// A dense k-local unitary bound to the window of qubits it acts on.
///
/// Entry `(r, c)` is the amplitude from local pattern `c` to local pattern
/// `r`, in the pattern encoding of [`LocalWindow`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "LocalUnitaryFile", into = "LocalUnitaryFile")]
pub struct LocalUnitary {
    label: String,
    window: LocalWindow,
    dim: usize,
    entries: Vec<Complex64>,
}

impl LocalUnitary {
    /// Build and validate: `entries` is row-major of size `2^k x 2^k`, and
    /// must be unitary within [`DEFAULT_UNITARITY_TOL`].
    pub fn new(label: impl Into<String>, window: LocalWindow, entries: Vec<Complex64>) -> Result<Self> {
        Self::with_tol(label, window, entries, DEFAULT_UNITARITY_TOL)
    }

    /// As [`LocalUnitary::new`] with an explicit unitarity tolerance.
    pub fn with_tol(
        label: impl Into<String>,
        window: LocalWindow,
        entries: Vec<Complex64>,
        tol: f64,
    ) -> Result<Self> {
        let dim = 1usize << window.k();
        if entries.len() != dim * dim {
            return Err(Error::BadDimension {
                dim: (entries.len() as f64).sqrt() as usize,
                k: window.k(),
            });
        }
        let u = Self { label: label.into(), window, dim, entries };
        let residual = u.unitarity_residual();
        if residual > tol {
            return Err(Error::NotUnitary { residual, tol });
        }
        Ok(u)
    }

    /// Max-norm of `U^H U - I`.
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0f64;
        for r in 0..d {
            for c in 0..d {
                let mut acc = Complex64::ZERO;
                for m in 0..d {
                    acc += self.entry(m, r).conj() * self.entry(m, c);
                }
                if r == c {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.dim + c]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> &LocalWindow {
        &self.window
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Same matrix bound to a different window (for repeating one gate
    /// across a chain).
    pub fn at_window(&self, window: LocalWindow) -> Result<Self> {
        if window.k() != self.window.k() {
            return Err(Error::BadWindow(
                window.indices().to_vec(),
                format!("expected {} qubits to match the gate", self.window.k()),
            ));
        }
        Ok(Self {
            label: self.label.clone(),
            window,
            dim: self.dim,
            entries: self.entries.clone(),
        })
    }

    /// Serialize to the on-disk JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&LocalUnitaryFile::from(self)).expect("serializable")
    }

    /// Parse the on-disk JSON form and validate unitarity.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LocalUnitaryFile =
            serde_json::from_str(text).map_err(|e| Error::MalformedRecord(e.to_string()))?;
        raw.try_into()
    }
}

/// JSON schema for a [`LocalUnitary`]: `{label, window, dim, entries}` with
/// entries row-major as `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct LocalUnitaryFile {
    label: String,
    window: Vec<u8>,
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl From<&LocalUnitary> for LocalUnitaryFile {
    fn from(u: &LocalUnitary) -> Self {
        Self {
            label: u.label.clone(),
            window: u.window.indices().to_vec(),
            dim: u.dim,
            entries: u.entries.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl From<LocalUnitary> for LocalUnitaryFile {
    fn from(u: LocalUnitary) -> Self {
        Self::from(&u)
    }
}

impl TryFrom<LocalUnitaryFile> for LocalUnitary {
    type Error = Error;

    fn try_from(raw: LocalUnitaryFile) -> Result<Self> {
        let window = LocalWindow::new(raw.window)?;
        if raw.dim != 1 << window.k() {
            return Err(Error::BadDimension { dim: raw.dim, k: window.k() });
        }
        let entries = raw.entries.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        LocalUnitary::new(raw.label, window, entries)
    }
}

/// Square boolean matrix as a row-major bitset.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BoolMatrix {
    dim: usize,
    words_per_row: usize,
    bits: Vec<u64>,
}

impl BoolMatrix {
    pub fn zeros(dim: usize) -> Self {
        let words_per_row = dim.div_ceil(64);
        Self { dim, words_per_row, bits: vec![0; dim * words_per_row] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.words_per_row + c / 64] >> (c % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize) {
        self.bits[r * self.words_per_row + c / 64] |= 1 << (c % 64);
    }

    fn row(&self, r: usize) -> &[u64] {
        &self.bits[r * self.words_per_row..(r + 1) * self.words_per_row]
    }

    /// Boolean product `bit[self * self]`.
    fn squared(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            // out[r] = OR of rows c where self[r][c] is set
            let (head, tail) = out.bits.split_at_mut(r * self.words_per_row);
            let _ = head;
            let out_row = &mut tail[..self.words_per_row];
            for c in 0..self.dim {
                if self.get(r, c) {
                    for (o, w) in out_row.iter_mut().zip(self.row(c)) {
                        *o |= w;
                    }
                }
            }
        }
        out
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| (0..r).all(|c| self.get(r, c) == self.get(c, r)))
    }

    pub fn is_reflexive(&self) -> bool {
        (0..self.dim).all(|i| self.get(i, i))
    }
}

/// Binarize a local unitary into the adjacency matrix of its pattern graph:
/// `A[r][c]` is set iff `|U[r][c]| > tol` or `|U[c][r]| > tol`, with the
/// diagonal forced on (self-loops are always implied).
pub fn bitize(u: &LocalUnitary, tol: f64) -> BoolMatrix {
    let d = u.dim();
    let mut a = BoolMatrix::zeros(d);
    for r in 0..d {
        a.set(r, r);
        for c in 0..d {
            if u.entry(r, c).norm() > tol || u.entry(c, r).norm() > tol {
                a.set(r, c);
                a.set(c, r);
            }
        }
    }
    a
}

/// Entries whose magnitude sits suspiciously close to the bitize threshold
/// (within a factor of 10 either side, excluding exact zeros). A nonzero
/// count suggests re-running at a second gate parameter and unioning the
/// maps.
pub fn near_threshold_entries(u: &LocalUnitary, tol: f64) -> usize {
    let d = u.dim();
    let mut count = 0;
    for r in 0..d {
        for c in 0..d {
            let mag = u.entry(r, c).norm();
            if mag > 0.0 && mag <= 10.0 * tol {
                count += 1;
            }
        }
    }
    count
}

/// Transitive closure of a reflexive symmetric boolean matrix by repeated
/// boolean squaring: the fixed point of `A <- bit[A^2]`.
pub fn boolean_closure(a: &BoolMatrix) -> BoolMatrix {
    debug_assert!(a.is_reflexive() && a.is_symmetric());
    let mut cur = a.clone();
    loop {
        let next = cur.squared();
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// The string edit map of one k-local unitary: a partition of the 2^k local
/// patterns into the equivalence classes the gate can mix.
#[derive(Clone, Debug)]
pub struct EditMap {
    window: LocalWindow,
    /// `class_of[p]` indexes into `classes`.
    class_of: Vec<u32>,
    /// Sorted pattern lists, one per class; every pattern is in its own class.
    classes: Vec<Vec<u32>>,
    /// `deltas[p]`: XOR masks carrying `p` to each member of its class
    /// (including 0 for `p` itself), pre-spread onto the window bits.
    deltas: Vec<Vec<u64>>,
    /// Count of matrix entries near the bitize threshold; see
    /// [`near_threshold_entries`].
    near_threshold: usize,
}

impl EditMap {
    /// Construct from an explicit partition (used by tests and custom maps);
    /// classes must be disjoint and cover `0..2^k`.
    pub fn from_classes(window: LocalWindow, classes: Vec<Vec<u32>>) -> Result<Self> {
        let dim = 1usize << window.k();
        let mut class_of = vec![u32::MAX; dim];
        let mut sorted: Vec<Vec<u32>> = Vec::with_capacity(classes.len());
        for (ci, mut class) in classes.into_iter().enumerate() {
            class.sort_unstable();
            for &p in &class {
                if p as usize >= dim {
                    return Err(Error::PatternOutOfRange { pattern: p, k: window.k() });
                }
                if class_of[p as usize] != u32::MAX {
                    return Err(Error::InvalidParameter(format!(
                        "pattern {p} appears in more than one class"
                    )));
                }
                class_of[p as usize] = ci as u32;
            }
            sorted.push(class);
        }
        if let Some(p) = class_of.iter().position(|&c| c == u32::MAX) {
            return Err(Error::InvalidParameter(format!("pattern {p} not covered by any class")));
        }
        let deltas = build_deltas(&window, &class_of, &sorted);
        Ok(Self { window, class_of, classes: sorted, deltas, near_threshold: 0 })
    }

    pub fn window(&self) -> &LocalWindow {
        &self.window
    }

    /// The classes as sorted pattern lists, ordered by smallest member.
    pub fn classes(&self) -> &[Vec<u32>] {
        &self.classes
    }

    /// The class containing pattern `p`.
    pub fn class_of(&self, p: u32) -> &[u32] {
        &self.classes[self.class_of[p as usize] as usize]
    }

    pub fn near_threshold(&self) -> usize {
        self.near_threshold
    }

    /// All states reachable from `b` by this map (always includes `b`).
    pub fn apply(&self, b: BasisState) -> Result<Vec<BasisState>> {
        self.window.validate_for(b.num_qubits())?;
        let mut out = Vec::new();
        for code in self.images(b.code()) {
            out.push(BasisState::new(code, b.num_qubits())?);
        }
        Ok(out)
    }

    /// Raw-code image iterator; the first element is always `code` itself.
    #[inline]
    pub(crate) fn images(&self, code: u64) -> impl Iterator<Item = u64> + '_ {
        let pat = extract_code(code, self.window.indices());
        self.deltas[pat as usize].iter().map(move |&d| code ^ d)
    }

    /// JSON export `{window, classes}`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct EditMapFile<'a> {
            window: &'a [u8],
            classes: &'a [Vec<u32>],
        }
        serde_json::to_string_pretty(&EditMapFile {
            window: self.window.indices(),
            classes: &self.classes,
        })
        .expect("serializable")
    }
}

fn build_deltas(window: &LocalWindow, class_of: &[u32], classes: &[Vec<u32>]) -> Vec<Vec<u64>> {
    class_of
        .iter()
        .enumerate()
        .map(|(p, &ci)| {
            let p = p as u32;
            // self first, then the rest of the class
            std::iter::once(0)
                .chain(
                    classes[ci as usize]
                        .iter()
                        .filter(|&&q| q != p)
                        .map(|&q| window.spread(p ^ q)),
                )
                .collect()
        })
        .collect()
}

/// Create the string edit map of a local unitary: the connected components
/// of [`bitize`] under [`boolean_closure`].
pub fn build_edit_map(u: &LocalUnitary, tol: f64) -> Result<EditMap> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("bitize tolerance must be positive, got {tol}")));
    }
    let near_threshold = near_threshold_entries(u, tol);
    if near_threshold > 0 {
        log::warn!(
            "gate {:?}: {} matrix entries within 10x of the bitize threshold {:.1e}; \
             consider building the map at a second parameter and unioning",
            u.label(),
            near_threshold,
            tol,
        );
    }
    let closed = boolean_closure(&bitize(u, tol));
    let dim = u.dim();
    let mut class_of = vec![u32::MAX; dim];
    let mut classes: Vec<Vec<u32>> = Vec::new();
    for p in 0..dim {
        if class_of[p] != u32::MAX {
            continue;
        }
        let ci = classes.len() as u32;
        let mut members = Vec::new();
        for q in p..dim {
            if closed.get(p, q) {
                debug_assert!(class_of[q] == u32::MAX);
                class_of[q] = ci;
                members.push(q as u32);
            }
        }
        classes.push(members);
    }
    let deltas = build_deltas(u.window(), &class_of, &classes);
    Ok(EditMap {
        window: u.window().clone(),
        class_of,
        classes,
        deltas,
        near_threshold,
    })
}

/// Union of the edit maps of the same window built at several parameters;
/// covers gates whose matrix entries vanish at isolated parameter values.
pub fn build_edit_map_union(us: &[LocalUnitary], tol: f64) -> Result<EditMap> {
    let first = us.first().ok_or_else(|| {
        Error::InvalidParameter("union of zero edit maps".into())
    })?;
    let mut acc = bitize(first, tol);
    for u in &us[1..] {
        if u.window() != first.window() {
            return Err(Error::BadWindow(
                u.window().indices().to_vec(),
                "all union members must share one window".into(),
            ));
        }
        let b = bitize(u, tol);
        for r in 0..acc.dim() {
            for c in 0..acc.dim() {
                if b.get(r, c) {
                    acc.set(r, c);
                }
            }
        }
    }
    let merged = EditMap::from_classes_closure(first.window().clone(), &boolean_closure(&acc));
    Ok(merged)
}

impl EditMap {
    fn from_classes_closure(window: LocalWindow, closed: &BoolMatrix) -> EditMap {
        let dim = closed.dim();
        let mut class_of = vec![u32::MAX; dim];
        let mut classes: Vec<Vec<u32>> = Vec::new();
        for p in 0..dim {
            if class_of[p] != u32::MAX {
                continue;
            }
            let ci = classes.len() as u32;
            let mut members = Vec::new();
            for q in p..dim {
                if closed.get(p, q) {
                    class_of[q] = ci;
                    members.push(q as u32);
                }
            }
            classes.push(members);
        }
        let deltas = build_deltas(&window, &class_of, &classes);
        EditMap { window, class_of, classes, deltas, near_threshold: 0 }
    }
}

/// The full collection of edit maps for a layered circuit: one map per local
/// operator.
#[derive(Clone, Debug)]
pub struct EditMapSet {
    maps: Vec<EditMap>,
    n: u8,
    fingerprint: u64,
}

impl EditMapSet {
    pub fn new(maps: Vec<EditMap>, n: u8) -> Result<Self> {
        if n > crate::basis::MAX_QUBITS {
            return Err(Error::TooManyQubits(n as u32));
        }
        if maps.is_empty() {
            return Err(Error::InvalidParameter("edit map set must be nonempty".into()));
        }
        for m in &maps {
            m.window().validate_for(n)?;
        }
        let fingerprint = fingerprint_maps(&maps, n);
        Ok(Self { maps, n, fingerprint })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn maps(&self) -> &[EditMap] {
        &self.maps
    }

    pub fn num_maps(&self) -> usize {
        self.maps.len()
    }

    /// Stable hash of windows and classes; used to key search caches so a
    /// cache built for one model cannot leak results into another.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Union of every map's image of `b`, deduplicated and sorted; always
    /// contains `b`.
    pub fn apply(&self, b: BasisState) -> Result<Vec<BasisState>> {
        if b.num_qubits() != self.n {
            return Err(Error::QubitCountMismatch(b.num_qubits(), self.n));
        }
        let mut codes = Vec::new();
        self.neighbors_into(b.code(), &mut codes);
        codes.sort_unstable();
        codes.dedup();
        codes.into_iter().map(|c| BasisState::new(c, self.n)).collect()
    }

    /// Push every image of `code` under every map (self included, duplicates
    /// allowed); hot-path form used by the graph searches.
    #[inline]
    pub(crate) fn neighbors_into(&self, code: u64, out: &mut Vec<u64>) {
        for m in &self.maps {
            out.extend(m.images(code));
        }
    }
}

fn fingerprint_maps(maps: &[EditMap], n: u8) -> u64 {
    // FNV-1a over the structural content; stable across runs.
    let mut h = 0xcbf29ce484222325u64;
    let mut eat = |v: u64| {
        for byte in v.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    };
    eat(n as u64);
    for m in maps {
        eat(m.window.k() as u64);
        for &i in m.window.indices() {
            eat(i as u64);
        }
        for class in &m.classes {
            eat(0xffff_ffff_ffff_fffe);
            for &p in class {
                eat(p as u64);
            }
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn iswap_map(theta: f64) -> EditMap {
        let u = models::iswap_gate(theta, LocalWindow::new(vec![0, 1]).unwrap()).unwrap();
        build_edit_map(&u, DEFAULT_BITIZE_TOL).unwrap()
    }

    #[test]
    fn bitize_iswap_is_block_diagonal() {
        let u = models::iswap_gate(0.3, LocalWindow::new(vec![0, 1]).unwrap()).unwrap();
        let a = bitize(&u, DEFAULT_BITIZE_TOL);
        // patterns: 0 = "00", 1 = "10", 2 = "01", 3 = "11"
        assert!(a.get(1, 2) && a.get(2, 1));
        for i in 0..4 {
            assert!(a.get(i, i));
        }
        assert!(!a.get(0, 1) && !a.get(0, 2) && !a.get(0, 3) && !a.get(1, 3) && !a.get(2, 3));
    }

    #[test]
    fn bitize_identity_and_hadamard() {
        let w = LocalWindow::new(vec![0]).unwrap();
        let id = LocalUnitary::new("id", w.clone(), vec![
            Complex64::ONE, Complex64::ZERO,
            Complex64::ZERO, Complex64::ONE,
        ])
        .unwrap();
        let a = bitize(&id, DEFAULT_BITIZE_TOL);
        assert!(a.get(0, 0) && a.get(1, 1) && !a.get(0, 1) && !a.get(1, 0));

        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let had = LocalUnitary::new("h", w, vec![h, h, h, -h]).unwrap();
        let a = bitize(&had, DEFAULT_BITIZE_TOL);
        assert!((0..2).all(|r| (0..2).all(|c| a.get(r, c))));
    }

    #[test]
    fn closure_adds_transitive_edges() {
        // chain 0-1, 1-2 plus diagonal gains 0-2
        let mut a = BoolMatrix::identity(3);
        a.set(0, 1);
        a.set(1, 0);
        a.set(1, 2);
        a.set(2, 1);
        let closed = boolean_closure(&a);
        assert!(closed.get(0, 2) && closed.get(2, 0));

        // already closed: fixed point
        assert_eq!(boolean_closure(&closed), closed);

        // bitized iSWAP is already closed
        let u = models::iswap_gate(0.3, LocalWindow::new(vec![0, 1]).unwrap()).unwrap();
        let a = bitize(&u, DEFAULT_BITIZE_TOL);
        assert_eq!(boolean_closure(&a), a);
    }

    #[test]
    fn iswap_classes_swap_pair() {
        let m = iswap_map(0.3);
        assert_eq!(m.classes(), &[vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn heisenberg_gate_classes_match_iswap() {
        let u = models::heisenberg_bond_gate(0.1, LocalWindow::new(vec![0, 1]).unwrap()).unwrap();
        let m = build_edit_map(&u, DEFAULT_BITIZE_TOL).unwrap();
        assert_eq!(m.classes(), &[vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn t6_interior_classes_match_table() {
        let u = models::goldilocks_gate(
            "t6",
            LocalWindow::new(vec![0, 1, 2]).unwrap(),
            1,
            &[0, 2],
            1,
        )
        .unwrap();
        let m = build_edit_map(&u, DEFAULT_BITIZE_TOL).unwrap();
        // ket classes {000},{001,011},{010},{100,110},{101},{111}
        assert_eq!(
            m.classes(),
            &[vec![0], vec![1, 3], vec![2], vec![4, 6], vec![5], vec![7]]
        );
    }

    #[test]
    fn classes_are_invariant_across_generic_angles() {
        let reference = iswap_map(0.1);
        for theta in [0.05, 0.3, 0.7, 1.0, 1.4] {
            assert_eq!(iswap_map(theta).classes(), reference.classes(), "theta={theta}");
        }
    }

    #[test]
    fn apply_map_rewrites_substring() {
        let m = {
            let u = models::iswap_gate(0.3, LocalWindow::new(vec![1, 2]).unwrap()).unwrap();
            build_edit_map(&u, DEFAULT_BITIZE_TOL).unwrap()
        };
        let b = BasisState::from_ket("0100").unwrap();
        let mut kets: Vec<String> = m.apply(b).unwrap().iter().map(|s| s.ket()).collect();
        kets.sort();
        assert_eq!(kets, ["0010", "0100"]);

        // fixed pattern: identity
        let fixed = BasisState::from_ket("0110").unwrap();
        assert_eq!(m.apply(fixed).unwrap(), vec![fixed]);
    }

    #[test]
    fn map_set_neighbors_on_swap_chain() {
        let model = models::build_hopping(4, 0.3).unwrap();
        let maps = &model.maps;

        let kets = |s: &str| -> Vec<String> {
            let b = BasisState::from_ket(s).unwrap();
            maps.apply(b).unwrap().iter().map(|x| x.ket()).collect()
        };

        // one movable "10" boundary
        assert_eq!(kets("1100"), ["1100", "1010"]);
        // frozen states
        assert_eq!(kets("0000"), ["0000"]);
        assert_eq!(kets("1111"), ["1111"]);
        // two movable boundaries
        assert_eq!(kets("0110"), ["1010", "0110", "0101"]);
    }

    #[test]
    fn union_recovers_edges_lost_at_special_angles() {
        let w = LocalWindow::new(vec![0, 1]).unwrap();
        // at theta = 0 the gate is diagonal and the map degenerates
        let degenerate = models::iswap_gate(0.0, w.clone()).unwrap();
        let m0 = build_edit_map(&degenerate, DEFAULT_BITIZE_TOL).unwrap();
        assert_eq!(m0.classes().len(), 4);

        let generic = models::iswap_gate(0.1, w).unwrap();
        let merged = build_edit_map_union(&[degenerate, generic], DEFAULT_BITIZE_TOL).unwrap();
        assert_eq!(merged.classes(), &[vec![0], vec![1, 2], vec![3]]);
    }

    #[test]
    fn local_unitary_json_round_trip() {
        let u = models::iswap_gate(0.3, LocalWindow::new(vec![2, 3]).unwrap()).unwrap();
        let text = u.to_json();
        let back = LocalUnitary::from_json(&text).unwrap();
        assert_eq!(back.window(), u.window());
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(back.entry(r, c), u.entry(r, c));
            }
        }
    }

    #[test]
    fn rejects_non_unitary() {
        let w = LocalWindow::new(vec![0]).unwrap();
        let res = LocalUnitary::new("bad", w, vec![
            Complex64::ONE, Complex64::ONE,
            Complex64::ZERO, Complex64::ONE,
        ]);
        assert!(matches!(res, Err(Error::NotUnitary { .. })));
    }

    /// Independent union-find over the bitized adjacency, for cross-checking
    /// the boolean-closure classes.
    fn union_find_classes(a: &BoolMatrix) -> Vec<Vec<u32>> {
        let d = a.dim();
        let mut parent: Vec<usize> = (0..d).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        for r in 0..d {
            for c in 0..d {
                if a.get(r, c) {
                    let (rr, rc) = (find(&mut parent, r), find(&mut parent, c));
                    if rr != rc {
                        parent[rr] = rc;
                    }
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<u32>> = Default::default();
        for p in 0..d {
            let root = find(&mut parent, p);
            groups.entry(root).or_default().push(p as u32);
        }
        let mut out: Vec<Vec<u32>> = groups.into_values().collect();
        out.sort_by_key(|c| c[0]);
        out
    }

    #[test]
    fn closure_classes_equal_union_find_components() {
        for theta in [0.1, 0.4] {
            for gate in [
                models::heisenberg_bond_gate(theta, LocalWindow::new(vec![0, 1]).unwrap()).unwrap(),
                models::goldilocks_gate(
                    "t6",
                    LocalWindow::new(vec![0, 1, 2]).unwrap(),
                    1,
                    &[0, 2],
                    1,
                )
                .unwrap(),
                models::goldilocks_gate(
                    "f4",
                    LocalWindow::new(vec![0, 1, 2, 3, 4]).unwrap(),
                    2,
                    &[0, 1, 3, 4],
                    2,
                )
                .unwrap(),
            ] {
                let m = build_edit_map(&gate, DEFAULT_BITIZE_TOL).unwrap();
                let uf = union_find_classes(&bitize(&gate, DEFAULT_BITIZE_TOL));
                assert_eq!(m.classes(), &uf[..], "gate {}", gate.label());
            }
        }
    }

    /// Domain-wall count with fixed |0> boundary cells.
    fn domain_walls(b: BasisState) -> u32 {
        let n = b.num_qubits();
        let mut prev = false;
        let mut walls = 0;
        for i in 0..n {
            if b.bit(i) != prev {
                walls += 1;
            }
            prev = b.bit(i);
        }
        if prev {
            walls += 1;
        }
        walls
    }

    proptest! {
        #[test]
        fn heisenberg_maps_conserve_popcount(code in 0u64..(1 << 8)) {
            let model = models::build_heisenberg(8, 0.1).unwrap();
            let b = BasisState::new(code, 8).unwrap();
            for img in model.maps.apply(b).unwrap() {
                prop_assert_eq!(img.popcount(), b.popcount());
            }
        }

        #[test]
        fn t6_maps_conserve_domain_walls(code in 0u64..(1 << 9)) {
            let model = models::build_t6(9).unwrap();
            let b = BasisState::new(code, 9).unwrap();
            for img in model.maps.apply(b).unwrap() {
                prop_assert_eq!(domain_walls(img), domain_walls(b));
            }
        }
    }
}

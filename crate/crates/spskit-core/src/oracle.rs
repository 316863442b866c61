//! Brute-force ground truth on small systems.
//!
//! Everything here works with dense 2^n x 2^n matrices or naive dense
//! vector updates, deliberately independent of the compiled engine in
//! [`crate::sim`]: the step unitary is composed gate by gate, its bitized
//! adjacency is clustered with a union-find, and invariance claims are
//! checked as raw amplitude and commutator residuals. A hard qubit cap keeps
//! the dense arithmetic from ever leaking into production paths.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::Rng;

use crate::basis::BasisState;
use crate::editmap::{EditMapSet, LocalUnitary};
use crate::models::Circuit;
use crate::sps::{self, Subspace};
use crate::{Error, Result};

/// Hard cap for dense composition.
pub const MAX_ORACLE_QUBITS: u8 = 12;

/// A dense 2^n x 2^n unitary; entry `(r, c)` is the amplitude from basis
/// code `c` to basis code `r`.
pub struct DenseUnitary {
    n: u8,
    dim: usize,
    entries: Vec<Complex64>,
}

impl DenseUnitary {
    pub fn num_qubits(&self) -> u8 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn entry(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.dim + c]
    }

    /// Max-norm of `U^H U - I`. Cubic in the dimension; intended for n <= 8.
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
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
}

/// Apply one local gate to a dense amplitude vector by direct pattern
/// rewriting (the straightforward reference implementation).
fn apply_gate_naive(n: u8, gate: &LocalUnitary, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::ZERO; v.len()];
    let window = gate.window();
    let dim = gate.dim();
    let mask = window.mask();
    for (idx, &a) in v.iter().enumerate() {
        if a == Complex64::ZERO {
            continue;
        }
        let col = crate::basis::extract_local(BasisState::new(idx as u64, n).expect("in range"), window)
            .expect("window validated");
        let cleared = idx as u64 & !mask;
        for row in 0..dim {
            let m = gate.entry(row, col as usize);
            if m != Complex64::ZERO {
                out[(cleared | window.spread(row as u32)) as usize] += m * a;
            }
        }
    }
    out
}

/// Apply discrete step `j` of a circuit to a dense vector.
fn apply_step_naive(c: &Circuit, j: u64, v: Vec<Complex64>) -> Vec<Complex64> {
    let mut v = v;
    for &layer in c.layers_for_step(j) {
        for &gi in &c.layers()[layer] {
            v = apply_gate_naive(c.n(), &c.gates()[gi], &v);
        }
    }
    v
}

/// Evolve a basis state through `p` steps with the naive dense route.
pub fn evolve_dense(c: &Circuit, psi0: BasisState, p: u32) -> Result<Vec<Complex64>> {
    if psi0.num_qubits() != c.n() {
        return Err(Error::QubitCountMismatch(psi0.num_qubits(), c.n()));
    }
    if c.n() > MAX_ORACLE_QUBITS {
        return Err(Error::OracleTooLarge { n: c.n(), cap: MAX_ORACLE_QUBITS });
    }
    let mut v = vec![Complex64::ZERO; 1 << c.n()];
    v[psi0.code() as usize] = Complex64::ONE;
    for j in 0..p as u64 {
        v = apply_step_naive(c, j, v);
    }
    Ok(v)
}

/// Compose one discrete step (step index 0) of the circuit into a dense
/// matrix, column by column.
pub fn compose_step(c: &Circuit) -> Result<DenseUnitary> {
    compose_step_at(c, 0)
}

/// Compose the step applied at step index `j`.
pub fn compose_step_at(c: &Circuit, j: u64) -> Result<DenseUnitary> {
    let n = c.n();
    if n > MAX_ORACLE_QUBITS {
        return Err(Error::OracleTooLarge { n, cap: MAX_ORACLE_QUBITS });
    }
    let dim = 1usize << n;
    let mut entries = vec![Complex64::ZERO; dim * dim];
    for col in 0..dim {
        let mut v = vec![Complex64::ZERO; dim];
        v[col] = Complex64::ONE;
        let v = apply_step_naive(c, j, v);
        for (row, &a) in v.iter().enumerate() {
            entries[row * dim + col] = a;
        }
    }
    Ok(DenseUnitary { n, dim, entries })
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            self.parent[x] = self.find(self.parent[x]);
        }
        self.parent[x]
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return;
        }
        if self.rank[rx] < self.rank[ry] {
            self.parent[rx] = ry;
        } else if self.rank[rx] > self.rank[ry] {
            self.parent[ry] = rx;
        } else {
            self.parent[ry] = rx;
            self.rank[rx] += 1;
        }
    }
}

/// Cluster the bitized, symmetrized adjacency of a dense unitary into its
/// connected components: the invariant subspaces of the operator, read off
/// the matrix itself.
pub fn oracle_partition(u: &DenseUnitary, tol: f64) -> Vec<Subspace> {
    let d = u.dim;
    let mut uf = UnionFind::new(d);
    for r in 0..d {
        for c in r + 1..d {
            if u.entry(r, c).norm() > tol || u.entry(c, r).norm() > tol {
                uf.union(r, c);
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, HashSet<u64>> = Default::default();
    for i in 0..d {
        let root = uf.find(i);
        groups.entry(root).or_default().insert(i as u64);
    }
    let mut parts: Vec<Subspace> = groups
        .into_values()
        .map(|members| {
            let seed = *members.iter().min().expect("nonempty group");
            Subspace::from_members(members, u.n, seed)
        })
        .collect();
    parts.sort_by_key(|g| g.min_element().code());
    parts
}

/// Max commutator entry `|P_G U - U P_G|` for the diagonal projector onto
/// `in_set`: the largest matrix element of `U` crossing the set boundary.
pub fn projector_commutation_residual(u: &DenseUnitary, in_set: impl Fn(u64) -> bool) -> f64 {
    let d = u.dim;
    let flags: Vec<bool> = (0..d as u64).map(in_set).collect();
    let mut worst = 0.0f64;
    for r in 0..d {
        for c in 0..d {
            if flags[r] != flags[c] {
                worst = worst.max(u.entry(r, c).norm());
            }
        }
    }
    worst
}

/// Report of the amplitude-vanishing check.
#[derive(Clone, Copy, Debug)]
pub struct AmplitudeReport {
    pub trials: u32,
    /// Largest `|<b|U^p|psi0>|` seen over states outside the enumerated
    /// subspace of `psi0`.
    pub max_off_subspace_amplitude: f64,
}

/// For `trials` random step counts `p <= max_p`, evolve `psi0` densely and
/// measure the largest amplitude on any state outside its enumerated
/// subspace. Exact invariance means the result is numerically zero.
pub fn verify_theorem1(
    c: &Circuit,
    maps: &EditMapSet,
    psi0: BasisState,
    trials: u32,
    max_p: u32,
    seed: u64,
) -> Result<AmplitudeReport> {
    let g = sps::enumerate_sps(maps, psi0, sps::DEFAULT_CAP)?;
    let mut rng = crate::sim::seeded_rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let p = rng.random_range(0..=max_p);
        let v = evolve_dense(c, psi0, p)?;
        for (code, &a) in v.iter().enumerate() {
            if !g.contains(BasisState::new(code as u64, c.n())?) {
                worst = worst.max(a.norm());
            }
        }
    }
    Ok(AmplitudeReport { trials, max_off_subspace_amplitude: worst })
}

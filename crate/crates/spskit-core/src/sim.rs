//! Exact statevector evolution of layered circuits and stochastic Pauli
//! noise trajectories.
//!
//! Gates are compiled once into sparse column form and applied by
//! gather/scatter over each window block, so no 2^n x 2^n object is ever
//! built. Depolarizing noise is unraveled as probabilistic X/Y/Z insertions
//! after each step (each with probability `eps/3` per qubit); averaging
//! trajectories reproduces the density-matrix channel exactly, and sampling
//! the final state gives one measurement shot. Every shot owns an RNG seeded
//! from `(base_seed, p, shot)`, so results are independent of thread count
//! and schedule.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::BasisState;
use crate::metrics::Distribution;
use crate::models::Circuit;
use crate::{exec, Error, Result};

/// Norm drift allowed on evolved states.
pub const NORM_TOL: f64 = 1e-9;

/// Compiled-gate entries below this magnitude are treated as structural
/// zeros and dropped.
const ENTRY_CUTOFF: f64 = 0.0;

/// Dense complex amplitude vector over the 2^n computational basis states.
#[derive(Clone, Debug)]
pub struct Statevector {
    amps: Vec<Complex64>,
    n: u8,
}

impl Statevector {
    /// The basis state `b` as a statevector.
    pub fn from_basis(b: BasisState) -> Self {
        let mut amps = vec![Complex64::ZERO; 1 << b.num_qubits()];
        amps[b.code() as usize] = Complex64::ONE;
        Self { amps, n: b.num_qubits() }
    }

    pub fn num_qubits(&self) -> u8 {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probability(&self, code: u64) -> f64 {
        self.amps[code as usize].norm_sqr()
    }
}

/// Symmetric single-qubit depolarizing noise: X, Y and Z each applied with
/// probability `eps_over_3` per qubit after every step, plus the base RNG
/// seed the trajectory streams derive from.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub eps_over_3: f64,
    pub rng_seed: u64,
}

impl NoiseSpec {
    pub fn new(eps_over_3: f64, rng_seed: u64) -> Result<Self> {
        let spec = Self { eps_over_3, rng_seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn noiseless(rng_seed: u64) -> Self {
        Self { eps_over_3: 0.0, rng_seed }
    }

    pub fn validate(&self) -> Result<()> {
        let eps = 3.0 * self.eps_over_3;
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::InvalidParameter(format!(
                "per-qubit error probability 3*{} out of [0, 1]",
                self.eps_over_3
            )));
        }
        Ok(())
    }

    /// Total per-qubit error probability `3 * eps_over_3`.
    pub fn eps(&self) -> f64 {
        3.0 * self.eps_over_3
    }
}

/// A dense sub-block of a gate: the patterns it mixes (pre-spread to global
/// bit offsets) and the dense matrix over them.
struct MixBlock {
    offsets: Vec<u64>,
    /// Row-major `s x s` over the block's patterns.
    mat: Vec<Complex64>,
}

/// A gate compiled by its pattern-connectivity structure: patterns the gate
/// leaves untouched are skipped, pure phases are applied in place, and each
/// mixing class becomes one small dense block. For controlled gates this
/// touches only the activated fraction of the state.
struct CompiledGate {
    window_mask: u64,
    /// `(offset, phase)` for patterns with a non-unit diagonal entry.
    diagonal: Vec<(u64, Complex64)>,
    blocks: Vec<MixBlock>,
    max_block: usize,
}

/// A circuit compiled for repeated statevector application.
pub struct CompiledCircuit {
    n: u8,
    gates: Vec<CompiledGate>,
    layers: Vec<Vec<usize>>,
    step_cycle: Vec<Vec<usize>>,
    max_block: usize,
}

/// Compile every gate of `c` into block form.
pub fn compile(c: &Circuit) -> CompiledCircuit {
    let gates: Vec<CompiledGate> = c.gates().iter().map(|g| compile_gate(g)).collect();
    let max_block = gates.iter().map(|g| g.max_block).max().unwrap_or(1);
    CompiledCircuit {
        n: c.n(),
        gates,
        layers: c.layers().to_vec(),
        step_cycle: c.step_cycle().to_vec(),
        max_block,
    }
}

fn compile_gate(g: &crate::editmap::LocalUnitary) -> CompiledGate {
    let dim = g.dim();
    let window = g.window();
    // group patterns by the support connectivity of the matrix
    let mut group = vec![u32::MAX; dim];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for p in 0..dim {
        if group[p] != u32::MAX {
            continue;
        }
        let gi = groups.len() as u32;
        let mut members = vec![p];
        group[p] = gi;
        let mut cursor = 0;
        while cursor < members.len() {
            let q = members[cursor];
            cursor += 1;
            for r in 0..dim {
                if group[r] == u32::MAX
                    && (g.entry(r, q).norm_sqr() > ENTRY_CUTOFF
                        || g.entry(q, r).norm_sqr() > ENTRY_CUTOFF)
                {
                    group[r] = gi;
                    members.push(r);
                }
            }
        }
        groups.push(members);
    }

    let mut diagonal = Vec::new();
    let mut blocks = Vec::new();
    for members in groups {
        if members.len() == 1 {
            let p = members[0];
            let a = g.entry(p, p);
            if a != Complex64::ONE {
                diagonal.push((window.spread(p as u32), a));
            }
        } else {
            let s = members.len();
            let mut mat = vec![Complex64::ZERO; s * s];
            for (bi, &r) in members.iter().enumerate() {
                for (bj, &c) in members.iter().enumerate() {
                    mat[bi * s + bj] = g.entry(r, c);
                }
            }
            blocks.push(MixBlock {
                offsets: members.iter().map(|&p| window.spread(p as u32)).collect(),
                mat,
            });
        }
    }
    diagonal.sort_unstable_by_key(|&(off, _)| off);
    blocks.sort_unstable_by_key(|b| b.offsets[0]);
    let max_block = blocks.iter().map(|b| b.offsets.len()).max().unwrap_or(1);
    CompiledGate { window_mask: window.mask(), diagonal, blocks, max_block }
}

impl CompiledGate {
    fn apply(&self, amps: &mut [Complex64], scratch: &mut [Complex64]) {
        let full_mask = amps.len() as u64 - 1;
        let mut base = 0u64;
        loop {
            for &(off, phase) in &self.diagonal {
                amps[(base | off) as usize] *= phase;
            }
            for block in &self.blocks {
                let s = block.offsets.len();
                if s == 2 {
                    // the common case: one 2x2 rotation
                    let i0 = (base | block.offsets[0]) as usize;
                    let i1 = (base | block.offsets[1]) as usize;
                    let (a0, a1) = (amps[i0], amps[i1]);
                    if a0 != Complex64::ZERO || a1 != Complex64::ZERO {
                        amps[i0] = block.mat[0] * a0 + block.mat[1] * a1;
                        amps[i1] = block.mat[2] * a0 + block.mat[3] * a1;
                    }
                } else {
                    let scratch = &mut scratch[..s];
                    for (j, &off) in block.offsets.iter().enumerate() {
                        scratch[j] = amps[(base | off) as usize];
                    }
                    for (i, &off) in block.offsets.iter().enumerate() {
                        let mut acc = Complex64::ZERO;
                        for (j, &v) in scratch.iter().enumerate() {
                            acc += block.mat[i * s + j] * v;
                        }
                        amps[(base | off) as usize] = acc;
                    }
                }
            }
            base = (base | self.window_mask).wrapping_add(1) & !self.window_mask & full_mask;
            if base == 0 {
                break;
            }
        }
    }
}

impl CompiledCircuit {
    pub fn num_qubits(&self) -> u8 {
        self.n
    }

    /// Apply discrete step `j` (layer order may depend on the step parity).
    fn step(&self, sv: &mut Statevector, j: u64, scratch: &mut [Complex64]) {
        let cycle = &self.step_cycle[(j % self.step_cycle.len() as u64) as usize];
        for &layer in cycle {
            for &gi in &self.layers[layer] {
                self.gates[gi].apply(&mut sv.amps, scratch);
            }
        }
        debug_assert!((sv.norm() - 1.0).abs() < NORM_TOL, "norm drift after step {j}");
    }

    /// Apply steps `first..first + count` in order.
    pub fn apply_steps(&self, sv: &mut Statevector, first: u64, count: u64) -> Result<()> {
        if sv.num_qubits() != self.n {
            return Err(Error::QubitCountMismatch(sv.num_qubits(), self.n));
        }
        let mut scratch = vec![Complex64::ZERO; self.max_block];
        for j in first..first + count {
            self.step(sv, j, &mut scratch);
        }
        Ok(())
    }
}

/// Evolve `psi` through `p` discrete steps of `c`.
pub fn apply_circuit_steps(c: &Circuit, psi: &Statevector, p: u32) -> Result<Statevector> {
    if (psi.norm() - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidParameter(format!(
            "input state is not normalized (norm {})",
            psi.norm()
        )));
    }
    let cc = compile(c);
    let mut out = psi.clone();
    cc.apply_steps(&mut out, 0, p as u64)?;
    Ok(out)
}

fn apply_pauli_x(amps: &mut [Complex64], q: u8) {
    let bit = 1usize << q;
    for i in 0..amps.len() {
        if i & bit == 0 {
            amps.swap(i, i | bit);
        }
    }
}

fn apply_pauli_y(amps: &mut [Complex64], q: u8) {
    let bit = 1usize << q;
    let i_unit = Complex64::I;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let a0 = amps[i];
            let a1 = amps[i | bit];
            amps[i] = -i_unit * a1;
            amps[i | bit] = i_unit * a0;
        }
    }
}

fn apply_pauli_z(amps: &mut [Complex64], q: u8) {
    let bit = 1usize << q;
    for (i, a) in amps.iter_mut().enumerate() {
        if i & bit != 0 {
            *a = -*a;
        }
    }
}

/// One error layer: per qubit, draw once and insert X, Y or Z each with
/// probability `eps/3`.
fn apply_noise_layer(sv: &mut Statevector, noise: &NoiseSpec, rng: &mut impl Rng) {
    let eps = noise.eps();
    if eps == 0.0 {
        return;
    }
    for q in 0..sv.n {
        let u: f64 = rng.random();
        if u < eps {
            match (3.0 * u / eps) as u32 {
                0 => apply_pauli_x(&mut sv.amps, q),
                1 => apply_pauli_y(&mut sv.amps, q),
                _ => apply_pauli_z(&mut sv.amps, q),
            }
        }
    }
}

/// Draw one measurement outcome from `|amps|^2`.
fn sample_code(sv: &Statevector, rng: &mut impl Rng) -> u64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0u64;
    for (i, a) in sv.amps.iter().enumerate() {
        let p = a.norm_sqr();
        if p > 0.0 {
            last = i as u64;
            acc += p;
            if u < acc {
                return last;
            }
        }
    }
    last
}

/// Prefix-sum sampler over a fixed state; returns exactly what
/// [`sample_code`] would for the same draw.
struct SampleTable {
    cumulative: Vec<f64>,
    last_nonzero: u64,
}

impl SampleTable {
    fn new(sv: &Statevector) -> Self {
        let mut acc = 0.0;
        let mut last_nonzero = 0u64;
        let cumulative = sv
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let p = a.norm_sqr();
                if p > 0.0 {
                    last_nonzero = i as u64;
                    acc += p;
                }
                acc
            })
            .collect();
        Self { cumulative, last_nonzero }
    }

    fn sample(&self, rng: &mut impl Rng) -> u64 {
        let u: f64 = rng.random();
        let idx = self.cumulative.partition_point(|&c| c <= u) as u64;
        idx.min(self.last_nonzero)
    }
}

/// Evolve one noisy trajectory to its pre-measurement state: `p` steps, an
/// error layer after every step including the last.
pub fn noisy_final_state(
    cc: &CompiledCircuit,
    psi0: BasisState,
    p: u32,
    noise: &NoiseSpec,
    rng: &mut impl Rng,
) -> Result<Statevector> {
    if psi0.num_qubits() != cc.n {
        return Err(Error::QubitCountMismatch(psi0.num_qubits(), cc.n));
    }
    noise.validate()?;
    let mut sv = Statevector::from_basis(psi0);
    let mut scratch = vec![Complex64::ZERO; cc.max_block];
    for j in 0..p as u64 {
        cc.step(&mut sv, j, &mut scratch);
        apply_noise_layer(&mut sv, noise, rng);
    }
    Ok(sv)
}

/// One noisy trajectory ending in a single measured basis state.
pub fn run_noisy_trajectory(
    cc: &CompiledCircuit,
    psi0: BasisState,
    p: u32,
    noise: &NoiseSpec,
    rng: &mut impl Rng,
) -> Result<BasisState> {
    let sv = noisy_final_state(cc, psi0, p, noise, rng)?;
    BasisState::new(sample_code(&sv, rng), cc.n)
}

/// The exact measurement distribution after `p` ideal steps.
pub fn ideal_distribution(cc: &CompiledCircuit, psi0: BasisState, p: u32) -> Result<Distribution> {
    if psi0.num_qubits() != cc.n {
        return Err(Error::QubitCountMismatch(psi0.num_qubits(), cc.n));
    }
    let mut sv = Statevector::from_basis(psi0);
    cc.apply_steps(&mut sv, 0, p as u64)?;
    Distribution::from_statevector(&sv)
}

/// Stable per-shot seed stream: two rounds of splitmix64 over
/// `(base, p, shot)`.
pub fn derive_seed(base: u64, p: u32, shot: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
    splitmix(splitmix(base ^ splitmix(p as u64 + 1)) ^ shot)
}

/// The measurements taken after `p` steps: `m` independent trajectories,
/// each with a fresh noise realization.
#[derive(Clone, Debug)]
pub struct MeasurementRecord {
    pub n: u8,
    pub p: u32,
    pub shots: Vec<u64>,
    pub noise: NoiseSpec,
}

impl MeasurementRecord {
    pub fn num_shots(&self) -> u64 {
        self.shots.len() as u64
    }

    /// Multiplicity of each distinct outcome.
    pub fn counts(&self) -> HashMap<u64, u64> {
        let mut counts = HashMap::new();
        for &code in &self.shots {
            *counts.entry(code).or_insert(0) += 1;
        }
        counts
    }
}

/// Sample `m` measurement shots at step `p`: independent noisy trajectories
/// seeded per `(base_seed, p, shot)`, collected in shot order.
pub fn sample_measurements(
    cc: &CompiledCircuit,
    psi0: BasisState,
    p: u32,
    m: u64,
    noise: &NoiseSpec,
) -> Result<MeasurementRecord> {
    if m == 0 {
        return Err(Error::InvalidParameter("shot count must be at least 1".into()));
    }
    if psi0.num_qubits() != cc.n {
        return Err(Error::QubitCountMismatch(psi0.num_qubits(), cc.n));
    }
    noise.validate()?;
    let shots: Vec<u64> = if noise.eps() == 0.0 {
        // noiseless trajectories coincide, so evolve once and let each
        // shot's RNG draw only its measurement; identical output to the
        // general path, shot for shot
        let mut sv = Statevector::from_basis(psi0);
        cc.apply_steps(&mut sv, 0, p as u64)?;
        let table = SampleTable::new(&sv);
        exec::map_range(0..m, |shot| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(noise.rng_seed, p, shot));
            table.sample(&mut rng)
        })
    } else {
        exec::map_range(0..m, |shot| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(noise.rng_seed, p, shot));
            let sv = noisy_final_state(cc, psi0, p, noise, &mut rng)
                .expect("inputs validated before dispatch");
            sample_code(&sv, &mut rng)
        })
    };
    Ok(MeasurementRecord { n: cc.n, p, shots, noise: *noise })
}

/// Measurement records for every step count `0..=steps`.
pub fn run_measurement_series(
    cc: &CompiledCircuit,
    psi0: BasisState,
    steps: u32,
    m: u64,
    noise: &NoiseSpec,
) -> Result<Vec<MeasurementRecord>> {
    (0..=steps).map(|p| sample_measurements(cc, psi0, p, m, noise)).collect()
}

/// Header of a measurement run file; serialized as the first JSONL line and
/// echoed into every derived output.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunHeader {
    pub model: String,
    pub n: u8,
    pub theta: f64,
    pub eps3: f64,
    pub m: u64,
    pub base_seed: u64,
    pub init: String,
    pub steps: u32,
    pub version: String,
}

/// A full measurement run: header plus one record per step count.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub header: RunHeader,
    pub records: Vec<MeasurementRecord>,
}

#[derive(Serialize, Deserialize)]
struct ShotLine<'a> {
    p: u32,
    ket: std::borrow::Cow<'a, str>,
    shot: u64,
}

impl RunRecord {
    /// Serialize as JSONL: a header line, then one `{p, ket, shot}` line per
    /// measurement in `(p, shot)` order.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("serializable");
        out.push('\n');
        for rec in &self.records {
            for (shot, &code) in rec.shots.iter().enumerate() {
                let b = BasisState::new(code, rec.n).expect("recorded shots are valid");
                let line = ShotLine { p: rec.p, ket: b.ket().into(), shot: shot as u64 };
                out.push_str(&serde_json::to_string(&line).expect("serializable"));
                out.push('\n');
            }
        }
        out
    }

    /// Parse the JSONL form; shots must appear in `(p, shot)` order.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header_line = lines
            .next()
            .ok_or_else(|| Error::MalformedRecord("empty record file".into()))?;
        let header: RunHeader = serde_json::from_str(header_line)
            .map_err(|e| Error::MalformedRecord(format!("bad header: {e}")))?;
        let noise = NoiseSpec { eps_over_3: header.eps3, rng_seed: header.base_seed };
        let mut records: Vec<MeasurementRecord> = Vec::new();
        for line in lines {
            let shot: ShotLine =
                serde_json::from_str(line).map_err(|e| Error::MalformedRecord(e.to_string()))?;
            let code = BasisState::parse_ket(&shot.ket, header.n)?.code();
            match records.last_mut() {
                Some(rec) if rec.p == shot.p => {
                    if shot.shot != rec.shots.len() as u64 {
                        return Err(Error::MalformedRecord(format!(
                            "shot index {} out of order at p={}",
                            shot.shot, shot.p
                        )));
                    }
                    rec.shots.push(code);
                }
                _ => {
                    if shot.shot != 0 {
                        return Err(Error::MalformedRecord(format!(
                            "record for p={} does not start at shot 0",
                            shot.p
                        )));
                    }
                    records.push(MeasurementRecord {
                        n: header.n,
                        p: shot.p,
                        shots: vec![code],
                        noise,
                    });
                }
            }
        }
        Ok(Self { header, records })
    }
}

/// Mix a worker-independent RNG for ad-hoc uses (oracle trial draws).
pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

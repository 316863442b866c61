//! Probability distributions over basis states, KL divergence, the
//! KL-based fidelity score, reference distributions, and the post-selection
//! filter with its per-step fidelity curves.
//!
//! Distributions are sparse and iterate in sorted code order, so every
//! reduction is reproducible bit for bit regardless of worker count.

use std::collections::BTreeMap;

use crate::basis::BasisState;
use crate::pathfind::{self, SearchCache};
use crate::sim::{self, MeasurementRecord};
use crate::sps::{self, Subspace};
use crate::{exec, Error, Model, Result};

/// Largest system for which a dense uniform distribution is materialized.
pub const MAX_DENSE_QUBITS: u8 = 26;

/// A normalized sparse probability distribution over n-qubit basis states.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    weights: BTreeMap<u64, f64>,
    n: u8,
}

impl Distribution {
    /// Normalize a sparse weight map. Weights must be nonnegative with a
    /// positive sum; zero entries are dropped.
    pub fn from_weights(weights: BTreeMap<u64, f64>, n: u8) -> Result<Self> {
        if n > crate::basis::MAX_QUBITS {
            return Err(Error::TooManyQubits(n as u32));
        }
        let mut total = 0.0;
        for (&code, &w) in &weights {
            if n < 64 && code >> n != 0 {
                return Err(Error::CodeOutOfRange { code, n });
            }
            if !(w >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative weight {w} at code {code}")));
            }
            total += w;
        }
        if total <= 0.0 {
            return Err(Error::InvalidParameter("distribution has zero total weight".into()));
        }
        let weights = weights
            .into_iter()
            .filter(|&(_, w)| w > 0.0)
            .map(|(c, w)| (c, w / total))
            .collect();
        Ok(Self { weights, n })
    }

    /// Point mass on a single state.
    pub fn point_mass(b: BasisState) -> Self {
        Self { weights: BTreeMap::from([(b.code(), 1.0)]), n: b.num_qubits() }
    }

    /// Uniform over all 2^n states (materialized; small n only).
    pub fn uniform(n: u8) -> Result<Self> {
        if n > MAX_DENSE_QUBITS {
            return Err(Error::SweepTooLarge { n, limit: MAX_DENSE_QUBITS });
        }
        let d = 1u64 << n;
        let w = 1.0 / d as f64;
        Ok(Self { weights: (0..d).map(|c| (c, w)).collect(), n })
    }

    /// Uniform over the members of a subspace.
    pub fn uniform_over(g: &Subspace) -> Self {
        let w = 1.0 / g.len() as f64;
        Self {
            weights: g.sorted_codes().into_iter().map(|c| (c, w)).collect(),
            n: g.num_qubits(),
        }
    }

    /// Empirical distribution of a sequence of measured codes.
    pub fn from_counts(codes: impl IntoIterator<Item = u64>, n: u8) -> Result<Self> {
        let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
        for code in codes {
            *counts.entry(code).or_insert(0.0) += 1.0;
        }
        Self::from_weights(counts, n)
    }

    /// Measurement distribution `|amps|^2` of a statevector, keeping only
    /// strictly positive entries.
    pub fn from_statevector(sv: &sim::Statevector) -> Result<Self> {
        let weights: BTreeMap<u64, f64> = sv
            .amplitudes()
            .iter()
            .enumerate()
            .filter_map(|(i, a)| {
                let p = a.norm_sqr();
                (p > 0.0).then_some((i as u64, p))
            })
            .collect();
        Self::from_weights(weights, sv.num_qubits())
    }

    pub fn num_qubits(&self) -> u8 {
        self.n
    }

    pub fn prob(&self, code: u64) -> f64 {
        self.weights.get(&code).copied().unwrap_or(0.0)
    }

    pub fn support_len(&self) -> usize {
        self.weights.len()
    }

    /// Entries in ascending code order.
    pub fn iter(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.weights.iter().map(|(&c, &w)| (c, w))
    }

    pub fn total(&self) -> f64 {
        self.weights.values().sum()
    }
}

/// Uniform distribution over the full Hilbert space (the fully decohered
/// limit of raw measurement data).
pub fn p_irn(n: u8) -> Result<Distribution> {
    Distribution::uniform(n)
}

/// Uniform distribution over one subspace (the fully decohered limit of
/// post-selected data).
pub fn p_isps(g: &Subspace) -> Distribution {
    Distribution::uniform_over(g)
}

/// Kullback-Leibler divergence `sum_b P(b) ln(P(b) / max(Q(b), floor))`.
///
/// Terms with `P(b) = 0` contribute nothing; the floor regularizes bins
/// where `Q` vanishes (otherwise one stray shot makes the divergence
/// infinite). The same floor must be used in any ratio of divergences.
pub fn kl_divergence(p: &Distribution, q: &Distribution, floor: f64) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::QubitCountMismatch(p.n, q.n));
    }
    if !(floor > 0.0) {
        return Err(Error::InvalidParameter(format!("KL floor must be positive, got {floor}")));
    }
    let mut acc = 0.0;
    for (code, pw) in p.iter() {
        acc += pw * (pw / q.prob(code).max(floor)).ln();
    }
    Ok(acc)
}

/// Divergence of the uniform full-space distribution from `q`, computed in
/// closed form so it never materializes 2^n entries.
fn kl_uniform_from(q: &Distribution, floor: f64) -> f64 {
    let d = (q.n as f64).exp2();
    let log_inv_d = -(q.n as f64) * std::f64::consts::LN_2;
    let mut acc = 0.0;
    for (_, qw) in q.iter() {
        acc += (log_inv_d - qw.max(floor).ln()) / d;
    }
    let outside = d - q.support_len() as f64;
    acc += outside / d * (log_inv_d - floor.ln());
    acc
}

/// KL-based fidelity score
/// `1 - D(P_sim, P_ideal) / D(P_uniform, P_ideal)`:
/// 1 when the simulated distribution matches the ideal one, 0 when it has
/// decohered to uniform random noise.
pub fn fidelity(p_sim: &Distribution, p_ideal: &Distribution, floor: f64) -> Result<f64> {
    if p_sim.n != p_ideal.n {
        return Err(Error::QubitCountMismatch(p_sim.n, p_ideal.n));
    }
    let denominator = kl_uniform_from(p_ideal, floor);
    if denominator.abs() < 1e-12 {
        return Err(Error::DegenerateReference);
    }
    let numerator = kl_divergence(p_sim, p_ideal, floor)?;
    Ok(1.0 - numerator / denominator)
}

/// Result of filtering one measurement record.
#[derive(Clone, Debug)]
pub struct Postselected {
    /// Renormalized distribution over accepted shots; `None` when every
    /// shot was rejected (a reportable outcome, not a crash).
    pub distribution: Option<Distribution>,
    pub kept: u64,
    pub total: u64,
}

/// Keep the shots whose state passes `accept`, renormalizing the empirical
/// distribution over survivors. The predicate runs once per distinct
/// outcome. Rejected shots are never replaced.
pub fn postselect(
    rec: &MeasurementRecord,
    accept: impl Fn(BasisState) -> bool,
) -> Result<Postselected> {
    if rec.shots.is_empty() {
        return Err(Error::InvalidParameter("empty measurement record".into()));
    }
    let mut counts: BTreeMap<u64, f64> = BTreeMap::new();
    for &code in &rec.shots {
        *counts.entry(code).or_insert(0.0) += 1.0;
    }
    let mut kept = 0u64;
    let mut weights = BTreeMap::new();
    for (&code, &count) in &counts {
        if accept(BasisState::new(code, rec.n)?) {
            kept += count as u64;
            weights.insert(code, count);
        }
    }
    let distribution =
        if kept == 0 { None } else { Some(Distribution::from_weights(weights, rec.n)?) };
    Ok(Postselected { distribution, kept, total: rec.shots.len() as u64 })
}

/// Per-search-width column of a fidelity curve row.
#[derive(Clone, Debug)]
pub struct MuColumn {
    pub mu: u32,
    /// `None` when post-selection rejected every shot.
    pub fidelity: Option<f64>,
    pub kept: u64,
}

/// One row of a fidelity curve: the raw and post-selected scores at step `p`.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub p: u32,
    pub m: u64,
    pub f_raw: f64,
    /// Score of the uniform-over-subspace reference at this step.
    pub f_isps: f64,
    pub per_mu: Vec<MuColumn>,
    /// Post-selection with exact subspace membership, when requested.
    pub f_exact: Option<f64>,
    pub kept_exact: Option<u64>,
}

/// Configuration of [`fidelity_curve`].
#[derive(Clone, Debug)]
pub struct CurveConfig {
    /// Search widths to post-select with.
    pub mus: Vec<u32>,
    /// KL floor; defaults to `1 / (10 m)` for an m-shot record.
    pub floor: Option<f64>,
    /// Also post-select with exact subspace membership.
    pub include_exact_sps: bool,
}

impl CurveConfig {
    pub fn new(mus: Vec<u32>) -> Self {
        Self { mus, floor: None, include_exact_sps: false }
    }
}

/// Score a full measurement series: for each record, the raw fidelity, the
/// post-selected fidelity at each search width, and the uniform-in-subspace
/// reference.
pub fn fidelity_curve(
    model: &Model,
    psi0: BasisState,
    records: &[MeasurementRecord],
    cfg: &CurveConfig,
) -> Result<Vec<CurvePoint>> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no measurement records".into()));
    }
    let cc = sim::compile(&model.circuit);
    let subspace = sps::enumerate_sps(&model.maps, psi0, sps::DEFAULT_CAP)?;
    let isps = p_isps(&subspace);

    // One shared cache and reference minimum per search width.
    let mut searchers: Vec<(u32, SearchCache, u64)> = Vec::new();
    for &mu in &cfg.mus {
        let cache = SearchCache::new(&model.maps, mu);
        let reference = pathfind::chi(&model.maps, psi0, mu, Some(&cache))?.minimum.code();
        searchers.push((mu, cache, reference));
    }

    let rows: Vec<Result<CurvePoint>> = exec::map_slice(records, |rec| {
        let m = rec.num_shots();
        let floor = cfg.floor.unwrap_or(1.0 / (10.0 * m as f64));
        let ideal = sim::ideal_distribution(&cc, psi0, rec.p)?;
        let raw = Distribution::from_counts(rec.shots.iter().copied(), rec.n)?;
        let f_raw = fidelity(&raw, &ideal, floor)?;
        let f_isps = fidelity(&isps, &ideal, floor)?;

        let mut per_mu = Vec::with_capacity(searchers.len());
        for (mu, cache, reference) in &searchers {
            let ps = postselect(rec, |b| {
                pathfind::chi(&model.maps, b, *mu, Some(cache))
                    .map(|r| r.minimum.code() == *reference)
                    .unwrap_or(false)
            })?;
            let fid = match &ps.distribution {
                Some(dist) => Some(fidelity(dist, &ideal, floor)?),
                None => None,
            };
            per_mu.push(MuColumn { mu: *mu, fidelity: fid, kept: ps.kept });
        }

        let (f_exact, kept_exact) = if cfg.include_exact_sps {
            let ps = postselect(rec, |b| subspace.contains(b))?;
            let fid = match &ps.distribution {
                Some(dist) => Some(fidelity(dist, &ideal, floor)?),
                None => None,
            };
            (fid, Some(ps.kept))
        } else {
            (None, None)
        };

        Ok(CurvePoint { p: rec.p, m, f_raw, f_isps, per_mu, f_exact, kept_exact })
    });
    rows.into_iter().collect()
}

/// Render curve rows as CSV with `#`-prefixed header comments.
pub fn curve_to_csv(rows: &[CurvePoint], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str("# ");
        out.push_str(c);
        out.push('\n');
    }
    out.push_str("p,F_raw");
    if let Some(first) = rows.first() {
        for col in &first.per_mu {
            out.push_str(&format!(",F_ps_mu{},M_kept_mu{}", col.mu, col.mu));
        }
        if first.f_exact.is_some() || first.kept_exact.is_some() {
            out.push_str(",F_ps_exact,M_kept_exact");
        }
    }
    out.push_str(",F_isps,M\n");
    for row in rows {
        out.push_str(&format!("{},{}", row.p, fmt(row.f_raw)));
        for col in &row.per_mu {
            out.push_str(&format!(",{},{}", opt(col.fidelity), col.kept));
        }
        if row.f_exact.is_some() || row.kept_exact.is_some() {
            out.push_str(&format!(",{},{}", opt(row.f_exact), row.kept_exact.unwrap_or(0)));
        }
        out.push_str(&format!(",{},{}\n", fmt(row.f_isps), row.m));
    }
    out
}

/// Gnuplot-ready whitespace-separated table of the same rows.
pub fn curve_to_gnuplot(rows: &[CurvePoint]) -> String {
    let mut out = String::from("# p F_raw");
    if let Some(first) = rows.first() {
        for col in &first.per_mu {
            out.push_str(&format!(" F_ps_mu{}", col.mu));
        }
    }
    out.push_str(" F_isps\n");
    for row in rows {
        out.push_str(&format!("{} {}", row.p, fmt(row.f_raw)));
        for col in &row.per_mu {
            out.push_str(&format!(" {}", opt(col.fidelity)));
        }
        out.push_str(&format!(" {}\n", fmt(row.f_isps)));
    }
    out
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_else(|| "nan".into())
}

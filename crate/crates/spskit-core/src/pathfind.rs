//! Greedy depth-limited search for the minimum integer-encoded state of a
//! symmetry-protected subspace, and the shared-subspace accept/reject
//! verdict built on it.
//!
//! From a start state the search repeatedly takes the smallest state in the
//! radius-`mu` neighborhood (a breadth-first ball over the edit maps) until
//! no smaller state appears. Every step follows edit-map edges, so the
//! result provably shares a subspace with the start; an `Accept` verdict
//! (two searches colliding) is sound, while `Reject` is heuristic and can
//! misfire when a search stalls in a false minimum.

use std::collections::{HashSet, VecDeque};

use dashmap::DashMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::BasisState;
use crate::editmap::EditMapSet;
use crate::{exec, sps, Error, Result};

/// Outcome of one greedy descent.
#[derive(Clone, Copy, Debug)]
pub struct SearchResult {
    pub start: BasisState,
    /// The fixed point reached: minimum over its own mu-ball.
    pub minimum: BasisState,
    /// Number of greedy descent moves taken.
    pub depth: u32,
    /// States discovered across all ball expansions of this call.
    pub nodes_expanded: u64,
    pub mu: u32,
}

/// Accept/reject decision for one measured state.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Verdict {
    /// Both searches reached the same minimum: the states provably share a
    /// subspace, so the measurement is assumed error-free.
    Accept,
    /// The searches disagree: assumed to be an error (heuristically; a
    /// false minimum can cause a false rejection).
    Reject,
}

/// Memo of resolved searches, shared across calls and threads.
///
/// Only states on the greedy descent path are recorded: a fresh search from
/// any such state provably reaches the same minimum with the recorded
/// remaining depth, so cached and uncached searches return identical
/// results. Keyed to one edit map set and one `mu`.
pub struct SearchCache {
    entries: DashMap<u64, CacheEntry>,
    mu: u32,
    fingerprint: u64,
}

#[derive(Clone, Copy)]
struct CacheEntry {
    minimum: u64,
    depth: u32,
}

impl SearchCache {
    pub fn new(maps: &EditMapSet, mu: u32) -> Self {
        Self { entries: DashMap::new(), mu, fingerprint: maps.fingerprint() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check(&self, maps: &EditMapSet, mu: u32) -> Result<()> {
        if self.mu != mu || self.fingerprint != maps.fingerprint() {
            return Err(Error::InvalidParameter(
                "search cache was built for a different edit map set or depth limit".into(),
            ));
        }
        Ok(())
    }
}

/// Scratch buffers reused across ball expansions.
#[derive(Default)]
struct BallScratch {
    visited: HashSet<u64>,
    queue: VecDeque<(u64, u32)>,
    images: Vec<u64>,
}

/// Expand the breadth-first ball of radius `mu` around `start`, returning
/// its minimum element and the number of states discovered.
fn ball_min(maps: &EditMapSet, start: u64, mu: u32, scratch: &mut BallScratch) -> (u64, u64) {
    scratch.visited.clear();
    scratch.queue.clear();
    scratch.visited.insert(start);
    scratch.queue.push_back((start, 0));
    let mut min = start;
    while let Some((code, eta)) = scratch.queue.pop_front() {
        if eta == mu {
            break; // all states at the depth limit are already recorded
        }
        scratch.images.clear();
        maps.neighbors_into(code, &mut scratch.images);
        for &img in &scratch.images {
            if scratch.visited.insert(img) {
                min = min.min(img);
                scratch.queue.push_back((img, eta + 1));
            }
        }
    }
    (min, scratch.visited.len() as u64)
}

/// All states within `mu` edit-map applications of `b`, sorted by code;
/// always contains `b`.
pub fn mu_ball(maps: &EditMapSet, b: BasisState, mu: u32) -> Result<Vec<BasisState>> {
    if b.num_qubits() != maps.n() {
        return Err(Error::QubitCountMismatch(b.num_qubits(), maps.n()));
    }
    if mu == 0 {
        return Err(Error::InvalidParameter("search radius mu must be at least 1".into()));
    }
    let mut scratch = BallScratch::default();
    ball_min(maps, b.code(), mu, &mut scratch);
    let mut codes: Vec<u64> = scratch.visited.iter().copied().collect();
    codes.sort_unstable();
    codes.into_iter().map(|c| BasisState::new(c, maps.n())).collect()
}

fn chi_code(
    maps: &EditMapSet,
    start: u64,
    mu: u32,
    cache: Option<&SearchCache>,
    scratch: &mut BallScratch,
) -> (u64, u32, u64) {
    let mut curr = start;
    let mut moves = 0u32;
    let mut expanded = 0u64;
    let mut path: Vec<u64> = Vec::new();
    let (minimum, total_depth) = loop {
        if let Some(cache) = cache {
            if let Some(hit) = cache.entries.get(&curr).map(|e| *e) {
                break (hit.minimum, moves + hit.depth);
            }
        }
        path.push(curr);
        let (min, n_seen) = ball_min(maps, curr, mu, scratch);
        expanded += n_seen;
        if min >= curr {
            debug_assert_eq!(min, curr, "ball always contains its center");
            break (curr, moves);
        }
        curr = min;
        moves += 1;
    };
    if let Some(cache) = cache {
        for (i, &state) in path.iter().enumerate() {
            cache.entries.insert(
                state,
                CacheEntry { minimum, depth: total_depth - i as u32 },
            );
        }
    }
    (minimum, total_depth, expanded)
}

/// Greedy descent from `b0` to the minimum of its mu-ball fixed point.
///
/// With a cache, previously resolved descent-path states short-circuit the
/// search; the returned minimum and depth are identical either way.
pub fn chi(
    maps: &EditMapSet,
    b0: BasisState,
    mu: u32,
    cache: Option<&SearchCache>,
) -> Result<SearchResult> {
    if b0.num_qubits() != maps.n() {
        return Err(Error::QubitCountMismatch(b0.num_qubits(), maps.n()));
    }
    if mu == 0 {
        return Err(Error::InvalidParameter("search radius mu must be at least 1".into()));
    }
    if let Some(cache) = cache {
        cache.check(maps, mu)?;
    }
    let mut scratch = BallScratch::default();
    let (minimum, depth, nodes_expanded) = chi_code(maps, b0.code(), mu, cache, &mut scratch);
    Ok(SearchResult {
        start: b0,
        minimum: BasisState::new(minimum, maps.n())?,
        depth,
        nodes_expanded,
        mu,
    })
}

/// Post-selection verdict: `Accept` iff the searches from the prepared and
/// measured states reach the same minimum.
pub fn verdict(
    maps: &EditMapSet,
    psi0: BasisState,
    b_f: BasisState,
    mu: u32,
    cache: Option<&SearchCache>,
) -> Result<Verdict> {
    let a = chi(maps, psi0, mu, cache)?;
    let b = chi(maps, b_f, mu, cache)?;
    Ok(if a.minimum == b.minimum { Verdict::Accept } else { Verdict::Reject })
}

/// Aggregate statistics of a whole-space search sweep.
#[derive(Clone, Copy, Debug)]
pub struct SweepStats {
    pub n: u8,
    pub mu: u32,
    pub total: u64,
    /// States whose search terminated away from the true subspace minimum.
    pub failures: u64,
    /// Longest descent observed.
    pub max_depth: u32,
    pub nodes_expanded: u64,
}

impl SweepStats {
    pub fn failure_rate(&self) -> f64 {
        self.failures as f64 / self.total as f64
    }
}

/// True minimum per state via an ascending-seed component sweep; because
/// seeds ascend, each component's seed is its minimum.
fn component_minima(maps: &EditMapSet, n: u8, cap: usize) -> Result<Vec<u64>> {
    if n > sps::MAX_SWEEP_QUBITS {
        return Err(Error::SweepTooLarge { n, limit: sps::MAX_SWEEP_QUBITS });
    }
    let total: usize = 1 << n;
    let mut minima = vec![u64::MAX; total];
    let mut queue = VecDeque::new();
    let mut members = Vec::new();
    let mut images = Vec::new();
    for seed in 0..total as u64 {
        if minima[seed as usize] != u64::MAX {
            continue;
        }
        minima[seed as usize] = seed;
        members.clear();
        members.push(seed);
        queue.clear();
        queue.push_back(seed);
        while let Some(code) = queue.pop_front() {
            images.clear();
            maps.neighbors_into(code, &mut images);
            for &img in &images {
                if minima[img as usize] == u64::MAX {
                    minima[img as usize] = seed;
                    members.push(img);
                    queue.push_back(img);
                    if members.len() > cap {
                        return Err(Error::SubspaceTooLarge { cap });
                    }
                }
            }
        }
    }
    Ok(minima)
}

/// Run the greedy search from every one of the 2^n states, comparing each
/// result against the true component minimum.
pub fn chi_sweep(maps: &EditMapSet, n: u8, mu: u32) -> Result<SweepStats> {
    if n != maps.n() {
        return Err(Error::QubitCountMismatch(n, maps.n()));
    }
    if mu == 0 {
        return Err(Error::InvalidParameter("search radius mu must be at least 1".into()));
    }
    let minima = component_minima(maps, n, sps::DEFAULT_CAP)?;
    let cache = SearchCache::new(maps, mu);

    #[derive(Clone, Copy, Default)]
    struct Acc {
        failures: u64,
        max_depth: u32,
        expanded: u64,
    }

    let acc = exec::fold_range(
        0..1u64 << n,
        Acc::default(),
        |code| {
            let mut scratch = BallScratch::default();
            let (min, depth, expanded) = chi_code(maps, code, mu, Some(&cache), &mut scratch);
            Acc {
                failures: (min != minima[code as usize]) as u64,
                max_depth: depth,
                expanded,
            }
        },
        |a, b| Acc {
            failures: a.failures + b.failures,
            max_depth: a.max_depth.max(b.max_depth),
            expanded: a.expanded + b.expanded,
        },
    );

    Ok(SweepStats {
        n,
        mu,
        total: 1 << n,
        failures: acc.failures,
        max_depth: acc.max_depth,
        nodes_expanded: acc.expanded,
    })
}

/// Uniform sampling spec for [`failure_rate`] on systems too large to sweep.
#[derive(Clone, Copy, Debug)]
pub struct SampleSpec {
    pub count: u64,
    pub seed: u64,
}

/// Search reliability report.
#[derive(Clone, Copy, Debug)]
pub struct FailureReport {
    pub n: u8,
    pub mu: u32,
    pub failures: u64,
    pub total: u64,
    /// Present when sampling was used: the sample seed and the Wilson 95%
    /// interval on the failure proportion.
    pub sample_seed: Option<u64>,
    pub ci95: Option<(f64, f64)>,
}

impl FailureReport {
    pub fn rate(&self) -> f64 {
        self.failures as f64 / self.total as f64
    }
}

/// Proportion of states whose search misses the true subspace minimum;
/// exhaustive over 2^n states, or over a uniform sample when given.
pub fn failure_rate(
    maps: &EditMapSet,
    n: u8,
    mu: u32,
    sample: Option<SampleSpec>,
) -> Result<FailureReport> {
    match sample {
        None => {
            let stats = chi_sweep(maps, n, mu)?;
            Ok(FailureReport {
                n,
                mu,
                failures: stats.failures,
                total: stats.total,
                sample_seed: None,
                ci95: None,
            })
        }
        Some(spec) => {
            if n != maps.n() {
                return Err(Error::QubitCountMismatch(n, maps.n()));
            }
            if spec.count == 0 {
                return Err(Error::InvalidParameter("sample count must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            let states: Vec<u64> = (0..spec.count)
                .map(|_| {
                    if n == 64 {
                        rng.random::<u64>()
                    } else {
                        rng.random_range(0..1u64 << n)
                    }
                })
                .collect();
            let cache = SearchCache::new(maps, mu);
            let failures: u64 = exec::map_slice(&states, |&code| {
                let b = BasisState::new(code, n).expect("sampled in range");
                let truth = sps::enumerate_sps(maps, b, sps::DEFAULT_CAP)
                    .map(|g| g.min_element().code());
                let mut scratch = BallScratch::default();
                let (min, _, _) = chi_code(maps, code, mu, Some(&cache), &mut scratch);
                match truth {
                    Ok(t) => (min != t) as u64,
                    Err(_) => 1, // unverifiable counts as failure
                }
            })
            .iter()
            .sum();
            Ok(FailureReport {
                n,
                mu,
                failures,
                total: spec.count,
                sample_seed: Some(spec.seed),
                ci95: Some(wilson95(failures, spec.count)),
            })
        }
    }
}

/// Longest greedy descent over all 2^n states.
pub fn max_depth(maps: &EditMapSet, n: u8, mu: u32) -> Result<u32> {
    Ok(chi_sweep(maps, n, mu)?.max_depth)
}

fn wilson95(failures: u64, total: u64) -> (f64, f64) {
    let z = 1.959963984540054f64;
    let t = total as f64;
    let p = failures as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{self, ModelKind};
    use proptest::prelude::*;

    fn hopping_maps(n: u8) -> EditMapSet {
        models::build_hopping(n, 0.3).unwrap().maps
    }

    #[test]
    fn mu_ball_examples() {
        let maps = hopping_maps(4);
        let ball = mu_ball(&maps, BasisState::from_ket("0110").unwrap(), 1).unwrap();
        let kets: Vec<String> = ball.iter().map(|b| b.ket()).collect();
        assert_eq!(kets, ["1010", "0110", "0101"]);

        let frozen = mu_ball(&maps, BasisState::zero(4), 1).unwrap();
        assert_eq!(frozen, vec![BasisState::zero(4)]);
    }

    #[test]
    fn mu_ball_radius_n_covers_the_subspace_at_n4() {
        let maps = hopping_maps(4);
        for code in 0..16 {
            let b = BasisState::new(code, 4).unwrap();
            let ball: Vec<u64> = mu_ball(&maps, b, 4).unwrap().iter().map(|s| s.code()).collect();
            let g = sps::enumerate_sps(&maps, b, sps::DEFAULT_CAP).unwrap();
            assert_eq!(ball, g.sorted_codes());
        }
    }

    #[test]
    fn chi_descends_the_swap_chain() {
        let maps = hopping_maps(4);
        let r = chi(&maps, BasisState::from_ket("0011").unwrap(), 1, None).unwrap();
        assert_eq!(r.minimum.ket(), "1100");
        assert_eq!(r.depth, 4);

        let already = chi(&maps, BasisState::from_ket("1100").unwrap(), 1, None).unwrap();
        assert_eq!(already.minimum.ket(), "1100");
        assert_eq!(already.depth, 0);
    }

    #[test]
    fn chi_matches_enumerated_minimum_on_t6() {
        let model = models::build_t6(12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let b = BasisState::new(rng.random_range(0..1u64 << 12), 12).unwrap();
            let r = chi(&model.maps, b, 2, None).unwrap();
            let g = sps::enumerate_sps(&model.maps, b, sps::DEFAULT_CAP).unwrap();
            assert_eq!(r.minimum, g.min_element());
        }
    }

    #[test]
    fn verdict_examples() {
        let model = models::build_heisenberg(15, 0.1).unwrap();
        let psi0 = models::default_initial_state(ModelKind::Heisenberg, 15).unwrap();
        // any permutation with the same particle number is accepted at mu=1
        let same = BasisState::from_ket("000000011111111").unwrap();
        assert_eq!(same.popcount(), psi0.popcount());
        assert_eq!(verdict(&model.maps, psi0, same, 1, None).unwrap(), Verdict::Accept);

        // dropping one particle lands in a disjoint sector
        let fewer = BasisState::from_ket("000000001111111").unwrap();
        assert_eq!(verdict(&model.maps, psi0, fewer, 1, None).unwrap(), Verdict::Reject);

        assert_eq!(verdict(&model.maps, psi0, psi0, 1, None).unwrap(), Verdict::Accept);
    }

    #[test]
    fn accepted_states_really_share_a_subspace() {
        let model = models::build_f4(8).unwrap();
        let psi0 = BasisState::from_ket("01010000").unwrap();
        let g = sps::enumerate_sps(&model.maps, psi0, sps::DEFAULT_CAP).unwrap();
        let cache = SearchCache::new(&model.maps, 1);
        for code in 0..(1u64 << 8) {
            let b = BasisState::new(code, 8).unwrap();
            if verdict(&model.maps, psi0, b, 1, Some(&cache)).unwrap() == Verdict::Accept {
                assert!(g.contains(b), "accepted {} outside the subspace", b.ket());
            }
        }
    }

    #[test]
    fn swap_sweeps_are_exact_with_quadratic_depth() {
        for n in [4u8, 6, 8] {
            let maps = models::build_heisenberg(n, 0.1).unwrap().maps;
            let stats = chi_sweep(&maps, n, 1).unwrap();
            assert_eq!(stats.failures, 0, "n={n}");
            assert_eq!(stats.max_depth, (n as u32 * n as u32) / 4, "n={n}");
        }
    }

    #[test]
    fn t6_sweep_exact_at_mu2() {
        let maps = models::build_t6(10).unwrap().maps;
        assert_eq!(chi_sweep(&maps, 10, 2).unwrap().failures, 0);
        // at mu=1 many searches stall
        assert!(chi_sweep(&maps, 10, 1).unwrap().failures > 0);
    }

    #[test]
    fn cache_does_not_change_results() {
        let model = models::build_f4(10).unwrap();
        let cache = SearchCache::new(&model.maps, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let b = BasisState::new(rng.random_range(0..1u64 << 10), 10).unwrap();
            let cached = chi(&model.maps, b, 3, Some(&cache)).unwrap();
            let fresh = chi(&model.maps, b, 3, None).unwrap();
            assert_eq!(cached.minimum, fresh.minimum);
            assert_eq!(cached.depth, fresh.depth);
        }
        assert!(!cache.is_empty());
    }

    #[test]
    fn cache_rejects_mismatched_settings() {
        let model = models::build_t6(6).unwrap();
        let other = models::build_f4(6).unwrap();
        let cache = SearchCache::new(&model.maps, 2);
        let b = BasisState::zero(6);
        assert!(chi(&model.maps, b, 3, Some(&cache)).is_err());
        assert!(chi(&other.maps, b, 2, Some(&cache)).is_err());
        assert!(chi(&model.maps, b, 2, Some(&cache)).is_ok());
    }

    #[test]
    fn sampled_failure_rate_is_deterministic_and_bounded() {
        let maps = models::build_t6(9).unwrap().maps;
        let spec = SampleSpec { count: 64, seed: 42 };
        let a = failure_rate(&maps, 9, 2, Some(spec)).unwrap();
        let b = failure_rate(&maps, 9, 2, Some(spec)).unwrap();
        assert_eq!(a.failures, b.failures);
        assert_eq!(a.failures, 0);
        let (lo, hi) = a.ci95.unwrap();
        assert!(lo >= 0.0 && hi <= 1.0 && lo <= hi);
    }

    proptest! {
        // chains whose maps swap adjacent bits always descend to 1^s 0^(n-s)
        #[test]
        fn swap_isomorphic_searches_end_in_sorted_bits(code in 0u64..(1 << 10)) {
            let maps = hopping_maps(10);
            let b = BasisState::new(code, 10).unwrap();
            let r = chi(&maps, b, 1, None).unwrap();
            let s = b.popcount();
            let expected = if s == 0 { 0 } else { (1u64 << s) - 1 };
            prop_assert_eq!(r.minimum.code(), expected);
            // one swap per descent move: depth counts inversions resolved
            prop_assert!(r.depth <= 25);
        }
    }
}

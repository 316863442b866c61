//! Enumeration of the symmetry-protected subspace of an initial state, and
//! partition of the whole Hilbert space into disjoint subspaces.
//!
//! A subspace is the connected component of a state in the implicit graph
//! whose edges are single edit-map applications; a FIFO breadth-first search
//! visits each member once, so the cost is `O((m+1) * |G|)` map applications
//! for `m` maps.

use std::collections::HashSet;

use crate::basis::BasisState;
use crate::editmap::EditMapSet;
use crate::{Error, Result};

/// Default cap on enumerated subspace size; subspaces grow exponentially in
/// the worst case, and hitting the cap is an explicit error rather than an
/// exhausted machine.
pub const DEFAULT_CAP: usize = 1 << 28;

/// Largest system for which a full 2^n partition sweep is supported.
pub const MAX_SWEEP_QUBITS: u8 = 24;

/// An enumerated symmetry-protected subspace: the set of basis-state codes
/// reachable from a seed state through the edit maps.
#[derive(Clone, Debug)]
pub struct Subspace {
    members: HashSet<u64>,
    min_code: u64,
    n: u8,
    seed: u64,
}

impl Subspace {
    pub(crate) fn from_members(members: HashSet<u64>, n: u8, seed: u64) -> Self {
        debug_assert!(members.contains(&seed));
        let min_code = members.iter().copied().min().expect("subspace is nonempty");
        Self { members, min_code, n, seed }
    }

    /// Number of member states.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a subspace always contains its seed
    }

    pub fn num_qubits(&self) -> u8 {
        self.n
    }

    /// The state the subspace was enumerated from.
    pub fn seed(&self) -> BasisState {
        BasisState::new(self.seed, self.n).expect("seed was validated")
    }

    /// The minimum integer-encoded member.
    pub fn min_element(&self) -> BasisState {
        BasisState::new(self.min_code, self.n).expect("member was validated")
    }

    /// Hashed membership test.
    pub fn contains(&self, b: BasisState) -> bool {
        b.num_qubits() == self.n && self.members.contains(&b.code())
    }

    pub fn codes(&self) -> &HashSet<u64> {
        &self.members
    }

    /// Members sorted by integer code.
    pub fn sorted_codes(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.members.iter().copied().collect();
        v.sort_unstable();
        v
    }

    pub fn iter(&self) -> impl Iterator<Item = BasisState> + '_ {
        self.members.iter().map(|&c| BasisState::new(c, self.n).expect("member was validated"))
    }
}

/// Membership test; free-function form of [`Subspace::contains`].
pub fn contains(g: &Subspace, b: BasisState) -> bool {
    g.contains(b)
}

/// Enumerate the symmetry-protected subspace of `psi0` with a FIFO
/// breadth-first search over the edit maps, stopping when no new states are
/// found. Fails with [`Error::SubspaceTooLarge`] if more than `cap` states
/// are visited.
pub fn enumerate_sps(maps: &EditMapSet, psi0: BasisState, cap: usize) -> Result<Subspace> {
    if psi0.num_qubits() != maps.n() {
        return Err(Error::QubitCountMismatch(psi0.num_qubits(), maps.n()));
    }
    let mut members = HashSet::new();
    members.insert(psi0.code());
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(psi0.code());
    let mut images = Vec::new();
    while let Some(code) = queue.pop_front() {
        images.clear();
        maps.neighbors_into(code, &mut images);
        for &img in &images {
            if members.insert(img) {
                if members.len() > cap {
                    return Err(Error::SubspaceTooLarge { cap });
                }
                queue.push_back(img);
            }
        }
    }
    Ok(Subspace::from_members(members, maps.n(), psi0.code()))
}

/// Partition the full 2^n Hilbert space into disjoint subspaces by sweeping
/// seeds in ascending code order; each returned subspace's seed is therefore
/// its own minimum element. A 2^n bitmap tracks visited states.
pub fn partition_hilbert(maps: &EditMapSet, n: u8, cap: usize) -> Result<Vec<Subspace>> {
    if n != maps.n() {
        return Err(Error::QubitCountMismatch(n, maps.n()));
    }
    if n > MAX_SWEEP_QUBITS {
        return Err(Error::SweepTooLarge { n, limit: MAX_SWEEP_QUBITS });
    }
    let total: u64 = 1 << n;
    let mut visited = vec![0u64; (total as usize).div_ceil(64)];
    let mut out = Vec::new();
    for seed in 0..total {
        if visited[(seed / 64) as usize] >> (seed % 64) & 1 == 1 {
            continue;
        }
        let g = enumerate_sps(maps, BasisState::new(seed, n)?, cap)?;
        for &code in g.codes() {
            visited[(code / 64) as usize] |= 1 << (code % 64);
        }
        out.push(g);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn kets(g: &Subspace) -> Vec<String> {
        g.sorted_codes()
            .into_iter()
            .map(|c| BasisState::new(c, g.num_qubits()).unwrap().ket())
            .collect()
    }

    #[test]
    fn swap_chain_two_particle_sector() {
        let model = models::build_hopping(4, 0.3).unwrap();
        let g = enumerate_sps(&model.maps, BasisState::from_ket("1100").unwrap(), DEFAULT_CAP).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(kets(&g), ["1100", "1010", "0110", "1001", "0101", "0011"]);
        assert_eq!(g.min_element().ket(), "1100");
    }

    #[test]
    fn zero_state_is_a_singleton() {
        let model = models::build_hopping(4, 0.3).unwrap();
        let g = enumerate_sps(&model.maps, BasisState::zero(4), DEFAULT_CAP).unwrap();
        assert_eq!(g.len(), 1);
        assert!(g.contains(BasisState::zero(4)));
    }

    #[test]
    fn hopping_partition_matches_pascal_row() {
        let model = models::build_hopping(4, 0.3).unwrap();
        let parts = partition_hilbert(&model.maps, 4, DEFAULT_CAP).unwrap();
        let mut sizes: Vec<usize> = parts.iter().map(|g| g.len()).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, [1, 1, 4, 4, 6]);
    }

    #[test]
    fn heisenberg_sectors_are_binomial() {
        let model = models::build_heisenberg(6, 0.1).unwrap();
        let parts = partition_hilbert(&model.maps, 6, DEFAULT_CAP).unwrap();
        // every sector is a full particle-number sector
        for g in &parts {
            let s = g.seed().popcount();
            let expected = binomial(6, s as u64);
            assert_eq!(g.len() as u64, expected, "sector s={s}");
            assert!(g.iter().all(|b| b.popcount() == s));
        }
        assert_eq!(parts.len(), 7);
    }

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn partition_is_disjoint_and_covers() {
        let model = models::build_t6(8).unwrap();
        let parts = partition_hilbert(&model.maps, 8, DEFAULT_CAP).unwrap();
        let mut seen = HashSet::new();
        for g in &parts {
            for code in g.codes() {
                assert!(seen.insert(*code), "state {code} in two subspaces");
            }
        }
        assert_eq!(seen.len(), 1 << 8);
    }

    #[test]
    fn seed_choice_does_not_change_the_subspace() {
        let model = models::build_t6(7).unwrap();
        let g = enumerate_sps(&model.maps, BasisState::from_ket("0011000").unwrap(), DEFAULT_CAP).unwrap();
        for code in g.sorted_codes() {
            let other = enumerate_sps(&model.maps, BasisState::new(code, 7).unwrap(), DEFAULT_CAP).unwrap();
            assert_eq!(other.sorted_codes(), g.sorted_codes());
        }
    }

    #[test]
    fn subspace_is_closed_under_the_maps() {
        let model = models::build_f4(9).unwrap();
        let g = enumerate_sps(
            &model.maps,
            models::default_initial_state(models::ModelKind::F4, 9).unwrap(),
            DEFAULT_CAP,
        )
        .unwrap();
        for b in g.iter() {
            for img in model.maps.apply(b).unwrap() {
                assert!(g.contains(img));
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let model = models::build_heisenberg(10, 0.1).unwrap();
        let afm = models::default_initial_state(models::ModelKind::Heisenberg, 10).unwrap();
        assert!(matches!(
            enumerate_sps(&model.maps, afm, 10),
            Err(Error::SubspaceTooLarge { cap: 10 })
        ));
    }

    #[test]
    fn membership_examples() {
        let model = models::build_hopping(4, 0.3).unwrap();
        let g = enumerate_sps(&model.maps, BasisState::from_ket("1100").unwrap(), DEFAULT_CAP).unwrap();
        assert!(g.contains(BasisState::from_ket("0101").unwrap()));
        assert!(!g.contains(BasisState::from_ket("1110").unwrap()));
        assert!(g.contains(g.seed()));
    }

    #[test]
    fn f4_partition_has_nontrivial_structure() {
        let model = models::build_f4(10).unwrap();
        let parts = partition_hilbert(&model.maps, 10, DEFAULT_CAP).unwrap();
        let nontrivial = parts.iter().filter(|g| g.len() > 1).count();
        assert!(nontrivial >= 4, "only {nontrivial} nontrivial subspaces");
        assert_eq!(parts.iter().map(|g| g.len()).sum::<usize>(), 1 << 10);
    }
}

//! Bit-level representation of computational basis states and extraction /
//! insertion of k-local substrings.
//!
//! Qubit `i` corresponds to the bit of weight `2^i`, and ket strings are read
//! left to right as qubit `0` to qubit `n-1` (least- to most-significant).
//! Under this ordering the all-ones-then-zeros string `1^s 0^(n-s)` is the
//! integer minimum of its particle-number sector, which is what the greedy
//! search in [`crate::pathfind`] descends to.

use crate::{Error, Result};

/// Maximum supported system size: one machine word.
pub const MAX_QUBITS: u8 = 64;

/// An n-qubit computational basis state encoded as an unsigned integer.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    code: u64,
    n: u8,
}

impl BasisState {
    /// Wrap an integer code, checking `code < 2^n` and `n <= 64`.
    pub fn new(code: u64, n: u8) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n as u32));
        }
        if n < 64 && code >> n != 0 {
            return Err(Error::CodeOutOfRange { code, n });
        }
        Ok(Self { code, n })
    }

    /// The all-zeros state on `n` qubits.
    pub fn zero(n: u8) -> Self {
        Self { code: 0, n }
    }

    /// Parse a ket string of `n` characters in `{0,1}`; character `j` sets
    /// the bit of weight `2^j`.
    pub fn parse_ket(text: &str, n: u8) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n as u32));
        }
        if text.len() != n as usize {
            return Err(Error::BadKet {
                text: text.to_string(),
                reason: format!("expected {} characters, got {}", n, text.len()),
            });
        }
        let mut code = 0u64;
        for (j, ch) in text.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => code |= 1 << j,
                other => {
                    return Err(Error::BadKet {
                        text: text.to_string(),
                        reason: format!("non-binary character {other:?}"),
                    })
                }
            }
        }
        Ok(Self { code, n })
    }

    /// Parse a ket string, taking the qubit count from its length.
    pub fn from_ket(text: &str) -> Result<Self> {
        let n = u8::try_from(text.len()).map_err(|_| Error::TooManyQubits(text.len() as u32))?;
        Self::parse_ket(text, n)
    }

    /// Render as a ket string; inverse of [`BasisState::parse_ket`].
    pub fn ket(&self) -> String {
        (0..self.n).map(|i| if self.bit(i) { '1' } else { '0' }).collect()
    }

    pub fn code(&self) -> u64 {
        self.code
    }

    pub fn num_qubits(&self) -> u8 {
        self.n
    }

    pub fn bit(&self, i: u8) -> bool {
        debug_assert!(i < self.n);
        self.code >> i & 1 == 1
    }

    /// Number of set bits (particle number in the Z basis).
    pub fn popcount(&self) -> u32 {
        self.code.count_ones()
    }
}

impl std::fmt::Display for BasisState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.ket())
    }
}

impl std::fmt::Debug for BasisState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "|{}>", self.ket())
    }
}

/// An ordered list of k distinct qubit indices a local operator acts on.
///
/// Indices need not be contiguous. Local patterns are k-bit integers where
/// pattern bit `j` corresponds to qubit `indices[j]`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LocalWindow {
    indices: Vec<u8>,
}

/// Largest window a local pattern table can describe.
pub const MAX_WINDOW: usize = 16;

impl LocalWindow {
    pub fn new(indices: Vec<u8>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::BadWindow(indices, "empty window".into()));
        }
        if indices.len() > MAX_WINDOW {
            return Err(Error::BadWindow(
                indices,
                format!("more than {MAX_WINDOW} qubits"),
            ));
        }
        let mut seen = 0u64;
        for &i in &indices {
            if i >= MAX_QUBITS {
                return Err(Error::WindowOutOfRange { index: i, n: MAX_QUBITS });
            }
            if seen >> i & 1 == 1 {
                return Err(Error::BadWindow(indices.clone(), format!("repeated index {i}")));
            }
            seen |= 1 << i;
        }
        Ok(Self { indices })
    }

    /// Contiguous window `[lo..=hi]`.
    pub fn range(lo: u8, hi: u8) -> Result<Self> {
        Self::new((lo..=hi).collect())
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u8] {
        &self.indices
    }

    /// Bitmask of all window qubits.
    pub fn mask(&self) -> u64 {
        self.indices.iter().fold(0, |m, &i| m | 1 << i)
    }

    pub fn max_index(&self) -> u8 {
        *self.indices.iter().max().expect("window is nonempty")
    }

    /// Check all indices fit a system of `n` qubits.
    pub fn validate_for(&self, n: u8) -> Result<()> {
        match self.indices.iter().find(|&&i| i >= n) {
            Some(&i) => Err(Error::WindowOutOfRange { index: i, n }),
            None => Ok(()),
        }
    }

    /// Scatter a local pattern onto the window's bit positions.
    #[inline]
    pub fn spread(&self, pattern: u32) -> u64 {
        let mut out = 0u64;
        for (j, &i) in self.indices.iter().enumerate() {
            out |= ((pattern as u64 >> j) & 1) << i;
        }
        out
    }
}

/// Read the local pattern of `b` at window `w`: bit `j` of the result is bit
/// `w.indices()[j]` of `b`.
pub fn extract_local(b: BasisState, w: &LocalWindow) -> Result<u32> {
    w.validate_for(b.num_qubits())?;
    Ok(extract_code(b.code(), w.indices()))
}

/// Replace the bits of `b` at window `w` with the pattern `pat`; all other
/// bits are unchanged.
pub fn replace_local(b: BasisState, w: &LocalWindow, pat: u32) -> Result<BasisState> {
    w.validate_for(b.num_qubits())?;
    if pat as u64 >> w.k() != 0 {
        return Err(Error::PatternOutOfRange { pattern: pat, k: w.k() });
    }
    let code = b.code() & !w.mask() | w.spread(pat);
    BasisState::new(code, b.num_qubits())
}

/// Unchecked pattern extraction on a raw code; hot-path form of
/// [`extract_local`].
#[inline]
pub(crate) fn extract_code(code: u64, indices: &[u8]) -> u32 {
    let mut pat = 0u32;
    for (j, &i) in indices.iter().enumerate() {
        pat |= (((code >> i) & 1) as u32) << j;
    }
    pat
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_ket_follows_bit_order() {
        assert_eq!(BasisState::parse_ket("1100", 4).unwrap().code(), 3);
        assert_eq!(BasisState::parse_ket("0000", 4).unwrap().code(), 0);
        assert_eq!(BasisState::parse_ket("0101", 4).unwrap().code(), 10);
    }

    #[test]
    fn parse_ket_rejects_bad_input() {
        assert!(BasisState::parse_ket("12a0", 4).is_err());
        assert!(BasisState::parse_ket("110", 4).is_err());
        assert!(BasisState::parse_ket("1100", 3).is_err());
    }

    #[test]
    fn extract_examples() {
        let b = BasisState::from_ket("0110").unwrap();
        let w = LocalWindow::new(vec![1, 2]).unwrap();
        assert_eq!(extract_local(b, &w).unwrap(), 3);
        let w = LocalWindow::new(vec![0, 3]).unwrap();
        assert_eq!(extract_local(b, &w).unwrap(), 0);

        let b = BasisState::from_ket("10110").unwrap();
        let w = LocalWindow::new(vec![0, 1, 2, 3, 4]).unwrap();
        assert_eq!(extract_local(b, &w).unwrap(), b.code() as u32);
    }

    #[test]
    fn replace_examples() {
        let b = BasisState::from_ket("0100").unwrap();
        let w = LocalWindow::new(vec![1, 2]).unwrap();
        // pattern bits (0, 1): qubit 1 cleared, qubit 2 set
        let out = replace_local(b, &w, 0b10).unwrap();
        assert_eq!(out.ket(), "0010");

        let b = BasisState::from_ket("00000").unwrap();
        let w = LocalWindow::new(vec![2]).unwrap();
        assert_eq!(replace_local(b, &w, 1).unwrap().ket(), "00100");

        assert!(replace_local(b, &w, 2).is_err());
    }

    #[test]
    fn code_range_is_checked() {
        assert!(BasisState::new(16, 4).is_err());
        assert!(BasisState::new(15, 4).is_ok());
        assert!(BasisState::new(u64::MAX, 64).is_ok());
        assert!(BasisState::new(0, 65).is_err());
    }

    fn window_strategy(n: u8) -> impl Strategy<Value = LocalWindow> {
        proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=(n as usize).min(6))
            .prop_shuffle()
            .prop_map(|idx| LocalWindow::new(idx).unwrap())
    }

    proptest! {
        #[test]
        fn replace_extract_round_trip(code in 0u64..(1 << 12), w in window_strategy(12)) {
            let b = BasisState::new(code, 12).unwrap();
            let pat = extract_local(b, &w).unwrap();
            prop_assert_eq!(replace_local(b, &w, pat).unwrap(), b);
        }

        #[test]
        fn replace_only_touches_window(
            code in 0u64..(1 << 12),
            pat in 0u32..64,
            w in window_strategy(12),
        ) {
            let pat = pat & ((1 << w.k()) - 1);
            let b = BasisState::new(code, 12).unwrap();
            let out = replace_local(b, &w, pat).unwrap();
            prop_assert_eq!((out.code() ^ b.code()) & !w.mask(), 0);
            prop_assert_eq!(extract_local(out, &w).unwrap(), pat);
        }

        #[test]
        fn ket_round_trip(code in 0u64..(1 << 16)) {
            let b = BasisState::new(code, 16).unwrap();
            prop_assert_eq!(BasisState::parse_ket(&b.ket(), 16).unwrap(), b);
        }
    }
}

//! Binary strings over Z₂^N and the Walsh–Hadamard transform.
//!
//! Bit `j` of the packed word holds qubit `j + 1`. As text, the leftmost
//! character is qubit 1, so `"1000"` has only bit 0 set. The packed word is
//! also the computational-basis index used by [`crate::states::StateVector`].

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest N representable in a single machine word.
pub const MAX_QUBITS: usize = 64;

/// An element of Z₂^N, 1 ≤ N ≤ 64. Ordered numerically by its packed bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct BitString {
    bits: u64,
    len: u8,
}

#[inline]
fn mask(len: usize) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl BitString {
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len == 0 || len > MAX_QUBITS {
            return Err(Error::InvalidBitString(format!("length {len} outside 1..=64")));
        }
        if bits & !mask(len) != 0 {
            return Err(Error::InvalidBitString(format!(
                "bits {bits:#x} do not fit in {len} positions"
            )));
        }
        Ok(Self { bits, len: len as u8 })
    }

    /// Builds a string without range checks. `len` must be in `1..=64` and
    /// `bits` must fit.
    #[inline]
    pub(crate) fn from_raw(bits: u64, len: usize) -> Self {
        debug_assert!((1..=MAX_QUBITS).contains(&len) && bits & !mask(len) == 0);
        Self { bits, len: len as u8 }
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(0, len)
    }

    pub fn ones(len: usize) -> Result<Self> {
        Self::new(mask(len), len)
    }

    /// String whose first `weight` qubits are set.
    pub fn leading_ones(len: usize, weight: usize) -> Result<Self> {
        if weight > len {
            return Err(Error::InvalidBitString(format!("weight {weight} > length {len}")));
        }
        Self::new(mask(weight), len)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Value of qubit `j` (0-based).
    #[inline]
    pub fn get(&self, j: usize) -> bool {
        (self.bits >> j) & 1 == 1
    }

    /// Hamming weight h(s).
    #[inline]
    pub fn weight(&self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn xor(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len, other.len);
        Self { bits: self.bits ^ other.bits, len: self.len }
    }

    #[inline]
    pub fn and(&self, other: &Self) -> Self {
        debug_assert_eq!(self.len, other.len);
        Self { bits: self.bits & other.bits, len: self.len }
    }

    /// Complement within the declared length.
    #[inline]
    pub fn not(&self) -> Self {
        Self { bits: !self.bits & mask(self.len()), len: self.len }
    }

    /// Z₂ inner product α·κ.
    #[inline]
    pub fn dot_mod2(&self, other: &Self) -> u8 {
        debug_assert_eq!(self.len, other.len);
        ((self.bits & other.bits).count_ones() & 1) as u8
    }

    pub fn checked_xor(&self, other: &Self) -> Result<Self> {
        if self.len != other.len {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self.xor(other))
    }

    /// Same fraction of ones on a different length, packed to the front.
    pub fn rescaled(&self, len: usize) -> Result<Self> {
        let w = (self.weight() as f64 * len as f64 / self.len() as f64).round() as usize;
        Self::leading_ones(len, w.min(len))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for j in 0..self.len() {
            f.write_str(if self.get(j) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.len() > MAX_QUBITS {
            return Err(Error::InvalidBitString(format!("`{s}` must have 1..=64 characters")));
        }
        let mut bits = 0u64;
        for (j, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << j,
                _ => return Err(Error::InvalidBitString(format!("`{s}` contains `{c}`"))),
            }
        }
        Self::new(bits, s.len())
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// In-place Walsh–Hadamard transform: `out[α] = Σ_κ (−1)^{α·κ} v[κ]`.
///
/// Unnormalized, so applying it twice multiplies by the length.
pub fn walsh_hadamard(v: &mut [Complex64]) -> Result<()> {
    let len = v.len();
    if !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    let mut h = 1;
    while h < len {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn weights() {
        assert_eq!(bs("0000").weight(), 0);
        assert_eq!(bs("1011").weight(), 3);
        assert_eq!(bs("1100").xor(&bs("1010")), bs("0110"));
        assert_eq!(bs("1100").xor(&bs("1010")).weight(), 2);
    }

    #[test]
    fn text_round_trip_keeps_qubit_order() {
        let s = bs("1000");
        assert_eq!(s.bits(), 1);
        assert!(s.get(0));
        assert_eq!(s.to_string(), "1000");
        assert_eq!(BitString::leading_ones(6, 2).unwrap().to_string(), "110000");
    }

    #[test]
    fn rejects_bad_input() {
        assert!("10a1".parse::<BitString>().is_err());
        assert!("".parse::<BitString>().is_err());
        assert!(BitString::new(0b100, 2).is_err());
        assert!(bs("10").checked_xor(&bs("101")).is_err());
        let mut v = vec![Complex64::new(1.0, 0.0); 6];
        assert!(matches!(walsh_hadamard(&mut v), Err(Error::NotPowerOfTwo(6))));
    }

    #[test]
    fn full_width_strings() {
        let ones = BitString::ones(64).unwrap();
        assert_eq!(ones.weight(), 64);
        assert_eq!(ones.not().weight(), 0);
    }

    #[test]
    fn wht_delta_and_constant() {
        let n = 4;
        let mut delta = vec![Complex64::new(0.0, 0.0); 1 << n];
        delta[0] = Complex64::new(1.0, 0.0);
        walsh_hadamard(&mut delta).unwrap();
        assert!(delta.iter().all(|c| (*c - 1.0).norm() < 1e-15));

        let mut ones = vec![Complex64::new(1.0, 0.0); 1 << n];
        walsh_hadamard(&mut ones).unwrap();
        assert!((ones[0].re - 16.0).abs() < 1e-12);
        assert!(ones[1..].iter().all(|c| c.norm() < 1e-12));
    }

    fn naive_wht(v: &[Complex64]) -> Vec<Complex64> {
        (0..v.len())
            .map(|a| {
                v.iter()
                    .enumerate()
                    .map(|(k, x)| if (a & k).count_ones() % 2 == 0 { *x } else { -*x })
                    .sum()
            })
            .collect()
    }

    fn vector(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
            .prop_map(|v| v.into_iter().map(|(r, i)| Complex64::new(r, i)).collect())
    }

    proptest! {
        #[test]
        fn inclusion_exclusion(a in any::<u64>(), b in any::<u64>(), len in 1usize..=64) {
            let m = mask(len);
            let (x, y) = (BitString::new(a & m, len).unwrap(), BitString::new(b & m, len).unwrap());
            prop_assert_eq!(x.xor(&y).weight() + 2 * x.and(&y).weight(), x.weight() + y.weight());
            prop_assert_eq!(x.xor(&y), y.xor(&x));
            prop_assert_eq!(x.xor(&x).weight(), 0);
            prop_assert!(x.dot_mod2(&y) <= 1);
        }

        #[test]
        fn wht_is_an_involution_up_to_scale(v in (1usize..=12).prop_flat_map(vector)) {
            let n = v.len().trailing_zeros();
            let mut w = v.clone();
            walsh_hadamard(&mut w).unwrap();
            let parseval: f64 = w.iter().map(|c| c.norm_sqr()).sum::<f64>()
                - (1u64 << n) as f64 * v.iter().map(|c| c.norm_sqr()).sum::<f64>();
            prop_assert!(parseval.abs() < 1e-9 * (1u64 << n) as f64);
            walsh_hadamard(&mut w).unwrap();
            let scale = (1u64 << n) as f64;
            for (x, y) in v.iter().zip(w.iter()) {
                prop_assert!((*x * scale - *y).norm() < 1e-12 * scale);
            }
        }

        #[test]
        fn wht_matches_naive_sum(v in vector(6)) {
            let mut w = v.clone();
            walsh_hadamard(&mut w).unwrap();
            for (x, y) in w.iter().zip(naive_wht(&v).iter()) {
                prop_assert!((*x - *y).norm() < 1e-12);
            }
        }
    }
}

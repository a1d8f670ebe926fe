//! Measurement outcomes as fixed-width bitstrings.
//!
//! Bit `i` of the packed value is the outcome of qubit `i`, so the packed
//! value is exactly the statevector index of the basis state. The textual
//! form is written most-significant qubit first (qubit `n-1` leftmost), the
//! same order a binary literal of the index would use.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest register a bitstring can describe.
pub const MAX_BITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    n: usize,
    value: u64,
}

impl BitString {
    pub fn new(n: usize, value: u64) -> Result<Self> {
        if n == 0 || n > MAX_BITS {
            return Err(Error::InvalidDimension(format!(
                "bitstring width {n} outside 1..={MAX_BITS}"
            )));
        }
        if n < 64 && value >> n != 0 {
            return Err(Error::InvalidBitString(format!(
                "value {value:#x} does not fit in {n} bits"
            )));
        }
        Ok(Self { n, value })
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(n, 0).expect("width checked by caller")
    }

    pub fn ones(n: usize) -> Self {
        let value = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Self { n, value }
    }

    /// Builds from per-qubit bits, `bits[i]` being qubit `i`.
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let value = bits
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i));
        Self::new(bits.len(), value)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Packed value; also the statevector index of this basis state.
    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn index(&self) -> usize {
        self.value as usize
    }

    pub fn bit(&self, qubit: usize) -> bool {
        (self.value >> qubit) & 1 == 1
    }

    pub fn bits(&self) -> Vec<bool> {
        (0..self.n).map(|q| self.bit(q)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(Self {
            n: self.n,
            value: self.value ^ other.value,
        })
    }

    pub fn hamming_weight(&self) -> u32 {
        self.value.count_ones()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in (0..self.n).rev() {
            f.write_str(if self.bit(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > MAX_BITS {
            return Err(Error::InvalidBitString(s.to_string()));
        }
        let mut value = 0u64;
        for ch in s.chars() {
            value <<= 1;
            match ch {
                '0' => {}
                '1' => value |= 1,
                _ => return Err(Error::InvalidBitString(s.to_string())),
            }
        }
        Self::new(s.len(), value)
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

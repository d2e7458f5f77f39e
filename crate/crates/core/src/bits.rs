//! Bit sequences exchanged between the coding chains and the modem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What a [`BitBlock`] currently holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitRole {
    Payload,
    Encoded,
    Chips,
}

/// An ordered sequence of hard bits, each stored as a `u8` holding 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitBlock {
    bits: Vec<u8>,
    role: BitRole,
}

impl BitBlock {
    pub fn new(bits: Vec<u8>, role: BitRole) -> Result<Self> {
        if let Some((index, &value)) = bits.iter().enumerate().find(|(_, &b)| b > 1) {
            return Err(Error::InvalidBit { index, value });
        }
        Ok(Self { bits, role })
    }

    /// Builds a block from values already known to be 0/1.
    pub(crate) fn from_raw(bits: Vec<u8>, role: BitRole) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self { bits, role }
    }

    pub fn payload(bits: Vec<u8>) -> Result<Self> {
        Self::new(bits, BitRole::Payload)
    }

    /// Unpacks bytes LSB first, the on-air bit order of both BLE and 802.15.4.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes
            .iter()
            .flat_map(|&byte| (0..8).map(move |i| (byte >> i) & 1))
            .collect();
        Self::from_raw(bits, BitRole::Payload)
    }

    /// Packs the bits LSB first; a trailing partial byte is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|chunk| {
                chunk
                    .iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | (b << i))
            })
            .collect()
    }

    pub fn role(&self) -> BitRole {
        self.role
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bitwise XOR of two equal-length blocks; `None` on length mismatch.
    pub fn xor(&self, other: &BitBlock) -> Option<BitBlock> {
        if self.len() != other.len() {
            return None;
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a ^ b)
            .collect();
        Some(Self::from_raw(bits, self.role))
    }

    /// Number of differing positions; `None` on length mismatch.
    pub fn hamming(&self, other: &BitBlock) -> Option<usize> {
        (self.len() == other.len()).then(|| hamming(&self.bits, &other.bits))
    }
}

pub(crate) fn hamming(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

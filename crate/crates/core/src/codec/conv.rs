//! Rate-1/2, constraint-length-4 convolutional code of the BLE LE Coded PHY
//! and its hard-decision Viterbi decoder.
//!
//! Generators from the Bluetooth Core Specification LE Coded FEC encoder:
//! `G0(x) = 1 + x + x^2 + x^3`, `G1(x) = 1 + x^2 + x^3`. For each input bit
//! the encoder emits `c0` (from `G0`) then `c1` (from `G1`). The register is
//! flushed with [`TAIL_BITS`] zeros so every codeword ends in state 0.

use crate::bits::{BitBlock, BitRole};
use crate::error::{Error, Result};

pub const TAIL_BITS: usize = 3;
const STATES: usize = 1 << TAIL_BITS;

/// Tap masks over the register `b_n | b_{n-1} << 1 | b_{n-2} << 2 | b_{n-3} << 3`.
const G0_MASK: u8 = 0b1111;
const G1_MASK: u8 = 0b1101;

#[inline]
fn outputs(reg: u8) -> (u8, u8) {
    (
        ((reg & G0_MASK).count_ones() & 1) as u8,
        ((reg & G1_MASK).count_ones() & 1) as u8,
    )
}

pub fn conv_encode(payload: &BitBlock) -> Result<BitBlock> {
    if payload.is_empty() {
        return Err(Error::EmptyPayload);
    }
    let mut out = Vec::with_capacity(2 * (payload.len() + TAIL_BITS));
    let mut state = 0u8;
    for &bit in payload.bits().iter().chain([0u8; TAIL_BITS].iter()) {
        let reg = (state << 1) | bit;
        let (c0, c1) = outputs(reg);
        out.push(c0);
        out.push(c1);
        state = reg & (STATES as u8 - 1);
    }
    Ok(BitBlock::from_raw(out, BitRole::Encoded))
}

/// Minimum-Hamming-distance decoding over the terminated trellis.
///
/// Each state keeps the survivor with the smaller accumulated distance; on a
/// tie it keeps the predecessor whose departing (oldest) register bit is 0.
pub fn viterbi_decode(received: &BitBlock) -> Result<BitBlock> {
    let rx = received.bits();
    if rx.len() % 2 != 0 {
        return Err(Error::Misaligned {
            what: "viterbi_decode input",
            len: rx.len(),
            multiple: 2,
        });
    }
    let min = 2 * (1 + TAIL_BITS);
    if rx.len() < min {
        return Err(Error::TooShort {
            what: "viterbi_decode input",
            len: rx.len(),
            min,
        });
    }

    const UNREACHED: u32 = u32::MAX / 2;
    let steps = rx.len() / 2;
    let mut metric = [UNREACHED; STATES];
    metric[0] = 0;
    // decisions[step * STATES + state] = oldest bit of the chosen predecessor.
    let mut decisions = vec![0u8; steps * STATES];

    for (step, pair) in rx.chunks_exact(2).enumerate() {
        let mut next = [UNREACHED; STATES];
        for ns in 0..STATES {
            let mut best = UNREACHED;
            let mut choice = 0u8;
            for oldest in 0..2u8 {
                let prev = (ns >> 1) | ((oldest as usize) << 2);
                let reg = ns as u8 | (oldest << 3);
                let (c0, c1) = outputs(reg);
                let branch = (c0 ^ pair[0]) as u32 + (c1 ^ pair[1]) as u32;
                let m = metric[prev].saturating_add(branch);
                if m < best {
                    best = m;
                    choice = oldest;
                }
            }
            next[ns] = best;
            decisions[step * STATES + ns] = choice;
        }
        metric = next;
    }

    let mut state = 0usize;
    let mut bits = vec![0u8; steps];
    for step in (0..steps).rev() {
        bits[step] = (state & 1) as u8;
        let oldest = decisions[step * STATES + state] as usize;
        state = (state >> 1) | (oldest << 2);
    }
    bits.truncate(steps - TAIL_BITS);
    Ok(BitBlock::from_raw(bits, BitRole::Payload))
}

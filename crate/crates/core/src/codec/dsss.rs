//! 32-chip direct-sequence spreading of 4-bit symbols.

use crate::bits::{BitBlock, BitRole};
use crate::error::{Error, Result};

pub const CHIPS_PER_SYMBOL: usize = 32;
pub const BITS_PER_SYMBOL: usize = 4;

/// Symbol-to-chip table of the IEEE 802.15.4 2450 MHz O-QPSK PHY
/// (IEEE Std 802.15.4-2020, Table 12-1). Bit `i` of each word is chip `c_i`,
/// so `c0` (transmitted first) is the least significant bit.
const CHIP_TABLE: [u32; 16] = [
    0x744A_C39B, // 0
    0x44AC_39B7, // 1
    0x4AC3_9B74, // 2
    0xAC39_B744, // 3
    0xC39B_744A, // 4
    0x39B7_44AC, // 5
    0x9B74_4AC3, // 6
    0xB744_AC39, // 7
    0xDEE0_6931, // 8
    0xEE06_931D, // 9
    0xE069_31DE, // 10
    0x0693_1DEE, // 11
    0x6931_DEE0, // 12
    0x931D_EE06, // 13
    0x31DE_E069, // 14
    0x1DEE_0693, // 15
];

pub fn chips_for_symbol(symbol: usize) -> [u8; CHIPS_PER_SYMBOL] {
    let word = CHIP_TABLE[symbol & 0xF];
    std::array::from_fn(|i| ((word >> i) & 1) as u8)
}

/// Spreads each 4-bit group (first bit is the symbol LSB) onto its chip sequence.
pub fn dsss_spread(payload: &BitBlock) -> Result<BitBlock> {
    let bits = payload.bits();
    if bits.len() % BITS_PER_SYMBOL != 0 {
        return Err(Error::Misaligned {
            what: "dsss_spread input",
            len: bits.len(),
            multiple: BITS_PER_SYMBOL,
        });
    }
    let chips = bits
        .chunks(BITS_PER_SYMBOL)
        .flat_map(|group| {
            let symbol = group
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &b)| acc | ((b as usize) << i));
            chips_for_symbol(symbol)
        })
        .collect();
    Ok(BitBlock::from_raw(chips, BitRole::Chips))
}

/// Minimum-Hamming-distance symbol decision; ties go to the lowest symbol.
pub fn despread_symbol(chips: &[u8]) -> usize {
    debug_assert_eq!(chips.len(), CHIPS_PER_SYMBOL);
    let word = chips
        .iter()
        .enumerate()
        .fold(0u32, |acc, (i, &c)| acc | ((c as u32) << i));
    (0..16)
        .min_by_key(|&s| ((word ^ CHIP_TABLE[s]).count_ones(), s))
        .unwrap_or(0)
}

pub fn dsss_despread(chips: &BitBlock) -> Result<BitBlock> {
    let chips = chips.bits();
    if chips.len() % CHIPS_PER_SYMBOL != 0 {
        return Err(Error::Misaligned {
            what: "dsss_despread input",
            len: chips.len(),
            multiple: CHIPS_PER_SYMBOL,
        });
    }
    let bits = chips
        .chunks(CHIPS_PER_SYMBOL)
        .flat_map(|group| {
            let symbol = despread_symbol(group);
            (0..BITS_PER_SYMBOL).map(move |i| ((symbol >> i) & 1) as u8)
        })
        .collect();
    Ok(BitBlock::from_raw(bits, BitRole::Payload))
}

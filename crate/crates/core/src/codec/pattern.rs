//! Four-chip pattern mapper of the BLE 125K coded PHY: `0 -> 0011`, `1 -> 1100`.

use crate::bits::{BitBlock, BitRole};
use crate::error::{Error, Result};

const ZERO: [u8; 4] = [0, 0, 1, 1];
const ONE: [u8; 4] = [1, 1, 0, 0];

pub fn pattern_map(coded: &BitBlock) -> BitBlock {
    let chips = coded
        .bits()
        .iter()
        .flat_map(|&b| if b == 0 { ZERO } else { ONE })
        .collect();
    BitBlock::from_raw(chips, BitRole::Chips)
}

/// Nearest-pattern decision per 4-chip group; equal distance decides 0.
pub fn pattern_demap(chips: &BitBlock) -> Result<BitBlock> {
    let chips = chips.bits();
    if chips.len() % 4 != 0 {
        return Err(Error::Misaligned {
            what: "pattern_demap input",
            len: chips.len(),
            multiple: 4,
        });
    }
    let bits = chips.chunks_exact(4).map(demap_group).collect();
    Ok(BitBlock::from_raw(bits, BitRole::Encoded))
}

fn demap_group(group: &[u8]) -> u8 {
    let to_zero = crate::bits::hamming(group, &ZERO);
    let to_one = crate::bits::hamming(group, &ONE);
    u8::from(to_one < to_zero)
}

//! Bit-domain coding chains for the five PHYs.

mod conv;
pub mod dsss;
mod pattern;

pub use conv::{conv_encode, viterbi_decode, TAIL_BITS};
pub use dsss::{dsss_despread, dsss_spread};
pub use pattern::{pattern_demap, pattern_map};

use crate::bits::{BitBlock, BitRole};
use crate::error::Result;
use crate::phy::{Coding, PhyConfig};

/// Runs `data` through the PHY's coding chain, producing on-air bits or chips.
pub fn encode(phy: &PhyConfig, data: &BitBlock) -> Result<BitBlock> {
    match phy.coding {
        Coding::None => Ok(BitBlock::from_raw(data.bits().to_vec(), BitRole::Encoded)),
        Coding::ConvR12 => conv_encode(data),
        Coding::ConvR12Pattern4 => Ok(pattern_map(&conv_encode(data)?)),
        Coding::Dsss32 => dsss_spread(data),
    }
}

/// Inverse of [`encode`] on hard on-air decisions.
pub fn decode(phy: &PhyConfig, air: &BitBlock) -> Result<BitBlock> {
    match phy.coding {
        Coding::None => Ok(BitBlock::from_raw(air.bits().to_vec(), BitRole::Payload)),
        Coding::ConvR12 => viterbi_decode(air),
        Coding::ConvR12Pattern4 => viterbi_decode(&pattern_demap(air)?),
        Coding::Dsss32 => dsss_despread(air),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::PhyKind;
    use proptest::prelude::*;

    #[test]
    fn expansion_ratios() {
        let data = BitBlock::from_bytes(&[0xA5; 30]);
        for kind in PhyKind::ALL {
            let phy = PhyConfig::new(kind);
            let air = encode(&phy, &data).unwrap();
            assert_eq!(air.len(), phy.on_air_len(data.len()), "{kind}");
        }
        let phy = PhyConfig::new(PhyKind::Ble125K);
        assert_eq!(encode(&phy, &data).unwrap().len(), 8 * (240 + 3));
        let phy = PhyConfig::new(PhyKind::Ieee802154);
        assert_eq!(encode(&phy, &data).unwrap().len(), 8 * 240);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn noiseless_chain_round_trip(phy_idx in 0usize..5, bytes in proptest::collection::vec(any::<u8>(), 1..24)) {
            let phy = PhyConfig::new(PhyKind::ALL[phy_idx]);
            let data = BitBlock::from_bytes(&bytes);
            let air = encode(&phy, &data).unwrap();
            let back = decode(&phy, &air).unwrap();
            prop_assert_eq!(back.bits(), data.bits());
        }

        #[test]
        fn conv_code_is_linear(pair in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..64)) {
            let a = BitBlock::payload(pair.iter().map(|p| p.0 as u8).collect()).unwrap();
            let b = BitBlock::payload(pair.iter().map(|p| p.1 as u8).collect()).unwrap();
            let lhs = conv_encode(&a.xor(&b).unwrap()).unwrap();
            let rhs = conv_encode(&a).unwrap().xor(&conv_encode(&b).unwrap()).unwrap();
            prop_assert_eq!(lhs.bits(), rhs.bits());
        }

        #[test]
        fn pattern_round_trip(bits in proptest::collection::vec(0u8..2, 0..200)) {
            let coded = BitBlock::new(bits.clone(), BitRole::Encoded).unwrap();
            let back = pattern_demap(&pattern_map(&coded)).unwrap();
            prop_assert_eq!(back.bits(), &bits[..]);
        }
    }
}

//! Digital redundancy correction: overlap-add of the ten 1.5-bit stage codes
//! and the final 2-bit flash code into a 12-bit output.
//!
//! Stage i carries weight 2^(11-i) and the flash carries unit weight, so each
//! stage overlaps the next by one bit and full scale lands exactly on 4095.
//! Arithmetic saturates at the output range instead of wrapping.

use crate::pipeline::RawCodeFrame;

/// Corrected 12-bit output code in [0, 4095].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct OutputCode(pub u16);

impl OutputCode {
    pub fn value(self) -> u16 {
        self.0
    }
}

/// Apply the redundancy-correction adder to one raw frame.
pub fn correct(frame: &RawCodeFrame) -> OutputCode {
    debug_assert!(frame.stage_codes.iter().all(|&c| c <= 2));
    debug_assert!(frame.flash_code <= 3);
    let mut acc: u32 = frame.flash_code as u32;
    for (i, &code) in frame.stage_codes.iter().enumerate() {
        // Stage index i is 0-based here; weight 2^(11-(i+1)) = 2^(10-i).
        acc += (code as u32) << (10 - i);
    }
    OutputCode(acc.min(4095) as u16)
}

/// Element-wise correction of a frame sequence.
pub fn correct_stream(frames: &[RawCodeFrame]) -> Vec<OutputCode> {
    frames.iter().map(correct).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frame(stage: u8, flash: u8) -> RawCodeFrame {
        RawCodeFrame {
            stage_codes: [stage; 10],
            flash_code: flash,
        }
    }

    #[test]
    fn floor_ceiling_midscale() {
        assert_eq!(correct(&frame(0, 0)).value(), 0);
        assert_eq!(correct(&frame(2, 3)).value(), 4095);
        assert_eq!(correct(&frame(1, 2)).value(), 2048);
    }

    #[test]
    fn empty_and_singleton_streams() {
        assert!(correct_stream(&[]).is_empty());
        let out = correct_stream(&[frame(1, 2)]);
        assert_eq!(out, vec![OutputCode(2048)]);
    }

    proptest! {
        #[test]
        fn output_stays_in_range(codes in prop::array::uniform10(0u8..=2), flash in 0u8..=3) {
            let f = RawCodeFrame { stage_codes: codes, flash_code: flash };
            let v = correct(&f).value();
            prop_assert!(v <= 4095);
        }

        #[test]
        fn monotone_in_each_field(codes in prop::array::uniform10(0u8..=2), flash in 0u8..=3, idx in 0usize..10) {
            let f = RawCodeFrame { stage_codes: codes, flash_code: flash };
            let base = correct(&f).value();
            if codes[idx] < 2 {
                let mut up = f.clone();
                up.stage_codes[idx] += 1;
                prop_assert!(correct(&up).value() >= base);
            }
            if flash < 3 {
                let mut up = f.clone();
                up.flash_code += 1;
                prop_assert!(correct(&up).value() >= base);
            }
        }
    }
}

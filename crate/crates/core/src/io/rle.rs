//! Uncompressed run-length encoding in the column-major convention used by
//! detection benchmarks: runs alternate background/foreground, starting with a
//! (possibly empty) background run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub height: usize,
    pub width: usize,
    pub counts: Vec<u64>,
}

impl RleMask {
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).sum()
    }
}

pub fn rle_encode(mask: &BinaryMask) -> RleMask {
    let (h, w) = mask.dims();
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u64;
    for c in 0..w {
        for r in 0..h {
            let v = mask.get(r, c);
            if v != current {
                counts.push(run);
                run = 0;
                current = v;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        height: h,
        width: w,
        counts,
    }
}

pub fn rle_decode(rle: &RleMask) -> Result<BinaryMask> {
    let expected = (rle.height * rle.width) as u64;
    let got: u64 = rle.counts.iter().sum();
    if got != expected {
        return Err(Error::RleCountMismatch { got, expected });
    }
    let h = rle.height;
    let mut mask = BinaryMask::zeros(rle.height, rle.width);
    let mut idx = 0usize;
    for (i, &run) in rle.counts.iter().enumerate() {
        let fg = i % 2 == 1;
        for k in idx..idx + run as usize {
            if fg {
                mask.set(k % h, k / h, true);
            }
        }
        idx += run as usize;
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_zero() {
        let rle = rle_encode(&BinaryMask::zeros(2, 2));
        assert_eq!(rle.counts, vec![4]);
        assert_eq!(rle_decode(&rle).unwrap(), BinaryMask::zeros(2, 2));
    }

    #[test]
    fn all_one() {
        let rle = rle_encode(&BinaryMask::ones(2, 2));
        assert_eq!(rle.counts, vec![0, 4]);
        assert_eq!(rle_decode(&rle).unwrap(), BinaryMask::ones(2, 2));
    }

    #[test]
    fn single_pixel_column_major() {
        // column-major order: (0,0) (1,0) (0,1) (1,1)
        let mut m = BinaryMask::zeros(2, 2);
        m.set(0, 1, true);
        let rle = rle_encode(&m);
        assert_eq!(rle.counts, vec![2, 1, 1]);
        assert_eq!(rle.area(), 1);

        let back = rle_decode(&RleMask {
            height: 2,
            width: 2,
            counts: vec![2, 1, 1],
        })
        .unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn decode_rejects_bad_sum() {
        let err = rle_decode(&RleMask {
            height: 2,
            width: 2,
            counts: vec![2, 1],
        })
        .unwrap_err();
        assert!(matches!(err, Error::RleCountMismatch { got: 3, expected: 4 }));
    }

    proptest! {
        #[test]
        fn round_trip(h in 1usize..12, w in 1usize..12, seed in any::<u64>()) {
            let mut state = seed;
            let m = BinaryMask::from_fn(h, w, |_, _| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                state >> 63 == 1
            });
            let rle = rle_encode(&m);
            prop_assert_eq!(rle.counts.iter().sum::<u64>(), (h * w) as u64);
            prop_assert_eq!(rle_decode(&rle).unwrap(), m);
        }
    }
}

use crate::error::{Error, Result};

/// Row-major binary mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![true; height * width],
        }
    }

    pub fn from_bits(height: usize, width: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != height * width {
            return Err(Error::DimensionMismatch(format!(
                "mask of {height}x{width} needs {} bits, got {}",
                height * width,
                bits.len()
            )));
        }
        Ok(Self {
            height,
            width,
            bits,
        })
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            bits,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn area(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn same_dims(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims()
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.height, self.width, other.height, other.width
            )))
        }
    }

    pub fn intersection_area(&self, other: &BinaryMask) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count())
    }

    pub fn union_area(&self, other: &BinaryMask) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a || b)
            .count())
    }

    /// In-place union.
    pub fn or_assign(&mut self, other: &BinaryMask) -> Result<()> {
        self.check_dims(other)?;
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    /// In-place set difference `self \ other`.
    pub fn subtract_assign(&mut self, other: &BinaryMask) -> Result<()> {
        self.check_dims(other)?;
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a &= !b;
        }
        Ok(())
    }

    pub fn iou(&self, other: &BinaryMask) -> Result<f64> {
        let union = self.union_area(other)?;
        if union == 0 {
            return Ok(0.0);
        }
        Ok(self.intersection_area(other)? as f64 / union as f64)
    }

    /// Inclusive bounding box `(row_min, col_min, row_max, col_max)`, `None` when empty.
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bbox: Option<(usize, usize, usize, usize)> = None;
        for r in 0..self.height {
            for c in 0..self.width {
                if self.get(r, c) {
                    bbox = Some(match bbox {
                        None => (r, c, r, c),
                        Some((r0, c0, r1, c1)) => (r0.min(r), c0.min(c), r1.max(r), c1.max(c)),
                    });
                }
            }
        }
        bbox
    }

    /// 4-connected component containing `(row, col)`; empty if that pixel is unset.
    pub fn component_at(&self, row: usize, col: usize) -> BinaryMask {
        let mut out = BinaryMask::zeros(self.height, self.width);
        if !self.get(row, col) {
            return out;
        }
        let mut stack = vec![(row, col)];
        out.set(row, col, true);
        while let Some((r, c)) = stack.pop() {
            let mut visit = |rr: usize, cc: usize| {
                if self.get(rr, cc) && !out.get(rr, cc) {
                    out.set(rr, cc, true);
                    stack.push((rr, cc));
                }
            };
            if r > 0 {
                visit(r - 1, c);
            }
            if r + 1 < self.height {
                visit(r + 1, c);
            }
            if c > 0 {
                visit(r, c - 1);
            }
            if c + 1 < self.width {
                visit(r, c + 1);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_bits_rejects_wrong_length() {
        assert!(BinaryMask::from_bits(2, 2, vec![true; 3]).is_err());
    }

    #[test]
    fn set_algebra() {
        let a = BinaryMask::from_fn(3, 3, |r, _| r == 0);
        let b = BinaryMask::from_fn(3, 3, |_, c| c == 0);
        assert_eq!(a.intersection_area(&b).unwrap(), 1);
        assert_eq!(a.union_area(&b).unwrap(), 5);
        let mut d = a.clone();
        d.subtract_assign(&b).unwrap();
        assert_eq!(d.area(), 2);
        assert!(!d.get(0, 0));
    }

    #[test]
    fn component_is_four_connected() {
        // diagonal neighbours are separate components
        let m = BinaryMask::from_fn(3, 3, |r, c| r == c);
        assert_eq!(m.component_at(0, 0).area(), 1);
        let bar = BinaryMask::from_fn(3, 3, |r, _| r == 1);
        assert_eq!(bar.component_at(1, 2).area(), 3);
        assert!(bar.component_at(0, 0).is_empty());
    }

    #[test]
    fn bbox_of_empty_is_none() {
        assert_eq!(BinaryMask::zeros(4, 4).bbox(), None);
        let m = BinaryMask::from_fn(5, 6, |r, c| (1..3).contains(&r) && (2..5).contains(&c));
        assert_eq!(m.bbox(), Some((1, 2, 2, 4)));
    }
}

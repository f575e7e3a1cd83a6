//! Specular coverage and mean intensity over an object mask.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::specrender::{Stimulus, BACKGROUND_GRAY};

/// Coverage threshold on 8-bit gamma-encoded intensity.
pub const DEFAULT_THRESHOLD: u8 = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("mask selects no object pixels")]
    EmptyMask,
    #[error("image has {image} pixels but mask has {mask}")]
    MaskSize { image: usize, mask: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub coverage: f64,
    pub threshold: u8,
    pub object_pixels: usize,
    pub above_pixels: usize,
}

/// Object pixels of an 8-bit image.
#[derive(Debug, Clone, Copy)]
pub struct MaskedImage<'a> {
    image: &'a [u8],
    mask: &'a [bool],
}

impl<'a> MaskedImage<'a> {
    pub fn new(image: &'a [u8], mask: &'a [bool]) -> Result<Self, StatsError> {
        if image.len() != mask.len() {
            return Err(StatsError::MaskSize {
                image: image.len(),
                mask: mask.len(),
            });
        }
        Ok(Self { image, mask })
    }

    fn object_pixels(&self) -> impl Iterator<Item = u8> + '_ {
        self.image.iter().zip(self.mask).filter(|(_, m)| **m).map(|(v, _)| *v)
    }

    /// Fraction of object pixels strictly above `threshold`.
    pub fn coverage(&self, threshold: u8) -> Result<CoverageResult, StatsError> {
        let (object, above) = self
            .object_pixels()
            .fold((0usize, 0usize), |(n, a), v| (n + 1, a + usize::from(v > threshold)));
        if object == 0 {
            return Err(StatsError::EmptyMask);
        }
        Ok(CoverageResult {
            coverage: above as f64 / object as f64,
            threshold,
            object_pixels: object,
            above_pixels: above,
        })
    }

    pub fn mean_intensity(&self) -> Result<f64, StatsError> {
        let (n, sum) = self
            .object_pixels()
            .fold((0usize, 0u64), |(n, s), v| (n + 1, s + u64::from(v)));
        if n == 0 {
            return Err(StatsError::EmptyMask);
        }
        Ok(sum as f64 / n as f64)
    }
}

/// Mask for images without one: every pixel not exactly equal to the
/// background gray is object.
pub fn mask_from_background(image: &[u8]) -> Vec<bool> {
    image.iter().map(|v| *v != BACKGROUND_GRAY).collect()
}

pub fn specular_coverage(stimulus: &Stimulus, threshold: u8) -> Result<CoverageResult, StatsError> {
    MaskedImage::new(stimulus.image(), stimulus.mask())?.coverage(threshold)
}

pub fn mean_intensity(stimulus: &Stimulus) -> Result<f64, StatsError> {
    MaskedImage::new(stimulus.image(), stimulus.mask())?.mean_intensity()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn half(hi: u8, lo: u8) -> (Vec<u8>, Vec<bool>) {
        let mut img = vec![hi; 50];
        img.extend(vec![lo; 50]);
        img.extend(vec![100; 20]);
        let mut mask = vec![true; 100];
        mask.extend(vec![false; 20]);
        (img, mask)
    }

    #[test]
    fn examples() {
        let mask = vec![true; 10];
        let all = MaskedImage::new(&[254; 10], &mask).unwrap();
        assert_eq!(all.coverage(50).unwrap().coverage, 1.0);
        let none = MaskedImage::new(&[0; 10], &mask).unwrap();
        assert_eq!(none.coverage(50).unwrap().coverage, 0.0);
        assert_eq!(none.mean_intensity().unwrap(), 0.0);

        let (img, mask) = half(200, 10);
        let m = MaskedImage::new(&img, &mask).unwrap();
        let c = m.coverage(50).unwrap();
        assert_eq!((c.coverage, c.object_pixels, c.above_pixels), (0.5, 100, 50));
        assert_eq!(m.mean_intensity().unwrap(), 105.0);

        let flat = MaskedImage::new(&[128; 4], &[true; 4]).unwrap();
        assert_eq!(flat.mean_intensity().unwrap(), 128.0);
    }

    #[test]
    fn threshold_is_strict() {
        let m = MaskedImage::new(&[50, 51], &[true, true]).unwrap();
        assert_eq!(m.coverage(50).unwrap().above_pixels, 1);
    }

    #[test]
    fn empty_mask() {
        let m = MaskedImage::new(&[1, 2], &[false, false]).unwrap();
        assert_eq!(m.coverage(50), Err(StatsError::EmptyMask));
        assert_eq!(m.mean_intensity(), Err(StatsError::EmptyMask));
        assert!(MaskedImage::new(&[1], &[true, true]).is_err());
    }

    #[test]
    fn background_heuristic() {
        assert_eq!(mask_from_background(&[100, 99, 254]), vec![false, true, true]);
    }

    proptest! {
        #[test]
        fn coverage_non_increasing_in_threshold(img in prop::collection::vec(any::<u8>(), 1..200)) {
            let mask = vec![true; img.len()];
            let m = MaskedImage::new(&img, &mask).unwrap();
            let mut prev = f64::INFINITY;
            for t in 0..=255u8 {
                let c = m.coverage(t).unwrap().coverage;
                prop_assert!(c <= prev);
                prev = c;
            }
            prop_assert_eq!(m.coverage(255).unwrap().coverage, 0.0);
        }

        #[test]
        fn background_does_not_matter(
            obj in prop::collection::vec(any::<u8>(), 1..100),
            bg1 in prop::collection::vec(any::<u8>(), 0..100),
            seed in any::<u8>(),
        ) {
            let bg2: Vec<u8> = bg1.iter().map(|v| v.wrapping_add(seed)).collect();
            let mut mask = vec![true; obj.len()];
            mask.extend(vec![false; bg1.len()]);
            let a = [obj.clone(), bg1].concat();
            let b = [obj, bg2].concat();
            let ma = MaskedImage::new(&a, &mask).unwrap();
            let mb = MaskedImage::new(&b, &mask).unwrap();
            prop_assert_eq!(ma.coverage(50).unwrap(), mb.coverage(50).unwrap());
            prop_assert_eq!(ma.mean_intensity().unwrap(), mb.mean_intensity().unwrap());
        }

        #[test]
        fn saturating_bright_pixels_keeps_coverage(img in prop::collection::vec(any::<u8>(), 1..200)) {
            let mask = vec![true; img.len()];
            let boosted: Vec<u8> = img.iter().map(|v| if *v > 50 { 255 } else { *v }).collect();
            let a = MaskedImage::new(&img, &mask).unwrap();
            let b = MaskedImage::new(&boosted, &mask).unwrap();
            prop_assert_eq!(a.coverage(50).unwrap(), b.coverage(50).unwrap());
            prop_assert!(b.mean_intensity().unwrap() >= a.mean_intensity().unwrap());
            if img.iter().any(|v| *v > 50 && *v < 255) {
                prop_assert!(b.mean_intensity().unwrap() > a.mean_intensity().unwrap());
            }
        }
    }
}

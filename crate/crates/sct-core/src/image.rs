//! Square attenuation maps on the reconstruction grid.

use alloc::vec;
use alloc::vec::Vec;

use crate::Error;

/// A `size` x `size` image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub size: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(size: usize, data: Vec<f32>) -> Result<Self, Error> {
        if data.len() != size * size {
            return Err(Error::SizeMismatch {
                expected: (size, size),
                got: (data.len() / size.max(1), size),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotFinite);
        }
        Ok(Image { size, data })
    }

    pub fn zeros(size: usize) -> Self {
        Image { size, data: vec![0.0; size * size] }
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.size + x]
    }

    pub fn row(&self, y: usize) -> &[f32] {
        &self.data[y * self.size..(y + 1) * self.size]
    }
}

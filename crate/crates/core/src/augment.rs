//! Exactly linear image augmentations with exact adjoints.
//!
//! Every op is a partial permutation of pixels (zero fill where nothing maps
//! in), so its adjoint is its transpose and gradients pass through exactly.

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{ImageShape, ImageTensor};
use crate::random::stream_rng;

/// Ensemble size used by default.
pub const DEFAULT_ENSEMBLES: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AugmentationOp {
    /// Circular shift: content moves down by `dy` and right by `dx`.
    Roll { dy: isize, dx: isize },
    /// Keep the box, then zero-pad it back to full size, centered.
    CropPad { top: usize, left: usize, height: usize, width: usize },
    HorizontalFlip,
    /// Ops applied left to right.
    Compose(Vec<AugmentationOp>),
}

impl AugmentationOp {
    pub fn is_identity(&self) -> bool {
        match self {
            AugmentationOp::Roll { dy, dx } => *dy == 0 && *dx == 0,
            AugmentationOp::CropPad { .. } | AugmentationOp::HorizontalFlip => false,
            AugmentationOp::Compose(ops) => ops.iter().all(Self::is_identity),
        }
    }

    fn check(&self, shape: ImageShape) -> Result<()> {
        match self {
            AugmentationOp::CropPad { top, left, height, width } => {
                if *height == 0 || *width == 0 || top + height > shape.height || left + width > shape.width {
                    return Err(Error::BoxOutOfBounds {
                        top: *top,
                        left: *left,
                        height: *height,
                        width: *width,
                        image_height: shape.height,
                        image_width: shape.width,
                    });
                }
                Ok(())
            }
            AugmentationOp::Compose(ops) => ops.iter().try_for_each(|op| op.check(shape)),
            _ => Ok(()),
        }
    }

    /// Calls `f(dst, src)` for every pixel position the op maps.
    fn for_each_map(&self, shape: ImageShape, mut f: impl FnMut(usize, usize)) {
        let (h, w) = (shape.height, shape.width);
        match self {
            AugmentationOp::Roll { dy, dx } => {
                for y in 0..h {
                    let sy = (y as isize - dy).rem_euclid(h as isize) as usize;
                    for x in 0..w {
                        let sx = (x as isize - dx).rem_euclid(w as isize) as usize;
                        f(y * w + x, sy * w + sx);
                    }
                }
            }
            AugmentationOp::CropPad { top, left, height, width } => {
                let oy = (h - height) / 2;
                let ox = (w - width) / 2;
                for y in 0..*height {
                    for x in 0..*width {
                        f((oy + y) * w + ox + x, (top + y) * w + left + x);
                    }
                }
            }
            AugmentationOp::HorizontalFlip => {
                for y in 0..h {
                    for x in 0..w {
                        f(y * w + x, y * w + (w - 1 - x));
                    }
                }
            }
            AugmentationOp::Compose(_) => unreachable!("composites are expanded by the caller"),
        }
    }

    fn apply_primitive(&self, shape: ImageShape, x: &[f64], transpose: bool) -> Vec<f64> {
        let c = shape.channels;
        let mut out = vec![0.0; x.len()];
        self.for_each_map(shape, |dst, src| {
            let (to, from) = if transpose { (src, dst) } else { (dst, src) };
            out[to * c..(to + 1) * c].copy_from_slice(&x[from * c..(from + 1) * c]);
        });
        out
    }

    fn check_len(shape: ImageShape, x: &[f64]) -> Result<()> {
        if x.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!("{} values for shape {:?}", x.len(), shape)));
        }
        Ok(())
    }

    /// `A·x` on a raw pixel buffer.
    pub fn apply_raw(&self, shape: ImageShape, x: &[f64]) -> Result<Vec<f64>> {
        Self::check_len(shape, x)?;
        self.check(shape)?;
        Ok(match self {
            AugmentationOp::Compose(ops) => {
                let mut cur = x.to_vec();
                for op in ops {
                    cur = op.apply_raw(shape, &cur)?;
                }
                cur
            }
            op => op.apply_primitive(shape, x, false),
        })
    }

    /// `Aᵀ·y` on a raw pixel buffer.
    pub fn adjoint_raw(&self, shape: ImageShape, y: &[f64]) -> Result<Vec<f64>> {
        Self::check_len(shape, y)?;
        self.check(shape)?;
        Ok(match self {
            AugmentationOp::Compose(ops) => {
                let mut cur = y.to_vec();
                for op in ops.iter().rev() {
                    cur = op.adjoint_raw(shape, &cur)?;
                }
                cur
            }
            op => op.apply_primitive(shape, y, true),
        })
    }
}

pub fn apply_augmentation(op: &AugmentationOp, x: &ImageTensor) -> Result<ImageTensor> {
    let out = op.apply_raw(x.shape(), x.pixels())?;
    ImageTensor::new(x.shape(), out)
}

/// `N` ensemble augmentations, one op per member: a horizontal flip with
/// probability 1/2, otherwise a roll of at most a quarter side or a crop
/// keeping at least 75% of the area, with equal odds.
pub fn sample_augmentations(seed: u64, count: usize, shape: ImageShape) -> Vec<AugmentationOp> {
    let mut rng = stream_rng(seed, crate::random::streams::AUGMENT);
    let (h, w) = (shape.height, shape.width);
    let (max_dy, max_dx) = ((h / 4) as i64, (w / 4) as i64);
    // h'·w' ≥ 0.75·h·w whenever both sides keep ≥ √0.75 of their length
    let side_frac = 0.75_f64.sqrt();
    let min_h = (((h as f64) * side_frac).ceil() as usize).clamp(1, h);
    let min_w = (((w as f64) * side_frac).ceil() as usize).clamp(1, w);
    (0..count)
        .map(|_| {
            if rng.random_bool(0.5) {
                AugmentationOp::HorizontalFlip
            } else if rng.random_bool(0.5) {
                let dy = rng.random_range(-max_dy..=max_dy) as isize;
                let dx = rng.random_range(-max_dx..=max_dx) as isize;
                AugmentationOp::Roll { dy, dx }
            } else {
                let height = rng.random_range(min_h..=h);
                let width = rng.random_range(min_w..=w);
                let top = rng.random_range(0..=h - height);
                let left = rng.random_range(0..=w - width);
                AugmentationOp::CropPad { top, left, height, width }
            }
        })
        .collect()
}

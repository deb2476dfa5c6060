//! Deterministic edge-image descriptor: Gaussian blur, area-average
//! downsampling to a coarse grid, L2 normalisation.
//!
//! Blur and area averaging are both linear and separable, so they are folded
//! into one banded operator per axis and applied only at lit pixels.

use crate::error::{Error, Result};
use crate::field::EdgeImage;
use crate::geometry::ImageSize;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescriptorConfig {
    /// Blur standard deviation in pixels of `input_size`.
    pub sigma: f32,
    pub grid_width: u32,
    pub grid_height: u32,
    /// Edge images are OR-pooled to this size before blurring.
    pub input_size: ImageSize,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig { sigma: 4.0, grid_width: 40, grid_height: 23, input_size: ImageSize::DESCRIPTOR }
    }
}

impl DescriptorConfig {
    pub fn dim(&self) -> usize {
        self.grid_width as usize * self.grid_height as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || self.grid_width == 0 || self.grid_height == 0 || self.input_size.pixel_count() == 0 {
            return Err(Error::InvalidArgument(format!("invalid descriptor configuration {self:?}")));
        }
        if self.grid_width > self.input_size.width || self.grid_height > self.input_size.height {
            return Err(Error::InvalidArgument("descriptor grid larger than input image".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f32>,
    /// False for empty edge images, whose descriptor is the zero vector.
    pub valid: bool,
}

impl FeatureVector {
    pub fn distance(&self, other: &[f32]) -> f64 {
        l2_distance(&self.values, other)
    }
}

pub fn l2_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| ((x - y) as f64).powi(2)).sum::<f64>().sqrt()
}

/// Gaussian kernel taps for offsets `-r..=r`, normalised to unit sum.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-r..=r).map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Overlap-weighted area averaging from `n` source cells onto `g` target cells.
pub(crate) fn area_weights(n: usize, g: usize) -> Vec<Vec<(usize, f64)>> {
    let step = n as f64 / g as f64;
    (0..g)
        .map(|k| {
            let (lo, hi) = (k as f64 * step, (k + 1) as f64 * step);
            (lo.floor() as usize..(hi.ceil() as usize).min(n))
                .filter_map(|x| {
                    let ov = (hi.min(x as f64 + 1.0) - lo.max(x as f64)).max(0.0);
                    (ov > 0.0).then_some((x, ov / step))
                })
                .collect()
        })
        .collect()
}

/// Per-axis combined operator: for each source coordinate the list of
/// `(grid cell, weight)` contributions after blur and area averaging.
fn axis_operator(n: usize, g: usize, sigma: f64) -> Vec<Vec<(u32, f32)>> {
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let area = area_weights(n, g);
    let mut dense = vec![vec![0.0f64; g]; n];
    for (cell, ws) in area.iter().enumerate() {
        for &(xb, wa) in ws {
            // blurred[xb] = sum_x kernel[xb - x] * I[x], zero outside the image
            for off in -r..=r {
                let x = xb as i64 - off;
                if x >= 0 && (x as usize) < n {
                    dense[x as usize][cell] += wa * kernel[(off + r) as usize];
                }
            }
        }
    }
    dense
        .into_iter()
        .map(|row| row.into_iter().enumerate().filter(|(_, w)| *w > 1e-12).map(|(c, w)| (c as u32, w as f32)).collect())
        .collect()
}

/// Precomputed descriptor operator for one configuration.
#[derive(Clone, Debug)]
pub struct Descriptor {
    cfg: DescriptorConfig,
    cols: Vec<Vec<(u32, f32)>>,
    rows: Vec<Vec<(u32, f32)>>,
}

impl Descriptor {
    pub fn new(cfg: DescriptorConfig) -> Result<Self> {
        cfg.validate()?;
        let s = cfg.sigma as f64;
        Ok(Descriptor {
            cfg,
            cols: axis_operator(cfg.input_size.width as usize, cfg.grid_width as usize, s),
            rows: axis_operator(cfg.input_size.height as usize, cfg.grid_height as usize, s),
        })
    }

    pub fn config(&self) -> &DescriptorConfig {
        &self.cfg
    }

    /// Describes an edge image of any size; images not at the configured
    /// input size are OR-pooled to it first.
    pub fn describe(&self, edges: &EdgeImage) -> Result<FeatureVector> {
        let resized;
        let img = if edges.size == self.cfg.input_size {
            edges
        } else {
            resized = edges.resize(self.cfg.input_size)?;
            &resized
        };
        let gw = self.cfg.grid_width as usize;
        let mut acc = vec![0.0f64; self.cfg.dim()];
        let w = img.size.width as usize;
        for (y, row_ops) in self.rows.iter().enumerate() {
            let line = &img.pixels[y * w..(y + 1) * w];
            for (x, _) in line.iter().enumerate().filter(|(_, &p)| p != 0) {
                for &(gy, wy) in row_ops {
                    let base = gy as usize * gw;
                    for &(gx, wx) in &self.cols[x] {
                        acc[base + gx as usize] += (wy * wx) as f64;
                    }
                }
            }
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(FeatureVector { values: vec![0.0; acc.len()], valid: false });
        }
        Ok(FeatureVector { values: acc.into_iter().map(|v| (v / norm) as f32).collect(), valid: true })
    }
}

/// Convenience wrapper building the operator for a single image.
pub fn descriptor(edges: &EdgeImage, cfg: &DescriptorConfig) -> Result<FeatureVector> {
    Descriptor::new(*cfg)?.describe(edges)
}

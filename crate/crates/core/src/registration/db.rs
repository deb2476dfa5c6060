//! Synthetic feature database: descriptors of rendered edge images paired
//! with the camera poses that produced them.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::camera::CameraPose;
use crate::error::{Error, Result};
use crate::field::{render_resized, FieldTemplate};
use crate::geometry::ImageSize;
use crate::registration::descriptor::{l2_distance, Descriptor, DescriptorConfig, FeatureVector};

pub const DB_MAGIC: [u8; 4] = *b"FPDB";
pub const DB_VERSION: u32 = 1;

/// How synthetic edge images are rendered before description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RenderConfig {
    pub size: ImageSize,
    pub line_width: f32,
    pub field_length: f64,
    pub field_width: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { size: ImageSize::REFERENCE, line_width: 4.0, field_length: 105.0, field_width: 68.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureDb {
    pub descriptor: DescriptorConfig,
    pub render: RenderConfig,
    /// Row-major `len() x dim()`, each row unit norm.
    descriptors: Vec<f32>,
    poses: Vec<CameraPose<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub requested: usize,
    pub stored: usize,
    /// Poses whose rendering was empty or degenerate.
    pub excluded: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub pose: CameraPose<f64>,
    pub distance: f64,
}

/// Renders every pose and stores its descriptor. Poses that fail to render
/// or see no field marking are skipped and counted.
pub fn build_feature_db(
    poses: &[CameraPose<f64>],
    template: &FieldTemplate<f64>,
    render: RenderConfig,
    cfg: DescriptorConfig,
) -> Result<(FeatureDb, BuildStats)> {
    if poses.is_empty() {
        return Err(Error::InvalidArgument("pose list is empty".into()));
    }
    let op = Descriptor::new(cfg)?;
    let described: Vec<Option<FeatureVector>> = poses
        .par_iter()
        .map(|pose| {
            let h = pose.homography(render.size).ok()?;
            let img = render_resized(template, &h, render.size, render.line_width as f64, cfg.input_size).ok()?;
            let f = op.describe(&img).ok()?;
            f.valid.then_some(f)
        })
        .collect();
    let mut db = FeatureDb { descriptor: cfg, render, descriptors: Vec::new(), poses: Vec::new() };
    for (pose, f) in poses.iter().zip(described) {
        if let Some(f) = f {
            db.descriptors.extend_from_slice(&f.values);
            db.poses.push(*pose);
        }
    }
    let stats = BuildStats { requested: poses.len(), stored: db.len(), excluded: poses.len() - db.len() };
    if db.is_empty() {
        return Err(Error::EmptyDatabase);
    }
    Ok((db, stats))
}

impl FeatureDb {
    pub fn from_parts(descriptor: DescriptorConfig, render: RenderConfig, descriptors: Vec<f32>, poses: Vec<CameraPose<f64>>) -> Result<Self> {
        let d = descriptor.dim();
        if descriptors.len() != d * poses.len() {
            return Err(Error::Format(format!("{} descriptor values for {} poses of dimension {d}", descriptors.len(), poses.len())));
        }
        for (i, row) in descriptors.chunks(d).enumerate() {
            let n = row.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
            if (n - 1.0).abs() > 1e-4 {
                return Err(Error::Format(format!("descriptor {i} has norm {n}")));
            }
        }
        Ok(FeatureDb { descriptor, render, descriptors, poses })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.descriptor.dim()
    }

    pub fn poses(&self) -> &[CameraPose<f64>] {
        &self.poses
    }

    pub fn descriptor_row(&self, i: usize) -> &[f32] {
        let d = self.dim();
        &self.descriptors[i * d..(i + 1) * d]
    }

    /// Exact k-nearest-neighbour search by linear scan. Results ascend by
    /// distance; ties go to the lower database index.
    pub fn retrieve_nearest(&self, query: &FeatureVector, k: usize) -> Result<Vec<Neighbor>> {
        if self.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        if !query.valid {
            return Err(Error::InvalidFeature);
        }
        if k == 0 || k > self.len() {
            return Err(Error::InvalidArgument(format!("k = {k} outside 1..={}", self.len())));
        }
        if query.values.len() != self.dim() {
            return Err(Error::InvalidArgument("query dimension mismatch".into()));
        }
        let d = self.dim();
        let mut scored: Vec<(f64, usize)> =
            self.descriptors.par_chunks(d).enumerate().map(|(i, row)| (l2_distance(&query.values, row), i)).collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        Ok(scored.into_iter().map(|(distance, index)| Neighbor { index, pose: self.poses[index], distance }).collect())
    }

    /// Binary layout (little endian): magic `FPDB`, version u32, n u64, d u32,
    /// blur sigma f32, grid w/h u32, descriptor input w/h u32, render w/h u32,
    /// line width f32, field length/width f64, pose block byte length u64,
    /// `n*d` f32 descriptors, then the pose CSV block.
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        let csv = crate::io::format_pose_csv(&self.poses);
        let c = &self.descriptor;
        let r = &self.render;
        w.write_all(&DB_MAGIC)?;
        w.write_all(&DB_VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.dim() as u32).to_le_bytes())?;
        w.write_all(&c.sigma.to_le_bytes())?;
        for v in [c.grid_width, c.grid_height, c.input_size.width, c.input_size.height, r.size.width, r.size.height] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&r.line_width.to_le_bytes())?;
        w.write_all(&r.field_length.to_le_bytes())?;
        w.write_all(&r.field_width.to_le_bytes())?;
        w.write_all(&(csv.len() as u64).to_le_bytes())?;
        let mut block = Vec::with_capacity(self.descriptors.len() * 4);
        for v in &self.descriptors {
            block.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&block)?;
        w.write_all(csv.as_bytes())?;
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if magic != DB_MAGIC {
            return Err(Error::Format("not a feature database (bad magic)".into()));
        }
        let version = read_u32(&mut r)?;
        if version != DB_VERSION {
            return Err(Error::Format(format!("unsupported database version {version}")));
        }
        let n = read_u64(&mut r)? as usize;
        let d = read_u32(&mut r)? as usize;
        let sigma = f32::from_le_bytes(read_arr(&mut r)?);
        let mut dims = [0u32; 6];
        for v in dims.iter_mut() {
            *v = read_u32(&mut r)?;
        }
        let line_width = f32::from_le_bytes(read_arr(&mut r)?);
        let field_length = f64::from_le_bytes(read_arr(&mut r)?);
        let field_width = f64::from_le_bytes(read_arr(&mut r)?);
        let csv_len = read_u64(&mut r)? as usize;
        let descriptor = DescriptorConfig {
            sigma,
            grid_width: dims[0],
            grid_height: dims[1],
            input_size: ImageSize::new(dims[2], dims[3]),
        };
        if descriptor.dim() != d {
            return Err(Error::Format(format!("dimension {d} inconsistent with grid {}x{}", dims[0], dims[1])));
        }
        let render = RenderConfig { size: ImageSize::new(dims[4], dims[5]), line_width, field_length, field_width };
        let mut raw = vec![0u8; n.checked_mul(d).and_then(|v| v.checked_mul(4)).ok_or_else(|| Error::Format("size overflow".into()))?];
        r.read_exact(&mut raw)?;
        let descriptors = raw.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
        let mut text = vec![0u8; csv_len];
        r.read_exact(&mut text)?;
        let text = String::from_utf8(text).map_err(|_| Error::Format("pose block is not UTF-8".into()))?;
        let poses = crate::io::parse_pose_csv(&text)?;
        if poses.len() != n {
            return Err(Error::Format(format!("header declares {n} poses, block holds {}", poses.len())));
        }
        FeatureDb::from_parts(descriptor, render, descriptors, poses)
    }
}

fn read_arr<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_arr(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_arr(r)?))
}

//! Background model: per-pixel descriptor clustering over training frames,
//! winner selection by frequency, and model persistence.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::imaging::Frame;
use crate::lss::{
    compute_descriptor_grid, descriptor_distance, LssParams, SelfSimilarityDescriptor,
};
use crate::real::Real;

/// One descriptor cluster at a pixel. The representative is frozen at
/// creation; only the counter and the color sums grow.
#[derive(Debug, Clone)]
pub struct ClusterEntry<R> {
    pub representative: SelfSimilarityDescriptor<R>,
    pub count: u32,
    pub color_sum: [f64; 3],
    pub color_n: u32,
    pub created_at: u32,
}

/// Accumulating training state; one cluster list per pixel.
#[derive(Debug, Clone)]
pub struct TrainingState<R> {
    pub width: usize,
    pub height: usize,
    pub params: LssParams<R>,
    pub train_threshold: R,
    pub frames_seen: u32,
    clusters: Vec<Vec<ClusterEntry<R>>>,
}

impl<R: Real> TrainingState<R> {
    pub fn new(width: usize, height: usize, params: LssParams<R>, train_threshold: R) -> Self {
        TrainingState {
            width,
            height,
            params,
            train_threshold,
            frames_seen: 0,
            clusters: vec![Vec::new(); width * height],
        }
    }

    pub fn clusters_at(&self, x: usize, y: usize) -> &[ClusterEntry<R>] {
        &self.clusters[y * self.width + x]
    }

    /// Mean number of clusters per pixel, the usual training diagnostic.
    pub fn average_cluster_count(&self) -> f64 {
        let total: usize = self.clusters.iter().map(|c| c.len()).sum();
        total as f64 / self.clusters.len() as f64
    }

    /// Folds one training frame into the state: per pixel the nearest
    /// cluster absorbs the frame (distance < threshold) or a new cluster is
    /// created with the frame's descriptor as representative.
    pub fn update(&mut self, frame: &Frame) -> Result<()> {
        if frame.width != self.width || frame.height != self.height {
            return Err(Error::argument(format!(
                "frame {}x{} does not match model {}x{}",
                frame.width, frame.height, self.width, self.height
            )));
        }
        let grid = compute_descriptor_grid(frame, &self.params)?;
        for y in 0..self.height {
            for x in 0..self.width {
                let desc = grid.descriptor(x, y);
                let color = pixel_color(frame, x, y);
                let clusters = &mut self.clusters[y * self.width + x];

                let nearest = clusters
                    .iter_mut()
                    .map(|c| {
                        let d = descriptor_distance(&c.representative, desc)
                            .expect("equal descriptor lengths");
                        (d, c)
                    })
                    .min_by(|(a, _), (b, _)| a.partial_cmp(b).expect("finite distance"));

                match nearest {
                    Some((d, cluster)) if d < self.train_threshold => {
                        cluster.count += 1;
                        cluster.color_n += 1;
                        for (s, c) in cluster.color_sum.iter_mut().zip(color) {
                            *s += f64::from(c);
                        }
                    }
                    _ => clusters.push(ClusterEntry {
                        representative: SelfSimilarityDescriptor { components: desc.to_vec() },
                        count: 1,
                        color_sum: [f64::from(color[0]), f64::from(color[1]), f64::from(color[2])],
                        color_n: 1,
                        created_at: self.frames_seen,
                    }),
                }
            }
        }
        self.frames_seen += 1;
        Ok(())
    }

    /// Selects the most frequent cluster per pixel (ties to the earliest
    /// created) as the background descriptor, with the mean color of the
    /// frames it absorbed.
    pub fn finalize(&self) -> Result<BackgroundModel<R>> {
        if self.frames_seen == 0 {
            return Err(Error::State("cannot finalize a model with no training frames".into()));
        }
        let len = self.params.descriptor_len();
        let mut descriptors = Vec::with_capacity(self.width * self.height * len);
        let mut colors = Vec::with_capacity(self.width * self.height * 3);
        for clusters in &self.clusters {
            let winner = clusters
                .iter()
                .max_by_key(|c| (c.count, std::cmp::Reverse(c.created_at)))
                .expect("at least one cluster per pixel");
            descriptors.extend_from_slice(&winner.representative);
            for s in winner.color_sum {
                let mean = (s / f64::from(winner.color_n)).round();
                colors.push(mean.clamp(0.0, 255.0) as u8);
            }
        }
        Ok(BackgroundModel {
            width: self.width,
            height: self.height,
            params: self.params.clone(),
            descriptors,
            colors,
        })
    }
}

fn pixel_color(frame: &Frame, x: usize, y: usize) -> [u8; 3] {
    let p = frame.pixel(x, y);
    match frame.channels {
        1 => [p[0], p[0], p[0]],
        _ => [p[0], p[1], p[2]],
    }
}

/// Finished background model: one descriptor and one RGB color per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel<R> {
    pub width: usize,
    pub height: usize,
    pub params: LssParams<R>,
    /// Flat row-major descriptors, `width × height × descriptor_len`.
    descriptors: Vec<R>,
    /// Flat row-major RGB, `width × height × 3`.
    colors: Vec<u8>,
}

const MODEL_MAGIC: &[u8; 6] = b"LSSBGM";
const MODEL_VERSION: u8 = 1;

impl<R: Real> BackgroundModel<R> {
    pub fn from_parts(
        width: usize,
        height: usize,
        params: LssParams<R>,
        descriptors: Vec<R>,
        colors: Vec<u8>,
    ) -> Self {
        assert_eq!(descriptors.len(), width * height * params.descriptor_len());
        assert_eq!(colors.len(), width * height * 3);
        BackgroundModel { width, height, params, descriptors, colors }
    }

    #[inline]
    pub fn descriptor(&self, x: usize, y: usize) -> &[R] {
        let len = self.params.descriptor_len();
        let i = (y * self.width + x) * len;
        &self.descriptors[i..i + len]
    }

    #[inline]
    pub fn color(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.colors[i], self.colors[i + 1], self.colors[i + 2]]
    }

    /// Writes the binary model file. Descriptor components are stored as
    /// 32-bit floats regardless of the in-memory scalar.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_all(MODEL_MAGIC).map_err(io)?;
        w.write_u8(MODEL_VERSION).map_err(|e| Error::io(path, e))?;
        w.write_u32::<LittleEndian>(self.width as u32).map_err(|e| Error::io(path, e))?;
        w.write_u32::<LittleEndian>(self.height as u32).map_err(|e| Error::io(path, e))?;
        w.write_u16::<LittleEndian>(self.params.descriptor_len() as u16)
            .map_err(|e| Error::io(path, e))?;
        w.write_u16::<LittleEndian>(self.params.patch_size as u16)
            .map_err(|e| Error::io(path, e))?;
        w.write_u16::<LittleEndian>(self.params.region_radius as u16)
            .map_err(|e| Error::io(path, e))?;
        w.write_u16::<LittleEndian>(self.params.angle_bins as u16)
            .map_err(|e| Error::io(path, e))?;
        w.write_u16::<LittleEndian>(self.params.radial_bins as u16)
            .map_err(|e| Error::io(path, e))?;
        w.write_f64::<LittleEndian>(self.params.noise_variance.to_f64().unwrap())
            .map_err(|e| Error::io(path, e))?;
        w.write_f64::<LittleEndian>(self.params.component_scale.to_f64().unwrap())
            .map_err(|e| Error::io(path, e))?;
        for d in &self.descriptors {
            w.write_f32::<LittleEndian>(d.to_f32().unwrap()).map_err(|e| Error::io(path, e))?;
        }
        w.write_all(&self.colors).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let fmt = |msg: &str| Error::format(format!("{}: {msg}", path.display()));

        let mut magic = [0u8; 6];
        r.read_exact(&mut magic).map_err(|_| fmt("truncated header"))?;
        if &magic != MODEL_MAGIC {
            return Err(fmt("bad magic bytes"));
        }
        let version = r.read_u8().map_err(|_| fmt("truncated header"))?;
        if version != MODEL_VERSION {
            return Err(fmt(&format!("unsupported version {version}")));
        }
        let width = r.read_u32::<LittleEndian>().map_err(|_| fmt("truncated header"))? as usize;
        let height = r.read_u32::<LittleEndian>().map_err(|_| fmt("truncated header"))? as usize;
        let desc_len = r.read_u16::<LittleEndian>().map_err(|_| fmt("truncated header"))? as usize;
        let patch_size = r.read_u16::<LittleEndian>().map_err(|_| fmt("truncated header"))? as usize;
        let region_radius =
            r.read_u16::<LittleEndian>().map_err(|_| fmt("truncated header"))? as usize;
        let angle_bins = r.read_u16::<LittleEndian>().map_err(|_| fmt("truncated header"))? as usize;
        let radial_bins =
            r.read_u16::<LittleEndian>().map_err(|_| fmt("truncated header"))? as usize;
        let noise_variance = r.read_f64::<LittleEndian>().map_err(|_| fmt("truncated header"))?;
        let component_scale = r.read_f64::<LittleEndian>().map_err(|_| fmt("truncated header"))?;

        let params = LssParams {
            patch_size,
            region_radius,
            angle_bins,
            radial_bins,
            noise_variance: R::from_f64_lossy(noise_variance),
            component_scale: R::from_f64_lossy(component_scale),
        };
        params.validate()?;
        if width == 0 || height == 0 {
            return Err(fmt("zero model dimensions"));
        }
        if desc_len != params.descriptor_len() {
            return Err(fmt("descriptor length does not match binning parameters"));
        }

        let n = width * height * desc_len;
        let mut descriptors = Vec::with_capacity(n);
        for _ in 0..n {
            let v = r.read_f32::<LittleEndian>().map_err(|_| fmt("truncated descriptor data"))?;
            descriptors.push(R::from_f64_lossy(f64::from(v)));
        }
        let mut colors = vec![0u8; width * height * 3];
        r.read_exact(&mut colors).map_err(|_| fmt("truncated color data"))?;
        let mut extra = [0u8; 1];
        if r.read(&mut extra).map_err(|e| Error::io(path, e))? != 0 {
            return Err(fmt("trailing bytes after model data"));
        }
        Ok(BackgroundModel { width, height, params, descriptors, colors })
    }
}

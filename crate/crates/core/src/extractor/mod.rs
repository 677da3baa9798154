//! Single-agent extraction: voxels to SemDBs.

mod backbone;
mod boxfit;
pub mod code;
mod config;
mod heads;
mod semdb;

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use backbone::{relu, residual, Fpn, MultiScaleFeatures, Pyramid, Stage, LEVEL_STRIDES};
pub use boxfit::{fit_box, Clusters, FittedBox, PRIOR_HEIGHT, PRIOR_LENGTH, PRIOR_WIDTH};
pub use code::BoxCode;
pub use config::{ExtractorConfig, HeadMode};
pub use heads::{
    heuristic_heads, refine, seeded_heads, select, select_and_refine, sigmoid, HeadOutputs, HEAD_STRIDE, KAPPA,
};
pub use semdb::SemDb;

use crate::comm::Pose;
use crate::error::Result;
use crate::geometry::Vec2;
use crate::sparse::{voxelize, ConvKernel, PointCloud, SparseGrid, VoxelEncoder};
use crate::trace::OpTrace;
use crate::AgentId;

/// Who is extracting, when, and from where.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtractContext {
    pub agent: AgentId,
    pub timestamp_ms: u64,
    /// Sensor pose in the world frame.
    pub pose: Pose,
}

/// Seeded extraction network plus the selection parameters.
#[derive(Clone, Debug)]
pub struct Extractor {
    cfg: ExtractorConfig,
    encoder: VoxelEncoder,
    pyramid: Pyramid,
    fpn: Fpn,
    conf_head: ConvKernel,
    dev_head: ConvKernel,
}

impl Extractor {
    pub fn new(cfg: ExtractorConfig) -> Result<Self> {
        cfg.validate()?;
        let mut seeds = ChaCha8Rng::seed_from_u64(cfg.seed);
        let encoder = VoxelEncoder::Lifted {
            channels: cfg.widths[0],
            seed: seeds.next_u64(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.next_u64());
        let pyramid = Pyramid::seeded(1, cfg.widths[0], &cfg.widths, &cfg.blocks, cfg.kernel_size, &mut rng)?;
        let fpn = Fpn::seeded([cfg.widths[2], cfg.widths[3], cfg.widths[4]], cfg.channels, &mut rng);
        let conf_head = ConvKernel::seeded(1, 1, cfg.channels, 1, &mut rng);
        let dev_head = ConvKernel::seeded(1, 1, cfg.channels, 2, &mut rng);
        Ok(Self {
            cfg,
            encoder,
            pyramid,
            fpn,
            conf_head,
            dev_head,
        })
    }

    pub fn config(&self) -> &ExtractorConfig {
        &self.cfg
    }

    pub fn encoder(&self) -> VoxelEncoder {
        self.encoder
    }

    pub fn pyramid(&self) -> &Pyramid {
        &self.pyramid
    }

    pub fn fpn(&self) -> &Fpn {
        &self.fpn
    }

    pub fn voxelize(&self, cloud: &PointCloud) -> Result<SparseGrid> {
        voxelize(cloud, &self.cfg.voxel, self.encoder)
    }

    pub fn extract_multiscale(&self, grid: &SparseGrid) -> Result<MultiScaleFeatures> {
        self.pyramid.forward(grid)
    }

    pub fn sparse_fpn(&self, ms: &MultiScaleFeatures) -> Result<SparseGrid> {
        self.fpn.forward(ms)
    }

    /// Runs the configured heads. Heuristic heads need the cloud.
    pub fn run_heads(&self, fused: &SparseGrid, cloud: &PointCloud) -> Result<HeadOutputs> {
        match self.cfg.head_mode {
            HeadMode::SeededWeights => seeded_heads(fused, &self.conf_head, &self.dev_head),
            HeadMode::Heuristic => {
                let clusters = Clusters::build(cloud, &self.cfg.voxel);
                let fits = fit_clusters(&clusters);
                heuristic_heads(fused, &clusters, |id| {
                    fits.get(&id)
                        .map(|f| self.cfg.voxel.metric_to_index(f.center.x, f.center.y))
                })
            }
        }
    }

    /// Full single-agent pipeline.
    pub fn extract(&self, cloud: &PointCloud, ctx: &ExtractContext) -> Result<Vec<SemDb>> {
        self.extract_traced(cloud, ctx, &mut OpTrace::off())
    }

    pub fn extract_traced(&self, cloud: &PointCloud, ctx: &ExtractContext, trace: &mut OpTrace) -> Result<Vec<SemDb>> {
        trace.record("voxelize");
        let grid = self.voxelize(cloud)?;
        trace.record("extract_multiscale");
        let ms = self.extract_multiscale(&grid)?;
        trace.record("sparse_fpn");
        let fused = self.sparse_fpn(&ms)?;
        let cfg = &self.cfg;
        let (coded, heads, chosen) = match cfg.head_mode {
            HeadMode::SeededWeights => {
                trace.record("heads:seeded");
                let heads = seeded_heads(&fused, &self.conf_head, &self.dev_head)?;
                let chosen = select(&fused, &heads, cfg.tau, cfg.window)?;
                (fused, heads, chosen)
            }
            HeadMode::Heuristic => {
                trace.record("heads:heuristic");
                let clusters = Clusters::build(cloud, &cfg.voxel);
                let fits = fit_clusters(&clusters);
                let heads = heuristic_heads(&fused, &clusters, |id| {
                    fits.get(&id).map(|f| cfg.voxel.metric_to_index(f.center.x, f.center.y))
                })?;
                let chosen = one_per_cluster(&heads, select(&fused, &heads, cfg.tau, cfg.window)?);
                (write_codes(&fused, &heads, &fits, &ctx.pose), heads, chosen)
            }
        };
        trace.record("select");
        if cfg.reweight {
            trace.record("reweight");
        }
        Ok(refine(&coded, &heads, &chosen, cfg.reweight, ctx.agent, ctx.timestamp_ms))
    }
}

fn fit_clusters(clusters: &Clusters) -> BTreeMap<u32, FittedBox> {
    (0..clusters.len() as u32)
        .filter_map(|id| fit_box(clusters.points(id)).map(|f| (id, f)))
        .collect()
}

/// Keeps the highest-scoring survivor of each cluster (lowest index on
/// ties), preserving ascending order.
fn one_per_cluster(heads: &HeadOutputs, chosen: Vec<usize>) -> Vec<usize> {
    let mut best: BTreeMap<u32, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for &i in &chosen {
        match heads.cluster[i] {
            None => out.push(i),
            Some(id) => {
                let e = best.entry(id).or_insert(i);
                if heads.score[i] > heads.score[*e] {
                    *e = i;
                }
            }
        }
    }
    out.extend(best.into_values());
    out.sort_unstable();
    out
}

/// Backbone features in the low channels, the world-frame box code of the
/// cell's cluster in the reserved ones.
fn write_codes(fused: &SparseGrid, heads: &HeadOutputs, fits: &BTreeMap<u32, FittedBox>, pose: &Pose) -> SparseGrid {
    let mut i = 0;
    fused.map_features(fused.channels(), |_, f, out| {
        out[..code::BACKBONE_CHANNELS].copy_from_slice(&f[..code::BACKBONE_CHANNELS]);
        if let Some(fit) = heads.cluster[i].and_then(|id| fits.get(&id)) {
            let world = pose.to_world(Vec2::new(fit.center.x, fit.center.y));
            BoxCode {
                x: world.x,
                y: world.y,
                h: fit.height,
                w: fit.width,
                l: fit.length,
                yaw: fit.yaw + pose.heading,
            }
            .write(out);
        }
        i += 1;
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::Point;

    fn ctx() -> ExtractContext {
        ExtractContext {
            agent: AgentId(0),
            timestamp_ms: 0,
            pose: Pose::origin(),
        }
    }

    #[test]
    fn empty_cloud_gives_no_semdbs() {
        for mode in [HeadMode::Heuristic, HeadMode::SeededWeights] {
            let ex = Extractor::new(ExtractorConfig { head_mode: mode, ..Default::default() }).unwrap();
            assert!(ex.extract(&PointCloud::default(), &ctx()).unwrap().is_empty());
        }
    }

    #[test]
    fn isolated_point_is_background() {
        let ex = Extractor::new(ExtractorConfig::default()).unwrap();
        let cloud = PointCloud::new(vec![Point { x: 10.0, y: 3.0, z: 0.5, intensity: 0.5 }]).unwrap();
        assert!(ex.extract(&cloud, &ctx()).unwrap().is_empty());
    }
}

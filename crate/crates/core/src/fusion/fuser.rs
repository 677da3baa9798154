use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::align::{align_motion, AlignParams};
use super::buffer::SenderFrame;
use super::decode::{decode_heuristic, decode_seeded, DecodeHeads, Decoded, DetectionBox};
use super::revoxel::{canonical_order, re_voxelize, Revoxelized};
use super::rte::{apply_rte, RteSpec, TimeUnit};
use crate::comm::{transform_to_ego, Pose};
use crate::error::{config, Result};
use crate::extractor::code::CODE_MIN_CHANNELS;
use crate::extractor::{Fpn, HeadMode, Pyramid, LEVEL_STRIDES};
use crate::sparse::{ConvKernel, SparseGrid, VoxelSpec};
use crate::trace::OpTrace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub channels: usize,
    /// Add the relative temporal encoding to received features.
    pub rte: bool,
    /// Re-bin onto the stride-2 grid instead of stride 4.
    pub revoxelize: bool,
    pub time_unit: TimeUnit,
    pub frame_interval_ms: u64,
    pub tau: f64,
    pub window: usize,
    pub head_mode: HeadMode,
    /// Residual submanifold convs per fusion level.
    pub blocks: usize,
    pub kernel_size: usize,
    pub max_speed: f64,
    pub seed: u64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            channels: 32,
            rte: true,
            revoxelize: true,
            time_unit: TimeUnit::Frames,
            frame_interval_ms: 100,
            tau: 0.3,
            window: 3,
            head_mode: HeadMode::Heuristic,
            blocks: 1,
            kernel_size: 3,
            max_speed: 15.0,
            seed: 1,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || !self.channels.is_multiple_of(2) {
            return Err(config("channels", "must be positive and even"));
        }
        if self.head_mode == HeadMode::Heuristic && self.channels < CODE_MIN_CHANNELS {
            return Err(config("channels", format!("heuristic decoding needs {CODE_MIN_CHANNELS}")));
        }
        if self.frame_interval_ms == 0 {
            return Err(config("frame_interval_ms", "must be positive"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(config("tau", "must lie in (0, 1)"));
        }
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(config("window", "must be odd and at least 3"));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(config("kernel_size", "must be odd"));
        }
        if !(self.max_speed >= 0.0 && self.max_speed.is_finite()) {
            return Err(config("max_speed", "must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn input_stride(&self) -> u32 {
        if self.revoxelize {
            2
        } else {
            4
        }
    }
}

/// Everything one fusion call produced.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionOutput {
    /// In the ego frame.
    pub boxes: Vec<DetectionBox>,
    /// Per cell of `fused`.
    pub cell_confidence: Vec<f64>,
    pub revoxelized: Revoxelized,
    /// Fused sparse features at stride 4.
    pub fused: SparseGrid,
    /// SemDBs that survived the transform into the ego grid.
    pub semdbs_in_range: usize,
}

/// Receiver-side network: a downsampling pyramid and FPN with their own
/// seeded weights, followed by the decoding heads.
#[derive(Clone, Debug)]
pub struct Fuser {
    cfg: FusionConfig,
    spec: VoxelSpec,
    rte: RteSpec,
    pyramid: Pyramid,
    fpn: Fpn,
    heads: DecodeHeads,
}

impl Fuser {
    pub fn new(cfg: FusionConfig, spec: VoxelSpec) -> Result<Self> {
        cfg.validate()?;
        spec.validate()?;
        let c = cfg.channels;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let levels = LEVEL_STRIDES.iter().filter(|&&s| s >= cfg.input_stride()).count();
        let pyramid = Pyramid::seeded(
            cfg.input_stride(),
            c,
            &vec![c; levels],
            &vec![cfg.blocks; levels],
            cfg.kernel_size,
            &mut rng,
        )?;
        let fpn = Fpn::seeded([c, c, c], c, &mut rng);
        let heads = DecodeHeads {
            confidence: ConvKernel::seeded(1, 1, c, 1, &mut rng),
            center: ConvKernel::seeded(1, 1, c, 3, &mut rng),
            dims: ConvKernel::seeded(1, 1, c, 3, &mut rng),
            rotation: ConvKernel::seeded(1, 1, c, 1, &mut rng),
        };
        let rte = RteSpec::new(c, cfg.time_unit, cfg.frame_interval_ms)?;
        Ok(Self {
            cfg,
            spec,
            rte,
            pyramid,
            fpn,
            heads,
        })
    }

    pub fn config(&self) -> &FusionConfig {
        &self.cfg
    }

    pub fn pyramid(&self) -> &Pyramid {
        &self.pyramid
    }

    pub fn fpn(&self) -> &Fpn {
        &self.fpn
    }

    /// Downsampling blocks plus sparse FPN; output at stride 4.
    pub fn fuse(&self, grid: &SparseGrid, trace: &mut OpTrace) -> Result<SparseGrid> {
        for stage in self.pyramid.stages() {
            trace.record(format!("stage:{}", stage.stride));
        }
        let ms = self.pyramid.forward(grid)?;
        trace.record("sparse_fpn");
        self.fpn.forward(&ms)
    }

    pub fn decode(&self, fused: &SparseGrid, revox: &SparseGrid, ego: &Pose) -> Result<Decoded> {
        match self.cfg.head_mode {
            HeadMode::SeededWeights => decode_seeded(fused, &self.heads, &self.spec, self.cfg.tau, self.cfg.window),
            HeadMode::Heuristic => decode_heuristic(fused, revox, ego, self.cfg.tau, self.cfg.window),
        }
    }

    /// Transforms, encodes, aligns, re-bins, fuses and decodes everything in
    /// `frames` for an ego at `ego` and time `now_ms`.
    pub fn run(&self, frames: &[&SenderFrame], ego: &Pose, now_ms: u64, trace: &mut OpTrace) -> Result<FusionOutput> {
        trace.record("transform_to_ego");
        let mut semdbs = Vec::new();
        for f in frames {
            semdbs.extend(transform_to_ego(&f.semdbs, &f.pose, ego, &self.spec));
        }
        semdbs.sort_by(canonical_order);
        let semdbs_in_range = semdbs.len();
        if self.cfg.rte {
            trace.record("apply_rte");
            semdbs = apply_rte(&semdbs, now_ms, &self.rte)?;
            if self.cfg.head_mode == HeadMode::Heuristic {
                trace.record("align_motion");
                let params = AlignParams {
                    max_speed: self.cfg.max_speed,
                    ..AlignParams::new(self.cfg.frame_interval_ms, self.cfg.time_unit)
                };
                semdbs = align_motion(&semdbs, &self.spec, ego, &params);
            }
        }
        let stride = self.cfg.input_stride();
        trace.record(format!("re_voxelize:{stride}"));
        let revoxelized = re_voxelize(&semdbs, &self.spec, stride, self.cfg.channels)?;
        let fused = self.fuse(&revoxelized.grid, trace)?;
        trace.record(match self.cfg.head_mode {
            HeadMode::SeededWeights => "decode:seeded",
            HeadMode::Heuristic => "decode:heuristic",
        });
        let Decoded {
            boxes,
            cell_confidence,
        } = self.decode(&fused, &revoxelized.grid, ego)?;
        Ok(FusionOutput {
            boxes,
            cell_confidence,
            revoxelized,
            fused,
            semdbs_in_range,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_fuses_to_nothing() {
        let spec = VoxelSpec::new((-20.0, 20.0), (-20.0, 20.0), (0.4, 0.4)).unwrap();
        for mode in [HeadMode::Heuristic, HeadMode::SeededWeights] {
            let fuser = Fuser::new(FusionConfig { head_mode: mode, ..Default::default() }, spec).unwrap();
            let out = fuser.run(&[], &Pose::origin(), 0, &mut OpTrace::off()).unwrap();
            assert!(out.fused.is_empty());
            assert!(out.boxes.is_empty());
        }
    }

    #[test]
    fn stride_follows_revoxelize_flag() {
        let spec = VoxelSpec::new((-20.0, 20.0), (-20.0, 20.0), (0.4, 0.4)).unwrap();
        let mut t = OpTrace::recording();
        let fuser = Fuser::new(FusionConfig { revoxelize: false, rte: false, ..Default::default() }, spec).unwrap();
        fuser.run(&[], &Pose::origin(), 0, &mut t).unwrap();
        assert_eq!(
            t.ops(),
            ["transform_to_ego", "re_voxelize:4", "stage:4", "stage:8", "stage:16", "sparse_fpn", "decode:heuristic"]
        );
    }
}

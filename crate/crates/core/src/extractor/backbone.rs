use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{contract, Result};
use crate::sparse::{index_upsample, sparse_add, sparse_conv, subm_conv, ConvKernel, SparseGrid};

pub const LEVEL_STRIDES: [u32; 5] = [1, 2, 4, 8, 16];

/// Sparse features keyed by stride.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MultiScaleFeatures {
    levels: BTreeMap<u32, SparseGrid>,
}

impl MultiScaleFeatures {
    pub fn insert(&mut self, grid: SparseGrid) {
        self.levels.insert(grid.stride(), grid);
    }

    pub fn level(&self, stride: u32) -> Option<&SparseGrid> {
        self.levels.get(&stride)
    }

    pub fn strides(&self) -> impl Iterator<Item = u32> + '_ {
        self.levels.keys().copied()
    }

    pub fn total_active(&self) -> usize {
        self.levels.values().map(SparseGrid::len).sum()
    }
}

/// `x + subm_conv(x)`.
pub fn residual(x: &SparseGrid, kernel: &ConvKernel) -> Result<SparseGrid> {
    sparse_add(x, &subm_conv(x, kernel)?)
}

pub fn relu(x: &SparseGrid) -> SparseGrid {
    x.map_features(x.channels(), |_, f, out| {
        for (o, v) in out.iter_mut().zip(f) {
            *o = v.max(0.0);
        }
    })
}

/// One pyramid level: an optional stride-2 entry conv (followed by ReLU) and
/// a chain of residual submanifold convs.
#[derive(Clone, Debug)]
pub struct Stage {
    pub stride: u32,
    pub down: Option<ConvKernel>,
    pub blocks: Vec<ConvKernel>,
}

impl Stage {
    pub fn forward(&self, x: &SparseGrid) -> Result<SparseGrid> {
        let mut y = match &self.down {
            Some(k) => relu(&sparse_conv(x, k)?),
            None => x.clone(),
        };
        for k in &self.blocks {
            y = residual(&y, k)?;
        }
        debug_assert_eq!(y.stride(), self.stride);
        Ok(y)
    }
}

/// Stack of stages running from `input_stride` up to stride 16.
#[derive(Clone, Debug)]
pub struct Pyramid {
    stages: Vec<Stage>,
}

impl Pyramid {
    /// `widths[i]` and `blocks[i]` describe the level at
    /// `input_stride * 2^i`. The first level keeps the input width.
    pub fn seeded<R: Rng>(
        input_stride: u32,
        input_channels: usize,
        widths: &[usize],
        blocks: &[usize],
        kernel_size: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let strides: Vec<u32> = LEVEL_STRIDES.iter().copied().filter(|s| *s >= input_stride).collect();
        if strides.first() != Some(&input_stride) {
            return Err(contract(format!("pyramid input stride {input_stride} is not a level stride")));
        }
        if widths.len() != strides.len() || blocks.len() != strides.len() {
            return Err(contract(format!("pyramid from stride {input_stride} needs {} levels", strides.len())));
        }
        if widths[0] != input_channels {
            return Err(contract("first pyramid level must keep the input width"));
        }
        let mut stages = Vec::with_capacity(strides.len());
        for (i, &stride) in strides.iter().enumerate() {
            let down = (i > 0).then(|| ConvKernel::seeded(kernel_size, 2, widths[i - 1], widths[i], rng));
            let blocks = (0..blocks[i])
                .map(|_| ConvKernel::seeded(kernel_size, 1, widths[i], widths[i], rng))
                .collect();
            stages.push(Stage { stride, down, blocks });
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn forward(&self, input: &SparseGrid) -> Result<MultiScaleFeatures> {
        let first = self.stages[0].stride;
        if input.stride() != first {
            return Err(contract(format!("pyramid expects stride {first}, got {}", input.stride())));
        }
        let mut out = MultiScaleFeatures::default();
        let mut x = input.clone();
        for stage in &self.stages {
            x = stage.forward(&x)?;
            out.insert(x.clone());
        }
        Ok(out)
    }
}

/// 1x1 lateral projections for the stride 4, 8 and 16 levels.
#[derive(Clone, Debug)]
pub struct Fpn {
    laterals: [ConvKernel; 3],
}

impl Fpn {
    pub fn seeded<R: Rng>(in_widths: [usize; 3], out_channels: usize, rng: &mut R) -> Self {
        Self {
            laterals: in_widths.map(|w| ConvKernel::seeded(1, 1, w, out_channels, rng)),
        }
    }

    pub fn from_laterals(laterals: [ConvKernel; 3]) -> Self {
        Self { laterals }
    }

    pub fn laterals(&self) -> &[ConvKernel; 3] {
        &self.laterals
    }

    /// `up(L16, 4) + up(L8, 2) + L4` after the lateral projections; stride 4.
    pub fn forward(&self, ms: &MultiScaleFeatures) -> Result<SparseGrid> {
        let level = |s: u32| ms.level(s).ok_or_else(|| contract(format!("sparse FPN is missing level {s}")));
        let p4 = subm_conv(level(4)?, &self.laterals[0])?;
        let p8 = index_upsample(&subm_conv(level(8)?, &self.laterals[1])?, 2)?;
        let p16 = index_upsample(&subm_conv(level(16)?, &self.laterals[2])?, 4)?;
        sparse_add(&sparse_add(&p16, &p8)?, &p4)
    }
}

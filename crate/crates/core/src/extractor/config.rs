use serde::{Deserialize, Serialize};

use super::code::CODE_MIN_CHANNELS;
use crate::error::{config, Result};
use crate::sparse::VoxelSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadMode {
    /// All kernels, heads included, drawn from the seeded generator.
    SeededWeights,
    /// Point-count confidence and rectangle-fit box estimates.
    #[default]
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    pub voxel: VoxelSpec,
    /// Channel width of the stride 1, 2, 4, 8 and 16 levels.
    pub widths: [usize; 5],
    /// Residual submanifold convs per level.
    pub blocks: [usize; 5],
    pub kernel_size: usize,
    /// Feature width C of the SemDBs.
    pub channels: usize,
    /// Confidence threshold.
    pub tau: f64,
    pub window: usize,
    pub head_mode: HeadMode,
    /// Scale selected features by their confidence.
    pub reweight: bool,
    pub seed: u64,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            voxel: VoxelSpec::default(),
            widths: [16, 32, 32, 64, 64],
            blocks: [1, 1, 1, 1, 1],
            kernel_size: 3,
            channels: 32,
            tau: 0.3,
            window: 3,
            head_mode: HeadMode::default(),
            reweight: true,
            seed: 0,
        }
    }
}

impl ExtractorConfig {
    pub fn validate(&self) -> Result<()> {
        self.voxel.validate().map_err(|e| config("voxel", e.to_string()))?;
        if self.widths.contains(&0) {
            return Err(config("widths", "every level needs at least one channel"));
        }
        if self.kernel_size.is_multiple_of(2) {
            return Err(config("kernel_size", "must be odd"));
        }
        if self.channels == 0 || !self.channels.is_multiple_of(2) {
            return Err(config("channels", "must be positive and even"));
        }
        if self.head_mode == HeadMode::Heuristic && self.channels < CODE_MIN_CHANNELS {
            return Err(config(
                "channels",
                format!("heuristic heads need at least {CODE_MIN_CHANNELS} channels"),
            ));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(config("tau", "must lie in (0, 1)"));
        }
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(config("window", "must be odd and at least 3"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_checked() {
        assert!(ExtractorConfig::default().validate().is_ok());
        let bad = ExtractorConfig { tau: 1.0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(crate::Error::Config { field, .. }) if field == "tau"));
        let narrow = ExtractorConfig { channels: 16, ..Default::default() };
        assert!(narrow.validate().is_err());
        let seeded = ExtractorConfig {
            channels: 16,
            head_mode: HeadMode::SeededWeights,
            ..Default::default()
        };
        assert!(seeded.validate().is_ok());
    }
}

use rand::Rng;

use super::grid::{level_shape, Cell, SparseGrid};
use crate::error::{contract, Result};

/// Square 2D convolution kernel.
///
/// Weights are laid out as `(k*k, c_in, c_out)`: kernel tap `t = dy * k + dx`
/// maps an input at spatial offset `(dy - k/2, dx - k/2)` through the
/// `c_in x c_out` matrix stored at tap `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvKernel {
    size: usize,
    stride: u32,
    c_in: usize,
    c_out: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ConvKernel {
    pub fn new(
        size: usize,
        stride: u32,
        c_in: usize,
        c_out: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if size.is_multiple_of(2) {
            return Err(contract(format!("kernel size {size} must be odd")));
        }
        if !(stride == 1 || stride == 2) {
            return Err(contract(format!("kernel stride {stride} must be 1 or 2")));
        }
        if c_in == 0 || c_out == 0 {
            return Err(contract("kernel channel counts must be positive"));
        }
        if weights.len() != size * size * c_in * c_out || bias.len() != c_out {
            return Err(contract("kernel weight/bias length mismatch"));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(contract("kernel has non-finite weights"));
        }
        Ok(Self {
            size,
            stride,
            c_in,
            c_out,
            weights,
            bias,
        })
    }

    /// Weights and bias drawn uniformly from `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`
    /// with `fan_in = size * size * c_in`.
    pub fn seeded<R: Rng>(size: usize, stride: u32, c_in: usize, c_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / ((size * size * c_in) as f64).sqrt();
        let weights = (0..size * size * c_in * c_out)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();
        let bias = (0..c_out).map(|_| rng.gen_range(-bound..=bound)).collect();
        Self::new(size, stride, c_in, c_out, weights, bias).expect("seeded kernel is valid")
    }

    /// Centre tap is the identity matrix, every other weight and the bias are
    /// zero.
    pub fn identity(size: usize, channels: usize) -> Self {
        let mut weights = vec![0.0; size * size * channels * channels];
        let centre = (size / 2) * size + size / 2;
        for i in 0..channels {
            weights[(centre * channels + i) * channels + i] = 1.0;
        }
        Self::new(size, 1, channels, channels, weights, vec![0.0; channels])
            .expect("identity kernel is valid")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn stride(&self) -> u32 {
        self.stride
    }

    pub fn c_in(&self) -> usize {
        self.c_in
    }

    pub fn c_out(&self) -> usize {
        self.c_out
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn weight(&self, tap: usize, i: usize, o: usize) -> f64 {
        self.weights[(tap * self.c_in + i) * self.c_out + o]
    }

    fn tap_matrix(&self, tap: usize) -> &[f64] {
        let n = self.c_in * self.c_out;
        &self.weights[tap * n..(tap + 1) * n]
    }

    fn half(&self) -> i64 {
        (self.size / 2) as i64
    }
}

/// Accumulates `bias + sum_taps W_tap^T x(in_cell)` for one output cell.
fn conv_at(input: &SparseGrid, kernel: &ConvKernel, out_cell: Cell, step: u32, out: &mut [f64]) {
    out.copy_from_slice(&kernel.bias);
    let shape = input.shape();
    let half = kernel.half();
    let base_r = out_cell.row as i64 * step as i64;
    let base_c = out_cell.col as i64 * step as i64;
    for dy in 0..kernel.size {
        for dx in 0..kernel.size {
            let Some(src) = Cell::new(0, 0).offset(
                base_r + dy as i64 - half,
                base_c + dx as i64 - half,
                shape,
            ) else {
                continue;
            };
            let Some(idx) = input.find(src) else {
                continue;
            };
            let x = input.feature(idx);
            let m = kernel.tap_matrix(dy * kernel.size + dx);
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let row = &m[i * kernel.c_out..(i + 1) * kernel.c_out];
                for (o, w) in out.iter_mut().zip(row) {
                    *o += xi * w;
                }
            }
        }
    }
}

fn check_channels(input: &SparseGrid, kernel: &ConvKernel) -> Result<()> {
    if input.channels() != kernel.c_in {
        return Err(contract(format!(
            "kernel expects {} input channels, grid has {}",
            kernel.c_in,
            input.channels()
        )));
    }
    Ok(())
}

/// Regular sparse convolution with zero padding.
///
/// An output cell is active when its receptive field covers at least one
/// active input cell. Its value equals the dense zero-padded convolution
/// there, bias included.
pub fn sparse_conv(input: &SparseGrid, kernel: &ConvKernel) -> Result<SparseGrid> {
    check_channels(input, kernel)?;
    let s = kernel.stride as i64;
    let out_stride = input.stride() * kernel.stride;
    let out_shape = level_shape(input.base_shape(), out_stride);
    let half = kernel.half();

    let mut active = Vec::with_capacity(input.len() * kernel.size * kernel.size / (s * s) as usize);
    for &cell in input.cells() {
        for dy in 0..kernel.size as i64 {
            for dx in 0..kernel.size as i64 {
                let r = cell.row as i64 + half - dy;
                let c = cell.col as i64 + half - dx;
                if r < 0 || c < 0 || r % s != 0 || c % s != 0 {
                    continue;
                }
                let (r, c) = (r / s, c / s);
                if (r as usize) < out_shape.0 && (c as usize) < out_shape.1 {
                    active.push(Cell::new(r as u32, c as u32));
                }
            }
        }
    }
    active.sort_unstable();
    active.dedup();

    let mut features = vec![0.0; active.len() * kernel.c_out];
    for (cell, out) in active.iter().zip(features.chunks_exact_mut(kernel.c_out)) {
        conv_at(input, kernel, *cell, kernel.stride, out);
    }
    Ok(SparseGrid::from_sorted_parts(
        input.base_shape(),
        out_stride,
        kernel.c_out,
        active,
        features,
    ))
}

/// Submanifold sparse convolution: outputs exist only at the input's active
/// cells.
pub fn subm_conv(input: &SparseGrid, kernel: &ConvKernel) -> Result<SparseGrid> {
    if kernel.stride != 1 {
        return Err(contract("submanifold convolution requires stride 1"));
    }
    check_channels(input, kernel)?;
    let mut features = vec![0.0; input.len() * kernel.c_out];
    for (cell, out) in input.cells().iter().zip(features.chunks_exact_mut(kernel.c_out)) {
        conv_at(input, kernel, *cell, 1, out);
    }
    Ok(SparseGrid::from_sorted_parts(
        input.base_shape(),
        input.stride(),
        kernel.c_out,
        input.cells().to_vec(),
        features,
    ))
}

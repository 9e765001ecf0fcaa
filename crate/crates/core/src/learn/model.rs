//! Stacked bidirectional LSTM with two scalar heads.
//!
//! All parameters live in one flat vector. Per layer and direction the block
//! is `W` (4H x in), `U` (4H x H) and `b` (4H), with `W` and `U` stored
//! column by column so each input feature owns a contiguous 4H slice. Gate
//! order inside a 4H slice is input, forget, cell, output. Head A reads the
//! forward state after the last step, head B the backward state after the
//! first step; the raw output is `output_scale * (A + B)` degrees.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::frames::{wrap_deg, Vec3, EARTH_RATE_DEG_HR};

pub const INPUT_SIZE: usize = 3;

/// Default output scaling, deg per unit of head output.
pub const DEFAULT_OUTPUT_SCALE: f64 = 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub num_layers: usize,
    pub hidden_size: usize,
    pub input_size: usize,
}

impl ModelShape {
    pub fn new(num_layers: usize, hidden_size: usize) -> Self {
        Self { num_layers, hidden_size, input_size: INPUT_SIZE }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.hidden_size == 0 || self.input_size == 0 {
            return Err(invalid("model dimensions must be positive"));
        }
        Ok(())
    }

    fn layer_input(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_size
        } else {
            2 * self.hidden_size
        }
    }

    pub fn parameter_count(&self) -> usize {
        Layout::new(*self).total
    }
}

#[derive(Debug, Clone, Copy)]
struct Block {
    w: usize,
    u: usize,
    b: usize,
    input: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    /// `[forward, backward]` per layer
    blocks: Vec<[Block; 2]>,
    head_a: usize,
    head_b: usize,
    total: usize,
}

impl Layout {
    fn new(shape: ModelShape) -> Self {
        let h = shape.hidden_size;
        let mut off = 0;
        let mut blocks = Vec::with_capacity(shape.num_layers);
        for layer in 0..shape.num_layers {
            let input = shape.layer_input(layer);
            let mut block = || {
                let b = Block { w: off, u: off + 4 * h * input, b: off + 4 * h * (input + h), input };
                off += 4 * h * (input + h + 1);
                b
            };
            blocks.push([block(), block()]);
        }
        let head_a = off;
        let head_b = off + h + 1;
        Self { blocks, head_a, head_b, total: off + 2 * (h + 1) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiLstmModel {
    shape: ModelShape,
    params: Vec<f64>,
    init_seed: u64,
    /// Multiplies every input value (deg/hr) before the first layer.
    input_scale: f64,
    output_scale: f64,
}

impl BiLstmModel {
    /// Uniform `+-1/sqrt(H)` weights with forget-gate biases at +1.
    pub fn new(shape: ModelShape, seed: u64) -> Result<Self> {
        shape.validate()?;
        let layout = Layout::new(shape);
        let h = shape.hidden_size;
        let bound = 1.0 / (h as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params: Vec<f64> = (0..layout.total)
            .map(|_| {
                let u: f64 = rng.random();
                (2.0 * u - 1.0) * bound
            })
            .collect();
        for dirs in &layout.blocks {
            for blk in dirs {
                params[blk.b + h..blk.b + 2 * h].fill(1.0);
            }
        }
        Ok(Self {
            shape,
            params,
            init_seed: seed,
            input_scale: 1.0 / EARTH_RATE_DEG_HR,
            output_scale: DEFAULT_OUTPUT_SCALE,
        })
    }

    /// All parameters zero, so every output is exactly zero.
    pub fn zeros(shape: ModelShape) -> Result<Self> {
        shape.validate()?;
        Ok(Self {
            shape,
            params: vec![0.0; shape.parameter_count()],
            init_seed: 0,
            input_scale: 1.0 / EARTH_RATE_DEG_HR,
            output_scale: DEFAULT_OUTPUT_SCALE,
        })
    }

    /// Rebuild a model from stored parts; rejects a parameter vector whose
    /// length disagrees with `shape`.
    pub fn from_parts(
        shape: ModelShape,
        params: Vec<f64>,
        init_seed: u64,
        input_scale: f64,
        output_scale: f64,
    ) -> Result<Self> {
        shape.validate()?;
        let expected = shape.parameter_count();
        if params.len() != expected {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} parameters for a shape that needs {expected}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("parameters must be finite"));
        }
        if !(input_scale.is_finite() && input_scale > 0.0 && output_scale.is_finite() && output_scale > 0.0) {
            return Err(invalid("scales must be positive"));
        }
        Ok(Self { shape, params, init_seed, input_scale, output_scale })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn input_scale(&self) -> f64 {
        self.input_scale
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    /// Index range of head A (`H` weights then the bias) inside [`params`](Self::params).
    pub fn head_a_range(&self) -> core::ops::Range<usize> {
        let l = Layout::new(self.shape);
        l.head_a..l.head_a + self.shape.hidden_size + 1
    }

    pub fn head_b_range(&self) -> core::ops::Range<usize> {
        let l = Layout::new(self.shape);
        l.head_b..l.head_b + self.shape.hidden_size + 1
    }

    /// Index range of the input-to-hidden weights `W` of one layer/direction.
    pub fn input_weight_range(&self, layer: usize, backward: bool) -> core::ops::Range<usize> {
        let blk = Layout::new(self.shape).blocks[layer][backward as usize];
        blk.w..blk.u
    }

    /// Index range of the gate biases of one layer/direction.
    pub fn bias_range(&self, layer: usize, backward: bool) -> core::ops::Range<usize> {
        let blk = Layout::new(self.shape).blocks[layer][backward as usize];
        blk.b..blk.b + 4 * self.shape.hidden_size
    }

    /// Unwrapped output in degrees.
    pub fn forward(&self, sequence: &[Vec3]) -> Result<f64> {
        let mut ws = Workspace::default();
        self.forward_ws(sequence, &mut ws)
    }

    /// Wrapped prediction in [0, 360).
    pub fn predict_deg(&self, sequence: &[Vec3]) -> Result<f64> {
        Ok(wrap_deg(self.forward(sequence)?))
    }

    /// Forward pass that keeps every activation in `ws` for [`backward_ws`](Self::backward_ws).
    pub fn forward_ws(&self, sequence: &[Vec3], ws: &mut Workspace) -> Result<f64> {
        if sequence.is_empty() {
            return Err(Error::ShapeMismatch("empty input sequence".into()));
        }
        if sequence.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("input sequence must be finite"));
        }
        let layout = Layout::new(self.shape);
        let h = self.shape.hidden_size;
        let len = sequence.len();
        ws.prepare(self.shape, len);
        for (t, x) in sequence.iter().enumerate() {
            for k in 0..INPUT_SIZE {
                ws.inputs[0][t * INPUT_SIZE + k] = x[k] * self.input_scale;
            }
        }
        for layer in 0..self.shape.num_layers {
            for dir in 0..2 {
                let blk = layout.blocks[layer][dir];
                let (inputs, caches) = (&ws.inputs[layer], &mut ws.caches[layer][dir]);
                run_direction(&self.params, blk, h, len, dir == 1, inputs, caches);
            }
            if layer + 1 < self.shape.num_layers {
                let next = &mut ws.inputs[layer + 1];
                let [fwd, bwd] = &ws.caches[layer];
                for t in 0..len {
                    next[t * 2 * h..t * 2 * h + h].copy_from_slice(&fwd.h[t * h..(t + 1) * h]);
                    next[t * 2 * h + h..(t + 1) * 2 * h].copy_from_slice(&bwd.h[t * h..(t + 1) * h]);
                }
            }
        }
        let top = &ws.caches[self.shape.num_layers - 1];
        let h_fwd = &top[0].h[(len - 1) * h..len * h];
        let h_bwd = &top[1].h[0..h];
        let a = dot(&self.params[layout.head_a..layout.head_a + h], h_fwd) + self.params[layout.head_a + h];
        let b = dot(&self.params[layout.head_b..layout.head_b + h], h_bwd) + self.params[layout.head_b + h];
        Ok(self.output_scale * (a + b))
    }

    /// Accumulate `d_out * d(output)/d(params)` into `grads`, using the
    /// activations of the last [`forward_ws`](Self::forward_ws) call on `ws`.
    pub fn backward_ws(&self, d_out: f64, ws: &mut Workspace, grads: &mut [f64]) -> Result<()> {
        if grads.len() != self.params.len() {
            return Err(Error::ShapeMismatch("gradient buffer length".into()));
        }
        let len = ws.len;
        if len == 0 || ws.shape != Some(self.shape) {
            return Err(invalid("backward called without a matching forward pass"));
        }
        let layout = Layout::new(self.shape);
        let h = self.shape.hidden_size;
        let top = self.shape.num_layers - 1;
        let g = d_out * self.output_scale;

        let h_fwd = &ws.caches[top][0].h[(len - 1) * h..len * h];
        let h_bwd = &ws.caches[top][1].h[0..h];
        for j in 0..h {
            grads[layout.head_a + j] += g * h_fwd[j];
            grads[layout.head_b + j] += g * h_bwd[j];
        }
        grads[layout.head_a + h] += g;
        grads[layout.head_b + h] += g;

        // gradient flowing into each direction's hidden outputs
        for d in ws.dh.iter_mut() {
            d.iter_mut().for_each(|v| *v = 0.0);
        }
        for j in 0..h {
            ws.dh[0][(len - 1) * h + j] = g * self.params[layout.head_a + j];
            ws.dh[1][j] = g * self.params[layout.head_b + j];
        }
        for layer in (0..self.shape.num_layers).rev() {
            let input = self.shape.layer_input(layer);
            ws.dx.clear();
            ws.dx.resize(len * input, 0.0);
            for dir in 0..2 {
                let blk = layout.blocks[layer][dir];
                backprop_direction(
                    &self.params,
                    grads,
                    blk,
                    h,
                    len,
                    dir == 1,
                    &ws.inputs[layer],
                    &ws.caches[layer][dir],
                    &ws.dh[dir],
                    &mut ws.dx,
                    &mut ws.scratch,
                );
            }
            if layer > 0 {
                for t in 0..len {
                    for j in 0..h {
                        ws.dh[0][t * h + j] = ws.dx[t * 2 * h + j];
                        ws.dh[1][t * h + j] = ws.dx[t * 2 * h + h + j];
                    }
                }
            }
        }
        Ok(())
    }

    /// `d(raw output)/d(params)` for one sequence.
    pub fn output_gradient(&self, sequence: &[Vec3]) -> Result<Vec<f64>> {
        let mut ws = Workspace::default();
        self.forward_ws(sequence, &mut ws)?;
        let mut grads = vec![0.0; self.params.len()];
        self.backward_ws(1.0, &mut ws, &mut grads)?;
        Ok(grads)
    }
}

/// Activations of one layer/direction, indexed by time step.
#[derive(Debug, Clone, Default)]
struct DirCache {
    /// post-activation gates, L x 4H
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

/// Reusable buffers for forward and backward passes.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    shape: Option<ModelShape>,
    len: usize,
    inputs: Vec<Vec<f64>>,
    caches: Vec<[DirCache; 2]>,
    dh: [Vec<f64>; 2],
    dx: Vec<f64>,
    scratch: Vec<f64>,
}

impl Workspace {
    fn prepare(&mut self, shape: ModelShape, len: usize) {
        let h = shape.hidden_size;
        self.shape = Some(shape);
        self.len = len;
        self.inputs.resize_with(shape.num_layers, Vec::new);
        self.caches.resize_with(shape.num_layers, Default::default);
        for layer in 0..shape.num_layers {
            let n = len * shape.layer_input(layer);
            self.inputs[layer].clear();
            self.inputs[layer].resize(n, 0.0);
            for c in self.caches[layer].iter_mut() {
                for (v, width) in [(&mut c.gates, 4 * h), (&mut c.c, h), (&mut c.tanh_c, h), (&mut c.h, h)] {
                    v.clear();
                    v.resize(len * width, 0.0);
                }
            }
        }
        for d in self.dh.iter_mut() {
            d.clear();
            d.resize(len * h, 0.0);
        }
        self.scratch.clear();
        self.scratch.resize(6 * h, 0.0);
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn time_index(step: usize, len: usize, reverse: bool) -> usize {
    if reverse {
        len - 1 - step
    } else {
        step
    }
}

fn run_direction(
    params: &[f64],
    blk: Block,
    h: usize,
    len: usize,
    reverse: bool,
    inputs: &[f64],
    cache: &mut DirCache,
) {
    let g4 = 4 * h;
    let mut z = vec![0.0; g4];
    for step in 0..len {
        let t = time_index(step, len, reverse);
        let prev = (step > 0).then(|| time_index(step - 1, len, reverse));
        z.copy_from_slice(&params[blk.b..blk.b + g4]);
        let x = &inputs[t * blk.input..(t + 1) * blk.input];
        for (k, &xk) in x.iter().enumerate() {
            if xk != 0.0 {
                axpy(xk, &params[blk.w + k * g4..blk.w + (k + 1) * g4], &mut z);
            }
        }
        if let Some(p) = prev {
            for j in 0..h {
                let hp = cache.h[p * h + j];
                axpy(hp, &params[blk.u + j * g4..blk.u + (j + 1) * g4], &mut z);
            }
        }
        let gates = &mut cache.gates[t * g4..(t + 1) * g4];
        for j in 0..h {
            gates[j] = sigmoid(z[j]);
            gates[h + j] = sigmoid(z[h + j]);
            gates[2 * h + j] = z[2 * h + j].tanh();
            gates[3 * h + j] = sigmoid(z[3 * h + j]);
        }
        for j in 0..h {
            let c_prev = prev.map_or(0.0, |p| cache.c[p * h + j]);
            let c = gates[h + j] * c_prev + gates[j] * gates[2 * h + j];
            let tc = c.tanh();
            cache.c[t * h + j] = c;
            cache.tanh_c[t * h + j] = tc;
            cache.h[t * h + j] = gates[3 * h + j] * tc;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn backprop_direction(
    params: &[f64],
    grads: &mut [f64],
    blk: Block,
    h: usize,
    len: usize,
    reverse: bool,
    inputs: &[f64],
    cache: &DirCache,
    dh_ext: &[f64],
    dx: &mut [f64],
    scratch: &mut [f64],
) {
    let g4 = 4 * h;
    let (dz, rest) = scratch.split_at_mut(g4);
    let (dh_carry, dc_carry) = rest.split_at_mut(h);
    dh_carry.fill(0.0);
    dc_carry.fill(0.0);
    for step in (0..len).rev() {
        let t = time_index(step, len, reverse);
        let prev = (step > 0).then(|| time_index(step - 1, len, reverse));
        let gates = &cache.gates[t * g4..(t + 1) * g4];
        for j in 0..h {
            let (i, f, g, o) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
            let tc = cache.tanh_c[t * h + j];
            let dh = dh_ext[t * h + j] + dh_carry[j];
            let d_o = dh * tc;
            let dc = dh * o * (1.0 - tc * tc) + dc_carry[j];
            let c_prev = prev.map_or(0.0, |p| cache.c[p * h + j]);
            dz[j] = dc * g * i * (1.0 - i);
            dz[h + j] = dc * c_prev * f * (1.0 - f);
            dz[2 * h + j] = dc * i * (1.0 - g * g);
            dz[3 * h + j] = d_o * o * (1.0 - o);
            dc_carry[j] = dc * f;
        }
        axpy(1.0, dz, &mut grads[blk.b..blk.b + g4]);
        let x = &inputs[t * blk.input..(t + 1) * blk.input];
        for (k, &xk) in x.iter().enumerate() {
            let col = blk.w + k * g4..blk.w + (k + 1) * g4;
            if xk != 0.0 {
                axpy(xk, dz, &mut grads[col.clone()]);
            }
            dx[t * blk.input + k] += dot(&params[col], dz);
        }
        match prev {
            Some(p) => {
                for j in 0..h {
                    let col = blk.u + j * g4..blk.u + (j + 1) * g4;
                    let hp = cache.h[p * h + j];
                    if hp != 0.0 {
                        axpy(hp, dz, &mut grads[col.clone()]);
                    }
                    dh_carry[j] = dot(&params[col], dz);
                }
            }
            None => dh_carry.fill(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_counts() {
        // layer 1: 2 * 4H(3 + H + 1), layer 2: 2 * 4H(2H + H + 1), heads 2(H + 1)
        assert_eq!(ModelShape::new(1, 8).parameter_count(), 2 * 32 * 12 + 18);
        assert_eq!(ModelShape::new(2, 24).parameter_count(), 2 * 96 * 28 + 2 * 96 * 73 + 50);
    }

    #[test]
    fn zero_model_outputs_zero() {
        let m = BiLstmModel::zeros(ModelShape::new(2, 4)).unwrap();
        assert_eq!(m.forward(&[[1.0, -2.0, 3.0]; 7]).unwrap(), 0.0);
    }

    #[test]
    fn single_step_and_determinism() {
        let m = BiLstmModel::new(ModelShape::new(2, 6), 11).unwrap();
        let y = m.forward(&[[12.0, -3.0, -8.0]]).unwrap();
        assert!(y.is_finite());
        let seq: Vec<Vec3> = (0..20).map(|k| [k as f64, 1.0, -2.0]).collect();
        let a = m.forward(&seq).unwrap();
        let b = BiLstmModel::new(ModelShape::new(2, 6), 11).unwrap().forward(&seq).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(m.forward(&[]).is_err());
    }

    #[test]
    fn wrapped_prediction() {
        let mut m = BiLstmModel::zeros(ModelShape::new(1, 2)).unwrap();
        let bias_a = m.head_a_range().end - 1;
        m.params_mut()[bias_a] = 365.0 / DEFAULT_OUTPUT_SCALE;
        assert!((m.predict_deg(&[[0.0; 3]]).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn from_parts_rejects_wrong_length() {
        let shape = ModelShape::new(1, 4);
        assert!(matches!(
            BiLstmModel::from_parts(shape, vec![0.0; 3], 0, 1.0, 1.0),
            Err(Error::ShapeMismatch(_))
        ));
    }
}

//! Two-hidden-layer ReLU perceptron with explicit forward and backward passes.
//!
//! Parameters live in one flat buffer laid out as
//! `W1 (hidden×input) | b1 | W2 (hidden×hidden) | b2 | W3 (output×hidden) | b3`,
//! all row-major, so flattening is a copy and optimizers work on the buffer
//! directly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::{gemm, MatRef, RealMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpShape {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
}

impl MlpShape {
    pub fn new(input: usize, hidden: usize, output: usize) -> Self {
        Self { input, hidden, output }
    }

    pub fn param_count(&self) -> usize {
        let (i, h, o) = (self.input, self.hidden, self.output);
        h * i + h + h * h + h + o * h + o
    }

    fn offsets(&self) -> Offsets {
        let (i, h, o) = (self.input, self.hidden, self.output);
        let w1 = 0;
        let b1 = w1 + h * i;
        let w2 = b1 + h;
        let b2 = w2 + h * h;
        let w3 = b2 + h;
        let b3 = w3 + o * h;
        Offsets {
            w1,
            b1,
            w2,
            b2,
            w3,
            b3,
            end: b3 + o,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    w3: usize,
    b3: usize,
    end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    shape: MlpShape,
    data: Vec<f64>,
}

/// Activations cached by [`MlpParams::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpTrace {
    batch: usize,
    input: Vec<f64>,
    pre1: Vec<f64>,
    act1: Vec<f64>,
    pre2: Vec<f64>,
    act2: Vec<f64>,
    output: Vec<f64>,
}

impl MlpTrace {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Row-major (batch × output) network outputs.
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl MlpParams {
    pub fn zeros(shape: MlpShape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.param_count()],
        }
    }

    /// Uniform in ±1/√fan_in for every weight and bias.
    pub fn init<R: Rng + ?Sized>(shape: MlpShape, rng: &mut R) -> Self {
        let mut params = Self::zeros(shape);
        let off = shape.offsets();
        let fill = |slice: &mut [f64], fan_in: usize, rng: &mut R| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in slice {
                *v = rng.random_range(-bound..bound);
            }
        };
        let (i, h) = (shape.input, shape.hidden);
        fill(&mut params.data[off.w1..off.w2], i, rng);
        fill(&mut params.data[off.w2..off.w3], h, rng);
        fill(&mut params.data[off.w3..off.end], h, rng);
        params
    }

    pub fn shape(&self) -> MlpShape {
        self.shape
    }

    pub fn param_count(&self) -> usize {
        self.data.len()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn unflatten(shape: MlpShape, flat: &[f64]) -> Result<Self> {
        if flat.len() != shape.param_count() {
            return Err(Error::dim("MlpParams::unflatten", shape.param_count(), flat.len()));
        }
        Ok(Self {
            shape,
            data: flat.to_vec(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(input, 1)?.output)
    }

    /// Returns `(param_grad, input_grad)` for a single input.
    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let trace = self.forward_batch(input, 1)?;
        self.backward_batch(&trace, output_grad)
    }

    /// Forward pass over `batch` row-major inputs.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<MlpTrace> {
        let MlpShape {
            input: ni,
            hidden: nh,
            output: no,
        } = self.shape;
        if inputs.len() != batch * ni {
            return Err(Error::dim("mlp forward input", batch * ni, inputs.len()));
        }
        let off = self.shape.offsets();
        let d = &self.data;

        let mut pre1 = bias_rows(&d[off.b1..off.w2], batch);
        gemm(
            1.0,
            MatRef::new(inputs, batch, ni),
            MatRef::new(&d[off.w1..off.b1], nh, ni).t(),
            1.0,
            &mut pre1,
        );
        let act1 = relu(&pre1);

        let mut pre2 = bias_rows(&d[off.b2..off.w3], batch);
        gemm(
            1.0,
            MatRef::new(&act1, batch, nh),
            MatRef::new(&d[off.w2..off.b2], nh, nh).t(),
            1.0,
            &mut pre2,
        );
        let act2 = relu(&pre2);

        let mut output = bias_rows(&d[off.b3..off.end], batch);
        gemm(
            1.0,
            MatRef::new(&act2, batch, nh),
            MatRef::new(&d[off.w3..off.b3], no, nh).t(),
            1.0,
            &mut output,
        );

        Ok(MlpTrace {
            batch,
            input: inputs.to_vec(),
            pre1,
            act1,
            pre2,
            act2,
            output,
        })
    }

    /// Backward pass: `output_grads` is row-major (batch × output). Parameter
    /// gradients are summed over the batch; input gradients are per row.
    pub fn backward_batch(&self, trace: &MlpTrace, output_grads: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let MlpShape {
            input: ni,
            hidden: nh,
            output: no,
        } = self.shape;
        let batch = trace.batch;
        if output_grads.len() != batch * no {
            return Err(Error::dim("mlp backward output grad", batch * no, output_grads.len()));
        }
        let off = self.shape.offsets();
        let d = &self.data;
        let mut grad = vec![0.0; off.end];

        // layer 3
        gemm(
            1.0,
            MatRef::new(output_grads, batch, no).t(),
            MatRef::new(&trace.act2, batch, nh),
            0.0,
            &mut grad[off.w3..off.b3],
        );
        column_sums(output_grads, no, &mut grad[off.b3..off.end]);
        let mut delta2 = vec![0.0; batch * nh];
        gemm(
            1.0,
            MatRef::new(output_grads, batch, no),
            MatRef::new(&d[off.w3..off.b3], no, nh),
            0.0,
            &mut delta2,
        );
        relu_mask(&mut delta2, &trace.pre2);

        // layer 2
        gemm(
            1.0,
            MatRef::new(&delta2, batch, nh).t(),
            MatRef::new(&trace.act1, batch, nh),
            0.0,
            &mut grad[off.w2..off.b2],
        );
        column_sums(&delta2, nh, &mut grad[off.b2..off.w3]);
        let mut delta1 = vec![0.0; batch * nh];
        gemm(
            1.0,
            MatRef::new(&delta2, batch, nh),
            MatRef::new(&d[off.w2..off.b2], nh, nh),
            0.0,
            &mut delta1,
        );
        relu_mask(&mut delta1, &trace.pre1);

        // layer 1
        gemm(
            1.0,
            MatRef::new(&delta1, batch, nh).t(),
            MatRef::new(&trace.input, batch, ni),
            0.0,
            &mut grad[off.w1..off.b1],
        );
        column_sums(&delta1, nh, &mut grad[off.b1..off.w2]);
        let mut input_grad = vec![0.0; batch * ni];
        gemm(
            1.0,
            MatRef::new(&delta1, batch, nh),
            MatRef::new(&d[off.w1..off.b1], nh, ni),
            0.0,
            &mut input_grad,
        );

        Ok((grad, input_grad))
    }

    /// Convenience for callers that hold inputs as a matrix.
    pub fn forward_matrix(&self, inputs: &RealMatrix) -> Result<MlpTrace> {
        self.forward_batch(inputs.as_slice(), inputs.rows())
    }
}

fn bias_rows(bias: &[f64], batch: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(bias.len() * batch);
    for _ in 0..batch {
        out.extend_from_slice(bias);
    }
    out
}

fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

fn relu_mask(delta: &mut [f64], pre: &[f64]) {
    for (d, &p) in delta.iter_mut().zip(pre) {
        if p <= 0.0 {
            *d = 0.0;
        }
    }
}

fn column_sums(rows: &[f64], cols: usize, out: &mut [f64]) {
    for row in rows.chunks_exact(cols) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
}

//! Fully connected tanh network mapping the (normalised) treatment value to
//! the raw spline parameters of the outcome transform.
//!
//! Parameters are stored flat, layer by layer: the `out × in` weight matrix in
//! row-major order, then the `out` biases.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpShape {
    /// Layer widths including input and output, e.g. `[1, 20, 15, 10, 27]`.
    pub widths: Vec<usize>,
    offsets: Vec<usize>,
}

impl MlpShape {
    pub fn new(input: usize, hidden: &[usize], output: usize) -> Self {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(input);
        widths.extend_from_slice(hidden);
        widths.push(output);
        let offsets = widths
            .windows(2)
            .scan(0usize, |off, w| {
                let start = *off;
                *off += w[0] * w[1] + w[1];
                Some(start)
            })
            .collect();
        Self { widths, offsets }
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    pub fn output(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (fan_in, fan_out, parameter offset)
        self.widths.windows(2).zip(&self.offsets).map(|(w, &off)| (w[0], w[1], off))
    }

    /// Glorot-uniform hidden weights, zero biases, and an all-zero output
    /// layer so the network initially outputs zeros for every input.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut params = vec![0.0; self.param_count()];
        let n_layers = self.widths.len() - 1;
        for (l, (fan_in, fan_out, off)) in self.layers().enumerate() {
            if l + 1 == n_layers {
                break;
            }
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new(-bound, bound).expect("finite bound");
            for p in &mut params[off..off + fan_in * fan_out] {
                *p = dist.sample(rng);
            }
        }
        params
    }
}

/// Activation buffers reused across evaluations.
#[derive(Debug, Clone)]
pub struct MlpWork {
    // post-activation values for every layer, input included
    acts: Vec<Vec<f64>>,
    grads: Vec<Vec<f64>>,
}

impl MlpWork {
    pub fn new(shape: &MlpShape) -> Self {
        Self {
            acts: shape.widths.iter().map(|&w| vec![0.0; w]).collect(),
            grads: shape.widths.iter().map(|&w| vec![0.0; w]).collect(),
        }
    }

    pub fn output(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

pub fn forward(shape: &MlpShape, params: &[f64], input: &[f64], work: &mut MlpWork) {
    work.acts[0].copy_from_slice(input);
    let n_layers = shape.widths.len() - 1;
    for (l, (fan_in, fan_out, off)) in shape.layers().enumerate() {
        let (w, b) = params[off..off + fan_in * fan_out + fan_out].split_at(fan_in * fan_out);
        let (prev, next) = work.acts.split_at_mut(l + 1);
        let x = &prev[l];
        let out = &mut next[0];
        for o in 0..fan_out {
            let row = &w[o * fan_in..(o + 1) * fan_in];
            let mut acc = b[o];
            for (wi, xi) in row.iter().zip(x.iter()) {
                acc += wi * xi;
            }
            out[o] = if l + 1 < n_layers { acc.tanh() } else { acc };
        }
    }
}

/// Accumulates into `grad` the parameter gradient given `g_out`, the gradient
/// with respect to the network output. Must follow a `forward` on `work`.
pub fn backward(shape: &MlpShape, params: &[f64], g_out: &[f64], work: &mut MlpWork, grad: &mut [f64]) {
    let n_layers = shape.widths.len() - 1;
    work.grads[n_layers].copy_from_slice(g_out);
    for l in (0..n_layers).rev() {
        let (fan_in, fan_out, off) = (shape.widths[l], shape.widths[l + 1], shape.offsets[l]);
        // convert d/d(activation) into d/d(pre-activation) for hidden layers
        if l + 1 < n_layers {
            for (g, a) in work.grads[l + 1].iter_mut().zip(&work.acts[l + 1]) {
                *g *= 1.0 - a * a;
            }
        }
        let w = &params[off..off + fan_in * fan_out];
        let (gw, gb) = grad[off..off + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
        let (lower, upper) = work.grads.split_at_mut(l + 1);
        let g_next = &upper[0];
        let x = &work.acts[l];
        let g_prev = &mut lower[l];
        g_prev.iter_mut().for_each(|g| *g = 0.0);
        for o in 0..fan_out {
            let go = g_next[o];
            if go == 0.0 {
                continue;
            }
            gb[o] += go;
            let row = o * fan_in;
            for i in 0..fan_in {
                gw[row + i] += go * x[i];
                g_prev[i] += go * w[row + i];
            }
        }
    }
}

//! Monotone rational-quadratic spline with linear tails, followed by a
//! positive affine map.
//!
//! A transform with `K` bins is described by `3K + 3` unconstrained numbers:
//!
//! | slots          | meaning                                   |
//! |----------------|-------------------------------------------|
//! | `0..K`         | bin width logits (softmax)                |
//! | `K..2K`        | bin height logits (softmax)               |
//! | `2K..3K+1`     | knot derivative pre-activations (softplus)|
//! | `3K+1`         | output shift                              |
//! | `3K+2`         | output log-scale                          |
//!
//! The spline maps `[lo, hi]` onto itself; outside it continues linearly with
//! the boundary derivative. The final output is `exp(log_scale)·g(x) + shift`.
//! All-zero raw parameters give the identity map.

use crate::error::{Error, Result};

pub(crate) const MIN_BIN_FRACTION: f64 = 1e-3;
pub(crate) const MIN_DERIVATIVE: f64 = 1e-3;
pub const MAX_BINS: usize = 64;

/// Number of raw parameters for a transform with `bins` bins.
pub const fn raw_len(bins: usize) -> usize {
    3 * bins + 3
}

#[inline]
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Offset so that a zero pre-activation yields unit derivative.
fn derivative_offset() -> f64 {
    ((1.0 - MIN_DERIVATIVE).exp() - 1.0).ln()
}

fn softmax_into(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = (l - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Result of evaluating a transform at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformEval {
    /// Output in noise space.
    pub value: f64,
    /// Log of the derivative with respect to the input.
    pub log_deriv: f64,
}

/// Where an input landed, kept for the backward pass.
#[derive(Debug, Clone, Copy)]
enum Segment {
    Below,
    Above,
    Bin(usize),
}

/// A spline whose knots have been materialised from raw parameters.
#[derive(Debug, Clone)]
pub struct Spline {
    lo: f64,
    hi: f64,
    // softmax outputs, kept for the backward pass
    width_probs: Vec<f64>,
    height_probs: Vec<f64>,
    deriv_pre: Vec<f64>,
    knots_x: Vec<f64>,
    knots_y: Vec<f64>,
    derivs: Vec<f64>,
    shift: f64,
    log_scale: f64,
    scale: f64,
}

impl Spline {
    pub fn new(bins: usize) -> Self {
        Self {
            lo: -1.0,
            hi: 1.0,
            width_probs: vec![0.0; bins],
            height_probs: vec![0.0; bins],
            deriv_pre: vec![0.0; bins + 1],
            knots_x: vec![0.0; bins + 1],
            knots_y: vec![0.0; bins + 1],
            derivs: vec![1.0; bins + 1],
            shift: 0.0,
            log_scale: 0.0,
            scale: 1.0,
        }
    }

    pub fn from_raw(raw: &[f64], lo: f64, hi: f64) -> Self {
        let bins = (raw.len() - 3) / 3;
        let mut s = Self::new(bins);
        s.rebuild(raw, lo, hi);
        s
    }

    pub fn bins(&self) -> usize {
        self.width_probs.len()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Recomputes knots in place from raw parameters; no allocation.
    pub fn rebuild(&mut self, raw: &[f64], lo: f64, hi: f64) {
        let k = self.bins();
        debug_assert_eq!(raw.len(), raw_len(k));
        self.lo = lo;
        self.hi = hi;
        let keep = 1.0 - k as f64 * MIN_BIN_FRACTION;

        softmax_into(&raw[..k], &mut self.width_probs);
        softmax_into(&raw[k..2 * k], &mut self.height_probs);
        fill_knots(&self.width_probs, lo, hi, keep, &mut self.knots_x);
        fill_knots(&self.height_probs, lo, hi, keep, &mut self.knots_y);

        let offset = derivative_offset();
        for (i, &u) in raw[2 * k..3 * k + 1].iter().enumerate() {
            self.deriv_pre[i] = u;
            self.derivs[i] = MIN_DERIVATIVE + softplus(u + offset);
        }
        self.shift = raw[3 * k + 1];
        self.log_scale = raw[3 * k + 2];
        self.scale = self.log_scale.exp();
    }

    #[inline]
    fn locate(&self, x: f64) -> Segment {
        if x < self.lo {
            return Segment::Below;
        }
        if x >= self.hi {
            return Segment::Above;
        }
        let k = self.bins();
        // knots are sorted; linear scan is fastest for the small K used here
        let mut bin = 0;
        while bin + 1 < k && x >= self.knots_x[bin + 1] {
            bin += 1;
        }
        Segment::Bin(bin)
    }

    /// Spline value and derivative before the affine output map.
    #[inline]
    fn core(&self, x: f64, seg: Segment) -> (f64, f64) {
        let k = self.bins();
        match seg {
            Segment::Below => (self.lo + self.derivs[0] * (x - self.lo), self.derivs[0]),
            Segment::Above => (self.hi + self.derivs[k] * (x - self.hi), self.derivs[k]),
            Segment::Bin(b) => {
                let w = self.knots_x[b + 1] - self.knots_x[b];
                let h = self.knots_y[b + 1] - self.knots_y[b];
                let s = h / w;
                let (d0, d1) = (self.derivs[b], self.derivs[b + 1]);
                let xi = (x - self.knots_x[b]) / w;
                let t = xi * (1.0 - xi);
                let num = h * (s * xi * xi + d0 * t);
                let den = s + (d0 + d1 - 2.0 * s) * t;
                let dn = s * s * (d1 * xi * xi + 2.0 * s * t + d0 * (1.0 - xi) * (1.0 - xi));
                (self.knots_y[b] + num / den, dn / (den * den))
            }
        }
    }

    #[inline]
    pub fn forward(&self, x: f64) -> TransformEval {
        let (g, dg) = self.core(x, self.locate(x));
        TransformEval {
            value: self.scale * g + self.shift,
            log_deriv: self.log_scale + dg.ln(),
        }
    }

    #[inline]
    fn value(&self, x: f64) -> f64 {
        let (g, _) = self.core(x, self.locate(x));
        self.scale * g + self.shift
    }

    /// Solves `forward(x) = z` by bisection.
    ///
    /// The bracket is the spline interval widened by extrapolating the linear
    /// tails to reach `z`, so it always contains the root.
    pub fn inverse(&self, z: f64) -> Result<f64> {
        if !z.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite inverse target {z}")));
        }
        let k = self.bins();
        let g_target = (z - self.shift) / self.scale;
        let mut lo = self.lo;
        let mut hi = self.hi;
        if g_target < self.lo {
            lo = self.lo + (g_target - self.lo) / self.derivs[0];
        }
        if g_target > self.hi {
            hi = self.hi + (g_target - self.hi) / self.derivs[k];
        }
        let pad = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        lo -= pad;
        hi += pad;
        if !(self.value(lo) <= z && self.value(hi) >= z) {
            return Err(Error::InversionFailure {
                target: z,
                reason: format!("bracket [{lo}, {hi}] does not contain the root"),
            });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value(mid) < z {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * (1.0 + mid.abs()) {
                break;
            }
        }
        let (vl, vh) = (self.value(lo), self.value(hi));
        let x = if (vl - z).abs() <= (vh - z).abs() { lo } else { hi };
        let resid = (self.value(x) - z).abs();
        if resid > 1e-9 {
            return Err(Error::InversionFailure {
                target: z,
                reason: format!("residual {resid:e} after bisection"),
            });
        }
        Ok(x)
    }

    /// Evaluates at `x` and accumulates `∂(g_value·value + g_logd·log_deriv)/∂raw`
    /// into `grad` (length `3K + 3`).
    pub fn backward(&self, x: f64, g_value: f64, g_logd: f64, grad: &mut [f64]) -> TransformEval {
        let k = self.bins();
        let seg = self.locate(x);
        let (g, dg) = self.core(x, seg);
        let out = TransformEval {
            value: self.scale * g + self.shift,
            log_deriv: self.log_scale + dg.ln(),
        };

        grad[3 * k + 1] += g_value;
        grad[3 * k + 2] += g_value * self.scale * g + g_logd;
        let gg = g_value * self.scale;

        // gradients w.r.t. the materialised knot quantities
        let g_deriv_at = |i: usize, v: f64, grad: &mut [f64]| {
            let u = self.deriv_pre[i] + derivative_offset();
            grad[2 * k + i] += v * sigmoid(u);
        };

        match seg {
            Segment::Below => {
                g_deriv_at(0, gg * (x - self.lo) + g_logd / self.derivs[0], grad);
            }
            Segment::Above => {
                g_deriv_at(k, gg * (x - self.hi) + g_logd / self.derivs[k], grad);
            }
            Segment::Bin(b) => {
                let w = self.knots_x[b + 1] - self.knots_x[b];
                let h = self.knots_y[b + 1] - self.knots_y[b];
                let s = h / w;
                let (d0, d1) = (self.derivs[b], self.derivs[b + 1]);
                let xi = (x - self.knots_x[b]) / w;
                let omx = 1.0 - xi;
                let t = xi * omx;
                let num = h * (s * xi * xi + d0 * t);
                let den = s + (d0 + d1 - 2.0 * s) * t;
                let q = d1 * xi * xi + 2.0 * s * t + d0 * omx * omx;
                let dn = s * s * q;

                // g = y_b + num/den ; log g' = ln dn − 2 ln den
                let g_yb = gg;
                let g_num = gg / den;
                let g_den = -gg * num / (den * den) - 2.0 * g_logd / den;
                let g_dn = g_logd / dn;

                let mut g_s = g_dn * (2.0 * s * q + s * s * 2.0 * t);
                let mut g_d0 = g_dn * s * s * omx * omx;
                let mut g_d1 = g_dn * s * s * xi * xi;
                let mut g_t = g_dn * s * s * 2.0 * s;
                let mut g_xi = g_dn * s * s * (2.0 * d1 * xi - 2.0 * d0 * omx);

                let mut g_h = g_num * (s * xi * xi + d0 * t);
                g_s += g_num * h * xi * xi;
                g_xi += g_num * h * 2.0 * s * xi;
                g_d0 += g_num * h * t;
                g_t += g_num * h * d0;

                g_s += g_den * (1.0 - 2.0 * t);
                g_d0 += g_den * t;
                g_d1 += g_den * t;
                g_t += g_den * (d0 + d1 - 2.0 * s);

                g_xi += g_t * (1.0 - 2.0 * xi);

                g_h += g_s / w;
                let mut g_w = -g_s * h / (w * w);
                let g_xb = -g_xi / w;
                g_w += -g_xi * xi / w;

                g_deriv_at(b, g_d0, grad);
                g_deriv_at(b + 1, g_d1, grad);

                // knots_x[b] = lo + span·Σ_{j<b}(keep·p_j + MIN) and
                // w = span·(keep·p_b + MIN); the pinned last knot differs from
                // this only by a constant shift across all p_j, which the
                // softmax backward pass annihilates.
                let c = (self.hi - self.lo) * (1.0 - k as f64 * MIN_BIN_FRACTION);
                let mut g_pw = [0.0f64; MAX_BINS];
                let mut g_ph = [0.0f64; MAX_BINS];
                for j in 0..b {
                    g_pw[j] = g_xb * c;
                    g_ph[j] = g_yb * c;
                }
                g_pw[b] = g_w * c;
                g_ph[b] = g_h * c;
                softmax_backward(&self.width_probs, &g_pw[..k], &mut grad[..k]);
                softmax_backward(&self.height_probs, &g_ph[..k], &mut grad[k..2 * k]);
            }
        }
        out
    }
}

/// `knots[0] = lo`, `knots[i] = lo + span·(keep·Σ_{j<i} p_j + MIN·i)`, last pinned to `hi`.
fn fill_knots(probs: &[f64], lo: f64, hi: f64, keep: f64, knots: &mut [f64]) {
    let span = hi - lo;
    let mut acc = 0.0;
    knots[0] = lo;
    for (i, &p) in probs.iter().enumerate() {
        acc += keep * p + MIN_BIN_FRACTION;
        knots[i + 1] = lo + span * acc;
    }
    knots[probs.len()] = hi;
}

fn softmax_backward(probs: &[f64], g_probs: &[f64], g_logits: &mut [f64]) {
    let dot: f64 = probs.iter().zip(g_probs).map(|(p, g)| p * g).sum();
    for ((gl, &p), &gp) in g_logits.iter_mut().zip(probs).zip(g_probs) {
        *gl += p * (gp - dot);
    }
}

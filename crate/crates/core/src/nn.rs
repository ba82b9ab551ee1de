//! Minimal dense-layer machinery over flat parameter vectors.
//!
//! Networks here are small and fixed-shape, so layers are just views
//! (offsets) into one `Vec<f64>` and backpropagation is written by hand.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

/// A named block of a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len()
    }
}

/// Builder that hands out consecutive segments.
#[derive(Debug, Default, Clone)]
pub struct LayoutBuilder {
    pub segments: Vec<Segment>,
    pub total: usize,
}

impl LayoutBuilder {
    pub fn segment(&mut self, name: &str, rows: usize, cols: usize) -> Segment {
        let seg = Segment { name: name.into(), offset: self.total, rows, cols };
        self.total += seg.len();
        self.segments.push(seg.clone());
        seg
    }

    pub fn dense(&mut self, name: &str, inputs: usize, outputs: usize) -> Dense {
        let w = self.segment(&alloc::format!("{name}.weight"), outputs, inputs);
        let b = self.segment(&alloc::format!("{name}.bias"), 1, outputs);
        Dense { w: w.offset, b: Some(b.offset), inputs, outputs }
    }

    pub fn dense_no_bias(&mut self, name: &str, inputs: usize, outputs: usize) -> Dense {
        let w = self.segment(&alloc::format!("{name}.weight"), outputs, inputs);
        Dense { w: w.offset, b: None, inputs, outputs }
    }
}

/// Affine map `y = W x (+ b)` with `W` stored row-major (`outputs × inputs`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dense {
    pub w: usize,
    pub b: Option<usize>,
    pub inputs: usize,
    pub outputs: usize,
}

impl Dense {
    pub fn forward(&self, p: &[f64], x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.inputs);
        debug_assert_eq!(y.len(), self.outputs);
        let w = &p[self.w..self.w + self.inputs * self.outputs];
        for (o, row) in w.chunks_exact(self.inputs).enumerate() {
            y[o] = dot(row, x);
        }
        if let Some(b) = self.b {
            for (yo, bo) in y.iter_mut().zip(&p[b..b + self.outputs]) {
                *yo += bo;
            }
        }
    }

    /// Accumulates parameter gradients for upstream gradient `dy` at input
    /// `x`, and adds `Wᵀ dy` into `dx` when requested.
    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], dy: &[f64], dx: Option<&mut [f64]>) {
        let n = self.inputs * self.outputs;
        {
            let gw = &mut g[self.w..self.w + n];
            for (o, row) in gw.chunks_exact_mut(self.inputs).enumerate() {
                let d = dy[o];
                if d != 0.0 {
                    for (gi, xi) in row.iter_mut().zip(x) {
                        *gi += d * xi;
                    }
                }
            }
        }
        if let Some(b) = self.b {
            for (gb, d) in g[b..b + self.outputs].iter_mut().zip(dy) {
                *gb += d;
            }
        }
        if let Some(dx) = dx {
            let w = &p[self.w..self.w + n];
            for (o, row) in w.chunks_exact(self.inputs).enumerate() {
                let d = dy[o];
                if d != 0.0 {
                    for (dxi, wi) in dx.iter_mut().zip(row) {
                        *dxi += d * wi;
                    }
                }
            }
        }
    }

    pub fn init_uniform<R: Rng + ?Sized>(&self, p: &mut [f64], range: f64, rng: &mut R) {
        for v in &mut p[self.w..self.w + self.inputs * self.outputs] {
            *v = rng.random_range(-range..=range);
        }
        if let Some(b) = self.b {
            p[b..b + self.outputs].fill(0.0);
        }
    }

    /// Uniform in `±1/sqrt(inputs)`.
    pub fn init_fan_in<R: Rng + ?Sized>(&self, p: &mut [f64], rng: &mut R) {
        let range = 1.0 / libm::sqrt(self.inputs.max(1) as f64);
        self.init_uniform(p, range, rng);
    }

    pub fn zero(&self, p: &mut [f64]) {
        p[self.w..self.w + self.inputs * self.outputs].fill(0.0);
        if let Some(b) = self.b {
            p[b..b + self.outputs].fill(0.0);
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn tanh_in_place(v: &mut [f64]) {
    for x in v {
        *x = libm::tanh(*x);
    }
}

/// Turns `dy` (gradient w.r.t. `y = tanh(z)`) into the gradient w.r.t. `z`.
pub fn tanh_backward(y: &[f64], dy: &mut [f64]) {
    for (d, t) in dy.iter_mut().zip(y) {
        *d *= 1.0 - t * t;
    }
}

/// Softmax restricted to the `legal` entries; illegal entries get exactly 0.
pub fn masked_softmax(logits: &[f64], legal: &[bool], out: &mut [f64]) {
    let max = logits
        .iter()
        .zip(legal)
        .filter(|(_, &ok)| ok)
        .map(|(l, _)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    for ((o, l), &ok) in out.iter_mut().zip(logits).zip(legal) {
        *o = if ok { libm::exp(l - max) } else { 0.0 };
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
}

/// Adam state for a flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: alloc::vec![0.0; len], v: alloc::vec![0.0; len], t: 0 }
    }

    /// Descent step on `params` along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, f64::from(self.t));
        let c2 = 1.0 - libm::pow(self.beta2, f64::from(self.t));
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (libm::sqrt(vh) + self.eps);
        }
    }
}

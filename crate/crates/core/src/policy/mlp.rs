//! Fully connected network with swish hidden activations and a linear output
//! layer, with hand-written backpropagation.

use rand::Rng;

use crate::real::Real;

/// `x * sigmoid(x)`.
#[inline]
pub fn swish<T: Real>(x: T) -> T {
    x * sigmoid(x)
}

#[inline]
pub fn swish_derivative<T: Real>(x: T) -> T {
    let s = sigmoid(x);
    s + x * s * (T::one() - s)
}

#[inline]
fn sigmoid<T: Real>(x: T) -> T {
    // split to avoid overflow of exp for large |x|
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Affine map `y = W x + b` with `W` stored row-major (`n_out x n_in`).
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T> {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> Layer<T> {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self { n_in, n_out, weights: vec![T::zero(); n_in * n_out], bias: vec![T::zero(); n_out] }
    }

    /// Glorot-uniform weights, zero bias.
    pub fn glorot<R: Rng + ?Sized>(n_in: usize, n_out: usize, gain: f64, rng: &mut R) -> Self {
        let limit = gain * (6.0 / (n_in + n_out) as f64).sqrt();
        let weights = (0..n_in * n_out).map(|_| T::lit(rng.random_range(-limit..=limit))).collect();
        Self { n_in, n_out, weights, bias: vec![T::zero(); n_out] }
    }

    fn apply(&self, x: &[T], y: &mut Vec<T>) {
        y.clear();
        for o in 0..self.n_out {
            let row = &self.weights[o * self.n_in..(o + 1) * self.n_in];
            y.push(row.iter().zip(x).map(|(&w, &v)| w * v).sum::<T>() + self.bias[o]);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<T> {
    pub layers: Vec<Layer<T>>,
}

/// Inputs and pre-activations of every layer from one forward pass.
#[derive(Clone, Debug, Default)]
pub struct ForwardCache<T> {
    inputs: Vec<Vec<T>>,
    pre: Vec<Vec<T>>,
}

impl<T: Real> Mlp<T> {
    /// Glorot-initialized network with layer widths `sizes` (input first).
    /// The output layer is scaled by `out_gain`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], out_gain: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "an MLP needs at least input and output widths");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Layer::glorot(w[0], w[1], if i == last { out_gain } else { 1.0 }, rng))
            .collect();
        Self { layers }
    }

    /// Same shape, all parameters zero. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self { layers: self.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect() }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().expect("nonempty").n_out
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.n_inputs()];
        s.extend(self.layers.iter().map(|l| l.n_out));
        s
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: &[T]) -> Vec<T> {
        self.forward_cached(x).1
    }

    pub fn forward_cached(&self, x: &[T]) -> (ForwardCache<T>, Vec<T>) {
        let n = self.layers.len();
        let mut cache = ForwardCache { inputs: Vec::with_capacity(n), pre: Vec::with_capacity(n) };
        let mut input = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.n_out);
            layer.apply(&input, &mut z);
            let next = if i + 1 < n { z.iter().map(|&v| swish(v)).collect() } else { z.clone() };
            cache.inputs.push(std::mem::replace(&mut input, next));
            cache.pre.push(z);
        }
        (cache, input)
    }

    /// Accumulates `d(out . dout)/d(params)` into `grad`.
    pub fn backward(&self, cache: &ForwardCache<T>, dout: &[T], grad: &mut Mlp<T>) {
        let n = self.layers.len();
        let mut delta = dout.to_vec();
        for i in (0..n).rev() {
            let layer = &self.layers[i];
            if i + 1 < n {
                for (d, &z) in delta.iter_mut().zip(&cache.pre[i]) {
                    *d *= swish_derivative(z);
                }
            }
            let input = &cache.inputs[i];
            let g = &mut grad.layers[i];
            for o in 0..layer.n_out {
                let d = delta[o];
                g.bias[o] += d;
                if d != T::zero() {
                    for (gw, &x) in g.weights[o * layer.n_in..(o + 1) * layer.n_in].iter_mut().zip(input) {
                        *gw += d * x;
                    }
                }
            }
            if i > 0 {
                let mut back = vec![T::zero(); layer.n_in];
                for o in 0..layer.n_out {
                    let d = delta[o];
                    if d == T::zero() {
                        continue;
                    }
                    for (b, &w) in back.iter_mut().zip(&layer.weights[o * layer.n_in..(o + 1) * layer.n_in]) {
                        *b += d * w;
                    }
                }
                delta = back;
            }
        }
    }

    /// Parameters in a fixed order: per layer, weights then bias.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    /// Inverse of [`Mlp::flatten`].
    pub fn assign(&mut self, flat: &[T]) {
        assert_eq!(flat.len(), self.n_params(), "parameter count mismatch");
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
    }

    pub fn for_each_param_mut(&mut self, mut f: impl FnMut(&mut T)) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(&mut f);
            l.bias.iter_mut().for_each(&mut f);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    /// `self += other`, shapes must agree.
    pub fn add_assign(&mut self, other: &Mlp<T>) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, &y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, &y)| *x += y);
        }
    }
}

//! Fully connected tanh network with a linear output layer and explicit
//! backpropagation over a flat parameter vector.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer activations from a forward pass; `0` is the input.
#[derive(Debug, Clone, Default)]
pub struct Activations {
    layers: Vec<Vec<f64>>,
}

impl Activations {
    pub fn output(&self) -> &[f64] {
        self.layers.last().map(|v| v.as_slice()).unwrap_or(&[])
    }
}

impl Mlp {
    /// Xavier-uniform weights, zero biases; the output layer is scaled by
    /// `out_scale`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], out_scale: f64, rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "an MLP needs input and output sizes");
        let mut params = Vec::new();
        let n_layers = dims.len() - 1;
        for l in 0..n_layers {
            let (n_in, n_out) = (dims[l], dims[l + 1]);
            let bound = (6.0 / (n_in + n_out) as f64).sqrt();
            let scale = if l + 1 == n_layers { out_scale } else { 1.0 };
            let u = Uniform::new_inclusive(-bound, bound).expect("finite bounds");
            params.extend((0..n_in * n_out).map(|_| u.sample(rng) * scale));
            params.extend(std::iter::repeat_n(0.0, n_out));
        }
        Mlp {
            dims: dims.to_vec(),
            params,
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut off = 0;
        self.dims.windows(2).map(move |w| {
            let start = off;
            off += w[0] * w[1] + w[1];
            (start, w[0], w[1])
        })
    }

    pub fn forward(&self, x: &[f64], acts: &mut Activations) {
        assert_eq!(x.len(), self.dims[0], "input dimension");
        let n_layers = self.dims.len() - 1;
        acts.layers.resize(n_layers + 1, Vec::new());
        acts.layers[0].clear();
        acts.layers[0].extend_from_slice(x);
        for (l, (off, n_in, n_out)) in self.layers().enumerate() {
            let (prev, rest) = acts.layers.split_at_mut(l + 1);
            let input = &prev[l];
            let out = &mut rest[0];
            out.clear();
            let w = &self.params[off..off + n_in * n_out];
            let b = &self.params[off + n_in * n_out..off + n_in * n_out + n_out];
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let z = b[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                out.push(if l + 1 < n_layers { z.tanh() } else { z });
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut acts = Activations::default();
        self.forward(x, &mut acts);
        acts.output().to_vec()
    }

    /// Accumulate `d loss / d params` into `grad` given `d loss / d output`.
    pub fn backward(&self, acts: &Activations, d_out: &[f64], grad: &mut [f64]) {
        assert_eq!(grad.len(), self.params.len());
        let layers: Vec<_> = self.layers().collect();
        let mut delta = d_out.to_vec();
        let mut next = Vec::new();
        for (l, &(off, n_in, n_out)) in layers.iter().enumerate().rev() {
            let input = &acts.layers[l];
            let w = &self.params[off..off + n_in * n_out];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let g = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                for (gi, xi) in g.iter_mut().zip(input) {
                    *gi += d * xi;
                }
                grad[off + n_in * n_out + o] += d;
            }
            if l == 0 {
                break;
            }
            next.clear();
            next.resize(n_in, 0.0);
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (ni, wi) in next.iter_mut().zip(&w[o * n_in..(o + 1) * n_in]) {
                    *ni += d * wi;
                }
            }
            // input of layer l is tanh output of layer l - 1
            for (ni, a) in next.iter_mut().zip(input) {
                *ni *= 1.0 - a * a;
            }
            std::mem::swap(&mut delta, &mut next);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = Mlp::new(&[7, 64, 64, 51], 0.01, &mut rng);
        assert_eq!(m.n_params(), 7 * 64 + 64 + 64 * 64 + 64 + 64 * 51 + 51);
        assert_eq!(m.eval(&[0.0; 7]).len(), 51);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = Mlp::new(&[3, 5, 4, 2], 1.0, &mut rng);
        let x = [0.3, -1.2, 0.7];
        // loss = out0 + 2 * out1^2
        let loss = |m: &Mlp| {
            let o = m.eval(&x);
            o[0] + 2.0 * o[1] * o[1]
        };
        let mut acts = Activations::default();
        m.forward(&x, &mut acts);
        let o = acts.output().to_vec();
        let mut grad = vec![0.0; m.n_params()];
        m.backward(&acts, &[1.0, 4.0 * o[1]], &mut grad);
        let h = 1e-6;
        for i in 0..m.n_params() {
            let p = m.params[i];
            m.params[i] = p + h;
            let up = loss(&m);
            m.params[i] = p - h;
            let dn = loss(&m);
            m.params[i] = p;
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - grad[i]).abs() < 1e-7, "param {i}: {fd} vs {}", grad[i]);
        }
    }
}

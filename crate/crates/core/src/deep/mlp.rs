//! Fully connected ReLU network with a scalar linear output, stored as one
//! flat parameter vector.
//!
//! Layer `l` maps `dims[l]` inputs to `dims[l+1]` outputs; its weights
//! (row-major, `out x in`) are followed by its biases.

use crate::env::RandomSource;
use crate::error::{invalid, Error, Result};

/// Hidden widths of the Q-network.
pub const HIDDEN: [usize; 3] = [64, 128, 64];

#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    dims: Vec<usize>,
    params: Vec<f64>,
}

fn count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpParams {
    /// All-zero network with layer sizes `dims` (input first, output last).
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(invalid("network needs at least two non-empty layers"));
        }
        if dims[dims.len() - 1] != 1 {
            return Err(invalid("network output must be scalar"));
        }
        Ok(Self {
            dims: dims.to_vec(),
            params: vec![0.0; count(dims)],
        })
    }

    /// `input -> 64 -> 128 -> 64 -> 1`.
    pub fn q_network_dims(input: usize) -> Vec<usize> {
        let mut d = vec![input];
        d.extend(HIDDEN);
        d.push(1);
        d
    }

    /// Uniform fan-in initialisation: weights and biases of layer `l` are
    /// drawn from `U(-1/sqrt(in), 1/sqrt(in))`.
    pub fn init(dims: &[usize], rng: &mut RandomSource) -> Result<Self> {
        let mut p = Self::zeros(dims)?;
        let mut off = 0;
        for w in dims.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for v in &mut p.params[off..off + w[0] * w[1] + w[1]] {
                *v = bound * (2.0 * rng.uniform() - 1.0);
            }
            off += w[0] * w[1] + w[1];
        }
        Ok(p)
    }

    pub fn from_parts(dims: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        let mut p = Self::zeros(&dims)?;
        if params.len() != p.params.len() {
            return Err(Error::ShapeMismatch {
                expected: p.params.len(),
                got: params.len(),
            });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(invalid("network parameters must be finite"));
        }
        p.params = params;
        Ok(p)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.params
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Forward pass keeping every layer's post-activation output.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let layers = self.dims.len() - 1;
        let mut acts = Vec::with_capacity(layers + 1);
        acts.push(input.to_vec());
        let mut off = 0;
        for l in 0..layers {
            let (nin, nout) = (self.dims[l], self.dims[l + 1]);
            let w = &self.params[off..off + nin * nout];
            let b = &self.params[off + nin * nout..off + nin * nout + nout];
            let prev = &acts[l];
            let mut out: Vec<f64> = (0..nout)
                .map(|o| b[o] + w[o * nin..(o + 1) * nin].iter().zip(prev).map(|(a, x)| a * x).sum::<f64>())
                .collect();
            if l + 1 < layers {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
            off += nin * nout + nout;
        }
        acts
    }

    pub fn forward(&self, input: &[f64]) -> Result<f64> {
        if input.len() != self.dims[0] {
            return Err(Error::ShapeMismatch {
                expected: self.dims[0],
                got: input.len(),
            });
        }
        Ok(self.activations(input).last().map(|o| o[0]).unwrap_or(0.0))
    }

    /// Mean squared loss `(1/B) sum (target - output)^2` over `batch` and its
    /// gradient, by reverse-mode differentiation.
    pub fn gradient(&self, batch: &[(Vec<f64>, f64)]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(invalid("gradient needs a non-empty batch"));
        }
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let scale = 1.0 / batch.len() as f64;
        let layers = self.dims.len() - 1;
        // layer offsets into the flat vector
        let mut offs = Vec::with_capacity(layers);
        let mut off = 0;
        for w in self.dims.windows(2) {
            offs.push(off);
            off += w[0] * w[1] + w[1];
        }
        for (input, target) in batch {
            if input.len() != self.dims[0] {
                return Err(Error::ShapeMismatch {
                    expected: self.dims[0],
                    got: input.len(),
                });
            }
            let acts = self.activations(input);
            let err = acts[layers][0] - target;
            loss += scale * err * err;
            let mut delta = vec![2.0 * scale * err];
            for l in (0..layers).rev() {
                let (nin, nout) = (self.dims[l], self.dims[l + 1]);
                let o = offs[l];
                let prev = &acts[l];
                for j in 0..nout {
                    let d = delta[j];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut grad[o + j * nin..o + (j + 1) * nin];
                    for (g, x) in row.iter_mut().zip(prev) {
                        *g += d * x;
                    }
                    grad[o + nin * nout + j] += d;
                }
                if l > 0 {
                    let w = &self.params[o..o + nin * nout];
                    let mut back = vec![0.0; nin];
                    for j in 0..nout {
                        let d = delta[j];
                        if d == 0.0 {
                            continue;
                        }
                        for (b, a) in back.iter_mut().zip(&w[j * nin..(j + 1) * nin]) {
                            *b += d * a;
                        }
                    }
                    // ReLU derivative from the stored post-activation
                    for (b, a) in back.iter_mut().zip(prev) {
                        if *a <= 0.0 {
                            *b = 0.0;
                        }
                    }
                    delta = back;
                }
            }
        }
        Ok((loss, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent forward pass over explicit per-layer matrices.
    fn reference_forward(p: &MlpParams, input: &[f64]) -> f64 {
        let d = p.dims();
        let flat = p.as_slice();
        let mut x = input.to_vec();
        let mut off = 0;
        for l in 0..d.len() - 1 {
            let mut w = vec![vec![0.0; d[l]]; d[l + 1]];
            for (o, row) in w.iter_mut().enumerate() {
                for (i, v) in row.iter_mut().enumerate() {
                    *v = flat[off + o * d[l] + i];
                }
            }
            off += d[l] * d[l + 1];
            let b = &flat[off..off + d[l + 1]];
            off += d[l + 1];
            let mut y = vec![0.0; d[l + 1]];
            for o in 0..d[l + 1] {
                let mut acc = b[o];
                for i in 0..d[l] {
                    acc += w[o][i] * x[i];
                }
                y[o] = if l + 2 < d.len() { acc.max(0.0) } else { acc };
            }
            x = y;
        }
        x[0]
    }

    fn random_batch(dim: usize, size: usize, rng: &mut RandomSource) -> Vec<(Vec<f64>, f64)> {
        (0..size)
            .map(|_| {
                let x = (0..dim).map(|_| 2.0 * rng.uniform() - 1.0).collect();
                (x, 4.0 * rng.uniform() - 2.0)
            })
            .collect()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let p = MlpParams::zeros(&MlpParams::q_network_dims(10)).unwrap();
        assert_eq!(p.forward(&[1.0; 10]).unwrap(), 0.0);
        assert_eq!(p.num_params(), 10 * 64 + 64 + 64 * 128 + 128 + 128 * 64 + 64 + 64 + 1);
    }

    #[test]
    fn forward_matches_reference() {
        let mut rng = RandomSource::new(5);
        let p = MlpParams::init(&MlpParams::q_network_dims(10), &mut rng).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.uniform()).collect();
            let a = p.forward(&x).unwrap();
            assert_eq!(a, p.forward(&x).unwrap());
            assert!((a - reference_forward(&p, &x)).abs() < 1e-6);
        }
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let p = MlpParams::zeros(&[3, 1]).unwrap();
        assert!(p.forward(&[1.0]).is_err());
    }

    #[test]
    fn gradient_zero_at_fit() {
        let mut rng = RandomSource::new(1);
        let p = MlpParams::init(&[4, 8, 1], &mut rng).unwrap();
        let batch: Vec<_> = (0..5)
            .map(|i| {
                let x = vec![i as f64 * 0.1; 4];
                let y = p.forward(&x).unwrap();
                (x, y)
            })
            .collect();
        let (loss, g) = p.gradient(&batch).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_linear_closed_form() {
        // y = w x + b with b = 0
        let p = MlpParams::from_parts(vec![1, 1], vec![0.7, 0.0]).unwrap();
        let (x, t) = (1.5, 2.0);
        let (_, g) = p.gradient(&[(vec![x], t)]).unwrap();
        assert!((g[0] - (-2.0 * (t - 0.7 * x) * x)).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = RandomSource::new(77);
        let p = MlpParams::init(&[6, 7, 9, 5, 1], &mut rng).unwrap();
        let batch = random_batch(6, 8, &mut rng);
        let (_, g) = p.gradient(&batch).unwrap();
        let h = 1e-5;
        for i in 0..p.num_params() {
            let mut plus = p.clone();
            plus.as_mut_slice()[i] += h;
            let mut minus = p.clone();
            minus.as_mut_slice()[i] -= h;
            let fd = (plus.gradient(&batch).unwrap().0 - minus.gradient(&batch).unwrap().0) / (2.0 * h);
            let denom = fd.abs().max(g[i].abs()).max(1e-6);
            assert!((fd - g[i]).abs() / denom < 1e-4, "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn empty_batch_rejected() {
        let p = MlpParams::zeros(&[2, 1]).unwrap();
        assert!(p.gradient(&[]).is_err());
    }
}

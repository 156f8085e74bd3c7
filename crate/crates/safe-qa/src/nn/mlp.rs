//! Two-layer perceptron block `y = W2·relu(W1·x + b1) + b2` with exact
//! analytic gradients.

use rand::distributions::Uniform;
use rand::Rng;

use crate::error::{Error, Result};

/// Dense two-layer block. Weight matrices are row-major: `w1` is
/// `hidden_dim × in_dim`, `w2` is `out_dim × hidden_dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpBlock {
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub out_dim: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Forward intermediates needed by `backward`.
#[derive(Clone, Debug)]
pub struct MlpCache {
    pub x: Vec<f64>,
    pub z1: Vec<f64>,
    pub a1: Vec<f64>,
}

/// Gradients of a block's parameters plus the input gradient.
#[derive(Clone, Debug)]
pub struct MlpGrads {
    pub dx: Vec<f64>,
    pub dw1: Vec<f64>,
    pub db1: Vec<f64>,
    pub dw2: Vec<f64>,
    pub db2: Vec<f64>,
}

impl MlpGrads {
    pub fn zeros(block: &MlpBlock) -> MlpGrads {
        MlpGrads {
            dx: vec![0.0; block.in_dim],
            dw1: vec![0.0; block.w1.len()],
            db1: vec![0.0; block.b1.len()],
            dw2: vec![0.0; block.w2.len()],
            db2: vec![0.0; block.b2.len()],
        }
    }

    /// Adds `other`'s parameter gradients into `self` (fixed order, used for
    /// deterministic batch accumulation). Input gradients are not summed.
    pub fn accumulate(&mut self, other: &MlpGrads) {
        for (a, b) in self.dw1.iter_mut().zip(&other.dw1) {
            *a += b;
        }
        for (a, b) in self.db1.iter_mut().zip(&other.db1) {
            *a += b;
        }
        for (a, b) in self.dw2.iter_mut().zip(&other.dw2) {
            *a += b;
        }
        for (a, b) in self.db2.iter_mut().zip(&other.db2) {
            *a += b;
        }
    }
}

impl MlpBlock {
    /// All-zero block (useful as an additive identity: output is `b2`).
    pub fn zeros(in_dim: usize, hidden_dim: usize, out_dim: usize) -> MlpBlock {
        MlpBlock {
            in_dim,
            hidden_dim,
            out_dim,
            w1: vec![0.0; hidden_dim * in_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; out_dim * hidden_dim],
            b2: vec![0.0; out_dim],
        }
    }

    /// Uniform ±sqrt(6/(fan_in+fan_out)) weight init, zero biases. Sampling
    /// order (w1 row-major, then w2) is part of the determinism contract.
    pub fn init(in_dim: usize, hidden_dim: usize, out_dim: usize, rng: &mut impl Rng) -> MlpBlock {
        let mut block = MlpBlock::zeros(in_dim, hidden_dim, out_dim);
        let a1 = (6.0 / (in_dim + hidden_dim) as f64).sqrt();
        let d1 = Uniform::new(-a1, a1);
        for w in &mut block.w1 {
            *w = rng.sample(d1);
        }
        let a2 = (6.0 / (hidden_dim + out_dim) as f64).sqrt();
        let d2 = Uniform::new(-a2, a2);
        for w in &mut block.w2 {
            *w = rng.sample(d2);
        }
        block
    }

    /// in·h + h + h·out + out.
    pub fn param_count(&self) -> usize {
        self.in_dim * self.hidden_dim
            + self.hidden_dim
            + self.hidden_dim * self.out_dim
            + self.out_dim
    }

    /// Named parameter tensors in fixed order (w1, b1, w2, b2).
    pub fn tensors(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("w1", self.w1.as_slice()),
            ("b1", self.b1.as_slice()),
            ("w2", self.w2.as_slice()),
            ("b2", self.b2.as_slice()),
        ]
    }

    pub fn tensors_mut(&mut self) -> [(&'static str, &mut Vec<f64>); 4] {
        [
            ("w1", &mut self.w1),
            ("b1", &mut self.b1),
            ("w2", &mut self.w2),
            ("b2", &mut self.b2),
        ]
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        if x.len() != self.in_dim {
            return Err(Error::Dimension {
                what: "mlp input".into(),
                expected: self.in_dim,
                got: x.len(),
            });
        }
        let mut z1 = self.b1.clone();
        for j in 0..self.hidden_dim {
            let row = &self.w1[j * self.in_dim..(j + 1) * self.in_dim];
            let mut acc = 0.0;
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            z1[j] += acc;
        }
        let a1: Vec<f64> = z1.iter().map(|&z| if z > 0.0 { z } else { 0.0 }).collect();
        let mut y = self.b2.clone();
        for o in 0..self.out_dim {
            let row = &self.w2[o * self.hidden_dim..(o + 1) * self.hidden_dim];
            let mut acc = 0.0;
            for (w, ai) in row.iter().zip(&a1) {
                acc += w * ai;
            }
            y[o] += acc;
        }
        Ok((y, MlpCache { x: x.to_vec(), z1, a1 }))
    }

    /// Exact gradients of the forward map. The ReLU subgradient at exactly
    /// zero is taken as 0.
    pub fn backward(&self, cache: &MlpCache, dy: &[f64]) -> Result<MlpGrads> {
        if dy.len() != self.out_dim {
            return Err(Error::Dimension {
                what: "mlp output gradient".into(),
                expected: self.out_dim,
                got: dy.len(),
            });
        }
        if cache.x.len() != self.in_dim || cache.z1.len() != self.hidden_dim {
            return Err(Error::Incompatible(
                "forward cache does not match this block's dimensions".into(),
            ));
        }
        let mut g = MlpGrads::zeros(self);
        g.db2.copy_from_slice(dy);
        let mut da1 = vec![0.0; self.hidden_dim];
        for o in 0..self.out_dim {
            let row = o * self.hidden_dim;
            for j in 0..self.hidden_dim {
                g.dw2[row + j] = dy[o] * cache.a1[j];
                da1[j] += self.w2[row + j] * dy[o];
            }
        }
        let dz1: Vec<f64> = da1
            .iter()
            .zip(&cache.z1)
            .map(|(&d, &z)| if z > 0.0 { d } else { 0.0 })
            .collect();
        g.db1.copy_from_slice(&dz1);
        for j in 0..self.hidden_dim {
            let row = j * self.in_dim;
            for i in 0..self.in_dim {
                g.dw1[row + i] = dz1[j] * cache.x[i];
                g.dx[i] += self.w1[row + i] * dz1[j];
            }
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn identity_1x1x1() -> MlpBlock {
        MlpBlock {
            in_dim: 1,
            hidden_dim: 1,
            out_dim: 1,
            w1: vec![1.0],
            b1: vec![0.0],
            w2: vec![1.0],
            b2: vec![0.0],
        }
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut block = MlpBlock::zeros(3, 4, 1);
        block.b2 = vec![0.7];
        for x in [[0.0, 0.0, 0.0], [1.0, -2.0, 3.5]] {
            let (y, _) = block.forward(&x).unwrap();
            assert_eq!(y, vec![0.7]);
        }
    }

    #[test]
    fn positive_passthrough_and_relu_clamp() {
        let block = identity_1x1x1();
        assert_eq!(block.forward(&[2.0]).unwrap().0, vec![2.0]);
        assert_eq!(block.forward(&[-2.0]).unwrap().0, vec![0.0]);
    }

    #[test]
    fn hand_computed_backward() {
        let block = identity_1x1x1();
        let (_, cache) = block.forward(&[2.0]).unwrap();
        let g = block.backward(&cache, &[1.0]).unwrap();
        assert_eq!(g.dx, vec![1.0]);
        assert_eq!(g.dw2, vec![2.0]);
        assert_eq!(g.db2, vec![1.0]);
        assert_eq!(g.dw1, vec![2.0]);
        assert_eq!(g.db1, vec![1.0]);
    }

    #[test]
    fn zero_upstream_gradient_zeroes_everything() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let block = MlpBlock::init(4, 6, 2, &mut rng);
        let (_, cache) = block.forward(&[0.3, -1.0, 2.0, 0.5]).unwrap();
        let g = block.backward(&cache, &[0.0, 0.0]).unwrap();
        for grad in [&g.dx, &g.dw1, &g.db1, &g.dw2, &g.db2] {
            assert!(grad.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn dimension_mismatches_rejected() {
        let block = MlpBlock::zeros(2, 3, 1);
        assert!(block.forward(&[1.0]).is_err());
        let (_, cache) = block.forward(&[1.0, 2.0]).unwrap();
        assert!(block.backward(&cache, &[1.0, 1.0]).is_err());
        let other = MlpBlock::zeros(5, 7, 1);
        assert!(other.backward(&cache, &[1.0]).is_err());
    }

    #[test]
    fn param_count_formula() {
        let block = MlpBlock::zeros(81, 48, 1);
        assert_eq!(block.param_count(), 81 * 48 + 48 + 48 + 1);
        assert_eq!(
            block.param_count(),
            block.w1.len() + block.b1.len() + block.w2.len() + block.b2.len()
        );
    }

    #[test]
    fn init_is_seed_deterministic_and_bounded() {
        let a = MlpBlock::init(10, 5, 1, &mut ChaCha20Rng::seed_from_u64(7));
        let b = MlpBlock::init(10, 5, 1, &mut ChaCha20Rng::seed_from_u64(7));
        assert_eq!(a, b);
        let bound1 = (6.0 / 15.0_f64).sqrt();
        assert!(a.w1.iter().all(|w| w.abs() < bound1));
        assert!(a.b1.iter().all(|&w| w == 0.0));
        let c = MlpBlock::init(10, 5, 1, &mut ChaCha20Rng::seed_from_u64(8));
        assert_ne!(a, c);
    }

    #[test]
    fn accumulate_sums_parameter_grads() {
        let block = MlpBlock::zeros(2, 2, 1);
        let mut acc = MlpGrads::zeros(&block);
        let mut g = MlpGrads::zeros(&block);
        g.dw1[0] = 1.5;
        g.db2[0] = -2.0;
        acc.accumulate(&g);
        acc.accumulate(&g);
        assert_eq!(acc.dw1[0], 3.0);
        assert_eq!(acc.db2[0], -4.0);
    }
}

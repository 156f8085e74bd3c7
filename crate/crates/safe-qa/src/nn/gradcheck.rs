//! Central finite-difference gradient checking for named parameter tensors.
//!
//! The relative error uses the mixed denominator max(|analytic|, |numeric|, 1)
//! so that near-zero gradients are compared absolutely.

use std::fmt;

/// Per-tensor check result.
#[derive(Clone, Debug)]
pub struct TensorCheck {
    pub name: String,
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Outcome of one gradient check across all tensors.
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub step: f64,
    pub tensors: Vec<TensorCheck>,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.tensors.iter().all(|t| t.pass)
    }

    pub fn worst(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_err).fold(0.0, f64::max)
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "gradient check (h={:.1e}, tolerance={:.1e}):",
            self.step, self.tolerance
        )?;
        for t in &self.tensors {
            writeln!(
                f,
                "  {:<24} max_rel_err={:.3e}  {}",
                t.name,
                t.max_rel_err,
                if t.pass { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// Compares `analytic` gradients against central finite differences of
/// `loss` at `params`. `loss` must be a pure function of the tensor list;
/// it is called 2·|params| times with perturbed copies.
pub fn check_tensors(
    loss: &mut dyn FnMut(&[Vec<f64>]) -> f64,
    params: &[Vec<f64>],
    analytic: &[Vec<f64>],
    names: &[&str],
    h: f64,
    tolerance: f64,
) -> GradCheckReport {
    assert_eq!(params.len(), analytic.len(), "tensor count mismatch");
    assert_eq!(params.len(), names.len(), "name count mismatch");
    let mut work: Vec<Vec<f64>> = params.to_vec();
    let mut tensors = Vec::with_capacity(params.len());
    for ti in 0..params.len() {
        assert_eq!(params[ti].len(), analytic[ti].len(), "tensor shape mismatch");
        let mut max_rel = 0.0f64;
        for i in 0..params[ti].len() {
            let orig = work[ti][i];
            work[ti][i] = orig + h;
            let plus = loss(&work);
            work[ti][i] = orig - h;
            let minus = loss(&work);
            work[ti][i] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[ti][i];
            let rel = (numeric - a).abs() / numeric.abs().max(a.abs()).max(1.0);
            max_rel = max_rel.max(rel);
        }
        tensors.push(TensorCheck {
            name: names[ti].to_string(),
            max_rel_err: max_rel,
            pass: max_rel <= tolerance,
        });
    }
    GradCheckReport { tolerance, step: h, tensors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::mlp::MlpBlock;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn linear_model_is_exact_to_rounding() {
        // loss(w) = w·x, gradient = x: central differences are exact up to
        // floating-point cancellation.
        let x = vec![0.3, -1.7, 2.5];
        let params = vec![vec![0.4, 0.1, -0.9]];
        let analytic = vec![x.clone()];
        let report = check_tensors(
            &mut |p| p[0].iter().zip(&x).map(|(w, xi)| w * xi).sum(),
            &params,
            &analytic,
            &["w"],
            1e-5,
            1e-8,
        );
        assert!(report.pass(), "{report}");
    }

    fn mlp_loss(tensors: &[Vec<f64>], dims: (usize, usize, usize), x: &[f64], c: &[f64]) -> f64 {
        let block = MlpBlock {
            in_dim: dims.0,
            hidden_dim: dims.1,
            out_dim: dims.2,
            w1: tensors[0].clone(),
            b1: tensors[1].clone(),
            w2: tensors[2].clone(),
            b2: tensors[3].clone(),
        };
        let (y, _) = block.forward(x).unwrap();
        y.iter().zip(c).map(|(yi, ci)| yi * ci).sum()
    }

    /// Random block + input, resampled until hidden preactivations are
    /// safely away from the ReLU kink.
    fn kink_free_instance(
        rng: &mut ChaCha20Rng,
        dims: (usize, usize, usize),
    ) -> (MlpBlock, Vec<f64>) {
        loop {
            let block = MlpBlock::init(dims.0, dims.1, dims.2, rng);
            let x: Vec<f64> = (0..dims.0).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (_, cache) = block.forward(&x).unwrap();
            let min_abs = cache.z1.iter().map(|z| z.abs()).fold(f64::INFINITY, f64::min);
            let any_active = cache.z1.iter().any(|&z| z > 1e-3);
            if min_abs > 1e-3 && any_active {
                return (block, x);
            }
        }
    }

    #[test]
    fn mlp_gradients_match_finite_differences() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..5 {
            let dims = (4, 6, 2);
            let (block, x) = kink_free_instance(&mut rng, dims);
            let c: Vec<f64> = (0..dims.2).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (_, cache) = block.forward(&x).unwrap();
            let g = block.backward(&cache, &c).unwrap();
            let params = vec![block.w1.clone(), block.b1.clone(), block.w2.clone(), block.b2.clone()];
            let analytic = vec![g.dw1, g.db1, g.dw2, g.db2];
            let report = check_tensors(
                &mut |p| mlp_loss(p, dims, &x, &c),
                &params,
                &analytic,
                &["w1", "b1", "w2", "b2"],
                1e-5,
                1e-4,
            );
            assert!(report.pass(), "{report}");
        }
    }

    #[test]
    fn corrupted_gradient_is_flagged() {
        let mut rng = ChaCha20Rng::seed_from_u64(19);
        let dims = (3, 5, 1);
        let (block, x) = kink_free_instance(&mut rng, dims);
        let (_, cache) = block.forward(&x).unwrap();
        let g = block.backward(&cache, &[1.0]).unwrap();
        let params = vec![block.w1.clone(), block.b1.clone(), block.w2.clone(), block.b2.clone()];
        let mut analytic = vec![g.dw1, g.db1, g.dw2, g.db2];
        for v in &mut analytic[0] {
            *v *= 1.1;
        }
        let report = check_tensors(
            &mut |p| mlp_loss(p, dims, &x, &[1.0]),
            &params,
            &analytic,
            &["w1", "b1", "w2", "b2"],
            1e-5,
            1e-4,
        );
        assert!(!report.pass());
        assert!(!report.tensors[0].pass, "corrupted tensor must fail");
        assert!(report.tensors[3].pass, "untouched tensor must pass");
    }
}

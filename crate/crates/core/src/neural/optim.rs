use crate::error::{Error, Result};

/// Uniform view over the trainable tensors of a model.
///
/// Two values of the same model type with the same architecture expose
/// tensors in the same order and with the same lengths.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;

    /// Mutable access. Implementations invalidate tapes recorded before the call.
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn flatten(&self) -> Vec<f64> {
        self.tensors().concat()
    }
}

fn check_shapes<P: Parameters>(a: &P, b: &P) -> Result<()> {
    let la: Vec<usize> = a.tensors().iter().map(|t| t.len()).collect();
    let lb: Vec<usize> = b.tensors().iter().map(|t| t.len()).collect();
    if la != lb {
        return Err(Error::Dimension(format!(
            "parameter layouts differ: {la:?} vs {lb:?}"
        )));
    }
    Ok(())
}

/// `p ← p − lr·g`
pub fn sgd_step<P: Parameters>(params: &mut P, grads: &P, learning_rate: f64) -> Result<()> {
    check_shapes(params, grads)?;
    let grads = grads.tensors();
    for (p, g) in params.tensors_mut().into_iter().zip(grads) {
        for (x, dx) in p.iter_mut().zip(g) {
            *x -= learning_rate * dx;
        }
    }
    Ok(())
}

/// Polyak averaging: `target ← τ·online + (1−τ)·target`.
pub fn soft_update<P: Parameters>(online: &P, target: &mut P, tau: f64) -> Result<()> {
    check_shapes(online, target)?;
    let keep = 1.0 - tau;
    for (t, o) in target.tensors_mut().into_iter().zip(online.tensors()) {
        for (x, y) in t.iter_mut().zip(o) {
            *x = tau * y + keep * *x;
        }
    }
    Ok(())
}

/// `(x − mean) / sqrt(var + ε)` with population variance and no affine terms.
pub fn static_batchnorm(x: &[f64], eps: f64) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let scale = (var + eps).sqrt();
    x.iter().map(|v| (v - mean) / scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Flat(Vec<f64>);

    impl Parameters for Flat {
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn soft_update_endpoints() {
        let online = Flat(vec![2.0, -3.0]);
        let mut target = Flat(vec![1.0, 5.0]);
        soft_update(&online, &mut target, 0.0).unwrap();
        assert_eq!(target.0, vec![1.0, 5.0]);
        soft_update(&online, &mut target, 1.0).unwrap();
        assert_eq!(target.0, vec![2.0, -3.0]);
    }

    #[test]
    fn soft_update_scalar() {
        let online = Flat(vec![2.0]);
        let mut target = Flat(vec![1.0]);
        soft_update(&online, &mut target, 0.01).unwrap();
        assert!((target.0[0] - 1.01).abs() < 1e-15);
    }

    #[test]
    fn soft_update_contracts() {
        let online = Flat(vec![0.3, -1.7, 4.0]);
        let before = Flat(vec![-2.0, 0.5, 4.5]);
        let mut target = Flat(before.0.clone());
        let tau = 0.25;
        soft_update(&online, &mut target, tau).unwrap();
        for i in 0..3 {
            let lhs = (target.0[i] - online.0[i]).abs();
            let rhs = (1.0 - tau) * (before.0[i] - online.0[i]).abs();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn sgd_moves_against_gradient() {
        let mut p = Flat(vec![1.0, 1.0]);
        sgd_step(&mut p, &Flat(vec![10.0, -10.0]), 0.1).unwrap();
        assert_eq!(p.0, vec![0.0, 2.0]);
        assert!(sgd_step(&mut p, &Flat(vec![1.0]), 0.1).is_err());
    }

    #[test]
    fn batchnorm_examples() {
        assert_eq!(static_batchnorm(&[3.0; 5], 1e-5), vec![0.0; 5]);
        let out = static_batchnorm(&[1.0, 2.0, 3.0], 1e-5);
        let expected = 1.0 / (2.0f64 / 3.0 + 1e-5).sqrt();
        assert!((out[0] + expected).abs() < 1e-12);
        assert_eq!(out[1], 0.0);
        assert!((out[2] - expected).abs() < 1e-12);
        assert!((out[2] - 1.2247356).abs() < 1e-6);
    }

    #[test]
    fn batchnorm_moments() {
        let x = [0.3, 7.0, -2.5, 1.25, 9.0, 0.0];
        let out = static_batchnorm(&x, 1e-5);
        let mean = out.iter().sum::<f64>() / 6.0;
        let var = out.iter().map(|v| v * v).sum::<f64>() / 6.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-5);
    }
}

//! Targets, losses and the plain optimizer pieces.

use crate::error::{Error, Result};

use super::config::LossKind;

/// Added inside the logarithm so a zero prediction costs `−ln ε` instead
/// of infinity.
pub const XENT_EPSILON: f64 = 1e-12;

/// Ten-class one-hot label zero-padded to `out_size`.
pub fn pad_onehot(label: usize, out_size: usize) -> Result<Vec<f64>> {
    if out_size < 10 {
        return Err(Error::InvalidConfig(format!(
            "padded one-hot needs at least 10 outputs, got {out_size}"
        )));
    }
    one_hot_target(label, 10, out_size)
}

/// One-hot over `classes` labels, zero-padded to `out_size`.
pub fn one_hot_target(label: usize, classes: usize, out_size: usize) -> Result<Vec<f64>> {
    if label >= classes {
        return Err(Error::OutOfRange {
            index: label,
            bound: classes,
        });
    }
    if out_size < classes {
        return Err(Error::InvalidConfig(format!(
            "{classes} classes do not fit in {out_size} outputs"
        )));
    }
    let mut t = vec![0.0; out_size];
    t[label] = 1.0;
    Ok(t)
}

fn check_lengths(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            what: "prediction vs target",
            expected: target.len(),
            found: pred.len(),
        });
    }
    Ok(())
}

/// `−Σ tₖ ln(pₖ + ε)`.
pub fn loss_xent(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_lengths(pred, target)?;
    Ok(-pred
        .iter()
        .zip(target)
        .map(|(p, t)| t * (p + XENT_EPSILON).ln())
        .sum::<f64>())
}

pub fn loss_mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_lengths(pred, target)?;
    if pred.is_empty() {
        return Ok(0.0);
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64)
}

impl LossKind {
    pub fn evaluate(self, pred: &[f64], target: &[f64]) -> Result<f64> {
        match self {
            LossKind::CategoricalCrossentropy => loss_xent(pred, target),
            LossKind::Mse => loss_mse(pred, target),
        }
    }
}

/// Central differences `(f(p + δeᵢ) − f(p − δeᵢ)) / 2δ` per coordinate.
pub fn finite_diff_grad<F>(mut f: F, params: &[f64], delta: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidConfig(format!("step must be positive, got {delta}")));
    }
    let mut probe = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        probe[i] = params[i] + delta;
        let up = f(&probe)?;
        probe[i] = params[i] - delta;
        let down = f(&probe)?;
        probe[i] = params[i];
        if !(up.is_finite() && down.is_finite()) {
            return Err(Error::NonFinite("finite-difference probe"));
        }
        grad.push((up - down) / (2.0 * delta));
    }
    Ok(grad)
}

/// `p − lr·g`.
pub fn sgd_step(params: &[f64], grads: &[f64], lr: f64) -> Result<Vec<f64>> {
    if params.len() != grads.len() {
        return Err(Error::LengthMismatch {
            what: "gradient",
            expected: params.len(),
            found: grads.len(),
        });
    }
    Ok(params.iter().zip(grads).map(|(p, g)| p - lr * g).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padded_targets() {
        let t = pad_onehot(3, 16).unwrap();
        assert_eq!(t.len(), 16);
        assert_eq!(t[3], 1.0);
        assert_eq!(t.iter().sum::<f64>(), 1.0);
        assert_eq!(pad_onehot(9, 32).unwrap()[9], 1.0);
        assert_eq!(pad_onehot(0, 10).unwrap(), {
            let mut e = vec![0.0; 10];
            e[0] = 1.0;
            e
        });
        assert!(pad_onehot(10, 16).is_err());
        assert!(pad_onehot(3, 8).is_err());
        assert_eq!(one_hot_target(1, 2, 4).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn xent_examples() {
        let e3 = pad_onehot(3, 16).unwrap();
        assert!((loss_xent(&e3, &e3).unwrap() + (1.0 + XENT_EPSILON).ln()).abs() < 1e-15);
        let uniform = vec![1.0 / 16.0; 16];
        assert!((loss_xent(&uniform, &e3).unwrap() - 16f64.ln()).abs() < 1e-10);
        let zero = vec![0.0; 16];
        let clamped = loss_xent(&zero, &e3).unwrap();
        assert!((clamped - 27.631021115928547).abs() < 1e-9);
        assert!(loss_xent(&zero[..4], &e3).is_err());
    }

    #[test]
    fn mse_examples() {
        let a = [0.1, 0.7, -0.3];
        let b = [0.4, 0.2, 0.0];
        assert_eq!(loss_mse(&a, &a).unwrap(), 0.0);
        let mut e0 = vec![0.0; 8];
        e0[0] = 1.0;
        assert_eq!(loss_mse(&[0.0; 8], &e0).unwrap(), 0.125);
        assert_eq!(loss_mse(&a, &b).unwrap(), loss_mse(&b, &a).unwrap());
    }

    #[test]
    fn fd_examples() {
        let g = finite_diff_grad(|p| Ok(p.iter().map(|x| x * x).sum()), &[1.0, 2.0], 1e-4).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] - 4.0).abs() < 1e-8);
        let g = finite_diff_grad(|_| Ok(3.0), &[1.0, 2.0, 3.0], 1e-4).unwrap();
        assert_eq!(g, vec![0.0; 3]);
        assert!(finite_diff_grad(|_| Ok(f64::NAN), &[1.0], 1e-4).is_err());
        assert!(finite_diff_grad(|_| Ok(0.0), &[1.0], 0.0).is_err());
    }

    #[test]
    fn sgd_examples() {
        assert_eq!(sgd_step(&[1.0, 1.0], &[1.0, -1.0], 0.0).unwrap(), vec![1.0, 1.0]);
        assert_eq!(sgd_step(&[1.0, 1.0], &[1.0, -1.0], 0.5).unwrap(), vec![0.5, 1.5]);
        let mut p = vec![3.0, -2.0];
        for _ in 0..200 {
            let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
            p = sgd_step(&p, &g, 0.3).unwrap();
        }
        assert!(p.iter().all(|x| x.abs() < 1e-12));
        assert!(sgd_step(&[1.0], &[1.0, 2.0], 0.1).is_err());
    }
}

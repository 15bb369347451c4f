//! Adam with bias correction, operating on the model's named parameter
//! arrays.

use crate::error::{Error, Result};
use crate::model::Parameters;

#[derive(Debug, Clone, Copy)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        Self {
            learning_rate: 3e-6,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates, aligned entry-by-entry with the
/// parameters they update.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(params: &Parameters) -> Self {
        Self {
            step: 0,
            m: params.entries.iter().map(|e| vec![0.0; e.data.len()]).collect(),
            v: params.entries.iter().map(|e| vec![0.0; e.data.len()]).collect(),
        }
    }
}

/// One update: m <- b1*m + (1-b1)*g; v <- b2*v + (1-b2)*g^2;
/// p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps).
pub fn adam_step(
    params: &mut Parameters,
    grads: &Parameters,
    state: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<()> {
    if params.entries.len() != grads.entries.len() || params.entries.len() != state.m.len() {
        return Err(Error::ShapeMismatch {
            context: "adam_step".to_string(),
            left: format!("{} parameter arrays", params.entries.len()),
            right: format!("{} gradient arrays", grads.entries.len()),
        });
    }
    for (p, g) in params.entries.iter().zip(&grads.entries) {
        if p.shape != g.shape {
            return Err(Error::ShapeMismatch {
                context: format!("adam_step parameter {}", p.name),
                left: format!("{:?}", p.shape),
                right: format!("{:?}", g.shape),
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - hyper.beta1.powi(t);
    let bc2 = 1.0 - hyper.beta2.powi(t);
    for ((entry, grad), (m, v)) in params
        .entries
        .iter_mut()
        .zip(&grads.entries)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        for i in 0..entry.data.len() {
            let g = grad.data[i];
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            entry.data[i] -= hyper.learning_rate * m_hat / (v_hat.sqrt() + hyper.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParamEntry;

    fn scalar_params(value: f64) -> Parameters {
        Parameters {
            entries: vec![ParamEntry {
                name: "p".into(),
                shape: vec![1],
                data: vec![value],
            }],
        }
    }

    #[test]
    fn first_step_closed_form() {
        let mut params = scalar_params(0.0);
        let grads = scalar_params(1.0);
        let mut state = AdamState::new(&params);
        let hyper = AdamHyper {
            learning_rate: 0.1,
            ..AdamHyper::default()
        };
        adam_step(&mut params, &grads, &mut state, &hyper).unwrap();
        // bias-corrected m_hat = v_hat = 1 at t = 1
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((params.entries[0].data[0] - expected).abs() < 1e-15);
        assert!((params.entries[0].data[0] + 0.1).abs() < 1e-8);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn zero_learning_rate_freezes_params_but_advances_state() {
        let mut params = scalar_params(0.7);
        let grads = scalar_params(2.0);
        let mut state = AdamState::new(&params);
        let hyper = AdamHyper {
            learning_rate: 0.0,
            ..AdamHyper::default()
        };
        adam_step(&mut params, &grads, &mut state, &hyper).unwrap();
        assert_eq!(params.entries[0].data[0], 0.7);
        assert_eq!(state.step, 1);
        assert!(state.m[0][0] != 0.0 && state.v[0][0] != 0.0);
    }

    #[test]
    fn zero_gradients_never_move_params() {
        let mut params = scalar_params(0.3);
        let grads = scalar_params(0.0);
        let mut state = AdamState::new(&params);
        let hyper = AdamHyper {
            learning_rate: 0.5,
            ..AdamHyper::default()
        };
        for _ in 0..10 {
            adam_step(&mut params, &grads, &mut state, &hyper).unwrap();
            assert_eq!(params.entries[0].data[0], 0.3);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut params = scalar_params(0.0);
        let grads = Parameters {
            entries: vec![ParamEntry {
                name: "p".into(),
                shape: vec![2],
                data: vec![0.0, 0.0],
            }],
        };
        let mut state = AdamState::new(&params);
        assert!(adam_step(&mut params, &grads, &mut state, &AdamHyper::default()).is_err());
    }
}

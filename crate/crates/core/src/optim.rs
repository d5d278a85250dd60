//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GradientSet, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ModelParams,
    pub v: ModelParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        AdamState {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }
}

/// One Adam update at step `state.t + 1`.
///
/// Gradients are checked before anything is written, so a non-finite
/// gradient leaves parameters and moments untouched.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &GradientSet,
    state: &mut AdamState,
    hyper: &AdamConfig,
) -> Result<()> {
    for (name, g, _) in grads.groups() {
        if let Some(i) = g.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite gradient in {name}[{i}]")));
        }
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - hyper.beta1.powi(t);
    let c2 = 1.0 - hyper.beta2.powi(t);

    let gs = grads.groups();
    let ps = params.groups_mut();
    let ms = state.m.groups_mut();
    let vs = state.v.groups_mut();
    if gs.len() != ps.len() {
        return Err(Error::Shape("gradient and parameter groups differ".into()));
    }
    for (((p, m), v), g) in ps.into_iter().zip(ms).zip(vs).zip(gs) {
        if p.1.len() != g.1.len() {
            return Err(Error::Shape(format!("gradient shape mismatch in {}", p.0)));
        }
        for i in 0..p.1.len() {
            let gi = g.1[i];
            m.1[i] = hyper.beta1 * m.1[i] + (1.0 - hyper.beta1) * gi;
            v.1[i] = hyper.beta2 * v.1[i] + (1.0 - hyper.beta2) * gi * gi;
            let m_hat = m.1[i] / c1;
            let v_hat = v.1[i] / c2;
            p.1[i] -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.eps);
        }
    }
    Ok(())
}

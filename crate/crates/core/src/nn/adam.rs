use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{dim_err, Error, Result};
use crate::math;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            learning_rate: 1.0e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1.0e-8,
        }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.epsilon > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam hyperparameters {:?}", self)))
        }
    }
}

/// First/second moment estimates, one tensor per parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub first_moment: Vec<Tensor>,
    pub second_moment: Vec<Tensor>,
    pub step_count: u64,
}

impl AdamState {
    pub fn for_blocks(blocks: &[&Tensor]) -> Self {
        AdamState {
            first_moment: blocks.iter().map(|b| Tensor::zeros(b.shape())).collect(),
            second_moment: blocks.iter().map(|b| Tensor::zeros(b.shape())).collect(),
            step_count: 0,
        }
    }
}

/// One bias-corrected Adam update over matching parameter and gradient blocks.
pub fn adam_step(
    params: Vec<&mut Tensor>,
    grads: Vec<&Tensor>,
    state: &mut AdamState,
    hyper: &AdamHyper,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.first_moment.len() {
        return Err(dim_err!(
            "adam: {} parameter blocks, {} gradients, {} moments",
            params.len(),
            grads.len(),
            state.first_moment.len()
        ));
    }
    for ((p, g), (m, v)) in params
        .iter()
        .zip(&grads)
        .zip(state.first_moment.iter().zip(&state.second_moment))
    {
        p.same_shape(g)?;
        p.same_shape(m)?;
        p.same_shape(v)?;
    }
    state.step_count += 1;
    let t = state.step_count as f64;
    let c1 = 1.0 - math::powf(hyper.beta1, t);
    let c2 = 1.0 - math::powf(hyper.beta2, t);
    for ((p, g), (m, v)) in params
        .into_iter()
        .zip(grads)
        .zip(state.first_moment.iter_mut().zip(state.second_moment.iter_mut()))
    {
        for (((pv, &gv), mv), vv) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            *mv = hyper.beta1 * *mv + (1.0 - hyper.beta1) * gv;
            *vv = hyper.beta2 * *vv + (1.0 - hyper.beta2) * gv * gv;
            let m_hat = *mv / c1;
            let v_hat = *vv / c2;
            *pv -= hyper.learning_rate * m_hat / (math::sqrt(v_hat) + hyper.epsilon);
        }
    }
    Ok(())
}

/// Optimizer bound to one parameter container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub hyper: AdamHyper,
    pub state: AdamState,
}

impl Adam {
    pub fn new<P: Parameters>(params: &P, hyper: AdamHyper) -> Self {
        Adam {
            hyper,
            state: AdamState::for_blocks(&params.blocks()),
        }
    }

    pub fn step<P: Parameters>(&mut self, params: &mut P, grads: &P) -> Result<()> {
        adam_step(params.blocks_mut(), grads.blocks(), &mut self.state, &self.hyper)
    }
}

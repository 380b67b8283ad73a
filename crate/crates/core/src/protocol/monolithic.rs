use alloc::vec::Vec;

use crate::error::Result;
use crate::models::{SampleBatch, SplitModel};
use crate::nn::{Adam, AdamHyper, Parameters};
use crate::protocol::session::BsEndpoint;

/// The same network trained in one place, with no message exchange.
///
/// Given the same model, batch and a lossless wire, one step here and one
/// [`SplitSession`](super::SplitSession) step produce identical parameters.
#[derive(Debug, Clone)]
pub struct MonolithicTrainer {
    pub model: SplitModel,
    ue_opt: Adam,
    bs_opt: Adam,
}

impl MonolithicTrainer {
    pub fn new(model: SplitModel, hyper: AdamHyper) -> Self {
        let ue_opt = Adam::new(&model.ue, hyper);
        let bs_opt = Adam::new(&model.bs, hyper);
        MonolithicTrainer { model, ue_opt, bs_opt }
    }

    pub fn step(&mut self, batch: &SampleBatch) -> Result<f64> {
        let cfg = &self.model.config;
        let bs = BsEndpoint::new(self.model.bs.clone(), cfg, self.bs_opt.hyper);
        if !cfg.variant.uses_images() {
            let pass = bs.forward_backward(None, batch)?;
            self.bs_opt.step(&mut self.model.bs, &pass.grads)?;
            return Ok(pass.loss);
        }
        let mut feats = Vec::with_capacity(batch.len());
        let mut traces = Vec::with_capacity(batch.len());
        for i in 0..batch.len() {
            let (f, tr) = self.model.ue.forward(&batch.sample_frames(i))?;
            feats.push(f);
            traces.push(tr);
        }
        let pass = bs.forward_backward(Some(&feats), batch)?;
        let mut ue_grads = self.model.ue.clone();
        ue_grads.zero();
        for (tr, g) in traces.iter().zip(&pass.cut_grads) {
            ue_grads.accumulate(&self.model.ue.backward(tr, g)?)?;
        }
        self.bs_opt.step(&mut self.model.bs, &pass.grads)?;
        self.ue_opt.step(&mut self.model.ue, &ue_grads)?;
        Ok(pass.loss)
    }
}

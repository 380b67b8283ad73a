use alloc::format;
use alloc::vec::Vec;

use crate::channel::{shannon_rate, transmit_time, units, ChannelParams};
use crate::error::{Error, Result};
use crate::models::{
    cut_gradient, variant_input, BsSegment, ModelConfig, SampleBatch, SplitModel, Standardizer,
    UeSegment, UeTrace, Variant,
};
use crate::nn::{mse_grad, mse_loss, Adam, AdamHyper, Parameters};
use crate::tensor::Tensor;

use super::{
    decode_bp, decode_fp, encode_bp, encode_fp, inference_load, training_load, Accounting, BpMessage,
    Direction, FpMessage, Link, WireDtype,
};

/// Timing of one step inside its interval, seconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepTiming {
    pub t_fp: f64,
    pub t_bp: f64,
    pub t_comp: f64,
    pub t_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// Mini-batch MSE before the update, standardized units.
    pub loss: f64,
    pub timing: StepTiming,
    pub fp_bytes: usize,
    pub bp_bytes: usize,
}

/// The UE side: lower segment, its optimizer, and traces awaiting a BP message.
#[derive(Debug, Clone)]
pub struct UeEndpoint {
    pub segment: UeSegment,
    pub optimizer: Adam,
    pending: Option<Vec<UeTrace>>,
}

impl UeEndpoint {
    pub fn new(segment: UeSegment, hyper: AdamHyper) -> Self {
        let optimizer = Adam::new(&segment, hyper);
        UeEndpoint { segment, optimizer, pending: None }
    }

    /// Runs the lower segment over every sample and keeps the traces for
    /// the matching [`backward`](Self::backward).
    pub fn forward(&mut self, batch: &SampleBatch) -> Result<FpMessage> {
        let mut outs = Vec::with_capacity(batch.len());
        let mut traces = Vec::with_capacity(batch.len());
        for i in 0..batch.len() {
            let (out, tr) = self.segment.forward(&batch.sample_frames(i))?;
            out.check_finite("UE output")?;
            outs.push(out);
            traces.push(tr);
        }
        self.pending = Some(traces);
        FpMessage::from_samples(&outs)
    }

    /// Forward pass without keeping traces.
    pub fn infer(&self, frames: &Tensor) -> Result<FpMessage> {
        let (out, _) = self.segment.forward(frames)?;
        FpMessage::from_samples(&[out])
    }

    pub fn has_pending(&self) -> bool {
        self.pending.is_some()
    }

    pub fn abort(&mut self) {
        self.pending = None;
    }

    /// Completes backpropagation from the cut gradients in `bp`.
    pub fn backward(&mut self, bp: &BpMessage) -> Result<UeSegment> {
        let traces = self
            .pending
            .take()
            .ok_or_else(|| Error::Protocol("BP message arrived before any forward pass".into()))?;
        let grads_in = bp.samples()?;
        if grads_in.len() != traces.len() {
            return Err(Error::Protocol(format!(
                "BP carries {} samples, {} forward traces pending",
                grads_in.len(),
                traces.len()
            )));
        }
        let mut grads = self.segment.clone();
        grads.zero();
        for (tr, g) in traces.iter().zip(&grads_in) {
            grads.accumulate(&self.segment.backward(tr, g)?)?;
        }
        Ok(grads)
    }
}

/// The BS side: upper segment and its optimizer.
#[derive(Debug, Clone)]
pub struct BsEndpoint {
    pub segment: BsSegment,
    pub optimizer: Adam,
    pub variant: Variant,
    pub grid: (usize, usize),
}

/// Result of the BS forward/backward over one batch.
#[derive(Debug, Clone)]
pub struct BsPass {
    pub loss: f64,
    pub grads: BsSegment,
    /// Cut gradients per sample; empty for `Rf`.
    pub cut_grads: Vec<Tensor>,
}

impl BsEndpoint {
    pub fn new(segment: BsSegment, config: &ModelConfig, hyper: AdamHyper) -> Self {
        let optimizer = Adam::new(&segment, hyper);
        BsEndpoint {
            segment,
            optimizer,
            variant: config.variant,
            grid: config.feature_size(),
        }
    }

    fn input_for(&self, features: Option<&Tensor>, powers: &[f64]) -> Result<Tensor> {
        variant_input(self.variant, features, powers, self.grid)
    }

    /// Standardized prediction for one sample.
    pub fn predict(&self, features: Option<&Tensor>, powers_std: &[f64]) -> Result<f64> {
        let x = self.input_for(features, powers_std)?;
        Ok(self.segment.forward(&x)?.0)
    }

    /// Loss, BS parameter gradients and cut gradients for a batch.
    pub fn forward_backward(&self, features: Option<&[Tensor]>, batch: &SampleBatch) -> Result<BsPass> {
        let b = batch.len();
        let mut preds = Vec::with_capacity(b);
        let mut traces = Vec::with_capacity(b);
        for i in 0..b {
            let f = features.map(|f| &f[i]);
            let x = self.input_for(f, batch.sample_powers(i))?;
            let (y, tr) = self.segment.forward(&x)?;
            preds.push(y);
            traces.push(tr);
        }
        let pred = Tensor::new(&[b], preds)?;
        pred.check_finite("BS prediction")?;
        let loss = mse_loss(&pred, &batch.targets)?;
        let d_pred = mse_grad(&pred, &batch.targets)?;
        let mut grads = self.segment.clone();
        grads.zero();
        let mut cut_grads = Vec::new();
        for (tr, &g) in traces.iter().zip(d_pred.data()) {
            let (g_params, d_input) = self.segment.backward(tr, g)?;
            grads.accumulate(&g_params)?;
            if self.variant.uses_images() {
                cut_grads.push(cut_gradient(self.variant, &d_input)?);
            }
        }
        Ok(BsPass { loss, grads, cut_grads })
    }
}

/// Split training and inference across a [`Link`].
#[derive(Debug, Clone)]
pub struct SplitSession {
    pub config: ModelConfig,
    pub ue: UeEndpoint,
    pub bs: BsEndpoint,
    pub wire: WireDtype,
    pub accounting: Accounting,
    pub channel: ChannelParams,
    pub standardizer: Standardizer,
}

impl SplitSession {
    pub fn new(
        model: SplitModel,
        hyper: AdamHyper,
        wire: WireDtype,
        accounting: Accounting,
        channel: ChannelParams,
        standardizer: Standardizer,
    ) -> Result<Self> {
        model.config.validate()?;
        hyper.validate()?;
        channel.validate()?;
        let bs = BsEndpoint::new(model.bs, &model.config, hyper);
        Ok(SplitSession {
            ue: UeEndpoint::new(model.ue, hyper),
            bs,
            config: model.config,
            wire,
            accounting,
            channel,
            standardizer,
        })
    }

    pub fn model(&self) -> SplitModel {
        SplitModel {
            config: self.config.clone(),
            ue: self.ue.segment.clone(),
            bs: self.bs.segment.clone(),
        }
    }

    fn timing(&self, fp_bits: u64, bp_bits: u64, t_comp: f64, power_dbm: f64) -> Result<StepTiming> {
        let rate = shannon_rate(units::dbm_to_watts(power_dbm), &self.channel)?;
        let t_fp = transmit_time(fp_bits, rate);
        let t_bp = transmit_time(bp_bits, rate);
        Ok(StepTiming { t_fp, t_bp, t_comp, t_step: t_fp + t_bp + t_comp })
    }

    /// One split SGD step. `interval_power_dbm` is the received power of
    /// the interval the step runs in and only affects the reported timing.
    ///
    /// Parameters change only after both messages have been decoded and
    /// every gradient computed; any failure leaves both segments untouched.
    pub fn run_training_step(
        &mut self,
        batch: &SampleBatch,
        link: &mut dyn Link,
        interval_power_dbm: f64,
    ) -> Result<StepReport> {
        batch.validate(self.config.seq_len, (self.config.frame_height, self.config.frame_width))?;
        let result = self.step_inner(batch, link, interval_power_dbm);
        if result.is_err() {
            self.ue.abort();
        }
        result
    }

    fn step_inner(&mut self, batch: &SampleBatch, link: &mut dyn Link, power_dbm: f64) -> Result<StepReport> {
        let load = training_load(&self.config, &self.channel, self.accounting, batch.len());
        let timing = self.timing(load.fp_bits, load.bp_bits, load.t_comp_s, power_dbm)?;

        if !self.config.variant.uses_images() {
            let pass = self.bs.forward_backward(None, batch)?;
            self.bs.optimizer.step(&mut self.bs.segment, &pass.grads)?;
            return Ok(StepReport { loss: pass.loss, timing, fp_bytes: 0, bp_bytes: 0 });
        }

        let fp = self.ue.forward(batch)?;
        let fp_bytes = encode_fp(&fp, self.wire)?;
        let fp_len = fp_bytes.len();
        let received = link.carry(Direction::Uplink, fp_bytes);
        let (fp_rx, _) = decode_fp(&received).map_err(|e| Error::Protocol(format!("FP: {e}")))?;
        if fp_rx.shape != fp.shape {
            return Err(Error::Protocol(format!("FP shape changed in transit: {:?}", fp_rx.shape)));
        }

        let features = fp_rx.samples()?;
        let pass = self.bs.forward_backward(Some(&features), batch)?;
        let bp = BpMessage::from_samples(&pass.cut_grads, load.bp_bits)?;
        let bp_bytes = encode_bp(&bp, self.wire)?;
        let bp_len = bp_bytes.len();
        let received = link.carry(Direction::Downlink, bp_bytes);
        let (bp_rx, _) = decode_bp(&received).map_err(|e| Error::Protocol(format!("BP: {e}")))?;
        if bp_rx.shape != bp.shape {
            return Err(Error::Protocol(format!("BP shape changed in transit: {:?}", bp_rx.shape)));
        }
        let ue_grads = self.ue.backward(&bp_rx)?;

        self.bs.optimizer.step(&mut self.bs.segment, &pass.grads)?;
        self.ue.optimizer.step(&mut self.ue.segment, &ue_grads)?;
        Ok(StepReport { loss: pass.loss, timing, fp_bytes: fp_len, bp_bytes: bp_len })
    }

    /// Predicted power in dBm for one sample (`frames`: `L×1×N_H×N_W`,
    /// powers standardized) plus the FP latency of the single upload.
    pub fn predict(
        &self,
        frames: &Tensor,
        powers_std: &[f64],
        link: &mut dyn Link,
        interval_power_dbm: f64,
    ) -> Result<(f64, f64)> {
        let z = self.predict_std(frames, powers_std, link)?;
        let load = inference_load(&self.config, &self.channel);
        let timing = self.timing(load.fp_bits, 0, 0.0, interval_power_dbm)?;
        Ok((self.standardizer.inverse(z), timing.t_fp))
    }

    /// Standardized prediction through the link.
    pub fn predict_std(&self, frames: &Tensor, powers_std: &[f64], link: &mut dyn Link) -> Result<f64> {
        if !self.config.variant.uses_images() {
            return self.bs.predict(None, powers_std);
        }
        let fp = self.ue.infer(frames)?;
        let bytes = link.carry(Direction::Uplink, encode_fp(&fp, self.wire)?);
        let (fp_rx, _) = decode_fp(&bytes).map_err(|e| Error::Protocol(format!("FP: {e}")))?;
        let features = fp_rx.samples()?;
        let first = features
            .first()
            .ok_or_else(|| Error::Protocol("empty FP message for inference".into()))?;
        self.bs.predict(Some(first), powers_std)
    }
}

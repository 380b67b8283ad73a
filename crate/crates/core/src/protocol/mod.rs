//! UE ↔ BS exchange: payload accounting, the FP/BP wire format, and the
//! split training / inference procedures built on them.

mod link;
mod monolithic;
mod payload;
mod session;
mod wire;

pub use link::{Direction, InProcessLink, Link};
pub use monolithic::MonolithicTrainer;
pub use payload::{
    bp_payload_bits, fp_payload_bits, inference_load, training_load, Accounting, BpAccounting,
};
pub use session::{BsEndpoint, BsPass, SplitSession, StepReport, StepTiming, UeEndpoint};
pub use wire::{
    decode_bp, decode_bp_unverified, decode_fp, decode_fp_unverified, encode_bp, encode_fp,
    BpMessage, CutShape, FpMessage, WireDtype, BP_MAGIC, FP_MAGIC, WIRE_VERSION,
};

//! Bit-level model of the mixed-precision AIMC datapath.
//!
//! A tile converts signed input codes to pulses (DAC), accumulates them
//! through a differential PCM crossbar, digitizes each bitline into a positive
//! and a negative counter (ADC) and rescales in its local digital unit
//! (LDPU). The shared digital unit (DPU) finishes with lookup tables and an
//! adder tree.

mod crossbar;
mod dpu;
mod ldpu;
mod lut;
mod network;
mod quant;

pub use crossbar::{
    crossbar_mvm_adc, crossbar_mvm_adc_at, program_weights, AdcReading, ProgrammedCrossbar,
    CROSSBAR_COLS, CROSSBAR_ROWS,
};
pub use dpu::{dpu_nqs_reduce, dpu_svdd_reduce};
pub use ldpu::{ldpu_apply, LdpuActivation};
pub use lut::{lut_build, lut_eval, Lut, LutExtension, LutFunction};
pub use network::{aimc_forward_nqs, aimc_forward_svdd, AimcMlp, AimcRbm, AnalogLayer};
pub use quant::{calibrate_scales, dac_quantize, QuantConfig, QuantPreset};

//! Multilayer perceptrons with reverse-mode gradients, Adam and soft target updates.

mod adam;
pub mod codec;
mod matrix;
mod mlp;

pub use adam::{AdamConfig, AdamState};
pub use matrix::Matrix;
pub use mlp::{
    BatchNorm, Dense, Gradients, HiddenActivation, Init, Mlp, MlpSpec, Mode, OutputActivation,
    Tape, BN_EPSILON, BN_MOMENTUM,
};

use crate::error::Result;

/// `target ← τ·online + (1−τ)·target` over every tensor.
pub fn soft_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    target.soft_update_from(online, tau)
}

//! Differentiable model pieces: a reverse-mode tape, the model itself and
//! its optimizer.

pub mod adam;
pub mod model;
pub mod ops;
pub mod tape;

pub use adam::{Adam, AdamConfig};
pub use model::{
    argmax_rows, Activation, Checkpoint, FusionBlock, FusionMode, HgmnModel, Linear, ModelConfig, ModelInputs,
    ResidualInput, SsmBlock, TokenOrder,
};
pub use tape::{Gradients, SsmVars, Tape, Var};

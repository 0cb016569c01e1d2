//! The graph-convolutional LSTM classifier.
//!
//! [`params`] holds the weight containers, [`cell`] the single-step
//! forward/backward math, [`model`] the two-layer network with readout
//! and dropout, [`loss`] binary cross-entropy, [`adam`] the optimizer,
//! [`train`] the deterministic training loop, and [`gradcheck`] a
//! finite-difference validator for the hand-written gradients.

pub mod adam;
pub mod cell;
pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod params;
pub mod train;

pub use adam::AdamState;
pub use cell::{gconvlstm_step, gconvlstm_step_cached, CellState};
pub use gradcheck::{check_gradients, GradCheckReport};
pub use loss::{bce_loss, bce_loss_weighted};
pub use model::{ForwardCache, GConvLstmModel, Phase};
pub use params::{DenseHead, GConvLSTMParams, GateParams};
pub use train::{accuracy_on, predict_all, synthetic_separable, train};

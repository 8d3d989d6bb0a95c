//! Coordinate networks: hash-grid encoding, MLP, the image and pose heads,
//! the motion renderer and a finite-difference gradient checker.

mod deartifact;
mod gradcheck;
mod hashgrid;
mod mlp;
mod movement;
mod params;
mod pipeline;
mod render;

pub use deartifact::{deartifact_forward, pixel_coord, DeartifactConfig, DeartifactNet, DeartifactTape, INITIAL_BIAS, OUTPUT_MAX, OUTPUT_MIN};
pub use gradcheck::{gradcheck, gradcheck_against, GradcheckOptions, GradcheckReport};
pub use hashgrid::{hash_encode, HashEncoder, HashGridConfig, TABLE_INIT_BOUND};
pub use mlp::{mlp_forward, Activation, Mlp, MlpConfig, MlpScratch};
pub use movement::{movement_forward, segment_coord, MovementConfig, MovementNet, MovementTape};
pub use params::{GradVector, InrParams, ParamBlock, ParamLayout};
pub use pipeline::{InrModel, Pipeline, PipelineOutput};
pub use render::{render_backward, render_motion_kspace, RenderTape};

//! Learning the model parameters `w`.

pub mod bridge;
pub mod cd;
pub mod dmh;
pub mod exchange;
pub mod fit;
pub mod prior;
pub mod proposal;

pub use bridge::{beta_ladder, bridge_ladder, bridge_log_density, BridgeConfig, BridgeRun};
pub use cd::{cd_gradient, cd_gradient_with, CdConfig, CdGradient, EnergyGradient};
pub use dmh::{exchange_log_alpha, DmhOutcome, DmhSampler};
pub use exchange::{sample_fictitious, Design, FullAugmentation, ModelAt};
pub use fit::{block_gibbs_fit, FitConfig, FitOutput, ParamSample};
pub use prior::PriorSpec;
pub use proposal::{block_name, ProposalSpec, UpdateScheme};

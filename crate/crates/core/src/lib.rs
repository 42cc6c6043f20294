//! Physics-informed training engine for small dense networks, with a tape
//! autodiff core, closed-form linear baselines, and the displacement/PDE
//! pipelines behind the `lattice-pinn` CLI.

pub mod autodiff;
pub mod error;
pub mod lattice;
pub mod metrics;
pub mod net;
pub mod optimize;
pub mod pde;
pub mod pinn;
pub mod report;
pub mod runs;

pub use error::{Error, Result};
pub use net::{Activation, DenseNetwork, NetworkSpec};
pub use pinn::LossBreakdown;

//! Phonon-induced loss of contrast in a closed-loop Stern-Gerlach
//! interferometer with a solid-state test mass.
//!
//! The crate models the object either as a free-ended 1D chain of N sites
//! (exact mode sum), as a small elastic sphere (single dominant dipole
//! mode) or as a macroscopic block with a dense continuum of acoustic
//! modes. A molecular-dynamics integrator of the chain serves as an
//! independent check of the analytic mode sum.

pub mod chain;
pub mod config;
pub mod contrast;
pub mod error;
pub mod numerics;
pub mod oracle;
pub mod protocols;
pub mod scenario;
pub mod sphere;
pub mod sweep;
pub mod units;

pub use chain::{ChainSpec, ModeTable, SpinPlacement, SpinSite};
pub use config::Config;
pub use contrast::{ContrastReport, Regime, ThermalModel};
pub use error::{Error, Result};
pub use protocols::{Protocol, ProtocolKind, SpectrumPath};
pub use scenario::Scenario;
pub use sphere::SphereSpec;
pub use sweep::{run_sweep, SweepResult, SweepSpec};
pub use units::{MaterialSpec, ThermalState};

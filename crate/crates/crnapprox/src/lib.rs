//! Mass-action chemical reaction networks with exact stochastic simulation,
//! deterministic and diffusion approximations, and coupled jump/diffusion
//! trajectories driven by shared noise.
//!
//! The crate is organized around a few small pieces:
//!
//! - [`net`]: the [`ReactionNetwork`](net::ReactionNetwork) model (species,
//!   reactions, rate conventions), network analysis (complexes, linkage
//!   classes, deficiency), and mass-action rate evaluation.
//! - [`ssa`]: the Gillespie direct method on the scaled count process.
//! - [`continuum`]: the fluid (ODE) limit via Runge-Kutta and the diffusion
//!   approximation via Euler-Maruyama.
//! - [`kmt`]: the quantile-coupling construction turning standard normal
//!   increments into Poisson increments, and the paired noise paths built
//!   from them.
//! - [`coupled`]: jump and diffusion trajectories driven by the same paired
//!   noise through per-channel random time changes.
//!
//! # Loading and analyzing a model
//!
//! ```
//! use crnapprox::net::ReactionNetwork;
//!
//! let json = r#"{
//!     "name": "binding",
//!     "species": ["A", "B", "C"],
//!     "reactions": [
//!         {"reactants": {"A": 1, "B": 1}, "products": {"C": 1}, "rate_constant": 2.0},
//!         {"reactants": {"C": 1}, "products": {"A": 1, "B": 1}, "rate_constant": 1.0}
//!     ]
//! }"#;
//! let network = ReactionNetwork::from_json(json)?;
//! let report = network.deficiency();
//! assert_eq!(report.complexes_count, 2);
//! assert_eq!(report.linkage_classes, 1);
//! assert_eq!(report.deficiency, 0);
//! # Ok::<(), crnapprox::ModelError>(())
//! ```
//!
//! # Simulating
//!
//! The bundled example models live in [`models`]. All simulators take the
//! same [`SimConfig`](trajectory::SimConfig) and return a
//! [`Trajectory`](trajectory::Trajectory) in concentration units.
//!
//! ```
//! use crnapprox::models;
//! use crnapprox::trajectory::SimConfig;
//!
//! let network = models::metabolism(0);
//! let config = SimConfig::new(600.0, vec![1.0, 1.0], 1.0, 42);
//!
//! let jump = crnapprox::ssa::simulate_ssa(&network, &config)?;
//! let fluid = crnapprox::continuum::solve_ode(&network, &config)?;
//! let diffusion = crnapprox::continuum::simulate_em(&network, &config)?;
//!
//! // all three start at the same point and live on [0, T]
//! assert_eq!(jump.state(0), fluid.state(0));
//! assert_eq!(*diffusion.times.last().unwrap(), 1.0);
//! // the jump path stays within O(1/sqrt(V)) of the fluid limit here
//! assert!(jump.sup_distance(&fluid) < 0.5);
//! # Ok::<(), crnapprox::SimError>(())
//! ```
//!
//! # Coupling jump and diffusion paths
//!
//! ```
//! use crnapprox::coupled::simulate_coupled;
//! use crnapprox::models;
//! use crnapprox::trajectory::SimConfig;
//!
//! let network = models::metabolism(0);
//! let mut config = SimConfig::new(300.0, vec![1.0, 1.0], 0.3, 7);
//! config.em_step = 1e-2;
//! let run = simulate_coupled(&network, &config)?;
//! assert_eq!(run.ctmc_path.times, run.diffusion_path.times);
//! assert!(run.sup_distance < 0.5);
//! # Ok::<(), crnapprox::SimError>(())
//! ```

pub mod continuum;
pub mod coupled;
pub mod error;
pub mod kmt;
pub mod models;
pub mod net;
pub mod rng;
pub mod ssa;
pub mod stats;
pub mod trajectory;

pub use error::{ModelError, SimError};
pub use net::{RateConvention, Reaction, ReactionNetwork};
pub use trajectory::{BoundaryPolicy, Method, SimConfig, Trajectory};

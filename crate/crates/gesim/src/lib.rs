//! Two-phase sensor-subset selection over Gilbert-Elliott channels.
//!
//! A binary source block of M bits reaches N sensors through independent
//! correlated-fading channels quantized to Good/Bad states. In phase one
//! every sensor sends its run-length-compressed channel-state sequence to
//! the fusion centre, which picks the smallest subset of sensors whose Good
//! observations cover every bit; in phase two only that subset transmits.
//! The crate provides:
//!
//! - [`fading`]: Rayleigh fading traces (sum-of-sinusoids), quantization,
//!   and estimation of the induced (mu, epsilon) transition probabilities;
//! - [`gechannel`]: the Gilbert-Elliott channel itself (state generation,
//!   steady state, transmission through the state-dependent BSC);
//! - [`csicodec`]: the run-length CSI codec and its expected rate;
//! - [`selection`]: the fusion-centre minimum-cover selection;
//! - [`exactdist`]: the exact distribution of the selected subset size via
//!   inclusion-exclusion over the joint state chain;
//! - [`bounds`]: closed forms (single-sensor coverage, E[K] upper bound,
//!   monotonicity threshold N0, efficiency factor, distortion bound);
//! - [`harness`]: the end-to-end Monte-Carlo simulator and the conventional
//!   everyone-transmits baseline;
//! - [`cli`]: the `gesim` command-line front end.

pub mod bits;
pub mod bounds;
pub mod cli;
pub mod csicodec;
pub mod error;
pub mod exactdist;
pub mod fading;
pub mod gechannel;
pub mod harness;
mod rng;
pub mod selection;

pub use bits::BitVec;
pub use bounds::{eta, fk1_closed_form, q_function, EfficiencyReport};
pub use error::{Error, Result};
pub use exactdist::{ExactCaps, ExactDist, KDistribution};
pub use fading::{estimate_ge_params, generate_trace, quantize, FadingConfig, FadingTrace};
pub use gechannel::{generate_csi, transmit, ChannelParams, CsiMatrix};
pub use harness::{conventional_baseline, run_experiment, ExperimentConfig, ExperimentReport};
pub use selection::{covers, select_min_subset, SelectionResult, SensorSubset};

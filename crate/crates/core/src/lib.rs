//! Intuitionistic fuzzy labels for 3D segmentation volumes.
//!
//! Crisp label volumes are turned into membership, non-membership and
//! hesitation channels from local neighbourhood votes ([`fuzzy_label`]).
//! The fuzzy auxiliary loss and its analytic derivatives live in
//! [`losses`], the decaying weight and learnable `rho` parameters in
//! [`curriculum`], and the training loop with trajectory recording in
//! [`trainer`]. [`synth`] builds seeded benchmark volumes with boundary
//! noise, and [`volume`] reads and writes the FVOL container.
//!
//! ```
//! use ifl::synth::{generate, SynthSpec};
//! use ifl::fuzzy_label::fuzzify;
//!
//! let v = generate(&SynthSpec::default()).unwrap();
//! let fuzzy = fuzzify(&v.corrupted, 1, 0.5).unwrap();
//! assert_eq!(fuzzy.dims(), v.corrupted.dims());
//! ```

pub mod cli;
pub mod config;
pub mod curriculum;
pub mod error;
pub mod fuzzy_label;
pub mod gradcheck;
pub mod landscape;
pub mod losses;
pub mod synth;
pub mod trainer;
pub mod volume;

pub use error::{Error, Result};
pub use fuzzy_label::{compute_membership, fuzzify, FuzzyLabelVolume};
pub use losses::{total_loss, LossConfig, RhoPair};
pub use trainer::{train, TrainConfig, TrainData, TrainingTrajectory};
pub use volume::{read_volume, write_volume, Dims, LabelVolume, Volume};

//! Toy environments, behavior policies, offline datasets and their file format.

mod dataset;
mod env;
mod io;

pub use dataset::{
    discounted_return, generate_dataset, returns_to_go, OfflineDataset, PolicyMix, Provenance, Trajectory, Transition,
};
pub use env::{BehaviorPolicy, EnvSpec, DOUBLE_INTEGRATOR, POINT_MASS};
pub use io::{dataset_to_string, parse_dataset, read_dataset, write_dataset, DATASET_FORMAT_VERSION};

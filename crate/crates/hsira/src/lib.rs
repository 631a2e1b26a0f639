//! File formats, experiment runner and synthetic test problems for
//! [`hsira_core`].

pub mod config;
pub mod experiment;
pub mod mtx;
pub mod scalar;
pub mod synthetic;

pub use config::{Accuracy, ExperimentConfig};
pub use experiment::{run_experiment, CellResult, ExperimentError};
pub use mtx::{load_matrix_market, save_matrix_market};
pub use scalar::parse_complex;

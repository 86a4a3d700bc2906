//! Configuration, frame I/O, synthetic sequences and experiment runs.

pub mod config;
pub mod experiment;
pub mod io;
pub mod synth;

pub use config::{ExperimentConfig, FrameRange, InputFormat};
pub use experiment::{decision_overlay, format_report, run_experiment, write_synthetic, Report};
pub use io::load_sequence;
pub use synth::{generate_synthetic, SynthParams};

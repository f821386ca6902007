//! Reproducible Monte Carlo sweeps.
//!
//! Every trial draws from its own ChaCha substream keyed by
//! `(seed, point, trial, purpose)`, and trials are grouped into fixed-size
//! chunks whose tallies are merged in chunk order. Results therefore do not
//! depend on the number of worker threads.

mod config;
mod curve;
mod rng;
mod run;

pub use config::{ExperimentConfig, FixedChannel, SigmaSource, Sweep};
pub use curve::{read_csv, write_csv, BerCurve, Curve, CurveRow, OutageCurve, CSV_HEADER};
pub use rng::substream;
pub use run::{run_balance_sweep, run_ber_sweep, run_outage_sweep, run_training_sweep, Runner, CHUNK};

//! Controllers: the sampled i-PI law, its F-estimator, a PI baseline with
//! ITAE grid tuning, and the moving-average filter.

mod filter;
mod ipi;
mod pi;
pub mod tuning;

pub use filter::{ma_push, MovingAverage};
pub use ipi::{
    estimate_f, ipi_step, second_difference, History, IpiController, IpiGains, IpiState, SaturationLimits,
    UltraLocalParams, HISTORY_LEN,
};
pub use pi::{pi_step, PiController, PiGains};
pub use tuning::{tune_pi_itae, GainGrid, TuningResult, TuningSetup};

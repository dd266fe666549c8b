//! Experiment harness for the `photon-maxent` reconstruction: config files,
//! the end-to-end pipeline, the robustness sweep, figure data and the
//! oracle self-check.

pub mod cli;
pub mod config;
pub mod figures;
pub mod pipeline;
pub mod report;
pub mod selfcheck;
pub mod sweep;

/// Process exit statuses.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    /// Invalid config, I/O failure, or a failed self-check.
    pub const ERROR: i32 = 1;
    /// Bad command line (emitted by the argument parser).
    pub const USAGE: i32 = 2;
    /// Estimated moments admit no distribution.
    pub const UNPHYSICAL: i32 = 3;
    /// A solver stopped before reaching tolerance.
    pub const NOT_CONVERGED: i32 = 4;
}

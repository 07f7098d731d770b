//! Intersectional fairness auditing and fairness-constrained training of
//! interpretable classifiers by exact mixed-binary optimization.

pub mod auditor;
pub mod dataset;
pub mod exec;
pub mod metrics;
pub mod milp;
pub mod subgroups;
pub mod synth;
pub mod trainer;

pub use exec::Exec;

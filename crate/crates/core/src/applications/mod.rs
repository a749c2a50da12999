//! Concrete systems, costs, baselines and lower-bound instances.

pub mod baselines;
pub mod hospital;
pub mod lambert;
pub mod lower_bound;
pub mod replicator;
pub mod sir;

//! The regularizer catalog: each variant's propagation rule, its layer
//! objective, and a dense check that the rule solves the objective.

mod objective;
mod operator;
mod spec;
mod verify;

pub use objective::{objective_gradient, regularizer_objective, DENSE_ORACLE_LIMIT};
pub use operator::{
    build_layer_propagation, build_propagation, build_propagation_with, BuildOptions, Descriptor, PropagationOperator,
};
pub use spec::{ProjectiveSet, RegularizerSpec, Variant, DEFAULT_K_ORDER};
pub use verify::{random_instance, verify_random, verify_stationarity, StationarityReport, VerifyOptions};

//! Ordered counterfactual explanations for additive classifiers.
//!
//! Given a classifier, an instance with an undesired prediction, finite
//! per-feature perturbation candidates and an interaction matrix between
//! features, find a perturbation vector together with the order in which
//! to apply it that minimises distance cost plus `gamma` times the ordering
//! cost. The search is a mixed-integer program solved by the bundled
//! branch-and-bound engine in [`milp`].

pub mod baselines;
pub mod classifiers;
pub mod cost_model;
pub mod demo;
pub mod error;
pub mod feature_space;
pub mod interaction;
pub mod milp;
pub mod ordce;
pub mod partial_order;
pub mod synth;

pub use baselines::{brute_force, greedy, greedy_order, GreedyResult, SearchBudget};
pub use classifiers::{load_model, AdditiveClassifier, DecisionTree, ReluLayer, TreeNode};
pub use cost_model::{
    actual_perturbations, default_scaling, mad_cost, ordering_cost, tlps_cost, total_cost, CostBreakdown,
    CostKind, CostTable, DistanceCost, OrderedAction, ScalingFactors,
};
pub use error::{Error, Result};
pub use feature_space::{
    build_action_set, load_dataset, support, ActionSet, Actionability, Dataset, DatasetStats, FeatureKind,
    FeatureSpace, FeatureSpec,
};
pub use interaction::{compute_interaction_matrix, load_interaction, validate_dag, InteractionMatrix};
pub use milp::{MilpModel, SolveResult, SolveStatus, SolverParams};
pub use ordce::{build_milo, compute_bounds, extract, sweep_gamma, Extraction, OrdceProblem, ResultDocument};
pub use partial_order::{linear_extensions, reduce_to_partial_order, PartialOrderDag};

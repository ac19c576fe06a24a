//! Differentiable SAT solving with Gödel semantics over logits.
//!
//! Propositions carry real logits; negation, conjunction and disjunction are `-x`, `min`
//! and `max`. The sign of every node's value is then the classical truth value of that
//! node under the sign assignment, and the gradient of the formula value flows down a
//! single path to one variable. Adding fresh noise to the logits at every step turns
//! gradient ascent into a stochastic local search (the "Gödel Trick").
//!
//! The crate is organised as:
//!
//! * [`formula`]: formula arena, CNF, DIMACS and s-expression parsing
//! * [`semantics`]: Boolean, Gödel, Product and Łukasiewicz evaluation
//! * [`gradient`]: active paths, sparse gradients and baseline gradients
//! * [`noise`]: perturbation models and their `theta` maps
//! * [`solver`]: the batched search loop
//! * [`categorical`]: one-hot sampling by shifting
//! * [`oracle`]: brute-force ground truth
//! * [`bench`]: directory benchmarks and S/B metrics

pub mod bench;
pub mod categorical;
pub mod formula;
pub mod generate;
pub mod gradient;
pub mod noise;
pub mod oracle;
pub mod semantics;
pub mod sign;
pub mod solver;
pub mod verify;

pub use bench::{run_benchmark, BenchReport, InstanceFilter};
pub use categorical::{categorical_gt_sample, shift, CategoricalLogits};
pub use formula::{parse_dimacs, CnfFormula, Expr, Formula, Literal, NodeId};
pub use gradient::{ActivePath, DenseGrad, Path, SparseGrad};
pub use noise::{NoiseKind, NoiseModel};
pub use oracle::{brute_force_sat, prob_logic_exact, ExactProbResult};
pub use semantics::{BoolAssignment, LogitVector};
pub use sign::{sign, Sign};
pub use solver::{solve, Semantics, SolveConfig, SolveReport};

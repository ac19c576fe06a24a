//! Randomised checks of the structural properties of Gödel semantics.
//!
//! Each suite draws its cases from a seeded ChaCha8 stream and reports how many passed,
//! so the same numbers can be printed by the command line tool and asserted by tests.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::categorical::{categorical_gt_sample_with_noise, perturbed_argmax, shift_into, softmax, top_two, CategoricalLogits};
use crate::formula::{and, cnf_to_formula, not, or, var, CnfFormula, Formula, Literal, Node};
use crate::gradient::Path;
use crate::generate::{random_cnf, random_formula};
use crate::gradient::{
    backward_cnf_godel, backward_godel, candidate_path_necessary, check_implicit_product_law,
    construct_representation, RepresentationConstants, RepresentationError,
};
use crate::noise::NoiseModel;
use crate::oracle::{check_cnf, mc_implicit_prob, prob_logic_exact};
use crate::semantics::{
    eval_bool_nodes, eval_cnf_godel, eval_godel, godel_value, implicit_interpretation, BoolAssignment,
    LogitVector,
};
use crate::sign::Sign;
use crate::solver::{sample_rng, step_baseline, step_gt, SampleState, Semantics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub passed: usize,
    /// First failing case, if any.
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn new(name: &str) -> SuiteReport {
        SuiteReport { name: name.to_string(), cases: 0, passed: 0, first_failure: None }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if ok {
            self.passed += 1;
        } else if self.first_failure.is_none() {
            self.first_failure = Some(describe());
        }
    }

    pub fn pass_rate(&self) -> f64 {
        if self.cases == 0 {
            0.0
        } else {
            self.passed as f64 / self.cases as f64
        }
    }

    pub fn all_passed(&self) -> bool {
        self.cases > 0 && self.passed == self.cases
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}/{} passed", self.name, self.passed, self.cases)?;
        if let Some(fail) = &self.first_failure {
            write!(f, " (first failure: {fail})")?;
        }
        Ok(())
    }
}

fn nonzero_logits<R: Rng>(rng: &mut R, n: usize, range: f64) -> Vec<f64> {
    (0..n)
        .map(|_| loop {
            let x: f64 = rng.random_range(-range..range);
            if x != 0.0 {
                break x;
            }
        })
        .collect()
}

/// Per-node signs of the Gödel evaluation agree with classical evaluation of the sign
/// assignment.
pub fn homomorphism_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("sign homomorphism");
    for _ in 0..cases {
        let n = rng.random_range(1..=12);
        let f = random_formula(&mut rng, n, 8);
        let logits = LogitVector::new(nonzero_logits(&mut rng, n, 5.0)).expect("finite");
        let implicit = implicit_interpretation(&f, &logits).expect("sizes match");
        let classical = eval_bool_nodes(&f, &logits.signs()).expect("sizes match");
        report.record(implicit == classical, || format!("{f} at {:?}", logits.as_slice()));
    }
    report
}

/// Logits on a dyadic grid with pairwise distinct magnitudes, so a symmetric difference
/// with step `FD_STEP` is exact and never crosses a min/max switch.
fn grid_logits<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    const GRID: f64 = 1.0 / (1u64 << 20) as f64;
    loop {
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let k = rng.random_range(1..=(4i64 << 20));
                if rng.random() { k as f64 * GRID } else { -(k as f64) * GRID }
            })
            .collect();
        let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        mags.sort_by(f64::total_cmp);
        if mags.windows(2).all(|w| w[0] != w[1]) {
            return x;
        }
    }
}

const FD_STEP: f64 = 1.0 / (1u64 << 22) as f64;

/// The active path ends at a variable leaf, its sign is the parity of the negations it
/// passes, and a finite difference of the formula value reproduces it exactly with every
/// other partial derivative zero.
pub fn sparse_gradient_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("sparse gradient");
    let mut scratch = Vec::new();
    for _ in 0..cases {
        let n = rng.random_range(1..=12);
        let f = random_formula(&mut rng, n, 8);
        let x = grid_logits(&mut rng, n);
        let logits = LogitVector::new(x.clone()).expect("finite");
        let eval = eval_godel(&f, &logits, &mut rng).expect("sizes match");
        let active = backward_godel(&f, &eval).expect("winners recorded");
        let nodes = active.path.nodes();
        let leaf_ok = nodes.first() == Some(&f.root())
            && matches!(f.node(*nodes.last().unwrap()), Node::Var(v) if *v == active.grad.var);
        let negations = nodes.iter().filter(|id| matches!(f.node(**id), Node::Not(_))).count();
        let parity_ok = Sign::parity(negations) == active.grad.direction;

        let mut nonzero = 0;
        let mut fd_ok = true;
        for v in 0..n {
            let mut up = x.clone();
            up[v] += FD_STEP;
            let mut down = x.clone();
            down[v] -= FD_STEP;
            let d = (godel_value(&f, &up, &mut scratch) - godel_value(&f, &down, &mut scratch)) / (2.0 * FD_STEP);
            let expected = if v == active.grad.var { active.grad.direction.as_f64() } else { 0.0 };
            if d != 0.0 {
                nonzero += 1;
            }
            fd_ok &= d == expected;
        }
        report.record(leaf_ok && parity_ok && fd_ok && nonzero == 1, || format!("{f} at {x:?}"));
    }
    report
}

/// Along the active path, the derivative of the root with respect to each node equals the
/// product of the implicit truth values of root and node.
pub fn implicit_product_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("implicit product law");
    for _ in 0..cases {
        let n = rng.random_range(1..=12);
        let f = random_formula(&mut rng, n, 8);
        let logits = LogitVector::new(nonzero_logits(&mut rng, n, 5.0)).expect("finite");
        let eval = eval_godel(&f, &logits, &mut rng).expect("sizes match");
        let active = backward_godel(&f, &eval).expect("winners recorded");
        report.record(check_implicit_product_law(&f, &eval, &active), || f.to_string());
    }
    report
}

/// On a CNF whose sign assignment is not a model, the active clause is false.
pub fn active_clause_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("active clause unsatisfied");
    while report.cases < cases {
        let n = rng.random_range(2..=10);
        let m = rng.random_range(2..=20);
        let cnf = random_cnf(&mut rng, n, m, 4);
        let logits = LogitVector::new(nonzero_logits(&mut rng, n, 5.0)).expect("finite");
        let b = logits.signs();
        if check_cnf(&cnf, &b) {
            continue;
        }
        let eval = eval_cnf_godel(&cnf, &logits).expect("sizes match");
        let grad = backward_cnf_godel(&cnf, &eval).expect("consistent");
        let clause_false = !cnf.clause(grad.clause).iter().any(|l| b.get(l.var()) == l.polarity);
        report.record(clause_false && eval.root < 0.0, || cnf.to_dimacs());
    }
    report
}

fn representation_case(
    cnf: &CnfFormula,
    b: &BoolAssignment,
    clause: usize,
    literal: usize,
) -> Result<bool, RepresentationError> {
    let logits = construct_representation(cnf, b, clause, literal, RepresentationConstants::default())?;
    if logits.signs() != *b {
        return Ok(false);
    }
    let formula = cnf_to_formula(cnf);
    let implicit = implicit_interpretation(&formula, &logits)?;
    let classical = eval_bool_nodes(&formula, b)?;
    let eval = eval_cnf_godel(cnf, &logits)?;
    let lit = cnf.clause(clause)[literal];
    let general = crate::semantics::eval_godel_first(&formula, &logits)?;
    let Ok(active) = backward_godel(&formula, &general) else { return Ok(false) };
    Ok(implicit == classical
        && eval.min_clause == clause
        && eval.max_literal[clause] == literal
        && active.grad.var == lit.var()
        && active.grad.direction == lit.polarity)
}

/// For random CNFs, interpretations, relevant unsatisfied clauses and literals, the
/// constructed logits represent the interpretation and select the requested literal.
pub fn representation_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("constructive representation");
    while report.cases < cases {
        let n = rng.random_range(2..=8);
        let m = rng.random_range(2..=10);
        let cnf = random_cnf(&mut rng, n, m, 4);
        let b = BoolAssignment::from_bools((0..n).map(|_| rng.random::<bool>()));
        let eligible: Vec<usize> = (0..cnf.num_clauses())
            .filter(|&c| {
                !cnf.clause(c).iter().any(|l| b.get(l.var()) == l.polarity)
                    && crate::formula::is_relevant_clause(&cnf, c).unwrap_or(false)
            })
            .collect();
        if eligible.is_empty() {
            continue;
        }
        let clause = eligible[rng.random_range(0..eligible.len())];
        let literal = rng.random_range(0..cnf.clause(clause).len());
        let ok = representation_case(&cnf, &b, clause, literal).unwrap_or(false);
        report.record(ok, || format!("{} clause {clause} literal {literal}", cnf.to_dimacs()));
    }
    report
}

/// `not(A or B) and (B or C) and (C or D)` under `B = (-1, +1, +1, -1)`: the path
/// `root, not(A or B), A or B, A` fails the necessary condition. Returns whether it is
/// excluded.
pub fn excluded_path_example() -> bool {
    let f = Formula::new(&and([not(or([var(0), var(1)])), or([var(1), var(2)]), or([var(2), var(3)])]))
        .expect("valid");
    let b = BoolAssignment(vec![Sign::Neg, Sign::Pos, Sign::Pos, Sign::Neg]);
    let root = f.root();
    let neg = f.node(root).children()[0];
    let disj = f.node(neg).children()[0];
    let a = f.node(disj).children()[0];
    let path = Path::new(&f, vec![root, neg, disj, a]).expect("valid path");
    !candidate_path_necessary(&f, &b, &path).expect("sizes match")
}

/// `(A or B or C) and (A or B)`: the first clause is implied by the second, so no
/// representation makes it (and hence `C`) active.
pub fn subsumed_clause_example() -> bool {
    let cnf = CnfFormula::new(
        3,
        vec![vec![Literal::pos(0), Literal::pos(1), Literal::pos(2)], vec![Literal::pos(0), Literal::pos(1)]],
    )
    .expect("valid");
    let b = BoolAssignment(vec![Sign::Neg; 3]);
    matches!(
        construct_representation(&cnf, &b, 0, 2, RepresentationConstants::default()),
        Err(RepresentationError::ClauseNotRelevant)
    )
}

/// Monte-Carlo estimates of the implicit probability match exact probabilistic logic when
/// logits are set to `theta_inv` of the target probabilities. A case passes when the
/// estimate is within `tolerance` binomial standard errors of the exact value, the error
/// being computed from the exact probability.
pub fn implicit_probability_suite(
    seed: u64,
    formulas: usize,
    draws: u64,
    models: &[NoiseModel],
    tolerance: f64,
) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("implicit probability");
    for _ in 0..formulas {
        let n = rng.random_range(1..=10);
        let f = random_formula(&mut rng, n, 6);
        let probs: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..0.95)).collect();
        let exact = prob_logic_exact(&f, &probs).expect("small formula").probability;
        for model in models {
            let logits: Vec<f64> = probs.iter().map(|&p| model.theta_inv(p).expect("noisy model")).collect();
            let logits = LogitVector::new(logits).expect("finite");
            let mc = mc_implicit_prob(&f, &logits, model, draws, &mut rng).expect("noisy model");
            let sigma = (exact * (1.0 - exact) / draws as f64).sqrt();
            let ok = (mc.estimate - exact).abs() <= tolerance * sigma + 1e-12;
            report.record(ok, || format!("{f} with {model}: mc {} exact {exact}", mc.estimate));
        }
    }
    report
}

/// After shifting, exactly one entry is positive and the top two are opposite.
pub fn shift_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("shift one positive");
    let mut out = Vec::new();
    while report.cases < cases {
        let k = rng.random_range(2..=8);
        let x: Vec<f64> = (0..k).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (i, j) = top_two(&x).expect("k >= 2");
        if x[i] == x[j] {
            continue;
        }
        shift_into(&x, &mut out).expect("k >= 2");
        let positives = out.iter().filter(|&&v| v > 0.0).count();
        let antisymmetric = (out[j] + out[i]).abs() <= 1e-12;
        let ordered = (0..k).all(|a| (0..k).all(|b| (x[a] < x[b]) == (out[a] < out[b])));
        report.record(positives == 1 && out[i] > 0.0 && antisymmetric && ordered, || format!("{x:?}"));
    }
    report
}

/// Categorical sampling with Gumbel noise: on every draw the positive index equals the
/// Gumbel-Max argmax, and each class frequency is within `tolerance` binomial standard
/// errors of the softmax probability. One case per score vector.
pub fn gumbel_max_suite(seed: u64, vectors: usize, draws: u64, tolerance: f64) -> (SuiteReport, SuiteReport) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut same = SuiteReport::new("gumbel-max agreement");
    let mut freq = SuiteReport::new("softmax frequencies");
    let model = NoiseModel::STANDARD_GUMBEL;
    let mut eps = Vec::new();
    for _ in 0..vectors {
        let k = rng.random_range(2..=8);
        let z = CategoricalLogits::new((0..k).map(|_| rng.random_range(-2.0..2.0)).collect()).expect("k >= 2");
        let mut counts = vec![0u64; k];
        let mut agree = true;
        for _ in 0..draws {
            eps.resize(k, 0.0);
            model.fill(&mut rng, &mut eps);
            let s = categorical_gt_sample_with_noise(&z, &eps).expect("sizes match");
            agree &= s.argmax == perturbed_argmax(&z, &eps).expect("sizes match");
            counts[s.argmax] += 1;
        }
        let p = softmax(z.as_slice());
        let within = counts.iter().zip(&p).all(|(&c, &p)| {
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            (c as f64 - draws as f64 * p).abs() <= tolerance * sigma
        });
        same.record(agree, || format!("{:?}", z.as_slice()));
        freq.record(within, || format!("{:?}: counts {counts:?}", z.as_slice()));
    }
    (same, freq)
}

/// `(A or B) and (not B or C)` with `A` and `C` pinned far below zero.
pub fn oscillation_fixture() -> CnfFormula {
    CnfFormula::new(
        3,
        vec![vec![Literal::pos(0), Literal::pos(1)], vec![Literal::neg(1), Literal::pos(2)]],
    )
    .expect("valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationTrace {
    pub epochs: u64,
    /// Updates that touched a variable other than `B`.
    pub other_updates: u64,
    /// Updates after the first sign change of `B` that did not flip it.
    pub missed_flips: u64,
    pub sign_changes: u64,
    pub satisfied: bool,
}

/// Plain Gödel steps on the oscillation fixture from `(low, b0, low)`.
pub fn godel_oscillation(low: f64, b0: f64, lr: f64, epochs: u64) -> OscillationTrace {
    let cnf = oscillation_fixture();
    let logits = LogitVector::new(vec![low, b0, low]).expect("finite");
    let mut state = SampleState::from_logits(&cnf, logits, sample_rng(0, 0)).expect("sizes match");
    let mut trace = OscillationTrace { epochs, other_updates: 0, missed_flips: 0, sign_changes: 0, satisfied: false };
    let mut flipped_once = false;
    for _ in 0..epochs {
        let before = Sign::of(state.logits()[1]);
        let out = step_baseline(&cnf, &mut state, Semantics::Godel, lr).expect("finite updates");
        trace.satisfied |= out.satisfied;
        if !matches!(out.update, Some((1, _))) {
            trace.other_updates += 1;
        }
        let changed = Sign::of(state.logits()[1]) != before;
        if changed {
            trace.sign_changes += 1;
        } else if flipped_once {
            trace.missed_flips += 1;
        }
        flipped_once |= changed;
    }
    trace.satisfied |= state.unperturbed_satisfied();
    trace
}

/// Runs the Gödel Trick on the oscillation fixture for each seed (B drawn from
/// `U(-1, 1)`), returning the epoch at which each run was solved.
pub fn gt_oscillation(low: f64, noise: &NoiseModel, lr: f64, epochs: u64, seeds: u64) -> Vec<Option<u64>> {
    let cnf = oscillation_fixture();
    (0..seeds)
        .map(|seed| {
            let mut rng = sample_rng(seed, 0);
            let b0 = rng.random_range(-1.0..1.0);
            let logits = LogitVector::new(vec![low, b0, low]).expect("finite");
            let mut state = SampleState::from_logits(&cnf, logits, rng).expect("sizes match");
            while state.epoch() < epochs {
                if step_gt(&cnf, &mut state, noise, lr).expect("finite updates").satisfied {
                    break;
                }
            }
            state.solved_at()
        })
        .collect()
}

/// Active paths must satisfy the candidate-path necessary condition under the sign
/// assignment they were computed from.
pub fn candidate_condition_suite(seed: u64, cases: usize) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SuiteReport::new("candidate path necessity");
    for _ in 0..cases {
        let n = rng.random_range(1..=5);
        let f = random_formula(&mut rng, n, 5);
        let logits = LogitVector::new(nonzero_logits(&mut rng, n, 3.0)).expect("finite");
        let eval = eval_godel(&f, &logits, &mut rng).expect("sizes match");
        let active = backward_godel(&f, &eval).expect("winners recorded");
        let ok = candidate_path_necessary(&f, &logits.signs(), &active.path).expect("sizes match");
        report.record(ok, || format!("{f} at {:?}", logits.as_slice()));
    }
    report
}

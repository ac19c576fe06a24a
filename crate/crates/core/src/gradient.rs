//! Backward passes.
//!
//! Under Gödel semantics the gradient of a formula with respect to the logits is sparse:
//! following the recorded min/max winners from the root reaches exactly one variable,
//! and the derivative along that path is `(-1)^(negations on the path)`. The baselines
//! get dense analytic gradients.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{is_relevant_clause, CnfError, CnfFormula, Formula, Literal, Node, NodeId};
use crate::semantics::{
    eval_bool_nodes, sigmoid, AnnotatedEval, BoolAssignment, CnfEval,
    EvalError, LogitVector, PRODUCT_CLAUSE_FLOOR,
};
use crate::sign::Sign;

#[derive(Debug, Error, PartialEq)]
pub enum GradError {
    #[error("evaluation has {found} nodes, formula has {expected}")]
    EvalMismatch { expected: usize, found: usize },
    #[error("evaluation is missing the winner of node {0}")]
    MissingWinner(NodeId),
    #[error("path is not a root-to-descendant chain of the formula")]
    InvalidPath,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// The single nonzero entry of a Gödel gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseGrad {
    pub var: usize,
    pub direction: Sign,
}

impl SparseGrad {
    pub fn to_dense(self, num_vars: usize) -> DenseGrad {
        let mut g = vec![0.0; num_vars];
        g[self.var] = self.direction.as_f64();
        DenseGrad(g)
    }
}

/// A chain of nodes starting at the root, each a direct child of its predecessor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    nodes: Vec<NodeId>,
}

impl Path {
    /// Checks that `nodes` starts at the root of `f` and follows parent/child edges.
    pub fn new(f: &Formula, nodes: Vec<NodeId>) -> Result<Path, GradError> {
        if nodes.first() != Some(&f.root()) {
            return Err(GradError::InvalidPath);
        }
        for pair in nodes.windows(2) {
            if pair[0].index() >= f.len() || !f.node(pair[0]).children().contains(&pair[1]) {
                return Err(GradError::InvalidPath);
            }
        }
        Ok(Path { nodes })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Whether the path ends at a variable.
    pub fn is_complete(&self, f: &Formula) -> bool {
        self.nodes.last().is_some_and(|id| matches!(f.node(*id), Node::Var(_)))
    }

    /// `n_i` for every prefix: the negations traversed between the root and node `i`.
    pub fn negation_counts(&self, f: &Formula) -> Vec<usize> {
        let mut counts = Vec::with_capacity(self.nodes.len());
        let mut n = 0;
        for id in &self.nodes {
            counts.push(n);
            if matches!(f.node(*id), Node::Not(_)) {
                n += 1;
            }
        }
        counts
    }
}

/// Output of the general backward pass: the active variable and the path reaching it.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivePath {
    pub grad: SparseGrad,
    pub path: Path,
}

/// Follows the recorded winners from the root down to the unique active variable.
pub fn backward_godel(f: &Formula, eval: &AnnotatedEval) -> Result<ActivePath, GradError> {
    if eval.values.len() != f.len() || eval.winners.len() != f.len() {
        return Err(GradError::EvalMismatch { expected: f.len(), found: eval.values.len() });
    }
    let mut nodes = Vec::new();
    let mut id = f.root();
    let mut direction = Sign::Pos;
    loop {
        nodes.push(id);
        match f.node(id) {
            Node::Var(v) => {
                let grad = SparseGrad { var: *v, direction };
                return Ok(ActivePath { grad, path: Path { nodes } });
            }
            Node::Not(c) => {
                direction = -direction;
                id = *c;
            }
            Node::And(cs) | Node::Or(cs) => {
                let w = eval.winners[id.index()].ok_or(GradError::MissingWinner(id))?;
                id = *cs.get(w as usize).ok_or(GradError::MissingWinner(id))?;
            }
        }
    }
}

/// Active literal of a CNF evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CnfGrad {
    pub grad: SparseGrad,
    pub clause: usize,
    /// Position of the active literal inside `clause`.
    pub literal: usize,
}

pub fn backward_cnf_godel(cnf: &CnfFormula, eval: &CnfEval) -> Result<CnfGrad, GradError> {
    if eval.max_literal.len() != cnf.num_clauses() || eval.min_clause >= cnf.num_clauses() {
        return Err(GradError::EvalMismatch {
            expected: cnf.num_clauses(),
            found: eval.max_literal.len(),
        });
    }
    let clause = eval.min_clause;
    let literal = eval.max_literal[clause];
    let lit = *cnf
        .clause(clause)
        .get(literal)
        .ok_or(GradError::EvalMismatch { expected: cnf.clause(clause).len(), found: literal })?;
    Ok(CnfGrad { grad: active_literal_grad(lit), clause, literal })
}

#[inline]
pub(crate) fn active_literal_grad(lit: Literal) -> SparseGrad {
    SparseGrad { var: lit.var(), direction: lit.polarity }
}

/// Checks `d phi / d pi = B(phi) * B(pi)` at every node `pi` of the active path, where the
/// left side is the chain-rule product of the path (`-1` per traversed negation) and `B`
/// is the implicit interpretation; also checks the chain ends at `active.grad`.
pub fn check_implicit_product_law(f: &Formula, eval: &AnnotatedEval, active: &ActivePath) -> bool {
    if eval.values.len() != f.len() {
        return false;
    }
    let root_sign = Sign::of(eval.root_value());
    let counts = active.path.negation_counts(f);
    let law_holds = active.path.nodes().iter().zip(&counts).all(|(id, &n)| {
        Sign::parity(n) == root_sign * Sign::of(eval.values[id.index()])
    });
    let ends_right = match active.path.nodes().last().map(|id| f.node(*id)) {
        Some(Node::Var(v)) => {
            *v == active.grad.var && Sign::parity(*counts.last().expect("non-empty")) == active.grad.direction
        }
        _ => false,
    };
    law_holds && ends_right
}

/// Necessary condition for `path` to be active under some representation of `b`: every
/// prefix node `psi_i` must satisfy `B(phi) * B(psi_i) = (-1)^(n_i)`. Returns false when
/// the path is excluded.
pub fn candidate_path_necessary(f: &Formula, b: &BoolAssignment, path: &Path) -> Result<bool, GradError> {
    // re-validate: a Path may have been built for another formula
    Path::new(f, path.nodes().to_vec())?;
    let truth = eval_bool_nodes(f, b)?;
    let root = truth[f.root().index()];
    Ok(path
        .nodes()
        .iter()
        .zip(path.negation_counts(f))
        .all(|(id, n)| root * truth[id.index()] == Sign::parity(n)))
}

/// `beta < alpha < gamma < 0 < delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepresentationConstants {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Default for RepresentationConstants {
    fn default() -> Self {
        RepresentationConstants { alpha: -2.0, beta: -3.0, gamma: -1.0, delta: 4.0 }
    }
}

impl RepresentationConstants {
    pub fn is_ordered(&self) -> bool {
        self.beta < self.alpha && self.alpha < self.gamma && self.gamma < 0.0 && 0.0 < self.delta
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RepresentationError {
    #[error("constants must satisfy beta < alpha < gamma < 0 < delta")]
    Constants,
    #[error("clause not unsatisfied under the given interpretation")]
    ClauseSatisfied,
    #[error("clause not relevant: it is subsumed by another clause")]
    ClauseNotRelevant,
    #[error("literal position {literal} out of range for clause {clause}")]
    LiteralIndex { clause: usize, literal: usize },
    #[error(transparent)]
    Cnf(#[from] CnfError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Builds logits that represent `b` and make `(root, clause, literal)` the active path.
///
/// The chosen literal gets value `alpha`, the rest of its clause `beta`, every other
/// literal of an unsatisfied clause `gamma`, and the remaining variables `+-delta`
/// according to `b`.
pub fn construct_representation(
    cnf: &CnfFormula,
    b: &BoolAssignment,
    clause: usize,
    literal: usize,
    constants: RepresentationConstants,
) -> Result<LogitVector, RepresentationError> {
    if !constants.is_ordered() {
        return Err(RepresentationError::Constants);
    }
    if b.len() != cnf.num_vars() {
        return Err(EvalError::LengthMismatch { expected: cnf.num_vars(), found: b.len() }.into());
    }
    let relevant = is_relevant_clause(cnf, clause)?;
    let lit_true = |l: &Literal| b.get(l.var()) == l.polarity;
    let target = cnf.clause(clause);
    if target.iter().any(lit_true) {
        return Err(RepresentationError::ClauseSatisfied);
    }
    if !relevant {
        return Err(RepresentationError::ClauseNotRelevant);
    }
    let chosen = *target
        .get(literal)
        .ok_or(RepresentationError::LiteralIndex { clause, literal })?;

    let mut logits: Vec<Option<f64>> = vec![None; cnf.num_vars()];
    // a literal value v for literal l means logit = polarity * v
    let mut assign = |l: Literal, v: f64| {
        let slot = &mut logits[l.var()];
        if slot.is_none() {
            *slot = Some(l.polarity.apply(v));
        }
    };
    assign(chosen, constants.alpha);
    for l in target {
        assign(*l, constants.beta);
    }
    for c in cnf.clauses() {
        if !c.iter().any(lit_true) {
            for l in c {
                assign(*l, constants.gamma);
            }
        }
    }
    let values = logits
        .into_iter()
        .enumerate()
        .map(|(v, slot)| slot.unwrap_or_else(|| b.get(v).apply(constants.delta)))
        .collect();
    Ok(LogitVector::new(values)?)
}

/// Dense per-variable gradient, used by the baseline semantics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseGrad(pub Vec<f64>);

impl DenseGrad {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&g| g == 0.0)
    }
}

/// Gradient of `sum_c log(max(c, floor))` for the Product semantics.
pub fn backward_cnf_product(cnf: &CnfFormula, logits: &LogitVector) -> Result<DenseGrad, EvalError> {
    if logits.len() != cnf.num_vars() {
        return Err(EvalError::LengthMismatch { expected: cnf.num_vars(), found: logits.len() });
    }
    let mut grad = vec![0.0; cnf.num_vars()];
    product_grad_into(cnf, logits.as_slice(), &mut grad);
    Ok(DenseGrad(grad))
}

pub(crate) fn product_grad_into(cnf: &CnfFormula, x: &[f64], grad: &mut [f64]) {
    grad.fill(0.0);
    for clause in cnf.clauses() {
        let all_false: f64 = clause.iter().map(|l| sigmoid(-l.value(x[l.var()]))).product();
        let value = (1.0 - all_false).max(PRODUCT_CLAUSE_FLOOR);
        // d/dx_l (1 - prod(1 - v)) = prod_{others}(1 - v) * pol * v_l (1 - v_l)
        //                          = all_false * pol * v_l
        let scale = all_false / value;
        for l in clause {
            let v = sigmoid(l.value(x[l.var()]));
            grad[l.var()] += l.polarity.apply(scale * v);
        }
    }
}

/// Subgradient of the Łukasiewicz formula value; zero on and beyond clamp boundaries.
pub fn backward_cnf_lukasiewicz(cnf: &CnfFormula, logits: &LogitVector) -> Result<DenseGrad, EvalError> {
    if logits.len() != cnf.num_vars() {
        return Err(EvalError::LengthMismatch { expected: cnf.num_vars(), found: logits.len() });
    }
    let mut grad = vec![0.0; cnf.num_vars()];
    let mut raw = Vec::new();
    lukasiewicz_grad_into(cnf, logits.as_slice(), &mut grad, &mut raw);
    Ok(DenseGrad(grad))
}

pub(crate) fn lukasiewicz_grad_into(cnf: &CnfFormula, x: &[f64], grad: &mut [f64], raw: &mut Vec<f64>) {
    grad.fill(0.0);
    raw.clear();
    raw.extend(cnf.clauses().map(|c| c.iter().map(|l| sigmoid(l.value(x[l.var()]))).sum::<f64>()));
    let m = raw.len() as f64;
    let total: f64 = raw.iter().map(|&s| s.min(1.0)).sum();
    if total - (m - 1.0) <= 0.0 {
        return;
    }
    for (clause, &sum) in cnf.clauses().zip(raw.iter()) {
        if sum >= 1.0 {
            continue;
        }
        for l in clause {
            let v = sigmoid(l.value(x[l.var()]));
            grad[l.var()] += l.polarity.apply(v * (1.0 - v));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{and, cnf_to_formula, not, or, var, Expr, Literal};
    use crate::semantics::{eval_cnf_godel, eval_cnf_lukasiewicz, eval_cnf_product, eval_godel_first};

    fn lv(v: &[f64]) -> LogitVector {
        LogitVector::new(v.to_vec()).unwrap()
    }

    fn formula(e: Expr) -> Formula {
        Formula::new(&e).unwrap()
    }

    #[test]
    fn figure_one_active_path() {
        let f = formula(and([or([var(0), var(1)]), not(var(2))]));
        let logits = lv(&[-2.3, 3.1, 1.5]);
        let e = eval_godel_first(&f, &logits).unwrap();
        let a = backward_godel(&f, &e).unwrap();
        assert_eq!(a.grad, SparseGrad { var: 2, direction: Sign::Neg });
        assert_eq!(a.path.nodes().iter().map(|n| n.index()).collect::<Vec<_>>(), vec![5, 4, 3]);
        assert_eq!(a.path.negation_counts(&f), vec![0, 0, 1]);
        assert!(check_implicit_product_law(&f, &e, &a));
    }

    #[test]
    fn base_cases() {
        let f = formula(var(0));
        let e = eval_godel_first(&f, &lv(&[-0.3])).unwrap();
        assert_eq!(backward_godel(&f, &e).unwrap().grad, SparseGrad { var: 0, direction: Sign::Pos });

        let f = formula(not(not(var(0))));
        let e = eval_godel_first(&f, &lv(&[0.3])).unwrap();
        assert_eq!(backward_godel(&f, &e).unwrap().grad, SparseGrad { var: 0, direction: Sign::Pos });
    }

    #[test]
    fn mismatched_eval_rejected() {
        let f = formula(and([var(0), var(1)]));
        let g = formula(var(0));
        let e = eval_godel_first(&g, &lv(&[1.0])).unwrap();
        assert!(matches!(backward_godel(&f, &e), Err(GradError::EvalMismatch { .. })));
    }

    #[test]
    fn cnf_backward_examples() {
        let c = CnfFormula::new(3, vec![vec![Literal::pos(0), Literal::pos(1)], vec![Literal::neg(2)]]).unwrap();
        let e = eval_cnf_godel(&c, &lv(&[-2.3, 3.1, 1.5])).unwrap();
        let g = backward_cnf_godel(&c, &e).unwrap();
        assert_eq!(g, CnfGrad { grad: SparseGrad { var: 2, direction: Sign::Neg }, clause: 1, literal: 0 });

        let a = CnfFormula::new(1, vec![vec![Literal::pos(0)]]).unwrap();
        let e = eval_cnf_godel(&a, &lv(&[2.0])).unwrap();
        assert_eq!(backward_cnf_godel(&a, &e).unwrap().grad, SparseGrad { var: 0, direction: Sign::Pos });

        let contra = CnfFormula::new(1, vec![vec![Literal::pos(0)], vec![Literal::neg(0)]]).unwrap();
        let e = eval_cnf_godel(&contra, &lv(&[0.5])).unwrap();
        let g = backward_cnf_godel(&contra, &e).unwrap();
        assert_eq!(g.clause, 1);
        assert_eq!(g.grad, SparseGrad { var: 0, direction: Sign::Neg });
    }

    #[test]
    fn satisfied_formula_grows_magnitude() {
        // satisfied: B(phi) = +1, so the active variable moves away from zero
        let f = formula(and([or([var(0), var(1)]), not(var(2))]));
        let logits = lv(&[-2.3, 3.1, -1.5]);
        let e = eval_godel_first(&f, &logits).unwrap();
        let a = backward_godel(&f, &e).unwrap();
        assert!(e.root_value() > 0.0);
        assert!(check_implicit_product_law(&f, &e, &a));
        let x = logits.as_slice()[a.grad.var];
        assert_eq!(a.grad.direction, Sign::of(x));
    }

    fn example4() -> Formula {
        // not(A or B) and (B or C) and (C or D)
        formula(and([not(or([var(0), var(1)])), or([var(1), var(2)]), or([var(2), var(3)])]))
    }

    #[test]
    fn necessary_condition_excludes_example_path() {
        let f = example4();
        let b = BoolAssignment(vec![Sign::Neg, Sign::Pos, Sign::Pos, Sign::Neg]);
        // nodes: A=0 B=1 or=2 not=3 B=4 C=5 or=6 C=7 D=8 or=9 root=10
        let root = f.root();
        let neg = f.node(root).children()[0];
        let disj = f.node(neg).children()[0];
        let a = f.node(disj).children()[0];
        let path = Path::new(&f, vec![root, neg, disj, a]).unwrap();
        assert!(!candidate_path_necessary(&f, &b, &path).unwrap());
        // dropping the last step it is still admissible
        let prefix = Path::new(&f, vec![root, neg, disj]).unwrap();
        assert!(candidate_path_necessary(&f, &b, &prefix).unwrap());
        let trivial = Path::new(&f, vec![root]).unwrap();
        assert!(candidate_path_necessary(&f, &b, &trivial).unwrap());
    }

    #[test]
    fn invalid_paths_rejected() {
        let f = example4();
        assert_eq!(Path::new(&f, vec![NodeId(0)]), Err(GradError::InvalidPath));
        assert_eq!(Path::new(&f, vec![f.root(), NodeId(0)]), Err(GradError::InvalidPath));
        assert_eq!(Path::new(&f, vec![]), Err(GradError::InvalidPath));
    }

    #[test]
    fn representation_example() {
        // (A or B) and (not B or C), all false, target literal A of clause 0
        let c = CnfFormula::new(3, vec![vec![Literal::pos(0), Literal::pos(1)], vec![Literal::neg(1), Literal::pos(2)]]).unwrap();
        let b = BoolAssignment(vec![Sign::Neg; 3]);
        let logits = construct_representation(&c, &b, 0, 0, RepresentationConstants::default()).unwrap();
        assert_eq!(logits.as_slice(), &[-2.0, -3.0, -4.0]);
        let e = eval_cnf_godel(&c, &logits).unwrap();
        assert_eq!(e.root, -2.0);
        let g = backward_cnf_godel(&c, &e).unwrap();
        assert_eq!((g.clause, g.literal), (0, 0));
        assert_eq!(logits.signs(), b);
        // the same path via the general formula
        let f = cnf_to_formula(&c);
        let a = backward_godel(&f, &eval_godel_first(&f, &logits).unwrap()).unwrap();
        assert_eq!(a.grad.var, 0);
        assert!(candidate_path_necessary(&f, &b, &a.path).unwrap());
    }

    #[test]
    fn representation_preconditions() {
        let c = CnfFormula::new(3, vec![vec![Literal::pos(0), Literal::pos(1)], vec![Literal::neg(1), Literal::pos(2)]]).unwrap();
        let b = BoolAssignment(vec![Sign::Neg; 3]);
        assert_eq!(
            construct_representation(&c, &b, 1, 0, RepresentationConstants::default()),
            Err(RepresentationError::ClauseSatisfied)
        );
        let bad = RepresentationConstants { alpha: -4.0, ..Default::default() };
        assert_eq!(construct_representation(&c, &b, 0, 0, bad), Err(RepresentationError::Constants));
        assert_eq!(
            construct_representation(&c, &b, 0, 5, RepresentationConstants::default()),
            Err(RepresentationError::LiteralIndex { clause: 0, literal: 5 })
        );

        // (A or B or C) and (A or B): the longer clause is never active
        let sub = CnfFormula::new(3, vec![vec![Literal::pos(0), Literal::pos(1), Literal::pos(2)], vec![Literal::pos(0), Literal::pos(1)]]).unwrap();
        let err = construct_representation(&sub, &b, 0, 2, RepresentationConstants::default()).unwrap_err();
        assert_eq!(err, RepresentationError::ClauseNotRelevant);
        assert_eq!(err.to_string(), "clause not relevant: it is subsumed by another clause");
        let custom = RepresentationConstants { alpha: -0.5, beta: -0.7, gamma: -0.1, delta: 0.2 };
        let l = construct_representation(&sub, &b, 1, 1, custom).unwrap();
        assert_eq!(l.as_slice(), &[-0.7, -0.5, -0.1]);
    }

    fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
        let mut up = x.to_vec();
        let mut down = x.to_vec();
        up[i] += h;
        down[i] -= h;
        (f(&up) - f(&down)) / (2.0 * h)
    }

    #[test]
    fn product_gradient_closed_forms() {
        let a = CnfFormula::new(1, vec![vec![Literal::pos(0)]]).unwrap();
        let g = backward_cnf_product(&a, &lv(&[0.0])).unwrap();
        assert!((g.0[0] - 0.5).abs() < 1e-15);
        let g = backward_cnf_product(&a, &lv(&[40.0])).unwrap();
        assert!(g.0[0].abs() < 1e-15);
    }

    #[test]
    fn product_gradient_matches_finite_differences() {
        let c = CnfFormula::new(
            4,
            vec![
                vec![Literal::pos(0), Literal::neg(1), Literal::pos(2)],
                vec![Literal::neg(0), Literal::pos(3)],
                vec![Literal::pos(1), Literal::neg(2), Literal::neg(3)],
            ],
        )
        .unwrap();
        let x = [0.3, -1.2, 0.7, -0.4];
        let g = backward_cnf_product(&c, &lv(&x)).unwrap();
        let obj = |v: &[f64]| eval_cnf_product(&c, &lv(v)).unwrap().log_value;
        for i in 0..4 {
            let fd = central_diff(obj, &x, i, 1e-5);
            assert!((fd - g.0[i]).abs() <= 1e-6 * g.0[i].abs().max(1e-3), "var {i}: {fd} vs {}", g.0[i]);
        }
    }

    #[test]
    fn lukasiewicz_gradient_regions() {
        // clamped at zero: (A) and (not A) always sums to 1, formula value 0
        let c = CnfFormula::new(1, vec![vec![Literal::pos(0)], vec![Literal::neg(0)]]).unwrap();
        assert!(backward_cnf_lukasiewicz(&c, &lv(&[0.3])).unwrap().is_zero());

        // unclamped: single clause (A or B) below 1
        let c = CnfFormula::new(2, vec![vec![Literal::pos(0), Literal::pos(1)]]).unwrap();
        let x = [-1.0, -2.0];
        let g = backward_cnf_lukasiewicz(&c, &lv(&x)).unwrap();
        let obj = |v: &[f64]| eval_cnf_lukasiewicz(&c, &lv(v)).unwrap().value;
        for i in 0..2 {
            let fd = central_diff(obj, &x, i, 1e-6);
            assert!((fd - g.0[i]).abs() < 1e-8, "{fd} vs {}", g.0[i]);
        }

        // a clause clamped at 1 receives no gradient; the other clause does
        let c = CnfFormula::new(3, vec![vec![Literal::pos(0), Literal::pos(1)], vec![Literal::pos(2)]]).unwrap();
        let g = backward_cnf_lukasiewicz(&c, &lv(&[3.0, 3.0, 0.5])).unwrap();
        assert_eq!(&g.0[..2], &[0.0, 0.0]);
        assert!(g.0[2] > 0.0);
    }
}

//! Classical, Gödel, Product and Łukasiewicz semantics.
//!
//! Gödel semantics work directly on real logits: negation is `-x`, conjunction `min`,
//! disjunction `max`. The baseline t-norm semantics read truth degrees as
//! `sigmoid(logit)` so all semantics share one parameterisation.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{CnfFormula, Formula, Node};
use crate::sign::Sign;

/// Clause values of the Product semantics are clamped from below before taking logs.
pub const PRODUCT_CLAUSE_FLOOR: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("expected {expected} variable values, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("logit of variable {var} is not finite ({value})")]
    NonFinite { var: usize, value: f64 },
}

/// Gödel interpretation of the propositional variables: one finite real per variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<LogitVector, EvalError> {
        if let Some((var, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(EvalError::NonFinite { var, value });
        }
        Ok(LogitVector(values))
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// The classical interpretation obtained by taking signs.
    pub fn signs(&self) -> BoolAssignment {
        BoolAssignment(self.0.iter().map(|&x| Sign::of(x)).collect())
    }
}

impl TryFrom<Vec<f64>> for LogitVector {
    type Error = EvalError;
    fn try_from(v: Vec<f64>) -> Result<Self, EvalError> {
        LogitVector::new(v)
    }
}

impl From<LogitVector> for Vec<f64> {
    fn from(v: LogitVector) -> Vec<f64> {
        v.0
    }
}

/// Classical interpretation: one truth value in `{-1, +1}` per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoolAssignment(pub Vec<Sign>);

impl BoolAssignment {
    pub fn from_bools(values: impl IntoIterator<Item = bool>) -> BoolAssignment {
        BoolAssignment(values.into_iter().map(Sign::from_bool).collect())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn get(&self, var: usize) -> Sign {
        self.0[var]
    }

    pub fn as_slice(&self) -> &[Sign] {
        &self.0
    }
}

fn check_len(expected: usize, found: usize) -> Result<(), EvalError> {
    if expected != found {
        return Err(EvalError::LengthMismatch { expected, found });
    }
    Ok(())
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Classical truth value of every node.
pub fn eval_bool_nodes(f: &Formula, b: &BoolAssignment) -> Result<Vec<Sign>, EvalError> {
    check_len(f.num_vars(), b.len())?;
    let mut truth: Vec<bool> = Vec::with_capacity(f.len());
    for node in f.nodes() {
        let t = match node {
            Node::Var(v) => b.get(*v).is_pos(),
            Node::Not(c) => !truth[c.index()],
            Node::And(cs) => cs.iter().all(|c| truth[c.index()]),
            Node::Or(cs) => cs.iter().any(|c| truth[c.index()]),
        };
        truth.push(t);
    }
    Ok(truth.into_iter().map(Sign::from_bool).collect())
}

/// Classical truth value of the formula.
pub fn eval_bool(f: &Formula, b: &BoolAssignment) -> Result<Sign, EvalError> {
    Ok(*eval_bool_nodes(f, b)?.last().expect("formula has a root"))
}

/// Gödel values of every node, together with the child that attains each min/max.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedEval {
    pub values: Vec<f64>,
    /// For `And`/`Or` nodes, the position (in the node's child list) of the winning child.
    pub winners: Vec<Option<u32>>,
}

impl AnnotatedEval {
    #[inline]
    pub fn root_value(&self) -> f64 {
        *self.values.last().expect("formula has a root")
    }

    /// Signs of every node value.
    pub fn implicit(&self) -> Vec<Sign> {
        self.values.iter().map(|&x| Sign::of(x)).collect()
    }
}

/// Decides which of several exactly tied candidates wins a min/max.
pub trait TieBreak {
    /// Called for the `count`-th tied candidate (`count >= 2`); returning true makes it the
    /// new winner. Replacing with probability `1/count` yields a uniform choice.
    fn replace(&mut self, count: u32) -> bool;
}

/// Keeps the earliest candidate.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstWins;

impl TieBreak for FirstWins {
    #[inline]
    fn replace(&mut self, _count: u32) -> bool {
        false
    }
}

/// Uniformly random choice among tied candidates.
pub struct RandomTies<'a, R: Rng + ?Sized>(pub &'a mut R);

impl<R: Rng + ?Sized> TieBreak for RandomTies<'_, R> {
    #[inline]
    fn replace(&mut self, count: u32) -> bool {
        self.0.random_range(0..count) == 0
    }
}

#[inline]
fn select<T: TieBreak>(
    children: &[crate::formula::NodeId],
    values: &[f64],
    want_min: bool,
    ties: &mut T,
) -> (f64, u32) {
    let mut best = values[children[0].index()];
    let mut best_pos = 0u32;
    let mut tied = 1u32;
    for (pos, c) in children.iter().enumerate().skip(1) {
        let v = values[c.index()];
        let better = if want_min { v < best } else { v > best };
        if better {
            best = v;
            best_pos = pos as u32;
            tied = 1;
        } else if v == best {
            tied += 1;
            if ties.replace(tied) {
                best_pos = pos as u32;
            }
        }
    }
    (best, best_pos)
}

fn eval_godel_inner<T: TieBreak>(f: &Formula, logits: &[f64], ties: &mut T) -> AnnotatedEval {
    let mut values: Vec<f64> = Vec::with_capacity(f.len());
    let mut winners = Vec::with_capacity(f.len());
    for node in f.nodes() {
        let (v, w) = match node {
            Node::Var(i) => (logits[*i], None),
            Node::Not(c) => (-values[c.index()], None),
            Node::And(cs) => {
                let (v, w) = select(cs, &values, true, ties);
                (v, Some(w))
            }
            Node::Or(cs) => {
                let (v, w) = select(cs, &values, false, ties);
                (v, Some(w))
            }
        };
        values.push(v);
        winners.push(w);
    }
    AnnotatedEval { values, winners }
}

/// Gödel evaluation over logits, recording min/max winners. Exact ties are broken
/// uniformly at random using `rng`.
pub fn eval_godel<R: Rng + ?Sized>(
    f: &Formula,
    logits: &LogitVector,
    rng: &mut R,
) -> Result<AnnotatedEval, EvalError> {
    check_len(f.num_vars(), logits.len())?;
    Ok(eval_godel_inner(f, logits.as_slice(), &mut RandomTies(rng)))
}

/// Gödel evaluation with ties resolved in favour of the earliest child.
pub fn eval_godel_first(f: &Formula, logits: &LogitVector) -> Result<AnnotatedEval, EvalError> {
    check_len(f.num_vars(), logits.len())?;
    Ok(eval_godel_inner(f, logits.as_slice(), &mut FirstWins))
}

/// Value-only Gödel evaluation into a reusable buffer; returns the root value.
///
/// `values` must have one entry per variable; no finiteness check is made.
pub fn godel_value(f: &Formula, values: &[f64], scratch: &mut Vec<f64>) -> f64 {
    debug_assert_eq!(values.len(), f.num_vars());
    scratch.clear();
    for node in f.nodes() {
        let v = match node {
            Node::Var(i) => values[*i],
            Node::Not(c) => -scratch[c.index()],
            Node::And(cs) => cs.iter().map(|c| scratch[c.index()]).fold(f64::INFINITY, f64::min),
            Node::Or(cs) => cs.iter().map(|c| scratch[c.index()]).fold(f64::NEG_INFINITY, f64::max),
        };
        scratch.push(v);
    }
    *scratch.last().expect("formula has a root")
}

/// Gödel evaluation over truth degrees in `[0, 1]`, with negation `1 - x`.
pub fn eval_godel_unit(f: &Formula, degrees: &[f64]) -> Result<f64, EvalError> {
    check_len(f.num_vars(), degrees.len())?;
    let mut vals: Vec<f64> = Vec::with_capacity(f.len());
    for node in f.nodes() {
        let v = match node {
            Node::Var(i) => degrees[*i],
            Node::Not(c) => 1.0 - vals[c.index()],
            Node::And(cs) => cs.iter().map(|c| vals[c.index()]).fold(1.0, f64::min),
            Node::Or(cs) => cs.iter().map(|c| vals[c.index()]).fold(0.0, f64::max),
        };
        vals.push(v);
    }
    Ok(*vals.last().expect("formula has a root"))
}

/// Sign of every node's Gödel value.
pub fn implicit_interpretation(f: &Formula, logits: &LogitVector) -> Result<Vec<Sign>, EvalError> {
    check_len(f.num_vars(), logits.len())?;
    let mut scratch = Vec::with_capacity(f.len());
    godel_value(f, logits.as_slice(), &mut scratch);
    Ok(scratch.iter().map(|&x| Sign::of(x)).collect())
}

/// Result of the CNF fast path.
#[derive(Debug, Clone, PartialEq)]
pub struct CnfEval {
    pub root: f64,
    pub min_clause: usize,
    /// Position of the maximising literal inside each clause.
    pub max_literal: Vec<usize>,
}

/// Flat Gödel pass over a CNF: per clause `max` over literals, then `min` over clauses.
///
/// Calls `on_clause(clause, max_pos)` for every clause and returns
/// `(root, min_clause, max_pos of min_clause)`.
#[inline]
pub(crate) fn scan_cnf_godel<T: TieBreak>(
    cnf: &CnfFormula,
    values: &[f64],
    ties: &mut T,
    mut on_clause: impl FnMut(usize, usize),
) -> (f64, usize, usize) {
    let lits = cnf.literals();
    let offsets = cnf.offsets();
    let mut root = f64::INFINITY;
    let mut root_clause = 0usize;
    let mut root_lit = 0usize;
    let mut root_tied = 0u32;
    for c in 0..cnf.num_clauses() {
        let clause = &lits[offsets[c] as usize..offsets[c + 1] as usize];
        let mut best = clause[0].value(values[clause[0].var()]);
        let mut best_pos = 0usize;
        let mut tied = 1u32;
        for (pos, lit) in clause.iter().enumerate().skip(1) {
            let v = lit.value(values[lit.var()]);
            if v > best {
                best = v;
                best_pos = pos;
                tied = 1;
            } else if v == best {
                tied += 1;
                if ties.replace(tied) {
                    best_pos = pos;
                }
            }
        }
        on_clause(c, best_pos);
        if best < root {
            root = best;
            root_clause = c;
            root_lit = best_pos;
            root_tied = 1;
        } else if best == root {
            root_tied += 1;
            if ties.replace(root_tied) {
                root_clause = c;
                root_lit = best_pos;
            }
        }
    }
    (root, root_clause, root_lit)
}

/// Same result distribution as [`scan_cnf_godel`] without per-clause winners: clause
/// maxima are computed branch-free, and ties are resolved only for the minimising clause.
/// `clause_max` is scratch space.
#[inline]
pub(crate) fn cnf_active_literal<T: TieBreak>(
    cnf: &CnfFormula,
    values: &[f64],
    ties: &mut T,
    clause_max: &mut Vec<f64>,
) -> (f64, usize, usize) {
    let codes = cnf.codes();
    clause_max.clear();
    let mut root = f64::INFINITY;
    for w in cnf.offsets().windows(2) {
        let mut best = f64::NEG_INFINITY;
        for &code in &codes[w[0] as usize..w[1] as usize] {
            let v = f64::from_bits(values[(code >> 1) as usize].to_bits() ^ (u64::from(code & 1) << 63));
            best = if v > best { v } else { best };
        }
        clause_max.push(best);
        root = if best < root { best } else { root };
    }
    let mut clause = 0;
    let mut tied = 0u32;
    for (c, &v) in clause_max.iter().enumerate() {
        if v == root {
            tied += 1;
            if tied == 1 || ties.replace(tied) {
                clause = c;
            }
        }
    }
    let mut pos = 0;
    let mut tied = 0u32;
    for (p, l) in cnf.clause(clause).iter().enumerate() {
        if l.value(values[l.var()]) == root {
            tied += 1;
            if tied == 1 || ties.replace(tied) {
                pos = p;
            }
        }
    }
    (root, clause, pos)
}

fn eval_cnf_godel_inner<T: TieBreak>(cnf: &CnfFormula, logits: &[f64], ties: &mut T) -> CnfEval {
    let mut max_literal = vec![0usize; cnf.num_clauses()];
    let (root, min_clause, _) = scan_cnf_godel(cnf, logits, ties, |c, pos| max_literal[c] = pos);
    CnfEval { root, min_clause, max_literal }
}

/// Gödel evaluation of a CNF with ties resolved in favour of the earliest candidate.
pub fn eval_cnf_godel(cnf: &CnfFormula, logits: &LogitVector) -> Result<CnfEval, EvalError> {
    check_len(cnf.num_vars(), logits.len())?;
    Ok(eval_cnf_godel_inner(cnf, logits.as_slice(), &mut FirstWins))
}

/// Gödel evaluation of a CNF with uniformly random tie-breaking.
pub fn eval_cnf_godel_with_rng<R: Rng + ?Sized>(
    cnf: &CnfFormula,
    logits: &LogitVector,
    rng: &mut R,
) -> Result<CnfEval, EvalError> {
    check_len(cnf.num_vars(), logits.len())?;
    Ok(eval_cnf_godel_inner(cnf, logits.as_slice(), &mut RandomTies(rng)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductEval {
    /// Sum of the logs of the (clamped) clause values.
    pub log_value: f64,
    pub clause_values: Vec<f64>,
}

/// Product semantics: clause = probabilistic sum `1 - prod(1 - v_l)`, formula = product
/// of clauses, reported in log space.
pub fn eval_cnf_product(cnf: &CnfFormula, logits: &LogitVector) -> Result<ProductEval, EvalError> {
    check_len(cnf.num_vars(), logits.len())?;
    let x = logits.as_slice();
    let clause_values: Vec<f64> = cnf
        .clauses()
        .map(|clause| {
            // 1 - v_l = sigmoid(-polarity * logit)
            let all_false: f64 = clause.iter().map(|l| sigmoid(-l.value(x[l.var()]))).product();
            1.0 - all_false
        })
        .collect();
    let log_value = clause_values.iter().map(|&c| c.max(PRODUCT_CLAUSE_FLOOR).ln()).sum();
    Ok(ProductEval { log_value, clause_values })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LukasiewiczEval {
    pub value: f64,
    pub clause_values: Vec<f64>,
}

/// Łukasiewicz semantics: clause = `min(1, sum v_l)`, formula = `max(0, sum c - (m - 1))`.
pub fn eval_cnf_lukasiewicz(
    cnf: &CnfFormula,
    logits: &LogitVector,
) -> Result<LukasiewiczEval, EvalError> {
    check_len(cnf.num_vars(), logits.len())?;
    let x = logits.as_slice();
    let clause_values: Vec<f64> = cnf
        .clauses()
        .map(|clause| clause.iter().map(|l| sigmoid(l.value(x[l.var()]))).sum::<f64>().min(1.0))
        .collect();
    Ok(LukasiewiczEval { value: lukasiewicz_conjunction(&clause_values), clause_values })
}

/// `max(0, sum c - (m - 1))`.
pub fn lukasiewicz_conjunction(clause_values: &[f64]) -> f64 {
    let m = clause_values.len() as f64;
    (clause_values.iter().sum::<f64>() - (m - 1.0)).max(0.0)
}

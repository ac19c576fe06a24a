//! Exhaustive ground truth for small instances.
//!
//! Enumeration is plain binary counting with variable 0 as the most significant bit and
//! bit value 1 meaning true, so the first model found is the lexicographically first with
//! false ordered before true. Both enumerators evaluate 64 assignments per pass using
//! bit masks.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{CnfFormula, Formula, Node};
use crate::noise::NoiseModel;
use crate::semantics::{godel_value, BoolAssignment, LogitVector};
use crate::sign::Sign;

pub const MAX_SAT_VARS: usize = 26;
pub const MAX_PROB_VARS: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{num_vars} variables is too many to enumerate (limit {max})")]
    TooManyVars { num_vars: usize, max: usize },
    #[error("probability of variable {var} must lie in [0, 1], got {value}")]
    Probability { var: usize, value: f64 },
    #[error("expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("Monte-Carlo estimation needs a noise model")]
    Noiseless,
    #[error("Monte-Carlo estimation needs at least one draw")]
    NoDraws,
}

/// Classical check of a CNF under a sign assignment.
pub fn check_cnf(cnf: &CnfFormula, b: &BoolAssignment) -> bool {
    b.len() == cnf.num_vars() && cnf.clauses().all(|c| c.iter().any(|l| b.get(l.var()) == l.polarity))
}

/// Masks for the six lowest assignment bits inside a 64-assignment block.
const LANE: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Visits assignments in blocks of up to 64. `visit(block_start, var_masks, valid)` gets,
/// for every variable, the mask of lanes where it is true; returning `false` stops.
fn enumerate_blocks(num_vars: usize, mut visit: impl FnMut(u64, &[u64], u64) -> bool) {
    let low = num_vars.min(6);
    let lanes = 1u64 << low;
    let valid = if lanes == 64 { u64::MAX } else { (1u64 << lanes) - 1 };
    let blocks = 1u64 << (num_vars - low);
    let mut masks = vec![0u64; num_vars];
    for block in 0..blocks {
        let start = block << low;
        for (v, m) in masks.iter_mut().enumerate() {
            let bit = num_vars - 1 - v;
            *m = if bit < low {
                LANE[bit] & valid
            } else if (start >> bit) & 1 == 1 {
                valid
            } else {
                0
            };
        }
        if !visit(start, &masks, valid) {
            return;
        }
    }
}

fn assignment_from_index(num_vars: usize, index: u64) -> BoolAssignment {
    BoolAssignment((0..num_vars).map(|v| Sign::from_bool((index >> (num_vars - 1 - v)) & 1 == 1)).collect())
}

fn formula_mask(f: &Formula, masks: &[u64], valid: u64, scratch: &mut Vec<u64>) -> u64 {
    scratch.clear();
    for node in f.nodes() {
        let m = match node {
            Node::Var(i) => masks[*i],
            Node::Not(c) => !scratch[c.index()] & valid,
            Node::And(cs) => cs.iter().fold(valid, |acc, c| acc & scratch[c.index()]),
            Node::Or(cs) => cs.iter().fold(0, |acc, c| acc | scratch[c.index()]),
        };
        scratch.push(m);
    }
    *scratch.last().expect("formula has a root")
}

fn cnf_mask(cnf: &CnfFormula, masks: &[u64], valid: u64) -> u64 {
    let mut sat = valid;
    for clause in cnf.clauses() {
        let mut c = 0u64;
        for l in clause {
            let m = masks[l.var()];
            c |= if l.polarity == Sign::Pos { m } else { !m & valid };
        }
        sat &= c;
        if sat == 0 {
            break;
        }
    }
    sat
}

fn first_model(num_vars: usize, mut mask_of: impl FnMut(&[u64], u64) -> u64) -> Option<BoolAssignment> {
    let mut found = None;
    enumerate_blocks(num_vars, |start, masks, valid| {
        let sat = mask_of(masks, valid);
        if sat != 0 {
            found = Some(start + sat.trailing_zeros() as u64);
            false
        } else {
            true
        }
    });
    found.map(|i| assignment_from_index(num_vars, i))
}

fn check_vars(num_vars: usize, max: usize) -> Result<(), OracleError> {
    if num_vars > max {
        Err(OracleError::TooManyVars { num_vars, max })
    } else {
        Ok(())
    }
}

/// Lexicographically first model of a CNF.
pub fn brute_force_sat(cnf: &CnfFormula) -> Result<Option<BoolAssignment>, OracleError> {
    check_vars(cnf.num_vars(), MAX_SAT_VARS)?;
    Ok(first_model(cnf.num_vars(), |masks, valid| cnf_mask(cnf, masks, valid)))
}

/// Lexicographically first model of an arbitrary formula.
pub fn brute_force_sat_formula(f: &Formula) -> Result<Option<BoolAssignment>, OracleError> {
    check_vars(f.num_vars(), MAX_SAT_VARS)?;
    let mut scratch = Vec::with_capacity(f.len());
    Ok(first_model(f.num_vars(), |masks, valid| formula_mask(f, masks, valid, &mut scratch)))
}

/// Number of models of a formula.
pub fn count_models(f: &Formula) -> Result<u64, OracleError> {
    check_vars(f.num_vars(), MAX_SAT_VARS)?;
    let mut scratch = Vec::with_capacity(f.len());
    let mut count = 0u64;
    enumerate_blocks(f.num_vars(), |_, masks, valid| {
        count += formula_mask(f, masks, valid, &mut scratch).count_ones() as u64;
        true
    });
    Ok(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactProbResult {
    pub probability: f64,
    pub satisfying_count: u64,
}

/// Probability that `f` holds when variable `i` is independently true with `probs[i]`.
pub fn prob_logic_exact(f: &Formula, probs: &[f64]) -> Result<ExactProbResult, OracleError> {
    let n = f.num_vars();
    check_vars(n, MAX_PROB_VARS)?;
    if probs.len() != n {
        return Err(OracleError::LengthMismatch { expected: n, found: probs.len() });
    }
    if let Some((var, &value)) = probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p)) {
        return Err(OracleError::Probability { var, value });
    }
    let mut scratch = Vec::with_capacity(f.len());
    let mut probability = 0.0;
    let mut satisfying_count = 0u64;
    enumerate_blocks(n, |start, masks, valid| {
        let mut sat = formula_mask(f, masks, valid, &mut scratch);
        satisfying_count += sat.count_ones() as u64;
        while sat != 0 {
            let index = start + sat.trailing_zeros() as u64;
            sat &= sat - 1;
            let mut w = 1.0;
            for (v, &p) in probs.iter().enumerate() {
                w *= if (index >> (n - 1 - v)) & 1 == 1 { p } else { 1.0 - p };
            }
            probability += w;
        }
        true
    });
    Ok(ExactProbResult { probability: probability.clamp(0.0, 1.0), satisfying_count })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial standard error of `estimate`.
    pub sigma: f64,
    pub draws: u64,
}

/// Fraction of noise draws for which the perturbed Gödel value of `f` is positive.
pub fn mc_implicit_prob<R: Rng + ?Sized>(
    f: &Formula,
    logits: &LogitVector,
    model: &NoiseModel,
    n_draws: u64,
    rng: &mut R,
) -> Result<McEstimate, OracleError> {
    if model.is_none() {
        return Err(OracleError::Noiseless);
    }
    if n_draws == 0 {
        return Err(OracleError::NoDraws);
    }
    if logits.len() != f.num_vars() {
        return Err(OracleError::LengthMismatch { expected: f.num_vars(), found: logits.len() });
    }
    let mut perturbed = vec![0.0; logits.len()];
    let mut scratch = Vec::with_capacity(f.len());
    let mut hits = 0u64;
    for _ in 0..n_draws {
        model.fill(rng, &mut perturbed);
        for (p, &x) in perturbed.iter_mut().zip(logits.as_slice()) {
            *p += x;
        }
        if godel_value(f, &perturbed, &mut scratch) > 0.0 {
            hits += 1;
        }
    }
    let p = hits as f64 / n_draws as f64;
    Ok(McEstimate { estimate: p, sigma: (p * (1.0 - p) / n_draws as f64).sqrt(), draws: n_draws })
}

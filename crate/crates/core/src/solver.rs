//! Gradient-based SAT search over independent samples.
//!
//! Every sample owns a logit vector and a ChaCha8 stream derived from
//! `(master_seed, sample index)`, so results do not depend on scheduling. One epoch is
//! one gradient step. Before each step the sign assignment is checked against the CNF;
//! the first epoch at which a check succeeds is the sample's `solved_at`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::CnfFormula;
use crate::gradient::{active_literal_grad, lukasiewicz_grad_into, product_grad_into};
use crate::noise::{NoiseError, NoiseModel};
use crate::oracle::check_cnf;
use crate::semantics::{cnf_active_literal, BoolAssignment, LogitVector, RandomTies};
use crate::sign::Sign;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    /// Gödel semantics with per-step noise.
    Gt,
    Godel,
    Product,
    Lukasiewicz,
}

impl FromStr for Semantics {
    type Err = SolveError;
    fn from_str(s: &str) -> Result<Self, SolveError> {
        match s.to_ascii_lowercase().as_str() {
            "gt" => Ok(Semantics::Gt),
            "godel" | "gödel" => Ok(Semantics::Godel),
            "product" => Ok(Semantics::Product),
            "lukasiewicz" | "łukasiewicz" => Ok(Semantics::Lukasiewicz),
            _ => Err(SolveError::Config(format!(
                "unknown semantics '{s}' (expected gt, godel, product or lukasiewicz)"
            ))),
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Gt => "gt",
            Semantics::Godel => "godel",
            Semantics::Product => "product",
            Semantics::Lukasiewicz => "lukasiewicz",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("logit of variable {var} became non-finite at epoch {epoch}; lower the learning rate")]
    NonFinite { var: usize, epoch: u64 },
    #[error("sample {sample} reported an assignment that does not satisfy the formula")]
    WitnessRejected { sample: usize },
    #[error("expected {expected} logits, found {found}")]
    LengthMismatch { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub semantics: Semantics,
    pub noise: NoiseModel,
    pub samples: usize,
    pub max_epochs: u64,
    pub learning_rate: f64,
    pub init_range: f64,
    pub master_seed: u64,
    pub stop_on_solve: bool,
    pub progress_granularity: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            semantics: Semantics::Gt,
            noise: NoiseModel::SYMMETRIC_UNIFORM,
            samples: 100,
            max_epochs: 50_000,
            learning_rate: 0.1,
            init_range: 1.0,
            master_seed: 0,
            stop_on_solve: true,
            progress_granularity: 100,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        self.noise.validate()?;
        match (self.semantics, self.noise.is_none()) {
            (Semantics::Gt, true) => {
                return Err(SolveError::Config("gt semantics requires a noise model".into()))
            }
            (Semantics::Godel | Semantics::Product | Semantics::Lukasiewicz, false) => {
                return Err(SolveError::Config(format!(
                    "{} semantics runs without noise",
                    self.semantics
                )))
            }
            _ => {}
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(SolveError::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.init_range.is_finite() && self.init_range > 0.0) {
            return Err(SolveError::Config(format!(
                "init range must be positive, got {}",
                self.init_range
            )));
        }
        if self.samples == 0 {
            return Err(SolveError::Config("at least one sample is required".into()));
        }
        if self.progress_granularity == 0 {
            return Err(SolveError::Config("progress granularity must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-sample search state.
///
/// Besides the logits it keeps, for the unperturbed sign assignment, the number of true
/// literals in each clause, updated incrementally whenever a logit changes sign.
#[derive(Debug, Clone)]
pub struct SampleState {
    logits: Vec<f64>,
    epoch: u64,
    solved_at: Option<u64>,
    witness: Option<BoolAssignment>,
    rng: ChaCha8Rng,
    perturbed: Vec<f64>,
    grad: Vec<f64>,
    scratch: Vec<f64>,
    true_count: Vec<u32>,
    unsat_clauses: usize,
}

/// What happened during one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    /// Whether this step's check found a satisfying assignment.
    pub satisfied: bool,
    /// The updated variable and direction (GT and plain Gödel only).
    pub update: Option<(usize, Sign)>,
    /// True when the update left every logit unchanged.
    pub stationary: bool,
}

/// RNG for sample `index` of a run seeded with `master_seed`.
pub fn sample_rng(master_seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index as u64);
    rng
}

impl SampleState {
    /// Draws logits uniformly from `(-init_range, init_range)`.
    pub fn new(cnf: &CnfFormula, init_range: f64, master_seed: u64, index: usize) -> SampleState {
        let mut rng = sample_rng(master_seed, index);
        let logits = (0..cnf.num_vars())
            .map(|_| init_range * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        SampleState::assemble(cnf, logits, rng)
    }

    pub fn from_logits(
        cnf: &CnfFormula,
        logits: LogitVector,
        rng: ChaCha8Rng,
    ) -> Result<SampleState, SolveError> {
        if logits.len() != cnf.num_vars() {
            return Err(SolveError::LengthMismatch { expected: cnf.num_vars(), found: logits.len() });
        }
        Ok(SampleState::assemble(cnf, logits.into_inner(), rng))
    }

    fn assemble(cnf: &CnfFormula, logits: Vec<f64>, rng: ChaCha8Rng) -> SampleState {
        let true_count: Vec<u32> = cnf
            .clauses()
            .map(|c| c.iter().filter(|l| l.value(logits[l.var()]) > 0.0).count() as u32)
            .collect();
        let unsat_clauses = true_count.iter().filter(|&&n| n == 0).count();
        let n = logits.len();
        SampleState {
            logits,
            epoch: 0,
            solved_at: None,
            witness: None,
            rng,
            perturbed: vec![0.0; n],
            grad: vec![0.0; n],
            scratch: Vec::new(),
            true_count,
            unsat_clauses,
        }
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    /// Perturbed logits drawn by the most recent GT step.
    pub fn last_perturbed(&self) -> &[f64] {
        &self.perturbed
    }

    /// Number of steps taken so far.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn solved_at(&self) -> Option<u64> {
        self.solved_at
    }

    /// The first satisfying assignment observed.
    pub fn witness(&self) -> Option<&BoolAssignment> {
        self.witness.as_ref()
    }

    /// Whether the sign assignment of the current (unperturbed) logits satisfies the CNF.
    pub fn unperturbed_satisfied(&self) -> bool {
        self.unsat_clauses == 0
    }

    fn record(&mut self, signs_of: &[f64]) {
        if self.solved_at.is_none() {
            self.solved_at = Some(self.epoch);
            self.witness = Some(BoolAssignment(signs_of.iter().map(|&x| Sign::of(x)).collect()));
        }
    }

    fn set_logit(&mut self, cnf: &CnfFormula, var: usize, value: f64) -> Result<(), SolveError> {
        if !value.is_finite() {
            return Err(SolveError::NonFinite { var, epoch: self.epoch });
        }
        let old = Sign::of(self.logits[var]);
        self.logits[var] = value;
        let new = Sign::of(value);
        if old != new {
            for occ in cnf.occurrences(var) {
                let count = &mut self.true_count[occ.clause as usize];
                if occ.polarity == new {
                    if *count == 0 {
                        self.unsat_clauses -= 1;
                    }
                    *count += 1;
                } else {
                    *count -= 1;
                    if *count == 0 {
                        self.unsat_clauses += 1;
                    }
                }
            }
        }
        Ok(())
    }
}

fn cnf_satisfied_by_signs(cnf: &CnfFormula, values: &[f64]) -> bool {
    cnf.clauses().all(|c| c.iter().any(|l| l.value(values[l.var()]) > 0.0))
}

/// One Gödel Trick step: perturb, evaluate, check both sign assignments, then move the
/// active literal's variable by `lr` in the ascent direction.
pub fn step_gt(
    cnf: &CnfFormula,
    state: &mut SampleState,
    noise: &NoiseModel,
    lr: f64,
) -> Result<StepOutcome, SolveError> {
    noise.fill(&mut state.rng, &mut state.perturbed);
    for (p, &x) in state.perturbed.iter_mut().zip(&state.logits) {
        *p += x;
    }
    let (root, clause, pos) =
        cnf_active_literal(cnf, &state.perturbed, &mut RandomTies(&mut state.rng), &mut state.scratch);
    // root > 0 means every clause has a positive literal; root < 0 means some clause has
    // none. Only an exact zero needs the explicit check.
    let perturbed_sat = root > 0.0 || (root == 0.0 && cnf_satisfied_by_signs(cnf, &state.perturbed));
    let satisfied = if perturbed_sat {
        let perturbed = std::mem::take(&mut state.perturbed);
        state.record(&perturbed);
        state.perturbed = perturbed;
        true
    } else if state.unperturbed_satisfied() {
        let logits = std::mem::take(&mut state.logits);
        state.record(&logits);
        state.logits = logits;
        true
    } else {
        false
    };
    let g = active_literal_grad(cnf.clause(clause)[pos]);
    let next = state.logits[g.var] + g.direction.apply(lr);
    state.set_logit(cnf, g.var, next)?;
    state.epoch += 1;
    Ok(StepOutcome { satisfied, update: Some((g.var, g.direction)), stationary: false })
}

/// One noiseless step: check the sign assignment, then ascend the semantics' objective.
pub fn step_baseline(
    cnf: &CnfFormula,
    state: &mut SampleState,
    semantics: Semantics,
    lr: f64,
) -> Result<StepOutcome, SolveError> {
    let satisfied = state.unperturbed_satisfied();
    if satisfied {
        let logits = std::mem::take(&mut state.logits);
        state.record(&logits);
        state.logits = logits;
    }
    let outcome = match semantics {
        Semantics::Gt => {
            return Err(SolveError::Config("gt semantics needs step_gt and a noise model".into()))
        }
        Semantics::Godel => {
            let (_, clause, pos) =
                cnf_active_literal(cnf, &state.logits, &mut RandomTies(&mut state.rng), &mut state.scratch);
            let g = active_literal_grad(cnf.clause(clause)[pos]);
            let next = state.logits[g.var] + g.direction.apply(lr);
            state.set_logit(cnf, g.var, next)?;
            StepOutcome { satisfied, update: Some((g.var, g.direction)), stationary: false }
        }
        Semantics::Product | Semantics::Lukasiewicz => {
            let mut grad = std::mem::take(&mut state.grad);
            if semantics == Semantics::Product {
                product_grad_into(cnf, &state.logits, &mut grad);
            } else {
                lukasiewicz_grad_into(cnf, &state.logits, &mut grad, &mut state.scratch);
            }
            let mut stationary = true;
            let mut result = Ok(());
            for (var, &g) in grad.iter().enumerate() {
                if g != 0.0 {
                    let next = state.logits[var] + lr * g;
                    if next != state.logits[var] {
                        stationary = false;
                    }
                    if let Err(e) = state.set_logit(cnf, var, next) {
                        result = Err(e);
                        break;
                    }
                }
            }
            state.grad = grad;
            result?;
            StepOutcome { satisfied, update: None, stationary }
        }
    };
    state.epoch += 1;
    Ok(outcome)
}

/// Cumulative fraction of samples solved by each snapshot epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub epoch: u64,
    pub solved_ratio: f64,
}

/// Snapshots at `g, 2g, ...` up to `max_epochs` (always including `max_epochs` itself).
/// A sample counts as solved at snapshot `e` when `solved_at <= e`.
pub fn progress_curve(solved_at: &[Option<u64>], max_epochs: u64, granularity: u64) -> Vec<CurvePoint> {
    if solved_at.is_empty() || granularity == 0 {
        return Vec::new();
    }
    let mut sorted: Vec<u64> = solved_at.iter().flatten().copied().collect();
    sorted.sort_unstable();
    let total = solved_at.len() as f64;
    let mut points = Vec::new();
    let mut at = |epoch: u64| {
        let solved = sorted.partition_point(|&s| s <= epoch);
        points.push(CurvePoint { epoch, solved_ratio: solved as f64 / total });
    };
    let mut e = granularity;
    while e <= max_epochs {
        at(e);
        e += granularity;
    }
    if max_epochs % granularity != 0 {
        at(max_epochs);
    }
    points
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub num_vars: usize,
    pub num_clauses: usize,
    pub solved_at: Vec<Option<u64>>,
    pub curve: Vec<CurvePoint>,
    pub witness: Option<BoolAssignment>,
    pub witness_sample: Option<usize>,
    /// Total gradient steps over all samples.
    pub steps: u64,
}

impl SolveReport {
    pub fn solved_samples(&self) -> usize {
        self.solved_at.iter().filter(|s| s.is_some()).count()
    }

    pub fn solved_fraction(&self) -> f64 {
        if self.solved_at.is_empty() {
            0.0
        } else {
            self.solved_samples() as f64 / self.solved_at.len() as f64
        }
    }

    pub fn is_solved(&self) -> bool {
        self.witness.is_some()
    }
}

struct SampleOutcome {
    solved_at: Option<u64>,
    witness: Option<BoolAssignment>,
    steps: u64,
}

/// Runs one sample to completion.
pub fn run_sample(cnf: &CnfFormula, config: &SolveConfig, index: usize) -> Result<SampleState, SolveError> {
    let mut state = SampleState::new(cnf, config.init_range, config.master_seed, index);
    while state.epoch < config.max_epochs {
        let out = if config.semantics == Semantics::Gt {
            step_gt(cnf, &mut state, &config.noise, config.learning_rate)?
        } else {
            step_baseline(cnf, &mut state, config.semantics, config.learning_rate)?
        };
        if out.satisfied && config.stop_on_solve {
            break;
        }
        // a noiseless dense step that changed nothing will repeat forever
        if out.stationary && (state.solved_at.is_some() || !state.unperturbed_satisfied()) {
            break;
        }
    }
    Ok(state)
}

/// Runs `config.samples` independent samples in parallel on the current rayon pool.
pub fn solve(cnf: &CnfFormula, config: &SolveConfig) -> Result<SolveReport, SolveError> {
    config.validate()?;
    let outcomes: Vec<SampleOutcome> = (0..config.samples)
        .into_par_iter()
        .map(|i| {
            run_sample(cnf, config, i).map(|s| SampleOutcome {
                solved_at: s.solved_at,
                witness: s.witness,
                steps: s.epoch,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut witness = None;
    let mut witness_sample = None;
    let mut best: Option<u64> = None;
    for (i, o) in outcomes.iter().enumerate() {
        let (Some(at), Some(w)) = (o.solved_at, &o.witness) else { continue };
        if !check_cnf(cnf, w) {
            return Err(SolveError::WitnessRejected { sample: i });
        }
        if best.map_or(true, |b| at < b) {
            best = Some(at);
            witness = Some(w.clone());
            witness_sample = Some(i);
        }
    }
    let solved_at: Vec<Option<u64>> = outcomes.iter().map(|o| o.solved_at).collect();
    Ok(SolveReport {
        num_vars: cnf.num_vars(),
        num_clauses: cnf.num_clauses(),
        curve: progress_curve(&solved_at, config.max_epochs, config.progress_granularity),
        solved_at,
        witness,
        witness_sample,
        steps: outcomes.iter().map(|o| o.steps).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Literal;

    fn cnf(n: usize, clauses: &[&[i32]]) -> CnfFormula {
        let clauses = clauses
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&l| {
                        let v = l.unsigned_abs() as usize - 1;
                        if l > 0 { Literal::pos(v) } else { Literal::neg(v) }
                    })
                    .collect()
            })
            .collect();
        CnfFormula::new(n, clauses).unwrap()
    }

    fn state(c: &CnfFormula, logits: &[f64], seed: u64) -> SampleState {
        SampleState::from_logits(c, LogitVector::new(logits.to_vec()).unwrap(), sample_rng(seed, 0)).unwrap()
    }

    #[test]
    fn contradiction_never_solves() {
        let c = cnf(1, &[&[1], &[-1]]);
        let config = SolveConfig { samples: 3, max_epochs: 500, ..SolveConfig::default() };
        let r = solve(&c, &config).unwrap();
        assert_eq!(r.solved_at, vec![None; 3]);
        assert_eq!(r.steps, 1500);
        assert!(r.witness.is_none());
    }

    #[test]
    fn unit_clause_flips_quickly() {
        let c = cnf(1, &[&[1]]);
        let mut s = state(&c, &[-0.5], 3);
        for _ in 0..20 {
            let out = step_gt(&c, &mut s, &NoiseModel::SYMMETRIC_UNIFORM, 0.1).unwrap();
            assert_eq!(out.update, Some((0, Sign::Pos)));
            if out.satisfied {
                break;
            }
        }
        assert!(s.solved_at().unwrap() <= 6);
    }

    #[test]
    fn satisfying_init_is_solved_at_zero() {
        let c = cnf(2, &[&[1, 2], &[-1, 2]]);
        let mut s = state(&c, &[0.3, 5.0], 0);
        assert!(step_gt(&c, &mut s, &NoiseModel::SYMMETRIC_UNIFORM, 0.1).unwrap().satisfied);
        assert_eq!(s.solved_at(), Some(0));
        let mut s = state(&c, &[0.3, 5.0], 0);
        assert!(step_baseline(&c, &mut s, Semantics::Godel, 0.1).unwrap().satisfied);
        assert_eq!(s.solved_at(), Some(0));
    }

    #[test]
    fn product_step_example() {
        let c = cnf(1, &[&[1]]);
        let mut s = state(&c, &[0.0], 0);
        step_baseline(&c, &mut s, Semantics::Product, 1.0).unwrap();
        assert_eq!(s.logits(), &[0.5]);
    }

    #[test]
    fn lukasiewicz_clamped_region_is_fixed() {
        // two unit clauses that are both far from true: formula value clamps to 0
        let c = cnf(2, &[&[1], &[2]]);
        let mut s = state(&c, &[-5.0, -5.0], 0);
        for _ in 0..10 {
            let out = step_baseline(&c, &mut s, Semantics::Lukasiewicz, 1.0).unwrap();
            assert!(out.stationary);
        }
        assert_eq!(s.logits(), &[-5.0, -5.0]);
        let config = SolveConfig {
            semantics: Semantics::Lukasiewicz,
            noise: NoiseModel::None,
            samples: 2,
            max_epochs: 1000,
            init_range: 1.0,
            ..SolveConfig::default()
        };
        let r = solve(&c, &config).unwrap();
        assert!(r.steps < 2000 || r.is_solved());
    }

    #[test]
    fn zero_epochs_leaves_unsolved() {
        let c = cnf(2, &[&[1], &[2], &[-1, -2]]);
        let config = SolveConfig { samples: 1, max_epochs: 0, ..SolveConfig::default() };
        let r = solve(&c, &config).unwrap();
        assert_eq!(r.solved_at, vec![None]);
        assert!(r.curve.is_empty());
    }

    #[test]
    fn incremental_tracker_matches_scan() {
        let c = cnf(4, &[&[1, -2, 3], &[-1, 4], &[2, -3, -4], &[-2, 4]]);
        let mut s = state(&c, &[0.2, -0.1, 0.05, -0.3], 9);
        let noise = NoiseModel::Uniform { a: -0.5, b: 0.5 };
        for _ in 0..2000 {
            step_gt(&c, &mut s, &noise, 0.07).unwrap();
            assert_eq!(s.unperturbed_satisfied(), cnf_satisfied_by_signs(&c, s.logits()));
        }
    }

    #[test]
    fn config_invariants() {
        let base = SolveConfig::default();
        assert!(base.validate().is_ok());
        assert!(SolveConfig { noise: NoiseModel::None, ..base.clone() }.validate().is_err());
        assert!(SolveConfig { semantics: Semantics::Godel, ..base.clone() }.validate().is_err());
        assert!(SolveConfig { semantics: Semantics::Godel, noise: NoiseModel::None, ..base.clone() }
            .validate()
            .is_ok());
        assert!(SolveConfig { learning_rate: 0.0, ..base.clone() }.validate().is_err());
        assert!(SolveConfig { progress_granularity: 0, ..base.clone() }.validate().is_err());
        assert_eq!("GT".parse::<Semantics>().unwrap(), Semantics::Gt);
        assert!("fuzzy".parse::<Semantics>().is_err());
    }

    #[test]
    fn curve_step_function() {
        let curve = progress_curve(&[Some(250)], 500, 100);
        let ratios: Vec<(u64, f64)> = curve.iter().map(|p| (p.epoch, p.solved_ratio)).collect();
        assert_eq!(ratios, vec![(100, 0.0), (200, 0.0), (300, 1.0), (400, 1.0), (500, 1.0)]);
        let curve = progress_curve(&[Some(0), None], 250, 100);
        assert_eq!(curve.last().unwrap().epoch, 250);
        assert!(curve.iter().all(|p| p.solved_ratio == 0.5));
        assert!(progress_curve(&[], 100, 10).is_empty());
    }

    #[test]
    fn deterministic_reports() {
        let c = cnf(3, &[&[1, 2], &[-1, 3], &[-2, -3], &[1, -3]]);
        let config = SolveConfig { samples: 8, max_epochs: 2000, master_seed: 11, ..SolveConfig::default() };
        assert_eq!(solve(&c, &config).unwrap(), solve(&c, &config).unwrap());
    }
}

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{and, not, or, var, Expr, Formula};
use crate::sign::Sign;

/// A variable with a polarity. Value of the literal under a logit `x` is `polarity * x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub var: u32,
    pub polarity: Sign,
}

impl Literal {
    #[inline]
    pub fn new(var: usize, polarity: Sign) -> Literal {
        Literal { var: var as u32, polarity }
    }

    #[inline]
    pub fn pos(var: usize) -> Literal {
        Literal::new(var, Sign::Pos)
    }

    #[inline]
    pub fn neg(var: usize) -> Literal {
        Literal::new(var, Sign::Neg)
    }

    #[inline]
    pub fn var(self) -> usize {
        self.var as usize
    }

    #[inline]
    pub fn negated(self) -> Literal {
        Literal { var: self.var, polarity: -self.polarity }
    }

    /// Gödel value of the literal given its variable's logit.
    #[inline]
    pub fn value(self, logit: f64) -> f64 {
        self.polarity.apply(logit)
    }

    /// DIMACS encoding: 1-based, negative for negated literals.
    pub fn to_dimacs(self) -> i64 {
        let id = self.var as i64 + 1;
        match self.polarity {
            Sign::Pos => id,
            Sign::Neg => -id,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity {
            Sign::Pos => write!(f, "x{}", self.var),
            Sign::Neg => write!(f, "-x{}", self.var),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CnfError {
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("clause {clause} references variable {var}, but only {num_vars} are declared")]
    VarOutOfRange { clause: usize, var: usize, num_vars: usize },
    #[error("formula has no clauses left after normalisation")]
    NoClauses,
    #[error("clause index {index} out of range ({len} clauses)")]
    ClauseIndex { index: usize, len: usize },
}

/// A conjunction of clauses stored as one flat literal array.
///
/// Construction normalises the input: duplicate literals inside a clause are merged,
/// tautological clauses (containing both `l` and `-l`) are dropped, and a clause whose
/// literal set repeats an earlier clause is dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    literals: Vec<Literal>,
    offsets: Vec<u32>,
    // `var << 1 | negated`, parallel to `literals`, for the hot loops
    codes: Vec<u32>,
    occ_offsets: Vec<u32>,
    occurrences: Vec<Occurrence>,
    dropped_tautologies: usize,
    dropped_duplicates: usize,
}

/// A clause in which a variable occurs, with the polarity it occurs with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Occurrence {
    pub clause: u32,
    pub polarity: Sign,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<Literal>>) -> Result<CnfFormula, CnfError> {
        let mut literals = Vec::with_capacity(clauses.iter().map(Vec::len).sum());
        let mut offsets = vec![0u32];
        let mut seen_clauses: HashSet<Vec<Literal>> = HashSet::new();
        let mut dropped_tautologies = 0;
        let mut dropped_duplicates = 0;

        for (ci, clause) in clauses.into_iter().enumerate() {
            if clause.is_empty() {
                return Err(CnfError::EmptyClause { clause: ci });
            }
            let mut deduped: Vec<Literal> = Vec::with_capacity(clause.len());
            let mut tautology = false;
            for lit in clause {
                if lit.var() >= num_vars {
                    return Err(CnfError::VarOutOfRange { clause: ci, var: lit.var(), num_vars });
                }
                if deduped.contains(&lit.negated()) {
                    tautology = true;
                }
                if !deduped.contains(&lit) {
                    deduped.push(lit);
                }
            }
            if tautology {
                log::warn!("dropping tautological clause {ci}");
                dropped_tautologies += 1;
                continue;
            }
            let mut key = deduped.clone();
            key.sort_unstable();
            if !seen_clauses.insert(key) {
                log::warn!("dropping duplicate clause {ci}");
                dropped_duplicates += 1;
                continue;
            }
            literals.extend_from_slice(&deduped);
            offsets.push(literals.len() as u32);
        }
        if offsets.len() == 1 {
            return Err(CnfError::NoClauses);
        }
        let (occ_offsets, occurrences) = build_occurrences(num_vars, &literals, &offsets);
        let codes = literals.iter().map(|l| l.var << 1 | (l.polarity == Sign::Neg) as u32).collect();
        Ok(CnfFormula {
            num_vars,
            literals,
            offsets,
            codes,
            occ_offsets,
            occurrences,
            dropped_tautologies,
            dropped_duplicates,
        })
    }

    /// Clauses containing `var`, in clause order.
    #[inline]
    pub fn occurrences(&self, var: usize) -> &[Occurrence] {
        &self.occurrences[self.occ_offsets[var] as usize..self.occ_offsets[var + 1] as usize]
    }

    /// Packed literals: `var << 1 | negated`.
    #[inline]
    pub(crate) fn codes(&self) -> &[u32] {
        &self.codes
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    #[inline]
    pub fn num_clauses(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn num_literals(&self) -> usize {
        self.literals.len()
    }

    #[inline]
    pub fn clause(&self, i: usize) -> &[Literal] {
        &self.literals[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn clauses(&self) -> impl ExactSizeIterator<Item = &[Literal]> + '_ {
        self.offsets
            .windows(2)
            .map(move |w| &self.literals[w[0] as usize..w[1] as usize])
    }

    /// All literals, clause after clause.
    #[inline]
    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    /// Clause boundaries into [`CnfFormula::literals`]; has `num_clauses() + 1` entries.
    #[inline]
    pub fn offsets(&self) -> &[u32] {
        &self.offsets
    }

    pub fn dropped_tautologies(&self) -> usize {
        self.dropped_tautologies
    }

    pub fn dropped_duplicates(&self) -> usize {
        self.dropped_duplicates
    }

    pub fn to_clause_vecs(&self) -> Vec<Vec<Literal>> {
        self.clauses().map(<[Literal]>::to_vec).collect()
    }

    /// Serialises in DIMACS CNF.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.num_clauses());
        for clause in self.clauses() {
            for lit in clause {
                out.push_str(&lit.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

fn build_occurrences(num_vars: usize, literals: &[Literal], offsets: &[u32]) -> (Vec<u32>, Vec<Occurrence>) {
    let mut counts = vec![0u32; num_vars + 1];
    for l in literals {
        counts[l.var() + 1] += 1;
    }
    for v in 0..num_vars {
        counts[v + 1] += counts[v];
    }
    let mut fill = counts.clone();
    let mut occ = vec![Occurrence { clause: 0, polarity: Sign::Pos }; literals.len()];
    for (c, w) in offsets.windows(2).enumerate() {
        for l in &literals[w[0] as usize..w[1] as usize] {
            let slot = &mut fill[l.var()];
            occ[*slot as usize] = Occurrence { clause: c as u32, polarity: l.polarity };
            *slot += 1;
        }
    }
    (counts, occ)
}

/// Expands a CNF into the general formula representation: a conjunction of
/// disjunctions, with unary clauses (and a unary conjunction) collapsed.
pub fn cnf_to_formula(cnf: &CnfFormula) -> Formula {
    let lit = |l: &Literal| match l.polarity {
        Sign::Pos => var(l.var()),
        Sign::Neg => not(var(l.var())),
    };
    let clauses: Vec<Expr> = cnf.clauses().map(|c| or(c.iter().map(lit))).collect();
    Formula::with_num_vars(&and(clauses), cnf.num_vars())
        .expect("normalised CNF has no empty clauses and in-range variables")
}

fn is_subset(small: &[Literal], big: &[Literal]) -> bool {
    small.iter().all(|l| big.contains(l))
}

/// Whether clause `idx` is relevant: no other clause's literals are all contained in it.
///
/// Clauses with identical literal sets cannot survive [`CnfFormula::new`]; if they could,
/// only the earliest copy would count as relevant.
pub fn is_relevant_clause(cnf: &CnfFormula, idx: usize) -> Result<bool, CnfError> {
    if idx >= cnf.num_clauses() {
        return Err(CnfError::ClauseIndex { index: idx, len: cnf.num_clauses() });
    }
    let target = cnf.clause(idx);
    Ok(!cnf.clauses().enumerate().any(|(j, other)| {
        j != idx
            && is_subset(other, target)
            && (other.len() < target.len() || j < idx)
    }))
}

/// Relevance flags for every clause.
pub fn relevant_clauses(cnf: &CnfFormula) -> Vec<bool> {
    (0..cnf.num_clauses())
        .map(|i| is_relevant_clause(cnf, i).expect("index in range"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Node;

    fn p(v: usize) -> Literal {
        Literal::pos(v)
    }
    fn n(v: usize) -> Literal {
        Literal::neg(v)
    }

    #[test]
    fn normalisation() {
        let cnf = CnfFormula::new(
            3,
            vec![vec![p(0), p(0), n(1)], vec![p(1), n(1)], vec![n(1), p(0)], vec![p(2)]],
        )
        .unwrap();
        assert_eq!(cnf.to_clause_vecs(), vec![vec![p(0), n(1)], vec![p(2)]]);
        assert_eq!(cnf.dropped_tautologies(), 1);
        assert_eq!(cnf.dropped_duplicates(), 1);
    }

    #[test]
    fn occurrence_lists() {
        let cnf = CnfFormula::new(3, vec![vec![p(0), n(1)], vec![p(1), p(0)], vec![p(2)]]).unwrap();
        let occ: Vec<(u32, Sign)> = cnf.occurrences(0).iter().map(|o| (o.clause, o.polarity)).collect();
        assert_eq!(occ, vec![(0, Sign::Pos), (1, Sign::Pos)]);
        let occ: Vec<(u32, Sign)> = cnf.occurrences(1).iter().map(|o| (o.clause, o.polarity)).collect();
        assert_eq!(occ, vec![(0, Sign::Neg), (1, Sign::Pos)]);
        assert_eq!(cnf.occurrences(2).len(), 1);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(CnfFormula::new(2, vec![vec![]]), Err(CnfError::EmptyClause { clause: 0 }));
        assert_eq!(
            CnfFormula::new(2, vec![vec![p(2)]]),
            Err(CnfError::VarOutOfRange { clause: 0, var: 2, num_vars: 2 })
        );
        assert_eq!(CnfFormula::new(1, vec![vec![p(0), n(0)]]), Err(CnfError::NoClauses));
    }

    #[test]
    fn to_formula_structure() {
        let cnf = CnfFormula::new(3, vec![vec![p(0), p(1)], vec![n(2)]]).unwrap();
        let f = cnf_to_formula(&cnf);
        assert_eq!(f.to_expr(f.root()), and([or([var(0), var(1)]), not(var(2))]));

        let single = CnfFormula::new(1, vec![vec![p(0)]]).unwrap();
        let f = cnf_to_formula(&single);
        assert_eq!(f.nodes(), &[Node::Var(0)]);

        let cnf = CnfFormula::new(3, vec![vec![p(0), n(1)], vec![p(1), p(2)]]).unwrap();
        let f = cnf_to_formula(&cnf);
        assert_eq!(
            f.to_expr(f.root()),
            and([or([var(0), not(var(1))]), or([var(1), var(2)])])
        );
    }

    #[test]
    fn relevance_subsumption_fixture() {
        // (A or B or C) and (A or B): the longer clause is subsumed
        let cnf = CnfFormula::new(3, vec![vec![p(0), p(1), p(2)], vec![p(0), p(1)]]).unwrap();
        assert!(!is_relevant_clause(&cnf, 0).unwrap());
        assert!(is_relevant_clause(&cnf, 1).unwrap());
        assert_eq!(relevant_clauses(&cnf), vec![false, true]);

        let one = CnfFormula::new(1, vec![vec![p(0)]]).unwrap();
        assert!(is_relevant_clause(&one, 0).unwrap());
        assert_eq!(
            is_relevant_clause(&one, 1),
            Err(CnfError::ClauseIndex { index: 1, len: 1 })
        );
    }

    #[test]
    fn dimacs_serialisation() {
        let cnf = CnfFormula::new(3, vec![vec![p(0), n(1)], vec![p(1), p(2)]]).unwrap();
        assert_eq!(cnf.to_dimacs(), "p cnf 3 2\n1 -2 0\n2 3 0\n");
    }
}

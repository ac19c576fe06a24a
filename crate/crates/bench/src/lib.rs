//! Fixture instances shared by the criterion benches.

use godel_trick::{parse_dimacs, CnfFormula};

pub const UF20_01: &str = include_str!("../../core/tests/data/uf20-01.cnf");
pub const UF250_02: &str = include_str!("../../core/tests/data/uf250-02.cnf");

pub fn uf20() -> CnfFormula {
    parse_dimacs(UF20_01).expect("fixture parses")
}

pub fn uf250() -> CnfFormula {
    parse_dimacs(UF250_02).expect("fixture parses")
}

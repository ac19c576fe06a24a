//! DIMACS CNF reader.
//!
//! Accepts `c` comment lines anywhere, a single `p cnf <vars> <clauses>` header before the
//! first clause, and whitespace-separated signed literals terminated by `0` (clauses may
//! span lines). A line starting with `%` ends the data section, as in the SATLIB
//! distribution files.

use thiserror::Error;

use super::cnf::{CnfError, CnfFormula, Literal};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: input is not valid UTF-8")]
    Encoding { line: usize },
    #[error("missing 'p cnf' header")]
    MissingHeader,
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: duplicate header")]
    DuplicateHeader { line: usize },
    #[error("line {line}: invalid literal '{token}'")]
    InvalidToken { line: usize, token: String },
    #[error("line {line}: variable id exceeds header ({var} > {declared})")]
    VarExceedsHeader { line: usize, var: u64, declared: usize },
    #[error("line {line}: empty clause")]
    EmptyClause { line: usize },
    #[error("line {line}: trailing clause is not terminated by 0")]
    UnterminatedClause { line: usize },
    #[error("line {line}: clause count mismatch (header declares {declared}, found {found})")]
    ClauseCountMismatch { line: usize, declared: usize, found: usize },
    #[error(transparent)]
    Cnf(#[from] CnfError),
}

pub fn parse_dimacs_bytes(bytes: &[u8]) -> Result<CnfFormula, DimacsError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_dimacs(text),
        Err(e) => {
            let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
            Err(DimacsError::Encoding { line })
        }
    }
}

pub fn parse_dimacs(text: &str) -> Result<CnfFormula, DimacsError> {
    let mut header: Option<(usize, usize)> = None;
    let mut clauses: Vec<Vec<Literal>> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();
    let mut current_start = 0;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line.starts_with('%') {
            break;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(DimacsError::DuplicateHeader { line: line_no });
            }
            header = Some(parse_header(line, line_no)?);
            continue;
        }
        let (num_vars, _) = header.ok_or(DimacsError::MissingHeader)?;
        for token in line.split_whitespace() {
            let value: i64 = token.parse().map_err(|_| DimacsError::InvalidToken {
                line: line_no,
                token: token.to_string(),
            })?;
            if value == 0 {
                if current.is_empty() {
                    return Err(DimacsError::EmptyClause { line: line_no });
                }
                clauses.push(std::mem::take(&mut current));
                continue;
            }
            if current.is_empty() {
                current_start = line_no;
            }
            let id = value.unsigned_abs();
            if id as usize > num_vars {
                return Err(DimacsError::VarExceedsHeader {
                    line: line_no,
                    var: id,
                    declared: num_vars,
                });
            }
            let var = (id - 1) as usize;
            current.push(if value > 0 { Literal::pos(var) } else { Literal::neg(var) });
        }
    }

    let (num_vars, declared) = header.ok_or(DimacsError::MissingHeader)?;
    if !current.is_empty() {
        return Err(DimacsError::UnterminatedClause { line: current_start });
    }
    if clauses.len() != declared {
        return Err(DimacsError::ClauseCountMismatch {
            line: last_line,
            declared,
            found: clauses.len(),
        });
    }
    Ok(CnfFormula::new(num_vars, clauses)?)
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize), DimacsError> {
    let malformed = |reason: &str| DimacsError::MalformedHeader {
        line: line_no,
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        ["p", "cnf", vars, clauses] => {
            let vars = vars.parse().map_err(|_| malformed("variable count is not an integer"))?;
            let clauses =
                clauses.parse().map_err(|_| malformed("clause count is not an integer"))?;
            Ok((vars, clauses))
        }
        ["p", format, ..] if *format != "cnf" => Err(malformed("only the 'cnf' format is supported")),
        _ => Err(malformed("expected 'p cnf <variables> <clauses>'")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_transcription() {
        let cnf = parse_dimacs("p cnf 3 2\n1 -2 0\n2 3 0").unwrap();
        assert_eq!(cnf.num_vars(), 3);
        assert_eq!(
            cnf.to_clause_vecs(),
            vec![vec![Literal::pos(0), Literal::neg(1)], vec![Literal::pos(1), Literal::pos(2)]]
        );
    }

    #[test]
    fn comments_and_multiline_clauses() {
        let cnf = parse_dimacs("c comment\np cnf 1 1\n1 0").unwrap();
        assert_eq!(cnf.to_clause_vecs(), vec![vec![Literal::pos(0)]]);

        let cnf = parse_dimacs("c x\np cnf 3 2\n1\n-2 0 c\n3 0\n").unwrap_err();
        assert!(matches!(cnf, DimacsError::InvalidToken { line: 4, .. }));

        let cnf = parse_dimacs("p cnf 3 2\n 1\n-2 0 3\n 0\n%\n0\n").unwrap();
        assert_eq!(cnf.num_clauses(), 2);
    }

    #[test]
    fn variable_bound() {
        let err = parse_dimacs("p cnf 2 1\n3 0").unwrap_err();
        assert_eq!(err, DimacsError::VarExceedsHeader { line: 2, var: 3, declared: 2 });
        assert!(err.to_string().contains("variable id exceeds header"));
    }

    #[test]
    fn distinct_diagnostics() {
        assert!(matches!(
            parse_dimacs("p cnf x 1\n1 0"),
            Err(DimacsError::MalformedHeader { line: 1, .. })
        ));
        assert!(matches!(
            parse_dimacs("p dnf 1 1\n1 0"),
            Err(DimacsError::MalformedHeader { line: 1, .. })
        ));
        assert_eq!(
            parse_dimacs("p cnf 2 3\n1 0\n2 0\n"),
            Err(DimacsError::ClauseCountMismatch { line: 3, declared: 3, found: 2 })
        );
        assert_eq!(
            parse_dimacs("p cnf 2 2\n1 0\n2 -1\n"),
            Err(DimacsError::UnterminatedClause { line: 3 })
        );
        assert_eq!(parse_dimacs("1 0\n"), Err(DimacsError::MissingHeader));
        assert_eq!(parse_dimacs("c only\n"), Err(DimacsError::MissingHeader));
        assert_eq!(
            parse_dimacs("p cnf 1 1\np cnf 1 1\n1 0"),
            Err(DimacsError::DuplicateHeader { line: 2 })
        );
        assert_eq!(parse_dimacs("p cnf 1 1\n0\n"), Err(DimacsError::EmptyClause { line: 2 }));
        assert_eq!(parse_dimacs_bytes(b"p cnf 1 1\n\xff 0\n"), Err(DimacsError::Encoding { line: 2 }));
    }

    #[test]
    fn normalisation_applies_after_count_check() {
        let cnf = parse_dimacs("p cnf 2 3\n1 1 -2 0\n1 -1 0\n-2 1 0\n").unwrap();
        assert_eq!(cnf.to_clause_vecs(), vec![vec![Literal::pos(0), Literal::neg(1)]]);
    }
}

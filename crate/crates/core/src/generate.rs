//! Random instance generators.
//!
//! `uniform_random_ksat` and `flat_graph_colouring` follow the construction of the
//! uf-n-m and flat-n-m benchmark families; the remaining generators feed property tests.

use std::collections::HashSet;
use std::io;
use std::path::{Path, PathBuf};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::formula::{CnfFormula, Expr, Formula, Literal};
use crate::oracle::brute_force_sat;
use crate::sign::Sign;

fn random_sign<R: Rng + ?Sized>(rng: &mut R) -> Sign {
    Sign::from_bool(rng.random())
}

/// `m` distinct clauses of `k` distinct variables each, with random polarities.
pub fn uniform_random_ksat<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, k: usize) -> CnfFormula {
    assert!(k >= 1 && k <= n, "clause width must be within 1..=n");
    let vars: Vec<usize> = (0..n).collect();
    let mut seen = HashSet::new();
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let picked: Vec<usize> = vars.choose_multiple(rng, k).copied().collect();
        let mut clause: Vec<Literal> = picked.into_iter().map(|v| Literal::new(v, random_sign(rng))).collect();
        let mut key = clause.clone();
        key.sort_unstable();
        if seen.insert(key) {
            clause.shrink_to_fit();
            clauses.push(clause);
        }
    }
    CnfFormula::new(n, clauses).expect("generated clauses are valid")
}

/// Like [`uniform_random_ksat`] but redraws until the instance is satisfiable
/// (checked exhaustively, so `n` is limited by the brute-force oracle).
pub fn satisfiable_ksat<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, k: usize) -> CnfFormula {
    loop {
        let cnf = uniform_random_ksat(rng, n, m, k);
        if brute_force_sat(&cnf).expect("instance small enough to enumerate").is_some() {
            return cnf;
        }
    }
}

/// A 3-colourable-by-construction graph colouring instance.
#[derive(Debug, Clone)]
pub struct ColouringInstance {
    pub cnf: CnfFormula,
    pub edges: Vec<(usize, usize)>,
    /// The planted colouring.
    pub colouring: Vec<usize>,
}

/// Flat graph colouring: vertices are split into `colours` equal classes, edges only join
/// different classes, are spread evenly over class pairs and keep vertex degrees level.
///
/// Variable `v * colours + c` means "vertex `v` has colour `c`". Clauses: at least one
/// colour per vertex, at most one colour per vertex, and different colours on every edge.
pub fn flat_graph_colouring<R: Rng + ?Sized>(
    rng: &mut R,
    vertices: usize,
    edges: usize,
    colours: usize,
) -> ColouringInstance {
    assert!(colours >= 2 && vertices >= colours);
    let mut order: Vec<usize> = (0..vertices).collect();
    order.shuffle(rng);
    let mut colouring = vec![0; vertices];
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); colours];
    for (i, &v) in order.iter().enumerate() {
        colouring[v] = i % colours;
        classes[i % colours].push(v);
    }
    let pairs: Vec<(usize, usize)> =
        (0..colours).flat_map(|a| (a + 1..colours).map(move |b| (a, b))).collect();
    let capacity: usize = pairs.iter().map(|&(a, b)| classes[a].len() * classes[b].len()).sum();
    assert!(edges <= capacity, "too many edges for a {colours}-partite graph");

    let mut degree = vec![0usize; vertices];
    let mut present = HashSet::new();
    let mut edge_list = Vec::with_capacity(edges);
    for e in 0..edges {
        let (a, b) = pairs[e % pairs.len()];
        // among unused edges of this class pair, take one with the lowest degree sum
        let mut candidates = Vec::new();
        let mut best = usize::MAX;
        for &u in &classes[a] {
            for &v in &classes[b] {
                let key = (u.min(v), u.max(v));
                if present.contains(&key) {
                    continue;
                }
                let d = degree[u] + degree[v];
                if d < best {
                    best = d;
                    candidates.clear();
                }
                if d == best {
                    candidates.push(key);
                }
            }
        }
        let &key = candidates.choose(rng).expect("class pair has room");
        present.insert(key);
        degree[key.0] += 1;
        degree[key.1] += 1;
        edge_list.push(key);
    }

    let x = |v: usize, c: usize| v * colours + c;
    let mut clauses = Vec::new();
    for v in 0..vertices {
        clauses.push((0..colours).map(|c| Literal::pos(x(v, c))).collect());
        for c in 0..colours {
            for d in c + 1..colours {
                clauses.push(vec![Literal::neg(x(v, c)), Literal::neg(x(v, d))]);
            }
        }
    }
    for &(u, v) in &edge_list {
        for c in 0..colours {
            clauses.push(vec![Literal::neg(x(u, c)), Literal::neg(x(v, c))]);
        }
    }
    let cnf = CnfFormula::new(vertices * colours, clauses).expect("generated clauses are valid");
    ColouringInstance { cnf, edges: edge_list, colouring }
}

/// A random CNF with clause widths in `1..=max_width`; may be unsatisfiable.
pub fn random_cnf<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize, max_width: usize) -> CnfFormula {
    let max_width = max_width.clamp(1, n);
    loop {
        let clauses: Vec<Vec<Literal>> = (0..m)
            .map(|_| {
                let w = rng.random_range(1..=max_width);
                let vars: Vec<usize> = (0..n).collect();
                let picked: Vec<usize> = vars.choose_multiple(rng, w).copied().collect();
                picked.into_iter().map(|v| Literal::new(v, random_sign(rng))).collect()
            })
            .collect();
        if let Ok(cnf) = CnfFormula::new(n, clauses) {
            return cnf;
        }
    }
}

/// A random expression over `num_vars` variables with depth at most `max_depth`.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, num_vars: usize, max_depth: usize) -> Expr {
    assert!(num_vars > 0);
    if max_depth == 0 || rng.random_bool(0.25) {
        return Expr::Var(rng.random_range(0..num_vars));
    }
    match rng.random_range(0..5) {
        0 => Expr::Not(Box::new(random_expr(rng, num_vars, max_depth - 1))),
        op => {
            let arity = rng.random_range(2..=3);
            let children = (0..arity).map(|_| random_expr(rng, num_vars, max_depth - 1)).collect();
            if op % 2 == 0 {
                Expr::And(children)
            } else {
                Expr::Or(children)
            }
        }
    }
}

/// A random formula over exactly `num_vars` declared variables.
pub fn random_formula<R: Rng + ?Sized>(rng: &mut R, num_vars: usize, max_depth: usize) -> Formula {
    Formula::with_num_vars(&random_expr(rng, num_vars, max_depth), num_vars)
        .expect("generated expression is valid")
}

/// Writes `instances` as `<stem><index>.cnf` (1-based) and returns the paths.
pub fn write_instances<'a>(
    dir: &Path,
    stem: &str,
    instances: impl IntoIterator<Item = &'a CnfFormula>,
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    instances
        .into_iter()
        .enumerate()
        .map(|(i, cnf)| {
            let path = dir.join(format!("{stem}{}.cnf", i + 1));
            std::fs::write(&path, cnf.to_dimacs())?;
            Ok(path)
        })
        .collect()
}

//! Propositional formulas.
//!
//! A [`Formula`] is stored as a post-order arena: every node's children precede it, and
//! the root is the last node. Evaluation is therefore a single forward pass, and node
//! ids double as stable keys for per-node annotations (values, winners, implicit
//! interpretations).
//!
//! Formulas are built from the owned tree type [`Expr`] and are immutable afterwards.

mod cnf;
mod dimacs;
mod sexpr;

use std::fmt;

use thiserror::Error;

pub use cnf::{
    cnf_to_formula, is_relevant_clause, relevant_clauses, CnfError, CnfFormula, Literal, Occurrence,
};
pub use dimacs::{parse_dimacs, parse_dimacs_bytes, DimacsError};
pub use sexpr::{parse_formula, ParsedFormula, SexprError};

/// Index of a node inside a [`Formula`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Var(usize),
    Not(NodeId),
    And(Vec<NodeId>),
    Or(Vec<NodeId>),
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Var(_) => &[],
            Node::Not(c) => std::slice::from_ref(c),
            Node::And(cs) | Node::Or(cs) => cs,
        }
    }
}

/// Owned formula tree used to build a [`Formula`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Var(usize),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

pub fn var(id: usize) -> Expr {
    Expr::Var(id)
}

pub fn not(e: Expr) -> Expr {
    Expr::Not(Box::new(e))
}

pub fn and(children: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::And(children.into_iter().collect())
}

pub fn or(children: impl IntoIterator<Item = Expr>) -> Expr {
    Expr::Or(children.into_iter().collect())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("connective with no operands")]
    EmptyConnective,
    #[error("variable {var} is outside the declared range of {num_vars} variables")]
    VarOutOfRange { var: usize, num_vars: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    nodes: Vec<Node>,
    num_vars: usize,
}

impl Formula {
    /// Builds a formula over `max var id + 1` variables.
    pub fn new(expr: &Expr) -> Result<Formula, FormulaError> {
        let num_vars = max_var(expr).map_or(0, |m| m + 1);
        Formula::with_num_vars(expr, num_vars)
    }

    /// Builds a formula over an explicit variable count, which may exceed the ids that
    /// actually occur (a CNF can declare variables it never uses).
    pub fn with_num_vars(expr: &Expr, num_vars: usize) -> Result<Formula, FormulaError> {
        let mut nodes = Vec::new();
        push_expr(expr, num_vars, &mut nodes)?;
        Ok(Formula { nodes, num_vars })
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn root(&self) -> NodeId {
        NodeId(self.nodes.len() as u32 - 1)
    }

    #[inline]
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    /// Nodes in post-order (children before parents).
    #[inline]
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Rebuilds the owned tree for the subformula rooted at `id`.
    pub fn to_expr(&self, id: NodeId) -> Expr {
        match self.node(id) {
            Node::Var(v) => Expr::Var(*v),
            Node::Not(c) => not(self.to_expr(*c)),
            Node::And(cs) => Expr::And(cs.iter().map(|c| self.to_expr(*c)).collect()),
            Node::Or(cs) => Expr::Or(cs.iter().map(|c| self.to_expr(*c)).collect()),
        }
    }

    /// Depth of the formula tree; a lone variable has depth 0.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            depth[i] = node
                .children()
                .iter()
                .map(|c| depth[c.index()] + 1)
                .max()
                .unwrap_or(0);
        }
        depth[self.root().index()]
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(fm: &Formula, id: NodeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match fm.node(id) {
                Node::Var(v) => write!(f, "x{v}"),
                Node::Not(c) => {
                    f.write_str("(not ")?;
                    go(fm, *c, f)?;
                    f.write_str(")")
                }
                Node::And(cs) | Node::Or(cs) => {
                    let op = if matches!(fm.node(id), Node::And(_)) { "and" } else { "or" };
                    write!(f, "({op}")?;
                    for c in cs {
                        f.write_str(" ")?;
                        go(fm, *c, f)?;
                    }
                    f.write_str(")")
                }
            }
        }
        go(self, self.root(), f)
    }
}

fn max_var(expr: &Expr) -> Option<usize> {
    match expr {
        Expr::Var(v) => Some(*v),
        Expr::Not(c) => max_var(c),
        Expr::And(cs) | Expr::Or(cs) => cs.iter().filter_map(max_var).max(),
    }
}

fn push_expr(expr: &Expr, num_vars: usize, nodes: &mut Vec<Node>) -> Result<NodeId, FormulaError> {
    let node = match expr {
        Expr::Var(v) => {
            if *v >= num_vars {
                return Err(FormulaError::VarOutOfRange { var: *v, num_vars });
            }
            Node::Var(*v)
        }
        Expr::Not(c) => Node::Not(push_expr(c, num_vars, nodes)?),
        Expr::And(cs) | Expr::Or(cs) => match cs.len() {
            0 => return Err(FormulaError::EmptyConnective),
            // unary connectives collapse to their operand
            1 => return push_expr(&cs[0], num_vars, nodes),
            _ => {
                let ids = cs
                    .iter()
                    .map(|c| push_expr(c, num_vars, nodes))
                    .collect::<Result<Vec<_>, _>>()?;
                if matches!(expr, Expr::And(_)) {
                    Node::And(ids)
                } else {
                    Node::Or(ids)
                }
            }
        },
    };
    nodes.push(node);
    Ok(NodeId(nodes.len() as u32 - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn post_order_layout() {
        let f = Formula::new(&and([or([var(0), var(1)]), not(var(2))])).unwrap();
        assert_eq!(f.num_vars(), 3);
        assert_eq!(f.len(), 6);
        assert!(matches!(f.node(f.root()), Node::And(_)));
        for id in f.node_ids() {
            for c in f.node(id).children() {
                assert!(c.index() < id.index());
            }
        }
        assert_eq!(f.depth(), 2);
        assert_eq!(f.to_string(), "(and (or x0 x1) (not x2))");
    }

    #[test]
    fn unary_connectives_collapse() {
        let f = Formula::new(&and([or([var(0)])])).unwrap();
        assert_eq!(f.nodes(), &[Node::Var(0)]);
    }

    #[test]
    fn empty_connective_rejected() {
        assert_eq!(Formula::new(&or([])), Err(FormulaError::EmptyConnective));
        assert_eq!(
            Formula::with_num_vars(&var(3), 2),
            Err(FormulaError::VarOutOfRange { var: 3, num_vars: 2 })
        );
    }

    #[test]
    fn expr_round_trip() {
        let e = and([or([var(0), not(var(1))]), or([var(1), var(2)])]);
        let f = Formula::new(&e).unwrap();
        assert_eq!(f.to_expr(f.root()), e);
    }
}

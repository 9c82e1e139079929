//! Regular-vine copula models: structure validation, compiled evaluation,
//! Rosenblatt transforms, sampling, and quadrature-based conditionals.
//!
//! A vine on d variables is a sequence of d−1 trees. Tree 1 is a spanning
//! tree on the variables; tree t+1 is a spanning tree on the edges of
//! tree t, and an edge may only join two tree-t edges that share a node
//! (the proximity condition). Each edge (a, b | D) carries a bivariate
//! copula applied to the conditional probabilities C(a | D) and C(b | D);
//! all copulas are constant in their conditioning values (the density is
//! built under the simplifying assumption).
//!
//! Variables are numbered 1..=d in [`VineEdge`] and everywhere in the
//! public API; data vectors `u: &[f64]` store variable i at index i−1.

mod conditional;
mod plan;

pub use conditional::{conditional_cdf_quadrature, conditional_logpdf_quadrature};
pub use plan::{EvalPlan, PartialPlan};

use crate::error::{Error, Result, StructureViolation};
use crate::paircop::PairCopula;
use std::collections::{BTreeSet, HashMap, HashSet};

/// One edge of a vine tree: conditioned pair, conditioning set, and the
/// pair copula attached to it. Variable ids are 1-based.
#[derive(Clone, Debug, PartialEq)]
pub struct VineEdge {
    pub conditioned: (usize, usize),
    pub conditioning: Vec<usize>,
    pub copula: PairCopula,
}

impl VineEdge {
    pub fn new(a: usize, b: usize, conditioning: Vec<usize>, copula: PairCopula) -> Self {
        VineEdge { conditioned: (a, b), conditioning, copula }
    }

    /// Human-readable label, e.g. `(5,2|3,4)`.
    pub fn label(&self) -> String {
        let (a, b) = self.conditioned;
        if self.conditioning.is_empty() {
            format!("({a},{b})")
        } else {
            let d: Vec<String> = self.conditioning.iter().map(|v| v.to_string()).collect();
            format!("({a},{b}|{})", d.join(","))
        }
    }

    /// Conditioned pair plus conditioning set.
    fn constraint_set(&self) -> BTreeSet<usize> {
        let mut s: BTreeSet<usize> = self.conditioning.iter().copied().collect();
        s.insert(self.conditioned.0);
        s.insert(self.conditioned.1);
        s
    }
}

/// A validated vine specification: dimension and the d−1 trees of edges.
#[derive(Clone, Debug, PartialEq)]
pub struct VineSpec {
    d: usize,
    trees: Vec<Vec<VineEdge>>,
}

impl VineSpec {
    /// Validate the tree sequence and build the specification.
    pub fn new(d: usize, trees: Vec<Vec<VineEdge>>) -> Result<Self> {
        validate_structure(d, &trees)?;
        Ok(VineSpec { d, trees })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn trees(&self) -> &[Vec<VineEdge>] {
        &self.trees
    }

    /// Total number of edges, d(d−1)/2.
    pub fn edge_count(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    /// Compile into an evaluation plan.
    pub fn compile(&self) -> Result<EvalPlan> {
        EvalPlan::compile(self)
    }
}

fn violation(tree: usize, edge: String, rule: impl Into<String>) -> Error {
    Error::Structure(StructureViolation { tree, edge, rule: rule.into() })
}

/// Check the full regular-vine structure: tree sizes, conditioning-set
/// sizes, spanning-tree shape of every level, and the proximity condition.
/// The first offending edge is named in the error.
fn validate_structure(d: usize, trees: &[Vec<VineEdge>]) -> Result<()> {
    if d < 2 {
        return Err(violation(0, String::new(), format!("dimension {d} < 2")));
    }
    if trees.len() != d - 1 {
        return Err(violation(
            0,
            String::new(),
            format!("expected {} trees for dimension {d}, got {}", d - 1, trees.len()),
        ));
    }
    for (t, tree) in trees.iter().enumerate() {
        let want = d - 1 - t;
        if tree.len() != want {
            return Err(violation(
                t + 1,
                String::new(),
                format!("expected {want} edges, got {}", tree.len()),
            ));
        }
        for e in tree {
            let (a, b) = e.conditioned;
            if a == b {
                return Err(violation(t + 1, e.label(), "conditioned pair repeats a variable"));
            }
            for &v in [a, b].iter().chain(&e.conditioning) {
                if v < 1 || v > d {
                    return Err(violation(t + 1, e.label(), format!("variable {v} outside 1..={d}")));
                }
            }
            if e.conditioning.len() != t {
                return Err(violation(
                    t + 1,
                    e.label(),
                    format!("conditioning set must have {t} variable(s)"),
                ));
            }
            let dset: BTreeSet<usize> = e.conditioning.iter().copied().collect();
            if dset.len() != e.conditioning.len() {
                return Err(violation(t + 1, e.label(), "conditioning set repeats a variable"));
            }
            if dset.contains(&a) || dset.contains(&b) {
                return Err(violation(t + 1, e.label(), "conditioned variable also conditioning"));
            }
        }
    }

    // Tree 1 must span the variables.
    check_spanning(trees[0].len() + 1, &trees[0], 1, |e| {
        (e.conditioned.0 - 1, e.conditioned.1 - 1)
    })?;

    // Each later tree spans the previous tree's edges, joining only edges
    // that share a node (proximity). Edge identity is tracked through
    // constraint sets, which are unique within a valid tree.
    for t in 1..trees.len() {
        // nodes of tree t+1 = edges of tree t, addressed by constraint set
        let mut by_constraint: HashMap<BTreeSet<usize>, usize> = HashMap::new();
        for (i, e) in trees[t - 1].iter().enumerate() {
            if by_constraint.insert(e.constraint_set(), i).is_some() {
                return Err(violation(t, e.label(), "duplicate edge (same constraint set)"));
            }
        }
        let mut resolved: Vec<(usize, usize)> = Vec::with_capacity(trees[t].len());
        for e in &trees[t] {
            let dset: BTreeSet<usize> = e.conditioning.iter().copied().collect();
            let half = |v: usize| -> Result<usize> {
                let mut s = dset.clone();
                s.insert(v);
                by_constraint.get(&s).copied().ok_or_else(|| {
                    violation(
                        t + 1,
                        e.label(),
                        format!(
                            "no tree-{t} edge has constraint set {{{}}}",
                            s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
                        ),
                    )
                })
            };
            let ia = half(e.conditioned.0)?;
            let ib = half(e.conditioned.1)?;
            // proximity: the two parent edges must share a node of tree t
            let ea = &trees[t - 1][ia];
            let eb = &trees[t - 1][ib];
            let na: HashSet<BTreeSet<usize>> = edge_nodes(ea, t - 1);
            let nb: HashSet<BTreeSet<usize>> = edge_nodes(eb, t - 1);
            if na.is_disjoint(&nb) {
                return Err(violation(
                    t + 1,
                    e.label(),
                    format!("parents {} and {} share no node", ea.label(), eb.label()),
                ));
            }
            resolved.push((ia, ib));
        }
        check_spanning(trees[t - 1].len(), &resolved, t + 1, |&(ia, ib)| (ia, ib))?;
    }
    Ok(())
}

/// The two nodes a tree-t edge joins, identified structurally: for tree 0
/// the nodes are variables; deeper down they are the constraint sets of
/// the parent edges.
fn edge_nodes(e: &VineEdge, t: usize) -> HashSet<BTreeSet<usize>> {
    let mut out = HashSet::new();
    if t == 0 {
        out.insert(BTreeSet::from([e.conditioned.0]));
        out.insert(BTreeSet::from([e.conditioned.1]));
    } else {
        for v in [e.conditioned.0, e.conditioned.1] {
            let mut s: BTreeSet<usize> = e.conditioning.iter().copied().collect();
            s.insert(v);
            out.insert(s);
        }
    }
    out
}

/// Union-find acyclicity/connectivity check: `n` nodes, edges mapped to
/// node index pairs by `ends`. With n−1 edges, acyclic ⇔ spanning.
fn check_spanning<E>(
    n: usize,
    edges: &[E],
    tree_no: usize,
    ends: impl Fn(&E) -> (usize, usize),
) -> Result<()> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in edges {
        let (a, b) = ends(e);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return Err(violation(tree_no, String::new(), "edges form a cycle"));
        }
        parent[ra] = rb;
    }
    Ok(())
}

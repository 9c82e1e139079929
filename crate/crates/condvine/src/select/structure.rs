//! Automatic vine construction from pseudo-observations.
//!
//! [`dissmann_fit`] builds the first tree as a maximum spanning tree on
//! absolute empirical Kendall taus and every later tree the same way on
//! proximity-admissible edges, fitting a pair copula to each edge and
//! propagating pseudo-conditional columns through the fitted h-functions.
//! [`pc_forward_structure`] replaces only the first-tree choice: variables
//! are attached one at a time around a response, each step comparing the
//! best plain correlation against the best single-variable partial
//! correlation on normal scores.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gof::kendall_tau;
use crate::paircop::{Family, PairCopula};
use crate::vine::{VineEdge, VineSpec};

use super::fit::{fit_pair, FitOptions, PairFit};
use super::pcorr::{normal_scores, partial_correlation, pearson_correlation};
use super::PseudoData;

/// Pseudo-conditional columns are nudged off the boundary before refitting.
const COL_EPS: f64 = 1e-12;

/// One fitted edge of the vine, in construction order.
#[derive(Debug, Clone)]
pub struct EdgeFit {
    /// Tree level, 1-based.
    pub tree: usize,
    /// Conditioned pair, ascending variable labels.
    pub conditioned: (usize, usize),
    /// Conditioning set, ascending.
    pub conditioning: Vec<usize>,
    pub family: Family,
    pub rotation: u16,
    pub parameters: Vec<f64>,
    /// Empirical Kendall tau of the edge's (pseudo-)observations.
    pub tau_hat: f64,
    /// p-value of the edge's independence pre-test.
    pub independence_p: f64,
    pub loglik: f64,
    pub aic: f64,
}

/// One step of the forward structure heuristic.
#[derive(Debug, Clone)]
pub struct PcDecision {
    /// Variable attached in this step.
    pub variable: usize,
    /// Node it is linked to: the response for a direct attachment, an
    /// earlier covariate otherwise.
    pub attached_to: usize,
    /// True when the partial-correlation branch won.
    pub via_partial: bool,
    /// The winning absolute (partial) correlation.
    pub score: f64,
}

/// A fully fitted vine: the structure with its copulas plus per-edge and
/// aggregate fit statistics.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// The fitted model, already validated.
    pub spec: VineSpec,
    /// Per-edge statistics, trees in order, edges sorted within each tree.
    pub edges: Vec<EdgeFit>,
    /// Sum of absolute empirical taus per tree.
    pub tree_weights: Vec<f64>,
    pub total_loglik: f64,
    pub total_aic: f64,
    /// Attachment trace of the forward heuristic; empty for
    /// [`dissmann_fit`].
    pub pc_decisions: Vec<PcDecision>,
    /// Skipped candidates and other per-edge remarks.
    pub notes: Vec<String>,
}

/// Greedy sequential vine fit: maximum spanning trees on absolute
/// empirical Kendall taus, family selection per edge by AIC.
pub fn dissmann_fit(pdata: &PseudoData, options: &FitOptions) -> Result<FitReport> {
    let d = pdata.dim();
    if d < 3 {
        return Err(Error::InvalidArgument(format!(
            "vine construction needs at least 3 variables, got {d}"
        )));
    }
    let mut w = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in (i + 1)..d {
            let t = kendall_tau(pdata.col(i), pdata.col(j)).abs();
            w[i][j] = t;
            w[j][i] = t;
        }
    }
    let first = max_spanning_tree_complete(d, &w);
    fit_with_first_tree(pdata, &first, options, Vec::new())
}

/// Response-centred vine fit: the first tree is grown around `response`
/// (1-based) by the direct-versus-partial correlation rule, later trees
/// and all pair fits proceed as in [`dissmann_fit`].
///
/// Each step computes, on normal scores, the best plain correlation
/// between the response and an unattached variable and the best partial
/// correlation given one variable already attached directly to the
/// response. A winning plain correlation attaches the variable to the
/// response; a winning partial correlation hangs it off the conditioning
/// variable instead. Ties go to the direct branch; within a branch, to the
/// earlier-attached conditioning variable and the smaller variable label.
pub fn pc_forward_structure(
    pdata: &PseudoData,
    response: usize,
    options: &FitOptions,
) -> Result<FitReport> {
    let d = pdata.dim();
    if d < 3 {
        return Err(Error::InvalidArgument(format!(
            "vine construction needs at least 3 variables, got {d}"
        )));
    }
    if response == 0 || response > d {
        return Err(Error::InvalidArgument(format!(
            "response index {response} out of range 1..={d}"
        )));
    }
    let mut scores = Vec::with_capacity(d);
    for k in 0..d {
        scores.push(normal_scores(pdata.col(k))?);
    }
    let r = response;
    // Covariates attached directly to the response, in attachment order.
    let mut direct: Vec<usize> = Vec::new();
    let mut open: Vec<usize> = (1..=d).filter(|v| *v != r).collect();
    let mut first = Vec::with_capacity(d - 1);
    let mut decisions = Vec::with_capacity(d - 1);
    while !open.is_empty() {
        let mut best_direct = (-1.0, 0usize);
        for &u in &open {
            let c = pearson_correlation(&scores[r - 1], &scores[u - 1])?.abs();
            if c > best_direct.0 {
                best_direct = (c, u);
            }
        }
        let mut best_partial = (-1.0, 0usize, 0usize);
        for &a in &direct {
            for &u in &open {
                let c = partial_correlation(&scores, r, u, &[a])?.abs();
                if c > best_partial.0 {
                    best_partial = (c, u, a);
                }
            }
        }
        if best_direct.0 >= best_partial.0 {
            let u = best_direct.1;
            first.push((r.min(u), r.max(u)));
            decisions.push(PcDecision {
                variable: u,
                attached_to: r,
                via_partial: false,
                score: best_direct.0,
            });
            direct.push(u);
            open.retain(|v| *v != u);
        } else {
            let (score, u, a) = best_partial;
            first.push((a.min(u), a.max(u)));
            decisions.push(PcDecision {
                variable: u,
                attached_to: a,
                via_partial: true,
                score,
            });
            open.retain(|v| *v != u);
        }
    }
    fit_with_first_tree(pdata, &first, options, decisions)
}

/// Maximum spanning tree of the complete graph on `d` vertices by Prim's
/// method; equal weights are broken toward the lexicographically smallest
/// variable pair. Returns 1-based pairs, ascending within each pair,
/// sorted.
fn max_spanning_tree_complete(d: usize, w: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let mut in_tree = vec![false; d];
    in_tree[0] = true;
    let mut edges = Vec::with_capacity(d - 1);
    for _ in 1..d {
        let mut best: Option<(f64, usize, usize)> = None;
        for u in 0..d {
            if !in_tree[u] {
                continue;
            }
            for v in 0..d {
                if in_tree[v] {
                    continue;
                }
                let (a, b) = (u.min(v), u.max(v));
                let take = match best {
                    None => true,
                    Some((bw, ba, bb)) => {
                        w[u][v] > bw || (w[u][v] == bw && (a, b) < (ba, bb))
                    }
                };
                if take {
                    best = Some((w[u][v], a, b));
                }
            }
        }
        let (_, a, b) = best.expect("complete graph stays connected");
        in_tree[a] = true;
        in_tree[b] = true;
        edges.push((a + 1, b + 1));
    }
    edges.sort_unstable();
    edges
}

/// A node of the tree being extended: a fitted edge with the two
/// pseudo-conditional columns it passes upward.
struct NodeCols {
    conditioned: (usize, usize),
    conditioning: Vec<usize>,
    /// Identity of this node's endpoints in the previous level (variable
    /// labels for level-1 edges, node indices above), used for the
    /// proximity test.
    prev: (usize, usize),
    /// C(conditioned.0 | rest) per observation.
    col_first: Vec<f64>,
    /// C(conditioned.1 | rest) per observation.
    col_second: Vec<f64>,
}

impl NodeCols {
    fn constraint(&self) -> Vec<usize> {
        let mut cs = self.conditioning.clone();
        cs.push(self.conditioned.0);
        cs.push(self.conditioned.1);
        cs.sort_unstable();
        cs
    }

    fn column_for(&self, var: usize) -> Result<&[f64]> {
        if var == self.conditioned.0 {
            Ok(&self.col_first)
        } else if var == self.conditioned.1 {
            Ok(&self.col_second)
        } else {
            Err(Error::InvalidArgument(format!(
                "internal: variable {var} is not conditioned by node {:?}|{:?}",
                self.conditioned, self.conditioning
            )))
        }
    }

    fn shares_prev(&self, other: &Self) -> bool {
        let (a, b) = self.prev;
        let (c, d) = other.prev;
        a == c || a == d || b == c || b == d
    }
}

/// An admissible edge of the tree under construction, weighted and keyed
/// for deterministic selection.
struct Candidate {
    i: usize,
    j: usize,
    /// Conditioned pair, ascending.
    a: usize,
    b: usize,
    /// Conditioning set, ascending.
    cond: Vec<usize>,
    weight: f64,
}

impl Candidate {
    fn key(&self) -> (usize, usize, &[usize]) {
        (self.a, self.b, &self.cond)
    }
}

/// Fits all trees given a chosen first tree. `first` must be a spanning
/// tree on the variables, pairs ascending.
fn fit_with_first_tree(
    pdata: &PseudoData,
    first: &[(usize, usize)],
    options: &FitOptions,
    pc_decisions: Vec<PcDecision>,
) -> Result<FitReport> {
    let d = pdata.dim();
    validate_spanning_tree(d, first)?;

    let mut report_edges: Vec<EdgeFit> = Vec::new();
    let mut tree_weights: Vec<f64> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let mut vine_trees: Vec<Vec<VineEdge>> = Vec::new();

    // Tree 1: fit the chosen edges on the original columns.
    let mut sorted_first = first.to_vec();
    sorted_first.sort_unstable();
    let fits: Vec<Result<PairFit>> = sorted_first
        .par_iter()
        .map(|&(a, b)| fit_pair(pdata.col(a - 1), pdata.col(b - 1), options))
        .collect();

    let mut nodes: Vec<NodeCols> = Vec::with_capacity(d - 1);
    let mut level_edges: Vec<VineEdge> = Vec::new();
    let mut weight = 0.0;
    for (&(a, b), fit) in sorted_first.iter().zip(fits) {
        let fit = fit?;
        weight += fit.tau_hat.abs();
        collect_notes(&mut notes, 1, (a, b), &[], &fit);
        report_edges.push(edge_fit_from(1, (a, b), Vec::new(), &fit));
        level_edges.push(VineEdge::new(a, b, Vec::new(), fit.copula.clone()));
        nodes.push(make_node(
            (a, b),
            Vec::new(),
            (a - 1, b - 1),
            pdata.col(a - 1),
            pdata.col(b - 1),
            &fit.copula,
        ));
    }
    tree_weights.push(weight);
    vine_trees.push(level_edges);

    // Trees 2..d-1: maximum spanning tree on proximity-admissible pairs.
    for level in 2..d {
        let mut cands: Vec<Candidate> = Vec::new();
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                if !nodes[i].shares_prev(&nodes[j]) {
                    continue;
                }
                let cs_i = nodes[i].constraint();
                let cs_j = nodes[j].constraint();
                let (x, cond) = split_constraint(&cs_i, &cs_j)?;
                let (y, _) = split_constraint(&cs_j, &cs_i)?;
                let (a, b) = (x.min(y), x.max(y));
                let ca = node_column(&nodes, i, j, a)?;
                let cb = node_column(&nodes, i, j, b)?;
                let weight = kendall_tau(ca, cb).abs();
                cands.push(Candidate { i, j, a, b, cond, weight });
            }
        }
        let chosen = max_spanning_tree_restricted(nodes.len(), &cands)?;

        let prepared: Vec<(&Candidate, &[f64], &[f64])> = chosen
            .iter()
            .map(|&c| {
                let cand = &cands[c];
                let ca = node_column(&nodes, cand.i, cand.j, cand.a)?;
                let cb = node_column(&nodes, cand.i, cand.j, cand.b)?;
                Ok((cand, ca, cb))
            })
            .collect::<Result<_>>()?;
        let fits: Vec<Result<PairFit>> = prepared
            .par_iter()
            .map(|(_, ca, cb)| fit_pair(ca, cb, options))
            .collect();

        let mut level_edges = Vec::new();
        let mut next_nodes = Vec::new();
        let mut weight = 0.0;
        for ((cand, ca, cb), fit) in prepared.iter().zip(fits) {
            let fit = fit?;
            weight += fit.tau_hat.abs();
            collect_notes(&mut notes, level, (cand.a, cand.b), &cand.cond, &fit);
            report_edges.push(edge_fit_from(level, (cand.a, cand.b), cand.cond.clone(), &fit));
            level_edges.push(VineEdge::new(
                cand.a,
                cand.b,
                cand.cond.clone(),
                fit.copula.clone(),
            ));
            next_nodes.push(make_node(
                (cand.a, cand.b),
                cand.cond.clone(),
                (cand.i, cand.j),
                ca,
                cb,
                &fit.copula,
            ));
        }
        tree_weights.push(weight);
        vine_trees.push(level_edges);
        nodes = next_nodes;
    }

    let total_loglik = report_edges.iter().map(|e| e.loglik).sum();
    let total_aic = report_edges.iter().map(|e| e.aic).sum();
    let spec = VineSpec::new(d, vine_trees)?;
    Ok(FitReport {
        spec,
        edges: report_edges,
        tree_weights,
        total_loglik,
        total_aic,
        pc_decisions,
        notes,
    })
}

fn validate_spanning_tree(d: usize, edges: &[(usize, usize)]) -> Result<()> {
    if edges.len() != d - 1 {
        return Err(Error::InvalidArgument(format!(
            "first tree needs {} edges for {d} variables, got {}",
            d - 1,
            edges.len()
        )));
    }
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    for &(a, b) in edges {
        if a == 0 || b == 0 || a > d || b > d || a == b {
            return Err(Error::InvalidArgument(format!(
                "invalid first-tree edge ({a}, {b}) for {d} variables"
            )));
        }
        let (ra, rb) = (find(&mut parent, a - 1), find(&mut parent, b - 1));
        if ra == rb {
            return Err(Error::InvalidArgument(format!(
                "first tree contains a cycle through edge ({a}, {b})"
            )));
        }
        parent[ra] = rb;
    }
    Ok(())
}

/// The lone element of `cs_a` missing from `cs_b`, plus the intersection.
/// Both inputs are sorted constraint sets whose sizes differ by zero.
fn split_constraint(cs_a: &[usize], cs_b: &[usize]) -> Result<(usize, Vec<usize>)> {
    let mut only = None;
    let mut both = Vec::with_capacity(cs_a.len() - 1);
    for &v in cs_a {
        if cs_b.binary_search(&v).is_ok() {
            both.push(v);
        } else if only.replace(v).is_some() {
            return Err(Error::InvalidArgument(
                "internal: proximity pair differs in more than one variable".into(),
            ));
        }
    }
    match only {
        Some(x) => Ok((x, both)),
        None => Err(Error::InvalidArgument(
            "internal: proximity pair has identical constraint sets".into(),
        )),
    }
}

/// Column of variable `var` from whichever of the two nodes conditions it.
fn node_column<'a>(nodes: &'a [NodeCols], i: usize, j: usize, var: usize) -> Result<&'a [f64]> {
    nodes[i].column_for(var).or_else(|_| nodes[j].column_for(var))
}

/// New node for the next level: h-function columns of the fitted copula.
fn make_node(
    conditioned: (usize, usize),
    conditioning: Vec<usize>,
    prev: (usize, usize),
    col_a: &[f64],
    col_b: &[f64],
    cop: &PairCopula,
) -> NodeCols {
    let n = col_a.len();
    let mut first = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    for k in 0..n {
        // C(a | b, rest) and C(b | a, rest) through the fitted h-functions.
        first.push(cop.hfunc2(col_a[k], col_b[k]).clamp(COL_EPS, 1.0 - COL_EPS));
        second.push(cop.hfunc1(col_a[k], col_b[k]).clamp(COL_EPS, 1.0 - COL_EPS));
    }
    NodeCols {
        conditioned,
        conditioning,
        prev,
        col_first: first,
        col_second: second,
    }
}

fn edge_fit_from(
    tree: usize,
    conditioned: (usize, usize),
    conditioning: Vec<usize>,
    fit: &PairFit,
) -> EdgeFit {
    EdgeFit {
        tree,
        conditioned,
        conditioning,
        family: fit.copula.family(),
        rotation: fit.copula.rotation(),
        parameters: fit.copula.params().to_vec(),
        tau_hat: fit.tau_hat,
        independence_p: fit.independence_p,
        loglik: fit.loglik,
        aic: fit.aic,
    }
}

fn collect_notes(
    notes: &mut Vec<String>,
    tree: usize,
    conditioned: (usize, usize),
    conditioning: &[usize],
    fit: &PairFit,
) {
    for note in &fit.notes {
        if note.contains("skipped") || note.contains("falling back") {
            let label = if conditioning.is_empty() {
                format!("({},{})", conditioned.0, conditioned.1)
            } else {
                let cs: Vec<String> = conditioning.iter().map(|v| v.to_string()).collect();
                format!("({},{} | {})", conditioned.0, conditioned.1, cs.join(","))
            };
            notes.push(format!("tree {tree} edge {label}: {note}"));
        }
    }
}

/// Prim's method over an explicit candidate list; ties go to the smallest
/// (conditioned pair, conditioning set) key. Returns indices into `cands`.
fn max_spanning_tree_restricted(n_nodes: usize, cands: &[Candidate]) -> Result<Vec<usize>> {
    if n_nodes == 1 {
        return Ok(Vec::new());
    }
    let mut in_tree = vec![false; n_nodes];
    in_tree[0] = true;
    let mut chosen = Vec::with_capacity(n_nodes - 1);
    for _ in 1..n_nodes {
        let mut best: Option<usize> = None;
        for (c, cand) in cands.iter().enumerate() {
            if in_tree[cand.i] == in_tree[cand.j] {
                continue;
            }
            let take = match best {
                None => true,
                Some(b) => {
                    let cur = &cands[b];
                    cand.weight > cur.weight
                        || (cand.weight == cur.weight && cand.key() < cur.key())
                }
            };
            if take {
                best = Some(c);
            }
        }
        let Some(b) = best else {
            return Err(Error::InvalidArgument(
                "internal: proximity graph is disconnected".into(),
            ));
        };
        in_tree[cands[b].i] = true;
        in_tree[cands[b].j] = true;
        chosen.push(b);
    }
    // Deterministic output order: by conditioned pair then conditioning.
    chosen.sort_by(|&x, &y| cands[x].key().cmp(&cands[y].key()));
    Ok(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::special::norm_ppf;
    use crate::select::pseudo_obs;
    use crate::vine::testutil::{cop, dvine3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gauss(rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let u: f64 = rng.gen();
            if u > 0.0 && u < 1.0 {
                return norm_ppf(u);
            }
        }
    }

    /// Correlated gaussian columns from an explicit lower-triangular
    /// factor, one row of innovations per observation.
    fn gaussian_columns(chol: &[Vec<f64>], n: usize, seed: u64) -> Vec<Vec<f64>> {
        let d = chol.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols = vec![Vec::with_capacity(n); d];
        for _ in 0..n {
            let e: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
            for k in 0..d {
                let v: f64 = (0..=k).map(|m| chol[k][m] * e[m]).sum();
                cols[k].push(v);
            }
        }
        cols
    }

    fn gaussian_only() -> FitOptions {
        FitOptions::with_families(&[Family::Gaussian])
    }

    #[test]
    fn recovers_a_dvine_from_its_own_samples() {
        // A path vine with a deliberately weak top edge: the unconditional
        // (1,3) dependence induced through variable 2 stays well below the
        // direct (1,2) and (2,3) taus, so the maximum spanning tree of the
        // generating model is the generating path itself.
        let spec = VineSpec::new(
            3,
            vec![
                vec![
                    VineEdge::new(1, 2, Vec::new(), cop(Family::Clayton, 0, &[2.0])),
                    VineEdge::new(2, 3, Vec::new(), cop(Family::Gumbel, 0, &[1.7])),
                ],
                vec![VineEdge::new(1, 3, vec![2], cop(Family::Gaussian, 0, &[0.15]))],
            ],
        )
        .unwrap();
        let plan = spec.compile().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let rows = plan.sample(5000, &mut rng);
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|k| rows.iter().map(|r| r[k]).collect())
            .collect();
        let pdata = pseudo_obs(&cols).unwrap();
        let options = FitOptions::with_families(&[
            Family::Gaussian,
            Family::Clayton,
            Family::Gumbel,
            Family::Frank,
        ]);
        let report = dissmann_fit(&pdata, &options).unwrap();

        // Structure: the strongest taus sit on (1,2) and (2,3).
        let t1: Vec<(usize, usize)> = report
            .edges
            .iter()
            .filter(|e| e.tree == 1)
            .map(|e| e.conditioned)
            .collect();
        assert_eq!(t1, vec![(1, 2), (2, 3)]);
        let top = report.edges.iter().find(|e| e.tree == 2).unwrap();
        assert_eq!(top.conditioned, (1, 3));
        assert_eq!(top.conditioning, vec![2]);

        // Self-consistency: each fitted copula's tau is close to the
        // generating copula's tau.
        let true_taus = [
            ((1, 2), 2.0 / 4.0),        // clayton theta 2: theta/(theta+2)
            ((2, 3), 1.0 - 1.0 / 1.7),  // gumbel theta 1.7
            ((1, 3), 2.0 * 0.15_f64.asin() / std::f64::consts::PI), // gaussian 0.15
        ];
        for (pair, want) in true_taus {
            let e = report.edges.iter().find(|e| e.conditioned == pair).unwrap();
            let cop = PairCopula::new(e.family, e.rotation, e.parameters.clone()).unwrap();
            let got = cop.tau();
            assert!(
                (got - want).abs() < 0.05,
                "edge {pair:?}: fitted tau {got} vs generating tau {want}"
            );
        }
        assert!(report.spec.compile().is_ok());
        assert_eq!(report.tree_weights.len(), 2);
        assert!(report.total_loglik > 0.0);
        assert!((report.total_aic - (-2.0 * report.total_loglik + 6.0)).abs() < 1e-9);
    }

    /// All spanning trees on d vertices via Prüfer sequences, as 1-based
    /// ascending pairs.
    fn all_spanning_trees(d: usize) -> Vec<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        let total = (d as u64).pow(d as u32 - 2);
        for code in 0..total {
            let mut seq = Vec::with_capacity(d - 2);
            let mut c = code;
            for _ in 0..d - 2 {
                seq.push((c % d as u64) as usize);
                c /= d as u64;
            }
            let mut degree = vec![1usize; d];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut edges = Vec::with_capacity(d - 1);
            let mut deg = degree.clone();
            for &s in &seq {
                let leaf = (0..d).find(|&v| deg[v] == 1).unwrap();
                edges.push((leaf.min(s) + 1, leaf.max(s) + 1));
                deg[leaf] = 0;
                deg[s] -= 1;
            }
            let rest: Vec<usize> = (0..d).filter(|&v| deg[v] == 1).collect();
            edges.push((rest[0].min(rest[1]) + 1, rest[0].max(rest[1]) + 1));
            edges.sort_unstable();
            out.push(edges);
        }
        out
    }

    #[test]
    fn first_tree_matches_exhaustive_maximum_spanning_tree() {
        for seed in 0..50u64 {
            let d = 3 + (seed % 3) as usize;
            let n = 60;
            let mut rng = ChaCha8Rng::seed_from_u64(10_000 + seed);
            // Random mixing of independent innovations, diagonally boosted
            // so no column is a near-copy of another.
            let mut mix = vec![vec![0.0; d]; d];
            for (k, row) in mix.iter_mut().enumerate() {
                for (m, w) in row.iter_mut().enumerate() {
                    *w = rng.gen_range(-1.0..1.0);
                    if m == k {
                        *w += 1.5;
                    }
                }
            }
            let mut cols = vec![Vec::with_capacity(n); d];
            for _ in 0..n {
                let e: Vec<f64> = (0..d).map(|_| gauss(&mut rng)).collect();
                for k in 0..d {
                    let v: f64 = (0..d).map(|m| mix[k][m] * e[m]).sum();
                    cols[k].push(v);
                }
            }
            let pdata = pseudo_obs(&cols).unwrap();

            let mut tau = vec![vec![0.0; d]; d];
            for i in 0..d {
                for j in (i + 1)..d {
                    let t = kendall_tau(pdata.col(i), pdata.col(j)).abs();
                    tau[i][j] = t;
                    tau[j][i] = t;
                }
            }
            let tree_weight = |edges: &[(usize, usize)]| -> f64 {
                edges.iter().map(|&(a, b)| tau[a - 1][b - 1]).sum()
            };
            let best = all_spanning_trees(d)
                .iter()
                .map(|t| tree_weight(t))
                .fold(f64::NEG_INFINITY, f64::max);

            let report = dissmann_fit(&pdata, &gaussian_only()).unwrap();
            assert!(
                (report.tree_weights[0] - best).abs() < 1e-9,
                "seed {seed}: greedy weight {} vs exhaustive {}",
                report.tree_weights[0],
                best
            );
        }
    }

    #[test]
    fn independent_data_yields_an_all_independence_vine() {
        let mut rng = ChaCha8Rng::seed_from_u64(321);
        let n = 1500;
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..n).map(|_| gauss(&mut rng)).collect())
            .collect();
        let pdata = pseudo_obs(&cols).unwrap();
        let report = dissmann_fit(&pdata, &FitOptions::default()).unwrap();
        for e in &report.edges {
            assert_eq!(
                e.family,
                Family::Independence,
                "edge {:?}|{:?} escaped the pre-test",
                e.conditioned,
                e.conditioning
            );
        }
        assert_eq!(report.total_aic, 0.0);
        assert_eq!(report.total_loglik, 0.0);
        assert!(report.spec.compile().is_ok());
    }

    #[test]
    fn reports_are_deterministic() {
        let plan = dvine3().compile().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(888);
        let rows = plan.sample(400, &mut rng);
        let cols: Vec<Vec<f64>> = (0..3)
            .map(|k| rows.iter().map(|r| r[k]).collect())
            .collect();
        let pdata = pseudo_obs(&cols).unwrap();
        let options = FitOptions::with_families(&[
            Family::Gaussian,
            Family::Clayton,
            Family::Frank,
        ]);
        let r1 = dissmann_fit(&pdata, &options).unwrap();
        let r2 = dissmann_fit(&pdata, &options).unwrap();
        assert_eq!(r1.edges.len(), r2.edges.len());
        for (a, b) in r1.edges.iter().zip(&r2.edges) {
            assert_eq!(a.conditioned, b.conditioned);
            assert_eq!(a.family, b.family);
            assert_eq!(a.rotation, b.rotation);
            assert_eq!(a.parameters, b.parameters);
            assert_eq!(a.aic.to_bits(), b.aic.to_bits());
        }
    }

    #[test]
    fn forward_structure_builds_a_star_when_directs_dominate() {
        // Response correlates 0.60/0.55/0.50 with three covariates that
        // correlate 0.8 among themselves; every candidate partial
        // correlation is below every remaining direct correlation, so the
        // first tree is a star around the response.
        let chol = vec![
            vec![1.0],
            vec![0.60, 0.8],
            vec![0.55, 0.5875, 0.5935855035291883],
            vec![0.50, 0.625, 0.2658631301838050, 0.5373004708809300],
        ];
        let cols = gaussian_columns(&chol, 4000, 20_20);
        let pdata = pseudo_obs(&cols).unwrap();
        let report = pc_forward_structure(&pdata, 1, &gaussian_only()).unwrap();
        assert_eq!(report.pc_decisions.len(), 3);
        for (dec, want_var) in report.pc_decisions.iter().zip([2usize, 3, 4]) {
            assert_eq!(dec.variable, want_var);
            assert_eq!(dec.attached_to, 1);
            assert!(!dec.via_partial, "variable {want_var} attached via partial");
        }
        let t1: Vec<(usize, usize)> = report
            .edges
            .iter()
            .filter(|e| e.tree == 1)
            .map(|e| e.conditioned)
            .collect();
        assert_eq!(t1, vec![(1, 2), (1, 3), (1, 4)]);
        assert!(report.spec.compile().is_ok());
    }

    #[test]
    fn forward_structure_hangs_weak_variables_off_their_best_proxy() {
        // Seven correlated traits; the response (variable 5) picks up four
        // covariates directly, after which the two remaining variables
        // correlate with the response mainly through variable 2 and are
        // attached to it by the partial-correlation branch.
        let chol = vec![
            vec![1.0],
            vec![0.93, 0.3675595189897820],
            vec![0.88, 0.1403854269420634, 0.4537531618647903],
            vec![0.83, 0.2941020281480048, 0.3488953345543623, 0.3207429540386347],
            vec![
                0.45,
                0.3577651868775453,
                0.1185115300887151,
                0.2492101915045783,
                0.7702943390320079,
            ],
            vec![
                -0.33,
                0.1003919041504290,
                0.1240904624067249,
                0.1280774946606330,
                0.1765025357455464,
                0.9044700287779490,
            ],
            vec![
                -0.36,
                0.0674720656620769,
                0.0161495409205544,
                0.1662447405053480,
                0.2784871217751314,
                0.6323885099800630,
                0.6003991125811698,
            ],
        ];
        let cols = gaussian_columns(&chol, 40_000, 1199);
        let pdata = pseudo_obs(&cols).unwrap();
        let report = pc_forward_structure(&pdata, 5, &gaussian_only()).unwrap();

        let got: Vec<(usize, usize, bool)> = report
            .pc_decisions
            .iter()
            .map(|d| (d.variable, d.attached_to, d.via_partial))
            .collect();
        let want = vec![
            (4, 5, false),
            (2, 5, false),
            (3, 5, false),
            (1, 5, false),
            (7, 2, true),
            (6, 2, true),
        ];
        assert_eq!(got, want, "attachment trace diverged");

        let mut t1: Vec<(usize, usize)> = report
            .edges
            .iter()
            .filter(|e| e.tree == 1)
            .map(|e| e.conditioned)
            .collect();
        t1.sort_unstable();
        assert_eq!(t1, vec![(1, 5), (2, 5), (2, 6), (2, 7), (3, 5), (4, 5)]);
        assert!(report.spec.compile().is_ok());
        assert_eq!(report.edges.len(), 21);
    }

    #[test]
    fn construction_rejects_bad_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|_| (0..50).map(|_| gauss(&mut rng)).collect())
            .collect();
        let pdata = pseudo_obs(&cols).unwrap();
        assert!(dissmann_fit(&pdata, &FitOptions::default()).is_err());
        let cols3: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..50).map(|_| gauss(&mut rng)).collect())
            .collect();
        let pdata3 = pseudo_obs(&cols3).unwrap();
        assert!(pc_forward_structure(&pdata3, 0, &FitOptions::default()).is_err());
        assert!(pc_forward_structure(&pdata3, 4, &FitOptions::default()).is_err());
    }
}

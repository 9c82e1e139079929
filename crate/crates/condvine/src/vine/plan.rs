//! Compiled vine evaluation: a tree-major sequence of pair-copula steps
//! whose inputs and outputs are slots of conditional probabilities keyed
//! by (variable, conditioning set).

use super::{violation, VineSpec};
use crate::error::{Error, Result};
use crate::math::dual::{Dual, Scalar};
use crate::paircop::{clamp_unit, PairCopula};
use rand::Rng;
use std::collections::{BTreeSet, HashMap};

/// One pair-copula evaluation: read the two conditional probabilities
/// C(a|D), C(b|D), add the edge's log density, and write C(a|D∪{b}) and
/// C(b|D∪{a}).
struct PlanStep {
    copula: PairCopula,
    /// 0-based tree level.
    tree: usize,
    /// 0-based conditioned pair, in the order given by the spec.
    a: usize,
    b: usize,
    /// 0-based conditioning set, sorted.
    cond: Vec<usize>,
    in_p: usize,
    in_q: usize,
    out_p: usize,
    out_q: usize,
}

impl PlanStep {
    fn mentions(&self, v: usize) -> bool {
        self.a == v || self.b == v || self.cond.contains(&v)
    }

    fn label(&self) -> String {
        let d: Vec<String> = self.cond.iter().map(|v| (v + 1).to_string()).collect();
        if d.is_empty() {
            format!("({},{})", self.a + 1, self.b + 1)
        } else {
            format!("({},{}|{})", self.a + 1, self.b + 1, d.join(","))
        }
    }
}

/// One link in a variable's h-function chain: the plan step whose
/// conditioned pair contains the variable at a given tree level, plus
/// which side of the pair it sits on.
#[derive(Clone, Copy)]
struct ChainLink {
    step: usize,
    /// true when the chain variable is the first conditioned member.
    var_first: bool,
}

fn link_out_slot(steps: &[PlanStep], l: ChainLink) -> usize {
    if l.var_first {
        steps[l.step].out_p
    } else {
        steps[l.step].out_q
    }
}

/// A compiled vine: evaluation steps in dependency order plus the
/// peeling-derived natural diagonal order used for sampling.
pub struct EvalPlan {
    d: usize,
    n_slots: usize,
    steps: Vec<PlanStep>,
    /// natural diagonal order, 0-based; order[0] is sampled first
    natural: Vec<usize>,
    /// chains[k] lists, tree by tree, the edges pairing natural[k] with
    /// the variables before it; empty for k = 0
    chains: Vec<Vec<ChainLink>>,
}

impl EvalPlan {
    pub(super) fn compile(spec: &VineSpec) -> Result<EvalPlan> {
        let d = spec.dim();
        let mut slot_of: HashMap<(usize, BTreeSet<usize>), usize> = HashMap::new();
        for i in 0..d {
            slot_of.insert((i, BTreeSet::new()), i);
        }
        let mut n_slots = d;
        let mut steps: Vec<PlanStep> = Vec::with_capacity(spec.edge_count());
        for (t, tree) in spec.trees().iter().enumerate() {
            for e in tree {
                let a = e.conditioned.0 - 1;
                let b = e.conditioned.1 - 1;
                let cond: BTreeSet<usize> = e.conditioning.iter().map(|v| v - 1).collect();
                let input = |v: usize| {
                    slot_of.get(&(v, cond.clone())).copied().ok_or_else(|| {
                        violation(
                            t + 1,
                            e.label(),
                            format!("conditional probability of {} is never computed", v + 1),
                        )
                    })
                };
                let in_p = input(a)?;
                let in_q = input(b)?;
                let mut output = |v: usize, other: usize| {
                    let mut s = cond.clone();
                    s.insert(other);
                    *slot_of.entry((v, s)).or_insert_with(|| {
                        n_slots += 1;
                        n_slots - 1
                    })
                };
                let out_p = output(a, b);
                let out_q = output(b, a);
                steps.push(PlanStep {
                    copula: e.copula.clone(),
                    tree: t,
                    a,
                    b,
                    cond: cond.into_iter().collect(),
                    in_p,
                    in_q,
                    out_p,
                    out_q,
                });
            }
        }
        let (natural, chains) = peel(&steps, d, None)?;
        Ok(EvalPlan { d, n_slots, steps, natural, chains })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// The diagonal order produced by peeling the structure from its top
    /// edge down (1-based). `rosenblatt` and `sample` use this order
    /// unless told otherwise.
    pub fn natural_order(&self) -> Vec<usize> {
        self.natural.iter().map(|&v| v + 1).collect()
    }

    /// Run every step, returning the accumulated log density and the full
    /// slot vector of conditional probabilities.
    fn forward<S: Scalar>(&self, u: &[S]) -> (S, Vec<S>) {
        assert_eq!(u.len(), self.d, "point dimension mismatch");
        let mut slots = vec![S::c(f64::NAN); self.n_slots];
        slots[..self.d].copy_from_slice(u);
        let mut ll = S::c(0.0);
        for st in &self.steps {
            let (p, q) = (slots[st.in_p], slots[st.in_q]);
            ll = ll + st.copula.log_pdf_s(p, q);
            slots[st.out_p] = st.copula.hfunc2_s(p, q);
            slots[st.out_q] = st.copula.hfunc1_s(p, q);
        }
        (ll, slots)
    }

    /// Sum of log pair-copula densities over all edges, the joint copula
    /// log density at `u` (coordinates clamped to the open unit interval).
    pub fn log_density(&self, u: &[f64]) -> f64 {
        self.forward(u).0
    }

    /// Log density together with its full gradient in u, one dual-number
    /// forward pass per coordinate.
    pub fn log_density_grad(&self, u: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(u.len(), self.d, "point dimension mismatch");
        let mut grad = vec![0.0; self.d];
        let mut value = 0.0;
        let mut du: Vec<Dual> = u.iter().map(|&x| Dual::c(x)).collect();
        for j in 0..self.d {
            du[j] = Dual::var(u[j]);
            let (ll, _) = self.forward(&du);
            du[j] = Dual::c(u[j]);
            grad[j] = ll.d;
            value = ll.v;
        }
        (value, grad)
    }

    /// Map a vine-distributed point to independent uniforms along `order`
    /// (1-based; must be peeling-compatible with the structure):
    /// z₁ = u_{o(1)}, z_k = C(u_{o(k)} | u_{o(1)}, …, u_{o(k−1)}).
    pub fn rosenblatt(&self, u: &[f64], order: &[usize]) -> Result<Vec<f64>> {
        assert_eq!(u.len(), self.d, "point dimension mismatch");
        let (order0, chains) = self.chains_for(order)?;
        let (_, slots) = self.forward(u);
        let mut z = vec![0.0; self.d];
        z[0] = clamp_unit(u[order0[0]]);
        for k in 1..self.d {
            let top = *chains[k].last().expect("chain covers every tree");
            z[k] = slots[link_out_slot(&self.steps, top)];
        }
        Ok(z)
    }

    /// Inverse of [`rosenblatt`](Self::rosenblatt): reconstruct u from
    /// independent uniforms by descending each variable's h-function
    /// chain with conditional quantiles.
    pub fn inverse_rosenblatt(&self, z: &[f64], order: &[usize]) -> Result<Vec<f64>> {
        assert_eq!(z.len(), self.d, "point dimension mismatch");
        let (order0, chains) = self.chains_for(order)?;
        Ok(self.inverse_rosenblatt_with(z, &order0, &chains))
    }

    fn inverse_rosenblatt_with(
        &self,
        z: &[f64],
        order0: &[usize],
        chains: &[Vec<ChainLink>],
    ) -> Vec<f64> {
        let mut slots = vec![f64::NAN; self.n_slots];
        let mut u = vec![0.0; self.d];
        for k in 0..self.d {
            let v = order0[k];
            let mut w = clamp_unit(z[k]);
            for link in chains[k].iter().rev() {
                let st = &self.steps[link.step];
                w = if link.var_first {
                    st.copula.hinv2(w, slots[st.in_q])
                } else {
                    st.copula.hinv1(w, slots[st.in_p])
                };
            }
            u[v] = w;
            slots[v] = w;
            for link in &chains[k] {
                let st = &self.steps[link.step];
                let (p, q) = (slots[st.in_p], slots[st.in_q]);
                slots[st.out_p] = st.copula.hfunc2(p, q);
                slots[st.out_q] = st.copula.hfunc1(p, q);
            }
        }
        u
    }

    /// Draw n points by pushing i.i.d. uniforms through the inverse
    /// Rosenblatt transform in the natural order.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(n);
        let mut z = vec![0.0; self.d];
        for _ in 0..n {
            for zi in z.iter_mut() {
                *zi = rng.gen::<f64>();
            }
            out.push(self.inverse_rosenblatt_with(&z, &self.natural, &self.chains));
        }
        out
    }

    /// Log conditional density of variable 1 given all the others, for a
    /// structure whose first tree is a path with variable 1 terminal (a
    /// D-vine leaf). No integration: the conditional is the product of
    /// the pair-copula densities on the edges whose conditioned pair
    /// contains variable 1, one per tree.
    ///
    /// `u_rest` holds variables 2..=d in ascending order.
    pub fn dvine_leaf_conditional_logpdf(&self, u1: f64, u_rest: &[f64]) -> Result<f64> {
        assert_eq!(u_rest.len(), self.d - 1, "point dimension mismatch");
        let mut degree = vec![0usize; self.d];
        for st in self.steps.iter().filter(|s| s.tree == 0) {
            degree[st.a] += 1;
            degree[st.b] += 1;
        }
        if let Some(v) = (0..self.d).find(|&v| degree[v] > 2) {
            return Err(violation(
                1,
                String::new(),
                format!("first tree is not a path: variable {} has degree {}", v + 1, degree[v]),
            ));
        }
        if degree[0] != 1 {
            return Err(violation(
                1,
                String::new(),
                format!("variable 1 is not terminal: degree {} in the first tree", degree[0]),
            ));
        }
        let mut u = Vec::with_capacity(self.d);
        u.push(u1);
        u.extend_from_slice(u_rest);

        let mut slots = vec![f64::NAN; self.n_slots];
        for (i, &ui) in u.iter().enumerate() {
            slots[i] = ui;
        }
        let mut ll = 0.0;
        for st in &self.steps {
            let (p, q) = (slots[st.in_p], slots[st.in_q]);
            if st.a == 0 || st.b == 0 {
                ll += st.copula.log_pdf(p, q);
            }
            slots[st.out_p] = st.copula.hfunc2(p, q);
            slots[st.out_q] = st.copula.hfunc1(p, q);
        }
        Ok(ll)
    }

    /// Pin every coordinate of `u` except `free_vars` (1-based) and return
    /// a context that re-evaluates the log density as a function of the
    /// free coordinates alone. Slots and log-density terms untouched by
    /// the free coordinates are computed once here, so repeated calls — a
    /// sampler's inner loop — only pay for the dependent steps.
    ///
    /// Values of `u` at the free positions are ignored.
    pub fn partial(&self, u: &[f64], free_vars: &[usize]) -> Result<PartialPlan<'_>> {
        assert_eq!(u.len(), self.d, "point dimension mismatch");
        let mut seen = vec![false; self.d];
        for &v in free_vars {
            if v < 1 || v > self.d {
                return Err(Error::InvalidArgument(format!(
                    "free variable {v} out of range 1..={}",
                    self.d
                )));
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::InvalidArgument(format!("free variable {v} listed twice")));
            }
        }
        let free: Vec<usize> = free_vars.iter().map(|&v| v - 1).collect();
        let mut point = u.to_vec();
        for &f in &free {
            point[f] = 0.5;
        }
        let (_, slots) = self.forward(&point);
        let mut base_slots = slots;
        let mut depends = vec![false; self.n_slots];
        for &f in &free {
            depends[f] = true;
            base_slots[f] = f64::NAN;
        }
        let mut const_ll = 0.0;
        let mut dynamic = Vec::new();
        for (i, st) in self.steps.iter().enumerate() {
            if depends[st.in_p] || depends[st.in_q] {
                dynamic.push(i);
                depends[st.out_p] = true;
                depends[st.out_q] = true;
                base_slots[st.out_p] = f64::NAN;
                base_slots[st.out_q] = f64::NAN;
            } else {
                const_ll += st.copula.log_pdf(base_slots[st.in_p], base_slots[st.in_q]);
            }
        }
        Ok(PartialPlan { plan: self, free, dynamic, base_slots, const_ll })
    }

    /// Resolve an order argument (1-based) into the 0-based order and its
    /// h-function chains, reusing the precomputed natural-order chains
    /// when they match.
    fn chains_for(&self, order: &[usize]) -> Result<(Vec<usize>, Vec<Vec<ChainLink>>)> {
        if order.len() != self.d
            || {
                let mut seen = vec![false; self.d + 1];
                order.iter().any(|&v| v < 1 || v > self.d || std::mem::replace(&mut seen[v], true))
            }
        {
            return Err(violation(
                0,
                String::new(),
                format!("order {:?} is not a permutation of 1..={}", order, self.d),
            ));
        }
        let order0: Vec<usize> = order.iter().map(|&v| v - 1).collect();
        if order0 == self.natural {
            return Ok((order0, self.chains.clone()));
        }
        let (order0, chains) = peel(&self.steps, self.d, Some(&order0))?;
        Ok((order0, chains))
    }

}

/// A fixed-point view of a compiled plan with a subset of coordinates
/// free: created by [`EvalPlan::partial`]. Holds the cached slot values
/// and log-density contribution of every step that the free coordinates
/// cannot reach.
pub struct PartialPlan<'p> {
    plan: &'p EvalPlan,
    /// 0-based free coordinates, in the order given at construction.
    free: Vec<usize>,
    /// tree-major indices of the steps that must be re-run per call
    dynamic: Vec<usize>,
    /// slot values from the pinned pass; NaN where a re-run writes
    base_slots: Vec<f64>,
    const_ll: f64,
}

impl PartialPlan<'_> {
    /// Number of free coordinates.
    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    /// How many pair-copula steps each call re-evaluates (the rest are
    /// served from the cache built at construction).
    pub fn dynamic_steps(&self) -> usize {
        self.dynamic.len()
    }

    /// Joint log density at the pinned point with the free coordinates
    /// set to `vals` (same order as at construction).
    pub fn log_density(&self, vals: &[f64]) -> f64 {
        assert_eq!(vals.len(), self.free.len(), "free coordinate count mismatch");
        let mut slots = self.base_slots.clone();
        for (k, &f) in self.free.iter().enumerate() {
            slots[f] = vals[k];
        }
        let mut ll = self.const_ll;
        for &i in &self.dynamic {
            let st = &self.plan.steps[i];
            let (p, q) = (slots[st.in_p], slots[st.in_q]);
            ll += st.copula.log_pdf_s(p, q);
            slots[st.out_p] = st.copula.hfunc2_s(p, q);
            slots[st.out_q] = st.copula.hfunc1_s(p, q);
        }
        ll
    }

    /// Log density plus its gradient in the free coordinates, one dual
    /// pass per coordinate over the dynamic steps only.
    pub fn log_density_grad(&self, vals: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(vals.len(), self.free.len(), "free coordinate count mismatch");
        let k = self.free.len();
        let mut grad = vec![0.0; k];
        let mut value = self.const_ll;
        for j in 0..k {
            let mut slots: Vec<Dual> = self.base_slots.iter().map(|&x| Dual::c(x)).collect();
            for (m, &f) in self.free.iter().enumerate() {
                slots[f] = if m == j { Dual::var(vals[m]) } else { Dual::c(vals[m]) };
            }
            let mut ll = Dual::c(self.const_ll);
            for &i in &self.dynamic {
                let st = &self.plan.steps[i];
                let (p, q) = (slots[st.in_p], slots[st.in_q]);
                ll = ll + st.copula.log_pdf_s(p, q);
                slots[st.out_p] = st.copula.hfunc2_s(p, q);
                slots[st.out_q] = st.copula.hfunc1_s(p, q);
            }
            grad[j] = ll.d;
            value = ll.v;
        }
        (value, grad)
    }
}

/// Peel variables off the structure one at a time, producing a diagonal
/// order and, for each variable, the per-tree chain of edges that pairs
/// it with the variables ordered before it.
///
/// With `want = None` the variable removed at each level is the second
/// conditioned member of the current top edge (the natural order). With
/// `want = Some(order)` that prescribed variable is removed instead, and
/// an error is returned if the removal is not structurally possible —
/// i.e. the variable does not sit in exactly one conditioned pair of
/// every remaining tree.
fn peel(
    steps: &[PlanStep],
    d: usize,
    want: Option<&[usize]>,
) -> Result<(Vec<usize>, Vec<Vec<ChainLink>>)> {
    let mut alive: Vec<Vec<usize>> = vec![Vec::new(); d - 1];
    for (i, s) in steps.iter().enumerate() {
        alive[s.tree].push(i);
    }
    let mut order = vec![usize::MAX; d];
    let mut chains: Vec<Vec<ChainLink>> = vec![Vec::new(); d];
    let mut peeled = vec![false; d];
    for k in (1..d).rev() {
        let o = match want {
            Some(w) => w[k],
            None => {
                let top = &alive[k - 1];
                debug_assert_eq!(top.len(), 1, "validated structures peel one top edge per level");
                steps[top[0]].b
            }
        };
        let mut chain = Vec::with_capacity(k);
        for (t, tree) in alive.iter_mut().enumerate().take(k) {
            let hits: Vec<usize> = tree
                .iter()
                .copied()
                .filter(|&si| steps[si].a == o || steps[si].b == o)
                .collect();
            if hits.len() != 1 {
                return Err(violation(
                    t + 1,
                    String::new(),
                    format!(
                        "variable {} sits in {} conditioned pairs of the remaining tree; \
                         ordering it at position {} is incompatible with the structure",
                        o + 1,
                        hits.len(),
                        k + 1
                    ),
                ));
            }
            let si = hits[0];
            chain.push(ChainLink { step: si, var_first: steps[si].a == o });
            tree.retain(|&x| x != si);
        }
        for tree in alive.iter().take(k) {
            for &si in tree {
                if steps[si].mentions(o) {
                    return Err(violation(
                        steps[si].tree + 1,
                        steps[si].label(),
                        format!("edge still references variable {} after peeling", o + 1),
                    ));
                }
            }
        }
        order[k] = o;
        peeled[o] = true;
        chains[k] = chain;
    }
    let last = (0..d).find(|&v| !peeled[v]).expect("one variable remains");
    if let Some(w) = want {
        if w[0] != last {
            return Err(violation(
                0,
                String::new(),
                format!("order must end the peel at variable {}, not {}", last + 1, w[0] + 1),
            ));
        }
    }
    order[0] = last;
    Ok((order, chains))
}

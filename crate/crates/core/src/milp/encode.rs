//! Encoders from network dynamics and MTL formulas into MILP rows.
//!
//! The temporal encoder first expands the formula over its concrete time
//! windows into a negation-free and/or DAG whose leaves are (predicate,
//! time, polarity) triples, shared across overlapping windows. Two encodings
//! of that DAG are available:
//!
//!  - `Value`: each node carries its robustness value in a variable
//!    `r_{node}_{k}`; conjunctions bound it above by each child, and
//!    disjunctions select a child through big-M selector binaries
//!    `b_{node}_{k}_{j}`. Maximizing the root reproduces the recursive
//!    monitor exactly; constraining it enforces a margin.
//!  - `Indicator`: each node carries a satisfaction indicator in `[0, 1]`
//!    with binaries only at atom leaves, and atom margins are gated at the
//!    demanded robustness level. Feasible sets over the inputs coincide
//!    with the value route; relaxations are tighter and branch-and-bound
//!    touches far fewer binaries, so synthesis uses this route by default.
//!
//! All big-M constants come from interval propagation of the dynamics reach
//! set, never from a global magic number.

use std::collections::HashMap;

use nalgebra::DVector;

use super::model::{MilpModel, Sense, VarId};
use super::MilpError;
use crate::dynamics::NetworkModel;
use crate::temporal::{AtomicPredicate, Formula, PredId, PredicateTable};

/// Variable handles produced by [`encode_dynamics`].
#[derive(Debug, Clone)]
pub struct DynamicsHandles {
    /// `x[step][coord]`, steps `0..=steps`.
    pub x: Vec<Vec<VarId>>,
    /// `u[step][input]`, steps `0..steps`.
    pub u: Vec<Vec<VarId>>,
    steps: usize,
    a_mat: nalgebra::DMatrix<f64>,
    b_mat: nalgebra::DMatrix<f64>,
    x_init: DVector<f64>,
    /// Per-coordinate workspace box; `(-inf, +inf)` when unconstrained.
    workspace: Vec<(f64, f64)>,
}

impl DynamicsHandles {
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Interval bounds on every state coordinate per step, propagated from
    /// the initial state through the dynamics using the current bounds of
    /// each input variable. Evaluated lazily so later pinning or tightening
    /// of inputs sharpens every big-M derived from it.
    pub fn reach(&self, model: &MilpModel) -> Vec<Vec<(f64, f64)>> {
        let n = self.a_mat.nrows();
        let m = self.b_mat.ncols();
        let mut reach = Vec::with_capacity(self.steps + 1);
        let mut mid: Vec<f64> = (0..n).map(|g| self.x_init[g]).collect();
        let mut rad = vec![0.0f64; n];
        reach.push(mid.iter().map(|&c| (c, c)).collect::<Vec<_>>());
        for k in 0..self.steps {
            let mut nmid = vec![0.0; n];
            let mut nrad = vec![0.0; n];
            for r in 0..n {
                let mut cm = 0.0;
                let mut cr = 0.0;
                for c in 0..n {
                    let a = self.a_mat[(r, c)];
                    cm += a * mid[c];
                    cr += a.abs() * rad[c];
                }
                for j in 0..m {
                    let b = self.b_mat[(r, j)];
                    if b != 0.0 {
                        let var = model.var(self.u[k][j]);
                        let um = 0.5 * (var.lb + var.ub);
                        let ur = 0.5 * (var.ub - var.lb);
                        cm += b * um;
                        cr += b.abs() * ur;
                    }
                }
                nmid[r] = cm;
                nrad[r] = cr;
            }
            // clamp to the workspace: planned states are constrained to it,
            // so the intersection is a valid reach bound
            for r in 0..n {
                let (wl, wh) = self.workspace[r];
                let lo = (nmid[r] - nrad[r]).max(wl);
                let hi = (nmid[r] + nrad[r]).min(wh);
                nmid[r] = 0.5 * (lo + hi);
                nrad[r] = 0.5 * (hi - lo);
            }
            mid = nmid;
            rad = nrad;
            reach.push(mid.iter().zip(&rad).map(|(&c, &r)| (c - r, c + r)).collect());
        }
        reach
    }
}

/// Equality rows for the nominal rollout `x[k+1] = a x[k] + b u[k]` with
/// `x[0]` pinned to the hub estimate. Inputs are bounded by
/// `[u_min, u_max]`; those bounds also feed the reach intervals used for
/// big-M tightening.
pub fn encode_dynamics(
    model: &mut MilpModel,
    net: &NetworkModel,
    x_init: &DVector<f64>,
    steps: usize,
    u_min: f64,
    u_max: f64,
) -> Result<DynamicsHandles, MilpError> {
    encode_dynamics_bounded(model, net, x_init, steps, u_min, u_max, None)
}

/// [`encode_dynamics`] with an optional per-coordinate workspace box. Bounds
/// become variable bounds on the planned states and tighten every reach
/// interval behind the temporal big-M constants.
pub fn encode_dynamics_bounded(
    model: &mut MilpModel,
    net: &NetworkModel,
    x_init: &DVector<f64>,
    steps: usize,
    u_min: f64,
    u_max: f64,
    workspace: Option<&[(f64, f64)]>,
) -> Result<DynamicsHandles, MilpError> {
    if u_min > u_max {
        return Err(MilpError::BadBounds { lo: u_min, hi: u_max });
    }
    let n = net.state_dim();
    if x_init.len() != n {
        return Err(MilpError::Dimensions(format!(
            "initial state has {} entries, network expects {n}",
            x_init.len()
        )));
    }
    let inf = f64::INFINITY;
    let workspace: Vec<(f64, f64)> = match workspace {
        Some(w) => {
            if w.len() != n {
                return Err(MilpError::Dimensions(format!(
                    "workspace has {} entries, network expects {n}",
                    w.len()
                )));
            }
            w.to_vec()
        }
        None => vec![(-inf, inf); n],
    };
    let m = net.input_dim();

    let coord_name = |prefix: &str, agent: usize, step: usize, coord: usize| {
        format!("{prefix}_a{agent}_s{step}_c{coord}")
    };
    // global coordinate -> (agent, local index)
    let mut owner_state = Vec::with_capacity(n);
    let mut owner_input = Vec::with_capacity(m);
    for (i, ag) in net.agents.iter().enumerate() {
        for c in 0..ag.state_dim() {
            owner_state.push((i, c));
        }
        for c in 0..ag.input_dim() {
            owner_input.push((i, c));
        }
    }

    let mut x = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let mut row = Vec::with_capacity(n);
        for g in 0..n {
            let (a, c) = owner_state[g];
            let (wl, wh) = if k == 0 { (-inf, inf) } else { workspace[g] };
            row.push(model.add_continuous(coord_name("x", a, k, c), wl, wh));
        }
        x.push(row);
    }
    let mut u = Vec::with_capacity(steps);
    for k in 0..steps {
        let mut row = Vec::with_capacity(m);
        for g in 0..m {
            let (a, c) = owner_input[g];
            row.push(model.add_continuous(coord_name("u", a, k, c), u_min, u_max));
        }
        u.push(row);
    }
    for (g, xv) in x[0].iter().enumerate() {
        model.fix_var(*xv, x_init[g]);
    }
    let a_mat = &net.aggregate.a;
    let b_mat = &net.aggregate.b;
    for k in 0..steps {
        for r in 0..n {
            let mut terms = vec![(x[k + 1][r], 1.0)];
            for c in 0..n {
                let coef = a_mat[(r, c)];
                if coef != 0.0 {
                    terms.push((x[k][c], -coef));
                }
            }
            for j in 0..m {
                let coef = b_mat[(r, j)];
                if coef != 0.0 {
                    terms.push((u[k][j], -coef));
                }
            }
            model.add_constraint(format!("dyn_s{k}_r{r}"), terms, Sense::Eq, 0.0);
        }
    }

    let handles = DynamicsHandles {
        x,
        u,
        steps,
        a_mat: a_mat.clone(),
        b_mat: b_mat.clone(),
        x_init: x_init.clone(),
        workspace,
    };

    // scenario big-M metadata: twice the reach bounding-box diameter
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for step in handles.reach(model) {
        for (l, h) in step {
            lo = lo.min(l);
            hi = hi.max(h);
        }
    }
    model.big_m = model.big_m.max(2.0 * (hi - lo));

    Ok(handles)
}

/// Refresh the input box on already-declared input variables.
pub fn encode_input_bounds(
    model: &mut MilpModel,
    handles: &DynamicsHandles,
    u_min: f64,
    u_max: f64,
) -> Result<(), MilpError> {
    if u_min > u_max {
        return Err(MilpError::BadBounds { lo: u_min, hi: u_max });
    }
    for step in &handles.u {
        for &v in step {
            model.set_bounds(v, u_min, u_max);
        }
    }
    Ok(())
}

/// One-norm control effort: auxiliaries `s >= u`, `s >= -u`, objective
/// `Σ s` plus a 1e-9-weighted series that prefers effort placed late, so
/// equal-cost optima resolve to a unique reproducible plan.
pub fn encode_objective(model: &mut MilpModel, handles: &DynamicsHandles) {
    let total: usize = handles.u.iter().map(|r| r.len()).sum();
    let mut idx = 0usize;
    for (k, step) in handles.u.iter().enumerate() {
        for (j, &uv) in step.iter().enumerate() {
            let name = model.var(uv).name.clone();
            let s = model.add_continuous(name.replacen("u_", "s_", 1), 0.0, f64::INFINITY);
            model.add_constraint(
                format!("abs_p_s{k}_c{j}"),
                vec![(s, 1.0), (uv, -1.0)],
                Sense::Ge,
                0.0,
            );
            model.add_constraint(
                format!("abs_n_s{k}_c{j}"),
                vec![(s, 1.0), (uv, 1.0)],
                Sense::Ge,
                0.0,
            );
            let tie = 1e-9 * (total - idx) as f64 / total.max(1) as f64;
            model.set_objective_coef(s, 1.0 + tie);
            idx += 1;
        }
    }
}

/// Which encoding of the expanded formula DAG to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeRoute {
    Value,
    Indicator,
}

/// Result of encoding a formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MtlOutcome {
    /// Formula folded to a constant before any row was needed.
    Const(bool),
    /// Value route: the robustness variable of the root at time 0.
    Value(VarId),
    /// Indicator route: constraints added, root indicator pinned to 1.
    Indicator,
}

/// Encode `[[phi]](traj, 0) >= beta_hat` over the trajectory variables.
pub fn encode_mtl(
    model: &mut MilpModel,
    phi: &Formula,
    beta_hat: f64,
    handles: &DynamicsHandles,
    table: &PredicateTable,
    route: EncodeRoute,
) -> Result<MtlOutcome, MilpError> {
    let mut enc = MtlEncoder::build(model, phi, handles, table)?;
    match route {
        EncodeRoute::Value => {
            let out = enc.emit_value(model)?;
            if let MtlOutcome::Value(root) = out {
                model.add_constraint(
                    "mtl_root".into(),
                    vec![(root, 1.0)],
                    Sense::Ge,
                    beta_hat,
                );
            }
            Ok(out)
        }
        EncodeRoute::Indicator => enc.emit_indicator(model, beta_hat),
    }
}

/// Value-route encoding without the root margin constraint; the caller
/// typically maximizes the returned variable to recover the robustness
/// value of a pinned trajectory.
pub fn encode_mtl_value_root(
    model: &mut MilpModel,
    phi: &Formula,
    handles: &DynamicsHandles,
    table: &PredicateTable,
) -> Result<MtlOutcome, MilpError> {
    let mut enc = MtlEncoder::build(model, phi, handles, table)?;
    enc.emit_value(model)
}

// ---------------------------------------------------------------------------
// expansion DAG
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum DagNode {
    Leaf { pred: PredId, k: usize, negated: bool },
    All(Vec<u32>),
    Any(Vec<u32>),
}

/// Node index, with constants folded away at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Built {
    Const(bool),
    Node(u32),
}

struct MtlEncoder<'a> {
    nodes: Vec<DagNode>,
    /// hash-consing of structurally identical nodes
    intern: HashMap<DagNode, u32>,
    memo: HashMap<(usize, usize, bool), Built>,
    root: Built,
    table: &'a PredicateTable,
    handles: &'a DynamicsHandles,
    /// reach intervals captured at build time
    reach: Vec<Vec<(f64, f64)>>,
    /// interval bounds of each node's robustness value
    node_bounds: Vec<(f64, f64)>,
    /// naming: formula-node counter per dag node, set at first creation
    names: Vec<(usize, usize, bool)>,
}

impl<'a> MtlEncoder<'a> {
    fn build(
        model: &MilpModel,
        phi: &Formula,
        handles: &'a DynamicsHandles,
        table: &'a PredicateTable,
    ) -> Result<Self, MilpError> {
        let horizon = phi.horizon();
        if horizon > handles.steps {
            return Err(MilpError::HorizonOverflow { horizon, steps: handles.steps });
        }
        let mut enc = MtlEncoder {
            nodes: Vec::new(),
            intern: HashMap::new(),
            memo: HashMap::new(),
            root: Built::Const(true),
            table,
            handles,
            reach: handles.reach(model),
            node_bounds: Vec::new(),
            names: Vec::new(),
        };
        let mut counter = 0usize;
        enc.root = enc.expand(phi, 0, false, &mut counter)?;
        Ok(enc)
    }

    fn intern_node(&mut self, node: DagNode, name: (usize, usize, bool)) -> Built {
        if let Some(&id) = self.intern.get(&node) {
            return Built::Node(id);
        }
        let id = self.nodes.len() as u32;
        let bounds = self.bounds_for(&node);
        self.nodes.push(node.clone());
        self.node_bounds.push(bounds);
        self.names.push(name);
        self.intern.insert(node, id);
        Built::Node(id)
    }

    fn bounds_for(&self, node: &DagNode) -> (f64, f64) {
        match node {
            DagNode::Leaf { pred, k, negated } => {
                let (lo, hi) = self.leaf_value_bounds(*pred, *k);
                if *negated {
                    (-hi, -lo)
                } else {
                    (lo, hi)
                }
            }
            DagNode::All(children) => children.iter().fold(
                (f64::INFINITY, f64::INFINITY),
                |(lo, hi), &c| {
                    let (cl, ch) = self.node_bounds[c as usize];
                    (lo.min(cl), hi.min(ch))
                },
            ),
            DagNode::Any(children) => children.iter().fold(
                (f64::NEG_INFINITY, f64::NEG_INFINITY),
                |(lo, hi), &c| {
                    let (cl, ch) = self.node_bounds[c as usize];
                    (lo.max(cl), hi.max(ch))
                },
            ),
        }
    }

    /// Interval of the (positive) signed distance of predicate `pred` at
    /// step `k` over the reach set.
    fn leaf_value_bounds(&self, pred: PredId, k: usize) -> (f64, f64) {
        let reach = &self.reach[k];
        let terms = margin_terms(self.table.get(pred), false);
        // positive box: min of terms; separation: max of terms
        let combine_min = matches!(self.table.get(pred), AtomicPredicate::BoxRegion { .. });
        let mut lo = if combine_min { f64::INFINITY } else { f64::NEG_INFINITY };
        let mut hi = lo;
        for t in &terms {
            let (tl, th) = t.interval(reach);
            if combine_min {
                lo = lo.min(tl);
                hi = hi.min(th);
            } else {
                lo = lo.max(tl);
                hi = hi.max(th);
            }
        }
        (lo, hi)
    }

    fn expand(
        &mut self,
        phi: &Formula,
        k: usize,
        negated: bool,
        counter: &mut usize,
    ) -> Result<Built, MilpError> {
        let key = (phi as *const Formula as usize, k, negated);
        if let Some(&b) = self.memo.get(&key) {
            return Ok(b);
        }
        let fid = *counter;
        *counter += 1;
        let built = match phi {
            Formula::True => Built::Const(!negated),
            Formula::False => Built::Const(negated),
            Formula::Atom(p) => {
                if k >= self.reach.len() {
                    return Err(MilpError::HorizonOverflow {
                        horizon: k,
                        steps: self.handles.steps,
                    });
                }
                self.intern_node(DagNode::Leaf { pred: *p, k, negated }, (fid, k, negated))
            }
            Formula::Not(f) => self.expand(f, k, !negated, counter)?,
            Formula::And(a, b) => {
                let ca = self.expand(a, k, negated, counter)?;
                let cb = self.expand(b, k, negated, counter)?;
                if negated {
                    self.make_any(vec![ca, cb], (fid, k, negated))
                } else {
                    self.make_all(vec![ca, cb], (fid, k, negated))
                }
            }
            Formula::Or(a, b) => {
                let ca = self.expand(a, k, negated, counter)?;
                let cb = self.expand(b, k, negated, counter)?;
                if negated {
                    self.make_all(vec![ca, cb], (fid, k, negated))
                } else {
                    self.make_any(vec![ca, cb], (fid, k, negated))
                }
            }
            Formula::Eventually(i, f) => {
                let mut kids = Vec::new();
                for kp in i.shifted(k) {
                    kids.push(self.expand(f, kp, negated, counter)?);
                }
                if negated {
                    self.make_all(kids, (fid, k, negated))
                } else {
                    self.make_any(kids, (fid, k, negated))
                }
            }
            Formula::Always(i, f) => {
                let mut kids = Vec::new();
                for kp in i.shifted(k) {
                    kids.push(self.expand(f, kp, negated, counter)?);
                }
                if negated {
                    self.make_any(kids, (fid, k, negated))
                } else {
                    self.make_all(kids, (fid, k, negated))
                }
            }
            Formula::Until(i, a, b) => {
                // until: OR over k' of (b at k' AND a at k <= k'' < k');
                // negation dualizes the whole expansion
                let mut outer = Vec::new();
                for kp in i.shifted(k) {
                    let mut inner = vec![self.expand(b, kp, negated, counter)?];
                    for kpp in k..kp {
                        inner.push(self.expand(a, kpp, negated, counter)?);
                    }
                    let clause = if negated {
                        self.make_any(inner, (fid, kp, negated))
                    } else {
                        self.make_all(inner, (fid, kp, negated))
                    };
                    outer.push(clause);
                }
                if negated {
                    self.make_all(outer, (fid, k, negated))
                } else {
                    self.make_any(outer, (fid, k, negated))
                }
            }
        };
        self.memo.insert(key, built);
        Ok(built)
    }

    fn make_all(&mut self, children: Vec<Built>, name: (usize, usize, bool)) -> Built {
        let mut ids = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Built::Const(false) => return Built::Const(false),
                Built::Const(true) => {}
                Built::Node(id) => {
                    // flatten nested conjunctions
                    if let DagNode::All(inner) = &self.nodes[id as usize] {
                        ids.extend(inner.iter().copied());
                    } else {
                        ids.push(id);
                    }
                }
            }
        }
        ids.sort_unstable();
        ids.dedup();
        match ids.len() {
            0 => Built::Const(true),
            1 => Built::Node(ids[0]),
            _ => self.intern_node(DagNode::All(ids), name),
        }
    }

    fn make_any(&mut self, children: Vec<Built>, name: (usize, usize, bool)) -> Built {
        let mut ids = Vec::with_capacity(children.len());
        for c in children {
            match c {
                Built::Const(true) => return Built::Const(true),
                Built::Const(false) => {}
                Built::Node(id) => {
                    if let DagNode::Any(inner) = &self.nodes[id as usize] {
                        ids.extend(inner.iter().copied());
                    } else {
                        ids.push(id);
                    }
                }
            }
        }
        ids.sort_unstable();
        ids.dedup();
        match ids.len() {
            0 => Built::Const(false),
            1 => Built::Node(ids[0]),
            _ => self.intern_node(DagNode::Any(ids), name),
        }
    }

    fn var_name(&self, prefix: &str, id: u32) -> String {
        let (fid, k, neg) = self.names[id as usize];
        if neg {
            format!("{prefix}_{fid}_{k}n")
        } else {
            format!("{prefix}_{fid}_{k}")
        }
    }

    // -- value route --------------------------------------------------------

    fn emit_value(&mut self, model: &mut MilpModel) -> Result<MtlOutcome, MilpError> {
        let root = match self.root {
            Built::Const(c) => return Ok(MtlOutcome::Const(c)),
            Built::Node(id) => id,
        };
        let order = self.topo_from(root);
        let mut rvar: HashMap<u32, VarId> = HashMap::new();
        for id in order {
            let (lo, hi) = self.node_bounds[id as usize];
            let name = self.var_name("r", id);
            let r = model.add_continuous(name.clone(), lo, hi);
            rvar.insert(id, r);
            match self.nodes[id as usize].clone() {
                DagNode::Leaf { pred, k, negated } => {
                    self.emit_value_leaf(model, r, pred, k, negated, &name)?;
                }
                DagNode::All(children) => {
                    for (j, c) in children.iter().enumerate() {
                        model.add_constraint(
                            format!("{name}_le{j}"),
                            vec![(r, 1.0), (rvar[c], -1.0)],
                            Sense::Le,
                            0.0,
                        );
                    }
                }
                DagNode::Any(children) => {
                    let mut conv = Vec::with_capacity(children.len());
                    let mut cap = vec![(r, 1.0)];
                    for (j, c) in children.iter().enumerate() {
                        let (cl, ch) = self.node_bounds[*c as usize];
                        let big = (hi - cl).max(0.0);
                        let b = model.add_binary(format!("b{}_{j}", &name[1..]));
                        conv.push((b, 1.0));
                        cap.push((b, -ch));
                        model.add_constraint(
                            format!("{name}_sel{j}"),
                            vec![(r, 1.0), (rvar[c], -1.0), (b, big)],
                            Sense::Le,
                            big,
                        );
                    }
                    model.add_constraint(format!("{name}_conv"), conv, Sense::Eq, 1.0);
                    // r <= Σ ub_j b_j caps the relaxation by a convex
                    // combination of the children's upper bounds
                    model.add_constraint(format!("{name}_cap"), cap, Sense::Le, 0.0);
                }
            }
        }
        Ok(MtlOutcome::Value(rvar[&root]))
    }

    fn emit_value_leaf(
        &self,
        model: &mut MilpModel,
        r: VarId,
        pred: PredId,
        k: usize,
        negated: bool,
        name: &str,
    ) -> Result<(), MilpError> {
        let reach = &self.reach[k];
        let terms = margin_terms(self.table.get(pred), negated);
        let is_min = matches!(
            (self.table.get(pred), negated),
            (AtomicPredicate::BoxRegion { .. }, false)
                | (AtomicPredicate::PairwiseSeparation { .. }, true)
        );
        let (_, node_hi) = if negated {
            let (l, h) = self.leaf_value_bounds(pred, k);
            (-h, -l)
        } else {
            self.leaf_value_bounds(pred, k)
        };
        if is_min {
            for (j, t) in terms.iter().enumerate() {
                let mut row = vec![(r, 1.0)];
                t.append_negated(&self.handles.x[k], &mut row);
                model.add_constraint(format!("{name}_m{j}"), row, Sense::Le, t.constant);
            }
        } else {
            let mut conv = Vec::with_capacity(terms.len());
            for (j, t) in terms.iter().enumerate() {
                let (tl, _) = t.interval(reach);
                let big = (node_hi - tl).max(0.0);
                let b = model.add_binary(format!("b{}_{j}", &name[1..]));
                conv.push((b, 1.0));
                let mut row = vec![(r, 1.0), (b, big)];
                t.append_negated(&self.handles.x[k], &mut row);
                model.add_constraint(format!("{name}_m{j}"), row, Sense::Le, t.constant + big);
            }
            model.add_constraint(format!("{name}_conv"), conv, Sense::Eq, 1.0);
        }
        Ok(())
    }

    // -- indicator route -----------------------------------------------------

    fn emit_indicator(
        &mut self,
        model: &mut MilpModel,
        beta_hat: f64,
    ) -> Result<MtlOutcome, MilpError> {
        let root = match self.root {
            Built::Const(c) => return Ok(MtlOutcome::Const(c)),
            Built::Node(id) => id,
        };
        let order = self.topo_from(root);
        let mut zvar: HashMap<u32, VarId> = HashMap::new();
        let mut infeasible_leaf_at_root = false;
        for id in &order {
            let id = *id;
            let name = self.var_name("z", id);
            match self.nodes[id as usize].clone() {
                DagNode::Leaf { pred, k, negated } => {
                    let z = self.emit_indicator_leaf(model, pred, k, negated, beta_hat, &name)?;
                    zvar.insert(id, z);
                }
                DagNode::All(children) => {
                    let z = model.add_continuous(name.clone(), 0.0, 1.0);
                    for (j, c) in children.iter().enumerate() {
                        model.add_constraint(
                            format!("{name}_le{j}"),
                            vec![(z, 1.0), (zvar[c], -1.0)],
                            Sense::Le,
                            0.0,
                        );
                    }
                    zvar.insert(id, z);
                }
                DagNode::Any(children) => {
                    let z = model.add_continuous(name.clone(), 0.0, 1.0);
                    let mut row = vec![(z, 1.0)];
                    for c in &children {
                        row.push((zvar[c], -1.0));
                    }
                    model.add_constraint(format!("{name}_cover"), row, Sense::Le, 0.0);
                    zvar.insert(id, z);
                }
            }
        }
        let zroot = zvar[&root];
        // demanding the root also guards the degenerate all-false case
        if model.var(zroot).ub < 1.0 {
            infeasible_leaf_at_root = true;
        }
        model.fix_var(zroot, 1.0);
        if infeasible_leaf_at_root {
            return Ok(MtlOutcome::Const(false));
        }
        Ok(MtlOutcome::Indicator)
    }

    /// Atom indicator: `z = 1` forces the signed distance at `k` to be at
    /// least `beta_hat`. Gates that the reach set already guarantees are
    /// dropped; gates the reach set forbids pin the indicator to zero.
    fn emit_indicator_leaf(
        &self,
        model: &mut MilpModel,
        pred: PredId,
        k: usize,
        negated: bool,
        beta_hat: f64,
        name: &str,
    ) -> Result<VarId, MilpError> {
        let reach = &self.reach[k];
        let terms = margin_terms(self.table.get(pred), negated);
        let is_min = matches!(
            (self.table.get(pred), negated),
            (AtomicPredicate::BoxRegion { .. }, false)
                | (AtomicPredicate::PairwiseSeparation { .. }, true)
        );
        if is_min {
            // conjunction of margins: one binary gates them all
            let z = model.add_var(name.to_string(), 0.0, 1.0, super::model::VarKind::Binary);
            for (j, t) in terms.iter().enumerate() {
                let (tl, th) = t.interval(reach);
                if tl >= beta_hat {
                    continue; // already guaranteed
                }
                if th < beta_hat {
                    model.fix_var(z, 0.0);
                    continue;
                }
                let big = beta_hat - tl;
                // t >= beta - big (1 - z)
                let mut row = vec![(z, -big)];
                t.append(&self.handles.x[k], &mut row);
                model.add_constraint(
                    format!("{name}_g{j}"),
                    row,
                    Sense::Ge,
                    beta_hat - big - t.constant,
                );
            }
            Ok(z)
        } else {
            // disjunction of margins: selector binaries, z covered by them
            let z = model.add_continuous(name.to_string(), 0.0, 1.0);
            let mut cover = vec![(z, 1.0)];
            let mut any_possible = false;
            for (j, t) in terms.iter().enumerate() {
                let (tl, th) = t.interval(reach);
                if th < beta_hat {
                    continue; // side unreachable, no selector
                }
                any_possible = true;
                if tl >= beta_hat {
                    // side always available: z free up to 1
                    cover.clear();
                    break;
                }
                let b = model.add_binary(format!("b{}_{j}", &name[1..]));
                let big = beta_hat - tl;
                let mut row = vec![(b, -big)];
                t.append(&self.handles.x[k], &mut row);
                model.add_constraint(
                    format!("{name}_g{j}"),
                    row,
                    Sense::Ge,
                    beta_hat - big - t.constant,
                );
                cover.push((b, -1.0));
            }
            if !any_possible {
                model.fix_var(z, 0.0);
            } else if cover.len() > 1 {
                model.add_constraint(format!("{name}_cover"), cover, Sense::Le, 0.0);
            }
            Ok(z)
        }
    }

    /// Topological order (children before parents), deterministic.
    fn topo_from(&self, root: u32) -> Vec<u32> {
        let mut seen = vec![false; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![(root, false)];
        while let Some((id, expanded)) = stack.pop() {
            if expanded {
                order.push(id);
                continue;
            }
            if seen[id as usize] {
                continue;
            }
            seen[id as usize] = true;
            stack.push((id, true));
            match &self.nodes[id as usize] {
                DagNode::Leaf { .. } => {}
                DagNode::All(c) | DagNode::Any(c) => {
                    for &child in c.iter().rev() {
                        if !seen[child as usize] {
                            stack.push((child, false));
                        }
                    }
                }
            }
        }
        order
    }
}

// ---------------------------------------------------------------------------
// affine margin terms of atomic predicates
// ---------------------------------------------------------------------------

/// One affine margin `Σ coef * x[coord] + constant` of a predicate at a
/// fixed time step.
struct MarginTerm {
    coords: Vec<(usize, f64)>,
    constant: f64,
}

impl MarginTerm {
    fn interval(&self, reach: &[(f64, f64)]) -> (f64, f64) {
        let mut lo = self.constant;
        let mut hi = self.constant;
        for &(c, a) in &self.coords {
            let (rl, rh) = reach[c];
            if a >= 0.0 {
                lo += a * rl;
                hi += a * rh;
            } else {
                lo += a * rh;
                hi += a * rl;
            }
        }
        (lo, hi)
    }

    /// Push `+term` variable coefficients onto a row.
    fn append(&self, xk: &[VarId], row: &mut Vec<(VarId, f64)>) {
        for &(c, a) in &self.coords {
            row.push((xk[c], a));
        }
    }

    /// Push `-term` variable coefficients onto a row.
    fn append_negated(&self, xk: &[VarId], row: &mut Vec<(VarId, f64)>) {
        for &(c, a) in &self.coords {
            row.push((xk[c], -a));
        }
    }
}

/// Affine margins whose min (box) or max (separation) is the signed
/// distance; negation swaps the combinator and flips the terms.
fn margin_terms(pred: &AtomicPredicate, negated: bool) -> Vec<MarginTerm> {
    let mut terms = Vec::new();
    match pred {
        AtomicPredicate::BoxRegion { dims, lower, upper } => {
            for (i, &d) in dims.iter().enumerate() {
                if let Some(lo) = lower[i] {
                    terms.push(MarginTerm { coords: vec![(d, 1.0)], constant: -lo });
                }
                if let Some(hi) = upper[i] {
                    terms.push(MarginTerm { coords: vec![(d, -1.0)], constant: hi });
                }
            }
        }
        AtomicPredicate::PairwiseSeparation { left, right, d_safe } => {
            for (&l, &r) in left.iter().zip(right) {
                terms.push(MarginTerm {
                    coords: vec![(l, 1.0), (r, -1.0)],
                    constant: -d_safe,
                });
                terms.push(MarginTerm {
                    coords: vec![(l, -1.0), (r, 1.0)],
                    constant: -d_safe,
                });
            }
        }
    }
    if negated {
        for t in &mut terms {
            for (_, a) in &mut t.coords {
                *a = -*a;
            }
            t.constant = -t.constant;
        }
    }
    terms
}

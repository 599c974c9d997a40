use std::time::Duration;

/// Handle to a model variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub(crate) u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> VarId {
        VarId(i as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub kind: VarKind,
    /// Objective coefficient (minimization).
    pub obj: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Sparse linear constraint `terms {<=,>=,=} rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A mixed-integer linear program under construction. Binaries appear only
/// as selector bits inside max/min and disjunction gadgets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MilpModel {
    pub name: String,
    vars: Vec<Variable>,
    cons: Vec<Constraint>,
    /// Scenario-derived big-M recorded for diagnostics; individual rows use
    /// interval-tightened constants no larger than this.
    pub big_m: f64,
}

impl MilpModel {
    pub fn new(name: &str) -> Self {
        MilpModel { name: name.to_string(), vars: Vec::new(), cons: Vec::new(), big_m: 0.0 }
    }

    pub fn add_var(&mut self, name: String, lb: f64, ub: f64, kind: VarKind) -> VarId {
        debug_assert!(lb <= ub || (lb - ub).abs() < 1e-12, "{name}: lb {lb} > ub {ub}");
        let id = VarId(self.vars.len() as u32);
        self.vars.push(Variable { name, lb, ub, kind, obj: 0.0 });
        id
    }

    pub fn add_continuous(&mut self, name: String, lb: f64, ub: f64) -> VarId {
        self.add_var(name, lb, ub, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: String) -> VarId {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    pub fn set_objective_coef(&mut self, var: VarId, coef: f64) {
        self.vars[var.index()].obj = coef;
    }

    pub fn add_objective_coef(&mut self, var: VarId, coef: f64) {
        self.vars[var.index()].obj += coef;
    }

    pub fn set_bounds(&mut self, var: VarId, lb: f64, ub: f64) {
        let v = &mut self.vars[var.index()];
        v.lb = lb;
        v.ub = ub;
    }

    /// Pin a variable to an exact value.
    pub fn fix_var(&mut self, var: VarId, value: f64) {
        self.set_bounds(var, value, value);
    }

    pub fn add_constraint(
        &mut self,
        name: String,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        debug_assert!(terms.iter().all(|(v, _)| v.index() < self.vars.len()));
        self.cons.push(Constraint { name, terms, sense, rhs });
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub(crate) fn vars_mut(&mut self) -> &mut [Variable] {
        &mut self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.index()]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.cons
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.cons.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.vars.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn objective_value(&self, assignment: &[f64]) -> f64 {
        self.vars.iter().zip(assignment).map(|(v, x)| v.obj * x).sum()
    }

    /// Largest constraint or bound violation of `assignment`.
    pub fn max_violation(&self, assignment: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &x) in self.vars.iter().zip(assignment) {
            worst = worst.max(v.lb - x).max(x - v.ub);
        }
        for c in &self.cons {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * assignment[v.index()]).sum();
            let viol = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Largest distance of any binary from an integer value.
    pub fn max_integrality_gap(&self, assignment: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(assignment)
            .filter(|(v, _)| v.kind == VarKind::Binary)
            .map(|(_, &x)| (x - x.round()).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    BudgetExceeded,
}

/// Outcome of a branch-and-bound run. `BudgetExceeded` carries the incumbent
/// when one was found.
#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    pub assignment: Option<Vec<f64>>,
    pub nodes: u64,
    pub wall: Duration,
}

impl Solution {
    pub fn value(&self, var: VarId) -> Option<f64> {
        self.assignment.as_ref().map(|a| a[var.index()])
    }
}

//! Backend-agnostic modeling layer for semidefinite feasibility and
//! minimization problems.
//!
//! Decision variables are symmetric matrices and scalars; constraints are
//! affine symmetric-matrix expressions required PSD (optionally with a
//! strictness margin ε·I); the objective is linear. Problems are lowered to a
//! conic program over scaled-triangle PSD cones and handed to Clarabel.

use std::collections::HashMap;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};
use crate::linalg::min_symmetric_eig;
use crate::Matrix;

/// Solver configuration shared by every call that builds or solves a problem.
#[derive(Debug, Clone)]
pub struct SdpSettings {
    pub max_iter: u32,
    /// Feasibility/gap tolerance handed to the interior-point solver.
    pub tol: f64,
    /// Strict inequalities "≻ 0" are modeled as ⪰ ε·I with
    /// ε = strictness_scale · (data scale of the block).
    pub strictness_scale: f64,
    pub verbose: bool,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-9, strictness_scale: 1e-7, verbose: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(usize);

#[derive(Debug, Clone)]
enum VarKind {
    Symmetric(usize),
    Scalar,
}

/// Affine scalar expression c0 + Σ coeff·x_k over the problem's decision
/// vector.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    c0: f64,
    terms: HashMap<usize, f64>,
}

impl LinExpr {
    pub fn constant(v: f64) -> Self {
        Self { c0: v, terms: HashMap::new() }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.c0 += other.c0;
        for (&k, &v) in &other.terms {
            *out.terms.entry(k).or_insert(0.0) += v;
        }
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> LinExpr {
        let mut out = self.clone();
        out.c0 *= s;
        for v in out.terms.values_mut() {
            *v *= s;
        }
        out
    }

    pub fn offset(&self, c: f64) -> LinExpr {
        let mut out = self.clone();
        out.c0 += c;
        out
    }

    /// Expand into the matrix expression `self · m`.
    pub fn times_matrix(&self, m: &Matrix) -> MatExpr {
        let mut out = MatExpr::zeros(m.nrows());
        out.c0 = m * self.c0;
        for (&k, &v) in &self.terms {
            out.coeffs.insert(k, m * v);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.c0 + self.terms.iter().map(|(&k, &v)| v * x[k]).sum::<f64>()
    }
}

/// Affine symmetric-matrix expression C0 + Σ M_k·x_k.
#[derive(Debug, Clone)]
pub struct MatExpr {
    dim: usize,
    c0: Matrix,
    coeffs: HashMap<usize, Matrix>,
}

impl MatExpr {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, c0: Matrix::zeros(dim, dim), coeffs: HashMap::new() }
    }

    pub fn constant(m: &Matrix) -> Self {
        Self { dim: m.nrows(), c0: m.clone(), coeffs: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn add(&self, other: &MatExpr) -> MatExpr {
        let mut out = self.clone();
        out.c0 += &other.c0;
        for (&k, m) in &other.coeffs {
            out.coeffs
                .entry(k)
                .and_modify(|e| *e += m)
                .or_insert_with(|| m.clone());
        }
        out
    }

    pub fn sub(&self, other: &MatExpr) -> MatExpr {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> MatExpr {
        let mut out = self.clone();
        out.c0 *= s;
        for m in out.coeffs.values_mut() {
            *m *= s;
        }
        out
    }

    /// Congruence Tᵀ·E·T, mapping a dim×dim expression to one of t.ncols().
    pub fn congruence(&self, t: &Matrix) -> MatExpr {
        let mut out = MatExpr::zeros(t.ncols());
        out.c0 = t.transpose() * &self.c0 * t;
        for (&k, m) in &self.coeffs {
            out.coeffs.insert(k, t.transpose() * m * t);
        }
        out
    }

    /// sym(L·E·R) = L·E·R + Rᵀ·E·Lᵀ for a symmetric expression E;
    /// L is D×dim and R is dim×D.
    pub fn sym_two_sided(&self, l: &Matrix, r: &Matrix) -> MatExpr {
        let d = l.nrows();
        let mut out = MatExpr::zeros(d);
        let base = l * &self.c0 * r;
        out.c0 = &base + base.transpose();
        for (&k, m) in &self.coeffs {
            let lmr = l * m * r;
            out.coeffs.insert(k, &lmr + lmr.transpose());
        }
        out
    }

    /// Add c·I to the expression.
    pub fn shift_diag(&self, c: f64) -> MatExpr {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.c0[(i, i)] += c;
        }
        out
    }

    /// 1×1 block from a scalar expression.
    pub fn from_lin(l: &LinExpr) -> MatExpr {
        let mut out = MatExpr::zeros(1);
        out.c0[(0, 0)] = l.c0;
        for (&k, &v) in &l.terms {
            out.coeffs.insert(k, Matrix::from_element(1, 1, v));
        }
        out
    }

    /// Symmetric 2×2 block [[u, w], [w, v]] from scalar expressions.
    pub fn sym2(u: &LinExpr, w: &LinExpr, v: &LinExpr) -> MatExpr {
        let mut out = MatExpr::zeros(2);
        let mut put = |l: &LinExpr, i: usize, j: usize| {
            let mirror = i != j;
            out.c0[(i, j)] += l.c0;
            if mirror {
                out.c0[(j, i)] += l.c0;
            }
            for (&k, &val) in &l.terms {
                let entry = out.coeffs.entry(k).or_insert_with(|| Matrix::zeros(2, 2));
                entry[(i, j)] += val;
                if mirror {
                    entry[(j, i)] += val;
                }
            }
        };
        put(u, 0, 0);
        put(v, 1, 1);
        put(w, 0, 1);
        out
    }

    /// Place `block` at the leading diagonal position of a larger expression.
    fn embed(&self, dim: usize) -> MatExpr {
        let mut out = MatExpr::zeros(dim);
        out.c0.view_mut((0, 0), (self.dim, self.dim)).copy_from(&self.c0);
        for (&k, m) in &self.coeffs {
            let mut big = Matrix::zeros(dim, dim);
            big.view_mut((0, 0), (self.dim, self.dim)).copy_from(m);
            out.coeffs.insert(k, big);
        }
        out
    }

    fn add_entry(&mut self, col: usize, i: usize, j: usize, v: f64) {
        let entry = self
            .coeffs
            .entry(col)
            .or_insert_with(|| Matrix::zeros(self.dim, self.dim));
        entry[(i, j)] += v;
        if i != j {
            entry[(j, i)] += v;
        }
    }

    /// Largest data magnitude, used to scale strictness margins.
    fn data_scale(&self) -> f64 {
        let mut s = self.c0.amax();
        for m in self.coeffs.values() {
            s = s.max(m.amax());
        }
        s.max(1.0)
    }

    /// Evaluate at a decision vector.
    pub fn eval(&self, x: &[f64]) -> Matrix {
        let mut out = self.c0.clone();
        for (&k, m) in &self.coeffs {
            out += m * x[k];
        }
        out
    }

    fn max_index(&self) -> Option<usize> {
        self.coeffs.keys().copied().max()
    }
}

struct Constraint {
    name: String,
    /// Normalized expression required ⪰ 0 (margin already folded in).
    expr: MatExpr,
    /// Margin that was subtracted from the strict original.
    margin: f64,
}

/// A semidefinite program over symmetric-matrix and scalar variables.
pub struct SdpProblem {
    vars: Vec<(String, VarKind, usize)>,
    total: usize,
    constraints: Vec<Constraint>,
    objective: Option<LinExpr>,
    settings: SdpSettings,
    aux_counter: usize,
}

impl SdpProblem {
    pub fn new(settings: SdpSettings) -> Self {
        Self {
            vars: Vec::new(),
            total: 0,
            constraints: Vec::new(),
            objective: None,
            settings,
            aux_counter: 0,
        }
    }

    pub fn settings(&self) -> &SdpSettings {
        &self.settings
    }

    /// Declare an n×n symmetric matrix variable.
    pub fn symmetric_var(&mut self, name: &str, n: usize) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push((name.to_string(), VarKind::Symmetric(n), self.total));
        self.total += n * (n + 1) / 2;
        id
    }

    /// Declare a scalar variable.
    pub fn scalar_var(&mut self, name: &str) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push((name.to_string(), VarKind::Scalar, self.total));
        self.total += 1;
        id
    }

    /// The matrix expression equal to a symmetric variable.
    pub fn sym_expr(&self, id: VarId) -> MatExpr {
        let (_, kind, offset) = &self.vars[id.0];
        let n = match kind {
            VarKind::Symmetric(n) => *n,
            VarKind::Scalar => panic!("sym_expr called on a scalar variable"),
        };
        let mut out = MatExpr::zeros(n);
        let mut k = *offset;
        for j in 0..n {
            for i in j..n {
                out.add_entry(k, i, j, 1.0);
                k += 1;
            }
        }
        out
    }

    /// The scalar expression equal to a scalar variable.
    pub fn lin(&self, id: VarId) -> LinExpr {
        let (_, kind, offset) = &self.vars[id.0];
        match kind {
            VarKind::Scalar => {}
            VarKind::Symmetric(_) => panic!("lin called on a matrix variable"),
        }
        let mut terms = HashMap::new();
        terms.insert(*offset, 1.0);
        LinExpr { c0: 0.0, terms }
    }

    /// Tr(C·X) for a symmetric variable X and constant C.
    pub fn trace_product(&self, id: VarId, c: &Matrix) -> LinExpr {
        let (_, kind, offset) = &self.vars[id.0];
        let n = match kind {
            VarKind::Symmetric(n) => *n,
            VarKind::Scalar => panic!("trace_product needs a matrix variable"),
        };
        assert_eq!(c.nrows(), n, "trace weight dimension mismatch");
        let mut terms = HashMap::new();
        let mut k = *offset;
        for j in 0..n {
            for i in j..n {
                let v = if i == j { c[(i, i)] } else { c[(i, j)] + c[(j, i)] };
                if v != 0.0 {
                    terms.insert(k, v);
                }
                k += 1;
            }
        }
        LinExpr { c0: 0.0, terms }
    }

    /// Tr(X) of a symmetric variable.
    pub fn trace(&self, id: VarId) -> LinExpr {
        let n = match &self.vars[id.0].1 {
            VarKind::Symmetric(n) => *n,
            VarKind::Scalar => panic!("trace needs a matrix variable"),
        };
        self.trace_product(id, &Matrix::identity(n, n))
    }

    /// Require expr ⪰ 0 (closed cone, no margin).
    pub fn add_psd(&mut self, name: &str, expr: MatExpr) {
        self.constraints
            .push(Constraint { name: name.to_string(), expr, margin: 0.0 });
    }

    /// Require expr ≻ 0, modeled as expr ⪰ ε·I with a data-scaled ε.
    pub fn add_pd(&mut self, name: &str, expr: MatExpr) {
        let margin = self.settings.strictness_scale * expr.data_scale();
        self.constraints.push(Constraint {
            name: name.to_string(),
            expr: expr.shift_diag(-margin),
            margin,
        });
    }

    /// Require expr ≺ 0, modeled as −expr ⪰ ε·I.
    pub fn add_nd(&mut self, name: &str, expr: MatExpr) {
        self.add_pd(name, expr.scale(-1.0));
    }

    /// Require l ≥ 0.
    pub fn add_ge0(&mut self, name: &str, l: LinExpr) {
        self.add_psd(name, MatExpr::from_lin(&l));
    }

    /// Minimize a linear functional.
    pub fn set_objective(&mut self, obj: LinExpr) {
        self.objective = Some(obj);
    }

    pub fn clear_objective(&mut self) {
        self.objective = None;
    }

    fn fresh_name(&mut self, stem: &str) -> String {
        self.aux_counter += 1;
        format!("{stem}#{}", self.aux_counter)
    }

    /// Number of scalar decision components.
    pub fn decision_dim(&self) -> usize {
        self.total
    }
}

/// Add the determinant-root epigraph t ≤ det(block)^(1/m) for an affine
/// symmetric m×m expression, via a lower-triangular auxiliary Λ with
/// [[block, Λ], [Λᵀ, diag(Λ)]] ⪰ 0 and a geometric-mean tower of 2×2 blocks
/// over diag(Λ), padded to the next power of two with copies of t.
pub fn rootdet_epigraph(problem: &mut SdpProblem, block: &MatExpr, t: VarId) -> Result<()> {
    let m = block.dim();
    if m == 0 {
        return Err(Error::ModelError("rootdet block must be nonempty".into()));
    }
    if let Some(max) = block.max_index() {
        if max >= problem.decision_dim() {
            return Err(Error::ModelError(
                "rootdet block references undeclared variables".into(),
            ));
        }
    }
    // bordered block with the triangular factor
    let mut lambda: Vec<Vec<VarId>> = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = Vec::with_capacity(i + 1);
        for _ in 0..=i {
            let name = problem.fresh_name("rootdet_l");
            row.push(problem.scalar_var(&name));
        }
        lambda.push(row);
    }
    let mut bordered = block.embed(2 * m);
    for (i, row) in lambda.iter().enumerate() {
        for (j, id) in row.iter().enumerate() {
            let offset = problem.vars[id.0].2;
            bordered.add_entry(offset, i, m + j, 1.0);
            if i == j {
                bordered.add_entry(offset, m + i, m + i, 1.0);
            }
        }
    }
    let name = problem.fresh_name("rootdet_bordered");
    problem.add_psd(&name, bordered);

    // geometric-mean tower over diag(Λ), padded with t
    let p = m.next_power_of_two();
    let mut layer: Vec<LinExpr> = (0..p)
        .map(|i| {
            if i < m {
                problem.lin(lambda[i][i])
            } else {
                problem.lin(t)
            }
        })
        .collect();
    while layer.len() > 1 {
        let mut next = Vec::with_capacity(layer.len() / 2);
        for pair in layer.chunks(2) {
            if layer.len() == 2 {
                // top of the tower bounds t directly
                let name = problem.fresh_name("rootdet_top");
                let expr = MatExpr::sym2(&pair[0], &problem.lin(t), &pair[1]);
                problem.add_psd(&name, expr);
                next.push(problem.lin(t));
            } else {
                let gm_name = problem.fresh_name("rootdet_gm");
                let w = problem.scalar_var(&gm_name);
                let name = problem.fresh_name("rootdet_cell");
                let expr = MatExpr::sym2(&pair[0], &problem.lin(w), &pair[1]);
                problem.add_psd(&name, expr);
                next.push(problem.lin(w));
            }
        }
        layer = next;
    }
    if p == 1 {
        // degenerate 1×1 tower: t ≤ λ_00
        let name = problem.fresh_name("rootdet_top");
        let bound = layer[0].sub(&problem.lin(t));
        problem.add_ge0(&name, bound);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Feasible,
    Infeasible,
    NumericalFailure,
}

/// Values assigned to the problem variables by the solver.
pub struct SdpSolution {
    pub status: SdpStatus,
    pub objective_value: Option<f64>,
    x: Vec<f64>,
    raw_status: String,
}

impl SdpSolution {
    pub fn matrix(&self, problem: &SdpProblem, id: VarId) -> Matrix {
        problem.sym_expr(id).eval(&self.x)
    }

    pub fn scalar(&self, problem: &SdpProblem, id: VarId) -> f64 {
        problem.lin(id).eval(&self.x)
    }

    pub fn lin_value(&self, l: &LinExpr) -> f64 {
        l.eval(&self.x)
    }

    pub fn mat_value(&self, e: &MatExpr) -> Matrix {
        e.eval(&self.x)
    }

    pub fn raw_status(&self) -> &str {
        &self.raw_status
    }

    /// Minimum eigenvalue of each strict constraint's original expression
    /// (before margin folding), for post-hoc slack checks.
    pub fn strict_margins(&self, problem: &SdpProblem) -> Vec<(String, f64, f64)> {
        problem
            .constraints
            .iter()
            .filter(|c| c.margin > 0.0)
            .map(|c| {
                let original = c.expr.shift_diag(c.margin);
                (c.name.clone(), min_symmetric_eig(&original.eval(&self.x)), c.margin)
            })
            .collect()
    }

    /// Worst violation over all constraints (negative slack of ⪰ 0).
    pub fn worst_violation(&self, problem: &SdpProblem) -> f64 {
        problem
            .constraints
            .iter()
            .map(|c| -min_symmetric_eig(&c.expr.eval(&self.x)))
            .fold(0.0, f64::max)
    }
}

/// svec with off-diagonal √2 scaling, upper triangle stacked columnwise,
/// matching the solver's PSD triangle cone layout.
fn svec_into(m: &Matrix, out: &mut Vec<f64>) {
    let rt2 = std::f64::consts::SQRT_2;
    let d = m.nrows();
    for j in 0..d {
        for i in 0..=j {
            out.push(if i == j { m[(i, j)] } else { rt2 * m[(i, j)] });
        }
    }
}

/// Solve the problem with the conic backend.
pub fn solve(problem: &SdpProblem) -> Result<SdpSolution> {
    let n = problem.total;
    for c in &problem.constraints {
        if let Some(max) = c.expr.max_index() {
            if max >= n {
                return Err(Error::ModelError(format!(
                    "constraint '{}' references undeclared variables",
                    c.name
                )));
            }
        }
        if c.expr.dim == 0 {
            return Err(Error::ModelError(format!("constraint '{}' is empty", c.name)));
        }
    }
    if let Some(obj) = &problem.objective {
        if obj.terms.keys().any(|&k| k >= n) {
            return Err(Error::ModelError("objective references undeclared variables".into()));
        }
    }

    let total_rows: usize = problem
        .constraints
        .iter()
        .map(|c| c.expr.dim * (c.expr.dim + 1) / 2)
        .sum();

    // b − A x ∈ cone, per constraint block: b = svec(C0), A column k = −svec(M_k)
    let mut b = Vec::with_capacity(total_rows);
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut cones = Vec::with_capacity(problem.constraints.len());
    let mut row0 = 0usize;
    for c in &problem.constraints {
        let d = c.expr.dim;
        svec_into(&c.expr.c0, &mut b);
        for (&k, m) in &c.expr.coeffs {
            let mut sv = Vec::with_capacity(d * (d + 1) / 2);
            svec_into(m, &mut sv);
            for (i, v) in sv.into_iter().enumerate() {
                if v != 0.0 {
                    cols[k].push((row0 + i, -v));
                }
            }
        }
        if d == 1 {
            cones.push(SupportedConeT::NonnegativeConeT(1));
        } else {
            cones.push(SupportedConeT::PSDTriangleConeT(d));
        }
        row0 += d * (d + 1) / 2;
    }

    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for col in &mut cols {
        col.sort_by_key(|(r, _)| *r);
        for &(r, v) in col.iter() {
            rowval.push(r);
            nzval.push(v);
        }
        colptr.push(rowval.len());
    }
    let a_mat = CscMatrix::new(total_rows, n, colptr, rowval, nzval);
    let p_mat = CscMatrix::<f64>::zeros((n, n));
    let mut q = vec![0.0; n];
    if let Some(obj) = &problem.objective {
        for (&k, &v) in &obj.terms {
            q[k] += v;
        }
    }

    let settings = DefaultSettingsBuilder::default()
        .verbose(problem.settings.verbose)
        .max_iter(problem.settings.max_iter)
        .tol_feas(problem.settings.tol)
        .tol_gap_abs(problem.settings.tol)
        .tol_gap_rel(problem.settings.tol)
        .build()
        .map_err(|e| Error::ModelError(format!("bad solver settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p_mat, &q, &a_mat, &b, &cones, settings)
        .map_err(|e| Error::ModelError(format!("solver rejected the model: {e:?}")))?;
    solver.solve();

    let raw = format!("{:?}", solver.solution.status);
    let status = match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => SdpStatus::Feasible,
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            SdpStatus::Infeasible
        }
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
            SdpStatus::NumericalFailure
        }
        _ => SdpStatus::NumericalFailure,
    };
    let x = solver.solution.x.clone();
    let objective_value = match (status, &problem.objective) {
        (SdpStatus::Feasible, Some(obj)) => Some(obj.eval(&x)),
        _ => None,
    };
    Ok(SdpSolution { status, objective_value, x, raw_status: raw })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_constrained_trace_minimization() {
        let mut prob = SdpProblem::new(SdpSettings::default());
        let x = prob.symmetric_var("X", 2);
        let xe = prob.sym_expr(x);
        prob.add_psd("x_ge_i", xe.shift_diag(-1.0));
        prob.add_psd("x_le_2i", xe.scale(-1.0).shift_diag(2.0));
        let tr = prob.trace(x);
        prob.set_objective(tr);
        let sol = solve(&prob).unwrap();
        assert_eq!(sol.status, SdpStatus::Feasible);
        assert_abs_diff_eq!(sol.objective_value.unwrap(), 2.0, epsilon = 1e-6);
        let xv = sol.matrix(&prob, x);
        assert!((xv - Matrix::identity(2, 2)).amax() < 1e-5);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut prob = SdpProblem::new(SdpSettings::default());
        let x = prob.symmetric_var("X", 2);
        let xe = prob.sym_expr(x);
        prob.add_psd("x_ge_2i", xe.shift_diag(-2.0));
        prob.add_psd("x_le_i", xe.scale(-1.0).shift_diag(1.0));
        let sol = solve(&prob).unwrap();
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn correlation_corner_maximizes_offdiagonal() {
        // maximize t s.t. [[1, t], [t, 1]] ⪰ 0 → t = 1
        let mut prob = SdpProblem::new(SdpSettings::default());
        let t = prob.scalar_var("t");
        let one = LinExpr::constant(1.0);
        let expr = MatExpr::sym2(&one, &prob.lin(t), &one);
        prob.add_psd("corr", expr);
        let neg_t = prob.lin(t).scale(-1.0);
        prob.set_objective(neg_t);
        let sol = solve(&prob).unwrap();
        assert_eq!(sol.status, SdpStatus::Feasible);
        assert_abs_diff_eq!(sol.scalar(&prob, t), 1.0, epsilon = 1e-6);
    }

    fn maximize_rootdet_of(block: &Matrix) -> f64 {
        let mut prob = SdpProblem::new(SdpSettings::default());
        let t = prob.scalar_var("t");
        rootdet_epigraph(&mut prob, &MatExpr::constant(block), t).unwrap();
        let neg_t = prob.lin(t).scale(-1.0);
        prob.set_objective(neg_t);
        let sol = solve(&prob).unwrap();
        assert_eq!(sol.status, SdpStatus::Feasible, "{}", sol.raw_status());
        sol.scalar(&prob, t)
    }

    #[test]
    fn rootdet_of_fixed_blocks() {
        let t = maximize_rootdet_of(&Matrix::from_partial_diagonal(2, 2, &[1.0, 4.0]));
        assert_abs_diff_eq!(t, 2.0, epsilon = 1e-5);
        for m in 1..=4usize {
            let t = maximize_rootdet_of(&Matrix::identity(m, m));
            assert_abs_diff_eq!(t, 1.0, epsilon = 1e-5);
        }
        let t = maximize_rootdet_of(&Matrix::from_element(1, 1, 0.37));
        assert_abs_diff_eq!(t, 0.37, epsilon = 1e-6);
    }

    #[test]
    fn rootdet_matches_determinant_on_random_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for m in 1..=4usize {
            for _ in 0..5 {
                let g = Matrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
                let psd = &g * g.transpose() + Matrix::identity(m, m) * 0.2;
                let expected = psd.determinant().powf(1.0 / m as f64);
                let t = maximize_rootdet_of(&psd);
                assert!(
                    (t - expected).abs() <= 1e-5 * expected.max(1.0),
                    "m={m}: rootdet {t} vs det^(1/m) {expected}"
                );
            }
        }
    }

    #[test]
    fn resolving_is_deterministic() {
        let build = || {
            let mut prob = SdpProblem::new(SdpSettings::default());
            let x = prob.symmetric_var("X", 3);
            let xe = prob.sym_expr(x);
            prob.add_psd("lower", xe.shift_diag(-0.5));
            prob.add_psd("upper", xe.scale(-1.0).shift_diag(3.0));
            let w = Matrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
            let obj = prob.trace_product(x, &w);
            prob.set_objective(obj);
            prob
        };
        let a = solve(&build()).unwrap();
        let b = solve(&build()).unwrap();
        assert_eq!(a.status, b.status);
        assert_abs_diff_eq!(
            a.objective_value.unwrap(),
            b.objective_value.unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn strictness_margin_is_honored() {
        let mut prob = SdpProblem::new(SdpSettings::default());
        let x = prob.symmetric_var("X", 2);
        let xe = prob.sym_expr(x);
        // X ≻ 0 and X ⪯ I, maximize Tr X pushes to the upper bound
        prob.add_pd("x_pd", xe.clone());
        prob.add_psd("x_le_i", xe.scale(-1.0).shift_diag(1.0));
        let obj = prob.trace(x).scale(-1.0);
        prob.set_objective(obj);
        let sol = solve(&prob).unwrap();
        assert_eq!(sol.status, SdpStatus::Feasible);
        for (name, min_eig, margin) in sol.strict_margins(&prob) {
            assert!(
                min_eig >= margin / 2.0,
                "constraint {name}: margin {min_eig:e} below ε/2 = {:e}",
                margin / 2.0
            );
        }
        assert!(sol.worst_violation(&prob) <= 1e-7);
    }

    #[test]
    fn model_errors_are_reported_before_solving() {
        let probe = SdpProblem::new(SdpSettings::default());
        let mut other = SdpProblem::new(SdpSettings::default());
        let x = other.symmetric_var("X", 2);
        let foreign = other.sym_expr(x);
        let mut broken = SdpProblem::new(SdpSettings::default());
        broken.add_psd("foreign", foreign);
        assert!(matches!(solve(&broken), Err(Error::ModelError(_))));
        drop(probe);
    }
}

//! Bounded-variable revised simplex engine.
//!
//! Primal simplex (Phase I + Phase II) for cold and warm solves, and a dual
//! simplex used to re-solve after tightening a single variable bound from an
//! optimal basis. The basis is factorized as a dense LU with partial pivoting
//! and updated in product form, refactorizing periodically.
//!
//! The kernel is floating-point: downstream consumers extract valid integer
//! ranges with their own safety margins, and exact feasibility of integer
//! points is decided in the data model, never here.

use crate::model::{Problem, ReducedProblem};

/// Optimization direction of an [`LpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Dense LP over `A x <= b` rows plus per-variable bounds.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub sense: Sense,
    /// Structural objective coefficients, length `n`.
    pub obj: Vec<f64>,
    pub obj_const: f64,
    /// Dense rows, each of length `n`.
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    /// Per-variable lower bounds (finite).
    pub lower: Vec<f64>,
    /// Per-variable upper bounds; `f64::INFINITY` when absent.
    pub upper: Vec<f64>,
}

impl LpModel {
    pub fn n(&self) -> usize {
        self.obj.len()
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    /// Floating mirror of a problem's relaxation with its own objective.
    pub fn from_problem(p: &Problem) -> LpModel {
        let n = p.n;
        let rows: Vec<Vec<f64>> = p
            .rows
            .iter()
            .map(|r| (0..n).map(|j| r.coeff_f64(j)).collect())
            .collect();
        let rhs = p.rows.iter().map(|r| r.rhs_f64()).collect();
        let upper = (0..n)
            .map(|j| p.upper_of(j).map_or(f64::INFINITY, |u| u as f64))
            .collect();
        LpModel {
            sense: Sense::Maximize,
            obj: p.c.iter().map(|&c| c as f64).collect(),
            obj_const: p.h as f64,
            rows,
            rhs,
            lower: vec![0.0; n],
            upper,
        }
    }

    /// Floating mirror of a reduced problem over its active variables only.
    pub fn from_reduced(r: &ReducedProblem<'_>) -> LpModel {
        let k = r.active_count();
        let rows: Vec<Vec<f64>> = r
            .base
            .rows
            .iter()
            .map(|row| {
                (0..k)
                    .map(|p| row.coeffs[r.active_index_map[p]] as f64 / row.den as f64)
                    .collect()
            })
            .collect();
        let rhs = r
            .base
            .rows
            .iter()
            .zip(&r.derived_b)
            .map(|(row, &b)| b as f64 / row.den as f64)
            .collect();
        let upper = (0..k)
            .map(|p| r.active_upper(p).map_or(f64::INFINITY, |u| u as f64))
            .collect();
        LpModel {
            sense: Sense::Maximize,
            obj: (0..k).map(|p| r.active_c(p) as f64).collect(),
            obj_const: r.derived_h as f64,
            rows,
            rhs,
            lower: vec![0.0; k],
            upper,
        }
    }

    /// Replaces the objective by `sense` of the single variable `j`.
    pub fn with_var_objective(&self, j: usize, sense: Sense) -> LpModel {
        let mut m = self.clone();
        m.obj = vec![0.0; self.n()];
        m.obj[j] = 1.0;
        m.obj_const = 0.0;
        m.sense = sense;
        m
    }

    /// Returns a copy with variable `j` fixed to `v` (lower = upper = v).
    pub fn with_fixed_var(&self, j: usize, v: f64) -> LpModel {
        let mut m = self.clone();
        m.lower[j] = v;
        m.upper[j] = v;
        m
    }
}

/// Simplex basis: enough state to warm-start a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    /// Variable index (structural then slack) basic in each row.
    pub basic: Vec<usize>,
    /// For nonbasic variables: whether they sit at their upper bound.
    pub at_upper: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpStatus {
    Optimal,
    /// Phase-I optimum left this much total bound violation.
    Infeasible { infeasibility: f64 },
    /// An improving unblocked direction on this variable was found.
    Unbounded { var: usize },
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural variable values (empty unless `Optimal`).
    pub point: Vec<f64>,
    /// Objective value including the constant, in the model's sense
    /// (`NaN` unless `Optimal`).
    pub value: f64,
    pub basis: Basis,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpError {
    /// Pivot limit hit; carries the best bound established so far.
    IterationLimit { best_bound: f64 },
    /// No acceptable pivot even after refactorization.
    NumericalBreakdown(String),
    BadModel(String),
    BadBound(String),
}

impl std::fmt::Display for LpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LpError::IterationLimit { best_bound } => {
                write!(f, "simplex iteration limit exceeded (best bound {best_bound})")
            }
            LpError::NumericalBreakdown(msg) => write!(f, "numerical breakdown: {msg}"),
            LpError::BadModel(msg) => write!(f, "malformed LP model: {msg}"),
            LpError::BadBound(msg) => write!(f, "invalid bound change: {msg}"),
        }
    }
}

impl std::error::Error for LpError {}

/// Simplex tolerances and limits. All configurable; the defaults follow
/// common practice for double-precision kernels.
#[derive(Debug, Clone)]
pub struct LpConfig {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    pub iter_limit: u64,
    pub refactor_every: usize,
}

impl Default for LpConfig {
    fn default() -> Self {
        LpConfig {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            pivot_tol: 1e-9,
            iter_limit: 500_000,
            refactor_every: 50,
        }
    }
}

/// Which side of variable `j` a re-solve tightens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundChange {
    SetUpper,
    SetLower,
}

/// Outcome of [`resolve_with_bound`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolveStatus {
    /// Dual simplex reached optimality: the bound is the restricted optimum.
    Exact,
    /// Stopped early at the iteration cap: the bound over-estimates the
    /// restricted maximum (under-estimates for `Minimize` models).
    ValidBound,
    /// The restricted problem has no feasible point.
    RestrictedInfeasible,
}

// ---------------------------------------------------------------------------
// Dense LU with partial pivoting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Lu {
    m: usize,
    /// Row-major packed LU factors of `P B`.
    data: Vec<f64>,
    /// Row swapped with row `k` at step `k`.
    perm: Vec<usize>,
}

impl Lu {
    fn factorize(mut data: Vec<f64>, m: usize, pivot_tol: f64) -> Option<Lu> {
        let mut perm = vec![0usize; m];
        for k in 0..m {
            let mut p = k;
            let mut best = data[k * m + k].abs();
            for i in k + 1..m {
                let v = data[i * m + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best < pivot_tol {
                return None;
            }
            perm[k] = p;
            if p != k {
                for j in 0..m {
                    data.swap(k * m + j, p * m + j);
                }
            }
            let piv = data[k * m + k];
            for i in k + 1..m {
                let l = data[i * m + k] / piv;
                data[i * m + k] = l;
                if l != 0.0 {
                    for j in k + 1..m {
                        data[i * m + j] -= l * data[k * m + j];
                    }
                }
            }
        }
        Some(Lu { m, data, perm })
    }

    /// Solves `B w = rhs` in place.
    fn ftran(&self, v: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            v.swap(k, self.perm[k]);
        }
        for i in 1..m {
            let mut s = v[i];
            for j in 0..i {
                s -= self.data[i * m + j] * v[j];
            }
            v[i] = s;
        }
        for i in (0..m).rev() {
            let mut s = v[i];
            for j in i + 1..m {
                s -= self.data[i * m + j] * v[j];
            }
            v[i] = s / self.data[i * m + i];
        }
    }

    /// Solves `B^T y = rhs` in place.
    fn btran(&self, v: &mut [f64]) {
        let m = self.m;
        // U^T is lower triangular
        for i in 0..m {
            let mut s = v[i];
            for j in 0..i {
                s -= self.data[j * m + i] * v[j];
            }
            v[i] = s / self.data[i * m + i];
        }
        // L^T is unit upper triangular
        for i in (0..m).rev() {
            let mut s = v[i];
            for j in i + 1..m {
                s -= self.data[j * m + i] * v[j];
            }
            v[i] = s;
        }
        for k in (0..m).rev() {
            v.swap(k, self.perm[k]);
        }
    }
}

/// Product-form update: records `w = B_old^{-1} a_q` entering at row `r`.
#[derive(Debug, Clone)]
struct Eta {
    r: usize,
    w: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Solver context
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Ctx<'a> {
    model: &'a LpModel,
    cfg: &'a LpConfig,
    /// True when the model minimizes: the canonical objective is negated.
    negated: bool,
    m: usize,
    nstruct: usize,
    ntot: usize,
    /// Canonical (maximize) objective over all variables, slacks zero.
    obj: Vec<f64>,
    /// Column-major copy of the structural columns.
    cols: Vec<Vec<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<VState>,
    basic: Vec<usize>,
    xb: Vec<f64>,
    lu: Option<Lu>,
    etas: Vec<Eta>,
    iterations: u64,
    degen_streak: u64,
    bland: bool,
    /// Set after a refactor retry so a second failure is terminal.
    just_refactored: bool,
}

enum Pricing {
    PhaseOne,
    PhaseTwo,
}

enum StepOutcome {
    Moved,
    NoEntering,
    NoBlocking { var: usize },
}

impl<'a> Ctx<'a> {
    fn new(model: &'a LpModel, cfg: &'a LpConfig) -> Result<Ctx<'a>, LpError> {
        let nstruct = model.n();
        let m = model.m();
        if model.rows.iter().any(|r| r.len() != nstruct) {
            return Err(LpError::BadModel("row length mismatch".into()));
        }
        if model.rhs.len() != m || model.lower.len() != nstruct || model.upper.len() != nstruct {
            return Err(LpError::BadModel("vector length mismatch".into()));
        }
        for j in 0..nstruct {
            if !model.lower[j].is_finite() {
                return Err(LpError::BadModel(format!("lower bound of x{j} not finite")));
            }
        }
        let ntot = nstruct + m;
        let negated = model.sense == Sense::Minimize;
        let mut obj = vec![0.0; ntot];
        for j in 0..nstruct {
            obj[j] = if negated { -model.obj[j] } else { model.obj[j] };
        }
        let mut lower = vec![0.0; ntot];
        let mut upper = vec![f64::INFINITY; ntot];
        lower[..nstruct].copy_from_slice(&model.lower);
        upper[..nstruct].copy_from_slice(&model.upper);
        let cols = (0..nstruct)
            .map(|j| model.rows.iter().map(|r| r[j]).collect())
            .collect();
        Ok(Ctx {
            model,
            cfg,
            negated,
            m,
            nstruct,
            ntot,
            obj,
            cols,
            lower,
            upper,
            state: vec![VState::AtLower; ntot],
            basic: Vec::new(),
            xb: Vec::new(),
            lu: None,
            etas: Vec::new(),
            iterations: 0,
            degen_streak: 0,
            bland: false,
            just_refactored: false,
        })
    }

    fn install_slack_basis(&mut self) {
        self.basic = (self.nstruct..self.ntot).collect();
        for j in 0..self.ntot {
            self.state[j] = VState::AtLower;
        }
        for (i, &v) in self.basic.clone().iter().enumerate() {
            self.state[v] = VState::Basic(i);
        }
    }

    fn install_basis(&mut self, basis: &Basis) -> Result<(), LpError> {
        if basis.basic.len() != self.m || basis.at_upper.len() != self.ntot {
            return Err(LpError::BadModel("warm basis has wrong dimensions".into()));
        }
        let mut seen = vec![false; self.ntot];
        for &v in &basis.basic {
            if v >= self.ntot || seen[v] {
                return Err(LpError::BadModel("warm basis indices invalid".into()));
            }
            seen[v] = true;
        }
        self.basic = basis.basic.clone();
        for j in 0..self.ntot {
            self.state[j] = if seen[j] {
                VState::AtLower // placeholder, fixed below
            } else if basis.at_upper[j] && self.upper[j].is_finite() {
                VState::AtUpper
            } else {
                VState::AtLower
            };
        }
        for (i, &v) in self.basic.clone().iter().enumerate() {
            self.state[v] = VState::Basic(i);
        }
        Ok(())
    }

    fn col_into(&self, j: usize, out: &mut [f64]) {
        if j < self.nstruct {
            out.copy_from_slice(&self.cols[j]);
        } else {
            out.fill(0.0);
            out[j - self.nstruct] = 1.0;
        }
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.nstruct {
            self.cols[j].iter().zip(y).map(|(a, b)| a * b).sum()
        } else {
            y[j - self.nstruct]
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VState::AtLower => self.lower[j],
            VState::AtUpper => self.upper[j],
            VState::Basic(_) => unreachable!("basic variable has no bound value"),
        }
    }

    fn refactorize(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut data = vec![0.0; m * m];
        let mut col = vec![0.0; m];
        for (i, &v) in self.basic.iter().enumerate() {
            self.col_into(v, &mut col);
            for r in 0..m {
                data[r * m + i] = col[r];
            }
        }
        self.lu = Some(
            Lu::factorize(data, m, self.cfg.pivot_tol)
                .ok_or_else(|| LpError::NumericalBreakdown("singular basis".into()))?,
        );
        self.etas.clear();
        Ok(())
    }

    fn ftran(&self, v: &mut [f64]) {
        self.lu.as_ref().expect("factorized").ftran(v);
        for eta in &self.etas {
            let piv = v[eta.r] / eta.w[eta.r];
            for i in 0..self.m {
                if i != eta.r {
                    v[i] -= eta.w[i] * piv;
                }
            }
            v[eta.r] = piv;
        }
    }

    fn btran(&self, v: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = 0.0;
            for i in 0..self.m {
                if i != eta.r {
                    s += eta.w[i] * v[i];
                }
            }
            v[eta.r] = (v[eta.r] - s) / eta.w[eta.r];
        }
        self.lu.as_ref().expect("factorized").btran(v);
    }

    fn compute_xb(&mut self) {
        let mut r = self.model.rhs.clone();
        for j in 0..self.ntot {
            if matches!(self.state[j], VState::Basic(_)) {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                if j < self.nstruct {
                    for i in 0..self.m {
                        r[i] -= self.cols[j][i] * v;
                    }
                } else {
                    r[j - self.nstruct] -= v;
                }
            }
        }
        self.ftran(&mut r);
        self.xb = r;
    }

    fn feas_tol_for(&self, bound: f64) -> f64 {
        self.cfg.feas_tol * (1.0 + bound.abs())
    }

    fn total_infeasibility(&self) -> f64 {
        let mut t = 0.0;
        for (i, &v) in self.basic.iter().enumerate() {
            let x = self.xb[i];
            if x < self.lower[v] {
                t += self.lower[v] - x;
            } else if x > self.upper[v] {
                t += x - self.upper[v];
            }
        }
        t
    }

    fn is_primal_feasible(&self) -> bool {
        self.basic.iter().enumerate().all(|(i, &v)| {
            self.xb[i] >= self.lower[v] - self.feas_tol_for(self.lower[v])
                && self.xb[i] <= self.upper[v] + self.feas_tol_for(self.upper[v])
        })
    }

    /// Canonical (maximize) objective at the current basic solution.
    fn canonical_raw_value(&self) -> f64 {
        let mut z = 0.0;
        for j in 0..self.ntot {
            let x = match self.state[j] {
                VState::Basic(i) => self.xb[i],
                _ => self.nonbasic_value(j),
            };
            z += self.obj[j] * x;
        }
        z
    }

    fn model_value(&self) -> f64 {
        let raw = self.canonical_raw_value();
        (if self.negated { -raw } else { raw }) + self.model.obj_const
    }

    fn reduced_costs(&self, pricing: &Pricing) -> Vec<f64> {
        let mut cb = vec![0.0; self.m];
        match pricing {
            Pricing::PhaseTwo => {
                for (i, &v) in self.basic.iter().enumerate() {
                    cb[i] = self.obj[v];
                }
            }
            Pricing::PhaseOne => {
                // maximize -infeasibility: gradient +1 below lower, -1 above upper
                for (i, &v) in self.basic.iter().enumerate() {
                    let x = self.xb[i];
                    if x < self.lower[v] - self.feas_tol_for(self.lower[v]) {
                        cb[i] = 1.0;
                    } else if x > self.upper[v] + self.feas_tol_for(self.upper[v]) {
                        cb[i] = -1.0;
                    }
                }
            }
        }
        self.btran(&mut cb);
        let y = cb;
        let mut d = vec![0.0; self.ntot];
        for j in 0..self.ntot {
            if matches!(self.state[j], VState::Basic(_)) {
                continue;
            }
            let cj = match pricing {
                Pricing::PhaseTwo => self.obj[j],
                Pricing::PhaseOne => 0.0,
            };
            d[j] = cj - self.col_dot(j, &y);
        }
        d
    }

    fn pick_entering(&self, d: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ntot {
            let fixed = self.upper[j] - self.lower[j] <= 0.0;
            if fixed {
                continue;
            }
            let eligible = match self.state[j] {
                VState::AtLower => d[j] > self.cfg.opt_tol,
                VState::AtUpper => d[j] < -self.cfg.opt_tol,
                VState::Basic(_) => false,
            };
            if !eligible {
                continue;
            }
            if self.bland {
                return Some(j);
            }
            let score = d[j].abs();
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    /// One primal pivot. `phase1` permits infeasible basics with the
    /// composite blocking rules.
    fn primal_step(&mut self, pricing: Pricing) -> Result<StepOutcome, LpError> {
        let phase1 = matches!(pricing, Pricing::PhaseOne);
        let d = self.reduced_costs(&pricing);
        let Some(q) = self.pick_entering(&d) else {
            return Ok(StepOutcome::NoEntering);
        };
        let t: f64 = match self.state[q] {
            VState::AtLower => 1.0,
            VState::AtUpper => -1.0,
            VState::Basic(_) => unreachable!(),
        };
        let mut w = vec![0.0; self.m];
        self.col_into(q, &mut w);
        self.ftran(&mut w);

        // blocking basic variable
        let mut limit = f64::INFINITY;
        let mut blocker: Option<(usize, VState)> = None; // (row, bound reached)
        for i in 0..self.m {
            let v = self.basic[i];
            let rate = -t * w[i];
            if rate.abs() <= self.cfg.pivot_tol {
                continue;
            }
            let x = self.xb[i];
            let lo = self.lower[v];
            let up = self.upper[v];
            let cand: Option<(f64, VState)> = if phase1 && x < lo - self.feas_tol_for(lo) {
                if rate > 0.0 {
                    Some(((lo - x) / rate, VState::AtLower))
                } else {
                    None
                }
            } else if phase1 && x > up + self.feas_tol_for(up) {
                if rate < 0.0 {
                    Some(((x - up) / -rate, VState::AtUpper))
                } else {
                    None
                }
            } else if rate > 0.0 {
                if up.is_finite() {
                    Some((((up - x) / rate).max(0.0), VState::AtUpper))
                } else {
                    None
                }
            } else {
                Some((((x - lo) / -rate).max(0.0), VState::AtLower))
            };
            if let Some((step, bound)) = cand {
                let better = if self.bland {
                    step < limit - self.cfg.feas_tol
                        || (step < limit + self.cfg.feas_tol
                            && blocker.map_or(true, |(bi, _)| v < self.basic[bi]))
                } else {
                    step < limit - self.cfg.feas_tol
                        || (step < limit + self.cfg.feas_tol
                            && blocker.map_or(true, |(bi, _)| w[i].abs() > w[bi].abs()))
                };
                if better {
                    limit = limit.min(step);
                    blocker = Some((i, bound));
                }
            }
        }

        // the entering variable can block itself at its opposite bound
        let own_range = self.upper[q] - self.lower[q];
        let self_blocks = own_range.is_finite() && own_range < limit;

        if !self_blocks && blocker.is_none() {
            if phase1 {
                // an infeasibility-reducing direction must hit a violated bound
                return self.retry_after_refactor("phase-1 ratio test found no block");
            }
            return Ok(StepOutcome::NoBlocking { var: q });
        }

        let step = if self_blocks { own_range } else { limit };
        if step <= self.cfg.feas_tol {
            self.degen_streak += 1;
        } else {
            self.degen_streak = 0;
        }
        if !self.bland && self.degen_streak > 3 * (self.ntot as u64) {
            self.bland = true;
        }

        for i in 0..self.m {
            self.xb[i] += -t * w[i] * step;
        }
        if self_blocks {
            self.state[q] = match self.state[q] {
                VState::AtLower => VState::AtUpper,
                VState::AtUpper => VState::AtLower,
                VState::Basic(_) => unreachable!(),
            };
        } else {
            let (row, bound) = blocker.expect("blocking row exists");
            if w[row].abs() < self.cfg.pivot_tol {
                return self.retry_after_refactor("tiny primal pivot element");
            }
            let entering_value = self.nonbasic_value(q) + t * step;
            let leaving = self.basic[row];
            self.state[leaving] = bound;
            self.state[q] = VState::Basic(row);
            self.basic[row] = q;
            self.xb[row] = entering_value;
            self.push_eta(row, w)?;
        }
        self.iterations += 1;
        self.just_refactored = false;
        Ok(StepOutcome::Moved)
    }

    fn push_eta(&mut self, r: usize, w: Vec<f64>) -> Result<(), LpError> {
        self.etas.push(Eta { r, w });
        if self.etas.len() >= self.cfg.refactor_every {
            self.refactorize()?;
            self.compute_xb();
        }
        Ok(())
    }

    /// Refactorizes once and signals the caller to retry, or errors out if the
    /// factors are already fresh.
    fn retry_after_refactor(&mut self, what: &str) -> Result<StepOutcome, LpError> {
        if self.just_refactored && self.etas.is_empty() {
            return Err(LpError::NumericalBreakdown(what.into()));
        }
        self.refactorize()?;
        self.compute_xb();
        self.just_refactored = true;
        Ok(StepOutcome::Moved)
    }

    fn run_primal(&mut self) -> Result<LpStatus, LpError> {
        // Phase I
        loop {
            if self.iterations >= self.cfg.iter_limit {
                return Err(LpError::IterationLimit {
                    best_bound: self.model_value(),
                });
            }
            if self.is_primal_feasible() {
                break;
            }
            match self.primal_step(Pricing::PhaseOne)? {
                StepOutcome::Moved => {}
                StepOutcome::NoEntering => {
                    let infeas = self.total_infeasibility();
                    if infeas > self.cfg.feas_tol {
                        return Ok(LpStatus::Infeasible {
                            infeasibility: infeas,
                        });
                    }
                    break;
                }
                StepOutcome::NoBlocking { .. } => {
                    unreachable!("phase 1 never reports unblocked directions")
                }
            }
        }
        // Phase II
        loop {
            if self.iterations >= self.cfg.iter_limit {
                return Err(LpError::IterationLimit {
                    best_bound: self.model_value(),
                });
            }
            match self.primal_step(Pricing::PhaseTwo)? {
                StepOutcome::Moved => {}
                StepOutcome::NoEntering => return Ok(LpStatus::Optimal),
                StepOutcome::NoBlocking { var } => return Ok(LpStatus::Unbounded { var }),
            }
        }
    }

    // -- dual simplex -------------------------------------------------------

    /// Most-violated basic variable, if any.
    fn pick_leaving(&self) -> Option<(usize, bool)> {
        let mut best: Option<(usize, bool, f64)> = None;
        for (i, &v) in self.basic.iter().enumerate() {
            let x = self.xb[i];
            let below = self.lower[v] - x;
            let above = x - self.upper[v];
            if below > self.feas_tol_for(self.lower[v]) {
                if best.map_or(true, |(_, _, s)| below > s) {
                    best = Some((i, true, below));
                }
            } else if above > self.feas_tol_for(self.upper[v]) && best.map_or(true, |(_, _, s)| above > s) {
                best = Some((i, false, above));
            }
        }
        best.map(|(i, below, _)| (i, below))
    }

    /// Runs the dual simplex until primal feasibility, dual unboundedness
    /// (restricted infeasibility) or the iteration cap.
    fn run_dual(&mut self, iter_cap: Option<u64>) -> Result<ResolveStatus, LpError> {
        let mut local_iters: u64 = 0;
        loop {
            if self.iterations >= self.cfg.iter_limit {
                return Err(LpError::IterationLimit {
                    best_bound: self.model_value(),
                });
            }
            if let Some(cap) = iter_cap {
                if local_iters >= cap && self.pick_leaving().is_some() {
                    return Ok(ResolveStatus::ValidBound);
                }
            }
            let Some((row, below)) = self.pick_leaving() else {
                return Ok(ResolveStatus::Exact);
            };

            let mut rho = vec![0.0; self.m];
            rho[row] = 1.0;
            self.btran(&mut rho);
            let d = self.reduced_costs(&Pricing::PhaseTwo);

            let mut entering: Option<(usize, f64, f64)> = None; // (var, |theta|, alpha)
            for j in 0..self.ntot {
                if self.upper[j] - self.lower[j] <= 0.0 {
                    continue;
                }
                let alpha = match self.state[j] {
                    VState::Basic(_) => continue,
                    _ => self.col_dot(j, &rho),
                };
                let eligible = match (below, self.state[j]) {
                    (true, VState::AtLower) => alpha < -self.cfg.pivot_tol,
                    (true, VState::AtUpper) => alpha > self.cfg.pivot_tol,
                    (false, VState::AtLower) => alpha > self.cfg.pivot_tol,
                    (false, VState::AtUpper) => alpha < -self.cfg.pivot_tol,
                    (_, VState::Basic(_)) => unreachable!(),
                };
                if !eligible {
                    continue;
                }
                // |d/alpha|: eligibility fixed the signs, and drift on d must
                // not flip the ratio negative
                let theta = d[j].abs() / alpha.abs();
                let better = match entering {
                    None => true,
                    Some((bj, bt, ba)) => {
                        if self.bland {
                            theta < bt - self.cfg.opt_tol
                                || (theta < bt + self.cfg.opt_tol && j < bj)
                        } else {
                            theta < bt - self.cfg.opt_tol
                                || (theta < bt + self.cfg.opt_tol && alpha.abs() > ba.abs())
                        }
                    }
                };
                if better {
                    entering = Some((j, theta, alpha));
                }
            }

            let Some((q, theta, alpha_q)) = entering else {
                if !self.just_refactored && !self.etas.is_empty() {
                    self.refactorize()?;
                    self.compute_xb();
                    self.just_refactored = true;
                    continue;
                }
                return Ok(ResolveStatus::RestrictedInfeasible);
            };

            if theta <= self.cfg.opt_tol {
                self.degen_streak += 1;
            } else {
                self.degen_streak = 0;
            }
            if !self.bland && self.degen_streak > 3 * (self.ntot as u64) {
                self.bland = true;
            }

            let leaving = self.basic[row];
            let target = if below {
                self.lower[leaving]
            } else {
                self.upper[leaving]
            };
            let delta_q = (target - self.xb[row]) / -alpha_q;

            let mut w = vec![0.0; self.m];
            self.col_into(q, &mut w);
            self.ftran(&mut w);
            if w[row].abs() < self.cfg.pivot_tol {
                match self.retry_after_refactor("tiny dual pivot element")? {
                    StepOutcome::Moved => continue,
                    _ => unreachable!(),
                }
            }
            for i in 0..self.m {
                self.xb[i] -= delta_q * w[i];
            }
            let entering_value = self.nonbasic_value(q) + delta_q;
            self.state[leaving] = if below { VState::AtLower } else { VState::AtUpper };
            self.state[q] = VState::Basic(row);
            self.basic[row] = q;
            self.xb[row] = entering_value;
            self.push_eta(row, w)?;
            self.iterations += 1;
            local_iters += 1;
            self.just_refactored = false;
        }
    }

    fn extract_basis(&self) -> Basis {
        Basis {
            basic: self.basic.clone(),
            at_upper: self
                .state
                .iter()
                .map(|s| matches!(s, VState::AtUpper))
                .collect(),
        }
    }

    fn extract_point(&self) -> Vec<f64> {
        (0..self.nstruct)
            .map(|j| match self.state[j] {
                VState::Basic(i) => self.xb[i],
                _ => self.nonbasic_value(j),
            })
            .collect()
    }
}

/// Solves the model with primal simplex, warm-starting from `warm` when given.
pub fn solve(model: &LpModel, warm: Option<&Basis>, cfg: &LpConfig) -> Result<LpSolution, LpError> {
    for j in 0..model.n() {
        if model.lower[j] > model.upper[j] {
            return Ok(LpSolution {
                status: LpStatus::Infeasible {
                    infeasibility: model.lower[j] - model.upper[j],
                },
                point: vec![],
                value: f64::NAN,
                basis: Basis {
                    basic: (model.n()..model.n() + model.m()).collect(),
                    at_upper: vec![false; model.n() + model.m()],
                },
                iterations: 0,
            });
        }
    }
    let mut ctx = Ctx::new(model, cfg)?;
    match warm {
        Some(b) => ctx.install_basis(b)?,
        None => ctx.install_slack_basis(),
    }
    ctx.refactorize()?;
    ctx.compute_xb();
    let status = ctx.run_primal()?;
    let (point, value) = match status {
        LpStatus::Optimal => (ctx.extract_point(), ctx.model_value()),
        _ => (vec![], f64::NAN),
    };
    Ok(LpSolution {
        status,
        point,
        value,
        basis: ctx.extract_basis(),
        iterations: ctx.iterations,
    })
}

/// Tightens one bound of variable `j` and re-solves with dual simplex from
/// `sol`'s basis.
///
/// Returns the objective value at termination: the restricted optimum when
/// `Exact`, a valid bound on it when stopped early (`ValidBound`), and the
/// sense's worst value (`-inf` for maximize) when the restriction is
/// infeasible.
pub fn resolve_with_bound(
    model: &LpModel,
    sol: &LpSolution,
    j: usize,
    kind: BoundChange,
    v: f64,
    iter_cap: Option<u64>,
    cfg: &LpConfig,
) -> Result<(f64, ResolveStatus), LpError> {
    if sol.status != LpStatus::Optimal {
        return Err(LpError::BadBound(
            "resolve_with_bound requires an optimal starting solution".into(),
        ));
    }
    if j >= model.n() {
        return Err(LpError::BadBound(format!("variable {j} out of range")));
    }
    match kind {
        BoundChange::SetUpper if v < model.lower[j] => {
            return Err(LpError::BadBound(format!(
                "new upper {v} below lower bound {}",
                model.lower[j]
            )));
        }
        BoundChange::SetLower if v > model.upper[j] => {
            return Err(LpError::BadBound(format!(
                "new lower {v} above upper bound {}",
                model.upper[j]
            )));
        }
        _ => {}
    }
    let mut ctx = Ctx::new(model, cfg)?;
    ctx.install_basis(&sol.basis)?;
    // Nonbasic values are read from the bound arrays, so a nonbasic variable
    // follows its moved bound automatically once xb is recomputed.
    match kind {
        BoundChange::SetUpper => ctx.upper[j] = v,
        BoundChange::SetLower => ctx.lower[j] = v,
    }
    ctx.refactorize()?;
    ctx.compute_xb();
    let status = ctx.run_dual(iter_cap)?;
    let worst = match model.sense {
        Sense::Maximize => f64::NEG_INFINITY,
        Sense::Minimize => f64::INFINITY,
    };
    let bound = match status {
        ResolveStatus::RestrictedInfeasible => worst,
        _ => ctx.model_value(),
    };
    Ok((bound, status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Problem, Row};

    fn ukp() -> Problem {
        Problem::new(
            vec![9, 3, 8],
            0,
            vec![Row::from_ints(vec![10, 5, 7], 12)],
            None,
        )
        .unwrap()
    }

    fn cfg() -> LpConfig {
        LpConfig::default()
    }

    #[test]
    fn ukp_relaxation_optimum() {
        let model = LpModel::from_problem(&ukp());
        let sol = solve(&model, None, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 96.0 / 7.0).abs() < 1e-9, "value {}", sol.value);
        assert!((sol.point[0]).abs() < 1e-9);
        assert!((sol.point[1]).abs() < 1e-9);
        assert!((sol.point[2] - 12.0 / 7.0).abs() < 1e-9);
    }

    #[test]
    fn single_variable_objective() {
        let model = LpModel::from_problem(&ukp()).with_var_objective(0, Sense::Maximize);
        let sol = solve(&model, None, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 1.2).abs() < 1e-9);
    }

    #[test]
    fn zero_objective_returns_constant() {
        let mut model = LpModel::from_problem(&ukp());
        model.obj = vec![0.0; 3];
        model.obj_const = 4.5;
        let sol = solve(&model, None, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 4.5).abs() < 1e-12);
    }

    #[test]
    fn minimize_needs_phase_one() {
        // min x1 + x2 s.t. x1 + x2 >= 3 (encoded as -x1 - x2 <= -3)
        let model = LpModel {
            sense: Sense::Minimize,
            obj: vec![1.0, 1.0],
            obj_const: 0.0,
            rows: vec![vec![-1.0, -1.0]],
            rhs: vec![-3.0],
            lower: vec![0.0, 0.0],
            upper: vec![f64::INFINITY, f64::INFINITY],
        };
        let sol = solve(&model, None, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 3.0).abs() < 1e-9, "value {}", sol.value);
    }

    #[test]
    fn detects_infeasible_with_certificate() {
        // x1 >= 2 and x1 <= 1 cannot hold
        let model = LpModel {
            sense: Sense::Maximize,
            obj: vec![1.0],
            obj_const: 0.0,
            rows: vec![vec![-1.0], vec![1.0]],
            rhs: vec![-2.0, 1.0],
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
        };
        let sol = solve(&model, None, &cfg()).unwrap();
        match sol.status {
            LpStatus::Infeasible { infeasibility } => assert!(infeasibility > 0.5),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn detects_unbounded() {
        let model = LpModel {
            sense: Sense::Maximize,
            obj: vec![1.0],
            obj_const: 0.0,
            rows: vec![],
            rhs: vec![],
            lower: vec![0.0],
            upper: vec![f64::INFINITY],
        };
        let sol = solve(&model, None, &cfg()).unwrap();
        assert!(matches!(sol.status, LpStatus::Unbounded { var: 0 }));
    }

    #[test]
    fn fixed_variable_changes_optimum() {
        let model = LpModel::from_problem(&ukp()).with_fixed_var(2, 1.0);
        let sol = solve(&model, None, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        // max 9x1 + 3x2 + 8 s.t. 10x1 + 5x2 <= 5 -> x1 = 1/2
        assert!((sol.value - 12.5).abs() < 1e-9, "value {}", sol.value);
    }

    #[test]
    fn resolve_force_x3_down() {
        let model = LpModel::from_problem(&ukp());
        let sol = solve(&model, None, &cfg()).unwrap();
        let (bound, status) =
            resolve_with_bound(&model, &sol, 2, BoundChange::SetUpper, 0.0, None, &cfg()).unwrap();
        assert_eq!(status, ResolveStatus::Exact);
        assert!((bound - 10.8).abs() < 1e-9, "bound {bound}");
    }

    #[test]
    fn resolve_force_x1_up() {
        let model = LpModel::from_problem(&ukp());
        let sol = solve(&model, None, &cfg()).unwrap();
        let (bound, status) =
            resolve_with_bound(&model, &sol, 0, BoundChange::SetLower, 1.0, None, &cfg()).unwrap();
        assert_eq!(status, ResolveStatus::Exact);
        assert!((bound - 79.0 / 7.0).abs() < 1e-9, "bound {bound}");
    }

    #[test]
    fn resolve_nonbinding_bound_is_exact_and_unchanged() {
        let model = LpModel::from_problem(&ukp());
        let sol = solve(&model, None, &cfg()).unwrap();
        // x1 = 0 at the optimum; capping it at 0.5 changes nothing
        let (bound, status) =
            resolve_with_bound(&model, &sol, 0, BoundChange::SetUpper, 0.5, None, &cfg()).unwrap();
        assert_eq!(status, ResolveStatus::Exact);
        assert!((bound - sol.value).abs() < 1e-9);
    }

    #[test]
    fn resolve_detects_restricted_infeasibility() {
        // x1 <= 1 binding; force x1 >= 2 with x1's own upper still 1.5
        let model = LpModel {
            sense: Sense::Maximize,
            obj: vec![1.0],
            obj_const: 0.0,
            rows: vec![vec![1.0]],
            rhs: vec![1.0],
            lower: vec![0.0],
            upper: vec![1.5],
        };
        let sol = solve(&model, None, &cfg()).unwrap();
        let (bound, status) =
            resolve_with_bound(&model, &sol, 0, BoundChange::SetLower, 1.4, None, &cfg()).unwrap();
        assert_eq!(status, ResolveStatus::RestrictedInfeasible);
        assert_eq!(bound, f64::NEG_INFINITY);
    }

    #[test]
    fn resolve_rejects_out_of_range_bound() {
        let model = LpModel::from_problem(&ukp());
        let sol = solve(&model, None, &cfg()).unwrap();
        assert!(matches!(
            resolve_with_bound(&model, &sol, 0, BoundChange::SetUpper, -1.0, None, &cfg()),
            Err(LpError::BadBound(_))
        ));
    }

    #[test]
    fn warm_start_agrees_with_cold() {
        let model = LpModel::from_problem(&ukp());
        let cold = solve(&model, None, &cfg()).unwrap();
        // warm-start the variable-bound objective from the relaxation basis
        let bound_model = model.with_var_objective(1, Sense::Maximize);
        let warm = solve(&bound_model, Some(&cold.basis), &cfg()).unwrap();
        let fresh = solve(&bound_model, None, &cfg()).unwrap();
        assert_eq!(warm.status, LpStatus::Optimal);
        assert!((warm.value - fresh.value).abs() < 1e-7);
        assert!((warm.value - 2.4).abs() < 1e-9);
    }

    #[test]
    fn deterministic_iteration_counts() {
        let model = LpModel::from_problem(&ukp());
        let a = solve(&model, None, &cfg()).unwrap();
        let b = solve(&model, None, &cfg()).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.basis, b.basis);
    }

    #[test]
    fn no_rows_model() {
        let model = LpModel {
            sense: Sense::Maximize,
            obj: vec![3.0, -1.0],
            obj_const: 1.0,
            rows: vec![],
            rhs: vec![],
            lower: vec![0.0, 0.0],
            upper: vec![2.0, 5.0],
        };
        let sol = solve(&model, None, &cfg()).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.value - 7.0).abs() < 1e-9);
        assert!((sol.point[0] - 2.0).abs() < 1e-9);
        assert!((sol.point[1]).abs() < 1e-9);
    }

    #[test]
    fn empty_bound_box_is_infeasible() {
        let model = LpModel {
            sense: Sense::Maximize,
            obj: vec![1.0],
            obj_const: 0.0,
            rows: vec![],
            rhs: vec![],
            lower: vec![2.0],
            upper: vec![1.0],
        };
        let sol = solve(&model, None, &cfg()).unwrap();
        assert!(matches!(sol.status, LpStatus::Infeasible { .. }));
    }
}

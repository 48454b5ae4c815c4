//! Per-variable orthogonal projections of the objective and their level
//! ranges.
//!
//! The projection of variable `j` is the convex shadow of the objective on
//! the `(x_j, z)` plane over the relaxation's feasible set. Only its values
//! at integer abscissae matter: `low(e)` and `up(e)` come from a pair of LPs
//! with `x_j` fixed to `e`, and slicing at an integer level `z` yields the
//! set of integers assignable to `x_j` at that level.
//!
//! Two construction modes exist: an exact mode that solves both LPs per
//! abscissa, and a two-phase mode for binary problems that derives upper
//! values from one root LP plus dual re-solves. Approximate values always err
//! on the safe side (upper over-estimates, lower under-estimates), so ranges
//! computed from them are supersets of the true ranges.

use crate::lp::{
    self, Basis, BoundChange, LpConfig, LpError, LpModel, LpSolution, LpStatus, ResolveStatus,
    Sense,
};
use crate::model::{Problem, ReducedProblem};
use crate::par::{self, ExecMode};

#[derive(Debug, Clone, PartialEq)]
pub enum ProjectionError {
    /// The relaxation of the (possibly reduced) problem has no feasible point.
    RelaxationInfeasible,
    /// The relaxation is unbounded in this variable, violating the bounded
    /// feasible region input contract.
    Unbounded { var: usize },
    /// Exact mode refused a domain too large for per-abscissa solves.
    DomainCapExceeded { needed: f64, cap: f64 },
    /// Two-phase mode requires every variable to carry a 0..=1 bound.
    NonBinary,
    Lp(LpError),
}

impl std::fmt::Display for ProjectionError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProjectionError::RelaxationInfeasible => write!(f, "LP relaxation is infeasible"),
            ProjectionError::Unbounded { var } => {
                write!(f, "LP relaxation unbounded in variable {var}")
            }
            ProjectionError::DomainCapExceeded { needed, cap } => {
                write!(
                    f,
                    "projection domain size {needed} exceeds exact-mode cap {cap}"
                )
            }
            ProjectionError::NonBinary => {
                write!(f, "two-phase projections require binary variables")
            }
            ProjectionError::Lp(e) => write!(f, "lp failure: {e}"),
        }
    }
}

impl std::error::Error for ProjectionError {}

impl From<LpError> for ProjectionError {
    fn from(e: LpError) -> Self {
        ProjectionError::Lp(e)
    }
}

/// Tolerances and knobs for projection construction.
#[derive(Debug, Clone)]
pub struct ProjectionConfig {
    /// Inflation applied when rounding the domain to integer abscissae.
    pub dom_tol: f64,
    /// Inflation applied to range membership tests, in the safe direction.
    pub range_tol: f64,
    /// Exact mode refuses when the summed domain widths exceed this.
    pub exact_domain_cap: f64,
    /// Early-stop cap for the two-phase dual re-solves; `None` runs them to
    /// optimality so every upper value is exact.
    pub iter_cap: Option<u64>,
    pub lp: LpConfig,
    pub exec: ExecMode,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            dom_tol: 1e-6,
            range_tol: 1e-6,
            exact_domain_cap: 50_000.0,
            iter_cap: None,
            lp: LpConfig::default(),
            exec: ExecMode::Auto,
        }
    }
}

/// Projection values at one integer abscissa. `low == -inf` marks an unknown
/// lower value (a valid under-estimate).
#[derive(Debug, Clone, PartialEq)]
pub struct ProjPoint {
    pub abscissa: i64,
    pub low: f64,
    pub up: f64,
    pub low_is_exact: bool,
    pub up_is_exact: bool,
}

/// Projection of one variable: its relaxation domain and the populated
/// integer abscissae (infeasible abscissae are excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Original variable index.
    pub var: usize,
    pub l: f64,
    pub u: f64,
    pub points: Vec<ProjPoint>,
}

impl Projection {
    pub fn point_at(&self, e: i64) -> Option<&ProjPoint> {
        self.points.iter().find(|p| p.abscissa == e)
    }
}

/// Integers assignable to a variable at one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeSet {
    /// Original variable index.
    pub var: usize,
    pub level: i64,
    /// Sorted ascending, duplicate-free.
    pub values: Vec<i64>,
}

/// Result of building all projections of a problem, with the LP work done.
#[derive(Debug, Clone)]
pub struct ProjectionBuild {
    pub projections: Vec<Projection>,
    pub lp_solves: u64,
}

/// Uniform view over a `Problem` or a `ReducedProblem`: the LP mirror plus
/// the integer data the closed-form lower projection needs.
#[derive(Debug, Clone)]
pub struct ProblemView {
    pub lp: LpModel,
    /// Position -> original variable index.
    pub var_ids: Vec<usize>,
    /// Integer objective coefficients by position.
    pub c: Vec<i64>,
    /// Objective constant (folded fixings included).
    pub h: i64,
    /// All constraint data and objective coefficients nonnegative: the zero
    /// completion is feasible whenever any single fixing is, which validates
    /// the closed-form lower projection `low(e) = c_j e + h`.
    pub closed_form_low: bool,
    /// Every variable carries an explicit 0..=1 bound.
    pub binary: bool,
}

impl ProblemView {
    pub fn of_problem(p: &Problem) -> ProblemView {
        let closed_form_low = p
            .rows
            .iter()
            .all(|r| r.rhs >= 0 && r.coeffs.iter().all(|&a| a >= 0))
            && p.c.iter().all(|&c| c >= 0);
        ProblemView {
            lp: LpModel::from_problem(p),
            var_ids: (0..p.n).collect(),
            c: p.c.clone(),
            h: p.h,
            closed_form_low,
            binary: p.is_binary(),
        }
    }

    pub fn of_reduced(r: &ReducedProblem<'_>) -> ProblemView {
        let k = r.active_count();
        let closed_form_low = r.derived_b.iter().all(|&b| b >= 0)
            && r.base
                .rows
                .iter()
                .all(|row| r.active_index_map.iter().all(|&j| row.coeffs[j] >= 0))
            && (0..k).all(|p| r.active_c(p) >= 0);
        ProblemView {
            lp: LpModel::from_reduced(r),
            var_ids: r.active_index_map.clone(),
            c: (0..k).map(|p| r.active_c(p)).collect(),
            h: r.derived_h,
            closed_form_low,
            binary: (0..k).all(|p| r.active_upper(p) == Some(1)),
        }
    }

    pub fn active_count(&self) -> usize {
        self.var_ids.len()
    }
}

fn solve_or_err(
    model: &LpModel,
    warm: Option<&Basis>,
    cfg: &ProjectionConfig,
) -> Result<LpSolution, ProjectionError> {
    let sol = lp::solve(model, warm, &cfg.lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol),
        LpStatus::Infeasible { .. } => Err(ProjectionError::RelaxationInfeasible),
        LpStatus::Unbounded { var } => Err(ProjectionError::Unbounded { var }),
    }
}

/// Relaxation min and max of the variable at `pos` (the projection domain).
pub fn variable_bounds(
    view: &ProblemView,
    pos: usize,
    cfg: &ProjectionConfig,
) -> Result<(f64, f64), ProjectionError> {
    let lo = solve_or_err(&view.lp.with_var_objective(pos, Sense::Minimize), None, cfg)?;
    let hi = solve_or_err(&view.lp.with_var_objective(pos, Sense::Maximize), None, cfg)?;
    Ok((lo.value, hi.value))
}

/// Exact projection values at `x_pos = lambda`, or `None` when the
/// fixed-point LP is infeasible (empty vertical slice).
pub fn projection_values_at(
    view: &ProblemView,
    pos: usize,
    lambda: i64,
    cfg: &ProjectionConfig,
) -> Result<Option<(f64, f64)>, ProjectionError> {
    let fixed = view.lp.with_fixed_var(pos, lambda as f64);
    let mut low_model = fixed.clone();
    low_model.sense = Sense::Minimize;
    let low = lp::solve(&low_model, None, &cfg.lp)?;
    let low = match low.status {
        LpStatus::Optimal => low,
        LpStatus::Infeasible { .. } => return Ok(None),
        LpStatus::Unbounded { var } => return Err(ProjectionError::Unbounded { var }),
    };
    let mut up_model = fixed;
    up_model.sense = Sense::Maximize;
    let up = lp::solve(&up_model, Some(&low.basis), &cfg.lp)?;
    let up = match up.status {
        LpStatus::Optimal => up,
        LpStatus::Infeasible { .. } => return Ok(None),
        LpStatus::Unbounded { var } => return Err(ProjectionError::Unbounded { var }),
    };
    Ok(Some((low.value, up.value)))
}

/// Integer abscissae covering `[ceil(l - dom_tol), floor(u + dom_tol)]`.
fn abscissa_range(l: f64, u: f64, dom_tol: f64) -> (i64, i64) {
    (((l - dom_tol).ceil()) as i64, ((u + dom_tol).floor()) as i64)
}

/// Builds every projection by direct per-abscissa LP solves. Intended for
/// small domains; refuses when the summed domain widths exceed the cap.
pub fn build_projections_exact(
    view: &ProblemView,
    cfg: &ProjectionConfig,
) -> Result<ProjectionBuild, ProjectionError> {
    let k = view.active_count();
    let bound_results = par::map_mode(cfg.exec, (0..k).collect(), |pos| {
        variable_bounds(view, pos, cfg)
    });
    let mut bounds = Vec::with_capacity(k);
    for r in bound_results {
        bounds.push(r?);
    }
    let mut lp_solves = 2 * k as u64;

    let total_width: f64 = bounds.iter().map(|&(l, u)| (u - l).max(0.0)).sum();
    if total_width > cfg.exact_domain_cap {
        return Err(ProjectionError::DomainCapExceeded {
            needed: total_width,
            cap: cfg.exact_domain_cap,
        });
    }

    let results = par::map_mode(cfg.exec, (0..k).collect(), |pos| {
        let (l, u) = bounds[pos];
        let (e_lo, e_hi) = abscissa_range(l, u, cfg.dom_tol);
        let mut points = Vec::new();
        let mut solves = 0u64;
        for e in e_lo..=e_hi {
            solves += 2;
            if let Some((low, up)) = projection_values_at(view, pos, e, cfg)? {
                points.push(ProjPoint {
                    abscissa: e,
                    low,
                    up,
                    low_is_exact: true,
                    up_is_exact: true,
                });
            }
        }
        Ok::<_, ProjectionError>((
            Projection {
                var: view.var_ids[pos],
                l,
                u,
                points,
            },
            solves,
        ))
    });
    let mut projections = Vec::with_capacity(k);
    for r in results {
        let (proj, solves) = r?;
        lp_solves += solves;
        projections.push(proj);
    }
    Ok(ProjectionBuild {
        projections,
        lp_solves,
    })
}

/// Two-phase upper projections for binary problems: one root LP fixes
/// `up(e) = z_LP` for every integral component of the optimum, and a dual
/// re-solve from the root basis fills each remaining `(j, e)` pair. Lower
/// projections use the closed form `c_j e + h` when the data validates it and
/// exact minimizing LPs otherwise.
pub fn build_projections_two_phase(
    view: &ProblemView,
    cfg: &ProjectionConfig,
) -> Result<ProjectionBuild, ProjectionError> {
    if !view.binary {
        return Err(ProjectionError::NonBinary);
    }
    let k = view.active_count();
    let root = solve_or_err(&view.lp, None, cfg)?;
    let z_lp = root.value;
    let mut lp_solves = 1u64;

    // Phase 1: integral components of the root optimum pin their upper value.
    let int_tol = cfg.lp.feas_tol * 10.0;
    let mut up_vals: Vec<[Option<(f64, bool)>; 2]> = vec![[None, None]; k];
    for pos in 0..k {
        let x = root.point[pos];
        for e in 0..=1i64 {
            if (x - e as f64).abs() <= int_tol {
                up_vals[pos][e as usize] = Some((z_lp, true));
            }
        }
    }

    // Phase 2: dual re-solves for every pair Phase 1 left open.
    let pending: Vec<(usize, i64)> = (0..k)
        .flat_map(|pos| (0..=1i64).map(move |e| (pos, e)))
        .filter(|&(pos, e)| up_vals[pos][e as usize].is_none())
        .collect();
    lp_solves += pending.len() as u64;
    let resolved = par::map_mode(cfg.exec, pending.clone(), |(pos, e)| {
        let (kind, v) = if e == 0 {
            (BoundChange::SetUpper, 0.0)
        } else {
            (BoundChange::SetLower, 1.0)
        };
        lp::resolve_with_bound(&view.lp, &root, pos, kind, v, cfg.iter_cap, &cfg.lp)
    });
    for ((pos, e), r) in pending.into_iter().zip(resolved) {
        let (bound, status) = r?;
        match status {
            ResolveStatus::Exact => up_vals[pos][e as usize] = Some((bound, true)),
            ResolveStatus::ValidBound => up_vals[pos][e as usize] = Some((bound, false)),
            ResolveStatus::RestrictedInfeasible => {} // abscissa stays excluded
        }
    }

    // Lower projections.
    let mut low_vals: Vec<[Option<(f64, bool)>; 2]> = vec![[None, None]; k];
    if view.closed_form_low {
        for pos in 0..k {
            for e in 0..=1i64 {
                if up_vals[pos][e as usize].is_some() {
                    low_vals[pos][e as usize] = Some(((view.c[pos] * e + view.h) as f64, true));
                }
            }
        }
    } else {
        let pending: Vec<(usize, i64)> = (0..k)
            .flat_map(|pos| (0..=1i64).map(move |e| (pos, e)))
            .filter(|&(pos, e)| up_vals[pos][e as usize].is_some())
            .collect();
        lp_solves += pending.len() as u64;
        let solved = par::map_mode(cfg.exec, pending.clone(), |(pos, e)| {
            let mut low_model = view.lp.with_fixed_var(pos, e as f64);
            low_model.sense = Sense::Minimize;
            lp::solve(&low_model, None, &cfg.lp)
        });
        for ((pos, e), r) in pending.into_iter().zip(solved) {
            let sol = r?;
            low_vals[pos][e as usize] = match sol.status {
                LpStatus::Optimal => Some((sol.value, true)),
                // the upper side found the slice feasible; fall back to the
                // always-safe under-estimate
                LpStatus::Infeasible { .. } => Some((f64::NEG_INFINITY, false)),
                LpStatus::Unbounded { var } => return Err(ProjectionError::Unbounded { var }),
            };
        }
    }

    let projections = (0..k)
        .map(|pos| {
            let mut points = Vec::new();
            for e in 0..=1i64 {
                if let Some((up, up_is_exact)) = up_vals[pos][e as usize] {
                    let (low, low_is_exact) =
                        low_vals[pos][e as usize].unwrap_or((f64::NEG_INFINITY, false));
                    points.push(ProjPoint {
                        abscissa: e,
                        low,
                        up,
                        low_is_exact,
                        up_is_exact,
                    });
                }
            }
            Projection {
                var: view.var_ids[pos],
                l: 0.0,
                u: 1.0,
                points,
            }
        })
        .collect();
    Ok(ProjectionBuild {
        projections,
        lp_solves,
    })
}

/// Builds with the two-phase fast path when the problem is binary, exact
/// per-abscissa solves otherwise.
pub fn build_projections_auto(
    view: &ProblemView,
    cfg: &ProjectionConfig,
) -> Result<ProjectionBuild, ProjectionError> {
    if view.binary {
        build_projections_two_phase(view, cfg)
    } else {
        build_projections_exact(view, cfg)
    }
}

/// Slices a projection at level `z`. Membership is inflated by `range_tol`
/// in the safe direction only, so approximate projections yield supersets of
/// the true range.
pub fn range(pr: &Projection, z: i64, range_tol: f64) -> RangeSet {
    let zf = z as f64;
    let values = pr
        .points
        .iter()
        .filter(|pt| pt.low <= zf + range_tol && pt.up >= zf - range_tol)
        .map(|pt| pt.abscissa)
        .collect();
    RangeSet {
        var: pr.var,
        level: z,
        values,
    }
}

/// CSV rendering of projection points: `var,e,low,up,low_exact,up_exact`.
pub fn points_csv(projections: &[Projection]) -> String {
    let mut out = String::from("var,e,low,up,low_exact,up_exact\n");
    for pr in projections {
        for pt in &pr.points {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                pr.var, pt.abscissa, pt.low, pt.up, pt.low_is_exact, pt.up_is_exact
            ));
        }
    }
    out
}

/// CSV rendering of the ranges at one level: `var,level,values` with the
/// values space-separated.
pub fn ranges_csv(projections: &[Projection], z: i64, range_tol: f64) -> String {
    let mut out = String::from("var,level,values\n");
    for pr in projections {
        let rs = range(pr, z, range_tol);
        let vals = rs
            .values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        out.push_str(&format!("{},{},{}\n", rs.var, rs.level, vals));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{reduce, PartialCandidate, Problem, Row};

    fn ukp() -> Problem {
        Problem::new(
            vec![9, 3, 8],
            0,
            vec![Row::from_ints(vec![10, 5, 7], 12)],
            None,
        )
        .unwrap()
    }

    fn cfg() -> ProjectionConfig {
        ProjectionConfig::default()
    }

    #[test]
    fn ukp_variable_bounds() {
        let view = ProblemView::of_problem(&ukp());
        let (l3, u3) = variable_bounds(&view, 2, &cfg()).unwrap();
        assert!(l3.abs() < 1e-9 && (u3 - 12.0 / 7.0).abs() < 1e-9);
        let (l2, u2) = variable_bounds(&view, 1, &cfg()).unwrap();
        assert!(l2.abs() < 1e-9 && (u2 - 12.0 / 5.0).abs() < 1e-9);
    }

    #[test]
    fn reduced_ukp_variable_bounds() {
        let p = ukp();
        let mut pc = PartialCandidate::all_unfixed(3, 11);
        pc.fix(2, 1);
        let r = reduce(&p, &pc).unwrap();
        let view = ProblemView::of_reduced(&r);
        // position 0 is original x1
        let (l1, u1) = variable_bounds(&view, 0, &cfg()).unwrap();
        assert!(l1.abs() < 1e-9 && (u1 - 0.5).abs() < 1e-9);
    }

    #[test]
    fn ukp_projection_values() {
        let view = ProblemView::of_problem(&ukp());
        let (low, up) = projection_values_at(&view, 2, 1, &cfg()).unwrap().unwrap();
        assert!((low - 8.0).abs() < 1e-9 && (up - 12.5).abs() < 1e-9);
        let (low, up) = projection_values_at(&view, 0, 0, &cfg()).unwrap().unwrap();
        assert!(low.abs() < 1e-9 && (up - 96.0 / 7.0).abs() < 1e-9);
        let (low, up) = projection_values_at(&view, 0, 1, &cfg()).unwrap().unwrap();
        assert!((low - 9.0).abs() < 1e-9 && (up - 79.0 / 7.0).abs() < 1e-9);
    }

    /// Closed forms of the three projection boundaries of the worked
    /// three-variable knapsack, evaluated at every integer abscissa.
    #[test]
    fn ukp_exact_projections_match_closed_forms() {
        let view = ProblemView::of_problem(&ukp());
        let build = build_projections_exact(&view, &cfg()).unwrap();
        let prs = &build.projections;
        assert_eq!(prs.len(), 3);

        let expect = |pr: &Projection, e: i64, low: f64, up: f64| {
            let pt = pr
                .point_at(e)
                .unwrap_or_else(|| panic!("missing abscissa {e}"));
            assert!((pt.low - low).abs() < 1e-7, "low({e}) = {}", pt.low);
            assert!((pt.up - up).abs() < 1e-7, "up({e}) = {}", pt.up);
            assert!(pt.low_is_exact && pt.up_is_exact);
        };
        // P1: 9e <= z <= -17/7 e + 96/7 over [0, 12/10]
        assert_eq!(prs[0].points.len(), 2);
        expect(&prs[0], 0, 0.0, 96.0 / 7.0);
        expect(&prs[0], 1, 9.0, 79.0 / 7.0);
        // P2: 3e <= z <= -19/7 e + 96/7 over [0, 12/5]
        assert_eq!(prs[1].points.len(), 3);
        expect(&prs[1], 0, 0.0, 96.0 / 7.0);
        expect(&prs[1], 1, 3.0, 77.0 / 7.0);
        expect(&prs[1], 2, 6.0, 58.0 / 7.0);
        // P3: 8e <= z <= 17/10 e + 108/10 over [0, 12/7]
        assert_eq!(prs[2].points.len(), 2);
        expect(&prs[2], 0, 0.0, 10.8);
        expect(&prs[2], 1, 8.0, 12.5);
    }

    #[test]
    fn single_variable_projection() {
        let p = Problem::new(vec![9], 0, vec![Row::from_ints(vec![10], 12)], None).unwrap();
        let view = ProblemView::of_problem(&p);
        let build = build_projections_exact(&view, &cfg()).unwrap();
        let pr = &build.projections[0];
        assert_eq!(pr.points.len(), 2);
        let p0 = pr.point_at(0).unwrap();
        assert!(p0.low.abs() < 1e-9 && p0.up.abs() < 1e-9);
        let p1 = pr.point_at(1).unwrap();
        assert!((p1.low - 9.0).abs() < 1e-9 && (p1.up - 9.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_relaxation_reported() {
        // 0 x <= -1 is unsatisfiable
        let p = Problem::new(
            vec![1],
            0,
            vec![Row::from_ints(vec![0], -1)],
            Some(vec![Some(1)]),
        )
        .unwrap();
        let view = ProblemView::of_problem(&p);
        assert_eq!(
            build_projections_exact(&view, &cfg()).unwrap_err(),
            ProjectionError::RelaxationInfeasible
        );
    }

    #[test]
    fn unbounded_variable_reported() {
        let p = Problem::new(vec![1, 1], 0, vec![Row::from_ints(vec![1, 0], 5)], None).unwrap();
        let view = ProblemView::of_problem(&p);
        assert!(matches!(
            build_projections_exact(&view, &cfg()),
            Err(ProjectionError::Unbounded { .. })
        ));
    }

    #[test]
    fn domain_cap_enforced() {
        let p = Problem::new(vec![1], 0, vec![Row::from_ints(vec![1], 1000)], None).unwrap();
        let view = ProblemView::of_problem(&p);
        let mut c = cfg();
        c.exact_domain_cap = 10.0;
        assert!(matches!(
            build_projections_exact(&view, &c),
            Err(ProjectionError::DomainCapExceeded { .. })
        ));
    }

    #[test]
    fn ukp_ranges_at_paper_levels() {
        let view = ProblemView::of_problem(&ukp());
        let prs = build_projections_exact(&view, &cfg()).unwrap().projections;
        let tol = cfg().range_tol;
        // level 13: no value of x3 reaches it
        assert!(range(&prs[2], 13, tol).values.is_empty());
        // level 12: unique candidate (0,0,1)
        assert_eq!(range(&prs[0], 12, tol).values, vec![0]);
        assert_eq!(range(&prs[1], 12, tol).values, vec![0]);
        assert_eq!(range(&prs[2], 12, tol).values, vec![1]);
        // level 11: x3 pinned to 1, x1 and x2 binary
        assert_eq!(range(&prs[0], 11, tol).values, vec![0, 1]);
        assert_eq!(range(&prs[1], 11, tol).values, vec![0, 1]);
        assert_eq!(range(&prs[2], 11, tol).values, vec![1]);
    }

    /// Small two-phase walkthrough: max 5x1 + 4x2, 3x1 + 2x2 <= 4, binary.
    /// The root LP optimum is (1, 1/2) with value 7.
    #[test]
    fn two_phase_small_binary() {
        let p = Problem::new(
            vec![5, 4],
            0,
            vec![Row::from_ints(vec![3, 2], 4)],
            Some(vec![Some(1), Some(1)]),
        )
        .unwrap();
        let view = ProblemView::of_problem(&p);
        let two = build_projections_two_phase(&view, &cfg()).unwrap();
        let exact = build_projections_exact(&view, &cfg()).unwrap();

        // x1 integral at 1 in phase 1: up1(1) = z_LP = 7
        let up11 = two.projections[0].point_at(1).unwrap();
        assert!((up11.up - 7.0).abs() < 1e-7);
        assert!(up11.up_is_exact);
        // phase-2 values
        let up21 = two.projections[1].point_at(1).unwrap();
        assert!((up21.up - 22.0 / 3.0).abs() < 1e-7, "up2(1) = {}", up21.up);
        let up20 = two.projections[1].point_at(0).unwrap();
        assert!((up20.up - 5.0).abs() < 1e-7);
        let up10 = two.projections[0].point_at(0).unwrap();
        assert!((up10.up - 4.0).abs() < 1e-7);

        // closed-form lower projections apply: low(e) = c_j e
        assert!((two.projections[0].point_at(1).unwrap().low - 5.0).abs() < 1e-12);
        assert!(two.projections[0].point_at(1).unwrap().low_is_exact);

        // full agreement with the exact build on this instance
        for (tp, ep) in two.projections.iter().zip(&exact.projections) {
            for pt in &ep.points {
                let t = tp
                    .point_at(pt.abscissa)
                    .expect("two-phase kept the abscissa");
                assert!((t.up - pt.up).abs() < 1e-7);
                assert!((t.low - pt.low).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn two_phase_rejects_general_integers() {
        let view = ProblemView::of_problem(&ukp());
        assert_eq!(
            build_projections_two_phase(&view, &cfg()).unwrap_err(),
            ProjectionError::NonBinary
        );
    }

    #[test]
    fn two_phase_excludes_oversized_items() {
        // x1 can never be 1: its weight alone exceeds the capacity
        let p = Problem::new(
            vec![5, 4],
            0,
            vec![Row::from_ints(vec![9, 2], 4)],
            Some(vec![Some(1), Some(1)]),
        )
        .unwrap();
        let view = ProblemView::of_problem(&p);
        let two = build_projections_two_phase(&view, &cfg()).unwrap();
        assert!(two.projections[0].point_at(1).is_none());
        assert!(two.projections[0].point_at(0).is_some());
    }

    #[test]
    fn monotone_band_holds() {
        let view = ProblemView::of_problem(&ukp());
        let build = build_projections_exact(&view, &cfg()).unwrap();
        for pr in &build.projections {
            for pt in &pr.points {
                assert!(pt.low <= pt.up + 1e-6);
            }
        }
    }

    #[test]
    fn csv_renderings() {
        let view = ProblemView::of_problem(&ukp());
        let prs = build_projections_exact(&view, &cfg()).unwrap().projections;
        let pts = points_csv(&prs);
        assert!(pts.starts_with("var,e,low,up,low_exact,up_exact\n"));
        assert_eq!(pts.lines().count(), 1 + 2 + 3 + 2);
        let rng = ranges_csv(&prs, 11, cfg().range_tol);
        assert!(rng.contains("2,11,1"));
        assert!(rng.contains("0,11,0 1"));
    }
}

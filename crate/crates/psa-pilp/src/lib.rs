//! Exact solver for pure integer linear programs.
//!
//! The solver sweeps candidate objective levels in decreasing order. At each
//! level it slices per-variable orthogonal projections of the objective to
//! restrict the integers each variable may take, fixes variables whose range
//! collapses to a single value, and generates candidate solutions until a
//! feasible candidate matches the level exactly, which certifies optimality.
//!
//! Crate layout:
//! - [`model`]: problem data, exact arithmetic, instance file format
//! - [`lp`]: bounded-variable primal/dual simplex engine
//! - [`projection`]: per-variable projections and level ranges
//! - [`search`]: the level sweep and candidate generation
//! - [`oracle`]: independent reference solvers for verification
//! - [`bench`]: instance generator, batch runner, report emitter

pub mod bench;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod par;
pub mod projection;
pub mod search;

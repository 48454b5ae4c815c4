//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the mapping helpers fan out over
//! rayon's global pool; without it they run sequentially. Callers that need a
//! guaranteed sequential pass regardless of features use the `*_seq` variants
//! directly (the criterion bench compares the two).

/// Maps `f` over `items`, preserving input order in the output.
#[cfg(feature = "parallel")]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

/// Maps `f` over `items`, preserving input order in the output.
#[cfg(not(feature = "parallel"))]
pub fn map_collect<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Sequential mapping used as the comparison baseline and the fallback path.
pub fn map_collect_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Runtime choice between the feature-selected path and a forced sequential
/// pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    /// Parallel when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Auto,
    /// Always sequential, independent of features.
    Sequential,
}

/// Maps with the requested execution mode, preserving input order.
pub fn map_mode<T, U, F>(mode: ExecMode, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    match mode {
        ExecMode::Auto => map_collect(items, f),
        ExecMode::Sequential => map_collect_seq(items, f),
    }
}

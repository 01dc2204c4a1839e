//! Data-parallel helpers with a sequential fallback.
//!
//! Every embarrassingly parallel loop of the crate (element assembly,
//! snapshot and reference solves) goes through [`map_collect`]. With the
//! `parallel` feature the work is distributed by rayon; without it, or when
//! [`Parallelism::Sequential`] is requested at run time, a plain iterator is
//! used. Results are always returned in input order, so outputs do not depend
//! on the scheduling.

/// Run-time choice of execution strategy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    /// Plain sequential loops.
    Sequential,
    /// rayon work-stealing loops (sequential when the feature is disabled).
    #[default]
    Parallel,
}

impl Parallelism {
    /// Whether loops actually run in parallel in this build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Parallel
    }
}

/// Maps `f` over `0..n` and collects the results in index order.
pub fn map_collect<T, F>(par: Parallelism, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if par == Parallelism::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = par;
    (0..n).map(f).collect()
}

/// Like [`map_collect`] for fallible closures; the first error (in index
/// order) is returned.
pub fn try_map_collect<T, E, F>(par: Parallelism, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_collect(par, n, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_both_modes() {
        let a = map_collect(Parallelism::Parallel, 1000, |i| i * i);
        let b = map_collect(Parallelism::Sequential, 1000, |i| i * i);
        assert_eq!(a, b);
        assert_eq!(a[999], 999 * 999);
    }

    #[test]
    fn first_error_in_index_order() {
        let r: Result<Vec<usize>, usize> =
            try_map_collect(Parallelism::Parallel, 100, |i| if i % 7 == 3 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(3));
    }
}

//! Thin execution layer: data-parallel iteration on rayon when the
//! `parallel` feature is enabled, plain sequential loops otherwise.
//!
//! Every helper preserves output order (or combines with an associative,
//! commutative operation), so results are identical across both builds and
//! any worker count.

/// Label of the active execution backend, for logs and benchmark ids.
pub fn backend() -> &'static str {
    if cfg!(feature = "parallel") {
        "rayon"
    } else {
        "sequential"
    }
}

#[cfg(feature = "parallel")]
mod imp {
    use rayon::prelude::*;

    pub fn map_range<T, F>(range: std::ops::Range<u64>, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        range.into_par_iter().map(f).collect()
    }

    pub fn fold_range<A, M, C>(range: std::ops::Range<u64>, identity: A, map: M, combine: C) -> A
    where
        A: Send + Clone + Sync,
        M: Fn(u64) -> A + Sync + Send,
        C: Fn(A, A) -> A + Sync + Send,
    {
        range
            .into_par_iter()
            .map(map)
            .reduce(|| identity.clone(), &combine)
    }

    pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn map_range<T, F>(range: std::ops::Range<u64>, f: F) -> Vec<T>
    where
        F: Fn(u64) -> T,
    {
        range.map(f).collect()
    }

    pub fn fold_range<A, M, C>(range: std::ops::Range<u64>, identity: A, map: M, combine: C) -> A
    where
        M: Fn(u64) -> A,
        C: Fn(A, A) -> A,
    {
        range.map(map).fold(identity, combine)
    }

    pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
    where
        F: Fn(&T) -> U,
    {
        items.iter().map(f).collect()
    }
}

pub(crate) use imp::{fold_range, map_range, map_slice};

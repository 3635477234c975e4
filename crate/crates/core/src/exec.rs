//! Data-parallel map with a sequential fallback.
//!
//! Without the `parallel` feature both modes run sequentially. Results are
//! always returned in input order, so output never depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    pub fn map_range<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..len).into_par_iter().map(f).collect(),
            _ => (0..len).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree_and_keep_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = Exec::Sequential.map(&xs, |x| x * x + 1);
        let b = Exec::Parallel.map(&xs, |x| x * x + 1);
        assert_eq!(a, b);
        assert_eq!(Exec::Parallel.map_range(5, |i| i * 2), vec![0, 2, 4, 6, 8]);
    }
}

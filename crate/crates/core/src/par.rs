//! Data-parallel map helpers. With the `parallel` feature the work is spread
//! over a rayon pool; without it (or with `threads <= 1`) the same closures
//! run on a plain sequential iterator. Results are collected in index order
//! either way, so outputs are identical across thread counts.

/// Map `f` over `0..n`, parallel when built with the `parallel` feature and
/// `threads != 1`. `threads == 0` means "use the default pool size".
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        if threads == 0 {
            (0..n).into_par_iter().map(f).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("failed to build thread pool");
            pool.install(|| (0..n).into_par_iter().map(f).collect())
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_stable() {
        let seq = map_indexed(64, 1, |i| i * i);
        let par = map_indexed(64, 0, |i| i * i);
        let par4 = map_indexed(64, 4, |i| i * i);
        assert_eq!(seq, par);
        assert_eq!(seq, par4);
    }
}

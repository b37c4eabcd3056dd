//! Thread-pool executor.

use rayon::prelude::*;
use sortlet_core::exec::Executor;

/// Runs per-walker work on a dedicated rayon pool. Items are independent,
/// so results match the serial executor bit for bit.
#[derive(Debug)]
pub struct RayonExec {
    pool: rayon::ThreadPool,
}

impl RayonExec {
    /// `threads == 0` uses one thread per core.
    pub fn new(threads: usize) -> Self {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
        Self { pool }
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExec {
    fn for_each_mut<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        self.pool.install(|| items.par_iter_mut().enumerate().for_each(|(i, t)| f(i, t)));
    }

    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sortlet_core::ansatz::oracle::SlaterOrbital;
    use sortlet_core::exec::Serial;
    use sortlet_core::sampler::WalkerEnsemble;

    #[test]
    fn parallel_chains_match_serial_bitwise() {
        let h = SlaterOrbital::hydrogen();
        let mut a = WalkerEnsemble::new(&h.system, 64, 5);
        let mut b = a.clone();
        let pool = RayonExec::new(4);
        a.refresh(&h, &[0.8], &Serial);
        b.refresh(&h, &[0.8], &pool);
        for _ in 0..50 {
            a.mh_step(&h, &[0.8], &Serial);
            b.mh_step(&h, &[0.8], &pool);
        }
        assert_eq!(a.state(), b.state());
    }
}

//! Execution helpers: data-parallel loops over flat storage, with a
//! sequential fallback when the `parallel` feature is disabled.
//!
//! Only elementwise maps and disjoint chunk work go through these helpers.
//! Reductions (norms, inner products) are summed sequentially everywhere in
//! this crate: parallel summation reorders floating point addition, and the
//! library promises bit-identical results for identical inputs regardless of
//! thread count.

/// Below this many elements the parallel dispatch overhead outweighs the
/// work, so the helpers run sequentially even with `parallel` enabled.
pub const MIN_PAR_LEN: usize = 4096;

#[cfg(feature = "parallel")]
mod imp {
    use super::MIN_PAR_LEN;
    use rayon::prelude::*;

    pub fn map_inplace<T, F>(data: &mut [T], f: F)
    where
        T: Send,
        F: Fn(&mut T) + Sync,
    {
        if data.len() >= MIN_PAR_LEN {
            data.par_iter_mut().for_each(|x| f(x));
        } else {
            data.iter_mut().for_each(|x| f(x));
        }
    }

    pub fn fill_indexed<T, F>(out: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        if out.len() >= MIN_PAR_LEN {
            out.par_iter_mut().enumerate().for_each(|(i, x)| *x = f(i));
        } else {
            out.iter_mut().enumerate().for_each(|(i, x)| *x = f(i));
        }
    }

    pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
    where
        T: Send,
        F: Fn(usize, &mut [T]) + Sync,
    {
        if data.len() >= MIN_PAR_LEN && data.len() / chunk >= 2 {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
        } else {
            data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        }
    }

    /// `data[i] = f(data[i], other[i])`, elementwise over equal-length slices.
    pub fn zip_apply<T, U, F>(data: &mut [T], other: &[U], f: F)
    where
        T: Send,
        U: Sync,
        F: Fn(&mut T, &U) + Sync,
    {
        assert_eq!(data.len(), other.len());
        if data.len() >= MIN_PAR_LEN {
            data.par_iter_mut()
                .zip(other.par_iter())
                .for_each(|(a, b)| f(a, b));
        } else {
            data.iter_mut().zip(other.iter()).for_each(|(a, b)| f(a, b));
        }
    }

    /// Like `for_each_chunk_mut` but hands each worker a scratch value
    /// created by `init` (one per thread under rayon, one total otherwise).
    pub fn for_each_chunk_mut_with<T, S, I, F>(data: &mut [T], chunk: usize, init: I, f: F)
    where
        T: Send,
        S: Send,
        I: Fn() -> S + Sync,
        F: Fn(usize, &mut [T], &mut S) + Sync,
    {
        if data.len() >= MIN_PAR_LEN && data.len() / chunk >= 2 {
            data.par_chunks_mut(chunk)
                .enumerate()
                .for_each_init(&init, |s, (i, c)| f(i, c, s));
        } else {
            let mut s = init();
            data.chunks_mut(chunk)
                .enumerate()
                .for_each(|(i, c)| f(i, c, &mut s));
        }
    }
}

#[cfg(not(feature = "parallel"))]
mod imp {
    pub fn map_inplace<T, F>(data: &mut [T], f: F)
    where
        F: Fn(&mut T),
    {
        data.iter_mut().for_each(|x| f(x));
    }

    pub fn zip_apply<T, U, F>(data: &mut [T], other: &[U], f: F)
    where
        F: Fn(&mut T, &U),
    {
        assert_eq!(data.len(), other.len());
        data.iter_mut().zip(other.iter()).for_each(|(a, b)| f(a, b));
    }

    pub fn fill_indexed<T, F>(out: &mut [T], f: F)
    where
        F: Fn(usize) -> T,
    {
        out.iter_mut().enumerate().for_each(|(i, x)| *x = f(i));
    }

    pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [T]),
    {
        data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }

    pub fn for_each_chunk_mut_with<T, S, I, F>(data: &mut [T], chunk: usize, init: I, f: F)
    where
        I: Fn() -> S,
        F: Fn(usize, &mut [T], &mut S),
    {
        let mut s = init();
        data.chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i, c, &mut s));
    }
}

pub use imp::{fill_indexed, for_each_chunk_mut, for_each_chunk_mut_with, map_inplace, zip_apply};

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fill_indexed_matches_sequential() {
        let mut big = vec![0.0f64; 10_000];
        fill_indexed(&mut big, |i| i as f64 * 0.5);
        for (i, &x) in big.iter().enumerate() {
            assert_eq!(x, i as f64 * 0.5);
        }
    }

    #[test]
    fn chunks_see_disjoint_slices() {
        let mut data = vec![0.0f64; 6000];
        for_each_chunk_mut(&mut data, 100, |i, c| {
            for x in c.iter_mut() {
                *x = i as f64;
            }
        });
        for (i, &x) in data.iter().enumerate() {
            assert_eq!(x, (i / 100) as f64);
        }
    }

    #[test]
    fn scratch_variant_runs_every_chunk() {
        let mut data = vec![1.0f64; 8192];
        for_each_chunk_mut_with(
            &mut data,
            64,
            || vec![0.0f64; 64],
            |_, c, s| {
                s.copy_from_slice(c);
                for (x, y) in c.iter_mut().zip(s.iter()) {
                    *x = y + 1.0;
                }
            },
        );
        assert!(data.iter().all(|&x| x == 2.0));
    }
}

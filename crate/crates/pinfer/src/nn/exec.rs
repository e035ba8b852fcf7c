//! Execution-mode switch for the data-parallel loops.
//!
//! Every parallel loop in this crate has the shape "fill row `i` of a
//! matrix as a pure function of immutable inputs", where each row is
//! computed with a fixed internal order. Splitting rows across threads
//! therefore cannot change any result bit: parallel and sequential
//! execution are interchangeable, which the bench suite exploits and a
//! property test verifies.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::mat::Mat;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Turn row-parallel execution on or off at runtime; returns the
/// previous setting. With the `parallel` feature compiled out this is
/// a no-op and everything runs sequentially.
pub fn set_parallel(enabled: bool) -> bool {
    PARALLEL.swap(enabled && cfg!(feature = "parallel"), Ordering::Relaxed)
}

pub fn is_parallel() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

/// Apply `f(row_index, row)` to every row of `mat`, in parallel when
/// enabled. `f` must not depend on execution order across rows.
pub fn for_each_row<F>(mat: &mut Mat, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let cols = mat.cols();
    if cols == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    if is_parallel() {
        mat.data_mut()
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
        return;
    }
    for (i, row) in mat.data_mut().chunks_mut(cols).enumerate() {
        f(i, row);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_every_row_once() {
        let mut m = Mat::zeros(7, 3);
        for_each_row(&mut m, |i, row| {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (i * 10 + j) as f64;
            }
        });
        assert_eq!(m.row(6), &[60.0, 61.0, 62.0]);
        assert_eq!(m.row(0), &[0.0, 1.0, 2.0]);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_agree() {
        let fill = |m: &mut Mat| {
            for_each_row(m, |i, row| {
                let mut acc = i as f64;
                for (j, v) in row.iter_mut().enumerate() {
                    acc += ((i + 1) * (j + 3)) as f64 / 7.0;
                    *v = acc.sin();
                }
            });
        };
        let mut a = Mat::zeros(64, 9);
        let mut b = Mat::zeros(64, 9);
        let was = set_parallel(true);
        fill(&mut a);
        set_parallel(false);
        fill(&mut b);
        set_parallel(was);
        assert_eq!(a, b);
    }
}

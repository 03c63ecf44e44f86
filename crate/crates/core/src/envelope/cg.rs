//! Conjugate gradients with thread-count independent reductions.

use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Sum of `f(i)` for `i < n` with a fixed chunking, so the rounding does not
/// depend on how many threads run it.
pub fn det_sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let partial: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    partial.iter().sum()
}

/// Solves `A x = b` for symmetric positive definite `A` given as a matvec.
/// Stops when `max |A x − b| ≤ tol` or after `max_iter` steps; returns the
/// final max-norm residual.
pub fn conjugate_gradient<M>(apply: M, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> (f64, usize)
where
    M: Fn(&[f64], &mut [f64]) + Sync,
{
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.par_iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = det_sum(n, |i| r[i] * r[i]);
    let max_norm = |v: &[f64]| v.par_iter().fold(|| 0.0f64, |a, x| a.max(x.abs())).reduce(|| 0.0, f64::max);
    let mut res = max_norm(&r);
    let mut it = 0;
    while res > tol && it < max_iter && rr > 0.0 {
        apply(&p, &mut ap);
        let pap = det_sum(n, |i| p[i] * ap[i]);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += alpha * pi);
        r.par_iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= alpha * api);
        let rr_new = det_sum(n, |i| r[i] * r[i]);
        let beta = rr_new / rr;
        rr = rr_new;
        p.par_iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        it += 1;
        // the recursive residual drifts; recompute it now and then
        if it % 50 == 0 {
            apply(x, &mut ax);
            r.par_iter_mut().zip(b.par_iter().zip(&ax)).for_each(|(ri, (bi, ai))| *ri = bi - ai);
            rr = det_sum(n, |i| r[i] * r[i]);
        }
        res = max_norm(&r);
    }
    apply(x, &mut ax);
    let true_res = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai).abs()).fold(0.0, f64::max);
    (true_res, it)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_tridiagonal_system() {
        let n = 200;
        let apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 2.0 * x[i] - l - r;
            }
        };
        let b: Vec<f64> = (0..n).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let mut x = vec![0.0; n];
        let (res, _) = conjugate_gradient(apply, &b, &mut x, 1e-12, 10_000);
        assert!(res <= 1e-12);
    }

    #[test]
    fn chunked_sum_is_thread_independent() {
        let f = |i: usize| ((i as f64) * 0.37).sin() * 1e-3;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| det_sum(100_000, f));
        let many = rayon::ThreadPoolBuilder::new().num_threads(7).build().unwrap().install(|| det_sum(100_000, f));
        assert_eq!(one.to_bits(), many.to_bits());
    }
}

//! Small dense-vector kernels shared by the solvers.

/// Inner product with eight interleaved partial sums (fixed order, so the
/// result is reproducible).
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v *= alpha);
}

/// Flip the global sign so the largest-magnitude amplitude is positive
/// (first such index on ties). Returns true when a flip happened.
pub fn fix_sign_gauge(x: &mut [f64]) -> bool {
    let mut best = 0;
    let mut best_abs: f64 = -1.0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > best_abs + 1e-12 * best_abs.max(0.0) {
            best = i;
            best_abs = v.abs();
        }
    }
    if x.get(best).is_some_and(|v| *v < 0.0) {
        scale(-1.0, x);
        true
    } else {
        false
    }
}

//! Lowest eigenpairs of a small symmetric tridiagonal matrix by Sturm
//! bisection and inverse iteration. Used for the Lanczos Ritz problem.

/// Number of eigenvalues strictly below `x`.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    for i in 0..diag.len() {
        if i > 0 {
            q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        }
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `index`-th smallest eigenvalue (0-based).
pub(crate) fn eigenvalue(diag: &[f64], off: &[f64], index: usize) -> f64 {
    let n = diag.len();
    assert!(index < n);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(diag, off, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * scale {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Normalized eigenvector for an (accurate) eigenvalue `lambda`.
pub(crate) fn eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = diag.iter().chain(off).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let shift = lambda + 1e3 * f64::EPSILON * scale;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7 % 11) as f64)).collect();
    normalize(&mut x);
    for _ in 0..3 {
        x = solve_shifted(diag, off, shift, &x, scale);
        normalize(&mut x);
    }
    x
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Solve (T − shift·I) y = rhs with partial pivoting.
fn solve_shifted(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64], scale: f64) -> Vec<f64> {
    let n = diag.len();
    let eps = f64::EPSILON * scale;
    // Row i holds entries in columns i, i+1, i+2 after pivoting.
    let mut u0: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut u1: Vec<f64> = (0..n).map(|i| if i + 1 < n { off[i] } else { 0.0 }).collect();
    let mut u2 = vec![0.0; n];
    let mut lower: Vec<f64> = (0..n).map(|i| if i > 0 { off[i - 1] } else { 0.0 }).collect();
    let mut b = rhs.to_vec();
    for i in 0..n - 1 {
        // candidate rows i and i+1 for column i
        if lower[i + 1].abs() > u0[i].abs() {
            // swap rows i and i+1
            let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
            u0[i] = lower[i + 1];
            u1[i] = u0[i + 1];
            u2[i] = u1[i + 1];
            lower[i + 1] = a0;
            u0[i + 1] = a1;
            u1[i + 1] = a2;
            b.swap(i, i + 1);
        }
        if u0[i].abs() < eps {
            u0[i] = eps;
        }
        let m = lower[i + 1] / u0[i];
        u0[i + 1] -= m * u1[i];
        u1[i + 1] -= m * u2[i];
        b[i + 1] -= m * b[i];
        lower[i + 1] = 0.0;
    }
    if u0[n - 1].abs() < eps {
        u0[n - 1] = eps;
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= u1[i] * y[i + 1];
        }
        if i + 2 < n {
            acc -= u2[i] * y[i + 2];
        }
        y[i] = acc / u0[i];
    }
    y
}

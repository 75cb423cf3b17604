//! Dense row-major f64 kernels used by the tagger.

/// `C = alpha · op(A) · op(B) + beta · C` with explicit row/column strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
    rsc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the asserts above bound every index touched for the
    // row-major and transposed layouts passed by the wrappers below.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            1,
        );
    }
}

/// `C[m×n] = A[m×k] · B[n×k]ᵀ + beta · C`
pub fn mul_abt(a: &[f64], m: usize, k: usize, b: &[f64], n: usize, c: &mut [f64], beta: f64) {
    gemm(m, k, n, 1.0, a, (k as isize, 1), b, (1, k as isize), beta, c, n as isize);
}

/// `C[m×n] = A[m×k] · B[k×n] + beta · C`
pub fn mul_ab(a: &[f64], m: usize, k: usize, b: &[f64], n: usize, c: &mut [f64], beta: f64) {
    gemm(m, k, n, 1.0, a, (k as isize, 1), b, (n as isize, 1), beta, c, n as isize);
}

/// `C[m×n] += A[k×m]ᵀ · B[k×n]`
pub fn mul_atb_acc(a: &[f64], k: usize, m: usize, b: &[f64], n: usize, c: &mut [f64]) {
    gemm(m, k, n, 1.0, a, (1, m as isize), b, (n as isize, 1), 1.0, c, n as isize);
}

/// `y += Wᵀ v` for row-major `W[rows×cols]`, i.e. a sum of scaled rows.
pub fn gemv_t_acc(w: &[f64], rows: usize, cols: usize, v: &[f64], y: &mut [f64]) {
    assert!(w.len() >= rows * cols && v.len() >= rows && y.len() >= cols);
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports the enabled features.
            unsafe { axpy_rows_avx2(w, rows, cols, v, y) };
            return;
        }
    }
    axpy_rows(w, rows, cols, v, y);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn axpy_rows_avx2(w: &[f64], rows: usize, cols: usize, v: &[f64], y: &mut [f64]) {
    axpy_rows(w, rows, cols, v, y);
}

#[inline(always)]
fn axpy_rows(w: &[f64], rows: usize, cols: usize, v: &[f64], y: &mut [f64]) {
    let y = &mut y[..cols];
    for (r, &vr) in v.iter().enumerate().take(rows) {
        if vr == 0.0 {
            continue;
        }
        for (o, &wv) in y.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += vr * wv;
        }
    }
}

/// Row-major transpose of `a[rows×cols]`.
pub fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            t[j * rows + i] = a[i * cols + j];
        }
    }
    t
}

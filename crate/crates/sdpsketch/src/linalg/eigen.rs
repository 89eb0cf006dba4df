//! Symmetric eigendecomposition: Householder tridiagonalization followed by
//! the implicit-shift QL iteration, with optional eigenvector accumulation.
//!
//! The iteration budget is `30 * n` sweeps in total; exceeding it reports
//! `ConvergenceFailure` instead of returning garbage.

use super::dense::Mat;
use crate::error::{Error, Result};

/// Householder vector for `x`: returns `(v, beta)` with `v[0] = 1` such that
/// `(I - beta v v^T) x` is a multiple of `e1`.
fn householder(x: &[f64]) -> (Vec<f64>, f64) {
    let n = x.len();
    let sigma: f64 = x[1..].iter().map(|v| v * v).sum();
    let mut v = x.to_vec();
    v[0] = 1.0;
    if sigma == 0.0 {
        return (v, 0.0);
    }
    let mu = (x[0] * x[0] + sigma).sqrt();
    let v0 = if x[0] <= 0.0 {
        x[0] - mu
    } else {
        -sigma / (x[0] + mu)
    };
    let beta = 2.0 * v0 * v0 / (sigma + v0 * v0);
    for item in v.iter_mut().take(n).skip(1) {
        *item /= v0;
    }
    v[0] = 1.0;
    (v, beta)
}

/// Reduce a symmetric matrix to tridiagonal form `T = Q^T M Q`.
///
/// Returns the diagonal `d`, the subdiagonal `e` (`e[i]` couples `i` and
/// `i + 1`, `e[n-1] = 0`), and, when requested, the accumulated orthogonal
/// factor `Q`.
fn tridiagonalize(a: &mut Mat, accumulate: bool) -> (Vec<f64>, Vec<f64>, Option<Mat>) {
    let n = a.rows();
    let mut e = vec![0.0; n];
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::new();

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x: Vec<f64> = (0..m).map(|i| a.get(k + 1 + i, k)).collect();
        let (v, beta) = householder(&x);
        // Subdiagonal entry after reflection.
        let vx: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
        e[k] = x[0] - beta * vx;

        if beta != 0.0 {
            // p = beta * Asub * v ; w = p - (beta/2)(p.v) v ; Asub -= v w^T + w v^T
            let mut p = vec![0.0; m];
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += a.get(k + 1 + i, k + 1 + j) * v[j];
                }
                p[i] = beta * acc;
            }
            let c: f64 = 0.5 * beta * p.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>();
            let w: Vec<f64> = p.iter().zip(v.iter()).map(|(pi, vi)| pi - c * vi).collect();
            for i in 0..m {
                for j in 0..m {
                    a.add_to(k + 1 + i, k + 1 + j, -(v[i] * w[j] + w[i] * v[j]));
                }
            }
        }
        if accumulate {
            reflectors.push((v, beta));
        }
    }
    // The final coupling (between n-2 and n-1) is untouched by any reflection,
    // so read it off the reduced matrix; earlier couplings were set above.
    if n >= 2 {
        e[n - 2] = a.get(n - 1, n - 2);
    }
    let d: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();

    let q = if accumulate {
        let mut q = Mat::identity(n);
        for (k, (v, beta)) in reflectors.iter().enumerate().rev() {
            if *beta == 0.0 {
                continue;
            }
            let m = v.len();
            // Qsub -= beta * v * (v^T Qsub), Qsub = Q[k+1.., k+1..]
            let mut vt_q = vec![0.0; m];
            for (j, vt) in vt_q.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (i, vi) in v.iter().enumerate() {
                    acc += vi * q.get(k + 1 + i, k + 1 + j);
                }
                *vt = acc;
            }
            for (i, vi) in v.iter().enumerate() {
                let coef = beta * vi;
                for (j, vt) in vt_q.iter().enumerate() {
                    q.add_to(k + 1 + i, k + 1 + j, -coef * vt);
                }
            }
        }
        Some(q)
    } else {
        None
    };
    (d, e, q)
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
///
/// `e[i]` couples `d[i]` and `d[i+1]`; rotations are accumulated into the
/// columns of `q` when provided.
fn ql_implicit(
    d: &mut [f64],
    e: &mut [f64],
    mut q: Option<&mut Mat>,
    max_sweeps: usize,
) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let mut f = 0.0_f64;
    let mut tst1 = 0.0_f64;
    let mut sweeps = 0usize;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        let m = m.min(n - 1);
        if m > l {
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(Error::ConvergenceFailure(max_sweeps));
                }
                // Implicit shift from the leading 2x2.
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                // QL sweep from m-1 down to l.
                p = d[m];
                let mut c = 1.0_f64;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0_f64;
                let mut s2 = 0.0_f64;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let gg = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * gg;
                    d[i + 1] = h + s * (c * gg + s * d[i]);
                    if let Some(qm) = q.as_deref_mut() {
                        for k in 0..n {
                            let t = qm.get(k, i + 1);
                            qm.set(k, i + 1, s * qm.get(k, i) + c * t);
                            qm.set(k, i, c * qm.get(k, i) - s * t);
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn sort_descending(d: &mut [f64], q: Option<&mut Mat>) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    d.copy_from_slice(&sorted);
    if let Some(q) = q {
        let old = q.clone();
        for (new_col, &old_col) in order.iter().enumerate() {
            for r in 0..n {
                q.set(r, new_col, old.get(r, old_col));
            }
        }
    }
}

/// Full eigendecomposition of a symmetric dense matrix.
///
/// Eigenvalues come back in nonincreasing order, with eigenvector `j` in
/// column `j` of the returned matrix.
pub fn sym_eigen_full(m: &Mat) -> Result<(Vec<f64>, Mat)> {
    assert_eq!(
        m.rows(),
        m.cols(),
        "eigendecomposition needs a square matrix"
    );
    if !m.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let n = m.rows();
    let mut work = m.clone();
    let (mut d, mut e, q) = tridiagonalize(&mut work, true);
    let mut q = q.expect("accumulation requested");
    ql_implicit(&mut d, &mut e, Some(&mut q), 30 * n.max(1))?;
    sort_descending(&mut d, Some(&mut q));
    Ok((d, q))
}

/// Eigenvalues only (nonincreasing), skipping eigenvector accumulation.
pub fn sym_eigenvalues(m: &Mat) -> Result<Vec<f64>> {
    assert_eq!(
        m.rows(),
        m.cols(),
        "eigendecomposition needs a square matrix"
    );
    if !m.is_finite() {
        return Err(Error::NonFinite("eigendecomposition input"));
    }
    let n = m.rows();
    let mut work = m.clone();
    let (mut d, mut e, _) = tridiagonalize(&mut work, false);
    ql_implicit(&mut d, &mut e, None, 30 * n.max(1))?;
    sort_descending(&mut d, None);
    Ok(d)
}

/// Smallest eigenvalue of a symmetric dense matrix.
pub fn min_eigenvalue(m: &Mat) -> Result<f64> {
    let vals = sym_eigenvalues(m)?;
    Ok(*vals.last().expect("nonempty spectrum"))
}

use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::scalar::Scalar;

/// Eigendecomposition of a small dense symmetric matrix.
///
/// Returns eigenvalues in descending order and the matching orthonormal
/// eigenvectors as columns. The input is symmetrized as `(a + aᵀ)/2` first.
/// Householder tridiagonalization followed by implicit QL iterations.
pub fn symmetric_eigen<T: Scalar>(a: &DenseMatrix<T>) -> Result<(Vec<T>, DenseMatrix<T>)> {
    let (n, c) = a.shape();
    if n != c {
        return Err(Error::shape("symmetric_eigen", "square matrix", format!("{n}x{c}")));
    }
    a.ensure_finite("symmetric_eigen input")?;
    if n == 0 {
        return Ok((Vec::new(), DenseMatrix::zeros(0, 0)));
    }
    let half = T::of(0.5);
    let mut v: Vec<T> = (0..n * n).map(|idx| half * (a[(idx / n, idx % n)] + a[(idx % n, idx / n)])).collect();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(n, &mut v, &mut d, &mut e);
    ql_implicit(n, &mut v, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |row, col| v[row * n + order[col]]);
    vectors.ensure_finite("symmetric_eigen")?;
    Ok((values, vectors))
}

fn tridiagonalize<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) {
    let at = |r: usize, c: usize| r * n + c;
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for &dk in &d[..i] {
            scale += dk.abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = zero;
                v[at(j, i)] = zero;
            }
        } else {
            for dk in &mut d[..i] {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in &mut e[..i] {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[at(j, i)] = f;
                g = e[j] + v[at(j, j)] * f;
                for k in j + 1..i {
                    g += v[at(k, j)] * d[k];
                    e[k] += v[at(k, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[at(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[at(i - 1, j)];
                v[at(i, j)] = zero;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[at(n - 1, i)] = v[at(i, i)];
        v[at(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[at(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[at(k, i + 1)] * v[at(k, j)];
                }
                for k in 0..=i {
                    v[at(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[at(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[at(n - 1, j)];
        v[at(n - 1, j)] = zero;
    }
    v[at(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

fn ql_implicit<T: Scalar>(n: usize, v: &mut [T], d: &mut [T], e: &mut [T]) -> Result<()> {
    let at = |r: usize, c: usize| r * n + c;
    let zero = T::zero();
    let one = T::one();
    let two = T::of(2.0);
    let eps = T::epsilon();
    let max_sweeps = 64 * n.max(1);

    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > max_sweeps {
                    return Err(Error::NoConvergence {
                        solver: "symmetric QL",
                        iterations: sweeps,
                        residual: e[l].abs().as_f64(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in &mut d[l + 2..n] {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        h = v[at(k, i + 1)];
                        v[at(k, i + 1)] = s * v[at(k, i)] + c * h;
                        v[at(k, i)] = c * v[at(k, i)] - s * h;
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
        e[l] = zero;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_decomposition(a: &DenseMatrix<f64>, tol: f64) {
        let (vals, vecs) = symmetric_eigen(a).unwrap();
        let n = a.n_rows();
        let lambda = DenseMatrix::from_diagonal(&vals);
        let recon = vecs.matmul(&lambda).unwrap().matmul_t(&vecs).unwrap();
        assert!(recon.max_abs_diff(a) < tol, "reconstruction {}", recon.max_abs_diff(a));
        let gram = vecs.t_matmul(&vecs).unwrap();
        assert!(gram.max_abs_diff(&DenseMatrix::identity(n)) < tol);
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn diagonal_sorted_descending() {
        let (vals, vecs) = symmetric_eigen(&DenseMatrix::<f64>::from_diagonal(&[1.0, 3.0, 2.0])).unwrap();
        assert_eq!(vals, vec![3.0, 2.0, 1.0]);
        assert!((vecs[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two() {
        let (vals, _) = symmetric_eigen(&DenseMatrix::<f64>::from_rows(&[[2.0, 1.0], [1.0, 2.0]])).unwrap();
        assert!((vals[0] - 3.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn one_by_one_and_empty() {
        let (vals, vecs) = symmetric_eigen(&DenseMatrix::from_rows(&[[-4.0]])).unwrap();
        assert_eq!(vals, vec![-4.0]);
        assert_eq!(vecs[(0, 0)], 1.0);
        assert!(symmetric_eigen(&DenseMatrix::<f64>::zeros(0, 0)).unwrap().0.is_empty());
    }

    #[test]
    fn dense_symmetric_reconstructs() {
        let a = DenseMatrix::from_fn(7, 7, |i, j| ((i * 3 + j * 3 + i * j) % 11) as f64 - 5.0);
        check_decomposition(&a, 1e-11);
    }

    #[test]
    fn repeated_eigenvalues() {
        check_decomposition(&DenseMatrix::identity(5).scale(2.5), 1e-14);
        let mut a = DenseMatrix::from_diagonal(&[1.0, 1.0, 4.0, 4.0]);
        a[(0, 3)] = 0.5;
        a[(3, 0)] = 0.5;
        check_decomposition(&a, 1e-13);
    }
}

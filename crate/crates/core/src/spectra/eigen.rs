//! Dense symmetric/Hermitian eigensolver.
//!
//! Householder reduction to a real symmetric tridiagonal matrix followed by
//! the implicit-shift QL iteration with Wilkinson shifts (the EISPACK `tql`
//! family). Complex Hermitian input is reduced with complex reflectors
//! chosen so that every subdiagonal comes out real; from then on both paths
//! share the tridiagonal solver.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// QL sweeps allowed per eigenvalue before giving up.
pub const MAX_SWEEPS_PER_EIGENVALUE: usize = 50;

/// Eigenvalues of a dense Hermitian matrix (row-major, full storage),
/// ascending. The input is overwritten.
pub fn hermitian_eigenvalues(a: &mut [Complex64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let (mut d, mut e) = hermitian_tridiagonalize(a, n);
    tridiagonal_ql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Reduces `a` to real tridiagonal form `(diag, subdiag)`, `subdiag[k]`
/// being entry `(k+1, k)`. Only eigenvalues survive; the reflectors are
/// discarded.
fn hermitian_tridiagonalize(a: &mut [Complex64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let zero = Complex64::new(0.0, 0.0);
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1; // length of the column below the diagonal
        let base = k + 1;
        let alpha = a[base * n + k];
        let xnorm_sq: f64 = (base + 1..n).map(|i| a[i * n + k].norm_sqr()).sum();
        if xnorm_sq == 0.0 && alpha.im == 0.0 {
            e[k] = alpha.re;
            continue;
        }
        // complex Householder (LAPACK zlarfg): H^H [alpha; x] = [beta; 0]
        let beta = -alpha.re.signum() * (alpha.norm_sqr() + xnorm_sq).sqrt();
        let beta = if beta == 0.0 { -(alpha.norm_sqr() + xnorm_sq).sqrt() } else { beta };
        let tau = Complex64::new((beta - alpha.re) / beta, -alpha.im / beta);
        let scale = (alpha - beta).inv();
        v[0] = Complex64::new(1.0, 0.0);
        for i in 1..m {
            v[i] = a[(base + i) * n + k] * scale;
        }
        e[k] = beta;

        // p = tau * A22 v
        for i in 0..m {
            let row = &a[(base + i) * n + base..(base + i) * n + base + m];
            let mut s = zero;
            for (aij, vj) in row.iter().zip(&v[..m]) {
                s += aij * vj;
            }
            p[i] = tau * s;
        }
        // w = p - (conj(tau) (v^H p) / 2) v ; the coefficient is real
        let mut vhp = zero;
        for i in 0..m {
            vhp += v[i].conj() * p[i];
        }
        let c = 0.5 * (tau.conj() * vhp).re;
        for i in 0..m {
            p[i] -= v[i] * c;
        }
        // A22 <- A22 - w v^H - v w^H
        for i in 0..m {
            let wi = p[i];
            let vi = v[i];
            let row = &mut a[(base + i) * n + base..(base + i) * n + base + m];
            for j in 0..m {
                row[j] -= wi * v[j].conj() + vi * p[j].conj();
            }
        }
    }
    let d = (0..n).map(|i| a[i * n + i].re).collect();
    (d, e)
}

/// Eigen-decomposition of a real symmetric matrix (row-major, full
/// storage). Returns ascending eigenvalues and, if requested, the
/// orthonormal eigenvectors as the columns of a row-major `n x n` matrix.
pub fn symmetric_eigen(a: &[f64], n: usize, vectors: bool) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    assert_eq!(a.len(), n * n);
    let mut z = a.to_vec();
    let (mut d, mut e) = symmetric_tridiagonalize(&mut z, n, vectors);
    if vectors {
        tridiagonal_ql(&mut d, &mut e, Some(&mut z))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
        let values = order.iter().map(|&i| d[i]).collect();
        let mut q = vec![0.0; n * n];
        for (new, &old) in order.iter().enumerate() {
            for r in 0..n {
                q[r * n + new] = z[r * n + old];
            }
        }
        Ok((values, Some(q)))
    } else {
        tridiagonal_ql(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        Ok((d, None))
    }
}

/// Householder tridiagonalization of a real symmetric matrix (row-major).
/// With `accumulate`, `z` is overwritten by the orthogonal `Q` with
/// `A = Q T Q^T`; otherwise its contents are scratch.
fn symmetric_tridiagonalize(z: &mut [f64], n: usize, accumulate: bool) -> (Vec<f64>, Vec<f64>) {
    let mut e = vec![0.0; n.saturating_sub(1)];
    // reflectors stored as (v, tau) with v[0] = 1 implied at position k+1
    let mut reflectors: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut p = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let base = k + 1;
        let alpha = z[base * n + k];
        let xnorm_sq: f64 = (base + 1..n).map(|i| z[i * n + k].powi(2)).sum();
        if xnorm_sq == 0.0 {
            e[k] = alpha;
            if accumulate {
                reflectors.push((Vec::new(), 0.0));
            }
            continue;
        }
        let norm = (alpha * alpha + xnorm_sq).sqrt();
        let beta = if alpha >= 0.0 { -norm } else { norm };
        let tau = (beta - alpha) / beta;
        let scale = 1.0 / (alpha - beta);
        let mut v = vec![0.0; m];
        v[0] = 1.0;
        for i in 1..m {
            v[i] = z[(base + i) * n + k] * scale;
        }
        e[k] = beta;

        for i in 0..m {
            let row = &z[(base + i) * n + base..(base + i) * n + base + m];
            p[i] = tau * row.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        }
        let c = 0.5 * tau * v.iter().zip(&p[..m]).map(|(x, y)| x * y).sum::<f64>();
        for i in 0..m {
            p[i] -= c * v[i];
        }
        for i in 0..m {
            let (wi, vi) = (p[i], v[i]);
            let row = &mut z[(base + i) * n + base..(base + i) * n + base + m];
            for j in 0..m {
                row[j] -= wi * v[j] + vi * p[j];
            }
        }
        if accumulate {
            reflectors.push((v, tau));
        }
    }
    let d: Vec<f64> = (0..n).map(|i| z[i * n + i]).collect();
    if accumulate {
        // Q = H_0 H_1 ... H_{n-2}, built backwards onto the identity
        z.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        let mut tmp = vec![0.0; n];
        for (k, (v, tau)) in reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            let base = k + 1;
            let m = v.len();
            // Q[base.., base..] <- (I - tau v v^T) Q[base.., base..]
            tmp[..n].iter_mut().for_each(|x| *x = 0.0);
            for (i, vi) in v.iter().enumerate() {
                let row = &z[(base + i) * n..(base + i) * n + n];
                for c in base..n {
                    tmp[c] += vi * row[c];
                }
            }
            for i in 0..m {
                let f = tau * v[i];
                let row = &mut z[(base + i) * n..(base + i) * n + n];
                for c in base..n {
                    row[c] -= f * tmp[c];
                }
            }
        }
    }
    (d, e)
}

/// Implicit QL with Wilkinson shifts on the symmetric tridiagonal matrix
/// with diagonal `d` and subdiagonal `e` (`e[i]` couples `i` and `i+1`).
/// On return `d` holds the (unsorted) eigenvalues. When `z` is given, its
/// columns are rotated along, so passing `Q` from the reduction yields the
/// eigenvectors of the original matrix.
pub fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    // QL wants the large entries at the bottom; run on the reversed matrix
    // (QR in effect) when the grading points the other way
    if d[n - 1].abs() < d[0].abs() {
        let flip = |d: &mut [f64], e: &mut [f64], z: Option<&mut [f64]>| {
            d.reverse();
            e.reverse();
            if let Some(z) = z {
                z.chunks_exact_mut(n).for_each(|row| row.reverse());
            }
        };
        flip(d, e, z.as_deref_mut());
        let r = ql_implicit(d, e, z.as_deref_mut());
        flip(d, e, z);
        return r;
    }
    ql_implicit(d, e, z)
}

fn ql_implicit(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    // work on a padded copy with e[n-1] = 0
    let mut sub = e.to_vec();
    sub.push(0.0);
    for l in 0..n {
        let mut iterations = 0;
        loop {
            // find a negligible subdiagonal element
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if sub[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > MAX_SWEEPS_PER_EIGENVALUE {
                return Err(Error::NoConvergence {
                    index: l,
                    iterations: MAX_SWEEPS_PER_EIGENVALUE,
                });
            }
            // Wilkinson shift from the leading 2x2 block
            let g0 = (d[l + 1] - d[l]) / (2.0 * sub[l]);
            let r0 = g0.hypot(1.0);
            let mut g = d[m] - d[l] + sub[l] / (g0 + r0.copysign(g0));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * sub[i];
                let b = c * sub[i];
                let r = f.hypot(g);
                sub[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    sub[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                let gg = d[i + 1] - p;
                let rr = (d[i] - gg) * s + 2.0 * c * b;
                p = s * rr;
                d[i + 1] = gg + p;
                g = c * rr - b;
                if let Some(z) = z.as_deref_mut() {
                    for row in z.chunks_exact_mut(n) {
                        let zi1 = row[i + 1];
                        let zi = row[i];
                        row[i + 1] = s * zi + c * zi1;
                        row[i] = c * zi - s * zi1;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            sub[l] = g;
            sub[m] = 0.0;
        }
    }
    e.copy_from_slice(&sub[..n - 1]);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_matrix() {
        let mut a = vec![c(0.0, 0.0); 9];
        a[0] = c(3.0, 0.0);
        a[4] = c(1.0, 0.0);
        a[8] = c(2.0, 0.0);
        let ev = hermitian_eigenvalues(&mut a, 3).unwrap();
        assert_eq!(ev, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_swap() {
        let mut a = vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)];
        let ev = hermitian_eigenvalues(&mut a, 2).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn complex_two_by_two_closed_form() {
        // [[a, z], [conj z, b]]: (a+b)/2 ± sqrt(((a-b)/2)^2 + |z|^2)
        let z = c(0.3, -1.1);
        let mut a = vec![c(0.5, 0.0), z, z.conj(), c(-0.25, 0.0)];
        let ev = hermitian_eigenvalues(&mut a, 2).unwrap();
        let mid = 0.125;
        let rad = (0.375f64.powi(2) + z.norm_sqr()).sqrt();
        assert!((ev[0] - (mid - rad)).abs() < 1e-14);
        assert!((ev[1] - (mid + rad)).abs() < 1e-14);
    }

    #[test]
    fn purely_imaginary_offdiagonal() {
        // [[0, i], [-i, 0]] has eigenvalues ±1
        let mut a = vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)];
        let ev = hermitian_eigenvalues(&mut a, 2).unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn real_path_agrees_with_complex_path() {
        let n = 30;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let mut ac: Vec<Complex64> = a.iter().map(|&x| c(x, 0.0)).collect();
        let evc = hermitian_eigenvalues(&mut ac, n).unwrap();
        let (evr, _) = symmetric_eigen(&a, n, false).unwrap();
        for (x, y) in evc.iter().zip(&evr) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let n = 25;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let x: f64 = rng.gen_range(-1.0..1.0);
                a[i * n + j] = x;
                a[j * n + i] = x;
            }
        }
        let (vals, vecs) = symmetric_eigen(&a, n, true).unwrap();
        let q = vecs.unwrap();
        for k in 0..n {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i * n + j] * q[j * n + k]).sum();
                assert!((av - vals[k] * q[i * n + k]).abs() < 1e-12, "residual k={k}");
            }
            for l in 0..n {
                let dot: f64 = (0..n).map(|i| q[i * n + k] * q[i * n + l]).sum();
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let n = 6;
        let mut a = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = c(1.0, 0.0);
        }
        let ev = hermitian_eigenvalues(&mut a, n).unwrap();
        assert!(ev.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn tridiagonal_closed_form() {
        // second-difference matrix: 2 - 2 cos(k pi / (n+1))
        let n = 40;
        let mut d = vec![2.0; n];
        let mut e = vec![-1.0; n - 1];
        tridiagonal_ql(&mut d, &mut e, None).unwrap();
        d.sort_by(f64::total_cmp);
        for (k, x) in d.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((x - exact).abs() < 1e-13);
        }
    }
}

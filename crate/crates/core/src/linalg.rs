//! Dense linear algebra for small row-major matrices.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Solves `a x = b` by LU decomposition with partial pivoting.
pub fn lu_solve(a: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let mut lu = a.to_vec();
    let mut x = b.to_vec();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    if scale == 0.0 {
        return Err(Error::Numeric("matrix is zero".into()));
    }

    for col in 0..n {
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, libm::fabs(lu[r * n + col])))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= 1e-14 * scale {
            return Err(Error::Numeric("matrix is singular to working precision".into()));
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        let pivot = lu[col * n + col];
        for r in col + 1..n {
            let f = lu[r * n + col] / pivot;
            if f != 0.0 {
                lu[r * n + col] = f;
                for j in col + 1..n {
                    lu[r * n + j] -= f * lu[col * n + j];
                }
                x[r] -= f * x[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut acc = x[r];
        for j in r + 1..n {
            acc -= lu[r * n + j] * x[j];
        }
        x[r] = acc / lu[r * n + r];
    }
    Ok(x)
}

pub fn mat_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|r| a[r * n..(r + 1) * n].iter().zip(x).map(|(u, v)| u * v).sum())
        .collect()
}

/// All eigenvalues of a general real matrix: balancing, reduction to upper
/// Hessenberg form by elimination, then shifted QR (Francis double step).
pub fn eigenvalues(a: &[f64], n: usize) -> Result<Vec<Complex64>> {
    assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix has non-finite entries".into()));
    }
    // 1-based working copy keeps the QR sweep close to its textbook form.
    let mut h = OneBased::new(n);
    for i in 1..=n {
        for j in 1..=n {
            *h.at(i, j) = a[(i - 1) * n + (j - 1)];
        }
    }
    balance(&mut h);
    to_hessenberg(&mut h);
    for i in 1..=n {
        for j in 1..i.saturating_sub(1) {
            *h.at(i, j) = 0.0;
        }
    }
    hessenberg_qr(&mut h)
}

/// Maximum real part over the spectrum.
pub fn spectral_abscissa(a: &[f64], n: usize) -> Result<f64> {
    Ok(eigenvalues(a, n)?.iter().fold(f64::NEG_INFINITY, |m, z| m.max(z.re)))
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &[f64], n: usize) -> Result<f64> {
    Ok(eigenvalues(a, n)?.iter().fold(0.0f64, |m, z| m.max(z.norm())))
}

struct OneBased {
    n: usize,
    data: Vec<f64>,
}

impl OneBased {
    fn new(n: usize) -> Self {
        OneBased {
            n,
            data: vec![0.0; (n + 1) * (n + 1)],
        }
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * (self.n + 1) + j]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.n + 1) + j]
    }
}

fn balance(a: &mut OneBased) {
    const RADIX: f64 = 2.0;
    let sqrdx = RADIX * RADIX;
    let n = a.n;
    let mut done = false;
    while !done {
        done = true;
        for i in 1..=n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 1..=n {
                if j != i {
                    c += libm::fabs(a.get(j, i));
                    r += libm::fabs(a.get(i, j));
                }
            }
            if c != 0.0 && r != 0.0 {
                let mut g = r / RADIX;
                let mut f = 1.0;
                let s = c + r;
                while c < g {
                    f *= RADIX;
                    c *= sqrdx;
                }
                g = r * RADIX;
                while c > g {
                    f /= RADIX;
                    c /= sqrdx;
                }
                if (c + r) / f < 0.95 * s {
                    done = false;
                    let g = 1.0 / f;
                    for j in 1..=n {
                        *a.at(i, j) *= g;
                    }
                    for j in 1..=n {
                        *a.at(j, i) *= f;
                    }
                }
            }
        }
    }
}

fn to_hessenberg(a: &mut OneBased) {
    let n = a.n;
    for m in 2..n {
        let mut x = 0.0;
        let mut i = m;
        for j in m..=n {
            if libm::fabs(a.get(j, m - 1)) > libm::fabs(x) {
                x = a.get(j, m - 1);
                i = j;
            }
        }
        if i != m {
            for j in (m - 1)..=n {
                let tmp = a.get(i, j);
                *a.at(i, j) = a.get(m, j);
                *a.at(m, j) = tmp;
            }
            for j in 1..=n {
                let tmp = a.get(j, i);
                *a.at(j, i) = a.get(j, m);
                *a.at(j, m) = tmp;
            }
        }
        if x != 0.0 {
            for i in (m + 1)..=n {
                let mut y = a.get(i, m - 1);
                if y != 0.0 {
                    y /= x;
                    *a.at(i, m - 1) = y;
                    for j in m..=n {
                        let v = a.get(m, j);
                        *a.at(i, j) -= y * v;
                    }
                    for j in 1..=n {
                        let v = a.get(j, i);
                        *a.at(j, m) += y * v;
                    }
                }
            }
        }
    }
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        libm::fabs(a)
    } else {
        -libm::fabs(a)
    }
}

fn hessenberg_qr(a: &mut OneBased) -> Result<Vec<Complex64>> {
    const MAX_ITS: usize = 60;
    let n = a.n;
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += libm::fabs(a.get(i, j));
        }
    }
    let mut nn = n;
    let mut t = 0.0;
    let (mut p, mut q, mut r);
    let (mut x, mut y, mut z, mut w);
    while nn >= 1 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l >= 2 {
                let mut s = libm::fabs(a.get(l - 1, l - 1)) + libm::fabs(a.get(l, l));
                if s == 0.0 {
                    s = anorm;
                }
                if libm::fabs(a.get(l, l - 1)) + s == s {
                    *a.at(l, l - 1) = 0.0;
                    break;
                }
                l -= 1;
            }
            x = a.get(nn, nn);
            if l == nn {
                wr[nn] = x + t;
                wi[nn] = 0.0;
                nn -= 1;
            } else {
                y = a.get(nn - 1, nn - 1);
                w = a.get(nn, nn - 1) * a.get(nn - 1, nn);
                if l == nn - 1 {
                    p = 0.5 * (y - x);
                    q = p * p + w;
                    z = libm::sqrt(libm::fabs(q));
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nn - 1] = x + z;
                        wr[nn] = x + z;
                        if z != 0.0 {
                            wr[nn] = x - w / z;
                        }
                        wi[nn - 1] = 0.0;
                        wi[nn] = 0.0;
                    } else {
                        wr[nn - 1] = x + p;
                        wr[nn] = x + p;
                        wi[nn - 1] = -z;
                        wi[nn] = z;
                    }
                    nn = nn.saturating_sub(2);
                } else {
                    if its == MAX_ITS {
                        return Err(Error::Numeric("QR iteration did not converge".into()));
                    }
                    if its == 10 || its == 20 || its == 40 {
                        // Exceptional shift.
                        t += x;
                        for i in 1..=nn {
                            *a.at(i, i) -= x;
                        }
                        let s = libm::fabs(a.get(nn, nn - 1)) + libm::fabs(a.get(nn - 1, nn - 2));
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    loop {
                        z = a.get(m, m);
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / a.get(m + 1, m) + a.get(m, m + 1);
                        q = a.get(m + 1, m + 1) - z - rr - ss;
                        r = a.get(m + 2, m + 1);
                        let s = libm::fabs(p) + libm::fabs(q) + libm::fabs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = libm::fabs(a.get(m, m - 1)) * (libm::fabs(q) + libm::fabs(r));
                        let v = libm::fabs(p)
                            * (libm::fabs(a.get(m - 1, m - 1)) + libm::fabs(z) + libm::fabs(a.get(m + 1, m + 1)));
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in (m + 2)..=nn {
                        *a.at(i, i - 2) = 0.0;
                        if i != m + 2 {
                            *a.at(i, i - 3) = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = a.get(k, k - 1);
                            q = a.get(k + 1, k - 1);
                            r = 0.0;
                            if k != nn - 1 {
                                r = a.get(k + 2, k - 1);
                            }
                            x = libm::fabs(p) + libm::fabs(q) + libm::fabs(r);
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign(libm::sqrt(p * p + q * q + r * r), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    *a.at(k, k - 1) = -a.get(k, k - 1);
                                }
                            } else {
                                *a.at(k, k - 1) = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                p = a.get(k, j) + q * a.get(k + 1, j);
                                if k != nn - 1 {
                                    p += r * a.get(k + 2, j);
                                    *a.at(k + 2, j) -= p * z;
                                }
                                *a.at(k + 1, j) -= p * y;
                                *a.at(k, j) -= p * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                p = x * a.get(i, k) + y * a.get(i, k + 1);
                                if k != nn - 1 {
                                    p += z * a.get(i, k + 2);
                                    *a.at(i, k + 2) -= p * r;
                                }
                                *a.at(i, k + 1) -= p * q;
                                *a.at(i, k) -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 2 || l + 1 >= nn {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// returned in ascending order.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let norm: f64 = m.iter().map(|v| v * v).sum();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off <= 1e-30 * norm.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = sign(1.0, theta) / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Smallest eigenvalue of a Hermitian matrix (row-major, n×n), computed from
/// the real symmetric embedding [[Re, −Im], [Im, Re]].
pub fn hermitian_min_eigenvalue(a: &[Complex64], n: usize) -> f64 {
    assert_eq!(a.len(), n * n);
    let m = 2 * n;
    let mut e = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            // Symmetrize against roundoff in the input.
            let z = 0.5 * (a[i * n + j] + a[j * n + i].conj());
            e[i * m + j] = z.re;
            e[(i + n) * m + (j + n)] = z.re;
            e[i * m + (j + n)] = -z.im;
            e[(i + n) * m + j] = z.im;
        }
    }
    symmetric_eigenvalues(&e, m)[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_small_system() {
        let a = [0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let b = [3.0, 2.0, 4.0];
        let x = lu_solve(&a, 3, &b).unwrap();
        let back = mat_vec(&a, 3, &x);
        for (u, v) in back.iter().zip(b) {
            assert!((u - v).abs() < 1e-14);
        }
        assert!(lu_solve(&[1.0, 2.0, 2.0, 4.0], 2, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn eigenvalues_of_rotation_and_triangle() {
        let ev = eigenvalues(&[0.0, -2.0, 2.0, 0.0], 2).unwrap();
        assert!(ev.iter().all(|z| z.re.abs() < 1e-14 && (z.im.abs() - 2.0).abs() < 1e-14));
        let tri = [1.0, 5.0, 7.0, 0.0, -2.0, 3.0, 0.0, 0.0, 4.0];
        let mut re: Vec<f64> = eigenvalues(&tri, 3).unwrap().iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.total_cmp(b));
        assert!((re[0] + 2.0).abs() < 1e-12 && (re[1] - 1.0).abs() < 1e-12 && (re[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn companion_matrix_roots() {
        // x^4 - 10x^3 + 35x^2 - 50x + 24 = (x-1)(x-2)(x-3)(x-4)
        let c = [
            10.0, -35.0, 50.0, -24.0, //
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0,
        ];
        let mut re: Vec<f64> = eigenvalues(&c, 4).unwrap().iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.total_cmp(b));
        for (k, v) in re.iter().enumerate() {
            assert!((v - (k as f64 + 1.0)).abs() < 1e-9, "{re:?}");
        }
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let ev = symmetric_eigenvalues(&a, 3);
        let s2 = core::f64::consts::SQRT_2;
        for (v, want) in ev.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((v - want).abs() < 1e-13);
        }
    }

    #[test]
    fn hermitian_embedding() {
        let i = Complex64::i();
        let one = Complex64::new(1.0, 0.0);
        // [[1, i], [-i, 1]] has eigenvalues 0 and 2.
        let m = [one, i, -i, one];
        assert!(hermitian_min_eigenvalue(&m, 2).abs() < 1e-14);
    }
}

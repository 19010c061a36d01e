use nalgebra::DMatrix;
use num_complex::Complex64;

use super::LinalgError;

/// Iteration budget per eigenvalue for the shifted QR sweep.
const MAX_ITERS_PER_EIGENVALUE: usize = 60;

/// Reduces `m` to upper Hessenberg form with Householder reflections.
///
/// The result is orthogonally similar to the input, so it has the same
/// spectrum.
pub fn hessenberg(m: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    check_square(m)?;
    let n = m.nrows();
    let mut a = m.clone();
    if n < 3 {
        return Ok(a);
    }
    let mut v = vec![0.0; n];
    for k in 0..n - 2 {
        let norm: f64 = (k + 1..n)
            .map(|i| a[(i, k)] * a[(i, k)])
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if a[(k + 1, k)] > 0.0 { -norm } else { norm };
        v.fill(0.0);
        for i in k + 1..n {
            v[i] = a[(i, k)];
        }
        v[k + 1] -= alpha;
        let vnorm2: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // A <- (I - 2vv'/v'v) A
        for j in 0..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * a[(i, j)]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k + 1..n {
                a[(i, j)] -= s * v[i];
            }
        }
        // A <- A (I - 2vv'/v'v)
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| a[(i, j)] * v[j]).sum();
            let s = 2.0 * dot / vnorm2;
            for j in k + 1..n {
                a[(i, j)] -= s * v[j];
            }
        }
        a[(k + 1, k)] = alpha;
        for i in k + 2..n {
            a[(i, k)] = 0.0;
        }
    }
    Ok(a)
}

/// All eigenvalues of a real square matrix.
///
/// Balancing, Householder reduction to Hessenberg form, then Francis
/// double-shift QR with deflation on negligible subdiagonals.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>, LinalgError> {
    check_square(m)?;
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    balance(&mut a);
    let h = hessenberg(&a)?;
    hqr(h)
}

/// Largest eigenvalue magnitude. Zero for an empty matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64, LinalgError> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

fn check_square(m: &DMatrix<f64>) -> Result<(), LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(())
}

/// Parlett-Reinsch balancing with powers of two, so it is exact.
fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
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
                    for j in 0..n {
                        a[(i, j)] *= g;
                    }
                    for j in 0..n {
                        a[(j, i)] *= f;
                    }
                }
            }
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix (destroys `a`).
fn hqr(mut a: DMatrix<f64>) -> Result<Vec<Complex64>, LinalgError> {
    let n = a.nrows() as isize;
    let mut wr = vec![0.0; n as usize];
    let mut wi = vec![0.0; n as usize];
    let mut anorm = 0.0;
    for i in 0..n as usize {
        for j in i.saturating_sub(1)..n as usize {
            anorm += a[(i, j)].abs();
        }
    }
    let at = |a: &DMatrix<f64>, i: isize, j: isize| a[(i as usize, j as usize)];
    let mut nn = n - 1;
    let mut t = 0.0;
    let mut total_iters = 0usize;
    while nn >= 0 {
        let mut its = 0;
        loop {
            // locate a negligible subdiagonal element
            let mut l = nn;
            while l >= 1 {
                let mut s = at(&a, l - 1, l - 1).abs() + at(&a, l, l).abs();
                if s == 0.0 {
                    s = anorm;
                }
                if at(&a, l, l - 1).abs() + s == s {
                    a[(l as usize, (l - 1) as usize)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = at(&a, nn, nn);
            if l == nn {
                wr[nn as usize] = x + t;
                wi[nn as usize] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = at(&a, nn - 1, nn - 1);
            let mut w = at(&a, nn, nn - 1) * at(&a, nn - 1, nn);
            if l == nn - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                let (i0, i1) = ((nn - 1) as usize, nn as usize);
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[i0] = x + z;
                    wr[i1] = x + z;
                    if z != 0.0 {
                        wr[i1] = x - w / z;
                    }
                    wi[i0] = 0.0;
                    wi[i1] = 0.0;
                } else {
                    wr[i0] = x + p;
                    wr[i1] = x + p;
                    wi[i0] = -z;
                    wi[i1] = z;
                }
                nn -= 2;
                break;
            }
            if its >= MAX_ITERS_PER_EIGENVALUE {
                return Err(LinalgError::NoConvergence {
                    iterations: total_iters,
                });
            }
            if its == 10 || its == 20 {
                // exceptional shift
                t += x;
                for i in 0..=nn {
                    a[(i as usize, i as usize)] -= x;
                }
                let s = at(&a, nn, nn - 1).abs() + at(&a, nn - 1, nn - 2).abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            total_iters += 1;
            // two consecutive small subdiagonal elements
            let (mut p, mut q, mut r): (f64, f64, f64);
            let mut m = nn - 2;
            let mut z;
            loop {
                z = at(&a, m, m);
                r = x - z;
                let s = y - z;
                p = (r * s - w) / at(&a, m + 1, m) + at(&a, m, m + 1);
                q = at(&a, m + 1, m + 1) - z - r - s;
                r = at(&a, m + 2, m + 1);
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = at(&a, m, m - 1).abs() * (q.abs() + r.abs());
                let v =
                    p.abs() * (at(&a, m - 1, m - 1).abs() + z.abs() + at(&a, m + 1, m + 1).abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nn {
                a[(i as usize, (i - 2) as usize)] = 0.0;
                if i != m + 2 {
                    a[(i as usize, (i - 3) as usize)] = 0.0;
                }
            }
            // double QR step on rows l..=nn, columns m..=nn
            let mut k = m;
            while k < nn {
                if k != m {
                    p = at(&a, k, k - 1);
                    q = at(&a, k + 1, k - 1);
                    r = 0.0;
                    if k != nn - 1 {
                        r = at(&a, k + 2, k - 1);
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            let v = -at(&a, k, k - 1);
                            a[(k as usize, (k - 1) as usize)] = v;
                        }
                    } else {
                        a[(k as usize, (k - 1) as usize)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nn {
                        let (ku, ju) = (k as usize, j as usize);
                        let mut pp = a[(ku, ju)] + q * a[(ku + 1, ju)];
                        if k != nn - 1 {
                            pp += r * a[(ku + 2, ju)];
                            a[(ku + 2, ju)] -= pp * z;
                        }
                        a[(ku + 1, ju)] -= pp * y;
                        a[(ku, ju)] -= pp * x;
                    }
                    let mmin = if nn < k + 3 { nn } else { k + 3 };
                    for i in l..=mmin {
                        let (iu, ku) = (i as usize, k as usize);
                        let mut pp = x * a[(iu, ku)] + y * a[(iu, ku + 1)];
                        if k != nn - 1 {
                            pp += z * a[(iu, ku + 2)];
                            a[(iu, ku + 2)] -= pp * r;
                        }
                        a[(iu, ku + 1)] -= pp * q;
                        a[(iu, ku)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}

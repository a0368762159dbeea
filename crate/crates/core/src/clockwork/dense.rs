//! Dense symmetric eigensolvers used as an independent check of the
//! closed-form orbit spectrum.

use super::ClockError;

/// Largest orbit the dense oracle will diagonalize.
pub const DENSE_CAP: usize = 4096;

const MAX_QL_SWEEPS: usize = 60;

/// Row-major `(C + Cᵀ)/2` for the cyclic shift `C` on `d` points.
pub fn symmetrized_shift(d: usize) -> Vec<f64> {
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        let j = (i + 1) % d;
        a[i * d + j] += 0.5;
        a[j * d + i] += 0.5;
    }
    a
}

/// Eigenvalues of the symmetrized `d`-cycle shift, ascending.
pub fn dense_orbit_oracle(d: usize) -> Result<Vec<f64>, ClockError> {
    if d == 0 {
        return Err(ClockError::InvalidArgument("orbit length must be positive".into()));
    }
    if d > DENSE_CAP {
        return Err(ClockError::DimensionCap { d, cap: DENSE_CAP });
    }
    symmetric_eigenvalues(symmetrized_shift(d), d)
}

/// Eigenvalues of a real symmetric row-major `n × n` matrix, ascending.
/// Householder reduction to tridiagonal form, then implicit QL.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, n: usize) -> Result<Vec<f64>, ClockError> {
    if a.len() != n * n {
        return Err(ClockError::InvalidArgument(format!("{} entries for n = {n}", a.len())));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let (mut d, mut e) = tridiagonalize(&mut a, n);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Householder reduction. Returns the diagonal and the sub-diagonal, with
/// `e[i]` coupling rows `i - 1` and `i` (`e[0] = 0`).
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[j * n + k] * a[i * n + k];
                    }
                    for k in j + 1..=l {
                        g += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g / h;
                    f += e[j] * a[i * n + j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    for (i, di) in d.iter_mut().enumerate() {
        *di = a[i * n + i];
    }
    e[0] = 0.0;
    (d, e)
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal
/// matrix. On return `d` holds the eigenvalues (unordered).
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<(), ClockError> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(ClockError::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Cyclic Jacobi rotations; slower but simple. Ascending eigenvalues.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize, tol: f64) -> Result<Vec<f64>, ClockError> {
    if a.len() != n * n {
        return Err(ClockError::InvalidArgument(format!("{} entries for n = {n}", a.len())));
    }
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off.sqrt() < tol {
            let mut out: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
            out.sort_by(f64::total_cmp);
            return Ok(out);
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    Err(ClockError::NoConvergence)
}

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Ridge jitter added to the Gram diagonal before factoring.
pub(crate) const JITTER: f64 = 1e-8;

/// Least squares via the normal equations `(XᵀX + jitter I) β = Xᵀy`.
///
/// Columns are scaled to unit RMS before the Gram matrix is formed (the
/// jitter applies in that scaled basis) and the coefficients are mapped back.
/// Columns that are identically zero get a zero coefficient; any other
/// direction carried only by the jitter is reported as rank deficiency.
/// `rows` is row-major with `p` columns each.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64], p: usize) -> Result<Vec<f64>> {
    let mut scale = vec![0.0; p];
    for row in rows {
        debug_assert_eq!(row.len(), p);
        for (s, x) in scale.iter_mut().zip(row) {
            *s += x * x;
        }
    }
    let active: Vec<bool> = scale.iter().map(|&s| s > 0.0).collect();
    for s in &mut scale {
        *s = libm::sqrt(*s / rows.len().max(1) as f64);
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    for (row, &target) in rows.iter().zip(y) {
        for i in 0..p {
            let xi = row[i] / scale[i];
            rhs[i] += xi * target;
            for j in 0..=i {
                gram[i * p + j] += xi * (row[j] / scale[j]);
            }
        }
    }
    for i in 0..p {
        gram[i * p + i] += JITTER;
        for j in 0..i {
            gram[j * p + i] = gram[i * p + j];
        }
    }
    let idx: Vec<usize> = (0..p).filter(|&i| active[i]).collect();
    let m = idx.len();
    let mut reduced = vec![0.0; m * m];
    let mut reduced_rhs = vec![0.0; m];
    for (a, &i) in idx.iter().enumerate() {
        reduced_rhs[a] = rhs[i];
        for (b, &j) in idx.iter().enumerate() {
            reduced[a * m + b] = gram[i * p + j];
        }
    }
    cholesky_solve(&mut reduced, &mut reduced_rhs, m)?;
    rhs.iter_mut().for_each(|b| *b = 0.0);
    for (a, &i) in idx.iter().enumerate() {
        rhs[i] = reduced_rhs[a];
    }
    for (b, s) in rhs.iter_mut().zip(&scale) {
        *b /= s;
    }
    Ok(rhs)
}

/// In-place Cholesky factor and solve of a symmetric positive definite system.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], n: usize) -> Result<()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        // a pivot this small is carried by the jitter alone
        if !(d > 10.0 * JITTER) {
            return Err(Error::RankDeficient);
        }
        let d = libm::sqrt(d);
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Ok(())
}

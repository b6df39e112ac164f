//! Small dense linear algebra: floating point solves for the hot paths and
//! exact rational / integer routines for geometric predicates.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major `n x n`. Returns `None` when a pivot falls below `1e-13`
/// relative to the largest entry.
pub fn solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if m[pivot * n + col].abs() <= 1e-13 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(col * n + k, pivot * n + k);
            }
            x.swap(col, pivot);
        }
        let p = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / p;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                m[row * n + k] -= factor * m[col * n + k];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= m[col * n + k] * x[k];
        }
        x[col] = acc / m[col * n + col];
    }
    Some(x)
}

/// Exact solve over the rationals; `None` when `a` is singular.
pub fn solve_exact(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        for row in 0..n {
            if row == col || m[row][col].is_zero() {
                continue;
            }
            let factor = &m[row][col] / &m[col][col];
            for k in col..=n {
                let delta = &factor * &m[col][k];
                m[row][k] -= delta;
            }
        }
    }
    Some((0..n).map(|i| &m[i][n] / &m[i][i]).collect())
}

/// Rank of a rational matrix given as rows.
pub fn rank_exact(rows: &[Vec<BigRational>]) -> usize {
    let mut m = rows.to_vec();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        for row in rank + 1..m.len() {
            if m[row][col].is_zero() {
                continue;
            }
            let factor = &m[row][col] / &m[rank][col];
            for k in col..cols {
                let delta = &factor * &m[rank][k];
                m[row][k] -= delta;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Fraction-free (Bareiss) determinant of a small integer matrix.
pub fn det_bareiss(a: &[i64], n: usize) -> i128 {
    if n == 0 {
        return 1;
    }
    let mut m: Vec<i128> = a.iter().map(|&v| v as i128).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k * n + k] == 0 {
            let Some(swap) = (k + 1..n).find(|&r| m[r * n + k] != 0) else {
                return 0;
            };
            for c in 0..n {
                m.swap(k * n + c, swap * n + c);
            }
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i * n + j] = (m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j]) / prev;
            }
        }
        prev = m[k * n + k];
    }
    sign * m[n * n - 1]
}

/// Least common multiple of the denominators of `values`.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    use num_integer::Integer;
    values
        .into_iter()
        .fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_nonnegative(r: &BigRational) -> bool {
    !r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn float_solve_matches_known_system() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let x = solve(&a, &[3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
        assert!(solve(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn exact_solve_and_rank() {
        let a = vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(-1, 1)]];
        let x = solve_exact(&a, &[q(1, 1), q(0, 1)]).unwrap();
        assert_eq!(x, vec![q(1, 2), q(1, 2)]);
        let singular = vec![vec![q(1, 1), q(2, 1)], vec![q(1, 2), q(1, 1)]];
        assert!(solve_exact(&singular, &[q(1, 1), q(1, 1)]).is_none());
        assert_eq!(rank_exact(&singular), 1);
    }

    #[test]
    fn bareiss_determinants() {
        assert_eq!(det_bareiss(&[0, 1, 1, 0], 2), -1);
        assert_eq!(det_bareiss(&[2, 0, 0, 0, 3, 0, 0, 0, 4], 3), 24);
        assert_eq!(det_bareiss(&[1, 2, 2, 4], 2), 0);
        assert_eq!(det_bareiss(&[0, 0, 1, 0, 1, 0, 1, 0, 0], 3), -1);
    }
}

use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum GaussianMethod {
    /// Tensor composite Gauss-Legendre on `[-half_width, half_width]` per
    /// factor, weighted by the standard normal density. `None` fields pick
    /// defaults by rank.
    Quadrature {
        half_width: Option<f64>,
        panels: Option<usize>,
        order: Option<usize>,
    },
    MonteCarlo { seed: u64, samples: usize },
}

impl Default for GaussianMethod {
    fn default() -> Self {
        GaussianMethod::Quadrature { half_width: None, panels: None, order: None }
    }
}

/// `Σ = L Lᵀ` with diagonal pivoting; `L` is returned as `d` rows of length
/// `rank`. Rank-deficient inputs are allowed.
pub fn pivoted_cholesky(sigma: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = sigma.len();
    if sigma.iter().any(|r| r.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: sigma.iter().map(Vec::len).find(|&l| l != d).unwrap_or(0) });
    }
    let scale = (0..d).map(|i| sigma[i][i].abs()).fold(0.0f64, f64::max).max(1e-300);
    for i in 0..d {
        for j in 0..d {
            if (sigma[i][j] - sigma[j][i]).abs() > 1e-12 * scale || !sigma[i][j].is_finite() {
                return Err(Error::NonPsd);
            }
        }
    }
    let tol = 1e-12 * scale;
    let mut a: Vec<Vec<f64>> = sigma.to_vec();
    let mut l: Vec<Vec<f64>> = vec![Vec::new(); d];
    let mut done = vec![false; d];
    loop {
        let Some(p) = (0..d).filter(|&i| !done[i]).max_by(|&i, &j| a[i][i].total_cmp(&a[j][j])) else {
            break;
        };
        if a[p][p] <= tol {
            if (0..d).any(|i| !done[i] && a[i][i] < -1e-9 * scale) {
                return Err(Error::NonPsd);
            }
            break;
        }
        let piv = a[p][p].sqrt();
        let col: Vec<f64> = (0..d).map(|i| if done[i] { 0.0 } else { a[i][p] / piv }).collect();
        for i in 0..d {
            for j in 0..d {
                a[i][j] -= col[i] * col[j];
            }
        }
        done[p] = true;
        for (row, c) in l.iter_mut().zip(&col) {
            row.push(*c);
        }
    }
    // residual check catches indefinite inputs with nonnegative diagonals
    for i in 0..d {
        for j in 0..d {
            let r: f64 = l[i].iter().zip(&l[j]).map(|(x, y)| x * y).sum();
            if (r - sigma[i][j]).abs() > 1e-9 * scale {
                return Err(Error::NonPsd);
            }
        }
    }
    Ok(l)
}

fn defaults_for_rank(rank: usize) -> (f64, usize, usize) {
    match rank {
        0 | 1 => (8.0, 64, 10),
        2 => (8.0, 64, 6),
        3 => (7.0, 28, 4),
        _ => (6.0, 12, 3),
    }
}

fn normal_rule(half_width: f64, panels: usize, order: usize) -> Result<Vec<(f64, f64)>> {
    let order = NonZeroUsize::new(order).ok_or_else(|| Error::BadParams("quadrature order must be positive".into()))?;
    if panels == 0 || !(half_width > 0.0) {
        return Err(Error::BadParams("quadrature needs panels > 0 and a positive half-width".into()));
    }
    let rule = GaussLegendre::new(order);
    let h = 2.0 * half_width / panels as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    Ok((0..panels)
        .flat_map(|k| {
            let mid = -half_width + (k as f64 + 0.5) * h;
            rule.as_node_weight_pairs()
                .iter()
                .map(move |&(x, w)| {
                    let z = mid + 0.5 * h * x;
                    (z, 0.5 * h * w * (-0.5 * z * z).exp() / norm)
                })
                .collect::<Vec<_>>()
        })
        .collect())
}

/// `E[F(s)]` for `s ~ N(0, Σ)`.
pub fn gaussian_price(
    sigma: &[Vec<f64>],
    f: impl Fn(&[f64]) -> f64 + Sync,
    method: GaussianMethod,
) -> Result<f64> {
    let l = pivoted_cholesky(sigma)?;
    let d = sigma.len();
    let rank = l.first().map_or(0, Vec::len);
    let map = |z: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend(l.iter().map(|row| row.iter().zip(z).map(|(a, b)| a * b).sum::<f64>()));
    };
    if rank == 0 {
        return Ok(f(&vec![0.0; d]));
    }
    match method {
        GaussianMethod::Quadrature { half_width, panels, order } => {
            let (h0, p0, o0) = defaults_for_rank(rank);
            let rule = normal_rule(half_width.unwrap_or(h0), panels.unwrap_or(p0), order.unwrap_or(o0))?;
            let m = rule.len();
            let total = m.checked_pow(rank as u32).filter(|&t| t <= 50_000_000).ok_or_else(|| {
                Error::BadParams(format!("tensor rule with {m} nodes per axis is too large for rank {rank}"))
            })?;
            // outer index split across threads; fixed chunk order keeps the sum deterministic
            let chunk = m.pow(rank.saturating_sub(1) as u32);
            let partial: Vec<f64> = (0..total / chunk)
                .into_par_iter()
                .map(|outer| {
                    let mut z = vec![0.0; rank];
                    let mut s = Vec::with_capacity(d);
                    let mut acc = 0.0;
                    for inner in 0..chunk {
                        let mut idx = outer * chunk + inner;
                        let mut w = 1.0;
                        for zk in z.iter_mut().rev() {
                            let (node, weight) = rule[idx % m];
                            *zk = node;
                            w *= weight;
                            idx /= m;
                        }
                        map(&z, &mut s);
                        acc += w * f(&s);
                    }
                    acc
                })
                .collect();
            Ok(partial.iter().sum())
        }
        GaussianMethod::MonteCarlo { seed, samples } => {
            if samples == 0 {
                return Err(Error::BadParams("Monte Carlo needs at least one sample".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut z = vec![0.0; rank];
            let mut s = Vec::with_capacity(d);
            let mut acc = 0.0;
            for _ in 0..samples {
                for zk in z.iter_mut() {
                    *zk = StandardNormal.sample(&mut rng);
                }
                map(&z, &mut s);
                acc += f(&s);
            }
            Ok(acc / samples as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_handles_rank_deficiency() {
        let l = pivoted_cholesky(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert_eq!(l[0].len(), 1);
        let l = pivoted_cholesky(&[vec![2.0, 1.0, 1.0], vec![1.0, 2.0, 1.0], vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(l[0].len(), 3);
        assert!(matches!(pivoted_cholesky(&[vec![1.0, 2.0], vec![2.0, 1.0]]), Err(Error::NonPsd)));
        assert!(matches!(pivoted_cholesky(&[vec![-1.0, 0.0], vec![0.0, 1.0]]), Err(Error::NonPsd)));
    }

    #[test]
    fn moments() {
        let sigma = vec![vec![2.0, 0.5], vec![0.5, 1.0]];
        let q = GaussianMethod::default();
        assert!((gaussian_price(&sigma, |_: &[f64]| 1.0, q).unwrap() - 1.0).abs() < 1e-12);
        assert!((gaussian_price(&sigma, |s: &[f64]| s[0] * s[1], q).unwrap() - 0.5).abs() < 1e-12);
        assert!((gaussian_price(&sigma, |s: &[f64]| s[0] * s[0], q).unwrap() - 2.0).abs() < 1e-12);
        let mc = GaussianMethod::MonteCarlo { seed: 7, samples: 200_000 };
        assert!((gaussian_price(&sigma, |s: &[f64]| s[0] * s[0], mc).unwrap() - 2.0).abs() < 0.03);
        assert_eq!(
            gaussian_price(&sigma, |s: &[f64]| s[0].abs(), mc).unwrap(),
            gaussian_price(&sigma, |s: &[f64]| s[0].abs(), mc).unwrap()
        );
        assert_eq!(gaussian_price(&[vec![0.0]], |s: &[f64]| s[0] + 3.0, q).unwrap(), 3.0);
    }

    #[test]
    fn absolute_value_of_standard_normal() {
        let v = gaussian_price(&[vec![1.0]], |s: &[f64]| s[0].abs(), GaussianMethod::default()).unwrap();
        assert!((v - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }
}

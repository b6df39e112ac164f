use rayon::prelude::*;

use super::{Side, Strategy};
use crate::error::{Error, Result};
use crate::payoffs::Payoff;

/// Largest number of paths [`verify_superreplication`] will enumerate.
pub const PATH_BUDGET: f64 = 1e7;

/// Minimum over every path of `α + Σ M_n·x_{n+1} − f(ξ)`; for a lower-side
/// strategy the claim is `−f`.
pub fn verify_superreplication(s: &Strategy, p: &Payoff) -> Result<f64> {
    let l = s.points.len();
    let paths = (l as f64).powi(s.rounds as i32);
    if paths > PATH_BUDGET {
        return Err(Error::PathBudgetExceeded { paths, budget: PATH_BUDGET });
    }
    let sign = match s.side {
        Side::Upper => 1.0,
        Side::Lower => -1.0,
    };
    let d = s.points[0].len();
    let worst = (0..l)
        .into_par_iter()
        .map(|first| {
            let mut sum = vec![0.0; d];
            let mut worst = f64::INFINITY;
            walk(s, p, sign, 0, 0, first, s.alpha[0][0], &mut sum, &mut worst);
            worst
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(worst)
}

#[allow(clippy::too_many_arguments)]
fn walk(s: &Strategy, p: &Payoff, sign: f64, n: usize, node: usize, mv: usize, capital: f64, sum: &mut [f64], worst: &mut f64) {
    let x = &s.points[mv];
    let h = &s.holdings[n][node];
    let capital = capital + h.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    for (acc, v) in sum.iter_mut().zip(x) {
        *acc += v;
    }
    if n + 1 == s.rounds {
        let slack = capital - sign * p.evaluate(sum, s.rounds);
        *worst = worst.min(slack);
    } else {
        let child = s.lattice.child(n, node, mv);
        for next in 0..s.points.len() {
            walk(s, p, sign, n + 1, child, next, capital, sum, worst);
        }
    }
    for (acc, v) in sum.iter_mut().zip(x) {
        *acc -= v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MoveSet;
    use crate::payoffs::Scaling;
    use crate::pricing::{backward_induction, InductionOptions};

    #[test]
    fn emitted_strategies_superreplicate() {
        let m = MoveSet::chi1();
        for p in [Payoff::max_call(1.0).unwrap(), Payoff::min_call(1.0).unwrap(), Payoff::cone()] {
            let p = p.with_scaling(Scaling::SqrtN);
            for side in [Side::Upper, Side::Lower] {
                let r = backward_induction(&m, &p, 5, side, InductionOptions::default().with_strategy()).unwrap();
                let mut s = r.strategy.unwrap();
                assert!((s.alpha[0][0] - side.sign() * r.value).abs() < 1e-12);
                assert!(verify_superreplication(&s, &p).unwrap() >= -1e-9);
                s.alpha[0][0] += 0.1;
                assert!(verify_superreplication(&s, &p).unwrap() >= 0.1 - 1e-9);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let m = MoveSet::chi1();
        let p = Payoff::max_call(1.0).unwrap();
        let r = backward_induction(&m, &p, 12, Side::Upper, InductionOptions::default().with_strategy()).unwrap();
        assert!(matches!(verify_superreplication(&r.strategy.unwrap(), &p), Err(Error::PathBudgetExceeded { .. })));
    }
}

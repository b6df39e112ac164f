use super::StateLattice;
use crate::error::{Error, Result};
use crate::geometry::MoveSet;
use crate::linalg::solve;
use crate::payoffs::Payoff;
use num_traits::Zero;

/// The measure on `{-c_1,c_1} x {-c_2,c_2}` with zero means and correlation
/// `rho`, aligned with the points of `m`.
pub fn boyle_measure(m: &MoveSet, rho: f64) -> Result<Vec<f64>> {
    let axes = m
        .product_axes()
        .filter(|a| m.dim() == 2 && a.is_binomial() && a.axes.iter().all(|ax| (&ax[0] + &ax[1]).is_zero()))
        .ok_or_else(|| Error::BadParams("correlation pricing needs a move set {-c1,c1} x {-c2,c2}".into()))?;
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::BadParams(format!("correlation {rho} outside [-1, 1]")));
    }
    let c: Vec<f64> = axes.axes.iter().map(|ax| crate::linalg::rational_to_f64(&ax[1])).collect();
    let signs = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
    // rows: total mass, mean of each axis, normalised cross moment
    let mut a = vec![0.0; 16];
    for (j, s) in signs.iter().enumerate() {
        a[j] = 1.0;
        a[4 + j] = s[0];
        a[8 + j] = s[1];
        a[12 + j] = s[0] * s[1];
    }
    let q = solve(&a, &[1.0, 0.0, 0.0, rho], 4).ok_or(Error::SingularSystem)?;
    if let Some(&neg) = q.iter().find(|&&v| v < -1e-12) {
        return Err(Error::NegativeProbability(neg));
    }
    (0..m.len())
        .map(|i| {
            let p = m.point_f64(i);
            let j = signs
                .iter()
                .position(|s| s[0] * c[0] == p[0] && s[1] * c[1] == p[1])
                .ok_or(Error::NotLatticeBinomial)?;
            Ok(q[j].max(0.0))
        })
        .collect()
}

/// `E[F(S_N)]` under i.i.d. moves with the correlation-`rho` measure.
pub fn boyle_price(m: &MoveSet, rho: f64, p: &Payoff, rounds: usize) -> Result<f64> {
    if rounds == 0 {
        return Err(Error::BadParams("at least one round is required".into()));
    }
    p.check_dim(2)?;
    let q = boyle_measure(m, rho)?;
    let lat = StateLattice::build(m, rounds);
    let mut values: Vec<f64> = (0..lat.layer_len(rounds)).map(|j| p.evaluate(&lat.state(rounds, j), rounds)).collect();
    for n in (0..rounds).rev() {
        values = (0..lat.layer_len(n))
            .map(|j| lat.children_of(n, j).iter().zip(&q).map(|(&c, w)| w * values[c as usize]).sum())
            .collect();
    }
    Ok(values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::integer;
    use crate::pricing::{backward_induction, InductionOptions, Side};

    #[test]
    fn measure_shapes() {
        let m = MoveSet::chi1();
        assert_eq!(boyle_measure(&m, 0.0).unwrap(), vec![0.25; 4]);
        assert_eq!(boyle_measure(&m, 1.0).unwrap(), vec![0.5, 0.0, 0.0, 0.5]);
        assert!(boyle_measure(&MoveSet::chi2(), 0.0).is_err());
        assert!(boyle_measure(&m, 1.5).is_err());
    }

    #[test]
    fn extreme_correlations_bracket_max_option() {
        let m = MoveSet::chi1();
        let p = Payoff::max_call(1.0).unwrap();
        let up = backward_induction(&m, &p, 6, Side::Upper, InductionOptions::default()).unwrap().value;
        let lo = backward_induction(&m, &p, 6, Side::Lower, InductionOptions::default()).unwrap().value;
        assert!((boyle_price(&m, -1.0, &p, 6).unwrap() - up).abs() < 1e-12);
        assert!((boyle_price(&m, 1.0, &p, 6).unwrap() - lo).abs() < 1e-12);
        let mid = boyle_price(&m, 0.3, &p, 6).unwrap();
        assert!(lo <= mid && mid <= up);
    }

    #[test]
    fn independent_walk() {
        let m = MoveSet::lattice_binomial(&[integer(-2), integer(-1)], &[integer(2), integer(1)]).unwrap();
        let p = Payoff::custom("s1^2", |s: &[f64]| s[0] * s[0]);
        assert!((boyle_price(&m, 0.0, &p, 3).unwrap() - 12.0).abs() < 1e-12);
    }
}

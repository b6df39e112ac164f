use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Simplex, SimplexFamily};
use crate::pricing::Side;

/// Uniform grid on `[-M Δs, M Δs]^2` with `K` explicit steps to `t = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub delta_s: f64,
    pub steps: usize,
    pub half_cells: usize,
}

impl Default for Grid {
    /// `Δs = 1/10`, `Δt = 1/300`, domain `[-7, 7]^2`.
    fn default() -> Self {
        Grid { delta_s: 0.1, steps: 300, half_cells: 70 }
    }
}

impl Grid {
    pub fn delta_t(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn ratio(&self) -> f64 {
        self.delta_t() / (self.delta_s * self.delta_s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_s > 0.0) || self.steps == 0 || self.half_cells == 0 {
            return Err(Error::BadParams("grid needs a positive step, steps and half-width".into()));
        }
        let ratio = self.ratio();
        if ratio > 0.5 + 1e-12 {
            return Err(Error::StabilityViolation { ratio });
        }
        Ok(())
    }

    pub fn side_len(&self) -> usize {
        2 * self.half_cells + 1
    }

    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - self.half_cells as f64) * self.delta_s
    }
}

/// Distinct 2x2 covariance matrices with the simplex each came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceFamily {
    pub members: Vec<[[f64; 2]; 2]>,
    pub provenance: Vec<Option<Simplex>>,
}

impl CovarianceFamily {
    pub fn new(members: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::BadParams("covariance family is empty".into()));
        }
        for s in &members {
            let sym = (s[0][1] - s[1][0]).abs() <= 1e-12;
            let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
            let scale = 1.0 + s[0][0].abs() + s[1][1].abs();
            if !sym || s[0][0] < -1e-12 || s[1][1] < -1e-12 || det < -1e-9 * scale * scale {
                return Err(Error::NonPsd);
            }
        }
        let n = members.len();
        Ok(CovarianceFamily { members, provenance: vec![None; n] })
    }

    /// The covariances of a two-asset simplex family, duplicates removed.
    pub fn from_family(fam: &SimplexFamily) -> Result<Self> {
        if fam.dim != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: fam.dim });
        }
        let mut members: Vec<[[f64; 2]; 2]> = Vec::new();
        let mut provenance = Vec::new();
        for v in &fam.members {
            let s = [[v.sigma[0][0], v.sigma[0][1]], [v.sigma[1][0], v.sigma[1][1]]];
            if !members.contains(&s) {
                members.push(s);
                provenance.push(Some(v.simplex.clone()));
            }
        }
        let mut out = Self::new(members)?;
        out.provenance = provenance;
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Field values on the grid, row index = first coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.side_len() + j]
    }

    pub fn origin(&self) -> f64 {
        let c = self.grid.half_cells;
        self.at(c, c)
    }

    /// Writes `s1,s2,u` rows.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "s1,s2,u")?;
        let n = self.grid.side_len();
        for i in 0..n {
            for j in 0..n {
                writeln!(w, "{:.4},{:.4},{:.10}", self.grid.coord(i), self.grid.coord(j), self.at(i, j))?;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct BsbSolution {
    pub value: f64,
    pub field: GridField,
}

/// Explicit Euler time stepping for `u_t = ½ opt_Σ tr(Σ ∇²u)` with Dirichlet
/// boundary values fixed at the initial condition.
pub struct BsbStepper {
    fam: CovarianceFamily,
    grid: Grid,
    side: Side,
    u: Vec<f64>,
    scratch: Vec<f64>,
    step: usize,
}

impl BsbStepper {
    pub fn new(fam: &CovarianceFamily, f: impl Fn(&[f64]) -> f64 + Sync, grid: Grid, side: Side) -> Result<Self> {
        grid.validate()?;
        let n = grid.side_len();
        let u: Vec<f64> = (0..n * n)
            .into_par_iter()
            .map(|k| f(&[grid.coord(k / n), grid.coord(k % n)]))
            .collect();
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField);
        }
        Ok(BsbStepper { fam: fam.clone(), grid, side, scratch: u.clone(), u, step: 0 })
    }

    pub fn steps_done(&self) -> usize {
        self.step
    }

    pub fn field(&self) -> GridField {
        GridField { grid: self.grid, values: self.u.clone() }
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn step(&mut self) -> Result<()> {
        let n = self.grid.side_len();
        let ds2 = self.grid.delta_s * self.grid.delta_s;
        let half_dt = 0.5 * self.grid.delta_t();
        let sign = self.side.sign();
        let u = &self.u;
        let fam = &self.fam.members;
        self.scratch
            .par_chunks_mut(n)
            .enumerate()
            .filter(|(i, _)| *i > 0 && *i + 1 < n)
            .for_each(|(i, row)| {
                for j in 1..n - 1 {
                    let c = u[i * n + j];
                    let uxx = (u[(i + 1) * n + j] - 2.0 * c + u[(i - 1) * n + j]) / ds2;
                    let uyy = (u[i * n + j + 1] - 2.0 * c + u[i * n + j - 1]) / ds2;
                    let uxy = (u[(i + 1) * n + j + 1] - u[(i + 1) * n + j - 1] - u[(i - 1) * n + j + 1]
                        + u[(i - 1) * n + j - 1])
                        / (4.0 * ds2);
                    let best = fam
                        .iter()
                        .map(|s| sign * (s[0][0] * uxx + 2.0 * s[0][1] * uxy + s[1][1] * uyy))
                        .fold(f64::NEG_INFINITY, f64::max);
                    row[j] = c + half_dt * sign * best;
                }
            });
        std::mem::swap(&mut self.u, &mut self.scratch);
        self.step += 1;
        if self.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField);
        }
        Ok(())
    }
}

/// Runs all steps and returns `u` at the origin at `t = 1` together with the
/// final field.
pub fn solve_bsb(
    fam: &CovarianceFamily,
    f: impl Fn(&[f64]) -> f64 + Sync,
    grid: Grid,
    side: Side,
) -> Result<BsbSolution> {
    let mut st = BsbStepper::new(fam, f, grid, side)?;
    for _ in 0..grid.steps {
        st.step()?;
    }
    let field = st.field();
    Ok(BsbSolution { value: field.origin(), field })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{enumerate_simplexes, MoveSet};

    fn small() -> Grid {
        Grid { delta_s: 0.2, steps: 50, half_cells: 30 }
    }

    #[test]
    fn stability_is_enforced() {
        let fam = CovarianceFamily::new(vec![[[1.0, 0.0], [0.0, 1.0]]]).unwrap();
        let g = Grid { delta_s: 0.1, steps: 100, half_cells: 10 };
        assert!(matches!(solve_bsb(&fam, |_: &[f64]| 0.0, g, Side::Upper), Err(Error::StabilityViolation { .. })));
        assert!(Grid::default().validate().is_ok());
        assert!(matches!(CovarianceFamily::new(vec![[[1.0, 2.0], [2.0, 1.0]]]), Err(Error::NonPsd)));
    }

    #[test]
    fn heat_second_moment() {
        let fam = CovarianceFamily::new(vec![[[1.0, 0.0], [0.0, 1.0]]]).unwrap();
        let r = solve_bsb(&fam, |s: &[f64]| s[0] * s[0], small(), Side::Upper).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constants_and_linear_shifts() {
        let fam = CovarianceFamily::from_family(&enumerate_simplexes(&MoveSet::chi2())).unwrap();
        assert_eq!(fam.len(), 2);
        for side in [Side::Upper, Side::Lower] {
            let c = solve_bsb(&fam, |_: &[f64]| 0.7, small(), side).unwrap();
            assert!(c.field.values.iter().all(|&v| v == 0.7));
            let f = |s: &[f64]| (s[0].max(s[1]) - 0.5).max(0.0);
            let a = solve_bsb(&fam, f, small(), side).unwrap();
            let b = solve_bsb(&fam, |s: &[f64]| f(s) + 0.3 * s[0] - 0.2 * s[1], small(), side).unwrap();
            assert!((a.value - b.value).abs() < 1e-6);
        }
    }

    #[test]
    fn max_side_dominates_and_stays_in_range() {
        let fam = CovarianceFamily::from_family(&enumerate_simplexes(&MoveSet::chi1())).unwrap();
        let cone = |s: &[f64]| crate::payoffs::Payoff::cone().value(s);
        let mut hi = BsbStepper::new(&fam, cone, small(), Side::Upper).unwrap();
        let mut lo = BsbStepper::new(&fam, cone, small(), Side::Lower).unwrap();
        for _ in 0..small().steps {
            hi.step().unwrap();
            lo.step().unwrap();
            assert!(hi.values().iter().zip(lo.values()).all(|(a, b)| a >= &(b - 1e-15)));
        }
        let (h, l) = (hi.field().origin(), lo.field().origin());
        assert!((0.0..=1.0).contains(&h) && (0.0..=1.0).contains(&l));
        let mut csv = Vec::new();
        hi.field().write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 61 * 61);
    }
}

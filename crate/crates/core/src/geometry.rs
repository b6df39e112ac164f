//! Move sets, the family of origin-containing simplexes, and the
//! risk-neutral measures attached to them.
//!
//! Geometric predicates (affine independence, hull membership) are decided in
//! exact rational arithmetic. Probabilities and covariances are handed to the
//! pricing code as `f64`.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{common_denominator, rank_exact, rational_to_f64, solve_exact};

pub type Rational = BigRational;

pub fn rational(n: i64, d: i64) -> Rational {
    BigRational::new(n.into(), d.into())
}

pub fn integer(n: i64) -> Rational {
    BigRational::from_integer(n.into())
}

/// Parses `"3"`, `"-1/2"` or a finite decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Ok(r) = BigRational::from_str(s) {
        return Ok(r);
    }
    let bad = || Error::BadParams(format!("cannot parse rational {s:?}"));
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').ok_or_else(bad)?;
    if frac_part.is_empty() && int_part.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer = BigInt::from_str(if digits.is_empty() { "0" } else { &digits }).map_err(|_| bad())?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Ok(BigRational::new(numer * sign, denom))
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A JSON coordinate: an integer or a rational string.
#[derive(Clone, Debug, PartialEq)]
pub struct JsonRational(pub Rational);

impl Serialize for JsonRational {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.to_integer().to_i64() {
            Some(v) if self.0.is_integer() => s.serialize_i64(v),
            _ => s.serialize_str(&format_rational(&self.0)),
        }
    }
}

impl<'de> Deserialize<'de> for JsonRational {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(JsonRational(integer(v))),
            Repr::Text(t) => parse_rational(&t)
                .map(JsonRational)
                .map_err(serde::de::Error::custom),
        }
    }
}

/// Per-coordinate decomposition of a full Cartesian grid move set.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductAxes {
    /// Sorted distinct coordinate values along each axis.
    pub axes: Vec<Vec<Rational>>,
}

impl ProductAxes {
    pub fn is_binomial(&self) -> bool {
        self.axes.iter().all(|a| a.len() == 2)
    }
}

/// A validated finite move set with the origin in the interior of its hull.
#[derive(Clone, Debug)]
pub struct MoveSet {
    points: Vec<Vec<Rational>>,
    dim: usize,
    /// `points * denom`, all integral.
    lattice: Vec<Vec<i64>>,
    denom: i64,
    product: Option<ProductAxes>,
    has_zero_move: bool,
}

impl PartialEq for MoveSet {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points
    }
}

impl fmt::Display for MoveSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pts = self
            .points
            .iter()
            .map(|p| format!("({})", p.iter().map(format_rational).join(",")))
            .join(", ");
        write!(f, "{{{pts}}}")
    }
}

impl Serialize for MoveSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pts: Vec<Vec<JsonRational>> = self
            .points
            .iter()
            .map(|p| p.iter().cloned().map(JsonRational).collect())
            .collect();
        pts.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MoveSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pts: Vec<Vec<JsonRational>> = Vec::deserialize(d)?;
        build_move_set(pts.into_iter().map(|p| p.into_iter().map(|c| c.0).collect()).collect())
            .map_err(serde::de::Error::custom)
    }
}

impl MoveSet {
    pub fn from_integers(points: &[Vec<i64>]) -> Result<Self> {
        build_move_set(
            points
                .iter()
                .map(|p| p.iter().map(|&v| integer(v)).collect())
                .collect(),
        )
    }

    /// `{-1,1} x {-1,1}`.
    pub fn chi1() -> Self {
        Self::from_integers(&[vec![1, 1], vec![1, -1], vec![-1, 1], vec![-1, -1]]).unwrap()
    }

    /// The cross `{(1,0),(-1,0),(0,1),(0,-1)}`.
    pub fn chi2() -> Self {
        Self::from_integers(&[vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]]).unwrap()
    }

    /// Cartesian product of the given axis values, first axis varying slowest.
    pub fn product(axes: &[Vec<Rational>]) -> Result<Self> {
        let points = axes
            .iter()
            .map(|a| a.iter().cloned())
            .multi_cartesian_product()
            .collect();
        build_move_set(points)
    }

    /// `{lows_1, highs_1} x ... x {lows_d, highs_d}`.
    pub fn lattice_binomial(lows: &[Rational], highs: &[Rational]) -> Result<Self> {
        if lows.len() != highs.len() {
            return Err(Error::DimensionMismatch { expected: lows.len(), got: highs.len() });
        }
        let axes: Vec<Vec<Rational>> = lows
            .iter()
            .zip(highs)
            .map(|(l, h)| vec![l.clone(), h.clone()])
            .collect();
        Self::product(&axes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<Rational>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[Rational] {
        &self.points[i]
    }

    pub fn point_f64(&self, i: usize) -> Vec<f64> {
        self.points[i].iter().map(rational_to_f64).collect()
    }

    /// Point `i` scaled by [`MoveSet::denominator`]; exact integers.
    pub fn lattice_point(&self, i: usize) -> &[i64] {
        &self.lattice[i]
    }

    pub fn denominator(&self) -> i64 {
        self.denom
    }

    pub fn product_axes(&self) -> Option<&ProductAxes> {
        self.product.as_ref()
    }

    pub fn is_lattice_binomial(&self) -> bool {
        self.product.as_ref().is_some_and(ProductAxes::is_binomial)
    }

    /// True when the zero vector is itself a move. The large-N limit theory
    /// assumes it is not.
    pub fn has_zero_move(&self) -> bool {
        self.has_zero_move
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.has_zero_move {
            w.push("move set contains the zero vector; the BSB limit assumes it does not".into());
        }
        w
    }

    pub fn index_of(&self, p: &[Rational]) -> Option<usize> {
        self.points.iter().position(|q| q.as_slice() == p)
    }

    /// The same set with points sorted lexicographically.
    pub fn canonicalized(&self) -> Self {
        let mut pts = self.points.clone();
        pts.sort();
        build_move_set(pts).expect("a permutation of a valid move set is valid")
    }
}

/// Validates a move set: consistent dimension, no duplicates, `l >= d+1`,
/// full-dimensional hull and the origin in its interior.
pub fn build_move_set(points: Vec<Vec<Rational>>) -> Result<MoveSet> {
    let Some(first) = points.first() else {
        return Err(Error::TooFewPoints { needed: 1, dim: 0, got: 0 });
    };
    let dim = first.len();
    if dim == 0 {
        return Err(Error::BadParams("points must have at least one coordinate".into()));
    }
    if let Some(bad) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    for (i, p) in points.iter().enumerate() {
        if points[..i].contains(p) {
            return Err(Error::DuplicatePoint(i));
        }
    }
    if points.len() < dim + 1 {
        return Err(Error::TooFewPoints { needed: dim + 1, dim, got: points.len() });
    }
    let hull_dim = affine_rank(&points);
    if hull_dim < dim {
        return Err(Error::DimensionDeficient { hull_dim, dim });
    }

    let family = gamma(&points);
    let mut covered = vec![false; points.len()];
    for v in &family {
        for (j, &idx) in v.simplex.vertices.iter().enumerate() {
            if v.p_exact[j].is_positive() {
                covered[idx] = true;
            }
        }
    }
    if family.is_empty() || covered.iter().any(|c| !c) {
        return Err(Error::OriginNotInterior);
    }

    let denom_big = common_denominator(points.iter().flatten());
    let denom = denom_big
        .to_i64()
        .ok_or_else(|| Error::BadParams("coordinate denominators overflow i64".into()))?;
    let lattice = points
        .iter()
        .map(|p| {
            p.iter()
                .map(|c| {
                    (c * BigRational::from_integer(denom_big.clone()))
                        .to_integer()
                        .to_i64()
                        .ok_or_else(|| Error::BadParams("coordinates overflow i64".into()))
                })
                .collect::<Result<Vec<i64>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let product = detect_product(&points, dim);
    let has_zero_move = points.iter().any(|p| p.iter().all(Zero::is_zero));
    Ok(MoveSet { points, dim, lattice, denom, product, has_zero_move })
}

fn detect_product(points: &[Vec<Rational>], dim: usize) -> Option<ProductAxes> {
    let axes: Vec<Vec<Rational>> = (0..dim)
        .map(|k| points.iter().map(|p| p[k].clone()).sorted().dedup().collect())
        .collect();
    let size = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len()))?;
    (size == points.len()).then_some(ProductAxes { axes })
}

/// Dimension of the affine hull of `points`.
pub fn affine_rank(points: &[Vec<Rational>]) -> usize {
    let Some(base) = points.first() else { return 0 };
    let diffs: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    rank_exact(&diffs)
}

/// Barycentric coordinates of `target` with respect to `vertices`
/// (`d+1` points in dimension `d`); `None` if the vertices are affinely
/// dependent.
pub fn barycentric_exact(vertices: &[&[Rational]], target: &[Rational]) -> Option<Vec<Rational>> {
    let d = target.len();
    debug_assert_eq!(vertices.len(), d + 1);
    let mut rows = Vec::with_capacity(d + 1);
    rows.push(vec![Rational::one(); d + 1]);
    for k in 0..d {
        rows.push(vertices.iter().map(|v| v[k].clone()).collect());
    }
    let mut rhs = vec![Rational::one()];
    rhs.extend(target.iter().cloned());
    solve_exact(&rows, &rhs)
}

/// Closed containment of `target` in the simplex spanned by `vertices`.
pub fn simplex_contains_exact(vertices: &[&[Rational]], target: &[Rational]) -> bool {
    barycentric_exact(vertices, target).is_some_and(|l| l.iter().all(|v| !v.is_negative()))
}

/// Sorted `(d+1)`-tuple of indices into a move set.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Simplex {
    pub vertices: Vec<usize>,
}

impl Simplex {
    pub fn new(mut vertices: Vec<usize>) -> Self {
        vertices.sort_unstable();
        Simplex { vertices }
    }
}

/// A simplex of the family together with its unique zero-mean probability
/// vector and the covariance matrix of that measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskNeutralVertex {
    pub simplex: Simplex,
    /// Probabilities aligned with `simplex.vertices`.
    pub p: Vec<f64>,
    #[serde(skip)]
    pub p_exact: Vec<Rational>,
    /// `sigma[i][j] = sum_k p_k a_{k,i} a_{k,j}`.
    pub sigma: Vec<Vec<f64>>,
}

impl RiskNeutralVertex {
    /// `I(simplex, f)` for values `f` indexed by move-set point.
    #[inline]
    pub fn expectation(&self, values: &[f64]) -> f64 {
        self.simplex
            .vertices
            .iter()
            .zip(&self.p)
            .map(|(&i, &p)| p * values[i])
            .sum()
    }
}

/// All origin-containing full-dimensional simplexes of a move set, in
/// lexicographic order of their vertex indices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexFamily {
    pub dim: usize,
    pub members: Vec<RiskNeutralVertex>,
}

impl SimplexFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn position(&self, s: &Simplex) -> Option<usize> {
        self.members.iter().position(|m| &m.simplex == s)
    }

    /// Distinct probability measures, as sorted `(point index, probability)`
    /// supports. Boundary simplexes sharing a support collapse to one entry.
    pub fn distinct_measures(&self) -> Vec<Vec<(usize, Rational)>> {
        self.members
            .iter()
            .map(|m| {
                m.simplex
                    .vertices
                    .iter()
                    .zip(&m.p_exact)
                    .filter(|(_, p)| !p.is_zero())
                    .map(|(&i, p)| (i, p.clone()))
                    .collect::<Vec<_>>()
            })
            .sorted()
            .dedup()
            .collect()
    }
}

fn vertex_from_exact(points: &[Vec<Rational>], simplex: Simplex, p_exact: Vec<Rational>) -> RiskNeutralVertex {
    let d = points[0].len();
    let mut sigma = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i..d {
            let acc: Rational = simplex
                .vertices
                .iter()
                .zip(&p_exact)
                .map(|(&v, p)| p * &points[v][i] * &points[v][j])
                .sum();
            let v = rational_to_f64(&acc);
            sigma[i][j] = v;
            sigma[j][i] = v;
        }
    }
    let p = p_exact.iter().map(rational_to_f64).collect();
    RiskNeutralVertex { simplex, p, p_exact, sigma }
}

fn try_vertex(points: &[Vec<Rational>], simplex: Simplex) -> Result<RiskNeutralVertex> {
    let d = points[0].len();
    let verts: Vec<&[Rational]> = simplex.vertices.iter().map(|&i| points[i].as_slice()).collect();
    let origin = vec![Rational::zero(); d];
    let p = barycentric_exact(&verts, &origin).ok_or(Error::SingularSystem)?;
    if p.iter().any(Signed::is_negative) {
        return Err(Error::NotContaining);
    }
    Ok(vertex_from_exact(points, simplex, p))
}

fn gamma(points: &[Vec<Rational>]) -> Vec<RiskNeutralVertex> {
    let d = points[0].len();
    let subsets: Vec<Vec<usize>> = (0..points.len()).combinations(d + 1).collect();
    subsets
        .into_par_iter()
        .filter_map(|s| try_vertex(points, Simplex { vertices: s }).ok())
        .collect()
}

/// Enumerates every `(d+1)`-subset that is affinely independent and whose
/// closed hull contains the origin.
pub fn enumerate_simplexes(m: &MoveSet) -> SimplexFamily {
    SimplexFamily { dim: m.dim, members: gamma(&m.points) }
}

/// Solves for the zero-mean measure on `s`.
pub fn risk_neutral_vertex(m: &MoveSet, s: &Simplex) -> Result<RiskNeutralVertex> {
    if s.vertices.len() != m.dim + 1 {
        return Err(Error::DimensionMismatch { expected: m.dim + 1, got: s.vertices.len() });
    }
    if let Some(&bad) = s.vertices.iter().find(|&&i| i >= m.len()) {
        return Err(Error::BadParams(format!("vertex index {bad} out of range")));
    }
    try_vertex(&m.points, Simplex::new(s.vertices.clone()))
}

/// Extreme points of the hull, in their original order.
pub fn hull_vertices(m: &MoveSet) -> MoveSet {
    let d = m.dim;
    let extreme: Vec<Vec<Rational>> = (0..m.len())
        .filter(|&i| {
            let others: Vec<usize> = (0..m.len()).filter(|&j| j != i).collect();
            let inside = others.iter().copied().combinations(d + 1).any(|s| {
                let verts: Vec<&[Rational]> = s.iter().map(|&j| m.points[j].as_slice()).collect();
                simplex_contains_exact(&verts, &m.points[i])
            });
            !inside
        })
        .map(|i| m.points[i].clone())
        .collect();
    build_move_set(extreme).expect("hull vertices of a valid move set form a valid move set")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(pts: &[Vec<i64>]) -> Result<MoveSet> {
        MoveSet::from_integers(pts)
    }

    #[test]
    fn chi1_is_product_and_chi2_is_not() {
        let chi1 = MoveSet::chi1();
        let axes = chi1.product_axes().unwrap();
        assert_eq!(axes.axes, vec![vec![integer(-1), integer(1)]; 2]);
        assert!(chi1.is_lattice_binomial());
        assert!(MoveSet::chi2().product_axes().is_none());
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(matches!(
            ms(&[vec![1, 0], vec![2, 0], vec![-1, 0]]),
            Err(Error::DimensionDeficient { hull_dim: 1, dim: 2 })
        ));
        assert!(matches!(ms(&[vec![1, 0], vec![-1, 0]]), Err(Error::TooFewPoints { .. })));
        assert!(matches!(
            ms(&[vec![1, 0], vec![2, 1], vec![1, 2]]),
            Err(Error::OriginNotInterior)
        ));
        // origin on an edge of the hull
        assert!(matches!(
            ms(&[vec![1, 0], vec![-1, 0], vec![0, 1]]),
            Err(Error::OriginNotInterior)
        ));
        assert!(matches!(
            ms(&[vec![1, 0], vec![1, 0], vec![-1, 1], vec![-1, -1]]),
            Err(Error::DuplicatePoint(1))
        ));
        assert!(matches!(ms(&[vec![1, 0], vec![1]]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn zero_move_is_flagged() {
        let m = ms(&[vec![0], vec![-1], vec![1]]).unwrap();
        assert!(m.has_zero_move());
        assert_eq!(m.warnings().len(), 1);
        assert!(!MoveSet::chi1().has_zero_move());
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("-1/2").unwrap(), rational(-1, 2));
        assert_eq!(parse_rational("0.25").unwrap(), rational(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rational(-3, 2));
        assert_eq!(parse_rational("7").unwrap(), integer(7));
        assert!(parse_rational("x").is_err());
        let m: MoveSet = serde_json::from_str(r#"[["1/2", 1], [-1, "1"], [1, -1], ["-1/2", -1]]"#).unwrap();
        assert_eq!(m.denominator(), 2);
        assert_eq!(m.lattice_point(0), &[1, 2]);
        let round: MoveSet = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(round, m);
    }

    #[test]
    fn diagonal_vertex_of_chi1() {
        let m = MoveSet::chi1();
        // (1,1), (1,-1), (-1,-1)
        let v = risk_neutral_vertex(&m, &Simplex::new(vec![0, 1, 3])).unwrap();
        assert_eq!(v.p_exact, vec![rational(1, 2), integer(0), rational(1, 2)]);
        assert_eq!(v.sigma, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        // (1,-1), (-1,1), (-1,-1)
        let w = risk_neutral_vertex(&m, &Simplex::new(vec![1, 2, 3])).unwrap();
        assert_eq!(w.sigma, vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);
    }

    #[test]
    fn chi_l_vertex_weights() {
        let m = ms(&[vec![-1, -2, -1], vec![-1, 1, -1], vec![-1, 1, 1], vec![2, 1, 1], vec![2, -2, -1]])
            .unwrap();
        let v = risk_neutral_vertex(&m, &Simplex::new(vec![0, 1, 2, 3])).unwrap();
        assert_eq!(v.p_exact, vec![rational(1, 3), rational(1, 6), rational(1, 6), rational(1, 3)]);
        assert_eq!(
            v.sigma,
            vec![vec![2.0, 1.0, 1.0], vec![1.0, 2.0, 1.0], vec![1.0, 1.0, 1.0]]
        );
    }

    #[test]
    fn vertex_errors() {
        let m = ms(&[vec![1, 0], vec![2, 0], vec![3, 0], vec![-1, 1], vec![-1, -1]]).unwrap();
        assert!(matches!(
            risk_neutral_vertex(&m, &Simplex::new(vec![0, 1, 2])),
            Err(Error::SingularSystem)
        ));
        assert!(matches!(
            risk_neutral_vertex(&m, &Simplex::new(vec![0, 1, 3])),
            Err(Error::NotContaining)
        ));
    }

    #[test]
    fn hull_of_grid_and_square_with_inner_point() {
        let grid = MoveSet::product(&vec![vec![integer(-1), integer(0), integer(1)]; 2]).unwrap();
        let hull = hull_vertices(&grid);
        assert_eq!(hull.len(), 4);
        assert!(hull.points().iter().all(|p| p.iter().all(|c| c.abs() == integer(1))));
        assert_eq!(hull_vertices(&MoveSet::chi2()), MoveSet::chi2());
        let pts = vec![
            vec![integer(1), integer(1)],
            vec![integer(1), integer(-1)],
            vec![integer(-1), integer(1)],
            vec![integer(-1), integer(-1)],
            vec![integer(0), rational(1, 2)],
        ];
        assert_eq!(hull_vertices(&build_move_set(pts).unwrap()), MoveSet::chi1());
    }

    #[test]
    fn gamma_of_square_and_cross() {
        let f1 = enumerate_simplexes(&MoveSet::chi1());
        assert_eq!(f1.len(), 4);
        assert!(f1.members.iter().all(|m| m.p_exact.iter().filter(|p| p.is_zero()).count() == 1));
        assert_eq!(f1.distinct_measures().len(), 2);
        // the cross: every triangle has the origin on an edge
        let f2 = enumerate_simplexes(&MoveSet::chi2());
        assert_eq!(f2.len(), 4);
        let sigmas: Vec<_> = f2.members.iter().map(|m| m.sigma.clone()).sorted_by(|a, b| a.partial_cmp(b).unwrap()).dedup().collect();
        assert_eq!(sigmas, vec![vec![vec![0.0, 0.0], vec![0.0, 1.0]], vec![vec![1.0, 0.0], vec![0.0, 0.0]]]);
        let order: Vec<_> = f2.members.iter().map(|m| m.simplex.clone()).collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn complete_market_has_single_simplex() {
        let m = ms(&[vec![1, 0], vec![0, 1], vec![-1, -1]]).unwrap();
        let fam = enumerate_simplexes(&m);
        assert_eq!(fam.len(), 1);
        assert_eq!(fam.members[0].p_exact, vec![rational(1, 3); 3]);
    }
}

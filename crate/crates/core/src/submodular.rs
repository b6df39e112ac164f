//! Set functions on `2^{1..d}`, modularity certification, the Lovász
//! extension and the concave/convex closures, together with the cube
//! embedding that links a lattice binomial move set to `[0,1]^d`.
//!
//! Subsets are encoded as bitmasks: bit `k` set means coordinate `k` is in
//! the set.

use std::collections::BTreeMap;
use std::fmt;

use itertools::Itertools;
use num_traits::{Num, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{MoveSet, Rational, Simplex, SimplexFamily};
use crate::linalg::{rational_to_f64, solve};

/// Default tolerance for classifying float-valued set functions.
pub const EPS_MOD: f64 = 1e-9;

/// A real function on the subsets of `{0..d-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SetFunction {
    d: usize,
    values: Vec<f64>,
}

impl SetFunction {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1 << d {
            return Err(Error::DimensionMismatch { expected: 1 << d, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParams("set function values must be finite".into()));
        }
        Ok(SetFunction { d, values })
    }

    pub fn from_fn(d: usize, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(d, (0..1 << d).map(f).collect())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    pub fn scaled(&self, a: f64) -> Self {
        SetFunction { d: self.d, values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &SetFunction, b: f64) -> Self {
        assert_eq!(self.d, other.d);
        SetFunction {
            d: self.d,
            values: self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect(),
        }
    }
}

impl Serialize for SetFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<usize, f64> = self.values.iter().copied().enumerate().collect();
        map.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SetFunction {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let map: BTreeMap<usize, f64> = BTreeMap::deserialize(de)?;
        let n = map.len();
        if !n.is_power_of_two() || map.keys().copied().ne(0..n) {
            return Err(serde::de::Error::custom("set function table must have keys 0..2^d"));
        }
        SetFunction::new(n.trailing_zeros() as usize, map.into_values().collect())
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modularity {
    Submodular,
    Supermodular,
    Modular,
    Neither,
}

impl Modularity {
    pub fn is_submodular(self) -> bool {
        matches!(self, Modularity::Submodular | Modularity::Modular)
    }

    pub fn is_supermodular(self) -> bool {
        matches!(self, Modularity::Supermodular | Modularity::Modular)
    }

    /// The class of `-f` when `f` has class `self`.
    pub fn flipped(self) -> Self {
        match self {
            Modularity::Submodular => Modularity::Supermodular,
            Modularity::Supermodular => Modularity::Submodular,
            m => m,
        }
    }
}

impl fmt::Display for Modularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Modularity::Submodular => "submodular",
            Modularity::Supermodular => "supermodular",
            Modularity::Modular => "modular",
            Modularity::Neither => "neither",
        };
        f.write_str(s)
    }
}

/// Classifies with tolerance [`EPS_MOD`], scaled by the magnitude of `f`.
pub fn classify_modularity(f: &SetFunction) -> Modularity {
    let scale = f.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    classify_with_tolerance(f, EPS_MOD * scale)
}

/// Checks `f(A+i) + f(A+j)` against `f(A) + f(A+i+j)` over all `A` and
/// `i != j` outside `A`. `eps = 0` gives exact comparison.
pub fn classify_with_tolerance(f: &SetFunction, eps: f64) -> Modularity {
    let d = f.d;
    let mut sub = true;
    let mut sup = true;
    for a in 0..1usize << d {
        for i in (0..d).filter(|i| a & (1 << i) == 0) {
            for j in (i + 1..d).filter(|j| a & (1 << j) == 0) {
                let gap = f.get(a | 1 << i) + f.get(a | 1 << j) - f.get(a) - f.get(a | 1 << i | 1 << j);
                sub &= gap >= -eps;
                sup &= gap <= eps;
                if !sub && !sup {
                    return Modularity::Neither;
                }
            }
        }
    }
    match (sub, sup) {
        (true, true) => Modularity::Modular,
        (true, false) => Modularity::Submodular,
        (false, true) => Modularity::Supermodular,
        (false, false) => Modularity::Neither,
    }
}

/// The chain `∅ = A_0 ⊂ A_1 ⊂ … ⊂ A_d` induced by sorting a point of
/// `[0,1]^d`, with weights `p_0..p_d`.
#[derive(Clone, Debug, PartialEq)]
pub struct LovaszChain<T> {
    /// Bitmasks of `A_0..A_d`.
    pub sets: Vec<usize>,
    pub weights: Vec<T>,
}

impl<T: Clone + Num> LovaszChain<T> {
    /// `Σ_j p_j 1_{A_j}`.
    pub fn reconstruct(&self, d: usize) -> Vec<T> {
        (0..d)
            .map(|k| {
                self.sets
                    .iter()
                    .zip(&self.weights)
                    .filter(|(a, _)| *a & (1 << k) != 0)
                    .fold(T::zero(), |acc, (_, w)| acc + w.clone())
            })
            .collect()
    }
}

/// Builds the chain for `s`. Coordinates are taken in decreasing order, ties
/// by ascending index.
pub fn lovasz_chain<T: Clone + PartialOrd + Num>(s: &[T]) -> LovaszChain<T> {
    let d = s.len();
    let order: Vec<usize> = (0..d)
        .sorted_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)))
        .collect();
    let mut sets = Vec::with_capacity(d + 1);
    let mut weights = Vec::with_capacity(d + 1);
    let mut mask = 0usize;
    sets.push(0);
    weights.push(match order.first() {
        Some(&k) => T::one() - s[k].clone(),
        None => T::one(),
    });
    for (j, &k) in order.iter().enumerate() {
        mask |= 1 << k;
        sets.push(mask);
        let next = order.get(j + 1).map_or_else(T::zero, |&n| s[n].clone());
        weights.push(s[k].clone() - next);
    }
    LovaszChain { sets, weights }
}

/// `f^L(s) = Σ_j p_j(s) f(A_j(s))`.
pub fn lovasz_extension(f: &SetFunction, s: &[f64]) -> f64 {
    debug_assert_eq!(s.len(), f.d);
    let chain = lovasz_chain(s);
    chain.sets.iter().zip(&chain.weights).map(|(&a, &w)| w * f.get(a)).sum()
}

/// Basic feasible solutions of `{α ≥ 0 : Σ α_A 1_A = s, Σ α_A = 1}` for a
/// fixed `s`, reusable across many set functions.
#[derive(Clone, Debug)]
pub struct ClosureOracle {
    d: usize,
    bases: Vec<Vec<(usize, f64)>>,
}

impl ClosureOracle {
    /// Enumerates all `(d+1)`-subsets of the cube corners. Intended for
    /// `d <= 4`.
    pub fn new(d: usize, s: &[f64]) -> Self {
        assert_eq!(s.len(), d);
        let n = d + 1;
        let mut rhs = vec![1.0];
        rhs.extend_from_slice(s);
        let bases = (0..1usize << d)
            .combinations(n)
            .filter_map(|cols| {
                let mut a = vec![0.0; n * n];
                for (c, &mask) in cols.iter().enumerate() {
                    a[c] = 1.0;
                    for k in 0..d {
                        a[(k + 1) * n + c] = ((mask >> k) & 1) as f64;
                    }
                }
                let alpha = solve(&a, &rhs, n)?;
                if alpha.iter().any(|&x| x < -1e-12) {
                    return None;
                }
                Some(cols.into_iter().zip(alpha.into_iter().map(|x| x.max(0.0))).collect())
            })
            .collect();
        ClosureOracle { d, bases }
    }

    fn eval(&self, f: &SetFunction) -> impl Iterator<Item = f64> + '_ {
        assert_eq!(f.d, self.d);
        let values = f.values.clone();
        self.bases
            .iter()
            .map(move |b| b.iter().map(|&(a, w)| w * values[a]).sum())
    }

    pub fn concave(&self, f: &SetFunction) -> f64 {
        self.eval(f).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn convex(&self, f: &SetFunction) -> f64 {
        self.eval(f).fold(f64::INFINITY, f64::min)
    }
}

/// Concave closure `max Σ α_A f(A)` over distributions on subsets with mean `s`.
pub fn concave_closure_value(f: &SetFunction, s: &[f64]) -> f64 {
    ClosureOracle::new(f.d, s).concave(f)
}

/// Convex closure, as `-concave(-f)`.
pub fn convex_closure_value(f: &SetFunction, s: &[f64]) -> f64 {
    -concave_closure_value(&f.negated(), s)
}

/// The affine map `g(s)_k = (1 - s_k) low_k + s_k high_k` from `[0,1]^d`
/// onto a binomial cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubeEmbedding {
    #[serde(serialize_with = "ser_rationals")]
    pub lows: Vec<Rational>,
    #[serde(serialize_with = "ser_rationals")]
    pub highs: Vec<Rational>,
}

fn ser_rationals<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
    v.iter().map(crate::geometry::format_rational).collect::<Vec<_>>().serialize(s)
}

impl CubeEmbedding {
    pub fn new(lows: Vec<Rational>, highs: Vec<Rational>) -> Result<Self> {
        if lows.len() != highs.len() {
            return Err(Error::DimensionMismatch { expected: lows.len(), got: highs.len() });
        }
        if lows.iter().zip(&highs).any(|(l, h)| !l.is_negative() || !h.is_positive()) {
            return Err(Error::BadParams("cube embedding needs low < 0 < high on every axis".into()));
        }
        Ok(CubeEmbedding { lows, highs })
    }

    /// The embedding of a lattice binomial move set.
    pub fn from_move_set(m: &MoveSet) -> Result<Self> {
        let axes = m.product_axes().filter(|a| a.is_binomial()).ok_or(Error::NotLatticeBinomial)?;
        Self::new(
            axes.axes.iter().map(|a| a[0].clone()).collect(),
            axes.axes.iter().map(|a| a[1].clone()).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lows.len()
    }

    /// `g_0(A) = g(1_A)`.
    pub fn corner(&self, mask: usize) -> Vec<Rational> {
        (0..self.dim())
            .map(|k| if mask & (1 << k) != 0 { self.highs[k].clone() } else { self.lows[k].clone() })
            .collect()
    }

    pub fn corner_f64(&self, mask: usize) -> Vec<f64> {
        self.corner(mask).iter().map(rational_to_f64).collect()
    }

    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        s.iter()
            .enumerate()
            .map(|(k, &t)| (1.0 - t) * rational_to_f64(&self.lows[k]) + t * rational_to_f64(&self.highs[k]))
            .collect()
    }

    /// `g^{-1}(0)`, exact.
    pub fn origin_preimage(&self) -> Vec<Rational> {
        self.lows.iter().zip(&self.highs).map(|(l, h)| -l / (h - l)).collect()
    }

    /// Move-set index of each corner, by bitmask.
    pub fn corner_indices(&self, m: &MoveSet) -> Result<Vec<usize>> {
        (0..1usize << self.dim())
            .map(|mask| m.index_of(&self.corner(mask)).ok_or(Error::NotLatticeBinomial))
            .collect()
    }
}

/// The Lovász-chain simplex `{g_0(A_0(s)), …, g_0(A_d(s))}` at `s = g^{-1}(0)`.
pub fn chi_l(emb: &CubeEmbedding, m: &MoveSet) -> Result<Simplex> {
    if !m.is_lattice_binomial() || m.dim() != emb.dim() {
        return Err(Error::NotLatticeBinomial);
    }
    let chain = lovasz_chain(&emb.origin_preimage());
    let idx = emb.corner_indices(m)?;
    Ok(Simplex::new(chain.sets.iter().map(|&a| idx[a]).collect()))
}

fn first_member_with(fam: &SimplexFamily, required: &[usize]) -> Option<Simplex> {
    fam.members
        .iter()
        .map(|v| &v.simplex)
        .find(|s| required.iter().all(|r| s.vertices.contains(r)))
        .cloned()
}

/// For `d = 2`: the first member of `fam` containing both anti-diagonal
/// corners `(low_1, high_2)` and `(high_1, low_2)`.
pub fn chi_minus(emb: &CubeEmbedding, m: &MoveSet, fam: &SimplexFamily) -> Result<Simplex> {
    if emb.dim() != 2 {
        return Err(Error::BadParams("the anti-diagonal simplex is defined for d = 2".into()));
    }
    let idx = emb.corner_indices(m)?;
    first_member_with(fam, &[idx[0b10], idx[0b01]]).ok_or(Error::NotLatticeBinomial)
}

/// For `d = 2`: the first member of `fam` containing both diagonal corners.
pub fn chi_plus(emb: &CubeEmbedding, m: &MoveSet, fam: &SimplexFamily) -> Result<Simplex> {
    if emb.dim() != 2 {
        return Err(Error::BadParams("the diagonal simplex is defined for d = 2".into()));
    }
    let idx = emb.corner_indices(m)?;
    first_member_with(fam, &[idx[0b00], idx[0b11]]).ok_or(Error::NotLatticeBinomial)
}

/// `f_0(A) = F(base + g_0(A))`.
pub fn cell_set_function(
    f: impl Fn(&[f64]) -> f64,
    base: &[f64],
    emb: &CubeEmbedding,
) -> Result<SetFunction> {
    let d = emb.dim();
    if base.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: base.len() });
    }
    let mut point = vec![0.0; d];
    SetFunction::new(
        d,
        (0..1usize << d)
            .map(|mask| {
                for (k, c) in emb.corner_f64(mask).into_iter().enumerate() {
                    point[k] = base[k] + c;
                }
                f(&point)
            })
            .collect(),
    )
}

/// Sign summary of sampled mixed second derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOutcome {
    ConsistentSubmodular,
    ConsistentSupermodular,
    Modular,
    Mixed,
}

/// Central-difference estimates of `∂²F/∂s_i∂s_j`, `i != j`, at each sample.
/// Advisory only.
pub fn mixed_partial_probe(f: impl Fn(&[f64]) -> f64, samples: &[Vec<f64>], h: f64) -> ProbeOutcome {
    let tol = 1e-6;
    let (mut neg, mut pos) = (false, false);
    for x in samples {
        let d = x.len();
        for i in 0..d {
            for j in i + 1..d {
                let at = |si: f64, sj: f64| {
                    let mut y = x.clone();
                    y[i] += si * h;
                    y[j] += sj * h;
                    f(&y)
                };
                let est = (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h);
                neg |= est < -tol;
                pos |= est > tol;
            }
        }
    }
    match (neg, pos) {
        (false, false) => ProbeOutcome::Modular,
        (true, false) => ProbeOutcome::ConsistentSubmodular,
        (false, true) => ProbeOutcome::ConsistentSupermodular,
        (true, true) => ProbeOutcome::Mixed,
    }
}

/// Exact check that a rational weight vector is a probability vector.
pub fn is_distribution(w: &[Rational]) -> bool {
    w.iter().all(|x| !x.is_negative()) && w.iter().fold(Rational::zero(), |a, x| a + x) == Rational::from_integer(1.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{enumerate_simplexes, integer, rational, risk_neutral_vertex};
    use proptest::prelude::*;

    fn supermodular_instance(d: usize, coeffs: &[f64]) -> SetFunction {
        // Σ_S c_S [S ⊆ A] with c_S >= 0 whenever |S| >= 2
        SetFunction::from_fn(d, |a| {
            (1..1usize << d)
                .filter(|s| s & a == *s)
                .map(|s| if s.count_ones() >= 2 { coeffs[s].abs() } else { coeffs[s] })
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn catalog_corners_classify() {
        let emb = CubeEmbedding::from_move_set(&MoveSet::chi1()).unwrap();
        let max = |s: &[f64]| (s[0].max(s[1]) - 1.0).max(0.0);
        let min = |s: &[f64]| (s[0].min(s[1]) - 1.0).max(0.0);
        for base in [[0.0, 0.0], [1.0, 1.0], [2.0, 0.0], [1.0, 3.0]] {
            let fm = cell_set_function(max, &base, &emb).unwrap();
            assert!(classify_modularity(&fm).is_submodular());
            assert!(classify_modularity(&cell_set_function(min, &base, &emb).unwrap()).is_supermodular());
        }
        let f0 = cell_set_function(|s: &[f64]| s[0].max(s[1]).max(0.0), &[0.0, 0.0], &emb).unwrap();
        assert_eq!(f0.values(), &[0.0, 1.0, 1.0, 1.0]);
        assert_eq!(classify_modularity(&f0), Modularity::Submodular);
        let lin = SetFunction::from_fn(3, |a| [1.0, -2.0, 0.5].iter().enumerate().filter(|(k, _)| a >> k & 1 == 1).map(|(_, w)| w).sum()).unwrap();
        assert_eq!(classify_modularity(&lin), Modularity::Modular);
        let sep = cell_set_function(|s: &[f64]| s[0].abs() + (s[1] - 0.3).max(0.0), &[0.2, -0.4], &emb).unwrap();
        assert_eq!(classify_modularity(&sep), Modularity::Modular);
        let constant = cell_set_function(|_: &[f64]| 2.5, &[0.0, 0.0], &emb).unwrap();
        assert!(constant.values().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn chain_examples() {
        let s = [rational(1, 3), rational(2, 3), rational(1, 2)];
        let c = lovasz_chain(&s);
        assert_eq!(c.sets, vec![0, 0b010, 0b110, 0b111]);
        assert_eq!(c.weights, vec![rational(1, 3), rational(1, 6), rational(1, 6), rational(1, 3)]);
        assert_eq!(c.reconstruct(3), s.to_vec());
        let ones = lovasz_chain(&[1.0, 1.0, 1.0]);
        assert_eq!(ones.weights, vec![0.0, 0.0, 0.0, 1.0]);
        let half = lovasz_chain(&[0.5, 0.5]);
        assert_eq!(half.sets, vec![0, 0b01, 0b11]);
        assert_eq!(half.weights, vec![0.5, 0.0, 0.5]);
    }

    #[test]
    fn chi_l_examples() {
        let m = MoveSet::lattice_binomial(
            &[integer(-1), integer(-2), integer(-1)],
            &[integer(2), integer(1), integer(1)],
        )
        .unwrap();
        let emb = CubeEmbedding::from_move_set(&m).unwrap();
        let s = chi_l(&emb, &m).unwrap();
        let pts: Vec<Vec<i64>> = s
            .vertices
            .iter()
            .map(|&i| m.point(i).iter().map(|c| c.to_integer().try_into().unwrap()).collect())
            .collect();
        let mut want = vec![vec![-1, -2, -1], vec![-1, 1, -1], vec![-1, 1, 1], vec![2, 1, 1]];
        want.sort();
        let mut got = pts.clone();
        got.sort();
        assert_eq!(got, want);

        // min option cell function at the origin: extension equals I(chi_L, f)
        let v = risk_neutral_vertex(&m, &s).unwrap();
        let fmin = |x: &[f64]| (x[0].min(x[1]).min(x[2]) - 1.0).max(0.0) + x[0].min(x[1]).min(x[2]);
        let f0 = cell_set_function(fmin, &[0.0; 3], &emb).unwrap();
        let values: Vec<f64> = (0..m.len()).map(|i| fmin(&m.point_f64(i))).collect();
        let s0: Vec<f64> = emb.origin_preimage().iter().map(rational_to_f64).collect();
        assert!((lovasz_extension(&f0, &s0) - v.expectation(&values)).abs() < 1e-12);

        let chi1 = MoveSet::chi1();
        let e1 = CubeEmbedding::from_move_set(&chi1).unwrap();
        let fam = enumerate_simplexes(&chi1);
        let l = chi_l(&e1, &chi1).unwrap();
        let plus = chi_plus(&e1, &chi1, &fam).unwrap();
        let corners = e1.corner_indices(&chi1).unwrap();
        assert!(l.vertices.contains(&corners[0]) && l.vertices.contains(&corners[3]));
        let lv = risk_neutral_vertex(&chi1, &l).unwrap();
        let pv = risk_neutral_vertex(&chi1, &plus).unwrap();
        assert_eq!(lv.sigma, vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(lv.sigma, pv.sigma);
        let minus = chi_minus(&e1, &chi1, &fam).unwrap();
        let mv = risk_neutral_vertex(&chi1, &minus).unwrap();
        assert_eq!(mv.sigma, vec![vec![1.0, -1.0], vec![-1.0, 1.0]]);

        let sym = MoveSet::lattice_binomial(&vec![integer(-3); 3], &vec![integer(3); 3]).unwrap();
        let es = CubeEmbedding::from_move_set(&sym).unwrap();
        let ls = chi_l(&es, &sym).unwrap();
        assert!(ls.vertices.contains(&sym.index_of(&vec![integer(-3); 3]).unwrap()));
        assert!(ls.vertices.contains(&sym.index_of(&vec![integer(3); 3]).unwrap()));
        assert!(matches!(chi_l(&es, &MoveSet::chi2()), Err(Error::NotLatticeBinomial)));
    }

    #[test]
    fn probe_signs() {
        let pts: Vec<Vec<f64>> = vec![vec![0.3, -0.2], vec![1.0, 2.0], vec![-1.5, 0.7]];
        assert_eq!(mixed_partial_probe(|s: &[f64]| -s[0] * s[1], &pts, 1e-3), ProbeOutcome::ConsistentSubmodular);
        assert_eq!(mixed_partial_probe(|s: &[f64]| s[0] * s[1], &pts, 1e-3), ProbeOutcome::ConsistentSupermodular);
        assert_eq!(mixed_partial_probe(|s: &[f64]| s[0] + s[1] * s[1], &pts, 1e-3), ProbeOutcome::Modular);
    }

    #[test]
    fn set_function_json_roundtrip() {
        let f = SetFunction::new(2, vec![0.0, 1.0, 1.0, 1.0]).unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, r#"{"0":0.0,"1":1.0,"2":1.0,"3":1.0}"#);
        assert_eq!(serde_json::from_str::<SetFunction>(&json).unwrap(), f);
        assert!(serde_json::from_str::<SetFunction>(r#"{"0":0.0,"2":1.0}"#).is_err());
    }

    #[test]
    fn modular_extension_is_linear() {
        let w = [0.7, -1.3, 2.0];
        let f = SetFunction::from_fn(3, |a| (0..3).filter(|k| a >> k & 1 == 1).map(|k| w[k]).sum()).unwrap();
        let s = [0.2, 0.9, 0.4];
        let lin: f64 = w.iter().zip(&s).map(|(a, b)| a * b).sum();
        assert!((lovasz_extension(&f, &s) - lin).abs() < 1e-14);
        assert!((concave_closure_value(&f, &s) - lin).abs() < 1e-12);
        assert!((convex_closure_value(&f, &s) - lin).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn chain_reconstructs_point(s in prop::collection::vec(0.0f64..=1.0, 1..6)) {
            let c = lovasz_chain(&s);
            prop_assert!(c.weights.iter().all(|&w| w >= 0.0));
            prop_assert!((c.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for (a, b) in c.reconstruct(s.len()).iter().zip(&s) {
                prop_assert!((a - b).abs() < 1e-14);
            }
        }

        #[test]
        fn chain_reconstructs_rationals(nums in prop::collection::vec(0i64..=12, 1..6)) {
            let s: Vec<Rational> = nums.iter().map(|&n| rational(n, 12)).collect();
            let c = lovasz_chain(&s);
            prop_assert!(is_distribution(&c.weights));
            prop_assert_eq!(c.reconstruct(s.len()), s);
        }

        #[test]
        fn negation_swaps_classes(d in 1usize..5, seed in prop::collection::vec(-2.0f64..2.0, 16)) {
            let f = supermodular_instance(d, &seed);
            prop_assert!(classify_modularity(&f).is_supermodular());
            prop_assert!(classify_modularity(&f.negated()).is_submodular());
            let g = SetFunction::from_fn(d, |a| seed[a]).unwrap();
            prop_assert_eq!(classify_modularity(&g.negated()), classify_modularity(&g).flipped());
        }

        #[test]
        fn extension_is_linear_in_f(
            d in 1usize..5,
            x in prop::collection::vec(-3.0f64..3.0, 16),
            y in prop::collection::vec(-3.0f64..3.0, 16),
            s in prop::collection::vec(0.0f64..=1.0, 4),
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
        ) {
            let f = SetFunction::from_fn(d, |m| x[m]).unwrap();
            let g = SetFunction::from_fn(d, |m| y[m]).unwrap();
            let s = &s[..d];
            let lhs = lovasz_extension(&f.combine(a, &g, b), s);
            let rhs = a * lovasz_extension(&f, s) + b * lovasz_extension(&g, s);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn supermodular_extension_is_concave_closure(
            d in 1usize..5,
            coeffs in prop::collection::vec(-2.0f64..2.0, 16),
            s in prop::collection::vec(0.0f64..=1.0, 4),
        ) {
            let f = supermodular_instance(d, &coeffs);
            let s = &s[..d];
            let ext = lovasz_extension(&f, s);
            prop_assert!((ext - concave_closure_value(&f, s)).abs() < 1e-9);
            let g = f.negated();
            prop_assert!((lovasz_extension(&g, s) - convex_closure_value(&g, s)).abs() < 1e-9);
            prop_assert!(lovasz_extension(&g, s) <= concave_closure_value(&g, s) + 1e-9);
        }
    }
}

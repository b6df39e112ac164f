//! Full-dimensional simplexes spanned by hypercube vertices: enumeration,
//! exact point containment counts, the 3-cube region classification and the
//! chain construction that certifies at least `2^{d-2}` containing simplexes.
//!
//! Cube vertices are bitmasks: bit `k` is coordinate `k`.

use std::collections::HashMap;
use std::sync::OnceLock;

use itertools::Itertools;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{integer, simplex_contains_exact, Rational};
use crate::linalg::{common_denominator, det_bareiss};

pub const MAX_CENSUS_DIM: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TetraType {
    Corner,
    Regular,
    Type3,
    Type4,
}

impl TetraType {
    /// Classification by the sorted multiset of squared edge lengths.
    fn from_edges(edges: &[u32]) -> Option<Self> {
        match edges {
            [1, 1, 1, 2, 2, 2] => Some(TetraType::Corner),
            [2, 2, 2, 2, 2, 2] => Some(TetraType::Regular),
            [1, 1, 1, 2, 2, 3] => Some(TetraType::Type3),
            [1, 1, 2, 2, 2, 3] => Some(TetraType::Type4),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeSimplex {
    /// Sorted vertex bitmasks.
    pub vertices: Vec<u32>,
    /// Set for `d = 3` only.
    pub type_tag: Option<TetraType>,
}

/// Integer hyperplane `normal · x = offset`, reduced by the gcd and with the
/// first nonzero normal entry positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Plane {
    pub normal: Vec<i64>,
    pub offset: i64,
}

impl Plane {
    /// The hyperplane through `d` affinely independent cube vertices.
    fn through(d: usize, pts: &[u32]) -> Option<Plane> {
        // kernel of the rows [p, 1] by signed maximal minors
        let cols = d + 1;
        let mut k = Vec::with_capacity(cols);
        for skip in 0..cols {
            let mut minor = Vec::with_capacity(d * d);
            for &p in pts {
                for c in (0..cols).filter(|&c| c != skip) {
                    minor.push(if c == d { 1 } else { ((p >> c) & 1) as i64 });
                }
            }
            let det = det_bareiss(&minor, d);
            k.push(if skip % 2 == 0 { det } else { -det });
        }
        let mut normal: Vec<i64> = k[..d].iter().map(|&v| v as i64).collect();
        let mut offset = -(k[d] as i64);
        let g = normal.iter().fold(offset.abs(), |g, &v| g.gcd(&v.abs()));
        if g == 0 || normal.iter().all(|&v| v == 0) {
            return None;
        }
        let first = *normal.iter().find(|&&v| v != 0).unwrap();
        let s = if first < 0 { -g } else { g };
        normal.iter_mut().for_each(|v| *v /= s);
        offset /= s;
        Some(Plane { normal, offset })
    }

    fn eval_vertex(&self, v: u32) -> i64 {
        self.normal.iter().enumerate().filter(|(k, _)| (v >> k) & 1 == 1).map(|(_, n)| n).sum::<i64>() - self.offset
    }

    /// Sign of `normal · X - offset * q` for the point `X / q`.
    fn side_of(&self, x: &[i128], q: i128) -> i8 {
        let s: i128 = self.normal.iter().zip(x).map(|(&n, &xi)| n as i128 * xi).sum::<i128>() - self.offset as i128 * q;
        s.signum() as i8
    }
}

/// All full-dimensional simplexes on `{0,1}^d` with their facet planes.
#[derive(Clone, Debug)]
pub struct CubeSimplexCensus {
    pub d: usize,
    pub simplexes: Vec<CubeSimplex>,
    pub degenerate: usize,
    planes: Vec<Plane>,
    /// `(plane id, side of the opposite vertex)` for each facet, `d+1` per simplex.
    facets: Vec<(u32, i8)>,
}

fn full_dimensional(d: usize, verts: &[u32]) -> bool {
    let base = verts[0];
    let mut m = Vec::with_capacity(d * d);
    for &v in &verts[1..] {
        for k in 0..d {
            m.push(((v >> k) & 1) as i64 - ((base >> k) & 1) as i64);
        }
    }
    det_bareiss(&m, d) != 0
}

fn squared_edges(verts: &[u32]) -> Vec<u32> {
    verts.iter().tuple_combinations().map(|(a, b)| (a ^ b).count_ones()).sorted().collect()
}

/// Enumerates every `(d+1)`-subset of cube vertices with a full-dimensional
/// hull. `d <= 5`.
pub fn enumerate_cube_simplexes(d: usize) -> Result<CubeSimplexCensus> {
    if d == 0 || d > MAX_CENSUS_DIM {
        return Err(Error::BadParams(format!("census dimension must be in 1..={MAX_CENSUS_DIM}, got {d}")));
    }
    let subsets: Vec<Vec<u32>> = (0..1u32 << d).combinations(d + 1).collect();
    let total = subsets.len();
    let kept: Vec<Vec<u32>> = subsets.into_par_iter().filter(|s| full_dimensional(d, s)).collect();
    let degenerate = total - kept.len();

    let facet_mask = |s: &[u32], skip: usize| -> u64 {
        s.iter().enumerate().filter(|(i, _)| *i != skip).fold(0u64, |m, (_, &v)| m | 1 << v)
    };
    let mut facet_keys: Vec<u64> = kept.iter().flat_map(|s| (0..=d).map(move |k| facet_mask(s, k))).collect();
    facet_keys.sort_unstable();
    facet_keys.dedup();
    let facet_planes: Vec<Plane> = facet_keys
        .par_iter()
        .map(|&mask| {
            let pts: Vec<u32> = (0..1u32 << d).filter(|v| mask >> v & 1 == 1).collect();
            Plane::through(d, &pts).expect("facet of a full-dimensional simplex spans a hyperplane")
        })
        .collect();
    let mut plane_ids: HashMap<Plane, u32> = HashMap::new();
    let mut planes = Vec::new();
    let facet_plane_id: HashMap<u64, u32> = facet_keys
        .iter()
        .zip(facet_planes)
        .map(|(&key, p)| {
            let id = *plane_ids.entry(p.clone()).or_insert_with(|| {
                planes.push(p);
                (planes.len() - 1) as u32
            });
            (key, id)
        })
        .collect();

    let mut facets = Vec::with_capacity(kept.len() * (d + 1));
    for s in &kept {
        for (k, &opposite) in s.iter().enumerate() {
            let id = facet_plane_id[&facet_mask(s, k)];
            let side = planes[id as usize].eval_vertex(opposite).signum() as i8;
            facets.push((id, side));
        }
    }
    let simplexes = kept
        .into_iter()
        .map(|vertices| {
            let type_tag = (d == 3).then(|| TetraType::from_edges(&squared_edges(&vertices))).flatten();
            CubeSimplex { vertices, type_tag }
        })
        .collect();
    Ok(CubeSimplexCensus { d, simplexes, degenerate, planes, facets })
}

/// Exact integer form `X / q` of a rational point.
fn to_integer_point(x: &[Rational]) -> Result<(Vec<i128>, i128)> {
    let q = common_denominator(x.iter());
    let conv = |v: &Rational| (v * Rational::from_integer(q.clone())).to_integer().to_i128();
    let xs = x
        .iter()
        .map(|v| conv(v).ok_or_else(|| Error::BadParams("coordinate too large".into())))
        .collect::<Result<Vec<_>>>()?;
    let q = q.to_i128().ok_or_else(|| Error::BadParams("denominator too large".into()))?;
    Ok((xs, q))
}

fn check_unit_cube(x: &[Rational]) -> Result<()> {
    let one = integer(1);
    if x.iter().any(|v| v.is_negative() || *v > one) {
        return Err(Error::BadParams("point must lie in the unit cube".into()));
    }
    Ok(())
}

impl CubeSimplexCensus {
    pub fn len(&self) -> usize {
        self.simplexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplexes.is_empty()
    }

    pub fn distinct_facet_planes(&self) -> usize {
        self.planes.len()
    }

    pub fn type_counts(&self) -> Vec<(TetraType, usize)> {
        self.simplexes.iter().filter_map(|s| s.type_tag).counts().into_iter().sorted().collect()
    }

    /// Indices of the simplexes whose closed hull contains `x`.
    pub fn containing(&self, x: &[Rational]) -> Result<Vec<usize>> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        check_unit_cube(x)?;
        let (xs, q) = to_integer_point(x)?;
        let sides: Vec<i8> = self.planes.iter().map(|p| p.side_of(&xs, q)).collect();
        let d1 = self.d + 1;
        Ok((0..self.simplexes.len())
            .into_par_iter()
            .filter(|&i| {
                self.facets[i * d1..(i + 1) * d1].iter().all(|&(p, side)| {
                    let s = sides[p as usize];
                    s == 0 || s == side
                })
            })
            .collect())
    }

    pub fn count_containing(&self, x: &[Rational]) -> Result<usize> {
        self.containing(x).map(|v| v.len())
    }
}

impl Serialize for CubeSimplexCensus {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            vertices: Vec<Vec<u8>>,
            #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
            type_tag: Option<TetraType>,
        }
        #[derive(Serialize)]
        struct Dump<'a> {
            d: usize,
            count: usize,
            degenerate: usize,
            type_counts: Vec<(TetraType, usize)>,
            simplexes: Vec<Entry>,
            #[serde(skip)]
            _p: std::marker::PhantomData<&'a ()>,
        }
        let simplexes = self
            .simplexes
            .iter()
            .map(|c| Entry {
                vertices: c.vertices.iter().map(|&v| vertex_coords(self.d, v)).collect(),
                type_tag: c.type_tag,
            })
            .collect();
        Dump {
            d: self.d,
            count: self.len(),
            degenerate: self.degenerate,
            type_counts: self.type_counts(),
            simplexes,
            _p: std::marker::PhantomData,
        }
        .serialize(s)
    }
}

pub fn vertex_coords(d: usize, v: u32) -> Vec<u8> {
    (0..d).map(|k| ((v >> k) & 1) as u8).collect()
}

fn cached_census(d: usize) -> Result<&'static CubeSimplexCensus> {
    static CACHE: [OnceLock<CubeSimplexCensus>; MAX_CENSUS_DIM + 1] =
        [const { OnceLock::new() }; MAX_CENSUS_DIM + 1];
    if d == 0 || d > MAX_CENSUS_DIM {
        return Err(Error::BadParams(format!("census dimension must be in 1..={MAX_CENSUS_DIM}, got {d}")));
    }
    Ok(CACHE[d].get_or_init(|| enumerate_cube_simplexes(d).expect("dimension checked")))
}

/// `|N(x)|`: the number of full-dimensional cube simplexes whose closed hull
/// contains `x`.
pub fn count_containing(x: &[Rational]) -> Result<usize> {
    cached_census(x.len())?.count_containing(x)
}

/// Planes through at least `d` affinely independent cube vertices that have
/// vertices strictly on both sides, with the number of vertices on each.
pub fn cutting_planes(d: usize) -> Result<Vec<(Plane, usize)>> {
    if d == 0 || d > MAX_CENSUS_DIM {
        return Err(Error::BadParams(format!("dimension must be in 1..={MAX_CENSUS_DIM}")));
    }
    let planes: Vec<Plane> = (0..1u32 << d)
        .combinations(d)
        .filter_map(|pts| Plane::through(d, &pts))
        .sorted()
        .dedup()
        .collect();
    Ok(planes
        .into_iter()
        .filter_map(|p| {
            let vals: Vec<i64> = (0..1u32 << d).map(|v| p.eval_vertex(v)).collect();
            let on = vals.iter().filter(|&&v| v == 0).count();
            (vals.iter().any(|&v| v > 0) && vals.iter().any(|&v| v < 0)).then_some((p, on))
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region3 {
    T1AndT2,
    T1Only,
    T2Only,
    Neither,
    Boundary,
}

impl Region3 {
    /// `|N(x)|` for generic points of the region.
    pub fn expected_count(self) -> Option<usize> {
        match self {
            Region3::T1AndT2 => Some(14),
            Region3::T1Only | Region3::T2Only => Some(11),
            Region3::Neither => Some(8),
            Region3::Boundary => None,
        }
    }
}

/// `T1 = conv{000, 011, 110, 101}` and `T2 = conv{001, 010, 100, 111}` as bitmasks.
pub const T1: [u32; 4] = [0b000, 0b110, 0b011, 0b101];
pub const T2: [u32; 4] = [0b100, 0b010, 0b001, 0b111];

fn cube_point(d: usize, v: u32) -> Vec<Rational> {
    vertex_coords(d, v).into_iter().map(|c| integer(c as i64)).collect()
}

/// Region of a point of `[0,1]^3` relative to the two regular tetrahedra;
/// `Boundary` when the point lies on a cutting plane or a cube face.
pub fn classify_point_3d(x: &[Rational]) -> Result<Region3> {
    if x.len() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: x.len() });
    }
    check_unit_cube(x)?;
    static PLANES: OnceLock<Vec<Plane>> = OnceLock::new();
    let planes = PLANES.get_or_init(|| cutting_planes(3).expect("d = 3").into_iter().map(|(p, _)| p).collect());
    let (xs, q) = to_integer_point(x)?;
    let one = integer(1);
    if x.iter().any(|v| v.is_zero() || *v == one) || planes.iter().any(|p| p.side_of(&xs, q) == 0) {
        return Ok(Region3::Boundary);
    }
    let inside = |t: &[u32; 4]| {
        let pts: Vec<Vec<Rational>> = t.iter().map(|&v| cube_point(3, v)).collect();
        let refs: Vec<&[Rational]> = pts.iter().map(Vec::as_slice).collect();
        simplex_contains_exact(&refs, x)
    };
    Ok(match (inside(&T1), inside(&T2)) {
        (true, true) => Region3::T1AndT2,
        (true, false) => Region3::T1Only,
        (false, true) => Region3::T2Only,
        (false, false) => Region3::Neither,
    })
}

/// The chain construction for a sorted point of `[0, 1/2]^d`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainConstruction {
    /// Zero-based index of the first minimal gap `x_i - x_{i-1}` (with `x_{-1} = 0`).
    pub i_star: usize,
    #[serde(serialize_with = "ser_rational")]
    pub c: Rational,
    /// `e_1, …, e_{d+1}` with `(e_i)_j = 1` for `j >= i`; the last is zero.
    pub base_chain: Vec<u32>,
    /// Replacements for `e_{i*}`.
    pub epsilons: Vec<u32>,
    /// Sorted vertex bitmasks of each constructed simplex.
    pub simplexes: Vec<Vec<u32>>,
}

fn ser_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&crate::geometry::format_rational(r))
}

/// Builds `2^{d-2}` cube simplexes containing `x`, where
/// `0 <= x_1 <= … <= x_d < 1/2`, and checks each by exact containment.
pub fn lower_bound_family(x: &[Rational]) -> Result<ChainConstruction> {
    let d = x.len();
    if d < 2 {
        return Err(Error::BadParams("the chain construction needs d >= 2".into()));
    }
    if d > 30 {
        return Err(Error::BadParams("dimension too large for bitmask vertices".into()));
    }
    let half = Rational::new(1.into(), 2.into());
    let sorted = x.windows(2).all(|w| w[0] <= w[1]);
    if !sorted || x[0].is_negative() || x[d - 1] >= half {
        return Err(Error::NotInHalfCube(format!(
            "{:?}",
            x.iter().map(crate::geometry::format_rational).collect::<Vec<_>>()
        )));
    }
    let gaps: Vec<Rational> = (0..d).map(|i| if i == 0 { x[0].clone() } else { &x[i] - &x[i - 1] }).collect();
    let c = gaps.iter().min().expect("d >= 2").clone();
    let i_star = gaps.iter().position(|g| *g == c).expect("minimum is attained");
    let full = (1u32 << d) - 1;
    let e = |i: usize| -> u32 { if i >= d { 0 } else { full & !((1u32 << i) - 1) } };
    let base_chain: Vec<u32> = (0..=d).map(e).collect();

    // ε agrees with e_{i*} on the pinned coordinates: ε_{i*} = 1 and the
    // neighbour below is 0 (or, for i* = 0, the neighbour above is 1).
    let pinned: Vec<(usize, u32)> = if i_star > 0 { vec![(i_star, 1), (i_star - 1, 0)] } else { vec![(0, 1), (1, 1)] };
    let free: Vec<usize> = (0..d).filter(|k| pinned.iter().all(|(p, _)| p != k)).collect();
    let epsilons: Vec<u32> = (0..1u32 << free.len())
        .map(|bits| {
            let mut v = pinned.iter().fold(0u32, |acc, &(k, b)| acc | (b << k));
            for (j, &k) in free.iter().enumerate() {
                v |= ((bits >> j) & 1) << k;
            }
            v
        })
        .sorted()
        .collect();

    let simplexes: Vec<Vec<u32>> = epsilons
        .iter()
        .map(|&eps| {
            let mut s = base_chain.clone();
            s[i_star] = eps;
            s.sort_unstable();
            s
        })
        .collect();
    for s in &simplexes {
        if !full_dimensional(d, s) || !contains_exact(d, s, x) {
            return Err(Error::BadParams(format!("constructed simplex {s:?} does not contain the point")));
        }
    }
    Ok(ChainConstruction { i_star, c, base_chain, epsilons, simplexes })
}

/// Exact barycentric containment of `x` in the cube simplex `s`.
pub fn contains_exact(d: usize, s: &[u32], x: &[Rational]) -> bool {
    let pts: Vec<Vec<Rational>> = s.iter().map(|&v| cube_point(d, v)).collect();
    let refs: Vec<&[Rational]> = pts.iter().map(Vec::as_slice).collect();
    simplex_contains_exact(&refs, x)
}

/// Maps an arbitrary point of `[0,1]^d` into the sorted half cube by
/// reflections `x_k -> 1 - x_k` and a coordinate permutation.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfCubeNormalizer {
    /// `order[j]` is the original coordinate placed at sorted position `j`.
    pub order: Vec<usize>,
    pub reflected: Vec<bool>,
}

impl HalfCubeNormalizer {
    pub fn new(x: &[Rational]) -> Result<(Self, Vec<Rational>)> {
        check_unit_cube(x)?;
        let half = Rational::new(1.into(), 2.into());
        let reflected: Vec<bool> = x.iter().map(|v| *v > half).collect();
        let folded: Vec<Rational> =
            x.iter().zip(&reflected).map(|(v, &r)| if r { integer(1) - v } else { v.clone() }).collect();
        let order: Vec<usize> = (0..x.len()).sorted_by(|&a, &b| folded[a].cmp(&folded[b]).then(a.cmp(&b))).collect();
        let y = order.iter().map(|&k| folded[k].clone()).collect();
        Ok((HalfCubeNormalizer { order, reflected }, y))
    }

    /// Maps a vertex of the normalized cube back to original coordinates.
    pub fn restore(&self, v: u32) -> u32 {
        let mut out = 0u32;
        for (j, &k) in self.order.iter().enumerate() {
            let bit = ((v >> j) & 1) ^ u32::from(self.reflected[k]);
            out |= bit << k;
        }
        out
    }
}

/// [`lower_bound_family`] for any point of `[0,1]^d`, returned in original
/// coordinates.
pub fn lower_bound_family_any(x: &[Rational]) -> Result<Vec<Vec<u32>>> {
    let (norm, y) = HalfCubeNormalizer::new(x)?;
    let fam = lower_bound_family(&y)?;
    let d = x.len();
    let out: Vec<Vec<u32>> = fam
        .simplexes
        .iter()
        .map(|s| s.iter().map(|&v| norm.restore(v)).sorted().collect())
        .collect();
    for s in &out {
        if !contains_exact(d, s, x) {
            return Err(Error::BadParams(format!("restored simplex {s:?} does not contain the point")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rational;
    use proptest::prelude::*;

    fn q(v: &[(i64, i64)]) -> Vec<Rational> {
        v.iter().map(|&(n, d)| rational(n, d)).collect()
    }

    #[test]
    fn small_censuses() {
        let c2 = enumerate_cube_simplexes(2).unwrap();
        assert_eq!((c2.len(), c2.degenerate), (4, 0));
        let c3 = enumerate_cube_simplexes(3).unwrap();
        assert_eq!((c3.len(), c3.degenerate), (58, 12));
        assert_eq!(
            c3.type_counts(),
            vec![(TetraType::Corner, 8), (TetraType::Regular, 2), (TetraType::Type3, 24), (TetraType::Type4, 24)]
        );
        assert!(enumerate_cube_simplexes(6).is_err());
        let json = serde_json::to_value(&c3).unwrap();
        assert_eq!(json["count"], 58);
        assert_eq!(json["simplexes"][0]["vertices"][0], serde_json::json!([0, 0, 0]));
    }

    #[test]
    fn regular_tetrahedra_are_tagged() {
        let c3 = enumerate_cube_simplexes(3).unwrap();
        let regular: Vec<Vec<u32>> = c3
            .simplexes
            .iter()
            .filter(|s| s.type_tag == Some(TetraType::Regular))
            .map(|s| s.vertices.clone())
            .collect();
        let mut t1 = T1.to_vec();
        t1.sort();
        let mut t2 = T2.to_vec();
        t2.sort();
        assert!(regular.contains(&t1) && regular.contains(&t2));
    }

    #[test]
    fn fourteen_cutting_planes() {
        let planes = cutting_planes(3).unwrap();
        assert_eq!(planes.len(), 14);
        assert_eq!(planes.iter().filter(|(_, on)| *on == 4).count(), 6);
        assert_eq!(planes.iter().filter(|(_, on)| *on == 3).count(), 8);
        assert!(planes.contains(&(Plane { normal: vec![1, 1, 1], offset: 1 }, 3)));
        assert!(planes.contains(&(Plane { normal: vec![1, -1, 0], offset: 0 }, 4)));
    }

    #[test]
    fn region_count_examples() {
        let a = q(&[(3, 10), (4, 10), (45, 100)]);
        assert_eq!(classify_point_3d(&a).unwrap(), Region3::T1AndT2);
        assert_eq!(count_containing(&a).unwrap(), 14);
        let b = q(&[(5, 100), (12, 100), (20, 100)]);
        assert_eq!(classify_point_3d(&b).unwrap(), Region3::Neither);
        assert_eq!(count_containing(&b).unwrap(), 8);
        let centre = q(&[(1, 2), (1, 2), (1, 2)]);
        assert_eq!(count_containing(&centre).unwrap(), 50);
        assert_eq!(classify_point_3d(&centre).unwrap(), Region3::Boundary);
        // on the planes x = y = z
        assert_eq!(classify_point_3d(&q(&[(1, 4), (1, 4), (1, 4)])).unwrap(), Region3::Boundary);
        // inside T1 only
        let c = q(&[(1, 4), (3, 10), (1, 5)]);
        assert_eq!(classify_point_3d(&c).unwrap(), Region3::T1Only);
        assert_eq!(count_containing(&c).unwrap(), 11);
    }

    #[test]
    fn chain_examples() {
        let f = lower_bound_family(&q(&[(2, 10), (3, 10)])).unwrap();
        assert_eq!(f.simplexes, vec![vec![0b00, 0b10, 0b11]]);
        let x4 = q(&[(1, 10), (2, 10), (3, 10), (4, 10)]);
        let f4 = lower_bound_family(&x4).unwrap();
        assert_eq!(f4.simplexes.len(), 4);
        assert!(f4.simplexes.contains(&f4.base_chain.iter().copied().sorted().collect::<Vec<_>>()));
        assert!(count_containing(&x4).unwrap() >= 4);
        assert!(matches!(lower_bound_family(&q(&[(3, 10), (2, 10)])), Err(Error::NotInHalfCube(_))));
        assert!(matches!(lower_bound_family(&q(&[(1, 10), (6, 10)])), Err(Error::NotInHalfCube(_))));
        assert!(matches!(lower_bound_family(&q(&[(1, 10), (1, 2)])), Err(Error::NotInHalfCube(_))));
        // ties and zeros are closed limits of generic points
        let tied = lower_bound_family(&q(&[(0, 1), (1, 4), (1, 4)])).unwrap();
        assert_eq!(tied.simplexes.len(), 2);
    }

    #[test]
    fn normalizer_round_trip() {
        let x = q(&[(9, 10), (1, 5), (7, 10)]);
        let fam = lower_bound_family_any(&x).unwrap();
        assert_eq!(fam.len(), 2);
        let census = cached_census(3).unwrap();
        for s in fam {
            assert!(census.simplexes.iter().any(|c| c.vertices == s));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn counts_match_regions(a in 1i64..997, b in 1i64..997, c in 1i64..997) {
            let x = q(&[(a, 997), (b, 997), (c, 997)]);
            let region = classify_point_3d(&x).unwrap();
            if let Some(n) = region.expected_count() {
                prop_assert_eq!(count_containing(&x).unwrap(), n);
            }
        }

        #[test]
        fn counts_are_symmetric(a in 0i64..=60, b in 0i64..=60, c in 0i64..=60, perm in 0usize..6) {
            let x = q(&[(a, 60), (b, 60), (c, 60)]);
            let n = count_containing(&x).unwrap();
            let reflected: Vec<Rational> = x.iter().map(|v| integer(1) - v).collect();
            prop_assert_eq!(count_containing(&reflected).unwrap(), n);
            let p: Vec<usize> = (0..3).permutations(3).nth(perm).unwrap();
            let permuted: Vec<Rational> = p.iter().map(|&k| x[k].clone()).collect();
            prop_assert_eq!(count_containing(&permuted).unwrap(), n);
        }
    }
}

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::Serialize;

use super::{best_member, near_ties, superreplicate_points, Side};
use crate::error::{Error, Result};
use crate::geometry::{enumerate_simplexes, MoveSet, RiskNeutralVertex, Simplex, SimplexFamily};
use crate::linalg::solve;
use crate::payoffs::Payoff;
use crate::submodular::{chi_l, chi_minus, classify_modularity, CubeEmbedding, Modularity, SetFunction};

/// Reachable partial sums `R_0 = {0}`, `R_{n+1} = R_n + χ`, keyed by exact
/// integer coordinates (sums scaled by the move set's common denominator).
#[derive(Debug)]
pub struct StateLattice {
    dim: usize,
    moves: usize,
    denom: i64,
    layers: Vec<Vec<Vec<i64>>>,
    /// `children[n][j * l + i]` is the layer `n+1` index of node `j` plus move `i`.
    children: Vec<Vec<u32>>,
}

impl StateLattice {
    pub fn build(m: &MoveSet, depth: usize) -> Self {
        let d = m.dim();
        let l = m.len();
        let mut layers = vec![vec![vec![0i64; d]]];
        let mut children = Vec::with_capacity(depth);
        for n in 0..depth {
            let current = &layers[n];
            let mut next: Vec<Vec<i64>> = current
                .iter()
                .flat_map(|s| {
                    (0..l).map(move |i| s.iter().zip(m.lattice_point(i)).map(|(a, b)| a + b).collect())
                })
                .collect();
            next.sort_unstable();
            next.dedup();
            let index: HashMap<&[i64], u32> =
                next.iter().enumerate().map(|(k, s)| (s.as_slice(), k as u32)).collect();
            let kids: Vec<u32> = current
                .iter()
                .flat_map(|s| {
                    let index = &index;
                    (0..l).map(move |i| {
                        let key: Vec<i64> = s.iter().zip(m.lattice_point(i)).map(|(a, b)| a + b).collect();
                        index[key.as_slice()]
                    })
                })
                .collect();
            drop(index);
            children.push(kids);
            layers.push(next);
        }
        StateLattice { dim: d, moves: l, denom: m.denominator(), layers, children }
    }

    pub fn depth(&self) -> usize {
        self.children.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn moves(&self) -> usize {
        self.moves
    }

    pub fn layer_len(&self, n: usize) -> usize {
        self.layers[n].len()
    }

    pub fn layer_sizes(&self, upto: usize) -> Vec<usize> {
        (0..=upto).map(|n| self.layers[n].len()).collect()
    }

    /// Integer key of node `j` in layer `n`.
    pub fn key(&self, n: usize, j: usize) -> &[i64] {
        &self.layers[n][j]
    }

    pub fn state(&self, n: usize, j: usize) -> Vec<f64> {
        self.layers[n][j].iter().map(|&v| v as f64 / self.denom as f64).collect()
    }

    pub fn index_of(&self, n: usize, key: &[i64]) -> Option<usize> {
        self.layers[n].binary_search_by(|s| s.as_slice().cmp(key)).ok()
    }

    #[inline]
    pub fn child(&self, n: usize, j: usize, i: usize) -> usize {
        self.children[n][j * self.moves + i] as usize
    }

    #[inline]
    pub fn children_of(&self, n: usize, j: usize) -> &[u32] {
        &self.children[n][j * self.moves..(j + 1) * self.moves]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FastPathMode {
    /// Use a fixed simplex when the declared structure allows it; nodes that
    /// fail certification fall back to the full search.
    #[default]
    Auto,
    Off,
    /// As `Auto`, but a failed certification is an error.
    Strict,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct InductionOptions {
    pub fast_path: FastPathMode,
    pub strategy: bool,
    pub record_choices: bool,
}

impl InductionOptions {
    pub fn with_fast_path(mut self, mode: FastPathMode) -> Self {
        self.fast_path = mode;
        self
    }

    pub fn with_strategy(mut self) -> Self {
        self.strategy = true;
        self
    }

    pub fn with_choices(mut self) -> Self {
        self.record_choices = true;
        self
    }
}

/// Per-node capital and holdings. For the lower side the strategy hedges
/// `-f` starting from `-lower`.
#[derive(Clone, Debug)]
pub struct Strategy {
    pub side: Side,
    pub rounds: usize,
    pub lattice: Arc<StateLattice>,
    pub points: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub holdings: Vec<Vec<Vec<f64>>>,
    /// Nodes where the simplex hyperplane did not dominate every move and an
    /// LP solve was used instead.
    pub lp_fallbacks: usize,
}

#[derive(Clone, Debug)]
pub struct Induction {
    pub side: Side,
    pub rounds: usize,
    pub value: f64,
    pub fast_simplex: Option<Simplex>,
    pub certification_failures: usize,
    pub root_argmax: Simplex,
    pub root_near_ties: Vec<Simplex>,
    pub layer_sizes: Vec<usize>,
    /// Values per layer, for the side's sign convention undone.
    pub values: Vec<Vec<f64>>,
    /// Chosen family member per node, when recorded.
    pub choices: Option<Vec<Vec<u32>>>,
    pub strategy: Option<Strategy>,
}

impl Induction {
    pub fn fast_path_used(&self) -> bool {
        self.fast_simplex.is_some()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PriceReport {
    pub rounds: usize,
    pub upper: f64,
    pub lower: f64,
    pub fast_path_used: bool,
    pub fast_simplex_upper: Option<Simplex>,
    pub fast_simplex_lower: Option<Simplex>,
    pub certification_failures: usize,
    pub argmax_upper: Simplex,
    pub argmax_lower: Simplex,
    pub near_ties_upper: Vec<Simplex>,
    pub near_ties_lower: Vec<Simplex>,
    pub gamma_size: usize,
    pub lattice_sizes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_round: Option<Vec<SeriesRow>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub upper: f64,
    pub lower: f64,
    pub fast_path_used: bool,
}

struct FixedSimplex {
    member: usize,
    corners: Vec<usize>,
    required: Modularity,
}

struct NodeOut {
    value: f64,
    member: u32,
    failed: bool,
    hedge: Option<(f64, Vec<f64>, bool)>,
}

/// Pricing context for one move set: its simplex family, cube embedding and
/// a lattice cache shared across round counts.
pub struct Pricer {
    m: MoveSet,
    fam: SimplexFamily,
    emb: Option<CubeEmbedding>,
    points: Vec<Vec<f64>>,
    lattice: Mutex<Option<Arc<StateLattice>>>,
}

impl Pricer {
    pub fn new(m: &MoveSet) -> Self {
        Pricer {
            fam: enumerate_simplexes(m),
            emb: CubeEmbedding::from_move_set(m).ok(),
            points: (0..m.len()).map(|i| m.point_f64(i)).collect(),
            m: m.clone(),
            lattice: Mutex::new(None),
        }
    }

    pub fn move_set(&self) -> &MoveSet {
        &self.m
    }

    pub fn family(&self) -> &SimplexFamily {
        &self.fam
    }

    pub fn lattice(&self, depth: usize) -> Arc<StateLattice> {
        let mut guard = self.lattice.lock().expect("lattice cache poisoned");
        match guard.as_ref() {
            Some(l) if l.depth() >= depth => l.clone(),
            _ => {
                let l = Arc::new(StateLattice::build(&self.m, depth));
                *guard = Some(l.clone());
                l
            }
        }
    }

    /// The fixed simplex for the upper price of a claim whose declared class
    /// (after the side's sign flip) is `class`.
    fn fixed_simplex(&self, class: Modularity) -> Option<FixedSimplex> {
        let emb = self.emb.as_ref()?;
        let corners = emb.corner_indices(&self.m).ok()?;
        let (simplex, required) = match class {
            Modularity::Supermodular | Modularity::Modular => (chi_l(emb, &self.m).ok()?, Modularity::Supermodular),
            Modularity::Submodular if self.m.dim() == 2 => {
                (chi_minus(emb, &self.m, &self.fam).ok()?, Modularity::Submodular)
            }
            _ => return None,
        };
        Some(FixedSimplex { member: self.fam.position(&simplex)?, corners, required })
    }

    /// The family member the fast path fixes for `side`, when the declared
    /// modularity selects one.
    pub fn structural_member(&self, p: &Payoff, side: Side) -> Option<&RiskNeutralVertex> {
        let class = p.declared.modularity?;
        let fixed = self.fixed_simplex(if side == Side::Lower { class.flipped() } else { class })?;
        Some(&self.fam.members[fixed.member])
    }

    pub fn induction(&self, p: &Payoff, rounds: usize, side: Side, opts: InductionOptions) -> Result<Induction> {
        if rounds == 0 {
            return Err(Error::BadParams("at least one round is required".into()));
        }
        p.check_dim(self.m.dim())?;
        let lattice = self.lattice(rounds);
        let sign = side.sign();

        let fixed = match opts.fast_path {
            FastPathMode::Off => None,
            _ => p.declared.modularity.and_then(|c| {
                self.fixed_simplex(if side == Side::Lower { c.flipped() } else { c })
            }),
        };

        let terminal: Vec<f64> = (0..lattice.layer_len(rounds))
            .into_par_iter()
            .map(|j| sign * p.evaluate(&lattice.state(rounds, j), rounds))
            .collect();
        if terminal.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParams("payoff is not finite on the terminal lattice".into()));
        }

        let mut values = vec![Vec::new(); rounds + 1];
        values[rounds] = terminal;
        let mut choices = opts.record_choices.then(|| vec![Vec::new(); rounds]);
        let mut alpha = vec![Vec::new(); rounds];
        let mut holdings = vec![Vec::new(); rounds];
        let mut failures = 0usize;
        let mut lp_fallbacks = 0usize;

        for n in (0..rounds).rev() {
            let next = &values[n + 1];
            let out: Vec<NodeOut> = (0..lattice.layer_len(n))
                .into_par_iter()
                .map(|j| {
                    let v: Vec<f64> = lattice.children_of(n, j).iter().map(|&c| next[c as usize]).collect();
                    self.node(&v, fixed.as_ref(), opts.strategy)
                })
                .collect();
            if let Some(bad) = out.iter().position(|o| o.failed) {
                if opts.fast_path == FastPathMode::Strict {
                    return Err(Error::StructureCertificationFailed { layer: n, node: bad });
                }
            }
            failures += out.iter().filter(|o| o.failed).count();
            values[n] = out.iter().map(|o| o.value).collect();
            if let Some(ch) = choices.as_mut() {
                ch[n] = out.iter().map(|o| o.member).collect();
            }
            if opts.strategy {
                for o in &out {
                    let (a, h, lp) = o.hedge.clone().expect("strategy requested");
                    alpha[n].push(a);
                    holdings[n].push(h);
                    lp_fallbacks += usize::from(lp);
                }
            }
        }

        let root_children: Vec<f64> = lattice.children_of(0, 0).iter().map(|&c| values[1][c as usize]).collect();
        let ties = near_ties(&self.fam, &root_children, values[0][0]);
        let root_argmax = match &fixed {
            Some(f) if failures == 0 => self.fam.members[f.member].simplex.clone(),
            _ => self.fam.members[ties.first().copied().unwrap_or(0)].simplex.clone(),
        };
        let strategy = opts.strategy.then(|| Strategy {
            side,
            rounds,
            lattice: lattice.clone(),
            points: self.points.clone(),
            alpha,
            holdings,
            lp_fallbacks,
        });
        Ok(Induction {
            side,
            rounds,
            value: sign * values[0][0],
            fast_simplex: fixed.map(|f| self.fam.members[f.member].simplex.clone()),
            certification_failures: failures,
            root_argmax,
            root_near_ties: ties.iter().map(|&k| self.fam.members[k].simplex.clone()).collect(),
            layer_sizes: lattice.layer_sizes(rounds),
            values: values.into_iter().map(|layer| layer.into_iter().map(|v| sign * v).collect()).collect(),
            choices,
            strategy,
        })
    }

    fn node(&self, v: &[f64], fixed: Option<&FixedSimplex>, hedge: bool) -> NodeOut {
        let mut failed = false;
        let mut pick = None;
        if let Some(f) = fixed {
            let f0 = SetFunction::new(self.m.dim(), f.corners.iter().map(|&c| v[c]).collect());
            let class = f0.map(|t| classify_modularity(&t)).unwrap_or(Modularity::Neither);
            let certified = match f.required {
                Modularity::Submodular => class.is_submodular(),
                _ => class.is_supermodular(),
            };
            if certified {
                pick = Some((self.fam.members[f.member].expectation(v), f.member));
            } else {
                failed = true;
            }
        }
        let (value, member) = pick.unwrap_or_else(|| best_member(&self.fam, v));
        let hedge = hedge.then(|| self.hedge(v, member, value));
        NodeOut { value, member: member as u32, failed, hedge }
    }

    /// Solves `α + M·a = v(a)` on the chosen simplex; falls back to the LP
    /// when that hyperplane misses a move.
    fn hedge(&self, v: &[f64], member: usize, value: f64) -> (f64, Vec<f64>, bool) {
        let d = self.m.dim();
        let n = d + 1;
        let verts = &self.fam.members[member].simplex.vertices;
        let mut a = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for (r, &i) in verts.iter().enumerate() {
            a[r * n] = 1.0;
            a[r * n + 1..(r + 1) * n].copy_from_slice(&self.points[i]);
            rhs[r] = v[i];
        }
        let scale = 1.0 + v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if let Some(sol) = solve(&a, &rhs, n) {
            let dominates = self.points.iter().zip(v).all(|(p, &fv)| {
                sol[0] + sol[1..].iter().zip(p).map(|(h, x)| h * x).sum::<f64>() >= fv - 1e-10 * scale
            });
            if dominates && (sol[0] - value).abs() <= 1e-9 * scale {
                return (sol[0], sol[1..].to_vec(), false);
            }
        }
        match superreplicate_points(&self.points, v) {
            Ok((alpha, h)) => (alpha, h, true),
            // keep the node value; verification will expose any shortfall
            Err(_) => (value, vec![0.0; d], true),
        }
    }

    /// Upper and lower prices for `rounds` rounds.
    pub fn price(&self, p: &Payoff, rounds: usize, opts: InductionOptions) -> Result<PriceReport> {
        let up = self.induction(p, rounds, Side::Upper, opts)?;
        let lo = self.induction(p, rounds, Side::Lower, opts)?;
        Ok(PriceReport {
            rounds,
            upper: up.value,
            lower: lo.value,
            fast_path_used: up.fast_path_used() || lo.fast_path_used(),
            fast_simplex_upper: up.fast_simplex.clone(),
            fast_simplex_lower: lo.fast_simplex.clone(),
            certification_failures: up.certification_failures + lo.certification_failures,
            argmax_upper: up.root_argmax,
            argmax_lower: lo.root_argmax,
            near_ties_upper: up.root_near_ties,
            near_ties_lower: lo.root_near_ties,
            gamma_size: self.fam.len(),
            lattice_sizes: up.layer_sizes,
            per_round: None,
        })
    }

    pub fn series(&self, p: &Payoff, rounds: &[usize], opts: InductionOptions) -> Result<Vec<SeriesRow>> {
        if let Some(&max) = rounds.iter().max() {
            self.lattice(max);
        }
        rounds
            .iter()
            .map(|&n| {
                let r = self.price(p, n, opts)?;
                Ok(SeriesRow { n, upper: r.upper, lower: r.lower, fast_path_used: r.fast_path_used })
            })
            .collect()
    }
}

/// One-shot backward induction for a single side.
pub fn backward_induction(
    m: &MoveSet,
    p: &Payoff,
    rounds: usize,
    side: Side,
    opts: InductionOptions,
) -> Result<Induction> {
    Pricer::new(m).induction(p, rounds, side, opts)
}

/// Upper and lower prices for each round count in `rounds`.
pub fn convergence_series(m: &MoveSet, p: &Payoff, rounds: &[usize], opts: InductionOptions) -> Result<Vec<SeriesRow>> {
    Pricer::new(m).series(p, rounds, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::integer;
    use crate::payoffs::{Butterfly, Scaling};

    #[test]
    fn lattice_growth() {
        let lat = StateLattice::build(&MoveSet::chi1(), 4);
        assert_eq!(lat.layer_sizes(4), vec![1, 4, 9, 16, 25]);
        let cross = StateLattice::build(&MoveSet::chi2(), 3);
        assert_eq!(cross.layer_sizes(3), vec![1, 4, 9, 16]);
        let half = MoveSet::product(&[vec![crate::geometry::rational(-1, 2), integer(1)]]).unwrap();
        let lat = StateLattice::build(&half, 3);
        assert_eq!(lat.layer_sizes(3), vec![1, 2, 3, 4]);
        assert_eq!(lat.state(3, 0), vec![-1.5]);
        let j = lat.index_of(2, &[1]).unwrap();
        assert_eq!(lat.state(2, j), vec![0.5]);
    }

    #[test]
    fn complete_market_is_priced_exactly() {
        let m = MoveSet::from_integers(&[vec![1, 0], vec![0, 1], vec![-1, -1]]).unwrap();
        let p = Payoff::max_call(0.5).unwrap();
        let pr = Pricer::new(&m).price(&p, 4, InductionOptions::default()).unwrap();
        assert!((pr.upper - pr.lower).abs() < 1e-12);
    }

    #[test]
    fn fast_and_full_paths_agree_on_catalog() {
        let m = MoveSet::chi1();
        let pricer = Pricer::new(&m);
        for p in [Payoff::max_call(1.0).unwrap(), Payoff::min_call(1.0).unwrap()] {
            let p = p.with_scaling(Scaling::SqrtN);
            for side in [Side::Upper, Side::Lower] {
                let fast = pricer.induction(&p, 6, side, InductionOptions::default().with_fast_path(FastPathMode::Strict)).unwrap();
                let full = pricer.induction(&p, 6, side, InductionOptions::default().with_fast_path(FastPathMode::Off)).unwrap();
                assert!(fast.fast_path_used());
                assert_eq!(fast.certification_failures, 0);
                for (a, b) in fast.values.iter().flatten().zip(full.values.iter().flatten()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn wrong_declaration_is_caught() {
        let m = MoveSet::chi1();
        let cone = Payoff::cone().with_scaling(Scaling::SqrtN);
        let lying = cone.clone().with_modularity(Some(Modularity::Supermodular));
        let pricer = Pricer::new(&m);
        let strict = InductionOptions::default().with_fast_path(FastPathMode::Strict);
        let err = pricer.induction(&lying, 4, Side::Upper, strict);
        assert!(matches!(err, Err(Error::StructureCertificationFailed { .. })));
        let auto = pricer.induction(&lying, 4, Side::Upper, InductionOptions::default()).unwrap();
        let full = pricer.induction(&cone, 4, Side::Upper, InductionOptions::default()).unwrap();
        assert!(auto.certification_failures > 0);
        assert!((auto.value - full.value).abs() < 1e-12);
    }

    #[test]
    fn separable_claim_on_product_set_is_complete() {
        let p = Payoff::double_butterfly(Butterfly::default(), 2).unwrap().with_scaling(Scaling::SqrtN);
        let pricer = Pricer::new(&MoveSet::chi1());
        for n in 1..=6 {
            let r = pricer.price(&p, n, InductionOptions::default()).unwrap();
            assert!((r.upper - r.lower).abs() < 1e-9, "N={n}");
        }
    }

    #[test]
    fn monotone_and_translation_equivariant() {
        let m = MoveSet::chi2();
        let pricer = Pricer::new(&m);
        let f = Payoff::max_call(0.5).unwrap();
        let g = Payoff::custom("max+1", |s: &[f64]| (s[0].max(s[1]) - 0.5).max(0.0) + 1.0);
        let h = Payoff::custom("max+sq", |s: &[f64]| (s[0].max(s[1]) - 0.5).max(0.0) + 0.1 * s[0] * s[0]);
        let o = InductionOptions::default();
        let vf = pricer.induction(&f, 4, Side::Upper, o).unwrap().value;
        assert!((pricer.induction(&g, 4, Side::Upper, o).unwrap().value - vf - 1.0).abs() < 1e-12);
        assert!(pricer.induction(&h, 4, Side::Upper, o).unwrap().value >= vf);
        assert!(pricer.induction(&f, 4, Side::Lower, o).unwrap().value <= vf);
    }
}

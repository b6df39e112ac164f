//! European payoff functions: the option catalog, piecewise-linear tables,
//! and user closures, each with an optional declared structure that the
//! pricing fast paths certify before use.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::submodular::{lovasz_chain, Modularity};

/// How the terminal sum is fed to the payoff.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    /// `F(S_N)`.
    #[default]
    None,
    /// `F(S_N / sqrt(N))`.
    SqrtN,
}

/// Breakpoints `a < b < c` of a butterfly spread: zero outside `[a, c]`,
/// peak `b - a` at `b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Butterfly {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
}

impl Default for Butterfly {
    fn default() -> Self {
        Butterfly { lower: -0.5, middle: 0.5, upper: 1.5 }
    }
}

impl Butterfly {
    pub fn new(lower: f64, middle: f64, upper: f64) -> Result<Self> {
        if !(lower < middle && middle < upper) || ![lower, middle, upper].iter().all(|v| v.is_finite()) {
            return Err(Error::BadParams(format!(
                "butterfly breakpoints must be finite and increasing, got {lower}, {middle}, {upper}"
            )));
        }
        Ok(Butterfly { lower, middle, upper })
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        let Butterfly { lower: a, middle: b, upper: c } = *self;
        let slope_down = (b - a) / (c - b);
        (s - a).max(0.0) - (1.0 + slope_down) * (s - b).max(0.0) + slope_down * (s - c).max(0.0)
    }
}

/// Piecewise-linear payoff on a regular grid. Inside each cell the value is
/// the Lovász extension of the cell's corner values, which is continuous
/// across cells. Points outside the grid are clamped onto it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseTable {
    pub origin: Vec<f64>,
    pub step: Vec<f64>,
    /// Number of grid nodes per axis (at least 2).
    pub shape: Vec<usize>,
    /// Node values, last axis varying fastest.
    pub values: Vec<f64>,
}

impl PiecewiseTable {
    pub fn validate(&self) -> Result<()> {
        let d = self.origin.len();
        if d == 0 || self.step.len() != d || self.shape.len() != d {
            return Err(Error::BadParams("table origin, step and shape must share a nonzero length".into()));
        }
        if self.shape.iter().any(|&n| n < 2) || self.step.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::BadParams("table needs at least 2 nodes and a positive step per axis".into()));
        }
        let total: usize = self.shape.iter().product();
        if self.values.len() != total || self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadParams(format!("table needs {total} finite values")));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = self.origin.len();
        let mut cell = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for k in 0..d {
            let u = ((x[k] - self.origin[k]) / self.step[k]).clamp(0.0, (self.shape[k] - 1) as f64);
            let i = (u.floor() as usize).min(self.shape[k] - 2);
            cell[k] = i;
            frac[k] = u - i as f64;
        }
        let chain = lovasz_chain(&frac);
        chain
            .sets
            .iter()
            .zip(&chain.weights)
            .map(|(&mask, &w)| {
                let flat = (0..d).fold(0usize, |acc, k| {
                    acc * self.shape[k] + cell[k] + ((mask >> k) & 1)
                });
                w * self.values[flat]
            })
            .sum()
    }
}

pub type PayoffFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PayoffKind {
    /// `(max_k s_k - K)_+`.
    MaxCall { strike: f64 },
    /// `(min_k s_k - K)_+`.
    MinCall { strike: f64 },
    /// Two-asset ridge: a butterfly in `s_1` whose support shrinks with `|s_2|`.
    Cone,
    /// One-asset butterfly spread.
    Butterfly(Butterfly),
    /// `Σ_k g(s_k)` for a butterfly `g`.
    DoubleButterfly(Butterfly),
    /// `w · s`.
    Linear { weights: Vec<f64> },
    Table(PiecewiseTable),
    Custom { name: String, f: PayoffFn },
}

impl fmt::Debug for PayoffKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffKind::MaxCall { strike } => write!(f, "MaxCall(K={strike})"),
            PayoffKind::MinCall { strike } => write!(f, "MinCall(K={strike})"),
            PayoffKind::Cone => f.write_str("Cone"),
            PayoffKind::Butterfly(b) => write!(f, "Butterfly({b:?})"),
            PayoffKind::DoubleButterfly(b) => write!(f, "DoubleButterfly({b:?})"),
            PayoffKind::Linear { weights } => write!(f, "Linear({weights:?})"),
            PayoffKind::Table(t) => write!(f, "Table(shape={:?})", t.shape),
            PayoffKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// A block decomposition `F(s) = Σ_k f_k(s_{A_k})`.
#[derive(Clone, Debug)]
pub struct SeparablePartition {
    pub blocks: Vec<Vec<usize>>,
    /// `components[k]` takes the coordinates of `blocks[k]` in order.
    pub components: Vec<Payoff>,
}

impl SeparablePartition {
    pub fn new(d: usize, blocks: Vec<Vec<usize>>, components: Vec<Payoff>) -> Result<Self> {
        if blocks.len() != components.len() {
            return Err(Error::BadParams("one component per block required".into()));
        }
        let mut seen = vec![false; d];
        for &i in blocks.iter().flatten() {
            if i >= d || std::mem::replace(&mut seen[i], true) {
                return Err(Error::BadParams(format!("blocks must partition 0..{d}")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::BadParams(format!("blocks must partition 0..{d}")));
        }
        for (b, c) in blocks.iter().zip(&components) {
            if c.dim().is_some_and(|cd| cd != b.len()) {
                return Err(Error::DimensionMismatch { expected: b.len(), got: c.dim().unwrap() });
            }
        }
        Ok(SeparablePartition { blocks, components })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.blocks
            .iter()
            .zip(&self.components)
            .map(|(b, c)| c.value(&b.iter().map(|&i| x[i]).collect::<Vec<_>>()))
            .sum()
    }
}

/// Structural claims about a payoff. Fast paths certify these before use.
#[derive(Clone, Debug, Default)]
pub struct DeclaredStructure {
    pub modularity: Option<Modularity>,
    pub convex: bool,
    pub separable: Option<SeparablePartition>,
}

#[derive(Clone, Debug)]
pub struct Payoff {
    pub kind: PayoffKind,
    pub scaling: Scaling,
    pub declared: DeclaredStructure,
}

impl Payoff {
    pub fn new(kind: PayoffKind) -> Result<Self> {
        let declared = match &kind {
            PayoffKind::MaxCall { strike } | PayoffKind::MinCall { strike } if !strike.is_finite() => {
                return Err(Error::BadParams("strike must be finite".into()));
            }
            PayoffKind::MaxCall { .. } => DeclaredStructure {
                modularity: Some(Modularity::Submodular),
                convex: true,
                separable: None,
            },
            PayoffKind::MinCall { .. } => DeclaredStructure {
                modularity: Some(Modularity::Supermodular),
                ..Default::default()
            },
            PayoffKind::Butterfly(b) | PayoffKind::DoubleButterfly(b) => {
                Butterfly::new(b.lower, b.middle, b.upper)?;
                DeclaredStructure::default()
            }
            PayoffKind::Linear { weights } => {
                if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::BadParams("linear weights must be finite and nonempty".into()));
                }
                let separable = if weights.len() > 1 {
                    let comps = weights
                        .iter()
                        .map(|&w| Payoff::new(PayoffKind::Linear { weights: vec![w] }))
                        .collect::<Result<Vec<_>>>()?;
                    Some(SeparablePartition::new(
                        weights.len(),
                        (0..weights.len()).map(|k| vec![k]).collect(),
                        comps,
                    )?)
                } else {
                    None
                };
                DeclaredStructure { modularity: Some(Modularity::Modular), convex: true, separable }
            }
            PayoffKind::Table(t) => {
                t.validate()?;
                DeclaredStructure::default()
            }
            PayoffKind::Cone | PayoffKind::Custom { .. } => DeclaredStructure::default(),
        };
        Ok(Payoff { kind, scaling: Scaling::None, declared })
    }

    pub fn max_call(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::MaxCall { strike })
    }

    pub fn min_call(strike: f64) -> Result<Self> {
        Self::new(PayoffKind::MinCall { strike })
    }

    pub fn cone() -> Self {
        Self::new(PayoffKind::Cone).expect("cone takes no parameters")
    }

    pub fn butterfly(b: Butterfly) -> Result<Self> {
        Self::new(PayoffKind::Butterfly(b))
    }

    /// `g(s_1) + … + g(s_d)`, declared separable with singleton blocks.
    pub fn double_butterfly(b: Butterfly, d: usize) -> Result<Self> {
        let mut p = Self::new(PayoffKind::DoubleButterfly(b))?;
        let comps = vec![Self::butterfly(b)?; d];
        p.declared.separable = Some(SeparablePartition::new(d, (0..d).map(|k| vec![k]).collect(), comps)?);
        Ok(p)
    }

    pub fn linear(weights: Vec<f64>) -> Result<Self> {
        Self::new(PayoffKind::Linear { weights })
    }

    pub fn table(t: PiecewiseTable) -> Result<Self> {
        Self::new(PayoffKind::Table(t))
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Payoff {
            kind: PayoffKind::Custom { name: name.into(), f: Arc::new(f) },
            scaling: Scaling::None,
            declared: DeclaredStructure::default(),
        }
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn with_modularity(mut self, m: Option<Modularity>) -> Self {
        self.declared.modularity = m;
        self
    }

    pub fn with_convex(mut self, convex: bool) -> Self {
        self.declared.convex = convex;
        self
    }

    pub fn with_separable(mut self, part: SeparablePartition) -> Self {
        self.declared.separable = Some(part);
        self
    }

    /// Fixed input dimension, if the kind has one.
    pub fn dim(&self) -> Option<usize> {
        match &self.kind {
            PayoffKind::Cone => Some(2),
            PayoffKind::Butterfly(_) => Some(1),
            PayoffKind::Linear { weights } => Some(weights.len()),
            PayoffKind::Table(t) => Some(t.origin.len()),
            PayoffKind::DoubleButterfly(_) => self.declared.separable.as_ref().map(|p| p.blocks.len()),
            _ => None,
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(pd) if pd != d => Err(Error::DimensionMismatch { expected: d, got: pd }),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            PayoffKind::MaxCall { .. } => "max_option".into(),
            PayoffKind::MinCall { .. } => "min_option".into(),
            PayoffKind::Cone => "cone".into(),
            PayoffKind::Butterfly(_) => "butterfly".into(),
            PayoffKind::DoubleButterfly(_) => "double_butterfly".into(),
            PayoffKind::Linear { .. } => "linear".into(),
            PayoffKind::Table(_) => "table".into(),
            PayoffKind::Custom { name, .. } => name.clone(),
        }
    }

    /// `F(s)`, ignoring the scaling mode.
    pub fn value(&self, s: &[f64]) -> f64 {
        match &self.kind {
            PayoffKind::MaxCall { strike } => (s.iter().copied().fold(f64::NEG_INFINITY, f64::max) - strike).max(0.0),
            PayoffKind::MinCall { strike } => (s.iter().copied().fold(f64::INFINITY, f64::min) - strike).max(0.0),
            PayoffKind::Cone => cone(s[0], s[1]),
            PayoffKind::Butterfly(b) => b.eval(s[0]),
            PayoffKind::DoubleButterfly(b) => s.iter().map(|&x| b.eval(x)).sum(),
            PayoffKind::Linear { weights } => weights.iter().zip(s).map(|(w, x)| w * x).sum(),
            PayoffKind::Table(t) => t.eval(s),
            PayoffKind::Custom { f, .. } => f(s),
        }
    }

    /// Payoff of the terminal sum `s` after `n` rounds.
    pub fn evaluate(&self, s: &[f64], n: usize) -> f64 {
        match self.scaling {
            Scaling::None => self.value(s),
            Scaling::SqrtN => {
                debug_assert!(n >= 1, "sqrt_n scaling needs at least one round");
                let r = (n.max(1) as f64).sqrt();
                self.value(&s.iter().map(|x| x / r).collect::<Vec<_>>())
            }
        }
    }
}

fn cone(s1: f64, s2: f64) -> f64 {
    let a = s2.abs();
    if s1 < -0.5 + a {
        0.0
    } else if s1 < 0.5 {
        s1 - (-0.5 + a)
    } else if s1 < 1.5 - a {
        (1.5 - a) - s1
    } else {
        0.0
    }
}

/// Returns the declared block decomposition after spot-checking it against
/// the payoff at seeded random points.
pub fn separable_decompose(p: &Payoff, d: usize) -> Result<SeparablePartition> {
    let part = p.declared.separable.clone().ok_or(Error::NotSeparable)?;
    if part.blocks.iter().map(Vec::len).sum::<usize>() != d {
        return Err(Error::DimensionMismatch { expected: d, got: part.blocks.iter().map(Vec::len).sum() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..64 {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-4.0..4.0)).collect();
        let lhs = p.value(&x);
        let rhs = part.eval(&x);
        if (lhs - rhs).abs() > 1e-9 * (1.0 + lhs.abs()) {
            return Err(Error::ValidationFailed { point: x, lhs, rhs });
        }
    }
    Ok(part)
}

/// Midpoint-convexity check on seeded random segments in `[-radius, radius]^d`.
pub fn certify_convex(p: &Payoff, d: usize, radius: f64, samples: usize, seed: u64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-radius..radius)).collect();
        let y: Vec<f64> = (0..d).map(|_| rng.random_range(-radius..radius)).collect();
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let (fx, fy, fm) = (p.value(&x), p.value(&y), p.value(&mid));
        if fm > 0.5 * (fx + fy) + 1e-9 * (1.0 + fx.abs() + fy.abs()) {
            return Err(Error::ConvexityCheckFailed(format!(
                "F(midpoint) = {fm} exceeds the chord mean {} between {x:?} and {y:?}",
                0.5 * (fx + fy)
            )));
        }
    }
    Ok(())
}

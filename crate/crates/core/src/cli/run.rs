//! Command execution: each command turns a resolved config into a JSON
//! report, optional CSV/data files and a short text summary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Command, ResolvedConfig, SideSel};
use super::emit::{emit_convergence, fixed, write_json};
use crate::census::{self, Region3};
use crate::error::{Error, Result};
use crate::geometry::{format_rational, rational, MoveSet, Rational, Simplex};
use crate::payoffs::Payoff;
use crate::pde::{gaussian_price, solve_bsb, CovarianceFamily};
use crate::pricing::{boyle_price, verify_superreplication, Induction, InductionOptions, Pricer, Side};

/// Worst acceptable superreplication slack.
pub const SLACK_TOL: f64 = 1e-9;

#[derive(Debug)]
pub struct RunOutput {
    pub report: Value,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

#[derive(Serialize)]
struct SideResult {
    side: Side,
    value: f64,
    fast_path_used: bool,
    fast_simplex: Option<Simplex>,
    certification_failures: usize,
    argmax: Simplex,
    near_ties: Vec<Simplex>,
}

impl From<&Induction> for SideResult {
    fn from(ind: &Induction) -> Self {
        SideResult {
            side: ind.side,
            value: ind.value,
            fast_path_used: ind.fast_path_used(),
            fast_simplex: ind.fast_simplex.clone(),
            certification_failures: ind.certification_failures,
            argmax: ind.root_argmax.clone(),
            near_ties: ind.root_near_ties.clone(),
        }
    }
}

fn sides(sel: Option<SideSel>) -> Vec<Side> {
    match sel.unwrap_or_default() {
        SideSel::Both => vec![Side::Upper, Side::Lower],
        SideSel::Upper => vec![Side::Upper],
        SideSel::Lower => vec![Side::Lower],
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Upper => "upper",
        Side::Lower => "lower",
    }
}

struct Market {
    m: MoveSet,
    payoff: Payoff,
}

fn market(cfg: &ResolvedConfig, base: &Path) -> Result<Market> {
    let spec = cfg.move_set.as_ref().ok_or_else(|| Error::Config("move_set is required".into()))?;
    let m = spec.load(base)?;
    let payoff = cfg.payoff.as_ref().ok_or_else(|| Error::Config("payoff is required".into()))?.build(m.dim())?;
    Ok(Market { m, payoff })
}

fn options(cfg: &ResolvedConfig) -> InductionOptions {
    InductionOptions::default().with_fast_path(cfg.fast_path.unwrap_or_default())
}

/// Runs the command and writes its files into `out_dir`.
pub fn run(cfg: &ResolvedConfig, base: &Path, out_dir: &Path) -> Result<RunOutput> {
    std::fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    let mut summary = String::new();
    let results = match cfg.command {
        Command::Price => price(cfg, base, &mut summary)?,
        Command::Converge => converge(cfg, base, out_dir, &mut files, &mut summary)?,
        Command::LimitPde => limit_pde(cfg, base, out_dir, &mut files, &mut summary)?,
        Command::LimitGaussian => limit_gaussian(cfg, base, &mut summary)?,
        Command::BoyleSweep => boyle_sweep(cfg, base, out_dir, &mut files, &mut summary)?,
        Command::Census => census_table(cfg, out_dir, &mut files, &mut summary)?,
        Command::StrategyVerify => strategy_verify(cfg, base, &mut summary)?,
    };
    let report = json!({ "command": cfg.command.name(), "config": cfg, "results": results });
    let path = out_dir.join(&cfg.outputs.report);
    write_json(&path, &report)?;
    files.insert(0, path);
    if cfg.command == Command::StrategyVerify && report["results"]["ok"] == Value::Bool(false) {
        return Err(Error::VerificationFailed(format!("a strategy falls short by more than {SLACK_TOL:e}; see the report")));
    }
    Ok(RunOutput { report, files, summary })
}

fn price(cfg: &ResolvedConfig, base: &Path, summary: &mut String) -> Result<Value> {
    let Market { m, payoff } = market(cfg, base)?;
    let n = cfg.n.expect("resolved");
    let pricer = Pricer::new(&m);
    let mut out = Vec::new();
    for side in sides(cfg.side) {
        let ind = pricer.induction(&payoff, n, side, options(cfg))?;
        writeln!(summary, "{} price, N = {n}: {}", side_name(side), fixed(ind.value)).ok();
        out.push(SideResult::from(&ind));
    }
    Ok(json!({
        "gamma_size": pricer.family().len(),
        "lattice_sizes": pricer.lattice(n).layer_sizes(n),
        "sides": out,
    }))
}

fn converge(
    cfg: &ResolvedConfig,
    base: &Path,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<Value> {
    let Market { m, payoff } = market(cfg, base)?;
    let [a, b] = cfg.n_range.expect("resolved");
    let rounds: Vec<usize> = (a..=b).collect();
    let pricer = Pricer::new(&m);
    let series = pricer.series(&payoff, &rounds, options(cfg))?;
    if let Some(csv) = &cfg.outputs.csv {
        let path = out_dir.join(csv);
        emit_convergence(&series, BufWriter::new(File::create(&path)?))?;
        files.push(path);
    }
    let last = series.last().expect("nonempty range");
    writeln!(summary, "N = {}: upper {}, lower {}", last.n, fixed(last.upper), fixed(last.lower)).ok();
    Ok(json!({ "gamma_size": pricer.family().len(), "series": series }))
}

fn limit_pde(
    cfg: &ResolvedConfig,
    base: &Path,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<Value> {
    let Market { m, payoff } = market(cfg, base)?;
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: m.dim() });
    }
    let grid = cfg.grid.expect("resolved");
    let pricer = Pricer::new(&m);
    let fam = CovarianceFamily::from_family(pricer.family())?;
    let mut out = BTreeMap::new();
    for side in sides(cfg.side) {
        let sol = solve_bsb(&fam, |s| payoff.value(s), grid, side)?;
        writeln!(summary, "{} limit: {}", side_name(side), fixed(sol.value)).ok();
        if let Some(data) = &cfg.outputs.data {
            let path = out_dir.join(format!("{}_{data}", side_name(side)));
            sol.field.write_csv(BufWriter::new(File::create(&path)?))?;
            files.push(path);
        }
        out.insert(side_name(side), sol.value);
    }
    Ok(json!({ "ratio": grid.ratio(), "covariances": fam, "values": out }))
}

fn limit_gaussian(cfg: &ResolvedConfig, base: &Path, summary: &mut String) -> Result<Value> {
    let Market { m, payoff } = market(cfg, base)?;
    let method = cfg.gaussian.expect("resolved");
    let pricer = Pricer::new(&m);
    let mut out = Vec::new();
    for side in sides(cfg.side) {
        let (sigma, simplex) = match &cfg.sigma {
            Some(s) => (s.clone(), None),
            None => {
                let member = pricer.structural_member(&payoff, side).ok_or_else(|| {
                    Error::Config("the payoff's declared structure selects no simplex; give `sigma`".into())
                })?;
                (member.sigma.clone(), Some(member.simplex.clone()))
            }
        };
        if sigma.len() != m.dim() {
            return Err(Error::DimensionMismatch { expected: m.dim(), got: sigma.len() });
        }
        let value = gaussian_price(&sigma, |s| payoff.value(s), method)?;
        writeln!(summary, "{} limit: {}", side_name(side), fixed(value)).ok();
        out.push(json!({ "side": side, "value": value, "sigma": sigma, "simplex": simplex }));
    }
    Ok(json!({ "sides": out }))
}

fn boyle_sweep(
    cfg: &ResolvedConfig,
    base: &Path,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
    summary: &mut String,
) -> Result<Value> {
    let Market { m, payoff } = market(cfg, base)?;
    let n = cfg.n.expect("resolved");
    let rho = cfg.rho.as_ref().expect("resolved");
    let prices = rho.iter().map(|&r| boyle_price(&m, r, &payoff, n)).collect::<Result<Vec<_>>>()?;
    let hedge = Pricer::new(&m).price(&payoff, n, InductionOptions::default())?;
    if let Some(csv) = &cfg.outputs.csv {
        let path = out_dir.join(csv);
        let mut text = String::from("rho,price\n");
        for (r, p) in rho.iter().zip(&prices) {
            writeln!(text, "{},{}", fixed(*r), fixed(*p)).ok();
        }
        std::fs::write(&path, text)?;
        files.push(path);
    }
    writeln!(summary, "hedging prices at N = {n}: upper {}, lower {}", fixed(hedge.upper), fixed(hedge.lower)).ok();
    for (r, p) in rho.iter().zip(&prices) {
        writeln!(summary, "rho {r:+.2}: {}", fixed(*p)).ok();
    }
    let sweep: Vec<Value> = rho.iter().zip(&prices).map(|(r, p)| json!({ "rho": r, "price": p })).collect();
    Ok(json!({ "upper": hedge.upper, "lower": hedge.lower, "sweep": sweep }))
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<Rational> {
    const Q: i64 = 1009;
    (0..d).map(|_| rational(rng.random_range(1..Q), Q)).collect()
}

fn census_table(cfg: &ResolvedConfig, out_dir: &Path, files: &mut Vec<PathBuf>, summary: &mut String) -> Result<Value> {
    let d = cfg.dim.expect("resolved");
    let samples = cfg.samples.expect("resolved");
    let c = census::enumerate_cube_simplexes(d)?;
    if let Some(data) = &cfg.outputs.data {
        let path = out_dir.join(data);
        write_json(&path, &c)?;
        files.push(path);
    }
    writeln!(summary, "full-dimensional simplexes: {} (degenerate subsets: {})", c.len(), c.degenerate).ok();
    let centre: Vec<Rational> = vec![rational(1, 2); d];
    let centre_count = c.count_containing(&centre)?;
    let mut results = json!({
        "d": d,
        "count": c.len(),
        "degenerate": c.degenerate,
        "centre_count": centre_count,
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts: Vec<Vec<Rational>> = (0..samples).map(|_| random_point(&mut rng, d)).collect();
    if d == 3 {
        let types = c.type_counts();
        let planes = census::cutting_planes(3)?;
        let mut table: BTreeMap<&str, (Option<usize>, BTreeSet<usize>, usize)> = BTreeMap::new();
        for x in &pts {
            let region = census::classify_point_3d(x)?;
            let key = region_name(region);
            let entry = table.entry(key).or_insert((region.expected_count(), BTreeSet::new(), 0));
            entry.1.insert(c.count_containing(x)?);
            entry.2 += 1;
        }
        let types_line: Vec<String> = types.iter().map(|(t, n)| format!("{} {n}", type_name(*t))).collect();
        writeln!(summary, "types: {}", types_line.join(", ")).ok();
        writeln!(summary, "cutting planes: {}", planes.len()).ok();
        writeln!(summary, "{:<10} {:>8} {:>10} {:>8}", "region", "expected", "observed", "samples").ok();
        let mut rows = Vec::new();
        for (name, (expected, observed, n)) in &table {
            let obs: Vec<String> = observed.iter().map(usize::to_string).collect();
            let exp = expected.map_or("-".to_string(), |e| e.to_string());
            writeln!(summary, "{name:<10} {exp:>8} {:>10} {n:>8}", format!("{{{}}}", obs.join(","))).ok();
            rows.push(json!({ "region": name, "expected": expected, "observed": observed, "samples": n }));
        }
        results["type_counts"] = json!(types);
        results["cutting_planes"] = json!(planes.iter().map(|(p, on)| json!({ "plane": p, "vertices_on": on })).collect::<Vec<_>>());
        results["regions"] = json!(rows);
    } else {
        let counts = pts.iter().map(|x| c.count_containing(x)).collect::<Result<Vec<_>>>()?;
        let min = counts.iter().min().copied();
        writeln!(summary, "smallest count over {samples} samples: {}", min.map_or("-".into(), |m| m.to_string())).ok();
        results["sample_min_count"] = json!(min);
    }
    writeln!(summary, "count at the centre: {centre_count}").ok();
    if d >= 2 {
        results["lower_bound"] = json!(1usize << (d - 2));
    }

    if let Some(points) = &cfg.points {
        let mut rows = Vec::new();
        for p in points {
            let x: Vec<Rational> = p.iter().map(|v| v.0.clone()).collect();
            let count = c.count_containing(&x)?;
            let region = if d == 3 { Some(census::classify_point_3d(&x)?) } else { None };
            let chain = if d >= 2 { census::lower_bound_family_any(&x).ok() } else { None };
            let shown: Vec<String> = x.iter().map(format_rational).collect();
            writeln!(summary, "point ({}): {count}", shown.join(", ")).ok();
            rows.push(json!({
                "point": shown,
                "count": count,
                "region": region.map(region_name),
                "chain_simplexes": chain.map(|f| f.iter().map(|s| s.iter().map(|&v| census::vertex_coords(d, v)).collect::<Vec<_>>()).collect::<Vec<_>>()),
            }));
        }
        results["points"] = json!(rows);
    }
    Ok(results)
}

fn region_name(r: Region3) -> &'static str {
    match r {
        Region3::T1AndT2 => "t1_and_t2",
        Region3::T1Only => "t1_only",
        Region3::T2Only => "t2_only",
        Region3::Neither => "neither",
        Region3::Boundary => "boundary",
    }
}

fn type_name(t: census::TetraType) -> &'static str {
    match t {
        census::TetraType::Corner => "corner",
        census::TetraType::Regular => "regular",
        census::TetraType::Type3 => "type3",
        census::TetraType::Type4 => "type4",
    }
}

fn strategy_verify(cfg: &ResolvedConfig, base: &Path, summary: &mut String) -> Result<Value> {
    let Market { m, payoff } = market(cfg, base)?;
    let n = cfg.n.expect("resolved");
    let pricer = Pricer::new(&m);
    let mut out = Vec::new();
    let mut ok = true;
    for side in sides(cfg.side) {
        let ind = pricer.induction(&payoff, n, side, options(cfg).with_strategy())?;
        let strategy = ind.strategy.as_ref().expect("strategy requested");
        let slack = verify_superreplication(strategy, &payoff)?;
        let passed = slack >= -SLACK_TOL;
        ok &= passed;
        writeln!(summary, "{} price {}: worst slack {slack:.3e} ({})", side_name(side), fixed(ind.value), if passed { "ok" } else { "FAIL" }).ok();
        out.push(json!({
            "side": side,
            "price": ind.value,
            "initial_capital": strategy.alpha[0][0],
            "worst_slack": slack,
            "lp_fallbacks": strategy.lp_fallbacks,
            "paths": (m.len() as f64).powi(n as i32),
            "ok": passed,
        }));
    }
    Ok(json!({ "ok": ok, "sides": out }))
}

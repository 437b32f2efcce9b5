use std::fmt::Write as _;
use std::fs;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use entchain_core::configspace::{
    count_chain_states, good_start, is_balanced, is_consistent, matches_well_formed_grammar,
    DEFAULT_BUDGET,
};
use entchain_core::entanglement::{entropy_s, EntropyReport};
use entchain_core::hamiltonian::assemble_cycle;
use entchain_core::ruleset::validate_determinism;
use entchain_core::spectral::measure_chain_weight;
use entchain_core::transition::{path_count_formula, potential, step_backward, step_forward};
use entchain_core::*;
use serde::Serialize;

use crate::{ExperimentConfig, ExportKind, FilterArg};

fn solver(cfg: &ExperimentConfig) -> SolverConfig {
    SolverConfig { tol: cfg.tol, seed: cfg.seed, ..SolverConfig::default() }
}

/// Prints `content` and copies it to `<out>/<name>` when an output directory is set.
fn emit(cfg: &ExperimentConfig, name: &str, content: &str) -> Result<()> {
    print!("{content}");
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn load_model(cfg: &ExperimentConfig) -> Result<Option<Model>> {
    let Some(path) = &cfg.rules else { return Ok(None) };
    let text = fs::read_to_string(path).with_context(|| format!("reading rules {}", path.display()))?;
    let rules = parse_ruleset(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    Ok(Some(Model::new(rules)))
}

fn segments(cfg: &ExperimentConfig) -> usize {
    cfg.t.unwrap_or(2)
}

fn parse_bits(text: &str) -> Result<Vec<u8>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => bail!("qubit strings use 0 and 1, got {c:?}"),
        })
        .collect()
}

#[derive(Serialize)]
struct SuiteResult {
    suite: &'static str,
    n: usize,
    passed: bool,
    checked: usize,
    detail: String,
}

#[derive(Serialize)]
struct VerifyReport {
    command: &'static str,
    rules: String,
    passed: bool,
    suites: Vec<SuiteResult>,
}

fn suite(name: &'static str, n: usize, run: impl FnOnce() -> Result<(usize, String)>) -> SuiteResult {
    match run() {
        Ok((checked, detail)) => SuiteResult { suite: name, n, passed: true, checked, detail },
        Err(e) => SuiteResult { suite: name, n, passed: false, checked: 0, detail: format!("{e:#}") },
    }
}

fn grammar_suite(model: &Model, n: usize) -> Result<(usize, String)> {
    if n <= 5 {
        let all: Vec<SiteState> = SiteState::all().collect();
        let mut digits = vec![0usize; n];
        let mut checked = 0;
        loop {
            let sites: Vec<SiteState> = digits.iter().map(|&d| all[d]).collect();
            let s = BasisState::chain(&sites)?;
            if model.is_well_formed(&s) != matches_well_formed_grammar(&s.configuration()) {
                bail!("pair predicate and grammar disagree on `{s}`");
            }
            checked += 1;
            let Some(k) = digits.iter().position(|&d| d + 1 < all.len()) else { break };
            digits[k] += 1;
            digits[..k].iter_mut().for_each(|d| *d = 0);
        }
        return Ok((checked, "all strings".into()));
    }
    let basis = enumerate_chain_basis(model, n, ChainFilter::WellFormed, DEFAULT_BUDGET)?;
    let counted = count_chain_states(model, n, ChainFilter::WellFormed)?;
    if counted != basis.len() as u128 {
        bail!("enumerated {} states, counted {counted}", basis.len());
    }
    if let Some(s) = basis.iter().find(|s| !matches_well_formed_grammar(&s.configuration())) {
        bail!("enumerated `{s}` fails the grammar");
    }
    Ok((basis.len(), "enumerated states".into()))
}

fn path_suite(model: &Model, n: usize) -> Result<(usize, String)> {
    if n % 2 == 1 && n >= 5 {
        let m = (n - 3) / 2;
        let expected = path_count_formula(n)?;
        for k in 0..1usize << m {
            let bits: Vec<u8> = (0..m).map(|j| ((k >> j) & 1) as u8).collect();
            let p = extract_path(model, &good_start(n, &bits)?)?;
            if classify_path(&p) != PathClass::Good || p.len() != expected {
                bail!("path from x={bits:?} is {:?} with {} states, expected good with {expected}", classify_path(&p), p.len());
            }
        }
    }
    let basis = enumerate_chain_basis(model, n, ChainFilter::BracketedWellFormed, DEFAULT_BUDGET)?;
    let mut good = 0;
    for s in basis.iter() {
        let is_good = classify_path(&extract_path(model, &s)?) == PathClass::Good;
        let predicted = is_balanced(model, &s)? && is_consistent(model, &s)?;
        if is_good != predicted {
            bail!("`{s}`: good path {is_good}, balanced and consistent {predicted}");
        }
        good += usize::from(is_good);
    }
    if n % 2 == 0 && good > 0 {
        bail!("{good} states on good paths at even n");
    }
    Ok((basis.len(), format!("{good} states on good paths")))
}

fn potential_suite(model: &Model, n: usize) -> Result<(usize, String)> {
    let basis = enumerate_chain_basis(model, n, ChainFilter::WellFormed, DEFAULT_BUDGET)?;
    let mut longest = 0;
    for s in basis.iter() {
        if let Some(next) = step_forward(model, &s)? {
            if potential(&next) <= potential(&s) {
                bail!("potential does not increase from `{s}` to `{next}`");
            }
            if step_backward(model, &next)? != Some(s) {
                bail!("backward step from `{next}` does not return to `{s}`");
            }
        }
        if step_backward(model, &s)?.is_none() {
            longest = longest.max(extract_path(model, &s)?.len());
        }
    }
    if longest > n * n {
        bail!("path of {longest} states exceeds n^2");
    }
    Ok((basis.len(), format!("longest path {longest} states")))
}

pub fn verify(cfg: &ExperimentConfig) -> Result<bool> {
    let owned = load_model(cfg)?;
    let model = owned.as_ref().unwrap_or(Model::chain());
    let mut suites = Vec::new();
    for &n in &cfg.ns {
        suites.push(suite("determinism", n, || {
            let r = validate_determinism(model.rules(), n, DEFAULT_BUDGET)?;
            match r.violations.first() {
                None => Ok((r.states_checked, "one forward and one backward move at most".into())),
                Some(v) => bail!("{} nondeterministic states, first {v:?}", r.violations.len()),
            }
        }));
        suites.push(suite("well_formed_grammar", n, || grammar_suite(model, n)));
        suites.push(suite("path_classification", n, || path_suite(model, n)));
        suites.push(suite("potential_monotonicity", n, || potential_suite(model, n)));
    }
    let passed = suites.iter().all(|s| s.passed);
    let rules = cfg.rules.as_ref().map_or("builtin".to_string(), |p| p.display().to_string());
    let report = VerifyReport { command: "verify", rules, passed, suites };
    emit(cfg, "verify.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    Ok(passed)
}

#[derive(Serialize)]
struct SpectrumRecord {
    kind: &'static str,
    n: usize,
    t: usize,
    variant: String,
    dim: usize,
    lambda0: f64,
    lambda1: Option<f64>,
    gap: Option<f64>,
    normalized_gap: Option<f64>,
    degeneracy: usize,
    residuals: Vec<f64>,
    iterations: usize,
    wall_ms: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_weight: Option<i64>,
}

#[derive(Serialize)]
struct GapScan {
    kind: &'static str,
    points: Vec<(usize, f64)>,
    slope: f64,
    monotone: bool,
    passed: bool,
}

/// Lowest eigenpairs covering the whole lowest cluster and one value above it.
fn cluster_and_next(op: &SparseOperator, k0: usize, solver: &SolverConfig) -> Result<SpectralResult> {
    let mut k = k0.min(op.dim());
    loop {
        let r = lowest_eigenpairs(op, k, solver)?;
        if r.degeneracy < r.eigenvalues.len() || k == op.dim() {
            return Ok(r);
        }
        k = (2 * k).min(op.dim());
    }
}

fn record(
    kind: &'static str,
    n: usize,
    t: usize,
    variant: String,
    op: &SparseOperator,
    r: &SpectralResult,
    wall_ms: Option<u128>,
) -> SpectrumRecord {
    let lambda1 = r.eigenvalues.get(r.degeneracy).copied();
    let gap = lambda1.map(|l| l - r.lambda0);
    SpectrumRecord {
        kind,
        n,
        t,
        variant,
        dim: op.dim(),
        lambda0: r.lambda0,
        lambda1,
        gap,
        normalized_gap: gap.map(|g| g / op.norm_bound()),
        degeneracy: r.degeneracy,
        residuals: r.residuals.clone(),
        iterations: r.iterations,
        wall_ms,
        p_weight: None,
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    num / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

fn chain_filter(cfg: &ExperimentConfig) -> ChainFilter {
    match cfg.filter {
        Some(FilterArg::WellFormed) => ChainFilter::WellFormed,
        Some(FilterArg::Bracketed) => ChainFilter::BracketedWellFormed,
        None if cfg.variant == ChainVariant::FrustrationFree => ChainFilter::WellFormed,
        None => ChainFilter::BracketedWellFormed,
    }
}

fn cycle_operator(cfg: &ExperimentConfig, n: usize, solver: &SolverConfig) -> Result<(SparseOperator, i64)> {
    let t = segments(cfg);
    let model = Model::cycle();
    let p = match cfg.p_weight {
        Some(p) => p,
        None => measure_chain_weight(model, n, 2 * n, solver)?.p,
    };
    let basis = Arc::new(enumerate_cycle_basis(model, n * t, DEFAULT_BUDGET)?);
    let weights = OperatorWeights::segment(n).with_chain_weight(p);
    Ok((assemble_cycle(model, n, t, &weights, &basis)?, p))
}

fn chain_operator(cfg: &ExperimentConfig, model: &Model, n: usize) -> Result<SparseOperator> {
    let basis = Arc::new(enumerate_chain_basis(model, n, chain_filter(cfg), DEFAULT_BUDGET)?);
    Ok(assemble_chain(model, cfg.variant, &basis)?)
}

pub fn spectrum(cfg: &ExperimentConfig) -> Result<bool> {
    let solver = solver(cfg);
    let owned = load_model(cfg)?;
    let model = owned.as_ref().unwrap_or(Model::chain());
    let mut out = String::new();
    let mut points = Vec::new();
    for &n in &cfg.ns {
        let start = Instant::now();
        let rec = if cfg.cycle {
            let (op, p) = cycle_operator(cfg, n, &solver)?;
            let r = cluster_and_next(&op, n + 1, &solver)?;
            let wall = cfg.timing.then(|| start.elapsed().as_millis());
            let mut rec = record("cycle", n, segments(cfg), "segment".into(), &op, &r, wall);
            rec.p_weight = Some(p);
            rec
        } else {
            let op = chain_operator(cfg, model, n)?;
            let r = cluster_and_next(&op, 2, &solver)?;
            let wall = cfg.timing.then(|| start.elapsed().as_millis());
            record("chain", n, 1, cfg.variant.name().into(), &op, &r, wall)
        };
        if let Some(g) = rec.normalized_gap {
            points.push((n, g));
        }
        writeln!(out, "{}", serde_json::to_string(&rec)?)?;
    }
    let mut passed = true;
    if cfg.gap_scan {
        if points.len() < 2 {
            bail!("--gap-scan needs at least two n values");
        }
        let slope = log_log_slope(&points);
        let monotone = points.windows(2).all(|w| w[1].1 < w[0].1) && points.iter().all(|p| p.1 > 0.0);
        passed = monotone && (-8.0..=0.0).contains(&slope);
        let scan = GapScan { kind: "gap_scan", points, slope, monotone, passed };
        writeln!(out, "{}", serde_json::to_string(&scan)?)?;
    }
    emit(cfg, "spectrum.jsonl", &out)?;
    Ok(passed)
}

enum StateArg {
    PhiG,
    PhiX(Vec<u8>),
    Psi(usize),
    Phi,
}

fn parse_state(text: &str) -> Result<StateArg> {
    Ok(match text {
        "phi_g" => StateArg::PhiG,
        "Phi" => StateArg::Phi,
        _ => {
            if let Some(bits) = text.strip_prefix("phi_x:") {
                StateArg::PhiX(parse_bits(bits)?)
            } else if let Some(i) = text.strip_prefix("psi:") {
                StateArg::Psi(i.parse().with_context(|| format!("bad segment index in {text:?}"))?)
            } else {
                bail!("unknown state {text:?}; expected phi_g, phi_x:<bits>, psi:<i> or Phi")
            }
        }
    })
}

/// Smallest `entropy - bound` over rows where a lower bound is claimed, if any.
fn entropy_margin(cfg: &ExperimentConfig, state: &StateArg, n: usize, rows: &[EntropyReport]) -> Option<f64> {
    let margins: Vec<f64> = match state {
        StateArg::Phi => rows.iter().map(|r| r.entropy_bits - r.s_bound).collect(),
        StateArg::Psi(_) => rows.iter().filter_map(|r| Some(r.entropy_bits - r.good_count? as f64 / 4.0)).collect(),
        StateArg::PhiG if !cfg.cycle => {
            let s = entropy_s(n);
            rows.iter()
                .filter(|r| n - r.region_len >= s + 2 && n - r.region_len + s + 2 <= n)
                .map(|r| r.entropy_bits - r.s_bound)
                .collect()
        }
        _ => Vec::new(),
    };
    margins.into_iter().reduce(f64::min)
}

pub fn entropy(cfg: &ExperimentConfig) -> Result<bool> {
    let mut csv = String::from("n,t,state,region_start,region_len,entropy_bits,s_bound,c_split,good_count\n");
    let mut passed = true;
    for &n in &cfg.ns {
        let default = if cfg.cycle { "Phi" } else { "phi_g" };
        let label = cfg.state.clone().unwrap_or(default.into());
        let state = parse_state(&label)?;
        let (v, t) = match (&state, cfg.cycle) {
            (StateArg::PhiG, false) => (construct_phi_g(n)?, 1),
            (StateArg::PhiX(x), false) => (construct_phi_x(n, x)?, 1),
            (StateArg::Phi, true) => (construct_cycle_state(n, segments(cfg), CycleState::Phi)?, segments(cfg)),
            (StateArg::Psi(i), true) => (construct_cycle_state(n, segments(cfg), CycleState::Psi(*i))?, segments(cfg)),
            _ => bail!("state {label:?} does not live on a {}", if cfg.cycle { "cycle" } else { "chain" }),
        };
        let sites = v.sites();
        let sizes: Vec<usize> = match cfg.region_len {
            Some(l) if l == 0 || l > sites => bail!("--region-len must be in 1..={sites}"),
            Some(l) => vec![l],
            None => (1..sites).collect(),
        };
        let rows = entropy_sweep(&v, &label, n, t, &sizes)?;
        for r in &rows {
            let good = r.good_count.map_or(String::new(), |g| g.to_string());
            writeln!(
                csv,
                "{},{},{},{},{},{:.12},{:.6},{:.6},{good}",
                r.n, r.t, r.state, r.region_start, r.region_len, r.entropy_bits, r.s_bound, r.c_split
            )?;
        }
        let min = rows.iter().map(|r| r.entropy_bits).fold(f64::INFINITY, f64::min);
        let mean = rows.iter().map(|r| r.entropy_bits).sum::<f64>() / rows.len() as f64;
        let margin = entropy_margin(cfg, &state, n, &rows);
        let ok = margin.is_none_or(|m| m >= -1e-9);
        passed &= ok;
        let bound = if cfg.cycle {
            format!("bound=(min(r,{n}/4)-2)/16")
        } else {
            format!("s={}", entropy_s(n))
        };
        let margin = margin.map_or("none".to_string(), |m| format!("{m:.6}"));
        eprintln!(
            "{label} n={n} t={t}: {} regions, min={min:.6} mean={mean:.6} {bound} margin={margin} {}",
            rows.len(),
            if ok { "ok" } else { "BELOW BOUND" }
        );
    }
    emit(cfg, "entropy.csv", &csv)?;
    Ok(passed)
}

pub fn path(cfg: &ExperimentConfig) -> Result<bool> {
    let owned = load_model(cfg)?;
    let model = owned.as_ref().unwrap_or(if cfg.cycle { Model::cycle() } else { Model::chain() });
    let topology = if cfg.cycle { Topology::Cycle } else { Topology::Chain };
    let mut out = String::new();
    for &n in &cfg.ns {
        let start = match cfg.state.as_deref() {
            Some(text) if text.contains(' ') => BasisState::parse(text, topology)?,
            Some(text) => match parse_state(text)? {
                StateArg::PhiX(bits) => good_start(n, &bits)?,
                _ => bail!("`path` takes phi_x:<bits> or a state in glyph notation"),
            },
            None => good_start(n, &vec![0; (n - 3) / 2])?,
        };
        let p = extract_path(model, &start)?;
        writeln!(out, "# n={} start={start} class={:?} states={}", start.len(), classify_path(&p), p.len())?;
        for s in &p.states {
            let u = potential(s);
            writeln!(out, "{s}  ({}, {})", u.x, u.y)?;
        }
    }
    emit(cfg, "path.txt", &out)?;
    Ok(true)
}

pub fn export(what: ExportKind, cfg: &ExperimentConfig) -> Result<bool> {
    let solver = solver(cfg);
    let owned = load_model(cfg)?;
    let model = owned.as_ref().unwrap_or(Model::chain());
    for &n in &cfg.ns {
        let mut buf = Vec::new();
        let name = match (what, cfg.cycle) {
            (ExportKind::Basis, false) => {
                enumerate_chain_basis(model, n, chain_filter(cfg), DEFAULT_BUDGET)?.write_export(&mut buf)?;
                format!("basis_chain_n{n}.txt")
            }
            (ExportKind::Basis, true) => {
                enumerate_cycle_basis(Model::cycle(), n * segments(cfg), DEFAULT_BUDGET)?.write_export(&mut buf)?;
                format!("basis_cycle_n{n}_t{}.txt", segments(cfg))
            }
            (ExportKind::Operator, false) => {
                chain_operator(cfg, model, n)?.write_export(&mut buf)?;
                format!("operator_{}_n{n}.txt", cfg.variant.name())
            }
            (ExportKind::Operator, true) => {
                cycle_operator(cfg, n, &solver)?.0.write_export(&mut buf)?;
                format!("operator_cycle_n{n}_t{}.txt", segments(cfg))
            }
        };
        emit(cfg, &name, &String::from_utf8(buf)?)?;
    }
    Ok(true)
}

//! Acceptance suite: runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero when any criterion fails.

mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use common::{configuration_glyphs, for_each_string, oracle, oracle_accepts, TABLEAU_N7};
use entchain_core::configspace::{
    count_chain_states, enumerate_cycle_basis, is_balanced, is_bracketed, is_consistent, segments_of,
};
use entchain_core::entanglement::{construct_phi_g, entropy_s, pair_sectors, split_phi_g};
use entchain_core::hamiltonian::{apply, assemble_cycle, size_term};
use entchain_core::ruleset::validate_determinism;
use entchain_core::spectral::{component_spectra, lowest_eigenvalues, measure_chain_weight, verify_path_block, Method};
use entchain_core::transition::{good_path, path_count_formula, potential, step_backward, step_forward};
use entchain_core::*;

type Outcome = Result<String, String>;

struct Seen {
    ops: Vec<(String, SparseOperator)>,
}

impl Seen {
    fn keep(&mut self, label: impl Into<String>, op: &SparseOperator) {
        if op.dim() <= 2000 {
            self.ops.push((label.into(), op.clone()));
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {:.1} s, limit {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()))
}

fn bits(m: usize, k: usize) -> Vec<u8> {
    (0..m).map(|j| ((k >> j) & 1) as u8).collect()
}

fn chain_basis(n: usize, filter: ChainFilter) -> Arc<BasisIndex> {
    Arc::new(enumerate_chain_basis(Model::chain(), n, filter, 1 << 26).unwrap())
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut lengths = Vec::new();
    for (n, expected) in [(5usize, 6usize), (7, 15), (9, 28), (11, 45)] {
        let m = (n - 3) / 2;
        check(path_count_formula(n).unwrap() == expected, || format!("formula at n={n}"))?;
        for k in 0..1usize << m {
            let p = good_path(n, &bits(m, k)).map_err(|e| e.to_string())?;
            check(p.len() == expected, || format!("n={n} x={k}: {} states, expected {expected}", p.len()))?;
            check(classify_path(&p) == PathClass::Good, || format!("n={n} x={k}: path not good"))?;
        }
        lengths.push(expected);
    }
    let p = good_path(7, &[0, 1]).map_err(|e| e.to_string())?;
    let rows: Vec<String> = p.states.iter().map(configuration_glyphs).collect();
    check(rows == TABLEAU_N7, || format!("n=7 tableau differs: {rows:?}"))?;
    within(t0.elapsed(), Duration::from_secs(1))?;
    Ok(format!("good path lengths {lengths:?}, n=7 tableau matches 9+6 rows"))
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let model = Model::chain();
    let rules = builtin_chain_ruleset();
    let res = oracle();
    let mut scanned = 0u64;
    for n in 1..=5 {
        let mut bad = None;
        for_each_string(n, |sites| {
            scanned += 1;
            let s = BasisState::chain(sites).unwrap();
            if model.is_well_formed(&s) != oracle_accepts(&res, sites) && bad.is_none() {
                bad = Some(s.to_string());
            }
        });
        check(bad.is_none(), || format!("regex oracle disagrees on {}", bad.clone().unwrap()))?;
    }
    let mut states = 0usize;
    for n in 4..=7 {
        let report = validate_determinism(&rules, n, 1 << 26).map_err(|e| e.to_string())?;
        check(report.passed(), || format!("n={n}: {} nondeterministic states", report.violations.len()))?;
        let basis = chain_basis(n, ChainFilter::WellFormed);
        for s in basis.iter() {
            states += 1;
            let next = step_forward(model, &s).map_err(|e| e.to_string())?;
            if let Some(next) = next {
                let back = step_backward(model, &next).map_err(|e| e.to_string())?;
                check(back == Some(s), || format!("backward(forward({s})) != {s}"))?;
                check(potential(&next) > potential(&s), || format!("potential does not increase at {s}"))?;
            }
            if step_backward(model, &s).map_err(|e| e.to_string())?.is_none() {
                let p = extract_path(model, &s).map_err(|e| e.to_string())?;
                check(p.len() <= n * n, || format!("path from {s} has {} > n^2 states", p.len()))?;
            }
            if is_bracketed(&s) {
                let good = classify_path(&extract_path(model, &s).map_err(|e| e.to_string())?) == PathClass::Good;
                let balanced = is_balanced(model, &s).map_err(|e| e.to_string())?;
                let bc = balanced && is_consistent(model, &s).map_err(|e| e.to_string())?;
                check(good == bc, || format!("{s}: good={good}, balanced and consistent={bc}"))?;
            }
        }
    }
    within(t0.elapsed(), Duration::from_secs(120))?;
    Ok(format!("{scanned} strings against the regex oracle, {states} well-formed states at n=4..7, no violations"))
}

fn overlap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().abs()
}

fn criterion_3(cfg: &SolverConfig, seen: &mut Seen) -> Outcome {
    let t0 = Instant::now();
    let mut notes = Vec::new();
    for n in [5usize, 7] {
        let basis = chain_basis(n, ChainFilter::WellFormed);
        let op = assemble_chain(Model::chain(), ChainVariant::FrustrationFree, &basis).map_err(|e| e.to_string())?;
        seen.keep(format!("frustration_free n={n}"), &op);
        let phi = construct_phi_g(n).unwrap().rebased(&basis).map_err(|e| e.to_string())?;
        let residual = apply(&op, &phi).map_err(|e| e.to_string())?.norm();
        check(residual < 1e-10, || format!("n={n}: |H phi_g| = {residual:e}"))?;
        let r = lowest_eigenpairs(&op, 2, cfg).map_err(|e| e.to_string())?;
        check(r.lambda0 < 1e-9, || format!("n={n}: lambda0 = {:e}", r.lambda0))?;
        check(r.degeneracy == 1, || format!("n={n}: degeneracy {}", r.degeneracy))?;
        let ov = overlap(&r.vectors[0], &phi.dense_on(&basis).map_err(|e| e.to_string())?);
        check(ov > 1.0 - 1e-8, || format!("n={n}: overlap {ov}"))?;
        notes.push(format!("n={n} dim={} lambda0={:.1e} overlap={ov:.12}", basis.len(), r.lambda0));
    }
    within(t0.elapsed(), Duration::from_secs(30))?;
    Ok(notes.join(", "))
}

fn criterion_4(cfg: &SolverConfig, seen: &mut Seen) -> Outcome {
    let t0 = Instant::now();
    let mut notes = Vec::new();
    for n in [4usize, 6] {
        let basis = chain_basis(n, ChainFilter::BracketedWellFormed);
        let op = assemble_chain(Model::chain(), ChainVariant::Core, &basis).map_err(|e| e.to_string())?;
        seen.keep(format!("core n={n}"), &op);
        let l0 = lowest_eigenvalues(&op, 1, cfg).map_err(|e| e.to_string())?[0];
        check(l0 > 1e-6, || format!("n={n}: lambda0 = {l0:e}"))?;
        notes.push(format!("n={n} lambda0={l0:.4e}"));
    }
    within(t0.elapsed(), Duration::from_secs(30))?;
    Ok(notes.join(", "))
}

fn criterion_5(cfg: &SolverConfig) -> Outcome {
    let basis = chain_basis(7, ChainFilter::BracketedWellFormed);
    let op = assemble_chain(Model::chain(), ChainVariant::UniformBracket, &basis).map_err(|e| e.to_string())?;
    let r = lowest_eigenpairs(&op, 2, cfg).map_err(|e| e.to_string())?;
    check((r.lambda0 - 5.0).abs() < 1e-6, || format!("lambda0 = {}", r.lambda0))?;
    check(r.degeneracy == 1, || format!("degeneracy {}", r.degeneracy))?;
    let phi = construct_phi_g(7).unwrap().dense_on(&basis).map_err(|e| e.to_string())?;
    let ov = overlap(&r.vectors[0], &phi);
    check(ov > 1.0 - 1e-8, || format!("overlap with phi_g {ov}"))?;
    check(r.gap > 0.0, || format!("gap {}", r.gap))?;
    Ok(format!("lambda0={:.12} gap={:.4e} overlap={ov:.12}", r.lambda0, r.gap))
}

fn criterion_6(seen: &mut Seen) -> Outcome {
    let mut notes = Vec::new();
    for n in [5usize, 7] {
        let basis = chain_basis(n, ChainFilter::BracketedWellFormed);
        let h = build_term(TermKind::Trans, &builtin_chain_ruleset(), &basis).map_err(|e| e.to_string())?;
        let m = (n - 3) / 2;
        for k in 0..1usize << m {
            let p = good_path(n, &bits(m, k)).map_err(|e| e.to_string())?;
            check(verify_path_block(&h, &p).map_err(|e| e.to_string())?, || format!("n={n} x={k}: block differs"))?;
            if k == 0 {
                let idx: Vec<usize> = p.states.iter().map(|s| basis.index_of(s).unwrap()).collect();
                let block = h.submatrix(&idx);
                let triplets = (0..idx.len())
                    .flat_map(|i| (0..idx.len()).map(move |j| (i, j)))
                    .map(|(i, j)| (i, j, block[(i, j)]))
                    .filter(|e| e.2 != 0.0);
                seen.keep(format!("path block n={n}"), &SparseOperator::from_triplets(idx.len(), "path", triplets));
            }
        }
        notes.push(format!("n={n}: {} paths of {} states", 1 << m, path_count_formula(n).unwrap()));
    }
    Ok(notes.join(", "))
}

fn criterion_7(cfg: &SolverConfig, seen: &mut Seen) -> Outcome {
    let t0 = Instant::now();
    let mut pts = Vec::new();
    for n in [5usize, 7, 9, 11] {
        let basis = chain_basis(n, ChainFilter::BracketedWellFormed);
        let op = assemble_chain(Model::chain(), ChainVariant::Core, &basis).map_err(|e| e.to_string())?;
        seen.keep(format!("core n={n}"), &op);
        let g = spectral_gap(&op, cfg).map_err(|e| e.to_string())?;
        pts.push((n, g.normalized_gap));
    }
    check(pts.iter().all(|p| p.1 > 0.0), || format!("nonpositive gap: {pts:?}"))?;
    check(pts.windows(2).all(|w| w[1].1 < w[0].1), || format!("not decreasing: {pts:?}"))?;
    let xs: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    check((-8.0..=0.0).contains(&slope), || format!("slope {slope}"))?;
    within(t0.elapsed(), Duration::from_secs(600))?;
    let gaps: Vec<String> = pts.iter().map(|p| format!("{}:{:.3e}", p.0, p.1)).collect();
    Ok(format!("normalized gaps {}, log-log slope {slope:.3}", gaps.join(" ")))
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let model = Model::chain();
    let region = Region::new(0, 4, 7, Topology::Chain).unwrap();
    let phi = construct_phi_g(7).unwrap();
    let r = pair_sectors(model, &phi, &region, entropy_s(7)).map_err(|e| e.to_string())?;
    let split7 = split_phi_g(7, entropy_s(7)).unwrap();
    let r2 = pair_sectors(model, &split7.phi2, &region, entropy_s(7)).map_err(|e| e.to_string())?;
    let traces: Vec<f64> = r.sectors.iter().map(|s| s.trace).collect();
    let mut failures = Vec::new();
    if !(r.block_diagonal && traces.len() == 2 && traces.iter().all(|t| (t - 0.5).abs() < 1e-12)) {
        failures.push(format!(
            "n=7 phi_g: {} sectors with traces {traces:?}, block diagonal {} (phi_2 alone: block diagonal {}, {} sectors)",
            traces.len(),
            r.block_diagonal,
            r2.block_diagonal,
            r2.sectors.len()
        ));
    }
    if r.entropy_bits < 1.0 {
        failures.push(format!("n=7 phi_g entropy {}", r.entropy_bits));
    }
    let s = entropy_s(11);
    let split = split_phi_g(11, s).unwrap();
    let mut min11 = f64::INFINITY;
    for t in s + 2..=11 - s - 2 {
        let region = Region::new(0, 11 - t, 11, Topology::Chain).unwrap();
        let q = pair_sectors(model, &split.phi2, &region, s).map_err(|e| e.to_string())?;
        min11 = min11.min(q.entropy_bits);
        if !q.block_diagonal || q.sectors.len() != 1 << s {
            failures.push(format!("n=11 phi_2 t={t}: {} sectors, block diagonal {}", q.sectors.len(), q.block_diagonal));
        }
    }
    if min11 < s as f64 {
        failures.push(format!("n=11 phi_2 entropy {min11}"));
    }
    if split.c < 0.25 {
        failures.push(format!("n=11 c = {}", split.c));
    }
    if t0.elapsed() >= Duration::from_secs(60) {
        failures.push(format!("took {:.1} s", t0.elapsed().as_secs_f64()));
    }
    let summary = format!(
        "n=7 phi_g entropy {:.3} bits, n=11 phi_2 entropy >= {min11:.3} bits, c = {:.4}",
        r.entropy_bits, split.c
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failures.join("; ")))
    }
}

fn criterion_9(cfg: &SolverConfig, seen: &mut Seen) -> Outcome {
    let model = Model::cycle();
    let (n, t) = (5usize, 2usize);
    let weight = measure_chain_weight(model, n, 2 * n, cfg).map_err(|e| e.to_string())?;
    for l in 4..=2 * n {
        let basis = Arc::new(configspace::enumerate_segment_basis(model, l, 1 << 26).map_err(|e| e.to_string())?);
        if basis.len() <= 2000 {
            let op = assemble_chain(model, ChainVariant::Core, &basis).map_err(|e| e.to_string())?;
            seen.keep(format!("segment core l={l}"), &op);
        }
    }
    let basis = Arc::new(enumerate_cycle_basis(model, n * t, 1 << 26).map_err(|e| e.to_string())?);
    let weights = OperatorWeights::segment(n).with_chain_weight(weight.p);
    let op = assemble_cycle(model, n, t, &weights, &basis).map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    let nullity = null_space_dimension(&op, 1e-8, cfg).map_err(|e| e.to_string())?;
    if nullity != n {
        failures.push(format!("ground degeneracy {nullity}"));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        let psi = construct_cycle_state(n, t, CycleState::Psi(i)).unwrap().rebased(&basis).map_err(|e| e.to_string())?;
        worst = worst.max(apply(&op, &psi).map_err(|e| e.to_string())?.norm());
    }
    if worst >= 1e-9 {
        failures.push(format!("psi_i residual {worst:.6}"));
    }
    let all_w = BasisState::cycle(&vec![SiteState::plain(Tag::UpperW); n * t]).unwrap();
    let size = size_term(n, &basis).map_err(|e| e.to_string())?;
    let k = basis.index_of(&all_w).ok_or("all-W state missing")?;
    let e_w = size.get(k, k);
    if (e_w - 2.0).abs() >= 1e-12 {
        failures.push(format!("all-W H_size {e_w}"));
    }
    let mut wrong_min = f64::INFINITY;
    let mut right_min = f64::INFINITY;
    for c in component_spectra(&op, 1, cfg).map_err(|e| e.to_string())? {
        let state = basis.get(c.indices[0]);
        let right = segments_of(&state).is_some_and(|segs| !segs.is_empty() && segs.iter().all(|s| s.len == n));
        if right {
            right_min = right_min.min(c.values[0]);
        } else {
            wrong_min = wrong_min.min(c.values[0]);
        }
    }
    if wrong_min <= 0.0 {
        failures.push(format!("wrong-length block energy {wrong_min:e}"));
    }
    let summary = format!(
        "p={} dim={} degeneracy {nullity}, lowest {right_min:.3e}, max psi_i residual {worst:.4}, all-W H_size {e_w}, min wrong-length block energy {wrong_min:.4}",
        weight.p,
        basis.len()
    );
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failures.join("; ")))
    }
}

fn criterion_10() -> Outcome {
    let t0 = Instant::now();
    let (n, t) = (9usize, 2usize);
    let sizes: Vec<usize> = (1..=(n - 1) * t).collect();
    let phi = construct_cycle_state(n, t, CycleState::Phi).unwrap();
    let rows = entropy_sweep(&phi, "Phi", n, t, &sizes).map_err(|e| e.to_string())?;
    let phi_margin = rows.iter().map(|r| r.entropy_bits - r.s_bound).fold(f64::INFINITY, f64::min);
    check(phi_margin >= 0.0, || format!("Phi below bound by {}", -phi_margin))?;
    let mut psi_margin = f64::INFINITY;
    let mut regions = rows.len();
    for i in 0..n {
        let psi = construct_cycle_state(n, t, CycleState::Psi(i)).unwrap();
        for r in entropy_sweep(&psi, &format!("psi:{i}"), n, t, &sizes).map_err(|e| e.to_string())? {
            let good = r.good_count.ok_or("missing good count")? as f64;
            psi_margin = psi_margin.min(r.entropy_bits - good / 4.0);
            regions += 1;
        }
    }
    check(psi_margin >= -1e-9, || format!("psi_i below good/4 by {}", -psi_margin))?;
    within(t0.elapsed(), Duration::from_secs(900))?;
    Ok(format!("{regions} regions, Phi margin {phi_margin:.4}, psi_i margin {psi_margin:.2e}"))
}

fn criterion_11(cfg: &SolverConfig, seen: &Seen) -> Outcome {
    let lanczos = SolverConfig { method: Method::Lanczos, ..*cfg };
    let dense = SolverConfig { method: Method::Dense, ..*cfg };
    let mut worst = 0.0f64;
    for (label, op) in &seen.ops {
        let k = 6.min(op.dim());
        let a = lowest_eigenvalues(op, k, &dense).map_err(|e| format!("{label}: {e}"))?;
        let b = lowest_eigenvalues(op, k, &lanczos).map_err(|e| format!("{label}: {e}"))?;
        let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        check(d < 1e-8, || format!("{label}: dense {a:?} vs Lanczos {b:?}"))?;
        worst = worst.max(d);
    }
    let labels: Vec<&str> = seen.ops.iter().map(|o| o.0.as_str()).collect();
    Ok(format!("{} operators ({}), max difference {worst:.1e}", labels.len(), labels.join(", ")))
}

fn main() {
    let cfg = SolverConfig::default();
    let mut seen = Seen { ops: Vec::new() };
    assert!(count_chain_states(Model::chain(), 2, ChainFilter::BracketedWellFormed).unwrap() == 0);
    let mut results: Vec<(usize, Outcome, Duration)> = Vec::new();
    let mut run = |k: usize, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let out = f();
        let el = t0.elapsed();
        let (tag, text) = match &out {
            Ok(s) => ("PASS", s),
            Err(s) => ("FAIL", s),
        };
        println!("criterion {k:>2} {tag} ({:.1} s) {text}", el.as_secs_f64());
        results.push((k, out, el));
    };
    run(1, &mut criterion_1);
    run(2, &mut criterion_2);
    run(3, &mut || criterion_3(&cfg, &mut seen));
    run(4, &mut || criterion_4(&cfg, &mut seen));
    run(5, &mut || criterion_5(&cfg));
    run(6, &mut || criterion_6(&mut seen));
    run(7, &mut || criterion_7(&cfg, &mut seen));
    run(8, &mut criterion_8);
    run(9, &mut || criterion_9(&cfg, &mut seen));
    run(10, &mut criterion_10);
    run(11, &mut || criterion_11(&cfg, &seen));
    let failed: Vec<usize> = results.iter().filter(|r| r.1.is_err()).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

//! Acceptance suite. Every test prints one `PASS`/`FAIL` line (straight to
//! stderr, so it shows even when output is captured) and then asserts.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use exprule::data::{binarize, read_csv, Dataset};
use exprule::depth_one::{
    count_feasible, count_qubo_variables, solve_ilp_exhaustive, AnnealConfig, DepthOneProblem, Penalties, QuboMode,
};
use exprule::harness::{crossval, to_result_json, Classifier, RunConfig};
use exprule::local::{apply_move, generate_initial_rule, solve, LocalMoveProposer, SolverConfig, Trace};
use exprule::nonlocal::{propose_non_local_move, solve_with_nonlocal, NonLocalConfig};
use exprule::rng::{seeded, Rng};
use exprule::{
    score, BitMatrix, BitVector, ClassWeights, FeatureNames, Formula, Literal, MetricKind, Node, OperatorKind,
};
use num_bigint::BigUint;
use rand::Rng as _;

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let line = format!("\n[{id:>2}] {} {title}: {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
}

fn check(id: u32, title: &str, pass: bool, detail: String) {
    report(id, title, pass, &detail);
    assert!(pass, "{title}: {detail}");
}

fn parse(text: &str) -> Formula {
    Formula::parse(text, &FeatureNames::Default).unwrap()
}

fn planted(text: &str, vars: usize) -> (BitMatrix, BitVector) {
    let x = BitMatrix::truth_table(vars);
    let y = parse(text).evaluate(&x).unwrap();
    (x, y)
}

/// Random matrix with labels drawn at random but containing both classes.
fn random_data(rng: &mut Rng, rows: usize, cols: usize) -> (BitMatrix, BitVector) {
    let x = BitMatrix::from_rows(&(0..rows).map(|_| (0..cols).map(|_| rng.gen()).collect()).collect::<Vec<_>>());
    let mut y: Vec<bool> = (0..rows).map(|_| rng.gen()).collect();
    y[0] = true;
    y[1] = false;
    (x, BitVector::from_bools(&y))
}

/// Random rule: an initial rule followed by a random walk of local moves.
fn random_rule(rng: &mut Rng, m: usize, max_complexity: usize, steps: usize) -> Formula {
    let mut proposer = LocalMoveProposer::new(m, Some(max_complexity));
    let mut rule = generate_initial_rule(m, Some(max_complexity), rng).unwrap();
    for _ in 0..steps {
        let mv = proposer.propose(&rule, rng).unwrap();
        rule = apply_move(&rule, &mv).unwrap();
    }
    rule
}

#[test]
fn formula_measures() {
    let rule = parse("And(Choose2(f0,f1,f2,f3),~f4,f5)");
    let start = Instant::now();
    let (c, d) = (rule.complexity(), rule.depth());
    let elapsed = start.elapsed();
    check(
        1,
        "formula measures",
        c == 8 && d == 2 && elapsed < Duration::from_millis(1),
        format!("complexity {c} (want 8), depth {d} (want 2), {elapsed:?}"),
    );
}

#[test]
fn at_least_complexity_is_literals_plus_one() {
    let bad: Vec<usize> = (3..=30)
        .filter(|&l| {
            let lits: Vec<String> = (0..l).map(|j| format!("f{j}")).collect();
            parse(&format!("AtLeast2({})", lits.join(","))).complexity() != l + 1
        })
        .collect();
    check(2, "AtLeast complexity is L+1 for L in 3..=30", bad.is_empty(), format!("mismatches at L = {bad:?}"));
}

#[test]
fn qubo_variable_counts() {
    let (m, n, n_pos, mm) = (300, 569, 212, 4);
    let published = [
        (OperatorKind::Or, QuboMode::WithEta, 2879),
        (OperatorKind::And, QuboMode::WithEta, 2879),
        (OperatorKind::AtLeast, QuboMode::WithEta, 3097),
        (OperatorKind::AtMost, QuboMode::WithEta, 3097),
        (OperatorKind::Choose, QuboMode::WithEta, 3811),
        (OperatorKind::Or, QuboMode::WithoutEta, 1027),
        (OperatorKind::And, QuboMode::WithoutEta, 1317),
    ];
    let mut lines = Vec::new();
    let mut required_ok = true;
    let mut all_ok = true;
    for (op, mode, want) in published {
        let got = count_qubo_variables(m, n, n_pos, mm, mode, op);
        let mode_name = if mode == QuboMode::WithEta { "with-eta" } else { "without-eta" };
        lines.push(format!("{op} {mode_name} {got}{}", if got == want { String::new() } else { format!(" (published {want})") }));
        all_ok &= got == want;
        if op == OperatorKind::Or {
            required_ok &= got == want;
        }
    }
    let summary = if all_ok { "all entries match" } else { "Or entries exact; others differ as noted" };
    check(3, "QUBO variable counts", required_ok, format!("{summary}: {}", lines.join("; ")));
}

#[test]
fn feasible_space_counts() {
    let binomial = |n: usize, k: usize| -> BigUint {
        if k > n {
            return BigUint::from(0u32);
        }
        let num: BigUint = (0..k).map(|i| BigUint::from(n - i)).product();
        let den: BigUint = (1..=k).map(BigUint::from).product();
        num / den
    };
    let mut bad = Vec::new();
    for m in 1..=300 {
        for mm in 0..=10 {
            let direct: BigUint = (0..=mm).map(|l| binomial(2 * m, l)).sum();
            if count_feasible(m, mm) != direct {
                bad.push((m, mm));
            }
        }
    }
    check(4, "feasible-space counts", bad.is_empty(), format!("3300 (m, m') pairs, mismatches {bad:?}"));
}

/// One random instance of the small depth-one benchmark.
struct Instance {
    x: BitMatrix,
    y: BitVector,
    max_literals: usize,
}

fn small_instances() -> Vec<Instance> {
    let mut rng = seeded(2024);
    (0..50)
        .map(|_| {
            let m = rng.gen_range(2..=5);
            let n = rng.gen_range(8..=30);
            let max_literals = rng.gen_range(1..=3.min(m));
            let (x, y) = random_data(&mut rng, n, m);
            Instance { x, y, max_literals }
        })
        .collect()
}

#[test]
fn oracle_equivalence() {
    let start = Instant::now();
    let mut cases = 0;
    let mut ilp_ok = 0;
    let mut matched = [0; 2];
    let mut better_than_optimal = 0;
    let mut infeasible = [0; 2];
    for (d, inst) in small_instances().iter().enumerate() {
        for op in OperatorKind::ALL {
            cases += 1;
            let p = DepthOneProblem::balanced(&inst.x, &inst.y, op, inst.max_literals, 0.01).unwrap();
            let oracle = p.brute_force(u128::MAX).unwrap();
            let (ilp, _) = solve_ilp_exhaustive(&p.build_ilp().unwrap()).unwrap();
            if (ilp - oracle.objective).abs() < 1e-9 {
                ilp_ok += 1;
            }
            for (i, mode) in [QuboMode::WithEta, QuboMode::WithoutEta].into_iter().enumerate() {
                let anneal = AnnealConfig {
                    seed: d as u64,
                    ..AnnealConfig::default()
                };
                match p.solve_qubo(mode, &Penalties::default(), &anneal) {
                    Ok(s) => {
                        if s.objective < oracle.objective - 1e-9 {
                            better_than_optimal += 1;
                        }
                        if (s.objective - oracle.objective).abs() < 1e-9 {
                            matched[i] += 1;
                        }
                    }
                    Err(_) => infeasible[i] += 1,
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let rate = |k: usize| k as f64 / cases as f64;
    let pass = ilp_ok == cases
        && rate(matched[0]) >= 0.95
        && rate(matched[1]) >= 0.95
        && better_than_optimal == 0
        && elapsed < Duration::from_secs(300);
    check(
        5,
        "depth-one oracle equivalence",
        pass,
        format!(
            "ILP exhaustive optimal in {ilp_ok}/{cases}; QUBO optimal with-eta {}/{cases} ({:.0}%), without-eta {}/{cases} ({:.0}%) (need 95%); no feasible read {infeasible:?}; better than optimal {better_than_optimal}; {elapsed:.1?}",
            matched[0],
            100.0 * rate(matched[0]),
            matched[1],
            100.0 * rate(matched[1]),
        ),
    );
}

#[test]
fn dualities() {
    let mut rng = seeded(6);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let m = rng.gen_range(2..=8);
        let n = rng.gen_range(10..=60);
        let (x, y) = random_data(&mut rng, n, m);
        let c = rng.gen_range(3..=12);
        let steps = rng.gen_range(0..20);
        let rule = random_rule(&mut rng, m, c, steps);
        let neg = rule.negated();
        for metric in [MetricKind::BalancedAccuracy, MetricKind::Accuracy] {
            let s = score(&rule, &x, &y, metric).unwrap();
            let t = score(&neg, &x, &y, metric).unwrap();
            worst = worst.max((s - (1.0 - t)).abs());
        }
    }
    let mut unequal = 0;
    let instances = small_instances();
    for inst in &instances {
        let solve = |op| {
            DepthOneProblem::balanced(&inst.x, &inst.y, op, inst.max_literals, 0.01)
                .unwrap()
                .brute_force(u128::MAX)
                .unwrap()
                .objective
        };
        if (solve(OperatorKind::AtLeast) - solve(OperatorKind::AtMost)).abs() > 1e-12 {
            unequal += 1;
        }
    }
    check(
        6,
        "negation and AtLeast/AtMost dualities",
        worst <= 1e-12 && unequal == 0,
        format!(
            "max |S(R) - (1 - S(~R))| = {worst:e} over 1000 pairs; AtLeast/AtMost optima differ on {unequal}/{} instances",
            instances.len()
        ),
    );
}

#[test]
fn planted_rule_recovery() {
    let (x, y) = planted("AtLeast3(f0,f1,f2,f3,f4)", 5);
    let start = Instant::now();
    let mut recovered = Vec::new();
    for seed in 0..20 {
        let config = SolverConfig {
            max_complexity: Some(6),
            seed,
            ..Default::default()
        };
        if solve(&x, &y, &config).unwrap().score == 1.0 {
            recovered.push(seed);
        }
    }
    let elapsed = start.elapsed();
    check(
        7,
        "planted AtLeast3 recovery with default local solver",
        recovered.len() >= 19 && elapsed < Duration::from_secs(60),
        format!("{}/20 seeds reach balanced accuracy 1.0 (need 19); {elapsed:.1?}", recovered.len()),
    );
}

fn first_perfect(trace: &Trace, iterations: usize) -> usize {
    trace
        .records
        .iter()
        .filter(|r| r.objective >= 1.0 - 1e-12)
        .map(|r| r.iteration)
        .min()
        .unwrap_or(iterations)
}

/// Best objective over every depth-one rule on `features` of `x`, by direct
/// enumeration.
fn enumerate_best(
    x: &BitMatrix,
    y: &BitVector,
    features: &[usize],
    kind: OperatorKind,
    (min, max): (usize, usize),
    weights: ClassWeights,
    lambda: f64,
) -> Option<f64> {
    let mut best: Option<f64> = None;
    let f = features.len();
    for subset in 0u32..1 << f {
        let l = subset.count_ones() as usize;
        if l < min || l > max {
            continue;
        }
        let chosen: Vec<usize> = (0..f).filter(|&i| subset >> i & 1 == 1).map(|i| features[i]).collect();
        for polarity in 0u32..1 << l {
            let lits: Vec<Literal> =
                chosen.iter().enumerate().map(|(i, &j)| Literal::new(j, polarity >> i & 1 == 1)).collect();
            for op in kind.instances(l) {
                let errors: f64 = (0..x.rows())
                    .filter_map(|r| {
                        let count = lits.iter().filter(|lit| x.get(r, lit.feature) != lit.negated).count();
                        let pred = op.holds(count, l);
                        (pred != y.get(r)).then(|| if y.get(r) { weights.positive } else { weights.negative })
                    })
                    .sum();
                let obj = errors + lambda * l as f64;
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
    }
    best
}

fn weights_of(y: &BitVector) -> ClassWeights {
    let (n, p) = (y.len() as f64, y.count_ones() as f64);
    if p == 0.0 || p == n {
        ClassWeights::UNIT
    } else {
        ClassWeights {
            positive: n / (2.0 * p),
            negative: n / (2.0 * (n - p)),
        }
    }
}

/// Checks oracle-backed proposals on states of random walks; returns
/// (proposals checked, failures).
fn check_proposals(x: &BitMatrix, y: &BitVector, max_complexity: usize, walks: usize, seed: u64) -> (usize, Vec<String>) {
    let mut rng = seeded(seed);
    let config = NonLocalConfig::default();
    let mut checked = 0;
    let mut failures = Vec::new();
    for _ in 0..walks {
        let mut proposer = LocalMoveProposer::new(x.cols(), Some(max_complexity));
        let mut rule = generate_initial_rule(x.cols(), Some(max_complexity), &mut rng).unwrap();
        for _ in 0..10 {
            let Some(a) = propose_non_local_move(&rule, x, y, Some(max_complexity), 0.0, &config, &mut rng) else {
                rule = apply_move(&rule, &proposer.propose(&rule, &mut rng).unwrap()).unwrap();
                continue;
            };
            let bounds = (a.min_literals, a.max_literals);
            let want = enumerate_best(&a.subproblem.x, &a.subproblem.y, &a.features, a.operator, bounds, weights_of(&a.subproblem.y), 0.0);
            match (&a.solution, want) {
                (Some(s), Some(w)) => {
                    checked += 1;
                    let l = s.literals.len();
                    let in_budget = l >= a.min_literals && l <= a.max_literals;
                    let on_features = s.literals.iter().all(|lit| a.features.contains(&lit.feature));
                    if (s.objective - w).abs() > 1e-9 || !in_budget || !on_features {
                        failures.push(format!("{rule} target {:?}: got {} want {w}", a.target, s.objective));
                    }
                }
                (None, None) => {}
                (got, want) => failures.push(format!("{rule} target {:?}: solution {got:?} vs enumeration {want:?}", a.target)),
            }
            rule = match &a.mv {
                Some(mv) if rng.gen_bool(0.5) => apply_move(&rule, mv).unwrap(),
                _ => apply_move(&rule, &proposer.propose(&rule, &mut rng).unwrap()).unwrap(),
            };
        }
    }
    (checked, failures)
}

#[test]
fn non_local_moves_help() {
    let (x, y) = planted("Or(And(f0,f1),And(f2,f3))", 4);
    let iterations = 300;
    let (mut local, mut nonlocal) = (0, 0);
    for seed in 0..20 {
        let config = SolverConfig {
            num_iterations: iterations,
            max_complexity: Some(7),
            seed,
            ..Default::default()
        };
        local += first_perfect(&solve(&x, &y, &config).unwrap().trace, iterations);
        nonlocal += first_perfect(
            &solve_with_nonlocal(&x, &y, &config, &NonLocalConfig::default()).unwrap().trace,
            iterations,
        );
    }
    let (local, nonlocal) = (local as f64 / 20.0, nonlocal as f64 / 20.0);

    // Small table (no subsampling) and a wider one (subsampled to 100 rows).
    let (c1, f1) = check_proposals(&x, &y, 7, 40, 81);
    let (wx, wy) = planted("Or(And(f0,f1),And(f2,~f5))", 8);
    let (c2, f2) = check_proposals(&wx, &wy, 7, 20, 82);
    let failures: Vec<String> = f1.into_iter().chain(f2).collect();

    check(
        8,
        "non-local moves reach a perfect rule sooner; proposals are optimal",
        nonlocal <= local && failures.is_empty() && c1 + c2 > 0,
        format!(
            "mean iterations to first perfect score over 20 paired seeds: local {local:.2}, non-local {nonlocal:.2}; {} oracle proposals checked by enumeration, {} not optimal {:?}",
            c1 + c2,
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

fn breast_cancer_path() -> PathBuf {
    std::env::var_os("EXPRULE_BREAST_CANCER")
        .map(PathBuf::from)
        .unwrap_or_else(|| "/usr/local/lib/python3.10/dist-packages/sklearn/datasets/data/breast_cancer.csv".into())
}

/// Loads the 569-row Breast Cancer table (first line: counts and class
/// names, then 30 feature columns and a 0/1 target where 1 is benign).
fn breast_cancer() -> Option<Dataset> {
    let text = std::fs::read_to_string(breast_cancer_path()).ok()?;
    let mut lines = text.lines();
    lines.next()?;
    let header: Vec<String> = (0..30).map(|j| format!("c{j}")).chain(["target".to_string()]).collect();
    let body = std::iter::once(header.join(",")).chain(lines.map(str::to_string)).collect::<Vec<_>>().join("\n");
    let table = read_csv(body.as_bytes(), "target", "1").ok()?;
    let bin = binarize(&table, 10).ok()?;
    Dataset::new(bin.bits, table.labels, bin.descriptors).ok()
}

#[test]
fn breast_cancer_anchors() {
    let Some(data) = breast_cancer() else {
        report(9, "Breast Cancer anchors", true, &format!("SKIPPED: no dataset at {}", breast_cancer_path().display()));
        return;
    };
    let start = Instant::now();
    let n = data.rows() as f64;
    let accuracy = |errors: f64| 1.0 - errors / n;
    let best_negated = (0..data.cols())
        .map(|j| score(&Formula::literal(j, true), &data.x, &data.y, MetricKind::Accuracy).unwrap())
        .fold(0.0, f64::max);
    let pair = DepthOneProblem {
        x: &data.x,
        y: &data.y,
        operator: OperatorKind::And,
        max_literals: 2,
        min_literals: 2,
        lambda: 0.0,
        weights: ClassWeights::UNIT,
    }
    .brute_force(u128::MAX)
    .unwrap();
    let best_pair = accuracy(pair.weighted_errors);
    let elapsed = start.elapsed();
    let rule = Formula::new(Node::over_literals(pair.operator, &pair.literals)).to_text(&data.names());
    check(
        9,
        "Breast Cancer anchors",
        data.cols() == 300
            && (best_negated - 0.914).abs() <= 0.02
            && (best_pair - 0.944).abs() <= 0.02
            && elapsed < Duration::from_secs(120),
        format!(
            "{} features; best negated single feature {best_negated:.4} (want 0.914 ± 0.02); best 2-literal And {best_pair:.4} (want 0.944 ± 0.02) {rule}; {elapsed:.1?}",
            data.cols()
        ),
    );
}

#[test]
fn local_moves_stay_feasible() {
    let mut rng = seeded(10);
    let mut moves = 0usize;
    let mut violations = Vec::new();
    for _ in 0..100 {
        let m = rng.gen_range(2..=12);
        let c = rng.gen_range(3..=15);
        let mut proposer = LocalMoveProposer::new(m, Some(c));
        let mut rule = generate_initial_rule(m, Some(c), &mut rng).unwrap();
        for _ in 0..1000 {
            moves += 1;
            let candidate = proposer
                .propose(&rule, &mut rng)
                .and_then(|mv| apply_move(&rule, &mv))
                .and_then(|r| r.validate(Some(m), Some(c)).map(|_| r));
            match candidate {
                Ok(r) if r.complexity() <= c => {
                    if rng.gen_bool(0.5) {
                        rule = r;
                    }
                }
                Ok(r) => violations.push(format!("{r} exceeds {c}")),
                Err(e) => violations.push(format!("{rule}: {e}")),
            }
        }
    }
    check(
        10,
        "local moves stay feasible",
        violations.is_empty() && moves == 100_000,
        format!("{moves} moves from 100 starts, {} violations {:?}", violations.len(), violations.iter().take(3).collect::<Vec<_>>()),
    );
}

#[test]
fn crossval_is_deterministic() {
    let dir = tempfile::TempDir::new().unwrap();
    let mut csv = (0..6).map(|j| format!("f{j}")).collect::<Vec<_>>().join(",") + ",label\n";
    let mut rng = seeded(11);
    for _ in 0..120 {
        let row: Vec<bool> = (0..6).map(|_| rng.gen()).collect();
        let label = (row[0] && row[1]) || row[4] != rng.gen_bool(0.1);
        let cells: Vec<&str> = row.iter().map(|&b| if b { "1" } else { "0" }).collect();
        csv += &format!("{},{}\n", cells.join(","), if label { "yes" } else { "no" });
    }
    std::fs::write(dir.path().join("data.csv"), csv).unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        r#"seed = 7
workers = 1
[data]
path = "data.csv"
label = "label"
positive_label = "yes"
[protocol]
inner_splits = 4
[[classifiers]]
kind = "most-frequent"
[[classifiers]]
kind = "single-feature"
[[classifiers]]
kind = "depth-one"
operator = "AtLeast"
max_literals = 3
[[classifiers]]
kind = "local"
solver = { num_starts = 4, num_iterations = 300, max_complexity = 6 }
[[classifiers]]
kind = "non-local"
solver = { num_starts = 4, num_iterations = 300, max_complexity = 6 }
"#,
    )
    .unwrap();
    let run = || {
        let config = RunConfig::from_file(&config_path).unwrap();
        let data = config.data.load().unwrap();
        to_result_json(&crossval(&data, &config).unwrap()).unwrap()
    };
    let (a, b) = (run(), run());
    let classifiers = RunConfig::from_file(&config_path).unwrap().classifiers;
    check(
        11,
        "cross-validation is deterministic",
        a == b && classifiers.len() == 5 && matches!(classifiers[4], Classifier::NonLocal { .. }),
        format!("two single-worker runs produce {} and {} bytes, identical: {}", a.len(), b.len(), a == b),
    );
}

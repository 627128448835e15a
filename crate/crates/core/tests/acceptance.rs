//! Acceptance suite. Runs the desk-scale grid once and checks every
//! criterion against it, printing one PASS/FAIL line per criterion.
//! Exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use gpr_varimax::harness::cell::prepare_sample;
use gpr_varimax::harness::{
    self, run_cell, CellResult, CellStart, ConditionKey, Method, QClass, StationarityReport, StudyConfig, Thresholds,
};
use gpr_varimax::metrics::{match_components, mean_congruence};
use gpr_varimax::multistart::multi_start_prefixes;
use gpr_varimax::popgen::{back_check_factor_loading, generate_population, PopulationSpec};
use gpr_varimax::rng::{derive_seed, stream, tag};
use gpr_varimax::{
    adaptive_rotate, gpr_rotate, random_orthonormal, varimax_criterion, varimax_gradient, GprParams, LoadingMatrix,
};
use nalgebra::DMatrix;
use rand::Rng;

struct Grid {
    config: StudyConfig,
    cells: Vec<CellResult>,
    report: StationarityReport,
    seconds_per_k: Vec<(usize, Duration)>,
}

impl Grid {
    fn run() -> Self {
        let config = StudyConfig::default();
        let mut cells = Vec::new();
        let mut seconds_per_k = Vec::new();
        // Streams do not depend on other conditions, so per-k runs concatenate
        // to the full grid.
        for &k in &config.k_list {
            let start = Instant::now();
            let sub = StudyConfig { k_list: vec![k], ..config.clone() };
            cells.extend(harness::run_study(&sub).expect("desk grid runs"));
            seconds_per_k.push((k, start.elapsed()));
        }
        let report = StationarityReport::build(&cells, &Thresholds::default()).expect("scan");
        Self { config, cells, report, seconds_per_k }
    }

    fn elapsed(&self, k: usize) -> Duration {
        self.seconds_per_k.iter().find(|(kk, _)| *kk == k).map(|(_, d)| *d).unwrap()
    }

    fn keys(&self) -> Vec<ConditionKey> {
        let mut keys: Vec<_> = self.cells.iter().map(|c| c.condition().key).collect();
        keys.dedup();
        keys
    }

    fn identity(&self, key: ConditionKey) -> &CellResult {
        self.cells.iter().find(|c| c.condition().key == key && c.start_type == CellStart::Identity).unwrap()
    }

    fn random(&self, key: ConditionKey, q: usize) -> &CellResult {
        self.cells
            .iter()
            .find(|c| c.condition().key == key && c.start_type == CellStart::Random && c.q == q)
            .unwrap()
    }

    fn pairwise(&self, key: ConditionKey) -> &CellResult {
        self.cells.iter().find(|c| c.condition().key == key && c.method == Method::Pairwise).unwrap()
    }

    fn stationary(&self, k: usize, n: usize, kaiser: bool) -> QClass {
        self.report.get(k, n, kaiser).unwrap().stationary
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn key(k: usize, n: usize, kaiser: bool) -> ConditionKey {
    ConditionKey { k, n, kaiser }
}

fn population_fidelity() -> Outcome {
    let start = Instant::now();
    let pop = generate_population(&PopulationSpec::new(3, 0.5, 50_000, derive_seed(1, &[tag("accept")]))).unwrap();
    let a_star = pop.main_component_loading();
    let a = back_check_factor_loading(a_star, pop.model_communality(), pop.eigenvalues[0]).unwrap();
    let pass = (a_star - 0.61).abs() <= 0.005 && (a - 0.50).abs() <= 0.01 && start.elapsed().as_secs() < 60;
    outcome(pass, format!("population main loading {a_star:.4}, back-checked factor loading {a:.4}"))
}

fn describe(grid: &Grid, k: usize) -> String {
    let mut parts = Vec::new();
    for n in [100, 300] {
        for kaiser in [false, true] {
            parts.push(format!("n={n}{}: {}", if kaiser { "/kaiser" } else { "" }, grid.stationary(k, n, kaiser)));
        }
    }
    parts.join(", ")
}

fn table_row_k3(grid: &Grid) -> Outcome {
    let pass = [100, 300]
        .iter()
        .all(|&n| [false, true].iter().all(|&kaiser| grid.stationary(3, n, kaiser) == QClass::Min(10)))
        && grid.elapsed(3).as_secs() < 600;
    outcome(pass, format!("{} (expected 10 everywhere), {:.0}s", describe(grid, 3), grid.elapsed(3).as_secs_f64()))
}

fn within_one_step(found: QClass, expected: usize, schedule: &[usize]) -> bool {
    let target = schedule.iter().position(|&q| q == expected).unwrap();
    found.rank(schedule).is_some_and(|r| r.abs_diff(target) <= 1)
}

fn table_row_k6(grid: &Grid) -> Outcome {
    let schedule = &grid.config.q_schedule;
    let expected = [((100, false), 50), ((100, true), 50), ((300, false), 50), ((300, true), 10)];
    let pass = expected.iter().all(|&((n, kaiser), q)| within_one_step(grid.stationary(6, n, kaiser), q, schedule))
        && grid.elapsed(6).as_secs() < 1800;
    outcome(pass, format!("{} (expected 50, 50, 50, 10 +- one step), {:.0}s", describe(grid, 6), grid.elapsed(6).as_secs_f64()))
}

fn ordering_effects(grid: &Grid) -> Outcome {
    let mut failures = Vec::new();
    for key in grid.keys() {
        let (r, i) = (grid.random(key, 10).mean_c, grid.identity(key).mean_c);
        if r <= i {
            failures.push(format!("(a) k={} n={} kaiser={}: q=10 {r:.5} <= identity {i:.5}", key.k, key.n, key.kaiser));
        }
    }
    for &k in &grid.config.k_list {
        for kaiser in [false, true] {
            for &q in &grid.config.q_schedule {
                let (small, large) = (grid.random(key(k, 100, kaiser), q).mean_c, grid.random(key(k, 300, kaiser), q).mean_c);
                if large < small {
                    failures.push(format!("(b) k={k} kaiser={kaiser} q={q}: n=300 {large:.5} < n=100 {small:.5}"));
                }
            }
        }
    }
    for k in [9, 12] {
        for n in [100, 300] {
            for &q in &grid.config.q_schedule {
                let (raw, norm) = (grid.random(key(k, n, false), q).mean_c, grid.random(key(k, n, true), q).mean_c);
                if norm < raw {
                    failures.push(format!("(c) k={k} n={n} q={q}: kaiser {norm:.5} < raw {raw:.5}"));
                }
            }
        }
    }
    let detail = if failures.is_empty() { "all paired comparisons hold".to_string() } else { failures.join("; ") };
    outcome(failures.is_empty(), detail)
}

fn benchmark_dominance(grid: &Grid) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for c in grid.cells.iter().filter(|c| c.method == Method::Gpr) {
        let pairwise = grid.pairwise(c.condition().key).mean_c;
        let gap = pairwise - (c.mean_c - 0.001);
        worst = worst.min(gap);
        if gap < 0.0 {
            failures.push(format!("k={} n={} kaiser={} q={}: pairwise {pairwise:.5} vs gpr {:.5}", c.k, c.n, c.kaiser, c.q, c.mean_c));
        }
    }
    let mut detail = format!("{} violating cells, smallest margin {worst:.5}", failures.len());
    if !failures.is_empty() {
        detail = format!("{detail}: {}", failures.join("; "));
    }
    outcome(failures.is_empty(), detail)
}

fn value_ranges(grid: &Grid) -> Outcome {
    let (mut cmin, mut cmax, mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for c in &grid.cells {
        cmin = cmin.min(c.mean_c);
        cmax = cmax.max(c.mean_c);
        vmin = vmin.min(c.mean_v);
        vmax = vmax.max(c.mean_v);
    }
    let ranges_ok = cmin >= 0.55 && cmax <= 1.0 && vmin >= 0.007 && vmax <= 0.033;
    let mut plateau = Vec::new();
    for k in grid.config.k_list.iter().copied().filter(|&k| k <= 6) {
        for kaiser in [false, true] {
            let q = match grid.stationary(k, 300, kaiser) {
                QClass::Min(q) => q,
                QClass::GreaterThan(_) => *grid.config.q_schedule.last().unwrap(),
            };
            plateau.push(grid.random(key(k, 300, kaiser), q).mean_c);
        }
    }
    let plateau_min = plateau.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        ranges_ok && plateau_min >= 0.85,
        format!("c in [{cmin:.4}, {cmax:.4}], v in [{vmin:.5}, {vmax:.5}], lowest stationary c (k<=6, n=300) {plateau_min:.4}"),
    )
}

fn random_loadings(m: usize, k: usize, rng: &mut impl Rng) -> LoadingMatrix {
    LoadingMatrix::new(DMatrix::from_fn(m, k, |_, _| rng.random_range(-0.8..0.8))).unwrap()
}

fn property_suites(grid: &Grid) -> Outcome {
    let mut failures = Vec::new();
    let params = GprParams::default();

    let mut rng = stream(derive_seed(7, &[tag("descent")]));
    let (mut worst_orth, mut worst_comm) = (0.0_f64, 0.0_f64);
    for i in 0..1000 {
        let k = 2 + i % 11;
        let a = random_loadings(6 * k, k, &mut rng);
        let t0 = random_orthonormal(k, &mut rng);
        let sol = gpr_rotate(&a, &t0, &params).unwrap();
        if sol.f_trace.windows(2).any(|w| w[1] >= w[0]) {
            failures.push(format!("rotation {i}: f_trace not strictly decreasing"));
        }
        let t = sol.t.as_matrix();
        worst_orth = worst_orth.max((t.transpose() * t - DMatrix::identity(k, k)).abs().max());
        for (x, y) in sol.lambda.communalities().iter().zip(a.communalities()) {
            worst_comm = worst_comm.max((x - y).abs());
        }
    }
    if worst_orth > 1e-10 || worst_comm > 1e-10 {
        failures.push(format!("orthogonality {worst_orth:.1e}, communality {worst_comm:.1e}"));
    }

    let mut worst_rel = 0.0_f64;
    for i in 0..100 {
        let k = 1 + i % 12;
        let m = k + (i * 7) % (72 - k + 1);
        let l = random_loadings(m, k, &mut rng);
        // The gradient is of the minimised objective, the negated criterion.
        let g = varimax_gradient(&l);
        let h = 1e-5;
        let mut fd = DMatrix::zeros(m, k);
        for r in 0..m {
            for c in 0..k {
                let mut up = l.as_matrix().clone();
                up[(r, c)] += h;
                let mut down = l.as_matrix().clone();
                down[(r, c)] -= h;
                let f = |x: DMatrix<f64>| -varimax_criterion(&LoadingMatrix::new(x).unwrap());
                fd[(r, c)] = (f(up) - f(down)) / (2.0 * h);
            }
        }
        worst_rel = worst_rel.max((&g - &fd).norm() / g.norm().max(f64::MIN_POSITIVE));
    }
    if worst_rel > 1e-6 {
        failures.push(format!("gradient relative error {worst_rel:.1e}"));
    }

    let mut mismatches = 0;
    for i in 0..100 {
        let k = 1 + i % 6;
        let x = random_loadings(6 * k, k, &mut rng);
        let y = random_loadings(6 * k, k, &mut rng);
        let fast = mean_congruence(&match_components(&x, &y).unwrap());
        if (fast - brute_force_mean_congruence(&x, &y)).abs() > 1e-12 {
            mismatches += 1;
        }
    }
    if mismatches > 0 {
        failures.push(format!("{mismatches} matchings differ from brute force"));
    }

    let pop6 = harness::study_population(&grid.config, 6, 100).unwrap();
    let mut non_monotone = 0;
    for r in 0..100 {
        let s = prepare_sample(&key(6, 100, false), &pop6, &grid.config, r).unwrap();
        let mut starts = stream(derive_seed(3, &[tag("nested"), r as u64]));
        let res = multi_start_prefixes(&s.loadings, &[1, 10, 50], &params, &mut starts).unwrap();
        if res.windows(2).any(|w| w[1].best.criterion_v < w[0].best.criterion_v) {
            non_monotone += 1;
        }
    }
    if non_monotone > 0 {
        failures.push(format!("{non_monotone} samples with non-monotone best-of-q"));
    }

    let pop3 = harness::study_population(&grid.config, 3, 100).unwrap();
    let cond = grid.random(key(3, 100, true), 10).condition();
    let first = run_cell(&cond, &pop3, &grid.config).unwrap();
    let second = run_cell(&cond, &pop3, &grid.config).unwrap();
    if first != second || &first != grid.random(key(3, 100, true), 10) {
        failures.push("desk-scale cell re-run differs".to_string());
    }

    let detail = if failures.is_empty() {
        format!("max |T'T-I| {worst_orth:.1e}, max communality change {worst_comm:.1e}, max gradient rel. error {worst_rel:.1e}")
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn brute_force_mean_congruence(x: &LoadingMatrix, y: &LoadingMatrix) -> f64 {
    let k = x.ncols();
    let cong = |i: usize, j: usize| {
        let (a, b) = (x.as_matrix().column(i), y.as_matrix().column(j));
        (a.dot(&b) / (a.norm() * b.norm())).abs()
    };
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best = f64::NEG_INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let total: f64 = (0..k).map(|j| cong(p[j], j)).sum();
        best = best.max(total / k as f64);
    });
    best
}

fn permute(p: &mut Vec<usize>, start: usize, visit: &mut dyn FnMut(&[usize])) {
    if start == p.len() {
        visit(p);
        return;
    }
    for i in start..p.len() {
        p.swap(start, i);
        permute(p, start + 1, visit);
        p.swap(start, i);
    }
}

fn adaptive_stopping(grid: &Grid) -> Outcome {
    let schedule = [10, 50, 100, 500, 1000];
    let params = GprParams::default();
    let q_used = |k: usize, n: usize| -> Vec<usize> {
        let pop = harness::study_population(&grid.config, k, n).unwrap();
        (0..100)
            .map(|r| {
                let s = prepare_sample(&key(k, n, false), &pop, &grid.config, r).unwrap();
                let mut rng = stream(derive_seed(grid.config.base_seed, &[tag("adaptive"), k as u64, n as u64, r as u64]));
                adaptive_rotate(&s.loadings, &schedule, 1e-4, &params, &mut rng).unwrap().q_used
            })
            .collect()
    };
    let small = q_used(3, 300);
    let at_ten = small.iter().filter(|&&q| q == 10).count();
    let large = q_used(9, 100);
    let beyond = large.iter().filter(|&&q| q > 50).count();
    outcome(
        at_ten >= 90 && beyond > 50,
        format!("k=3 n=300 stops at 10 in {at_ten}/100; k=9 n=100 goes beyond 50 in {beyond}/100"),
    )
}

fn main() -> ExitCode {
    let mut all_pass = true;
    let mut print = |id: &str, name: &str, o: Outcome, t: Instant| {
        all_pass &= o.pass;
        println!(
            "criterion {id} {name}: {} ({}; {:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    };

    let t = Instant::now();
    print("1", "population fidelity", population_fidelity(), t);

    let t = Instant::now();
    let grid = Grid::run();
    eprintln!("desk grid: {} cells in {:.0}s", grid.cells.len(), t.elapsed().as_secs_f64());
    eprint!("{}", harness::report::class_text(&grid.report, "stationarity", |r| Some(r.stationary)));
    eprint!("{}", harness::report::class_text(&grid.report, "pairwise benchmark", |r| r.benchmark));

    let t = Instant::now();
    print("2", "stationarity k=3", table_row_k3(&grid), t);
    let t = Instant::now();
    print("3", "stationarity k=6", table_row_k6(&grid), t);
    let t = Instant::now();
    print("4", "ordering effects", ordering_effects(&grid), t);
    let t = Instant::now();
    print("5", "benchmark dominance", benchmark_dominance(&grid), t);
    let t = Instant::now();
    print("6", "value ranges", value_ranges(&grid), t);
    let t = Instant::now();
    print("7", "property suites", property_suites(&grid), t);
    let t = Instant::now();
    print("8", "adaptive stopping", adaptive_stopping(&grid), t);

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

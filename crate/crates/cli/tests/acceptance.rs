//! Acceptance suite: one test per shipping criterion.
//!
//! Every test prints a `criterion NN ...: PASS (t)` line (visible with
//! `--nocapture`) and enforces both the numerical tolerance and the runtime
//! budget of its criterion.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use ultragraphon::detect::detect_children;
use ultragraphon::fixtures;
use ultragraphon::graphon::{Graphon, Kernel, OneLevelIntra};
use ultragraphon::randomwalk::{
    closed_form_pseudo_inverse, collapse_experiment, pseudo_inverse, DEFAULT_ZERO_CUTOFF,
};
use ultragraphon::sample::{build_grid, sample_deterministic, Caps};
use ultragraphon::sis::{intervention_sweep, StrategyKind, SweepConfig};
use ultragraphon::spectral::{
    closed_form_projector, closed_form_spectrum, empirical_spectrum, median, pairing_experiment,
    pairing_summary,
};
use ultragraphon::threshold::{detectability_threshold, v_root_eigencheck, FiedlerSupport};

fn report(id: u32, name: &str, t0: Instant, budget: Duration) {
    let elapsed = t0.elapsed();
    println!("criterion {id:02} {name}: PASS ({elapsed:.2?})");
    assert!(elapsed < budget, "criterion {id} exceeded its {budget:?} budget: {elapsed:?}");
}

#[test]
fn criterion_01_closed_form_matches_eigensolver() {
    let t0 = Instant::now();
    let caps = Caps::default();
    for g in [fixtures::two_block(), fixtures::example_abc()] {
        for k in [2u32, 5, 10] {
            let grid = build_grid(g.tree(), k, &caps).unwrap();
            let n = grid.len();
            let closed = closed_form_spectrum(&g, &grid).unwrap().expanded();
            let det = sample_deterministic(&g, &grid, &caps).unwrap();
            let eig = empirical_spectrum(&det.laplacian).unwrap();
            let tol = 1e-8 * n as f64;
            for (a, b) in closed.iter().zip(&eig.values) {
                assert!((a - b).abs() < tol, "k={k} n={n}: {a} vs {b}");
            }
        }
    }
    report(1, "closed-form/eigensolver spectrum equivalence", t0, Duration::from_secs(10));
}

#[test]
fn criterion_02_projector_algebra() {
    let t0 = Instant::now();
    let caps = Caps::default();
    let g = fixtures::example_abc();
    let grid = build_grid(g.tree(), 10, &caps).unwrap();
    let n = grid.len();
    assert_eq!(n, 140);

    let mut projectors = Vec::new();
    for node in g.tree().nodes() {
        let pts = grid.points_in(node.id).unwrap();
        if (node.is_leaf() && pts < 2) || (!node.is_leaf() && node.children.len() < 2) {
            continue;
        }
        projectors.push(closed_form_projector(&g, &grid, node.id).unwrap());
    }

    let entry_tol = 1e-10;
    let mut sum = DMatrix::<f64>::from_element(n, n, 1.0 / n as f64);
    for (i, e) in projectors.iter().enumerate() {
        assert!(((e * e) - e).amax() < entry_tol, "E^2 != E at node {i}");
        assert!((e - e.transpose()).amax() < entry_tol, "E not symmetric at node {i}");
        sum += e;
        for (j, f) in projectors.iter().enumerate() {
            if i != j {
                assert!((e * f).amax() < entry_tol, "E_{i} E_{j} != 0");
            }
        }
    }
    let id = DMatrix::<f64>::identity(n, n);
    assert!((sum - id).amax() < entry_tol, "resolution of identity fails");
    report(2, "projector algebra at N_k = 140", t0, Duration::from_secs(5));
}

#[test]
fn criterion_03_eigenvalue_convergence() {
    let t0 = Instant::now();
    let seeds: Vec<u64> = (1..=10).collect();
    let g = fixtures::example_abc();
    let cells = pairing_experiment(&g, &[2, 10, 100], &seeds, &Caps::default()).unwrap();
    let summary = pairing_summary(&cells);
    let meds: Vec<f64> = summary.iter().map(|s| s.2).collect();
    assert_eq!(summary[0].1, 28);
    assert_eq!(summary[1].1, 140);
    assert_eq!(summary[2].1, 1400);
    assert!(meds[1] < meds[0], "median not decreasing 28 -> 140: {meds:?}");
    assert!(meds[2] < meds[1], "median not decreasing 140 -> 1400: {meds:?}");
    // N^{-1/2} scaling with 2x slack: med(1400) <= 2 * med(140) / sqrt(10)
    assert!(
        meds[2] <= 2.0 * meds[1] / 10f64.sqrt(),
        "scaling violated: {} vs {}",
        meds[2],
        2.0 * meds[1] / 10f64.sqrt()
    );
    report(3, "paired eigenvalue convergence", t0, Duration::from_secs(300));
}

#[test]
fn criterion_04_sign_structure_detection() {
    let t0 = Instant::now();
    let caps = Caps::default();
    let g = fixtures::example_abc();
    let root = g.tree().root().id;
    let mut exact = 0;
    for seed in 1..=10u64 {
        let r = detect_children(&g, 100, seed, root, None, &caps).unwrap();
        assert_eq!(r.expected_components, 3);
        if r.exact {
            exact += 1;
        }
    }
    assert!(exact >= 9, "root recovered exactly for only {exact}/10 seeds");

    // node C at N_k = 140: the small spectral gap may set the ambiguity
    // flag; the run itself must succeed for every seed.
    let c = g.tree().find("C").unwrap();
    for seed in 1..=10u64 {
        let r = detect_children(&g, 10, seed, c, None, &caps).unwrap();
        assert_eq!(r.expected_components, 3);
    }
    report(4, "sign-structure community detection", t0, Duration::from_secs(300));
}

#[test]
fn criterion_05_detectability_threshold() {
    let t0 = Instant::now();
    let caps = Caps::default();
    let tree = fixtures::example_abc_tree();
    let grid = build_grid(&tree, 10, &caps).unwrap();
    let c_node = tree.find("C").unwrap();

    let run = |w: f64| {
        let g = fixtures::fig9_threshold(w).unwrap();
        detectability_threshold(&g, &grid, &caps).unwrap()
    };
    let low = run(0.02);
    assert!((low.p_star - 0.135).abs() < 5e-4, "p* = {}", low.p_star);
    assert_eq!(low.fiedler_support, FiedlerSupport::Root);
    assert!(run(0.08).fiedler_support == FiedlerSupport::Root);
    let high = run(0.25);
    assert_eq!(high.fiedler_support, FiedlerSupport::SingleChild(c_node));

    // 15-point monotone sweep: the regime flag flips exactly once
    let mut flips = 0;
    let mut prev: Option<bool> = None;
    for i in 0..15 {
        let w = 0.02 + i as f64 * (0.25 - 0.02) / 14.0;
        let detectable = run(w).detectable;
        if let Some(p) = prev {
            if p != detectable {
                flips += 1;
            }
        }
        prev = Some(detectable);
    }
    assert_eq!(flips, 1, "regime flag flipped {flips} times");
    report(5, "detectability threshold at p* = 0.135", t0, Duration::from_secs(60));
}

#[test]
fn criterion_06_v_root_eigencheck() {
    let t0 = Instant::now();
    let caps = Caps::default();
    // every one-level fixture: the fig9 family across regimes plus a
    // constant-intra one-level graphon on the two-block tree
    let tree = fixtures::example_abc_tree();
    let grid = build_grid(&tree, 10, &caps).unwrap();
    for w in [0.02, 0.08, 0.25] {
        let g = fixtures::fig9_threshold(w).unwrap();
        let r = v_root_eigencheck(&g, &grid, &caps).unwrap();
        assert!(r < 1e-10, "fig9 residual {r} at w = {w}");
    }
    let two = Graphon::one_level(
        fixtures::two_block_tree(),
        Kernel::Exponential { scale: 0.1 },
        0.1,
        OneLevelIntra::Constant(vec![0.9, 0.7]),
    )
    .unwrap();
    let grid2 = build_grid(two.tree(), 20, &caps).unwrap();
    let r = v_root_eigencheck(&two, &grid2, &caps).unwrap();
    assert!(r < 1e-10, "constant-intra residual {r}");
    report(6, "V_root eigencheck residual", t0, Duration::from_secs(1));
}

#[test]
fn criterion_07_pseudo_inverse_equivalence() {
    let t0 = Instant::now();
    let caps = Caps::default();
    for (g, k) in [(fixtures::two_block_h1(), 200u32), (fixtures::three_level_h1(), 100)] {
        let grid = build_grid(g.tree(), k, &caps).unwrap();
        let n = grid.len();
        assert!(n <= 400);
        let det = sample_deterministic(&g, &grid, &caps).unwrap();
        let eig_route = pseudo_inverse(&det.laplacian, DEFAULT_ZERO_CUTOFF).unwrap();
        let assembled = closed_form_pseudo_inverse(&g, &grid).unwrap();
        let gap = (assembled.scaled_moore_penrose() - eig_route.matrix * n as f64).amax();
        assert!(gap < 1e-10, "entrywise gap {gap} at N_k = {n}");
    }
    report(7, "nu-assembled pseudo-inverse equivalence", t0, Duration::from_secs(30));
}

#[test]
fn criterion_08_commute_collapse() {
    let t0 = Instant::now();
    let g = fixtures::two_block_h1();
    let seeds: Vec<u64> = (1..=10).collect();
    let tree = g.tree().clone();
    let nu = g.nu(tree.finest()[0]).unwrap();
    let limit = 2.0 / nu;

    let cells = collapse_experiment(&g, &[20, 200, 700], &seeds, 200, &Caps::default()).unwrap();
    let med = |k: u32| {
        median(
            cells
                .iter()
                .filter(|c| c.k == k && !c.skipped)
                .map(|c| c.median_error)
                .collect::<Vec<_>>(),
        )
    };
    let (m40, m400, m1400) = (med(20), med(200), med(700));
    assert!(m400 < m40, "not decreasing: {m40} -> {m400}");
    assert!(m1400 < m400, "not decreasing: {m400} -> {m1400}");
    assert!(m1400 < 0.1 * limit, "final error {m1400} >= 10% of limit {limit}");

    // Dual-nu reporting: the limit written as nu of the father of each
    // endpoint (a sampled leaf) names the finest interval containing it, so
    // both columns coincide by construction and both pass the same check.
    for c in cells.iter().filter(|c| !c.skipped) {
        for r in &c.rows {
            let leaf_father_i = tree.finest()[r.finest_i];
            let leaf_father_j = tree.finest()[r.finest_j];
            let alt = 1.0 / g.nu(leaf_father_i).unwrap() + 1.0 / g.nu(leaf_father_j).unwrap();
            assert_eq!(alt, r.limit, "leaf-father column diverged from the finest column");
        }
    }
    report(8, "commute-time collapse", t0, Duration::from_secs(600));
}

#[test]
fn criterion_09_sis_threshold_dichotomy() {
    let t0 = Instant::now();
    let g = fixtures::sis_heterogeneous();
    let k = fixtures::k_for_target(g.tree(), 260);
    let mut cfg = SweepConfig::new(StrategyKind::Global, vec![2, 3, 4]);
    cfg.k = k;
    cfg.seeds = vec![5];
    cfg.budgets = (0..=20).map(|b| b as f64 / 20.0).collect(); // 21 budgets
    assert_eq!(cfg.taus.len(), 17);
    let out = intervention_sweep(&g, &cfg, &Caps::default()).unwrap();
    assert!(out.cells.len() >= 50);
    let n = 260.0;
    for c in &out.cells {
        let supercritical = c.lambda1 * c.tau / n > 1.0 + 1e-6;
        let endemic = c.rho_inf > 1e-4;
        assert_eq!(
            endemic, supercritical,
            "dichotomy violated at tau {} B {}: rho {} lambda1 {}",
            c.tau, c.budget, c.rho_inf, c.lambda1
        );
    }
    report(9, "SIS threshold dichotomy over the sweep", t0, Duration::from_secs(300));
}

#[test]
fn criterion_10_strategy_ordering() {
    let t0 = Instant::now();
    let caps = Caps::default();
    let count = |g: &Graphon, strat: StrategyKind| {
        let mut cfg = SweepConfig::new(strat, vec![2, 3, 4]);
        cfg.k = fixtures::k_for_target(g.tree(), 260);
        cfg.seeds = vec![1, 2, 3];
        cfg.budgets = (0..=19).map(|b| b as f64 / 20.0).collect();
        intervention_sweep(g, &cfg, &caps).unwrap().disease_free_count(1e-4)
    };

    let hom = fixtures::sis_homogeneous();
    let hom_global = count(&hom, StrategyKind::Global);
    let hom_targeted = count(&hom, StrategyKind::Targeted);
    assert!(
        hom_global >= hom_targeted,
        "homogeneous: global {hom_global} < targeted {hom_targeted}"
    );

    let het = fixtures::sis_heterogeneous();
    let het_global = count(&het, StrategyKind::Global);
    let het_targeted = count(&het, StrategyKind::Targeted);
    assert!(
        het_targeted > het_global,
        "heterogeneous: targeted {het_targeted} <= global {het_global}"
    );
    report(10, "intervention strategy ordering", t0, Duration::from_secs(900));
}

#[test]
fn criterion_11_manifest_determinism() {
    let t0 = Instant::now();
    let bin = env!("CARGO_BIN_EXE_ultragraphon");
    let dir = std::env::temp_dir().join(format!("ultragraphon-accept-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let runs = [
        (
            "spectrum",
            r#"{"experiment":"spectrum","tree":{"fixture":"two-block"},"k":[2,5],"seeds":[1,2],"out":"OUT"}"#,
            vec!["spectra.csv"],
        ),
        (
            "sis",
            r#"{"experiment":"sis","tree":{"fixture":"sis-heterogeneous"},"k":[1],"seeds":[1],"out":"OUT",
               "params":{"strategy":"targeted","level_set":[2,3],"tau":[6,10],"budgets":[0.0,0.5]}}"#,
            vec!["sis_sweep.csv"],
        ),
        (
            "detect",
            r#"{"experiment":"detect","tree":{"fixture":"example-abc"},"k":[2],"seeds":[1,2],"out":"OUT",
               "params":{"nodes":["root","C"]}}"#,
            vec!["detection.csv"],
        ),
    ];

    for (cmd, template, files) in runs {
        let out_a = dir.join(format!("{cmd}-a"));
        let out_b = dir.join(format!("{cmd}-b"));
        let cfg_path = dir.join(format!("{cmd}.json"));
        std::fs::write(&cfg_path, template.replace("OUT", out_a.to_str().unwrap())).unwrap();

        let status = std::process::Command::new(bin)
            .args([cmd, "--config", cfg_path.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success(), "{cmd}: first run failed");

        // replay from the manifest into a fresh directory
        let manifest = out_a.join("manifest.json");
        let status = std::process::Command::new(bin)
            .args([
                cmd,
                "--config",
                manifest.to_str().unwrap(),
                "--out",
                out_b.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success(), "{cmd}: manifest replay failed");

        for f in files {
            let a = std::fs::read(out_a.join(f)).unwrap();
            let b = std::fs::read(out_b.join(f)).unwrap();
            assert_eq!(a, b, "{cmd}/{f}: bytes differ between config run and manifest replay");
            if f == "sis_sweep.csv" {
                let header = String::from_utf8_lossy(&a);
                assert!(header.starts_with(
                    "strategy,level_set,c,seed,tau,B,rho_inf,lambda1,tau_max_crit,tau_avg_crit\n"
                ));
            }
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    report(11, "manifest replay reproduces byte-identical CSVs", t0, Duration::from_secs(300));
}

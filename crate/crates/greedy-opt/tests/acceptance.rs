//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture`).
//!
//! Instances are planted with analytically known constants, so every
//! bound and certificate is checked against exact values rather than
//! fitted ones.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use greedy_opt::analysis::sampling::{random_unit, DomainSampler};
use greedy_opt::analysis::smoothness::default_u_grid;
use greedy_opt::analysis::{
    egca_dominance_check, estimate_smoothness, incoherence_constant, recursion_check,
    remaining_support_l1, verify_certificates, IncoherenceMode, IncoherenceProfile,
};
use greedy_opt::cli::{run_core, sparse_stand_in};
use greedy_opt::config::{AnalysisFlags, AnalysisParams, Config};
use greedy_opt::greedy::{run_greedy, SolverConfig, Variant, WeakMode};
use greedy_opt::linalg::dot;
use greedy_opt::problems::{
    make_problem, DictionaryKind, ObjectiveKind, PlantedKind, ProblemSpec, SecondBasis,
};
use greedy_opt::space::{norm_of, NormSpec};
use greedy_opt::weakness::WeaknessSequence;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn verdict(number: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {number:02} {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {number} failed: {detail}");
}

fn base_config(seed: u64) -> Config {
    Config {
        variant: Variant::Wcga,
        seed,
        problem: ProblemSpec {
            kind: ObjectiveKind::IdentityQuadratic,
            dimension: 64,
            dictionary: DictionaryKind::Canonical,
            planted: PlantedKind::Sparse { k: 5 },
            norm: NormSpec::L2,
            seed,
            dict_seed: None,
        },
        solver: SolverConfig {
            max_iterations: 20,
            stop_gap: Some(1e-10),
            ..SolverConfig::default()
        },
        analyses: AnalysisFlags::default(),
        analysis: AnalysisParams::default(),
        verify_seeds: 0,
        output_dir: None,
    }
}

/// Coherent family: identity + random rotation in dimension 10, one
/// dictionary shared across seeds. Sub-collections of up to S = 8 < 10
/// atoms stay well conditioned, so the enumerated constant is finite and
/// informative; K = 3 and m <= 5 keep K + m <= S.
const ROTATION_DIM: usize = 10;
const ROTATION_S: usize = 8;
const ROTATION_K: usize = 3;
const ROTATION_M: usize = 5;
const ROTATION_DICT_SEED: u64 = 4242;

fn rotation_config(seed: u64) -> Config {
    let mut cfg = base_config(seed);
    cfg.problem.dimension = ROTATION_DIM;
    cfg.problem.dictionary = DictionaryKind::TwoOrthoUnion {
        second: SecondBasis::Rotation,
    };
    cfg.problem.dict_seed = Some(ROTATION_DICT_SEED);
    cfg.problem.planted = PlantedKind::Sparse { k: ROTATION_K };
    cfg.problem.seed = seed;
    cfg.solver.stop_gap = None;
    cfg.solver.max_iterations = ROTATION_M;
    cfg.analyses.bounds = true;
    cfg.analysis.s = Some(ROTATION_S);
    cfg.analysis.k = Some(ROTATION_K);
    cfg
}

/// The exact incoherence constant of the shared rotation dictionary,
/// enumerated once per test binary.
fn rotation_incoherence() -> &'static IncoherenceProfile {
    static PROFILE: OnceLock<IncoherenceProfile> = OnceLock::new();
    PROFILE.get_or_init(|| {
        let bundle = make_problem(&rotation_config(0).problem).expect("rotation problem");
        incoherence_constant(
            &bundle.dictionary,
            ROTATION_K,
            ROTATION_S,
            0.5,
            IncoherenceMode::Exact,
            10_000_000,
            0,
        )
        .expect("exact enumeration")
    })
}

#[test]
fn acceptance_01_exact_sparse_recovery() {
    let started = Instant::now();
    let mut worst_gap = 0.0_f64;
    for seed in 0..100u64 {
        let cfg = base_config(seed);
        for variant in [Variant::Wcga, Variant::Egca] {
            let report = run_core(&cfg.clone().with_variant(variant), None).unwrap();
            let gap = report.final_gap.unwrap();
            worst_gap = worst_gap.max(gap);
            assert_eq!(
                report.iterations, 5,
                "seed {seed} {variant} took {} iterations",
                report.iterations
            );
            assert!(gap <= 1e-10, "seed {seed} {variant} gap {gap:.3e}");
        }
    }
    let elapsed = started.elapsed();
    verdict(
        1,
        "exact-sparse-recovery",
        elapsed < Duration::from_secs(5),
        &format!("100 seeds x 2 drivers, worst gap {worst_gap:.3e}, {elapsed:.2?} < 5 s"),
    );
}

fn bound_family(
    variant: Variant,
    canonical_modes: &[(f64, WeakMode)],
    seeds: u64,
) -> (usize, usize) {
    let mut checked = 0usize;
    let mut violations = 0usize;
    // Orthonormal family with analytic constants.
    for seed in 0..seeds {
        for &(t, mode) in canonical_modes {
            let mut cfg = base_config(seed).with_variant(variant);
            cfg.analyses.bounds = true;
            cfg.solver.stop_gap = None;
            cfg.solver.max_iterations = 10;
            cfg.solver.weakness = WeaknessSequence::constant(t).unwrap();
            cfg.solver.weak_mode = mode;
            let report = run_core(&cfg, None).unwrap();
            let check = report.analyses.bound_check.unwrap();
            checked += check.checked;
            violations += check.violations.len();
        }
    }
    // Coherent rotation family with the exact enumerated constant.
    let profile = rotation_incoherence();
    for seed in 0..seeds {
        for &(t, mode) in canonical_modes {
            let mut cfg = rotation_config(seed).with_variant(variant);
            cfg.solver.weakness = WeaknessSequence::constant(t).unwrap();
            cfg.solver.weak_mode = mode;
            let report = run_core(&cfg, Some(profile)).unwrap();
            let check = report.analyses.bound_check.unwrap();
            checked += check.checked;
            violations += check.violations.len();
        }
    }
    (checked, violations)
}

#[test]
fn acceptance_02_thm21_bound_wcga() {
    let started = Instant::now();
    let modes = [(1.0, WeakMode::Exact), (0.5, WeakMode::Adversarial)];
    let (checked, violations) = bound_family(Variant::Wcga, &modes, 100);
    let elapsed = started.elapsed();
    let v = rotation_incoherence().v;
    verdict(
        2,
        "thm21-gap-bound",
        violations == 0 && elapsed < Duration::from_secs(60),
        &format!(
            "{checked} checked points, {violations} violations, coherent V = {v:.3}, {elapsed:.2?} < 60 s"
        ),
    );
}

#[test]
fn acceptance_03_thm22_bound_egca() {
    let started = Instant::now();
    // The energy rule has no weakness factor; its bound drops t.
    let (checked, violations) = bound_family(Variant::Egca, &[(1.0, WeakMode::Exact)], 100);
    let elapsed = started.elapsed();
    verdict(
        3,
        "thm22-gap-bound",
        violations == 0 && elapsed < Duration::from_secs(60),
        &format!("{checked} checked points, {violations} violations, {elapsed:.2?} < 60 s"),
    );
}

fn tail_config(seed: u64) -> Config {
    let mut cfg = base_config(seed);
    cfg.problem.planted = PlantedKind::SparseWithTail {
        k: 5,
        tail_norm: 0.01,
    };
    cfg.solver.stop_gap = None;
    cfg.solver.max_iterations = 12;
    cfg
}

#[test]
fn acceptance_04_epsilon_branch() {
    // gamma = beta = 1, eps = 0.01: the stall ceiling is
    // 8 eps^2 + 2 eps^2 = 1e-3.
    let ceiling = 8.0 * 1e-4 + 2.0 * 1e-4;
    assert_eq!(ceiling, 1e-3);
    let mut worst = 0.0_f64;
    for seed in 0..50u64 {
        for variant in [Variant::Wcga, Variant::Egca] {
            let cfg = tail_config(seed).with_variant(variant);
            let report = run_core(&cfg, None).unwrap();
            let gap = report.final_gap.unwrap();
            worst = worst.max(gap);
            assert!(
                gap <= ceiling,
                "seed {seed} {variant} stalled at gap {gap:.3e}"
            );
        }
    }
    verdict(
        4,
        "epsilon-branch",
        worst <= ceiling,
        &format!("50 seeds x 2 drivers, worst large-m gap {worst:.3e} <= {ceiling:.1e}"),
    );
}

#[test]
fn acceptance_05_smoothness_sandwich() {
    let specs: [(&str, ObjectiveKind, usize, PlantedKind); 3] = [
        (
            "identity",
            ObjectiveKind::IdentityQuadratic,
            8,
            PlantedKind::Sparse { k: 3 },
        ),
        (
            "general",
            ObjectiveKind::GeneralQuadratic { rows: 48 },
            6,
            PlantedKind::Sparse { k: 3 },
        ),
        (
            "logistic",
            ObjectiveKind::RegularizedLogistic {
                rows: 40,
                delta: 0.1,
            },
            6,
            PlantedKind::None,
        ),
    ];
    let mut detail = String::new();
    for (name, kind, dim, planted) in specs {
        let mut cfg = base_config(11);
        cfg.problem.kind = kind;
        cfg.problem.dimension = dim;
        cfg.problem.planted = planted;
        let bundle = make_problem(&cfg.problem).unwrap();
        let (gamma, q) = bundle.constants.gamma.zip(bundle.constants.q).unwrap();
        let report = verify_certificates(
            &bundle.objective,
            None,
            &bundle.dictionary,
            gamma,
            q,
            10_000,
            501,
        )
        .unwrap();
        assert_eq!(
            report.sandwich.violations, 0,
            "{name}: sandwich violated, lower {:.3e} upper {:.3e}",
            report.sandwich.min_lower_slack, report.sandwich.min_upper_slack
        );
        assert!(report.sandwich.min_lower_slack >= -1e-9);
        assert!(report.sandwich.min_upper_slack >= -1e-9);
        detail.push_str(&format!(
            "{name} lower {:.2e} upper {:.2e}; ",
            report.sandwich.min_lower_slack, report.sandwich.min_upper_slack
        ));
    }

    // Identity quadratic: the expansion term is exactly u^2 ||y||^2.
    let bundle = make_problem(&base_config(13).problem).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let sampler = DomainSampler::new(&bundle.objective, 16, &mut rng).unwrap();
    let mut worst_dev = 0.0_f64;
    for _ in 0..10_000 {
        let x = sampler.sample(&bundle.objective, &mut rng).unwrap();
        let y = random_unit(&mut rng, 64, NormSpec::L2);
        let u = 10f64.powf(rng.random_range(-3.0..0.0));
        let expansion = bundle.objective.value(&x.add_scaled(u, &y))
            - bundle.objective.value(&x)
            - u * dot(bundle.objective.gradient(&x).as_slice(), y.as_slice());
        let middle = u * u * norm_of(&y, NormSpec::L2).powi(2);
        worst_dev = worst_dev.max((expansion - middle).abs());
    }
    verdict(
        5,
        "smoothness-sandwich",
        worst_dev <= 1e-9,
        &format!("{detail}identity closed-form deviation {worst_dev:.2e} <= 1e-9"),
    );
}

/// Every family the bound and recovery criteria run.
fn acceptance_families() -> Vec<(String, Config)> {
    let mut families = vec![];
    for seed in 0..100u64 {
        families.push((format!("recovery-wcga-{seed}"), base_config(seed)));
        families.push((
            format!("recovery-egca-{seed}"),
            base_config(seed).with_variant(Variant::Egca),
        ));
        let mut adv = base_config(seed);
        adv.solver.stop_gap = None;
        adv.solver.max_iterations = 10;
        adv.solver.weakness = WeaknessSequence::constant(0.5).unwrap();
        adv.solver.weak_mode = WeakMode::Adversarial;
        families.push((format!("adversarial-{seed}"), adv));
        families.push((format!("rotation-{seed}"), {
            let mut cfg = rotation_config(seed);
            cfg.analyses.bounds = false;
            cfg
        }));
    }
    for seed in 0..50u64 {
        families.push((format!("tail-{seed}"), tail_config(seed)));
    }
    families
}

#[test]
fn acceptance_06_orthogonality_certificate() {
    let mut worst = 0.0_f64;
    let mut records = 0usize;
    for (name, cfg) in acceptance_families() {
        let bundle = make_problem(&cfg.problem).unwrap();
        let run = run_greedy(
            cfg.variant,
            &bundle.objective,
            &bundle.dictionary,
            &cfg.solver,
            bundle.reference.as_ref(),
        )
        .unwrap();
        for r in &run.records[1..] {
            let res = r.orth_residual.unwrap();
            worst = worst.max(res);
            records += 1;
            assert!(res <= 1e-10, "{name} m {} residual {res:.3e}", r.m);
        }
        // Recompute independently from the recorded coefficients on a
        // sample of runs.
        if name.ends_with("-0") || name.ends_with("-1") {
            let report = verify_certificates(
                &bundle.objective,
                Some(&run),
                &bundle.dictionary,
                1.0,
                2.0,
                50,
                9,
            )
            .unwrap();
            let orth = report.orthogonality.unwrap();
            assert!(
                orth.max_recomputed <= 1e-10,
                "{name} recomputed residual {:.3e}",
                orth.max_recomputed
            );
        }
    }
    verdict(
        6,
        "orthogonality-certificate",
        worst <= 1e-10,
        &format!("{records} recorded iterations, worst residual {worst:.3e} <= 1e-10"),
    );
}

#[test]
fn acceptance_07_decrease_recursion() {
    let mut checked = 0usize;
    let mut worst_slack = f64::INFINITY;
    for (name, cfg) in acceptance_families() {
        let bundle = make_problem(&cfg.problem).unwrap();
        let stand_in = sparse_stand_in(&bundle).unwrap().unwrap();
        let run = run_greedy(
            cfg.variant,
            &bundle.objective,
            &bundle.dictionary,
            &cfg.solver,
            bundle.reference.as_ref(),
        )
        .unwrap();
        let e_feps = bundle.objective.value(&stand_in.point);
        let l1 = remaining_support_l1(
            &stand_in.support,
            &stand_in.values,
            &run.state.selected,
            run.iterations(),
        );
        let report = recursion_check(&run, 1.0, e_feps, &l1);
        assert!(report.pass, "{name}: recursion violated");
        checked += report.checked;
        for row in &report.rows {
            if let Some(slack) = row.slack {
                worst_slack = worst_slack.min(slack);
                assert!(slack >= -1e-9, "{name} n {} slack {slack:.3e}", row.n);
            }
        }
    }
    verdict(
        7,
        "decrease-recursion",
        checked > 0,
        &format!("{checked} iterations checked, worst slack {worst_slack:.3e} >= -1e-9"),
    );
}

#[test]
fn acceptance_08_qualitative_rate() {
    let started = Instant::now();
    let mut cfg = base_config(21);
    cfg.problem.dimension = 256;
    cfg.problem.planted = PlantedKind::InverseSquare;
    cfg.solver.stop_gap = None;
    cfg.solver.max_iterations = 200;
    cfg.analyses.thm11_rate = true;
    cfg.analysis.rate_m = (10, 200);
    let report = run_core(&cfg, None).unwrap();
    let rate = report.analyses.rate.unwrap();
    let elapsed = started.elapsed();
    verdict(
        8,
        "qualitative-rate",
        rate.pass && elapsed < Duration::from_secs(30),
        &format!(
            "log-log slope {:.3} <= {:.1} over {} points, {elapsed:.2?} < 30 s",
            rate.slope, rate.threshold, rate.points_used
        ),
    );
}

#[test]
fn acceptance_09_egca_single_step_dominance() {
    let mut compared = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..20u64 {
        let mut cfg = base_config(seed);
        cfg.problem.dimension = 8;
        cfg.problem.dictionary = DictionaryKind::TwoOrthoUnion {
            second: SecondBasis::Hadamard,
        };
        cfg.problem.planted = PlantedKind::Sparse { k: 3 };
        cfg.solver.stop_gap = None;
        cfg.solver.max_iterations = 6;
        let bundle = make_problem(&cfg.problem).unwrap();
        let run = run_greedy(
            Variant::Egca,
            &bundle.objective,
            &bundle.dictionary,
            &cfg.solver,
            bundle.reference.as_ref(),
        )
        .unwrap();
        let check =
            egca_dominance_check(&bundle.objective, &bundle.dictionary, &run, 1e-12).unwrap();
        compared += check.compared;
        violations += check.violations;
        worst = worst.max(check.max_excess);
    }
    verdict(
        9,
        "egca-dominance",
        violations == 0,
        &format!(
            "{compared} states over 20 seeds, worst excess {worst:.2e}, {violations} violations"
        ),
    );
}

#[test]
fn acceptance_10_estimator_sanity() {
    // Smoothness fit on quadratics, without leaning on declared values.
    let identity = make_problem(&base_config(31).problem).unwrap();
    let fit = estimate_smoothness(
        &identity.objective,
        NormSpec::L2,
        &default_u_grid(),
        60,
        101,
    )
    .unwrap();
    assert!(
        (fit.fitted_gamma - 1.0).abs() <= 0.01,
        "identity gamma fit {}",
        fit.fitted_gamma
    );
    assert!(
        (fit.fitted_q - 2.0).abs() <= 1e-3,
        "identity q fit {}",
        fit.fitted_q
    );

    let mut general_cfg = base_config(32);
    general_cfg.problem.kind = ObjectiveKind::GeneralQuadratic { rows: 24 };
    general_cfg.problem.dimension = 8;
    let general = make_problem(&general_cfg.problem).unwrap();
    let analytic = general.constants.gamma.unwrap();
    let gfit =
        estimate_smoothness(&general.objective, NormSpec::L2, &default_u_grid(), 60, 102).unwrap();
    assert!(
        (gfit.fitted_gamma - analytic).abs() <= 0.01 * analytic,
        "general gamma fit {} vs analytic {analytic}",
        gfit.fitted_gamma
    );
    assert!((gfit.fitted_q - 2.0).abs() <= 1e-3);

    // Orthonormal dictionaries sit at V = 1 for r = 1/2.
    let dict = greedy_opt::dictionary::canonical_dictionary(8, NormSpec::L2).unwrap();
    let exact =
        incoherence_constant(&dict, 3, 6, 0.5, IncoherenceMode::Exact, 10_000_000, 0).unwrap();
    assert!((exact.v - 1.0).abs() <= 1e-9, "orthonormal V {}", exact.v);

    // Monte Carlo never exceeds exact enumeration.
    let mut worst_ratio = 0.0_f64;
    for seed in 0..20u64 {
        let mut cfg = base_config(seed + 40);
        cfg.problem.dimension = 6;
        cfg.problem.dictionary = DictionaryKind::GaussianNormalized { atoms: 9 };
        cfg.problem.planted = PlantedKind::Sparse { k: 2 };
        let bundle = make_problem(&cfg.problem).unwrap();
        let ex = incoherence_constant(
            &bundle.dictionary,
            3,
            6,
            0.5,
            IncoherenceMode::Exact,
            10_000_000,
            0,
        )
        .unwrap();
        let mc = incoherence_constant(
            &bundle.dictionary,
            3,
            6,
            0.5,
            IncoherenceMode::MonteCarlo,
            2_000,
            seed,
        )
        .unwrap();
        worst_ratio = worst_ratio.max(mc.v / ex.v);
        assert!(
            mc.v <= ex.v * (1.0 + 1e-9),
            "seed {seed}: monte carlo {} above exact {}",
            mc.v,
            ex.v
        );
    }
    verdict(
        10,
        "estimator-sanity",
        true,
        &format!(
            "gamma fits {:.6}/{:.6}, orthonormal V {:.9}, worst mc/exact {worst_ratio:.4}",
            fit.fitted_gamma, gfit.fitted_gamma, exact.v
        ),
    );
}

#[test]
fn acceptance_11_selftest_determinism() {
    let bin = env!("CARGO_BIN_EXE_greedy-opt");
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        let status = std::process::Command::new(bin)
            .args(["selftest", "--seed", "5", "--out"])
            .arg(out)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "selftest exited with {status}");
    }
    let mut names: Vec<String> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert!(names.contains(&"selftest.json".to_string()));
    assert!(names.iter().any(|n| n.ends_with(".csv")));
    let mut compared = 0usize;
    for name in &names {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical selftest runs");
        compared += 1;
    }
    verdict(
        11,
        "selftest-determinism",
        compared >= 2,
        &format!("{compared} output files byte-identical across runs"),
    );
}

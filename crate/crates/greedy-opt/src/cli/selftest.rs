//! Built-in smoke suites: scaled-down versions of the acceptance checks,
//! runnable from the command line with deterministic outputs.

use std::path::Path;

use serde::Serialize;

use crate::analysis::smoothness::default_u_grid;
use crate::analysis::{
    egca_dominance_check, estimate_smoothness, incoherence_constant, recursion_check,
    remaining_support_l1, verify_certificates, IncoherenceMode,
};
use crate::cli::{bound_check, bound_series, run_core, sparse_stand_in};
use crate::config::{AnalysisFlags, AnalysisParams, Config};
use crate::error::Result;
use crate::greedy::{run_greedy, SolverConfig, Variant, WeakMode};
use crate::problems::{
    make_problem, DictionaryKind, ObjectiveKind, PlantedKind, ProblemSpec, SecondBasis,
};
use crate::report::{csv_string, json_string};
use crate::space::NormSpec;
use crate::weakness::WeaknessSequence;

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestOutcome {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
    pub pass: bool,
}

fn planted_config(seed: u64, dimension: usize, k: usize) -> Config {
    Config {
        variant: Variant::Wcga,
        seed,
        problem: ProblemSpec {
            kind: ObjectiveKind::IdentityQuadratic,
            dimension,
            dictionary: DictionaryKind::Canonical,
            planted: PlantedKind::Sparse { k },
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

struct Suite {
    results: Vec<SuiteResult>,
}

impl Suite {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        self.results.push(SuiteResult {
            name: name.to_string(),
            pass,
            detail,
        });
    }
}

pub fn selftest(seed: u64, out_dir: Option<&Path>) -> Result<SelftestOutcome> {
    let mut suite = Suite { results: vec![] };
    let mut artifacts: Vec<(&'static str, String)> = vec![];

    // Exact recovery in exactly K steps, both drivers, same selections.
    {
        let mut pass = true;
        let mut detail = String::new();
        for offset in 0..3u64 {
            let cfg = planted_config(seed + offset, 64, 5);
            let wcga = run_core(&cfg, None)?;
            let egca = run_core(&cfg.clone().with_variant(Variant::Egca), None)?;
            let ok = wcga.iterations == 5
                && egca.iterations == 5
                && wcga.final_gap.unwrap_or(f64::MAX) <= 1e-10
                && egca.final_gap.unwrap_or(f64::MAX) <= 1e-10
                && wcga
                    .records
                    .iter()
                    .zip(&egca.records)
                    .all(|(a, b)| a.atom_index == b.atom_index && a.sign == b.sign);
            pass &= ok;
            if offset == 0 {
                detail = format!(
                    "wcga gap {:.3e} in {} steps",
                    wcga.final_gap.unwrap_or(f64::NAN),
                    wcga.iterations
                );
                artifacts.push(("recovery_wcga.csv", csv_string(&wcga.records, None)));
                artifacts.push(("recovery_egca.csv", csv_string(&egca.records, None)));
            }
        }
        suite.record("recovery", pass, detail);
    }

    // Gap bound on the orthonormal planted family, three driver modes.
    {
        let mut violations = 0usize;
        let mut checked = 0usize;
        for offset in 0..4u64 {
            for mode in 0..3 {
                let mut cfg = planted_config(seed + 100 + offset, 64, 5);
                cfg.analyses.bounds = true;
                cfg.solver.stop_gap = None;
                cfg.solver.max_iterations = 10;
                match mode {
                    0 => {}
                    1 => {
                        cfg.solver.weakness = WeaknessSequence::Constant(0.5);
                        cfg.solver.weak_mode = WeakMode::Adversarial;
                    }
                    _ => cfg.variant = Variant::Egca,
                }
                let report = run_core(&cfg, None)?;
                let check = report.analyses.bound_check.unwrap();
                checked += check.checked;
                violations += check.violations.len();
            }
        }
        suite.record(
            "bound_orthonormal",
            violations == 0,
            format!("{checked} points checked, {violations} violations"),
        );
    }

    // Gap bound on a coherent two-basis dictionary with measured V.
    {
        let mut violations = 0usize;
        let mut checked = 0usize;
        let mut v_used = 0.0;
        for offset in 0..3u64 {
            for variant in [Variant::Wcga, Variant::Egca] {
                let mut cfg = planted_config(seed + 200 + offset, 8, 3);
                cfg.variant = variant;
                cfg.problem.dictionary = DictionaryKind::TwoOrthoUnion {
                    second: SecondBasis::Rotation,
                };
                cfg.problem.dict_seed = Some(seed + 777);
                cfg.analyses.bounds = true;
                cfg.analyses.incoherence = true;
                cfg.analysis.s = Some(6);
                cfg.analysis.k = Some(3);
                cfg.solver.stop_gap = None;
                cfg.solver.max_iterations = 3;
                let report = run_core(&cfg, None)?;
                let check = report.analyses.bound_check.unwrap();
                checked += check.checked;
                violations += check.violations.len();
                v_used = report.analyses.incoherence.map_or(v_used, |p| p.v);
            }
        }
        suite.record(
            "bound_coherent",
            violations == 0,
            format!("{checked} points checked, V = {v_used:.4}, {violations} violations"),
        );
    }

    // Tail branch: the gap settles below the epsilon ceiling.
    {
        let mut pass = true;
        let mut worst: f64 = 0.0;
        for offset in 0..3u64 {
            let mut cfg = planted_config(seed + 300 + offset, 64, 5);
            cfg.problem.planted = PlantedKind::SparseWithTail {
                k: 5,
                tail_norm: 0.01,
            };
            cfg.solver.stop_gap = None;
            cfg.solver.max_iterations = 12;
            cfg.analyses.recursion = true;
            let report = run_core(&cfg, None)?;
            let gap = report.final_gap.unwrap_or(f64::MAX);
            worst = worst.max(gap);
            pass &= gap <= 1e-3;
            pass &= report.analyses.recursion.as_ref().map_or(false, |r| r.pass);
        }
        suite.record(
            "epsilon_tail",
            pass,
            format!("worst final gap {worst:.3e} against ceiling 1e-3"),
        );
    }

    // Smoothness sandwich and hull certificates per shipped objective.
    {
        let mut pass = true;
        let mut detail = String::new();
        let specs = [
            (
                ObjectiveKind::IdentityQuadratic,
                8,
                PlantedKind::Sparse { k: 3 },
            ),
            (
                ObjectiveKind::RegularizedLogistic {
                    rows: 30,
                    delta: 0.1,
                },
                5,
                PlantedKind::None,
            ),
        ];
        for (kind, dim, planted) in specs {
            let mut cfg = planted_config(seed + 400, dim, 3);
            cfg.problem.kind = kind;
            cfg.problem.planted = planted;
            let bundle = make_problem(&cfg.problem)?;
            let (gamma, q) = bundle
                .constants
                .gamma
                .zip(bundle.constants.q)
                .expect("generated objectives declare smoothness");
            let report = verify_certificates(
                &bundle.objective,
                None,
                &bundle.dictionary,
                gamma,
                q,
                2_000,
                seed + 401,
            )?;
            pass &= report.pass;
            detail = format!(
                "worst lower slack {:.3e}, upper slack {:.3e}",
                report.sandwich.min_lower_slack, report.sandwich.min_upper_slack
            );
        }
        suite.record("certificates", pass, detail);
    }

    // Estimators: quadratic smoothness fit and incoherence values.
    {
        let cfg = planted_config(seed + 500, 8, 3);
        let bundle = make_problem(&cfg.problem)?;
        let fit = estimate_smoothness(
            &bundle.objective,
            NormSpec::L2,
            &default_u_grid(),
            40,
            seed + 501,
        )?;
        let fit_ok = (fit.fitted_gamma - 1.0).abs() <= 0.01 && (fit.fitted_q - 2.0).abs() <= 1e-3;

        let exact = incoherence_constant(
            &bundle.dictionary,
            3,
            6,
            0.5,
            IncoherenceMode::Exact,
            1_000_000,
            0,
        )?;
        let ortho_ok = (exact.v - 1.0).abs() <= 1e-9;

        let mut mc_ok = true;
        for trial in 0..3u64 {
            let mut gcfg = planted_config(seed + 510 + trial, 5, 2);
            gcfg.problem.dictionary = DictionaryKind::GaussianNormalized { atoms: 8 };
            gcfg.problem.planted = PlantedKind::Sparse { k: 2 };
            let gb = make_problem(&gcfg.problem)?;
            let ex = incoherence_constant(
                &gb.dictionary,
                2,
                4,
                0.5,
                IncoherenceMode::Exact,
                1_000_000,
                0,
            )?;
            let mc = incoherence_constant(
                &gb.dictionary,
                2,
                4,
                0.5,
                IncoherenceMode::MonteCarlo,
                1_000,
                seed + trial,
            )?;
            mc_ok &= mc.v <= ex.v * (1.0 + 1e-9);
        }
        suite.record(
            "estimators",
            fit_ok && ortho_ok && mc_ok,
            format!(
                "fit gamma {:.6}, q {:.6}; orthonormal V {:.9}",
                fit.fitted_gamma, fit.fitted_q, exact.v
            ),
        );
    }

    // Decay-rate exponent on a dense hull-normalized reference.
    {
        let mut cfg = planted_config(seed + 600, 128, 5);
        cfg.problem.planted = PlantedKind::InverseSquare;
        cfg.solver.stop_gap = None;
        cfg.solver.max_iterations = 80;
        cfg.analyses.thm11_rate = true;
        cfg.analysis.rate_m = (10, 80);
        let report = run_core(&cfg, None)?;
        let rate = report.analyses.rate.clone().unwrap();
        artifacts.push(("rate.csv", csv_string(&report.records, None)));
        suite.record(
            "decay_rate",
            rate.pass,
            format!(
                "slope {:.3} against threshold {:.1}",
                rate.slope, rate.threshold
            ),
        );
    }

    // The energy rule's selected update never loses to the gradient
    // rule's at the same state.
    {
        let mut pass = true;
        let mut compared = 0usize;
        for offset in 0..3u64 {
            let mut cfg = planted_config(seed + 700 + offset, 8, 3);
            cfg.problem.dictionary = DictionaryKind::TwoOrthoUnion {
                second: SecondBasis::Hadamard,
            };
            let bundle = make_problem(&cfg.problem)?;
            let solver = SolverConfig {
                max_iterations: 6,
                stop_gap: None,
                ..SolverConfig::default()
            };
            let run = run_greedy(
                Variant::Egca,
                &bundle.objective,
                &bundle.dictionary,
                &solver,
                bundle.reference.as_ref(),
            )?;
            let check = egca_dominance_check(&bundle.objective, &bundle.dictionary, &run, 1e-12)?;
            pass &= check.pass;
            compared += check.compared;
        }
        suite.record("dominance", pass, format!("{compared} states compared"));
    }

    // Recursion and bound series agree with an independently assembled
    // profile on a fresh planted run.
    {
        let cfg = planted_config(seed + 800, 32, 4);
        let bundle = make_problem(&cfg.problem)?;
        let stand_in = sparse_stand_in(&bundle)?.expect("planted");
        let run = run_greedy(
            Variant::Wcga,
            &bundle.objective,
            &bundle.dictionary,
            &SolverConfig {
                max_iterations: 8,
                stop_gap: None,
                ..SolverConfig::default()
            },
            bundle.reference.as_ref(),
        )?;
        let (profile, _) = super::assemble_profile(&cfg, &bundle, Some(&stand_in), None)?;
        let series = bound_series(&profile, Variant::Wcga, &run)?;
        let check = bound_check(&run, &series);
        let e_feps = bundle.objective.value(&stand_in.point);
        let l1 = remaining_support_l1(
            &stand_in.support,
            &stand_in.values,
            &run.state.selected,
            run.iterations(),
        );
        let recursion_report = recursion_check(&run, 1.0, e_feps, &l1);
        suite.record(
            "recursion",
            check.pass && recursion_report.pass,
            format!(
                "{} bound points, {} recursion rows checked",
                check.checked, recursion_report.checked
            ),
        );
    }

    // Bit-stable reports for identical inputs.
    {
        let cfg = planted_config(seed, 64, 5);
        let a = json_string(&run_core(&cfg, None)?);
        let b = json_string(&run_core(&cfg, None)?);
        suite.record(
            "reproducibility",
            a == b,
            format!("{} summary bytes", a.len()),
        );
    }

    let pass = suite.results.iter().all(|s| s.pass);
    let outcome = SelftestOutcome {
        seed,
        suites: suite.results,
        pass,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (name, text) in &artifacts {
            std::fs::write(dir.join(name), text)?;
        }
        std::fs::write(dir.join("selftest.json"), json_string(&outcome))?;
    }
    Ok(outcome)
}

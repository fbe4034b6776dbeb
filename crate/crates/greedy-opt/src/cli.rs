//! Experiment orchestration: run one experiment with its requested
//! analyses, fan a bound check out over seeds, run the estimators alone,
//! or exercise the built-in selftest suites. All file output is
//! byte-stable for a fixed config and seed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::analysis::smoothness::default_u_grid;
use crate::analysis::{
    estimate_rsc, estimate_smoothness, evaluate_bound, evaluate_thm11_rate, incoherence_constant,
    recursion_check, remaining_support_l1, verify_certificates, ConstantsProfile,
    IncoherenceProfile,
};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::greedy::{run_greedy, GreedyRun, Variant};
use crate::problems::{
    make_problem, plant_eps_approximant, restricted_gram_beta, DictionaryKind, ObjectiveKind,
    PlantedKind, ProblemBundle, SecondBasis,
};
use crate::report::{
    csv_string, json_string, AnalysisReport, BoundCheck, BoundViolation, RunReport,
};
use crate::space::Point;
use crate::threads::thread_cap;

/// Exit status contract: 0 all checks pass, 1 a check or the solver
/// failed, 2 usage or configuration problems.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::ConfigParse { .. }
        | Error::ConfigInvalid(_)
        | Error::Io(_)
        | Error::Problem(_)
        | Error::InvalidSolverConfig(_)
        | Error::InvalidNormExponent(_)
        | Error::InvalidWeakness { .. } => 2,
        _ => 1,
    }
}

/// The planted sparse stand-in a run's gaps are measured against.
#[derive(Clone, Debug)]
pub struct StandIn {
    pub point: Point,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
    pub epsilon: f64,
    pub k: usize,
}

/// Derive the stand-in from the planted reference: exactly sparse plants
/// are their own stand-in, tailed plants get truncated.
pub fn sparse_stand_in(bundle: &ProblemBundle) -> Result<Option<StandIn>> {
    let Some(planted) = &bundle.planted else {
        return Ok(None);
    };
    match &bundle.spec.planted {
        PlantedKind::None => Ok(None),
        PlantedKind::Sparse { .. } | PlantedKind::InverseSquare => Ok(Some(StandIn {
            point: planted.point.clone(),
            support: planted.support.clone(),
            values: planted.values.clone(),
            epsilon: 0.0,
            k: planted.main_k,
        })),
        PlantedKind::SparseWithTail { .. } => {
            let t = plant_eps_approximant(
                &planted.point,
                planted.main_k,
                f64::INFINITY,
                bundle.spec.norm,
            )?;
            Ok(Some(StandIn {
                point: t.point,
                support: t.support,
                values: t.values,
                epsilon: t.tail_norm,
                k: planted.main_k,
            }))
        }
    }
}

/// Incoherence constants for the profile: analytic when the dictionary
/// carries them and no explicit measurement was requested.
fn incoherence_for_profile(
    config: &Config,
    bundle: &ProblemBundle,
    stand_in: Option<&StandIn>,
    precomputed: Option<&IncoherenceProfile>,
) -> Result<(f64, f64, usize, Option<IncoherenceProfile>)> {
    if let Some(p) = precomputed {
        return Ok((p.v, p.r, p.s, Some(p.clone())));
    }
    if !config.analyses.incoherence {
        if let Some((v, r)) = bundle.constants.dictionary_v {
            // Analytic constants hold for every window the dictionary can
            // fill.
            return Ok((v, r, bundle.dictionary.len(), None));
        }
    }
    let k = config
        .analysis
        .k
        .or(stand_in.map(|s| s.k))
        .ok_or(Error::MissingConstant("k"))?;
    let s = config.analysis.s.unwrap_or_else(|| {
        bundle
            .dictionary
            .dim()
            .min(crate::analysis::incoherence::EXACT_S_CAP)
    });
    let profile = incoherence_constant(
        &bundle.dictionary,
        k,
        s,
        config.analysis.r,
        config.analysis.incoherence_mode,
        config.analysis.budget,
        config.seed,
    )?;
    Ok((profile.v, profile.r, profile.s, Some(profile)))
}

fn beta_for_profile(config: &Config, bundle: &ProblemBundle, s_window: usize) -> Result<f64> {
    if let Some(beta) = bundle.constants.beta {
        return Ok(beta);
    }
    match &bundle.spec.kind {
        ObjectiveKind::GeneralQuadratic { .. } => {
            let model = bundle
                .objective
                .quadratic()
                .expect("general quadratic carries its model");
            let planted_k = bundle.planted.as_ref().map_or(0, |p| p.support.len());
            // Differences of window-sparse points and the planted reference
            // live on supports up to this size.
            let level = (s_window + planted_k).min(bundle.spec.dimension);
            restricted_gram_beta(&model.to_matrix(), level, config.analysis.budget as u128)
        }
        _ => Err(Error::MissingConstant("beta")),
    }
}

/// Assemble the constants profile for a prepared problem.
pub fn assemble_profile(
    config: &Config,
    bundle: &ProblemBundle,
    stand_in: Option<&StandIn>,
    precomputed_incoherence: Option<&IncoherenceProfile>,
) -> Result<(ConstantsProfile, Option<IncoherenceProfile>)> {
    let gamma = bundle
        .constants
        .gamma
        .ok_or(Error::MissingConstant("gamma"))?;
    let q = bundle.constants.q.ok_or(Error::MissingConstant("q"))?;
    let (v, r, s_window, measured) =
        incoherence_for_profile(config, bundle, stand_in, precomputed_incoherence)?;
    let beta = beta_for_profile(config, bundle, s_window)?;
    let reference = bundle
        .reference
        .as_ref()
        .ok_or(Error::MissingConstant("a0"))?;
    let a0 = bundle.objective.value(&Point::zeros(bundle.spec.dimension))
        - bundle.objective.value(reference);
    let stand_in = stand_in.ok_or(Error::MissingConstant("epsilon"))?;
    let profile = ConstantsProfile {
        gamma: Some(gamma),
        q: Some(q),
        beta: Some(beta),
        v: Some(v),
        r: Some(r),
        t: Some(config.solver.weakness.min_value()),
        epsilon: Some(stand_in.epsilon),
        k: Some(stand_in.k),
        s: Some(s_window),
        a0: Some(a0),
        f_eps: Some(stand_in.point.clone()),
        a1_scale: None,
    };
    profile.check_consistency()?;
    Ok((profile, measured))
}

/// Bound series aligned with the records; `None` outside the K + m <= S
/// window.
pub fn bound_series(
    profile: &ConstantsProfile,
    variant: Variant,
    run: &GreedyRun,
) -> Result<Vec<Option<f64>>> {
    let k = profile.k.ok_or(Error::MissingConstant("k"))?;
    let s = profile.s.ok_or(Error::MissingConstant("s"))?;
    run.records
        .iter()
        .map(|rec| {
            if k + rec.m <= s {
                evaluate_bound(profile, variant, rec.m).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect()
}

pub fn bound_check(run: &GreedyRun, bounds: &[Option<f64>]) -> BoundCheck {
    let mut violations = vec![];
    let mut min_slack: Option<f64> = None;
    let mut checked = 0usize;
    for (rec, bound) in run.records.iter().zip(bounds) {
        let (Some(gap), Some(bound)) = (rec.gap, *bound) else {
            continue;
        };
        checked += 1;
        let slack = bound - gap;
        min_slack = Some(min_slack.map_or(slack, |m: f64| m.min(slack)));
        if gap > bound {
            violations.push(BoundViolation {
                m: rec.m,
                gap,
                bound,
            });
        }
    }
    BoundCheck {
        checked,
        pass: violations.is_empty(),
        violations,
        min_slack,
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: RunReport,
    pub pass: bool,
    pub files: Vec<PathBuf>,
}

/// Run one experiment with its requested analyses. Pure apart from the
/// dictionary-from-file case; writes nothing.
pub fn run_core(
    config: &Config,
    precomputed_incoherence: Option<&IncoherenceProfile>,
) -> Result<RunReport> {
    let started = Instant::now();
    let bundle = make_problem(&config.problem)?;
    let stand_in = sparse_stand_in(&bundle)?;
    let run = run_greedy(
        config.variant,
        &bundle.objective,
        &bundle.dictionary,
        &config.solver,
        bundle.reference.as_ref(),
    )?;

    let mut analyses = AnalysisReport::default();
    let mut pass = true;

    let needs_profile = config.analyses.bounds;
    let (constants, bounds) = if needs_profile {
        let (profile, measured) =
            assemble_profile(config, &bundle, stand_in.as_ref(), precomputed_incoherence)?;
        if measured.is_some() {
            analyses.incoherence = measured;
        }
        let series = bound_series(&profile, config.variant, &run)?;
        let check = bound_check(&run, &series);
        pass &= check.pass;
        analyses.bound_check = Some(check);
        (Some(profile), Some(series))
    } else {
        (None, None)
    };

    if config.analyses.smoothness {
        let fit = estimate_smoothness(
            &bundle.objective,
            bundle.spec.norm,
            &default_u_grid(),
            config.analysis.samples,
            config.seed ^ 0x5353,
        )?;
        analyses.smoothness = Some(fit);
    }
    if config.analyses.rsc {
        let reference = bundle
            .reference
            .as_ref()
            .ok_or(Error::MissingConstant("f0"))?;
        let sparsity = config
            .analysis
            .s
            .or(stand_in.as_ref().map(|s| s.k))
            .unwrap_or(1);
        analyses.rsc = Some(estimate_rsc(
            &bundle.objective,
            &bundle.dictionary,
            reference,
            sparsity,
            config.analysis.samples,
            config.seed ^ 0x5C5C,
        )?);
    }
    if config.analyses.incoherence && analyses.incoherence.is_none() {
        let k = config
            .analysis
            .k
            .or(stand_in.as_ref().map(|s| s.k))
            .unwrap_or(1);
        let s = config.analysis.s.unwrap_or_else(|| {
            bundle
                .dictionary
                .dim()
                .min(crate::analysis::incoherence::EXACT_S_CAP)
        });
        analyses.incoherence = Some(incoherence_constant(
            &bundle.dictionary,
            k,
            s,
            config.analysis.r,
            config.analysis.incoherence_mode,
            config.analysis.budget,
            config.seed,
        )?);
    }
    if config.analyses.certificates {
        let (gamma, q) = bundle
            .constants
            .gamma
            .zip(bundle.constants.q)
            .ok_or(Error::MissingConstant("gamma"))?;
        let report = verify_certificates(
            &bundle.objective,
            Some(&run),
            &bundle.dictionary,
            gamma,
            q,
            config.analysis.samples,
            config.seed ^ 0xCE27,
        )?;
        pass &= report.pass;
        analyses.certificates = Some(report);
    }
    if config.analyses.recursion {
        let stand_in = stand_in.as_ref().ok_or(Error::MissingConstant("f_eps"))?;
        let gamma = bundle
            .constants
            .gamma
            .ok_or(Error::MissingConstant("gamma"))?;
        let e_feps = bundle.objective.value(&stand_in.point);
        let l1 = remaining_support_l1(
            &stand_in.support,
            &stand_in.values,
            &run.state.selected,
            run.iterations(),
        );
        let report = recursion_check(&run, gamma, e_feps, &l1);
        pass &= report.pass;
        analyses.recursion = Some(report);
    }
    if config.analyses.thm11_rate {
        let q = bundle.constants.q.ok_or(Error::MissingConstant("q"))?;
        let (lo, hi) = config.analysis.rate_m;
        let fit = evaluate_thm11_rate(&run.gap_series(), lo, hi, q)?;
        pass &= fit.pass;
        analyses.rate = Some(fit);
    }

    Ok(RunReport {
        config: config.echo(),
        stop: run.stop,
        iterations: run.iterations(),
        final_energy: run.state.energy,
        final_gap: run.final_gap(),
        reference_energy: run.reference_energy,
        records: run.records,
        constants,
        bounds,
        analyses,
        pass,
        wall_clock: started.elapsed(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)?;
    Ok(())
}

/// Run an experiment and write `run.csv`, `summary.json`, and
/// `dictionary.txt` under the configured output directory.
pub fn run_experiment(config: &Config) -> Result<RunOutcome> {
    let report = run_core(config, None)?;
    let mut files = vec![];
    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir)?;
        let csv_path = dir.join("run.csv");
        write_text(
            &csv_path,
            &csv_string(&report.records, report.bounds.as_deref()),
        )?;
        files.push(csv_path);
        let json_path = dir.join("summary.json");
        write_text(&json_path, &json_string(&report))?;
        files.push(json_path);
        let dict_path = dir.join("dictionary.txt");
        let bundle = make_problem(&config.problem)?;
        write_text(&dict_path, &bundle.dictionary.to_matrix_string())?;
        files.push(dict_path);
    }
    let pass = report.pass;
    Ok(RunOutcome {
        report,
        pass,
        files,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_gap: Option<f64>,
    pub checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<f64>,
    pub violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedViolation {
    pub seed: u64,
    pub m: usize,
    pub gap: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub variant: Variant,
    pub base_seed: u64,
    pub seeds: usize,
    pub total_checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub median_slack: Option<f64>,
    pub violations: Vec<SeedViolation>,
    pub per_seed: Vec<SeedSummary>,
    pub pass: bool,
}

/// True when every seed of a family sees the same dictionary, so its
/// incoherence constant can be computed once.
fn dictionary_is_shared(config: &Config) -> bool {
    config.problem.dict_seed.is_some()
        || matches!(
            config.problem.dictionary,
            DictionaryKind::Canonical
                | DictionaryKind::FromFile { .. }
                | DictionaryKind::TwoOrthoUnion {
                    second: SecondBasis::Hadamard
                }
        )
}

/// Run `n_seeds` planted instances (seeds base, base+1, ..) and check the
/// per-iteration bound on each. Seeds fan out over threads; the aggregate
/// is reduced in seed order.
pub fn verify_bounds(config: &Config, n_seeds: usize) -> Result<(VerifyReport, Vec<PathBuf>)> {
    let mut cfg = config.clone();
    cfg.analyses.bounds = true;

    let shared_profile = if n_seeds > 0 && dictionary_is_shared(&cfg) {
        let bundle = make_problem(&cfg.problem)?;
        let stand_in = sparse_stand_in(&bundle)?;
        let (_, measured) = assemble_profile(&cfg, &bundle, stand_in.as_ref(), None)?;
        measured
    } else {
        None
    };

    let indices: Vec<usize> = (0..n_seeds).collect();
    let threads = thread_cap().min(n_seeds.max(1));
    let results: Vec<Result<(usize, RunReport)>> = std::thread::scope(|scope| {
        let cfg = &cfg;
        let shared = shared_profile.as_ref();
        let mut handles = vec![];
        for t in 0..threads {
            let chunk: Vec<usize> = indices.iter().copied().skip(t).step_by(threads).collect();
            handles.push(scope.spawn(move || {
                chunk
                    .into_iter()
                    .map(|i| {
                        let seed_cfg = cfg.clone().with_seed(cfg.seed + i as u64);
                        run_core(&seed_cfg, shared).map(|r| (i, r))
                    })
                    .collect::<Vec<_>>()
            }));
        }
        let mut all = vec![];
        for h in handles {
            all.extend(h.join().expect("verify worker panicked"));
        }
        all
    });

    let mut ordered: Vec<Option<RunReport>> = (0..n_seeds).map(|_| None).collect();
    for res in results {
        let (i, report) = res?;
        ordered[i] = Some(report);
    }

    let mut per_seed = vec![];
    let mut violations = vec![];
    let mut slacks = vec![];
    let mut total_checked = 0usize;
    let mut files = vec![];
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir)?;
    }
    for (i, report) in ordered.into_iter().enumerate() {
        let report = report.expect("every seed produced a report");
        let seed = cfg.seed + i as u64;
        let check = report
            .analyses
            .bound_check
            .as_ref()
            .expect("bounds analysis was forced on");
        total_checked += check.checked;
        if let Some(s) = check.min_slack {
            slacks.push(s);
        }
        for v in &check.violations {
            violations.push(SeedViolation {
                seed,
                m: v.m,
                gap: v.gap,
                bound: v.bound,
            });
        }
        per_seed.push(SeedSummary {
            seed,
            iterations: report.iterations,
            final_gap: report.final_gap,
            checked: check.checked,
            min_slack: check.min_slack,
            violations: check.violations.len(),
        });
        if let Some(dir) = &cfg.output_dir {
            let path = dir.join(format!("run_seed{seed}.csv"));
            write_text(
                &path,
                &csv_string(&report.records, report.bounds.as_deref()),
            )?;
            files.push(path);
        }
    }

    slacks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let min_slack = slacks.first().copied();
    let median_slack = if slacks.is_empty() {
        None
    } else {
        Some(slacks[slacks.len() / 2])
    };
    let report = VerifyReport {
        variant: cfg.variant,
        base_seed: cfg.seed,
        seeds: n_seeds,
        total_checked,
        min_slack,
        median_slack,
        pass: violations.is_empty(),
        violations,
        per_seed,
    };
    if let Some(dir) = &cfg.output_dir {
        let path = dir.join("verify.json");
        write_text(&path, &json_string(&report))?;
        files.push(path);
    }
    Ok((report, files))
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagnoseReport {
    pub config: crate::report::ConfigEcho,
    pub analyses: AnalysisReport,
    pub pass: bool,
}

/// Estimators and objective-level certificates only; no greedy run.
pub fn diagnose(config: &Config) -> Result<(DiagnoseReport, Vec<PathBuf>)> {
    let bundle = make_problem(&config.problem)?;
    let stand_in = sparse_stand_in(&bundle)?;
    let mut analyses = AnalysisReport::default();
    let mut pass = true;
    if config.analyses.smoothness {
        analyses.smoothness = Some(estimate_smoothness(
            &bundle.objective,
            bundle.spec.norm,
            &default_u_grid(),
            config.analysis.samples,
            config.seed ^ 0x5353,
        )?);
    }
    if config.analyses.rsc {
        if let Some(reference) = bundle.reference.as_ref() {
            let sparsity = config
                .analysis
                .s
                .or(stand_in.as_ref().map(|s| s.k))
                .unwrap_or(1);
            analyses.rsc = Some(estimate_rsc(
                &bundle.objective,
                &bundle.dictionary,
                reference,
                sparsity,
                config.analysis.samples,
                config.seed ^ 0x5C5C,
            )?);
        }
    }
    if config.analyses.incoherence {
        let k = config
            .analysis
            .k
            .or(stand_in.as_ref().map(|s| s.k))
            .unwrap_or(1);
        let s = config.analysis.s.unwrap_or_else(|| {
            bundle
                .dictionary
                .dim()
                .min(crate::analysis::incoherence::EXACT_S_CAP)
        });
        analyses.incoherence = Some(incoherence_constant(
            &bundle.dictionary,
            k,
            s,
            config.analysis.r,
            config.analysis.incoherence_mode,
            config.analysis.budget,
            config.seed,
        )?);
    }
    if config.analyses.certificates {
        let (gamma, q) = bundle
            .constants
            .gamma
            .zip(bundle.constants.q)
            .ok_or(Error::MissingConstant("gamma"))?;
        let report = verify_certificates(
            &bundle.objective,
            None,
            &bundle.dictionary,
            gamma,
            q,
            config.analysis.samples,
            config.seed ^ 0xCE27,
        )?;
        pass &= report.pass;
        analyses.certificates = Some(report);
    }
    let report = DiagnoseReport {
        config: config.echo(),
        analyses,
        pass,
    };
    let mut files = vec![];
    if let Some(dir) = &config.output_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("diagnose.json");
        write_text(&path, &json_string(&report))?;
        files.push(path);
    }
    Ok((report, files))
}

pub mod selftest;

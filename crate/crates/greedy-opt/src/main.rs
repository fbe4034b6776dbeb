//! Command-line front end.
//!
//! Subcommands: run, verify-bounds, diagnose, selftest.
//! Exit status: 0 when every requested check passes, 1 when a check or
//! the solver fails, 2 for usage and configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use greedy_opt::cli::{self, selftest::selftest};
use greedy_opt::config::Config;
use greedy_opt::greedy::Variant;

const USAGE: &str = "\
usage: greedy-opt <command> [flags]

commands:
  run            run one experiment from a config file
  verify-bounds  run a seed family and check the gap bound on every run
  diagnose       run the constant estimators and certificates only
  selftest       run the built-in smoke suites

flags:
  --config PATH      experiment configuration (required except selftest)
  --variant VARIANT  wcga | egca (overrides the config)
  --seed N           base seed (overrides the config)
  --out DIR          output directory (overrides the config)

environment:
  GREEDY_OPT_THREADS caps parallel seed fan-out
";

struct Flags {
    config: Option<PathBuf>,
    variant: Option<Variant>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

fn usage_error(message: &str) -> ExitCode {
    eprintln!("error: {message}");
    eprint!("{USAGE}");
    ExitCode::from(2)
}

fn parse_flags(args: &[String]) -> Result<Flags, String> {
    let mut flags = Flags {
        config: None,
        variant: None,
        seed: None,
        out: None,
    };
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let mut grab = || {
            it.next()
                .map(String::as_str)
                .ok_or_else(|| format!("flag {arg} needs a value"))
        };
        match arg.as_str() {
            "--config" => flags.config = Some(PathBuf::from(grab()?)),
            "--variant" => {
                flags.variant = Some(match grab()? {
                    "wcga" => Variant::Wcga,
                    "egca" => Variant::Egca,
                    other => return Err(format!("unknown variant `{other}`")),
                })
            }
            "--seed" => {
                flags.seed = Some(
                    grab()?
                        .parse::<u64>()
                        .map_err(|_| "--seed expects an unsigned integer".to_string())?,
                )
            }
            "--out" => flags.out = Some(PathBuf::from(grab()?)),
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    Ok(flags)
}

fn load_config(flags: &Flags) -> Result<Config, greedy_opt::Error> {
    let path = flags
        .config
        .as_ref()
        .ok_or_else(|| greedy_opt::Error::ConfigInvalid("--config PATH is required".into()))?;
    let mut config = Config::load(path)?;
    if let Some(v) = flags.variant {
        config = config.with_variant(v);
    }
    if let Some(s) = flags.seed {
        config = config.with_seed(s);
    }
    if let Some(out) = &flags.out {
        config.output_dir = Some(out.clone());
    }
    Ok(config)
}

fn report_error(err: &greedy_opt::Error) -> ExitCode {
    eprintln!("error: {err}");
    let mut source = std::error::Error::source(err);
    while let Some(s) = source {
        eprintln!("  caused by: {s}");
        source = s.source();
    }
    ExitCode::from(cli::exit_code_for(err) as u8)
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first() else {
        return usage_error("missing command");
    };
    let flags = match parse_flags(&args[1..]) {
        Ok(f) => f,
        Err(m) => return usage_error(&m),
    };

    match command.as_str() {
        "run" => {
            let config = match load_config(&flags) {
                Ok(c) => c,
                Err(e) => return report_error(&e),
            };
            match cli::run_experiment(&config) {
                Ok(outcome) => {
                    let r = &outcome.report;
                    println!(
                        "run {}: {} iterations, final energy {:.6e}, stop {:?}",
                        r.config.variant, r.iterations, r.final_energy, r.stop
                    );
                    if let Some(gap) = r.final_gap {
                        println!("final gap {gap:.6e}");
                    }
                    if let Some(check) = &r.analyses.bound_check {
                        println!(
                            "bound check: {} points, {} violations",
                            check.checked,
                            check.violations.len()
                        );
                    }
                    for path in &outcome.files {
                        println!("wrote {}", path.display());
                    }
                    eprintln!("elapsed: {:?}", r.wall_clock);
                    if outcome.pass {
                        println!("PASS");
                        ExitCode::SUCCESS
                    } else {
                        println!("FAIL");
                        ExitCode::from(1)
                    }
                }
                Err(e) => report_error(&e),
            }
        }
        "verify-bounds" => {
            let config = match load_config(&flags) {
                Ok(c) => c,
                Err(e) => return report_error(&e),
            };
            let seeds = config.verify_seeds;
            match cli::verify_bounds(&config, seeds) {
                Ok((report, files)) => {
                    println!(
                        "verify-bounds {}: {} seeds, {} points checked",
                        report.variant, report.seeds, report.total_checked
                    );
                    if let (Some(min), Some(med)) = (report.min_slack, report.median_slack) {
                        println!("slack: min {min:.6e}, median {med:.6e}");
                    }
                    for v in &report.violations {
                        println!(
                            "violation: seed {} m {} gap {:.6e} bound {:.6e}",
                            v.seed, v.m, v.gap, v.bound
                        );
                    }
                    for path in &files {
                        println!("wrote {}", path.display());
                    }
                    if report.pass {
                        println!("PASS");
                        ExitCode::SUCCESS
                    } else {
                        println!("FAIL: {} violations", report.violations.len());
                        ExitCode::from(1)
                    }
                }
                Err(e) => report_error(&e),
            }
        }
        "diagnose" => {
            let config = match load_config(&flags) {
                Ok(c) => c,
                Err(e) => return report_error(&e),
            };
            match cli::diagnose(&config) {
                Ok((report, files)) => {
                    if let Some(fit) = &report.analyses.smoothness {
                        println!(
                            "smoothness: gamma {:.6e}, q {:.6} (fit {:.6e}, {:.6})",
                            fit.gamma, fit.q, fit.fitted_gamma, fit.fitted_q
                        );
                    }
                    if let Some(rsc) = &report.analyses.rsc {
                        println!(
                            "restricted convexity: beta {:.6e} at sparsity {}",
                            rsc.beta, rsc.sparsity
                        );
                    }
                    if let Some(inc) = &report.analyses.incoherence {
                        println!(
                            "incoherence: V {:.6e} (K {}, S {}, r {}, exact {})",
                            inc.v, inc.k, inc.s, inc.r, inc.certified_exact
                        );
                    }
                    if let Some(cert) = &report.analyses.certificates {
                        println!(
                            "certificates: sandwich violations {}, hull excess {:.3e}",
                            cert.sandwich.violations, cert.hull.max_excess
                        );
                    }
                    for path in &files {
                        println!("wrote {}", path.display());
                    }
                    if report.pass {
                        println!("PASS");
                        ExitCode::SUCCESS
                    } else {
                        println!("FAIL");
                        ExitCode::from(1)
                    }
                }
                Err(e) => report_error(&e),
            }
        }
        "selftest" => {
            if flags.config.is_some() || flags.variant.is_some() {
                return usage_error("selftest takes only --seed and --out");
            }
            let seed = flags.seed.unwrap_or(0);
            match selftest(seed, flags.out.as_deref()) {
                Ok(outcome) => {
                    for s in &outcome.suites {
                        println!(
                            "SELFTEST {}: {} ({})",
                            s.name,
                            if s.pass { "PASS" } else { "FAIL" },
                            s.detail
                        );
                    }
                    if outcome.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => report_error(&e),
            }
        }
        other => usage_error(&format!("unknown command `{other}`")),
    }
}

//! Flat key-value experiment configuration.
//!
//! The file format is `key = value` with dotted keys, `#` comments, and
//! blank lines. Unknown keys are errors with a line diagnostic, as are
//! values that do not parse. The full key list lives in the README.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::analysis::IncoherenceMode;
use crate::error::{Error, Result};
use crate::greedy::{SolverConfig, Variant, WeakMode};
use crate::problems::{DictionaryKind, ObjectiveKind, PlantedKind, ProblemSpec, SecondBasis};
use crate::report::ConfigEcho;
use crate::space::NormSpec;
use crate::weakness::WeaknessSequence;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AnalysisFlags {
    pub smoothness: bool,
    pub rsc: bool,
    pub incoherence: bool,
    pub bounds: bool,
    pub certificates: bool,
    pub recursion: bool,
    pub thm11_rate: bool,
}

impl AnalysisFlags {
    pub fn names(&self) -> Vec<&'static str> {
        let mut out = vec![];
        if self.smoothness {
            out.push("smoothness");
        }
        if self.rsc {
            out.push("rsc");
        }
        if self.incoherence {
            out.push("incoherence");
        }
        if self.bounds {
            out.push("bounds");
        }
        if self.certificates {
            out.push("certificates");
        }
        if self.recursion {
            out.push("recursion");
        }
        if self.thm11_rate {
            out.push("thm11_rate");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisParams {
    /// Sample count for the estimators and certificate checks.
    pub samples: usize,
    /// Incoherence window; defaults to the dictionary-appropriate size.
    pub s: Option<usize>,
    /// Incoherence nesting cap; defaults to the planted sparsity.
    pub k: Option<usize>,
    pub r: f64,
    pub incoherence_mode: IncoherenceMode,
    pub budget: u64,
    pub rate_m: (usize, usize),
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            samples: 2_000,
            s: None,
            k: None,
            r: 0.5,
            incoherence_mode: IncoherenceMode::Exact,
            budget: 10_000_000,
            rate_m: (10, 200),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Config {
    pub variant: Variant,
    pub seed: u64,
    pub problem: ProblemSpec,
    pub solver: SolverConfig,
    pub analyses: AnalysisFlags,
    pub analysis: AnalysisParams,
    pub verify_seeds: usize,
    pub output_dir: Option<PathBuf>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::ConfigInvalid(format!("cannot read config {}: {e}", path.display()))
        })?;
        Config::parse(&path.display().to_string(), &text)
    }

    pub fn parse(path_label: &str, text: &str) -> Result<Config> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let Some((key, value)) = stripped.split_once('=') else {
                return Err(Error::ConfigParse {
                    path: path_label.into(),
                    line,
                    message: "expected `key = value`".into(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), (value, line)).is_some() {
                return Err(Error::ConfigParse {
                    path: path_label.into(),
                    line,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        let mut parser = Parser {
            path: path_label.to_string(),
            entries,
            seen: Vec::new(),
        };
        let config = parser.build()?;
        parser.reject_unknown_keys()?;
        config.validate()?;
        Ok(config)
    }

    pub fn with_seed(mut self, seed: u64) -> Config {
        self.seed = seed;
        self.problem.seed = seed;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Config {
        self.variant = variant;
        self
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            variant: self.variant,
            seed: self.seed,
            problem: self.problem.clone(),
            solver: self.solver.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.analyses.recursion && self.problem.planted == PlantedKind::None {
            return Err(Error::ConfigInvalid(
                "the recursion analysis needs a planted problem".into(),
            ));
        }
        if self.analyses.bounds && self.problem.planted == PlantedKind::None {
            return Err(Error::ConfigInvalid(
                "the bounds analysis needs a planted problem".into(),
            ));
        }
        if self.analysis.rate_m.0 >= self.analysis.rate_m.1 {
            return Err(Error::ConfigInvalid(format!(
                "rate window [{}, {}] is empty",
                self.analysis.rate_m.0, self.analysis.rate_m.1
            )));
        }
        Ok(())
    }

    /// Canonical text form; `parse` of the result reproduces the config.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "variant = {}", self.variant);
        let _ = writeln!(s, "seed = {}", self.seed);
        match &self.problem.kind {
            ObjectiveKind::IdentityQuadratic => {
                let _ = writeln!(s, "problem.kind = identity_quadratic");
            }
            ObjectiveKind::GeneralQuadratic { rows } => {
                let _ = writeln!(s, "problem.kind = general_quadratic");
                let _ = writeln!(s, "problem.rows = {rows}");
            }
            ObjectiveKind::RegularizedLogistic { rows, delta } => {
                let _ = writeln!(s, "problem.kind = regularized_logistic");
                let _ = writeln!(s, "problem.rows = {rows}");
                let _ = writeln!(s, "problem.delta = {delta}");
            }
        }
        let _ = writeln!(s, "problem.dimension = {}", self.problem.dimension);
        let _ = writeln!(s, "problem.norm = {}", self.problem.norm);
        match &self.problem.dictionary {
            DictionaryKind::Canonical => {
                let _ = writeln!(s, "problem.dictionary = canonical");
            }
            DictionaryKind::GaussianNormalized { atoms } => {
                let _ = writeln!(s, "problem.dictionary = gaussian");
                let _ = writeln!(s, "problem.atoms = {atoms}");
            }
            DictionaryKind::TwoOrthoUnion { second } => {
                let _ = writeln!(s, "problem.dictionary = two_ortho_union");
                let name = match second {
                    SecondBasis::Hadamard => "hadamard",
                    SecondBasis::Rotation => "rotation",
                };
                let _ = writeln!(s, "problem.second_basis = {name}");
            }
            DictionaryKind::FromFile { path } => {
                let _ = writeln!(s, "problem.dictionary = file");
                let _ = writeln!(s, "problem.dictionary_path = {path}");
            }
        }
        if let Some(ds) = self.problem.dict_seed {
            let _ = writeln!(s, "problem.dict_seed = {ds}");
        }
        match &self.problem.planted {
            PlantedKind::None => {
                let _ = writeln!(s, "problem.planted = none");
            }
            PlantedKind::Sparse { k } => {
                let _ = writeln!(s, "problem.planted = sparse");
                let _ = writeln!(s, "problem.k = {k}");
            }
            PlantedKind::SparseWithTail { k, tail_norm } => {
                let _ = writeln!(s, "problem.planted = sparse_with_tail");
                let _ = writeln!(s, "problem.k = {k}");
                let _ = writeln!(s, "problem.tail_norm = {tail_norm}");
            }
            PlantedKind::InverseSquare => {
                let _ = writeln!(s, "problem.planted = inverse_square");
            }
        }
        let _ = writeln!(s, "solver.max_iterations = {}", self.solver.max_iterations);
        match &self.solver.weakness {
            WeaknessSequence::Constant(t) => {
                let _ = writeln!(s, "solver.t = {t}");
            }
            WeaknessSequence::Explicit(ts) => {
                let list: Vec<String> = ts.iter().map(f64::to_string).collect();
                let _ = writeln!(s, "solver.t_sequence = {}", list.join(","));
            }
        }
        let mode = match self.solver.weak_mode {
            WeakMode::Exact => "exact",
            WeakMode::Adversarial => "adversarial",
        };
        let _ = writeln!(s, "solver.weak_mode = {mode}");
        let _ = writeln!(s, "solver.orth_tol = {}", self.solver.orth_tol);
        let _ = writeln!(s, "solver.line_tol = {}", self.solver.line_tol);
        let _ = writeln!(s, "solver.span_max_inner = {}", self.solver.span_max_inner);
        if let Some(g) = self.solver.stop_gap {
            let _ = writeln!(s, "solver.stop_gap = {g}");
        }
        let names = self.analyses.names();
        let _ = writeln!(
            s,
            "analyses = {}",
            if names.is_empty() {
                "none".to_string()
            } else {
                names.join(",")
            }
        );
        let _ = writeln!(s, "analysis.samples = {}", self.analysis.samples);
        if let Some(v) = self.analysis.s {
            let _ = writeln!(s, "analysis.s = {v}");
        }
        if let Some(v) = self.analysis.k {
            let _ = writeln!(s, "analysis.k = {v}");
        }
        let _ = writeln!(s, "analysis.r = {}", self.analysis.r);
        let mode = match self.analysis.incoherence_mode {
            IncoherenceMode::Exact => "exact",
            IncoherenceMode::MonteCarlo => "monte_carlo",
        };
        let _ = writeln!(s, "analysis.incoherence_mode = {mode}");
        let _ = writeln!(s, "analysis.budget = {}", self.analysis.budget);
        let _ = writeln!(s, "rate.m_min = {}", self.analysis.rate_m.0);
        let _ = writeln!(s, "rate.m_max = {}", self.analysis.rate_m.1);
        let _ = writeln!(s, "verify.seeds = {}", self.verify_seeds);
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(s, "output.dir = {}", dir.display());
        }
        s
    }
}

struct Parser {
    path: String,
    entries: BTreeMap<String, (String, usize)>,
    seen: Vec<String>,
}

impl Parser {
    fn get(&mut self, key: &str) -> Option<(String, usize)> {
        self.seen.push(key.to_string());
        self.entries.get(key).cloned()
    }

    fn err(&self, line: usize, message: String) -> Error {
        Error::ConfigParse {
            path: self.path.clone(),
            line,
            message,
        }
    }

    fn parse_value<T: std::str::FromStr>(&mut self, key: &str, what: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| self.err(line, format!("`{key}` expects {what}, got `{v}`"))),
        }
    }

    fn required<T>(&self, key: &str, value: Option<T>) -> Result<T> {
        value.ok_or_else(|| Error::ConfigInvalid(format!("missing required key `{key}`")))
    }

    fn build(&mut self) -> Result<Config> {
        let variant = match self.get("variant") {
            None => Variant::Wcga,
            Some((v, line)) => match v.as_str() {
                "wcga" => Variant::Wcga,
                "egca" => Variant::Egca,
                other => {
                    return Err(self.err(line, format!("unknown variant `{other}`")));
                }
            },
        };
        let seed = self
            .parse_value::<u64>("seed", "an unsigned integer")?
            .unwrap_or(0);

        let dimension = {
            let v = self.parse_value::<usize>("problem.dimension", "a positive integer")?;
            self.required("problem.dimension", v)?
        };
        let norm = match self.get("problem.norm") {
            None => NormSpec::L2,
            Some((v, line)) => match v.as_str() {
                "l1" => NormSpec::L1,
                "l2" => NormSpec::L2,
                "linf" => NormSpec::LInf,
                other => match other.parse::<f64>() {
                    Ok(p) => {
                        NormSpec::lp(p).map_err(|e| self.err(line, format!("problem.norm: {e}")))?
                    }
                    Err(_) => {
                        return Err(self.err(line, format!("unknown norm `{other}`")));
                    }
                },
            },
        };

        let kind = {
            let rows = self.parse_value::<usize>("problem.rows", "a positive integer")?;
            let delta = self.parse_value::<f64>("problem.delta", "a positive number")?;
            let v = self.get("problem.kind");
            let (v, line) = self.required("problem.kind", v)?;
            match v.as_str() {
                "identity_quadratic" => ObjectiveKind::IdentityQuadratic,
                "general_quadratic" => ObjectiveKind::GeneralQuadratic {
                    rows: self.required("problem.rows", rows)?,
                },
                "regularized_logistic" => ObjectiveKind::RegularizedLogistic {
                    rows: self.required("problem.rows", rows)?,
                    delta: self.required("problem.delta", delta)?,
                },
                other => {
                    return Err(self.err(line, format!("unknown objective kind `{other}`")));
                }
            }
        };

        let dictionary = {
            let atoms = self.parse_value::<usize>("problem.atoms", "a positive integer")?;
            let second = match self.get("problem.second_basis") {
                None => None,
                Some((v, line)) => Some(match v.as_str() {
                    "hadamard" => SecondBasis::Hadamard,
                    "rotation" => SecondBasis::Rotation,
                    other => {
                        return Err(self.err(line, format!("unknown second basis `{other}`")));
                    }
                }),
            };
            let path = self.get("problem.dictionary_path").map(|(v, _)| v);
            match self.get("problem.dictionary") {
                None => DictionaryKind::Canonical,
                Some((v, line)) => match v.as_str() {
                    "canonical" => DictionaryKind::Canonical,
                    "gaussian" => DictionaryKind::GaussianNormalized {
                        atoms: self.required("problem.atoms", atoms)?,
                    },
                    "two_ortho_union" => DictionaryKind::TwoOrthoUnion {
                        second: second.unwrap_or(SecondBasis::Hadamard),
                    },
                    "file" => DictionaryKind::FromFile {
                        path: self.required("problem.dictionary_path", path)?,
                    },
                    other => {
                        return Err(self.err(line, format!("unknown dictionary `{other}`")));
                    }
                },
            }
        };

        let planted = {
            let k = self.parse_value::<usize>("problem.k", "a positive integer")?;
            let tail = self.parse_value::<f64>("problem.tail_norm", "a nonnegative number")?;
            match self.get("problem.planted") {
                None => PlantedKind::None,
                Some((v, line)) => match v.as_str() {
                    "none" => PlantedKind::None,
                    "sparse" => PlantedKind::Sparse {
                        k: self.required("problem.k", k)?,
                    },
                    "sparse_with_tail" => PlantedKind::SparseWithTail {
                        k: self.required("problem.k", k)?,
                        tail_norm: self.required("problem.tail_norm", tail)?,
                    },
                    "inverse_square" => PlantedKind::InverseSquare,
                    other => {
                        return Err(self.err(line, format!("unknown planted kind `{other}`")));
                    }
                },
            }
        };
        let dict_seed = self.parse_value::<u64>("problem.dict_seed", "an unsigned integer")?;

        let weakness = {
            let t = self.parse_value::<f64>("solver.t", "a number in (0, 1]")?;
            match self.get("solver.t_sequence") {
                Some((v, line)) => {
                    let ts: std::result::Result<Vec<f64>, _> =
                        v.split(',').map(|x| x.trim().parse::<f64>()).collect();
                    let ts = ts.map_err(|_| {
                        self.err(
                            line,
                            format!("`solver.t_sequence` expects numbers, got `{v}`"),
                        )
                    })?;
                    WeaknessSequence::explicit(ts)?
                }
                None => WeaknessSequence::constant(t.unwrap_or(1.0))?,
            }
        };
        let weak_mode = match self.get("solver.weak_mode") {
            None => WeakMode::Exact,
            Some((v, line)) => match v.as_str() {
                "exact" => WeakMode::Exact,
                "adversarial" => WeakMode::Adversarial,
                other => {
                    return Err(self.err(line, format!("unknown weak mode `{other}`")));
                }
            },
        };
        let solver = SolverConfig {
            max_iterations: self
                .parse_value::<usize>("solver.max_iterations", "an integer")?
                .unwrap_or(20),
            weakness,
            weak_mode,
            orth_tol: self
                .parse_value::<f64>("solver.orth_tol", "a positive number")?
                .unwrap_or(1e-10),
            line_tol: self
                .parse_value::<f64>("solver.line_tol", "a positive number")?
                .unwrap_or(1e-12),
            span_max_inner: self
                .parse_value::<usize>("solver.span_max_inner", "an integer")?
                .unwrap_or(10_000),
            stop_gap: self.parse_value::<f64>("solver.stop_gap", "a nonnegative number")?,
        };

        let analyses = match self.get("analyses") {
            None => AnalysisFlags::default(),
            Some((v, line)) => {
                let mut flags = AnalysisFlags::default();
                if v != "none" {
                    for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        match name {
                            "smoothness" => flags.smoothness = true,
                            "rsc" => flags.rsc = true,
                            "incoherence" => flags.incoherence = true,
                            "bounds" => flags.bounds = true,
                            "certificates" => flags.certificates = true,
                            "recursion" => flags.recursion = true,
                            "thm11_rate" => flags.thm11_rate = true,
                            other => {
                                return Err(self.err(line, format!("unknown analysis `{other}`")));
                            }
                        }
                    }
                }
                flags
            }
        };

        let incoherence_mode = match self.get("analysis.incoherence_mode") {
            None => IncoherenceMode::Exact,
            Some((v, line)) => match v.as_str() {
                "exact" => IncoherenceMode::Exact,
                "monte_carlo" => IncoherenceMode::MonteCarlo,
                other => {
                    return Err(self.err(line, format!("unknown incoherence mode `{other}`")));
                }
            },
        };
        let defaults = AnalysisParams::default();
        let analysis = AnalysisParams {
            samples: self
                .parse_value::<usize>("analysis.samples", "an integer")?
                .unwrap_or(defaults.samples),
            s: self.parse_value::<usize>("analysis.s", "an integer")?,
            k: self.parse_value::<usize>("analysis.k", "an integer")?,
            r: self
                .parse_value::<f64>("analysis.r", "a number in [0, 1]")?
                .unwrap_or(defaults.r),
            incoherence_mode,
            budget: self
                .parse_value::<u64>("analysis.budget", "an integer")?
                .unwrap_or(defaults.budget),
            rate_m: (
                self.parse_value::<usize>("rate.m_min", "an integer")?
                    .unwrap_or(defaults.rate_m.0),
                self.parse_value::<usize>("rate.m_max", "an integer")?
                    .unwrap_or(defaults.rate_m.1),
            ),
        };

        let verify_seeds = self
            .parse_value::<usize>("verify.seeds", "an integer")?
            .unwrap_or(10);
        let output_dir = self.get("output.dir").map(|(v, _)| PathBuf::from(v));

        Ok(Config {
            variant,
            seed,
            problem: ProblemSpec {
                kind,
                dimension,
                dictionary,
                planted,
                norm,
                seed,
                dict_seed,
            },
            solver,
            analyses,
            analysis,
            verify_seeds,
            output_dir,
        })
    }

    fn reject_unknown_keys(&self) -> Result<()> {
        for (key, (_, line)) in &self.entries {
            if !self.seen.contains(key) {
                return Err(self.err(*line, format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }
}

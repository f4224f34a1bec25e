//! Experiment configuration: JSON config file with flag overrides, state
//! and subalgebra presets.

use serde::{Deserialize, Serialize};
use subentropy::algebra::{decompose_from_generators, DecomposeOptions, GeneratorMode};
use subentropy::json::{DensityDto, GeneratorsDto, SubalgebraDto};
use subentropy::linops::{cr, CVec, DensityOperator};
use subentropy::rand_util::{random_density, rng_from_seed};
use subentropy::SubalgebraStructure;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

/// α values accept JSON numbers or the string "inf".
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Num(f64),
    Name(String),
}

impl AlphaSpec {
    pub fn value(&self) -> Result<f64, ConfigError> {
        match self {
            AlphaSpec::Num(x) if *x >= 0.5 => Ok(*x),
            AlphaSpec::Num(x) => err(format!("alpha {x} below 1/2")),
            AlphaSpec::Name(s) if s == "inf" => Ok(f64::INFINITY),
            AlphaSpec::Name(s) => err(format!("unknown alpha {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct FileConfig {
    pub task: Option<String>,
    pub state: Option<String>,
    pub algebra: Option<String>,
    pub eps: Option<Vec<f64>>,
    pub alpha: Option<Vec<AlphaSpec>>,
    pub nmax: Option<usize>,
    pub states: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub format: Option<String>,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub task: String,
    pub state: String,
    pub algebra: String,
    pub eps: Vec<f64>,
    pub alpha: Vec<f64>,
    pub nmax: usize,
    pub states: usize,
    pub tol: f64,
    pub seed: u64,
    pub out: Option<String>,
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl Experiment {
    pub fn resolve(
        task: String,
        file: FileConfig,
        state: Option<String>,
        algebra: Option<String>,
        eps: Option<Vec<f64>>,
        alpha: Option<Vec<String>>,
        nmax: Option<usize>,
        states: Option<usize>,
        tol: Option<f64>,
        seed: Option<u64>,
        out: Option<String>,
        format: Option<String>,
    ) -> Result<Self, ConfigError> {
        let alpha_flags: Option<Vec<AlphaSpec>> = alpha.map(|v| {
            v.into_iter()
                .map(|s| match s.parse::<f64>() {
                    Ok(x) => AlphaSpec::Num(x),
                    Err(_) => AlphaSpec::Name(s),
                })
                .collect()
        });
        let eps = eps
            .or(file.eps)
            .unwrap_or_else(|| vec![0.01, 0.1, 0.3]);
        for &e in &eps {
            if !(0.0..1.0).contains(&e) {
                return err(format!("eps {e} outside [0,1)"));
            }
        }
        let alpha = alpha_flags
            .or(file.alpha)
            .unwrap_or_else(|| {
                vec![
                    AlphaSpec::Num(0.5),
                    AlphaSpec::Num(1.0),
                    AlphaSpec::Num(2.0),
                    AlphaSpec::Name("inf".into()),
                ]
            })
            .iter()
            .map(|a| a.value())
            .collect::<Result<Vec<f64>, _>>()?;
        let format = match format
            .or(file.format)
            .unwrap_or_else(|| "json".into())
            .as_str()
        {
            "json" => OutputFormat::Json,
            "csv" => OutputFormat::Csv,
            other => return err(format!("format must be json or csv, got {other:?}")),
        };
        let tol = tol.or(file.tol).unwrap_or(1e-7);
        if tol <= 0.0 {
            return err("tol must be positive");
        }
        Ok(Self {
            task,
            state: state.or(file.state).unwrap_or_else(|| "plus".into()),
            algebra: algebra.or(file.algebra).unwrap_or_else(|| "diagonal:2".into()),
            eps,
            alpha,
            nmax: nmax.or(file.nmax).unwrap_or(4),
            states: states.or(file.states).unwrap_or(5),
            tol,
            seed: seed.or(file.seed).unwrap_or(subentropy::rand_util::DEFAULT_SEED),
            out: out.or(file.out),
            format,
        })
    }
}

pub fn load_file_config(path: Option<&str>) -> Result<FileConfig, ConfigError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read {p}: {e}")))?;
            serde_json::from_str(&text)
                .map_err(|e| ConfigError(format!("cannot parse {p}: {e}")))
        }
    }
}

/// Named subalgebra presets plus file references.
pub fn resolve_algebra(spec: &str, seed: u64) -> Result<SubalgebraStructure, ConfigError> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
        let dto: SubalgebraDto = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("cannot parse {path}: {e}")))?;
        return dto
            .to_structure()
            .map_err(|e| ConfigError(format!("{path}: {e}")));
    }
    if let Some(path) = spec.strip_prefix("generators:@") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
        let dto: GeneratorsDto = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("cannot parse {path}: {e}")))?;
        let gens = dto.matrices().map_err(|e| ConfigError(e.to_string()))?;
        let mode = dto.mode().map_err(|e| ConfigError(e.to_string()))?;
        return decompose_from_generators(
            &gens,
            &DecomposeOptions {
                mode,
                seed,
                ..Default::default()
            },
        )
        .map_err(|e| ConfigError(format!("decomposition failed: {e}")));
    }
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    match name {
        "trivial" => Ok(SubalgebraStructure::make_trivial(parse_dim(arg)?)),
        "diagonal" => Ok(SubalgebraStructure::make_diagonal(parse_dim(arg)?)),
        "full" => Ok(SubalgebraStructure::make_full(parse_dim(arg)?)),
        "factor" => {
            let (m, n) = arg
                .split_once('x')
                .ok_or_else(|| ConfigError(format!("factor needs MxN, got {arg:?}")))?;
            let m: usize = m.parse().map_err(|_| ConfigError(format!("bad factor {arg:?}")))?;
            let n: usize = n.parse().map_err(|_| ConfigError(format!("bad factor {arg:?}")))?;
            if m == 0 || n == 0 {
                return err("factor dimensions must be positive");
            }
            Ok(SubalgebraStructure::make_tensor_factor(m, n, true))
        }
        "swap-invariant" => {
            let mut swap = subentropy::linops::zeros(4, 4);
            swap[(0, 0)] = cr(1.0);
            swap[(1, 2)] = cr(1.0);
            swap[(2, 1)] = cr(1.0);
            swap[(3, 3)] = cr(1.0);
            decompose_from_generators(
                &[swap],
                &DecomposeOptions {
                    mode: GeneratorMode::Commutant,
                    seed,
                    ..Default::default()
                },
            )
            .map_err(|e| ConfigError(format!("swap-invariant decomposition failed: {e}")))
        }
        other => err(format!("unknown algebra preset {other:?}")),
    }
}

fn parse_dim(arg: &str) -> Result<usize, ConfigError> {
    let d: usize = arg
        .parse()
        .map_err(|_| ConfigError(format!("expected a dimension, got {arg:?}")))?;
    if d == 0 || d > 512 {
        return err(format!("dimension {d} outside 1..=512"));
    }
    Ok(d)
}

/// Named state presets; `index` distinguishes the cells of a random batch.
pub fn resolve_state(
    spec: &str,
    dim: usize,
    seed: u64,
    index: usize,
) -> Result<DensityOperator, ConfigError> {
    if let Some(path) = spec.strip_prefix('@') {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {path}: {e}")))?;
        let dto: DensityDto = serde_json::from_str(&text)
            .map_err(|e| ConfigError(format!("cannot parse {path}: {e}")))?;
        return dto.to_density().map_err(|e| ConfigError(e.to_string()));
    }
    match spec {
        "plus" => {
            // uniform superposition in the ambient dimension
            let v = CVec::from_element(dim, cr(1.0));
            DensityOperator::pure(&v).map_err(|e| ConfigError(e.to_string()))
        }
        "ghz" => {
            if dim < 2 {
                return err("ghz preset needs dimension ≥ 2");
            }
            let mut v = CVec::zeros(dim);
            v[0] = cr(1.0);
            v[dim - 1] = cr(1.0);
            DensityOperator::pure(&v).map_err(|e| ConfigError(e.to_string()))
        }
        "random" => {
            let mut rng = rng_from_seed(seed.wrapping_add(0x9E3779B97F4A7C15u64.wrapping_mul(index as u64 + 1)));
            Ok(random_density(dim, dim, &mut rng))
        }
        other => {
            if let Some(s) = other.strip_prefix("random:") {
                let state_seed: u64 = s
                    .parse()
                    .map_err(|_| ConfigError(format!("bad random seed {s:?}")))?;
                let mut rng = rng_from_seed(state_seed.wrapping_add(index as u64));
                Ok(random_density(dim, dim, &mut rng))
            } else {
                err(format!("unknown state preset {other:?}"))
            }
        }
    }
}

/// The preset catalogue printed by `subentropy presets`.
pub fn preset_catalogue() -> Vec<(String, String)> {
    vec![
        ("trivial:D".into(), "C·1 inside B(C^D); blocks [(D,1)]".into()),
        ("diagonal:D".into(), "incoherent subalgebra; D blocks (1,1)".into()),
        (
            "factor:MxN".into(),
            "M_M ⊗ 1_N inside B(C^M⊗C^N); blocks [(N,M)]".into(),
        ),
        ("full:D".into(), "the full algebra B(C^D); blocks [(1,D)]".into()),
        (
            "swap-invariant".into(),
            "{x : SWAP·x·SWAP = x} on C²⊗C²; blocks [(1,3),(1,1)]".into(),
        ),
        ("@file.json".into(), "subalgebra from a schema file".into()),
        (
            "generators:@file.json".into(),
            "decompose from generators (algebra or commutant mode)".into(),
        ),
        ("plus".into(), "uniform superposition pure state".into()),
        ("ghz".into(), "(|0…0⟩+|1…1⟩)/√2-style pure state".into()),
        ("random[:SEED]".into(), "seeded full-rank random state".into()),
    ]
}

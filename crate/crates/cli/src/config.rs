//! Experiment configuration: JSON schema, per-experiment defaults and
//! semantic validation.
//!
//! A config file is merged over the defaults of its experiment before it is
//! deserialized, so every field except `experiment` and `seed` is optional.
//! Objects merge key by key; arrays and scalars replace. A tagged object
//! (`kind`, `rule` or `family`) whose tag differs from the default replaces
//! the default wholesale.

use std::fmt;

use idprior_core::distributions::{GpqParams, JumpLaw};
use idprior_core::forward_models::equispaced_points;
use idprior_core::levy_process::{JumpPath, MAX_GRID_1D, MAX_GRID_2D};
use idprior_core::product_prior::{BasisSpec, CoefficientLaw, ProductPriorSpec, WeightRule, WeightSequence};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    SamplePrior,
    DeconvGpq,
    DeconvBv,
    Quadratic,
    StabilitySuite,
    ConsistencySuite,
    MapBench,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::SamplePrior,
        Experiment::DeconvGpq,
        Experiment::DeconvBv,
        Experiment::Quadratic,
        Experiment::StabilitySuite,
        Experiment::ConsistencySuite,
        Experiment::MapBench,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SamplePrior => "sample_prior",
            Experiment::DeconvGpq => "deconv_gpq",
            Experiment::DeconvBv => "deconv_bv",
            Experiment::Quadratic => "quadratic",
            Experiment::StabilitySuite => "stability_suite",
            Experiment::ConsistencySuite => "consistency_suite",
            Experiment::MapBench => "map_bench",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s)
    }

    /// Optional top-level sections this experiment reads.
    pub fn sections(self) -> &'static [&'static str] {
        match self {
            Experiment::SamplePrior => &["grid_size", "prior", "sampling"],
            Experiment::DeconvGpq => &["grid_size", "prior", "forward", "noise", "truth", "data_file", "mcmc", "map"],
            Experiment::DeconvBv | Experiment::Quadratic => {
                &["grid_size", "prior", "forward", "noise", "truth", "data_file", "mcmc"]
            }
            Experiment::StabilitySuite => &["grid_size", "prior", "forward", "noise", "truth", "data_file", "stability"],
            Experiment::ConsistencySuite => {
                &["grid_size", "prior", "forward", "noise", "truth", "data_file", "consistency"]
            }
            Experiment::MapBench => &["map", "map_bench"],
        }
    }

    /// Whether the experiment has a `y = G(u) + η` data model.
    pub fn has_data_model(self) -> bool {
        self.sections().contains(&"truth")
    }

    fn defaults(self) -> Value {
        let gpq_haar = json!({
            "kind": "product",
            "basis": "haar",
            "n_terms": 64,
            "weights": {"rule": "wavelet_sobolev"},
            "law": {"family": "gpq", "p": 0.5, "q": 0.5}
        });
        let deconv = json!({"kind": "deconv", "kernel_width": 0.03, "n_obs": 16});
        match self {
            Experiment::SamplePrior => json!({
                "grid_size": 256,
                "prior": gpq_haar,
                "sampling": {"n_draws": 4}
            }),
            Experiment::DeconvGpq => json!({
                "grid_size": 256,
                "prior": gpq_haar,
                "forward": deconv,
                "noise": {"sigma": 0.05},
                "truth": {"kind": "prior_draw"},
                "mcmc": {"n_steps": 10000, "burn_in": 1000, "proposal_scale": 1.0, "adapt": true, "thin": 1},
                "map": {"epsilon": 1e-3, "max_iter": 5000, "tol": 1e-10, "n_starts": 8}
            }),
            Experiment::DeconvBv => json!({
                "grid_size": 256,
                "prior": {"kind": "jump_process", "rate": 10.0, "jump": {"family": "normal", "mean": 0.0, "std": 1.0}},
                "forward": deconv,
                "noise": {"sigma": 0.1},
                "truth": {"kind": "prior_draw"},
                "mcmc": {"n_steps": 10000, "burn_in": 1000, "proposal_scale": 1.0, "adapt": true, "thin": 10}
            }),
            Experiment::Quadratic => json!({
                "grid_size": 256,
                "prior": {
                    "kind": "product",
                    "basis": "fourier",
                    "n_terms": 33,
                    "weights": {"rule": "fourier_power", "exponent": 3.0},
                    "law": {"family": "compound_poisson_laplace", "rate": 1.0}
                },
                "forward": {"kind": "quadratic", "n_points": 32, "n_obs": 16},
                "noise": {"sigma": 0.2},
                "truth": {"kind": "prior_draw"},
                "mcmc": {"n_steps": 10000, "burn_in": 1000, "proposal_scale": 1.0, "adapt": true, "thin": 1}
            }),
            Experiment::StabilitySuite => json!({
                "grid_size": 256,
                "prior": gpq_haar,
                "forward": deconv,
                "noise": {"sigma": 0.5},
                "truth": {"kind": "prior_draw"},
                "stability": {
                    "deltas": [1e-3, 3e-3, 1e-2, 3e-2, 1e-1],
                    "n_draws": 100000,
                    "gap_delta": 0.05,
                    "conjugate": {"gamma": 1.0, "sigma": 1.0, "y": 0.5}
                }
            }),
            Experiment::ConsistencySuite => json!({
                "grid_size": 2048,
                "prior": {
                    "kind": "product",
                    "basis": "haar",
                    "n_terms": 1024,
                    "weights": {"rule": "wavelet_sobolev"},
                    "law": {"family": "gpq", "p": 0.5, "q": 0.5}
                },
                "forward": deconv,
                "noise": {"sigma": 0.5},
                "truth": {"kind": "prior_draw"},
                "consistency": {"n_list": [16, 32, 64, 128, 256], "n_draws": 100000}
            }),
            Experiment::MapBench => json!({
                "map": {"epsilon": 1e-3, "max_iter": 5000, "tol": 1e-10, "n_starts": 8},
                "map_bench": {
                    "n": 64, "m": 32, "k": 5, "sigma": 0.01, "n_instances": 50,
                    "p": 0.5, "gpq": {"p": 0.5, "q": 0.5}, "f1_threshold": 0.1
                }
            }),
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<PriorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forward: Option<ForwardConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthConfig>,
    /// CSV `index,value` with the observations; replaces synthetic data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc: Option<McmcSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistency: Option<ConsistencySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_bench: Option<MapBenchSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisName {
    Haar,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    Product {
        basis: BasisName,
        n_terms: usize,
        weights: WeightsConfig,
        law: LawConfig,
        /// Active coefficients; defaults to `n_terms`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation: Option<usize>,
    },
    JumpProcess {
        rate: f64,
        #[serde(default = "standard_normal_jump")]
        jump: JumpConfig,
    },
    Gp {
        bandwidth: f64,
        #[serde(default)]
        mean: f64,
    },
    Hybrid {
        bandwidth: f64,
        rate: f64,
        #[serde(default = "standard_normal_jump")]
        jump: JumpConfig,
    },
    /// Two-dimensional field on an `n × n` grid; ignores `grid_size`.
    BvField2d {
        n: usize,
        bandwidth: f64,
        rate: f64,
        #[serde(default = "standard_normal_jump")]
        jump: JumpConfig,
    },
}

fn standard_normal_jump() -> JumpConfig {
    JumpConfig::Normal { mean: 0.0, std: 1.0 }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsConfig {
    WaveletSobolev,
    FourierPower { exponent: f64 },
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawConfig {
    Gpq { p: f64, q: f64 },
    CompoundPoissonLaplace { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum JumpConfig {
    Normal {
        #[serde(default)]
        mean: f64,
        #[serde(default = "one")]
        std: f64,
    },
    Laplace {
        #[serde(default = "one")]
        scale: f64,
    },
    PointMass { value: f64 },
    Gpq { p: f64, q: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForwardConfig {
    /// Gaussian-bump kernel; observations at `n_obs` equispaced points
    /// unless `obs_points` is given.
    Deconv {
        kernel_width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_obs: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        obs_points: Option<Vec<f64>>,
    },
    /// `n_obs` random sensing vectors over `n_points` equispaced point values.
    Quadratic { n_points: usize, n_obs: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthConfig {
    PriorDraw,
    /// Expansion coefficients `c_k = γ_k ξ_k`; missing trailing entries are zero.
    Coefficients { values: Vec<f64> },
    JumpPath { times: Vec<f64>, sizes: Vec<f64> },
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSection {
    pub n_steps: usize,
    pub burn_in: usize,
    pub proposal_scale: f64,
    pub adapt: bool,
    pub thin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub epsilon: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub n_starts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugateToy {
    pub gamma: f64,
    pub sigma: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub deltas: Vec<f64>,
    pub n_draws: usize,
    /// Perturbation direction in data space; defaults to the first unit vector.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    pub gap_delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conjugate: Option<ConjugateToy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencySection {
    pub n_list: Vec<usize>,
    pub n_draws: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpqPair {
    pub p: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapBenchSection {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub sigma: f64,
    pub n_instances: usize,
    /// Exponent compared against `p = 1`.
    pub p: f64,
    pub gpq: GpqPair,
    pub f1_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub n_draws: usize,
}

/// Validation failure: one message per problem, each naming a field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl From<String> for ConfigErrors {
    fn from(e: String) -> Self {
        ConfigErrors(vec![e])
    }
}

const TAGS: [&str; 3] = ["kind", "rule", "family"];

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            let retagged = TAGS
                .iter()
                .any(|t| matches!((b.get(*t), o.get(*t)), (Some(x), Some(y)) if x != y));
            if retagged {
                *b = o;
                return;
            }
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}

/// Parses config text, merges it over the experiment defaults and checks it.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    let raw: Value = if text.trim().is_empty() {
        Value::Object(Map::new())
    } else {
        serde_json::from_str(text).map_err(|e| format!("line {}, column {}: {e}", e.line(), e.column()))?
    };
    let obj = match raw {
        Value::Object(o) => o,
        _ => return Err("config: top level must be a JSON object".to_string().into()),
    };
    let mut errors = Vec::new();
    let missing: Vec<&str> = ["experiment", "seed"]
        .into_iter()
        .filter(|k| !obj.contains_key(*k))
        .collect();
    if !missing.is_empty() {
        errors.push(format!("missing required field(s): {}", missing.join(", ")));
    }
    let experiment = match obj.get("experiment") {
        None => None,
        Some(Value::String(s)) => match Experiment::parse(s) {
            Some(e) => Some(e),
            None => {
                let names: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
                errors.push(format!("experiment: unknown kind `{s}`; expected one of {}", names.join(", ")));
                None
            }
        },
        Some(_) => {
            errors.push("experiment: must be a string".into());
            None
        }
    };
    if let Some(exp) = experiment {
        for key in obj.keys() {
            let known = ["experiment", "seed", "output_dir"].contains(&key.as_str()) || exp.sections().contains(&key.as_str());
            if !known {
                let all_sections = Experiment::ALL.iter().any(|e| e.sections().contains(&key.as_str()));
                if all_sections {
                    errors.push(format!("{key}: section is not used by experiment `{exp}`"));
                } else {
                    errors.push(format!("{key}: unknown field"));
                }
            }
        }
    }
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let exp = experiment.expect("checked above");
    let mut merged = exp.defaults();
    merge(&mut merged, Value::Object(obj));
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        format!("{path}: {}", e.into_inner())
    })?;
    let errors = cfg.check();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

pub fn load_config(path: &std::path::Path) -> Result<ExperimentConfig, ConfigErrors> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: cannot read config: {e}", path.display()))?;
    parse_config(&text)
}

fn positive(errors: &mut Vec<String>, path: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errors.push(format!("{path}: must be finite and > 0, got {v}"));
    }
}

fn non_negative(errors: &mut Vec<String>, path: &str, v: f64) {
    if !(v >= 0.0 && v.is_finite()) {
        errors.push(format!("{path}: must be finite and >= 0, got {v}"));
    }
}

impl JumpConfig {
    pub fn to_law(&self) -> Result<JumpLaw, String> {
        let law = match *self {
            JumpConfig::Normal { mean, std } => JumpLaw::Normal { mean, std },
            JumpConfig::Laplace { scale } => JumpLaw::Laplace { scale },
            JumpConfig::PointMass { value } => JumpLaw::PointMass(value),
            JumpConfig::Gpq { p, q } => JumpLaw::Gpq(GpqParams::new(p, q).map_err(|e| e.to_string())?),
        };
        law.validate().map_err(|e| e.to_string())?;
        Ok(law)
    }
}

impl LawConfig {
    pub fn to_law(&self) -> Result<CoefficientLaw, String> {
        match *self {
            LawConfig::Gpq { p, q } => Ok(CoefficientLaw::Gpq(GpqParams::new(p, q).map_err(|e| e.to_string())?)),
            LawConfig::CompoundPoissonLaplace { rate } => {
                if !(rate >= 0.0 && rate.is_finite()) {
                    return Err(format!("rate: must be finite and >= 0, got {rate}"));
                }
                Ok(CoefficientLaw::CompoundPoissonLaplace { rate })
            }
        }
    }
}

impl PriorConfig {
    /// The product-prior spec, for `kind = product`.
    pub fn product_spec(&self) -> Result<Option<ProductPriorSpec>, String> {
        let PriorConfig::Product {
            basis,
            n_terms,
            weights,
            law,
            ..
        } = self
        else {
            return Ok(None);
        };
        let basis = match basis {
            BasisName::Haar => BasisSpec::haar(*n_terms),
            BasisName::Fourier => BasisSpec::fourier(*n_terms),
        }
        .map_err(|e| format!("prior.n_terms: {e}"))?;
        let rule = match weights {
            WeightsConfig::WaveletSobolev => WeightRule::WaveletSobolev,
            WeightsConfig::FourierPower { exponent } => WeightRule::FourierPower { exponent: *exponent },
            WeightsConfig::Explicit { values } => WeightRule::Explicit(values.clone()),
        };
        let weights = WeightSequence::new(rule, *n_terms).map_err(|e| format!("prior.weights: {e}"))?;
        let law = law.to_law().map_err(|e| format!("prior.law: {e}"))?;
        ProductPriorSpec::new(basis, weights, law)
            .map(Some)
            .map_err(|e| format!("prior: {e}"))
    }

    pub fn truncation(&self) -> Option<usize> {
        match self {
            PriorConfig::Product {
                n_terms, truncation, ..
            } => Some(truncation.unwrap_or(*n_terms)),
            _ => None,
        }
    }
}

impl ForwardConfig {
    pub fn n_obs(&self) -> usize {
        match self {
            ForwardConfig::Deconv { n_obs, obs_points, .. } => match obs_points {
                Some(p) => p.len(),
                None => n_obs.unwrap_or(0),
            },
            ForwardConfig::Quadratic { n_obs, .. } => *n_obs,
        }
    }

    pub fn points(&self) -> Vec<f64> {
        match self {
            ForwardConfig::Deconv { obs_points: Some(p), .. } => p.clone(),
            ForwardConfig::Deconv { n_obs, .. } => equispaced_points(n_obs.unwrap_or(0)),
            ForwardConfig::Quadratic { n_points, .. } => equispaced_points(*n_points),
        }
    }
}

impl ExperimentConfig {
    pub fn grid(&self) -> usize {
        self.grid_size.unwrap_or(0)
    }

    pub fn prior(&self) -> &PriorConfig {
        self.prior.as_ref().expect("prior section resolved by defaults")
    }

    pub fn forward(&self) -> &ForwardConfig {
        self.forward.as_ref().expect("forward section resolved by defaults")
    }

    pub fn sigma(&self) -> f64 {
        self.noise.as_ref().map_or(0.0, |n| n.sigma)
    }

    pub fn truth(&self) -> &TruthConfig {
        self.truth.as_ref().expect("truth section resolved by defaults")
    }

    /// Semantic checks that do not touch the RNG. Returns one message per problem.
    pub fn check(&self) -> Vec<String> {
        let mut errors = Vec::new();
        let exp = self.experiment;
        let grid = self.grid_size;
        if let Some(0) = grid {
            errors.push("grid_size: must be > 0".into());
        }
        if let Some(prior) = &self.prior {
            self.check_prior(prior, &mut errors);
        }
        if let Some(fwd) = &self.forward {
            check_forward(fwd, &mut errors);
        }
        if let Some(noise) = &self.noise {
            non_negative(&mut errors, "noise.sigma", noise.sigma);
        }
        if let (Some(truth), Some(prior)) = (&self.truth, &self.prior) {
            check_truth(truth, prior, &mut errors);
        }
        if let Some(mc) = &self.mcmc {
            if mc.burn_in >= mc.n_steps {
                errors.push(format!("mcmc.burn_in: must be < mcmc.n_steps ({}), got {}", mc.n_steps, mc.burn_in));
            }
            positive(&mut errors, "mcmc.proposal_scale", mc.proposal_scale);
            if mc.thin == 0 {
                errors.push("mcmc.thin: must be >= 1".into());
            }
        }
        if let Some(map) = &self.map {
            positive(&mut errors, "map.epsilon", map.epsilon);
            positive(&mut errors, "map.tol", map.tol);
            if map.max_iter == 0 {
                errors.push("map.max_iter: must be >= 1".into());
            }
            if map.n_starts == 0 {
                errors.push("map.n_starts: must be >= 1".into());
            }
        }
        if let Some(st) = &self.stability {
            if st.deltas.is_empty() {
                errors.push("stability.deltas: must not be empty".into());
            }
            for (i, d) in st.deltas.iter().enumerate() {
                positive(&mut errors, &format!("stability.deltas[{i}]"), *d);
            }
            positive(&mut errors, "stability.gap_delta", st.gap_delta);
            if st.n_draws < 1000 {
                errors.push(format!("stability.n_draws: must be >= 1000, got {}", st.n_draws));
            }
            if let (Some(dir), Some(fwd)) = (&st.direction, &self.forward) {
                if dir.len() != fwd.n_obs() {
                    errors.push(format!(
                        "stability.direction: length {} does not match {} observations",
                        dir.len(),
                        fwd.n_obs()
                    ));
                } else if !dir.iter().any(|v| *v != 0.0) || dir.iter().any(|v| !v.is_finite()) {
                    errors.push("stability.direction: must be finite and non-zero".into());
                }
            }
            if let Some(toy) = &st.conjugate {
                positive(&mut errors, "stability.conjugate.gamma", toy.gamma);
                positive(&mut errors, "stability.conjugate.sigma", toy.sigma);
                if !toy.y.is_finite() {
                    errors.push("stability.conjugate.y: must be finite".into());
                }
            }
        }
        if let Some(cs) = &self.consistency {
            if cs.n_list.is_empty() {
                errors.push("consistency.n_list: must not be empty".into());
            }
            if cs.n_list.windows(2).any(|w| w[0] >= w[1]) || cs.n_list.first() == Some(&0) {
                errors.push("consistency.n_list: must be positive and strictly increasing".into());
            }
            if let (Some(last), Some(trunc)) = (cs.n_list.last(), self.prior.as_ref().and_then(|p| p.truncation())) {
                if *last > trunc {
                    errors.push(format!("consistency.n_list: entries must not exceed the prior truncation {trunc}"));
                }
            }
            if cs.n_draws < 1000 {
                errors.push(format!("consistency.n_draws: must be >= 1000, got {}", cs.n_draws));
            }
        }
        if let Some(mb) = &self.map_bench {
            if mb.n == 0 || mb.m == 0 {
                errors.push("map_bench.n, map_bench.m: must be >= 1".into());
            }
            if mb.k > mb.n {
                errors.push(format!("map_bench.k: must not exceed map_bench.n ({}), got {}", mb.n, mb.k));
            }
            positive(&mut errors, "map_bench.sigma", mb.sigma);
            if mb.n_instances == 0 {
                errors.push("map_bench.n_instances: must be >= 1".into());
            }
            if !(mb.p > 0.0 && mb.p <= 2.0) {
                errors.push(format!("map_bench.p: must lie in (0, 2], got {}", mb.p));
            }
            if !(mb.gpq.p > 0.0 && mb.gpq.p <= 2.0) {
                errors.push(format!("map_bench.gpq.p: must lie in (0, 2], got {}", mb.gpq.p));
            }
            if !(mb.gpq.q > 0.0 && mb.gpq.q <= 1.0) {
                errors.push(format!("map_bench.gpq.q: must lie in (0, 1], got {}", mb.gpq.q));
            }
            non_negative(&mut errors, "map_bench.f1_threshold", mb.f1_threshold);
        }
        if let Some(n) = &self.sampling {
            if n.n_draws == 0 {
                errors.push("sampling.n_draws: must be >= 1".into());
            }
        }
        self.check_combination(exp, &mut errors);
        errors
    }

    fn check_prior(&self, prior: &PriorConfig, errors: &mut Vec<String>) {
        match prior {
            PriorConfig::Product {
                n_terms, truncation, law, ..
            } => {
                if *n_terms == 0 {
                    errors.push("prior.n_terms: must be >= 1".into());
                    return;
                }
                if let LawConfig::CompoundPoissonLaplace { rate } = law {
                    if !(*rate >= 0.0 && rate.is_finite()) {
                        non_negative(errors, "prior.law.rate", *rate);
                        return;
                    }
                }
                if let Some(t) = truncation {
                    if *t == 0 || t > n_terms {
                        errors.push(format!("prior.truncation: must lie in 1..={n_terms}, got {t}"));
                    }
                }
                match prior.product_spec() {
                    Ok(Some(spec)) => {
                        if let Some(g) = self.grid_size.filter(|g| *g > 0) {
                            if let Err(e) = spec.basis.check_grid(g) {
                                errors.push(format!("grid_size: {e}"));
                            }
                        }
                    }
                    Ok(None) => {}
                    Err(e) => errors.push(e),
                }
            }
            PriorConfig::JumpProcess { rate, jump } => {
                non_negative(errors, "prior.rate", *rate);
                if let Err(e) = jump.to_law() {
                    errors.push(format!("prior.jump: {e}"));
                }
            }
            PriorConfig::Gp { bandwidth, mean } => {
                positive(errors, "prior.bandwidth", *bandwidth);
                if !mean.is_finite() {
                    errors.push("prior.mean: must be finite".into());
                }
                self.check_gp_grid(errors);
            }
            PriorConfig::Hybrid { bandwidth, rate, jump } => {
                positive(errors, "prior.bandwidth", *bandwidth);
                non_negative(errors, "prior.rate", *rate);
                if let Err(e) = jump.to_law() {
                    errors.push(format!("prior.jump: {e}"));
                }
                self.check_gp_grid(errors);
            }
            PriorConfig::BvField2d { n, bandwidth, rate, jump } => {
                if *n < 2 || *n > MAX_GRID_2D {
                    errors.push(format!("prior.n: must lie in 2..={MAX_GRID_2D}, got {n}"));
                }
                positive(errors, "prior.bandwidth", *bandwidth);
                non_negative(errors, "prior.rate", *rate);
                if let Err(e) = jump.to_law() {
                    errors.push(format!("prior.jump: {e}"));
                }
            }
        }
    }

    fn check_gp_grid(&self, errors: &mut Vec<String>) {
        if let Some(g) = self.grid_size {
            if g > MAX_GRID_1D {
                errors.push(format!("grid_size: Gaussian-process priors support at most {MAX_GRID_1D} points, got {g}"));
            }
        }
    }

    fn check_combination(&self, exp: Experiment, errors: &mut Vec<String>) {
        let prior = self.prior.as_ref();
        let is_product = matches!(prior, Some(PriorConfig::Product { .. }));
        let is_gpq = matches!(
            prior,
            Some(PriorConfig::Product {
                law: LawConfig::Gpq { .. },
                ..
            })
        );
        let is_jump = matches!(prior, Some(PriorConfig::JumpProcess { .. }));
        let deconv = matches!(self.forward, Some(ForwardConfig::Deconv { .. }));
        let quad = matches!(self.forward, Some(ForwardConfig::Quadratic { .. }));
        match exp {
            Experiment::DeconvGpq => {
                if !is_gpq {
                    errors.push("prior: deconv_gpq needs kind `product` with a `gpq` law".into());
                }
                if !deconv {
                    errors.push("forward: deconv_gpq needs kind `deconv`".into());
                }
                if let (Some(PriorConfig::Product { law: LawConfig::Gpq { p, q }, .. }), Some(_)) = (prior, &self.map) {
                    if *p > 2.0 || *q > 1.0 {
                        errors.push(format!("prior.law: MAP estimation needs p <= 2 and q <= 1, got p = {p}, q = {q}"));
                    }
                }
            }
            Experiment::DeconvBv => {
                if !is_jump {
                    errors.push("prior: deconv_bv needs kind `jump_process`".into());
                }
                if !deconv {
                    errors.push("forward: deconv_bv needs kind `deconv`".into());
                }
            }
            Experiment::Quadratic => {
                if !is_product {
                    errors.push("prior: quadratic needs kind `product`".into());
                }
                if !quad {
                    errors.push("forward: quadratic needs kind `quadratic`".into());
                }
            }
            Experiment::StabilitySuite | Experiment::ConsistencySuite => {
                if !is_product {
                    errors.push(format!("prior: {exp} needs kind `product`"));
                }
            }
            Experiment::SamplePrior | Experiment::MapBench => {}
        }
        if exp.has_data_model() && self.forward().n_obs() == 0 {
            errors.push("forward: at least one observation is required".into());
        }
    }
}

fn check_forward(fwd: &ForwardConfig, errors: &mut Vec<String>) {
    match fwd {
        ForwardConfig::Deconv {
            kernel_width,
            n_obs,
            obs_points,
        } => {
            positive(errors, "forward.kernel_width", *kernel_width);
            match (n_obs, obs_points) {
                (Some(_), Some(_)) => errors.push("forward: give either n_obs or obs_points, not both".into()),
                (None, None) => errors.push("forward: one of n_obs or obs_points is required".into()),
                (Some(0), None) => errors.push("forward.n_obs: must be >= 1".into()),
                (None, Some(p)) => {
                    if p.is_empty() {
                        errors.push("forward.obs_points: must not be empty".into());
                    }
                    if p.iter().any(|t| !(*t >= 0.0 && *t < 1.0)) {
                        errors.push("forward.obs_points: entries must lie in [0, 1)".into());
                    }
                    let mut s = p.clone();
                    s.sort_by(|a, b| a.total_cmp(b));
                    if s.windows(2).any(|w| w[0] == w[1]) {
                        errors.push("forward.obs_points: entries must be distinct".into());
                    }
                }
                _ => {}
            }
        }
        ForwardConfig::Quadratic { n_points, n_obs } => {
            if *n_points == 0 {
                errors.push("forward.n_points: must be >= 1".into());
            }
            if *n_obs == 0 {
                errors.push("forward.n_obs: must be >= 1".into());
            }
        }
    }
}

fn check_truth(truth: &TruthConfig, prior: &PriorConfig, errors: &mut Vec<String>) {
    match truth {
        TruthConfig::Coefficients { values } => match prior.truncation() {
            None => errors.push("truth: `coefficients` needs a product prior".into()),
            Some(n) => {
                if values.len() > n {
                    errors.push(format!("truth.values: {} entries exceed the {n} active coefficients", values.len()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    errors.push("truth.values: entries must be finite".into());
                }
            }
        },
        TruthConfig::JumpPath { times, sizes } => {
            if let Err(e) = JumpPath::new(times.clone(), sizes.clone()) {
                errors.push(format!("truth: {e}"));
            }
        }
        TruthConfig::PriorDraw | TruthConfig::Zero => {}
    }
}

/// The config with every default filled in, as pretty JSON.
pub fn resolved_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MAX_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Chernoff,
    Decay,
    Components,
    Compactness,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Chernoff => "chernoff",
            Scenario::Decay => "decay",
            Scenario::Components => "components",
            Scenario::Compactness => "compactness",
        }
    }

    /// First element of every seed path, so scenarios never share streams.
    pub(crate) fn tag(self) -> u64 {
        match self {
            Scenario::Chernoff => 1,
            Scenario::Decay => 2,
            Scenario::Components => 3,
            Scenario::Compactness => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Constant,
    Linear,
    Sin,
}

impl TargetKind {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            TargetKind::Constant => 1.0,
            TargetKind::Linear => x[0],
            TargetKind::Sin => x.iter().map(|&t| (std::f64::consts::PI * t).sin()).product(),
        }
    }
}

/// A scalar or a list of scalars in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn default_gamma() -> f64 {
    1.0
}
fn default_d() -> usize {
    2
}
fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.07, 0.05, 0.03, 0.02, 0.01]
}
fn default_kappas() -> Vec<f64> {
    vec![0.5]
}
fn default_alphas() -> Vec<f64> {
    vec![0.05, 0.1, 0.2]
}
fn default_p() -> f64 {
    2.0
}
fn default_q() -> OneOrMany {
    OneOrMany::Many(vec![1.0, 1.5])
}
fn default_trials() -> usize {
    50
}
fn default_outdir() -> String {
    "out".into()
}
fn default_ratios() -> Vec<f64> {
    vec![4.0, 6.0, 8.0]
}
fn default_boxes() -> usize {
    1_000_000
}
fn default_side() -> f64 {
    1.0
}
fn default_raster_divisions() -> f64 {
    8.0
}
fn default_target() -> TargetKind {
    TargetKind::Linear
}

/// Experiment description, read from JSON. Every field except `scenario`,
/// `beta` and `seed` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_d")]
    pub d: usize,
    /// Scale prefactor(s) of `s(eps) = beta * eps * (d ln(1/eps))^(1/d)`.
    pub beta: OneOrMany,
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub q: OneOrMany,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_outdir")]
    pub outdir: String,
    /// Box-to-spacing ratios `s/eps` of the concentration scenario.
    #[serde(default = "default_ratios")]
    pub ratios: Vec<f64>,
    /// Minimum number of boxes per concentration grid point.
    #[serde(default = "default_boxes")]
    pub boxes: usize,
    /// Side of the centered observation cube.
    #[serde(default = "default_side")]
    pub region_side: f64,
    #[serde(default = "default_target")]
    pub target: TargetKind,
    /// Amplitude of the i.i.d. perturbation `noise * s * U(-1, 1)` added to
    /// the target on the cloud.
    #[serde(default)]
    pub noise: f64,
    /// Raster pitch is `eps / raster_divisions`.
    #[serde(default = "default_raster_divisions")]
    pub raster_divisions: f64,
    /// Worker threads; the global pool when absent. Output does not depend on it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn invalid(msg: String) -> Error {
    Error::Config(msg)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn betas(&self) -> Vec<f64> {
        self.beta.values()
    }

    pub fn qs(&self) -> Vec<f64> {
        self.q.values()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("gamma", self.gamma)?;
        if self.d == 0 || self.d > MAX_DIM {
            return Err(invalid(format!("d must be 1..={MAX_DIM}, got {}", self.d)));
        }
        let betas = self.betas();
        if betas.is_empty() {
            return Err(invalid("beta list is empty".into()));
        }
        for b in betas {
            positive("beta", b)?;
        }
        if self.epsilons.is_empty() {
            return Err(invalid("epsilons list is empty".into()));
        }
        for &e in &self.epsilons {
            if !(e > 0.0 && e < 1.0) {
                return Err(invalid(format!("epsilon must lie in (0, 1), got {e}")));
            }
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("epsilons must be strictly decreasing".into()));
        }
        if self.kappas.is_empty() {
            return Err(invalid("kappas list is empty".into()));
        }
        for &k in &self.kappas {
            if !(k > 0.0 && k < 1.0) {
                return Err(invalid(format!("kappa must lie in (0, 1), got {k}")));
            }
        }
        for &a in &self.alphas {
            positive("alpha", a)?;
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(invalid(format!("p must be >= 1, got {}", self.p)));
        }
        for q in self.qs() {
            if !(q >= 1.0 && q < self.p) {
                return Err(invalid(format!("need 1 <= q < p, got q = {q}, p = {}", self.p)));
            }
        }
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1".into()));
        }
        for &r in &self.ratios {
            positive("ratio", r)?;
        }
        if self.boxes == 0 {
            return Err(invalid("boxes must be >= 1".into()));
        }
        positive("region_side", self.region_side)?;
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(invalid(format!("noise must be >= 0, got {}", self.noise)));
        }
        if !(self.raster_divisions.is_finite() && self.raster_divisions >= 8.0) {
            return Err(invalid(format!("raster_divisions must be >= 8, got {}", self.raster_divisions)));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be >= 1".into()));
        }
        Ok(())
    }

    /// The config as JSON without `outdir` and `threads`, which change where
    /// and how fast a run happens but not what it produces.
    pub fn content(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("outdir");
            obj.remove("threads");
        }
        v
    }

    /// Hex SHA-256 of [`content`](Self::content).
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.content().to_string()))
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_core::RefineOptions;
use crate::scenarios::{EpidemicParams, PredatorPreyParams, RotationParams, TimeSpec};
use crate::spaces::{Axis, Grid};

pub const SCHEMA_VERSION: u32 = 1;

/// Suites understood by `verify`.
pub const SUITES: [&str; 7] = [
    "bv", "claw", "core", "ibvp", "measure", "renewal", "scenario",
];

/// Initial point and certificates of the rotation system `u' = w`, `w' = -u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationConfig {
    pub u0: f64,
    pub w0: f64,
    pub f_lip: f64,
    pub f_inf: f64,
    pub radius: f64,
    pub n_sub: usize,
}

impl Default for RotationConfig {
    fn default() -> Self {
        let p = RotationParams::default();
        Self {
            u0: 1.0,
            w0: 0.0,
            f_lip: p.f_lip,
            f_inf: p.f_inf,
            radius: p.radius,
            n_sub: p.n_sub,
        }
    }
}

impl RotationConfig {
    pub fn certificates(&self) -> RotationParams {
        RotationParams {
            f_lip: self.f_lip,
            f_inf: self.f_inf,
            radius: self.radius,
            n_sub: self.n_sub,
        }
    }

    /// Exact solution at `t` from `(u0, w0)` at `t0`.
    pub fn exact(&self, t0: f64, t: f64) -> (f64, f64) {
        let (c, s) = ((t - t0).cos(), (t - t0).sin());
        (self.u0 * c + self.w0 * s, -self.u0 * s + self.w0 * c)
    }
}

/// Model selection and parameters; `params` may be omitted for the models
/// that need none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "snake_case",
    try_from = "RawSpec"
)]
pub enum ScenarioSpec {
    Rotation(RotationConfig),
    Translation,
    /// Two components that never move.
    Zero,
    PredatorPrey(PredatorPreyParams),
    Epidemic(EpidemicParams),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    #[serde(default)]
    params: Option<serde_json::Value>,
}

impl TryFrom<RawSpec> for ScenarioSpec {
    type Error = String;

    fn try_from(raw: RawSpec) -> std::result::Result<Self, String> {
        fn parse<T: serde::de::DeserializeOwned + Default>(
            params: Option<serde_json::Value>,
        ) -> std::result::Result<T, String> {
            params.map_or_else(
                || Ok(T::default()),
                |v| serde_json::from_value(v).map_err(|e| e.to_string()),
            )
        }
        fn required<T: serde::de::DeserializeOwned>(
            kind: &str,
            params: Option<serde_json::Value>,
        ) -> std::result::Result<T, String> {
            let v = params.ok_or_else(|| format!("scenario `{kind}` needs `params`"))?;
            serde_json::from_value(v).map_err(|e| format!("scenario.params: {e}"))
        }
        let none = |kind: &str, p: &Option<serde_json::Value>| match p {
            None | Some(serde_json::Value::Null) => Ok(()),
            Some(serde_json::Value::Object(m)) if m.is_empty() => Ok(()),
            Some(_) => Err(format!("scenario `{kind}` takes no params")),
        };
        match raw.kind.as_str() {
            "rotation" => Ok(ScenarioSpec::Rotation(parse(raw.params)?)),
            "translation" => none("translation", &raw.params).map(|_| ScenarioSpec::Translation),
            "zero" => none("zero", &raw.params).map(|_| ScenarioSpec::Zero),
            "predator_prey" => Ok(ScenarioSpec::PredatorPrey(required(
                "predator_prey",
                raw.params,
            )?)),
            "epidemic" => Ok(ScenarioSpec::Epidemic(required("epidemic", raw.params)?)),
            other => Err(format!("unknown scenario kind `{other}`")),
        }
    }
}

impl ScenarioSpec {
    pub fn id(&self) -> &'static str {
        match self {
            ScenarioSpec::Rotation(_) => "rotation",
            ScenarioSpec::Translation => "translation",
            ScenarioSpec::Zero => "zero",
            ScenarioSpec::PredatorPrey(_) => "predator_prey",
            ScenarioSpec::Epidemic(_) => "epidemic",
        }
    }
}

/// Box `[a_k, b_k]` per axis and a cell size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub dx: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::config(
                "grid.dx",
                format!("must be positive, got {}", self.dx),
            ));
        }
        if self.bounds.is_empty() || self.bounds.len() > 2 {
            return Err(Error::config("grid.box", "needs one or two axes"));
        }
        let mut axes = Vec::new();
        for (k, [a, b]) in self.bounds.iter().copied().enumerate() {
            if !(b > a) {
                return Err(Error::config(format!("grid.box[{k}]"), "empty interval"));
            }
            let n = ((b - a) / self.dx).round().max(1.0) as usize;
            axes.push(Axis::new(a, (b - a) / n as f64, n)?);
        }
        Grid::new(axes)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Empty selects every suite.
    #[serde(default)]
    pub suites: Vec<String>,
}

/// A complete run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    pub time: TimeSpec,
    #[serde(default)]
    pub refine: RefineOptions,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub verify: VerifySpec,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config(
                "schema",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema),
            ));
        }
        self.time.validate()?;
        let r = self.refine;
        if r.j_max <= r.j0 {
            return Err(Error::config("refine.j_max", "must exceed refine.j0"));
        }
        if !(r.tol > 0.0) {
            return Err(Error::config("refine.tol", "must be positive"));
        }
        if let Some(g) = &self.grid {
            g.build()?;
        }
        for s in &self.verify.suites {
            if !SUITES.contains(&s.as_str()) {
                return Err(Error::config(
                    "verify.suites",
                    format!("unknown suite `{s}`"),
                ));
            }
        }
        match &self.scenario {
            ScenarioSpec::PredatorPrey(p) => {
                p.validate()?;
                let g = self.grid()?;
                if g.dim() != p.dim {
                    return Err(Error::config(
                        "grid.box",
                        "dimension differs from params.dim",
                    ));
                }
            }
            ScenarioSpec::Epidemic(p) => p.validate()?,
            ScenarioSpec::Rotation(c) => {
                let p = c.certificates();
                if !(p.radius > 0.0) || p.n_sub == 0 || p.f_inf < 0.0 || p.f_lip < 0.0 {
                    return Err(Error::config(
                        "scenario.params",
                        "invalid rotation certificates",
                    ));
                }
            }
            ScenarioSpec::Translation | ScenarioSpec::Zero => {}
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::config("grid", "required by this scenario"))?
            .build()
    }

    pub fn suites(&self) -> Vec<String> {
        if self.verify.suites.is_empty() {
            SUITES.iter().map(|s| s.to_string()).collect()
        } else {
            let mut s = self.verify.suites.clone();
            s.sort();
            s.dedup();
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ROTATION: &str = r#"{
        "schema": 1,
        "scenario": {"kind": "rotation"},
        "time": {"horizon": 1.0, "macro_step": 1.0}
    }"#;

    #[test]
    fn parses_a_minimal_config() {
        let c = ScenarioConfig::from_json(ROTATION).unwrap();
        assert_eq!(
            c.scenario,
            ScenarioSpec::Rotation(RotationConfig::default())
        );
        assert_eq!(c.refine, RefineOptions::default());
        assert_eq!(c.suites().len(), SUITES.len());
    }

    #[test]
    fn negative_dx_names_the_field() {
        let text = r#"{
            "schema": 1,
            "scenario": {"kind": "zero"},
            "grid": {"box": [[0, 1]], "dx": -0.1},
            "time": {"horizon": 1.0, "macro_step": 0.5}
        }"#;
        match ScenarioConfig::from_json(text) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "grid.dx"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_and_unknown_keys_are_rejected() {
        let bad = ROTATION.replace("\"schema\": 1", "\"schema\": 7");
        assert!(
            matches!(ScenarioConfig::from_json(&bad), Err(Error::Config { field, .. }) if field == "schema")
        );
        let extra = ROTATION.replace("\"schema\": 1,", "\"schema\": 1, \"colour\": 3,");
        assert!(ScenarioConfig::from_json(&extra).is_err());
    }

    #[test]
    fn grid_from_box_and_spacing() {
        let g = GridSpec {
            bounds: vec![[-1.0, 1.0], [0.0, 0.5]],
            dx: 0.1,
        }
        .build()
        .unwrap();
        assert_eq!((g.axis(0).n, g.axis(1).n), (20, 5));
    }
}

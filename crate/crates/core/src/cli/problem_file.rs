//! JSON problem files.
//!
//! ```json
//! {
//!   "name": "example",
//!   "variables": ["x1", "x2"],
//!   "dynamics": ["x2*t - 0.1*x1 - x1*x2", "-x1*t - x2 + x1^2"],
//!   "observable": "x1",
//!   "t0": 0.0,
//!   "horizon": {"type": "finite", "T": 3.0},
//!   "initial_set": {"inequalities": [], "equalities": ["x1", "x2 - 1"]},
//!   "omega_extra": {"inequalities": [], "equalities": []},
//!   "symmetry": [-1, -1]
//! }
//! ```
//!
//! `variables` lists the states; `t` is always available in `dynamics`,
//! `observable`, `integrand` and `omega_extra`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::{parse, Polynomial};
use crate::system::{Horizon, ProblemSpec, SemialgebraicSet, TIME_VAR};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub variables: Vec<String>,
    pub dynamics: Vec<String>,
    pub observable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrand: Option<String>,
    #[serde(default)]
    pub t0: f64,
    pub horizon: HorizonFile,
    #[serde(default)]
    pub initial_set: SetFile,
    #[serde(default)]
    pub omega_extra: SetFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<Vec<i8>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum HorizonFile {
    Finite {
        #[serde(rename = "T")]
        t_end: f64,
    },
    Infinite,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetFile {
    #[serde(default)]
    pub inequalities: Vec<String>,
    #[serde(default)]
    pub equalities: Vec<String>,
}

fn located(field: &str, vars: &[String], text: &str) -> Result<Polynomial> {
    parse(text, vars).map_err(|e| match e {
        Error::Parse { offset, message } => Error::Parse {
            offset,
            message: format!("{message} (in {field}: `{text}`)"),
        },
        Error::UnknownVariable(v) => Error::InvalidProblem(format!("unknown variable `{v}` in {field}")),
        other => other,
    })
}

impl SetFile {
    fn to_set(&self, field: &str, vars: &[String]) -> Result<SemialgebraicSet> {
        let parse_all = |kind: &str, list: &[String]| -> Result<Vec<Polynomial>> {
            list.iter()
                .enumerate()
                .map(|(i, s)| located(&format!("{field}.{kind}[{i}]"), vars, s))
                .collect()
        };
        Ok(SemialgebraicSet::new(
            parse_all("inequalities", &self.inequalities)?,
            parse_all("equalities", &self.equalities)?,
        ))
    }

    fn from_set(set: &SemialgebraicSet) -> Self {
        SetFile {
            inequalities: set.inequalities.iter().map(|p| p.to_string()).collect(),
            equalities: set.equalities.iter().map(|p| p.to_string()).collect(),
        }
    }
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_spec(&self) -> Result<ProblemSpec> {
        let state = &self.variables;
        let mut vars = vec![TIME_VAR.to_string()];
        vars.extend(state.iter().cloned());
        let dynamics = self
            .dynamics
            .iter()
            .enumerate()
            .map(|(i, s)| located(&format!("dynamics[{i}]"), &vars, s))
            .collect::<Result<Vec<_>>>()?;
        let observable = located("observable", &vars, &self.observable)?;
        let horizon = match self.horizon {
            HorizonFile::Finite { t_end } => Horizon::finite(self.t0, t_end)?,
            HorizonFile::Infinite => Horizon::infinite(self.t0),
        };
        let initial = self.initial_set.to_set("initial_set", state)?;
        let mut spec = ProblemSpec::new(
            self.name.clone().unwrap_or_else(|| "problem".into()),
            state,
            dynamics,
            observable,
            horizon,
            initial,
        )?;
        if let Some(text) = &self.integrand {
            spec = spec.with_integrand(Some(located("integrand", &vars, text)?))?;
        }
        let omega = self.omega_extra.to_set("omega_extra", &vars)?;
        if !omega.is_whole_space() {
            spec = spec.with_omega_extra(omega)?;
        }
        spec.with_symmetry(self.symmetry.clone())
    }

    pub fn from_spec(spec: &ProblemSpec) -> Self {
        let horizon = match spec.horizon() {
            Horizon::Finite { t_end, .. } => HorizonFile::Finite { t_end },
            Horizon::Infinite { .. } => HorizonFile::Infinite,
        };
        ProblemFile {
            name: Some(spec.name().to_string()),
            variables: spec.state_vars().to_vec(),
            dynamics: spec.dynamics().iter().map(|p| p.to_string()).collect(),
            observable: spec.observable().to_string(),
            integrand: spec.integrand().map(|p| p.to_string()),
            t0: spec.horizon().t0(),
            horizon,
            initial_set: SetFile::from_set(spec.initial_set()),
            omega_extra: SetFile::from_set(spec.omega_extra()),
            symmetry: spec.symmetry().map(|s| s.to_vec()),
        }
    }
}

pub fn read_problem(path: &std::path::Path) -> Result<ProblemSpec> {
    ProblemFile::from_json(&std::fs::read_to_string(path)?)?.to_spec()
}

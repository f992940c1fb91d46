//! Scenario configuration: a state, four observables and the relabeling
//! toggles, as read from JSON.

use crate::error::{Error, Result};
use crate::outcome::Side;
use crate::quantum::{
    bell_state, giustina_settings, giustina_state, larsson_state, theta_settings, AngleConvention,
    BellKind, PredictionSet, QuantumState, Setting,
};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum StateSpec {
    Psi1,
    Psi2,
    Giustina { r: f64 },
    Larsson { xi: f64 },
}

impl StateSpec {
    pub fn build(&self) -> Result<QuantumState> {
        match *self {
            StateSpec::Psi1 => Ok(bell_state(BellKind::Psi1)),
            StateSpec::Psi2 => Ok(bell_state(BellKind::Psi2)),
            StateSpec::Giustina { r } => giustina_state(r),
            StateSpec::Larsson { xi } => larsson_state(xi),
        }
    }
}

impl FromStr for StateSpec {
    type Err = Error;

    /// Accepts `psi1`, `psi2`, `giustina:R` and `larsson:XI`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| Error::InvalidArgument(format!("state {name} needs a parameter")))?
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad parameter in {s:?}")))
        };
        match name {
            "psi1" => Ok(StateSpec::Psi1),
            "psi2" => Ok(StateSpec::Psi2),
            "giustina" => Ok(StateSpec::Giustina { r: num(arg)? }),
            "larsson" => Ok(StateSpec::Larsson { xi: num(arg)? }),
            _ => Err(Error::InvalidArgument(format!("unknown state {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum AngleSpec {
    /// A1 = 0, A2 = 2θ, B1 = θ, B2 = 3θ.
    Theta { theta: f64 },
    Explicit { a1: f64, a2: f64, b1: f64, b2: f64 },
    Preset { preset: Preset },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Giustina,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Permutation {
    #[default]
    None,
    /// o ↔ e on both sides.
    Labels,
    /// H ↔ V in the emitted state.
    Directions,
    Both,
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Permutation::None),
            "labels" => Ok(Permutation::Labels),
            "directions" => Ok(Permutation::Directions),
            "both" => Ok(Permutation::Both),
            _ => Err(Error::InvalidArgument(format!("unknown permutation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub state: StateSpec,
    pub angles: AngleSpec,
    #[serde(default)]
    pub convention: AngleConvention,
    #[serde(default)]
    pub permutations: Permutation,
}

impl Scenario {
    pub fn theta(state: StateSpec, theta: f64) -> Self {
        Scenario {
            state,
            angles: AngleSpec::Theta { theta },
            convention: AngleConvention::Bloch,
            permutations: Permutation::None,
        }
    }

    pub fn giustina(r: f64, permutations: Permutation) -> Self {
        Scenario {
            state: StateSpec::Giustina { r },
            angles: AngleSpec::Preset {
                preset: Preset::Giustina,
            },
            convention: AngleConvention::Polarizer,
            permutations,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(s)?;
        sc.check()?;
        Ok(sc)
    }

    fn check(&self) -> Result<()> {
        let finite = match &self.angles {
            AngleSpec::Theta { theta } => theta.is_finite(),
            AngleSpec::Explicit { a1, a2, b1, b2 } => [a1, a2, b1, b2].iter().all(|x| x.is_finite()),
            AngleSpec::Preset { .. } => true,
        };
        if !finite {
            return Err(Error::InvalidArgument("angles must be finite".into()));
        }
        Ok(())
    }

    pub fn settings(&self) -> ([Setting; 2], [Setting; 2]) {
        let (mut a, mut b) = match self.angles {
            AngleSpec::Theta { theta } => theta_settings(theta),
            AngleSpec::Explicit { a1, a2, b1, b2 } => (
                [Setting::new(Side::A, a1), Setting::new(Side::A, a2)],
                [Setting::new(Side::B, b1), Setting::new(Side::B, b2)],
            ),
            AngleSpec::Preset { preset: Preset::Giustina } => return giustina_settings(),
        };
        for s in a.iter_mut().chain(b.iter_mut()) {
            s.convention = self.convention;
        }
        (a, b)
    }

    pub fn quantum_state(&self) -> Result<QuantumState> {
        let st = self.state.build()?;
        Ok(match self.permutations {
            Permutation::Directions | Permutation::Both => st.swap_directions(),
            _ => st,
        })
    }

    pub fn prediction_set(&self) -> Result<PredictionSet> {
        self.check()?;
        let (a, b) = self.settings();
        let p = PredictionSet::from_state(&self.quantum_state()?, a, b)?;
        Ok(match self.permutations {
            Permutation::Labels | Permutation::Both => p.permute_labels(),
            _ => p,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_theta_scenario() {
        let s = Scenario::from_json(r#"{"state":{"kind":"psi1"},"angles":{"theta":0.5}}"#).unwrap();
        assert_eq!(s.state, StateSpec::Psi1);
        assert_eq!(s.permutations, Permutation::None);
        s.prediction_set().unwrap();
    }

    #[test]
    fn parse_giustina_scenario() {
        let js = r#"{"state":{"kind":"giustina","params":{"r":3}},
                     "angles":{"preset":"giustina"},"convention":"polarizer","permutations":"labels"}"#;
        let s = Scenario::from_json(js).unwrap();
        assert_eq!(s, Scenario::giustina(3.0, Permutation::Labels));
    }

    #[test]
    fn rejects_garbage() {
        assert!(Scenario::from_json(r#"{"state":{"kind":"psi3"},"angles":{"theta":0.5}}"#).is_err());
        assert!(Scenario::from_json(r#"{"state":{"kind":"psi1"},"angles":{"phi":0.5}}"#).is_err());
    }

    #[test]
    fn both_permutations_cancel_for_psi_r() {
        let p0 = Scenario::giustina(3.0, Permutation::None).prediction_set().unwrap();
        let p2 = Scenario::giustina(3.0, Permutation::Both).prediction_set().unwrap();
        assert!(p0.max_abs_diff(&p2) < 1e-12);
        let pl = Scenario::giustina(3.0, Permutation::Labels).prediction_set().unwrap();
        let pd = Scenario::giustina(3.0, Permutation::Directions).prediction_set().unwrap();
        assert!(pl.max_abs_diff(&pd) < 1e-12);
        assert!(p0.max_abs_diff(&pl) > 1e-3);
    }

    #[test]
    fn state_spec_from_str() {
        assert_eq!("giustina:3".parse::<StateSpec>().unwrap(), StateSpec::Giustina { r: 3.0 });
        assert!("giustina".parse::<StateSpec>().is_err());
        assert!("bogus".parse::<StateSpec>().is_err());
    }
}

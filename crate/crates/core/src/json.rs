//! JSON schemas for constraints and frames.
//!
//! Rationals travel as `"p/q"` strings. Output is canonical: object keys
//! are sorted and symmetric constraints are written in compact form.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::constraint::Constraint;
use crate::error::{Error, Result};
use crate::frame::{Application, ConstraintFrame};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintJson {
    #[serde(default)]
    pub name: String,
    pub arity: usize,
    pub symmetric: bool,
    #[serde(with = "crate::rational::serde_str::vec")]
    pub values: Vec<Rational>,
}

impl ConstraintJson {
    pub fn from_constraint(name: &str, c: &Constraint) -> Self {
        let (symmetric, values) = match c.symmetric_values() {
            Some(sig) => (true, sig),
            None => (false, c.values().to_vec()),
        };
        ConstraintJson {
            name: name.to_string(),
            arity: c.arity(),
            symmetric,
            values,
        }
    }

    pub fn to_constraint(&self) -> Result<Constraint> {
        let c = if self.symmetric {
            if self.values.len() != self.arity + 1 {
                return Err(Error::Malformed(format!(
                    "symmetric constraint {:?} of arity {} needs {} values",
                    self.name,
                    self.arity,
                    self.arity + 1
                )));
            }
            Constraint::symmetric(&self.values)?
        } else {
            Constraint::new(self.arity, self.values.clone())?
        };
        Ok(c)
    }
}

/// Serde adapter for a bare `Constraint` field.
pub(crate) mod constraint_value {
    use super::*;

    pub fn serialize<S: Serializer>(c: &Constraint, s: S) -> Result<S::Ok, S::Error> {
        ConstraintJson::from_constraint("", c).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Constraint, D::Error> {
        ConstraintJson::deserialize(d)?
            .to_constraint()
            .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a list of constraints.
pub(crate) mod constraint_list {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Constraint], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|c| ConstraintJson::from_constraint("", c))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Constraint>, D::Error> {
        Vec::<ConstraintJson>::deserialize(d)?
            .iter()
            .map(|c| c.to_constraint().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Serde adapter for a `name -> constraint` library.
pub(crate) mod library {
    use super::*;

    pub fn serialize<S: Serializer>(
        lib: &BTreeMap<String, Constraint>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        lib.iter()
            .map(|(k, c)| (k.clone(), ConstraintJson::from_constraint(k, c)))
            .collect::<BTreeMap<_, _>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<String, Constraint>, D::Error> {
        BTreeMap::<String, ConstraintJson>::deserialize(d)?
            .into_iter()
            .map(|(k, c)| Ok((k, c.to_constraint().map_err(serde::de::Error::custom)?)))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ApplicationJson {
    constraint: String,
    scope: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FrameJson {
    variables: Vec<String>,
    applications: Vec<ApplicationJson>,
    #[serde(with = "library")]
    constraints: BTreeMap<String, Constraint>,
}

impl Serialize for ConstraintFrame {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let vars = self.variables();
        FrameJson {
            variables: vars.to_vec(),
            applications: self
                .applications()
                .iter()
                .map(|a| ApplicationJson {
                    constraint: a.constraint.clone(),
                    scope: a.scope.iter().map(|&v| vars[v].clone()).collect(),
                })
                .collect(),
            constraints: self.constraints().clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConstraintFrame {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = FrameJson::deserialize(d)?;
        let index: BTreeMap<&str, usize> = raw
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        let apps = raw
            .applications
            .iter()
            .map(|a| {
                let scope = a
                    .scope
                    .iter()
                    .map(|v| {
                        index
                            .get(v.as_str())
                            .copied()
                            .ok_or_else(|| Error::UnknownVariable(v.clone()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Application {
                    constraint: a.constraint.clone(),
                    scope,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        ConstraintFrame::from_parts(raw.variables.clone(), apps, raw.constraints)
            .map_err(serde::de::Error::custom)
    }
}

/// Sorted-key JSON text.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Malformed(e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn to_canonical_pretty<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Malformed(e.to_string()))?;
    serde_json::to_string_pretty(&v).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn parse_constraint(text: &str) -> Result<(String, Constraint)> {
    let raw: ConstraintJson =
        serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
    Ok((raw.name.clone(), raw.to_constraint()?))
}

pub fn parse_frame(text: &str) -> Result<ConstraintFrame> {
    serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::evaluate;
    use crate::rational::{int, q};

    #[test]
    fn constraint_round_trip() {
        let c = Constraint::symmetric(&[q(1, 2), int(-3), int(0)]).unwrap();
        let text = to_canonical_string(&ConstraintJson::from_constraint("f", &c)).unwrap();
        assert_eq!(
            text,
            r#"{"arity":2,"name":"f","symmetric":true,"values":["1/2","-3","0"]}"#
        );
        assert_eq!(parse_constraint(&text).unwrap(), ("f".to_string(), c));
        let t = Constraint::table_ints(&[1, 2, 3, 4]).unwrap();
        let text = to_canonical_string(&ConstraintJson::from_constraint("t", &t)).unwrap();
        assert_eq!(parse_constraint(&text).unwrap().1, t);
    }

    #[test]
    fn malformed_constraints_rejected() {
        let bad = r#"{"name":"f","arity":2,"symmetric":true,"values":["1","2"]}"#;
        assert!(matches!(parse_constraint(bad), Err(Error::Malformed(_))));
        let bad = r#"{"name":"f","arity":1,"symmetric":false,"values":["1","2/0"]}"#;
        assert!(parse_constraint(bad).is_err());
    }

    #[test]
    fn frame_round_trip() {
        let text = r#"{
            "variables": ["a", "b"],
            "applications": [{"constraint": "or", "scope": ["a", "b"]}],
            "constraints": {"or": {"name": "or", "arity": 2, "symmetric": true, "values": ["0", "1", "1"]}}
        }"#;
        let frame = parse_frame(text).unwrap();
        assert_eq!(evaluate(&frame).unwrap(), int(3));
        let again = parse_frame(&to_canonical_string(&frame).unwrap()).unwrap();
        assert_eq!(again, frame);
        let dangling = text.replace(r#"["a", "b"]}"#, r#"["a", "c"]}"#);
        assert!(parse_frame(&dangling).is_err());
    }
}

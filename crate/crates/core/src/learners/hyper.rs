use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// One hyperparameter value.
#[derive(Clone, Debug, PartialEq)]
pub enum HpValue {
    Real(f64),
    Int(i64),
    Cat(String),
}

impl HpValue {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            HpValue::Real(v) => Some(*v),
            HpValue::Int(v) => Some(*v as f64),
            HpValue::Cat(_) => None,
        }
    }
}

/// Canonical text: reals with 17 significant digits in exponent form,
/// integers in decimal, categories double-quoted.
impl fmt::Display for HpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HpValue::Real(v) => write!(f, "{v:.16e}"),
            HpValue::Int(v) => write!(f, "{v}"),
            HpValue::Cat(s) => write!(f, "\"{s}\""),
        }
    }
}

/// Parameter name to value, iterated in sorted key order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Hyperparameters(BTreeMap<String, HpValue>);

impl Hyperparameters {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: HpValue) -> Self {
        self.0.insert(key.to_string(), value);
        self
    }

    pub fn insert(&mut self, key: impl Into<String>, value: HpValue) {
        self.0.insert(key.into(), value);
    }

    pub fn get(&self, key: &str) -> Option<&HpValue> {
        self.0.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &HpValue)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn require(&self, key: &str) -> Result<&HpValue> {
        self.0
            .get(key)
            .ok_or_else(|| Error::Hyperparameter(format!("missing '{key}'")))
    }

    pub fn real(&self, key: &str) -> Result<f64> {
        match self.require(key)? {
            HpValue::Real(v) if v.is_finite() => Ok(*v),
            other => Err(Error::Hyperparameter(format!(
                "'{key}' must be a finite real, got {other}"
            ))),
        }
    }

    pub fn int(&self, key: &str) -> Result<i64> {
        match self.require(key)? {
            HpValue::Int(v) => Ok(*v),
            other => Err(Error::Hyperparameter(format!(
                "'{key}' must be an integer, got {other}"
            ))),
        }
    }

    pub fn positive_int(&self, key: &str) -> Result<usize> {
        match self.int(key)? {
            v if v >= 1 => Ok(v as usize),
            v => Err(Error::Hyperparameter(format!(
                "'{key}' must be >= 1, got {v}"
            ))),
        }
    }
}

impl FromIterator<(String, HpValue)> for Hyperparameters {
    fn from_iter<I: IntoIterator<Item = (String, HpValue)>>(iter: I) -> Self {
        Hyperparameters(iter.into_iter().collect())
    }
}

impl fmt::Display for Hyperparameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_renders_seventeen_digits() {
        assert_eq!(HpValue::Real(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(HpValue::Real(0.0).to_string(), "0.0000000000000000e0");
        let back: f64 = HpValue::Real(0.1).to_string().parse().unwrap();
        assert_eq!(back.to_bits(), 0.1f64.to_bits());
    }

    #[test]
    fn display_sorted() {
        let hp = Hyperparameters::new()
            .with("lr", HpValue::Real(0.5))
            .with("batch", HpValue::Cat("full".into()));
        assert_eq!(hp.to_string(), "batch=\"full\" lr=5.0000000000000000e-1");
    }
}

//! Template strings: `token ("-" token)*`, e.g. `Selector-Transformer-MlpNN`.
//!
//! Each token is a class name (`Selector`, `Transformer`, `Classifier`) or a
//! registered operator name. Slot 1 sits next to the data source; the last
//! slot is the root classifier.

use super::{OperatorClass, Registry};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    Class(OperatorClass),
    Named(String),
}

impl Slot {
    pub fn token(&self) -> &str {
        match self {
            Slot::Class(c) => c.name(),
            Slot::Named(n) => n,
        }
    }

    /// Whether an operator of `class` named `name` may fill this slot.
    pub fn admits(&self, class: OperatorClass, name: &str) -> bool {
        match self {
            Slot::Class(c) => *c == class,
            Slot::Named(n) => n == name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateConstraint {
    slots: Vec<Slot>,
}

impl TemplateConstraint {
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}

pub fn parse_template(template: &str, registry: &Registry) -> Result<TemplateConstraint> {
    if template.trim().is_empty() {
        return Err(Error::Template("empty template".into()));
    }
    let tokens: Vec<&str> = template.split('-').map(str::trim).collect();
    let last = tokens.len() - 1;
    let mut slots = Vec::with_capacity(tokens.len());
    for (i, tok) in tokens.iter().enumerate() {
        let (slot, class) = match *tok {
            "" => {
                return Err(Error::Template(format!(
                    "empty token at position {}",
                    i + 1
                )))
            }
            "Selector" => (
                Slot::Class(OperatorClass::Selector),
                OperatorClass::Selector,
            ),
            "Transformer" => (
                Slot::Class(OperatorClass::Transformer),
                OperatorClass::Transformer,
            ),
            "Classifier" => (
                Slot::Class(OperatorClass::Classifier),
                OperatorClass::Classifier,
            ),
            name => match registry.get(name) {
                Some(spec) => (Slot::Named(name.to_string()), spec.class()),
                None => return Err(Error::Template(format!("unknown token '{name}'"))),
            },
        };
        let ok = if i == last {
            class == OperatorClass::Classifier
        } else {
            matches!(class, OperatorClass::Selector | OperatorClass::Transformer)
        };
        if !ok {
            return Err(Error::Template(if i == last {
                format!("final token '{tok}' is not a classifier")
            } else {
                format!("token '{tok}' ({class}) cannot fill a non-final slot")
            }));
        }
        slots.push(slot);
    }
    for (i, s) in slots.iter().enumerate() {
        if let Slot::Class(c) = s {
            if registry.of_class(*c).next().is_none() {
                return Err(Error::Template(format!(
                    "slot {} needs a {c}, but the registry has none",
                    i + 1
                )));
            }
        }
    }
    Ok(TemplateConstraint { slots })
}

pub fn render_template(t: &TemplateConstraint) -> String {
    t.slots
        .iter()
        .map(Slot::token)
        .collect::<Vec<_>>()
        .join("-")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{default_registry, EstimatorFilter};
    use proptest::prelude::*;

    fn reg() -> Registry {
        default_registry(true, EstimatorFilter::All).unwrap()
    }

    #[test]
    fn selector_transformer_mlp() {
        let t = parse_template("Selector-Transformer-MlpNN", &reg()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.slots()[2], Slot::Named("MlpNN".into()));
    }

    #[test]
    fn minimal_and_errors() {
        assert_eq!(parse_template("Classifier", &reg()).unwrap().len(), 1);
        assert!(parse_template("Transformer-Selector", &reg()).is_err());
        assert!(parse_template("", &reg()).is_err());
        assert!(parse_template("Selector-Bogus-Classifier", &reg()).is_err());
        assert!(parse_template("Selector--Classifier", &reg()).is_err());
        assert!(parse_template("GaussianNB-Classifier", &reg()).is_err());
    }

    #[test]
    fn filtered_registry_rejects_missing_classifier() {
        let lr = default_registry(true, EstimatorFilter::LrOnly).unwrap();
        assert!(parse_template("Selector-MlpNN", &lr).is_err());
    }

    proptest! {
        #[test]
        fn render_parse_identity(
            middle in proptest::collection::vec(prop::sample::select(vec![
                "Selector", "Transformer", "PCA", "SelectKBest", "MinMaxScaler", "VarianceThreshold", "StandardScaler",
            ]), 0..5),
            last in prop::sample::select(vec!["Classifier", "MlpNN", "KNearest", "GaussianNB"]),
        ) {
            let mut toks = middle.clone();
            toks.push(last);
            let text = toks.join("-");
            let t = parse_template(&text, &reg()).unwrap();
            prop_assert_eq!(render_template(&t), text.clone());
            prop_assert_eq!(parse_template(&render_template(&t), &reg()).unwrap(), t);
        }
    }
}

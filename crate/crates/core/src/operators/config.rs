//! Text grammar for naming operators and whole operator configurations.
//!
//! A single operator is written `name` or `name:key=value,key=value`, for
//! example `yager:p=2` or `sigmoidal:base=reichenbach,s=9,b0=-0.5`.

use std::fmt;

use super::{Aggregator, Implication, Operator, OperatorError, TConorm, TNorm};

/// A parsed but not yet resolved operator name with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub name: String,
    pub params: Vec<(String, String)>,
}

pub fn parse_operator_spec(text: &str) -> Result<OperatorSpec, OperatorError> {
    let text = text.trim();
    let (name, rest) = match text.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (text, None),
    };
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(OperatorError::Malformed(text.to_string()));
    }
    let mut params = Vec::new();
    if let Some(rest) = rest {
        for item in rest.split(',') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| OperatorError::Malformed(text.to_string()))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(OperatorError::Malformed(text.to_string()));
            }
            if params.iter().any(|(seen, _): &(String, String)| seen == k) {
                return Err(OperatorError::Malformed(format!("{} (duplicate `{}`)", text, k)));
            }
            params.push((k.to_string(), v.to_string()));
        }
    }
    Ok(OperatorSpec { name: name.to_string(), params })
}

impl OperatorSpec {
    fn take(&self, allowed: &[&'static str]) -> Result<Params<'_>, OperatorError> {
        for (k, _) in &self.params {
            if !allowed.contains(&k.as_str()) {
                return Err(OperatorError::UnknownParameter {
                    name: self.name.clone(),
                    param: k.clone(),
                });
            }
        }
        Ok(Params { spec: self })
    }

    fn no_params(&self) -> Result<(), OperatorError> {
        self.take(&[]).map(|_| ())
    }

    pub fn to_tnorm(&self) -> Result<TNorm, OperatorError> {
        let t = match self.name.as_str() {
            "godel" => TNorm::Godel,
            "product" => TNorm::Product,
            "lukasiewicz" => TNorm::Lukasiewicz,
            "drastic" => TNorm::Drastic,
            "nilpotent" => TNorm::Nilpotent,
            "yager" => return TNorm::yager(self.take(&["p"])?.required_f64("p")?),
            _ => return Err(self.unknown("tnorm")),
        };
        self.no_params()?;
        Ok(t)
    }

    pub fn to_tconorm(&self) -> Result<TConorm, OperatorError> {
        let s = match self.name.as_str() {
            "godel" => TConorm::Godel,
            "product" => TConorm::Product,
            "lukasiewicz" => TConorm::Lukasiewicz,
            "drastic" => TConorm::Drastic,
            "nilpotent" => TConorm::Nilpotent,
            "yager" => return TConorm::yager(self.take(&["p"])?.required_f64("p")?),
            _ => return Err(self.unknown("tconorm")),
        };
        self.no_params()?;
        Ok(s)
    }

    pub fn to_aggregator(&self) -> Result<Aggregator, OperatorError> {
        let a = match self.name.as_str() {
            "min" => Aggregator::Min,
            "max" => Aggregator::Max,
            "product" => Aggregator::Product,
            "log_product" => Aggregator::LogProduct,
            "lukasiewicz" => Aggregator::Lukasiewicz,
            "bounded_sum" => Aggregator::BoundedSum,
            "prob_sum" => Aggregator::ProbSum,
            "nilpotent" => Aggregator::Nilpotent,
            "mae" => Aggregator::mae(),
            "rmse" => Aggregator::rmse(),
            "yager" => return Aggregator::yager(self.take(&["p"])?.required_f64("p")?),
            "pme" => return Aggregator::pme(self.take(&["p"])?.required_f64("p")?),
            "pmean" => return Aggregator::pmean(self.take(&["p"])?.required_f64("p")?),
            _ => return Err(self.unknown("aggregator")),
        };
        self.no_params()?;
        Ok(a)
    }

    pub fn to_implication(&self) -> Result<Implication, OperatorError> {
        let i = match self.name.as_str() {
            "kleene_dienes" => Implication::KleeneDienes,
            "reichenbach" => Implication::Reichenbach,
            "lukasiewicz" => Implication::Lukasiewicz,
            "dubois_prade" => Implication::DuboisPrade,
            "fodor" => Implication::Fodor,
            "godel" => Implication::Godel,
            "goguen" => Implication::Goguen,
            "weber" => Implication::Weber,
            "yager_s" => return Implication::yager_s(self.take(&["p"])?.required_f64("p")?),
            "yager_r" => return Implication::yager_r(self.take(&["p"])?.required_f64("p")?),
            "sigmoidal" => {
                let params = self.take(&["base", "s", "b0", "p"])?;
                let base_name = params
                    .get("base")
                    .ok_or_else(|| OperatorError::MissingParameter {
                        name: self.name.clone(),
                        param: "base",
                    })?;
                let base_spec = OperatorSpec {
                    name: base_name.to_string(),
                    params: params.get("p").map(|p| vec![("p".to_string(), p.to_string())]).unwrap_or_default(),
                };
                let base = base_spec.to_implication()?;
                let s = params.required_f64("s")?;
                let b0 = params.optional_f64("b0")?.unwrap_or(-0.5);
                return Implication::sigmoidal(base, s, b0);
            }
            _ => return Err(self.unknown("implication")),
        };
        self.no_params()?;
        Ok(i)
    }

    /// Resolves a standalone operator name. Names shared between families
    /// need a `_tnorm`, `_tconorm`, `_agg` or `_impl` suffix; `negation`
    /// names the classic negation.
    pub fn to_operator(&self) -> Result<Operator, OperatorError> {
        let with_name = |name: &str| OperatorSpec { name: name.to_string(), params: self.params.clone() };
        let n = self.name.as_str();
        if n == "negation" || n == "classic" {
            self.no_params()?;
            return Ok(Operator::Negation);
        }
        for (suffix, family) in [("_tnorm", 0), ("_tconorm", 1), ("_agg", 2), ("_impl", 3)] {
            if let Some(base) = n.strip_suffix(suffix) {
                let spec = with_name(base);
                return match family {
                    0 => spec.to_tnorm().map(Operator::TNorm),
                    1 => spec.to_tconorm().map(Operator::TConorm),
                    2 => spec.to_aggregator().map(Operator::Aggregator),
                    _ => spec.to_implication().map(Operator::Implication),
                };
            }
        }
        let candidates: Vec<Operator> = [
            self.to_tnorm().ok().map(Operator::TNorm),
            self.to_tconorm().ok().map(Operator::TConorm),
            self.to_aggregator().ok().map(Operator::Aggregator),
            self.to_implication().ok().map(Operator::Implication),
        ]
        .into_iter()
        .flatten()
        .collect();
        match candidates.len() {
            0 => Err(self.unknown("operator")),
            1 => Ok(candidates.into_iter().next().unwrap()),
            _ => Err(OperatorError::Malformed(format!(
                "`{}` is ambiguous; add one of the suffixes _tnorm, _tconorm, _agg, _impl",
                self.name
            ))),
        }
    }

    fn unknown(&self, family: &'static str) -> OperatorError {
        OperatorError::UnknownName { family, name: self.name.clone() }
    }
}

struct Params<'a> {
    spec: &'a OperatorSpec,
}

impl Params<'_> {
    fn get(&self, key: &str) -> Option<&str> {
        self.spec.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn optional_f64(&self, key: &'static str) -> Result<Option<f64>, OperatorError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| {
                OperatorError::Malformed(format!("{}: `{}` is not a number", self.spec.name, v))
            }),
        }
    }

    fn required_f64(&self, key: &'static str) -> Result<f64, OperatorError> {
        self.optional_f64(key)?.ok_or_else(|| OperatorError::MissingParameter {
            name: self.spec.name.clone(),
            param: key,
        })
    }
}

/// The connective interpretation used to valuate formulas. Negation is
/// always the classic `1 - a`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorConfig {
    pub tnorm: TNorm,
    pub tconorm: TConorm,
    pub implication: Implication,
    pub aggregator: Aggregator,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig::product()
    }
}

impl OperatorConfig {
    /// Product t-norm and t-conorm, Reichenbach implication, product
    /// aggregator.
    pub fn product() -> Self {
        OperatorConfig {
            tnorm: TNorm::Product,
            tconorm: TConorm::Product,
            implication: Implication::Reichenbach,
            aggregator: Aggregator::Product,
        }
    }

    /// The product configuration with the log-product aggregator.
    pub fn dpfl() -> Self {
        OperatorConfig { aggregator: Aggregator::LogProduct, ..Self::product() }
    }

    pub fn godel() -> Self {
        OperatorConfig {
            tnorm: TNorm::Godel,
            tconorm: TConorm::Godel,
            implication: Implication::KleeneDienes,
            aggregator: Aggregator::Min,
        }
    }

    pub fn lukasiewicz() -> Self {
        OperatorConfig {
            tnorm: TNorm::Lukasiewicz,
            tconorm: TConorm::Lukasiewicz,
            implication: Implication::Lukasiewicz,
            aggregator: Aggregator::Lukasiewicz,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "product" => Some(Self::product()),
            "dpfl" => Some(Self::dpfl()),
            "godel" => Some(Self::godel()),
            "lukasiewicz" => Some(Self::lukasiewicz()),
            _ => None,
        }
    }

    /// Applies one `key=value` setting. Returns `Ok(false)` when the key is
    /// not an operator key so callers can handle their own keys.
    ///
    /// Setting `tnorm` also resets `tconorm` to its dual; an explicit
    /// `tconorm` given later overrides that.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool, OperatorError> {
        match key {
            "preset" | "ops" => {
                *self = Self::preset(value.trim()).ok_or_else(|| OperatorError::UnknownName {
                    family: "preset",
                    name: value.trim().to_string(),
                })?;
            }
            "tnorm" => {
                self.tnorm = parse_operator_spec(value)?.to_tnorm()?;
                self.tconorm = self.tnorm.dual();
            }
            "tconorm" => self.tconorm = parse_operator_spec(value)?.to_tconorm()?,
            "implication" => self.implication = parse_operator_spec(value)?.to_implication()?,
            "aggregator" => self.aggregator = parse_operator_spec(value)?.to_aggregator()?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

struct SpecDisplay<'a>(&'a str, Vec<(&'static str, f64)>);

impl fmt::Display for SpecDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)?;
        for (i, (k, v)) in self.1.iter().enumerate() {
            write!(f, "{}{}={}", if i == 0 { ':' } else { ',' }, k, v)?;
        }
        Ok(())
    }
}

impl fmt::Display for TNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TNorm::Yager { p } => SpecDisplay("yager", vec![("p", *p)]).fmt(f),
            _ => f.write_str(self.name()),
        }
    }
}

impl fmt::Display for TConorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TConorm::Yager { p } => SpecDisplay("yager", vec![("p", *p)]).fmt(f),
            _ => f.write_str(self.name()),
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => SpecDisplay(self.name(), vec![("p", p)]).fmt(f),
            None => f.write_str(self.name()),
        }
    }
}

impl fmt::Display for Implication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Implication::YagerS { p } | Implication::YagerR { p } => {
                SpecDisplay(self.name(), vec![("p", *p)]).fmt(f)
            }
            Implication::Sigmoidal { base, s, b0 } => {
                write!(f, "sigmoidal:base={}", base.name())?;
                if let Implication::YagerS { p } | Implication::YagerR { p } = **base {
                    write!(f, ",p={}", p)?;
                }
                write!(f, ",s={},b0={}", s, b0)
            }
            _ => f.write_str(self.name()),
        }
    }
}

impl fmt::Display for OperatorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "tnorm={} tconorm={} implication={} aggregator={}",
            self.tnorm, self.tconorm, self.implication, self.aggregator
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grammar_examples() {
        let t = parse_operator_spec("yager:p=2").unwrap().to_tnorm().unwrap();
        assert_eq!(t, TNorm::Yager { p: 2.0 });
        let i = parse_operator_spec("sigmoidal:base=reichenbach,s=9,b0=-0.5")
            .unwrap()
            .to_implication()
            .unwrap();
        assert_eq!(i.to_string(), "sigmoidal:base=reichenbach,s=9,b0=-0.5");
        let a = parse_operator_spec("log_product").unwrap().to_aggregator().unwrap();
        assert_eq!(a, Aggregator::LogProduct);
    }

    #[test]
    fn rejects_unknown_keys_and_names() {
        let e = parse_operator_spec("yager:q=2").unwrap().to_tnorm();
        assert!(matches!(e, Err(OperatorError::UnknownParameter { .. })));
        assert!(parse_operator_spec("frobnicate").unwrap().to_tnorm().is_err());
        assert!(parse_operator_spec("product:p=2").unwrap().to_tnorm().is_err());
        assert!(parse_operator_spec("yager:p").is_err());
        assert!(parse_operator_spec("yager").unwrap().to_tnorm().is_err());
    }

    #[test]
    fn config_apply() {
        let mut c = OperatorConfig::product();
        assert!(c.apply("tnorm", "godel").unwrap());
        assert_eq!(c.tconorm, TConorm::Godel);
        assert!(!c.apply("lr", "0.1").unwrap());
        assert!(c.apply("aggregator", "nope").is_err());
    }

    #[test]
    fn standalone_resolution() {
        let op = |s: &str| parse_operator_spec(s).unwrap().to_operator();
        assert!(matches!(op("lukasiewicz_agg"), Ok(Operator::Aggregator(Aggregator::Lukasiewicz))));
        assert!(matches!(op("min"), Ok(Operator::Aggregator(Aggregator::Min))));
        assert!(matches!(op("reichenbach"), Ok(Operator::Implication(Implication::Reichenbach))));
        assert!(op("product").is_err());
        assert!(matches!(op("yager_tnorm:p=2"), Ok(Operator::TNorm(TNorm::Yager { .. }))));
    }
}

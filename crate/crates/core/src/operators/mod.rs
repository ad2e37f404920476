//! Fuzzy operator kernels with analytic partial derivatives.
//!
//! Every kernel returns its value together with the partials the autodiff
//! tape needs. At nondifferentiable points each kernel commits to a fixed
//! one-sided subgradient; for `min`/`max`-style ties the partial goes to the
//! first argument. Locus distances describe where those points are so that
//! numeric checks can keep their distance.

mod aggregate;
pub mod audit;
mod config;
mod implication;
mod norms;

use thiserror::Error;

pub use aggregate::{Aggregator, AggregateEval};
pub use config::{parse_operator_spec, OperatorConfig, OperatorSpec};
pub use implication::{sigmoidal_value_general, sigmoidal_value_half, ImplEval, Implication};
pub use norms::{Eval2, TConorm, TNorm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("truth value {0} is outside [0, 1]")]
    OutOfUnitInterval(f64),
    #[error("unknown {family} `{name}`")]
    UnknownName { family: &'static str, name: String },
    #[error("parameter {param} = {value} is out of range for `{name}`: {reason}")]
    BadParameter {
        name: String,
        param: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("`{name}` does not accept parameter `{param}`")]
    UnknownParameter { name: String, param: String },
    #[error("`{name}` requires parameter `{param}`")]
    MissingParameter { name: String, param: &'static str },
    #[error("aggregation over an empty list")]
    EmptyAggregate,
    #[error("log_product is undefined for an input of exactly 0")]
    LogOfZero,
    #[error("malformed operator specification `{0}`")]
    Malformed(String),
}

/// A truth value in `[0, 1]`. Construction rejects anything outside.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct UnitInterval(f64);

impl UnitInterval {
    pub fn new(v: f64) -> Result<Self, OperatorError> {
        if (0.0..=1.0).contains(&v) {
            Ok(UnitInterval(v))
        } else {
            Err(OperatorError::OutOfUnitInterval(v))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for UnitInterval {
    type Error = OperatorError;

    fn try_from(v: f64) -> Result<Self, Self::Error> {
        UnitInterval::new(v)
    }
}

pub(crate) fn check_unit(v: f64) -> Result<f64, OperatorError> {
    UnitInterval::new(v).map(UnitInterval::get)
}

/// The classic negation `N_C(a) = 1 - a`; derivative -1 everywhere.
pub fn negation(a: UnitInterval) -> UnitInterval {
    UnitInterval(1.0 - a.get())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Negation,
    TNorm,
    TConorm,
    Aggregator,
    Implication,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Negation => "negation",
            Family::TNorm => "tnorm",
            Family::TConorm => "tconorm",
            Family::Aggregator => "aggregator",
            Family::Implication => "implication",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Property {
    Commutative,
    Associative,
    Idempotent,
    Neutrality,
    Monotone,
    LeftContinuous,
    Continuous,
    Strict,
    LeftNeutral,
    ExchangePrinciple,
    IdentityPrinciple,
    ContrapositiveSymmetry,
    LeftContrapositive,
    RightContrapositive,
    SinglePassing,
}

impl Property {
    pub fn as_str(self) -> &'static str {
        match self {
            Property::Commutative => "commutative",
            Property::Associative => "associative",
            Property::Idempotent => "idempotent",
            Property::Neutrality => "neutrality",
            Property::Monotone => "monotone",
            Property::LeftContinuous => "left-continuous",
            Property::Continuous => "continuous",
            Property::Strict => "strict",
            Property::LeftNeutral => "LN",
            Property::ExchangePrinciple => "EP",
            Property::IdentityPrinciple => "IP",
            Property::ContrapositiveSymmetry => "CP",
            Property::LeftContrapositive => "L-CP",
            Property::RightContrapositive => "R-CP",
            Property::SinglePassing => "single-passing",
        }
    }
}

/// Any catalog operator, for code that treats them uniformly (audits,
/// descriptors, numeric checks).
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Negation,
    TNorm(TNorm),
    TConorm(TConorm),
    Aggregator(Aggregator),
    Implication(Implication),
}

impl Operator {
    pub fn family(&self) -> Family {
        match self {
            Operator::Negation => Family::Negation,
            Operator::TNorm(_) => Family::TNorm,
            Operator::TConorm(_) => Family::TConorm,
            Operator::Aggregator(_) => Family::Aggregator,
            Operator::Implication(_) => Family::Implication,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Operator::Negation => "classic".into(),
            Operator::TNorm(t) => t.name().into(),
            Operator::TConorm(s) => s.name().into(),
            Operator::Aggregator(a) => a.name().into(),
            Operator::Implication(i) => i.name().into(),
        }
    }

    /// Value and partials at `x`. Implication partials are reported as
    /// derivatives with respect to `a` and `c` (not the negated antecedent).
    pub fn eval(&self, x: &[f64]) -> Result<(f64, Vec<f64>), OperatorError> {
        if let Some(k) = self.arity() {
            if x.len() != k {
                return Err(OperatorError::Malformed(format!(
                    "{} takes {} inputs, got {}",
                    self.name(),
                    k,
                    x.len()
                )));
            }
        }
        match self {
            Operator::Negation => {
                let a = check_unit(x[0])?;
                Ok((1.0 - a, vec![-1.0]))
            }
            Operator::TNorm(t) => {
                let e = t.eval(x[0], x[1])?;
                Ok((e.value, vec![e.da, e.db]))
            }
            Operator::TConorm(s) => {
                let e = s.eval(x[0], x[1])?;
                Ok((e.value, vec![e.da, e.db]))
            }
            Operator::Aggregator(a) => {
                let e = a.eval(x)?;
                Ok((e.value, e.partials))
            }
            Operator::Implication(i) => {
                let e = i.eval(x[0], x[1])?;
                Ok((e.value, vec![-e.d_neg_a, e.d_c]))
            }
        }
    }

    /// Number of inputs; `None` for variadic aggregators.
    pub fn arity(&self) -> Option<usize> {
        match self {
            Operator::Negation => Some(1),
            Operator::Aggregator(_) => None,
            _ => Some(2),
        }
    }

    /// Distance from `x` to the declared nondifferentiable locus (kinks,
    /// branch boundaries and singularities). Infinite when the kernel is
    /// smooth on the open cube.
    pub fn distance_to_locus(&self, x: &[f64]) -> f64 {
        match self {
            Operator::Negation => f64::INFINITY,
            Operator::TNorm(t) => t.distance_to_locus(x[0], x[1]),
            Operator::TConorm(s) => s.distance_to_locus(x[0], x[1]),
            Operator::Aggregator(a) => a.distance_to_locus(x),
            Operator::Implication(i) => i.distance_to_locus(x[0], x[1]),
        }
    }

    /// One instance of every kernel, with parameterised families at
    /// representative parameters.
    pub fn catalog() -> Vec<Operator> {
        let mut ops = vec![Operator::Negation];
        let yager = [1.0, 2.0, 5.0];
        for t in [TNorm::Godel, TNorm::Product, TNorm::Lukasiewicz, TNorm::Drastic, TNorm::Nilpotent]
            .into_iter()
            .chain(yager.map(|p| TNorm::Yager { p }))
        {
            ops.push(Operator::TNorm(t));
            ops.push(Operator::TConorm(t.dual()));
        }
        ops.extend(
            [
                Aggregator::Min,
                Aggregator::Max,
                Aggregator::Product,
                Aggregator::LogProduct,
                Aggregator::Lukasiewicz,
                Aggregator::BoundedSum,
                Aggregator::ProbSum,
                Aggregator::Nilpotent,
                Aggregator::Pme { p: 2.0 },
                Aggregator::PMean { p: 2.0 },
            ]
            .into_iter()
            .chain(yager.map(|p| Aggregator::Yager { p }))
            .map(Operator::Aggregator),
        );
        ops.extend(
            [
                Implication::KleeneDienes,
                Implication::Reichenbach,
                Implication::Lukasiewicz,
                Implication::DuboisPrade,
                Implication::Fodor,
                Implication::Godel,
                Implication::Goguen,
                Implication::Weber,
                Implication::Sigmoidal { base: Box::new(Implication::Reichenbach), s: 9.0, b0: -0.5 },
            ]
            .into_iter()
            .chain(yager.map(|p| Implication::YagerS { p }))
            .chain(yager.map(|p| Implication::YagerR { p }))
            .map(Operator::Implication),
        );
        ops
    }

    /// The operator with its declared properties and locus description.
    pub fn descriptor(&self) -> OperatorDescriptor {
        audit::descriptor(self)
    }
}

/// Identity card for a catalog operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorDescriptor {
    pub operator: Operator,
    pub family: Family,
    pub name: String,
    pub params: Vec<(&'static str, String)>,
    pub nondifferentiable_locus: &'static str,
    pub declared: Vec<Property>,
}

/// Distance from `v` to the nearest point of `targets`.
pub(crate) fn dist_to(v: f64, targets: &[f64]) -> f64 {
    targets
        .iter()
        .map(|t| (v - t).abs())
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negation_boundaries() {
        let n = |v| negation(UnitInterval::new(v).unwrap()).get();
        assert_eq!(n(0.0), 1.0);
        assert_eq!(n(1.0), 0.0);
        assert!((n(0.3) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn unit_interval_rejects_out_of_range() {
        assert!(UnitInterval::new(-0.1).is_err());
        assert!(UnitInterval::new(1.0000001).is_err());
        assert!(UnitInterval::new(f64::NAN).is_err());
        assert!(UnitInterval::try_from(0.5).is_ok());
    }
}

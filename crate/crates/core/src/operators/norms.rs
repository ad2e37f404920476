//! Binary t-norms (fuzzy conjunction) and t-conorms (fuzzy disjunction).
//!
//! The t-conorms are written out directly rather than derived from their
//! duals so that the duality check compares two independent kernels.

use super::{check_unit, dist_to, OperatorError};

/// Value of a binary kernel and its partials with respect to both inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eval2 {
    pub value: f64,
    pub da: f64,
    pub db: f64,
}

impl Eval2 {
    fn new(value: f64, da: f64, db: f64) -> Self {
        Eval2 { value, da, db }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TNorm {
    Godel,
    Product,
    Lukasiewicz,
    Drastic,
    Nilpotent,
    Yager { p: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TConorm {
    Godel,
    Product,
    Lukasiewicz,
    Drastic,
    Nilpotent,
    Yager { p: f64 },
}

pub(crate) fn check_yager_p(name: &str, p: f64) -> Result<f64, OperatorError> {
    if p.is_finite() && p >= 1.0 {
        Ok(p)
    } else {
        Err(OperatorError::BadParameter {
            name: name.to_string(),
            param: "p",
            value: p,
            reason: "yager kernels need 1 <= p < inf",
        })
    }
}

impl TNorm {
    pub const NAMES: [&'static str; 6] = ["godel", "product", "lukasiewicz", "drastic", "nilpotent", "yager"];

    pub fn yager(p: f64) -> Result<Self, OperatorError> {
        Ok(TNorm::Yager { p: check_yager_p("yager", p)? })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TNorm::Godel => "godel",
            TNorm::Product => "product",
            TNorm::Lukasiewicz => "lukasiewicz",
            TNorm::Drastic => "drastic",
            TNorm::Nilpotent => "nilpotent",
            TNorm::Yager { .. } => "yager",
        }
    }

    /// The t-conorm related by `S(a, b) = 1 - T(1 - a, 1 - b)`.
    pub fn dual(&self) -> TConorm {
        match *self {
            TNorm::Godel => TConorm::Godel,
            TNorm::Product => TConorm::Product,
            TNorm::Lukasiewicz => TConorm::Lukasiewicz,
            TNorm::Drastic => TConorm::Drastic,
            TNorm::Nilpotent => TConorm::Nilpotent,
            TNorm::Yager { p } => TConorm::Yager { p },
        }
    }

    pub fn eval(&self, a: f64, b: f64) -> Result<Eval2, OperatorError> {
        let (a, b) = (check_unit(a)?, check_unit(b)?);
        Ok(self.eval_unchecked(a, b))
    }

    pub(crate) fn eval_unchecked(&self, a: f64, b: f64) -> Eval2 {
        match *self {
            TNorm::Godel => min2(a, b),
            TNorm::Product => Eval2::new(a * b, b, a),
            TNorm::Lukasiewicz => {
                let v = a.min(b) + (a.max(b) - 1.0);
                if v > 0.0 {
                    Eval2::new(v, 1.0, 1.0)
                } else {
                    Eval2::new(0.0, 0.0, 0.0)
                }
            }
            TNorm::Drastic => {
                if a == 1.0 {
                    Eval2::new(b, 0.0, 1.0)
                } else if b == 1.0 {
                    Eval2::new(a, 1.0, 0.0)
                } else {
                    Eval2::new(0.0, 0.0, 0.0)
                }
            }
            TNorm::Nilpotent => {
                if a + b > 1.0 {
                    min2(a, b)
                } else {
                    Eval2::new(0.0, 0.0, 0.0)
                }
            }
            TNorm::Yager { p } => {
                let (u, v) = (1.0 - a, 1.0 - b);
                let s = u.powf(p) + v.powf(p);
                if s >= 1.0 {
                    Eval2::new(0.0, 0.0, 0.0)
                } else if s == 0.0 {
                    // Cone tip at (1, 1); take the one-sided slope of the
                    // first argument.
                    Eval2::new(1.0, 1.0, 0.0)
                } else {
                    let k = s.powf(1.0 / p - 1.0);
                    let value = match (u == 0.0, v == 0.0) {
                        (true, _) => b,
                        (_, true) => a,
                        _ => 1.0 - s.powf(1.0 / p),
                    };
                    Eval2::new(value, u.powf(p - 1.0) * k, v.powf(p - 1.0) * k)
                }
            }
        }
    }

    pub(crate) fn distance_to_locus(&self, a: f64, b: f64) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        match *self {
            TNorm::Godel => (a - b).abs() / s2,
            TNorm::Product => f64::INFINITY,
            TNorm::Lukasiewicz => (a + b - 1.0).abs() / s2,
            TNorm::Drastic => dist_to(a, &[1.0]).min(dist_to(b, &[1.0])),
            TNorm::Nilpotent => ((a - b).abs() / s2).min((a + b - 1.0).abs() / s2),
            TNorm::Yager { p } => yager_curve_distance(1.0 - a, 1.0 - b, p),
        }
    }
}

impl TConorm {
    pub fn yager(p: f64) -> Result<Self, OperatorError> {
        Ok(TConorm::Yager { p: check_yager_p("yager", p)? })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TConorm::Godel => "godel",
            TConorm::Product => "product",
            TConorm::Lukasiewicz => "lukasiewicz",
            TConorm::Drastic => "drastic",
            TConorm::Nilpotent => "nilpotent",
            TConorm::Yager { .. } => "yager",
        }
    }

    pub fn dual(&self) -> TNorm {
        match *self {
            TConorm::Godel => TNorm::Godel,
            TConorm::Product => TNorm::Product,
            TConorm::Lukasiewicz => TNorm::Lukasiewicz,
            TConorm::Drastic => TNorm::Drastic,
            TConorm::Nilpotent => TNorm::Nilpotent,
            TConorm::Yager { p } => TNorm::Yager { p },
        }
    }

    pub fn eval(&self, a: f64, b: f64) -> Result<Eval2, OperatorError> {
        let (a, b) = (check_unit(a)?, check_unit(b)?);
        Ok(self.eval_unchecked(a, b))
    }

    pub(crate) fn eval_unchecked(&self, a: f64, b: f64) -> Eval2 {
        match *self {
            TConorm::Godel => max2(a, b),
            TConorm::Product => Eval2::new(a + b - a * b, 1.0 - b, 1.0 - a),
            TConorm::Lukasiewicz => {
                let v = a + b;
                if v < 1.0 {
                    Eval2::new(v, 1.0, 1.0)
                } else {
                    Eval2::new(1.0, 0.0, 0.0)
                }
            }
            TConorm::Drastic => {
                if a == 0.0 {
                    Eval2::new(b, 0.0, 1.0)
                } else if b == 0.0 {
                    Eval2::new(a, 1.0, 0.0)
                } else {
                    Eval2::new(1.0, 0.0, 0.0)
                }
            }
            TConorm::Nilpotent => {
                if a + b < 1.0 {
                    max2(a, b)
                } else {
                    Eval2::new(1.0, 0.0, 0.0)
                }
            }
            TConorm::Yager { p } => {
                let s = a.powf(p) + b.powf(p);
                if s >= 1.0 {
                    Eval2::new(1.0, 0.0, 0.0)
                } else if s == 0.0 {
                    Eval2::new(0.0, 1.0, 0.0)
                } else {
                    let k = s.powf(1.0 / p - 1.0);
                    let value = match (a == 0.0, b == 0.0) {
                        (true, _) => b,
                        (_, true) => a,
                        _ => s.powf(1.0 / p),
                    };
                    Eval2::new(value, a.powf(p - 1.0) * k, b.powf(p - 1.0) * k)
                }
            }
        }
    }

    pub(crate) fn distance_to_locus(&self, a: f64, b: f64) -> f64 {
        // Each conorm's locus is the mirror image of its dual's.
        self.dual().distance_to_locus(1.0 - a, 1.0 - b)
    }
}

/// `min` with the whole partial on the first argument at a tie.
pub(crate) fn min2(a: f64, b: f64) -> Eval2 {
    if a <= b {
        Eval2::new(a, 1.0, 0.0)
    } else {
        Eval2::new(b, 0.0, 1.0)
    }
}

/// `max` with the whole partial on the first argument at a tie.
pub(crate) fn max2(a: f64, b: f64) -> Eval2 {
    if a >= b {
        Eval2::new(a, 1.0, 0.0)
    } else {
        Eval2::new(b, 0.0, 1.0)
    }
}

/// Approximate distance from `(u, v)` to the curve `u^p + v^p = 1` and the
/// cone tip at the origin, in the reflected coordinates `u = 1 - a`.
pub(crate) fn yager_curve_distance(u: f64, v: f64, p: f64) -> f64 {
    let g = u.powf(p) + v.powf(p) - 1.0;
    let grad = p * (u.powf(2.0 * (p - 1.0)) + v.powf(2.0 * (p - 1.0))).sqrt();
    let curve = if grad > 0.0 { g.abs() / grad } else { f64::INFINITY };
    curve.min((u * u + v * v).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_tnorms() -> Vec<TNorm> {
        vec![
            TNorm::Godel,
            TNorm::Product,
            TNorm::Lukasiewicz,
            TNorm::Drastic,
            TNorm::Nilpotent,
            TNorm::Yager { p: 1.0 },
            TNorm::Yager { p: 2.0 },
            TNorm::Yager { p: 5.0 },
        ]
    }

    #[test]
    fn catalog_values() {
        let v = |t: TNorm, a, b| t.eval(a, b).unwrap().value;
        assert!((v(TNorm::Lukasiewicz, 0.7, 0.5) - 0.2).abs() < 1e-15);
        assert_eq!(v(TNorm::Nilpotent, 0.4, 0.5), 0.0);
        assert_eq!(v(TNorm::Nilpotent, 0.6, 0.5), 0.5);
        assert_eq!(v(TNorm::Godel, 0.5, 0.4), 0.4);
        assert_eq!(v(TNorm::Drastic, 0.9, 0.9), 0.0);
        assert!((TConorm::Product.eval(0.3, 0.5).unwrap().value - 0.65).abs() < 1e-15);
        assert_eq!(TConorm::Yager { p: 2.0 }.eval(0.6, 0.8).unwrap().value, 1.0);
    }

    #[test]
    fn neutral_elements_are_exact() {
        for t in all_tnorms() {
            for &a in &[0.0, 0.13, 0.5, 0.77, 1.0] {
                assert_eq!(t.eval(1.0, a).unwrap().value, a, "{:?}", t);
                assert_eq!(t.eval(a, 1.0).unwrap().value, a, "{:?}", t);
                assert_eq!(t.dual().eval(0.0, a).unwrap().value, a, "{:?}", t);
                assert_eq!(t.dual().eval(a, 0.0).unwrap().value, a, "{:?}", t);
            }
        }
    }

    #[test]
    fn ties_go_to_first_argument() {
        assert_eq!(TNorm::Godel.eval(0.3, 0.3).unwrap(), Eval2::new(0.3, 1.0, 0.0));
        assert_eq!(TConorm::Godel.eval(0.3, 0.3).unwrap(), Eval2::new(0.3, 1.0, 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(TNorm::Product.eval(1.2, 0.3).is_err());
        assert!(TNorm::yager(0.5).is_err());
        assert!(TConorm::yager(f64::INFINITY).is_err());
    }
}

//! Fuzzy implications `I(a, c)` and the sigmoidal smoothing family.
//!
//! Partials are reported as `d_c = dI/dc` and `d_neg_a = -dI/da`, the
//! derivative with respect to the negated antecedent. For Kleene-Dienes and
//! Fodor the `max` tie rule treats `1 - a` as the first argument.

use super::norms::{check_yager_p, TConorm};
use super::{check_unit, OperatorError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplEval {
    pub value: f64,
    pub d_c: f64,
    pub d_neg_a: f64,
}

impl ImplEval {
    fn new(value: f64, d_c: f64, d_neg_a: f64) -> Self {
        ImplEval { value, d_c, d_neg_a }
    }

    fn constant(value: f64) -> Self {
        ImplEval::new(value, 0.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Implication {
    KleeneDienes,
    Reichenbach,
    Lukasiewicz,
    DuboisPrade,
    Fodor,
    Godel,
    Goguen,
    Weber,
    YagerS { p: f64 },
    YagerR { p: f64 },
    Sigmoidal { base: Box<Implication>, s: f64, b0: f64 },
}

impl Implication {
    pub fn yager_s(p: f64) -> Result<Self, OperatorError> {
        Ok(Implication::YagerS { p: check_yager_p("yager_s", p)? })
    }

    pub fn yager_r(p: f64) -> Result<Self, OperatorError> {
        Ok(Implication::YagerR { p: check_yager_p("yager_r", p)? })
    }

    pub fn sigmoidal(base: Implication, s: f64, b0: f64) -> Result<Self, OperatorError> {
        if !(s.is_finite() && s > 0.0) {
            return Err(OperatorError::BadParameter {
                name: "sigmoidal".into(),
                param: "s",
                value: s,
                reason: "needs 0 < s < inf",
            });
        }
        if !b0.is_finite() {
            return Err(OperatorError::BadParameter {
                name: "sigmoidal".into(),
                param: "b0",
                value: b0,
                reason: "must be finite",
            });
        }
        if matches!(base, Implication::Sigmoidal { .. }) {
            return Err(OperatorError::Malformed("sigmoidal base must not itself be sigmoidal".into()));
        }
        Ok(Implication::Sigmoidal { base: Box::new(base), s, b0 })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Implication::KleeneDienes => "kleene_dienes",
            Implication::Reichenbach => "reichenbach",
            Implication::Lukasiewicz => "lukasiewicz",
            Implication::DuboisPrade => "dubois_prade",
            Implication::Fodor => "fodor",
            Implication::Godel => "godel",
            Implication::Goguen => "goguen",
            Implication::Weber => "weber",
            Implication::YagerS { .. } => "yager_s",
            Implication::YagerR { .. } => "yager_r",
            Implication::Sigmoidal { .. } => "sigmoidal",
        }
    }

    /// Implications of the form `S(1 - a, c)`.
    pub fn is_s_implication(&self) -> bool {
        matches!(
            self,
            Implication::KleeneDienes
                | Implication::Reichenbach
                | Implication::Lukasiewicz
                | Implication::DuboisPrade
                | Implication::Fodor
                | Implication::YagerS { .. }
        )
    }

    /// Implications of the form `sup { b : T(a, b) <= c }`.
    pub fn is_r_implication(&self) -> bool {
        matches!(
            self,
            Implication::Lukasiewicz
                | Implication::Fodor
                | Implication::Godel
                | Implication::Goguen
                | Implication::Weber
                | Implication::YagerR { .. }
        )
    }

    pub fn eval(&self, a: f64, c: f64) -> Result<ImplEval, OperatorError> {
        let (a, c) = (check_unit(a)?, check_unit(c)?);
        Ok(self.eval_unchecked(a, c))
    }

    pub(crate) fn eval_unchecked(&self, a: f64, c: f64) -> ImplEval {
        let na = 1.0 - a;
        match self {
            Implication::KleeneDienes => {
                if na >= c {
                    ImplEval::new(na, 0.0, 1.0)
                } else {
                    ImplEval::new(c, 1.0, 0.0)
                }
            }
            Implication::Reichenbach => ImplEval::new(na + a * c, a, 1.0 - c),
            Implication::Lukasiewicz => {
                let v = na + c;
                if v <= 1.0 {
                    ImplEval::new(v, 1.0, 1.0)
                } else {
                    ImplEval::constant(1.0)
                }
            }
            Implication::DuboisPrade => {
                let e = TConorm::Drastic.eval_unchecked(na, c);
                ImplEval::new(e.value, e.db, e.da)
            }
            Implication::Fodor => {
                if a <= c {
                    ImplEval::constant(1.0)
                } else if na >= c {
                    ImplEval::new(na, 0.0, 1.0)
                } else {
                    ImplEval::new(c, 1.0, 0.0)
                }
            }
            Implication::Godel => {
                if a <= c {
                    ImplEval::constant(1.0)
                } else {
                    ImplEval::new(c, 1.0, 0.0)
                }
            }
            Implication::Goguen => {
                if a <= c {
                    ImplEval::constant(1.0)
                } else {
                    ImplEval::new(c / a, 1.0 / a, c / (a * a))
                }
            }
            Implication::Weber => {
                if a < 1.0 {
                    ImplEval::constant(1.0)
                } else {
                    ImplEval::new(c, 1.0, 0.0)
                }
            }
            Implication::YagerS { p } => {
                let e = TConorm::Yager { p: *p }.eval_unchecked(na, c);
                ImplEval::new(e.value, e.db, e.da)
            }
            Implication::YagerR { p } => {
                if a <= c {
                    ImplEval::constant(1.0)
                } else {
                    let p = *p;
                    let d = (1.0 - c).powf(p) - na.powf(p);
                    if d <= 0.0 {
                        // Rounding can collapse a tiny positive gap to zero.
                        return ImplEval::constant(1.0);
                    }
                    let k = d.powf(1.0 / p - 1.0);
                    let value = if na == 0.0 { c } else { 1.0 - d.powf(1.0 / p) };
                    ImplEval::new(value, (1.0 - c).powf(p - 1.0) * k, na.powf(p - 1.0) * k)
                }
            }
            Implication::Sigmoidal { base, s, b0 } => {
                let inner = base.eval_unchecked(a, c);
                let (value, slope) = sigmoidal_transform(inner.value, *s, *b0);
                ImplEval::new(value, slope * inner.d_c, slope * inner.d_neg_a)
            }
        }
    }

    /// Distance to the kinks, branch lines and singular points of the
    /// kernel inside the unit square.
    pub(crate) fn distance_to_locus(&self, a: f64, c: f64) -> f64 {
        let s2 = std::f64::consts::SQRT_2;
        let diag = (a - c).abs() / s2;
        let anti = (1.0 - a - c).abs() / s2;
        let corner_a0c0 = (a * a + c * c).sqrt();
        match self {
            Implication::KleeneDienes => anti,
            Implication::Reichenbach => f64::INFINITY,
            Implication::Lukasiewicz => diag,
            Implication::DuboisPrade => (1.0 - a).min(c),
            Implication::Fodor => diag.min(if a > c { anti } else { f64::INFINITY }),
            Implication::Godel => diag,
            Implication::Goguen => diag.min(corner_a0c0),
            Implication::Weber => 1.0 - a,
            Implication::YagerS { p } => super::norms::yager_curve_distance(1.0 - a, c, *p).min(
                // The kernel is S_Y(1 - a, c): its cone tip sits at a = 1, c = 0.
                ((1.0 - a).powi(2) + c * c).sqrt(),
            ),
            Implication::YagerR { p } => {
                if *p == 1.0 {
                    diag
                } else {
                    diag.min(((1.0 - a).powi(2) + (1.0 - c).powi(2)).sqrt())
                }
            }
            Implication::Sigmoidal { base, .. } => base.distance_to_locus(a, c),
        }
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Maps a base truth value `i` through the rescaled sigmoid and returns the
/// value together with its derivative in `i`.
///
/// Written as `expm1(-s i) / expm1(-s)` times a ratio of `1 + e^x` terms so
/// that `i = 0` and `i = 1` map exactly to 0 and 1 and large `s` does not
/// overflow.
pub(crate) fn sigmoidal_transform(i: f64, s: f64, b0: f64) -> (f64, f64) {
    let head = (-s * i).exp_m1() / (-s).exp_m1();
    let ratio = (softplus(-s * (1.0 + b0)) - softplus(-s * (i + b0))).exp();
    let value = if i == 1.0 { 1.0 } else { (head * ratio).clamp(0.0, 1.0) };
    let z = s * (i + b0);
    let log_slope = softplus(-s * (1.0 + b0)) + softplus(s * b0) - (-(-s).exp_m1()).ln() + s.ln()
        - softplus(-z)
        - softplus(z);
    (value, log_slope.exp())
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// The sigmoidal implication in its literal general form, for a base value
/// `i = I(a, c)`. Only numerically sound for moderate `s`.
pub fn sigmoidal_value_general(i: f64, s: f64, b0: f64) -> f64 {
    let lead = (1.0 + (-s * (1.0 + b0)).exp()) / ((-b0 * s).exp() - (-s * (1.0 + b0)).exp());
    lead * ((1.0 + (-b0 * s).exp()) * logistic(s * (i + b0)) - 1.0)
}

/// The literal form specialised to `b0 = -1/2`.
pub fn sigmoidal_value_half(i: f64, s: f64) -> f64 {
    let e = (s / 2.0).exp();
    ((1.0 + e) * logistic(s * (i - 0.5)) - 1.0) / (e - 1.0)
}

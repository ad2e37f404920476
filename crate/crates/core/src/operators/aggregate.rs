//! n-ary aggregation operators used to interpret universal quantification.

use super::norms::check_yager_p;
use super::{check_unit, OperatorError};

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateEval {
    pub value: f64,
    pub partials: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregator {
    Min,
    Max,
    Product,
    LogProduct,
    Lukasiewicz,
    BoundedSum,
    ProbSum,
    Yager { p: f64 },
    Nilpotent,
    /// Mean-p error, `1 - (mean (1 - x_i)^p)^(1/p)`.
    Pme { p: f64 },
    /// Generalized mean, `(mean x_i^p)^(1/p)`.
    PMean { p: f64 },
}

fn check_positive_p(name: &str, p: f64) -> Result<f64, OperatorError> {
    if p.is_finite() && p > 0.0 {
        Ok(p)
    } else {
        Err(OperatorError::BadParameter {
            name: name.to_string(),
            param: "p",
            value: p,
            reason: "needs 0 < p < inf",
        })
    }
}

impl Aggregator {
    pub fn yager(p: f64) -> Result<Self, OperatorError> {
        Ok(Aggregator::Yager { p: check_yager_p("yager", p)? })
    }

    pub fn pme(p: f64) -> Result<Self, OperatorError> {
        Ok(Aggregator::Pme { p: check_positive_p("pme", p)? })
    }

    pub fn pmean(p: f64) -> Result<Self, OperatorError> {
        Ok(Aggregator::PMean { p: check_positive_p("pmean", p)? })
    }

    pub fn mae() -> Self {
        Aggregator::Pme { p: 1.0 }
    }

    pub fn rmse() -> Self {
        Aggregator::Pme { p: 2.0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Aggregator::Min => "min",
            Aggregator::Max => "max",
            Aggregator::Product => "product",
            Aggregator::LogProduct => "log_product",
            Aggregator::Lukasiewicz => "lukasiewicz",
            Aggregator::BoundedSum => "bounded_sum",
            Aggregator::ProbSum => "prob_sum",
            Aggregator::Yager { .. } => "yager",
            Aggregator::Nilpotent => "nilpotent",
            Aggregator::Pme { .. } => "pme",
            Aggregator::PMean { .. } => "pmean",
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            Aggregator::Yager { p } | Aggregator::Pme { p } | Aggregator::PMean { p } => Some(p),
            _ => None,
        }
    }

    /// Whether the output lives in `(-inf, 0]` rather than `[0, 1]`.
    pub fn is_log_domain(&self) -> bool {
        matches!(self, Aggregator::LogProduct)
    }

    pub fn eval(&self, xs: &[f64]) -> Result<AggregateEval, OperatorError> {
        if xs.is_empty() {
            return Err(OperatorError::EmptyAggregate);
        }
        for &x in xs {
            check_unit(x)?;
        }
        if matches!(self, Aggregator::LogProduct) && xs.contains(&0.0) {
            return Err(OperatorError::LogOfZero);
        }
        Ok(self.eval_unchecked(xs))
    }

    pub(crate) fn eval_unchecked(&self, xs: &[f64]) -> AggregateEval {
        let n = xs.len();
        let nf = n as f64;
        let mut partials = vec![0.0; n];
        let value = match *self {
            Aggregator::Min => {
                let i = first_argmin(xs);
                partials[i] = 1.0;
                xs[i]
            }
            Aggregator::Max => {
                let i = first_argmax(xs);
                partials[i] = 1.0;
                xs[i]
            }
            Aggregator::Product => {
                let (value, others) = leave_one_out_products(xs.iter().copied());
                partials = others;
                value
            }
            Aggregator::LogProduct => {
                for (p, &x) in partials.iter_mut().zip(xs) {
                    *p = 1.0 / x;
                }
                xs.iter().map(|x| x.ln()).sum()
            }
            Aggregator::Lukasiewicz => {
                let v = xs.iter().sum::<f64>() - (nf - 1.0);
                if v > 0.0 {
                    partials.fill(1.0);
                    v
                } else {
                    0.0
                }
            }
            Aggregator::BoundedSum => {
                let v: f64 = xs.iter().sum();
                if v < 1.0 {
                    partials.fill(1.0);
                    v
                } else {
                    1.0
                }
            }
            Aggregator::ProbSum => {
                let (miss, others) = leave_one_out_products(xs.iter().map(|x| 1.0 - x));
                partials = others;
                1.0 - miss
            }
            Aggregator::Yager { p } => {
                let s: f64 = xs.iter().map(|x| (1.0 - x).powf(p)).sum();
                if s >= 1.0 {
                    0.0
                } else if s == 0.0 {
                    partials[0] = 1.0;
                    1.0
                } else {
                    let k = s.powf(1.0 / p - 1.0);
                    for (d, &x) in partials.iter_mut().zip(xs) {
                        *d = (1.0 - x).powf(p - 1.0) * k;
                    }
                    1.0 - s.powf(1.0 / p)
                }
            }
            Aggregator::Nilpotent => {
                let i = first_argmin(xs);
                let second = xs
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &x)| x)
                    .fold(f64::INFINITY, f64::min);
                // With a single input the pairwise condition is vacuous.
                if n == 1 || xs[i] + second > 1.0 {
                    partials[i] = 1.0;
                    xs[i]
                } else {
                    0.0
                }
            }
            Aggregator::Pme { p } => {
                let errs: Vec<f64> = xs.iter().map(|x| 1.0 - x).collect();
                1.0 - power_mean(&errs, p, &mut partials, 1.0)
            }
            Aggregator::PMean { p } => power_mean(xs, p, &mut partials, 1.0),
        };
        AggregateEval { value, partials }
    }

    /// Distance from `xs` to the aggregator's nondifferentiable or singular
    /// set inside the cube.
    pub(crate) fn distance_to_locus(&self, xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        match *self {
            Aggregator::Min | Aggregator::Max => min_pair_gap(xs),
            Aggregator::Product | Aggregator::ProbSum => f64::INFINITY,
            Aggregator::LogProduct => xs.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregator::Lukasiewicz => (xs.iter().sum::<f64>() - (n - 1.0)).abs() / n.sqrt(),
            Aggregator::BoundedSum => (xs.iter().sum::<f64>() - 1.0).abs() / n.sqrt(),
            Aggregator::Yager { p } => {
                let g: f64 = xs.iter().map(|x| (1.0 - x).powf(p)).sum::<f64>() - 1.0;
                let grad = p * xs
                    .iter()
                    .map(|x| (1.0 - x).powf(2.0 * (p - 1.0)))
                    .sum::<f64>()
                    .sqrt();
                let curve = if grad > 0.0 { g.abs() / grad } else { f64::INFINITY };
                curve.min(dist_to_corner(xs, 1.0))
            }
            Aggregator::Nilpotent => {
                let mut sorted = xs.to_vec();
                sorted.sort_by(f64::total_cmp);
                let cond = if sorted.len() > 1 {
                    (sorted[0] + sorted[1] - 1.0).abs() / std::f64::consts::SQRT_2
                } else {
                    f64::INFINITY
                };
                cond.min(min_pair_gap(xs))
            }
            Aggregator::Pme { p } => {
                let corner = if p == 1.0 { f64::INFINITY } else { dist_to_corner(xs, 1.0) };
                if p < 1.0 {
                    corner.min(xs.iter().map(|x| 1.0 - x).fold(f64::INFINITY, f64::min))
                } else {
                    corner
                }
            }
            Aggregator::PMean { p } => {
                let corner = if p == 1.0 { f64::INFINITY } else { dist_to_corner(xs, 0.0) };
                if p < 1.0 {
                    corner.min(xs.iter().copied().fold(f64::INFINITY, f64::min))
                } else {
                    corner
                }
            }
        }
    }
}

/// `(mean ys^p)^(1/p)` with partials written into `out`, scaled by `sign`.
///
/// Where the formula's partial is unbounded (a zero entry with `p < 1`) the
/// partial is reported as 0. At the all-zero point the first entry receives
/// the one-sided coordinate slope.
fn power_mean(ys: &[f64], p: f64, out: &mut [f64], sign: f64) -> f64 {
    let nf = ys.len() as f64;
    let m: f64 = ys.iter().map(|y| y.powf(p)).sum::<f64>() / nf;
    if m == 0.0 {
        if p == 1.0 {
            out.fill(sign / nf);
        } else {
            out.fill(0.0);
            out[0] = sign * nf.powf(-1.0 / p);
        }
        return 0.0;
    }
    let k = m.powf(1.0 / p - 1.0) / nf;
    for (d, &y) in out.iter_mut().zip(ys) {
        *d = if y == 0.0 && p < 1.0 {
            0.0
        } else {
            sign * y.powf(p - 1.0) * k
        };
    }
    m.powf(1.0 / p)
}

/// Product of all factors plus, for each index, the product of the others.
/// Uses prefix and suffix products so zero factors are handled exactly.
fn leave_one_out_products(factors: impl Iterator<Item = f64>) -> (f64, Vec<f64>) {
    let f: Vec<f64> = factors.collect();
    let n = f.len();
    let mut prefix = vec![1.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] * f[i];
    }
    let mut others = vec![0.0; n];
    let mut suffix = 1.0;
    for i in (0..n).rev() {
        others[i] = prefix[i] * suffix;
        suffix *= f[i];
    }
    (prefix[n], others)
}

pub(crate) fn first_argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn first_argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn min_pair_gap(xs: &[f64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            gap = gap.min((xs[i] - xs[j]).abs() / std::f64::consts::SQRT_2);
        }
    }
    gap
}

fn dist_to_corner(xs: &[f64], c: f64) -> f64 {
    xs.iter().map(|x| (x - c) * (x - c)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn val(a: Aggregator, xs: &[f64]) -> f64 {
        a.eval(xs).unwrap().value
    }

    #[test]
    fn catalog_values() {
        assert!((val(Aggregator::mae(), &[0.2, 0.4, 0.6]) - 0.4).abs() < 1e-15);
        assert_eq!(val(Aggregator::Nilpotent, &[0.6, 0.7, 0.9]), 0.6);
        assert_eq!(val(Aggregator::Nilpotent, &[0.4, 0.5, 0.9]), 0.0);
        assert_eq!(val(Aggregator::Nilpotent, &[0.4, 0.7, 0.9]), 0.4);
        assert!((val(Aggregator::Lukasiewicz, &[0.9, 0.95, 0.97]) - 0.82).abs() < 1e-12);
        assert!((val(Aggregator::ProbSum, &[0.5, 0.5]) - 0.75).abs() < 1e-15);
        assert!((val(Aggregator::rmse(), &[0.0, 1.0]) - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert!((val(Aggregator::PMean { p: 2.0 }, &[0.0, 1.0]) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn all_ones_is_true() {
        let aggs = [
            Aggregator::Min,
            Aggregator::Max,
            Aggregator::Product,
            Aggregator::Lukasiewicz,
            Aggregator::BoundedSum,
            Aggregator::ProbSum,
            Aggregator::Yager { p: 2.0 },
            Aggregator::Nilpotent,
            Aggregator::Pme { p: 0.5 },
            Aggregator::Pme { p: 3.0 },
            Aggregator::PMean { p: 2.0 },
        ];
        for n in 1..6 {
            let ones = vec![1.0; n];
            for a in aggs {
                assert_eq!(val(a, &ones), 1.0, "{:?} n={}", a, n);
            }
            assert_eq!(val(Aggregator::LogProduct, &ones), 0.0);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(Aggregator::Min.eval(&[]), Err(OperatorError::EmptyAggregate));
        assert_eq!(Aggregator::LogProduct.eval(&[0.5, 0.0]), Err(OperatorError::LogOfZero));
        assert!(Aggregator::pme(0.0).is_err());
        assert!(Aggregator::yager(0.9).is_err());
    }

    #[test]
    fn product_partials_with_zero_factor() {
        let e = Aggregator::Product.eval(&[0.0, 0.5, 0.4]).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.partials, vec![0.2, 0.0, 0.0]);
    }

    #[test]
    fn min_tie_goes_first() {
        let e = Aggregator::Min.eval(&[0.4, 0.3, 0.3]).unwrap();
        assert_eq!(e.partials, vec![0.0, 1.0, 0.0]);
    }
}

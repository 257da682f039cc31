//! Scalar noise laws. Each exposes `−ln pdf`, its derivative, support,
//! closed-form moments where they exist, and an exact sampler.

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Exp, Gamma, StandardNormal};
use statrs::function::beta::ln_beta;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{FRAC_2_PI, LN_2, PI};

use super::special::{ln_std_normal_cdf, normal_pdf_over_cdf, std_normal_ln_pdf, LN_PI, LN_SQRT_2PI};
use super::Support;

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFamily {
    Gaussian {
        mean: f64,
        var: f64,
    },
    SkewNormal {
        xi: f64,
        omega: f64,
        alpha: f64,
    },
    Mixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        vars: Vec<f64>,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Cauchy {
        x0: f64,
        gamma: f64,
    },
    BetaPrime {
        alpha: f64,
        beta: f64,
    },
    Exponential {
        rate: f64,
    },
    Levy {
        mu: f64,
        c: f64,
    },
}

impl ScalarFamily {
    pub fn support(&self) -> Support {
        match *self {
            ScalarFamily::Gamma { .. } | ScalarFamily::BetaPrime { .. } => Support::open(0.0, f64::INFINITY),
            ScalarFamily::Exponential { .. } => Support {
                lower: 0.0,
                upper: f64::INFINITY,
                lower_closed: true,
                upper_closed: false,
            },
            ScalarFamily::Levy { mu, .. } => Support::open(mu, f64::INFINITY),
            _ => Support::real_line(),
        }
    }

    /// `−ln pdf(v)` for `v` inside the support; callers check the support.
    pub(crate) fn neg_log_pdf(&self, v: f64) -> f64 {
        match self {
            ScalarFamily::Gaussian { mean, var } => {
                let d = v - mean;
                0.5 * d * d / var + 0.5 * var.ln() + LN_SQRT_2PI
            }
            ScalarFamily::SkewNormal { xi, omega, alpha } => {
                let z = (v - xi) / omega;
                -LN_2 + omega.ln() - std_normal_ln_pdf(z) - ln_std_normal_cdf(alpha * z)
            }
            ScalarFamily::Mixture { weights, means, vars } => {
                let top = mixture_log_terms(weights, means, vars, v).fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = mixture_log_terms(weights, means, vars, v)
                    .map(|t| (t - top).exp())
                    .sum();
                -(top + sum.ln())
            }
            ScalarFamily::Gamma { shape, scale } => {
                ln_gamma(*shape) + shape * scale.ln() - (shape - 1.0) * v.ln() + v / scale
            }
            ScalarFamily::Cauchy { x0, gamma } => {
                let z = (v - x0) / gamma;
                LN_PI + gamma.ln() + (z * z).ln_1p()
            }
            ScalarFamily::BetaPrime { alpha, beta } => {
                ln_beta(*alpha, *beta) - (alpha - 1.0) * v.ln() + (alpha + beta) * v.ln_1p()
            }
            ScalarFamily::Exponential { rate } => rate * v - rate.ln(),
            ScalarFamily::Levy { mu, c } => {
                let u = v - mu;
                -0.5 * (c / (2.0 * PI)).ln() + 1.5 * u.ln() + c / (2.0 * u)
            }
        }
    }

    /// Derivative of [`neg_log_pdf`](Self::neg_log_pdf).
    pub(crate) fn grad_neg_log_pdf(&self, v: f64) -> f64 {
        match self {
            ScalarFamily::Gaussian { mean, var } => (v - mean) / var,
            ScalarFamily::SkewNormal { xi, omega, alpha } => {
                let z = (v - xi) / omega;
                (z - alpha * normal_pdf_over_cdf(alpha * z)) / omega
            }
            ScalarFamily::Mixture { weights, means, vars } => {
                let top = mixture_log_terms(weights, means, vars, v).fold(f64::NEG_INFINITY, f64::max);
                let mut num = 0.0;
                let mut den = 0.0;
                for (t, (m, s2)) in mixture_log_terms(weights, means, vars, v).zip(means.iter().zip(vars)) {
                    let w = (t - top).exp();
                    num += w * (v - m) / s2;
                    den += w;
                }
                num / den
            }
            ScalarFamily::Gamma { shape, scale } => -(shape - 1.0) / v + 1.0 / scale,
            ScalarFamily::Cauchy { x0, gamma } => {
                let d = v - x0;
                2.0 * d / (d * d + gamma * gamma)
            }
            ScalarFamily::BetaPrime { alpha, beta } => -(alpha - 1.0) / v + (alpha + beta) / (1.0 + v),
            ScalarFamily::Exponential { rate } => *rate,
            ScalarFamily::Levy { mu, c } => {
                let u = v - mu;
                1.5 / u - c / (2.0 * u * u)
            }
        }
    }

    /// Closed-form mode, or `None` when it must be located numerically.
    pub(crate) fn closed_form_mode(&self) -> Option<f64> {
        match *self {
            ScalarFamily::Gaussian { mean, .. } => Some(mean),
            ScalarFamily::Gamma { shape, scale } => Some(if shape > 1.0 { (shape - 1.0) * scale } else { 0.0 }),
            ScalarFamily::Cauchy { x0, .. } => Some(x0),
            ScalarFamily::BetaPrime { alpha, beta } => {
                Some(if alpha > 1.0 { (alpha - 1.0) / (beta + 1.0) } else { 0.0 })
            }
            ScalarFamily::Exponential { .. } => Some(0.0),
            ScalarFamily::Levy { mu, c } => Some(mu + c / 3.0),
            ScalarFamily::SkewNormal { .. } | ScalarFamily::Mixture { .. } => None,
        }
    }

    /// Interval expected to contain every local mode, used by the bracketed search.
    pub(crate) fn mode_search_bracket(&self) -> (f64, f64) {
        match self {
            ScalarFamily::SkewNormal { xi, omega, .. } => (xi - 10.0 * omega, xi + 10.0 * omega),
            ScalarFamily::Mixture { means, vars, .. } => {
                let sd = vars.iter().cloned().fold(0.0, f64::max).sqrt();
                let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo - 10.0 * sd, hi + 10.0 * sd)
            }
            other => {
                let (c, s) = (other.center(), other.spread());
                (c - 10.0 * s, c + 10.0 * s)
            }
        }
    }

    /// `(mean, variance)` where both are finite.
    pub fn moments(&self) -> Option<(f64, f64)> {
        match self {
            ScalarFamily::Gaussian { mean, var } => Some((*mean, *var)),
            ScalarFamily::SkewNormal { xi, omega, alpha } => {
                let delta = alpha / (1.0 + alpha * alpha).sqrt();
                let mean = xi + omega * delta * FRAC_2_PI.sqrt();
                let var = omega * omega * (1.0 - FRAC_2_PI * delta * delta);
                Some((mean, var))
            }
            ScalarFamily::Mixture { weights, means, vars } => {
                let mean: f64 = weights.iter().zip(means).map(|(w, m)| w * m).sum();
                let second: f64 = weights
                    .iter()
                    .zip(means.iter().zip(vars))
                    .map(|(w, (m, s2))| w * (s2 + m * m))
                    .sum();
                Some((mean, second - mean * mean))
            }
            ScalarFamily::Gamma { shape, scale } => Some((shape * scale, shape * scale * scale)),
            ScalarFamily::BetaPrime { alpha, beta } if *beta > 2.0 => {
                let mean = alpha / (beta - 1.0);
                let var = alpha * (alpha + beta - 1.0) / ((beta - 2.0) * (beta - 1.0).powi(2));
                Some((mean, var))
            }
            ScalarFamily::Exponential { rate } => Some((1.0 / rate, 1.0 / (rate * rate))),
            ScalarFamily::BetaPrime { .. } | ScalarFamily::Cauchy { .. } | ScalarFamily::Levy { .. } => None,
        }
    }

    /// Location used to center quadrature grids: the mean when finite, else the median.
    pub fn center(&self) -> f64 {
        if let Some((m, _)) = self.moments() {
            return m;
        }
        match *self {
            ScalarFamily::Cauchy { x0, .. } => x0,
            ScalarFamily::Levy { mu, c } => mu + c / (2.0 * erfc_inv(0.5).powi(2)),
            ScalarFamily::BetaPrime { alpha, beta } => {
                // no finite mean for β ≤ 1; the mode is a serviceable center
                if alpha > 1.0 {
                    (alpha - 1.0) / (beta + 1.0)
                } else {
                    1.0
                }
            }
            _ => unreachable!("families with finite moments handled above"),
        }
    }

    /// Standard-deviation-equivalent spread: `√var` when finite, else IQR/1.349.
    pub fn spread(&self) -> f64 {
        if let Some((_, v)) = self.moments() {
            return v.sqrt();
        }
        const IQR_PER_SD: f64 = 1.348_979_500_392_163_5;
        match *self {
            ScalarFamily::Cauchy { gamma, .. } => 2.0 * gamma / IQR_PER_SD,
            ScalarFamily::Levy { c, .. } => {
                // F(u) = erfc(√(c / 2u)) so the p-quantile is c / (2 erfc⁻¹(p)²).
                let q = |p: f64| c / (2.0 * erfc_inv(p).powi(2));
                (q(0.75) - q(0.25)) / IQR_PER_SD
            }
            ScalarFamily::BetaPrime { alpha, beta } => (alpha / beta).max(1.0),
            _ => unreachable!("families with finite moments handled above"),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ScalarFamily::Gaussian { mean, var } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + var.sqrt() * z
            }
            ScalarFamily::SkewNormal { xi, omega, alpha } => {
                let delta = alpha / (1.0 + alpha * alpha).sqrt();
                let u0: f64 = StandardNormal.sample(rng);
                let v: f64 = StandardNormal.sample(rng);
                let u1 = delta * u0 + (1.0 - delta * delta).sqrt() * v;
                let z = if u0 >= 0.0 { u1 } else { -u1 };
                xi + omega * z
            }
            ScalarFamily::Mixture { weights, means, vars } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut k = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        k = i;
                        break;
                    }
                }
                let z: f64 = StandardNormal.sample(rng);
                means[k] + vars[k].sqrt() * z
            }
            ScalarFamily::Gamma { shape, scale } => {
                Gamma::new(*shape, *scale).expect("validated parameters").sample(rng)
            }
            ScalarFamily::Cauchy { x0, gamma } => Cauchy::new(*x0, *gamma).expect("validated parameters").sample(rng),
            ScalarFamily::BetaPrime { alpha, beta } => {
                let x = Gamma::new(*alpha, 1.0).expect("validated parameters").sample(rng);
                let y = Gamma::new(*beta, 1.0).expect("validated parameters").sample(rng);
                x / y
            }
            ScalarFamily::Exponential { rate } => Exp::new(*rate).expect("validated parameters").sample(rng),
            ScalarFamily::Levy { mu, c } => {
                let z: f64 = StandardNormal.sample(rng);
                mu + c / (z * z)
            }
        }
    }
}

fn mixture_log_terms<'a>(
    weights: &'a [f64],
    means: &'a [f64],
    vars: &'a [f64],
    v: f64,
) -> impl Iterator<Item = f64> + 'a {
    weights.iter().zip(means).zip(vars).map(move |((w, m), s2)| {
        let d = v - m;
        w.ln() - 0.5 * d * d / s2 - 0.5 * s2.ln() - LN_SQRT_2PI
    })
}

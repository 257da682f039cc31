//! Measurement-noise models.
//!
//! A [`NoiseModel`] is a product of independent scalar laws, one per
//! measurement coordinate. Each coordinate is described by its negative
//! log-density `r(v) = −ln p(v)` (normalized, so `exp(−r)` integrates to one),
//! the analytic gradient of `r`, its local modes, support, exact sampler and,
//! where they exist, its first two moments.
//!
//! The named presets reproduce the eight heavy-tailed, skewed and multimodal
//! laws of the benchmark, plus the Gaussian baseline `N(0, 3)`.

mod family;
mod special;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

pub use family::ScalarFamily;

use crate::error::NoiseError;
use crate::linalg::{SymPdMatrix, Vector};

/// Interval support of a scalar law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl Support {
    pub fn real_line() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn open(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            lower_closed: false,
            upper_closed: false,
        }
    }

    /// Strict interior membership.
    pub fn contains_interior(&self, v: f64) -> bool {
        v > self.lower && v < self.upper
    }

    /// Clamps `v` at least `margin` inside the support.
    pub fn project(&self, v: f64, margin: f64) -> f64 {
        let mut out = v;
        if self.lower.is_finite() && out < self.lower + margin {
            out = self.lower + margin;
        }
        if self.upper.is_finite() && out > self.upper - margin {
            out = self.upper - margin;
        }
        out
    }
}

/// A Gaussian law `N(mean, covariance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub mean: Vector,
    pub covariance: SymPdMatrix,
}

impl GaussianSpec {
    pub fn new(mean: Vector, covariance: SymPdMatrix) -> Result<Self, NoiseError> {
        if mean.len() != covariance.dim() {
            return Err(NoiseError::Dimension {
                expected: covariance.dim(),
                got: mean.len(),
            });
        }
        Ok(Self { mean, covariance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `mean + L z` with `L Lᵀ = covariance` and `z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let z = Vector::from_iterator(
            self.dim(),
            (0..self.dim()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        &self.mean + self.covariance.cholesky_factor() * z
    }
}

/// One measurement coordinate: a scalar law plus its precomputed modes.
#[derive(Debug, Clone, PartialEq)]
struct Coordinate {
    family: ScalarFamily,
    support: Support,
    modes: Vec<f64>,
}

impl Coordinate {
    fn new(family: ScalarFamily) -> Result<Self, NoiseError> {
        let support = family.support();
        let modes = match family.closed_form_mode() {
            Some(m) => vec![m],
            None => find_modes(&family, &support)?,
        };
        Ok(Self { family, support, modes })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    name: &'static str,
    params: Vec<(&'static str, f64)>,
    coords: Vec<Coordinate>,
}

/// Benchmark presets in listing order (a)–(h).
pub const PRESET_NAMES: [&str; 8] = [
    "skew_normal",
    "bimodal_gm",
    "gamma",
    "impulsive_gm",
    "cauchy",
    "beta_prime",
    "exponential",
    "levy",
];

/// Every name accepted by [`make_distribution`].
pub const FAMILY_NAMES: [&str; 9] = [
    "gaussian",
    "skew_normal",
    "bimodal_gm",
    "gamma",
    "impulsive_gm",
    "cauchy",
    "beta_prime",
    "exponential",
    "levy",
];

/// The parameter keys each family requires, with their display symbols.
fn family_keys(name: &str) -> Option<&'static [(&'static str, &'static str)]> {
    Some(match name {
        "gaussian" => &[("mu", "μ"), ("var", "σ²")],
        "skew_normal" => &[("xi", "ξ"), ("omega", "ω"), ("alpha", "α")],
        "bimodal_gm" | "impulsive_gm" => &[
            ("alpha1", "α₁"),
            ("alpha2", "α₂"),
            ("mu1", "μ₁"),
            ("mu2", "μ₂"),
            ("var1", "σ₁²"),
            ("var2", "σ₂²"),
        ],
        "gamma" => &[("alpha", "α"), ("theta", "θ")],
        "cauchy" => &[("x0", "x₀"), ("gamma", "γ")],
        "beta_prime" => &[("alpha", "α"), ("beta", "β")],
        "exponential" => &[("lambda", "λ")],
        "levy" => &[("mu", "μ"), ("c", "c")],
        _ => return None,
    })
}

/// Parameters of the named preset.
pub fn preset_params(name: &str) -> Option<BTreeMap<String, f64>> {
    let pairs: &[(&str, f64)] = match name {
        "gaussian" => &[("mu", 0.0), ("var", 3.0)],
        "skew_normal" => &[("xi", -2.0063), ("omega", 2.6505), ("alpha", 3.0)],
        "bimodal_gm" => &[
            ("alpha1", 0.4),
            ("alpha2", 0.6),
            ("mu1", -1.8),
            ("mu2", 1.2),
            ("var1", 0.9),
            ("var2", 0.8),
        ],
        "gamma" => &[("alpha", 2.0), ("theta", 1.5f64.sqrt())],
        "impulsive_gm" => &[
            ("alpha1", 0.1),
            ("alpha2", 0.9),
            ("mu1", 0.0),
            ("mu2", 0.0),
            ("var1", 25.0),
            ("var2", 0.5556),
        ],
        "cauchy" => &[("x0", 0.0), ("gamma", 1.0)],
        "beta_prime" => &[("alpha", 2.0), ("beta", 2.7891)],
        "exponential" => &[("lambda", 1.0 / 3f64.sqrt())],
        "levy" => &[("mu", 1.0), ("c", 3.0)],
        _ => return None,
    };
    Some(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
}

/// Builds the named preset.
pub fn preset(name: &str) -> Result<NoiseModel, NoiseError> {
    let params = preset_params(name).ok_or_else(|| unknown(name))?;
    make_distribution(name, &params)
}

fn unknown(name: &str) -> NoiseError {
    NoiseError::UnknownModel {
        name: name.to_string(),
        valid: FAMILY_NAMES.join(", "),
    }
}

/// Constructs a scalar noise model from a family name and a complete parameter map.
pub fn make_distribution(name: &str, params: &BTreeMap<String, f64>) -> Result<NoiseModel, NoiseError> {
    let keys = family_keys(name).ok_or_else(|| unknown(name))?;
    let (static_name, label) = FAMILY_NAMES
        .iter()
        .find(|n| **n == name)
        .map(|n| (*n, model_label(n)))
        .expect("keys exist only for known names");

    let mut values = Vec::with_capacity(keys.len());
    for (key, symbol) in keys {
        let v = *params.get(*key).ok_or_else(|| NoiseError::InvalidParameter {
            model: label,
            param: key.to_string(),
            reason: "missing".into(),
        })?;
        if !v.is_finite() {
            return Err(invalid(label, key, "must be finite"));
        }
        values.push((*symbol, v));
    }
    if let Some(extra) = params.keys().find(|k| !keys.iter().any(|(key, _)| key == k)) {
        return Err(invalid(label, extra, "not a parameter of this family"));
    }
    let get = |i: usize| values[i].1;
    let positive = |i: usize| -> Result<f64, NoiseError> {
        let v = get(i);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(invalid(label, keys[i].0, "must be positive"))
        }
    };

    let family = match name {
        "gaussian" => ScalarFamily::Gaussian {
            mean: get(0),
            var: positive(1)?,
        },
        "skew_normal" => ScalarFamily::SkewNormal {
            xi: get(0),
            omega: positive(1)?,
            alpha: get(2),
        },
        "bimodal_gm" | "impulsive_gm" => {
            let weights = vec![positive(0)?, positive(1)?];
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invalid(label, "alpha1", "mixture weights must sum to 1"));
            }
            ScalarFamily::Mixture {
                weights,
                means: vec![get(2), get(3)],
                vars: vec![positive(4)?, positive(5)?],
            }
        }
        "gamma" => ScalarFamily::Gamma {
            shape: positive(0)?,
            scale: positive(1)?,
        },
        "cauchy" => ScalarFamily::Cauchy {
            x0: get(0),
            gamma: positive(1)?,
        },
        "beta_prime" => ScalarFamily::BetaPrime {
            alpha: positive(0)?,
            beta: positive(1)?,
        },
        "exponential" => ScalarFamily::Exponential { rate: positive(0)? },
        "levy" => ScalarFamily::Levy {
            mu: get(0),
            c: positive(1)?,
        },
        _ => unreachable!(),
    };
    Ok(NoiseModel {
        name: static_name,
        params: values,
        coords: vec![Coordinate::new(family)?],
    })
}

fn model_label(name: &str) -> &'static str {
    match name {
        "gaussian" => "Gaussian",
        "skew_normal" => "skew normal",
        "bimodal_gm" => "bimodal mixture",
        "gamma" => "gamma",
        "impulsive_gm" => "impulsive mixture",
        "cauchy" => "Cauchy",
        "beta_prime" => "beta prime",
        "exponential" => "exponential",
        "levy" => "Lévy",
        _ => "noise",
    }
}

fn invalid(model: &'static str, param: &str, reason: &str) -> NoiseError {
    NoiseError::InvalidParameter {
        model,
        param: param.to_string(),
        reason: reason.to_string(),
    }
}

impl NoiseModel {
    /// Independent product of scalar laws, one per measurement coordinate.
    pub fn product(models: Vec<NoiseModel>) -> Result<Self, NoiseError> {
        if models.is_empty() {
            return Err(NoiseError::Dimension { expected: 1, got: 0 });
        }
        let name = if models.iter().all(|m| m.name == models[0].name) {
            models[0].name
        } else {
            "product"
        };
        let params = models[0].params.clone();
        let coords = models.into_iter().flat_map(|m| m.coords).collect();
        Ok(Self { name, params, coords })
    }

    /// Independent Gaussian coordinates `N(meanᵢ, varᵢ)`.
    pub fn diagonal_gaussian(means: &[f64], vars: &[f64]) -> Result<Self, NoiseError> {
        let parts = means
            .iter()
            .zip(vars)
            .map(|(m, v)| {
                let params = [("mu".to_string(), *m), ("var".to_string(), *v)].into_iter().collect();
                make_distribution("gaussian", &params)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::product(parts)
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    /// `(symbol, value)` pairs of the first coordinate's parameters.
    pub fn params(&self) -> &[(&'static str, f64)] {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn family(&self, i: usize) -> &ScalarFamily {
        &self.coords[i].family
    }

    pub fn support(&self, i: usize) -> Support {
        self.coords[i].support
    }

    pub fn is_gaussian(&self) -> bool {
        self.coords
            .iter()
            .all(|c| matches!(c.family, ScalarFamily::Gaussian { .. }))
    }

    fn check_dim(&self, v: &Vector) -> Result<(), NoiseError> {
        if v.len() == self.dim() {
            Ok(())
        } else {
            Err(NoiseError::Dimension {
                expected: self.dim(),
                got: v.len(),
            })
        }
    }

    fn check_support(&self, v: &Vector) -> Result<(), NoiseError> {
        self.check_dim(v)?;
        for (c, x) in self.coords.iter().zip(v.iter()) {
            if !c.support.contains_interior(*x) {
                return Err(NoiseError::OutsideSupport {
                    model: model_label(self.name),
                    value: *x,
                });
            }
        }
        Ok(())
    }

    /// Negative log-density `r(v)`.
    pub fn r(&self, v: &Vector) -> Result<f64, NoiseError> {
        self.check_support(v)?;
        Ok(self
            .coords
            .iter()
            .zip(v.iter())
            .map(|(c, x)| c.family.neg_log_pdf(*x))
            .sum())
    }

    /// Analytic gradient `∇r(v)`.
    pub fn grad_r(&self, v: &Vector) -> Result<Vector, NoiseError> {
        self.check_support(v)?;
        Ok(Vector::from_iterator(
            self.dim(),
            self.coords
                .iter()
                .zip(v.iter())
                .map(|(c, x)| c.family.grad_neg_log_pdf(*x)),
        ))
    }

    /// `∂r/∂vᵢ` for one coordinate.
    pub fn grad_r_coord(&self, i: usize, x: f64) -> Result<f64, NoiseError> {
        let c = &self.coords[i];
        if !c.support.contains_interior(x) {
            return Err(NoiseError::OutsideSupport {
                model: model_label(self.name),
                value: x,
            });
        }
        Ok(c.family.grad_neg_log_pdf(x))
    }

    /// `ln p(v)`, `−∞` outside the support.
    pub fn log_pdf(&self, v: &[f64]) -> f64 {
        debug_assert_eq!(v.len(), self.dim());
        let mut total = 0.0;
        for (c, x) in self.coords.iter().zip(v) {
            if !c.support.contains_interior(*x) {
                return f64::NEG_INFINITY;
            }
            total -= c.family.neg_log_pdf(*x);
        }
        total
    }

    /// Scalar `ln p` for coordinate `i`, `−∞` outside the support.
    pub fn log_pdf_coord(&self, i: usize, x: f64) -> f64 {
        let c = &self.coords[i];
        if c.support.contains_interior(x) {
            -c.family.neg_log_pdf(x)
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Local modes of coordinate `i`, ascending.
    pub fn modes_coord(&self, i: usize) -> &[f64] {
        &self.coords[i].modes
    }

    /// All local modes. For product models this is the Cartesian product of
    /// per-coordinate modes.
    pub fn mode(&self) -> Vec<Vector> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for c in &self.coords {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    c.modes.iter().map(move |m| {
                        let mut p = prefix.clone();
                        p.push(*m);
                        p
                    })
                })
                .collect();
        }
        out.into_iter().map(Vector::from_vec).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        Vector::from_iterator(self.dim(), self.coords.iter().map(|c| c.family.sample(rng)))
    }

    /// Mean and (diagonal) covariance where every coordinate has both; otherwise `None`.
    pub fn moment_match(&self) -> Option<GaussianSpec> {
        let moments: Option<Vec<(f64, f64)>> = self.coords.iter().map(|c| c.family.moments()).collect();
        let moments = moments?;
        let mean = Vector::from_iterator(self.dim(), moments.iter().map(|m| m.0));
        let vars: Vec<f64> = moments.iter().map(|m| m.1).collect();
        let cov = SymPdMatrix::from_diagonal(&vars).ok()?;
        Some(GaussianSpec { mean, covariance: cov })
    }

    /// Grid-centering location per coordinate (mean, else median).
    pub fn center(&self, i: usize) -> f64 {
        self.coords[i].family.center()
    }

    /// Standard-deviation-equivalent spread per coordinate.
    pub fn spread(&self, i: usize) -> f64 {
        self.coords[i].family.spread()
    }

    /// One-line description, e.g. `levy  μ=1 c=3`.
    pub fn describe(&self) -> String {
        let params: Vec<String> = self.params.iter().map(|(s, v)| format!("{s}={v}")).collect();
        format!("{}  {}", self.name, params.join(" "))
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

/// Bracketed search for the local minimizers of `r`: scan the bracket for
/// `−` to `+` sign changes of `r′`, then bisect each to 1e-10.
fn find_modes(family: &ScalarFamily, support: &Support) -> Result<Vec<f64>, NoiseError> {
    const SCAN: usize = 4000;
    const TOL: f64 = 1e-10;
    let (mut lo, mut hi) = family.mode_search_bracket();
    lo = lo.max(support.lower);
    hi = hi.min(support.upper);
    let step = (hi - lo) / SCAN as f64;
    let grad = |x: f64| family.grad_neg_log_pdf(x);

    let mut modes = Vec::new();
    let mut a = lo + 0.5 * step;
    let mut ga = grad(a);
    for k in 1..SCAN {
        let b = lo + (k as f64 + 0.5) * step;
        let gb = grad(b);
        if ga < 0.0 && gb >= 0.0 {
            let (mut l, mut r) = (a, b);
            if gb == 0.0 {
                l = b;
                r = b;
            }
            while r - l > TOL {
                let mid = 0.5 * (l + r);
                if grad(mid) < 0.0 {
                    l = mid;
                } else {
                    r = mid;
                }
            }
            modes.push(0.5 * (l + r));
        }
        a = b;
        ga = gb;
    }
    if modes.is_empty() {
        return Err(NoiseError::ModeSearch(model_label_family(family)));
    }
    Ok(modes)
}

fn model_label_family(family: &ScalarFamily) -> &'static str {
    match family {
        ScalarFamily::SkewNormal { .. } => "skew normal",
        ScalarFamily::Mixture { .. } => "Gaussian mixture",
        _ => "noise",
    }
}

pub fn r(model: &NoiseModel, v: &Vector) -> Result<f64, NoiseError> {
    model.r(v)
}

pub fn grad_r(model: &NoiseModel, v: &Vector) -> Result<Vector, NoiseError> {
    model.grad_r(v)
}

pub fn mode(model: &NoiseModel) -> Vec<Vector> {
    model.mode()
}

pub fn sample<R: Rng + ?Sized>(model: &NoiseModel, rng: &mut R) -> Vector {
    model.sample(rng)
}

pub fn moment_match(model: &NoiseModel) -> Option<GaussianSpec> {
    model.moment_match()
}

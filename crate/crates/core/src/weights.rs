//! Edge-weight laws `P(x) = p0(|x|) exp(beta_N x)` and their expectations.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::{item_rng, streams};

/// Parametric or empirical edge-weight distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightDistribution {
    /// `N(J0, nu^2)`.
    Gaussian { j0: f64, nu: f64 },
    /// `+J0` with probability `p`, `-J0` otherwise.
    PlusMinusJ { p: f64, j0: f64 },
    /// Observed nonzero weights; expectations are sample means.
    Empirical { samples: Vec<f64> },
}

impl WeightDistribution {
    pub fn gaussian(j0: f64, nu: f64) -> Result<Self> {
        let d = Self::Gaussian { j0, nu };
        d.validate()?;
        Ok(d)
    }

    pub fn plus_minus_j(p: f64, j0: f64) -> Result<Self> {
        let d = Self::PlusMinusJ { p, j0 };
        d.validate()?;
        Ok(d)
    }

    pub fn empirical(samples: Vec<f64>) -> Result<Self> {
        let d = Self::Empirical { samples };
        d.validate()?;
        Ok(d)
    }

    /// The empirical law of a graph's edge weights.
    pub fn from_graph(g: &WeightedGraph) -> Result<Self> {
        Self::empirical(g.weights())
    }

    /// Gaussian law with mean chosen so that its Nishimori temperature is `beta_n`.
    pub fn gaussian_at(beta_n: f64, nu: f64) -> Result<Self> {
        Self::gaussian(beta_n * nu * nu, nu)
    }

    /// ±J law with `p` chosen so that its Nishimori temperature is `beta_n`.
    pub fn plus_minus_j_at(beta_n: f64, j0: f64) -> Result<Self> {
        Self::plus_minus_j(pmj_probability(beta_n, j0), j0)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { j0, nu } => {
                if !(nu.is_finite() && *nu > 0.0) || !j0.is_finite() {
                    return Err(Error::InvalidParameter(format!("gaussian needs nu > 0, got j0={j0}, nu={nu}")));
                }
            }
            Self::PlusMinusJ { p, j0 } => {
                if !(0.5..=1.0).contains(p) || !(j0.is_finite() && *j0 > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "±J needs p in [1/2,1] and J0 > 0, got p={p}, j0={j0}"
                    )));
                }
            }
            Self::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(Error::InvalidParameter("empirical distribution needs samples".into()));
                }
            }
        }
        Ok(())
    }

    /// Expectation of `f` under the law. Gaussian expectations use
    /// composite Gauss–Legendre quadrature.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self {
            Self::Gaussian { j0, nu } => gaussian_expectation(*j0, *nu, f),
            Self::PlusMinusJ { p, j0 } => p * f(*j0) + (1.0 - p) * f(-*j0),
            Self::Empirical { samples } => samples.iter().map(|&x| f(x)).sum::<f64>() / samples.len() as f64,
        }
    }

    /// Draws one weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match self {
            Self::Gaussian { j0, nu } => {
                let normal = Normal::new(*j0, *nu).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                Ok(normal.sample(rng))
            }
            Self::PlusMinusJ { p, j0 } => Ok(if rng.random::<f64>() < *p { *j0 } else { -*j0 }),
            Self::Empirical { .. } => Err(Error::UnsupportedDistribution("empirical laws cannot be sampled".into())),
        }
    }
}

/// `p = e^{beta J0} / (2 cosh(beta J0))`, the +J0 probability of a ±J law.
pub fn pmj_probability(beta_n: f64, j0: f64) -> f64 {
    // logistic form avoids overflow of cosh
    1.0 / (1.0 + (-2.0 * beta_n * j0).exp())
}

/// Closed-form Nishimori temperature.
pub fn analytic_beta_n(dist: &WeightDistribution) -> Result<f64> {
    dist.validate()?;
    match dist {
        WeightDistribution::Gaussian { j0, nu } => Ok(j0 / (nu * nu)),
        WeightDistribution::PlusMinusJ { p, j0 } => {
            if *p >= 1.0 {
                Ok(f64::INFINITY)
            } else {
                Ok((p / (1.0 - p)).ln() / (2.0 * j0))
            }
        }
        WeightDistribution::Empirical { .. } => Err(Error::UnsupportedDistribution(
            "no closed form for an empirical law; estimate it from the graph instead".into(),
        )),
    }
}

/// Solves `c * E[tanh^2(beta J)] = 1` under the law (model expectation).
pub fn analytic_beta_sg(dist: &WeightDistribution, c: f64) -> Result<f64> {
    if c <= 1.0 {
        return Err(Error::UndetectableDegree { c });
    }
    let f = |b: f64| c * dist.expect(|x| (b * x).tanh().powi(2)) - 1.0;
    increasing_root(f, "spin-glass")
}

/// Solves `c * E[tanh(beta J)] = 1` under the law, smallest positive root.
pub fn analytic_beta_f(dist: &WeightDistribution, c: f64) -> Result<f64> {
    let f = |b: f64| c * dist.expect(|x| (b * x).tanh()) - 1.0;
    first_crossing(f).ok_or(Error::NoFerromagneticTransition)
}

/// Root of a function that is negative at 0 and eventually positive.
pub(crate) fn increasing_root(f: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
    let mut hi = 1e-3;
    let mut guard = 0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::Bracket(format!("{what} equation never crosses zero")));
        }
    }
    Ok(bisect(&f, 0.0, hi, 1e-13))
}

/// Smallest positive crossing of `f` from negative to positive, scanning a
/// geometric grid and refining by bisection.
pub(crate) fn first_crossing(f: impl Fn(f64) -> f64) -> Option<f64> {
    let mut lo = 0.0;
    let mut hi = 1e-4;
    for _ in 0..400 {
        if f(hi) > 0.0 {
            return Some(bisect(&f, lo, hi, 1e-13));
        }
        lo = hi;
        hi *= 1.1;
        if hi > 1e8 {
            break;
        }
    }
    None
}

/// Bisection assuming `f(lo) <= 0 < f(hi)`; stops at relative width `rtol`.
pub(crate) fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rtol: f64) -> f64 {
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= rtol * hi.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    0.5 * (lo + hi)
}

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite 8-point Gauss–Legendre rule on `[a, b]` with `panels` panels.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        let mut s = 0.0;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// `E[f(X)]` for `X ~ N(mean, sd^2)`, integrated over `mean ± 14 sd` with a
/// breakpoint at 0 (where `tanh(beta x)` bends hardest).
pub fn gaussian_expectation(mean: f64, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
    let norm = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let g = |x: f64| {
        let z = (x - mean) / sd;
        f(x) * norm * (-0.5 * z * z).exp()
    };
    let a = mean - 14.0 * sd;
    let b = mean + 14.0 * sd;
    if a < 0.0 && b > 0.0 {
        integrate(&g, a, 0.0, 400) + integrate(&g, 0.0, b, 400)
    } else {
        integrate(&g, a, b, 800)
    }
}

/// Draws i.i.d. weights for every edge of `topology` from a law with
/// Nishimori temperature `beta_n`.
///
/// The Gaussian law keeps `nu` and sets `J0 = beta_n nu^2`; the ±J law keeps
/// `J0` and sets `p = e^{beta_n J0} / (2 cosh(beta_n J0))`. The parameters
/// stored in `dist` other than the kept one are ignored. Edge `e` (in
/// lexicographic order) reads its draw from item `e` of the weights stream.
pub fn sample_weights(
    topology: &WeightedGraph,
    dist: &WeightDistribution,
    beta_n: f64,
    seed: u64,
) -> Result<WeightedGraph> {
    if !(beta_n > 0.0) {
        return Err(Error::InvalidParameter(format!("beta_N must be > 0, got {beta_n}")));
    }
    let law = match dist {
        WeightDistribution::Gaussian { nu, .. } => WeightDistribution::gaussian_at(beta_n, *nu)?,
        WeightDistribution::PlusMinusJ { j0, .. } => WeightDistribution::plus_minus_j_at(beta_n, *j0)?,
        WeightDistribution::Empirical { .. } => {
            return Err(Error::UnsupportedDistribution("empirical laws cannot generate weights".into()))
        }
    };
    sample_weights_from(topology, &law, seed)
}

/// Draws i.i.d. weights from `law` exactly as parametrized.
pub fn sample_weights_from(topology: &WeightedGraph, law: &WeightDistribution, seed: u64) -> Result<WeightedGraph> {
    law.validate()?;
    let mut w = Vec::with_capacity(topology.num_edges());
    for e in 0..topology.num_edges() {
        let mut rng = item_rng(seed, streams::WEIGHTS, e as u64);
        let mut x = law.sample(&mut rng)?;
        // A Gaussian draw of exactly 0 has probability zero but would break
        // the no-explicit-zeros invariant; redraw from the same item stream.
        while x == 0.0 {
            x = law.sample(&mut rng)?;
        }
        w.push(x);
    }
    topology.with_weights(&w)
}

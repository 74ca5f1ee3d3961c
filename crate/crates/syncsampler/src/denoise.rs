//! Denoisers: the trait samplers consume, plus the analytic Gaussian-mixture
//! denoiser whose posterior mean is available in closed form.
//!
//! A denoiser returns the pair `(x₀|ₜ, ε̂)` jointly: converting one into the
//! other at the extremes of the schedule (ᾱ→1 or ᾱ→0) invites catastrophic
//! cancellation, so both are produced from the same internal quantities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint clean-sample / noise prediction at one timestep.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub x0: Vec<f64>,
    pub eps: Vec<f64>,
}

/// Anything that can predict `(x₀|ₜ, ε̂)` from a noisy instance-space sample.
///
/// `Sync` so per-view predictions may run concurrently against a shared
/// denoiser.
pub trait Denoiser: Sync {
    /// Instance-space dimensionality.
    fn dim(&self) -> usize;

    /// Predict at timestep `t` with cumulative schedule value `ᾱ_t`.
    /// Callers guarantee `t ≥ 1` (so `ᾱ_t < 1`).
    fn predict(&self, x: &[f64], t: u32, alpha_bar: f64) -> Result<Prediction>;
}

/// One mixture component: isotropic Gaussian `N(mean, var·I)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub var: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// JSON-loadable mixture definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmSpec {
    pub d: usize,
    pub components: Vec<Component>,
}

/// Isotropic Gaussian mixture with an exact posterior denoiser.
#[derive(Debug, Clone)]
pub struct Gmm {
    d: usize,
    log_w: Vec<f64>,
    means: Vec<Vec<f64>>,
    vars: Vec<f64>,
    labels: Vec<Option<String>>,
}

impl Gmm {
    /// Build and validate a mixture. Weights are normalized to sum to 1.
    pub fn new(spec: GmmSpec) -> Result<Gmm> {
        if spec.d == 0 {
            return Err(Error::config("mixture dimension must be >= 1"));
        }
        if spec.components.is_empty() {
            return Err(Error::config("mixture needs at least one component"));
        }
        let total: f64 = spec.components.iter().map(|c| c.weight).sum();
        if !(total > 0.0) {
            return Err(Error::config("component weights must be positive"));
        }
        let mut log_w = Vec::new();
        let mut means = Vec::new();
        let mut vars = Vec::new();
        let mut labels = Vec::new();
        for c in &spec.components {
            if !(c.weight > 0.0) {
                return Err(Error::config("component weights must be positive"));
            }
            if !(c.var > 0.0) || !c.var.is_finite() {
                return Err(Error::config("component variances must be positive"));
            }
            if c.mean.len() != spec.d {
                return Err(Error::config(format!(
                    "component mean has dimension {} but mixture is {}-dimensional",
                    c.mean.len(),
                    spec.d
                )));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::config("component means must be finite"));
            }
            log_w.push((c.weight / total).ln());
            means.push(c.mean.clone());
            vars.push(c.var);
            labels.push(c.label.clone());
        }
        Ok(Gmm { d: spec.d, log_w, means, vars, labels })
    }

    /// Single near-point-mass component at `m` (variance 1e-30, effectively a
    /// Dirac for every t ≥ 1 of any schedule).
    pub fn point_mass(m: &[f64]) -> Gmm {
        Gmm::new(GmmSpec {
            d: m.len(),
            components: vec![Component { weight: 1.0, mean: m.to_vec(), var: 1e-30, label: None }],
        })
        .expect("point mass is always valid")
    }

    /// Two equal-weight components at `±level·1⃗` in `d` dimensions.
    pub fn bistable(d: usize, level: f64, var: f64) -> Gmm {
        Gmm::new(GmmSpec {
            d,
            components: vec![
                Component { weight: 0.5, mean: vec![level; d], var, label: Some("pos".into()) },
                Component { weight: 0.5, mean: vec![-level; d], var, label: Some("neg".into()) },
            ],
        })
        .expect("bistable mixture is always valid")
    }

    /// Parse a mixture definition from JSON text.
    pub fn from_json(text: &str) -> Result<Gmm> {
        let spec: GmmSpec = serde_json::from_str(text)?;
        Gmm::new(spec)
    }

    pub fn spec(&self) -> GmmSpec {
        GmmSpec {
            d: self.d,
            components: (0..self.log_w.len())
                .map(|i| Component {
                    weight: self.log_w[i].exp(),
                    mean: self.means[i].clone(),
                    var: self.vars[i],
                    label: self.labels[i].clone(),
                })
                .collect(),
        }
    }

    /// Conditioned mixture: keep only components carrying `label`. Models a
    /// "prompt" as a class filter. Errors if no component matches.
    pub fn conditioned(&self, label: &str) -> Result<Gmm> {
        let spec = self.spec();
        let keep: Vec<Component> = spec
            .components
            .into_iter()
            .filter(|c| c.label.as_deref() == Some(label))
            .collect();
        if keep.is_empty() {
            return Err(Error::config(format!("condition '{label}' selects no component")));
        }
        Gmm::new(GmmSpec { d: self.d, components: keep })
    }

    /// Marginal mixture over a coordinate subset (isotropic components
    /// marginalize coordinate-wise).
    pub fn marginal(&self, coords: &[usize]) -> Result<Gmm> {
        if coords.is_empty() {
            return Err(Error::runtime("marginal over empty coordinate set"));
        }
        if coords.iter().any(|&c| c >= self.d) {
            return Err(Error::runtime("marginal coordinate out of range"));
        }
        let spec = self.spec();
        let components = spec
            .components
            .into_iter()
            .map(|c| Component {
                mean: coords.iter().map(|&i| c.mean[i]).collect(),
                ..c
            })
            .collect();
        Gmm::new(GmmSpec { d: coords.len(), components })
    }

    pub fn n_components(&self) -> usize {
        self.log_w.len()
    }

    /// Exact posterior mean E[x₀|x_t] and the matching ε̂, via log-sum-exp
    /// responsibilities over per-component marginals
    /// `N(√ᾱ·mᵢ, (ᾱ·sᵢ² + 1−ᾱ)·I)`.
    pub fn posterior(&self, x: &[f64], alpha_bar: f64) -> Prediction {
        debug_assert!(alpha_bar < 1.0, "posterior undefined at alpha_bar = 1");
        let sq = alpha_bar.sqrt();
        let k = self.log_w.len();
        let mut logr = vec![0.0; k];
        for i in 0..k {
            let v = alpha_bar * self.vars[i] + (1.0 - alpha_bar);
            let mut ss = 0.0;
            for (xa, ma) in x.iter().zip(&self.means[i]) {
                let dfa = xa - sq * ma;
                ss += dfa * dfa;
            }
            logr[i] = self.log_w[i]
                - 0.5 * self.d as f64 * (2.0 * std::f64::consts::PI * v).ln()
                - 0.5 * ss / v;
        }
        let mx = logr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut rsum = 0.0;
        for l in logr.iter_mut() {
            *l = (*l - mx).exp();
            rsum += *l;
        }
        let mut x0 = vec![0.0; self.d];
        for i in 0..k {
            let r = logr[i] / rsum;
            let v = alpha_bar * self.vars[i] + (1.0 - alpha_bar);
            let gain = sq * self.vars[i] / v;
            for a in 0..self.d {
                x0[a] += r * (self.means[i][a] + gain * (x[a] - sq * self.means[i][a]));
            }
        }
        let b = (1.0 - alpha_bar).sqrt();
        let eps = x.iter().zip(&x0).map(|(&xa, &x0a)| (xa - sq * x0a) / b).collect();
        Prediction { x0, eps }
    }

    /// Negative log-likelihood of one clean sample under the mixture.
    pub fn nll(&self, x: &[f64]) -> f64 {
        let k = self.log_w.len();
        let mut logp = vec![0.0; k];
        for i in 0..k {
            let mut ss = 0.0;
            for (xa, ma) in x.iter().zip(&self.means[i]) {
                let dfa = xa - ma;
                ss += dfa * dfa;
            }
            logp[i] = self.log_w[i]
                - 0.5 * self.d as f64 * (2.0 * std::f64::consts::PI * self.vars[i]).ln()
                - 0.5 * ss / self.vars[i];
        }
        let mx = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = mx + logp.iter().map(|&l| (l - mx).exp()).sum::<f64>().ln();
        -lse
    }

    /// Mean NLL over a set of samples.
    pub fn mean_nll<'a, I: IntoIterator<Item = &'a [f64]>>(&self, xs: I) -> f64 {
        let mut total = 0.0;
        let mut n = 0usize;
        for x in xs {
            total += self.nll(x);
            n += 1;
        }
        total / n as f64
    }
}

impl Denoiser for Gmm {
    fn dim(&self) -> usize {
        self.d
    }

    fn predict(&self, x: &[f64], _t: u32, alpha_bar: f64) -> Result<Prediction> {
        if x.len() != self.d {
            return Err(Error::runtime(format!(
                "denoiser input has dimension {} but mixture is {}-dimensional",
                x.len(),
                self.d
            )));
        }
        Ok(self.posterior(x, alpha_bar))
    }
}

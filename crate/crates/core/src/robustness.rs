//! Monte-Carlo success probability of a forceful operation under Gaussian
//! parameter perturbation, and the `-ln p` action cost.
//!
//! Sample `i` always draws from its own ChaCha stream `i` of the seed, so an
//! estimate does not depend on how samples are split across threads.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spatial::{Transform, Wrench};
use crate::stability::{chain_stable, ForcefulKinematicChain, JointModel, StabilityError};

/// Per-action penalty added to the summed robustness costs of a plan.
pub const LENGTH_PENALTY: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobustnessError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("invalid perturbation: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

/// Standard deviations of the perturbation. Relative entries multiply the
/// nominal value by `1 + σ ε`; the contact-frame entries are absolute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerturbationSpec {
    pub friction_mu: f64,
    pub applied_wrench: f64,
    /// Metres, per axis.
    pub contact_translation: f64,
    /// Radians, per rotation-vector axis.
    pub contact_rotation: f64,
    pub patch_size: f64,
    pub sample_count: usize,
    pub rng_seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            friction_mu: 0.1,
            applied_wrench: 0.05,
            contact_translation: 0.002,
            contact_rotation: 0.017,
            patch_size: 0.1,
            sample_count: 100,
            rng_seed: 0,
        }
    }
}

impl PerturbationSpec {
    /// No perturbation at all; every sample equals the nominal case.
    pub fn nominal(sample_count: usize) -> Self {
        Self {
            friction_mu: 0.0,
            applied_wrench: 0.0,
            contact_translation: 0.0,
            contact_rotation: 0.0,
            patch_size: 0.0,
            sample_count,
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), RobustnessError> {
        let stds = [
            ("friction_mu", self.friction_mu),
            ("applied_wrench", self.applied_wrench),
            ("contact_translation", self.contact_translation),
            ("contact_rotation", self.contact_rotation),
            ("patch_size", self.patch_size),
        ];
        for (name, v) in stds {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(RobustnessError::InvalidSpec(format!(
                    "{name} must be a finite non-negative std, got {v}"
                )));
            }
        }
        if self.sample_count == 0 {
            return Err(RobustnessError::InvalidSpec(
                "sample_count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.sample_count = n;
        self
    }
}

/// The generator used for sample `index`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn relative(rng: &mut impl Rng, nominal: f64, std: f64) -> f64 {
    if std == 0.0 {
        nominal
    } else {
        nominal * (1.0 + std * normal(rng))
    }
}

/// Fraction of `spec.sample_count` seeded trials for which `trial` returns
/// true. Trial `i` receives the generator of stream `i`.
pub fn estimate<F>(spec: &PerturbationSpec, trial: F) -> f64
where
    F: Fn(&mut ChaCha8Rng) -> bool + Sync,
{
    let n = spec.sample_count;
    let run = |i: usize| trial(&mut sample_rng(spec.rng_seed, i as u64)) as usize;
    #[cfg(feature = "parallel")]
    let hits: usize = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(run).sum()
    };
    #[cfg(not(feature = "parallel"))]
    let hits: usize = (0..n).map(run).sum();
    hits as f64 / n as f64
}

/// One perturbed copy of `chain` and `w` drawn from `rng`.
pub fn perturb(
    chain: &ForcefulKinematicChain,
    w: &Wrench,
    spec: &PerturbationSpec,
    rng: &mut impl Rng,
) -> (ForcefulKinematicChain, Wrench) {
    let mut c = w.to_array();
    for v in &mut c {
        *v = relative(rng, *v, spec.applied_wrench);
    }
    let w = Wrench::from_array(c, w.frame.clone());

    let mut chain = chain.clone();
    for link in &mut chain.links {
        match &mut link.joint.model {
            JointModel::CircularPatch(j) => {
                j.mu = relative(rng, j.mu, spec.friction_mu).max(0.0);
                j.radius = relative(rng, j.radius, spec.patch_size).max(0.0);
            }
            JointModel::PolygonPatch(j) => {
                j.mu = relative(rng, j.mu, spec.friction_mu).max(0.0);
                let s = relative(rng, 1.0, spec.patch_size).max(0.0);
                for p in &mut j.corners {
                    *p *= s;
                }
            }
            JointModel::Arm(_) | JointModel::Rigid => continue,
        }
        if spec.contact_translation > 0.0 || spec.contact_rotation > 0.0 {
            let mut draw = |std: f64| {
                Vector3::new(normal(rng), normal(rng), normal(rng)) * std
            };
            let dr = draw(spec.contact_rotation);
            let dp = draw(spec.contact_translation);
            let delta = Transform::new(Transform::from_rotation_vector(&dr).rotation, dp);
            link.transform = delta.compose(&link.transform);
        }
    }
    (chain, w)
}

/// Estimated probability that `chain` stays stable under `w` when its
/// parameters are perturbed according to `spec`.
pub fn success_probability(
    chain: &ForcefulKinematicChain,
    w: &Wrench,
    spec: &PerturbationSpec,
) -> Result<f64, RobustnessError> {
    spec.validate()?;
    // surfaces frame errors once instead of counting them as failures
    chain_stable(chain, w)?;
    Ok(estimate(spec, |rng| {
        let (c, w) = perturb(chain, w, spec, rng);
        chain_stable(&c, &w).map(|v| v.stable).unwrap_or(false)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCost {
    pub success_probability: f64,
    /// `-ln p`; `+inf` when `p = 0`.
    pub cost: f64,
}

pub fn action_cost(p: f64) -> Result<ActionCost, RobustnessError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(RobustnessError::InvalidProbability(p));
    }
    let cost = if p == 0.0 { f64::INFINITY } else { -p.ln() };
    // -ln(1) is -0.0
    Ok(ActionCost {
        success_probability: p,
        cost: cost.max(0.0),
    })
}

/// Sum of action costs plus the per-action length penalty.
pub fn plan_cost(action_costs: &[f64]) -> f64 {
    action_costs.iter().sum::<f64>() + LENGTH_PENALTY * action_costs.len() as f64
}

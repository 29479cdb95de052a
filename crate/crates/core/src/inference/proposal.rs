use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{Param, ParamVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateScheme {
    /// One exchange move per free parameter per iteration.
    #[default]
    PerParameter,
    /// A single exchange move over all free parameters.
    Joint,
}

/// Gaussian random-walk steps. Parameters without a step are held fixed.
///
/// `ν` moves are wrapped back into `(-π, π]`, which keeps the proposal
/// symmetric on the circle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProposalSpec {
    steps: BTreeMap<Param, f64>,
    pub scheme: UpdateScheme,
}

impl ProposalSpec {
    pub fn new(scheme: UpdateScheme) -> Self {
        ProposalSpec {
            steps: BTreeMap::new(),
            scheme,
        }
    }

    pub fn with_step(mut self, p: Param, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::Config(format!("proposal step for {p} must be positive, got {step}")));
        }
        self.steps.insert(p, step);
        Ok(self)
    }

    pub fn step(&self, p: Param) -> Option<f64> {
        self.steps.get(&p).copied()
    }

    /// Free parameters, restricted to those `w` actually has.
    pub fn free_params(&self, w: &ParamVector) -> Vec<Param> {
        w.params().into_iter().filter(|p| self.steps.contains_key(p)).collect()
    }

    /// Groups of parameters updated together, in update order.
    pub fn blocks(&self, w: &ParamVector) -> Vec<Vec<Param>> {
        let free = self.free_params(w);
        match self.scheme {
            UpdateScheme::PerParameter => free.into_iter().map(|p| vec![p]).collect(),
            UpdateScheme::Joint if free.is_empty() => Vec::new(),
            UpdateScheme::Joint => vec![free],
        }
    }

    pub fn propose<R: Rng + ?Sized>(&self, w: &ParamVector, block: &[Param], rng: &mut R) -> ParamVector {
        let mut out = *w;
        for &p in block {
            if let Some(step) = self.step(p) {
                let z: f64 = rng.sample(StandardNormal);
                out.set(p, w.get(p) + step * z);
            }
        }
        out
    }
}

pub fn block_name(block: &[Param]) -> String {
    block.iter().map(|p| p.name()).collect::<Vec<_>>().join("+")
}

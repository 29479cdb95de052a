//! Full-space model evaluation and fictitious-data sampling for exchange moves.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::gibbs::{make_augmentation, sweep_with_factor, AugmentedState, Augmentation};
use crate::kernels::{build_gram, InputLocation};
use crate::model::{build_precision, energy_from_matrix, ParamVector, PrecisionModel};

/// Input locations of one transductive problem: the `m` prediction locations
/// first, then the `n` training locations.
#[derive(Debug, Clone)]
pub struct Design {
    locations: Vec<InputLocation>,
    m: usize,
    n: usize,
}

impl Design {
    pub fn new(test: Vec<InputLocation>, train: Vec<InputLocation>) -> Result<Self> {
        let (m, n) = (test.len(), train.len());
        let mut locations = test;
        locations.extend(train);
        if locations.is_empty() {
            return Err(Error::NoPredictionLocations);
        }
        let dim = locations[0].dim();
        if let Some(bad) = locations.iter().find(|l| l.dim() != dim) {
            return Err(Error::DimensionMismatch {
                context: "location coordinates",
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Design { locations, m, n })
    }

    pub fn locations(&self) -> &[InputLocation] {
        &self.locations
    }

    pub fn unobserved(&self) -> usize {
        self.m
    }

    pub fn observed(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }
}

/// `λ_w` and `A_w` with `A_wᵀA_w = λ_w I_d − M_w` over all `d` angles.
#[derive(Debug, Clone)]
pub struct FullAugmentation(Augmentation);

impl FullAugmentation {
    pub fn new(precision: &PrecisionModel, slack: f64) -> Result<Self> {
        make_augmentation(precision.matrix(), slack).map(FullAugmentation)
    }

    pub fn from_augmentation(aug: Augmentation) -> Self {
        FullAugmentation(aug)
    }

    pub fn lambda(&self) -> f64 {
        self.0.lambda()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        self.0.factor()
    }

    pub fn augmentation(&self) -> &Augmentation {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }
}

/// Everything derived from one parameter value `w` on a fixed design.
#[derive(Debug, Clone)]
pub struct ModelAt {
    pub params: ParamVector,
    pub precision: PrecisionModel,
    pub augmentation: FullAugmentation,
    pub jitter: f64,
}

impl ModelAt {
    pub fn build(design: &Design, params: ParamVector, slack: f64) -> Result<Self> {
        params.validate()?;
        let gram = build_gram(&params.kernel, design.locations())?;
        let precision = build_precision(&gram, design.unobserved(), design.observed())?;
        let augmentation = FullAugmentation::new(&precision, slack)?;
        Ok(ModelAt {
            params,
            precision,
            augmentation,
            jitter: gram.jitter,
        })
    }

    /// Assembles a model from an explicit precision matrix.
    pub fn from_precision(params: ParamVector, precision: PrecisionModel, slack: f64) -> Result<Self> {
        let augmentation = FullAugmentation::new(&precision, slack)?;
        Ok(ModelAt {
            params,
            precision,
            augmentation,
            jitter: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.precision.dim()
    }

    pub fn energy(&self, varphi: &[f64]) -> f64 {
        energy_from_matrix(varphi, self.precision.matrix(), self.params.kappa, self.params.nu)
    }

    /// `log f(ϕ|w)`.
    pub fn log_f(&self, varphi: &[f64]) -> f64 {
        -self.energy(varphi)
    }
}

/// Draws a fictitious full-space state from `f(ξ|w)` by running `sweeps`
/// augmented Gibbs sweeps started at `init`.
pub fn sample_fictitious<R: Rng + ?Sized>(
    w: &ParamVector,
    aug: &FullAugmentation,
    sweeps: usize,
    init: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    if sweeps == 0 {
        return Err(Error::Config("fictitious chain needs at least one sweep".into()));
    }
    let d = aug.dim();
    if init.len() != d {
        return Err(Error::DimensionMismatch {
            context: "fictitious chain start",
            expected: d,
            got: init.len(),
        });
    }
    let rho_c = DVector::from_element(d, w.kappa * w.nu.cos());
    let rho_s = DVector::from_element(d, w.kappa * w.nu.sin());
    let mut state = AugmentedState::new(init.to_vec());
    for _ in 0..sweeps {
        sweep_with_factor(&mut state, aug.factor(), &rho_c, &rho_s, rng);
    }
    Ok(state.phi.as_slice().to_vec())
}

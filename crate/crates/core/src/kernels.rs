//! Covariance kernels and Gram-matrix construction.

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Initial jitter, relative to the kernel variance.
pub const JITTER_START: f64 = 1e-8;
/// Largest jitter tried before giving up, relative to the kernel variance.
pub const JITTER_MAX: f64 = 1e-2;
const JITTER_GROWTH: f64 = 10.0;

/// A point in input space.
///
/// For the anisotropic gait kernel the last coordinate is the surface gradient
/// and the leading ones are joint angles.
#[derive(Debug, Clone, PartialEq)]
pub struct InputLocation(Vec<f64>);

impl InputLocation {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("input location has no coordinates".into()));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coordinate {bad}")));
        }
        Ok(InputLocation(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl From<f64> for InputLocation {
    fn from(x: f64) -> Self {
        InputLocation(vec![x])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    Gaussian,
    Exponential,
    /// Gaussian in the leading coordinates times a separate Gaussian factor
    /// in the last coordinate.
    AnisotropicGaussian,
}

impl KernelFamily {
    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Exponential => "exponential",
            KernelFamily::AnisotropicGaussian => "anisotropic_gaussian",
        }
    }
}

/// Kernel hyperparameters that can be differentiated and learned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelParam {
    Variance,
    Lengthscale,
    GradientLengthscale,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub variance: f64,
    pub lengthscale: f64,
    /// Only used by [`KernelFamily::AnisotropicGaussian`].
    pub gradient_lengthscale: Option<f64>,
}

impl KernelSpec {
    pub fn gaussian(variance: f64, lengthscale: f64) -> Self {
        KernelSpec {
            family: KernelFamily::Gaussian,
            variance,
            lengthscale,
            gradient_lengthscale: None,
        }
    }

    pub fn exponential(variance: f64, lengthscale: f64) -> Self {
        KernelSpec {
            family: KernelFamily::Exponential,
            variance,
            lengthscale,
            gradient_lengthscale: None,
        }
    }

    pub fn anisotropic_gaussian(variance: f64, lengthscale: f64, gradient_lengthscale: f64) -> Self {
        KernelSpec {
            family: KernelFamily::AnisotropicGaussian,
            variance,
            lengthscale,
            gradient_lengthscale: Some(gradient_lengthscale),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        positive("kernel variance", self.variance)?;
        positive("lengthscale", self.lengthscale)?;
        match (self.family, self.gradient_lengthscale) {
            (KernelFamily::AnisotropicGaussian, Some(g)) => positive("gradient lengthscale", g),
            (KernelFamily::AnisotropicGaussian, None) => Err(Error::InvalidParameter(
                "anisotropic kernel needs a gradient lengthscale".into(),
            )),
            _ => Ok(()),
        }
    }

    fn check_dims(&self, x: &InputLocation, y: &InputLocation) -> Result<()> {
        if x.dim() != y.dim() {
            return Err(Error::DimensionMismatch {
                context: "kernel inputs",
                expected: x.dim(),
                got: y.dim(),
            });
        }
        if self.family == KernelFamily::AnisotropicGaussian && x.dim() < 2 {
            return Err(Error::DimensionMismatch {
                context: "anisotropic kernel needs joint coordinates plus a gradient",
                expected: 2,
                got: x.dim(),
            });
        }
        Ok(())
    }

    /// Squared distances split into (leading coordinates, gradient coordinate).
    fn split_sq_dist(&self, x: &[f64], y: &[f64]) -> (f64, f64) {
        let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
        match self.family {
            KernelFamily::AnisotropicGaussian => {
                let k = x.len() - 1;
                (sq(&x[..k], &y[..k]), (x[k] - y[k]).powi(2))
            }
            _ => (sq(x, y), 0.0),
        }
    }

    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let (r2, s2) = self.split_sq_dist(x, y);
        let l = self.lengthscale;
        match self.family {
            KernelFamily::Gaussian => self.variance * (-r2 / (2.0 * l * l)).exp(),
            KernelFamily::Exponential => self.variance * (-r2.sqrt() / l).exp(),
            KernelFamily::AnisotropicGaussian => {
                let g = self.gradient_lengthscale.unwrap_or(f64::INFINITY);
                self.variance * (-r2 / (2.0 * l * l) - s2 / (2.0 * g * g)).exp()
            }
        }
    }

    fn derivative_unchecked(&self, x: &[f64], y: &[f64], param: KernelParam) -> f64 {
        let k = self.eval_unchecked(x, y);
        let (r2, s2) = self.split_sq_dist(x, y);
        let l = self.lengthscale;
        match (param, self.family) {
            (KernelParam::Variance, _) => k / self.variance,
            (KernelParam::Lengthscale, KernelFamily::Exponential) => k * r2.sqrt() / (l * l),
            (KernelParam::Lengthscale, _) => k * r2 / (l * l * l),
            (KernelParam::GradientLengthscale, KernelFamily::AnisotropicGaussian) => {
                let g = self.gradient_lengthscale.unwrap_or(f64::INFINITY);
                k * s2 / (g * g * g)
            }
            (KernelParam::GradientLengthscale, _) => 0.0,
        }
    }

    /// The hyperparameters this family actually depends on.
    pub fn params(&self) -> &'static [KernelParam] {
        match self.family {
            KernelFamily::AnisotropicGaussian => &[
                KernelParam::Variance,
                KernelParam::Lengthscale,
                KernelParam::GradientLengthscale,
            ],
            _ => &[KernelParam::Variance, KernelParam::Lengthscale],
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &InputLocation, y: &InputLocation) -> Result<f64> {
    spec.check_dims(x, y)?;
    Ok(spec.eval_unchecked(x.coords(), y.coords()))
}

/// `∂k(x, y)/∂param`.
pub fn kernel_derivative(
    spec: &KernelSpec,
    x: &InputLocation,
    y: &InputLocation,
    param: KernelParam,
) -> Result<f64> {
    spec.check_dims(x, y)?;
    Ok(spec.derivative_unchecked(x.coords(), y.coords(), param))
}

/// A kernel matrix with the diagonal jitter that made it factorizable.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub matrix: DMatrix<f64>,
    pub jitter: f64,
    cholesky: Cholesky<f64, Dyn>,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.cholesky
    }

    /// Factorizes an explicitly given SPD matrix without adding jitter.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                context: "gram matrix must be square",
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let cholesky = Cholesky::new(matrix.clone())
            .ok_or_else(|| Error::Factorization("matrix is not positive definite".into()))?;
        Ok(GramMatrix {
            matrix,
            jitter: 0.0,
            cholesky,
        })
    }
}

fn raw_gram(spec: &KernelSpec, locations: &[InputLocation]) -> Result<DMatrix<f64>> {
    let d = locations.len();
    let mut k = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = kernel_eval(spec, &locations[i], &locations[j])?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Builds `K_ij = k(x_i, x_j)` and adds the smallest jitter from the
/// geometric ladder `1e-8·σ², 1e-7·σ², …, 1e-2·σ²` under which Cholesky succeeds.
pub fn build_gram(spec: &KernelSpec, locations: &[InputLocation]) -> Result<GramMatrix> {
    spec.validate()?;
    if locations.is_empty() {
        return Err(Error::NoPredictionLocations);
    }
    let base = raw_gram(spec, locations)?;
    let mut jitter = JITTER_START * spec.variance;
    let cap = JITTER_MAX * spec.variance * (1.0 + 1e-9);
    while jitter <= cap {
        let mut k = base.clone();
        for i in 0..k.nrows() {
            k[(i, i)] += jitter;
        }
        if let Some(cholesky) = Cholesky::new(k.clone()) {
            return Ok(GramMatrix {
                matrix: k,
                jitter,
                cholesky,
            });
        }
        jitter *= JITTER_GROWTH;
    }
    Err(Error::SingularKernel)
}

/// `∂K/∂param` for a Gram matrix built by [`build_gram`] with the given jitter.
///
/// The jitter scales with the variance, so it contributes to the variance
/// derivative.
pub fn gram_derivative(
    spec: &KernelSpec,
    locations: &[InputLocation],
    jitter: f64,
    param: KernelParam,
) -> Result<DMatrix<f64>> {
    let d = locations.len();
    let mut dk = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = kernel_derivative(spec, &locations[i], &locations[j], param)?;
            dk[(i, j)] = v;
            dk[(j, i)] = v;
        }
    }
    if param == KernelParam::Variance {
        for i in 0..d {
            dk[(i, i)] += jitter / spec.variance;
        }
    }
    Ok(dk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn loc(c: &[f64]) -> InputLocation {
        InputLocation::new(c.to_vec()).unwrap()
    }

    #[test]
    fn zero_distance_gives_variance() {
        let x = loc(&[0.3, -1.2, 4.0, 5.0]);
        for spec in [
            KernelSpec::gaussian(1.7, 0.4),
            KernelSpec::exponential(1.7, 0.4),
            KernelSpec::anisotropic_gaussian(1.7, 0.4, 2.0),
        ] {
            assert!((kernel_eval(&spec, &x, &x).unwrap() - 1.7).abs() < 1e-15);
        }
    }

    #[test]
    fn direct_formula_values() {
        let g = KernelSpec::gaussian(1.0, 1.0);
        let v = kernel_eval(&g, &loc(&[0.0, 0.0]), &loc(&[0.6, 0.8])).unwrap();
        assert!((v - 0.606531).abs() < 1e-6);

        let e = KernelSpec::exponential(2.0, 2.0);
        let v = kernel_eval(&e, &loc(&[0.0]), &loc(&[2.0])).unwrap();
        assert!((v - 0.735759).abs() < 1e-6);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = KernelSpec::gaussian(1.0, 1.0);
        assert!(kernel_eval(&g, &loc(&[0.0]), &loc(&[0.0, 1.0])).is_err());
        let a = KernelSpec::anisotropic_gaussian(1.0, 1.0, 1.0);
        assert!(kernel_eval(&a, &loc(&[0.0]), &loc(&[1.0])).is_err());
    }

    #[test]
    fn single_location_gram() {
        let spec = KernelSpec::gaussian(2.0, 1.0);
        let g = build_gram(&spec, &[loc(&[1.0])]).unwrap();
        assert_eq!(g.dim(), 1);
        assert!((g.matrix[(0, 0)] - (2.0 + g.jitter)).abs() < 1e-15);
        assert!((g.jitter - 2e-8).abs() < 1e-20);
    }

    #[test]
    fn coincident_locations_need_jitter() {
        let spec = KernelSpec::gaussian(1.0, 1.0);
        let raw = raw_gram(&spec, &[loc(&[0.5]), loc(&[0.5])]).unwrap();
        assert!(Cholesky::new(raw).is_none());
        let g = build_gram(&spec, &[loc(&[0.5]), loc(&[0.5])]).unwrap();
        assert!(g.jitter > 0.0);
        assert!((g.matrix[(0, 1)] - 1.0).abs() < 1e-15);
        assert!((g.matrix[(0, 0)] - 1.0 - g.jitter).abs() < 1e-15);
    }

    #[test]
    fn collinear_points() {
        let spec = KernelSpec::gaussian(1.0, 1.0);
        let g = build_gram(&spec, &[loc(&[0.0]), loc(&[1.0]), loc(&[2.0])]).unwrap();
        assert!((g.matrix[(0, 2)] - 0.135335).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_positive_hyperparameters() {
        let spec = KernelSpec::gaussian(-1.0, 1.0);
        assert!(build_gram(&spec, &[loc(&[0.0])]).is_err());
        let spec = KernelSpec {
            family: KernelFamily::AnisotropicGaussian,
            variance: 1.0,
            lengthscale: 1.0,
            gradient_lengthscale: None,
        };
        assert!(build_gram(&spec, &[loc(&[0.0, 1.0])]).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let x = loc(&[0.1, 0.7, -0.4, 5.0]);
        let y = loc(&[0.9, -0.2, 0.3, -5.0]);
        let h = 1e-6;
        for family in [
            KernelFamily::Gaussian,
            KernelFamily::Exponential,
            KernelFamily::AnisotropicGaussian,
        ] {
            let spec = KernelSpec {
                family,
                variance: 1.3,
                lengthscale: 0.8,
                gradient_lengthscale: Some(6.0),
            };
            for &p in spec.params() {
                let bump = |delta: f64| {
                    let mut s = spec;
                    match p {
                        KernelParam::Variance => s.variance += delta,
                        KernelParam::Lengthscale => s.lengthscale += delta,
                        KernelParam::GradientLengthscale => {
                            s.gradient_lengthscale = Some(6.0 + delta)
                        }
                    }
                    kernel_eval(&s, &x, &y).unwrap()
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                let an = kernel_derivative(&spec, &x, &y, p).unwrap();
                assert!((fd - an).abs() < 1e-7, "{family:?} {p:?}: {fd} vs {an}");
            }
        }
    }

    fn locations_strategy(dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(proptest::collection::vec(-3.0f64..3.0, dim), 2..8)
    }

    proptest! {
        #[test]
        fn gram_is_symmetric(pts in locations_strategy(2), l in 0.2f64..3.0) {
            let locs: Vec<_> = pts.iter().map(|p| loc(p)).collect();
            for spec in [KernelSpec::gaussian(1.0, l), KernelSpec::exponential(0.5, l)] {
                if let Ok(g) = build_gram(&spec, &locs) {
                    let diff = (&g.matrix - g.matrix.transpose()).amax();
                    prop_assert!(diff <= 1e-12);
                }
            }
        }

        #[test]
        fn joint_scaling_leaves_kernel_unchanged(pts in locations_strategy(3), l in 0.2f64..3.0, c in 0.1f64..10.0) {
            let locs: Vec<_> = pts.iter().map(|p| loc(p)).collect();
            let scaled: Vec<_> = pts
                .iter()
                .map(|p| loc(&p.iter().map(|v| v * c).collect::<Vec<_>>()))
                .collect();
            for family in [KernelFamily::Gaussian, KernelFamily::Exponential, KernelFamily::AnisotropicGaussian] {
                let spec = KernelSpec { family, variance: 1.0, lengthscale: l, gradient_lengthscale: Some(1.5 * l) };
                let spec_c = KernelSpec { family, variance: 1.0, lengthscale: l * c, gradient_lengthscale: Some(1.5 * l * c) };
                let a = raw_gram(&spec, &locs).unwrap();
                let b = raw_gram(&spec_c, &scaled).unwrap();
                prop_assert!((a - b).amax() < 1e-12);
            }
        }

        #[test]
        fn anisotropic_reduces_to_gaussian_at_equal_gradient(
            pts in proptest::collection::vec(proptest::collection::vec(-30.0f64..30.0, 3), 2..8),
            s in -10.0f64..10.0,
            l in 1.0f64..20.0,
        ) {
            let joint: Vec<_> = pts.iter().map(|p| loc(p)).collect();
            let with_grad: Vec<_> = pts
                .iter()
                .map(|p| { let mut v = p.clone(); v.push(s); loc(&v) })
                .collect();
            let a = raw_gram(&KernelSpec::anisotropic_gaussian(1.2, l, 3.0), &with_grad).unwrap();
            let b = raw_gram(&KernelSpec::gaussian(1.2, l), &joint).unwrap();
            prop_assert!((a - b).amax() < 1e-12);
        }
    }
}

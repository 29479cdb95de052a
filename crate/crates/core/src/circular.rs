//! Angle arithmetic, circular summaries and exact von Mises sampling.
//!
//! All angles are radians in `(-π, π]`. Conversions from degrees or from a
//! percentage of a cycle are only done at I/O boundaries.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};

/// Below this resultant length the mean direction is reported as degenerate.
pub const DEGENERATE_RESULTANT: f64 = 1e-12;

/// Below this concentration the von Mises draw falls through to uniform.
pub const UNIFORM_CONCENTRATION: f64 = 1e-8;

/// Wraps any finite angle into `(-π, π]`.
#[inline]
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// A single angle, always stored normalized to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Angle(f64);

impl Angle {
    pub fn new(radians: f64) -> Self {
        Angle(normalize_angle(radians))
    }

    pub fn from_degrees(deg: f64) -> Self {
        Angle::new(deg.to_radians())
    }

    /// Maps a position `t ∈ (0, 100]` along a periodic cycle onto the circle.
    pub fn from_cycle_percent(t: f64) -> Self {
        Angle::new(TAU * t / 100.0)
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    pub fn rotate(self, by: f64) -> Self {
        Angle::new(self.0 + by)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

/// Mean resultant length, mean direction and circular variance of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularSummary {
    pub resultant_length: f64,
    /// Reported as `0.0` when `degenerate` is set.
    pub mean_direction: f64,
    pub circular_variance: f64,
    /// The resultant vanished, so the mean direction is undefined.
    pub degenerate: bool,
}

pub fn circular_summary(angles: &[f64]) -> Result<CircularSummary> {
    if angles.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = angles.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for &a in angles {
        c += a.cos();
        s += a.sin();
    }
    let (c, s) = (c / n, s / n);
    let r = c.hypot(s).min(1.0);
    let degenerate = r < DEGENERATE_RESULTANT;
    let mean_direction = if degenerate {
        0.0
    } else {
        normalize_angle(s.atan2(c))
    };
    Ok(CircularSummary {
        resultant_length: r,
        mean_direction,
        circular_variance: 1.0 - r,
        degenerate,
    })
}

/// `1 - cos(α - β)`, in `[0, 2]`.
#[inline]
pub fn circular_distance(alpha: f64, beta: f64) -> f64 {
    1.0 - (alpha - beta).cos()
}

/// Uniform draw on `(-π, π]`.
#[inline]
pub fn sample_uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    PI - TAU * rng.random::<f64>()
}

/// Exact draw from the density proportional to `exp(a·cos(φ - mean))`.
pub fn sample_von_mises<R: Rng + ?Sized>(mean: f64, concentration: f64, rng: &mut R) -> Result<f64> {
    if !concentration.is_finite() || concentration < 0.0 || !mean.is_finite() {
        return Err(Error::InvalidConcentration(concentration));
    }
    Ok(draw_von_mises(mean, concentration, rng))
}

/// Best–Fisher rejection sampler with a wrapped-Cauchy envelope.
///
/// The envelope quantities are rewritten in terms of `r - 1`, `1 ± cos` and
/// `1 - w` so that no subtraction of nearly equal numbers happens, which keeps
/// the sampler exact for very large concentrations (the augmented Gibbs
/// conditionals routinely produce `a ~ 1e8`).
pub(crate) fn draw_von_mises<R: Rng + ?Sized>(mean: f64, kappa: f64, rng: &mut R) -> f64 {
    if kappa < UNIFORM_CONCENTRATION {
        return sample_uniform_angle(rng);
    }
    let s = 0.5 / kappa;
    let root = (1.0 + s * s).sqrt();
    let r = s + root;
    let r_minus_one = s + s * s / (root + 1.0);

    let (one_minus_w, sign) = loop {
        let half = 0.5 * PI * rng.random::<f64>();
        let (sh, ch) = half.sin_cos();
        // z = cos(2·half)
        let one_minus_z = 2.0 * sh * sh;
        let one_plus_z = 2.0 * ch * ch;
        let r_plus_z = r_minus_one + one_plus_z;
        // y = κ (r - w)
        let y = r / r_plus_z;
        let v: f64 = rng.random();
        if y * (2.0 - y) - v >= 0.0 || (y / v).ln() + 1.0 - y >= 0.0 {
            let one_minus_w = r_minus_one * one_minus_z / r_plus_z;
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            break (one_minus_w, sign);
        }
    };
    // acos(w) = 2 asin(sqrt((1 - w) / 2))
    let delta = 2.0 * (0.5 * one_minus_w).clamp(0.0, 1.0).sqrt().asin();
    normalize_angle(mean + sign * delta)
}

/// Von Mises distribution usable with `rand`'s `Distribution` machinery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMises {
    mean: f64,
    concentration: f64,
}

impl VonMises {
    pub fn new(mean: f64, concentration: f64) -> Result<Self> {
        if !concentration.is_finite() || concentration < 0.0 || !mean.is_finite() {
            return Err(Error::InvalidConcentration(concentration));
        }
        Ok(VonMises {
            mean: normalize_angle(mean),
            concentration,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }
}

impl rand::distr::Distribution<f64> for VonMises {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        draw_von_mises(self.mean, self.concentration, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn summary_of_identical_angles() {
        let s = circular_summary(&[0.0, 0.0, 0.0]).unwrap();
        assert!((s.resultant_length - 1.0).abs() < 1e-15);
        assert_eq!(s.mean_direction, 0.0);
        assert!(s.circular_variance.abs() < 1e-15);
        assert!(!s.degenerate);

        let s = circular_summary(&[PI / 3.0; 4]).unwrap();
        assert!((s.mean_direction - PI / 3.0).abs() < 1e-12);
        assert!((s.resultant_length - 1.0).abs() < 1e-12);
    }

    #[test]
    fn summary_of_antipodal_pair_is_degenerate() {
        let s = circular_summary(&[0.0, PI]).unwrap();
        assert!(s.resultant_length < 1e-12);
        assert!((s.circular_variance - 1.0).abs() < 1e-12);
        assert!(s.degenerate);
        assert_eq!(s.mean_direction, 0.0);
    }

    #[test]
    fn summary_rejects_empty() {
        assert!(matches!(circular_summary(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(circular_distance(0.0, 0.0), 0.0);
        assert!((circular_distance(0.0, PI) - 2.0).abs() < 1e-15);
        assert!((circular_distance(0.0, PI / 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_edges() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!(normalize_angle(TAU).abs() < 1e-15);
        assert!((Angle::from_degrees(270.0).radians() + PI / 2.0).abs() < 1e-12);
        assert!(Angle::from_cycle_percent(100.0).radians().abs() < 1e-12);
    }

    #[test]
    fn von_mises_rejects_bad_concentration() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_von_mises(0.0, -1.0, &mut rng).is_err());
        assert!(sample_von_mises(0.0, f64::NAN, &mut rng).is_err());
        assert!(sample_von_mises(0.0, f64::INFINITY, &mut rng).is_err());
    }

    #[test]
    fn uniform_limit_has_small_resultant() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| sample_von_mises(0.3, 0.0, &mut rng).unwrap())
            .collect();
        assert!(circular_summary(&xs).unwrap().resultant_length < 0.005);
    }

    #[test]
    fn concentrated_draws_center_on_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| sample_von_mises(PI / 2.0, 8.0, &mut rng).unwrap())
            .collect();
        let s = circular_summary(&xs).unwrap();
        assert!((s.mean_direction - PI / 2.0).abs() < 0.01);
    }

    #[test]
    fn huge_concentration_stays_finite_and_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let x = sample_von_mises(1.0, 1e10, &mut rng).unwrap();
            assert!(x.is_finite());
            assert!((x - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn draws_lie_in_half_open_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in [0.0, 0.3, 3.0, 300.0] {
            for _ in 0..10_000 {
                let x = sample_von_mises(PI, k, &mut rng).unwrap();
                assert!(x > -PI && x <= PI);
            }
        }
    }

    proptest! {
        #[test]
        fn normalize_is_periodic(a in -50.0f64..50.0, k in -20i32..20) {
            let lhs = normalize_angle(a + TAU * k as f64);
            let rhs = normalize_angle(a);
            let diff = normalize_angle(lhs - rhs).abs();
            prop_assert!(diff < 1e-9);
            prop_assert!(lhs > -PI && lhs <= PI);
        }

        #[test]
        fn distance_symmetric_and_bounded(a in -10.0f64..10.0, b in -10.0f64..10.0) {
            let d1 = circular_distance(a, b);
            let d2 = circular_distance(b, a);
            prop_assert_eq!(d1, d2);
            prop_assert!((0.0..=2.0).contains(&d1));
        }

        #[test]
        fn summary_rotates_with_sample(
            xs in proptest::collection::vec(-3.0f64..3.0, 1..30),
            c in -PI..PI,
        ) {
            let base = circular_summary(&xs).unwrap();
            let rotated: Vec<f64> = xs.iter().map(|x| normalize_angle(x + c)).collect();
            let rot = circular_summary(&rotated).unwrap();
            prop_assert!((base.resultant_length - rot.resultant_length).abs() < 1e-10);
            if base.resultant_length > 1e-6 {
                let expect = normalize_angle(base.mean_direction + c);
                prop_assert!(normalize_angle(rot.mean_direction - expect).abs() < 1e-8);
            }
        }
    }
}

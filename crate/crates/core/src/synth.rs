//! Synthetic regression data with heavy-tailed designs, and the moment
//! bounds that certify which moment assumption a design satisfies.
//!
//! Covariates are i.i.d. across coordinates. Responses are
//! `y = ⟨x, w*⟩ + e` with independent noise `e`.

use alloc::string::ToString;
use alloc::vec::Vec;

use rand_distr::{Distribution, Normal, StandardNormal, StudentT};

use crate::dataset::{dot, Dataset};
use crate::error::{param, Error, Result};
use crate::geometry::ConstraintSet;
use crate::quadrature::integrate;
use crate::rng::StreamRng;
use crate::special::{chi_abs_moment, normal_abs_moment, student_t_ln_pdf};

/// Per-coordinate law of the covariates.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case", deny_unknown_fields))]
pub enum Design {
    /// Standard normal.
    Gaussian,
    /// Student's t with `nu` degrees of freedom.
    StudentT { nu: f64 },
    /// `±scale·U^{−1/α}` with a fair random sign.
    SymmetricPareto { alpha: f64, scale: f64 },
}

impl Design {
    fn validate(&self) -> Result<()> {
        match *self {
            Design::Gaussian => Ok(()),
            Design::StudentT { nu } if nu > 0.0 && nu.is_finite() => Ok(()),
            Design::StudentT { nu } => Err(param(alloc::format!(
                "student_t degrees of freedom must be positive, got {nu}"
            ))),
            Design::SymmetricPareto { alpha, scale }
                if alpha > 0.0 && alpha.is_finite() && scale > 0.0 && scale.is_finite() =>
            {
                Ok(())
            }
            Design::SymmetricPareto { .. } => Err(param(
                "symmetric_pareto needs positive finite alpha and scale",
            )),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Design::Gaussian => "gaussian",
            Design::StudentT { .. } => "student_t",
            Design::SymmetricPareto { .. } => "symmetric_pareto",
        }
    }

    /// Supremum of the orders `p` with `E|x|^p < ∞`.
    pub fn moment_limit(&self) -> f64 {
        match *self {
            Design::Gaussian => f64::INFINITY,
            Design::StudentT { nu } => nu,
            Design::SymmetricPareto { alpha, .. } => alpha,
        }
    }

    /// Errors unless `E|x_j|^order` is finite.
    pub fn check_moment(&self, order: f64) -> Result<()> {
        if !(order > 0.0 && order.is_finite()) {
            return Err(param(alloc::format!("moment order must be positive, got {order}")));
        }
        if order >= self.moment_limit() {
            return Err(Error::MomentRefused {
                order,
                family: alloc::format!("{self:?}"),
            });
        }
        Ok(())
    }

    /// `ln f(x)` for `x > 0`.
    fn ln_density(&self, x: f64) -> f64 {
        match *self {
            Design::Gaussian => -0.5 * x * x - 0.5 * libm::log(2.0 * core::f64::consts::PI),
            Design::StudentT { nu } => student_t_ln_pdf(x, nu),
            Design::SymmetricPareto { alpha, scale } => {
                if x < scale {
                    f64::NEG_INFINITY
                } else {
                    libm::log(0.5 * alpha) + alpha * libm::log(scale)
                        - (alpha + 1.0) * libm::log(x)
                }
            }
        }
    }

    /// `E h(|x|)` by quadrature in `s = ln|x|`, for `h(r) = O(r^growth)`
    /// with `growth` below the moment limit.
    pub fn abs_expectation<H: Fn(f64) -> f64>(&self, h: H, growth: f64) -> Result<f64> {
        self.check_moment(growth.max(f64::MIN_POSITIVE))?;
        let (lo, hi) = match *self {
            Design::Gaussian => (-40.0, libm::log(40.0)),
            Design::StudentT { nu } => {
                let knee = libm::fmax(0.5 * libm::log(nu), 0.0);
                (-40.0, knee + 40.0 / (nu - growth))
            }
            Design::SymmetricPareto { alpha, scale } => {
                let start = libm::log(scale);
                (start, start + 40.0 / (alpha - growth))
            }
        };
        let q = integrate(
            |s| {
                let x = libm::exp(s);
                let v = h(x);
                if v == 0.0 {
                    0.0
                } else {
                    2.0 * v * libm::exp(s + self.ln_density(x))
                }
            },
            lo,
            hi,
            0.0,
            1e-12,
            4000,
        )?;
        Ok(q.value)
    }

    /// `E|x_j|^order` by quadrature.
    pub fn abs_moment(&self, order: f64) -> Result<f64> {
        self.check_moment(order)?;
        self.abs_expectation(|x| libm::pow(x, order), order)
    }

    /// `E|x_j|^order` in closed form.
    pub fn abs_moment_closed_form(&self, order: f64) -> Result<f64> {
        self.check_moment(order)?;
        Ok(match *self {
            Design::Gaussian => normal_abs_moment(order),
            Design::StudentT { nu } => {
                use crate::special::ln_gamma;
                libm::exp(
                    0.5 * order * libm::log(nu) + ln_gamma(0.5 * (order + 1.0))
                        + ln_gamma(0.5 * (nu - order))
                        - 0.5 * libm::log(core::f64::consts::PI)
                        - ln_gamma(0.5 * nu),
                )
            }
            Design::SymmetricPareto { alpha, scale } => {
                alpha * libm::pow(scale, order) / (alpha - order)
            }
        })
    }

    fn draw(&self, rng: &mut StreamRng, t: Option<&StudentT<f64>>) -> f64 {
        match *self {
            Design::Gaussian => StandardNormal.sample(rng),
            Design::StudentT { .. } => t.expect("prepared").sample(rng),
            Design::SymmetricPareto { alpha, scale } => {
                let mag = scale * libm::pow(rng.uniform_open(), -1.0 / alpha);
                if rng.next_sign() {
                    mag
                } else {
                    -mag
                }
            }
        }
    }
}

/// Law of the additive noise.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case", deny_unknown_fields))]
pub enum Noise {
    /// `N(0, σ²)`; σ = 0 gives noiseless responses.
    Gaussian { sigma: f64 },
    StudentT { nu: f64 },
}

impl Noise {
    fn validate(&self) -> Result<()> {
        match *self {
            Noise::Gaussian { sigma } if sigma >= 0.0 && sigma.is_finite() => Ok(()),
            Noise::Gaussian { sigma } => Err(param(alloc::format!(
                "noise sigma must be nonnegative and finite, got {sigma}"
            ))),
            Noise::StudentT { nu } if nu > 0.0 && nu.is_finite() => Ok(()),
            Noise::StudentT { nu } => Err(param(alloc::format!(
                "noise degrees of freedom must be positive, got {nu}"
            ))),
        }
    }
}

/// Sampler for one noise law, built once per dataset.
pub(crate) enum NoiseSampler {
    Zero,
    Gaussian(Normal<f64>),
    StudentT(StudentT<f64>),
}

impl NoiseSampler {
    pub(crate) fn new(noise: &Noise) -> Result<Self> {
        noise.validate()?;
        Ok(match *noise {
            Noise::Gaussian { sigma } if sigma == 0.0 => NoiseSampler::Zero,
            Noise::Gaussian { sigma } => NoiseSampler::Gaussian(
                Normal::new(0.0, sigma).map_err(|e| param(e.to_string()))?,
            ),
            Noise::StudentT { nu } => {
                NoiseSampler::StudentT(StudentT::new(nu).map_err(|e| param(e.to_string()))?)
            }
        })
    }

    pub(crate) fn draw(&self, rng: &mut StreamRng) -> f64 {
        match self {
            NoiseSampler::Zero => 0.0,
            NoiseSampler::Gaussian(d) => d.sample(rng),
            NoiseSampler::StudentT(d) => d.sample(rng),
        }
    }
}

/// Covariate sampler for one design.
pub(crate) struct DesignSampler {
    design: Design,
    t: Option<StudentT<f64>>,
}

impl DesignSampler {
    pub(crate) fn new(design: &Design) -> Result<Self> {
        design.validate()?;
        let t = match *design {
            Design::StudentT { nu } => {
                Some(StudentT::new(nu).map_err(|e| param(e.to_string()))?)
            }
            _ => None,
        };
        Ok(Self {
            design: *design,
            t,
        })
    }

    pub(crate) fn fill(&self, rng: &mut StreamRng, out: &mut [f64]) {
        for v in out {
            *v = self.design.draw(rng, self.t.as_ref());
        }
    }
}

/// Joint law of `(x, y)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PopulationModel {
    pub design: Design,
    pub noise: Noise,
    pub w_star: Vec<f64>,
}

impl PopulationModel {
    pub fn new(design: Design, noise: Noise, w_star: Vec<f64>) -> Result<Self> {
        let model = Self {
            design,
            noise,
            w_star,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.design.validate()?;
        self.noise.validate()?;
        if self.w_star.is_empty() {
            return Err(param("w_star must have at least one coordinate"));
        }
        if self.w_star.iter().any(|v| !v.is_finite()) {
            return Err(param("w_star must be finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.w_star.len()
    }

    /// Errors unless `w*` lies in `set`.
    pub fn check_in(&self, set: &ConstraintSet) -> Result<()> {
        if set.dim() != self.dim() {
            return Err(Error::Shape {
                expected: set.dim(),
                found: self.dim(),
            });
        }
        if !set.contains(&self.w_star) {
            return Err(param("w_star lies outside the constraint set"));
        }
        Ok(())
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(
            (self.design, self.noise),
            (Design::Gaussian, Noise::Gaussian { .. })
        )
    }
}

/// Draws `n` records from `model`. Deterministic given `seed`.
pub fn synth(model: &PopulationModel, n: usize, seed: u64) -> Result<Dataset> {
    model.validate()?;
    if n == 0 {
        return Err(param("n must be at least 1"));
    }
    let d = model.dim();
    let design = DesignSampler::new(&model.design)?;
    let noise = NoiseSampler::new(&model.noise)?;
    let mut rng = StreamRng::new(seed);
    let mut xs = alloc::vec![0.0; n * d];
    let mut ys = Vec::with_capacity(n);
    for row in xs.chunks_exact_mut(d) {
        design.fill(&mut rng, row);
        ys.push(dot(row, &model.w_star) + noise.draw(&mut rng));
    }
    Dataset::new(xs, ys, d)
}

/// As [`synth`], first refusing when `E|x_j|^theta` is infinite.
pub fn synth_certified(model: &PopulationModel, n: usize, theta: f64, seed: u64) -> Result<Dataset> {
    model.design.check_moment(theta)?;
    synth(model, n, seed)
}

/// Which moment a bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MomentMode {
    /// `E‖x‖₂^θ ≤ τ^θ`.
    L2,
    /// `E|x_j|^θ ≤ τ^θ` for every coordinate.
    Coordinate,
}

/// Smallest certified τ with the selected moment of order `theta` at most
/// `τ^theta`.
///
/// Coordinate mode is exact (quadrature of the design density). L2 mode is
/// exact for Gaussian designs; otherwise it is the smaller of two upper
/// bounds, `√(d·E x_j²)` (Jensen, when the variance is finite) and
/// `(d·E|x_j|^θ)^{1/θ}` (from `‖x‖₂ ≤ ‖x‖_θ` for θ ≤ 2).
pub fn certified_tau(model: &PopulationModel, theta: f64, mode: MomentMode) -> Result<f64> {
    model.validate()?;
    if !(theta > 0.0 && theta <= 2.0) {
        return Err(param(alloc::format!("theta must lie in (0, 2], got {theta}")));
    }
    let d = model.dim() as f64;
    let coord = model.design.abs_moment(theta)?;
    match mode {
        MomentMode::Coordinate => Ok(libm::pow(coord, 1.0 / theta)),
        MomentMode::L2 if model.design == Design::Gaussian => {
            Ok(libm::pow(chi_abs_moment(model.dim(), theta), 1.0 / theta))
        }
        MomentMode::L2 => {
            let subadditive = libm::pow(d * coord, 1.0 / theta);
            let jensen = if model.design.moment_limit() > 2.0 {
                libm::sqrt(d * model.design.abs_moment(2.0)?)
            } else {
                f64::INFINITY
            };
            Ok(libm::fmin(subadditive, jensen))
        }
    }
}

/// Coordinate mode: `max_j (1/n) Σᵢ |x_ij|^θ`. L2 mode: `(1/n) Σᵢ ‖xᵢ‖₂^θ`.
pub fn empirical_moment(data: &Dataset, theta: f64, mode: MomentMode) -> f64 {
    let n = data.len() as f64;
    match mode {
        MomentMode::Coordinate => (0..data.dim())
            .map(|j| {
                data.records()
                    .map(|(x, _)| libm::pow(libm::fabs(x[j]), theta))
                    .sum::<f64>()
                    / n
            })
            .fold(0.0, f64::max),
        MomentMode::L2 => {
            data.records()
                .map(|(x, _)| libm::pow(libm::sqrt(dot(x, x)), theta))
                .sum::<f64>()
                / n
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn t_model(nu: f64) -> PopulationModel {
        PopulationModel::new(Design::StudentT { nu }, Noise::Gaussian { sigma: 1.0 }, vec![0.5])
            .unwrap()
    }

    #[test]
    fn zero_signal_zero_noise() {
        let m = PopulationModel::new(Design::Gaussian, Noise::Gaussian { sigma: 0.0 }, vec![0.0; 3])
            .unwrap();
        let d = synth(&m, 50, 1).unwrap();
        assert!(d.ys().iter().all(|&y| y == 0.0));
    }

    #[test]
    fn deterministic() {
        let m = t_model(2.5);
        assert_eq!(synth(&m, 100, 9).unwrap(), synth(&m, 100, 9).unwrap());
        assert_ne!(synth(&m, 100, 9).unwrap(), synth(&m, 100, 10).unwrap());
    }

    #[test]
    fn tau_values() {
        let g = PopulationModel::new(Design::Gaussian, Noise::Gaussian { sigma: 1.0 }, vec![0.0])
            .unwrap();
        assert!((certified_tau(&g, 2.0, MomentMode::Coordinate).unwrap() - 1.0).abs() < 1e-9);
        let t = certified_tau(&t_model(2.5), 2.0, MomentMode::Coordinate).unwrap();
        assert!((t - 2.236_067_977_499_789_696).abs() < 1e-6 * 2.24);
        // closed form, mpmath
        let t = certified_tau(&t_model(1.8), 1.5, MomentMode::Coordinate).unwrap();
        assert!((t - 2.776_229_847_219_641_816).abs() < 1e-6 * 2.78, "{t}");
        assert!(matches!(
            certified_tau(&t_model(1.8), 2.0, MomentMode::Coordinate),
            Err(Error::MomentRefused { .. })
        ));
    }

    #[test]
    fn quadrature_matches_closed_forms() {
        for design in [
            Design::Gaussian,
            Design::StudentT { nu: 2.5 },
            Design::StudentT { nu: 1.8 },
            Design::StudentT { nu: 5.0 },
            Design::SymmetricPareto { alpha: 2.5, scale: 0.7 },
        ] {
            for order in [1.1, 1.5, 1.7] {
                let q = design.abs_moment(order).unwrap();
                let c = design.abs_moment_closed_form(order).unwrap();
                assert!(((q - c) / c).abs() < 1e-8, "{design:?} {order}: {q} vs {c}");
            }
        }
    }

    #[test]
    fn l2_bounds() {
        let m = PopulationModel::new(
            Design::StudentT { nu: 2.5 },
            Noise::Gaussian { sigma: 1.0 },
            vec![0.0; 4],
        )
        .unwrap();
        // Jensen: √(4·5)
        let t = certified_tau(&m, 2.0, MomentMode::L2).unwrap();
        assert!((t - libm::sqrt(20.0)).abs() < 1e-6);
        let g = PopulationModel::new(Design::Gaussian, Noise::Gaussian { sigma: 1.0 }, vec![0.0; 3])
            .unwrap();
        assert!((certified_tau(&g, 2.0, MomentMode::L2).unwrap() - libm::sqrt(3.0)).abs() < 1e-12);
    }

    #[test]
    fn empirical_moments() {
        let d = Dataset::from_rows(&[(vec![3.0], 0.0), (vec![-4.0], 0.0)]).unwrap();
        assert_eq!(empirical_moment(&d, 2.0, MomentMode::Coordinate), 12.5);
        let d = Dataset::from_rows(&[(vec![3.0, 0.0], 0.0), (vec![0.0, 4.0], 0.0)]).unwrap();
        assert!((empirical_moment(&d, 2.0, MomentMode::L2) - 12.5).abs() < 1e-12);
        assert_eq!(empirical_moment(&d, 2.0, MomentMode::Coordinate), 8.0);
        let z = Dataset::from_rows(&[(vec![0.0], 1.0)]).unwrap();
        assert_eq!(empirical_moment(&z, 1.5, MomentMode::L2), 0.0);
    }

    #[test]
    fn certification_refusal() {
        assert!(synth_certified(&t_model(1.8), 10, 1.5, 0).is_ok());
        assert!(matches!(
            synth_certified(&t_model(1.8), 10, 1.8, 0),
            Err(Error::MomentRefused { .. })
        ));
    }

    #[test]
    fn pareto_magnitudes() {
        let m = PopulationModel::new(
            Design::SymmetricPareto { alpha: 3.0, scale: 0.5 },
            Noise::Gaussian { sigma: 0.0 },
            vec![1.0],
        )
        .unwrap();
        let d = synth(&m, 1000, 4).unwrap();
        assert!(d.xs().iter().all(|x| x.abs() >= 0.5));
        assert!(d.xs().iter().any(|&x| x < 0.0) && d.xs().iter().any(|&x| x > 0.0));
    }
}

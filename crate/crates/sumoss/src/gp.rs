//! Gaussian process field model and mutual-information objectives.
//!
//! A scalar field over the deployment area is modeled as a GP with a
//! squared-exponential kernel of unit signal variance. Sensor placement
//! quality is scored by the mutual information between measured and
//! unmeasured candidate locations; the planners only ever need the
//! incremental form [`delta_gain`], while [`mi_exact`] computes the set
//! objective directly and serves as the reference oracle.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::geom::Position;

/// Squared-exponential kernel with unit prior variance.
///
/// `phi` is the length scale in meters; `jitter` is added to every
/// covariance diagonal to keep Cholesky factorizations stable. The prior
/// mean is carried for completeness but never enters any variance or
/// information computation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelModel {
    pub phi: f64,
    pub jitter: f64,
    pub prior_mean: f64,
}

impl Default for KernelModel {
    fn default() -> Self {
        Self { phi: 1.5, jitter: 1e-9, prior_mean: 0.0 }
    }
}

impl KernelModel {
    pub fn new(phi: f64, jitter: f64) -> Result<Self> {
        let model = Self { phi, jitter, prior_mean: 0.0 };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.phi.is_finite() && self.jitter.is_finite() && self.prior_mean.is_finite()) {
            return Err(Error::NonFinite("kernel parameters".into()));
        }
        if self.phi <= 0.0 {
            return Err(Error::InvalidInput(format!("length scale must be positive, got {}", self.phi)));
        }
        if self.jitter < 0.0 {
            return Err(Error::InvalidInput(format!("jitter must be nonnegative, got {}", self.jitter)));
        }
        Ok(())
    }

    /// Marginal variance of any single location: `1 + jitter`.
    pub fn prior_variance(&self) -> f64 {
        1.0 + self.jitter
    }
}

/// Kernel covariance between two locations, `exp(-d^2 / (2 phi^2))`.
///
/// Identical positions give exactly 1; the diagonal jitter is applied by
/// [`build_cov`] and [`KernelModel::prior_variance`], not here.
pub fn kernel_cov(a: &Position, b: &Position, model: &KernelModel) -> f64 {
    libm::exp(-a.squared_distance(b) / (2.0 * model.phi * model.phi))
}

/// Symmetric covariance matrix over a fixed list of positions, with
/// jitter on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    positions: Vec<Position>,
    matrix: DMatrix<f64>,
}

/// Builds the jittered kernel covariance over `positions`.
///
/// Duplicate positions are rejected when `jitter` is zero: without the
/// diagonal lift the matrix would be exactly singular.
pub fn build_cov(positions: &[Position], model: &KernelModel) -> Result<CovMatrix> {
    model.validate()?;
    if positions.is_empty() {
        return Err(Error::InvalidInput("covariance over empty position list".into()));
    }
    if positions.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("covariance position".into()));
    }
    if model.jitter == 0.0 {
        for i in 0..positions.len() {
            for j in i + 1..positions.len() {
                if positions[i].squared_distance(&positions[j]) == 0.0 {
                    return Err(Error::DegenerateCovariance(format!(
                        "duplicate positions {i} and {j} with zero jitter"
                    )));
                }
            }
        }
    }
    let n = positions.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = model.prior_variance();
        for j in i + 1..n {
            let k = kernel_cov(&positions[i], &positions[j], model);
            m[(i, j)] = k;
            m[(j, i)] = k;
        }
    }
    Ok(CovMatrix { positions: positions.to_vec(), matrix: m })
}

impl CovMatrix {
    pub fn dim(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        Cholesky::new(self.matrix.clone())
            .ok_or_else(|| Error::DegenerateCovariance("covariance not positive definite".into()))
    }

    /// Log-determinant via the Cholesky factor.
    pub fn log_det(&self) -> Result<f64> {
        let chol = self.cholesky()?;
        Ok(2.0 * chol.l_dirty().diagonal().iter().map(|d| libm::log(*d)).sum::<f64>())
    }
}

/// Prefactored conditioning set for repeated variance queries.
///
/// Factors the conditioning covariance once; each [`variance`] call then
/// costs one kernel vector and two triangular solves.
///
/// [`variance`]: ConditionalSolver::variance
pub struct ConditionalSolver {
    model: KernelModel,
    conditioning: Vec<Position>,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl ConditionalSolver {
    /// An empty conditioning set is allowed and leaves the prior variance.
    pub fn new(conditioning: &[Position], model: &KernelModel) -> Result<Self> {
        model.validate()?;
        let chol = if conditioning.is_empty() {
            None
        } else {
            Some(build_cov(conditioning, model)?.cholesky()?)
        };
        Ok(Self { model: *model, conditioning: conditioning.to_vec(), chol })
    }

    /// Posterior variance of `target` given noisy observations at the
    /// conditioning positions (Schur complement of the joint covariance).
    pub fn variance(&self, target: &Position) -> f64 {
        let prior = self.model.prior_variance();
        match &self.chol {
            None => prior,
            Some(chol) => {
                let k = DVector::from_iterator(
                    self.conditioning.len(),
                    self.conditioning.iter().map(|p| kernel_cov(target, p, &self.model)),
                );
                prior - k.dot(&chol.solve(&k))
            }
        }
    }
}

/// Posterior variance of `target` given the conditioning set.
///
/// Errors if the variance underflows to zero or below, which indicates
/// the conditioning set is effectively degenerate at this jitter.
pub fn conditional_variance(
    target: &Position,
    conditioning: &[Position],
    model: &KernelModel,
) -> Result<f64> {
    let v = ConditionalSolver::new(conditioning, model)?.variance(target);
    if !(v > 0.0) {
        return Err(Error::DegenerateCovariance(format!(
            "conditional variance underflow ({v:e}) for target ({}, {})",
            target.x(),
            target.y()
        )));
    }
    Ok(v)
}

/// Mutual-information gain of adding `candidate` to the selected set.
///
/// `0.5 * ln( var(candidate | selected) / var(candidate | others) )`,
/// where `others` is the rest of the candidate set excluding the
/// candidate itself. Equals the exact MI increment
/// `mi_exact(selected + candidate) - mi_exact(selected)` when the three
/// position groups partition the full set.
pub fn delta_gain(
    candidate: &Position,
    selected: &[Position],
    others: &[Position],
    model: &KernelModel,
) -> Result<f64> {
    let numerator = conditional_variance(candidate, selected, model)?;
    let denominator = conditional_variance(candidate, others, model)?;
    Ok(0.5 * libm::log(numerator / denominator))
}

/// Exact mutual information `I(selected; rest)` over a candidate set.
///
/// `selected` holds indices into `positions` and must be a non-empty
/// proper subset; the complement is the unselected rest. Computed from
/// Gaussian entropies as
/// `0.5 * (logdet S_AA + logdet S_BB - logdet S_VV)`.
pub fn mi_exact(selected: &[usize], positions: &[Position], model: &KernelModel) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::InvalidInput("mi_exact needs a non-empty selection".into()));
    }
    let n = positions.len();
    let mut in_selected = alloc::vec![false; n];
    for &i in selected {
        if i >= n {
            return Err(Error::InvalidInput(format!("selection index {i} out of range (n = {n})")));
        }
        if in_selected[i] {
            return Err(Error::InvalidInput(format!("selection index {i} repeated")));
        }
        in_selected[i] = true;
    }
    if selected.len() == n {
        return Err(Error::InvalidInput("selection must leave a non-empty complement".to_string()));
    }

    let picked: Vec<Position> = selected.iter().map(|&i| positions[i]).collect();
    let rest: Vec<Position> = (0..n).filter(|i| !in_selected[*i]).map(|i| positions[i]).collect();

    let ld_selected = build_cov(&picked, model)?.log_det()?;
    let ld_rest = build_cov(&rest, model)?.log_det()?;
    let ld_full = build_cov(positions, model)?.log_det()?;
    Ok(0.5 * (ld_selected + ld_rest - ld_full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pos(x: f64, y: f64) -> Position {
        Position::new(x, y).unwrap()
    }

    #[test]
    fn kernel_fixed_points() {
        let m = KernelModel::new(1.0, 0.0).unwrap();
        let a = pos(0.0, 0.0);
        assert_eq!(kernel_cov(&a, &a, &m), 1.0);
        assert_relative_eq!(kernel_cov(&a, &pos(1.0, 0.0), &m), 0.6065306597126334, max_relative = 1e-15);
        assert_relative_eq!(kernel_cov(&a, &pos(2.0, 0.0), &m), 0.1353352832366127, max_relative = 1e-15);
        let wide = KernelModel::new(3.0, 0.0).unwrap();
        assert_relative_eq!(kernel_cov(&a, &pos(30.0, 0.0), &wide), libm::exp(-50.0), max_relative = 1e-12);
    }

    #[test]
    fn kernel_is_symmetric_and_decaying() {
        let m = KernelModel::default();
        let a = pos(0.3, 1.2);
        let b = pos(4.0, 2.0);
        assert_eq!(kernel_cov(&a, &b, &m), kernel_cov(&b, &a, &m));
        let c = pos(4.5, 2.0);
        assert!(kernel_cov(&a, &b, &m) > kernel_cov(&a, &c, &m));
    }

    #[test]
    fn invalid_kernel_parameters_rejected() {
        assert!(KernelModel::new(0.0, 1e-9).is_err());
        assert!(KernelModel::new(-1.0, 1e-9).is_err());
        assert!(KernelModel::new(1.5, -1e-9).is_err());
        assert!(KernelModel::new(f64::NAN, 1e-9).is_err());
    }

    #[test]
    fn single_position_covariance_is_prior_variance() {
        let m = KernelModel::default();
        let cov = build_cov(&[pos(2.0, 3.0)], &m).unwrap();
        assert_eq!(cov.dim(), 1);
        assert_eq!(cov.matrix()[(0, 0)], 1.0 + m.jitter);
    }

    #[test]
    fn collinear_points_at_phi_spacing() {
        let m = KernelModel::new(1.5, 0.0).unwrap();
        let points = [pos(0.0, 0.0), pos(1.5, 0.0), pos(3.0, 0.0)];
        let cov = build_cov(&points, &m).unwrap();
        assert_relative_eq!(cov.matrix()[(0, 1)], libm::exp(-0.5), max_relative = 1e-15);
        assert_relative_eq!(cov.matrix()[(1, 2)], libm::exp(-0.5), max_relative = 1e-15);
        assert_relative_eq!(cov.matrix()[(0, 2)], libm::exp(-2.0), max_relative = 1e-15);
    }

    #[test]
    fn self_conditioning_leaves_jitter_scale_residual() {
        let m = KernelModel::new(1.5, 1e-6).unwrap();
        let p = pos(1.0, 1.0);
        let v = conditional_variance(&p, &[p], &m).unwrap();
        // (1+j) - 1/(1+j) = (2j + j^2) / (1+j), about 2e-6
        assert!(v > 0.0 && v < 3.0 * m.jitter);
    }

    #[test]
    fn duplicate_positions_need_jitter() {
        let points = [pos(1.0, 1.0), pos(1.0, 1.0)];
        let no_jitter = KernelModel::new(1.5, 0.0).unwrap();
        assert!(matches!(
            build_cov(&points, &no_jitter),
            Err(Error::DegenerateCovariance(_))
        ));
        let jittered = KernelModel::default();
        let cov = build_cov(&points, &jittered).unwrap();
        assert!(cov.cholesky().is_ok());
    }

    #[test]
    fn empty_conditioning_returns_prior() {
        let m = KernelModel::default();
        let v = conditional_variance(&pos(2.0, 2.0), &[], &m).unwrap();
        assert_eq!(v, m.prior_variance());
    }

    #[test]
    fn single_point_conditioning_matches_closed_form() {
        let m = KernelModel::new(1.5, 1e-9).unwrap();
        let target = pos(0.0, 0.0);
        let obs = pos(1.0, 0.5);
        let k = kernel_cov(&target, &obs, &m);
        let p = m.prior_variance();
        let expected = p - k * k / p;
        let got = conditional_variance(&target, &[obs], &m).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-12);
    }

    #[test]
    fn conditioning_never_raises_variance() {
        let m = KernelModel::default();
        let target = pos(2.5, 2.5);
        let near = [pos(2.0, 2.0), pos(3.0, 3.0)];
        let v = conditional_variance(&target, &near, &m).unwrap();
        assert!(v < m.prior_variance());
        assert!(v > 0.0);
    }

    #[test]
    fn delta_gain_sign_tracks_relative_informativeness() {
        let m = KernelModel::default();
        let candidate = pos(2.5, 2.5);
        // Selected sensors far away, unselected rest nearby: the
        // candidate is much better explained by the rest, so the gain
        // (log variance ratio) is positive.
        let selected = [pos(0.0, 0.0)];
        let others = [pos(2.4, 2.5), pos(2.6, 2.5)];
        let g = delta_gain(&candidate, &selected, &others, &m).unwrap();
        assert!(g > 0.0);
        // Swapping the groups flips the sign exactly.
        let swapped = delta_gain(&candidate, &others, &selected, &m).unwrap();
        assert_relative_eq!(swapped, -g, max_relative = 1e-12);
    }

    #[test]
    fn delta_gain_vanishes_with_no_context() {
        let m = KernelModel::default();
        let g = delta_gain(&pos(2.0, 2.0), &[], &[], &m).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn delta_gain_vanishes_by_symmetry() {
        // candidate equidistant from the one selected and the one other
        // sensor: numerator and denominator are the same computation
        let m = KernelModel::default();
        let g = delta_gain(&pos(2.0, 2.0), &[pos(1.0, 2.0)], &[pos(3.0, 2.0)], &m).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn far_apart_sensors_share_no_information() {
        let m = KernelModel::new(0.1, 1e-9).unwrap();
        // pairwise distances at least 20 phi
        let points = [pos(0.0, 0.0), pos(3.0, 0.0), pos(0.0, 3.0), pos(3.0, 3.0)];
        let mi = mi_exact(&[0, 3], &points, &m).unwrap();
        assert!(mi.abs() <= 1e-6, "mi = {mi}");
    }

    #[test]
    fn single_selection_mi_reduces_to_variance_ratio() {
        let m = KernelModel::default();
        let points = [pos(0.5, 0.5), pos(1.5, 2.0), pos(3.0, 1.0), pos(4.0, 4.0)];
        let mi = mi_exact(&[0], &points, &m).unwrap();
        let v = conditional_variance(&points[0], &points[1..], &m).unwrap();
        let reduced = 0.5 * libm::log(m.prior_variance() / v);
        assert_relative_eq!(mi, reduced, max_relative = 1e-10);
    }

    #[test]
    fn mi_two_point_closed_form() {
        let m = KernelModel::new(1.5, 1e-9).unwrap();
        let points = [pos(0.0, 0.0), pos(1.0, 1.0)];
        let k = kernel_cov(&points[0], &points[1], &m);
        let rho = k / m.prior_variance();
        let expected = -0.5 * libm::log(1.0 - rho * rho);
        let got = mi_exact(&[0], &points, &m).unwrap();
        assert_relative_eq!(got, expected, max_relative = 1e-10);
    }

    #[test]
    fn mi_is_symmetric_in_the_partition() {
        let m = KernelModel::default();
        let points = [pos(0.0, 0.0), pos(1.0, 2.0), pos(3.0, 1.0), pos(4.0, 4.0), pos(2.0, 3.0)];
        let a = mi_exact(&[0, 2], &points, &m).unwrap();
        let b = mi_exact(&[1, 3, 4], &points, &m).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-9, epsilon = 1e-12);
    }

    #[test]
    fn mi_rejects_malformed_selections() {
        let m = KernelModel::default();
        let points = [pos(0.0, 0.0), pos(1.0, 1.0), pos(2.0, 0.0)];
        assert!(mi_exact(&[], &points, &m).is_err());
        assert!(mi_exact(&[0, 0], &points, &m).is_err());
        assert!(mi_exact(&[3], &points, &m).is_err());
        assert!(mi_exact(&[0, 1, 2], &points, &m).is_err());
    }

    #[test]
    fn prior_mean_never_enters_results() {
        let base = KernelModel::default();
        let shifted = KernelModel { prior_mean: 42.0, ..base };
        let points = [pos(0.0, 0.0), pos(1.0, 2.0), pos(3.0, 1.0), pos(2.0, 3.0)];
        let a = mi_exact(&[0, 1], &points, &base).unwrap();
        let b = mi_exact(&[0, 1], &points, &shifted).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        let va = conditional_variance(&points[0], &points[1..], &base).unwrap();
        let vb = conditional_variance(&points[0], &points[1..], &shifted).unwrap();
        assert_eq!(va.to_bits(), vb.to_bits());
    }
}

//! Center-of-mass momentum distributions `|alpha_0(p)|^2`, in units of
//! `beta = p / (M c)`.
//!
//! Only the modulus squared of the initial wavepacket enters the long-time
//! spectrum, so a pure wavepacket and the mixed state with the same
//! momentum distribution are represented by the same value here.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::UnitVector3;
use crate::quadrature::gauss_hermite;

const DIRECTION_TOL: f64 = 1e-12;
pub const DEFAULT_HERMITE_ORDER: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentumDistribution {
    PointMass { beta: Vector3<f64> },
    Gaussian { mean: Vector3<f64>, covariance: Matrix3<f64> },
    /// Weights over the Doppler projection `delta = n . beta` along a fixed
    /// direction; transverse velocity is taken to be zero.
    Tabulated {
        deltas: Vec<f64>,
        weights: Vec<f64>,
        direction: UnitVector3,
    },
}

impl MomentumDistribution {
    pub fn point(beta: Vector3<f64>) -> Self {
        MomentumDistribution::PointMass { beta }
    }

    pub fn at_rest() -> Self {
        Self::point(Vector3::zeros())
    }

    pub fn gaussian(mean: Vector3<f64>, covariance: Matrix3<f64>) -> Result<Self> {
        if !covariance.iter().all(|c| c.is_finite()) || !mean.iter().all(|m| m.is_finite()) {
            return Err(Error::invalid("covariance", "entries must be finite"));
        }
        let asym = (covariance - covariance.transpose()).amax();
        if asym > 1e-12 * covariance.amax().max(f64::MIN_POSITIVE) {
            return Err(Error::invalid("covariance", "matrix is not symmetric"));
        }
        let eig = SymmetricEigen::new(covariance);
        let floor = -1e-12 * covariance.amax();
        if eig.eigenvalues.iter().any(|&l| l < floor) {
            return Err(Error::invalid("covariance", "matrix is not positive semidefinite"));
        }
        Ok(MomentumDistribution::Gaussian { mean, covariance })
    }

    pub fn isotropic(mean: Vector3<f64>, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma", format!("must be finite and >= 0, got {sigma}")));
        }
        Self::gaussian(mean, Matrix3::identity() * (sigma * sigma))
    }

    /// Tabulated projected distribution; weights are normalized to unit sum.
    pub fn tabulated(deltas: Vec<f64>, weights: Vec<f64>, direction: UnitVector3) -> Result<Self> {
        if deltas.len() != weights.len() || deltas.is_empty() {
            return Err(Error::invalid("tabulated", "need equally many deltas and weights, at least one"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || deltas.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("tabulated", "weights must be finite and non-negative"));
        }
        if deltas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("tabulated", "delta grid must be strictly increasing"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("tabulated", "weights sum to zero"));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(MomentumDistribution::Tabulated {
            deltas,
            weights,
            direction,
        })
    }

    /// Quadrature nodes `(beta_i, w_i)` with `sum w_i = 1` representing the
    /// distribution: the point itself, a tensor Gauss-Hermite rule along the
    /// principal axes of the covariance (one node along zero-variance axes),
    /// or the table.
    pub fn nodes(&self, order: usize) -> Vec<(Vector3<f64>, f64)> {
        match self {
            MomentumDistribution::PointMass { beta } => vec![(*beta, 1.0)],
            MomentumDistribution::Gaussian { mean, covariance } => {
                let eig = SymmetricEigen::new(*covariance);
                let (t, w) = gauss_hermite(order.max(1));
                let norm = std::f64::consts::PI.sqrt();
                let axis_rule = |variance: f64| -> Vec<(f64, f64)> {
                    if variance <= 0.0 {
                        vec![(0.0, 1.0)]
                    } else {
                        let s = (2.0 * variance).sqrt();
                        t.iter().zip(&w).map(|(t, w)| (s * t, w / norm)).collect()
                    }
                };
                let rules: Vec<Vec<(f64, f64)>> = eig.eigenvalues.iter().map(|&l| axis_rule(l)).collect();
                let axes: Vec<Vector3<f64>> = (0..3).map(|i| eig.eigenvectors.column(i).into_owned()).collect();
                let mut nodes = Vec::with_capacity(rules.iter().map(Vec::len).product());
                for &(u0, w0) in &rules[0] {
                    for &(u1, w1) in &rules[1] {
                        for &(u2, w2) in &rules[2] {
                            let beta = mean + u0 * axes[0] + u1 * axes[1] + u2 * axes[2];
                            nodes.push((beta, w0 * w1 * w2));
                        }
                    }
                }
                nodes
            }
            MomentumDistribution::Tabulated {
                deltas,
                weights,
                direction,
            } => deltas
                .iter()
                .zip(weights)
                .map(|(d, w)| (*d * direction.as_vector(), *w))
                .collect(),
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes(DEFAULT_HERMITE_ORDER).iter().map(|(_, w)| w).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub value: f64,
    /// `|Q(order) - Q(2 order)|` for Gaussians, zero for discrete distributions.
    pub error_estimate: f64,
}

fn weighted_sum<F: Fn(&Vector3<f64>) -> f64>(nodes: &[(Vector3<f64>, f64)], f: &F) -> Result<f64> {
    let mut sum = 0.0;
    for (beta, w) in nodes {
        let v = f(beta);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                location: format!("beta = [{:e}, {:e}, {:e}]", beta.x, beta.y, beta.z),
            });
        }
        sum += w * v;
    }
    Ok(sum)
}

/// `E[f(beta)]` over the distribution. The value uses [`MomentumDistribution::nodes`]
/// at `order`, in node order, so it equals the weighted sum of point-mass
/// evaluations bit for bit.
pub fn expectation<F>(dist: &MomentumDistribution, f: F, order: usize) -> Result<Expectation>
where
    F: Fn(&Vector3<f64>) -> f64,
{
    match dist {
        MomentumDistribution::PointMass { beta } => {
            let value = f(beta);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("beta = {:?}", beta.as_slice()),
                });
            }
            Ok(Expectation {
                value,
                error_estimate: 0.0,
            })
        }
        MomentumDistribution::Gaussian { .. } => {
            let value = weighted_sum(&dist.nodes(order), &f)?;
            let refined = weighted_sum(&dist.nodes(2 * order), &f)?;
            Ok(Expectation {
                value,
                error_estimate: (refined - value).abs(),
            })
        }
        MomentumDistribution::Tabulated { .. } => Ok(Expectation {
            value: weighted_sum(&dist.nodes(order), &f)?,
            error_estimate: 0.0,
        }),
    }
}

/// Distribution of the Doppler projection `delta = n . beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProjectedDistribution {
    Point { delta: f64 },
    Gaussian { mean: f64, variance: f64 },
    Tabulated { deltas: Vec<f64>, weights: Vec<f64> },
}

impl ProjectedDistribution {
    pub fn nodes(&self, order: usize) -> Vec<(f64, f64)> {
        match self {
            ProjectedDistribution::Point { delta } => vec![(*delta, 1.0)],
            ProjectedDistribution::Gaussian { mean, variance } => {
                if *variance <= 0.0 {
                    return vec![(*mean, 1.0)];
                }
                let (t, w) = gauss_hermite(order.max(1));
                let s = (2.0 * variance).sqrt();
                let norm = std::f64::consts::PI.sqrt();
                t.iter().zip(&w).map(|(t, w)| (mean + s * t, w / norm)).collect()
            }
            ProjectedDistribution::Tabulated { deltas, weights } => {
                deltas.iter().copied().zip(weights.iter().copied()).collect()
            }
        }
    }

    /// Center and standard deviation of the projection.
    pub fn mean_and_width(&self) -> (f64, f64) {
        match self {
            ProjectedDistribution::Point { delta } => (*delta, 0.0),
            ProjectedDistribution::Gaussian { mean, variance } => (*mean, variance.sqrt()),
            ProjectedDistribution::Tabulated { deltas, weights } => {
                let m: f64 = deltas.iter().zip(weights).map(|(d, w)| d * w).sum();
                let v: f64 = deltas.iter().zip(weights).map(|(d, w)| w * (d - m).powi(2)).sum();
                (m, v.sqrt())
            }
        }
    }
}

/// Exact marginal of `dist` along `n`.
pub fn project(dist: &MomentumDistribution, n: &UnitVector3) -> Result<ProjectedDistribution> {
    Ok(match dist {
        MomentumDistribution::PointMass { beta } => ProjectedDistribution::Point { delta: n.dot(beta) },
        MomentumDistribution::Gaussian { mean, covariance } => {
            let v = n.as_vector();
            ProjectedDistribution::Gaussian {
                mean: n.dot(mean),
                variance: (v.transpose() * covariance * v)[(0, 0)].max(0.0),
            }
        }
        MomentumDistribution::Tabulated {
            deltas,
            weights,
            direction,
        } => {
            if (direction.as_vector() - n.as_vector()).amax() > DIRECTION_TOL {
                return Err(Error::DirectionMismatch {
                    table: direction.to_array(),
                    requested: n.to_array(),
                });
            }
            ProjectedDistribution::Tabulated {
                deltas: deltas.clone(),
                weights: weights.clone(),
            }
        }
    })
}

/// Reads a two-column `delta,weight` CSV (header optional).
pub fn read_tabulated_csv(path: &std::path::Path, direction: UnitVector3) -> Result<MomentumDistribution> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut deltas = Vec::new();
    let mut weights = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let parse = |i: usize| record.get(i).and_then(|s| s.parse::<f64>().ok());
        match (parse(0), parse(1)) {
            (Some(d), Some(w)) => {
                deltas.push(d);
                weights.push(w);
            }
            _ if line == 0 => continue,
            _ => {
                return Err(Error::Config(format!(
                    "{}: line {} is not a `delta,weight` pair",
                    path.display(),
                    line + 1
                )))
            }
        }
    }
    MomentumDistribution::tabulated(deltas, weights, direction)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_of_every_variant() {
        let dists = [
            MomentumDistribution::point(Vector3::new(0.1, 0.0, 0.0)),
            MomentumDistribution::isotropic(Vector3::zeros(), 1e-3).unwrap(),
            MomentumDistribution::tabulated(vec![-1e-3, 0.0, 1e-3], vec![1.0, 2.0, 1.0], UnitVector3::x_axis())
                .unwrap(),
        ];
        for d in &dists {
            let e = expectation(d, |_| 1.0, 40).unwrap();
            assert!((e.value - 1.0).abs() < 1e-10, "{d:?}");
        }
    }

    #[test]
    fn gaussian_moments() {
        let n = UnitVector3::new(0.3, 0.4, 0.5).unwrap();
        let mean = Vector3::new(1e-4, -2e-4, 3e-4);
        let sigma = 1e-4;
        let d = MomentumDistribution::isotropic(mean, sigma).unwrap();
        let first = expectation(&d, |b| n.dot(b), 40).unwrap().value;
        assert!((first - n.dot(&mean)).abs() < 1e-18);
        let second = expectation(&d, |b| n.dot(b).powi(2), 40).unwrap().value;
        let exact = sigma * sigma + n.dot(&mean).powi(2);
        assert!((second - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn projections() {
        let n = UnitVector3::new(1.0, -2.0, 0.5).unwrap();
        let p = project(&MomentumDistribution::point(Vector3::new(0.1, 0.2, 0.3)), &n).unwrap();
        assert_eq!(p, ProjectedDistribution::Point { delta: n.dot(&Vector3::new(0.1, 0.2, 0.3)) });

        let iso = MomentumDistribution::isotropic(Vector3::zeros(), 2e-3).unwrap();
        let ProjectedDistribution::Gaussian { variance, .. } = project(&iso, &n).unwrap() else {
            panic!("gaussian expected")
        };
        assert!((variance - 4e-6).abs() < 1e-18);

        let diag = MomentumDistribution::gaussian(
            Vector3::zeros(),
            Matrix3::from_diagonal(&Vector3::new(1e-6, 4e-6, 9e-6)),
        )
        .unwrap();
        let ProjectedDistribution::Gaussian { variance, .. } = project(&diag, &UnitVector3::z_axis()).unwrap()
        else {
            panic!("gaussian expected")
        };
        assert_eq!(variance, 9e-6);
    }

    #[test]
    fn tabulated_direction_must_match() {
        let t = MomentumDistribution::tabulated(vec![0.0, 1e-3], vec![1.0, 1.0], UnitVector3::x_axis()).unwrap();
        assert!(matches!(
            project(&t, &UnitVector3::y_axis()),
            Err(Error::DirectionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_bad_covariance() {
        let bad = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        assert!(MomentumDistribution::gaussian(Vector3::zeros(), bad).is_err());
        let mut asym = Matrix3::identity();
        asym[(0, 1)] = 0.5;
        assert!(MomentumDistribution::gaussian(Vector3::zeros(), asym).is_err());
    }

    #[test]
    fn non_finite_integrand_reports_node() {
        let d = MomentumDistribution::point(Vector3::zeros());
        let err = expectation(&d, |_| f64::NAN, 4).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn degenerate_axes_collapse() {
        let d = MomentumDistribution::gaussian(
            Vector3::zeros(),
            Matrix3::from_diagonal(&Vector3::new(0.0, 0.0, 1e-6)),
        )
        .unwrap();
        assert_eq!(d.nodes(40).len(), 40);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "delta,weight\n-1e-5,1\n0,2\n1e-5,1\n").unwrap();
        let d = read_tabulated_csv(&path, UnitVector3::x_axis()).unwrap();
        let MomentumDistribution::Tabulated { weights, .. } = d else { panic!() };
        assert_eq!(weights, vec![0.25, 0.5, 0.25]);
    }
}

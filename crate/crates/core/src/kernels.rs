//! Latent domains, latent-position laws, link-probability kernels and their
//! feature maps.
//!
//! A model is a pair ([`LatentModel`], [`KernelModel`]): latent positions are
//! drawn from the law on the domain, and two nodes link with probability
//! given by the kernel. Every kernel here is symmetric with values in
//! `[0, 1]`, and the positive-definite ones factor through an
//! infinite-dimensional feature map whose first few coordinates are
//! available either in closed form (circle) or numerically (Nyström).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bessel::bessel_i_scaled;
use crate::error::{Error, Result};
use crate::expr::ScaleRule;

/// Support of the latent distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    /// Closed interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// The whole real line (untruncated Gaussian reference).
    Line,
    /// Circle of the given radius centred at the origin of the plane.
    Circle { radius: f64 },
    /// Square `[-half_width, half_width]^2`.
    Square { half_width: f64 },
    /// Two-sphere of the given radius in three dimensions.
    Sphere { radius: f64 },
}

impl Domain {
    /// Intrinsic dimension.
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } | Domain::Line | Domain::Circle { .. } => 1,
            Domain::Square { .. } | Domain::Sphere { .. } => 2,
        }
    }

    /// Number of coordinates of a latent point.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Domain::Interval { .. } | Domain::Line => 1,
            Domain::Circle { .. } | Domain::Square { .. } => 2,
            Domain::Sphere { .. } => 3,
        }
    }

    /// Intrinsic volume (length or area).
    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Interval { lo, hi } => hi - lo,
            Domain::Line => f64::INFINITY,
            Domain::Circle { radius } => 2.0 * PI * radius,
            Domain::Square { half_width } => 4.0 * half_width * half_width,
            Domain::Sphere { radius } => 4.0 * PI * radius * radius,
        }
    }

    /// Largest intrinsic distance between two points of the domain.
    pub fn diameter(&self) -> f64 {
        match *self {
            Domain::Interval { lo, hi } => hi - lo,
            Domain::Line => f64::INFINITY,
            Domain::Circle { radius } | Domain::Sphere { radius } => PI * radius,
            Domain::Square { half_width } => 2.0 * half_width * 2f64.sqrt(),
        }
    }

    /// Geodesic distance on curved domains, Euclidean on flat ones.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Domain::Circle { radius } | Domain::Sphere { radius } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                let c = (dot / (radius * radius)).clamp(-1.0, 1.0);
                radius * c.acos()
            }
            _ => euclidean(x, y),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match *self {
            Domain::Interval { lo, hi } => x[0] >= lo - tol && x[0] <= hi + tol,
            Domain::Line => x[0].is_finite(),
            Domain::Circle { radius } | Domain::Sphere { radius } => {
                (x.iter().map(|v| v * v).sum::<f64>().sqrt() - radius).abs() <= tol * radius.max(1.0)
            }
            Domain::Square { half_width } => x.iter().all(|v| v.abs() <= half_width + tol),
        }
    }
}

/// Distribution of latent positions on the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    /// Uniform with respect to intrinsic volume.
    Uniform,
    /// Centred Gaussian with standard deviation `sigma`, restricted to the
    /// domain (1-D domains only).
    Gaussian { sigma: f64 },
}

/// A latent domain with its sampling law and scale parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatentModel {
    pub domain: Domain,
    pub law: Law,
    /// `sigma_n`, `r_n` or `a_n` depending on the example.
    pub scale: f64,
}

impl LatentModel {
    /// Gaussian with standard deviation `sigma`, truncated to `[-sigma^2, sigma^2]`.
    pub fn truncated_gaussian(sigma: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        let t = sigma * sigma;
        Ok(Self {
            domain: Domain::Interval { lo: -t, hi: t },
            law: Law::Gaussian { sigma },
            scale: sigma,
        })
    }

    /// Untruncated Gaussian on the line; the reference measure of the
    /// closed-form RBF spectrum.
    pub fn gaussian_line(sigma: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        Ok(Self {
            domain: Domain::Line,
            law: Law::Gaussian { sigma },
            scale: sigma,
        })
    }

    pub fn uniform_interval(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Self {
            domain: Domain::Interval { lo, hi },
            law: Law::Uniform,
            scale: hi - lo,
        })
    }

    pub fn uniform_circle(radius: f64) -> Result<Self> {
        check_positive("radius", radius)?;
        Ok(Self {
            domain: Domain::Circle { radius },
            law: Law::Uniform,
            scale: radius,
        })
    }

    pub fn uniform_square(half_width: f64) -> Result<Self> {
        check_positive("half width", half_width)?;
        Ok(Self {
            domain: Domain::Square { half_width },
            law: Law::Uniform,
            scale: half_width,
        })
    }

    pub fn uniform_sphere(radius: f64) -> Result<Self> {
        check_positive("radius", radius)?;
        Ok(Self {
            domain: Domain::Sphere { radius },
            law: Law::Uniform,
            scale: radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Truncation point `t` of a truncated Gaussian law.
    pub fn truncation(&self) -> Option<f64> {
        match (self.law, self.domain) {
            (Law::Gaussian { .. }, Domain::Interval { hi, .. }) => Some(hi),
            _ => None,
        }
    }

    pub fn volume(&self) -> f64 {
        self.domain.volume()
    }

    /// Probability mass `1 - 2 Phi(-t / sigma)` kept by a symmetric truncation.
    pub fn retained_mass(&self) -> f64 {
        match (self.law, self.domain) {
            (Law::Gaussian { sigma }, Domain::Interval { lo, hi }) => {
                let z = std_normal();
                z.cdf(hi / sigma) - z.cdf(lo / sigma)
            }
            _ => 1.0,
        }
    }

    /// Inverse CDF of a 1-D law (angle in `[0, 2 pi)` for the circle).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let z = std_normal();
        match (self.law, self.domain) {
            (Law::Gaussian { sigma }, Domain::Interval { lo, hi }) => {
                let a = z.cdf(lo / sigma);
                let b = z.cdf(hi / sigma);
                let x = sigma * z.inverse_cdf(a + p * (b - a));
                Ok(x.clamp(lo, hi))
            }
            (Law::Gaussian { sigma }, Domain::Line) => Ok(sigma * z.inverse_cdf(p)),
            (Law::Uniform, Domain::Interval { lo, hi }) => Ok(lo + p * (hi - lo)),
            (Law::Uniform, Domain::Circle { .. }) => Ok(2.0 * PI * p),
            _ => Err(Error::Unsupported(format!(
                "no 1-D quantile function for {:?} on {:?}",
                self.law, self.domain
            ))),
        }
    }

    /// Maps a 1-D intrinsic coordinate to a latent point.
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        match self.domain {
            Domain::Circle { radius } => vec![radius * t.cos(), radius * t.sin()],
            _ => vec![t],
        }
    }
}

/// Link-probability kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelKind {
    /// `exp(-|x - y|^2 / 2)`.
    GaussianRbf,
    /// `exp(-|x - y|^2 / 2)` restricted to a circle of radius `r`, where it
    /// equals `exp(x.y) / exp(r^2)`.
    CircleHeat,
    /// `exp(x.y) / (1 + exp(x.y))`.
    Logistic,
    /// Scaled constant graphon `rho * g` with `g = 1`.
    GraphonConstant { rho: f64 },
}

/// Closed-form spectrum of the RBF kernel under an untruncated
/// `N(0, sigma^2)` measure: `gamma_k = gamma_1 * ratio^(k-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormSpectrum {
    pub sigma: f64,
    pub gamma1: f64,
    pub ratio: f64,
}

impl ClosedFormSpectrum {
    pub fn rbf(sigma: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        let s2 = sigma * sigma;
        let denom = 1.0 + 2.0 * s2 + (1.0 + 4.0 * s2).sqrt();
        Ok(Self {
            sigma,
            gamma1: (2.0 / denom).sqrt(),
            ratio: 2.0 * s2 / denom,
        })
    }

    /// `gamma_k`, 1-based.
    pub fn gamma(&self, k: usize) -> f64 {
        assert!(k >= 1);
        self.gamma1 * self.ratio.powi(k as i32 - 1)
    }

    /// `sum_k gamma_k^3 = gamma_1^3 / (1 - ratio^3)`.
    pub fn sum_cubes(&self) -> f64 {
        self.gamma1.powi(3) / (1.0 - self.ratio.powi(3))
    }

    /// Tail mass `sum_{k > K} gamma_k`.
    pub fn tail(&self, k: usize) -> f64 {
        self.gamma1 * self.ratio.powi(k as i32) / (1.0 - self.ratio)
    }
}

/// First `k` eigenvalues of the RBF operator under `N(0, sigma^2)`.
pub fn rbf_eigenvalues(sigma: f64, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one eigenvalue".into()));
    }
    let spec = ClosedFormSpectrum::rbf(sigma)?;
    Ok((1..=k).map(|i| spec.gamma(i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelModel {
    pub kind: KernelKind,
    pub spectral: Option<ClosedFormSpectrum>,
}

impl KernelModel {
    pub fn new(kind: KernelKind) -> Self {
        Self { kind, spectral: None }
    }

    #[inline]
    pub fn evaluate(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            KernelKind::GaussianRbf | KernelKind::CircleHeat => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-0.5 * d2).exp()
            }
            KernelKind::Logistic => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                logistic(dot)
            }
            KernelKind::GraphonConstant { rho } => rho,
        }
    }

    /// Distance beyond which the kernel is below `1e-18`, if it decays.
    pub fn cutoff(&self) -> Option<f64> {
        match self.kind {
            KernelKind::GaussianRbf | KernelKind::CircleHeat => Some((2.0 * 18.0 * 10f64.ln()).sqrt()),
            _ => None,
        }
    }
}

/// `e^t / (1 + e^t)`, evaluated without overflow.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Built-in model families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleId {
    /// RBF, Gaussian latent law truncated to `[-sigma^2, sigma^2]`.
    Ex1,
    /// RBF on the uniform circle of radius `r`.
    Ex2,
    /// RBF, uniform on `[0, a]`.
    Ex3,
    /// RBF, uniform on the sphere of radius `r`.
    Ex4,
    /// Logistic kernel, uniform on `[-a, a]` (default `a = 3`).
    Logistic,
    /// RBF, uniform on `[-a, a]^2`.
    Square2D,
    /// Constant graphon scaled by `rho`, uniform on `[0, 1]`.
    Graphon,
}

impl ExampleId {
    pub fn name(&self) -> &'static str {
        match self {
            ExampleId::Ex1 => "ex1",
            ExampleId::Ex2 => "ex2",
            ExampleId::Ex3 => "ex3",
            ExampleId::Ex4 => "ex4",
            ExampleId::Logistic => "logistic",
            ExampleId::Square2D => "square2d",
            ExampleId::Graphon => "graphon",
        }
    }

    pub fn default_scale(&self) -> &'static str {
        match self {
            ExampleId::Ex1 | ExampleId::Ex2 => "n/2000",
            ExampleId::Ex3 => "n/10",
            ExampleId::Ex4 => "sqrt(n)/10",
            ExampleId::Logistic => "3",
            ExampleId::Square2D => "10",
            ExampleId::Graphon => "1/n",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "ex1" | "1" => ExampleId::Ex1,
            "ex2" | "2" => ExampleId::Ex2,
            "ex3" | "3" => ExampleId::Ex3,
            "ex4" | "4" => ExampleId::Ex4,
            "logistic" => ExampleId::Logistic,
            "square2d" | "square" => ExampleId::Square2D,
            "graphon" => ExampleId::Graphon,
            _ => return Err(Error::UnknownExample(s.to_string())),
        })
    }
}

/// Builds the latent/kernel pair of a built-in example with its scale
/// evaluated at `n`.
pub fn make_model(example: ExampleId, n: usize, scale_rule: &ScaleRule) -> Result<(LatentModel, KernelModel)> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("n must be at least 3, got {n}")));
    }
    let s = scale_rule.eval_scale(n)?;
    make_model_with_scale(example, s)
}

/// Same as [`make_model`] with the scale given directly.
pub fn make_model_with_scale(example: ExampleId, s: f64) -> Result<(LatentModel, KernelModel)> {
    check_positive("scale", s)?;
    let rbf = KernelModel::new(KernelKind::GaussianRbf);
    Ok(match example {
        ExampleId::Ex1 => (
            LatentModel::truncated_gaussian(s)?,
            KernelModel {
                kind: KernelKind::GaussianRbf,
                spectral: Some(ClosedFormSpectrum::rbf(s)?),
            },
        ),
        ExampleId::Ex2 => (LatentModel::uniform_circle(s)?, KernelModel::new(KernelKind::CircleHeat)),
        ExampleId::Ex3 => (LatentModel::uniform_interval(0.0, s)?, rbf),
        ExampleId::Ex4 => (LatentModel::uniform_sphere(s)?, rbf),
        ExampleId::Logistic => {
            let mut latent = LatentModel::uniform_interval(-s, s)?;
            latent.scale = s;
            (latent, KernelModel::new(KernelKind::Logistic))
        }
        ExampleId::Square2D => (LatentModel::uniform_square(s)?, rbf),
        ExampleId::Graphon => {
            if s > 1.0 {
                return Err(Error::InvalidParameter(format!("graphon sparsity {s} exceeds 1")));
            }
            (
                LatentModel::uniform_interval(0.0, 1.0)?,
                KernelModel::new(KernelKind::GraphonConstant { rho: s }),
            )
        }
    })
}

/// Truncated feature map: first coordinates of the Mercer map of a kernel.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    pub trunc_dim: usize,
    /// `sum_{k > K}` of the operator eigenvalues, when known.
    pub residual: Option<f64>,
    repr: FeatureRepr,
}

#[derive(Debug, Clone)]
enum FeatureRepr {
    Circle {
        radius: f64,
        /// sqrt of the mode-0 weight, then one weight per harmonic.
        weights: Vec<f64>,
    },
    Nystrom(NystromData),
}

#[derive(Debug, Clone)]
struct NystromData {
    kernel: KernelModel,
    dim: usize,
    /// Grid points, row-major.
    grid: Vec<f64>,
    /// Gram eigenvalues, descending (all `m` of them).
    gram_values: Vec<f64>,
    /// Top-K Gram eigenvectors, m x K.
    vectors: DMatrix<f64>,
}

impl FeatureMap {
    /// Feature coordinates of a latent point.
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        match &self.repr {
            FeatureRepr::Circle { weights, .. } => {
                let theta = x[1].atan2(x[0]);
                circle_coordinates(weights, self.trunc_dim, theta)
            }
            FeatureRepr::Nystrom(d) => {
                let m = d.gram_values.len();
                let top = d.gram_values[0].max(0.0);
                let mut out = vec![0.0; self.trunc_dim];
                let kx: Vec<f64> = (0..m)
                    .map(|i| d.kernel.evaluate(x, &d.grid[i * d.dim..(i + 1) * d.dim]))
                    .collect();
                for (k, o) in out.iter_mut().enumerate() {
                    let mu = d.gram_values[k];
                    if mu > 1e-12 * top {
                        let s: f64 = kx.iter().enumerate().map(|(i, &v)| v * d.vectors[(i, k)]).sum();
                        *o = s / mu.sqrt();
                    }
                }
                out
            }
        }
    }

    /// Circle coordinates at angle `theta`.
    pub fn coordinates_at_angle(&self, theta: f64) -> Option<Vec<f64>> {
        match &self.repr {
            FeatureRepr::Circle { weights, .. } => Some(circle_coordinates(weights, self.trunc_dim, theta)),
            FeatureRepr::Nystrom(_) => None,
        }
    }

    /// Operator eigenvalue estimates (Gram eigenvalues divided by the grid size).
    pub fn operator_eigenvalues(&self) -> Vec<f64> {
        match &self.repr {
            FeatureRepr::Circle { weights, .. } => {
                let mut v = vec![weights[0] * weights[0]];
                for w in &weights[1..] {
                    let lam = 0.5 * w * w;
                    v.push(lam);
                    v.push(lam);
                }
                v.truncate(self.trunc_dim);
                v
            }
            FeatureRepr::Nystrom(d) => {
                let m = d.gram_values.len() as f64;
                d.gram_values.iter().map(|&g| g / m).collect()
            }
        }
    }

    /// Nyström grid and the exact feature coordinates on it (`m x K`).
    pub fn grid_features(&self) -> Option<(Vec<Vec<f64>>, DMatrix<f64>)> {
        match &self.repr {
            FeatureRepr::Nystrom(d) => {
                let m = d.gram_values.len();
                let pts = (0..m).map(|i| d.grid[i * d.dim..(i + 1) * d.dim].to_vec()).collect();
                let mut feats = d.vectors.clone();
                for k in 0..self.trunc_dim {
                    let s = d.gram_values[k].max(0.0).sqrt();
                    feats.column_mut(k).scale_mut(s);
                }
                Some((pts, feats))
            }
            FeatureRepr::Circle { .. } => None,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match &self.repr {
            FeatureRepr::Circle { radius, .. } => Some(*radius),
            FeatureRepr::Nystrom(_) => None,
        }
    }
}

fn circle_coordinates(weights: &[f64], k: usize, theta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k);
    out.push(weights[0]);
    for (m, w) in weights.iter().enumerate().skip(1) {
        let a = m as f64 * theta;
        out.push(w * a.cos());
        out.push(w * a.sin());
    }
    out.truncate(k);
    out
}

/// Fourier–Bessel feature map of the RBF kernel on the circle of radius
/// `r`: `e^{-r^2/2} (sqrt(I_0), sqrt(2 I_1) cos t, sqrt(2 I_1) sin t, ...)`
/// evaluated at `r^2`. `k` must be odd and at least 3.
pub fn circle_feature_map(radius: f64, k: usize) -> Result<FeatureMap> {
    check_positive("radius", radius)?;
    if k < 3 || k % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "circle feature dimension must be odd and >= 3, got {k}"
        )));
    }
    let x = radius * radius;
    let harmonics = (k - 1) / 2;
    let mut weights = Vec::with_capacity(harmonics + 1);
    weights.push(bessel_i_scaled(0, x).sqrt());
    for m in 1..=harmonics {
        weights.push((2.0 * bessel_i_scaled(m as u32, x)).sqrt());
    }
    let captured: f64 = weights.iter().map(|w| w * w).sum();
    Ok(FeatureMap {
        trunc_dim: k,
        residual: Some((1.0 - captured).max(0.0)),
        repr: FeatureRepr::Circle { radius, weights },
    })
}

/// Deterministic equal-mass grid of `m` points for the latent law.
///
/// 1-D laws use midpoint quantiles; the square uses a tensor grid of
/// `floor(sqrt(m))^2` cell centres; the sphere uses a Fibonacci lattice.
pub fn equal_mass_grid(latent: &LatentModel, m: usize) -> Result<(Vec<f64>, usize)> {
    let dim = latent.domain.ambient_dim();
    match latent.domain {
        Domain::Square { half_width } => {
            let g = (m as f64).sqrt().floor() as usize;
            let mut pts = Vec::with_capacity(g * g * 2);
            for i in 0..g {
                for j in 0..g {
                    pts.push(-half_width + (i as f64 + 0.5) / g as f64 * 2.0 * half_width);
                    pts.push(-half_width + (j as f64 + 0.5) / g as f64 * 2.0 * half_width);
                }
            }
            Ok((pts, dim))
        }
        Domain::Sphere { radius } => {
            let golden = PI * (3.0 - 5f64.sqrt());
            let mut pts = Vec::with_capacity(m * 3);
            for i in 0..m {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                let rho = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                pts.extend([radius * rho * phi.cos(), radius * rho * phi.sin(), radius * z]);
            }
            Ok((pts, dim))
        }
        _ => {
            let mut pts = Vec::with_capacity(m * dim);
            for i in 0..m {
                let t = latent.quantile((i as f64 + 0.5) / m as f64)?;
                pts.extend(latent.point_at(t));
            }
            Ok((pts, dim))
        }
    }
}

/// Gram matrix of the kernel over row-major points.
pub fn gram_matrix(kernel: &KernelModel, pts: &[f64], dim: usize) -> DMatrix<f64> {
    let m = pts.len() / dim;
    DMatrix::from_fn(m, m, |i, j| kernel.evaluate(&pts[i * dim..(i + 1) * dim], &pts[j * dim..(j + 1) * dim]))
}

/// Nyström approximation of the Mercer map over an equal-mass grid of
/// `grid_size` points, keeping the top `k` coordinates.
pub fn nystrom_features(latent: &LatentModel, kernel: &KernelModel, grid_size: usize, k: usize) -> Result<FeatureMap> {
    if k == 0 || grid_size < k {
        return Err(Error::InvalidParameter(format!(
            "need grid size >= K >= 1, got m = {grid_size}, K = {k}"
        )));
    }
    let (grid, dim) = equal_mass_grid(latent, grid_size)?;
    let m = grid.len() / dim;
    if m < k {
        return Err(Error::InvalidParameter(format!("grid of {m} points is smaller than K = {k}")));
    }
    let gram = gram_matrix(kernel, &grid, dim);
    let (values, vectors) = sorted_symmetric_eigen(gram)?;
    let top = vectors.columns(0, k).into_owned();
    let m_f = m as f64;
    let residual = Some(values[k..].iter().map(|v| v.max(0.0) / m_f).sum());
    Ok(FeatureMap {
        trunc_dim: k,
        residual,
        repr: FeatureRepr::Nystrom(NystromData {
            kernel: *kernel,
            dim,
            grid,
            gram_values: values,
            vectors: top,
        }),
    })
}

/// Dense symmetric eigendecomposition, eigenvalues sorted descending.
pub(crate) fn sorted_symmetric_eigen(a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decomposition("matrix has non-finite entries".into()));
    }
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Decomposition("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Length of the image of a latent polyline under a feature map.
pub fn feature_polyline_length(map: &FeatureMap, points: &[Vec<f64>]) -> f64 {
    let feats: Vec<Vec<f64>> = points.iter().map(|p| map.coordinates(p)).collect();
    feats.windows(2).map(|w| euclidean(&w[0], &w[1])).sum()
}

pub(crate) fn euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub(crate) fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

//! Gaussian mixture model of forecast errors.
//!
//! A joint mixture is fitted per period from historical error samples. The
//! mixture family is closed under affine maps, so projecting the joint error
//! onto a constraint coefficient vector yields a univariate mixture whose
//! quantiles convert chance constraints into deterministic margins. Quantiles
//! are found by a bracketed Newton iteration on the mixture CDF with a
//! bisection safeguard.

use crate::kmeans;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use statrs::function::erf;
use thiserror::Error;

const LN_2PI: f64 = 1.8378770664093453;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal inverse CDF.
pub fn std_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

#[derive(Debug, Error)]
pub enum UncertError {
    #[error("need at least {need} samples for dimension {dim}, got {got}")]
    TooFewSamples { need: usize, dim: usize, got: usize },
    #[error("component count must be >= 1 and <= sample count")]
    BadComponentCount,
    #[error("weights must be positive and sum to 1 (sum = {0})")]
    BadWeights(f64),
    #[error("covariance {component} is not positive semidefinite (min eigenvalue {min_eig})")]
    NonPsd { component: usize, min_eig: f64 },
    #[error("projected variance {0} is negative beyond tolerance")]
    NegativeProjectedVariance(f64),
    #[error("dimension mismatch: projection vector has {got}, mixture has {want}")]
    DimMismatch { got: usize, want: usize },
    #[error("quantile level must lie in (0, 1), got {0}")]
    QuantileDomain(f64),
    #[error("negative standard deviation {0} in univariate mixture")]
    NegativeStd(f64),
}

/// Adds a ridge to the diagonal until the matrix factors, starting at
/// `1e-8 * trace / dim` and escalating tenfold.
pub(crate) fn ridge_regularize(c: &mut DMatrix<f64>) {
    let d = c.nrows();
    let mut eps = 1e-8 * (1.0 + c.trace().abs()) / d as f64;
    for _ in 0..40 {
        if c.clone().cholesky().is_some() {
            return;
        }
        for i in 0..d {
            c[(i, i)] += eps;
        }
        eps *= 10.0;
    }
}

/// Joint Gaussian mixture over the stacked error vector (renewable-unit
/// errors first, then load errors; see the model layout).
#[derive(Clone, Debug)]
pub struct Gmm {
    weights: Vec<f64>,
    means: Vec<DVector<f64>>,
    covs: Vec<DMatrix<f64>>,
    /// Per-component sampling factor A with A A' = cov.
    factors: Vec<DMatrix<f64>>,
}

impl Gmm {
    /// Validates weights and positive semidefiniteness (eigenvalues above
    /// -1e-10, scaled) and precomputes sampling factors.
    pub fn new(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covs: Vec<DMatrix<f64>>,
    ) -> Result<Gmm, UncertError> {
        let n = weights.len();
        if n == 0 || means.len() != n || covs.len() != n {
            return Err(UncertError::BadComponentCount);
        }
        let wsum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w <= 0.0) || (wsum - 1.0).abs() > 1e-9 {
            return Err(UncertError::BadWeights(wsum));
        }
        let mut factors = Vec::with_capacity(n);
        for (k, cov) in covs.iter().enumerate() {
            let sym = 0.5 * (cov + cov.transpose());
            let eig = sym.clone().symmetric_eigen();
            let min_eig = eig.eigenvalues.min();
            if min_eig < -1e-10 * (1.0 + sym.trace().abs()) {
                return Err(UncertError::NonPsd { component: k, min_eig });
            }
            if let Some(chol) = sym.clone().cholesky() {
                factors.push(chol.l());
            } else {
                // Semidefinite: clamped eigen square root keeps point masses
                // exact instead of smearing them with ridge noise.
                let mut lam = eig.eigenvalues.clone();
                lam.iter_mut().for_each(|l| *l = l.max(0.0).sqrt());
                factors.push(&eig.eigenvectors * DMatrix::from_diagonal(&lam));
            }
        }
        Ok(Gmm {
            weights,
            means,
            covs,
            factors,
        })
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[DVector<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[DMatrix<f64>] {
        &self.covs
    }

    /// Mixture mean.
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim());
        for (w, mu) in self.weights.iter().zip(&self.means) {
            m += mu * *w;
        }
        m
    }

    /// Projects the mixture onto `a`: the scalar `a . e` is again a mixture
    /// with unchanged weights, means `a . mu_j` and variances `a' S_j a`.
    pub fn project(&self, a: &DVector<f64>) -> Result<UnivariateGmm, UncertError> {
        if a.len() != self.dim() {
            return Err(UncertError::DimMismatch {
                got: a.len(),
                want: self.dim(),
            });
        }
        let mut means = Vec::with_capacity(self.n_components());
        let mut stds = Vec::with_capacity(self.n_components());
        for (mu, cov) in self.means.iter().zip(&self.covs) {
            means.push(a.dot(mu));
            let var = (cov * a).dot(a);
            if var < -1e-12 {
                return Err(UncertError::NegativeProjectedVariance(var));
            }
            stds.push(var.max(0.0).sqrt());
        }
        UnivariateGmm::new(self.weights.clone(), means, stds)
    }

    /// Draws `n` error vectors (rows), reproducibly for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim();
        let mut out = DMatrix::zeros(n, d);
        let mut z = DVector::zeros(d);
        for i in 0..n {
            let k = self.pick_component(rng.gen::<f64>());
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let x = &self.means[k] + &self.factors[k] * &z;
            out.row_mut(i).copy_from(&x.transpose());
        }
        out
    }

    fn pick_component(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return k;
            }
        }
        self.weights.len() - 1
    }
}

/// Scalar Gaussian mixture (a projection of the joint error).
#[derive(Clone, Debug)]
pub struct UnivariateGmm {
    weights: Vec<f64>,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl UnivariateGmm {
    pub fn new(weights: Vec<f64>, means: Vec<f64>, stds: Vec<f64>) -> Result<Self, UncertError> {
        let wsum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w <= 0.0) || (wsum - 1.0).abs() > 1e-9 {
            return Err(UncertError::BadWeights(wsum));
        }
        if let Some(&s) = stds.iter().find(|&&s| s < 0.0) {
            return Err(UncertError::NegativeStd(s));
        }
        Ok(UnivariateGmm { weights, means, stds })
    }

    /// Point mass at zero (the zero projection).
    pub fn point_mass(at: f64) -> Self {
        UnivariateGmm {
            weights: vec![1.0],
            means: vec![at],
            stds: vec![0.0],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn mean(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.means)
            .map(|(w, m)| w * m)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.weights
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(w, (mu, s))| w * (s * s + (mu - m) * (mu - m)))
            .sum()
    }

    /// Mixture CDF; zero-sigma components contribute a unit step at the mean.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for ((w, mu), s) in self.weights.iter().zip(&self.means).zip(&self.stds) {
            acc += if *s > 0.0 {
                w * std_normal_cdf((x - mu) / s)
            } else if x >= *mu {
                *w
            } else {
                0.0
            };
        }
        acc.clamp(0.0, 1.0)
    }

    /// Mixture density. Point-mass components carry no density; their mass
    /// shows up only in the CDF, and the quantile search falls back to
    /// bisection across the jump.
    pub fn pdf(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for ((w, mu), s) in self.weights.iter().zip(&self.means).zip(&self.stds) {
            if *s > 0.0 {
                acc += w * std_normal_pdf((x - mu) / s) / s;
            }
        }
        acc
    }

    /// Quantile at level `alpha` by Newton iteration on the CDF, started from
    /// the moment-matched Gaussian guess and safeguarded by a maintained
    /// bracket. Converges to |cdf(q) - alpha| <= 1e-9; on flat or jumping CDF
    /// segments it returns the infimum of `{x : cdf(x) >= alpha}`.
    pub fn quantile(&self, alpha: f64) -> Result<f64, UncertError> {
        const EPS: f64 = 1e-9;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(UncertError::QuantileDomain(alpha));
        }
        // Guaranteed bracket: the mixture has no visible mass outside it.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for (mu, s) in self.means.iter().zip(&self.stds) {
            lo = lo.min(mu - 10.0 * s);
            hi = hi.max(mu + 10.0 * s);
        }
        if self.cdf(lo) >= alpha {
            // A point mass at the lowest support point already covers alpha.
            return Ok(lo);
        }
        if lo == hi {
            return Ok(lo);
        }

        let mut q = self.mean() + std_normal_quantile(alpha) * self.variance().sqrt();
        if !(q > lo && q < hi) {
            q = 0.5 * (lo + hi);
        }
        let width_tol = 1e-15 * (1.0 + lo.abs().max(hi.abs()));
        for _ in 0..256 {
            let f = self.cdf(q) - alpha;
            let dens = self.pdf(q);
            if f.abs() <= EPS && dens > 1e-12 {
                return Ok(q);
            }
            if f < 0.0 {
                lo = q;
            } else {
                hi = q;
            }
            if hi - lo <= width_tol {
                return Ok(hi);
            }
            let newton = if dens > 1e-300 { q - f / dens } else { f64::NAN };
            q = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Ok(hi)
    }
}

/// Per-period mixtures over a study horizon, indexed by period.
pub type HorizonGmms = Vec<Gmm>;

#[derive(Clone, Debug)]
pub struct EmOptions {
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            max_iters: 500,
            rel_tol: 1e-8,
            seed: 1,
        }
    }
}

/// Fit result: the mixture, the log-likelihood trace (nondecreasing), and the
/// Bayesian information criterion of the fit.
#[derive(Clone, Debug)]
pub struct EmFit {
    pub gmm: Gmm,
    pub log_likelihood: Vec<f64>,
    pub converged: bool,
    pub bic: f64,
}

struct LogGauss {
    mean: DVector<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    log_norm: f64,
}

impl LogGauss {
    fn new(mean: &DVector<f64>, cov: &DMatrix<f64>) -> LogGauss {
        let d = mean.len() as f64;
        let mut c = cov.clone();
        if c.clone().cholesky().is_none() {
            log::warn!("singular covariance during E-step; ridge-regularizing");
            ridge_regularize(&mut c);
        }
        let chol = c.cholesky().expect("regularized covariance must factor");
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
        LogGauss {
            mean: mean.clone(),
            chol,
            log_norm: -0.5 * (d * LN_2PI + log_det),
        }
    }

    fn log_pdf(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let y = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("triangular solve");
        self.log_norm - 0.5 * y.norm_squared()
    }
}

/// Expectation-maximization fit of an `n_components` mixture to historical
/// error rows (one observation per row). Requires at least `10 * dim`
/// samples. Singular covariances are ridge-regularized with a warning;
/// emptied components are reseeded from a random sample.
pub fn fit_em(
    samples: &DMatrix<f64>,
    n_components: usize,
    opts: &EmOptions,
) -> Result<EmFit, UncertError> {
    let (n, d) = (samples.nrows(), samples.ncols());
    if n_components < 1 || n_components > n {
        return Err(UncertError::BadComponentCount);
    }
    if n < 10 * d {
        return Err(UncertError::TooFewSamples {
            need: 10 * d,
            dim: d,
            got: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let rows: Vec<DVector<f64>> = (0..n).map(|i| samples.row(i).transpose()).collect();

    let mut global_mean = DVector::zeros(d);
    for r in &rows {
        global_mean += r;
    }
    global_mean /= n as f64;
    let mut global_cov = DMatrix::zeros(d, d);
    for r in &rows {
        let dv = r - &global_mean;
        global_cov += &dv * dv.transpose();
    }
    global_cov /= n as f64;
    ridge_regularize(&mut global_cov);

    let (centers, labels) = kmeans::kmeans(&rows, n_components, &mut rng, 25);
    let mut weights = vec![0.0f64; n_components];
    for &l in &labels {
        weights[l] += 1.0 / n as f64;
    }
    weights.iter_mut().for_each(|w| *w = w.max(1e-3));
    let wsum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= wsum);
    let mut means = centers;
    let mut covs = vec![global_cov.clone(); n_components];

    let mut ll_trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut resp = DMatrix::zeros(n, n_components);
    let mut logs = vec![0.0f64; n_components];
    for _ in 0..opts.max_iters {
        let comps: Vec<LogGauss> = (0..n_components)
            .map(|k| LogGauss::new(&means[k], &covs[k]))
            .collect();
        let mut ll = 0.0;
        for i in 0..n {
            for k in 0..n_components {
                logs[k] = weights[k].ln() + comps[k].log_pdf(&rows[i]);
            }
            let mx = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = mx + logs.iter().map(|l| (l - mx).exp()).sum::<f64>().ln();
            ll += lse;
            for k in 0..n_components {
                resp[(i, k)] = (logs[k] - lse).exp();
            }
        }
        if let Some(&prev) = ll_trace.last() {
            if ll - prev <= opts.rel_tol * (1.0 + ll.abs()) {
                ll_trace.push(ll);
                converged = true;
                break;
            }
        }
        ll_trace.push(ll);

        for k in 0..n_components {
            let nk: f64 = (0..n).map(|i| resp[(i, k)]).sum();
            if nk < 1e-8 * n as f64 {
                log::warn!("EM component {k} emptied; reseeding from a random sample");
                means[k] = rows[rng.gen_range(0..n)].clone();
                covs[k] = global_cov.clone();
                weights[k] = 1.0 / n as f64;
                continue;
            }
            weights[k] = nk / n as f64;
            let mut mu = DVector::zeros(d);
            for i in 0..n {
                mu += &rows[i] * resp[(i, k)];
            }
            mu /= nk;
            let mut cov = DMatrix::zeros(d, d);
            for i in 0..n {
                let dv = &rows[i] - &mu;
                cov += &dv * dv.transpose() * resp[(i, k)];
            }
            cov /= nk;
            means[k] = mu;
            covs[k] = cov;
        }
        let wsum: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= wsum);
    }

    let final_ll = *ll_trace.last().expect("at least one EM iteration");
    let k_params = (n_components - 1) + n_components * d + n_components * d * (d + 1) / 2;
    let bic = -2.0 * final_ll + (k_params as f64) * (n as f64).ln();
    for c in covs.iter_mut() {
        let sym = 0.5 * (&*c + c.transpose());
        *c = sym;
        if c.clone().cholesky().is_none() {
            ridge_regularize(c);
        }
    }
    let gmm = Gmm::new(weights, means, covs)?;
    Ok(EmFit {
        gmm,
        log_likelihood: ll_trace,
        converged,
        bic,
    })
}

/// Fits every candidate component count and keeps the minimum-BIC model.
pub fn fit_em_auto(
    samples: &DMatrix<f64>,
    candidates: &[usize],
    opts: &EmOptions,
) -> Result<EmFit, UncertError> {
    let mut best: Option<EmFit> = None;
    for &k in candidates {
        let fit = fit_em(samples, k, opts)?;
        if best.as_ref().map_or(true, |b| fit.bic < b.bic) {
            best = Some(fit);
        }
    }
    best.ok_or(UncertError::BadComponentCount)
}

//! Damped Gauss–Newton (Levenberg–Marquardt) engine and the two fits built on
//! it: the per-`N` fit of the Fisher information's `m`-dependence and the
//! power-law fit of its coefficients in `N`.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fisher::{grid_scan, FisherGrid, FisherMethod, FisherResult, GridMethod, Prefactor};

/// Local quadratic model of an objective at a point: its value, the
/// Gauss–Newton curvature `JᵀJ` and the gradient `Jᵀr`.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub merit: f64,
    pub curvature: DMatrix<f64>,
    pub gradient: DVector<f64>,
}

/// Anything the damped Gauss–Newton engine can minimize.
///
/// For ordinary least squares `merit = ½‖r‖²`, `curvature = JᵀJ` and
/// `gradient = Jᵀr`. Other objectives (e.g. a Poisson negative
/// log-likelihood) supply their own expected-information curvature, which
/// turns the iteration into Fisher scoring.
pub trait Objective {
    fn n_params(&self) -> usize;

    fn local_model(&self, params: &[f64]) -> LocalModel;

    fn merit(&self, params: &[f64]) -> f64;

    /// Project a trial point back into the feasible set.
    fn constrain(&self, _params: &mut [f64]) {}
}

#[derive(Debug, Clone)]
pub struct LevenbergMarquardt {
    pub max_iterations: usize,
    /// Stop once `max |Δθᵢ| / |θᵢ| <` this.
    pub step_tolerance: f64,
    pub initial_damping: f64,
}

impl Default for LevenbergMarquardt {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tolerance: 1e-10,
            initial_damping: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub params: Vec<f64>,
    pub merit: f64,
    pub iterations: usize,
    /// Gauss–Newton curvature at the solution.
    pub curvature: DMatrix<f64>,
}

/// Numerical rank of a symmetric positive semidefinite matrix.
fn psd_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    if max <= 0.0 || !max.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&s| s > max * 1e-13).count()
}

/// Largest component of `step` relative to its parameter; parameters near
/// zero are measured against the largest parameter instead.
fn relative_step(step: &DVector<f64>, params: &[f64]) -> f64 {
    let floor = params.iter().fold(0.0f64, |a, p| a.max(p.abs())) * 1e-10;
    step.iter()
        .zip(params)
        .map(|(d, p)| d.abs() / p.abs().max(floor).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

impl LevenbergMarquardt {
    pub fn minimize<O: Objective + ?Sized>(&self, objective: &O, init: &[f64]) -> Result<Minimum> {
        let n = objective.n_params();
        assert_eq!(init.len(), n, "initial guess has the wrong dimension");
        let mut x = init.to_vec();
        objective.constrain(&mut x);
        let mut local = objective.local_model(&x);
        let rank = psd_rank(&local.curvature);
        if rank < n {
            return Err(Error::RankDeficient { rank, params: n });
        }
        let mut damping = self.initial_damping;

        for iteration in 1..=self.max_iterations {
            if local.gradient.iter().all(|g| *g == 0.0) {
                return Ok(self.finish(x, local, iteration));
            }
            let diag_floor = local.curvature.diagonal().max() * 1e-15;
            let mut damped = local.curvature.clone();
            for i in 0..n {
                damped[(i, i)] += damping * local.curvature[(i, i)].max(diag_floor);
            }
            let step = match damped.cholesky() {
                Some(ch) => ch.solve(&(-&local.gradient)),
                None => {
                    damping *= 10.0;
                    continue;
                }
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
            objective.constrain(&mut trial);
            let taken = DVector::from_iterator(n, trial.iter().zip(&x).map(|(t, p)| t - p));
            let small = relative_step(&taken, &x) < self.step_tolerance;

            let merit = objective.merit(&trial);
            if merit.is_finite() && merit <= local.merit {
                x = trial;
                local = objective.local_model(&x);
                damping = (damping / 3.0).max(1e-12);
                if small {
                    return Ok(self.finish(x, local, iteration));
                }
            } else if small {
                // Rejected only at rounding level: already at the minimum.
                return Ok(self.finish(x, local, iteration));
            } else {
                damping *= 4.0;
            }
        }
        Err(Error::IterationLimit {
            iterations: self.max_iterations,
            last: x,
        })
    }

    fn finish(&self, params: Vec<f64>, local: LocalModel, iterations: usize) -> Minimum {
        Minimum {
            params,
            merit: local.merit,
            iterations,
            curvature: local.curvature,
        }
    }
}

/// A model `y = f(x; θ)` with its parameter gradient.
pub trait Model: Sync {
    fn n_params(&self) -> usize;
    fn value(&self, x: f64, params: &[f64]) -> f64;
    fn gradient(&self, x: f64, params: &[f64], out: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

impl Observation {
    pub fn unweighted(x: f64, y: f64) -> Self {
        Self { x, y, weight: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct LeastSquaresFit {
    pub params: Vec<f64>,
    /// `s² (JᵀWJ)⁻¹` with `s² = residual_norm / (n − p)`.
    pub covariance: DMatrix<f64>,
    /// Weighted sum of squared residuals.
    pub residual_norm: f64,
    pub iterations: usize,
}

impl LeastSquaresFit {
    pub fn std_errors(&self) -> Vec<f64> {
        (0..self.params.len()).map(|i| self.covariance[(i, i)].sqrt()).collect()
    }
}

struct WeightedResiduals<'a, M: Model> {
    model: &'a M,
    data: &'a [Observation],
}

impl<M: Model> WeightedResiduals<'_, M> {
    fn residual(&self, o: &Observation, params: &[f64]) -> f64 {
        o.weight.sqrt() * (o.y - self.model.value(o.x, params))
    }
}

impl<M: Model> Objective for WeightedResiduals<'_, M> {
    fn n_params(&self) -> usize {
        self.model.n_params()
    }

    fn local_model(&self, params: &[f64]) -> LocalModel {
        let p = self.n_params();
        let mut curvature = DMatrix::zeros(p, p);
        let mut gradient = DVector::zeros(p);
        let mut grad = vec![0.0; p];
        let mut merit = 0.0;
        for o in self.data {
            let r = self.residual(o, params);
            self.model.gradient(o.x, params, &mut grad);
            // ∂r/∂θ = −√w ∂f/∂θ
            let sw = o.weight.sqrt();
            for i in 0..p {
                let ji = -sw * grad[i];
                gradient[i] += ji * r;
                for k in 0..p {
                    curvature[(i, k)] += ji * -sw * grad[k];
                }
            }
            merit += 0.5 * r * r;
        }
        LocalModel {
            merit,
            curvature,
            gradient,
        }
    }

    fn merit(&self, params: &[f64]) -> f64 {
        self.data.iter().map(|o| 0.5 * self.residual(o, params).powi(2)).sum()
    }
}

/// Weighted nonlinear least squares for `model` on `data` from `init`.
pub fn least_squares<M: Model>(model: &M, data: &[Observation], init: &[f64]) -> Result<LeastSquaresFit> {
    let p = model.n_params();
    if data.len() < p {
        return Err(Error::Domain(format!("{} observations for {p} parameters", data.len())));
    }
    if let Some(bad) = data.iter().find(|o| !(o.weight.is_finite() && o.weight > 0.0)) {
        return Err(Error::Domain(format!(
            "weights must be finite and positive, got {}",
            bad.weight
        )));
    }
    let problem = WeightedResiduals { model, data };
    let min = LevenbergMarquardt::default().minimize(&problem, init)?;
    let residual_norm = 2.0 * min.merit;
    let inverse = min
        .curvature
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficient {
            rank: psd_rank(&min.curvature),
            params: p,
        })?
        .inverse();
    let dof = data.len().saturating_sub(p).max(1) as f64;
    Ok(LeastSquaresFit {
        params: min.params,
        covariance: inverse * (residual_norm / dof),
        residual_norm,
        iterations: min.iterations,
    })
}

/// Coefficients of `(1 + (m−1)/N)⁻¹ (2/N²) (a m + b − c √m)` for one `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitModelParams {
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residual_norm: f64,
}

struct MDependence {
    n: f64,
}

impl MDependence {
    fn basis(&self, m: f64) -> [f64; 3] {
        let s = 2.0 / (self.n * self.n) / (1.0 + (m - 1.0) / self.n);
        [s * m, s, -s * m.sqrt()]
    }
}

impl Model for MDependence {
    fn n_params(&self) -> usize {
        3
    }

    fn value(&self, m: f64, p: &[f64]) -> f64 {
        let b = self.basis(m);
        b[0] * p[0] + b[1] * p[1] + b[2] * p[2]
    }

    fn gradient(&self, m: f64, _p: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.basis(m));
    }
}

/// Fit `(a, b, c)` to reduced Fisher values `(m, F/C)` for fixed `N`,
/// starting from the lower-bound coefficients `(N³/8, N³/8, N³/4)`.
pub fn fit_m_dependence(n_sources: usize, fisher_values: &[(u32, f64)]) -> Result<FitModelParams> {
    let n = n_sources as f64;
    let data: Vec<Observation> = fisher_values
        .iter()
        .map(|&(m, f)| Observation::unweighted(m as f64, f))
        .collect();
    let cube = n * n * n;
    let fit = least_squares(&MDependence { n }, &data, &[cube / 8.0, cube / 8.0, cube / 4.0])?;
    Ok(FitModelParams {
        n: n_sources,
        a: fit.params[0],
        b: fit.params[1],
        c: fit.params[2],
        residual_norm: fit.residual_norm,
    })
}

/// `f(N) = p N^e`
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLawParams {
    pub p: f64,
    pub e: f64,
}

impl PowerLawParams {
    pub fn eval(&self, x: f64) -> f64 {
        self.p * x.powf(self.e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawFit {
    pub params: PowerLawParams,
    /// Row-major 2×2 covariance of `(p, e)`.
    pub covariance: [[f64; 2]; 2],
    pub residual_norm: f64,
}

struct PowerLaw;

impl Model for PowerLaw {
    fn n_params(&self) -> usize {
        2
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x.powf(p[1])
    }

    fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
        let xe = x.powf(p[1]);
        out[0] = xe;
        out[1] = p[0] * xe * x.ln();
    }
}

/// Power-law fit on the original scale, initialized from the log-log line.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::Domain(format!(
            "power-law fit needs >= 3 points, got {}",
            points.len()
        )));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::Domain(format!(
            "power-law fit needs positive data, got ({x}, {y})"
        )));
    }
    let k = points.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::RankDeficient { rank: 1, params: 2 });
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let e0 = sxy / sxx;
    let p0 = (my - e0 * mx).exp();

    let data: Vec<Observation> = points.iter().map(|&(x, y)| Observation::unweighted(x, y)).collect();
    let fit = least_squares(&PowerLaw, &data, &[p0, e0])?;
    let c = &fit.covariance;
    Ok(PowerLawFit {
        params: PowerLawParams {
            p: fit.params[0],
            e: fit.params[1],
        },
        covariance: [[c[(0, 0)], c[(0, 1)]], [c[(1, 0)], c[(1, 1)]]],
        residual_norm: fit.residual_norm,
    })
}

/// Power laws for `a(N)`, `b(N)`, `c(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitTable {
    pub a: PowerLawParams,
    pub b: PowerLawParams,
    pub c: PowerLawParams,
}

/// Fisher information from the fitted table:
/// `C (1 + (m−1)/N)⁻¹ (2/N²) (a(N) m + b(N) − c(N) √m)`.
pub fn fit_model_fisher(n_sources: usize, order: u32, table: &FitTable, prefactor: &Prefactor) -> FisherResult {
    let n = n_sources as f64;
    let coeffs = [table.a.eval(n), table.b.eval(n), table.c.eval(n)];
    let basis = MDependence { n }.basis(order as f64);
    let reduced = basis.iter().zip(coeffs).map(|(b, c)| b * c).sum();
    FisherResult::from_reduced(reduced, prefactor, FisherMethod::FitModel)
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub n_range: (usize, usize),
    pub m_range: (u32, u32),
    pub per_n: Vec<FitModelParams>,
    pub a: PowerLawFit,
    pub b: PowerLawFit,
    pub c: PowerLawFit,
}

impl FitReport {
    pub fn table(&self) -> FitTable {
        FitTable {
            a: self.a.params,
            b: self.b.params,
            c: self.c.params,
        }
    }
}

/// Integral grid, then one `m`-dependence fit per `N`, then power laws in `N`.
pub fn run_fit_pipeline(
    n_range: RangeInclusive<usize>,
    m_range: RangeInclusive<u32>,
) -> Result<(FisherGrid, FitReport)> {
    let grid = grid_scan(n_range, m_range, &GridMethod::Integral)?;
    let report = fit_grid(&grid)?;
    Ok((grid, report))
}

/// Fit stages of [`run_fit_pipeline`] on an existing integral grid.
pub fn fit_grid(grid: &FisherGrid) -> Result<FitReport> {
    let (n_lo, n_hi) = grid.n_range;
    let (m_lo, m_hi) = grid.m_range;
    let per_n = (n_lo..=n_hi)
        .into_par_iter()
        .map(|n| {
            let values: Vec<(u32, f64)> = (m_lo..=m_hi).map(|m| (m, grid.get(n, m).expect("in range"))).collect();
            fit_m_dependence(n, &values)
        })
        .collect::<Result<Vec<_>>>()?;
    let series =
        |f: fn(&FitModelParams) -> f64| -> Vec<(f64, f64)> { per_n.iter().map(|p| (p.n as f64, f(p))).collect() };
    let a = fit_power_law(&series(|p| p.a))?;
    let b = fit_power_law(&series(|p| p.b))?;
    let c = fit_power_law(&series(|p| p.c))?;
    Ok(FitReport {
        n_range: grid.n_range,
        m_range: grid.m_range,
        per_n,
        a,
        b,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{fisher_analytic_n2, fisher_analytic_n3};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    struct Linear;
    impl Model for Linear {
        fn n_params(&self) -> usize {
            1
        }
        fn value(&self, x: f64, p: &[f64]) -> f64 {
            p[0] * x
        }
        fn gradient(&self, x: f64, _p: &[f64], out: &mut [f64]) {
            out[0] = x;
        }
    }

    struct Quadratic;
    impl Model for Quadratic {
        fn n_params(&self) -> usize {
            3
        }
        fn value(&self, x: f64, p: &[f64]) -> f64 {
            p[0] + p[1] * x + p[2] * x * x
        }
        fn gradient(&self, x: f64, _p: &[f64], out: &mut [f64]) {
            out.copy_from_slice(&[1.0, x, x * x]);
        }
    }

    /// `y = (a + b) x`: the two parameters cannot be separated.
    struct Redundant;
    impl Model for Redundant {
        fn n_params(&self) -> usize {
            2
        }
        fn value(&self, x: f64, p: &[f64]) -> f64 {
            (p[0] + p[1]) * x
        }
        fn gradient(&self, x: f64, _p: &[f64], out: &mut [f64]) {
            out.copy_from_slice(&[x, x]);
        }
    }

    /// `y = exp(k x)` from a hopeless start.
    struct Exponential;
    impl Model for Exponential {
        fn n_params(&self) -> usize {
            1
        }
        fn value(&self, x: f64, p: &[f64]) -> f64 {
            (p[0] * x).exp()
        }
        fn gradient(&self, x: f64, p: &[f64], out: &mut [f64]) {
            out[0] = x * (p[0] * x).exp();
        }
    }

    #[test]
    fn linear_recovers_slope_from_any_start() {
        let data: Vec<_> = (1..=10)
            .map(|i| Observation::unweighted(i as f64, 2.5 * i as f64))
            .collect();
        for init in [-1e3, 0.1, 7.0, 1e4] {
            let fit = least_squares(&Linear, &data, &[init]).unwrap();
            assert!((fit.params[0] - 2.5).abs() < 1e-12, "init {init}");
        }
    }

    #[test]
    fn quadratic_interpolates_exact_data() {
        let data: Vec<_> = (0..12)
            .map(|i| {
                let x = i as f64 * 0.3 - 1.0;
                Observation::unweighted(x, 0.7 - 1.3 * x + 0.25 * x * x)
            })
            .collect();
        let fit = least_squares(&Quadratic, &data, &[0.0, 0.0, 0.0]).unwrap();
        assert!(fit.residual_norm < 1e-20, "{}", fit.residual_norm);
        assert_relative_eq!(fit.params[2], 0.25, max_relative = 1e-10);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let data: Vec<_> = (1..=5).map(|i| Observation::unweighted(i as f64, i as f64)).collect();
        assert!(matches!(
            least_squares(&Redundant, &data, &[0.5, 0.5]),
            Err(Error::RankDeficient { rank: 1, params: 2 })
        ));
    }

    #[test]
    fn iteration_limit_returns_last_iterate() {
        let data: Vec<_> = (0..20)
            .map(|i| Observation::unweighted(i as f64, (0.3 * i as f64).exp()))
            .collect();
        let lm = LevenbergMarquardt {
            max_iterations: 2,
            ..LevenbergMarquardt::default()
        };
        let problem = WeightedResiduals {
            model: &Exponential,
            data: &data,
        };
        match lm.minimize(&problem, &[-0.5]) {
            Err(Error::IterationLimit { iterations: 2, last }) => assert_eq!(last.len(), 1),
            other => panic!("expected iteration limit, got {other:?}"),
        }
        // The default budget converges.
        let fit = least_squares(&Exponential, &data, &[0.1]).unwrap();
        assert_relative_eq!(fit.params[0], 0.3, max_relative = 1e-10);
    }

    #[test]
    fn bad_inputs() {
        let one = [Observation::unweighted(1.0, 1.0)];
        assert!(least_squares(&Quadratic, &one, &[0.0; 3]).is_err());
        let neg = [Observation {
            x: 1.0,
            y: 1.0,
            weight: -1.0,
        }];
        assert!(least_squares(&Linear, &neg, &[0.0]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn noisy_power_law_within_three_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let truth = PowerLawParams { p: 0.15, e: 2.97 };
        let mut hits = 0;
        for _ in 0..20 {
            let points: Vec<(f64, f64)> = (2..=20)
                .map(|n| {
                    let x = n as f64;
                    let noise: f64 = rng.sample(StandardNormal);
                    (x, truth.eval(x) + 0.5 * noise)
                })
                .collect();
            let fit = fit_power_law(&points).unwrap();
            let se_e = fit.covariance[1][1].sqrt();
            let se_p = fit.covariance[0][0].sqrt();
            if (fit.params.e - truth.e).abs() < 3.0 * se_e && (fit.params.p - truth.p).abs() < 3.0 * se_p {
                hits += 1;
            }
        }
        assert!(hits >= 19, "{hits}/20 fits within 3σ");
    }

    #[test]
    fn two_source_curve_lies_in_the_fit_family() {
        let unit = Prefactor::unit();
        let values: Vec<(u32, f64)> = (2..=20).map(|m| (m, fisher_analytic_n2(m, &unit).reduced)).collect();
        let fit = fit_m_dependence(2, &values).unwrap();
        assert!(fit.residual_norm < 1e-18, "{}", fit.residual_norm);
        assert_relative_eq!(fit.a, 1.0, max_relative = 1e-8);
        assert_relative_eq!(fit.b, 1.0, max_relative = 1e-8);
        assert_relative_eq!(fit.c, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn three_source_large_m_form_lies_in_the_family() {
        // (2/9)(4m + 14 − 3√12 √m) · (m+2)/(3(m+2)) rewritten in fit-family units.
        let values: Vec<(u32, f64)> = (2..=20)
            .map(|m| {
                let mf = m as f64;
                let reduced = 2.0 / 9.0 * (4.0 * mf + 14.0 - 3.0 * 12f64.sqrt() * mf.sqrt()) * 3.0 / (mf + 2.0);
                (m, reduced)
            })
            .collect();
        let fit = fit_m_dependence(3, &values).unwrap();
        assert!(fit.residual_norm < 1e-20);
        // (1 + (m−1)/3)⁻¹ (2/9)(a m + b − c√m) = 3/(m+2) (2/9)(...)
        assert_relative_eq!(fit.a, 4.0, max_relative = 1e-9);
        assert_relative_eq!(fit.b, 14.0, max_relative = 1e-9);
        assert_relative_eq!(fit.c, 3.0 * 12f64.sqrt(), max_relative = 1e-9);

        // The exact three-source curve is close to, but not inside, the family.
        let unit = Prefactor::unit();
        let exact: Vec<(u32, f64)> = (2..=20).map(|m| (m, fisher_analytic_n3(m, &unit).reduced)).collect();
        let fit = fit_m_dependence(3, &exact).unwrap();
        let scale: f64 = exact.iter().map(|(_, f)| f * f).sum();
        assert!(fit.residual_norm < 1e-4 * scale);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn weight_rescaling_leaves_the_fit_unchanged(scale in 1e-6f64..1e6, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<Observation> = (0..15).map(|i| {
                let x = i as f64 * 0.2;
                let noise: f64 = rng.sample(StandardNormal);
                Observation { x, y: 1.0 + 0.5 * x - 0.1 * x * x + 0.05 * noise, weight: 1.0 + (i % 3) as f64 }
            }).collect();
            let scaled: Vec<Observation> = data.iter().map(|o| Observation { weight: o.weight * scale, ..*o }).collect();
            let a = least_squares(&Quadratic, &data, &[0.0; 3]).unwrap();
            let b = least_squares(&Quadratic, &scaled, &[0.0; 3]).unwrap();
            for i in 0..3 {
                prop_assert!((a.params[i] - b.params[i]).abs() < 1e-8 * a.params[i].abs().max(1.0));
                let (ca, cb) = (a.covariance[(i, i)], b.covariance[(i, i)]);
                prop_assert!((ca - cb).abs() < 1e-6 * ca);
            }
        }
    }
}

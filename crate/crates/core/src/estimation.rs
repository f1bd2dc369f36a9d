//! Range estimation from coincidence counts: a zero-padded DFT initializer,
//! Poisson maximum likelihood over `(z2, β)` by Fisher scoring, the
//! Cramér–Rao bound, and Monte Carlo campaigns comparing the two.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::correlation::{g_tilde, g_tilde_slope};
use crate::error::{Error, Result};
use crate::fisher::{fisher_discrete, NeumaierSum};
use crate::fitkit::{LevenbergMarquardt, LocalModel, Objective};
use crate::geometry::SetupGeometry;
use crate::speckle::{synthesize_counts, CountMap};

/// Zero-padding factor of the initializer's transform.
pub const PADDING: usize = 4;
/// Minimum ratio of the strongest summed-spectrum bin to the median bin.
pub const MIN_PEAK_RATIO: f64 = 8.0;
/// Half-width of the search window around the initial `z2`, relative.
pub const SEARCH_WINDOW: f64 = 0.2;
pub const MIN_TRIALS: usize = 50;
/// Campaigns with a larger failed fraction are rejected.
pub const MAX_FAILURE_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Initializer {
    Fourier,
    Provided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrequencyGuess {
    pub omega2: f64,
    pub z2: f64,
    /// Fringe periods across the object row, `ω2 N_H / 2π`.
    pub cycles: f64,
    /// Strongest summed-spectrum bin over the median bin.
    pub peak_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RangeEstimate {
    pub z2_hat: f64,
    pub scale_hat: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub initializer: Initializer,
    pub z2_init: f64,
}

fn check_shape(values: &[f64], geom: &SetupGeometry) -> Result<usize> {
    let nh = geom.reference().n_pixels();
    if geom.object().n_pixels() != nh {
        return Err(Error::Configuration(
            "range estimation needs equal pixel counts on both planes".into(),
        ));
    }
    if values.len() != nh * nh {
        return Err(Error::Format(format!(
            "{} values for a {nh}×{nh} detector pair",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Format(format!("count {v} is not a finite non-negative number")));
    }
    Ok(nh)
}

fn check_counts(counts: &CountMap, geom: &SetupGeometry) -> Result<()> {
    if counts.n_pixels() != geom.object().n_pixels() {
        return Err(Error::Configuration(format!(
            "count map has N_H = {} but the geometry has {}",
            counts.n_pixels(),
            geom.object().n_pixels()
        )));
    }
    Ok(())
}

/// Dominant object-row frequency of a count map.
pub fn fourier_initializer(counts: &CountMap, geom: &SetupGeometry) -> Result<FrequencyGuess> {
    check_counts(counts, geom)?;
    fourier_initializer_from_values(&counts.as_f64(), geom)
}

/// [`fourier_initializer`] on raw row-major values, e.g. noiseless rates.
pub fn fourier_initializer_from_values(values: &[f64], geom: &SetupGeometry) -> Result<FrequencyGuess> {
    let nh = check_shape(values, geom)?;
    let len = PADDING * nh;
    let half = len / 2;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(len);

    let spectra: Vec<Vec<f64>> = values
        .par_chunks(nh)
        .map(|row| {
            let mean = row.iter().sum::<f64>() / nh as f64;
            let mut buf = vec![Complex64::new(0.0, 0.0); len];
            for (b, v) in buf.iter_mut().zip(row) {
                b.re = v - mean;
            }
            fft.process(&mut buf);
            buf[..=half].iter().map(|c| c.norm_sqr()).collect()
        })
        .collect();

    let mut summed = vec![0.0; half + 1];
    for s in &spectra {
        summed.iter_mut().zip(s).for_each(|(a, p)| *a += p);
    }
    let (_, peak) = argmax(&summed[1..]).expect("non-empty spectrum");
    let mut sorted = summed[1..].to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let peak_ratio = if median > 0.0 { peak / median } else { f64::INFINITY };
    if !(peak > 0.0) || peak_ratio < MIN_PEAK_RATIO {
        return Err(Error::Initialization(format!(
            "no dominant fringe frequency: strongest bin {peak:.3e} is {peak_ratio:.2} × the median"
        )));
    }

    let mut per_row: Vec<f64> = spectra
        .iter()
        .filter_map(|s| argmax(&s[1..]).map(|(k, _)| refine_peak(s, k + 1)))
        .collect();
    per_row.sort_by(f64::total_cmp);
    let bin = median_of_sorted(&per_row);
    let omega2 = 2.0 * PI * bin / len as f64;
    Ok(FrequencyGuess {
        omega2,
        z2: geom.distance_for_omega(omega2),
        cycles: bin / PADDING as f64,
        peak_ratio,
    })
}

fn argmax(v: &[f64]) -> Option<(usize, f64)> {
    v.iter().copied().enumerate().fold(None, |best, (i, p)| match best {
        Some((_, q)) if q >= p => best,
        _ => Some((i, p)),
    })
}

/// Vertex of the parabola through the magnitudes at `k − 1, k, k + 1`.
fn refine_peak(power: &[f64], k: usize) -> f64 {
    if k == 0 || k + 1 >= power.len() {
        return k as f64;
    }
    let (a, b, c) = (power[k - 1].sqrt(), power[k].sqrt(), power[k + 1].sqrt());
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 {
        return k as f64;
    }
    k as f64 + 0.5 * (a - c) / denom
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Poisson deviance over all pixel pairs in scaled parameters
/// `(z2 / z_ref, β / β_ref)`.
struct PoissonRange<'a> {
    values: &'a [f64],
    nh: usize,
    n_sources: usize,
    order: u32,
    omega1: f64,
    /// `ω2 z2`, constant for fixed source and pitch.
    omega_z: f64,
    z_ref: f64,
    beta_ref: f64,
    z_lo: f64,
    z_hi: f64,
}

struct RowTerms {
    merit: NeumaierSum,
    grad: [f64; 2],
    curv: [f64; 3],
}

impl PoissonRange<'_> {
    fn rows<T: Send>(&self, params: &[f64], f: impl Fn(usize, &[f64], f64, f64) -> T + Sync) -> Vec<T> {
        let z = params[0] * self.z_ref;
        let beta = params[1] * self.beta_ref;
        self.values
            .par_chunks(self.nh)
            .enumerate()
            .map(|(i, row)| f(i + 1, row, z, beta))
            .collect()
    }

    fn pair_rate(&self, n1: usize, n2: usize, z: f64) -> (f64, f64) {
        let omega2 = self.omega_z / z;
        let delta = self.omega1 * n1 as f64 - omega2 * n2 as f64;
        (delta, omega2)
    }

    fn log_likelihood(&self, params: &[f64]) -> f64 {
        let rows = self.rows(params, |n1, row, z, beta| {
            let mut acc = NeumaierSum::default();
            for (j, &c) in row.iter().enumerate() {
                let (delta, _) = self.pair_rate(n1, j + 1, z);
                let rate = beta * g_tilde(self.n_sources, self.order, delta);
                acc.add(c * rate.ln() - rate - ln_gamma(c + 1.0));
            }
            acc.total()
        });
        let mut total = NeumaierSum::default();
        rows.into_iter().for_each(|r| total.add(r));
        total.total()
    }
}

fn deviance_term(c: f64, rate: f64) -> f64 {
    if c > 0.0 {
        rate - c - c * (rate / c).ln()
    } else {
        rate
    }
}

impl Objective for PoissonRange<'_> {
    fn n_params(&self) -> usize {
        2
    }

    fn local_model(&self, params: &[f64]) -> LocalModel {
        let rows = self.rows(params, |n1, row, z, beta| {
            let mut t = RowTerms {
                merit: NeumaierSum::default(),
                grad: [0.0; 2],
                curv: [0.0; 3],
            };
            for (j, &c) in row.iter().enumerate() {
                let n2 = j + 1;
                let (delta, omega2) = self.pair_rate(n1, n2, z);
                let g = g_tilde(self.n_sources, self.order, delta);
                let rate = beta * g;
                // ∂Δ/∂z2 = ω2 n2 / z2
                let du = beta * g_tilde_slope(self.n_sources, self.order, delta) * omega2 * n2 as f64 / z * self.z_ref;
                let dv = g * self.beta_ref;
                let w = 1.0 - c / rate;
                t.merit.add(deviance_term(c, rate));
                t.grad[0] += w * du;
                t.grad[1] += w * dv;
                t.curv[0] += du * du / rate;
                t.curv[1] += du * dv / rate;
                t.curv[2] += dv * dv / rate;
            }
            t
        });
        let mut merit = NeumaierSum::default();
        let (mut grad, mut curv) = ([0.0; 2], [0.0; 3]);
        for r in rows {
            merit.add(r.merit.total());
            grad.iter_mut().zip(r.grad).for_each(|(a, b)| *a += b);
            curv.iter_mut().zip(r.curv).for_each(|(a, b)| *a += b);
        }
        LocalModel {
            merit: merit.total(),
            curvature: DMatrix::from_row_slice(2, 2, &[curv[0], curv[1], curv[1], curv[2]]),
            gradient: DVector::from_column_slice(&grad),
        }
    }

    fn merit(&self, params: &[f64]) -> f64 {
        let rows = self.rows(params, |n1, row, z, beta| {
            let mut acc = NeumaierSum::default();
            for (j, &c) in row.iter().enumerate() {
                let (delta, _) = self.pair_rate(n1, j + 1, z);
                acc.add(deviance_term(c, beta * g_tilde(self.n_sources, self.order, delta)));
            }
            acc.total()
        });
        let mut total = NeumaierSum::default();
        rows.into_iter().for_each(|r| total.add(r));
        total.total()
    }

    fn constrain(&self, params: &mut [f64]) {
        params[0] = params[0].clamp(self.z_lo, self.z_hi);
        params[1] = params[1].max(1e-12);
    }
}

/// Maximum-likelihood `z2` (and rate scale `β`) from a count map. The
/// geometry's own object distance is ignored; only the source array, pixel
/// pitch and reference plane are used.
pub fn estimate_range(counts: &CountMap, geom: &SetupGeometry, init: Option<f64>) -> Result<RangeEstimate> {
    check_counts(counts, geom)?;
    estimate_range_from_values(&counts.as_f64(), geom, init)
}

/// [`estimate_range`] on raw row-major values.
pub fn estimate_range_from_values(values: &[f64], geom: &SetupGeometry, init: Option<f64>) -> Result<RangeEstimate> {
    let nh = check_shape(values, geom)?;
    let (z_init, initializer) = match init {
        Some(z) if z.is_finite() && z > 0.0 => (z, Initializer::Provided),
        Some(z) => {
            return Err(Error::invalid(
                "init",
                format!("initial z2 must be finite and > 0, got {z}"),
            ))
        }
        None => (fourier_initializer_from_values(values, geom)?.z2, Initializer::Fourier),
    };

    let (n, m) = (geom.n_sources(), geom.order());
    let omega1 = geom.omega1();
    let omega_init = geom.omega_at(z_init);
    let mut shape_sum = NeumaierSum::default();
    for n1 in 1..=nh {
        for n2 in 1..=nh {
            shape_sum.add(g_tilde(n, m, omega1 * n1 as f64 - omega_init * n2 as f64));
        }
    }
    let total: f64 = values.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Initialization("count map is empty".into()));
    }
    let beta_init = total / shape_sum.total();

    let objective = PoissonRange {
        values,
        nh,
        n_sources: n,
        order: m,
        omega1,
        omega_z: omega_init * z_init,
        z_ref: z_init,
        beta_ref: beta_init,
        z_lo: 1.0 - SEARCH_WINDOW,
        z_hi: 1.0 + SEARCH_WINDOW,
    };
    let min = LevenbergMarquardt::default().minimize(&objective, &[1.0, 1.0])?;
    let u = min.params[0];
    if u <= objective.z_lo || u >= objective.z_hi {
        return Err(Error::Initialization(format!(
            "estimate pinned at the search-window edge z2 = {:.6} m (initial {z_init:.6} m)",
            u * z_init
        )));
    }
    let log_likelihood = objective.log_likelihood(&min.params);
    if !log_likelihood.is_finite() {
        return Err(Error::Domain("log-likelihood is not finite at the estimate".into()));
    }
    Ok(RangeEstimate {
        z2_hat: u * z_init,
        scale_hat: min.params[1] * beta_init,
        log_likelihood,
        iterations: min.iterations,
        initializer,
        z2_init: z_init,
    })
}

/// `1 / (β F)` with `F` the discrete per-unit-rate Fisher sum.
pub fn cramer_rao_bound(geom: &SetupGeometry, budget: f64) -> Result<f64> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::invalid(
            "budget",
            format!("must be finite and > 0, got {budget}"),
        ));
    }
    Ok(1.0 / (budget * fisher_discrete(geom).value))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of trial `trial` in a campaign seeded with `seed`.
pub fn trial_seed(seed: u64, trial: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ trial as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub z2_hat: Option<f64>,
    pub beta_hat: Option<f64>,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub n_sources: usize,
    pub order: u32,
    pub n_trials: usize,
    pub n_failed: usize,
    pub budget: f64,
    pub z2_true: f64,
    pub mean_z2: f64,
    pub bias: f64,
    /// Standard error of the mean estimate.
    pub bias_std_error: f64,
    pub empirical_variance: f64,
    pub crb: f64,
    pub efficiency: f64,
    pub trials: Vec<TrialRecord>,
}

impl CampaignReport {
    pub fn failure_rate(&self) -> f64 {
        self.n_failed as f64 / self.n_trials as f64
    }

    pub fn successful(&self) -> impl Iterator<Item = f64> + '_ {
        self.trials.iter().filter_map(|t| t.z2_hat)
    }

    /// Summary fields only, for a machine-readable report header.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n_sources": self.n_sources,
            "order": self.order,
            "n_trials": self.n_trials,
            "n_failed": self.n_failed,
            "failure_rate": self.failure_rate(),
            "budget": self.budget,
            "z2_true": self.z2_true,
            "mean_z2": self.mean_z2,
            "bias": self.bias,
            "bias_std_error": self.bias_std_error,
            "empirical_variance": self.empirical_variance,
            "crb": self.crb,
            "efficiency": self.efficiency,
        })
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "trial,z2_hat,beta_hat,converged")?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        for t in &self.trials {
            writeln!(out, "{},{},{},{}", t.trial, opt(t.z2_hat), opt(t.beta_hat), t.converged)?;
        }
        Ok(())
    }
}

/// Synthesize and estimate `n_trials` independent count maps at the
/// geometry's true `z2`.
pub fn run_campaign(geom: &SetupGeometry, budget: f64, n_trials: usize, seed: u64) -> Result<CampaignReport> {
    if n_trials < MIN_TRIALS {
        return Err(Error::OutOfRange {
            what: "n_trials",
            value: n_trials as i64,
            lo: MIN_TRIALS as i64,
            hi: i64::MAX,
        });
    }
    let crb = cramer_rao_bound(geom, budget)?;
    let trials: Vec<TrialRecord> = (0..n_trials)
        .into_par_iter()
        .map(|trial| {
            let seed = trial_seed(seed, trial);
            let outcome = synthesize_counts(geom, budget, seed).and_then(|c| estimate_range(&c, geom, None));
            match outcome {
                Ok(est) => TrialRecord {
                    trial,
                    seed,
                    z2_hat: Some(est.z2_hat),
                    beta_hat: Some(est.scale_hat),
                    converged: true,
                    error: None,
                },
                Err(e) => TrialRecord {
                    trial,
                    seed,
                    z2_hat: None,
                    beta_hat: None,
                    converged: false,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let n_failed = trials.iter().filter(|t| !t.converged).count();
    if n_failed as f64 > MAX_FAILURE_RATE * n_trials as f64 {
        return Err(Error::Campaign {
            failed: n_failed,
            trials: n_trials,
        });
    }
    let z: Vec<f64> = trials.iter().filter_map(|t| t.z2_hat).collect();
    let k = z.len() as f64;
    let mean = z.iter().sum::<f64>() / k;
    let variance = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    let z2_true = geom.object().distance();
    Ok(CampaignReport {
        n_sources: geom.n_sources(),
        order: geom.order(),
        n_trials,
        n_failed,
        budget,
        z2_true,
        mean_z2: mean,
        bias: mean - z2_true,
        bias_std_error: (variance / k).sqrt(),
        empirical_variance: variance,
        crb,
        efficiency: crb / variance,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fisher::{grid_scan, GridMethod};
    use crate::geometry::SetupConfig;
    use crate::speckle::expected_counts;

    /// 200 pixels, one reference period and two object periods.
    fn desk_geometry(n: usize, m: u32) -> SetupGeometry {
        SetupConfig {
            n_sources: n,
            order: m,
            n_pixels: 200,
            z1_m: 0.2,
            z2_m: 0.1,
            ..SetupConfig::default()
        }
        .to_geometry()
        .unwrap()
    }

    #[test]
    fn fourier_initializer_on_noiseless_rates() {
        let geom = desk_geometry(2, 2);
        let rates = expected_counts(&geom, 1.0).unwrap();
        let g = fourier_initializer_from_values(&rates, &geom).unwrap();
        let bin_width = 2.0 * PI / 200.0;
        assert!((g.omega2 - geom.omega2()).abs() < bin_width, "{g:?}");
        assert_eq!(g.cycles.round(), 2.0);
        assert!((g.z2 / 0.1 - 1.0).abs() < SEARCH_WINDOW);
    }

    #[test]
    fn fourier_initializer_under_poisson_noise() {
        let geom = desk_geometry(2, 2);
        let hits = (0..100)
            .filter(|&s| {
                let counts = synthesize_counts(&geom, 1e4, s).unwrap();
                fourier_initializer(&counts, &geom).is_ok_and(|g| g.cycles.round() == 2.0)
            })
            .count();
        assert!(hits >= 99, "{hits}/100");
    }

    #[test]
    fn flat_signal_is_rejected() {
        let geom = desk_geometry(2, 2);
        let counts = synthesize_counts(&geom, 1e-3, 4).unwrap();
        assert!(matches!(
            fourier_initializer(&counts, &geom),
            Err(Error::Initialization(_))
        ));
        assert!(matches!(
            estimate_range(&counts, &geom, None),
            Err(Error::Initialization(_))
        ));
        let flat = vec![3.0; 200 * 200];
        assert!(fourier_initializer_from_values(&flat, &geom).is_err());
    }

    #[test]
    fn noiseless_recovery() {
        for (n, m) in [(2, 2), (3, 3), (5, 7)] {
            let geom = desk_geometry(n, m);
            let rates = expected_counts(&geom, 250.0).unwrap();
            let est = estimate_range_from_values(&rates, &geom, None).unwrap();
            assert!((est.z2_hat / 0.1 - 1.0).abs() < 1e-8, "({n},{m}): {est:?}");
            assert!((est.scale_hat / 250.0 - 1.0).abs() < 1e-8);
            assert_eq!(est.initializer, Initializer::Fourier);
            let provided = estimate_range_from_values(&rates, &geom, Some(0.109)).unwrap();
            assert!((provided.z2_hat / 0.1 - 1.0).abs() < 1e-8);
            assert_eq!(provided.initializer, Initializer::Provided);
        }
    }

    #[test]
    fn likelihood_is_multimodal_in_z2() {
        let geom = desk_geometry(2, 2);
        let counts = synthesize_counts(&geom, 1e3, 11).unwrap();
        let truth = estimate_range(&counts, &geom, None).unwrap();
        assert!((truth.z2_hat / 0.1 - 1.0).abs() < 1e-3);
        let displaced = |cycles: f64| geom.distance_for_omega(geom.omega2() + cycles * 2.0 * PI / 200.0);

        // Half a fringe period across the row: the truth lies outside the
        // search window and the estimate is pinned to its edge.
        let half = estimate_range(&counts, &geom, Some(displaced(0.5)));
        assert!(matches!(half, Err(Error::Initialization(_))), "{half:?}");

        // One full period: a local maximum of lower likelihood.
        let alias = estimate_range(&counts, &geom, Some(displaced(1.0))).unwrap();
        assert!((alias.z2_hat / 0.1 - 1.0).abs() > 0.2, "{alias:?}");
        assert!(alias.log_likelihood < truth.log_likelihood);
    }

    #[test]
    fn estimator_input_errors() {
        let geom = desk_geometry(2, 2);
        let counts = synthesize_counts(&geom, 10.0, 1).unwrap();
        assert!(estimate_range(&counts, &geom, Some(-1.0)).is_err());
        let other = desk_geometry(2, 2);
        let small = SetupConfig {
            n_pixels: 100,
            z1_m: 0.1,
            z2_m: 0.05,
            ..SetupConfig::default()
        }
        .to_geometry()
        .unwrap();
        assert!(estimate_range(&counts, &small, None).is_err());
        assert!(estimate_range_from_values(&[0.0; 10], &other, None).is_err());
        assert!(estimate_range_from_values(&vec![0.0; 40_000], &other, Some(0.1)).is_err());
    }

    #[test]
    fn crb_scaling_and_consistency() {
        let geom = desk_geometry(2, 2);
        let b1 = cramer_rao_bound(&geom, 1e3).unwrap();
        let b2 = cramer_rao_bound(&geom, 2e3).unwrap();
        assert!(b1 > 0.0);
        assert!((b1 / b2 - 2.0).abs() < 1e-12);
        assert!(cramer_rao_bound(&geom, 0.0).is_err());

        let g10 = geom.with_sources_and_order(10, 10).unwrap();
        let ratio = b1 / cramer_rao_bound(&g10, 1e3).unwrap();
        let grid = grid_scan(2..=10, 2..=10, &GridMethod::Integral).unwrap();
        let expected = grid.get(10, 10).unwrap() / grid.get(2, 2).unwrap();
        // Continuum vs 200-pixel sum: a few percent apart.
        assert!((ratio / expected - 1.0).abs() < 0.05, "{ratio} vs {expected}");
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|t| trial_seed(7, t)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(trial_seed(7, 0), trial_seed(8, 0));
    }

    #[test]
    fn campaign_rejects_too_few_trials() {
        let geom = desk_geometry(2, 2);
        assert!(matches!(run_campaign(&geom, 1e3, 49, 0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn campaign_fails_when_most_trials_fail() {
        let geom = desk_geometry(2, 2);
        assert!(matches!(
            run_campaign(&geom, 1e-3, 50, 0),
            Err(Error::Campaign { failed: 50, trials: 50 })
        ));
    }

    #[test]
    fn high_budget_campaign_is_unbiased_and_efficient() {
        let geom = desk_geometry(2, 2);
        let report = run_campaign(&geom, 1e4, 100, 2024).unwrap();
        assert_eq!(report.n_failed, 0);
        assert!(
            report.bias.abs() < 3.0 * report.bias_std_error,
            "{}",
            report.summary_json()
        );
        let slack = 3.0 * (2.0f64 / 100.0).sqrt();
        assert!(
            report.efficiency >= 0.3 && report.efficiency <= 1.0 + slack,
            "{}",
            report.summary_json()
        );

        let again = run_campaign(&geom, 1e4, 100, 2024).unwrap();
        assert_eq!(report, again);
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 101);
        assert!(text.starts_with("trial,z2_hat,beta_hat,converged\n0,"));
    }

    #[test]
    fn variance_scales_inversely_with_budget() {
        let geom = desk_geometry(2, 2);
        let var: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&b| run_campaign(&geom, b, 100, 99).unwrap().empirical_variance * b)
            .collect();
        for v in &var[1..] {
            let r = v / var[0];
            assert!((1.0 / 1.5..1.5).contains(&r), "{var:?}");
        }
    }

    #[test]
    fn variance_decreases_with_sources_and_order() {
        let seed = 5;
        let v: Vec<f64> = [(2, 2), (3, 3), (4, 4)]
            .iter()
            .map(|&(n, m)| {
                run_campaign(&desk_geometry(n, m), 1e3, 100, seed)
                    .unwrap()
                    .empirical_variance
            })
            .collect();
        assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
    }
}

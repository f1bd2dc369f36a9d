//! Self-check suite behind the `validate` command.

use std::f64::consts::PI;

use serde::Serialize;
use superlidar::correlation::{g_tilde, spatial_average};
use superlidar::fisher::{fisher_analytic_n2, fisher_analytic_n3, fisher_integral, Prefactor};
use superlidar::fisher::{grid_scan, GridMethod};
use superlidar::fitkit::{fit_grid, fit_model_fisher};
use superlidar::speckle::{empirical_curve, sample_frames};
use superlidar::SourceArray;

/// Default frame count of the reduced speckle check.
pub const VALIDATE_FRAMES: usize = 20_000;

/// Reduced lower-bound value for `(N, m)`.
pub type LowerBoundFn = fn(usize, u32) -> f64;

pub fn lower_bound(n: usize, m: u32) -> f64 {
    superlidar::fisher::fisher_lower_bound(n, m, &Prefactor::unit())
        .map(|r| r.reduced)
        .unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub frames: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failed(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.id.to_string())
            .collect()
    }
}

fn check(id: &'static str, pass: bool, detail: String) -> Check {
    Check { id, pass, detail }
}

fn closed_form(id: &'static str, n: usize, exact: fn(u32, &Prefactor) -> f64) -> Check {
    let unit = Prefactor::unit();
    let mut worst = 0.0f64;
    for m in 2..=20 {
        match fisher_integral(n, m, &unit) {
            Ok(q) => worst = worst.max(((q.reduced - exact(m, &unit)) / exact(m, &unit)).abs()),
            Err(e) => return check(id, false, e.to_string()),
        }
    }
    check(id, worst < 1e-6, format!("max rel err {worst:.2e}, m = 2..20"))
}

/// Ordering and envelope of a lower bound against the integral on `{2..20}²`.
pub fn bound_checks(integral: &dyn Fn(usize, u32) -> f64, lower: LowerBoundFn) -> [Check; 2] {
    let mut violations = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for n in 2..=20 {
        for m in 2..=20 {
            let (num, lb) = (integral(n, m), lower(n, m));
            if !(lb <= num * (1.0 + 1e-9)) {
                violations.push(format!("({n},{m})"));
            }
            if n >= 4 {
                let rel = (num - lb) / num;
                lo = lo.min(rel);
                hi = hi.max(rel);
            }
        }
    }
    [
        check(
            "bound_ordering",
            violations.is_empty(),
            if violations.is_empty() {
                "lower bound <= integral on all 361 cells".into()
            } else {
                format!(
                    "{} cells violate the ordering: {}",
                    violations.len(),
                    violations.join(" ")
                )
            },
        ),
        check(
            "bound_envelope",
            lo > 0.0 && hi < 0.09,
            format!("N >= 4 relative gap in [{lo:.4}, {hi:.4}], required within (0, 0.09)"),
        ),
    ]
}

fn speckle_check(frames: usize, seed: u64) -> Check {
    let deltas: Vec<f64> = (0..32).map(|i| -PI + 2.0 * PI * (i as f64 + 0.5) / 32.0).collect();
    let mut parts = Vec::new();
    let mut pass = true;
    for (k, (n, m)) in [(2usize, 2u32), (3, 3)].into_iter().enumerate() {
        let result = SourceArray::new(n, 50e-6, 500e-9, 1.0)
            .and_then(|s| sample_frames(&s, frames, seed.wrapping_add(k as u64)))
            .and_then(|b| empirical_curve(&b, m, 0.3, &deltas));
        let curve = match result {
            Ok(c) => c,
            Err(e) => return check("speckle", false, e.to_string()),
        };
        let within = curve
            .samples
            .iter()
            .zip(&deltas)
            .filter(|(s, d)| (s.value - g_tilde(n, m, **d)).abs() < 3.0 * s.std_error.unwrap_or(0.0))
            .count();
        pass &= within * 100 >= 95 * deltas.len();
        parts.push(format!("({n},{m}) {within}/32 within 3σ"));
    }
    check("speckle", pass, format!("{frames} frames: {}", parts.join(", ")))
}

pub fn run(frames: usize, seed: u64, lower: LowerBoundFn) -> ValidationReport {
    let mut checks = vec![
        closed_form("quadrature_n2", 2, |m, p| fisher_analytic_n2(m, p).reduced),
        closed_form("quadrature_n3", 3, |m, p| fisher_analytic_n3(m, p).reduced),
    ];

    let mut worst = 0.0f64;
    for n in 2..=20 {
        for m in 2..=20 {
            worst = worst.max(spatial_average(n, m).map(|v| (v - 1.0).abs()).unwrap_or(f64::INFINITY));
        }
    }
    checks.push(check(
        "normalization",
        worst < 1e-9,
        format!("max |average - 1| {worst:.2e}"),
    ));

    match grid_scan(2..=20, 2..=20, &GridMethod::Integral) {
        Ok(grid) => {
            checks.extend(bound_checks(&|n, m| grid.get(n, m).unwrap_or(f64::NAN), lower));
            match fit_grid(&grid) {
                Ok(fit) => {
                    let expected = [(0.140, 2.986), (0.160, 2.965), (0.294, 2.977)];
                    let got = [fit.a.params, fit.b.params, fit.c.params];
                    let ok = expected
                        .iter()
                        .zip(&got)
                        .all(|((p, e), g)| (g.p - p).abs() <= 0.01 && (g.e - e).abs() <= 0.05);
                    let detail = got
                        .iter()
                        .zip(["a", "b", "c"])
                        .map(|(g, name)| format!("{name} = {:.4} N^{:.4}", g.p, g.e))
                        .collect::<Vec<_>>()
                        .join(", ");
                    checks.push(check("power_law_refit", ok, detail));

                    let table = fit.table();
                    let mut worst = 0.0f64;
                    for n in 4..=20 {
                        for m in 2..=20 {
                            let num = grid.get(n, m).unwrap_or(f64::NAN);
                            let approx = fit_model_fisher(n, m, &table, &Prefactor::unit()).reduced;
                            worst = worst.max(((num - approx) / num).abs());
                        }
                    }
                    checks.push(check(
                        "fit_model_envelope",
                        worst < 0.05,
                        format!("max |rel| {worst:.4}"),
                    ));
                }
                Err(e) => checks.push(check("power_law_refit", false, e.to_string())),
            }
        }
        Err(e) => checks.push(check("bound_ordering", false, e.to_string())),
    }

    checks.push(speckle_check(frames, seed));
    ValidationReport {
        pass: checks.iter().all(|c| c.pass),
        frames,
        seed,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integral(n: usize, m: u32) -> f64 {
        fisher_integral(n, m, &Prefactor::unit()).unwrap().reduced
    }

    /// The lower bound with the sign of its `√m` term flipped.
    fn wrong_sign(n: usize, m: u32) -> f64 {
        let (n, m) = (n as f64, m as f64);
        n * n / (4.0 * (n + m - 1.0)) * (m + 1.0 + 2.0 * m.sqrt())
    }

    #[test]
    fn correct_bound_passes() {
        let [ordering, envelope] = bound_checks(&integral, lower_bound);
        assert!(ordering.pass, "{}", ordering.detail);
        assert!(envelope.pass, "{}", envelope.detail);
    }

    #[test]
    fn sign_mutation_is_detected() {
        let [ordering, envelope] = bound_checks(&integral, wrong_sign);
        assert!(!ordering.pass);
        assert!(!envelope.pass);
        assert!(ordering.detail.contains("(2,2)"));
    }
}

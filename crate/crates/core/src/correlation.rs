//! Normalized m-th order intensity correlation of `N` thermal sources.
//!
//! With `Δ = δ1 − δ2` the phase mismatch between the reference and object
//! detectors,
//!
//! ```text
//! G̃(Δ) = (1 + (m−1)/N)⁻¹ · (1 + (m−1)/N² · sin²(NΔ/2) / sin²(Δ/2))
//! ```
//!
//! normalized so that its average over one period is 1.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::SetupGeometry;
use crate::quadrature::Quadrature;

/// Below this distance from a multiple of π (in `Δ/2`) the grating ratio is
/// evaluated from its Taylor series.
const SERIES_BAND: f64 = 1e-3;

/// `Δ/2` folded into `[−π/2, π/2]`. The ratio and its slope are π-periodic in `Δ/2`.
fn fold_half_phase(delta: f64) -> f64 {
    let x = 0.5 * delta;
    x - PI * (x / PI).round()
}

/// Grating ratio `sin²(NΔ/2) / sin²(Δ/2)`, equal to `N²` at multiples of 2π.
pub fn fringe_ratio(n_sources: usize, delta: f64) -> f64 {
    let n = n_sources as f64;
    let y = fold_half_phase(delta);
    if y.abs() < SERIES_BAND {
        let n2 = n * n;
        let y2 = y * y;
        n2 * (1.0 - (n2 - 1.0) * y2 / 3.0 + (n2 - 1.0) * (2.0 * n2 - 3.0) * y2 * y2 / 45.0)
    } else {
        let r = (n * y).sin() / y.sin();
        r * r
    }
}

/// `d/dΔ` of [`fringe_ratio`].
pub fn fringe_ratio_slope(n_sources: usize, delta: f64) -> f64 {
    let n = n_sources as f64;
    let y = fold_half_phase(delta);
    if y.abs() < SERIES_BAND {
        let n2 = n * n;
        // half of d/dy of the series above
        0.5 * n2 * (-2.0 * (n2 - 1.0) * y / 3.0 + 4.0 * (n2 - 1.0) * (2.0 * n2 - 3.0) * y * y * y / 45.0)
    } else {
        let (s1, c1) = y.sin_cos();
        let (sn, cn) = (n * y).sin_cos();
        sn * (n * cn * s1 - sn * c1) / (s1 * s1 * s1)
    }
}

fn normalization(n_sources: usize, order: u32) -> (f64, f64) {
    let n = n_sources as f64;
    let excess = order as f64 - 1.0;
    (1.0 / (1.0 + excess / n), excess / (n * n))
}

/// Normalized correlation `G̃(Δ)`. `order = 1` gives the flat intensity, 1.
pub fn g_tilde(n_sources: usize, order: u32, delta: f64) -> f64 {
    let (scale, weight) = normalization(n_sources, order);
    scale * (1.0 + weight * fringe_ratio(n_sources, delta))
}

/// `dG̃/dΔ`.
pub fn g_tilde_slope(n_sources: usize, order: u32, delta: f64) -> f64 {
    let (scale, weight) = normalization(n_sources, order);
    scale * weight * fringe_ratio_slope(n_sources, delta)
}

/// Peak value `m N / (N + m − 1)` reached at `Δ ≡ 0 (mod 2π)`.
pub fn peak_value(n_sources: usize, order: u32) -> f64 {
    let n = n_sources as f64;
    let m = order as f64;
    m * n / (n + m - 1.0)
}

/// Fringe visibility of the two-source correlation, `(m−1)/(m+1)`.
pub fn visibility_two_sources(order: u32) -> Result<f64> {
    if order < 2 {
        return Err(Error::Domain(format!("visibility needs order >= 2, got {order}")));
    }
    let m = order as f64;
    Ok((m - 1.0) / (m + 1.0))
}

/// Period average of `G̃` with one phase fixed at 0, computed by quadrature.
/// Equals 1 when the normalization is right.
pub fn spatial_average(n_sources: usize, order: u32) -> Result<f64> {
    let q = Quadrature::with_panels(32 * n_sources).rel_tol(1e-13);
    let integral = q.integrate(|d| g_tilde(n_sources, order, d), 0.0, 2.0 * PI)?;
    Ok(integral.value / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    /// Pixel pair `(n1, n2)` when the sample comes from a detector geometry.
    pub pixels: Option<(usize, usize)>,
    pub delta1: f64,
    pub delta2: f64,
    pub value: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationCurve {
    pub n_sources: usize,
    pub order: u32,
    pub provenance: Provenance,
    pub samples: Vec<CurveSample>,
}

impl CorrelationCurve {
    /// Analytic curve at fixed `delta1` over the given `Δ = δ1 − δ2` values.
    pub fn analytic_over_delta(n_sources: usize, order: u32, delta1: f64, deltas: &[f64]) -> Self {
        let samples = deltas
            .iter()
            .map(|&d| CurveSample {
                pixels: None,
                delta1,
                delta2: delta1 - d,
                value: g_tilde(n_sources, order, d),
                std_error: None,
            })
            .collect();
        Self {
            n_sources,
            order,
            provenance: Provenance::Analytic,
            samples,
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }

    /// CSV with columns `n1,n2,delta1,delta2,value` plus `std_error` for
    /// empirical curves. Pixel columns are empty for phase-only samples.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let empirical = self.provenance == Provenance::Empirical;
        if empirical {
            writeln!(out, "n1,n2,delta1,delta2,value,std_error")?;
        } else {
            writeln!(out, "n1,n2,delta1,delta2,value")?;
        }
        for s in &self.samples {
            let (n1, n2) = match s.pixels {
                Some((a, b)) => (a.to_string(), b.to_string()),
                None => (String::new(), String::new()),
            };
            write!(out, "{n1},{n2},{},{},{}", s.delta1, s.delta2, s.value)?;
            if empirical {
                match s.std_error {
                    Some(e) => write!(out, ",{e}")?,
                    None => write!(out, ",")?,
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Analytic `G̃(ω1 n1, ω2 n2)` for `n2 = 1..=N_H` at a fixed reference pixel.
pub fn curve_over_pixels(geom: &SetupGeometry, n1: usize) -> Result<CorrelationCurve> {
    let n_ref = geom.reference().n_pixels();
    if n1 < 1 || n1 > n_ref {
        return Err(Error::OutOfRange {
            what: "n1",
            value: n1 as i64,
            lo: 1,
            hi: n_ref as i64,
        });
    }
    let (n, m) = (geom.n_sources(), geom.order());
    let delta1 = geom.omega1() * n1 as f64;
    let omega2 = geom.omega2();
    let samples = (1..=geom.object().n_pixels())
        .map(|n2| {
            let delta2 = omega2 * n2 as f64;
            CurveSample {
                pixels: Some((n1, n2)),
                delta1,
                delta2,
                value: g_tilde(n, m, delta1 - delta2),
                std_error: None,
            }
        })
        .collect();
    Ok(CorrelationCurve {
        n_sources: n,
        order: m,
        provenance: Provenance::Analytic,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SetupConfig;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Direct `|Σ_l e^{i l Δ}|² / N²`-based ratio, independent of the folding
    /// and series used in production.
    fn ratio_by_phasor_sum(n: usize, delta: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for l in 0..n {
            let p = l as f64 * delta;
            re += p.cos();
            im += p.sin();
        }
        re * re + im * im
    }

    #[test]
    fn two_source_peak_and_trough() {
        assert_relative_eq!(g_tilde(2, 2, 0.0), 4.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(g_tilde(2, 2, PI), 2.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn ten_source_peak() {
        assert_relative_eq!(g_tilde(10, 10, 0.0), 100.0 / 19.0, max_relative = 1e-15);
        assert_relative_eq!(peak_value(10, 10), 100.0 / 19.0, max_relative = 1e-15);
    }

    #[test]
    fn grating_zeros_give_the_floor() {
        for n in 2..=12usize {
            for m in 2..=6u32 {
                let floor = 1.0 / (1.0 + (m as f64 - 1.0) / n as f64);
                for q in 1..n {
                    let d = 2.0 * PI * q as f64 / n as f64;
                    assert!((g_tilde(n, m, d) - floor).abs() < 1e-12, "N={n} m={m} q={q}");
                }
            }
        }
    }

    #[test]
    fn order_one_is_flat() {
        for d in [0.0, 0.3, 1.0, PI] {
            assert_eq!(g_tilde(5, 1, d), 1.0);
        }
    }

    #[test]
    fn visibility_examples() {
        assert_relative_eq!(visibility_two_sources(2).unwrap(), 1.0 / 3.0);
        assert_relative_eq!(visibility_two_sources(3).unwrap(), 0.5);
        assert!(visibility_two_sources(1).is_err());
        let mut prev = 0.0;
        for m in 2..200 {
            let v = visibility_two_sources(m).unwrap();
            assert!(v > prev && v < 1.0);
            prev = v;
        }
        assert!(prev > 0.98);
    }

    #[test]
    fn spatial_average_is_one() {
        for (n, m) in [(2, 2), (3, 4), (10, 10)] {
            let avg = spatial_average(n, m).unwrap();
            assert!((avg - 1.0).abs() < 1e-9, "N={n} m={m}: {avg}");
        }
    }

    #[test]
    fn ratio_matches_phasor_sum_across_series_band() {
        for n in [2usize, 3, 7, 20] {
            for k in -2000..=2000 {
                let d = k as f64 * 1e-6 + 4.0 * PI * (k % 3) as f64;
                let direct = ratio_by_phasor_sum(n, d);
                assert!(
                    (fringe_ratio(n, d) - direct).abs() < 1e-9 * direct.max(1.0),
                    "N={n} d={d}"
                );
            }
        }
    }

    #[test]
    fn slope_matches_finite_differences() {
        let h = 1e-6;
        for n in [2usize, 3, 5, 20] {
            for i in 0..400 {
                let d = -7.0 + i as f64 * 0.0351;
                let fd = (ratio_by_phasor_sum(n, d + h) - ratio_by_phasor_sum(n, d - h)) / (2.0 * h);
                let scale = (n * n * n) as f64;
                assert!((fringe_ratio_slope(n, d) - fd).abs() < 1e-6 * scale, "N={n} d={d}");
            }
            // Across the series band boundary.
            for d in [0.5 * SERIES_BAND, 2.0 * SERIES_BAND * 0.999, 2.0 * SERIES_BAND * 1.001] {
                let fd = (ratio_by_phasor_sum(n, d + 1e-7) - ratio_by_phasor_sum(n, d - 1e-7)) / 2e-7;
                assert!((fringe_ratio_slope(n, d) - fd).abs() < 1e-5 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn pixel_curve_peaks_on_the_diagonal() {
        let geom = SetupConfig {
            z2_m: 1.0,
            ..SetupConfig::default()
        }
        .to_geometry()
        .unwrap();
        let curve = curve_over_pixels(&geom, 137).unwrap();
        let (best, _) = curve
            .values()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        assert_eq!(curve.samples[best].pixels, Some((137, 137)));
        assert!(curve_over_pixels(&geom, 0).is_err());
        assert!(curve_over_pixels(&geom, 1001).is_err());
    }

    #[test]
    fn two_source_pixel_curve_is_a_cosine() {
        let geom = SetupConfig::default().to_geometry().unwrap();
        let curve = curve_over_pixels(&geom, 40).unwrap();
        for s in &curve.samples {
            let expect = 1.0 + (s.delta1 - s.delta2).cos() / 3.0;
            assert!((s.value - expect).abs() < 1e-12);
        }
        // Two whole periods on the object row: mean is 1.
        let mean = curve.values().sum::<f64>() / curve.samples.len() as f64;
        assert!((mean - 1.0).abs() < 1e-12);
        assert!(curve.values().all(|v| v >= 0.0));
    }

    #[test]
    fn csv_layout() {
        let curve = CorrelationCurve::analytic_over_delta(2, 2, 0.0, &[0.0, PI]);
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n1,n2,delta1,delta2,value");
        assert!(lines[1].starts_with(",,0,0,1.333"));
        assert_eq!(lines.len(), 3);
    }

    proptest! {
        #[test]
        fn periodic_symmetric_and_peaked(n in 2usize..=20, m in 2u32..=20, d in -20.0f64..20.0) {
            let g = g_tilde(n, m, d);
            prop_assert!((g_tilde(n, m, d + 2.0 * PI) - g).abs() < 1e-9 * g);
            prop_assert!((g_tilde(n, m, -d) - g).abs() < 1e-12 * g);
            prop_assert!(g_tilde(n, m, 0.0) >= g * (1.0 - 1e-12));
            prop_assert!(g > 0.0);
        }
    }

    #[test]
    fn two_sources_reduce_to_cosine() {
        for m in 2..=20u32 {
            let v = visibility_two_sources(m).unwrap();
            let worst = (0..10_000)
                .map(|i| -3.0 * PI + 6.0 * PI * i as f64 / 9_999.0)
                .map(|d| (g_tilde(2, m, d) - (1.0 + v * d.cos())).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-12, "m={m}: {worst}");
        }
    }
}

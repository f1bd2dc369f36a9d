//! Fisher information for the object distance `z2` under independent Poisson
//! pixel-pair measurements.
//!
//! Every form shares the prefactor `C = ω2² N_H⁴ / (3 z2²)`; what remains
//! (the *reduced* value) depends only on `N` and `m`. Available forms:
//!
//! * [`fisher_discrete`]: the exact double sum over pixel pairs,
//! * [`fisher_integral`]: its continuum limit, a single integral over `[0, π]`,
//! * [`fisher_analytic_n2`], [`fisher_analytic_n3`]: closed forms for two and
//!   three sources,
//! * [`fisher_lower_bound`]: an approximation that never exceeds the integral,
//! * [`crate::fitkit::fit_model_fisher`]: the fitted power-law model.

use std::f64::consts::PI;
use std::io::Write;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::{g_tilde, g_tilde_slope};
use crate::error::{Error, Result};
use crate::fitkit::{fit_model_fisher, FitTable};
use crate::geometry::SetupGeometry;
use crate::quadrature::Quadrature;

/// Distance from 0 or π below which the integrand uses its series form.
const ENDPOINT_WINDOW: f64 = 1e-4;

pub const DEFAULT_SOURCES: RangeInclusive<usize> = 2..=20;
pub const DEFAULT_ORDERS: RangeInclusive<u32> = 2..=20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    DiscreteSum,
    Integral,
    AnalyticN2,
    AnalyticN3,
    LowerBound,
    FitModel,
}

impl FisherMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            FisherMethod::DiscreteSum => "discrete_sum",
            FisherMethod::Integral => "integral",
            FisherMethod::AnalyticN2 => "analytic_n2",
            FisherMethod::AnalyticN3 => "analytic_n3",
            FisherMethod::LowerBound => "lower_bound",
            FisherMethod::FitModel => "fit_model",
        }
    }
}

/// `C = ω2² N_H⁴ / (3 z2²)` in 1/m².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prefactor(f64);

impl Prefactor {
    pub fn new(omega2: f64, n_pixels: usize, z2: f64) -> Self {
        let nh = n_pixels as f64;
        Prefactor(omega2 * omega2 * nh.powi(4) / (3.0 * z2 * z2))
    }

    pub fn from_geometry(geom: &SetupGeometry) -> Self {
        Self::new(geom.omega2(), geom.object().n_pixels(), geom.object().distance())
    }

    /// `C = 1`, for working directly in reduced units.
    pub fn unit() -> Self {
        Prefactor(1.0)
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherResult {
    /// Fisher information in 1/m².
    pub value: f64,
    pub method: FisherMethod,
    pub prefactor: f64,
    /// `value / prefactor`
    pub reduced: f64,
}

impl FisherResult {
    pub fn from_reduced(reduced: f64, prefactor: &Prefactor, method: FisherMethod) -> Self {
        Self {
            value: reduced * prefactor.value(),
            method,
            prefactor: prefactor.value(),
            reduced,
        }
    }
}

fn check_sources_and_order(n_sources: usize, order: u32) -> Result<()> {
    if n_sources < 2 {
        return Err(Error::Domain(format!("need N >= 2 sources, got {n_sources}")));
    }
    if order < 2 {
        return Err(Error::Domain(format!("need correlation order m >= 2, got {order}")));
    }
    Ok(())
}

/// Integrand of the continuum form on `s ∈ [0, π]`:
///
/// ```text
/// (N cos(Ns) sin(Ns) sin s − sin²(Ns) cos s)² / (sin⁶ s + (m−1)/N² sin²(Ns) sin⁴ s)
/// ```
///
/// It vanishes like `s²` at both ends; inside [`ENDPOINT_WINDOW`] the leading
/// terms of the numerator (`−N²(N²−1)s⁴/3`) and denominator (`m s⁶`) are used.
pub fn integrand(s: f64, n_sources: usize, order: u32) -> f64 {
    let n = n_sources as f64;
    let m = order as f64;
    // Symmetric about π/2; evaluating on [0, π/2] avoids cancellation near π.
    let t = s.min(PI - s).max(0.0);
    if t < ENDPOINT_WINDOW {
        let k = n * n * (n * n - 1.0);
        return k * k * t * t / (9.0 * m);
    }
    let s = t;
    let (s1, c1) = s.sin_cos();
    let (sn, cn) = (n * s).sin_cos();
    let num = n * cn * sn * s1 - sn * sn * c1;
    let s1_sq = s1 * s1;
    let s1_4 = s1_sq * s1_sq;
    let den = s1_4 * s1_sq + (m - 1.0) / (n * n) * sn * sn * s1_4;
    num * num / den
}

fn integral_reduced(n_sources: usize, order: u32) -> Result<f64> {
    let n = n_sources as f64;
    let weight = (order as f64 - 1.0) / (n * n);
    let scale = 1.0 / (1.0 + (order as f64 - 1.0) / n);
    let q = Quadrature::with_panels(32 * n_sources).rel_tol(1e-11);
    let integral = q.integrate(|s| integrand(s, n_sources, order), 0.0, PI)?;
    Ok(scale * weight * weight * integral.value / PI)
}

/// Continuum (large `N_H`, whole fringe periods) Fisher information.
pub fn fisher_integral(n_sources: usize, order: u32, prefactor: &Prefactor) -> Result<FisherResult> {
    check_sources_and_order(n_sources, order)?;
    let reduced = integral_reduced(n_sources, order)?;
    Ok(FisherResult::from_reduced(reduced, prefactor, FisherMethod::Integral))
}

/// Closed form for two sources, `C (1 − 2√m / (m+1))`. Also defined at `m = 1`,
/// where it is 0.
pub fn fisher_analytic_n2(order: u32, prefactor: &Prefactor) -> FisherResult {
    let m = order as f64;
    let reduced = 1.0 - 2.0 * m.sqrt() / (m + 1.0);
    FisherResult::from_reduced(reduced, prefactor, FisherMethod::AnalyticN2)
}

/// Closed form for three sources,
/// `C · 2/(3(m+2)) · (4m + 14 − 3√(6(m + 2 + √(m(m+8)))))`.
pub fn fisher_analytic_n3(order: u32, prefactor: &Prefactor) -> FisherResult {
    let m = order as f64;
    let inner = 6.0 * (m + 2.0 + (m * (m + 8.0)).sqrt());
    let reduced = 2.0 / (3.0 * (m + 2.0)) * (4.0 * m + 14.0 - 3.0 * inner.sqrt());
    FisherResult::from_reduced(reduced, prefactor, FisherMethod::AnalyticN3)
}

/// `C · N² / (4(N + m − 1)) · (m + 1 − 2√m)`. Exact for `N = 2`, below the
/// integral form otherwise.
pub fn fisher_lower_bound(n_sources: usize, order: u32, prefactor: &Prefactor) -> Result<FisherResult> {
    check_sources_and_order(n_sources, order)?;
    Ok(FisherResult::from_reduced(
        lower_bound_reduced(n_sources, order),
        prefactor,
        FisherMethod::LowerBound,
    ))
}

pub(crate) fn lower_bound_reduced(n_sources: usize, order: u32) -> f64 {
    let n = n_sources as f64;
    let m = order as f64;
    n * n / (4.0 * (n + m - 1.0)) * (m + 1.0 - 2.0 * m.sqrt())
}

/// Exact pixel-pair sum `Σ (∂G̃/∂z2)² / G̃` over `n1 = 1..=N_H1`, `n2 = 1..=N_H2`.
///
/// With `δ2 = ω2 n2` and `ω2 ∝ 1/z2`, `∂G̃/∂z2 = G̃'(Δ) · ω2 n2 / z2`.
pub fn fisher_discrete(geom: &SetupGeometry) -> FisherResult {
    let (n, m) = (geom.n_sources(), geom.order());
    let omega1 = geom.omega1();
    let omega2 = geom.omega2();
    let z2 = geom.object().distance();
    let n_obj = geom.object().n_pixels();
    let rows: Vec<f64> = (1..=geom.reference().n_pixels())
        .into_par_iter()
        .map(|n1| {
            let delta1 = omega1 * n1 as f64;
            let mut acc = NeumaierSum::default();
            for n2 in 1..=n_obj {
                let delta = delta1 - omega2 * n2 as f64;
                let dz = g_tilde_slope(n, m, delta) * omega2 * n2 as f64 / z2;
                acc.add(dz * dz / g_tilde(n, m, delta));
            }
            acc.total()
        })
        .collect();
    let mut total = NeumaierSum::default();
    rows.into_iter().for_each(|r| total.add(r));
    let prefactor = Prefactor::from_geometry(geom);
    let value = total.total();
    FisherResult {
        value,
        method: FisherMethod::DiscreteSum,
        prefactor: prefactor.value(),
        reduced: value / prefactor.value(),
    }
}

/// `(F_num − F_app) / F_num`; positive when the approximation underestimates.
pub fn relative_difference(numeric: &FisherResult, approx: &FisherResult) -> Result<f64> {
    if !(numeric.value > 0.0) {
        return Err(Error::Domain(format!(
            "relative difference needs a positive reference value, got {}",
            numeric.value
        )));
    }
    Ok((numeric.value - approx.value) / numeric.value)
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridMethod {
    Integral,
    LowerBound,
    FitModel(FitTable),
}

impl GridMethod {
    pub fn method(&self) -> FisherMethod {
        match self {
            GridMethod::Integral => FisherMethod::Integral,
            GridMethod::LowerBound => FisherMethod::LowerBound,
            GridMethod::FitModel(_) => FisherMethod::FitModel,
        }
    }

    fn reduced(&self, n: usize, m: u32) -> Result<f64> {
        let unit = Prefactor::unit();
        let result = match self {
            GridMethod::Integral => fisher_integral(n, m, &unit)?,
            GridMethod::LowerBound => fisher_lower_bound(n, m, &unit)?,
            GridMethod::FitModel(table) => fit_model_fisher(n, m, table, &unit),
        };
        Ok(result.reduced)
    }
}

/// Reduced Fisher values over a rectangle of `(N, m)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FisherGrid {
    pub method: FisherMethod,
    pub n_range: (usize, usize),
    pub m_range: (u32, u32),
    /// Row-major: one row per `N`, one column per `m`.
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub n: usize,
    pub m: u32,
    pub reduced_value: f64,
}

pub fn grid_scan(
    n_range: RangeInclusive<usize>,
    m_range: RangeInclusive<u32>,
    method: &GridMethod,
) -> Result<FisherGrid> {
    let (n_lo, n_hi) = (*n_range.start(), *n_range.end());
    let (m_lo, m_hi) = (*m_range.start(), *m_range.end());
    if n_lo < 2 || m_lo < 2 || n_lo > n_hi || m_lo > m_hi {
        return Err(Error::Domain(format!(
            "grid ranges must be non-empty with N, m >= 2 (got N {n_lo}..={n_hi}, m {m_lo}..={m_hi})"
        )));
    }
    let cells: Vec<(usize, u32)> = n_range.flat_map(|n| m_range.clone().map(move |m| (n, m))).collect();
    let values = cells
        .par_iter()
        .map(|&(n, m)| {
            method.reduced(n, m).map_err(|e| Error::GridCell {
                n,
                m,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FisherGrid {
        method: method.method(),
        n_range: (n_lo, n_hi),
        m_range: (m_lo, m_hi),
        values,
    })
}

impl FisherGrid {
    pub fn n_count(&self) -> usize {
        self.n_range.1 - self.n_range.0 + 1
    }

    pub fn m_count(&self) -> usize {
        (self.m_range.1 - self.m_range.0 + 1) as usize
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: usize, m: u32) -> Option<f64> {
        if n < self.n_range.0 || n > self.n_range.1 || m < self.m_range.0 || m > self.m_range.1 {
            return None;
        }
        let row = n - self.n_range.0;
        let col = (m - self.m_range.0) as usize;
        Some(self.values[row * self.m_count() + col])
    }

    pub fn cells(&self) -> impl Iterator<Item = GridCell> + '_ {
        let m_count = self.m_count();
        self.values.iter().enumerate().map(move |(i, &v)| GridCell {
            n: self.n_range.0 + i / m_count,
            m: self.m_range.0 + (i % m_count) as u32,
            reduced_value: v,
        })
    }

    pub fn argmin(&self) -> GridCell {
        self.cells()
            .min_by(|a, b| a.reduced_value.total_cmp(&b.reduced_value))
            .expect("grid is never empty")
    }

    pub fn argmax(&self) -> GridCell {
        self.cells()
            .max_by(|a, b| a.reduced_value.total_cmp(&b.reduced_value))
            .expect("grid is never empty")
    }

    pub fn max_min_ratio(&self) -> f64 {
        self.argmax().reduced_value / self.argmin().reduced_value
    }

    /// Whether the grid extends beyond `N, m ∈ 2..=20`.
    pub fn exceeds_default_range(&self) -> bool {
        self.n_range.1 > *DEFAULT_SOURCES.end() || self.m_range.1 > *DEFAULT_ORDERS.end()
    }

    /// Long format `N,m,reduced_value,method`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "N,m,reduced_value,method")?;
        for c in self.cells() {
            writeln!(out, "{},{},{},{}", c.n, c.m, c.reduced_value, self.method.as_str())?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "n_range": [self.n_range.0, self.n_range.1],
            "m_range": [self.m_range.0, self.m_range.1],
            "cells": self.cells().collect::<Vec<_>>(),
        })
    }
}

/// Compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

//! Monte Carlo speckle: random thermal source amplitudes, the intensities they
//! produce, frame-averaged correlation estimates, and Poisson pixel-pair
//! counts.
//!
//! Thermal sources are modeled by independent circular complex Gaussian
//! amplitudes with `⟨|a|²⟩ = n̄`; for such fields the normally ordered
//! moments equal the classical Gaussian moments, so the frame average of
//! `I(δ1)^{m−1} I(δ2)` follows the analytic correlation.
//!
//! All random draws are keyed by `(seed, frame)` or `(seed, pixel row)` so the
//! output is identical for any number of worker threads.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::correlation::{g_tilde, CorrelationCurve, CurveSample, Provenance};
use crate::error::{Error, Result};
use crate::fisher::NeumaierSum;
use crate::geometry::{SetupGeometry, SourceArray};

/// Frames below this count are rejected by the correlation estimator.
pub const MIN_FRAMES: usize = 100;

const AMPLITUDE_STREAM: u64 = 0x5eed;
const COUNT_STREAM: u64 = 1 << 63;
/// 32-bit ChaCha words consumed per amplitude (two u64 draws).
const WORDS_PER_AMPLITUDE: u128 = 4;
const FRAME_BLOCK: usize = 2048;

fn unit_open(bits: u64) -> f64 {
    // (0, 1), never exactly 0 so the logarithm stays finite.
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Per-frame amplitudes of all sources.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBatch {
    n_sources: usize,
    seed: Option<u64>,
    amplitudes: Vec<Complex64>,
}

impl FrameBatch {
    /// Hand-built frames, e.g. for deterministic checks. `amplitudes` is
    /// frame-major and its length must be a multiple of `n_sources`.
    pub fn from_amplitudes(n_sources: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_sources == 0 || amplitudes.is_empty() || !amplitudes.len().is_multiple_of(n_sources) {
            return Err(Error::invalid(
                "amplitudes",
                format!("{} values do not form whole frames of {n_sources}", amplitudes.len()),
            ));
        }
        Ok(Self {
            n_sources,
            seed: None,
            amplitudes,
        })
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn n_frames(&self) -> usize {
        self.amplitudes.len() / self.n_sources
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn frame(&self, index: usize) -> &[Complex64] {
        &self.amplitudes[index * self.n_sources..(index + 1) * self.n_sources]
    }

    pub fn frames(&self) -> std::slice::Chunks<'_, Complex64> {
        self.amplitudes.chunks(self.n_sources)
    }
}

/// Draw `n_frames` independent speckle realizations.
pub fn sample_frames(source: &SourceArray, n_frames: usize, seed: u64) -> Result<FrameBatch> {
    if n_frames == 0 {
        return Err(Error::invalid("n_frames", "need at least one frame"));
    }
    let n = source.n_sources();
    let mean = source.mean_photons();
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); n_frames * n];
    amplitudes
        .par_chunks_mut(FRAME_BLOCK * n)
        .enumerate()
        .for_each(|(block, out)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(AMPLITUDE_STREAM);
            rng.set_word_pos((block * FRAME_BLOCK * n) as u128 * WORDS_PER_AMPLITUDE);
            for a in out.iter_mut() {
                let u1 = unit_open(rng.next_u64());
                let u2 = unit_open(rng.next_u64());
                // |a|² ~ Exp(n̄), uniform phase
                *a = Complex64::from_polar((-mean * u1.ln()).sqrt(), 2.0 * PI * u2);
            }
        });
    Ok(FrameBatch {
        n_sources: n,
        seed: Some(seed),
        amplitudes,
    })
}

/// Far-field intensity `|Σ_l e^{−i l δ} a_l|²` for sources at `x = l d`.
pub fn intensity_at(frame: &[Complex64], delta: f64) -> f64 {
    let step = Complex64::from_polar(1.0, -delta);
    let mut phasor = step;
    let mut field = Complex64::new(0.0, 0.0);
    for a in frame {
        field += phasor * a;
        phasor *= step;
    }
    field.norm_sqr()
}

/// Intensity averaged over `2N` equally spaced phases: one fringe period.
fn period_average_intensity(frame: &[Complex64]) -> f64 {
    let k = 2 * frame.len().max(1);
    (0..k)
        .map(|j| intensity_at(frame, 2.0 * PI * j as f64 / k as f64))
        .sum::<f64>()
        / k as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Per-frame reference statistics shared by all object phases.
struct ReferenceTerms {
    /// `I(δ1)^{m−1}`
    weight: Vec<f64>,
    /// `I(δ1)^{m−1} ⟨I⟩_period`
    norm: Vec<f64>,
}

fn reference_terms(batch: &FrameBatch, order: u32, delta1: f64) -> Result<ReferenceTerms> {
    if batch.n_frames() < MIN_FRAMES {
        return Err(Error::StatisticalValidity {
            got: batch.n_frames(),
            required: MIN_FRAMES,
        });
    }
    if order < 2 {
        return Err(Error::Domain(format!("correlation order must be >= 2, got {order}")));
    }
    let (weight, norm): (Vec<f64>, Vec<f64>) = batch
        .amplitudes
        .par_chunks(batch.n_sources)
        .map(|f| {
            let w = intensity_at(f, delta1).powi(order as i32 - 1);
            (w, w * period_average_intensity(f))
        })
        .unzip();
    Ok(ReferenceTerms { weight, norm })
}

fn ratio_estimate(batch: &FrameBatch, terms: &ReferenceTerms, delta2: f64) -> CorrelationEstimate {
    let x: Vec<f64> = batch
        .amplitudes
        .par_chunks(batch.n_sources)
        .zip(terms.weight.par_iter())
        .map(|(f, w)| w * intensity_at(f, delta2))
        .collect();
    let n = x.len() as f64;
    let (mut sx, mut sy) = (NeumaierSum::default(), NeumaierSum::default());
    x.iter().for_each(|v| sx.add(*v));
    terms.norm.iter().for_each(|v| sy.add(*v));
    let ratio = sx.total() / sy.total();
    let mean_y = sy.total() / n;
    // Delta method: Var(X̄/Ȳ) ≈ Var(X − rY) / (n Ȳ²)
    let mut ss = NeumaierSum::default();
    x.iter()
        .zip(&terms.norm)
        .for_each(|(xi, yi)| ss.add((xi - ratio * yi).powi(2)));
    let var = ss.total() / (n - 1.0);
    CorrelationEstimate {
        estimate: ratio,
        std_error: (var / n).sqrt() / mean_y,
    }
}

/// Frame-average estimate of the normalized correlation at `(δ1, δ2)`:
/// `⟨I(δ1)^{m−1} I(δ2)⟩` divided by the same statistic averaged over a full
/// period of `δ2`.
pub fn empirical_correlation(batch: &FrameBatch, order: u32, delta1: f64, delta2: f64) -> Result<CorrelationEstimate> {
    let terms = reference_terms(batch, order, delta1)?;
    Ok(ratio_estimate(batch, &terms, delta2))
}

/// Empirical curve at fixed `delta1` over the given `Δ = δ1 − δ2` values.
pub fn empirical_curve(batch: &FrameBatch, order: u32, delta1: f64, deltas: &[f64]) -> Result<CorrelationCurve> {
    let terms = reference_terms(batch, order, delta1)?;
    let samples = deltas
        .iter()
        .map(|&d| {
            let est = ratio_estimate(batch, &terms, delta1 - d);
            CurveSample {
                pixels: None,
                delta1,
                delta2: delta1 - d,
                value: est.estimate,
                std_error: Some(est.std_error),
            }
        })
        .collect();
    Ok(CorrelationCurve {
        n_sources: batch.n_sources,
        order,
        provenance: Provenance::Empirical,
        samples,
    })
}

/// Photon-coincidence counts per pixel pair, row-major in `n1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMap {
    n_pixels: usize,
    budget: f64,
    seed: u64,
    counts: Vec<u32>,
}

const HEADER_BYTES: usize = 4 + 8 + 8;

impl CountMap {
    pub fn new(n_pixels: usize, budget: f64, seed: u64, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != n_pixels * n_pixels {
            return Err(Error::Format(format!(
                "{} counts for a {n_pixels}×{n_pixels} map",
                counts.len()
            )));
        }
        if !(budget.is_finite() && budget > 0.0) {
            return Err(Error::invalid(
                "budget",
                format!("must be finite and > 0, got {budget}"),
            ));
        }
        Ok(Self {
            n_pixels,
            budget,
            seed,
            counts,
        })
    }

    pub fn n_pixels(&self) -> usize {
        self.n_pixels
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Count at 1-based pixel pair `(n1, n2)`.
    pub fn get(&self, n1: usize, n2: usize) -> Option<u32> {
        if n1 == 0 || n2 == 0 || n1 > self.n_pixels || n2 > self.n_pixels {
            return None;
        }
        Some(self.counts[(n1 - 1) * self.n_pixels + (n2 - 1)])
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n1,n2,count")?;
        for (i, row) in self.counts.chunks(self.n_pixels).enumerate() {
            for (j, c) in row.iter().enumerate() {
                writeln!(out, "{},{},{c}", i + 1, j + 1)?;
            }
        }
        Ok(())
    }

    /// Little-endian `{N_H: u32, β: f64, seed: u64}` followed by row-major u32 counts.
    pub fn write_binary<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(HEADER_BYTES + 4 * self.counts.len());
        buf.extend_from_slice(&(self.n_pixels as u32).to_le_bytes());
        buf.extend_from_slice(&self.budget.to_le_bytes());
        buf.extend_from_slice(&self.seed.to_le_bytes());
        for c in &self.counts {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        out.write_all(&buf)
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Format(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        let n_pixels = u32::from_le_bytes(bytes[0..4].try_into().expect("4 bytes")) as usize;
        let budget = f64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes"));
        let seed = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let body = &bytes[HEADER_BYTES..];
        if body.len() != 4 * n_pixels * n_pixels {
            return Err(Error::Format(format!(
                "expected {} count bytes for N_H = {n_pixels}, found {}",
                4 * n_pixels * n_pixels,
                body.len()
            )));
        }
        let counts = body
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Self::new(n_pixels, budget, seed, counts)
    }
}

fn square_pixels(geom: &SetupGeometry) -> Result<usize> {
    let n = geom.reference().n_pixels();
    if geom.object().n_pixels() != n {
        return Err(Error::Configuration(
            "count maps need equal pixel counts on both planes".into(),
        ));
    }
    Ok(n)
}

/// Noiseless pair rates `β G̃(ω1 n1 − ω2 n2)`, row-major in `n1`.
pub fn expected_counts(geom: &SetupGeometry, budget: f64) -> Result<Vec<f64>> {
    let nh = square_pixels(geom)?;
    let (n, m) = (geom.n_sources(), geom.order());
    let (w1, w2) = (geom.omega1(), geom.omega2());
    Ok((0..nh * nh)
        .map(|i| {
            let (n1, n2) = (i / nh + 1, i % nh + 1);
            budget * g_tilde(n, m, w1 * n1 as f64 - w2 * n2 as f64)
        })
        .collect())
}

/// Independent Poisson counts with mean `β G̃` for every pixel pair.
pub fn synthesize_counts(geom: &SetupGeometry, budget: f64, seed: u64) -> Result<CountMap> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(Error::invalid(
            "budget",
            format!("must be finite and > 0, got {budget}"),
        ));
    }
    let nh = square_pixels(geom)?;
    let (n, m) = (geom.n_sources(), geom.order());
    let (w1, w2) = (geom.omega1(), geom.omega2());
    let mut counts = vec![0u32; nh * nh];
    counts.par_chunks_mut(nh).enumerate().for_each(|(row, out)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(COUNT_STREAM | row as u64);
        let delta1 = w1 * (row + 1) as f64;
        for (j, c) in out.iter_mut().enumerate() {
            let rate = budget * g_tilde(n, m, delta1 - w2 * (j + 1) as f64);
            let poisson = Poisson::new(rate).expect("rate is finite and positive");
            *c = poisson.sample(&mut rng) as u32;
        }
    });
    CountMap::new(nh, budget, seed, counts)
}

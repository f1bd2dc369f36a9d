//! Source array, detector planes and the phase / spatial-frequency mappings
//! between them.
//!
//! All quantities are SI (meters, radians). Values are immutable after
//! construction and validated once in the constructors.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` equidistant, statistically independent thermal sources on the x-axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SourceArray {
    n_sources: usize,
    spacing: f64,
    wavelength: f64,
    mean_photons: f64,
}

impl SourceArray {
    pub fn new(n_sources: usize, spacing: f64, wavelength: f64, mean_photons: f64) -> Result<Self> {
        if n_sources < 2 {
            return Err(Error::invalid(
                "n_sources",
                format!("need at least 2 sources, got {n_sources}"),
            ));
        }
        positive("spacing", spacing)?;
        positive("wavelength", wavelength)?;
        positive("mean_photons", mean_photons)?;
        Ok(Self {
            n_sources,
            spacing,
            wavelength,
            mean_photons,
        })
    }

    pub fn n_sources(&self) -> usize {
        self.n_sources
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn mean_photons(&self) -> f64 {
        self.mean_photons
    }

    pub fn wave_number(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Advisory far-field distance `10 (N d)^2 / λ`.
    pub fn far_field_distance(&self) -> f64 {
        let aperture = self.n_sources as f64 * self.spacing;
        10.0 * aperture * aperture / self.wavelength
    }
}

/// One camera: its distance from the sources and its horizontal pixel row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectorPlane {
    distance: f64,
    pixel_pitch: f64,
    n_pixels: usize,
}

impl DetectorPlane {
    pub fn new(distance: f64, pixel_pitch: f64, n_pixels: usize) -> Result<Self> {
        positive("distance", distance)?;
        positive("pixel_pitch", pixel_pitch)?;
        if n_pixels < 2 {
            return Err(Error::invalid(
                "n_pixels",
                format!("need at least 2 pixels, got {n_pixels}"),
            ));
        }
        Ok(Self {
            distance,
            pixel_pitch,
            n_pixels,
        })
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn pixel_pitch(&self) -> f64 {
        self.pixel_pitch
    }

    pub fn n_pixels(&self) -> usize {
        self.n_pixels
    }

    /// Same camera moved to another distance.
    pub fn at_distance(&self, distance: f64) -> Result<Self> {
        Self::new(distance, self.pixel_pitch, self.n_pixels)
    }
}

/// Full measurement configuration: sources, reference plane (`z1`, the `m-1`
/// stacked detectors), object plane (`z2`, the single detector) and the
/// correlation order `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetupGeometry {
    source: SourceArray,
    reference: DetectorPlane,
    object: DetectorPlane,
    order: u32,
}

impl SetupGeometry {
    /// Both planes must share pixel pitch and pixel count.
    pub fn new(source: SourceArray, reference: DetectorPlane, object: DetectorPlane, order: u32) -> Result<Self> {
        if reference.pixel_pitch != object.pixel_pitch || reference.n_pixels != object.n_pixels {
            return Err(Error::invalid(
                "object plane",
                "pixel pitch and pixel count must match the reference plane (use new_unmatched to override)",
            ));
        }
        Self::new_unmatched(source, reference, object, order)
    }

    /// Like [`SetupGeometry::new`] but allows the planes to differ.
    pub fn new_unmatched(
        source: SourceArray,
        reference: DetectorPlane,
        object: DetectorPlane,
        order: u32,
    ) -> Result<Self> {
        if order < 2 {
            return Err(Error::invalid(
                "order",
                format!("correlation order must be >= 2, got {order}"),
            ));
        }
        Ok(Self {
            source,
            reference,
            object,
            order,
        })
    }

    pub fn source(&self) -> &SourceArray {
        &self.source
    }

    pub fn reference(&self) -> &DetectorPlane {
        &self.reference
    }

    pub fn object(&self) -> &DetectorPlane {
        &self.object
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn n_sources(&self) -> usize {
        self.source.n_sources
    }

    pub fn omega1(&self) -> f64 {
        spatial_frequency(&self.reference, &self.source)
    }

    pub fn omega2(&self) -> f64 {
        spatial_frequency(&self.object, &self.source)
    }

    /// The same setup with the object plane moved to `z2`.
    pub fn with_object_distance(&self, z2: f64) -> Result<Self> {
        Ok(Self {
            object: self.object.at_distance(z2)?,
            ..*self
        })
    }

    /// The same setup with a different source count and correlation order.
    pub fn with_sources_and_order(&self, n_sources: usize, order: u32) -> Result<Self> {
        let s = &self.source;
        let source = SourceArray::new(n_sources, s.spacing, s.wavelength, s.mean_photons)?;
        Self::new_unmatched(source, self.reference, self.object, order)
    }

    /// Spatial frequency the object plane would have at distance `z2`.
    pub fn omega_at(&self, z2: f64) -> f64 {
        2.0 * PI * self.source.spacing * self.object.pixel_pitch / (self.source.wavelength * z2)
    }

    /// Inverse of [`SetupGeometry::omega_at`].
    pub fn distance_for_omega(&self, omega: f64) -> f64 {
        2.0 * PI * self.source.spacing * self.object.pixel_pitch / (self.source.wavelength * omega)
    }

    /// Warning text when either plane sits closer than the advisory
    /// far-field distance; `None` otherwise.
    pub fn far_field_advisory(&self) -> Option<String> {
        let limit = self.source.far_field_distance();
        let near: Vec<String> = [("z1", self.reference.distance), ("z2", self.object.distance)]
            .iter()
            .filter(|(_, z)| *z < limit)
            .map(|(name, z)| format!("{name} = {z} m"))
            .collect();
        if near.is_empty() {
            None
        } else {
            Some(format!(
                "{} below the advisory far-field distance 10 (N d)^2 / lambda = {limit:.4} m",
                near.join(", ")
            ))
        }
    }
}

/// Phase advance per pixel, `ω = 2π d p / (λ z)`.
pub fn spatial_frequency(plane: &DetectorPlane, source: &SourceArray) -> f64 {
    2.0 * PI * source.spacing * plane.pixel_pitch / (source.wavelength * plane.distance)
}

/// Phase difference between adjacent sources seen by pixel `pixel`,
/// `δ = ω n`. Pixel 0 is admitted for analytic probing.
pub fn phase_difference(plane: &DetectorPlane, source: &SourceArray, pixel: i64) -> Result<f64> {
    if pixel < 0 || pixel > plane.n_pixels as i64 {
        return Err(Error::OutOfRange {
            what: "pixel",
            value: pixel,
            lo: 0,
            hi: plane.n_pixels as i64,
        });
    }
    Ok(spatial_frequency(plane, source) * pixel as f64)
}

/// Number of whole fringe periods spanned by a detector row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WholePeriods {
    pub periods: u64,
    /// `|ω N_H / 2π − periods| / periods`
    pub deviation: f64,
}

pub fn whole_period_check(plane: &DetectorPlane, source: &SourceArray) -> Result<WholePeriods> {
    let span = spatial_frequency(plane, source) * plane.n_pixels as f64 / (2.0 * PI);
    let periods = span.round();
    if periods < 1.0 {
        return Err(Error::Configuration(format!(
            "detector row spans {span:.4} fringe periods; at least one whole period is required"
        )));
    }
    Ok(WholePeriods {
        periods: periods as u64,
        deviation: (span - periods).abs() / periods,
    })
}

/// Flat JSON configuration document. Missing keys take their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetupConfig {
    pub n_sources: usize,
    pub spacing_m: f64,
    pub wavelength_m: f64,
    pub mean_photons: f64,
    pub z1_m: f64,
    pub z2_m: f64,
    pub pixel_pitch_m: f64,
    pub n_pixels: usize,
    pub order: u32,
}

impl Default for SetupConfig {
    /// `N = m = 2`, one fringe period on the reference row and two on the
    /// object row.
    fn default() -> Self {
        Self {
            n_sources: 2,
            spacing_m: 50e-6,
            wavelength_m: 500e-9,
            mean_photons: 1.0,
            z1_m: 1.0,
            z2_m: 0.5,
            pixel_pitch_m: 10e-6,
            n_pixels: 1000,
            order: 2,
        }
    }
}

impl SetupConfig {
    pub fn to_geometry(&self) -> Result<SetupGeometry> {
        let source = SourceArray::new(self.n_sources, self.spacing_m, self.wavelength_m, self.mean_photons)?;
        let reference = DetectorPlane::new(self.z1_m, self.pixel_pitch_m, self.n_pixels)?;
        let object = DetectorPlane::new(self.z2_m, self.pixel_pitch_m, self.n_pixels)?;
        SetupGeometry::new(source, reference, object, self.order)
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn source(wavelength: f64, spacing: f64) -> SourceArray {
        SourceArray::new(2, spacing, wavelength, 1.0).unwrap()
    }

    #[test]
    fn spatial_frequency_examples() {
        let s = source(500e-9, 100e-6);
        let p1 = DetectorPlane::new(1.0, 5e-6, 1000).unwrap();
        let p2 = DetectorPlane::new(2.0, 5e-6, 1000).unwrap();
        assert_relative_eq!(spatial_frequency(&p1, &s), 6.283185307179586e-3, max_relative = 1e-12);
        assert_relative_eq!(spatial_frequency(&p2, &s), 3.141592653589793e-3, max_relative = 1e-12);

        let hene = source(632.8e-9, 200e-6);
        assert_relative_eq!(spatial_frequency(&p1, &hene), 9.9290e-3, max_relative = 1e-4);
    }

    #[test]
    fn phase_difference_examples() {
        let s = source(500e-9, 100e-6);
        let p = DetectorPlane::new(1.0, 5e-6, 1000).unwrap();
        assert_eq!(phase_difference(&p, &s, 0).unwrap(), 0.0);
        assert_relative_eq!(phase_difference(&p, &s, 500).unwrap(), PI, max_relative = 1e-12);
        assert_relative_eq!(phase_difference(&p, &s, 1000).unwrap(), 2.0 * PI, max_relative = 1e-12);
        assert!(matches!(phase_difference(&p, &s, 1001), Err(Error::OutOfRange { .. })));
        assert!(phase_difference(&p, &s, -1).is_err());
    }

    #[test]
    fn whole_period_examples() {
        let s = source(500e-9, 100e-6);
        let exact = whole_period_check(&DetectorPlane::new(1.0, 5e-6, 1000).unwrap(), &s).unwrap();
        assert_eq!(exact.periods, 1);
        assert!(exact.deviation < 1e-12);

        let off = whole_period_check(&DetectorPlane::new(1.0, 5e-6, 1050).unwrap(), &s).unwrap();
        assert_eq!(off.periods, 1);
        assert_relative_eq!(off.deviation, 0.05, max_relative = 1e-9);

        // ω = 1e-4 rad/pixel over 100 pixels: far less than one period.
        let tiny = DetectorPlane::new(2.0 * PI * 100e-6 * 5e-6 / (500e-9 * 1e-4), 5e-6, 100).unwrap();
        assert!(matches!(whole_period_check(&tiny, &s), Err(Error::Configuration(_))));
    }

    #[test]
    fn constructors_reject_bad_values() {
        assert!(SourceArray::new(1, 1e-4, 5e-7, 1.0).is_err());
        assert!(SourceArray::new(2, 0.0, 5e-7, 1.0).is_err());
        assert!(SourceArray::new(2, 1e-4, f64::NAN, 1.0).is_err());
        assert!(DetectorPlane::new(1.0, 5e-6, 1).is_err());
        assert!(DetectorPlane::new(-1.0, 5e-6, 10).is_err());

        let s = source(5e-7, 1e-4);
        let a = DetectorPlane::new(1.0, 5e-6, 100).unwrap();
        let b = DetectorPlane::new(1.0, 5e-6, 200).unwrap();
        assert!(SetupGeometry::new(s, a, a, 1).is_err());
        assert!(SetupGeometry::new(s, a, b, 2).is_err());
        assert!(SetupGeometry::new_unmatched(s, a, b, 2).is_ok());
    }

    #[test]
    fn default_config_is_valid_and_whole_period() {
        let geom = SetupConfig::default().to_geometry().unwrap();
        let wp = whole_period_check(geom.reference(), geom.source()).unwrap();
        assert_eq!(wp.periods, 1);
        assert!(wp.deviation < 1e-12);
        assert!(geom.far_field_advisory().is_none());
        assert_relative_eq!(geom.distance_for_omega(geom.omega2()), 0.5, max_relative = 1e-14);
    }

    #[test]
    fn far_field_warning_for_close_planes() {
        let cfg = SetupConfig {
            n_sources: 10,
            ..SetupConfig::default()
        };
        let msg = cfg.to_geometry().unwrap().far_field_advisory().unwrap();
        assert!(msg.contains("z1") && msg.contains("z2"));
    }

    proptest! {
        #[test]
        fn omega_times_distance_is_constant(z in 0.01f64..1e4) {
            let s = source(500e-9, 100e-6);
            let reference = spatial_frequency(&DetectorPlane::new(1.0, 5e-6, 10).unwrap(), &s);
            let w = spatial_frequency(&DetectorPlane::new(z, 5e-6, 10).unwrap(), &s);
            prop_assert!((w * z - reference).abs() <= 1e-12 * reference);
        }

        #[test]
        fn phase_is_linear_in_pixel(a in 0i64..500, b in 0i64..500) {
            let s = source(500e-9, 100e-6);
            let p = DetectorPlane::new(0.7, 5e-6, 1000).unwrap();
            let sum = phase_difference(&p, &s, a).unwrap() + phase_difference(&p, &s, b).unwrap();
            let joint = phase_difference(&p, &s, a + b).unwrap();
            prop_assert!((sum - joint).abs() <= 1e-12 * joint.abs().max(1.0));
        }

        #[test]
        fn deviation_vanishes_on_whole_periods(periods in 1u64..20, n_pixels in 100usize..5000) {
            // Choose z so that ω N_H = 2π · periods.
            let s = source(500e-9, 100e-6);
            let pitch = 5e-6;
            let omega = 2.0 * PI * periods as f64 / n_pixels as f64;
            let z = 2.0 * PI * 100e-6 * pitch / (500e-9 * omega);
            let wp = whole_period_check(&DetectorPlane::new(z, pitch, n_pixels).unwrap(), &s).unwrap();
            prop_assert_eq!(wp.periods, periods);
            prop_assert!(wp.deviation < 1e-12);
        }
    }
}

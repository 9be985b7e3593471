//! Density bands `lower <= p <= upper` sampled on a grid.

use std::sync::Arc;

use crate::error::{BandViolation, Error, Result};
use crate::grid::Grid;

/// Slack on the two mass inequalities; sampled continuous bounds carry
/// quadrature error of about this size.
pub const MASS_SLACK: f64 = 1e-9;

/// Replacement for infinite upper samples when blending a starting density.
pub const DEFAULT_UPPER_CAP: f64 = 1e6;

/// Lower and upper bound samples of one density. Upper samples may be `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityBand {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DensityBand {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::Length { what: "band upper", expected: lower.len(), got: upper.len() });
        }
        Ok(Self { lower, upper })
    }

    /// Band pinning the density to `values`.
    pub fn degenerate(values: Vec<f64>) -> Self {
        Self { upper: values.clone(), lower: values }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn lower_mass(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.lower)
    }

    pub fn upper_mass(&self, grid: &Grid) -> f64 {
        grid.integrate(&self.upper)
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    /// Checks ordering and both mass inequalities.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.check(grid)?.map_or(Ok(()), |violation| Err(Error::InfeasibleBand { density: 0, violation }))
    }

    /// Like [`validate`](Self::validate) but separates shape errors from the verdict.
    pub fn check(&self, grid: &Grid) -> Result<Option<BandViolation>> {
        if self.lower.len() != grid.len() {
            return Err(Error::Length { what: "band lower", expected: grid.len(), got: self.lower.len() });
        }
        if self.upper.len() != grid.len() {
            return Err(Error::Length { what: "band upper", expected: grid.len(), got: self.upper.len() });
        }
        for (k, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(l >= 0.0 && l <= u) || !l.is_finite() {
                return Ok(Some(BandViolation::Ordering { k, lower: l, upper: u }));
            }
        }
        let lm = self.lower_mass(grid);
        if lm > 1.0 + MASS_SLACK {
            return Ok(Some(BandViolation::LowerMass { mass: lm }));
        }
        let um = self.upper_mass(grid);
        if um < 1.0 - MASS_SLACK {
            return Ok(Some(BandViolation::UpperMass { mass: um }));
        }
        Ok(None)
    }

    /// Element-wise `min(upper, max(values, lower))`.
    pub fn clamp(&self, values: &[f64]) -> Vec<f64> {
        values.iter().enumerate().map(|(k, &v)| self.clamp_at(k, v)).collect()
    }

    #[inline]
    pub fn clamp_at(&self, k: usize, v: f64) -> f64 {
        // f64::max drops a NaN in favour of the lower bound.
        v.max(self.lower[k]).min(self.upper[k])
    }

    /// Convex blend of the bounds with unit mass; infinite upper samples are
    /// replaced by `cap` first.
    pub fn feasible_init(&self, grid: &Grid, cap: f64) -> Result<Vec<f64>> {
        self.validate(grid)?;
        let upper: Vec<f64> = self.upper.iter().map(|&u| if u.is_finite() { u } else { u.min(cap).max(0.0) }).collect();
        let lm = self.lower_mass(grid);
        let um = grid.integrate(&upper);
        if um < 1.0 - MASS_SLACK {
            return Err(Error::Config(format!("upper cap {cap} leaves band mass {um} below 1")));
        }
        if um - lm <= 0.0 {
            return Ok(self.lower.clone());
        }
        let lambda = ((1.0 - lm) / (um - lm)).clamp(0.0, 1.0);
        if lambda == 0.0 {
            return Ok(self.lower.clone());
        }
        Ok(self
            .lower
            .iter()
            .zip(&upper)
            .enumerate()
            .map(|(k, (&l, &u))| self.clamp_at(k, lambda * u + (1.0 - lambda) * l))
            .collect())
    }

    /// Clamps `values` into the band and then blends towards whichever bound
    /// restores unit mass.
    pub fn fit(&self, values: &[f64], grid: &Grid) -> Result<Vec<f64>> {
        self.validate(grid)?;
        let clamped = self.clamp(values);
        let m = grid.integrate(&clamped);
        let target = if m > 1.0 { &self.lower } else { &self.upper };
        let tm = grid.integrate(target);
        if (m - 1.0).abs() <= f64::EPSILON || !(tm - m).is_finite() || tm == m {
            return Ok(clamped);
        }
        let beta = ((1.0 - m) / (tm - m)).clamp(0.0, 1.0);
        Ok(clamped
            .iter()
            .zip(target)
            .enumerate()
            .map(|(k, (&v, &t))| self.clamp_at(k, v + beta * (t - v)))
            .collect())
    }
}

pub fn validate_band(band: &DensityBand, grid: &Grid) -> Result<Option<BandViolation>> {
    band.check(grid)
}

pub fn clamp(values: &[f64], band: &DensityBand) -> Vec<f64> {
    band.clamp(values)
}

pub fn feasible_init(band: &DensityBand, grid: &Grid) -> Result<Vec<f64>> {
    band.feasible_init(grid, DEFAULT_UPPER_CAP)
}

/// Validates a set of bands, tagging errors with the density index.
pub fn validate_all(bands: &[DensityBand], grid: &Grid) -> Result<()> {
    for (n, band) in bands.iter().enumerate() {
        if let Some(violation) = band.check(grid)? {
            return Err(Error::InfeasibleBand { density: n, violation });
        }
    }
    Ok(())
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Band bounds as functions of `omega`, for off-grid evaluation.
#[derive(Clone)]
pub struct BandFunction {
    lower: Profile,
    upper: Profile,
}

impl BandFunction {
    pub fn new(
        lower: impl Fn(f64) -> f64 + Send + Sync + 'static,
        upper: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { lower: Arc::new(lower), upper: Arc::new(upper) }
    }

    pub fn lower(&self, omega: f64) -> f64 {
        (self.lower)(omega)
    }

    pub fn upper(&self, omega: f64) -> f64 {
        (self.upper)(omega)
    }

    pub fn sample(&self, grid: &Grid) -> DensityBand {
        DensityBand {
            lower: grid.points().iter().map(|&w| self.lower(w)).collect(),
            upper: grid.points().iter().map(|&w| self.upper(w)).collect(),
        }
    }
}

impl std::fmt::Debug for BandFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BandFunction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gaussian(grid: &Grid, scale: f64) -> Vec<f64> {
        grid.points()
            .iter()
            .map(|w| scale * (-0.5 * w * w).exp() / (2.0 * std::f64::consts::PI).sqrt())
            .collect()
    }

    #[test]
    fn scaled_gaussian_band_is_valid() {
        let g = Grid::uniform(-5.0, 5.0, 0.01).unwrap();
        let band = DensityBand::new(gaussian(&g, 0.8), gaussian(&g, 1.2)).unwrap();
        assert_eq!(band.check(&g).unwrap(), None);
    }

    #[test]
    fn degenerate_gaussian_band_is_valid_when_mass_is_one() {
        // On [-10, 10] the sampled standard normal has discrete mass 1 to machine precision.
        let g = Grid::uniform(-10.0, 10.0, 0.01).unwrap();
        let band = DensityBand::degenerate(gaussian(&g, 1.0));
        assert_eq!(band.check(&g).unwrap(), None);
    }

    #[test]
    fn heavy_lower_bound_is_rejected() {
        let g = Grid::uniform(-5.0, 5.0, 0.01).unwrap();
        let band = DensityBand::new(gaussian(&g, 1.2), gaussian(&g, 1.5)).unwrap();
        assert!(matches!(band.check(&g).unwrap(), Some(BandViolation::LowerMass { .. })));
    }

    #[test]
    fn light_upper_bound_and_ordering_are_rejected() {
        let g = Grid::uniform(-5.0, 5.0, 0.01).unwrap();
        let band = DensityBand::new(gaussian(&g, 0.5), gaussian(&g, 0.9)).unwrap();
        assert!(matches!(band.check(&g).unwrap(), Some(BandViolation::UpperMass { .. })));
        let band = DensityBand::new(gaussian(&g, 1.0), gaussian(&g, 0.9)).unwrap();
        assert!(matches!(band.check(&g).unwrap(), Some(BandViolation::Ordering { k: 0, .. })));
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let g = Grid::uniform(0.0, 1.0, 0.5).unwrap();
        let band = DensityBand::new(vec![0.0; 2], vec![1.0; 2]).unwrap();
        assert!(matches!(band.check(&g), Err(Error::Length { .. })));
        assert!(DensityBand::new(vec![0.0; 2], vec![1.0; 3]).is_err());
    }

    #[test]
    fn clamp_examples() {
        let band = DensityBand::new(vec![0.2; 3], vec![0.8; 3]).unwrap();
        assert_eq!(band.clamp(&[0.1, 0.5, 0.9]), vec![0.2, 0.5, 0.8]);
        assert_eq!(band.clamp(&[0.3, 0.4, 0.7]), vec![0.3, 0.4, 0.7]);
        assert_eq!(band.clamp(&[f64::INFINITY; 3]), vec![0.8; 3]);
        assert_eq!(band.clamp(&[f64::NEG_INFINITY; 3]), vec![0.2; 3]);
        let open = DensityBand::new(vec![0.0; 2], vec![f64::INFINITY; 2]).unwrap();
        assert_eq!(open.clamp(&[3.0, -1.0]), vec![3.0, 0.0]);
    }

    #[test]
    fn feasible_init_blends_to_unit_mass() {
        let g = Grid::uniform(0.0, 1.0, 0.25).unwrap();
        // mass of constant v on this grid is 1.25 v
        let band = DensityBand::new(vec![0.64; 5], vec![0.96; 5]).unwrap();
        let a = band.feasible_init(&g, DEFAULT_UPPER_CAP).unwrap();
        assert!((g.integrate(&a) - 1.0).abs() < 1e-12);
        assert!(a.iter().all(|&v| (v - 0.8).abs() < 1e-12));

        let exact = DensityBand::new(vec![0.8; 5], vec![2.0; 5]).unwrap();
        assert_eq!(exact.feasible_init(&g, DEFAULT_UPPER_CAP).unwrap(), vec![0.8; 5]);

        let pinned = DensityBand::degenerate(vec![0.8; 5]);
        assert_eq!(pinned.feasible_init(&g, DEFAULT_UPPER_CAP).unwrap(), vec![0.8; 5]);
    }

    #[test]
    fn feasible_init_caps_infinite_upper() {
        let g = Grid::uniform(0.0, 1.0, 0.25).unwrap();
        let band = DensityBand::new(vec![0.0; 5], vec![f64::INFINITY; 5]).unwrap();
        let a = band.feasible_init(&g, 10.0).unwrap();
        assert!((g.integrate(&a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn feasible_init_propagates_infeasibility() {
        let g = Grid::uniform(0.0, 1.0, 0.25).unwrap();
        let band = DensityBand::new(vec![0.9; 5], vec![1.0; 5]).unwrap();
        assert!(matches!(band.feasible_init(&g, 1e6), Err(Error::InfeasibleBand { .. })));
    }

    fn band_strategy() -> impl Strategy<Value = (DensityBand, Vec<f64>, Vec<f64>)> {
        (prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 8), prop::collection::vec(-1.0f64..2.0, 8), prop::collection::vec(0.0f64..1.0, 8))
            .prop_map(|(bounds, x, bump)| {
                let lower: Vec<f64> = bounds.iter().map(|(a, b)| a.min(*b)).collect();
                let upper: Vec<f64> = bounds.iter().map(|(a, b)| a.max(*b)).collect();
                let y = x.iter().zip(&bump).map(|(a, b)| a + b).collect();
                (DensityBand { lower, upper }, x, y)
            })
    }

    proptest! {
        #[test]
        fn clamp_is_idempotent_and_monotone((band, x, y) in band_strategy()) {
            let cx = band.clamp(&x);
            prop_assert_eq!(band.clamp(&cx), cx.clone());
            let cy = band.clamp(&y);
            for k in 0..x.len() {
                prop_assert!(cx[k] <= cy[k]);
                prop_assert!(band.lower[k] <= cx[k] && cx[k] <= band.upper[k]);
            }
        }

        #[test]
        fn feasible_init_meets_constraints(lo in prop::collection::vec(0.0f64..0.9, 6), width in prop::collection::vec(0.0f64..2.0, 6)) {
            let g = Grid::uniform(0.0, 1.0, 0.2).unwrap();
            let lower: Vec<f64> = lo.iter().map(|v| v * 0.5).collect();
            let upper: Vec<f64> = lower.iter().zip(&width).map(|(l, w)| l + w + 0.2).collect();
            let band = DensityBand { lower, upper };
            prop_assume!(band.check(&g).unwrap().is_none());
            let a = band.feasible_init(&g, 1e6).unwrap();
            prop_assert!((g.integrate(&a) - 1.0).abs() < 1e-12);
            for k in 0..a.len() {
                prop_assert!(band.lower[k] <= a[k] && a[k] <= band.upper[k]);
            }
        }
    }
}

//! Minimax detection with observation-dependent costs:
//! `-f(omega, x_1, x_2) = min { r_1(omega) x_1, r_2(omega) x_2 }`.

use std::f64::consts::PI;

use super::{Integrand, Sampled, Site};

/// A nonnegative cost `r(omega)`.
#[derive(Debug, Clone)]
pub enum CostProfile {
    /// `1 + cos(pi omega)`
    RaisedCosine,
    /// `2 exp(-|omega|)`
    DoubleExponential,
    Sampled(Sampled),
}

impl CostProfile {
    #[inline]
    pub fn at(&self, site: Site) -> f64 {
        match self {
            CostProfile::RaisedCosine => 1.0 + (PI * site.omega).cos(),
            CostProfile::DoubleExponential => 2.0 * (-site.omega.abs()).exp(),
            CostProfile::Sampled(s) => s.at(site),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimaxDetect {
    r1: CostProfile,
    r2: CostProfile,
}

impl MinimaxDetect {
    pub fn new(r1: CostProfile, r2: CostProfile) -> Self {
        Self { r1, r2 }
    }

    /// Costs `r_1 = 1 + cos(pi omega)`, `r_2 = 2 exp(-|omega|)`.
    pub fn standard_costs() -> Self {
        Self::new(CostProfile::RaisedCosine, CostProfile::DoubleExponential)
    }

    pub fn costs(&self, at: Site) -> (f64, f64) {
        (self.r1.at(at), self.r2.at(at))
    }

    /// Huber-smoothed surrogate; `min` is replaced by a function within
    /// `delta / 4` of it with a `1 / delta`-Lipschitz gradient.
    pub fn smoothed(&self, delta: f64) -> SmoothedMinimaxDetect {
        SmoothedMinimaxDetect { base: self.clone(), delta }
    }
}

/// Relative tolerance under which `r_1 x_1` and `r_2 x_2` count as equal
/// when choosing a certificate subgradient.
const TIE_RTOL: f64 = 1e-12;

/// Residual contribution of one coordinate with subgradient `g` at level `c`.
fn point_residual(a: f64, g: f64, c: f64, lower: f64, upper: f64) -> f64 {
    let d = g - c;
    if d < 0.0 {
        if a == upper {
            0.0
        } else {
            (upper - a) * -d
        }
    } else if d > 0.0 {
        (a - lower) * d
    } else {
        0.0
    }
}

/// Subgradient selection of `f_n`; ties `r_1 x_1 = r_2 x_2` go to `n = 0`.
pub fn minimax_detect_fn(n: usize, r1: f64, r2: f64, x1: f64, x2: f64) -> f64 {
    let first_active = r1 * x1 <= r2 * x2;
    match (n, first_active) {
        (0, true) => -r1,
        (1, false) => -r2,
        _ => 0.0,
    }
}

impl Integrand for MinimaxDetect {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, at: Site, x: &[f64]) -> f64 {
        let (r1, r2) = self.costs(at);
        -(r1 * x[0]).min(r2 * x[1])
    }

    fn partial(&self, n: usize, at: Site, x: &[f64]) -> f64 {
        let (r1, r2) = self.costs(at);
        minimax_detect_fn(n, r1, r2, x[0], x[1])
    }

    /// At a tie every `(-t r_1, -(1 - t) r_2)` with `t` in `[0, 1]` is a
    /// joint subgradient; the one with the smallest residual is returned.
    fn certificate_subgradient(&self, at: Site, x: &[f64], levels: &[f64], lower: &[f64], upper: &[f64], out: &mut [f64]) {
        let (r1, r2) = self.costs(at);
        let (a, b) = (r1 * x[0], r2 * x[1]);
        out[0] = minimax_detect_fn(0, r1, r2, x[0], x[1]);
        out[1] = minimax_detect_fn(1, r1, r2, x[0], x[1]);
        if (a - b).abs() > TIE_RTOL * (a.abs() + b.abs()) {
            return;
        }
        let cost = |t: f64| {
            point_residual(x[0], -t * r1, levels[0], lower[0], upper[0])
                + point_residual(x[1], -(1.0 - t) * r2, levels[1], lower[1], upper[1])
        };
        let mut best = (1.0, cost(1.0));
        let mut candidates = vec![0.0];
        if r1 > 0.0 {
            candidates.push((-levels[0] / r1).clamp(0.0, 1.0));
        }
        if r2 > 0.0 {
            candidates.push((1.0 + levels[1] / r2).clamp(0.0, 1.0));
        }
        for t in candidates {
            let c = cost(t);
            if c < best.1 {
                best = (t, c);
            }
        }
        out[0] = -best.0 * r1;
        out[1] = -(1.0 - best.0) * r2;
    }

    /// Compares the minimizers of the two linear pieces with the minimizer
    /// along the kink `r_1 x_1 = r_2 x_2`.
    fn proximal_point(
        &self,
        at: Site,
        anchor: &[f64],
        levels: &[f64],
        rho: f64,
        lower: &[f64],
        upper: &[f64],
        out: &mut [f64],
    ) -> bool {
        let (r1, r2) = self.costs(at);
        let z = [anchor[0] + levels[0] / rho, anchor[1] + levels[1] / rho];
        let clamp = |v: f64, n: usize| v.max(lower[n]).min(upper[n]);
        let objective = |p: [f64; 2]| {
            -(r1 * p[0]).min(r2 * p[1]) + 0.5 * rho * ((p[0] - z[0]).powi(2) + (p[1] - z[1]).powi(2))
        };
        // First piece active: f = -r1 x1.
        let first = [clamp(z[0] + r1 / rho, 0), clamp(z[1], 1)];
        if r1 * first[0] <= r2 * first[1] {
            out[..2].copy_from_slice(&first);
            return true;
        }
        let second = [clamp(z[0], 0), clamp(z[1] + r2 / rho, 1)];
        if r1 * second[0] >= r2 * second[1] {
            out[..2].copy_from_slice(&second);
            return true;
        }
        // Both pieces overshoot, so the minimizer lies on the kink x2 = s x1.
        let mut best = if objective(first) <= objective(second) { first } else { second };
        if r1 > 0.0 && r2 > 0.0 {
            let s = r1 / r2;
            let lo = lower[0].max(lower[1] / s);
            let hi = upper[0].min(upper[1] / s);
            if lo <= hi {
                let t = ((z[0] + s * z[1] + r1 / rho) / (1.0 + s * s)).clamp(lo, hi);
                let kink = [t, (s * t).max(lower[1]).min(upper[1])];
                if objective(kink) <= objective(best) {
                    best = kink;
                }
            }
        }
        out[..2].copy_from_slice(&best);
        true
    }

    fn name(&self) -> &str {
        "minimax_detect"
    }
}

/// Smooth stand-in for [`MinimaxDetect`], used only by the reference oracle.
#[derive(Debug, Clone)]
pub struct SmoothedMinimaxDetect {
    base: MinimaxDetect,
    delta: f64,
}

impl SmoothedMinimaxDetect {
    fn huber(&self, d: f64) -> f64 {
        if d.abs() <= self.delta {
            d * d / (2.0 * self.delta) + self.delta / 2.0
        } else {
            d.abs()
        }
    }
}

impl Integrand for SmoothedMinimaxDetect {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, at: Site, x: &[f64]) -> f64 {
        let (r1, r2) = self.base.costs(at);
        let (a, b) = (r1 * x[0], r2 * x[1]);
        -(0.5 * (a + b) - 0.5 * self.huber(a - b))
    }

    fn partial(&self, n: usize, at: Site, x: &[f64]) -> f64 {
        let (r1, r2) = self.base.costs(at);
        let d = r1 * x[0] - r2 * x[1];
        let slope = (d / self.delta).clamp(-1.0, 1.0);
        match n {
            0 => -0.5 * r1 * (1.0 - slope),
            _ => -0.5 * r2 * (1.0 + slope),
        }
    }

    fn name(&self) -> &str {
        "minimax_detect_smoothed"
    }
}

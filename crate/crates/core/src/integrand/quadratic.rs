use super::{Integrand, Sampled, Site};

/// `f(omega, x) = 1/2 sum_n (x_n - g_n(omega))^2`. Separable and strictly
/// convex; its constrained minimizer is the band projection of `g`, which
/// makes it a convenient test problem.
#[derive(Debug, Clone)]
pub struct Quadratic {
    targets: Vec<Target>,
}

#[derive(Debug, Clone)]
enum Target {
    Constant(f64),
    Sampled(Sampled),
}

impl Target {
    fn at(&self, site: Site) -> f64 {
        match self {
            Target::Constant(v) => *v,
            Target::Sampled(s) => s.at(site),
        }
    }
}

impl Quadratic {
    pub fn constant(targets: Vec<f64>) -> Self {
        Self { targets: targets.into_iter().map(Target::Constant).collect() }
    }

    pub fn sampled(targets: Vec<Sampled>) -> Self {
        Self { targets: targets.into_iter().map(Target::Sampled).collect() }
    }

    pub fn target(&self, n: usize, at: Site) -> f64 {
        self.targets[n].at(at)
    }
}

impl Integrand for Quadratic {
    fn dim(&self) -> usize {
        self.targets.len()
    }

    fn value(&self, at: Site, x: &[f64]) -> f64 {
        0.5 * x.iter().enumerate().map(|(n, &xn)| (xn - self.target(n, at)).powi(2)).sum::<f64>()
    }

    fn partial(&self, n: usize, at: Site, x: &[f64]) -> f64 {
        x[n] - self.target(n, at)
    }

    fn inverse(&self, n: usize, at: Site, _x: &[f64], level: f64) -> Option<f64> {
        Some((self.target(n, at) + level).max(0.0))
    }

    fn name(&self) -> &str {
        "quadratic"
    }
}

//! Principal branch of the Lambert W function on `[0, inf)`.

/// `w >= 0` with `w * exp(w) = z`, for `z >= 0`.
///
/// Halley iteration from a logarithmic starting guess. Returns NaN for
/// negative or NaN input and `+inf` for `z = +inf`.
pub fn lambert_w0(z: f64) -> f64 {
    if z.is_nan() || z < 0.0 {
        return f64::NAN;
    }
    if z == 0.0 {
        return 0.0;
    }
    if z.is_infinite() {
        return f64::INFINITY;
    }
    if z > 1e300 {
        return lambert_w0_exp(z.ln());
    }
    let mut w = if z < 3.0 {
        z.ln_1p() * (1.0 - z.ln_1p() / (2.0 + z.ln_1p()))
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - z;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs() {
            break;
        }
    }
    w
}

/// `W(exp(log_z))` without forming `exp(log_z)`, so arguments far beyond the
/// floating-point range are fine. `log_z = -inf` gives 0.
pub fn lambert_w0_exp(log_z: f64) -> f64 {
    if log_z.is_nan() {
        return f64::NAN;
    }
    if log_z < 690.0 {
        return lambert_w0(log_z.exp());
    }
    if log_z == f64::INFINITY {
        return f64::INFINITY;
    }
    // Solve w + ln w = log_z.
    let mut w = log_z - log_z.ln();
    for _ in 0..64 {
        let g = w + w.ln() - log_z;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            break;
        }
    }
    w
}

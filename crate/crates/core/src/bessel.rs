//! Modified Bessel functions of the first kind, integer order.
//!
//! Everything is exponentially scaled: `bessel_i_scaled(m, x) = e^{-x} I_m(x)`
//! for `x >= 0`, which stays in range for the large arguments (`x = r^2`) that
//! show up on growing circles.

const SERIES_LIMIT: f64 = 50.0;

/// `e^{-x} I_m(x)` for integer order `m` and `x >= 0`.
pub fn bessel_i_scaled(m: u32, x: f64) -> f64 {
    assert!(x >= 0.0, "bessel_i_scaled requires x >= 0, got {x}");
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    let mf = m as f64;
    if x < SERIES_LIMIT || mf * mf > x {
        series_scaled(m, x)
    } else {
        asymptotic_scaled(m, x)
    }
}

/// Unscaled `I_m(x)`; overflows past x ~ 700.
pub fn bessel_i(m: u32, x: f64) -> f64 {
    bessel_i_scaled(m, x) * x.exp()
}

/// Ascending series, started in log space so the leading term neither
/// overflows nor underflows.
fn series_scaled(m: u32, x: f64) -> f64 {
    let mf = m as f64;
    let half = 0.5 * x;
    let ln_factorial: f64 = (2..=m).map(|k| (k as f64).ln()).sum();
    let log_t0 = mf * half.ln() - ln_factorial - x;
    let q = half * half;
    // Terms grow until k ~ x/2; sum relative to the peak to keep precision.
    let mut log_scale = log_t0;
    let mut t = 1.0_f64;
    let mut sum = 1.0_f64;
    let max_terms = 2 * x as usize + 200;
    for k in 0..max_terms {
        let kf = k as f64;
        t *= q / ((kf + 1.0) * (kf + 1.0 + mf));
        if t > 1e200 {
            // rescale
            let s = t.ln();
            log_scale += s;
            sum /= t;
            t = 1.0;
        }
        sum += t;
        if t < sum * 1e-17 && kf > half {
            break;
        }
    }
    (sum.ln() + log_scale).exp()
}

/// Large-argument expansion
/// `e^{-x} I_m(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(m) / x^k`,
/// truncated at the smallest term.
fn asymptotic_scaled(m: u32, x: f64) -> f64 {
    let mu = 4.0 * (m as f64) * (m as f64);
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= -(mu - odd * odd) / (kf * 8.0 * x);
        if term.abs() >= last && k > 1 {
            break;
        }
        last = term.abs();
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * std::f64::consts::PI * x).sqrt()
}

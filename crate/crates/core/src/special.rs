//! Bessel functions of the first kind for the small arguments met here.

/// `J_l(x)` by its ascending series, truncated once a term drops below
/// `1e-16` of the running sum. Accurate for `|x|` up to a few units.
pub fn bessel_j(l: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let half = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=l {
        term *= half / i as f64;
    }
    let q = -half * half;
    let mut sum = term;
    let mut m = 0u32;
    loop {
        m += 1;
        term *= q / (m as f64 * (m + l) as f64);
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() || m > 500 {
            break;
        }
    }
    sum
}

/// `2 l J_l(x) / x`, with the `x -> 0` limit (1 at `l = 1`, 0 above).
pub fn bessel_ratio(l: u32, x: f64) -> f64 {
    if x.abs() < 1e-300 {
        return if l == 1 { 1.0 } else { 0.0 };
    }
    2.0 * l as f64 * bessel_j(l, x) / x
}

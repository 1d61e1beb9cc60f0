//! Small numeric/text helpers shared across modules: deterministic number
//! formatting for CLI output and order-stable pairwise summation for Monte
//! Carlo aggregation.

/// Significant digits used for all human-readable CLI output.
pub const OUTPUT_SIG_DIGITS: usize = 12;

/// Format `v` with `sig` significant digits, C `%g`-style: fixed notation for
/// moderate exponents, scientific otherwise, trailing zeros trimmed. Output is
/// locale-independent and identical across platforms, so repeated runs diff
/// clean.
pub fn fmt_sig(v: f64, sig: usize) -> String {
    assert!(sig >= 1, "need at least one significant digit");
    if v == 0.0 {
        return "0".to_string(); // covers -0.0 as well
    }
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }

    // Round to `sig` digits via scientific rendering, then decide the
    // presentation from the *rounded* exponent (matches printf %g at the
    // 9.99…→10 boundaries).
    let sci = format!("{:.*e}", sig - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exp.parse().expect("exponent parses");

    if exp < -4 || exp >= sig as i32 {
        let mantissa = trim_trailing_zeros(mantissa);
        format!("{mantissa}e{exp}")
    } else {
        // Total significant digits fixed, so decimals = sig - 1 - exp.
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        let fixed = format!("{:.*}", decimals, v);
        trim_trailing_zeros(&fixed)
    }
}

/// Shorthand for the crate-standard 12-significant-digit rendering.
pub fn fmt12(v: f64) -> String {
    fmt_sig(v, OUTPUT_SIG_DIGITS)
}

fn trim_trailing_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Sum by recursive halving. Error grows like O(log n) rather than O(n) and,
/// unlike sequential accumulation, the result does not depend on chunk
/// boundaries — replicate statistics stay byte-identical however the work was
/// scheduled, as long as the slice order is fixed.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let (lo, hi) = xs.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// Mean via pairwise summation; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        pairwise_sum(xs) / xs.len() as f64
    }
}

/// Standard error of the mean (sample standard deviation / sqrt(k));
/// 0 when fewer than two samples.
pub fn std_error(xs: &[f64]) -> f64 {
    let k = xs.len();
    if k < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&sq) / (k - 1) as f64;
    (var / k as f64).sqrt()
}

/// Median of a slice (average of the middle two for even lengths).
/// Returns None for an empty slice. NaNs are ordered last via total order.
pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

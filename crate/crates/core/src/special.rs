//! Regularized incomplete gamma functions for integer shape (Erlang tails).

/// Lower regularized gamma `P(n, x)` for integer `n ≥ 1`.
pub fn gamma_p(n: usize, x: f64) -> f64 {
    assert!(n >= 1, "shape must be at least 1");
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < n as f64 + 1.0 {
        lower_series(n, x)
    } else {
        1.0 - upper_sum(n, x)
    }
}

/// Upper regularized gamma `Q(n, x) = 1 - P(n, x)` for integer `n ≥ 1`.
pub fn gamma_q(n: usize, x: f64) -> f64 {
    assert!(n >= 1, "shape must be at least 1");
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < n as f64 + 1.0 {
        1.0 - lower_series(n, x)
    } else {
        upper_sum(n, x)
    }
}

// e^{-x} Σ_{k<n} x^k / k!
fn upper_sum(n: usize, x: f64) -> f64 {
    let mut term = (-x).exp();
    let mut sum = term;
    for k in 1..n {
        term *= x / k as f64;
        sum += term;
    }
    sum.min(1.0)
}

// e^{-x} Σ_{k≥n} x^k / k!, started from the k = n term in log space.
fn lower_series(n: usize, x: f64) -> f64 {
    let log_first = n as f64 * x.ln() - x - ln_factorial(n);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = n;
    loop {
        k += 1;
        term *= x / k as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    (log_first.exp() * sum).min(1.0)
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_case() {
        for x in [0.01, 0.5, 1.0, 2.0 * 2f64.ln(), 7.0, 30.0] {
            assert!((gamma_q(1, x) - (-x).exp()).abs() < 1e-15);
            assert!((gamma_p(1, x) - (1.0 - (-x).exp())).abs() < 1e-15);
        }
    }

    #[test]
    fn erlang_two_closed_form() {
        for x in [0.1f64, 1.0, 3.0, 10.0] {
            let q = (-x).exp() * (1.0 + x);
            assert!((gamma_q(2, x) - q).abs() < 1e-14);
        }
    }

    #[test]
    fn small_argument_keeps_relative_precision() {
        // P(4, x) ≈ x^4/24 for tiny x
        let x: f64 = 1e-6;
        let approx = x.powi(4) / 24.0 * (1.0 - 4.0 * x / 5.0);
        assert!((gamma_p(4, x) / approx - 1.0).abs() < 1e-6);
    }

    #[test]
    fn limits() {
        assert_eq!(gamma_p(3, 0.0), 0.0);
        assert_eq!(gamma_q(3, 0.0), 1.0);
        assert_eq!(gamma_q(3, f64::INFINITY), 0.0);
        assert!(gamma_q(4, 1e3) < 1e-300);
    }
}

//! Closed forms for the scalar standard semicircular case `N = 1`, `η = id`,
//! `b = iβ`, started from `−iω`.
//!
//! With `q± = β/2 ± √(β²/4 + 1)`, `ρ = q₋/q₊` and `α = (q₋ + ω)/(q₊ + ω)`:
//! `hⁿ(−iω) = −i (1/q₊)(1 − αρⁿ⁻¹)/(1 − αρⁿ)`.

use num_complex::Complex64;

struct Constants {
    q_plus: f64,
    rho: f64,
    alpha: f64,
}

fn constants(beta: f64, omega: f64) -> Constants {
    let q_plus = beta / 2.0 + (beta * beta / 4.0 + 1.0).sqrt();
    // q₊q₋ = −1 exactly; avoids cancellation in β/2 − √(β²/4 + 1).
    let q_minus = -1.0 / q_plus;
    Constants {
        q_plus,
        rho: q_minus / q_plus,
        alpha: (q_minus + omega) / (q_plus + omega),
    }
}

/// `ω* = −β/2 + √(β²/4 + 1)`; the fixed point is `−iω*`.
pub fn scalar_fixed_point(beta: f64) -> f64 {
    1.0 / (beta / 2.0 + (beta * beta / 4.0 + 1.0).sqrt())
}

/// `hⁿ(−iω)` for `n ≥ 0` (`n = 0` returns the start `−iω`).
pub fn scalar_closed_form_iterate(beta: f64, omega: f64, n: u64) -> Complex64 {
    if n == 0 {
        return Complex64::new(0.0, -omega);
    }
    let k = constants(beta, omega);
    let prev = k.rho.powf((n - 1) as f64);
    let cur = prev * k.rho;
    Complex64::new(0.0, -(1.0 - k.alpha * prev) / ((1.0 - k.alpha * cur) * k.q_plus))
}

/// `Δ(hⁿ(−iω)) = −i q₊ α (1 − ρ)² ρⁿ⁻¹ / ((1 − αρⁿ)(1 − αρⁿ⁻¹))`, `n ≥ 1`.
pub fn scalar_closed_form_residual(beta: f64, omega: f64, n: u64) -> Complex64 {
    assert!(n >= 1, "residual closed form needs n >= 1");
    let k = constants(beta, omega);
    let prev = k.rho.powf((n - 1) as f64);
    let cur = prev * k.rho;
    let num = k.q_plus * k.alpha * (1.0 - k.rho).powi(2) * prev;
    Complex64::new(0.0, -num / ((1.0 - k.alpha * cur) * (1.0 - k.alpha * prev)))
}

/// `hⁿ⁺¹(−iω) − hⁿ(−iω) = −i (1/q₊) α (1 − ρ)² ρⁿ⁻¹ / ((1 − αρⁿ⁺¹)(1 − αρⁿ))`, `n ≥ 1`.
pub fn scalar_closed_form_step(beta: f64, omega: f64, n: u64) -> Complex64 {
    assert!(n >= 1, "step closed form needs n >= 1");
    let k = constants(beta, omega);
    let prev = k.rho.powf((n - 1) as f64);
    let cur = prev * k.rho;
    let next = cur * k.rho;
    let num = k.alpha * (1.0 - k.rho).powi(2) * prev / k.q_plus;
    Complex64::new(0.0, -num / ((1.0 - k.alpha * next) * (1.0 - k.alpha * cur)))
}

/// Smallest `n ≥ 1` with `|Δ(hⁿ(−iω))| ≤ threshold`, by closed form.
pub fn scalar_residual_termination(beta: f64, omega: f64, threshold: f64, limit: u64) -> Option<u64> {
    (1..=limit).find(|&n| scalar_closed_form_residual(beta, omega, n).norm() <= threshold)
}

/// Smallest `n ≥ 1` with `|hⁿ⁺¹(−iω) − hⁿ(−iω)| ≤ threshold`, by closed form.
pub fn scalar_step_termination(beta: f64, omega: f64, threshold: f64, limit: u64) -> Option<u64> {
    (1..=limit).find(|&n| scalar_closed_form_step(beta, omega, n).norm() <= threshold)
}

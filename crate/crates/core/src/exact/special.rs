//! Bessel functions of the first kind, associated Laguerre polynomials and
//! log-factorials.

use std::sync::OnceLock;

const LN_FACTORIAL_TABLE: usize = 1024;

/// ln(n!). Tabulated by direct summation up to 1023, Stirling series above.
pub fn ln_factorial(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(LN_FACTORIAL_TABLE);
        let mut acc = 0.0;
        t.push(0.0);
        for k in 1..LN_FACTORIAL_TABLE {
            acc += (k as f64).ln();
            t.push(acc);
        }
        t
    });
    if n < LN_FACTORIAL_TABLE {
        return table[n];
    }
    let x = n as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

/// Below this |x| the ascending series is used.
const SERIES_LIMIT: f64 = 6.0;

/// J_k(x) for integer k ≥ 0.
pub fn bessel_j(k: u32, x: f64) -> f64 {
    if x < 0.0 {
        let v = bessel_j(k, -x);
        return if k % 2 == 1 { -v } else { v };
    }
    if x == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_LIMIT {
        bessel_series(k, x)
    } else {
        bessel_miller(k, x)
    }
}

fn bessel_series(k: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // leading term (x/2)^k / k! in log form to survive large k
    let lead = k as f64 * half.ln() - ln_factorial(k as usize);
    if lead < -745.0 {
        return 0.0;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..200u32 {
        term *= q / (m as f64 * (m + k) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead.exp() * sum
}

/// Backward recurrence from well above max(k, x), normalized with
/// J_0 + 2·Σ J_{2m} = 1.
fn bessel_miller(k: u32, x: f64) -> f64 {
    let top = (k as f64).max(x);
    let start = (top + 30.0 + 12.0 * top.cbrt()) as u32;
    let start = start + start % 2;
    const BIG: f64 = 1e250;

    let mut j_next = 0.0; // J_{n+1}
    let mut j_cur = 1e-300; // J_n
    let mut norm = 0.0;
    let mut target = 0.0;
    for n in (1..=start).rev() {
        // J_{n-1} = (2n/x) J_n − J_{n+1}
        let j_prev = 2.0 * n as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        let idx = n - 1;
        if idx == k {
            target = j_cur;
        }
        if idx % 2 == 0 && idx > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > BIG {
            j_cur /= BIG;
            j_next /= BIG;
            norm /= BIG;
            target /= BIG;
        }
    }
    norm += j_cur;
    target / norm
}

/// L_m^{(k)}(x) by the three-term recurrence in the degree.
pub fn laguerre_assoc(m: usize, k: usize, x: f64) -> f64 {
    let (mantissa, log_scale) = laguerre_assoc_scaled(m, k, x);
    mantissa * log_scale.exp()
}

/// L_m^{(k)}(x) = mantissa·exp(log_scale), keeping the mantissa below
/// 1e200 in magnitude.
pub fn laguerre_assoc_scaled(m: usize, k: usize, x: f64) -> (f64, f64) {
    const BIG: f64 = 1e200;
    let ln_big = BIG.ln();
    let a = k as f64;
    let mut prev = 1.0;
    if m == 0 {
        return (prev, 0.0);
    }
    let mut cur = 1.0 + a - x;
    let mut log_scale = 0.0;
    for n in 1..m {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0 + a - x) * cur - (nf + a) * prev) / (nf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += ln_big;
        }
    }
    (cur, log_scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// (1/π)∫₀^π cos(kθ − x·sinθ)dθ by composite Simpson; the integrand is
    /// smooth and periodic so this converges fast.
    fn bessel_quadrature(k: u32, x: f64) -> f64 {
        let n = 4000;
        let h = PI / n as f64;
        let f = |th: f64| (k as f64 * th - x * th.sin()).cos();
        let mut s = f(0.0) + f(PI);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        s * h / 3.0 / PI
    }

    #[test]
    fn j0_at_origin() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        assert_eq!(bessel_j(3, 0.0), 0.0);
    }

    #[test]
    fn j0_first_zero() {
        assert!(bessel_j(0, 2.404826).abs() < 1e-5);
        assert!(bessel_j(0, 2.405).abs() < 5e-4);
        assert!(bessel_quadrature(0, 2.404826).abs() < 1e-5);
    }

    #[test]
    fn matches_quadrature_oracle() {
        for &k in &[0u32, 1, 2, 5, 12, 30] {
            for &x in &[0.1, 1.0, 2.404826, 5.9, 6.1, 10.0, 25.0, 60.0] {
                let a = bessel_j(k, x);
                let b = bessel_quadrature(k, x);
                assert!((a - b).abs() < 1e-12, "J_{k}({x}): {a} vs {b}");
            }
        }
    }

    #[test]
    fn large_argument_against_asymptotic() {
        // Hankel asymptotics with two correction terms
        let x = 1e4;
        for &k in &[0u32, 1, 7] {
            let mu = 4.0 * (k * k) as f64;
            let w = x - (k as f64 / 2.0 + 0.25) * PI;
            let p = 1.0 - (mu - 1.0) * (mu - 9.0) / (2.0 * (8.0 * x).powi(2));
            let q = (mu - 1.0) / (8.0 * x) - (mu - 1.0) * (mu - 9.0) * (mu - 25.0) / (6.0 * (8.0 * x).powi(3));
            let asym = (2.0 / (PI * x)).sqrt() * (p * w.cos() - q * w.sin());
            assert!((bessel_j(k, x) - asym).abs() < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn negative_argument_parity() {
        assert!((bessel_j(1, -1.3) + bessel_j(1, 1.3)).abs() < 1e-16);
        assert!((bessel_j(2, -1.3) - bessel_j(2, 1.3)).abs() < 1e-16);
    }

    #[test]
    fn laguerre_base_cases() {
        for &k in &[0usize, 1, 5] {
            assert_eq!(laguerre_assoc(0, k, 2.7), 1.0);
            assert!((laguerre_assoc(1, k, 2.7) - (1.0 + k as f64 - 2.7)).abs() < 1e-15);
        }
    }

    #[test]
    fn laguerre_explicit_expansion() {
        // L_m^{(k)}(x) = Σ_j (−1)^j C(m+k, m−j) x^j / j!
        let binom = |n: usize, r: usize| -> f64 { (ln_factorial(n) - ln_factorial(r) - ln_factorial(n - r)).exp() };
        for &x in &[0.0f64, 0.3, 1.7, 4.0, 9.5] {
            let explicit: f64 = (0..=3)
                .map(|j| (-1f64).powi(j as i32) * binom(5, 3 - j) * x.powi(j as i32) / (ln_factorial(j).exp()))
                .sum();
            let v = laguerre_assoc(3, 2, x);
            assert!((v - explicit).abs() <= 1e-12 * explicit.abs().max(1.0), "x={x}: {v} vs {explicit}");
        }
    }

    #[test]
    fn laguerre_scaled_survives_large_degree() {
        let (mant, scale) = laguerre_assoc_scaled(400, 400, 0.5);
        assert!(mant.is_finite() && scale.is_finite());
        // L_m^{(k)}(0) = C(m+k, m)
        let (m0, s0) = laguerre_assoc_scaled(400, 400, 0.0);
        let log_binom = ln_factorial(800) - 2.0 * ln_factorial(400);
        assert!(((m0.ln() + s0) - log_binom).abs() < 1e-10);
    }

    #[test]
    fn ln_factorial_values() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-14);
        // continuity across the table boundary
        let a = ln_factorial(1023) + 1024f64.ln();
        assert!((ln_factorial(1024) - a).abs() < 1e-9);
    }
}

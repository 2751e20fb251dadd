//! Modified Bessel functions `K_0`, `K_1` (and `I_0`, `I_1` for checks).
//!
//! Two independent routes: the ascending series with logarithmic terms for
//! small arguments, and the trapezoid rule on
//! `e^x K_nu(x) = int_0^inf exp(-x (cosh t - 1)) cosh(nu t) dt`,
//! which converges geometrically because the integrand is analytic in a strip
//! and decays doubly exponentially.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Argument below which the series route is used.
const SERIES_LIMIT: f64 = 2.0;

/// `(I_0(x), I_1(x))` by the ascending series.
pub fn i0_i1(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let (mut t0, mut t1) = (1.0, 0.5 * x);
    let (mut s0, mut s1) = (t0, t1);
    for m in 1..500 {
        let m = m as f64;
        t0 *= q / (m * m);
        t1 *= q / (m * (m + 1.0));
        s0 += t0;
        s1 += t1;
        if t0 <= 1e-17 * s0 && t1 <= 1e-17 * s1 {
            break;
        }
    }
    (s0, s1)
}

/// `(K_0(x), K_1(x))` by the ascending series; accurate for `0 < x <= 2`.
pub fn k0_k1_series(x: f64) -> (f64, f64) {
    let q = 0.25 * x * x;
    let l = (0.5 * x).ln();
    let (i0, i1) = i0_i1(x);
    // K_0 = -(ln(x/2) + gamma) I_0 + sum q^m / (m!)^2 H_m
    // K_1 = 1/x + ln(x/2) I_1 - (x/4) sum [psi(m+1) + psi(m+2)] q^m / (m! (m+1)!)
    let (mut t0, mut t1) = (1.0, 1.0);
    let mut harmonic = 0.0;
    let mut s0 = 0.0;
    let mut s1 = 2.0 * (-EULER_GAMMA) + 1.0;
    for m in 1..500 {
        let mf = m as f64;
        t0 *= q / (mf * mf);
        t1 *= q / (mf * (mf + 1.0));
        harmonic += 1.0 / mf;
        let d0 = t0 * harmonic;
        let d1 = t1 * (2.0 * (harmonic - EULER_GAMMA) + 1.0 / (mf + 1.0));
        s0 += d0;
        s1 += d1;
        if d0.abs() <= 1e-17 * s0.abs().max(1e-300) && d1.abs() <= 1e-17 * s1.abs() {
            break;
        }
    }
    let k0 = -(l + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + l * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// `(e^x K_0(x), e^x K_1(x))` by the trapezoid rule; valid for every `x > 0`.
pub fn k0_k1_scaled_integral(x: f64) -> (f64, f64) {
    // the integrand is Gaussian of width x^{-1/2} for large x; the step must resolve it
    let h = if x >= SERIES_LIMIT { (0.6 / x.sqrt()).min(0.2) } else { 0.1 };
    let (mut s0, mut s1) = (0.5, 0.5);
    let mut n = 1;
    loop {
        let t = n as f64 * h;
        let sh = (0.5 * t).sinh();
        let e = (-2.0 * x * sh * sh).exp();
        let c = t.cosh();
        s0 += e;
        s1 += e * c;
        if e * c < 1e-18 * s1 {
            break;
        }
        n += 1;
    }
    (h * s0, h * s1)
}

/// `(e^x K_0(x), e^x K_1(x))` for `x > 0`.
pub fn k0_k1_scaled(x: f64) -> (f64, f64) {
    if x <= SERIES_LIMIT {
        let (k0, k1) = k0_k1_series(x);
        let e = x.exp();
        (k0 * e, k1 * e)
    } else {
        k0_k1_scaled_integral(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_values() {
        // reference values to 16 digits
        let (k0, k1) = k0_k1_series(1.0);
        assert!((k0 - 0.421_024_438_240_708_3).abs() < 1e-15);
        assert!((k1 - 0.601_907_230_197_234_6).abs() < 1e-15);
        let (i0, i1) = i0_i1(1.0);
        assert!((i0 - 1.266_065_877_752_008_4).abs() < 1e-15);
        assert!((i1 - 0.565_159_103_992_485).abs() < 1e-15);
    }

    #[test]
    fn series_and_integral_routes_agree() {
        for &x in &[0.05, 0.3, 1.0, 1.7, 2.0, 2.5] {
            let (a0, a1) = k0_k1_series(x);
            let (b0, b1) = k0_k1_scaled_integral(x);
            let e = (-x).exp();
            assert!((a0 - b0 * e).abs() < 1e-13 * a0, "K0({x})");
            assert!((a1 - b1 * e).abs() < 1e-13 * a1, "K1({x})");
        }
    }

    #[test]
    fn wronskian_holds_across_the_switch() {
        // I_0 K_1 + I_1 K_0 = 1/x
        for &x in &[0.01, 0.5, 1.9, 2.1, 5.0, 12.0, 30.0] {
            let (i0, i1) = i0_i1(x);
            let (k0, k1) = k0_k1_scaled(x);
            let w = (i0 * k1 + i1 * k0) * (-x).exp();
            assert!((w * x - 1.0).abs() < 1e-12, "x = {x}: {}", w * x);
        }
    }

    #[test]
    fn large_argument_asymptotics() {
        // e^x K_nu(x) ~ sqrt(pi / 2x) (1 + (4 nu^2 - 1) / 8x + ...)
        let x = 400.0;
        let (k0, k1) = k0_k1_scaled(x);
        let base = (std::f64::consts::PI / (2.0 * x)).sqrt();
        assert!((k0 / base - (1.0 - 1.0 / (8.0 * x) + 9.0 / (128.0 * x * x))).abs() < 1e-8);
        assert!((k1 / base - (1.0 + 3.0 / (8.0 * x) - 15.0 / (128.0 * x * x))).abs() < 1e-8);
    }
}

//! Gamma function via the Lanczos approximation (g = 7, nine terms) with
//! reflection for arguments below one half.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// sin(pi x), exact at integers and half-integers.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let r = x - 2.0 * (x / 2.0).floor();
    // r in [0, 2)
    let (s, v) = if r < 0.5 {
        (1.0, r)
    } else if r < 1.5 {
        (-1.0, r - 1.0)
    } else {
        (1.0, r - 2.0)
    };
    if v == 0.0 {
        return 0.0;
    }
    s * (PI * v).sin()
}

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Gamma(x) for real x. Poles return infinity (signed NaN-free).
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    if x == x.floor() && x <= 23.0 {
        let mut p = 1.0;
        let mut k = 2.0;
        while k < x {
            p *= k;
            k += 1.0;
        }
        return p;
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    // split the power to avoid overflow near the top of the range
    let p = t.powf(0.5 * (y + 0.5));
    (2.0 * PI).sqrt() * p * (p * (-t).exp()) * lanczos_sum(y)
}

/// ln|Gamma(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return (PI / sin_pi(x).abs()).ln() - ln_gamma(1.0 - x);
    }
    let y = x - 1.0;
    let t = y + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (y + 0.5) * t.ln() - t + lanczos_sum(y).ln()
}

/// 1/Gamma(x), zero at the poles and finite everywhere.
pub fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x > 171.0 {
        return (-ln_gamma(x)).exp();
    }
    if x < 0.5 {
        // reflection: 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
        let s = sin_pi(x);
        if x > -170.0 {
            return s * gamma(1.0 - x) / PI;
        }
        return s.signum() * (ln_gamma(1.0 - x) + s.abs().ln()).exp() / PI;
    }
    1.0 / gamma(x)
}

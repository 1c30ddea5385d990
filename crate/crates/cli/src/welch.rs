//! Welch's unequal-variance t-test, one-sided.

use serde::Serialize;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let series = COEF[1..].iter().enumerate().fold(COEF[0], |acc, (i, c)| acc + c / (x + i as f64 + 1.0));
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + series.ln()
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x) / b
    }
}

/// `P(T > t)` for Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    let tail = 0.5 * inc_beta(0.5 * df, 0.5, df / (df + t * t));
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WelchResult {
    pub mean_a: f64,
    pub mean_b: f64,
    pub sd_a: f64,
    pub sd_b: f64,
    pub t: f64,
    /// Welch–Satterthwaite degrees of freedom.
    pub df: f64,
    /// `P(T ≥ t)` under the null `mean_b ≤ mean_a`.
    pub p_value: f64,
}

/// Tests `H₀: mean(b) ≤ mean(a)` against `mean(b) > mean(a)` with
/// `t = (mean_b − mean_a) / √(s_a²/n_a + s_b²/n_b)`. Both samples need at
/// least two values.
pub fn welch_one_sided(a: &[f64], b: &[f64]) -> WelchResult {
    assert!(a.len() >= 2 && b.len() >= 2, "Welch test needs two values per sample");
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (variance(a), variance(b));
    let (qa, qb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = qa + qb;
    let diff = mb - ma;
    let (t, df) = if se2 > 0.0 {
        let df = se2 * se2 / (qa * qa / (a.len() as f64 - 1.0) + qb * qb / (b.len() as f64 - 1.0));
        (diff / se2.sqrt(), df)
    } else {
        let t = if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
        (t, (a.len() + b.len() - 2) as f64)
    };
    WelchResult { mean_a: ma, mean_b: mb, sd_a: va.sqrt(), sd_b: vb.sqrt(), t, df, p_value: student_t_sf(t, df) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_at_integers_and_half() {
        for (n, fact) in [(1.0, 1.0), (2.0, 1.0), (5.0, 24.0), (10.0, 362_880.0f64)] {
            assert!((ln_gamma(n) - fact.ln()).abs() < 1e-12);
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-12);
    }

    #[test]
    fn cauchy_tail_closed_form() {
        // One degree of freedom: P(T > t) = 1/2 − atan(t)/π.
        for t in [-3.0, -0.5, 0.0, 0.7, 2.0, 10.0] {
            let exact = 0.5 - f64::atan(t) / std::f64::consts::PI;
            assert!((student_t_sf(t, 1.0) - exact).abs() < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn two_dof_closed_form() {
        // P(T > t) = 1/2 − t / (2√(2 + t²)).
        for t in [-1.5f64, 0.3, 4.0] {
            let exact = 0.5 - t / (2.0 * (2.0 + t * t).sqrt());
            assert!((student_t_sf(t, 2.0) - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_samples_do_not_reject() {
        let a = [0.1, 0.4, 0.35, 0.2];
        let r = welch_one_sided(&a, &a);
        assert_eq!(r.t, 0.0);
        assert!((r.p_value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn separated_samples_reject() {
        let a = [0.0, 1e-6, -1e-6, 0.0];
        let b = [1.0, 1.0 + 1e-6, 1.0 - 1e-6, 1.0];
        let r = welch_one_sided(&a, &b);
        assert!(r.t > 1e5);
        assert!(r.p_value < 0.01);
        // Symmetric data: equal variances give df = 2(n − 1).
        assert!((r.df - 6.0).abs() < 1e-9);
        assert!(welch_one_sided(&b, &a).p_value > 0.99);
    }

    #[test]
    fn hand_computed_statistic() {
        // Means 2 and 5, variances 1 and 4, n = 3 each: se² = 5/3, t = 3/√(5/3).
        let r = welch_one_sided(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((r.t - 3.0 / (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let df = (25.0 / 9.0) / ((1.0 / 9.0) / 2.0 + (16.0 / 9.0) / 2.0);
        assert!((r.df - df).abs() < 1e-12);
    }
}

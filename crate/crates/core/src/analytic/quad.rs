//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The error heuristic follows QUADPACK's `qk15`. Semi-infinite ranges are
//! mapped to (0, 1] with x = a + (1 − t)/t.

use super::{AnalyticError, QuadSettings};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn qk15<F>(f: &mut F, a: f64, b: f64) -> Result<Segment, AnalyticError>
where
    F: FnMut(f64) -> Result<f64, AnalyticError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_k = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let abs_k = abs_k * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_k);
    }
    if !value.is_finite() {
        return Err(AnalyticError::NonFinite {
            context: "integrand",
            at: center,
        });
    }
    Ok(Segment { a, b, value, error })
}

/// Integrates a fallible integrand over the finite interval [a, b].
pub fn try_integrate<F>(mut f: F, a: f64, b: f64, q: &QuadSettings) -> Result<f64, AnalyticError>
where
    F: FnMut(f64) -> Result<f64, AnalyticError>,
{
    if a == b {
        return Ok(0.0);
    }
    let first = qk15(&mut f, a, b)?;
    let mut segments = vec![first];
    let mut total = first.value;
    let mut total_err = first.error;
    loop {
        let tol = q.abs_tol.max(q.rel_tol * total.abs());
        if total_err <= tol {
            return Ok(total);
        }
        if segments.len() >= q.max_subdivisions {
            return Err(AnalyticError::QuadratureFailure {
                estimate: total,
                error: total_err,
                subdivisions: segments.len(),
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
                if s.error > acc.1 {
                    (i, s.error)
                } else {
                    acc
                }
            });
        let s = segments[worst];
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval cannot be split further in floating point.
            return Err(AnalyticError::QuadratureFailure {
                estimate: total,
                error: total_err,
                subdivisions: segments.len(),
            });
        }
        let left = qk15(&mut f, s.a, mid)?;
        let right = qk15(&mut f, mid, s.b)?;
        total += left.value + right.value - s.value;
        total_err += left.error + right.error - s.error;
        segments[worst] = left;
        segments.push(right);
        // Guard against drift of the running sums.
        if segments.len() % 64 == 0 {
            total = segments.iter().map(|s| s.value).sum();
            total_err = segments.iter().map(|s| s.error).sum();
        }
    }
}

/// Integrates a fallible integrand over [a, ∞).
pub fn try_integrate_to_infinity<F>(
    mut f: F,
    a: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError>
where
    F: FnMut(f64) -> Result<f64, AnalyticError>,
{
    try_integrate(
        |t| {
            let x = a + (1.0 - t) / t;
            Ok(f(x)? / (t * t))
        },
        0.0,
        1.0,
        q,
    )
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, q: &QuadSettings) -> Result<f64, AnalyticError>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, q)
}

pub fn integrate_to_infinity<F>(mut f: F, a: f64, q: &QuadSettings) -> Result<f64, AnalyticError>
where
    F: FnMut(f64) -> f64,
{
    try_integrate_to_infinity(|x| Ok(f(x)), a, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> QuadSettings {
        QuadSettings::default()
    }

    #[test]
    fn polynomials_are_exact() {
        // Kronrod 15 integrates degree 22 exactly.
        let v = integrate(|x| x.powi(10) - 3.0 * x * x, -1.0, 2.0, &q()).unwrap();
        let exact = (2f64.powi(11) + 1.0) / 11.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity() {
        let v = integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, &q()).unwrap();
        assert!((v - 2.0).abs() < 1e-7);
    }

    #[test]
    fn semi_infinite() {
        let v = integrate_to_infinity(|x| (-x).exp(), 0.0, &q()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let v = integrate_to_infinity(|x| 1.0 / (1.0 + x * x), 1.0, &q()).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-10);
    }

    #[test]
    fn failure_is_reported() {
        let tight = QuadSettings {
            max_subdivisions: 10,
            rel_tol: 1e-14,
            abs_tol: 1e-300,
            ..QuadSettings::default()
        };
        let r = integrate(|x| (1.0 / x).sin() / x.sqrt(), 1e-9, 1.0, &tight);
        assert!(matches!(r, Err(AnalyticError::QuadratureFailure { .. })));
    }

    #[test]
    fn errors_propagate_from_integrand() {
        let r = try_integrate(
            |x| {
                if x > 0.5 {
                    Err(AnalyticError::InvalidArgument("boom".into()))
                } else {
                    Ok(x)
                }
            },
            0.0,
            1.0,
            &q(),
        );
        assert!(matches!(r, Err(AnalyticError::InvalidArgument(_))));
    }
}

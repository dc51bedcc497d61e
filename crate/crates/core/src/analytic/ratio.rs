//! Distribution of Z = ln(1+SINR_k)/ln(1+SINR_j) for independent tiers.
//!
//! With L = ln(1+SINR), the quotient density is
//! f_Z(z) = ∫₀^∞ y·f_{L_k}(zy)·f_{L_j}(y) dy, which in SINR terms reads
//! ∫₀^∞ y·e^{(z+1)y}·f_k(e^{zy}−1)·f_j(e^y−1) dy. Working with f_L instead
//! of f_SINR keeps the integrand bounded: e^{zy} is never formed on its own.
//!
//! The fixed point only needs the survival function
//! Pr(Z > z) = ∫₀^∞ f_{L_j}(y)·Pr(L_k > zy) dy, which [`RatioTable`]
//! tabulates on a uniform grid in ln z.

use rayon::prelude::*;

use super::quad::try_integrate_to_infinity;
use super::sinr::SinrLaw;
use super::{AnalyticError, QuadSettings};
use crate::model::NetworkModel;

fn check_pair(k: usize, j: usize) -> Result<(), AnalyticError> {
    if k == j {
        Err(AnalyticError::InvalidArgument(
            "SINR ratio needs two distinct tiers".into(),
        ))
    } else {
        Ok(())
    }
}

fn check_z(z: f64) -> Result<(), AnalyticError> {
    if z.is_nan() || z < 0.0 {
        Err(AnalyticError::InvalidArgument(format!(
            "ratio argument must be >= 0, got {z}"
        )))
    } else {
        Ok(())
    }
}

/// Density of ln(1+SINR_k)/ln(1+SINR_j) for two laws.
pub fn ratio_pdf(
    num: &SinrLaw,
    den: &SinrLaw,
    z: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    check_z(z)?;
    if z.is_infinite() {
        return Ok(0.0);
    }
    if z <= 1.0 {
        return try_integrate_to_infinity(
            |y| {
                let fj = den.ln_pdf(y, q)?;
                if fj == 0.0 {
                    return Ok(0.0);
                }
                Ok(y * num.ln_pdf(z * y, q)? * fj)
            },
            0.0,
            q,
        );
    }
    // For large z the integrand above is a spike of width ~1/z at the
    // origin; v = z·y spreads it out.
    let v = try_integrate_to_infinity(
        |v| {
            let fk = num.ln_pdf(v, q)?;
            if fk == 0.0 {
                return Ok(0.0);
            }
            Ok(v * fk * den.ln_pdf(v / z, q)?)
        },
        0.0,
        q,
    )?;
    Ok(v / (z * z))
}

/// Pr(ln(1+SINR_k)/ln(1+SINR_j) > z) for two laws.
pub fn ratio_ccdf(
    num: &SinrLaw,
    den: &SinrLaw,
    z: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    check_z(z)?;
    if z == 0.0 {
        return Ok(1.0);
    }
    if z.is_infinite() {
        return Ok(0.0);
    }
    if z > 1.0 {
        // Pr(L_j < L_k/z), integrated over L_k so the integrand stays wide.
        let v = try_integrate_to_infinity(
            |v| {
                let fk = num.ln_pdf(v, q)?;
                if fk == 0.0 {
                    return Ok(0.0);
                }
                Ok(fk * (1.0 - den.ln_ccdf(v / z, q)?))
            },
            0.0,
            q,
        )?;
        return Ok(v.clamp(0.0, 1.0));
    }
    let v = try_integrate_to_infinity(
        |y| {
            let fj = den.ln_pdf(y, q)?;
            if fj == 0.0 {
                return Ok(0.0);
            }
            Ok(fj * num.ln_ccdf(z * y, q)?)
        },
        0.0,
        q,
    )?;
    Ok(v.clamp(0.0, 1.0))
}

/// Density of ln(1+SINR_k)/ln(1+SINR_j) at z.
pub fn sinr_ratio_pdf(
    model: &NetworkModel,
    k: usize,
    j: usize,
    z: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    check_pair(k, j)?;
    ratio_pdf(
        &SinrLaw::for_tier(model, k)?,
        &SinrLaw::for_tier(model, j)?,
        z,
        q,
    )
}

/// Pr(ln(1+SINR_k)/ln(1+SINR_j) > z).
pub fn sinr_ratio_ccdf(
    model: &NetworkModel,
    k: usize,
    j: usize,
    z: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    check_pair(k, j)?;
    ratio_ccdf(
        &SinrLaw::for_tier(model, k)?,
        &SinrLaw::for_tier(model, j)?,
        z,
        q,
    )
}

/// Tabulated Pr(Z > z) on a uniform grid in s = ln z, interpolated with
/// cubic Hermite segments. Arguments outside the grid fall back to direct
/// quadrature.
#[derive(Debug, Clone)]
pub struct RatioTable {
    num: SinrLaw,
    den: SinrLaw,
    quad: QuadSettings,
    s_min: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl RatioTable {
    /// Half-width of the grid in ln z.
    pub const SPAN: f64 = 14.0;
    /// Grid points per unit of ln z.
    pub const DENSITY: usize = 32;

    pub fn build(num: SinrLaw, den: SinrLaw, q: &QuadSettings) -> Result<Self, AnalyticError> {
        let n = (2.0 * Self::SPAN) as usize * Self::DENSITY + 1;
        let step = 1.0 / Self::DENSITY as f64;
        let s_min = -Self::SPAN;
        let values = (0..n)
            .into_par_iter()
            .map(|i| ratio_ccdf(&num, &den, (s_min + i as f64 * step).exp(), q))
            .collect::<Result<Vec<_>, _>>()?;
        let slopes = five_point_slopes(&values, step);
        Ok(RatioTable {
            num,
            den,
            quad: *q,
            s_min,
            step,
            values,
            slopes,
        })
    }

    pub fn laws(&self) -> (SinrLaw, SinrLaw) {
        (self.num, self.den)
    }

    /// Pr(Z > z).
    pub fn ccdf(&self, z: f64) -> Result<f64, AnalyticError> {
        if z <= 0.0 {
            return Ok(1.0);
        }
        let s = z.ln();
        let pos = (s - self.s_min) / self.step;
        let last = self.values.len() - 1;
        if !(0.0..=last as f64).contains(&pos) {
            return ratio_ccdf(&self.num, &self.den, z, &self.quad);
        }
        let i = (pos.floor() as usize).min(last - 1);
        let u = pos - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * y1
            + (u3 - u2) * d1;
        Ok(v.clamp(0.0, 1.0))
    }
}

/// Fourth-order finite-difference derivatives of uniformly spaced samples.
fn five_point_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    assert!(n >= 5, "need at least five samples");
    (0..n)
        .map(|i| {
            let d = if i >= 2 && i + 2 < n {
                y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]
            } else if i == 0 {
                -25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]
            } else if i == 1 {
                -3.0 * y[0] - 10.0 * y[1] + 18.0 * y[2] - 6.0 * y[3] + y[4]
            } else if i == n - 2 {
                3.0 * y[n - 1] + 10.0 * y[n - 2] - 18.0 * y[n - 3] + 6.0 * y[n - 4] - y[n - 5]
            } else {
                25.0 * y[n - 1] - 48.0 * y[n - 2] + 36.0 * y[n - 3] - 16.0 * y[n - 4]
                    + 3.0 * y[n - 5]
            };
            d / (12.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::quad::try_integrate_to_infinity;

    fn q() -> QuadSettings {
        QuadSettings::default()
    }

    #[test]
    fn slopes_are_exact_for_quartics() {
        let h = 0.1;
        let y: Vec<f64> = (0..12)
            .map(|i| (i as f64 * h).powi(4) - (i as f64 * h))
            .collect();
        for (i, d) in five_point_slopes(&y, h).into_iter().enumerate() {
            let x = i as f64 * h;
            assert!((d - (4.0 * x.powi(3) - 1.0)).abs() < 1e-10, "i = {i}");
        }
    }

    #[test]
    fn identical_laws_are_symmetric() {
        let law = SinrLaw::new(4.0, 0.0);
        let at_one = ratio_ccdf(&law, &law, 1.0, &q()).unwrap();
        assert!((at_one - 0.5).abs() < 1e-8);
        for &z in &[0.1, 0.5, 3.0] {
            let a = ratio_ccdf(&law, &law, z, &q()).unwrap();
            let b = ratio_ccdf(&law, &law, 1.0 / z, &q()).unwrap();
            assert!((a + b - 1.0).abs() < 1e-8, "z = {z}");
        }
    }

    #[test]
    fn pdf_is_derivative_of_ccdf() {
        let a = SinrLaw::new(4.0, 0.0);
        let b = SinrLaw::new(4.0, 0.05);
        // Stencils stay on one side of z = 1, where the integral form changes.
        for &z in &[0.3, 0.9, 1.1, 2.5] {
            let h = 1e-4 * z;
            let fd = (ratio_ccdf(&a, &b, z - h, &q()).unwrap()
                - ratio_ccdf(&a, &b, z + h, &q()).unwrap())
                / (2.0 * h);
            let f = ratio_pdf(&a, &b, z, &q()).unwrap();
            assert!((f - fd).abs() < 1e-6 * f.max(1.0), "z = {z}: {f} vs {fd}");
        }
    }

    #[test]
    fn both_integral_forms_agree_at_one() {
        let a = SinrLaw::new(4.0, 0.0);
        let b = SinrLaw::new(4.0, 0.05);
        let below = ratio_ccdf(&a, &b, 1.0, &q()).unwrap();
        let above = ratio_ccdf(&a, &b, 1.0 + 1e-12, &q()).unwrap();
        assert!((below - above).abs() < 1e-8, "{below} vs {above}");
        let below = ratio_pdf(&a, &b, 1.0, &q()).unwrap();
        let above = ratio_pdf(&a, &b, 1.0 + 1e-12, &q()).unwrap();
        assert!((below - above).abs() < 1e-8, "{below} vs {above}");
    }

    #[test]
    fn ccdf_is_tail_integral_of_pdf() {
        let a = SinrLaw::new(3.5, 0.0);
        let b = SinrLaw::new(3.5, 0.2);
        let z = 0.8;
        let tail = try_integrate_to_infinity(|x| ratio_pdf(&a, &b, x, &q()), z, &q()).unwrap();
        let g = ratio_ccdf(&a, &b, z, &q()).unwrap();
        assert!((tail - g).abs() < 1e-6);
    }

    #[test]
    fn far_tail_matches_reflection() {
        let a = SinrLaw::new(4.0, 0.0);
        let b = SinrLaw::new(4.0, 0.3);
        for s in [3.0f64, 10.0, 14.0, 20.0] {
            let z = s.exp();
            let direct = ratio_ccdf(&a, &b, z, &q()).unwrap();
            let reflected = 1.0 - ratio_ccdf(&b, &a, 1.0 / z, &q()).unwrap();
            assert!(
                (direct - reflected).abs() < 1e-12 + 1e-6 * reflected,
                "ln z {s}"
            );
        }
    }

    #[test]
    fn pdf_has_unit_mass_in_log_scale() {
        let a = SinrLaw::new(4.0, 0.0);
        let b = SinrLaw::new(3.0, 0.1);
        let m = crate::analytic::quad::try_integrate(
            |u| Ok(ratio_pdf(&a, &b, u.exp(), &q())? * u.exp()),
            -40.0,
            40.0,
            &q(),
        )
        .unwrap();
        assert!((m - 1.0).abs() < 1e-6, "{m}");
    }

    #[test]
    fn table_interpolates_direct_values() {
        let a = SinrLaw::new(4.0, 0.0);
        let table = RatioTable::build(a, a, &q()).unwrap();
        // Probe off-grid points over the table and beyond its edges.
        for i in 0..40 {
            let s = -15.5 + i as f64 * 0.7913;
            let z = s.exp();
            let direct = ratio_ccdf(&a, &a, z, &q()).unwrap();
            let tab = table.ccdf(z).unwrap();
            assert!((direct - tab).abs() < 1e-8, "z = {z}: {direct} vs {tab}");
        }
    }

    #[test]
    fn ln_sinr_moments_are_consistent() {
        // E[L] two ways: ∫ Pr(L > t) dt and ∫ y f_L(y) dy.
        let law = SinrLaw::new(4.0, 0.0);
        let by_tail = law.spectral_efficiency(&q()).unwrap();
        let by_density =
            try_integrate_to_infinity(|y| Ok(y * law.ln_pdf(y, &q())?), 0.0, &q()).unwrap();
        assert!((by_tail - by_density).abs() < 1e-7);
    }
}

//! SINR law of the nearest BS in a tier, with Rayleigh fading and
//! interference from the rest of the same tier.
//!
//! Substituting u = πλr²(1 + φ(x)) in the distance integral gives
//!
//! ```text
//! P_c(x) = 1/(1+φ) · ∫₀^∞ e^{−u} exp(−x·w·u^{α/2}) du
//! f(x)   = 1/(1+φ) · ∫₀^∞ e^{−u} [u·φ'/(1+φ) + w·u^{α/2}] exp(−x·w·u^{α/2}) du
//! ```
//!
//! with w = η/(1+φ)^{α/2} and η = σ²/(P·(πλ)^{α/2}). The tier only enters
//! through η, so two tiers with equal η share one law; at σ² = 0 every tier
//! does and both integrals collapse to 1.

use std::f64::consts::PI;

use super::quad::{integrate, integrate_to_infinity, try_integrate_to_infinity};
use super::{check_tier, AnalyticError, QuadSettings};
use crate::model::NetworkModel;

/// ln(1+SINR) beyond this is treated as carrying no density.
const LN_SINR_CUTOFF: f64 = 700.0;

fn check_alpha(alpha: f64) -> Result<(), AnalyticError> {
    if alpha.is_finite() && alpha > 2.0 {
        Ok(())
    } else {
        Err(AnalyticError::InvalidArgument(format!(
            "path-loss exponent must exceed 2, got {alpha}"
        )))
    }
}

/// φ(x) = x^{2/α} ∫_{x^{−2/α}}^∞ dy / (1 + y^{α/2}).
///
/// The integral is split at m = max(x^{−2/α}, 1). The finite part is
/// integrated directly; the tail is mapped by y = m·s^{−1/(β−1)} (β = α/2),
/// which turns it into m/(β−1)·∫₀¹ ds/(s^{β/(β−1)} + m^β) with a smooth
/// integrand.
pub fn varphi(x: f64, alpha: f64, q: &QuadSettings) -> Result<f64, AnalyticError> {
    check_alpha(alpha)?;
    if x.is_nan() || x < 0.0 {
        return Err(AnalyticError::InvalidArgument(format!(
            "varphi needs x >= 0, got {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let beta = 0.5 * alpha;
    let lower = x.powf(-1.0 / beta);
    let m = lower.max(1.0);
    let head = if lower < 1.0 {
        integrate(|y| 1.0 / (1.0 + y.powf(beta)), lower, 1.0, q)?
    } else {
        0.0
    };
    let p = beta / (beta - 1.0);
    let m_beta = m.powf(beta);
    let tail = m / (beta - 1.0) * integrate(|s| 1.0 / (s.powf(p) + m_beta), 0.0, 1.0, q)?;
    Ok(x.powf(1.0 / beta) * (head + tail))
}

/// φ'(x) = (2/α)·[φ(x)/x + 1/(1+x)]; at x = 0 the limit 2/(α−2).
pub fn varphi_prime(x: f64, alpha: f64, q: &QuadSettings) -> Result<f64, AnalyticError> {
    check_alpha(alpha)?;
    if x == 0.0 {
        return Ok(2.0 / (alpha - 2.0));
    }
    let phi = varphi(x, alpha, q)?;
    Ok(derivative_from_phi(x, phi, alpha))
}

fn derivative_from_phi(x: f64, phi: f64, alpha: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    2.0 / alpha * (phi / x + 1.0 / (1.0 + x))
}

/// SINR distribution of the nearest BS of one tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrLaw {
    pub alpha: f64,
    /// σ²/(P·(πλ)^{α/2}); zero in the interference-limited regime.
    pub eta: f64,
}

impl SinrLaw {
    pub fn new(alpha: f64, eta: f64) -> Self {
        SinrLaw { alpha, eta }
    }

    pub fn for_tier(model: &NetworkModel, k: usize) -> Result<Self, AnalyticError> {
        check_tier(model, k)?;
        check_alpha(model.alpha)?;
        let t = &model.tiers[k];
        let eta = model.noise_power / (t.tx_power * (PI * t.density).powf(0.5 * model.alpha));
        Ok(SinrLaw::new(model.alpha, eta))
    }

    /// Pr(SINR > x).
    pub fn coverage(&self, x: f64, q: &QuadSettings) -> Result<f64, AnalyticError> {
        if x.is_nan() || x < 0.0 {
            return Err(AnalyticError::InvalidArgument(format!(
                "coverage needs x >= 0, got {x}"
            )));
        }
        if x == 0.0 {
            return Ok(1.0);
        }
        if x.is_infinite() {
            return Ok(0.0);
        }
        let phi = varphi(x, self.alpha, q)?;
        let base = 1.0 / (1.0 + phi);
        if self.eta == 0.0 {
            return Ok(base);
        }
        let beta = 0.5 * self.alpha;
        let scale = x * self.eta / (1.0 + phi).powf(beta);
        let noise = integrate_to_infinity(|u| (-u - scale * u.powf(beta)).exp(), 0.0, q)?;
        Ok((base * noise).clamp(0.0, 1.0))
    }

    /// Density of the SINR at x > 0.
    pub fn pdf(&self, x: f64, q: &QuadSettings) -> Result<f64, AnalyticError> {
        if x.is_nan() || x < 0.0 {
            return Err(AnalyticError::InvalidArgument(format!(
                "sinr pdf needs x >= 0, got {x}"
            )));
        }
        if x.is_infinite() {
            return Ok(0.0);
        }
        let phi = varphi(x, self.alpha, q)?;
        let dphi = if x == 0.0 {
            2.0 / (self.alpha - 2.0)
        } else {
            derivative_from_phi(x, phi, self.alpha)
        };
        let base = 1.0 / (1.0 + phi);
        let interference = dphi * base;
        if self.eta == 0.0 {
            return Ok(base * interference);
        }
        let beta = 0.5 * self.alpha;
        let w = self.eta / (1.0 + phi).powf(beta);
        let v = integrate_to_infinity(
            |u| {
                let ub = u.powf(beta);
                (interference * u + w * ub) * (-u - x * w * ub).exp()
            },
            0.0,
            q,
        )?;
        Ok((base * v).max(0.0))
    }

    /// Density of ln(1+SINR) at y: e^y·f(e^y − 1).
    pub fn ln_pdf(&self, y: f64, q: &QuadSettings) -> Result<f64, AnalyticError> {
        if y.is_nan() || y < 0.0 {
            return Err(AnalyticError::InvalidArgument(format!(
                "ln-SINR pdf needs y >= 0, got {y}"
            )));
        }
        if y > LN_SINR_CUTOFF {
            return Ok(0.0);
        }
        Ok(y.exp() * self.pdf(y.exp_m1(), q)?)
    }

    /// Pr(ln(1+SINR) > t).
    pub fn ln_ccdf(&self, t: f64, q: &QuadSettings) -> Result<f64, AnalyticError> {
        if t > LN_SINR_CUTOFF {
            return Ok(0.0);
        }
        self.coverage(t.max(0.0).exp_m1(), q)
    }

    /// E[ln(1+SINR)] = ∫₀^∞ Pr(ln(1+SINR) > t) dt, in nats/s/Hz.
    pub fn spectral_efficiency(&self, q: &QuadSettings) -> Result<f64, AnalyticError> {
        try_integrate_to_infinity(|t| self.ln_ccdf(t, q), 0.0, q)
    }
}

/// P_c^k(x): probability that the SINR from the nearest tier-k BS exceeds x.
pub fn coverage_probability(
    model: &NetworkModel,
    k: usize,
    x: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    SinrLaw::for_tier(model, k)?.coverage(x, q)
}

/// Density of the tier-k SINR.
pub fn sinr_pdf(
    model: &NetworkModel,
    k: usize,
    x: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    SinrLaw::for_tier(model, k)?.pdf(x, q)
}

/// Density of ln(1 + SINR_k).
pub fn lnsinr_pdf(
    model: &NetworkModel,
    k: usize,
    y: f64,
    q: &QuadSettings,
) -> Result<f64, AnalyticError> {
    SinrLaw::for_tier(model, k)?.ln_pdf(y, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::quad::try_integrate_to_infinity;
    use crate::model::{NetworkModel, TierParams};
    use statrs::function::beta::{beta, beta_reg};

    fn q() -> QuadSettings {
        QuadSettings::default()
    }

    /// Closed form at α = 4: φ(x) = √x·arctan√x.
    fn phi4(x: f64) -> f64 {
        x.sqrt() * x.sqrt().atan()
    }

    /// Incomplete-beta form, valid for every α > 2:
    /// φ(x) = (2/α)·x^{2/α}·B(x/(1+x); 1 − 2/α, 2/α).
    fn phi_beta(x: f64, alpha: f64) -> f64 {
        let a = 1.0 - 2.0 / alpha;
        let b = 2.0 / alpha;
        2.0 / alpha * x.powf(2.0 / alpha) * beta_reg(a, b, x / (1.0 + x)) * beta(a, b)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn varphi_anchors() {
        assert_eq!(varphi(0.0, 3.0, &q()).unwrap(), 0.0);
        assert_eq!(varphi(0.0, 4.0, &q()).unwrap(), 0.0);
        assert!(rel(varphi(1.0, 4.0, &q()).unwrap(), std::f64::consts::FRAC_PI_4) < 1e-10);
        assert!(rel(varphi(4.0, 4.0, &q()).unwrap(), 2.214_297_435_588_181) < 1e-10);
    }

    #[test]
    fn varphi_matches_closed_forms() {
        for &x in &[1e-8, 1e-3, 0.1, 0.5, 1.0, 3.0, 10.0, 1e3, 1e8] {
            assert!(
                rel(varphi(x, 4.0, &q()).unwrap(), phi4(x)) < 1e-9,
                "x = {x}"
            );
            for &alpha in &[2.5, 3.0, 3.5, 4.5, 5.0, 6.0] {
                let v = varphi(x, alpha, &q()).unwrap();
                assert!(
                    rel(v, phi_beta(x, alpha)) < 1e-8,
                    "x = {x}, alpha = {alpha}"
                );
            }
        }
    }

    #[test]
    fn varphi_rejects_bad_input() {
        assert!(varphi(-1.0, 4.0, &q()).is_err());
        assert!(varphi(1.0, 2.0, &q()).is_err());
    }

    #[test]
    fn varphi_prime_anchors() {
        // d/dx √x·arctan√x at x = 1 is π/8 + 1/4.
        let v = varphi_prime(1.0, 4.0, &q()).unwrap();
        assert!(rel(v, 0.642_699_081_698_724_2) < 1e-10);
        assert_eq!(varphi_prime(0.0, 4.0, &q()).unwrap(), 1.0);
        // Small-x limit 2/(α−2), and agreement with a central difference there.
        for &alpha in &[3.0, 4.0, 5.0] {
            let small = varphi_prime(1e-6, alpha, &q()).unwrap();
            assert!(rel(small, 2.0 / (alpha - 2.0)) < 1e-5);
            let h = 1e-9;
            let fd = (varphi(1e-6 + h, alpha, &q()).unwrap()
                - varphi(1e-6 - h, alpha, &q()).unwrap())
                / (2.0 * h);
            assert!(rel(small, fd) < 1e-5);
        }
    }

    fn single_tier(noise: f64, density_km2: f64, power_w: f64) -> NetworkModel {
        NetworkModel {
            tiers: vec![TierParams {
                density: density_km2 * 1e-6,
                tx_power: power_w,
                bandwidth: 1e6,
                cre_bias: 1.0,
            }],
            alpha: 4.0,
            noise_power: noise,
            mu_density: 1e-5,
            cell_area_shape: 3.575,
        }
    }

    #[test]
    fn coverage_interference_limited() {
        let m = single_tier(0.0, 1.0, 1.0);
        assert_eq!(coverage_probability(&m, 0, 0.0, &q()).unwrap(), 1.0);
        let c = coverage_probability(&m, 0, 1.0, &q()).unwrap();
        assert!(rel(c, 0.560_099_153_511_557_4) < 1e-10);
    }

    #[test]
    fn coverage_with_noise_reduces_to_snr_limit() {
        // Noise well below the received power: close to the interference-limited value.
        let quiet = single_tier(1e-20, 1.0, 1.0);
        let c = coverage_probability(&quiet, 0, 1.0, &q()).unwrap();
        assert!(c < 0.560_099_153_511_557_4 && c > 0.5600);
        // Noise comparable to typical received power (r ~ 560 m, r^-4 ~ 1e-11).
        let noisy = single_tier(1e-11, 1.0, 1.0);
        let c = coverage_probability(&noisy, 0, 1.0, &q()).unwrap();
        assert!(c > 0.0 && c < 0.56);
        // Same value through a direct integral in r.
        let lam = 1e-6;
        let phi = phi4(1.0);
        let direct = 2.0
            * PI
            * lam
            * try_integrate_to_infinity(
                |r| Ok(r * (-PI * r * r * lam * (1.0 + phi) - r.powi(4) * 1e-11).exp()),
                0.0,
                &q(),
            )
            .unwrap();
        assert!(rel(c, direct) < 1e-7);
    }

    #[test]
    fn pdf_interference_limited_closed_form() {
        let m = single_tier(0.0, 1.0, 1.0);
        let f = sinr_pdf(&m, 0, 1.0, &q()).unwrap();
        assert!(rel(f, 0.201_621_811_314_687_9) < 1e-10);
        let g = lnsinr_pdf(&m, 0, std::f64::consts::LN_2, &q()).unwrap();
        assert!(rel(g, 2.0 * 0.201_621_811_314_687_9) < 1e-10);
    }

    #[test]
    fn pdf_is_derivative_of_cdf() {
        for &noise in &[0.0, 1e-11] {
            let m = single_tier(noise, 1.0, 1.0);
            for &x in &[0.5, 1.0, 2.0] {
                let h = 1e-5 * x;
                let fd = (coverage_probability(&m, 0, x - h, &q()).unwrap()
                    - coverage_probability(&m, 0, x + h, &q()).unwrap())
                    / (2.0 * h);
                let f = sinr_pdf(&m, 0, x, &q()).unwrap();
                assert!(rel(f, fd) < 1e-5, "noise {noise}, x {x}: {f} vs {fd}");
            }
        }
    }

    #[test]
    fn ln_ccdf_matches_coverage() {
        let m = single_tier(1e-11, 1.0, 1.0);
        let law = SinrLaw::for_tier(&m, 0).unwrap();
        for &t in &[0.5f64, 1.0] {
            let tail = try_integrate_to_infinity(|y| law.ln_pdf(y, &q()), t, &q()).unwrap();
            let cov = law.coverage(t.exp_m1(), &q()).unwrap();
            assert!((tail - cov).abs() < 1e-7);
        }
    }

    #[test]
    fn extreme_arguments_are_finite() {
        let law = SinrLaw::new(4.0, 0.0);
        assert_eq!(law.ln_pdf(800.0, &q()).unwrap(), 0.0);
        assert_eq!(law.coverage(f64::INFINITY, &q()).unwrap(), 0.0);
        assert!(law.ln_pdf(300.0, &q()).unwrap() >= 0.0);
        let noisy = SinrLaw::new(4.0, 0.3);
        assert!(noisy.pdf(1e200, &q()).unwrap() >= 0.0);
        assert!(noisy.coverage(1e200, &q()).unwrap() >= 0.0);
    }
}

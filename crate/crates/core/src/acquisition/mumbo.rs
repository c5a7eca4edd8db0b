//! Mutual information between a noisy observation and the maximum value.
//!
//! Work on the standardized axis `θ = (y - μ_y) / σ_y` with `ρ` the predictive
//! correlation of `y` and `g` at the query. Given one max-value sample with
//! `γ = (g* - μ_g) / σ_g`, conditioning on `g ≤ g*` turns `θ` into
//!
//! ```text
//! p(θ) = φ(θ) Φ((γ - ρθ) / √(1-ρ²)) / Φ(γ)
//! ```
//!
//! and the gain is `H[φ] - H[p]`. Writing `a = γ/s`, `b = ρ/s`,
//! `s = √(1-ρ²)` and `λ = φ(γ)/Φ(γ)`, the second moment of `p` is
//! `1 - ρ²γλ`, so
//!
//! ```text
//! gain = ρ²γλ/2 + E_p[ln Φ(a - bθ)] - ln Φ(γ)
//! ```
//!
//! leaving one smooth one-dimensional integral. For `b ≤ 1` it is done in `θ`
//! with Gauss–Hermite nodes; for `b > 1` the edge of `p` sharpens, so the
//! integral is taken in `u = a - bθ`, where the integrand stays smooth at unit
//! scale, using composite Gauss–Legendre panels.

use std::sync::OnceLock;

use super::normal::{self, LN_SQRT_2PI};
use super::quadrature::{composite_legendre, gauss_hermite_normal, gauss_legendre, Rule};

/// `γ` is clamped to `[-GAMMA_CLAMP, GAMMA_CLAMP]`.
pub const GAMMA_CLAMP: f64 = 8.0;

/// At or above this `|ρ|` the closed-form truncated-normal gain is used.
pub const RHO_CLOSED_FORM: f64 = 1.0 - 1e-9;

/// Half-width of the `u` window kept on each side of the integrand's bulk.
const U_MARGIN: f64 = 8.5;
const U_RANGE: f64 = GAMMA_CLAMP + U_MARGIN + 0.5;

/// `½ ln(2πe)`, the entropy of a standard normal.
pub const STD_NORMAL_ENTROPY: f64 = 1.418_938_533_204_672_7;

/// Quadrature used by [`MumboRule::gain`].
#[derive(Debug, Clone)]
pub struct MumboRule {
    hermite: Rule,
    panel_width: f64,
    per_panel: usize,
    u_start: f64,
    u_nodes: Vec<f64>,
    u_weights: Vec<f64>,
    u_log_cdf: Vec<f64>,
}

impl MumboRule {
    /// `hermite_nodes` nodes on the `θ` route; panels of `panel_width` with
    /// `per_panel` Legendre nodes on the `u` route.
    pub fn new(hermite_nodes: usize, panel_width: f64, per_panel: usize) -> Self {
        let panels = (2.0 * U_RANGE / panel_width).ceil() as usize;
        let lo = -(panels as f64) * panel_width / 2.0;
        let u = composite_legendre(lo, -lo, panels, &gauss_legendre(per_panel));
        let u_log_cdf = u.nodes.iter().map(|x| normal::log_cdf(*x)).collect();
        Self {
            hermite: gauss_hermite_normal(hermite_nodes),
            panel_width,
            per_panel,
            u_start: lo,
            u_nodes: u.nodes,
            u_weights: u.weights,
            u_log_cdf,
        }
    }

    /// 64 Hermite nodes; half-unit panels with 8 Legendre nodes each.
    pub fn standard() -> &'static MumboRule {
        static RULE: OnceLock<MumboRule> = OnceLock::new();
        RULE.get_or_init(|| MumboRule::new(64, 0.5, 8))
    }

    /// Information gain about `g ≤ g*` from observing `y`, for one
    /// standardized max-value sample `γ`.
    pub fn gain(&self, rho: f64, gamma: f64) -> f64 {
        let rho = rho.abs().min(1.0);
        let gamma = gamma.clamp(-GAMMA_CLAMP, GAMMA_CLAMP);
        if rho == 0.0 {
            return 0.0;
        }
        if rho >= RHO_CLOSED_FORM {
            return closed_form_gain(gamma);
        }
        let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
        let a = gamma / s;
        let b = rho / s;
        let log_z = normal::log_cdf(gamma);
        let lambda = normal::mills(gamma);
        let expect = if b <= 1.0 {
            self.hermite
                .nodes
                .iter()
                .zip(&self.hermite.weights)
                .map(|(t, w)| {
                    let l = normal::log_cdf(a - b * t);
                    w * (l - log_z).exp() * l
                })
                .sum::<f64>()
        } else {
            self.u_expectation(a, b, gamma * s, log_z)
        };
        0.5 * rho * rho * gamma * lambda + expect - log_z
    }

    fn u_expectation(&self, a: f64, b: f64, center: f64, log_z: f64) -> f64 {
        let lo = center.min(0.0) - U_MARGIN;
        let hi = center.max(0.0) + U_MARGIN;
        let start = (((lo - self.u_start) / self.panel_width).floor().max(0.0) as usize) * self.per_panel;
        let end = ((((hi - self.u_start) / self.panel_width).ceil() as usize) * self.per_panel).min(self.u_nodes.len());
        let inv_two_b2 = 0.5 / (b * b);
        let offset = -LN_SQRT_2PI - b.ln() - log_z;
        (start..end)
            .map(|i| {
                let u = self.u_nodes[i];
                let l = self.u_log_cdf[i];
                let du = a - u;
                self.u_weights[i] * (offset - du * du * inv_two_b2 + l).exp() * l
            })
            .sum()
    }
}

/// Gain in the `ρ → 1` limit: the entropy drop of a normal truncated at `γ`,
/// `γφ(γ)/(2Φ(γ)) - ln Φ(γ)`.
pub fn closed_form_gain(gamma: f64) -> f64 {
    let gamma = gamma.clamp(-GAMMA_CLAMP, GAMMA_CLAMP);
    0.5 * gamma * normal::mills(gamma) - normal::log_cdf(gamma)
}

/// Reference gain from the definition `H[φ] - H[p]` with the trapezoid rule
/// on `θ ∈ [-10, 10]`. Slow; used to validate [`MumboRule`].
pub fn gain_trapezoid(rho: f64, gamma: f64, points: usize) -> f64 {
    let rho = rho.abs();
    let gamma = gamma.clamp(-GAMMA_CLAMP, GAMMA_CLAMP);
    let s = ((1.0 - rho) * (1.0 + rho)).sqrt();
    let log_z = normal::log_cdf(gamma);
    let h = 20.0 / (points - 1) as f64;
    let mut entropy = 0.0;
    for i in 0..points {
        let t = -10.0 + i as f64 * h;
        let log_p = -0.5 * t * t - LN_SQRT_2PI + normal::log_cdf((gamma - rho * t) / s) - log_z;
        let term = -log_p.exp() * log_p;
        let w = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
        entropy += w * h * if term.is_finite() { term } else { 0.0 };
    }
    STD_NORMAL_ENTROPY - entropy
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_correlation_gives_nothing() {
        assert_eq!(MumboRule::standard().gain(0.0, 0.7), 0.0);
        assert!(MumboRule::standard().gain(1e-12, 0.7).abs() < 1e-8);
    }

    #[test]
    fn closed_form_at_zero() {
        assert!((closed_form_gain(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn approaches_closed_form() {
        // the gap closes like sqrt(1 - rho), so it shrinks steadily toward the switch
        let rule = MumboRule::standard();
        for i in 0..50 {
            let gamma = -5.0 + 10.0 * i as f64 / 49.0;
            let limit = closed_form_gain(gamma);
            let mut prev = f64::INFINITY;
            for k in 2..=8 {
                let gap = (limit - rule.gain(1.0 - 10f64.powi(-k), gamma)).abs();
                assert!(gap <= prev + 1e-9, "γ={gamma}: gap grew to {gap}");
                prev = gap;
            }
            let near = rule.gain(1.0 - 2e-9, gamma);
            assert!((near - limit).abs() < 5e-4, "γ={gamma}: {near} vs {limit}");
        }
    }

    #[test]
    fn agrees_with_fine_trapezoid() {
        let rule = MumboRule::standard();
        for &rho in &[0.1, 0.4, 0.7, 0.71, 0.9, 0.99] {
            for &gamma in &[-3.0, -1.0, 0.0, 0.5, 2.0, 4.0] {
                let q = rule.gain(rho, gamma);
                let t = gain_trapezoid(rho, gamma, 200_001);
                assert!((q - t).abs() < 1e-7, "ρ={rho} γ={gamma}: {q} vs {t}");
            }
        }
    }

    #[test]
    fn coarse_trapezoid_is_close_for_moderate_correlation() {
        let rule = MumboRule::standard();
        for &(rho, gamma) in &[(0.3, 0.5), (0.6, -1.0), (0.8, 1.0)] {
            let q = rule.gain(rho, gamma);
            let t = gain_trapezoid(rho, gamma, 2000);
            assert!((q - t).abs() < 1e-5, "ρ={rho} γ={gamma}: {q} vs {t}");
        }
    }

    #[test]
    fn refining_quadrature_is_stable() {
        let coarse = MumboRule::standard();
        let fine = MumboRule::new(128, 0.25, 8);
        for i in 0..=20 {
            let rho = i as f64 / 20.0 * 0.999;
            for j in 0..=16 {
                let gamma = -8.0 + j as f64;
                let (a, b) = (coarse.gain(rho, gamma), fine.gain(rho, gamma));
                assert!((a - b).abs() < 1e-5, "ρ={rho} γ={gamma}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn nonnegative_and_monotone_in_correlation() {
        let rule = MumboRule::standard();
        for j in 0..=32 {
            let gamma = -8.0 + 0.5 * j as f64;
            let mut prev = 0.0;
            for i in 0..=200 {
                let rho = i as f64 / 200.0;
                let g = rule.gain(rho, gamma);
                assert!(g >= -1e-6, "ρ={rho} γ={gamma}: {g}");
                assert!(g >= prev - 1e-6, "ρ={rho} γ={gamma}: {g} < {prev}");
                prev = g;
            }
        }
    }

    #[test]
    fn sign_of_correlation_is_irrelevant() {
        let rule = MumboRule::standard();
        assert_eq!(rule.gain(-0.6, 0.3), rule.gain(0.6, 0.3));
    }

    /// Monte-Carlo oracle: draw `θ ~ p` exactly (truncated `z_g`, then
    /// `θ | z_g`), average `ln p(θ)`.
    fn mc_gain(rho: f64, gamma: f64, n: usize, rng: &mut ChaCha8Rng) -> (f64, f64) {
        use rand_distr::{Distribution, StandardNormal};
        let s = (1.0 - rho * rho).sqrt();
        let z_gamma = normal::cdf(gamma);
        let log_z = normal::log_cdf(gamma);
        let (mut sum, mut sum2) = (0.0, 0.0);
        for _ in 0..n {
            let u: f64 = rng.random::<f64>() * z_gamma;
            let zg = inverse_cdf(u.max(1e-300));
            let eps: f64 = StandardNormal.sample(rng);
            let t = rho * zg + s * eps;
            let log_p = -0.5 * t * t - LN_SQRT_2PI + normal::log_cdf((gamma - rho * t) / s) - log_z;
            sum += log_p;
            sum2 += log_p * log_p;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        (STD_NORMAL_ENTROPY + mean, (var / n as f64).sqrt())
    }

    fn inverse_cdf(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if normal::cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let rule = MumboRule::standard();
        for &(rho, gamma) in &[(0.7, 0.5), (0.95, -1.0), (0.3, 1.5)] {
            let (mc, se) = mc_gain(rho, gamma, 200_000, &mut rng);
            let q = rule.gain(rho, gamma);
            assert!((q - mc).abs() < 3.0 * se + 1e-9, "ρ={rho} γ={gamma}: {q} vs {mc} ± {se}");
        }
    }
}

//! Universal second-order integrals and the Lee–Huang–Yang-type
//! coefficient.
//!
//! Φ(h) = ∫₀^∞ y^{1/2} [√((y+2h)(y+2+2h)) - (y+1+2h) + 1/2y] dy.
//! The bracket is evaluated in the exact cancellation-free form
//! 1/2y - 1/(√((y+2h)(y+2+2h)) + y+1+2h), which follows from
//! P - S² = -1 with P = (y+2h)(y+2+2h), S = y+1+2h. The large-y tail
//! (1+2h)/2·y^{-2} + C₃(h)·y^{-3} is added analytically.

use crate::error::{Error, Result};
use crate::quad;
use crate::scattering::ScatteringSolution;
use once_cell::sync::Lazy;
use std::f64::consts::PI;

/// Result of the Φ quadrature.
#[derive(Debug, Clone, Copy)]
pub struct PhiResult {
    pub h: f64,
    pub value: f64,
    pub quadrature_error: f64,
    /// End of numeric integration / start of the analytic tail.
    pub split_point: f64,
}

fn phi_bracket(y: f64, h: f64) -> f64 {
    let p = (y + 2.0 * h) * (y + 2.0 + 2.0 * h);
    let s = y + 1.0 + 2.0 * h;
    0.5 / y - 1.0 / (p.sqrt() + s)
}

/// Φ(h) for h ≥ 0 by adaptive quadrature plus the analytic tail.
pub fn phi(h: f64) -> Result<PhiResult> {
    if h < 0.0 {
        return Err(Error::domain(format!("phi requires h >= 0, got {h}")));
    }
    let split = 4.0e6_f64;
    // [0, 1] with y = t² removing the y^{-1/2} endpoint behaviour
    let inner = quad::adaptive_gk(
        &|t: f64| {
            if t == 0.0 {
                return 1.0; // limit of 2t²·(1/(2t²))
            }
            let y = t * t;
            2.0 * t * t * t * phi_bracket(y, h) / t
        },
        0.0,
        1.0,
        1e-13,
        1e-13,
    )?;
    // [1, split] on geometric panels
    let edges = quad::log_edges(1.0, split, 60);
    let outer_terms: Vec<(f64, f64)> = edges
        .windows(2)
        .map(|w| {
            let q = quad::adaptive_gk(
                &|y: f64| y.sqrt() * phi_bracket(y, h),
                w[0],
                w[1],
                1e-14,
                1e-13,
            )
            .unwrap_or(quad::QuadEstimate {
                value: f64::NAN,
                abs_err: f64::INFINITY,
            });
            (q.value, q.abs_err)
        })
        .collect();
    let outer: f64 = crate::exec::pairwise_sum(
        &outer_terms.iter().map(|x| x.0).collect::<Vec<_>>(),
    );
    let outer_err: f64 = outer_terms.iter().map(|x| x.1).sum();
    if !outer.is_finite() {
        return Err(Error::numeric("phi quadrature failed", f64::NAN, 1e-13));
    }

    // Tail ∫_Y^∞ y^{1/2}·bracket: bracket = (1+2h)/2·y^{-2} + C₃·y^{-3} + …
    let a_c = 2.0 + 4.0 * h;
    let b_c = 4.0 * h * (1.0 + h);
    let c3 = -b_c * b_c / 8.0 + 3.0 * a_c * a_c * b_c / 16.0 - 5.0 * a_c.powi(4) / 128.0;
    let tail = (1.0 + 2.0 * h) / split.sqrt() + (2.0 / 3.0) * c3 / split.powf(1.5);
    // next omitted order is O(Y^{-5/2}) with an O(A⁶) coefficient
    let tail_err = 60.0 * (1.0 + 2.0 * h).powi(6) / split.powf(2.5);

    let value = inner.value + outer + tail;
    Ok(PhiResult {
        h,
        value,
        quadrature_error: inner.abs_err + outer_err + tail_err,
        split_point: split,
    })
}

/// Φ(0) closed form, √512/15.
pub fn phi0_exact() -> f64 {
    512f64.sqrt() / 15.0
}

static PHI0: Lazy<f64> = Lazy::new(|| phi(0.0).expect("phi(0) quadrature").value);

/// Φ'(0) = ∫₀^∞ 2 y^{1/2} dy / (√(y(y+2)) · (y+1+√(y(y+2)))), the
/// derivative of the defining integral at h = 0 (finite and positive;
/// equals 4√2/3 in closed form).
pub fn phi_prime0() -> f64 {
    let integrand = |y: f64| {
        if y == 0.0 {
            return 2f64.sqrt(); // endpoint limit 2√y/√(2y)
        }
        let w = (y * (y + 2.0)).sqrt();
        2.0 * y.sqrt() / (w * (y + 1.0 + w))
    };
    // y = t² tames the √y cusp at the origin
    let inner = quad::adaptive_gk(
        &|t: f64| 2.0 * t * integrand(t * t),
        0.0,
        1.0,
        1e-13,
        1e-13,
    )
    .expect("phi_prime0 inner quadrature");
    let split = 1.0e8_f64;
    let edges = quad::log_edges(1.0, split, 60);
    let outer = quad::gl_panels(integrand, &edges, 24);
    // integrand → y^{-3/2}(1 + O(1/y)); tail = 2/√Y + O(Y^{-3/2})
    inner.value + outer + 2.0 / split.sqrt()
}

/// Q(h) = 4πaNρ · √(32/π) · Φ(h) · (a³ρ)^{1/2}.
pub fn q_of_h(h: f64, a: f64, rho: f64, n: f64) -> Result<f64> {
    if h < 0.0 {
        return Err(Error::domain("q_of_h requires h >= 0"));
    }
    if a <= 0.0 || n <= 0.0 || rho < 0.0 {
        return Err(Error::domain(
            "q_of_h requires a > 0, N > 0 and rho >= 0",
        ));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let phi_h = phi(h)?.value;
    Ok(4.0 * PI * a * n * rho * (32.0 / PI).sqrt() * phi_h * (a.powi(3) * rho).sqrt())
}

/// S_λ = Φ(h)/Φ(0) ≥ 1.
pub fn s_lambda(h: f64) -> Result<f64> {
    Ok(phi(h)?.value / *PHI0)
}

/// Lee–Yang prediction ε = 4πρa[1 + (128/15√π)(ρa³)^{1/2}].
pub fn lhy_prediction(rho: f64, a: f64) -> Result<f64> {
    if rho <= 0.0 || a <= 0.0 {
        return Err(Error::domain("lhy_prediction requires positive inputs"));
    }
    Ok(4.0 * PI * rho * a * (1.0 + 128.0 / (15.0 * PI.sqrt()) * (rho * a.powi(3)).sqrt()))
}

/// F(x, p) = (√((x+2f̂_p)(x+2V̂_p)) - (x+f̂_p+V̂_p) + ĝ_p²/2x)·x^{1/2},
/// evaluated in the cancellation-free form x^{1/2}ĝ²(1/2x - 1/(√(PQ)+S)).
pub fn integrand_f(x: f64, p_norm: f64, scat: &ScatteringSolution) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::domain("integrand_f requires x > 0"));
    }
    let f = scat.f_hat(p_norm)?;
    let v = scat.v_hat(p_norm)?;
    let g = v - f;
    let pq = (x + 2.0 * f) * (x + 2.0 * v);
    let s = x + f + v;
    Ok(x.sqrt() * g * g * (0.5 / x - 1.0 / (pq.sqrt() + s)))
}

/// G(x, p) = x^{1/2} F(x, p) via the rationalized large-x form
/// ĝ²(4(f̂+V̂)x - ĝ²) / (2(√(PQ)+S)(√(PQ)+x-f̂-V̂)).
pub fn integrand_g(x: f64, p_norm: f64, scat: &ScatteringSolution) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::domain("integrand_g requires x > 0"));
    }
    let f = scat.f_hat(p_norm)?;
    let v = scat.v_hat(p_norm)?;
    let g = v - f;
    let pq = ((x + 2.0 * f) * (x + 2.0 * v)).sqrt();
    Ok(g * g * (4.0 * (f + v) * x - g * g)
        / (2.0 * (pq + x + f + v) * (pq + x - f - v)))
}

/// x-coordinate where the numerator of the rationalized form may vanish:
/// x* = ĝ_p²/(4(f̂_p+V̂_p)); the positivity argument needs x* < f̂_p + V̂_p.
pub fn vanishing_locus(p_norm: f64, scat: &ScatteringSolution) -> Result<(f64, f64)> {
    let f = scat.f_hat(p_norm)?;
    let v = scat.v_hat(p_norm)?;
    let g = v - f;
    Ok((g * g / (4.0 * (f + v)), f + v))
}

/// Q evaluated from the x-integral of F, both with the p-dependence live
/// (p = √(ρx)) and frozen at p = 0.
#[derive(Debug, Clone, Copy)]
pub struct QIntegral {
    pub full: f64,
    pub frozen: f64,
    /// Splitting constant c: the x > c/ρ regime is the controlled tail.
    pub c_split: f64,
    /// Contribution of the x > c/ρ tail to the full integral (per the
    /// same normalization as `full`).
    pub tail_above_split: f64,
}

/// Q = (πNρ^{3/2}/(2π)³) ∫ F(x, √(ρx)) dx, via the substitution p = √(ρx)
/// which removes the x^{-1/2} endpoint singularity. The frozen variant
/// uses the p = 0 tables and reduces to ĝ₀^{5/2}Φ(h).
pub fn q_from_integral(scat: &ScatteringSolution, rho: f64, n: f64) -> Result<QIntegral> {
    if rho <= 0.0 || n <= 0.0 {
        return Err(Error::domain("q_from_integral requires positive rho, N"));
    }
    let g0 = scat.g_hat0;
    if g0 <= 0.0 {
        return Err(Error::domain("q_from_integral needs a nontrivial solution"));
    }
    let prefactor = PI * n * rho.powf(1.5) / (2.0 * PI).powi(3);

    // ∫₀^∞ F(x, √(ρx)) dx = ∫₀^{p_top} F(p²/ρ, p) · 2p/ρ dp
    let integrand_p = |p: f64| -> f64 {
        if p == 0.0 {
            // limit ĝ₀²/√ρ of the transformed integrand
            return g0 * g0 / rho.sqrt();
        }
        let x = p * p / rho;
        2.0 * p / rho * integrand_f(x, p, scat).unwrap_or(0.0)
    };
    let p_phonon = (rho * g0).sqrt();
    let p_top = scat.p_max();
    let mid = (20.0 * p_phonon).min(0.5 * p_top);
    let inner = quad::adaptive_gk(&integrand_p, 0.0, mid, 1e-16, 1e-11)?;
    let edges = quad::log_edges(mid, p_top, 40);
    let outer = quad::gl_panels(integrand_p, &edges, 24);
    let full = prefactor * (inner.value + outer);

    // tail above x = c/ρ, i.e. p > √c with c = δ²
    let c_split = scat.delta * scat.delta;
    let p_split = scat.delta.min(p_top);
    let tail_above_split = if p_split < p_top {
        let edges = quad::log_edges(p_split, p_top, 40);
        prefactor * quad::gl_panels(integrand_p, &edges, 24)
    } else {
        0.0
    };

    // frozen: F(x, 0) reduces to ĝ₀^{5/2}·(Φ-bracket in y = x/ĝ₀)
    let frozen = {
        let h = scat.f_hat0 / g0;
        let phi_h = phi(h)?.value;
        prefactor * g0.powf(2.5) * phi_h
    };

    Ok(QIntegral {
        full,
        frozen,
        c_split,
        tail_above_split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Potential;
    use crate::scattering::{born_series, solve_radial};

    #[test]
    fn phi_zero_matches_closed_form() {
        let r = phi(0.0).unwrap();
        assert!((r.value - phi0_exact()).abs() < 1e-10, "{}", r.value);
        assert!((phi0_exact() - 1.508_494_466_5).abs() < 1e-9);
        assert!(r.quadrature_error < 1e-10 * r.value);
    }

    #[test]
    fn phi_increases_from_zero() {
        let p0 = phi(0.0).unwrap().value;
        let p1 = phi(0.1).unwrap().value;
        assert!(p1 > p0);
        // golden value frozen from an independent 40-digit quadrature
        assert!(
            (p1 - 1.677_930_038_134_951).abs() < 1e-11,
            "phi(0.1) = {p1:.15}"
        );
    }

    #[test]
    fn phi_tail_stable_under_split_doubling() {
        // doubling the numeric window must not move the value beyond the
        // reported quadrature error
        let r = phi(0.3).unwrap();
        let split = 8.0e6_f64;
        let edges = quad::log_edges(1.0, split, 70);
        let inner = quad::adaptive_gk(
            &|t: f64| {
                if t == 0.0 {
                    1.0
                } else {
                    2.0 * t * t * phi_bracket(t * t, 0.3)
                }
            },
            0.0,
            1.0,
            1e-13,
            1e-13,
        )
        .unwrap();
        let outer = quad::gl_panels(|y: f64| y.sqrt() * phi_bracket(y, 0.3), &edges, 24);
        let a_c: f64 = 2.0 + 4.0 * 0.3;
        let b_c = 4.0 * 0.3 * 1.3;
        let c3 = -b_c * b_c / 8.0 + 3.0 * a_c * a_c * b_c / 16.0 - 5.0 * a_c.powi(4) / 128.0;
        let tail = (1.0 + 0.6) / split.sqrt() + (2.0 / 3.0) * c3 / split.powf(1.5);
        let doubled = inner.value + outer + tail;
        assert!(
            (doubled - r.value).abs() <= 4.0 * r.quadrature_error.max(1e-12),
            "{} vs {} (err {})",
            doubled,
            r.value,
            r.quadrature_error
        );
    }

    #[test]
    fn phi_rejects_negative_h() {
        assert!(phi(-0.1).is_err());
    }

    #[test]
    fn phi_prime_positive_finite_and_matches_difference_quotient() {
        let d = phi_prime0();
        assert!(d.is_finite() && d > 0.0);
        // closed form 4√2/3 of the derivative integral
        assert!((d - 4.0 * 2f64.sqrt() / 3.0).abs() < 1e-9, "{d}");
        let h = 1e-5;
        let fd = (phi(h).unwrap().value - phi(0.0).unwrap().value) / h;
        assert!((fd - d).abs() < 1e-4 * d, "fd = {fd}, analytic = {d}");
    }

    #[test]
    fn q_of_h_identities() {
        // √(32/π)·Φ(0) = 128/(15√π) = 4.81441777960752…
        let lhs = (32.0 / PI).sqrt() * phi(0.0).unwrap().value;
        let rhs = 128.0 / (15.0 * PI.sqrt());
        assert!((rhs - 4.814_417_779_607_52).abs() < 1e-13);
        assert!((lhs - rhs).abs() < 1e-12 * rhs, "{lhs} vs {rhs}");
        // exact-arithmetic version of the same identity
        let exact = (32.0 / PI).sqrt() * phi0_exact();
        assert!((exact - rhs).abs() < 1e-12);
        // ρ = 0 → 0, and Q/N scales as ρ^{3/2}
        assert_eq!(q_of_h(0.1, 0.02, 0.0, 1.0).unwrap(), 0.0);
        let q1 = q_of_h(0.0, 0.02, 1e-6, 1.0).unwrap();
        let q2 = q_of_h(0.0, 0.02, 2e-6, 1.0).unwrap();
        assert!((q2 / q1 - 2f64.powf(1.5)).abs() < 1e-10);
        assert!(q_of_h(0.1, -1.0, 1e-6, 1.0).is_err());
    }

    #[test]
    fn s_lambda_basics() {
        assert!((s_lambda(0.0).unwrap() - 1.0).abs() < 1e-12);
        let mut h = 0.0;
        while h <= 0.5 {
            assert!(s_lambda(h).unwrap() >= 1.0 - 1e-12);
            h += 0.05;
        }
    }

    #[test]
    fn lhy_prediction_identities() {
        let rho = 1e-6;
        let a = 1e-2;
        let eps = lhy_prediction(rho, a).unwrap();
        // ε - 4πρa = Q(0)/N exactly
        let q0 = q_of_h(0.0, a, rho, 1.0).unwrap();
        // q_of_h uses the quadrature Φ(0); compare with matching accuracy
        assert!((eps - 4.0 * PI * rho * a - q0).abs() < 1e-9 * eps);
        // small-gas-parameter limit
        assert!((eps / (4.0 * PI * rho * a) - 1.0 - 4.814_417_78e-6).abs() < 1e-12);
        // serialization golden: 4π·1e-8·(1 + (128/15√π)·1e-6)
        let golden = 4.0 * PI * 1e-8 * (1.0 + 4.814_417_779_607_52e-6);
        assert!((eps - golden).abs() < 1e-13 * eps.abs());
    }

    fn scat_for_tests() -> ScatteringSolution {
        let pot = Potential::gaussian(1.0, 0.1).unwrap();
        solve_radial(&pot, 20.0, 1e-6).unwrap()
    }

    #[test]
    fn f_vanishes_for_first_born() {
        // ĝ = V̂ - f̂ with f̂ ≡ 0 makes the radicand a perfect square only
        // when ĝ = 0, i.e. when f̂ = V̂; emulate with the trivial solution.
        let pot = Potential::gaussian(1.0, 0.0).unwrap();
        let sol = born_series(&pot, None, 1).unwrap();
        assert_eq!(integrand_f(1.0, 0.5, &sol).unwrap(), 0.0);
    }

    #[test]
    fn f_positive_on_grid_and_g_consistent() {
        let scat = scat_for_tests();
        for i in 0..40 {
            let x = 1e-4 * (1e8f64).powf(i as f64 / 39.0);
            for j in 0..8 {
                let rho = 1e-8 * (1e5f64).powf(j as f64 / 7.0);
                let p = (rho * x).sqrt();
                if p > scat.p_max() {
                    continue;
                }
                let f = integrand_f(x, p, &scat).unwrap();
                assert!(f >= -1e-12, "F({x:e}, {p:e}) = {f:e}");
                let g = integrand_g(x, p, &scat).unwrap();
                assert!(
                    (f - g / x.sqrt()).abs() <= 1e-10 * f.abs().max(1e-300),
                    "F = {f:e} vs G/√x = {:e}",
                    g / x.sqrt()
                );
                let (locus, bound) = vanishing_locus(p, &scat).unwrap();
                assert!(locus < bound);
            }
        }
    }

    #[test]
    fn q_integral_frozen_matches_q_of_h() {
        let scat = scat_for_tests();
        let rho = 1e-5;
        let n = 1.0;
        let q = q_from_integral(&scat, rho, n).unwrap();
        let direct = q_of_h(scat.h, scat.a, rho, n).unwrap();
        // identical after y = x/ĝ₀ with ĝ₀ = 8πa up to the a-vs-ĝ₀
        // quadrature difference
        assert!(
            (q.frozen - direct).abs() < 1e-8 * direct.abs(),
            "{:e} vs {direct:e}",
            q.frozen
        );
    }

    #[test]
    fn q_integral_full_vs_frozen_scaling() {
        // |full - frozen| ≤ C·Nρ²|log ρ| with stable C, and the tail above
        // x = c/ρ stays ≤ C'·√ρ·(Q-scale).
        let scat = scat_for_tests();
        let mut cs = Vec::new();
        for &rho in &[1e-5, 2.5e-6] {
            let q = q_from_integral(&scat, rho, 1.0).unwrap();
            let c = (q.full - q.frozen).abs() / (rho * rho * rho.ln().abs());
            cs.push(c);
            // tail above x = c/ρ obeys the C·√ρ envelope (golden C ≈ 0.067)
            let tail_ratio = q.tail_above_split.abs() / (q.full.abs() * rho.sqrt());
            assert!(tail_ratio < 0.1, "tail ratio = {tail_ratio}");
        }
        assert!(
            cs[0] < 8.0 * cs[1].max(1e-12) && cs[1] < 8.0 * cs[0].max(1e-12),
            "C unstable: {cs:?}"
        );
    }
}

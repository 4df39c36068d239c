//! Radially symmetric soft pair potentials V = λ·Ṽ and their 3D Fourier
//! transforms.
//!
//! Conventions: V̂(p) = ∫ e^{-ip·x} V(x) d³x. For a radial profile this is
//! the sine transform (4π/p)∫ r sin(pr) V(r) dr with the p → 0 limit
//! 4π ∫ r² V(r) dr, and V̂ is real.

use crate::error::{Error, Result};
use crate::quad::{self, Spline};
use std::f64::consts::PI;

/// Radial profile family. Profiles are normalized so that Ṽ(0) = 1 for the
/// Gaussian; the polynomial family keeps whatever its coefficients give.
#[derive(Debug, Clone)]
pub enum Profile {
    /// Ṽ(r) = exp(-r²/σ²).
    Gaussian { sigma: f64 },
    /// Ṽ(r) = Σ_k c_k (r/r0)^{2k} · exp(-(r/r0)²). Even powers keep the
    /// profile smooth at the origin; nonnegative coefficients keep Ṽ ≥ 0.
    PolyGauss { r0: f64, coeffs: Vec<f64> },
}

/// A soft repulsive pair potential V = λ·Ṽ.
#[derive(Debug, Clone)]
pub struct Potential {
    profile: Profile,
    lambda: f64,
    r_support: f64,
}

impl Potential {
    pub fn gaussian(sigma: f64, lambda: f64) -> Result<Self> {
        if sigma <= 0.0 {
            return Err(Error::domain("gaussian width must be positive"));
        }
        if lambda < 0.0 {
            return Err(Error::domain("coupling lambda must be nonnegative"));
        }
        Ok(Potential {
            profile: Profile::Gaussian { sigma },
            lambda,
            r_support: 16.0 * sigma,
        })
    }

    pub fn poly_gauss(r0: f64, coeffs: Vec<f64>, lambda: f64) -> Result<Self> {
        if r0 <= 0.0 {
            return Err(Error::domain("polygauss scale r0 must be positive"));
        }
        if lambda < 0.0 {
            return Err(Error::domain("coupling lambda must be nonnegative"));
        }
        if coeffs.is_empty() || coeffs.iter().any(|&c| c < 0.0) {
            return Err(Error::domain(
                "polygauss coefficients must be nonempty and nonnegative (keeps the profile >= 0)",
            ));
        }
        Ok(Potential {
            profile: Profile::PolyGauss { r0, coeffs },
            lambda,
            r_support: 16.0 * r0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn r_support(&self) -> f64 {
        self.r_support
    }

    /// Characteristic width of the profile (σ or r0).
    pub fn width(&self) -> f64 {
        match &self.profile {
            Profile::Gaussian { sigma } => *sigma,
            Profile::PolyGauss { r0, .. } => *r0,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self.profile, Profile::Gaussian { .. })
    }

    fn tilde(&self, r: f64) -> f64 {
        match &self.profile {
            Profile::Gaussian { sigma } => (-(r * r) / (sigma * sigma)).exp(),
            Profile::PolyGauss { r0, coeffs } => {
                let x = (r / r0) * (r / r0);
                let mut poly = 0.0;
                for &c in coeffs.iter().rev() {
                    poly = poly * x + c;
                }
                poly * (-x).exp()
            }
        }
    }

    /// V(r) = λ·Ṽ(r) for r ≥ 0.
    pub fn evaluate_position(&self, r: f64) -> Result<f64> {
        if r < 0.0 {
            return Err(Error::domain(format!("radius must be nonnegative, got {r}")));
        }
        Ok(self.lambda * self.tilde(r))
    }

    /// Continuum radial Fourier transform V̂(p). Closed form for the
    /// Gaussian family, adaptive sine-transform quadrature otherwise.
    pub fn fourier_continuum(&self, p: f64) -> Result<f64> {
        if p < 0.0 {
            return Err(Error::domain(format!("momentum must be nonnegative, got {p}")));
        }
        match &self.profile {
            Profile::Gaussian { sigma } => {
                Ok(self.lambda * PI.powf(1.5) * sigma.powi(3) * (-sigma * sigma * p * p / 4.0).exp())
            }
            Profile::PolyGauss { .. } => self.fourier_quadrature(p),
        }
    }

    /// Generic quadrature route for V̂(p), usable for every family. Serves
    /// as the independent cross-check of the closed-form path.
    pub fn fourier_quadrature(&self, p: f64) -> Result<f64> {
        if p < 0.0 {
            return Err(Error::domain(format!("momentum must be nonnegative, got {p}")));
        }
        if self.lambda == 0.0 {
            return Ok(0.0);
        }
        let rs = self.r_support;
        if p * rs < 0.5 {
            // Series in p via radial moments: sinc(pr) = Σ (-1)^k (pr)^{2k}/(2k+1)!.
            let m2 = self.radial_moment(2);
            let m4 = self.radial_moment(4);
            let m6 = self.radial_moment(6);
            let m8 = self.radial_moment(8);
            let m10 = self.radial_moment(10);
            let p2 = p * p;
            return Ok(4.0
                * PI
                * (m2 - p2 * m4 / 6.0 + p2 * p2 * m6 / 120.0 - p2 * p2 * p2 * m8 / 5040.0
                    + p2 * p2 * p2 * p2 * m10 / 362880.0));
        }
        // Panels no wider than half a sine period (splitting at the zeros
        // of sin(pr)) and no wider than half the profile width.
        let integrand = |r: f64| r * (p * r).sin() * self.lambda * self.tilde(r);
        let spacing = (PI / p).min(0.5 * self.width());
        let panels = (rs / spacing).ceil() as usize;
        let edges = quad::linear_edges(0.0, rs, panels.max(4));
        let val = quad::gl_panels(integrand, &edges, 16);
        Ok(4.0 * PI / p * val)
    }

    /// ∫₀^∞ r^k V(r) dr, truncated at the support radius.
    pub fn radial_moment(&self, k: u32) -> f64 {
        let edges = quad::linear_edges(0.0, self.r_support, 24);
        quad::gl_panels(
            |r: f64| r.powi(k as i32) * self.lambda * self.tilde(r),
            &edges,
            16,
        )
    }

    /// V̂(0) = 4π ∫ r² V(r) dr.
    pub fn v_hat_zero(&self) -> f64 {
        match &self.profile {
            Profile::Gaussian { sigma } => self.lambda * PI.powf(1.5) * sigma.powi(3),
            Profile::PolyGauss { .. } => 4.0 * PI * self.radial_moment(2),
        }
    }

    /// Periodized value Σ_{n ∈ {-1,0,1}³} V(|x + Ln|): monitors how far the
    /// box potential is from its infinite-volume limit.
    pub fn periodized_value(&self, x: &[f64; 3], l: f64) -> f64 {
        let mut total = 0.0;
        for n0 in -1i32..=1 {
            for n1 in -1i32..=1 {
                for n2 in -1i32..=1 {
                    let dx = x[0] + l * n0 as f64;
                    let dy = x[1] + l * n1 as f64;
                    let dz = x[2] + l * n2 as f64;
                    let r = (dx * dx + dy * dy + dz * dz).sqrt();
                    total += self.lambda * self.tilde(r);
                }
            }
        }
        total
    }

    /// Build the Fourier-side kernel used by lattice double sums: fast
    /// closed form for the Gaussian family, a tabulated transform otherwise.
    /// `p_max` must cover every momentum the caller will request (tables are
    /// never extrapolated; beyond 2·p_max the transform is treated as zero,
    /// which the support floor guarantees).
    pub fn kernel(&self, p_max: f64) -> Result<FourierKernel> {
        match &self.profile {
            Profile::Gaussian { sigma } => Ok(FourierKernel::Gaussian {
                lambda: self.lambda,
                sigma: *sigma,
            }),
            Profile::PolyGauss { r0, .. } => {
                let top = 2.2 * p_max.max(4.0 / r0);
                let n = 1200;
                let xs: Vec<f64> = (0..=n).map(|i| top * i as f64 / n as f64).collect();
                let mut ys = Vec::with_capacity(xs.len());
                for &p in &xs {
                    ys.push(self.fourier_quadrature(p)?);
                }
                let spline = Spline::natural(xs, ys)?;
                Ok(FourierKernel::Table {
                    spline,
                    s_scale: (2.0 / r0) * (2.0 / r0),
                })
            }
        }
    }
}

/// Momentum-space kernel: V̂(p) plus its average over the relative angle
/// between two momenta, V̄(p, r) = ½ ∫_{-1}^{1} V̂(|p - r|) dt with
/// |p - r|² = p² + r² - 2prt.
#[derive(Debug, Clone)]
pub enum FourierKernel {
    Gaussian { lambda: f64, sigma: f64 },
    Table { spline: Spline, s_scale: f64 },
}

impl FourierKernel {
    pub fn vhat(&self, p: f64) -> f64 {
        match self {
            FourierKernel::Gaussian { lambda, sigma } => {
                lambda * PI.powf(1.5) * sigma.powi(3) * (-sigma * sigma * p * p / 4.0).exp()
            }
            // Beyond the table the transform is below the support floor.
            FourierKernel::Table { spline, .. } => spline.eval(p.abs()).unwrap_or(0.0),
        }
    }

    /// Angular average V̄(p, r). Uses the exact change of variables
    /// s = |p - r|², which turns the angular integral into
    /// (1/4pr) ∫_{(p-r)²}^{(p+r)²} V̂(√s) ds; closed form for Gaussians.
    pub fn angular_avg(&self, p: f64, r: f64) -> f64 {
        match self {
            FourierKernel::Gaussian { lambda, sigma } => {
                let s2 = sigma * sigma;
                let x = s2 * p * r;
                if x < 1e-8 {
                    // Degenerate interval: V̄ → V̂(√(p² + r²)).
                    return self.vhat((p * p + r * r).sqrt());
                }
                let dm = p - r;
                lambda * PI.powf(1.5) * sigma / (p * r)
                    * (-s2 * dm * dm / 4.0).exp()
                    * (-(-x).exp_m1())
            }
            FourierKernel::Table { spline, s_scale } => {
                if p * r < 1e-12 {
                    return self.vhat((p * p + r * r).sqrt());
                }
                let s_lo = (p - r) * (p - r);
                let s_hi = (p + r) * (p + r);
                let top = spline.x_max() * spline.x_max();
                let s_hi = s_hi.min(top);
                if s_hi <= s_lo {
                    return 0.0;
                }
                let panels = (((s_hi - s_lo) / s_scale).ceil() as usize).clamp(1, 16);
                let edges = quad::linear_edges(s_lo, s_hi, panels);
                let val = quad::gl_panels(|s: f64| spline.eval(s.sqrt()).unwrap_or(0.0), &edges, 32);
                val / (4.0 * p * r)
            }
        }
    }
}

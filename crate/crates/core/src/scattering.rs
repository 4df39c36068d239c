//! The zero-energy two-body scattering problem -Δ(1-w) + ½V(1-w) = 0,
//! solved by two independent routes:
//!
//! * a radial integration of u'' = ½ V u with u = r(1-w), extracting the
//!   scattering length both from the linear asymptote u ≈ κ(r - a) and from
//!   the integral 8πa = ∫ V(1-w);
//! * the momentum-space Born series ŵ_p = (T₁ - T₂ + T₃ - …)(p) / 2p² with
//!   T₁ = V̂ and T_{n+1}(p) = ∫ d³r/(2π)³ V̂(|p-r|) T_n(r)/2r².
//!
//! Both produce tables of ŵ_p, f̂_p = (V̂∗ŵ)_p and ĝ_p = 2p²ŵ_p with the
//! identities f̂ + ĝ = V̂ and 8πa = ĝ₀, plus the softness ratio
//! h = V̂₀/8πa - 1 = f̂₀/ĝ₀.

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::lattice::LatticeSpec;
use crate::potential::{FourierKernel, Potential};
use crate::quad::{self, Spline};
use std::f64::consts::PI;

/// Which route produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ode,
    Born { order: u32 },
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Ode => write!(f, "ode"),
            Method::Born { order } => write!(f, "born({order})"),
        }
    }
}

/// Tolerances used by the radial solver.
#[derive(Debug, Clone, Copy)]
pub struct SolveTolerances {
    /// Allowed relative disagreement between the asymptote-fit and the
    /// integral extraction of the scattering length.
    pub route_agreement: f64,
    /// Allowed relative inconsistency between V̂₀/8πa - 1 and f̂₀/ĝ₀.
    pub h_consistency: f64,
}

impl Default for SolveTolerances {
    fn default() -> Self {
        SolveTolerances {
            route_agreement: 1e-8,
            h_consistency: 1e-8,
        }
    }
}

/// Complete solution of the zero-energy scattering problem.
#[derive(Debug, Clone)]
pub struct ScatteringSolution {
    pub method: Method,
    /// Scattering length (integral route ĝ₀/8π for the ODE method).
    pub a: f64,
    /// Independent asymptote-fit value (equals `a` for the Born route).
    pub a_asymptote: f64,
    /// Softness ratio h = V̂₀/(8πa) - 1; zero for the trivial λ = 0 case.
    pub h: f64,
    /// Small-momentum regime radius: V̂, f̂, ĝ all stay within [½, 1] of
    /// their p = 0 values on |p| ≤ δ.
    pub delta: f64,
    pub v_hat0: f64,
    pub f_hat0: f64,
    pub g_hat0: f64,
    /// w(r) on a log-spaced radial grid (ODE route only).
    pub w_radial: Vec<(f64, f64)>,
    pub kernel: FourierKernel,
    pub tol: SolveTolerances,
    p_max: f64,
    v_hat_tab: Spline,
    f_hat_tab: Spline,
    g_hat_tab: Spline,
    trivial: bool,
}

impl ScatteringSolution {
    pub fn p_max(&self) -> f64 {
        self.p_max
    }

    pub fn v_hat(&self, p: f64) -> Result<f64> {
        if self.trivial {
            return Ok(0.0);
        }
        self.v_hat_tab.eval_checked(p)
    }

    pub fn f_hat(&self, p: f64) -> Result<f64> {
        if self.trivial {
            return Ok(0.0);
        }
        self.f_hat_tab.eval_checked(p)
    }

    pub fn g_hat(&self, p: f64) -> Result<f64> {
        if self.trivial {
            return Ok(0.0);
        }
        self.g_hat_tab.eval_checked(p)
    }

    /// ŵ_p = ĝ_p / 2p², defined for p ≠ 0 only.
    pub fn w_hat(&self, p: f64) -> Result<f64> {
        if p <= 0.0 {
            return Err(Error::domain("w_hat has a 1/p² singularity at p = 0"));
        }
        Ok(self.g_hat(p)? / (2.0 * p * p))
    }

    /// Serialize as a columnar text table with a commented header.
    pub fn to_table(&self, rows: usize) -> String {
        let mut out = String::new();
        out.push_str(&format!("# method = {}\n", self.method));
        out.push_str(&format!("# a = {:.16e}\n", self.a));
        out.push_str(&format!("# a_asymptote = {:.16e}\n", self.a_asymptote));
        out.push_str(&format!("# h = {:.16e}\n", self.h));
        out.push_str(&format!("# delta = {:.16e}\n", self.delta));
        out.push_str(&format!("# v_hat0 = {:.16e}\n", self.v_hat0));
        out.push_str(&format!("# f_hat0 = {:.16e}\n", self.f_hat0));
        out.push_str(&format!("# g_hat0 = {:.16e}\n", self.g_hat0));
        out.push_str(&format!(
            "# route_agreement_tol = {:.3e}\n# h_consistency_tol = {:.3e}\n",
            self.tol.route_agreement, self.tol.h_consistency
        ));
        out.push_str("p,w_hat,f_hat,g_hat\n");
        let rows = rows.max(2);
        for i in 1..=rows {
            let p = self.p_max * i as f64 / rows as f64;
            let (w, f, g) = if self.trivial {
                (0.0, 0.0, 0.0)
            } else {
                (
                    self.w_hat(p).unwrap_or(0.0),
                    self.f_hat(p).unwrap_or(0.0),
                    self.g_hat(p).unwrap_or(0.0),
                )
            };
            out.push_str(&format!("{p:.10e},{w:.16e},{f:.16e},{g:.16e}\n"));
        }
        out
    }
}

/// h = V̂₀/(8πa) - 1 with a consistency assertion against f̂₀/ĝ₀.
pub fn compute_h(sol: &ScatteringSolution) -> Result<f64> {
    if sol.trivial {
        return Ok(0.0);
    }
    let h = sol.v_hat0 / (8.0 * PI * sol.a) - 1.0;
    if h <= 0.0 {
        return Err(Error::Verification(format!(
            "h = {h:e} must be positive: 8πa < V̂₀ is violated"
        )));
    }
    let h_ratio = sol.f_hat0 / sol.g_hat0;
    if (h - h_ratio).abs() > sol.tol.h_consistency * h {
        return Err(Error::numeric(
            "h = V̂₀/8πa - 1 disagrees with f̂₀/ĝ₀",
            (h - h_ratio).abs(),
            sol.tol.h_consistency * h,
        ));
    }
    Ok(h)
}

fn trivial_solution(pot: &Potential, method: Method, p_max: f64) -> Result<ScatteringSolution> {
    let grid: Vec<f64> = (0..=8).map(|i| p_max * i as f64 / 8.0).collect();
    let zeros = vec![0.0; grid.len()];
    Ok(ScatteringSolution {
        method,
        a: 0.0,
        a_asymptote: 0.0,
        h: 0.0,
        delta: 0.5 / pot.width(),
        v_hat0: 0.0,
        f_hat0: 0.0,
        g_hat0: 0.0,
        w_radial: Vec::new(),
        kernel: pot.kernel(p_max)?,
        tol: SolveTolerances::default(),
        p_max,
        v_hat_tab: Spline::natural(grid.clone(), zeros.clone())?,
        f_hat_tab: Spline::natural(grid.clone(), zeros.clone())?,
        g_hat_tab: Spline::natural(grid, zeros)?,
        trivial: true,
    })
}

/// Default table reach: everything the lattice sums ever request.
pub fn default_p_max(pot: &Potential) -> f64 {
    8.4 * (1.0 / pot.width()).max(1.0)
}

// ---------------------------------------------------------------------------
// Radial (ODE) route
// ---------------------------------------------------------------------------

/// Fourth-order cumulative integral of uniformly sampled values
/// (Adams–Moulton style local cubics; O(h⁴) globally, no recurrence
/// roundoff accumulation beyond plain summation).
fn cumulative_integral(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    assert!(n >= 4);
    let mut acc = vec![0.0; n];
    for i in 0..n - 1 {
        let inc = if i == 0 {
            h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i + 2 < n {
            h / 24.0 * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        } else {
            h / 24.0 * (f[i - 2] - 5.0 * f[i - 1] + 19.0 * f[i] + 9.0 * f[i + 1])
        };
        acc[i + 1] = acc[i] + inc;
    }
    acc
}

/// Solve the radial problem u'' = ½ V u with u(0) = 0, u'(0) = 1 two ways:
/// a Volterra fixed-point iteration u = r + ∫₀^r (r-r') · ½V · u dr'
/// (primary; the Neumann series of a Volterra kernel always converges) and
/// an independent Numerov march whose tail is fitted to κ(r - a). The
/// integral extraction a = (1/2κ)∫ r V u dr comes from the Volterra
/// solution and must agree with the Numerov asymptote within `tol`.
/// Momentum tables are built from ĝ_p = FT[V·(1-w)](p).
pub fn solve_radial(pot: &Potential, r_max: f64, tol: f64) -> Result<ScatteringSolution> {
    solve_radial_with(pot, r_max, tol, default_p_max(pot), 1800)
}

pub fn solve_radial_with(
    pot: &Potential,
    r_max: f64,
    tol: f64,
    p_max: f64,
    n_table: usize,
) -> Result<ScatteringSolution> {
    if tol <= 0.0 {
        return Err(Error::domain("tolerance must be positive"));
    }
    if r_max < 1.2 * pot.r_support() {
        return Err(Error::domain(format!(
            "r_max = {r_max} must comfortably exceed the support radius {}",
            pot.r_support()
        )));
    }
    if pot.lambda() == 0.0 {
        return trivial_solution(pot, Method::Ode, p_max);
    }

    // --- Volterra route on [0, r_int]; V is dead beyond 0.8·r_support.
    let r_int = 0.8 * pot.r_support();
    let n = {
        let n = ((r_int / 1e-3).ceil() as usize).clamp(8_000, 40_000);
        n + n % 2
    };
    let h = r_int / n as f64;
    let q: Vec<f64> = (0..=n)
        .map(|i| 0.5 * pot.evaluate_position(i as f64 * h).unwrap())
        .collect();
    let r_grid: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
    let mut u: Vec<f64> = r_grid.clone();
    let mut converged = false;
    for _ in 0..80 {
        let f1: Vec<f64> = (0..=n).map(|i| q[i] * u[i]).collect();
        let f2: Vec<f64> = (0..=n).map(|i| r_grid[i] * q[i] * u[i]).collect();
        let c1 = cumulative_integral(&f1, h);
        let c2 = cumulative_integral(&f2, h);
        let mut delta_max = 0.0f64;
        for i in 0..=n {
            let new = r_grid[i] * (1.0 + c1[i]) - c2[i];
            delta_max = delta_max.max((new - u[i]).abs());
            u[i] = new;
        }
        if delta_max <= 1e-16 * u[n].abs() {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::numeric(
            "Volterra iteration for the radial solution did not converge",
            f64::NAN,
            1e-16,
        ));
    }
    if u.iter().skip(1).any(|&v| v <= 0.0) {
        return Err(Error::domain(
            "radial solution vanishes at finite r: bound state present, reduce lambda",
        ));
    }
    let f1: Vec<f64> = (0..=n).map(|i| q[i] * u[i]).collect();
    let f2: Vec<f64> = (0..=n).map(|i| r_grid[i] * q[i] * u[i]).collect();
    let kappa = 1.0 + cumulative_integral(&f1, h)[n];
    if kappa <= 0.0 {
        return Err(Error::domain(
            "tail slope is not positive: no scattering asymptote (potential too strong?)",
        ));
    }
    let a_integral = cumulative_integral(&f2, h)[n] / kappa;

    // --- Independent Numerov march with a least-squares tail fit.
    let a_asymptote = {
        let nn = 24_000usize;
        let hh = r_max / nn as f64;
        let qq: Vec<f64> = (0..=nn)
            .map(|i| 0.5 * pot.evaluate_position(i as f64 * hh).unwrap())
            .collect();
        let mut uu = vec![0.0f64; nn + 1];
        uu[1] = hh + qq[0] * hh * hh * hh / 6.0;
        let h2 = hh * hh;
        for i in 1..nn {
            let c_prev = 1.0 - h2 * qq[i - 1] / 12.0;
            let c_here = 1.0 + 5.0 * h2 * qq[i] / 12.0;
            let c_next = 1.0 - h2 * qq[i + 1] / 12.0;
            uu[i + 1] = (2.0 * uu[i] * c_here - uu[i - 1] * c_prev) / c_next;
            if uu[i + 1] <= 0.0 {
                return Err(Error::domain(format!(
                    "radial solution vanishes at r = {:.3}: bound state present, reduce lambda",
                    (i + 1) as f64 * hh
                )));
            }
        }
        let i0 = (0.8 * nn as f64) as usize;
        let (mut sx, mut sy, mut sxx, mut sxy, mut cnt) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, &ui) in uu.iter().enumerate().take(nn + 1).skip(i0) {
            let x = i as f64 * hh;
            sx += x;
            sy += ui;
            sxx += x * x;
            sxy += x * ui;
            cnt += 1.0;
        }
        let slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
        if slope <= 0.0 {
            return Err(Error::domain(
                "tail slope is not positive: no scattering asymptote (potential too strong?)",
            ));
        }
        -((sy - slope * sx) / cnt) / slope
    };

    let scale = a_integral.abs().max(a_asymptote.abs()).max(1e-300);
    if (a_integral - a_asymptote).abs() > tol * scale {
        return Err(Error::numeric(
            "asymptote and integral extractions of the scattering length disagree",
            (a_integral - a_asymptote).abs() / scale,
            tol,
        ));
    }

    // w(r) = 1 - u/(κ r); validate 0 ≤ w < 1 and store a log-spaced table.
    let w_of = |i: usize| -> f64 { 1.0 - u[i] / (kappa * r_grid[i]) };
    let mut w_radial = Vec::with_capacity(200);
    let start = ((1e-3 * r_int / h).ceil() as usize).max(1);
    let mut i = start;
    while i <= n {
        let w = w_of(i);
        if !(-1e-10..1.0).contains(&w) {
            return Err(Error::domain(format!(
                "w(r) = {w:e} escapes [0, 1) at r = {:.4}",
                r_grid[i]
            )));
        }
        w_radial.push((r_grid[i], w.max(0.0)));
        i = (((i as f64) * 1.05).ceil() as usize).max(i + 1);
    }

    // ĝ(p) = (4π/p) ∫ r sin(pr) · V(r)(1-w(r)) dr on the Volterra grid,
    // with the p → 0 limit 4π ∫ r² V(1-w) = 8π a.
    let g_pos: Vec<f64> = (0..=n)
        .map(|i| if i == 0 { 0.0 } else { 2.0 * q[i] * u[i] / kappa })
        .collect();
    let g_hat_at = |p: f64| -> f64 {
        if p == 0.0 {
            let vals: Vec<f64> = (0..=n).map(|i| r_grid[i] * g_pos[i]).collect();
            4.0 * PI * quad::simpson_uniform(&vals, h)
        } else {
            let vals: Vec<f64> = (0..=n).map(|i| (p * r_grid[i]).sin() * g_pos[i]).collect();
            4.0 * PI / p * quad::simpson_uniform(&vals, h)
        }
    };

    let p_grid: Vec<f64> = (0..=n_table)
        .map(|i| p_max * i as f64 / n_table as f64)
        .collect();
    let g_vals = map_indexed(p_grid.len(), |i| g_hat_at(p_grid[i]));
    let kernel = pot.kernel(p_max)?;
    let v_vals: Vec<f64> = p_grid.iter().map(|&p| kernel.vhat(p)).collect();
    let f_vals: Vec<f64> = v_vals.iter().zip(&g_vals).map(|(v, g)| v - g).collect();

    finish_solution(
        pot,
        Method::Ode,
        a_integral,
        a_asymptote,
        w_radial,
        kernel,
        p_grid,
        v_vals,
        f_vals,
        g_vals,
        p_max,
        tol,
        true,
    )
}

// ---------------------------------------------------------------------------
// Born (momentum-space) route
// ---------------------------------------------------------------------------

/// Born iteration kernel:
/// T_{n+1}(p) = ∫ d³r/(2π)³ V̂(|p-r|) T_n(r)/2r² = (1/4π²) ∫ dr T_n(r) V̄(p, r)
/// with V̄ the angular average of V̂(|p - r|).
fn born_step(kernel: &FourierKernel, t_n: &dyn Fn(f64) -> f64, p: f64, r_top: f64) -> f64 {
    let edges = quad::linear_edges(0.0, r_top, 48);
    let val = quad::gl_panels(|r: f64| t_n(r) * kernel.angular_avg(p, r), &edges, 16);
    val / (4.0 * PI * PI)
}

/// Momentum-space Born series, truncated at `order` ∈ {1, 2, 3}. Continuum
/// momentum integrals by default; with `lattice` given, the p = 0 sums are
/// evaluated as literal lattice sums over shells (small-box cross-check).
pub fn born_series(
    pot: &Potential,
    lattice: Option<&LatticeSpec>,
    order: u32,
) -> Result<ScatteringSolution> {
    born_series_with(pot, lattice, order, default_p_max(pot), 1200)
}

pub fn born_series_with(
    pot: &Potential,
    lattice: Option<&LatticeSpec>,
    order: u32,
    p_max: f64,
    n_table: usize,
) -> Result<ScatteringSolution> {
    if !(1..=3).contains(&order) {
        return Err(Error::domain("born order must be 1, 2 or 3"));
    }
    if pot.lambda() == 0.0 {
        return trivial_solution(pot, Method::Born { order }, p_max);
    }
    let kernel = pot.kernel(p_max)?;
    let r_top = p_max + 6.0 / pot.width();
    let kernel_wide = pot.kernel(r_top * 1.05)?;

    let p_grid: Vec<f64> = (0..=n_table)
        .map(|i| p_max * i as f64 / n_table as f64)
        .collect();

    // T₂ on a wide grid (T₃ needs it under the convolution).
    let t2_spline = if order >= 2 {
        let n2 = 700;
        let grid: Vec<f64> = (0..=n2).map(|i| r_top * i as f64 / n2 as f64).collect();
        let vals = map_indexed(grid.len(), |i| {
            born_step(&kernel_wide, &|r| kernel_wide.vhat(r), grid[i], r_top)
        });
        Some(Spline::natural(grid, vals)?)
    } else {
        None
    };

    let t2_at = |p: f64| -> f64 {
        t2_spline
            .as_ref()
            .map(|s| s.eval(p).unwrap_or(0.0))
            .unwrap_or(0.0)
    };

    let g_vals = map_indexed(p_grid.len(), |i| {
        let p = p_grid[i];
        let mut g = kernel_wide.vhat(p);
        if order >= 2 {
            g -= t2_at(p);
        }
        if order >= 3 {
            g += born_step(&kernel_wide, &t2_at, p, r_top);
        }
        g
    });

    // Convergence monitor: successive Born terms must shrink.
    if order >= 2 {
        let t1_max = kernel_wide.vhat(0.0);
        let t2_max = t2_at(0.0);
        if t2_max >= t1_max {
            return Err(Error::numeric(
                "Born series diverges: second term does not decrease",
                t2_max,
                t1_max,
            ));
        }
        if order >= 3 {
            let t3_max = born_step(&kernel_wide, &t2_at, 0.0, r_top);
            if t3_max.abs() >= t2_max {
                return Err(Error::numeric(
                    "Born series diverges: third term does not decrease",
                    t3_max.abs(),
                    t2_max,
                ));
            }
        }
    }

    // Optional literal lattice sums at p = 0: the O(1/L) cross-check mode.
    let a = if let Some(lat) = lattice {
        let vol = lat.volume();
        let mut t2 = 0.0;
        for s in &lat.shells {
            t2 += s.mult as f64 * kernel_wide.vhat(s.p).powi(2) / (2.0 * s.p2);
        }
        t2 /= vol;
        let mut g0 = kernel_wide.vhat(0.0);
        if order >= 2 {
            g0 -= t2;
        }
        if order >= 3 {
            let mut t3 = 0.0;
            for si in &lat.shells {
                let mut inner = 0.0;
                for sj in &lat.shells {
                    inner += sj.mult as f64 * kernel_wide.angular_avg(si.p, sj.p)
                        * kernel_wide.vhat(sj.p)
                        / (2.0 * sj.p2);
                }
                t3 += si.mult as f64 * kernel_wide.vhat(si.p) / (2.0 * si.p2) * inner / vol;
            }
            t3 /= vol;
            g0 += t3;
        }
        g0 / (8.0 * PI)
    } else {
        g_vals[0] / (8.0 * PI)
    };

    let v_vals: Vec<f64> = p_grid.iter().map(|&p| kernel_wide.vhat(p)).collect();
    let f_vals: Vec<f64> = v_vals.iter().zip(&g_vals).map(|(v, g)| v - g).collect();

    finish_solution(
        pot,
        Method::Born { order },
        a,
        a,
        Vec::new(),
        kernel,
        p_grid,
        v_vals,
        f_vals,
        g_vals,
        p_max,
        1e-8,
        lattice.is_none(),
    )
}

#[allow(clippy::too_many_arguments)]
fn finish_solution(
    pot: &Potential,
    method: Method,
    a: f64,
    a_asymptote: f64,
    w_radial: Vec<(f64, f64)>,
    kernel: FourierKernel,
    p_grid: Vec<f64>,
    v_vals: Vec<f64>,
    f_vals: Vec<f64>,
    g_vals: Vec<f64>,
    p_max: f64,
    route_tol: f64,
    check_h: bool,
) -> Result<ScatteringSolution> {
    let v_hat0 = kernel.vhat(0.0);
    let g_hat0 = g_vals[0];
    let f_hat0 = f_vals[0];
    let first_born = matches!(method, Method::Born { order: 1 });

    if !first_born {
        // NaN-propagating comparison: anything but a strict inequality fails
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(8.0 * PI * a < v_hat0) {
            return Err(Error::Verification(format!(
                "8πa = {:e} must lie below V̂₀ = {v_hat0:e}",
                8.0 * PI * a
            )));
        }
        if g_hat0 <= 0.0 || g_hat0 >= v_hat0 || f_hat0 <= 0.0 {
            return Err(Error::Verification(format!(
                "expected 0 < f̂₀, ĝ₀ < V̂₀; got f̂₀ = {f_hat0:e}, ĝ₀ = {g_hat0:e}, V̂₀ = {v_hat0:e}"
            )));
        }
    }

    // Small-momentum regime radius δ: largest candidate on which V̂, f̂, ĝ
    // all stay within [½, 1]× their p = 0 values.
    let scale = 1.0 / pot.width();
    let mut delta = 0.0;
    'cand: for k in 0..8 {
        let d = scale / 2f64.powi(k);
        if d > p_max {
            continue;
        }
        for j in 0..=32 {
            let p = d * j as f64 / 32.0;
            let i = ((p / p_max) * (p_grid.len() - 1) as f64).round() as usize;
            let i = i.min(p_grid.len() - 1);
            let within = |x: f64, x0: f64| -> bool {
                if x0 == 0.0 {
                    x == 0.0
                } else {
                    let ratio = x / x0;
                    (0.5 - 1e-12..=1.0 + 1e-12).contains(&ratio)
                }
            };
            if !within(v_vals[i], v_hat0) || !within(f_vals[i], f_hat0) || !within(g_vals[i], g_hat0)
            {
                continue 'cand;
            }
        }
        delta = d;
        break;
    }
    if delta == 0.0 {
        delta = scale / 2f64.powi(8);
    }

    let h = if first_born {
        0.0
    } else {
        v_hat0 / (8.0 * PI * a) - 1.0
    };

    let sol = ScatteringSolution {
        method,
        a,
        a_asymptote,
        h,
        delta,
        v_hat0,
        f_hat0,
        g_hat0,
        w_radial,
        kernel,
        tol: SolveTolerances {
            route_agreement: route_tol,
            h_consistency: 1e-8,
        },
        p_max,
        v_hat_tab: Spline::natural(p_grid.clone(), v_vals)?,
        f_hat_tab: Spline::natural(p_grid.clone(), f_vals)?,
        g_hat_tab: Spline::natural(p_grid, g_vals)?,
        trivial: false,
    };
    if !first_born && check_h {
        compute_h(&sol)?;
    }
    Ok(sol)
}

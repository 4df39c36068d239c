//! Dual-lattice enumeration and deterministic summation utilities.
//!
//! Λ* = (2π/L ℤ)³ \ {0}. Every summand in this crate depends on |p| only,
//! so sums over lattice points collapse to sums over shells of equal |p|²,
//! i.e. integers m = n₁² + n₂² + n₃² with their representation counts.
//!
//! For boxes too large to enumerate up to the full momentum cutoff, a
//! hybrid scheme keeps exact shells in the infrared (where discreteness
//! matters) and switches to the continuum integral above a split momentum;
//! the split radius is volume-matched to the enumerated point count so the
//! scheme introduces no leading-order boundary bias.

use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum};
use crate::potential::FourierKernel;
use crate::quad;
use std::f64::consts::PI;

/// One shell of dual-lattice momenta: all points with |n|² = m.
#[derive(Debug, Clone, Copy)]
pub struct Shell {
    /// Integer square norm n₁² + n₂² + n₃².
    pub m: u64,
    /// Physical |p|² = (2π/L)²·m.
    pub p2: f64,
    /// Physical |p|.
    pub p: f64,
    /// Number of lattice points on the shell (always even, closed under
    /// p → -p).
    pub mult: u64,
}

/// The dual lattice of a cubic box, with shells enumerated up to a cutoff.
#[derive(Debug, Clone)]
pub struct LatticeSpec {
    /// Box side L.
    pub l: f64,
    /// Momentum cutoff used for the enumeration.
    pub p_cut: f64,
    /// Shells sorted by |p|², zero excluded.
    pub shells: Vec<Shell>,
}

impl LatticeSpec {
    /// Enumerate all shells with 0 < |p| ≤ p_cut.
    pub fn enumerate_shells(l: f64, p_cut: f64) -> Result<Self> {
        if l <= 0.0 || p_cut <= 0.0 {
            return Err(Error::domain("box side and cutoff must be positive"));
        }
        let spacing = 2.0 * PI / l;
        let m_max = (p_cut / spacing).powi(2).floor() as i64;
        if m_max < 1 {
            return Err(Error::domain(format!(
                "momentum cutoff {p_cut} lies below the first lattice shell {spacing}"
            )));
        }
        let n_max = (m_max as f64).sqrt().floor() as i64;
        if n_max > 700 {
            return Err(Error::Capacity(format!(
                "exact shell enumeration with n_max = {n_max} per axis is too large; use a hybrid scheme"
            )));
        }
        let mut counts = vec![0u64; (m_max + 1) as usize];
        for n1 in -n_max..=n_max {
            for n2 in -n_max..=n_max {
                let s12 = n1 * n1 + n2 * n2;
                if s12 > m_max {
                    continue;
                }
                for n3 in -n_max..=n_max {
                    let m = s12 + n3 * n3;
                    if m >= 1 && m <= m_max {
                        counts[m as usize] += 1;
                    }
                }
            }
        }
        let shells: Vec<Shell> = counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(m, &c)| {
                let p2 = spacing * spacing * m as f64;
                Shell {
                    m: m as u64,
                    p2,
                    p: p2.sqrt(),
                    mult: c,
                }
            })
            .collect();
        Ok(LatticeSpec {
            l,
            p_cut,
            shells,
        })
    }

    pub fn volume(&self) -> f64 {
        self.l * self.l * self.l
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.l
    }

    /// Total number of nonzero lattice points inside the cutoff ball.
    pub fn point_count(&self) -> u64 {
        self.shells.iter().map(|s| s.mult).sum()
    }

    /// Debug dump of the shell table.
    pub fn shells_csv(&self) -> String {
        let mut out = String::from("m,p2,p,mult\n");
        for s in &self.shells {
            out.push_str(&format!("{},{:.12e},{:.12e},{}\n", s.m, s.p2, s.p, s.mult));
        }
        out
    }
}

/// (1/|Λ|) Σ_{p ≠ 0} F(|p|) over the enumerated shells. The caller supplies
/// an estimate for the truncated tail beyond p_cut, which must be below
/// `tail_tol`.
pub fn riemann_limit<F>(lat: &LatticeSpec, f: F, tail_bound: f64, tail_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    if tail_bound.abs() > tail_tol {
        return Err(Error::numeric(
            "lattice-sum tail beyond the cutoff exceeds the tolerance",
            tail_bound.abs(),
            tail_tol,
        ));
    }
    let shells = &lat.shells;
    let terms = map_indexed(shells.len(), |i| shells[i].mult as f64 * f(shells[i].p));
    Ok(pairwise_sum(&terms) / lat.volume())
}

/// Result of a Richardson extrapolation over box sizes L₀, 2L₀, 4L₀.
#[derive(Debug, Clone)]
pub struct Extrapolated {
    pub ls: [f64; 3],
    pub values: [f64; 3],
    pub extrapolated: f64,
    pub err_est: f64,
}

/// Two-step Richardson extrapolation in 1/L of values at L₀, 2L₀, 4L₀,
/// eliminating the 1/L and 1/L² error terms.
pub fn richardson3(values: [f64; 3]) -> (f64, f64) {
    let a1 = 2.0 * values[1] - values[0];
    let a2 = 2.0 * values[2] - values[1];
    let b = (4.0 * a2 - a1) / 3.0;
    (b, (b - a2).abs())
}

/// Evaluate (1/|Λ|) Σ F over lattices at L₀, 2L₀, 4L₀ and extrapolate
/// toward the continuum integral. The leading error order in 1/L is not
/// assumed; it is measured from the two refinements (smooth summands decay
/// like 1/L³ from the excluded origin, singular ones like 1/L) and the
/// geometric limit is taken. Diverging sequences (non-summable infrared
/// tails) are flagged as numeric errors.
pub fn riemann_extrapolate<F>(
    l0: f64,
    p_cut: f64,
    f: F,
    tail_bound: f64,
    tail_tol: f64,
) -> Result<Extrapolated>
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let ls = [l0, 2.0 * l0, 4.0 * l0];
    let mut values = [0.0f64; 3];
    for (i, &l) in ls.iter().enumerate() {
        let lat = LatticeSpec::enumerate_shells(l, p_cut)?;
        values[i] = riemann_limit(&lat, &f, tail_bound, tail_tol)?;
    }
    let d1 = values[1] - values[0];
    let d2 = values[2] - values[1];
    let scale = values[2].abs().max(1e-300);
    if d2.abs() <= 1e-13 * scale {
        // Already converged to working precision.
        return Ok(Extrapolated {
            ls,
            values,
            extrapolated: values[2],
            err_est: d2.abs(),
        });
    }
    let ratio = d1 / d2;
    if ratio <= 1.2 {
        return Err(Error::numeric(
            "lattice sum does not converge with increasing L (non-summable infrared tail?)",
            d2.abs(),
            d1.abs(),
        ));
    }
    let step = d2 / (ratio - 1.0);
    let extrapolated = values[2] + step;
    Ok(Extrapolated {
        ls,
        values,
        extrapolated,
        err_est: (step / ratio).abs(),
    })
}

// ---------------------------------------------------------------------------
// Hybrid summation scheme
// ---------------------------------------------------------------------------

/// Values of a radial function evaluated on a scheme's infrared shells and
/// ultraviolet quadrature nodes.
#[derive(Debug, Clone)]
pub struct SchemeVals {
    pub ir: Vec<f64>,
    pub uv: Vec<f64>,
}

/// Summation scheme for Σ_{p∈Λ*, p≠0}: exact shells up to `p_split`, then a
/// continuum radial quadrature up to `p_cut` (empty in exact mode).
#[derive(Debug, Clone)]
pub struct SumScheme {
    pub lattice: LatticeSpec,
    /// Volume-matched boundary between the shell sum and the integral.
    pub p_split: f64,
    pub p_cut: f64,
    /// Ultraviolet nodes (p, w) with w the plain Gauss–Legendre weight in p.
    uv_nodes: Vec<(f64, f64)>,
}

impl SumScheme {
    /// Fully exact scheme: every shell up to p_cut.
    pub fn exact(l: f64, p_cut: f64) -> Result<Self> {
        let lattice = LatticeSpec::enumerate_shells(l, p_cut)?;
        Ok(SumScheme {
            lattice,
            p_split: p_cut,
            p_cut,
            uv_nodes: Vec::new(),
        })
    }

    /// Hybrid scheme: exact shells to ~p_exact, continuum integral beyond.
    /// The actual split radius is volume-matched to the enumerated point
    /// count; `uv_order` Gauss–Legendre points are used per geometric panel.
    pub fn hybrid(l: f64, p_cut: f64, p_exact: f64, uv_order: usize) -> Result<Self> {
        if p_exact >= p_cut {
            return Self::exact(l, p_cut);
        }
        let lattice = LatticeSpec::enumerate_shells(l, p_exact)?;
        // Match the continuum volume to the enumerated count:
        // (4π/3)(L p_split / 2π)³ = #points.
        let count = lattice.point_count() as f64;
        let p_split = (2.0 * PI / l) * (3.0 * count / (4.0 * PI)).cbrt();
        let panels = ((p_cut / p_split).ln() / 0.25).ceil().max(4.0) as usize;
        let edges = quad::log_edges(p_split, p_cut, panels);
        let rule = quad::gauss_legendre(uv_order);
        let mut uv_nodes = Vec::with_capacity(panels * uv_order);
        for w in edges.windows(2) {
            let c = 0.5 * (w[0] + w[1]);
            let h = 0.5 * (w[1] - w[0]);
            for &(x, wt) in rule.iter() {
                uv_nodes.push((c + h * x, h * wt));
            }
        }
        Ok(SumScheme {
            lattice,
            p_split,
            p_cut,
            uv_nodes,
        })
    }

    pub fn volume(&self) -> f64 {
        self.lattice.volume()
    }

    pub fn is_exact(&self) -> bool {
        self.uv_nodes.is_empty()
    }

    /// Evaluate a radial function on all scheme nodes.
    pub fn vals<F>(&self, f: F) -> SchemeVals
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let shells = &self.lattice.shells;
        let ir = map_indexed(shells.len(), |i| f(shells[i].p));
        let uv = map_indexed(self.uv_nodes.len(), |i| f(self.uv_nodes[i].0));
        SchemeVals { ir, uv }
    }

    /// Sequential twin of [`vals`] (identical output, benchmark baseline).
    pub fn vals_seq<F>(&self, f: F) -> SchemeVals
    where
        F: Fn(f64) -> f64,
    {
        let shells = &self.lattice.shells;
        let ir = crate::exec::map_indexed_seq(shells.len(), |i| f(shells[i].p));
        let uv = crate::exec::map_indexed_seq(self.uv_nodes.len(), |i| f(self.uv_nodes[i].0));
        SchemeVals { ir, uv }
    }

    /// Fallible variant of [`vals`]: any node failure aborts.
    pub fn try_vals<F>(&self, f: F) -> Result<SchemeVals>
    where
        F: Fn(f64) -> Result<f64> + Sync,
    {
        let shells = &self.lattice.shells;
        let mut ir = Vec::with_capacity(shells.len());
        for s in shells {
            ir.push(f(s.p)?);
        }
        let mut uv = Vec::with_capacity(self.uv_nodes.len());
        for &(p, _) in &self.uv_nodes {
            uv.push(f(p)?);
        }
        Ok(SchemeVals { ir, uv })
    }

    /// (1/|Λ|) Σ_{p≠0} of the tabulated values: shell part plus the
    /// continuum tail ∫ 4πp² v(p) dp / (2π)³.
    pub fn density_sum(&self, v: &SchemeVals) -> f64 {
        let shells = &self.lattice.shells;
        debug_assert_eq!(v.ir.len(), shells.len());
        debug_assert_eq!(v.uv.len(), self.uv_nodes.len());
        let ir_terms: Vec<f64> = shells
            .iter()
            .zip(&v.ir)
            .map(|(s, &x)| s.mult as f64 * x)
            .collect();
        let ir = pairwise_sum(&ir_terms) / self.volume();
        let uv_terms: Vec<f64> = self
            .uv_nodes
            .iter()
            .zip(&v.uv)
            .map(|(&(p, w), &x)| w * 4.0 * PI * p * p * x)
            .collect();
        let uv = pairwise_sum(&uv_terms) / (8.0 * PI * PI * PI);
        ir + uv
    }

    /// Σ_{p≠0} of the tabulated values (extensive form).
    pub fn extensive_sum(&self, v: &SchemeVals) -> f64 {
        self.volume() * self.density_sum(v)
    }

    /// Pointwise product of two value sets.
    pub fn product(a: &SchemeVals, b: &SchemeVals) -> SchemeVals {
        SchemeVals {
            ir: a.ir.iter().zip(&b.ir).map(|(x, y)| x * y).collect(),
            uv: a.uv.iter().zip(&b.uv).map(|(x, y)| x * y).collect(),
        }
    }

    /// Bilinear convolution form
    /// (x, V̂ * y) = (1/|Λ|²) Σ_{p,r≠0} V̂_{p-r} x_p y_r,
    /// with the angle between p and r integrated against the radial kernel.
    /// Evaluated block-wise: shell×shell, shell×tail (both orders) and
    /// tail×tail. Deterministic row-parallel reduction.
    pub fn bilinear_conv(&self, kernel: &FourierKernel, x: &SchemeVals, y: &SchemeVals) -> f64 {
        let shells = &self.lattice.shells;
        let vol = self.volume();
        let uv = &self.uv_nodes;

        // shell × shell
        let rows = map_indexed(shells.len(), |i| {
            let si = shells[i];
            let xi = x.ir[i];
            if xi == 0.0 {
                return 0.0;
            }
            let row: Vec<f64> = shells
                .iter()
                .zip(&y.ir)
                .map(|(sj, &yj)| sj.mult as f64 * yj * kernel.angular_avg(si.p, sj.p))
                .collect();
            si.mult as f64 * xi * pairwise_sum(&row)
        });
        let ss = pairwise_sum(&rows) / (vol * vol);

        if uv.is_empty() {
            return ss;
        }

        let uv_weight =
            |j: usize| uv[j].1 * 4.0 * PI * uv[j].0 * uv[j].0 / (8.0 * PI * PI * PI);

        // shell × tail and tail × shell
        let rows = map_indexed(shells.len(), |i| {
            let si = shells[i];
            let row: Vec<f64> = (0..uv.len())
                .map(|j| {
                    let k = kernel.angular_avg(si.p, uv[j].0);
                    uv_weight(j) * (x.ir[i] * y.uv[j] + x.uv[j] * y.ir[i]) * k
                })
                .collect();
            si.mult as f64 * pairwise_sum(&row)
        });
        let st = pairwise_sum(&rows) / vol;

        // tail × tail
        let rows = map_indexed(uv.len(), |i| {
            let row: Vec<f64> = (0..uv.len())
                .map(|j| uv_weight(j) * y.uv[j] * kernel.angular_avg(uv[i].0, uv[j].0))
                .collect();
            uv_weight(i) * x.uv[i] * pairwise_sum(&row)
        });
        let tt = pairwise_sum(&rows);

        ss + st + tt
    }

    /// Sequential reference implementation of [`bilinear_conv`] (used by the
    /// benchmark suite and the determinism tests).
    pub fn bilinear_conv_seq(&self, kernel: &FourierKernel, x: &SchemeVals, y: &SchemeVals) -> f64 {
        let shells = &self.lattice.shells;
        let vol = self.volume();
        let uv = &self.uv_nodes;
        let rows: Vec<f64> = (0..shells.len())
            .map(|i| {
                let si = shells[i];
                let xi = x.ir[i];
                if xi == 0.0 {
                    return 0.0;
                }
                let row: Vec<f64> = shells
                    .iter()
                    .zip(&y.ir)
                    .map(|(sj, &yj)| sj.mult as f64 * yj * kernel.angular_avg(si.p, sj.p))
                    .collect();
                si.mult as f64 * xi * pairwise_sum(&row)
            })
            .collect();
        let ss = pairwise_sum(&rows) / (vol * vol);
        if uv.is_empty() {
            return ss;
        }
        let uv_weight =
            |j: usize| uv[j].1 * 4.0 * PI * uv[j].0 * uv[j].0 / (8.0 * PI * PI * PI);
        let rows: Vec<f64> = (0..shells.len())
            .map(|i| {
                let si = shells[i];
                let row: Vec<f64> = (0..uv.len())
                    .map(|j| {
                        let k = kernel.angular_avg(si.p, uv[j].0);
                        uv_weight(j) * (x.ir[i] * y.uv[j] + x.uv[j] * y.ir[i]) * k
                    })
                    .collect();
                si.mult as f64 * pairwise_sum(&row)
            })
            .collect();
        let st = pairwise_sum(&rows) / vol;
        let rows: Vec<f64> = (0..uv.len())
            .map(|i| {
                let row: Vec<f64> = (0..uv.len())
                    .map(|j| uv_weight(j) * y.uv[j] * kernel.angular_avg(uv[i].0, uv[j].0))
                    .collect();
                uv_weight(i) * x.uv[i] * pairwise_sum(&row)
            })
            .collect();
        ss + st + pairwise_sum(&rows)
    }
}

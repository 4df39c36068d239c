//! Brute-force truncated Fock-space oracle.
//!
//! Builds the squeezed-coherent trial state
//! Ψ = exp(½ Σ c_k a⁺_k a⁺_{-k} + √N₀ a⁺₀)|0⟩ as a dense occupation
//! tensor truncated at n_max quanta per mode, applies ladder-operator
//! strings literally, and checks every closed-form expectation value and
//! the full ⟨H⟩ channel decomposition against the analytic formulas.
//! Deliberately dense and simple: this module is the trusted oracle.

use crate::error::{Error, Result};
use crate::potential::FourierKernel;
use crate::variational::{energy_restricted, ModeSet};

const TENSOR_CAP: usize = 1 << 23;

/// A single creation or annihilation operator on a listed mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub mode: usize,
    pub create: bool,
}

/// Dense truncated realization of the trial state.
#[derive(Debug, Clone)]
pub struct TruncatedFockState {
    pub modes: ModeSet,
    pub n_max: usize,
    dims: Vec<usize>,
    strides: Vec<usize>,
    amp: Vec<f64>,
    /// ⟨Ψ, Ψ⟩ of the truncated state.
    pub norm_sq: f64,
    /// First-order bound on the relative norm² lost to truncation:
    /// Σ_pairs c^{2(n_max+1)}/(1-c²) plus the coherent Poisson tail.
    pub tail_bound: f64,
}

/// Build the truncated state. Amplitudes factorize over ± pairs
/// (c^n on equal pair occupations) and the condensate mode
/// (N₀^{n/2}/√(n!)).
pub fn build_state(modes: &ModeSet, n_max: usize) -> Result<TruncatedFockState> {
    let nm = modes.modes.len();
    if n_max < 1 {
        return Err(Error::domain("n_max must be at least 1"));
    }
    let dim = n_max + 1;
    let total = dim.checked_pow(nm as u32).filter(|&t| t <= TENSOR_CAP);
    let total = total.ok_or_else(|| {
        Error::Capacity(format!(
            "occupation tensor (n_max+1)^modes = {dim}^{nm} exceeds the cap {TENSOR_CAP}"
        ))
    })?;

    let dims = vec![dim; nm];
    let mut strides = vec![0usize; nm];
    let mut s = 1;
    for k in (0..nm).rev() {
        strides[k] = s;
        s *= dims[k];
    }

    let pairs = modes.pairs();
    let n0 = modes.sqrt_n0 * modes.sqrt_n0;

    // coherent amplitudes N₀^{n/2}/√(n!)
    let mut coh = vec![0.0f64; dim];
    coh[0] = 1.0;
    for n in 1..dim {
        coh[n] = coh[n - 1] * modes.sqrt_n0 / (n as f64).sqrt();
    }

    let mut amp = vec![0.0f64; total];
    // enumerate (n₀, n_pair₁, …) occupation patterns
    let np = pairs.len();
    let mut occ = vec![0usize; np];
    loop {
        let mut weight = 1.0;
        for (pi, &(i, _)) in pairs.iter().enumerate() {
            weight *= modes.c[i].powi(occ[pi] as i32);
        }
        for (n0_occ, &coh_amp) in coh.iter().enumerate() {
            let w = weight * coh_amp;
            if w != 0.0 {
                let mut flat = n0_occ * strides[0];
                for (pi, &(i, j)) in pairs.iter().enumerate() {
                    flat += occ[pi] * strides[i];
                    if j != i {
                        flat += occ[pi] * strides[j];
                    }
                }
                amp[flat] = w;
            }
        }
        // odometer over pair occupations
        let mut k = 0;
        loop {
            if k == np {
                break;
            }
            occ[k] += 1;
            if occ[k] < dim {
                break;
            }
            occ[k] = 0;
            k += 1;
        }
        if np == 0 || (k == np && occ.iter().all(|&x| x == 0)) {
            break;
        }
        if k == np {
            break;
        }
    }

    let norm_sq: f64 = amp.iter().map(|a| a * a).sum();

    // truncation tail: geometric tails per pair + Poisson tail for mode 0
    let mut tail = 0.0;
    for &(i, _) in &pairs {
        let c2 = modes.c[i] * modes.c[i];
        if c2 > 0.0 {
            tail += c2.powi(n_max as i32 + 1) / (1.0 - c2);
        }
    }
    let mut pois_term = n0.powi(n_max as i32 + 1);
    for k in 1..=(n_max + 1) {
        pois_term /= k as f64;
    }
    let mut pois_tail = 0.0;
    let mut t = pois_term;
    for k in (n_max + 1)..(n_max + 60) {
        pois_tail += t;
        t *= n0 / (k + 1) as f64;
    }
    tail += pois_tail * (-n0).exp();

    Ok(TruncatedFockState {
        modes: modes.clone(),
        n_max,
        dims,
        strides,
        amp,
        norm_sq,
        tail_bound: tail,
    })
}

impl TruncatedFockState {
    fn apply(&self, ops: &[Ladder], out: &mut Vec<f64>, scratch: &mut Vec<f64>) -> Result<()> {
        out.clone_from(&self.amp);
        for op in ops.iter().rev() {
            if op.mode >= self.modes.modes.len() {
                return Err(Error::domain(format!(
                    "operator acts on unlisted mode {}",
                    op.mode
                )));
            }
            scratch.clear();
            scratch.resize(out.len(), 0.0);
            let stride = self.strides[op.mode];
            let dim = self.dims[op.mode];
            for (flat, &v) in out.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let n = (flat / stride) % dim;
                if op.create {
                    // (a⁺ψ)(n) = √n ψ(n-1): occupation n-1 feeds n
                    if n + 1 < dim {
                        scratch[flat + stride] += ((n + 1) as f64).sqrt() * v;
                    }
                } else {
                    // (aψ)(n) = √(n+1) ψ(n+1): occupation n+1 feeds n
                    if n > 0 {
                        scratch[flat - stride] += (n as f64).sqrt() * v;
                    }
                }
            }
            std::mem::swap(out, scratch);
        }
        Ok(())
    }

    /// ⟨Ψ, O Ψ⟩/⟨Ψ, Ψ⟩ for a product of ladder operators (leftmost acts
    /// last).
    pub fn expect_ops(&self, ops: &[Ladder]) -> Result<f64> {
        let mut out = Vec::new();
        let mut scratch = Vec::new();
        self.apply(ops, &mut out, &mut scratch)?;
        let dot: f64 = self.amp.iter().zip(&out).map(|(a, b)| a * b).sum();
        Ok(dot / self.norm_sq)
    }

    /// Parse an operator string like `"a+_1 a_1"` (tokens `a+_<k>` and
    /// `a_<k>`, k an index into the mode list) and evaluate it.
    pub fn expect_moment(&self, s: &str) -> Result<f64> {
        let mut ops = Vec::new();
        for tok in s.split_whitespace() {
            let (create, rest) = if let Some(r) = tok.strip_prefix("a+_") {
                (true, r)
            } else if let Some(r) = tok.strip_prefix("a_") {
                (false, r)
            } else {
                return Err(Error::domain(format!("cannot parse operator token '{tok}'")));
            };
            let mode: usize = rest
                .parse()
                .map_err(|_| Error::domain(format!("bad mode index in '{tok}'")))?;
            ops.push(Ladder { mode, create });
        }
        self.expect_ops(&ops)
    }

    /// ⟨Σ_m a⁺_m a_m⟩.
    pub fn number_expectation(&self) -> Result<f64> {
        let mut total = 0.0;
        for k in 0..self.modes.modes.len() {
            total += self.expect_ops(&[
                Ladder { mode: k, create: true },
                Ladder { mode: k, create: false },
            ])?;
        }
        Ok(total)
    }

    /// Var(N̂) = ⟨N̂²⟩ - ⟨N̂⟩².
    pub fn number_variance(&self) -> Result<f64> {
        let nm = self.modes.modes.len();
        let mean = self.number_expectation()?;
        let mut second = 0.0;
        for k in 0..nm {
            for j in 0..nm {
                second += self.expect_ops(&[
                    Ladder { mode: k, create: true },
                    Ladder { mode: k, create: false },
                    Ladder { mode: j, create: true },
                    Ladder { mode: j, create: false },
                ])?;
            }
        }
        Ok(second - mean * mean)
    }
}

/// ⟨H⟩ of the truncated state together with its channel decomposition by
/// the number of zero-momentum operators in each interaction term.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianExpectation {
    pub total: f64,
    pub kinetic: f64,
    pub e0: f64,
    pub e2: f64,
    pub e4: f64,
    /// Channels with an odd number of condensate operators (must vanish).
    pub e_odd: f64,
}

/// Brute-force ⟨H⟩ with the interaction restricted to momentum-conserving
/// quadruples inside the mode set.
pub fn hamiltonian_expectation(
    state: &TruncatedFockState,
    kernel: &FourierKernel,
) -> Result<HamiltonianExpectation> {
    let ms = &state.modes;
    let nm = ms.modes.len();
    let vol = ms.volume();
    let spacing = 2.0 * std::f64::consts::PI / ms.l;

    let mut kinetic = 0.0;
    for k in 1..nm {
        let occ = state.expect_ops(&[
            Ladder { mode: k, create: true },
            Ladder { mode: k, create: false },
        ])?;
        kinetic += ms.momentum_norm(k).powi(2) * occ;
    }

    let mut e0 = 0.0;
    let mut e2 = 0.0;
    let mut e4 = 0.0;
    let mut e_odd = 0.0;
    for p in 0..nm {
        for q in 0..nm {
            for r in 0..nm {
                // u = p - r fixes the annihilator pair (r, s = q + u)
                let u = [
                    ms.modes[p][0] - ms.modes[r][0],
                    ms.modes[p][1] - ms.modes[r][1],
                    ms.modes[p][2] - ms.modes[r][2],
                ];
                let s_mom = [
                    ms.modes[q][0] + u[0],
                    ms.modes[q][1] + u[1],
                    ms.modes[q][2] + u[2],
                ];
                let Some(s_idx) = ms.index_of(&s_mom) else {
                    continue;
                };
                let u_norm =
                    spacing * ((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) as f64).sqrt();
                let vu = kernel.vhat(u_norm);
                let val = state.expect_ops(&[
                    Ladder { mode: p, create: true },
                    Ladder { mode: q, create: true },
                    Ladder { mode: r, create: false },
                    Ladder { mode: s_idx, create: false },
                ])?;
                let term = vu * val / (2.0 * vol);
                let zeros = [p, q, r, s_idx]
                    .iter()
                    .filter(|&&k| ms.modes[k] == [0, 0, 0])
                    .count();
                match zeros {
                    0 => e4 += term,
                    2 => e2 += term,
                    4 => e0 += term,
                    _ => e_odd += term,
                }
            }
        }
    }
    Ok(HamiltonianExpectation {
        total: kinetic + e0 + e2 + e4 + e_odd,
        kinetic,
        e0,
        e2,
        e4,
        e_odd,
    })
}

// ---------------------------------------------------------------------------
// Oracle suite
// ---------------------------------------------------------------------------

/// One verified formula: brute-force value vs the closed form.
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub name: String,
    pub brute: f64,
    pub analytic: f64,
    pub tail_bound: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleCheck {
    fn new(name: impl Into<String>, brute: f64, analytic: f64, tail: f64, rel_tol: f64) -> Self {
        let scale = analytic.abs().max(1.0);
        let tolerance = (rel_tol * scale).max(10.0 * tail * scale);
        OracleCheck {
            name: name.into(),
            brute,
            analytic,
            tail_bound: tail,
            tolerance,
            pass: (brute - analytic).abs() <= tolerance,
        }
    }
}

/// Full oracle report.
#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failed(&self) -> Vec<&OracleCheck> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }
}

/// Closed-form moments of the untruncated state for a single ± pair with
/// amplitude c and condensate number N₀.
pub mod formulas {
    /// ⟨a⁺_m a_m⟩
    pub fn occupation(c: f64) -> f64 {
        c * c / (1.0 - c * c)
    }
    /// ⟨a_m a_{-m}⟩ = ⟨a⁺_m a⁺_{-m}⟩ (real c)
    pub fn pairing(c: f64) -> f64 {
        c / (1.0 - c * c)
    }
    /// ⟨a⁺_m a⁺_{-m} a_m a_{-m}⟩
    pub fn quartic_pair(c: f64) -> f64 {
        c * c * (1.0 + c * c) / ((1.0 - c * c) * (1.0 - c * c))
    }
    /// ⟨a⁺_m a⁺_m a_m a_m⟩
    pub fn quartic_same(c: f64) -> f64 {
        2.0 * c.powi(4) / ((1.0 - c * c) * (1.0 - c * c))
    }
}

/// Run the standard brute-force-vs-closed-form suite with `draws` random
/// parameter draws. `fault` optionally names a formula whose analytic side
/// is deliberately corrupted (sign flip), for verifying detection.
#[allow(clippy::too_many_arguments)]
pub fn run_oracle_suite(
    kernel: &FourierKernel,
    l: f64,
    draws: usize,
    seed: u64,
    c_max: f64,
    sqrt_n0_max: f64,
    n_max_pairs: usize,
    n_max_hamiltonian: usize,
    fault: Option<&str>,
) -> Result<OracleReport> {
    // deterministic LCG so the core crate needs no RNG dependency
    let mut lcg_state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    let mut uniform = move || {
        lcg_state = lcg_state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((lcg_state >> 11) as f64) / ((1u64 << 53) as f64)
    };
    let mut report = OracleReport::default();
    let corrupt = |name: &str, analytic: f64| -> f64 {
        if fault == Some(name) {
            -analytic
        } else {
            analytic
        }
    };

    for draw in 0..draws {
        let c = (2.0 * uniform() - 1.0) * c_max;
        let sqrt_n0 = uniform() * sqrt_n0_max;
        let n0 = sqrt_n0 * sqrt_n0;

        // single ± pair, generous cutoff
        let pair_modes = ModeSet::new(
            l,
            vec![[0, 0, 0], [1, 0, 0], [-1, 0, 0]],
            vec![0.0, c, c],
            sqrt_n0,
        )?;
        let st = build_state(&pair_modes, n_max_pairs)?;
        let tail = st.tail_bound;

        let mut push = |name: String, brute: f64, analytic: f64| {
            report
                .checks
                .push(OracleCheck::new(name, brute, analytic, tail, 1e-8));
        };

        // norm: ⟨Ψ,Ψ⟩ = e^{N₀} / (1-c²) for one pair (per unordered pair a
        // factor 1/(1-c²), i.e. (1-c²)^{-1/2} per mode)
        let norm_exact = n0.exp() / (1.0 - c * c);
        push(
            format!("norm[{draw}]"),
            st.norm_sq,
            corrupt("norm", norm_exact),
        );
        push(
            format!("condensate_number[{draw}]"),
            st.expect_moment("a+_0 a_0")?,
            corrupt("condensate_number", n0),
        );
        push(
            format!("condensate_quartic[{draw}]"),
            st.expect_moment("a+_0 a+_0 a_0 a_0")?,
            corrupt("condensate_quartic", n0 * n0),
        );
        push(
            format!("occupation[{draw}]"),
            st.expect_moment("a+_1 a_1")?,
            corrupt("occupation", formulas::occupation(c)),
        );
        push(
            format!("pair_annihilation[{draw}]"),
            st.expect_moment("a_1 a_2")?,
            corrupt("pair_annihilation", formulas::pairing(c)),
        );
        push(
            format!("pair_creation[{draw}]"),
            st.expect_moment("a+_1 a+_2")?,
            corrupt("pair_creation", formulas::pairing(c)),
        );
        push(
            format!("unbalanced_quartic[{draw}]"),
            st.expect_moment("a+_1 a+_1 a_2 a_2")?,
            corrupt("unbalanced_quartic", 0.0),
        );
        push(
            format!("quartic_pair[{draw}]"),
            st.expect_moment("a+_1 a+_2 a_1 a_2")?,
            corrupt("quartic_pair", formulas::quartic_pair(c)),
        );
        push(
            format!("quartic_same[{draw}]"),
            st.expect_moment("a+_1 a+_1 a_1 a_1")?,
            corrupt("quartic_same", formulas::quartic_same(c)),
        );
        // vanishing rule: a lone a_m with no a⁺_m / a_{-m} partners
        push(
            format!("lone_annihilator[{draw}]"),
            st.expect_moment("a_1")?,
            corrupt("lone_annihilator", 0.0),
        );
        push(
            format!("lone_dressed[{draw}]"),
            st.expect_moment("a+_0 a_0 a_1")?,
            corrupt("lone_dressed", 0.0),
        );
        // particle-number constraint and grand-canonical variance
        push(
            format!("total_number[{draw}]"),
            st.number_expectation()?,
            corrupt("total_number", n0 + 2.0 * formulas::occupation(c)),
        );
        if c != 0.0 || n0 > 0.0 {
            let var = st.number_variance()?;
            report.checks.push(OracleCheck {
                name: format!("number_variance_positive[{draw}]"),
                brute: var,
                analytic: f64::NAN,
                tail_bound: tail,
                tolerance: 0.0,
                pass: var > 0.0,
            });
        }
    }

    // two-pair cross factorization ⟨a⁺_p a⁺_{-p} a_r a_{-r}⟩ = B_p B_r
    {
        let c1 = 0.3 * c_max.max(0.1);
        let c2 = -0.5 * c_max.max(0.1);
        let ms = ModeSet::new(
            l,
            vec![[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]],
            vec![0.0, c1, c1, c2, c2],
            0.0,
        )?;
        let st = build_state(&ms, n_max_pairs.min(14))?;
        let brute = st.expect_moment("a+_1 a+_2 a_3 a_4")?;
        let analytic = formulas::pairing(c1) * formulas::pairing(c2);
        report.checks.push(OracleCheck::new(
            "pair_cross_factorization",
            brute,
            corrupt("pair_cross_factorization", analytic),
            st.tail_bound,
            1e-8,
        ));
    }

    // full ⟨H⟩ vs the analytic E_M + Ω₂ + Ω₄ on {0, ±k₁, ±k₂}
    for draw in 0..3 {
        let c1 = (2.0 * uniform() - 1.0) * 0.3;
        let c2 = (2.0 * uniform() - 1.0) * 0.3;
        let sqrt_n0 = 0.4 + 0.6 * uniform();
        let ms = ModeSet::new(
            l,
            vec![[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]],
            vec![0.0, c1, c1, c2, c2],
            sqrt_n0,
        )?;
        let st = build_state(&ms, n_max_hamiltonian)?;
        let brute = hamiltonian_expectation(&st, kernel)?;
        let analytic = energy_restricted(&ms, kernel)?;
        let scale = analytic.total.abs();
        let tol = (1e-6 * scale).max(20.0 * st.tail_bound * scale);
        report.checks.push(OracleCheck {
            name: format!("hamiltonian_total[{draw}]"),
            brute: brute.total,
            analytic: corrupt("hamiltonian_total", analytic.total),
            tail_bound: st.tail_bound,
            tolerance: tol,
            pass: (brute.total - corrupt("hamiltonian_total", analytic.total)).abs() <= tol,
        });
        for (name, b, a) in [
            ("channel_e0", brute.e0, analytic.e0),
            ("channel_e2", brute.e2, analytic.e2),
            ("channel_e4", brute.e4, analytic.e4),
            ("channel_kinetic", brute.kinetic, analytic.kinetic),
        ] {
            let a = corrupt(name, a);
            let tol = (1e-6 * scale).max(20.0 * st.tail_bound * scale);
            report.checks.push(OracleCheck {
                name: format!("{name}[{draw}]"),
                brute: b,
                analytic: a,
                tail_bound: st.tail_bound,
                tolerance: tol,
                pass: (b - a).abs() <= tol,
            });
        }
        report.checks.push(OracleCheck {
            name: format!("channel_odd_vanishes[{draw}]"),
            brute: brute.e_odd,
            analytic: 0.0,
            tail_bound: st.tail_bound,
            tolerance: (1e-10 * scale).max(20.0 * st.tail_bound * scale),
            pass: brute.e_odd.abs() <= (1e-10 * scale).max(20.0 * st.tail_bound * scale),
        });
    }

    Ok(report)
}

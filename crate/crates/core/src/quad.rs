//! Quadrature and interpolation: Gauss–Legendre rules, an adaptive
//! Gauss–Kronrod integrator, composite panel helpers and natural cubic
//! splines.

use crate::error::{Error, Result};
use crate::exec::pairwise_sum;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

// ---------------------------------------------------------------------------
// Gauss–Legendre rules
// ---------------------------------------------------------------------------

type GlRule = Arc<Vec<(f64, f64)>>;

static GL_CACHE: Lazy<Mutex<HashMap<usize, GlRule>>> = Lazy::new(|| Mutex::new(HashMap::new()));

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre recurrence and cached.
pub fn gauss_legendre(n: usize) -> GlRule {
    assert!(n >= 1);
    let mut cache = GL_CACHE.lock().unwrap();
    if let Some(rule) = cache.get(&n) {
        return rule.clone();
    }
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_n(x) and derivative via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 1..n {
                let kf = k as f64;
                let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let rule = Arc::new(rule);
    cache.insert(n, rule.clone());
    rule
}

/// n-point Gauss–Legendre integral of `f` over [a, b].
pub fn gl_integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let terms: Vec<f64> = rule.iter().map(|&(x, w)| w * f(c + h * x)).collect();
    h * pairwise_sum(&terms)
}

/// Composite Gauss–Legendre over consecutive panels given by `edges`.
pub fn gl_panels<F: Fn(f64) -> f64>(f: F, edges: &[f64], n: usize) -> f64 {
    let terms: Vec<f64> = edges
        .windows(2)
        .map(|w| gl_integrate(&f, w[0], w[1], n))
        .collect();
    pairwise_sum(&terms)
}

/// Geometrically spaced panel edges from a to b (a > 0).
pub fn log_edges(a: f64, b: f64, panels: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && panels >= 1);
    let ratio = (b / a).powf(1.0 / panels as f64);
    let mut edges = Vec::with_capacity(panels + 1);
    let mut x = a;
    for _ in 0..panels {
        edges.push(x);
        x *= ratio;
    }
    edges.push(b);
    edges
}

/// Uniformly spaced panel edges.
pub fn linear_edges(a: f64, b: f64, panels: usize) -> Vec<f64> {
    assert!(panels >= 1);
    (0..=panels)
        .map(|i| a + (b - a) * i as f64 / panels as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Adaptive Gauss–Kronrod (15-point rule)
// ---------------------------------------------------------------------------

// Standard 15-point Kronrod abscissae/weights with the embedded 7-point
// Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resg = fc * WG[3];
    let mut resk = fc * WGK[7];
    for j in 0..3 {
        let x = h * XGK[2 * j + 1];
        let f1 = f(c - x);
        let f2 = f(c + x);
        resg += WG[j] * (f1 + f2);
        resk += WGK[2 * j + 1] * (f1 + f2);
    }
    for j in 0..4 {
        let x = h * XGK[2 * j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        resk += WGK[2 * j] * (f1 + f2);
    }
    ((resk * h), ((resk - resg) * h).abs())
}

/// Estimate of an integral together with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct QuadEstimate {
    pub value: f64,
    pub abs_err: f64,
}

/// Adaptive Gauss–Kronrod integration of `f` over [a, b] to the requested
/// absolute/relative tolerance. Subdivision order is deterministic.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    atol: f64,
    rtol: f64,
) -> Result<QuadEstimate> {
    let (rough, _) = qk15(f, a, b);
    let tol = atol.max(rtol * rough.abs());
    let mut value_terms = Vec::new();
    let mut err_sum = 0.0;
    bisect(f, a, b, tol, 0, &mut value_terms, &mut err_sum)?;
    Ok(QuadEstimate {
        value: pairwise_sum(&value_terms),
        abs_err: err_sum,
    })
}

fn bisect<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    out: &mut Vec<f64>,
    err: &mut f64,
) -> Result<()> {
    let (v, e) = qk15(f, a, b);
    if e <= tol || e <= 1e-16 * v.abs() {
        out.push(v);
        *err += e;
        return Ok(());
    }
    if depth >= 48 {
        return Err(Error::numeric(
            format!("adaptive quadrature stalled on [{a:e}, {b:e}]"),
            e,
            tol,
        ));
    }
    let mid = 0.5 * (a + b);
    bisect(f, a, mid, 0.5 * tol, depth + 1, out, err)?;
    bisect(f, mid, b, 0.5 * tol, depth + 1, out, err)
}

// ---------------------------------------------------------------------------
// Natural cubic spline
// ---------------------------------------------------------------------------

/// Natural cubic spline through strictly increasing abscissae. Evaluation
/// outside the tabulated range is refused (never extrapolated).
#[derive(Debug, Clone)]
pub struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>, // second derivatives at the nodes
}

impl Spline {
    pub fn natural(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 3 || y.len() != n {
            return Err(Error::domain("spline needs at least 3 matching nodes"));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("spline abscissae must strictly increase"));
        }
        // Thomas algorithm for the natural-spline tridiagonal system.
        let mut sub = vec![0.0; n];
        let mut diag = vec![1.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            sub[i] = h0 / 6.0;
            diag[i] = (h0 + h1) / 3.0;
            sup[i] = h1 / 6.0;
            rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
        }
        for i in 1..n {
            let w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        let mut m = vec![0.0; n];
        m[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            m[i] = (rhs[i] - sup[i] * m[i + 1]) / diag[i];
        }
        Ok(Spline { x, y, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Spline value, or None outside the tabulated range.
    pub fn eval(&self, xq: f64) -> Option<f64> {
        if !(xq >= self.x_min() && xq <= self.x_max()) {
            return None;
        }
        let i = match self.x.partition_point(|&v| v <= xq) {
            0 => 0,
            k if k >= self.x.len() => self.x.len() - 2,
            k => k - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - xq) / h;
        let b = (xq - self.x[i]) / h;
        Some(
            a * self.y[i]
                + b * self.y[i + 1]
                + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0,
        )
    }

    /// Spline value, erroring outside the range.
    pub fn eval_checked(&self, xq: f64) -> Result<f64> {
        self.eval(xq).ok_or_else(|| {
            Error::domain(format!(
                "table lookup at {xq:e} outside [{:e}, {:e}]; extrapolation is not permitted",
                self.x_min(),
                self.x_max()
            ))
        })
    }
}

/// Composite Simpson rule over a uniform grid of values with spacing h.
/// The number of intervals must be even.
pub fn simpson_uniform(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    assert!(n >= 2 && n.is_multiple_of(2), "simpson needs an even interval count");
    let mut odd = Vec::with_capacity(n / 2);
    let mut even = Vec::with_capacity(n / 2);
    for (i, &v) in values.iter().enumerate().skip(1).take(n - 1) {
        if i % 2 == 1 {
            odd.push(v);
        } else {
            even.push(v);
        }
    }
    h / 3.0 * (values[0] + values[n] + 4.0 * pairwise_sum(&odd) + 2.0 * pairwise_sum(&even))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gl_rule_is_exact_on_polynomials() {
        // 16-point rule integrates degree-31 polynomials exactly.
        let v = gl_integrate(|x| x.powi(10), -1.0, 1.0, 16);
        assert!((v - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn gl_weights_sum_to_two() {
        for &n in &[8usize, 16, 32, 64] {
            let s: f64 = gauss_legendre(n).iter().map(|&(_, w)| w).sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
        }
    }

    #[test]
    fn adaptive_gk_known_integrals() {
        let q = adaptive_gk(&|x: f64| x.sin(), 0.0, PI, 1e-14, 1e-14).unwrap();
        assert!((q.value - 2.0).abs() < 1e-12);
        let q = adaptive_gk(&|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-14, 1e-14).unwrap();
        assert!((q.value - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn adaptive_gk_sharp_peak() {
        // (2/sqrt(c)) atan(1/sqrt(c)) with c = 1e-3
        let c: f64 = 1e-3;
        let q = adaptive_gk(&|x: f64| 1.0 / (c + x * x), -1.0, 1.0, 1e-10, 1e-12).unwrap();
        let exact = 2.0 / c.sqrt() * (1.0 / c.sqrt()).atan();
        assert!((q.value - exact).abs() < 1e-8, "{} vs {}", q.value, exact);
    }

    #[test]
    fn spline_reproduces_cubics_and_refuses_extrapolation() {
        let x: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|&v| 1.0 + v + 0.5 * v * v).collect();
        let s = Spline::natural(x, y).unwrap();
        // quadratics are reproduced well away from the free ends
        let v = s.eval(2.987).unwrap();
        assert!((v - (1.0 + 2.987 + 0.5 * 2.987 * 2.987)).abs() < 1e-6);
        assert!(s.eval(-0.1).is_none());
        assert!(s.eval(6.1).is_none());
        assert!(s.eval_checked(7.0).is_err());
    }

    #[test]
    fn simpson_on_smooth_integrand() {
        let n = 2000;
        let h = PI / n as f64;
        let vals: Vec<f64> = (0..=n).map(|i| (i as f64 * h).sin()).collect();
        assert!((simpson_uniform(&vals, h) - 2.0).abs() < 1e-12);
    }
}

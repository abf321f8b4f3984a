//! Convolution kernels and the transfer of almost periodicity through the
//! heat semigroup, the evolution system of `Δ + a(t)` and the d'Alembert
//! formula.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::ap_certifier::{self, Certificate, ClassSpec, Phi, Scales, Variant, Weight};
use crate::error::{Error, Result};
use crate::function_model::{cartesian, Domain, FunctionHandle};
use crate::quadrature::{integrate, integrate_complex, Cube, Hints, QuadratureConfig};
use crate::vexp_lebesgue::{conjugate_value, modular_of_field, norm_of, ExponentField, NORM_TOL};
use crate::weyl_metrics::{grows, within};
use crate::Complex64;

/// Relative kernel tail mass left out by the default truncation radius.
pub const DEFAULT_TAIL: f64 = 1e-8;

type KernelFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type TailFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Integrable kernel `h : Rⁿ → R` with its `L¹` mass and the mass outside
/// the cube `[−R, R]ⁿ`.
#[derive(Clone)]
pub struct Kernel {
    n: usize,
    label: String,
    eval: KernelFn,
    l1_mass: f64,
    tail: TailFn,
    breaks: Vec<Vec<f64>>,
    /// `|h|` is nonincreasing in every `|y_i|`; block suprema are then
    /// attained at the block point closest to the origin.
    unimodal: bool,
    /// `h = 0` outside `[−R, R]ⁿ` for this `R`.
    support: Option<f64>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kernel({}, n={}, mass={})", self.label, self.n, self.l1_mass)
    }
}

impl Kernel {
    /// `(4πt₀)^{−n/2} e^{−|y|²/4t₀}`.
    pub fn heat(n: usize, t0: f64) -> Result<Self> {
        if !(t0 > 0.0) || !t0.is_finite() || n == 0 {
            return Err(Error::InvalidInput(format!("heat kernel needs n >= 1 and t0 > 0, got n={n}, t0={t0}")));
        }
        let c = (4.0 * PI * t0).powf(-(n as f64) / 2.0);
        let s = 2.0 * t0.sqrt();
        Ok(Kernel {
            n,
            label: format!("heat(t0={t0})"),
            eval: Arc::new(move |y| c * (-y.iter().map(|v| v * v).sum::<f64>() / (4.0 * t0)).exp()),
            l1_mass: 1.0,
            tail: Arc::new(move |r| (1.0 - erf(r / s).powi(n as i32)).max(0.0)),
            breaks: vec![vec![]; n],
            unimodal: true,
            support: None,
        })
    }

    /// Normalized indicator of `[−a, a]ⁿ`.
    pub fn boxed(n: usize, a: f64) -> Result<Self> {
        if !(a > 0.0) || n == 0 {
            return Err(Error::InvalidInput(format!("box kernel needs n >= 1 and a > 0, got {a}")));
        }
        let c = (2.0 * a).powi(-(n as i32));
        Ok(Kernel {
            n,
            label: format!("box(a={a})"),
            eval: Arc::new(move |y| if y.iter().all(|v| v.abs() <= a) { c } else { 0.0 }),
            l1_mass: 1.0,
            tail: Arc::new(move |r| if r >= a { 0.0 } else { 1.0 - (r / a).powi(n as i32) }),
            breaks: vec![vec![-a, a]; n],
            unimodal: true,
            support: Some(a),
        })
    }

    pub fn zero(n: usize) -> Self {
        Kernel {
            n,
            label: "zero".into(),
            eval: Arc::new(|_| 0.0),
            l1_mass: 0.0,
            tail: Arc::new(|_| 0.0),
            breaks: vec![vec![]; n],
            unimodal: true,
            support: Some(0.0),
        }
    }

    /// General kernel; `tail(R)` must bound the mass outside `[−R,R]ⁿ`.
    pub fn custom<F, T>(n: usize, label: impl Into<String>, l1_mass: f64, unimodal: bool, f: F, tail: T) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        T: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(l1_mass >= 0.0) || !l1_mass.is_finite() {
            return Err(Error::InvalidInput("kernel L1 mass must be finite".into()));
        }
        Ok(Kernel { n, label: label.into(), eval: Arc::new(f), l1_mass, tail: Arc::new(tail), breaks: vec![vec![]; n], unimodal, support: None })
    }

    pub fn scaled(&self, c: f64) -> Kernel {
        let inner = self.eval.clone();
        let tail = self.tail.clone();
        Kernel {
            eval: Arc::new(move |y| c * inner(y)),
            tail: Arc::new(move |r| c.abs() * tail(r)),
            l1_mass: self.l1_mass * c.abs(),
            label: format!("{c}*{}", self.label),
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        (self.eval)(y)
    }

    pub fn l1_mass(&self) -> f64 {
        self.l1_mass
    }

    pub fn tail_mass(&self, r: f64) -> f64 {
        (self.tail)(r)
    }

    /// Smallest `R` (to bisection precision) with `tail(R) < rel·‖h‖₁`.
    pub fn default_radius(&self, rel: f64) -> f64 {
        let thr = rel * self.l1_mass;
        if self.l1_mass == 0.0 || self.tail_mass(0.0) < thr {
            return 0.0;
        }
        if let Some(s) = self.support {
            return s;
        }
        let mut hi = 1.0;
        while self.tail_mass(hi) >= thr {
            hi *= 2.0;
            if hi > 1e12 {
                return hi;
            }
        }
        let mut lo = hi / 2.0;
        if self.tail_mass(lo) < thr {
            lo = 0.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.tail_mass(mid) < thr {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// `sup |h|` over a block; exact for unimodal kernels, sampled otherwise.
    pub fn block_sup(&self, block: &Cube) -> f64 {
        if self.unimodal {
            let y: Vec<f64> = (0..self.n).map(|i| 0f64.clamp(block.lo()[i], block.hi(i))).collect();
            return self.eval(&y).abs();
        }
        let axes: Vec<Vec<f64>> = (0..self.n).map(|i| (0..=8).map(|j| block.lo()[i] + block.side()[i] * j as f64 / 8.0).collect()).collect();
        cartesian(&axes).iter().map(|y| self.eval(y).abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct ConvolutionResult {
    pub handle: FunctionHandle,
    pub truncation_radius: f64,
    /// `sup‖F‖ · tail(R)`.
    pub est_truncation_error: f64,
}

/// Lazy `(h∗F)(t) = ∫_{[−R,R]ⁿ} h(y) F(t − y) dy`.
pub fn convolve(h: &Kernel, f: &FunctionHandle, radius: Option<f64>, q: &QuadratureConfig) -> Result<ConvolutionResult> {
    if h.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: f.dim() });
    }
    let Some(sup) = f.sup_bound() else {
        return Err(Error::MissingSupBound(f.label().to_string()));
    };
    q.validate()?;
    let r = radius.unwrap_or_else(|| h.default_radius(DEFAULT_TAIL));
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidInput(format!("truncation radius {r} must be finite and nonnegative")));
    }
    let est_truncation_error = sup * h.tail_mass(r);
    let n = f.dim();
    let label = format!("{}*{}", h.label(), f.label());
    if r == 0.0 || h.l1_mass() == 0.0 {
        let z = FunctionHandle::zero(n, f.arity()).with_params(f.params().to_vec()).with_label(label);
        return Ok(ConvolutionResult { handle: z, truncation_radius: r, est_truncation_error });
    }
    let (hk, fk, qk) = (h.clone(), f.clone(), q.clone());
    let arity = f.arity();
    let handle = FunctionHandle::new(n, arity, label, move |t, x, out| {
        let cube = Cube::new(vec![-r; n], vec![2.0 * r; n]).expect("positive radius");
        let around = Cube::new(t.iter().map(|v| v - r).collect(), vec![2.0 * r; n]).expect("positive radius");
        let fh = fk.hints(&around);
        let hints = Hints {
            breaks: (0..n)
                .map(|i| hk.breaks[i].iter().copied().chain(fh.breaks[i].iter().map(|b| t[i] - b)).collect())
                .collect(),
            bandwidth: fk.bandwidth(),
        };
        let xi = fk.params().iter().position(|p| p.as_slice() == x).unwrap_or(0);
        for (c, o) in out.iter_mut().enumerate() {
            let v = integrate_complex(&cube, &hints, &qk, |y| {
                let s: smallvec::SmallVec<[f64; 4]> = t.iter().zip(y).map(|(a, b)| a - b).collect();
                fk.eval(&s, xi)[c] * hk.eval(y)
            });
            *o = v.map_or(Complex64::new(f64::NAN, f64::NAN), |r| r.value);
        }
    })
    .with_params(f.params().to_vec())
    .with_sup_bound(sup * h.l1_mass())
    .with_bandwidth(f.bandwidth());
    Ok(ConvolutionResult { handle, truncation_radius: r, est_truncation_error })
}

fn check_mass(h: &Kernel, r: f64, q: &QuadratureConfig) -> Result<f64> {
    let n = h.dim();
    let cube = Cube::new(vec![-r; n], vec![2.0 * r; n])?;
    let m = integrate(&cube, &Hints::none(n), q, |y| h.eval(y))?.value;
    if (m - h.l1_mass()).abs() > 1e-6 * h.l1_mass().max(1.0) {
        return Err(Error::Precondition(format!("kernel mass {m} on [-{r},{r}]^{n} differs from {}", h.l1_mass())));
    }
    Ok(m)
}

/// `G(t₀)F` by heat-kernel convolution; the truncated kernel mass is
/// checked against 1.
pub fn gaussian_semigroup_apply(f: &FunctionHandle, t0: f64, radius: Option<f64>, q: &QuadratureConfig) -> Result<ConvolutionResult> {
    let h = Kernel::heat(f.dim(), t0)?;
    let res = convolve(&h, f, radius, q)?;
    check_mass(&h, res.truncation_radius, q)?;
    Ok(res)
}

/// How the lattice sum of the Gaussian condition treats `|k| < 3l√n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GaussianForm {
    /// `e^{−(|k| − 3l√n)²/4t₀}` as printed.
    Printed,
    /// `e^{−max(|k| − 3l√n, 0)²/4t₀}`, the distance bound it stands for.
    Clamped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianCondition {
    pub value: f64,
    pub lattice_sum: f64,
    /// Largest `|k|_∞ / l` included.
    pub shells: usize,
    pub pass: bool,
}

/// `2 l^{−n/p} (4πt₀)^{−n/2} Σ_{k∈lZⁿ} e^{−(|k|−3l√n)²/4t₀} · 𝔽₁(l)/𝔽(l)`.
///
/// The lattice is summed shell by shell in `|k|_∞` until a shell beyond
/// `3l√n` contributes below `1e-17` of the running sum.
pub fn gaussian_sufficient_condition(
    t0: f64,
    l: f64,
    p: f64,
    ratio: f64,
    n: usize,
    form: GaussianForm,
) -> Result<GaussianCondition> {
    if !(t0 > 0.0 && l > 0.0 && p >= 1.0 && ratio >= 0.0) || n == 0 {
        return Err(Error::InvalidInput("need t0 > 0, l > 0, p >= 1, ratio >= 0, n >= 1".into()));
    }
    let shift = 3.0 * l * (n as f64).sqrt();
    let term = |k: &[i64]| {
        let r = l * k.iter().map(|v| (*v * *v) as f64).sum::<f64>().sqrt();
        let d = match form {
            GaussianForm::Printed => r - shift,
            GaussianForm::Clamped => (r - shift).max(0.0),
        };
        (-d * d / (4.0 * t0)).exp()
    };
    let mut sum = 0.0;
    let mut m: i64 = 0;
    loop {
        let mut shell = 0.0;
        for_each_shell_point(n, m, |k| shell += term(k));
        sum += shell;
        if m as f64 * l > shift && shell <= 1e-17 * sum {
            break;
        }
        m += 1;
        if m > 1_000_000 {
            return Err(Error::TruncationTooCoarse { tail: shell, slack: 1e-17 * sum });
        }
    }
    let value = 2.0 * l.powf(-(n as f64) / p) * (4.0 * PI * t0).powf(-(n as f64) / 2.0) * sum * ratio;
    Ok(GaussianCondition { value, lattice_sum: sum, shells: m as usize, pass: value <= 1.0 })
}

/// Calls `f` on every integer point with `|k|_∞ = m`.
fn for_each_shell_point(n: usize, m: i64, mut f: impl FnMut(&[i64])) {
    if m == 0 {
        f(&vec![0; n]);
        return;
    }
    let mut k = vec![-m; n];
    loop {
        if k.iter().any(|v| v.abs() == m) {
            f(&k);
        }
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if k[i] < m {
                k[i] += 1;
                break;
            }
            k[i] = -m;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShokiranReport {
    pub lhs: f64,
    pub pass: bool,
    /// Lattice shells `|k|_∞/l ≤ shells` kept.
    pub shells: usize,
    /// Upper bound for the omitted `Σ_k l^{−n}·a_k·‖φ̃(a_k^{−1}lⁿh)‖`.
    pub tail: f64,
    /// `(k, a_k)` over the kept lattice.
    pub weights: Vec<(Vec<f64>, f64)>,
}

/// Left side of the modular convolution condition at `(l, t)`.
///
/// `a_k` is proportional to `‖h‖_{L^q(k − lΩ)}` with `Ω = [0,1]ⁿ`. The
/// lattice is cut where the kernel tail mass falls below `1e-12`; the
/// omitted blocks are bounded through the block suprema of `h` (unimodal
/// kernels, `φ̃` linear on the tail) and must stay below `slack`.
#[allow(clippy::too_many_arguments)]
pub fn shokiran_condition(
    h: &Kernel,
    phi: &Phi,
    weight: &Weight,
    weight1: &Weight,
    p1: &ExponentField,
    p: f64,
    l: f64,
    t: &[f64],
    slack: f64,
    q: &QuadratureConfig,
) -> Result<ShokiranReport> {
    let n = h.dim();
    if t.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: t.len() });
    }
    if !(l > 0.0) || !(p >= 1.0) {
        return Err(Error::InvalidInput("need l > 0 and p >= 1".into()));
    }
    let cell = Cube::unit(n).cell(t, l);
    if h.l1_mass() == 0.0 {
        return Ok(ShokiranReport { lhs: 0.0, pass: true, shells: 0, tail: 0.0, weights: vec![] });
    }
    let qexp = conjugate_value(p);
    let qe = ExponentField::constant(qexp)?;
    let r = h.default_radius(1e-12);
    let shells = ((r / l).ceil() as i64 + 1).max(1);
    let block_of = |k: &[f64]| Cube::new(k.iter().map(|v| v - l).collect(), vec![l; n]).expect("positive side");
    let raw_norm = |k: &[f64], scale: f64, with_phi: bool| -> Result<f64> {
        let b = block_of(k);
        if qexp.is_infinite() {
            let s = h.block_sup(&b) * scale;
            return Ok(if with_phi { phi.companion(s) } else { s });
        }
        let hints = Hints { breaks: h.breaks.clone(), bandwidth: 0.0 };
        Ok(norm_of(
            |y| {
                let v = h.eval(y).abs() * scale;
                if with_phi {
                    phi.companion(v)
                } else {
                    v
                }
            },
            &hints,
            &qe,
            &b,
            q,
            NORM_TOL,
        )?
        .value)
    };
    let axes: Vec<Vec<f64>> = (0..n).map(|_| (-shells..=shells).map(|j| j as f64 * l).collect()).collect();
    let ks = cartesian(&axes);
    let masses = ks.iter().map(|k| raw_norm(k, 1.0, false)).collect::<Result<Vec<f64>>>()?;
    let total: f64 = masses.iter().sum();
    if total == 0.0 {
        return Ok(ShokiranReport { lhs: 0.0, pass: true, shells: shells as usize, tail: 0.0, weights: vec![] });
    }
    let ln = l.powi(n as i32);
    let mut terms = Vec::new();
    let mut weights = Vec::new();
    for (k, m) in ks.iter().zip(&masses) {
        if *m == 0.0 {
            continue;
        }
        let a = m / total;
        let norm = raw_norm(k, ln / a, true)?;
        terms.push((k.clone(), a / ln * norm));
        weights.push((k.clone(), a));
    }
    // Omitted blocks: each lies beyond distance shells·l − l from 0 along some axis.
    let mut tail = 0.0;
    let edge = (shells as f64 - 1.0) * l;
    for m in (shells + 1)..(shells + 400) {
        let mut count = 0usize;
        for_each_shell_point(n, m, |_| count += 1);
        let d = edge + (m - shells - 1) as f64 * l;
        let mut y = vec![0.0; n];
        y[0] = d;
        let s = if h.unimodal { h.eval(&y).abs() } else { f64::INFINITY };
        let block_norm = if qexp.is_infinite() { s } else { s * ln.powf(1.0 / qexp) };
        let add = count as f64 * block_norm / ln * phi.companion(1.0).max(1.0);
        tail += add;
        if add <= 1e-300 || add < 1e-18 * tail {
            break;
        }
    }
    if tail > slack {
        return Err(Error::TruncationTooCoarse { tail, slack });
    }
    let w1 = weight1.eval(l, t);
    let mag = |u: &[f64]| {
        let s: f64 = terms
            .iter()
            .map(|(k, v)| {
                let uk: Vec<f64> = u.iter().zip(k).map(|(a, b)| a - b).collect();
                v / weight.eval(l, &uk)
            })
            .sum();
        2.0 * s * w1
    };
    let lhs = modular_of_field(mag, &Hints::none(n), p1, &cell, q)?.value;
    Ok(ShokiranReport { lhs, pass: lhs <= 1.0, shells: shells as usize, tail, weights })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub t: Vec<f64>,
    /// Class quantity of `h∗F` at τ on the cell.
    pub convolved: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    /// Supremum of the class quantity of `F` over the grid enlarged by `R`.
    pub source_sup: f64,
    pub l1_mass: f64,
    pub truncation: f64,
    pub rows: Vec<TransferRow>,
    /// Set for the general (φ, p) case, where the condition checker decides.
    pub condition: Option<ShokiranReport>,
    pub holds: bool,
}

/// Young-type transfer of an ε-period from `F` to `h∗F`.
///
/// With φ = id, constant `p` and a `t`-independent weight,
/// `𝔽‖(h∗F)(τ+·) − (h∗F)‖_{L^p(t+lΩ)} ≤ ‖h‖₁ sup_{|s|_∞≤R} 𝔽‖F(τ+·) − F‖_{L^p(t−s+lΩ)}`
/// plus the truncation term; every grid cell is checked against it.
/// Otherwise the convolution condition is evaluated at each grid cell.
#[allow(clippy::too_many_arguments)]
pub fn convolution_preserves_period_check(
    h: &Kernel,
    f: &FunctionHandle,
    tau: &[f64],
    spec: &ClassSpec,
    eps: f64,
    l: f64,
    radius: Option<f64>,
    q: &QuadratureConfig,
) -> Result<TransferReport> {
    let b = f.param_indices();
    let pre = ap_certifier::verify_period(f, spec, tau, eps, Scales::Fixed(l), &b, q)?;
    if !pre.pass {
        return Err(Error::Precondition(format!("translation {tau:?} is not an eps-period of F (measured {})", pre.worst)));
    }
    let conv = convolve(h, f, radius, q)?;
    let r = conv.truncation_radius;
    let pts = spec.domain.t_points(l)?;
    let simple = spec.weights.phi.is_identity()
        && spec.exponent.as_constant().is_some()
        && spec.weights.weight.t_independent()
        && matches!(spec.variant, Variant::Paren | Variant::ConstantP | Variant::TripleLambda);
    let mut rows = Vec::with_capacity(pts.len());
    if simple {
        let p = spec.exponent.as_constant().unwrap();
        let g = &spec.domain.t_grid;
        let step = g.step_at(l);
        let k = (r / step).ceil();
        let wide = crate::function_model::ProbeGrid {
            lo: g.lo.iter().map(|v| v - k * step).collect(),
            hi: g.hi.iter().map(|v| v + k * step).collect(),
            step,
            relative_step: 0.0,
        };
        let wide_spec = ClassSpec { domain: spec.domain.clone().with_grid(wide)?, ..spec.clone() };
        let source_sup = ap_certifier::verify_period(f, &wide_spec, tau, eps, Scales::Fixed(l), &b, q)?.worst;
        let vol = spec.domain.omega.volume() * l.powi(spec.domain.n as i32);
        let truncation = spec.weights.weight.eval(l, &pts[0]) * 2.0 * conv.est_truncation_error * vol.powf(1.0 / p);
        let bound = h.l1_mass() * source_sup + truncation;
        for t in pts {
            let mut v: f64 = 0.0;
            for &x in &b {
                v = v.max(ap_certifier::class_quantity(&conv.handle, spec, tau, l, &t, x, q)?);
            }
            rows.push(TransferRow { t, convolved: v, bound, holds: within(v, bound) });
        }
        let holds = rows.iter().all(|r| r.holds);
        return Ok(TransferReport { source_sup, l1_mass: h.l1_mass(), truncation, rows, condition: None, holds });
    }
    let p = spec.exponent.as_constant().ok_or_else(|| {
        Error::IncompatibleSpec("the convolution condition is evaluated for constant source exponents".into())
    })?;
    let mut worst: Option<ShokiranReport> = None;
    for t in pts {
        let c = shokiran_condition(h, &spec.weights.phi, &spec.weights.weight, &spec.weights.weight, &spec.exponent, p, l, &t, 1e-6, q)?;
        let mut v: f64 = 0.0;
        for &x in &b {
            v = v.max(ap_certifier::class_quantity(&conv.handle, spec, tau, l, &t, x, q)?);
        }
        rows.push(TransferRow { t, convolved: v, bound: f64::NAN, holds: c.pass });
        if worst.as_ref().is_none_or(|w| c.lhs > w.lhs) {
            worst = Some(c);
        }
    }
    let holds = rows.iter().all(|r| r.holds);
    Ok(TransferReport { source_sup: pre.worst, l1_mass: h.l1_mass(), truncation: conv.est_truncation_error, rows, condition: worst, holds })
}

// ---------------------------------------------------------------------------
// Evolution system of Δ + a(t)

const GL3: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 9.0), (0.0, 8.0 / 9.0), (0.774_596_669_241_483_4, 5.0 / 9.0)];

/// Composite three-point Gauss–Legendre rule on `[a, b]`.
fn gauss3<T>(f: impl Fn(f64) -> T, a: f64, b: f64, cells: usize) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
{
    let cells = cells.max(1);
    let h = (b - a) / cells as f64;
    let mut acc = T::default();
    for i in 0..cells {
        let m = a + (i as f64 + 0.5) * h;
        for (x, w) in GL3 {
            acc = acc + f(m + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    acc
}

/// `∫_s^t a(τ) dτ` on 256 Gauss–Legendre cells.
pub fn profile_integral(a: &(dyn Fn(f64) -> f64 + Sync), s: f64, t: f64) -> f64 {
    gauss3(a, s, t, 256)
}

/// `K(t,s,u,v) = (4π(t−s))^{−n/2} e^{∫_s^t a} e^{−|u−v|²/4(t−s)}` given `∫_s^t a`.
pub fn evolution_kernel(t: f64, s: f64, u: &[f64], v: &[f64], a_integral: f64) -> f64 {
    let n = u.len() as f64;
    let d: f64 = u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum();
    (4.0 * PI * (t - s)).powf(-n / 2.0) * a_integral.exp() * (-d / (4.0 * (t - s))).exp()
}

/// `U(t,s)F = ∫ K(t,s,·,v) F(v) dv`, a heat convolution at `t − s` scaled
/// by `e^{∫_s^t a}`.
pub fn evolution_kernel_apply(
    f: &FunctionHandle,
    t: f64,
    s: f64,
    a_profile: &(dyn Fn(f64) -> f64 + Sync),
    radius: Option<f64>,
    q: &QuadratureConfig,
) -> Result<ConvolutionResult> {
    if !(t > s) || !(s >= 0.0) {
        return Err(Error::InvalidInput(format!("evolution needs t > s >= 0, got t={t}, s={s}")));
    }
    let factor = profile_integral(a_profile, s, t).exp();
    if !factor.is_finite() {
        return Err(Error::InvalidInput("the coefficient profile is not bounded on [s, t]".into()));
    }
    let h = Kernel::heat(f.dim(), t - s)?;
    let r = radius.unwrap_or_else(|| h.default_radius(DEFAULT_TAIL));
    check_mass(&h, r, q)?;
    convolve(&h.scaled(factor), f, Some(r), q)
}

/// `G(l,u) = Σ_{k∈lZⁿ} ‖e^{−|u−·|²/4t}‖_{L^q(k+l[0,1]ⁿ)}`.
///
/// For `q = ∞` each term is `e^{−dist(u, cell)²/4t}`. Blocks are added by
/// `|k|_∞` shells until the shell bound `#shell·l^{n/q}·e^{−d²/4t}` with `d`
/// the shell's distance from `u` falls below `1e-8` of the sum.
pub fn g_series(l: f64, u: &[f64], t: f64, qexp: f64, q: &QuadratureConfig) -> Result<(f64, f64)> {
    let n = u.len();
    let centre: Vec<i64> = u.iter().map(|v| (v / l).floor() as i64).collect();
    let block_norm = |k: &[i64]| -> Result<f64> {
        let lo: Vec<f64> = k.iter().zip(&centre).map(|(a, c)| (a + c) as f64 * l).collect();
        let cube = Cube::new(lo, vec![l; n])?;
        if qexp.is_infinite() {
            let d2: f64 = (0..n).map(|i| (u[i] - u[i].clamp(cube.lo()[i], cube.hi(i))).powi(2)).sum();
            return Ok((-d2 / (4.0 * t)).exp());
        }
        let qe = ExponentField::constant(qexp)?;
        Ok(norm_of(
            |v| (-v.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (4.0 * t)).exp(),
            &Hints::none(n),
            &qe,
            &cube,
            q,
            NORM_TOL,
        )?
        .value)
    };
    let mut sum = 0.0;
    let mut m: i64 = 0;
    loop {
        let mut shell = 0.0;
        let mut err = None;
        for_each_shell_point(n, m, |k| match block_norm(k) {
            Ok(v) => shell += v,
            Err(e) => err = Some(e),
        });
        if let Some(e) = err {
            return Err(e);
        }
        sum += shell;
        // Every later shell is at distance ≥ m·l from u.
        let mut count = 0usize;
        for_each_shell_point(n, m + 1, |_| count += 1);
        let d = m as f64 * l;
        let bound_next = count as f64 * l.powf(if qexp.is_infinite() { 0.0 } else { n as f64 / qexp }) * (-d * d / (4.0 * t)).exp();
        if m >= 1 && bound_next < 1e-8 * sum * 1e-3 {
            // Geometric decay beyond this shell keeps the full tail below 1e-8 of the sum.
            return Ok((sum, bound_next * 2.0));
        }
        m += 1;
        if m > 100_000 {
            return Err(Error::TruncationTooCoarse { tail: bound_next, slack: 1e-8 * sum });
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionRow {
    pub tau: Vec<f64>,
    pub t: Vec<f64>,
    /// `𝔽₁(l,t)·‖u(·+τ) − u‖_{L^{p′}(t+l[0,1]ⁿ)}`.
    pub quantity: f64,
    /// `c_t · ε_τ` with `ε_τ` the measured quantity of `F` at τ.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTransfer {
    pub l: f64,
    /// `(4πt)^{−n/2} e^{∫_0^t a}`.
    pub c_t: f64,
    /// `(t, 𝔽₁(l,t))` on the probe grid.
    pub weight1: Vec<(Vec<f64>, f64)>,
    /// Largest truncation bound met while summing `G`.
    pub g_tail: f64,
    pub rows: Vec<EvolutionRow>,
    pub verified: bool,
}

/// Builds `𝔽₁(l,t) = 𝔽(l)/‖G(l,·)‖_{L^{p′}(t+l[0,1]ⁿ)}` and checks the
/// witnesses of `F` for `u(t,·) = U(t,0)F` in the class `(p′, x, 𝔽₁)`.
#[allow(clippy::too_many_arguments)]
pub fn evolution_weight_transfer(
    f: &FunctionHandle,
    t: f64,
    a_profile: &(dyn Fn(f64) -> f64 + Sync),
    spec: &ClassSpec,
    cert: &Certificate,
    p_prime: f64,
    radius: Option<f64>,
    q: &QuadratureConfig,
) -> Result<EvolutionTransfer> {
    let n = spec.domain.n;
    let Some(p) = spec.exponent.as_constant() else {
        return Err(Error::IncompatibleSpec("the evolution transfer needs a constant exponent".into()));
    };
    if !spec.weights.phi.is_identity() || !spec.weights.weight.t_independent() {
        return Err(Error::IncompatibleSpec("the evolution transfer needs phi = id and a t-independent weight".into()));
    }
    if spec.domain.omega != Cube::unit(n) {
        return Err(Error::IncompatibleSpec("the evolution transfer is stated for the unit cube".into()));
    }
    let Some(l) = cert.l else {
        return Err(Error::Precondition("an equi certificate is required".into()));
    };
    if !(p_prime >= 1.0) || !p_prime.is_finite() {
        return Err(Error::ExponentMismatch(format!("p' must lie in [1, inf), got {p_prime}")));
    }
    let qexp = conjugate_value(p);
    let a_int = profile_integral(a_profile, 0.0, t);
    let c_t = (4.0 * PI * t).powf(-(n as f64) / 2.0) * a_int.exp();
    let u = evolution_kernel_apply(f, t, 0.0, a_profile, radius, q)?.handle;
    let pp = ExponentField::constant(p_prime)?;
    let pts = spec.domain.t_points(l)?;
    let w = spec.weights.weight.eval(l, &pts[0]);
    let mut g_tail: f64 = 0.0;
    let mut weight1 = Vec::with_capacity(pts.len());
    for t0 in &pts {
        let cell = Cube::unit(n).cell(t0, l);
        let tails = std::sync::Mutex::new(0f64);
        let gn = norm_of(
            |v| match g_series(l, v, t, qexp, q) {
                Ok((g, tl)) => {
                    let mut m = tails.lock().unwrap();
                    *m = m.max(tl);
                    g
                }
                Err(_) => f64::NAN,
            },
            &Hints::none(n),
            &pp,
            &cell,
            q,
            NORM_TOL,
        )?
        .value;
        g_tail = g_tail.max(tails.into_inner().unwrap());
        weight1.push((t0.clone(), w / gn));
    }
    let b = f.param_indices();
    let mut rows = Vec::new();
    for wt in &cert.witnesses {
        for (t0, w1) in &weight1 {
            let cell = Cube::unit(n).cell(t0, l);
            let mut v: f64 = 0.0;
            for &x in &b {
                let nv = norm_of(
                    |y| {
                        let s: Vec<f64> = y.iter().zip(&wt.tau).map(|(a, c)| a + c).collect();
                        u.gap_norm(&s, &u, y, x)
                    },
                    &u.diff_hints(&wt.tau, &cell),
                    &pp,
                    &cell,
                    q,
                    NORM_TOL,
                )?;
                v = v.max(w1 * nv.value);
            }
            let bound = c_t * wt.measured;
            rows.push(EvolutionRow { tau: wt.tau.clone(), t: t0.clone(), quantity: v, bound, holds: within(v, bound) });
        }
    }
    let verified = rows.iter().all(|r| r.holds);
    Ok(EvolutionTransfer { l, c_t, weight1, g_tail, rows, verified })
}

// ---------------------------------------------------------------------------
// d'Alembert formula

/// `g^{[1]}(x) = ∫_0^x g` tabulated on `[lo, hi]`.
///
/// Cell integrals use three-point Gauss–Legendre; between nodes the
/// antiderivative is the cubic Hermite interpolant with slopes `g(x_i)`, so
/// smooth `g` gives fourth-order accuracy. Outside the table the integral
/// is computed directly from the nearest end.
#[derive(Clone, Debug)]
pub struct Antiderivative {
    g: FunctionHandle,
    lo: f64,
    h: f64,
    values: Vec<Complex64>,
    slopes: Vec<Complex64>,
}

impl Antiderivative {
    pub fn new(g: &FunctionHandle, lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if g.dim() != 1 || g.arity() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: g.dim().max(g.arity()) });
        }
        if !(hi > lo) || cells == 0 {
            return Err(Error::InvalidInput("antiderivative table needs lo < hi and at least one cell".into()));
        }
        let h = (hi - lo) / cells as f64;
        let gv = |x: f64| g.value(&[x]);
        let mut values = Vec::with_capacity(cells + 1);
        let mut acc = Complex64::new(0.0, 0.0);
        values.push(acc);
        for i in 0..cells {
            let a = lo + i as f64 * h;
            acc += gauss3(gv, a, a + h, 1);
            values.push(acc);
        }
        let slopes = (0..=cells).map(|i| gv(lo + i as f64 * h)).collect();
        let mut me = Antiderivative { g: g.clone(), lo, h, values, slopes };
        let zero = me.eval(0.0);
        me.values.iter_mut().for_each(|v| *v -= zero);
        Ok(me)
    }

    fn hi(&self) -> f64 {
        self.lo + self.h * (self.values.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let last = self.values.len() - 1;
        let gv = |y: f64| self.g.value(&[y]);
        if x < self.lo {
            let cells = ((self.lo - x) / self.h).ceil() as usize;
            return self.values[0] - gauss3(gv, x, self.lo, cells);
        }
        if x > self.hi() {
            let cells = ((x - self.hi()) / self.h).ceil() as usize;
            return self.values[last] + gauss3(gv, self.hi(), x, cells);
        }
        let i = (((x - self.lo) / self.h).floor() as usize).min(last - 1);
        let s = (x - (self.lo + i as f64 * self.h)) / self.h;
        let (s2, s3) = (s * s, s * s * s);
        self.values[i] * (2.0 * s3 - 3.0 * s2 + 1.0)
            + self.slopes[i] * (self.h * (s3 - 2.0 * s2 + s))
            + self.values[i + 1] * (-2.0 * s3 + 3.0 * s2)
            + self.slopes[i + 1] * (self.h * (s3 - s2))
    }
}

/// `u(x,t) = ½[f(x−at) + f(x+at)] + (1/2a)[g^{[1]}(x+at) − g^{[1]}(x−at)]`
/// for every real `t`.
#[derive(Clone, Debug)]
pub struct WaveSolution {
    pub f: FunctionHandle,
    pub g1: Antiderivative,
    pub a: f64,
}

impl WaveSolution {
    /// Tabulates `g^{[1]}` on `[lo, hi]` with 64 cells per unit length.
    pub fn new(f: &FunctionHandle, g: &FunctionHandle, a: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidInput(format!("wave speed must be positive, got {a}")));
        }
        if f.dim() != 1 || f.arity() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: f.dim().max(f.arity()) });
        }
        let cells = (((hi - lo) * 64.0).ceil() as usize).max(1);
        Ok(WaveSolution { f: f.clone(), g1: Antiderivative::new(g, lo, hi, cells)?, a })
    }

    pub fn eval(&self, x: f64, t: f64) -> Complex64 {
        dalembert_solution(&self.f, &self.g1, self.a, x, t)
    }

    /// The solution as a function of `(x, t)`.
    pub fn to_handle(&self) -> FunctionHandle {
        let me = self.clone();
        let bw = (self.f.bandwidth().max(self.g1.g.bandwidth())) * (1.0 + self.a);
        FunctionHandle::scalar(2, format!("wave[{}; a={}]", self.f.label(), self.a), move |p| me.eval(p[0], p[1]))
            .with_bandwidth(bw)
    }
}

pub fn dalembert_solution(f: &FunctionHandle, g1: &Antiderivative, a: f64, x: f64, t: f64) -> Complex64 {
    let (m, p) = (x - a * t, x + a * t);
    (f.value(&[m]) + f.value(&[p])) * 0.5 + (g1.eval(p) - g1.eval(m)) / (2.0 * a)
}

/// `max |D²_t u − a² D²_x u|` with centred differences of step `h`.
pub fn wave_fd_residual(sol: &WaveSolution, points: &[(f64, f64)], h: f64) -> f64 {
    points
        .iter()
        .map(|&(x, t)| {
            let c = sol.eval(x, t) * 2.0;
            let utt = (sol.eval(x, t + h) - c + sol.eval(x, t - h)) / (h * h);
            let uxx = (sol.eval(x + h, t) - c + sol.eval(x - h, t)) / (h * h);
            (utt - uxx * (sol.a * sol.a)).norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveRow {
    pub t: [f64; 2],
    /// `𝔽₁(l,t) ∫_{t+l[0,1]²} |u(x+τ₁, s+τ₂) − u(x,s)|`.
    pub quantity: f64,
    /// The same cell integral of the four-term pointwise bound.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    /// `(l, max over the t grid of the two ratio integrals)`.
    pub samples: Vec<(f64, f64)>,
    pub finite: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveTransferReport {
    pub tau: [f64; 2],
    pub l: f64,
    pub rows: Vec<WaveRow>,
    pub bound_holds: bool,
    pub ratio: RatioCheck,
}

/// `∫_{t₁}^{t₁+l/a} 𝔽₁(l,t)/𝔽(l, x−at₂−l) dx + ∫_{t₁}^{t₁+l/a} 𝔽₁(l,t)/𝔽(l, x+at₂) dx`.
pub fn wave_ratio_integral(weight: &Weight, weight1: &Weight, a: f64, l: f64, t: [f64; 2]) -> f64 {
    let w1 = weight1.eval(l, &t);
    let cells = ((l / a).ceil() as usize).clamp(8, 4096);
    gauss3(|x| w1 / weight.eval(l, &[x - a * t[1] - l]) + w1 / weight.eval(l, &[x + a * t[1]]), t[0], t[0] + l / a, cells)
}

/// Pointwise four-term bound integrated cell by cell, and growth of the
/// ratio integrals over expanding `(l, t)` grids.
#[allow(clippy::too_many_arguments)]
pub fn dalembert_period_transfer_check(
    sol: &WaveSolution,
    tau: [f64; 2],
    l: f64,
    t_grid: &[[f64; 2]],
    weight: &Weight,
    weight1: &Weight,
    ratio_scales: &[f64],
    ratio_grid: &[[f64; 2]],
    q: &QuadratureConfig,
) -> Result<WaveTransferReport> {
    if !(l > 0.0) {
        return Err(Error::InvalidInput("scale must be positive".into()));
    }
    let a = sol.a;
    let (dm, dp) = (tau[0] - a * tau[1], tau[0] + a * tau[1]);
    let f = &sol.f;
    let g1 = &sol.g1;
    let bw = (f.bandwidth().max(sol.g1.g.bandwidth())) * (1.0 + a);
    let mut rows = Vec::with_capacity(t_grid.len());
    for t in t_grid {
        let cell = Cube::new(t.to_vec(), vec![l, l])?;
        let hints = Hints { breaks: vec![vec![], vec![]], bandwidth: bw };
        let w1 = weight1.eval(l, t);
        let lhs = integrate(&cell, &hints, q, |p| (sol.eval(p[0] + tau[0], p[1] + tau[1]) - sol.eval(p[0], p[1])).norm())?.value;
        let rhs = integrate(&cell, &hints, q, |p| {
            let (m, pl) = (p[0] - a * p[1], p[0] + a * p[1]);
            0.5 * (f.value(&[m + dm]) - f.value(&[m])).norm()
                + 0.5 * (f.value(&[pl + dp]) - f.value(&[pl])).norm()
                + (g1.eval(m + dm) - g1.eval(m)).norm() / (2.0 * a)
                + (g1.eval(pl + dp) - g1.eval(pl)).norm() / (2.0 * a)
        })?
        .value;
        let (quantity, bound) = (w1 * lhs, w1 * rhs);
        rows.push(WaveRow { t: *t, quantity, bound, holds: within(quantity, bound) });
    }
    let samples: Vec<(f64, f64)> = ratio_scales
        .iter()
        .map(|&s| (s, ratio_grid.iter().map(|t| wave_ratio_integral(weight, weight1, a, s, *t)).fold(0.0, f64::max)))
        .collect();
    let vals: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let finite = vals.iter().all(|v| v.is_finite()) && !grows(&vals);
    let bound_holds = rows.iter().all(|r| r.holds);
    Ok(WaveTransferReport { tau, l, rows, bound_holds, ratio: RatioCheck { samples, finite } })
}

/// `[t₀ − R, t₀ + R]ⁿ` grid domain used by the examples.
pub fn grid_domain(n: usize, lo: f64, hi: f64, step: f64) -> Result<Domain> {
    Domain::euclidean(n, vec![], lo, hi, step)
}

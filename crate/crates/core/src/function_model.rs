//! Functions `F : Λ × X → C^d`, translation domains, and the example gallery.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};
use crate::quadrature::{Cube, Hints};

pub type Values = SmallVec<[Complex64; 4]>;
pub type EvalFn = dyn Fn(&[f64], &[f64], &mut [Complex64]) + Send + Sync;
pub type Predicate = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

const MAX_LATTICE_BREAKS: f64 = (1u64 << 20) as f64;

/// Jump locations of a function along one axis: isolated points plus
/// arithmetic progressions `offset + step·Z`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AxisBreaks {
    pub points: Vec<f64>,
    pub lattices: Vec<(f64, f64)>,
}

impl AxisBreaks {
    pub fn at(points: Vec<f64>) -> Self {
        AxisBreaks { points, lattices: Vec::new() }
    }

    pub fn lattice(offset: f64, step: f64) -> Self {
        AxisBreaks { points: Vec::new(), lattices: vec![(offset, step.abs())] }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.lattices.is_empty()
    }

    /// Breaks strictly inside `(lo, hi)`.
    pub fn within(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self.points.iter().copied().filter(|b| *b > lo && *b < hi).collect();
        for &(off, step) in &self.lattices {
            let k0 = ((lo - off) / step).floor();
            let k1 = ((hi - off) / step).ceil();
            if k1 - k0 > MAX_LATTICE_BREAKS {
                continue;
            }
            let mut k = k0;
            while k <= k1 {
                let b = off + k * step;
                if b > lo && b < hi {
                    out.push(b);
                }
                k += 1.0;
            }
        }
        out
    }

    /// Breaks of `u ↦ F(u + s)`.
    pub fn shifted(&self, s: f64) -> Self {
        AxisBreaks {
            points: self.points.iter().map(|b| b - s).collect(),
            lattices: self.lattices.iter().map(|&(o, st)| (o - s, st)).collect(),
        }
    }

    /// Breaks of `u ↦ F(c·u)`.
    pub fn scaled(&self, c: f64) -> Self {
        AxisBreaks {
            points: self.points.iter().map(|b| b / c).collect(),
            lattices: self.lattices.iter().map(|&(o, st)| (o / c, st / c.abs())).collect(),
        }
    }

    pub fn union(&self, other: &AxisBreaks) -> Self {
        let mut out = self.clone();
        out.points.extend_from_slice(&other.points);
        out.lattices.extend_from_slice(&other.lattices);
        out
    }
}

/// Immutable evaluable map `F(t; x)` with quadrature metadata.
#[derive(Clone)]
pub struct FunctionHandle {
    dim: usize,
    arity: usize,
    eval: Arc<EvalFn>,
    params: Arc<Vec<Vec<f64>>>,
    sup_bound: Option<f64>,
    label: String,
    breaks: Arc<Vec<AxisBreaks>>,
    bandwidth: f64,
}

impl fmt::Debug for FunctionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionHandle")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("arity", &self.arity)
            .field("params", &self.params.len())
            .field("sup_bound", &self.sup_bound)
            .finish()
    }
}

impl FunctionHandle {
    pub fn new<F>(dim: usize, arity: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64], &[f64], &mut [Complex64]) + Send + Sync + 'static,
    {
        assert!(dim > 0 && arity > 0, "dimension and arity must be positive");
        FunctionHandle {
            dim,
            arity,
            eval: Arc::new(f),
            params: Arc::new(vec![vec![0.0]]),
            sup_bound: None,
            label: label.into(),
            breaks: Arc::new(vec![AxisBreaks::default(); dim]),
            bandwidth: 0.0,
        }
    }

    pub fn scalar<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        FunctionHandle::new(dim, 1, label, move |t, _x, out| out[0] = f(t))
    }

    pub fn real<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        FunctionHandle::new(dim, 1, label, move |t, _x, out| out[0] = Complex64::new(f(t), 0.0))
    }

    pub fn zero(dim: usize, arity: usize) -> Self {
        FunctionHandle::new(dim, arity, "zero", |_t, _x, out| out.fill(Complex64::new(0.0, 0.0)))
            .with_sup_bound(0.0)
    }

    pub fn constant(dim: usize, c: Complex64) -> Self {
        FunctionHandle::scalar(dim, format!("const({c})"), move |_| c).with_sup_bound(c.norm())
    }

    pub fn with_params(mut self, params: Vec<Vec<f64>>) -> Self {
        assert!(!params.is_empty(), "parameter set must be non-empty");
        self.params = Arc::new(params);
        self
    }

    pub fn with_sup_bound(mut self, b: f64) -> Self {
        self.sup_bound = Some(b);
        self
    }

    pub fn without_sup_bound(mut self) -> Self {
        self.sup_bound = None;
        self
    }

    pub fn with_breaks(mut self, breaks: Vec<AxisBreaks>) -> Self {
        assert_eq!(breaks.len(), self.dim);
        self.breaks = Arc::new(breaks);
        self
    }

    pub fn with_bandwidth(mut self, w: f64) -> Self {
        self.bandwidth = w.abs();
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn params(&self) -> &[Vec<f64>] {
        &self.params
    }

    pub fn param_indices(&self) -> Vec<usize> {
        (0..self.params.len()).collect()
    }

    pub fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn breaks(&self) -> &[AxisBreaks] {
        &self.breaks
    }

    pub fn eval_into(&self, t: &[f64], xi: usize, out: &mut [Complex64]) {
        debug_assert_eq!(t.len(), self.dim);
        (self.eval)(t, &self.params[xi], out)
    }

    pub fn eval(&self, t: &[f64], xi: usize) -> Values {
        let mut out: Values = smallvec![Complex64::new(0.0, 0.0); self.arity];
        self.eval_into(t, xi, &mut out);
        out
    }

    /// First component at the first parameter point.
    pub fn value(&self, t: &[f64]) -> Complex64 {
        self.eval(t, 0)[0]
    }

    pub fn norm_at(&self, t: &[f64], xi: usize) -> f64 {
        euclid(&self.eval(t, xi))
    }

    /// `‖F(a; x) − G(b; x)‖` for handles of equal arity.
    pub fn gap_norm(&self, a: &[f64], other: &FunctionHandle, b: &[f64], xi: usize) -> f64 {
        let u = self.eval(a, xi);
        let v = other.eval(b, xi);
        u.iter().zip(v.iter()).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
    }

    /// Breaks of `F` inside `cube`.
    pub fn hints(&self, cube: &Cube) -> Hints {
        Hints {
            breaks: (0..self.dim).map(|i| self.breaks[i].within(cube.lo()[i], cube.hi(i))).collect(),
            bandwidth: self.bandwidth,
        }
    }

    /// Breaks of `u ↦ F(u + τ)` and of `F` inside `cube`.
    pub fn diff_hints(&self, tau: &[f64], cube: &Cube) -> Hints {
        Hints {
            breaks: (0..self.dim)
                .map(|i| {
                    let mut b = self.breaks[i].within(cube.lo()[i], cube.hi(i));
                    b.extend(self.breaks[i].shifted(tau[i]).within(cube.lo()[i], cube.hi(i)));
                    b
                })
                .collect(),
            bandwidth: self.bandwidth,
        }
    }

    /// Samples `‖F‖` on `points` and reports whether the declared sup bound holds.
    pub fn respects_sup_bound(&self, points: &[Vec<f64>]) -> bool {
        match self.sup_bound {
            None => true,
            Some(b) => points
                .iter()
                .all(|p| (0..self.params.len()).all(|xi| self.norm_at(p, xi) <= b * (1.0 + 1e-12) + 1e-300)),
        }
    }

    /// `u ↦ F(u + τ)`.
    pub fn shifted(&self, tau: &[f64]) -> Self {
        assert_eq!(tau.len(), self.dim);
        let inner = self.eval.clone();
        let tau_v = tau.to_vec();
        let mut h = self.clone();
        h.eval = Arc::new(move |t, x, out| {
            let s: SmallVec<[f64; 4]> = t.iter().zip(&tau_v).map(|(a, b)| a + b).collect();
            inner(&s, x, out)
        });
        h.breaks = Arc::new(self.breaks.iter().zip(tau).map(|(b, s)| b.shifted(*s)).collect());
        h.label = format!("{}(.+{:?})", self.label, tau);
        h
    }

    fn combine(&self, other: &FunctionHandle, sign: f64, tag: &str) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        if self.arity != other.arity {
            return Err(Error::DimensionMismatch { expected: self.arity, found: other.arity });
        }
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let arity = self.arity;
        let mut h = self.clone();
        h.eval = Arc::new(move |t, x, out| {
            a(t, x, out);
            let mut tmp: Values = smallvec![Complex64::new(0.0, 0.0); arity];
            b(t, x, &mut tmp);
            for (o, v) in out.iter_mut().zip(tmp.iter()) {
                *o += sign * v;
            }
        });
        h.sup_bound = match (self.sup_bound, other.sup_bound) {
            (Some(p), Some(q)) => Some(p + q),
            _ => None,
        };
        h.breaks = Arc::new(self.breaks.iter().zip(other.breaks.iter()).map(|(p, q)| p.union(q)).collect());
        h.bandwidth = self.bandwidth.max(other.bandwidth);
        h.label = format!("({} {} {})", self.label, tag, other.label);
        Ok(h)
    }

    pub fn add(&self, other: &FunctionHandle) -> Result<Self> {
        self.combine(other, 1.0, "+")
    }

    pub fn sub(&self, other: &FunctionHandle) -> Result<Self> {
        self.combine(other, -1.0, "-")
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let inner = self.eval.clone();
        let mut h = self.clone();
        h.eval = Arc::new(move |t, x, out| {
            inner(t, x, out);
            for o in out.iter_mut() {
                *o *= c;
            }
        });
        h.sup_bound = self.sup_bound.map(|b| b * c.norm());
        h.label = format!("{}*{}", c, self.label);
        h
    }

    /// `t ↦ A·F(t)` for a constant `rows × arity` matrix.
    pub fn linear_map(&self, a: Vec<Vec<Complex64>>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|r| r.len() != self.arity) {
            return Err(Error::DimensionMismatch { expected: self.arity, found: a.first().map_or(0, |r| r.len()) });
        }
        let rows = a.len();
        let frob: f64 = a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let inner = self.eval.clone();
        let arity = self.arity;
        let mut h = self.clone();
        h.arity = rows;
        h.eval = Arc::new(move |t, x, out| {
            let mut tmp: Values = smallvec![Complex64::new(0.0, 0.0); arity];
            inner(t, x, &mut tmp);
            for (o, row) in out.iter_mut().zip(&a) {
                *o = row.iter().zip(tmp.iter()).map(|(p, q)| p * q).sum();
            }
        });
        h.sup_bound = self.sup_bound.map(|b| b * frob);
        h.label = format!("A.{}", self.label);
        Ok(h)
    }

    /// `F_{c1,c2}(t; x) = F(c1·t; c2·x)` with parameter points `B / c2`.
    pub fn dilated(&self, c1: f64, c2: f64) -> Result<Self> {
        if c1 == 0.0 || c2 == 0.0 || !c1.is_finite() || !c2.is_finite() {
            return Err(Error::InvalidInput("dilation factors must be finite and nonzero".into()));
        }
        let inner = self.eval.clone();
        let mut h = self.clone();
        h.eval = Arc::new(move |t, x, out| {
            let s: SmallVec<[f64; 4]> = t.iter().map(|v| c1 * v).collect();
            let y: SmallVec<[f64; 4]> = x.iter().map(|v| c2 * v).collect();
            inner(&s, &y, out)
        });
        h.params = Arc::new(self.params.iter().map(|p| p.iter().map(|v| v / c2).collect()).collect());
        h.breaks = Arc::new(self.breaks.iter().map(|b| b.scaled(c1)).collect());
        h.bandwidth = self.bandwidth * c1.abs();
        h.label = format!("{}[{}t;{}x]", self.label, c1, c2);
        Ok(h)
    }

    /// `t ↦ e^{−i⟨λ,t⟩} F(t)`.
    pub fn modulated(&self, lambda: &[f64]) -> Self {
        assert_eq!(lambda.len(), self.dim);
        let inner = self.eval.clone();
        let lam = lambda.to_vec();
        let mut h = self.clone();
        h.eval = Arc::new(move |t, x, out| {
            inner(t, x, out);
            let phase: f64 = t.iter().zip(&lam).map(|(a, b)| a * b).sum();
            let e = Complex64::from_polar(1.0, -phase);
            for o in out.iter_mut() {
                *o *= e;
            }
        });
        h.bandwidth = self.bandwidth + lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
        h
    }
}

pub fn euclid(v: &[Complex64]) -> f64 {
    if v.len() == 1 {
        v[0].norm()
    } else {
        v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// `‖F(u + τ; x) − F(u; x)‖`.
pub fn translate_gap(f: &FunctionHandle, u: &[f64], tau: &[f64], xi: usize) -> f64 {
    let s: SmallVec<[f64; 4]> = u.iter().zip(tau).map(|(a, b)| a + b).collect();
    f.gap_norm(&s, f, u, xi)
}

/// Subset of R^n: axis box (bounds may be infinite) intersected with an
/// optional predicate.
#[derive(Clone)]
pub struct Region {
    lo: Vec<f64>,
    hi: Vec<f64>,
    predicate: Option<Predicate>,
    label: String,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Region({})", self.label)
    }
}

impl Region {
    pub fn whole(n: usize) -> Self {
        Region { lo: vec![f64::NEG_INFINITY; n], hi: vec![f64::INFINITY; n], predicate: None, label: format!("R^{n}") }
    }

    pub fn orthant(n: usize) -> Self {
        Region { lo: vec![0.0; n], hi: vec![f64::INFINITY; n], predicate: None, label: format!("[0,inf)^{n}") }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b || a.is_nan() || b.is_nan()) {
            return Err(Error::InvalidInput("region box has lo > hi".into()));
        }
        let label = format!("box{:?}-{:?}", lo, hi);
        Ok(Region { lo, hi, predicate: None, label })
    }

    /// `{(s, s, …, s)}` up to `1e-12`.
    pub fn diagonal(n: usize) -> Self {
        Region::whole(n).with_predicate("diagonal", |p| p.iter().all(|v| (v - p[0]).abs() <= 1e-12))
    }

    pub fn with_predicate<F>(mut self, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&[f64]) -> bool + Send + Sync + 'static,
    {
        self.predicate = Some(Arc::new(f));
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `{v : c·v ∈ self}` for c ≠ 0.
    pub fn divided(&self, c: f64) -> Region {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for (a, b) in self.lo.iter().zip(&self.hi) {
            let (x, y) = (a / c, b / c);
            lo.push(x.min(y));
            hi.push(x.max(y));
        }
        let predicate = self.predicate.clone().map(|f| {
            let g: Predicate = Arc::new(move |v: &[f64]| {
                let w: Vec<f64> = v.iter().map(|x| c * x).collect();
                f(&w)
            });
            g
        });
        Region { lo, hi, predicate, label: format!("{}/{}", self.label, c) }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| v >= a && v <= b)
            && self.predicate.as_ref().is_none_or(|f| f(p))
    }
}

/// Lattice over a declared box standing in for a supremum over Λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub step: f64,
    /// When positive the step becomes `max(step, relative_step·l)`.
    pub relative_step: f64,
}

impl ProbeGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, step: f64) -> Result<Self> {
        let g = ProbeGrid { lo, hi, step, relative_step: 0.0 };
        g.validate()?;
        Ok(g)
    }

    pub fn with_relative_step(mut self, r: f64) -> Self {
        self.relative_step = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.len() != self.hi.len() || self.lo.is_empty() {
            return Err(Error::DimensionMismatch { expected: self.lo.len(), found: self.hi.len() });
        }
        if !(self.step > 0.0) || self.lo.iter().zip(&self.hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidInput("probe grid needs a finite box and a positive step".into()));
        }
        Ok(())
    }

    /// Grid of `{v / c}`; the step scales by `1/|c|`.
    pub fn divided(&self, c: f64) -> ProbeGrid {
        let (mut lo, mut hi) = (Vec::new(), Vec::new());
        for (a, b) in self.lo.iter().zip(&self.hi) {
            let (x, y) = (a / c, b / c);
            lo.push(x.min(y));
            hi.push(x.max(y));
        }
        ProbeGrid { lo, hi, step: self.step / c.abs(), relative_step: self.relative_step }
    }

    pub fn step_at(&self, l: f64) -> f64 {
        if self.relative_step > 0.0 {
            self.step.max(self.relative_step * l)
        } else {
            self.step
        }
    }

    /// Row-major lattice points `lo + k·step` inside the box.
    pub fn points(&self, l: f64) -> Vec<Vec<f64>> {
        let step = self.step_at(l);
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| {
                let k = ((b - a) / step + 1e-9).floor() as usize;
                (0..=k).map(|i| a + i as f64 * step).collect()
            })
            .collect();
        cartesian(&axes)
    }

    pub fn fingerprint(&self, l: f64) -> String {
        format!("grid{:?}..{:?}/step={}", self.lo, self.hi, self.step_at(l))
    }
}

pub(crate) fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(axes.len())];
    for ax in axes {
        let mut next = Vec::with_capacity(out.len() * ax.len());
        for p in &out {
            for v in ax {
                let mut q = p.clone();
                q.push(*v);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Translation domain: Λ, probe points of Λ′, the cube Ω and optional Λ″.
#[derive(Clone, Debug)]
pub struct Domain {
    pub n: usize,
    pub lambda: Region,
    pub lambda_prime: Region,
    pub probes: Vec<Vec<f64>>,
    pub omega: Cube,
    pub lambda_double_prime: Option<Region>,
    pub t_grid: ProbeGrid,
}

impl Domain {
    pub fn new(
        n: usize,
        lambda: Region,
        lambda_prime: Region,
        probes: Vec<Vec<f64>>,
        omega: Cube,
        t_grid: ProbeGrid,
    ) -> Result<Self> {
        let d = Domain { n, lambda, lambda_prime, probes, omega, lambda_double_prime: None, t_grid };
        d.validate()?;
        Ok(d)
    }

    /// `Λ = Λ′ = R^n`, `Ω = [0,1]^n`, sup grid over `[lo, hi]^n`.
    pub fn euclidean(n: usize, probes: Vec<Vec<f64>>, lo: f64, hi: f64, step: f64) -> Result<Self> {
        Domain::new(
            n,
            Region::whole(n),
            Region::whole(n),
            probes,
            Cube::unit(n),
            ProbeGrid::new(vec![lo; n], vec![hi; n], step)?,
        )
    }

    pub fn with_double_prime(mut self, r: Region) -> Result<Self> {
        if r.dim() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: r.dim() });
        }
        self.lambda_double_prime = Some(r);
        Ok(self)
    }

    pub fn with_probes(mut self, probes: Vec<Vec<f64>>) -> Result<Self> {
        self.probes = probes;
        self.validate()?;
        Ok(self)
    }

    pub fn with_grid(mut self, g: ProbeGrid) -> Result<Self> {
        self.t_grid = g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_omega(mut self, omega: Cube) -> Result<Self> {
        self.omega = omega;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        for d in [self.omega.dim(), self.lambda.dim(), self.lambda_prime.dim(), self.t_grid.lo.len()] {
            if d != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, found: d });
            }
        }
        if !(self.omega.volume() > 0.0) {
            return Err(Error::InvalidInput("omega must have positive volume".into()));
        }
        self.t_grid.validate()?;
        for p in &self.probes {
            if p.len() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, found: p.len() });
            }
            if !self.lambda_prime.contains(p) {
                return Err(Error::InvalidInput(format!("probe {p:?} lies outside {}", self.lambda_prime.label())));
            }
        }
        Ok(())
    }

    /// Sup grid at scale `l`, filtered by Λ.
    pub fn t_points(&self, l: f64) -> Result<Vec<Vec<f64>>> {
        let pts: Vec<Vec<f64>> = self.t_grid.points(l).into_iter().filter(|p| self.lambda.contains(p)).collect();
        if pts.is_empty() {
            return Err(Error::EmptyProbeGrid);
        }
        Ok(pts)
    }

    pub fn fingerprint(&self, l: f64) -> String {
        format!(
            "n={};omega={};lambda={};lambda'={};probes={};{}",
            self.n,
            self.omega.label(),
            self.lambda.label(),
            self.lambda_prime.label(),
            self.probes.len(),
            self.t_grid.fingerprint(l)
        )
    }
}

// ---------------------------------------------------------------------------
// Gallery

pub fn gallery_chi_half() -> FunctionHandle {
    FunctionHandle::real(1, "chi-half", |t| if (0.0..=0.5).contains(&t[0]) { 1.0 } else { 0.0 })
        .with_sup_bound(1.0)
        .with_breaks(vec![AxisBreaks::at(vec![0.0, 0.5])])
}

/// Indicator of the closed orthant `[0,∞)^n`.
pub fn gallery_heaviside(n: usize) -> Result<FunctionHandle> {
    if n == 0 {
        return Err(Error::InvalidInput("heaviside needs n >= 1".into()));
    }
    Ok(FunctionHandle::real(n, format!("heaviside-n{n}"), |t| if t.iter().all(|v| *v >= 0.0) { 1.0 } else { 0.0 })
        .with_sup_bound(1.0)
        .with_breaks(vec![AxisBreaks::at(vec![0.0]); n]))
}

/// `0` on `(-∞,0]`; on `(m−2, m]`, `m` even: `+√(m/2)` then `−√(m/2)`.
pub fn gallery_stryja_staircase() -> FunctionHandle {
    FunctionHandle::real(1, "stryja", |t| {
        let x = t[0];
        if x <= 0.0 {
            return 0.0;
        }
        let m = 2.0 * (x / 2.0).ceil();
        let a = (m / 2.0).sqrt();
        if x <= m - 1.0 {
            a
        } else {
            -a
        }
    })
    .with_breaks(vec![AxisBreaks::lattice(0.0, 1.0)])
}

/// `F(t_1..t_{2n}) = ∏_j [g_j(t_{j+n}) − g_j(t_j)]`.
pub fn gallery_product(g_list: &[FunctionHandle]) -> Result<FunctionHandle> {
    if g_list.is_empty() {
        return Err(Error::InvalidInput("product needs at least one factor".into()));
    }
    for g in g_list {
        if g.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: g.dim() });
        }
        if g.arity() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: g.arity() });
        }
    }
    let n = g_list.len();
    let gs: Vec<FunctionHandle> = g_list.to_vec();
    let sup = g_list.iter().map(|g| g.sup_bound().map(|b| 2.0 * b)).try_fold(1.0, |acc, b| b.map(|v| acc * v));
    let breaks: Vec<AxisBreaks> = g_list.iter().chain(g_list).map(|g| g.breaks()[0].clone()).collect();
    let bw = g_list.iter().map(|g| g.bandwidth()).fold(0.0, f64::max);
    let labels: Vec<&str> = g_list.iter().map(|g| g.label()).collect();
    let mut h = FunctionHandle::scalar(2 * n, format!("product[{}]", labels.join(",")), move |t| {
        let mut acc = Complex64::new(1.0, 0.0);
        for (j, g) in gs.iter().enumerate() {
            acc *= g.value(&t[j + n..j + n + 1]) - g.value(&t[j..j + 1]);
        }
        acc
    })
    .with_breaks(breaks)
    .with_bandwidth(bw);
    if let Some(s) = sup {
        h = h.with_sup_bound(s);
    }
    Ok(h)
}

pub fn sine() -> FunctionHandle {
    FunctionHandle::real(1, "sin", |t| t[0].sin()).with_sup_bound(1.0).with_bandwidth(1.0)
}

/// `e^{it} + e^{i√2 t}`.
pub fn gallery_trig_pair() -> FunctionHandle {
    crate::harmonic::TrigPolynomial::new(vec![
        (vec![1.0], vec![Complex64::new(1.0, 0.0)]),
        (vec![SQRT_2], vec![Complex64::new(1.0, 0.0)]),
    ])
    .expect("static polynomial")
    .to_handle("trig-pair")
}

/// `3 e^{i(t_1 − t_2)}`.
pub fn gallery_plane_wave_2d() -> FunctionHandle {
    crate::harmonic::TrigPolynomial::new(vec![(vec![1.0, -1.0], vec![Complex64::new(3.0, 0.0)])])
        .expect("static polynomial")
        .to_handle("plane-wave-2d")
}

/// Partial sum `Σ_{k=1}^{terms} 2^{−k} e^{i√k t}`.
pub fn sqrt_series(terms: usize) -> crate::harmonic::TrigPolynomial {
    let t = (1..=terms.max(1))
        .map(|k| (vec![(k as f64).sqrt()], vec![Complex64::new(0.5f64.powi(k as i32), 0.0)]))
        .collect();
    crate::harmonic::TrigPolynomial::new(t).expect("nonempty series")
}

/// Terms kept when the infinite series is represented numerically; the
/// omitted tail is below `2^{-60}` uniformly.
pub const SQRT_SERIES_TERMS: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthClaim {
    /// Key into [`CLAIM_CHECKS`].
    pub claim_id: String,
    pub params: String,
    pub expected: String,
}

#[derive(Clone, Debug)]
pub struct GalleryEntry {
    pub id: String,
    pub handle: FunctionHandle,
    pub truth: Vec<TruthClaim>,
    /// Complete nonzero Bohr–Fourier coefficients when known; every other
    /// frequency has coefficient 0.
    pub coefficients: Option<Vec<(Vec<f64>, Complex64)>>,
    pub weyl_bounded: bool,
}

fn claim(id: &str, params: &str, expected: &str) -> TruthClaim {
    TruthClaim { claim_id: id.into(), params: params.into(), expected: expected.into() }
}

pub const GALLERY_IDS: &[&str] = &[
    "chi-half",
    "heaviside-n1",
    "heaviside-n2",
    "stryja",
    "product",
    "trig-pair",
    "plane-wave-2d",
    "sqrt-series",
    "constant-one",
];

pub fn gallery_entry(id: &str) -> Result<GalleryEntry> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let e = match id {
        "chi-half" => GalleryEntry {
            id: id.into(),
            handle: gallery_chi_half(),
            truth: vec![
                claim("weyl-null", "p in {1,2}", "D_S_l = (1/(2l))^(1/p); Weyl norm ~ 0"),
                claim("sigma-threshold", "PAREN p=1 weight l^-sigma eps=0.1", "sigma=1 certified; sigma=0 not"),
                claim("empty-spectrum", "lambda in -5..5 step 0.5", "no coefficient above 0.05"),
                claim("bounded", "p=1", "Weyl bounded and Stepanov bounded"),
            ],
            coefficients: Some(vec![]),
            weyl_bounded: true,
        },
        "heaviside-n1" | "heaviside-n2" => {
            let n = if id.ends_with('1') { 1 } else { 2 };
            GalleryEntry {
                id: id.into(),
                handle: gallery_heaviside(n)?,
                truth: vec![
                    claim("difference-mass", "l > |tau|", "int |F(tau+u)-F(u)| <= 2^n l^(n-1) |tau|"),
                    claim("sigma-classes", "PAREN p=1 weight l^-sigma", "limsup class for sigma>(n-1)/p; equi fails"),
                    claim("bounded", "p=1", "Weyl bounded and Stepanov bounded"),
                ],
                coefficients: None,
                weyl_bounded: true,
            }
        }
        "stryja" => GalleryEntry {
            id: id.into(),
            handle: gallery_stryja_staircase(),
            truth: vec![claim("unbounded", "p=1", "Weyl unbounded and Stepanov unbounded")],
            coefficients: None,
            weyl_bounded: false,
        },
        "product" => GalleryEntry {
            id: id.into(),
            handle: gallery_product(&[sine()])?,
            truth: vec![
                claim("coefficients", "sin t2 - sin t1", "symmetric and asymmetric means agree"),
                claim("bounded", "p=1", "Weyl bounded and Stepanov bounded"),
            ],
            coefficients: Some(vec![
                (vec![0.0, 1.0], c(0.0, -0.5)),
                (vec![0.0, -1.0], c(0.0, 0.5)),
                (vec![1.0, 0.0], c(0.0, 0.5)),
                (vec![-1.0, 0.0], c(0.0, -0.5)),
            ]),
            weyl_bounded: true,
        },
        "trig-pair" => GalleryEntry {
            id: id.into(),
            handle: gallery_trig_pair(),
            truth: vec![
                claim("shift-independence", "lambda=1 T=200", "deviation < 0.05"),
                claim("bounded", "p=1", "Weyl bounded and Stepanov bounded"),
            ],
            coefficients: Some(vec![(vec![1.0], c(1.0, 0.0)), (vec![SQRT_2], c(1.0, 0.0))]),
            weyl_bounded: true,
        },
        "plane-wave-2d" => GalleryEntry {
            id: id.into(),
            handle: gallery_plane_wave_2d(),
            truth: vec![
                claim("coefficients", "lambda=(1,-1)", "P = 3"),
                claim("bounded", "p=1", "Weyl bounded and Stepanov bounded"),
            ],
            coefficients: Some(vec![(vec![1.0, -1.0], c(3.0, 0.0))]),
            weyl_bounded: true,
        },
        "sqrt-series" => {
            let p = sqrt_series(SQRT_SERIES_TERMS);
            GalleryEntry {
                id: id.into(),
                handle: p.to_handle("sqrt-series"),
                truth: vec![
                    claim("limit-closure", "partial sums F_m", "||F_m - F||_W < 2^(1-m); equi-Weyl at eps=0.1"),
                    claim("bounded", "p=1", "Weyl bounded and Stepanov bounded"),
                ],
                coefficients: Some(p.terms().iter().map(|(l, cv)| (l.clone(), cv[0])).collect()),
                weyl_bounded: true,
            }
        }
        "constant-one" => GalleryEntry {
            id: id.into(),
            handle: FunctionHandle::constant(1, c(1.0, 0.0)).with_label("constant-one"),
            truth: vec![claim("bounded", "p=1", "Weyl bounded and Stepanov bounded")],
            coefficients: Some(vec![(vec![0.0], c(1.0, 0.0))]),
            weyl_bounded: true,
        },
        other => return Err(Error::InvalidInput(format!("unknown gallery id `{other}`"))),
    };
    Ok(e)
}

pub fn gallery() -> Vec<GalleryEntry> {
    GALLERY_IDS.iter().map(|id| gallery_entry(id).expect("gallery ids are static")).collect()
}

/// Acceptance check that exercises each claim id.
pub const CLAIM_CHECKS: &[(&str, &str)] = &[
    ("weyl-null", "weyl-null"),
    ("sigma-threshold", "chi-half-classes"),
    ("empty-spectrum", "empty-spectrum"),
    ("bounded", "metric-calculus"),
    ("unbounded", "metric-calculus"),
    ("difference-mass", "heaviside"),
    ("sigma-classes", "heaviside"),
    ("coefficients", "bohr-fourier"),
    ("shift-independence", "bohr-fourier"),
    ("limit-closure", "limit-closure"),
];

pub fn acceptance_check(claim_id: &str) -> Option<&'static str> {
    CLAIM_CHECKS.iter().find(|(c, _)| *c == claim_id).map(|(_, a)| *a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(f: &FunctionHandle, t: &[f64]) -> f64 {
        f.value(t).re
    }

    #[test]
    fn chi_half_values() {
        let f = gallery_chi_half();
        assert_eq!(re(&f, &[0.25]), 1.0);
        assert_eq!(re(&f, &[0.75]), 0.0);
        let cube = Cube::new(vec![-2.0], vec![5.0]).unwrap();
        let r = crate::quadrature::integrate(&cube, &f.hints(&cube), &Default::default(), |p| re(&f, p)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-9);
    }

    #[test]
    fn heaviside_values() {
        let h = gallery_heaviside(2).unwrap();
        assert_eq!(re(&h, &[1.0, 1.0]), 1.0);
        assert_eq!(re(&h, &[1.0, -1.0]), 0.0);
        assert_eq!(re(&gallery_heaviside(1).unwrap(), &[0.0]), 1.0);
        assert!(gallery_heaviside(0).is_err());
    }

    #[test]
    fn stryja_values() {
        let s = gallery_stryja_staircase();
        assert_eq!(re(&s, &[1.5]), -1.0);
        assert!((re(&s, &[2.5]) - SQRT_2).abs() < 1e-15);
        assert_eq!(re(&s, &[-3.0]), 0.0);
        assert_eq!(re(&s, &[0.5]), 1.0);
        assert_eq!(re(&s, &[2.0]), -1.0);
    }

    #[test]
    fn product_values() {
        let id = FunctionHandle::real(1, "id", |t| t[0]);
        let p = gallery_product(&[id]).unwrap();
        assert_eq!(re(&p, &[1.0, 3.0]), 2.0);
        let k = FunctionHandle::real(1, "k", |_| 4.0);
        let pk = gallery_product(&[k]).unwrap();
        assert_eq!(re(&pk, &[0.3, -7.0]), 0.0);
        let p2 = gallery_product(&[sine(), sine()]).unwrap();
        let h = std::f64::consts::FRAC_PI_2;
        assert!((re(&p2, &[0.0, 0.0, h, h]) - 1.0).abs() < 1e-15);
        assert_eq!(p2.sup_bound(), Some(4.0));
        assert!(gallery_product(&[gallery_heaviside(2).unwrap()]).is_err());
    }

    #[test]
    fn evaluation_is_bit_reproducible() {
        for e in gallery() {
            let t: Vec<f64> = (0..e.handle.dim()).map(|i| 0.37 + 1.3 * i as f64).collect();
            let a = e.handle.eval(&t, 0);
            let b = e.handle.eval(&t, 0);
            for (x, y) in a.iter().zip(b.iter()) {
                assert_eq!(x.re.to_bits(), y.re.to_bits());
                assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }

    #[test]
    fn every_claim_maps_to_a_check() {
        for e in gallery() {
            assert!(!e.truth.is_empty());
            for c in &e.truth {
                assert!(acceptance_check(&c.claim_id).is_some(), "{}", c.claim_id);
            }
        }
    }

    #[test]
    fn sup_bounds_hold_on_samples() {
        let pts: Vec<Vec<f64>> = (0..200).map(|i| vec![-20.0 + 0.2 * i as f64]).collect();
        for e in gallery().into_iter().filter(|e| e.handle.dim() == 1) {
            assert!(e.handle.respects_sup_bound(&pts), "{}", e.id);
        }
    }

    #[test]
    fn shifted_breaks_follow_translation() {
        let f = gallery_chi_half().shifted(&[0.3]);
        assert_eq!(re(&f, &[-0.2]), 1.0);
        let cube = Cube::new(vec![-1.0], vec![2.0]).unwrap();
        let mut b = f.hints(&cube).breaks[0].clone();
        b.sort_by(|a, c| a.partial_cmp(c).unwrap());
        assert!((b[0] + 0.3).abs() < 1e-15 && (b[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn lattice_breaks_enumerate() {
        let b = AxisBreaks::lattice(0.0, 1.0).within(-0.5, 3.5);
        assert_eq!(b, vec![0.0, 1.0, 2.0, 3.0]);
        let s = AxisBreaks::lattice(0.0, 1.0).scaled(-2.0).within(-1.2, 0.0);
        assert_eq!(s, vec![-1.0, -0.5]);
    }

    #[test]
    fn dilation_moves_parameters_and_breaks() {
        let f = FunctionHandle::new(1, 1, "fx", |t, x, out| out[0] = Complex64::new(t[0] * x[0], 0.0))
            .with_params(vec![vec![2.0]]);
        let g = f.dilated(3.0, 0.5).unwrap();
        assert_eq!(g.params()[0], vec![4.0]);
        assert_eq!(g.value(&[1.0]).re, 6.0);
    }

    #[test]
    fn domain_validation() {
        assert!(Domain::euclidean(1, vec![vec![3.0]], -5.0, 5.0, 1.0).is_ok());
        let d = Domain::new(
            1,
            Region::whole(1),
            Region::orthant(1),
            vec![vec![-1.0]],
            Cube::unit(1),
            ProbeGrid::new(vec![0.0], vec![1.0], 0.5).unwrap(),
        );
        assert!(d.is_err());
        let flat = Cube::new(vec![0.0], vec![0.0]).unwrap();
        let d2 = Domain::euclidean(1, vec![], 0.0, 1.0, 0.5).unwrap().with_omega(flat);
        assert!(d2.is_err());
        let d3 = Domain::euclidean(2, vec![], -1.0, 1.0, 1.0).unwrap();
        assert_eq!(d3.t_points(1.0).unwrap().len(), 9);
    }
}

//! Tensor-product composite midpoint quadrature on axis-aligned boxes.
//!
//! Every axis is split at declared discontinuities before nodes are placed,
//! so piecewise-constant integrands with axis-aligned jumps are integrated
//! exactly at any resolution. Grid doubling continues until the relative
//! change drops below `refine_tol`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_SEGMENTS: usize = 1 << 20;
const PARALLEL_THRESHOLD: usize = 4096;
/// Absolute slack in the doubling test; keeps round-off near zero from forcing refinement.
pub const ABS_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub points_per_axis: usize,
    pub refine_tol: f64,
    pub max_refinements: u32,
    /// Upper bound on nodes per rule; doubling stops before exceeding it.
    pub max_points: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { points_per_axis: 16, refine_tol: 1e-9, max_refinements: 10, max_points: 1 << 22 }
    }
}

impl QuadratureConfig {
    pub fn new(points_per_axis: usize, refine_tol: f64, max_refinements: u32) -> Result<Self> {
        let q = QuadratureConfig { points_per_axis, refine_tol, max_refinements, ..Default::default() };
        q.validate()?;
        Ok(q)
    }

    /// Cheap settings for search loops over many candidate translations.
    pub fn coarse() -> Self {
        QuadratureConfig { points_per_axis: 8, refine_tol: 1e-6, max_refinements: 4, max_points: 1 << 20 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_axis < 2 {
            return Err(Error::InvalidInput("points_per_axis must be at least 2".into()));
        }
        if !(self.refine_tol > 0.0) || !self.refine_tol.is_finite() {
            return Err(Error::InvalidInput("refine_tol must be positive and finite".into()));
        }
        if self.max_points == 0 {
            return Err(Error::InvalidInput("max_points must be positive".into()));
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "midpoint:m={}:tol={:e}:refine={}:cap={}",
            self.points_per_axis, self.refine_tol, self.max_refinements, self.max_points
        )
    }
}

/// Axis-aligned box `lo + [0, side]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    lo: Vec<f64>,
    side: Vec<f64>,
}

impl Cube {
    pub fn new(lo: Vec<f64>, side: Vec<f64>) -> Result<Self> {
        if lo.is_empty() {
            return Err(Error::InvalidInput("cube dimension must be positive".into()));
        }
        if lo.len() != side.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: side.len() });
        }
        if lo.iter().chain(side.iter()).any(|v| !v.is_finite()) || side.iter().any(|s| *s < 0.0) {
            return Err(Error::InvalidInput("cube corners must be finite with nonnegative sides".into()));
        }
        Ok(Cube { lo, side })
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), found: hi.len() });
        }
        let side = lo.iter().zip(hi).map(|(a, b)| b - a).collect();
        Cube::new(lo.to_vec(), side)
    }

    pub fn unit(n: usize) -> Self {
        Cube { lo: vec![0.0; n], side: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn side(&self) -> &[f64] {
        &self.side
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.lo[axis] + self.side[axis]
    }

    pub fn volume(&self) -> f64 {
        self.side.iter().product()
    }

    /// `t + l·self`.
    pub fn cell(&self, t: &[f64], l: f64) -> Cube {
        debug_assert_eq!(t.len(), self.dim());
        Cube {
            lo: self.lo.iter().zip(t).map(|(a, ti)| ti + l * a).collect(),
            side: self.side.iter().map(|s| l * s).collect(),
        }
    }

    /// `{u / c : u ∈ self}` for c ≠ 0.
    pub fn divided(&self, c: f64) -> Cube {
        let mut lo = Vec::with_capacity(self.dim());
        let mut side = Vec::with_capacity(self.dim());
        for i in 0..self.dim() {
            let a = self.lo[i] / c;
            let b = self.hi(i) / c;
            lo.push(a.min(b));
            side.push((b - a).abs());
        }
        Cube { lo, side }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && (0..self.dim()).all(|i| p[i] >= self.lo[i] && p[i] <= self.hi(i))
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> =
            (0..self.dim()).map(|i| format!("[{},{}]", self.lo[i], self.hi(i))).collect();
        parts.join("x")
    }
}

/// Structural information about an integrand: per-axis jump locations and
/// an angular-frequency bound for oscillatory parts.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Hints {
    pub breaks: Vec<Vec<f64>>,
    pub bandwidth: f64,
}

impl Hints {
    pub fn none(n: usize) -> Self {
        Hints { breaks: vec![Vec::new(); n], bandwidth: 0.0 }
    }

    pub fn merge(mut self, other: Hints) -> Hints {
        if self.breaks.len() < other.breaks.len() {
            self.breaks.resize(other.breaks.len(), Vec::new());
        }
        for (mine, theirs) in self.breaks.iter_mut().zip(other.breaks) {
            mine.extend(theirs);
        }
        self.bandwidth = self.bandwidth.max(other.bandwidth);
        self
    }
}

fn axis_rule(lo: f64, side: f64, m: usize, breaks: &[f64], bandwidth: f64) -> Vec<(f64, f64)> {
    if side <= 0.0 {
        return vec![(lo, 0.0)];
    }
    let hi = lo + side;
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    if cuts.len() > MAX_SEGMENTS {
        cuts.clear();
    }
    // m/2 nodes per oscillation, so grid doubling also refines oscillatory
    // integrands; the default m = 16 gives 8.
    let osc = (0.5 * m as f64 * bandwidth * side / std::f64::consts::TAU).ceil();
    let total = (m as f64).max(osc);
    let mut nodes = Vec::with_capacity(total as usize + cuts.len() + 1);
    let mut a = lo;
    for b in cuts.into_iter().chain(std::iter::once(hi)) {
        let len = b - a;
        if len > 0.0 {
            // The m/8 floor doubles with m, so every doubling refines every
            // segment; otherwise short segments can stall and fake convergence.
            let k = ((total * len / side).ceil() as usize).max(m / 8).max(1);
            let h = len / k as f64;
            for j in 0..k {
                nodes.push((a + (j as f64 + 0.5) * h, h));
            }
        }
        a = b;
    }
    nodes
}

/// Nodes and weights of a tensor midpoint rule; iteration is row-major with
/// the last axis fastest.
#[derive(Clone, Debug)]
pub struct TensorRule {
    axes: Vec<Vec<(f64, f64)>>,
    len: usize,
}

impl TensorRule {
    pub fn new(cube: &Cube, m: usize, hints: &Hints) -> Self {
        let axes: Vec<Vec<(f64, f64)>> = (0..cube.dim())
            .map(|i| {
                let br = hints.breaks.get(i).map(|b| b.as_slice()).unwrap_or(&[]);
                axis_rule(cube.lo()[i], cube.side()[i], m, br, hints.bandwidth)
            })
            .collect();
        let len = axes.iter().map(|a| a.len()).product();
        TensorRule { axes, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Node `i` in iteration order.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.axes.len()];
        self.node(i, &mut p);
        p
    }

    fn node(&self, mut i: usize, p: &mut [f64]) -> f64 {
        let mut w = 1.0;
        for d in (0..self.axes.len()).rev() {
            let ax = &self.axes[d];
            let (x, h) = ax[i % ax.len()];
            i /= ax.len();
            p[d] = x;
            w *= h;
        }
        w
    }

    /// `(weight, f(node))` for every node, in iteration order.
    pub fn map_nodes<T, F>(&self, f: F) -> Vec<(f64, T)>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync,
    {
        let n = self.axes.len();
        if self.len < PARALLEL_THRESHOLD {
            let mut p = vec![0.0; n];
            (0..self.len)
                .map(|i| {
                    let w = self.node(i, &mut p);
                    (w, f(&p))
                })
                .collect()
        } else {
            (0..self.len)
                .into_par_iter()
                .map_init(
                    || vec![0.0; n],
                    |p, i| {
                        let w = self.node(i, p);
                        (w, f(p))
                    },
                )
                .collect()
        }
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
        self.map_nodes(f).iter().map(|(w, v)| w * v).sum()
    }

    pub fn integrate_complex(&self, f: impl Fn(&[f64]) -> Complex64 + Sync) -> Complex64 {
        self.map_nodes(f).iter().map(|(w, v)| v * *w).sum()
    }
}

/// Values that grid doubling can compare.
pub trait Refinable: Copy {
    fn gap(a: Self, b: Self) -> f64;
    fn size(a: Self) -> f64;
    /// Richardson step `(4b − a)/3` removing the `h²` term of the midpoint rule.
    fn extrapolate(a: Self, b: Self) -> Self;
}

impl Refinable for f64 {
    fn gap(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs()
        }
    }
    fn size(a: f64) -> f64 {
        a.abs()
    }
    fn extrapolate(a: f64, b: f64) -> f64 {
        (4.0 * b - a) / 3.0
    }
}

impl Refinable for Complex64 {
    fn gap(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm()
    }
    fn size(a: Complex64) -> f64 {
        a.norm()
    }
    fn extrapolate(a: Complex64, b: Complex64) -> Complex64 {
        (b * 4.0 - a) / 3.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refined<T> {
    pub value: T,
    /// `(points_per_axis, value)` for every evaluated resolution.
    pub trace: Vec<(usize, T)>,
    pub converged: bool,
}

/// Grid doubling driver. `eval(m)` returns `None` when the rule at `m`
/// would exceed the point cap.
///
/// Converges when two raw levels agree, or when two successive Richardson
/// values agree; the extrapolated value is then returned.
pub fn refine<T, F>(cfg: &QuadratureConfig, mut eval: F) -> Result<Refined<T>>
where
    T: Refinable,
    F: FnMut(usize) -> Result<Option<T>>,
{
    let mut m = cfg.points_per_axis;
    let mut v = match eval(m)? {
        Some(v) => v,
        None => return Err(Error::InvalidInput("quadrature rule exceeds max_points at base resolution".into())),
    };
    let mut trace = vec![(m, v)];
    let mut rich: Option<T> = None;
    for _ in 0..cfg.max_refinements {
        m *= 2;
        let Some(v2) = eval(m)? else { break };
        trace.push((m, v2));
        let scale = T::size(v).max(T::size(v2));
        if T::gap(v, v2) <= cfg.refine_tol * scale + ABS_FLOOR {
            return Ok(Refined { value: v2, trace, converged: true });
        }
        let r2 = T::extrapolate(v, v2);
        if let Some(r) = rich {
            if T::gap(r, r2) <= cfg.refine_tol * T::size(r).max(T::size(r2)) + ABS_FLOOR {
                return Ok(Refined { value: r2, trace, converged: true });
            }
        }
        rich = Some(r2);
        v = v2;
    }
    Ok(Refined { value: v, trace, converged: false })
}

/// Refined integral of a real integrand over `cube`.
pub fn integrate(
    cube: &Cube,
    hints: &Hints,
    cfg: &QuadratureConfig,
    f: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<Refined<f64>> {
    refine(cfg, |m| {
        let rule = TensorRule::new(cube, m, hints);
        if rule.len() > cfg.max_points {
            return Ok(None);
        }
        Ok(Some(rule.integrate(&f)))
    })
}

/// Refined integral of a complex integrand over `cube`.
pub fn integrate_complex(
    cube: &Cube,
    hints: &Hints,
    cfg: &QuadratureConfig,
    f: impl Fn(&[f64]) -> Complex64 + Sync,
) -> Result<Refined<Complex64>> {
    refine(cfg, |m| {
        let rule = TensorRule::new(cube, m, hints);
        if rule.len() > cfg.max_points {
            return Ok(None);
        }
        Ok(Some(rule.integrate_complex(&f)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_function_is_exact_with_breaks() {
        let cube = Cube::new(vec![-0.3], vec![1.7]).unwrap();
        let hints = Hints { breaks: vec![vec![0.0, 0.5]], bandwidth: 0.0 };
        let rule = TensorRule::new(&cube, 2, &hints);
        let v = rule.integrate(|p| if (0.0..=0.5).contains(&p[0]) { 1.0 } else { 0.0 });
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_to_volume() {
        let cube = Cube::new(vec![1.0, -2.0, 0.5], vec![2.0, 3.0, 0.25]).unwrap();
        let hints = Hints { breaks: vec![vec![1.3, 2.9], vec![], vec![0.6]], bandwidth: 0.0 };
        let rule = TensorRule::new(&cube, 5, &hints);
        let v = rule.integrate(|_| 1.0);
        assert!((v - cube.volume()).abs() < 1e-13);
    }

    #[test]
    fn doubling_converges_on_smooth_integrand() {
        let cube = Cube::unit(1);
        let r = integrate(&cube, &Hints::none(1), &QuadratureConfig::default(), |p| p[0] * p[0]).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn bandwidth_raises_node_count() {
        let cube = Cube::new(vec![0.0], vec![100.0]).unwrap();
        let plain = TensorRule::new(&cube, 16, &Hints::none(1));
        let osc = TensorRule::new(&cube, 16, &Hints { breaks: vec![vec![]], bandwidth: 3.0 });
        assert_eq!(plain.len(), 16);
        assert!(osc.len() >= 380);
    }

    #[test]
    fn parallel_and_sequential_paths_agree() {
        let cube = Cube::unit(2);
        let rule = TensorRule::new(&cube, 100, &Hints::none(2));
        assert!(rule.len() >= PARALLEL_THRESHOLD);
        let a = rule.integrate(|p| (p[0] * 3.0).sin() * p[1]);
        let b = rule.integrate(|p| (p[0] * 3.0).sin() * p[1]);
        assert_eq!(a.to_bits(), b.to_bits());
        let exact = (1.0 - 3f64.cos()) / 3.0 * 0.5;
        assert!((a - exact).abs() < 1e-4);
    }

    #[test]
    fn divided_cube_handles_negative_factor() {
        let c = Cube::unit(1).divided(-2.0);
        assert_eq!(c.lo(), &[-0.5]);
        assert_eq!(c.side(), &[0.5]);
    }
}

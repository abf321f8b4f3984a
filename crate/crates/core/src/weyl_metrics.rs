//! Stepanov and Weyl distances over translated cubes, boundedness verdicts,
//! Weyl normality and the l → ∞ machinery.
//!
//! Every supremum over Λ is a maximum over the probe grid of the domain; the
//! grid fingerprint travels with every result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap_certifier::{self, ClassSpec, Outcome, Scales, SearchConfig};
use crate::error::{Error, Result};
use crate::function_model::{Domain, FunctionHandle, ProbeGrid};
use crate::quadrature::{Cube, QuadratureConfig};
use crate::vexp_lebesgue::{norm_of, ExponentField, NORM_TOL};
use crate::Complex64;

/// Relative slack used by every inequality check in this module.
pub const REL_TOL: f64 = 1e-6;
const ABS_TOL: f64 = 1e-12;
/// A sequence counts as diverging when its tail strictly increases and its
/// last value is at least this multiple of its first.
pub const GROWTH_RATIO: f64 = 1.5;
/// Probe boxes used by the boundedness verdicts are scaled by `4^k`.
const BOX_FACTORS: [f64; 4] = [1.0, 4.0, 16.0, 64.0];

pub(crate) fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + REL_TOL) + ABS_TOL
}

/// Geometric scale list with a tail window for the Cauchy test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LSchedule {
    pub scales: Vec<f64>,
    pub tail: usize,
    pub tol: f64,
}

impl LSchedule {
    /// `l0·r^k` for `k = 0..=steps`.
    pub fn geometric(l0: f64, r: f64, steps: usize, tail: usize, tol: f64) -> Result<Self> {
        if !(l0 > 0.0) || !(r > 1.0) || steps < 2 || !l0.is_finite() || !r.is_finite() {
            return Err(Error::InvalidSchedule(format!("need l0 > 0, r > 1, K >= 2 (got {l0}, {r}, {steps})")));
        }
        LSchedule::from_scales((0..=steps).map(|k| l0 * r.powi(k as i32)).collect(), tail, tol)
    }

    pub fn from_scales(scales: Vec<f64>, tail: usize, tol: f64) -> Result<Self> {
        if scales.len() < 3 {
            return Err(Error::InvalidSchedule("at least three scales are required".into()));
        }
        if scales.iter().any(|l| !(*l > 0.0) || !l.is_finite()) || scales.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule("scales must be positive, finite and strictly increasing".into()));
        }
        if tail < 2 || tail > scales.len() {
            return Err(Error::InvalidSchedule(format!("tail window {tail} outside 2..={}", scales.len())));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidSchedule("tolerance must be positive".into()));
        }
        Ok(LSchedule { scales, tail, tol })
    }

    pub fn tail_scales(&self) -> &[f64] {
        &self.scales[self.scales.len() - self.tail..]
    }

    pub fn last(&self) -> f64 {
        *self.scales.last().expect("schedules are non-empty")
    }

    pub fn fingerprint(&self) -> String {
        format!("scales={:?};tail={};tol={}", self.scales, self.tail, self.tol)
    }
}

/// Ordered `(scale, value)` samples with the tail-window Cauchy test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub samples: Vec<(f64, f64)>,
    pub cauchy_gap: f64,
    pub limit_estimate: f64,
    pub converged: bool,
    pub tol: f64,
    pub tail: usize,
}

fn check_scales(scales: impl Iterator<Item = f64>) -> Result<()> {
    let v: Vec<f64> = scales.collect();
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSchedule("report scales must be strictly increasing".into()));
    }
    Ok(())
}

impl ConvergenceReport {
    pub fn from_samples(samples: Vec<(f64, f64)>, tail: usize, tol: f64) -> Result<Self> {
        check_scales(samples.iter().map(|s| s.0))?;
        if samples.is_empty() {
            return Ok(ConvergenceReport { samples, cauchy_gap: 0.0, limit_estimate: 0.0, converged: false, tol, tail });
        }
        let w = &samples[samples.len() - tail.clamp(1, samples.len())..];
        let hi = w.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let lo = w.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
        let cauchy_gap = if w.len() < 2 { 0.0 } else { hi - lo };
        let limit_estimate = samples.last().unwrap().1;
        Ok(ConvergenceReport { cauchy_gap, limit_estimate, converged: w.len() >= 2 && cauchy_gap < tol, samples, tol, tail })
    }

    /// Report on complex samples; stored values are moduli, the gap uses
    /// complex differences.
    pub fn from_complex(samples: &[(f64, Complex64)], tail: usize, tol: f64) -> Result<Self> {
        let mut r = ConvergenceReport::from_samples(samples.iter().map(|(s, v)| (*s, v.norm())).collect(), tail, tol)?;
        if samples.len() >= 2 {
            let w = &samples[samples.len() - tail.clamp(1, samples.len())..];
            let mut gap: f64 = 0.0;
            for (i, a) in w.iter().enumerate() {
                for b in &w[i + 1..] {
                    gap = gap.max((a.1 - b.1).norm());
                }
            }
            r.cauchy_gap = gap;
            r.converged = w.len() >= 2 && gap < tol;
        }
        Ok(r)
    }

    /// Values of the samples, in scale order.
    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.1).collect()
    }

    pub fn growing(&self) -> bool {
        grows(&self.values())
    }
}

/// Strictly increasing with total growth at least [`GROWTH_RATIO`].
pub fn grows(v: &[f64]) -> bool {
    if v.len() < 2 || v.windows(2).any(|w| !(w[1] > w[0])) {
        return false;
    }
    let (first, last) = (v[0], v[v.len() - 1]);
    if first <= 0.0 {
        return last > 0.0;
    }
    last >= GROWTH_RATIO * first
}

fn check_exponent(p: f64) -> Result<ExponentField> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::ExponentMismatch(format!("distance exponent must lie in [1, inf), got {p}")));
    }
    ExponentField::constant(p)
}

fn check_pair(f: &FunctionHandle, g: &FunctionHandle, omega: &Cube) -> Result<()> {
    if f.dim() != omega.dim() {
        return Err(Error::DimensionMismatch { expected: omega.dim(), found: f.dim() });
    }
    if g.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: g.dim() });
    }
    if g.arity() != f.arity() {
        return Err(Error::DimensionMismatch { expected: f.arity(), found: g.arity() });
    }
    Ok(())
}

/// `l^{-n/p} ‖F(t+·;x) − G(t+·;x)‖_{L^p(lΩ)}` for one cell.
pub fn scaled_cell_distance(
    f: &FunctionHandle,
    g: &FunctionHandle,
    p: &ExponentField,
    l: f64,
    omega: &Cube,
    t: &[f64],
    xi: usize,
    q: &QuadratureConfig,
) -> Result<f64> {
    let pv = p.as_constant().expect("distances use constant exponents");
    let cell = omega.cell(t, l);
    let hints = f.hints(&cell).merge(g.hints(&cell));
    let nv = norm_of(|u| f.gap_norm(u, g, u, xi), &hints, p, &cell, q, NORM_TOL)?;
    Ok(l.powf(-(omega.dim() as f64) / pv) * nv.value)
}

/// Maximum of the scaled cell distance over explicit probe points and
/// parameter indices.
#[allow(clippy::too_many_arguments)]
pub fn stepanov_distance_at(
    f: &FunctionHandle,
    g: &FunctionHandle,
    p: f64,
    l: f64,
    omega: &Cube,
    t_points: &[Vec<f64>],
    b: &[usize],
    q: &QuadratureConfig,
) -> Result<f64> {
    check_pair(f, g, omega)?;
    let pe = check_exponent(p)?;
    if !(l > 0.0) {
        return Err(Error::InvalidInput(format!("scale l = {l} must be positive")));
    }
    if t_points.is_empty() {
        return Err(Error::EmptyProbeGrid);
    }
    if b.is_empty() || b.iter().any(|&x| x >= f.params().len()) {
        return Err(Error::InvalidInput("parameter index set is empty or out of range".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..t_points.len()).flat_map(|i| b.iter().map(move |&x| (i, x))).collect();
    let vals = jobs
        .par_iter()
        .map(|&(i, x)| scaled_cell_distance(f, g, &pe, l, omega, &t_points[i], x, q))
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// `D_{S_l}(F, G)` over the probe grid of `domain`.
pub fn stepanov_distance(
    f: &FunctionHandle,
    g: &FunctionHandle,
    p: f64,
    l: f64,
    domain: &Domain,
    b: &[usize],
    q: &QuadratureConfig,
) -> Result<f64> {
    let t = domain.t_points(l)?;
    stepanov_distance_at(f, g, p, l, &domain.omega, &t, b, q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylEstimate {
    pub value: f64,
    pub report: ConvergenceReport,
    /// The limit estimate does not exceed any sampled `D_{S_l}`.
    pub dominated: bool,
    pub grid: String,
}

/// `D_W(F, G)` as the tail value of `D_{S_l}` along `schedule`.
pub fn weyl_distance(
    f: &FunctionHandle,
    g: &FunctionHandle,
    p: f64,
    schedule: &LSchedule,
    domain: &Domain,
    b: &[usize],
    q: &QuadratureConfig,
) -> Result<WeylEstimate> {
    let mut samples = Vec::with_capacity(schedule.scales.len());
    for &l in &schedule.scales {
        samples.push((l, stepanov_distance(f, g, p, l, domain, b, q)?));
    }
    let report = ConvergenceReport::from_samples(samples, schedule.tail, schedule.tol)?;
    let value = report.limit_estimate;
    let dominated = report.samples.iter().all(|s| within(value, s.1));
    Ok(WeylEstimate { value, report, dominated, grid: domain.fingerprint(schedule.last()) })
}

/// `sup_t ‖F(t+·)‖_{L^p(Ω)}` over the probe grid.
pub fn stepanov_bounded_sup(f: &FunctionHandle, p: f64, domain: &Domain, b: &[usize], q: &QuadratureConfig) -> Result<f64> {
    let zero = FunctionHandle::zero(f.dim(), f.arity());
    stepanov_distance(f, &zero, p, 1.0, domain, b, q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessVerdict {
    pub weyl_bounded: bool,
    pub stepanov_bounded: bool,
    /// `D_{S_l}(F, 0)` along the schedule on the declared grid.
    pub weyl_report: ConvergenceReport,
    /// `(box factor, D_{S_l}(F,0))` at the last scale on expanding grids.
    pub weyl_growth: Vec<(f64, f64)>,
    /// `(box factor, Stepanov sup)` on expanding grids.
    pub stepanov_growth: Vec<(f64, f64)>,
}

fn expanded(domain: &Domain, c: f64) -> Result<Domain> {
    let g = &domain.t_grid;
    let grid = ProbeGrid {
        lo: g.lo.iter().map(|v| v * c).collect(),
        hi: g.hi.iter().map(|v| v * c).collect(),
        step: g.step * c,
        relative_step: g.relative_step,
    };
    domain.clone().with_grid(grid)
}

/// Weyl and Stepanov boundedness at desk scale.
///
/// Both verdicts come from separate computations: the Weyl route tracks the
/// schedule tail on expanding probe boxes, the Stepanov route tracks unit
/// cells. Boundedness means the sequence over expanding boxes does not grow.
/// The two must agree; disagreement is reported as an error.
pub fn weyl_bounded_check(
    f: &FunctionHandle,
    p: f64,
    schedule: &LSchedule,
    domain: &Domain,
    b: &[usize],
    q: &QuadratureConfig,
) -> Result<BoundednessVerdict> {
    let zero = FunctionHandle::zero(f.dim(), f.arity());
    let weyl_report = weyl_distance(f, &zero, p, schedule, domain, b, q)?.report;
    let mut weyl_growth = vec![(1.0, weyl_report.limit_estimate)];
    let mut stepanov_growth = Vec::new();
    for &c in &BOX_FACTORS {
        let d = expanded(domain, c)?;
        if c > 1.0 {
            weyl_growth.push((c, stepanov_distance(f, &zero, p, schedule.last(), &d, b, q)?));
        }
        stepanov_growth.push((c, stepanov_bounded_sup(f, p, &d, b, q)?));
    }
    let wv: Vec<f64> = weyl_growth.iter().map(|s| s.1).collect();
    let sv: Vec<f64> = stepanov_growth.iter().map(|s| s.1).collect();
    let weyl_bounded = !grows(&wv);
    let stepanov_bounded = !grows(&sv);
    if weyl_bounded != stepanov_bounded {
        return Err(Error::VerdictMismatch { weyl: weyl_bounded, stepanov: stepanov_bounded });
    }
    Ok(BoundednessVerdict { weyl_bounded, stepanov_bounded, weyl_report, weyl_growth, stepanov_growth })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleRow {
    pub l: f64,
    pub fg: f64,
    pub fh: f64,
    pub hg: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleCheck {
    pub rows: Vec<TriangleRow>,
    /// The inequality between the three limit estimates.
    pub limit_holds: bool,
    pub pass: bool,
}

/// `D(F,G) ≤ D(F,H) + D(H,G)` at every scale and at the limit estimate.
#[allow(clippy::too_many_arguments)]
pub fn triangle_check(
    f: &FunctionHandle,
    g: &FunctionHandle,
    h: &FunctionHandle,
    p: f64,
    schedule: &LSchedule,
    domain: &Domain,
    b: &[usize],
    q: &QuadratureConfig,
) -> Result<TriangleCheck> {
    let mut rows = Vec::new();
    for &l in &schedule.scales {
        let fg = stepanov_distance(f, g, p, l, domain, b, q)?;
        let fh = stepanov_distance(f, h, p, l, domain, b, q)?;
        let hg = stepanov_distance(h, g, p, l, domain, b, q)?;
        rows.push(TriangleRow { l, fg, fh, hg, holds: within(fg, fh + hg) });
    }
    let last = rows.last().expect("schedule is non-empty");
    let limit_holds = within(last.fg, last.fh + last.hg);
    let pass = limit_holds && rows.iter().all(|r| r.holds);
    Ok(TriangleCheck { rows, limit_holds, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub l1: f64,
    pub l2: f64,
    pub k: usize,
    /// `D_{S_{l1}}` on the grid.
    pub d_l1: f64,
    /// `D_{S_{l2}}` on the grid shifted so each `l1` cell sits inside an `l2` cell.
    pub d_l2_enclosing: f64,
    pub bound1: f64,
    pub property1: bool,
    /// `D_{S_{l2}}` on the grid.
    pub d_l2: f64,
    /// `D_{S_{l1}}` over the `(k+1)^n` sub-cells covering each `l2` cell.
    pub d_l1_covering: f64,
    pub bound2: f64,
    pub property2: bool,
    pub pass: bool,
}

/// The two scale comparison properties, restated on probe grids.
///
/// Property 1 compares each `l1` cell `t + l1Ω` with the enclosing `l2` cell
/// anchored at `t + (l1 − l2)·lo(Ω)`. Property 2 covers each `l2` cell by
/// `(k+1)^n` cells of scale `l1` with `k = ⌊l2/l1⌋`.
#[allow(clippy::too_many_arguments)]
pub fn scaling_property_check(
    f: &FunctionHandle,
    g: &FunctionHandle,
    p: f64,
    l1: f64,
    l2: f64,
    domain: &Domain,
    b: &[usize],
    q: &QuadratureConfig,
) -> Result<ScalingCheck> {
    if !(l2 > l1 && l1 > 0.0) {
        return Err(Error::Precondition(format!("need l2 > l1 > 0, got l1 = {l1}, l2 = {l2}")));
    }
    let omega = &domain.omega;
    let n = domain.n;
    let e = n as f64 / p;
    let t1 = domain.t_points(l1)?;
    let d_l1 = stepanov_distance_at(f, g, p, l1, omega, &t1, b, q)?;
    let shifted: Vec<Vec<f64>> =
        t1.iter().map(|t| t.iter().zip(omega.lo()).map(|(a, lo)| a + (l1 - l2) * lo).collect()).collect();
    let d_l2_enclosing = stepanov_distance_at(f, g, p, l2, omega, &shifted, b, q)?;
    let bound1 = (l2 / l1).powf(e) * d_l2_enclosing;

    let k = ((l2 / l1) * (1.0 + 1e-12)).floor() as usize;
    let t2 = domain.t_points(l2)?;
    let d_l2 = stepanov_distance_at(f, g, p, l2, omega, &t2, b, q)?;
    let offsets = crate::function_model::cartesian(&vec![(0..=k).map(|j| j as f64).collect::<Vec<f64>>(); n]);
    let mut covering = Vec::with_capacity(t2.len() * offsets.len());
    for t in &t2 {
        for j in &offsets {
            covering.push(
                (0..n).map(|i| t[i] + (l2 - l1) * omega.lo()[i] + l1 * omega.side()[i] * j[i]).collect::<Vec<f64>>(),
            );
        }
    }
    let d_l1_covering = stepanov_distance_at(f, g, p, l1, omega, &covering, b, q)?;
    let bound2 = ((k as f64 + 1.0) / k as f64).powf(e) * d_l1_covering;
    let property1 = within(d_l1, bound1);
    let property2 = within(d_l2, bound2);
    Ok(ScalingCheck {
        l1,
        l2,
        k,
        d_l1,
        d_l2_enclosing,
        bound1,
        property1,
        d_l2,
        d_l1_covering,
        bound2,
        property2,
        pass: property1 && property2,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerParameterDistance {
    /// `D_W(F(·;x), G(·;x))` for each parameter index.
    pub per_parameter: Vec<f64>,
    /// Maximum over the parameters.
    pub value: f64,
    /// `D_{W,B}` computed with the joint supremum.
    pub joint: f64,
    pub holds: bool,
}

/// The parameter-wise limit taken before the supremum over `B`.
///
/// Diagnostic only; it must never exceed the joint distance.
#[allow(clippy::too_many_arguments)]
pub fn weyl_distance_per_parameter(
    f: &FunctionHandle,
    g: &FunctionHandle,
    p: f64,
    schedule: &LSchedule,
    domain: &Domain,
    b: &[usize],
    q: &QuadratureConfig,
) -> Result<PerParameterDistance> {
    let joint = weyl_distance(f, g, p, schedule, domain, b, q)?.value;
    let per_parameter =
        b.iter().map(|&x| weyl_distance(f, g, p, schedule, domain, &[x], q).map(|w| w.value)).collect::<Result<Vec<_>>>()?;
    let value = per_parameter.iter().copied().fold(0.0, f64::max);
    Ok(PerParameterDistance { holds: within(value, joint), per_parameter, value, joint })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum NormalityOutcome {
    /// Indices into the translate list whose pairwise distances are below ε.
    Witness { indices: Vec<usize>, max_distance: f64 },
    /// The chain stopped short of `m_min`; `pair` is the closest blocked pair.
    Blocked { chain: Vec<usize>, pair: (usize, usize), distance: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub outcome: NormalityOutcome,
    /// Pairwise `D_W(F(·+b_i), F(·+b_j))`.
    pub distances: Vec<Vec<f64>>,
}

/// Greedy search for a translate subsequence that is ε-Cauchy in `D_W`.
///
/// Starting from the first translate, the chain repeatedly adds the translate
/// whose largest distance to the chain is smallest, ties broken by index.
#[allow(clippy::too_many_arguments)]
pub fn normality_check(
    f: &FunctionHandle,
    translates: &[Vec<f64>],
    p: f64,
    schedule: &LSchedule,
    domain: &Domain,
    eps: f64,
    m_min: usize,
    b: &[usize],
    q: &QuadratureConfig,
) -> Result<NormalityReport> {
    if translates.is_empty() {
        return Err(Error::InvalidInput("translate sequence is empty".into()));
    }
    let k = translates.len();
    let shifted: Vec<FunctionHandle> = translates.iter().map(|v| f.shifted(v)).collect();
    let mut d = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = weyl_distance(&shifted[i], &shifted[j], p, schedule, domain, b, q)?.value;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let mut chain = vec![0usize];
    let mut blocked: Option<((usize, usize), f64)> = None;
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for j in (0..k).filter(|j| !chain.contains(j)) {
            let (arg, score) = chain.iter().map(|&i| (i, d[i][j])).fold((chain[0], f64::NEG_INFINITY), |acc, x| {
                if x.1 > acc.1 {
                    x
                } else {
                    acc
                }
            });
            if best.is_none_or(|b| score < b.2) {
                best = Some((arg, j, score));
            }
        }
        match best {
            Some((_, j, s)) if s < eps => chain.push(j),
            Some((i, j, s)) => {
                blocked = Some(((i, j), s));
                break;
            }
            None => break,
        }
    }
    let outcome = if chain.len() >= m_min.max(1) {
        let mut max_distance: f64 = 0.0;
        for (a, &i) in chain.iter().enumerate() {
            for &j in &chain[a + 1..] {
                max_distance = max_distance.max(d[i][j]);
            }
        }
        NormalityOutcome::Witness { indices: chain, max_distance }
    } else {
        let (pair, distance) = blocked.unwrap_or(((0, 0), 0.0));
        NormalityOutcome::Blocked { chain, pair, distance }
    };
    Ok(NormalityReport { outcome, distances: d })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosureWitness {
    pub probe: Vec<f64>,
    pub tau: Vec<f64>,
    /// Class quantity of the limit function at the reused translation.
    pub measured: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitClosureReport {
    /// `(k, ‖F_k − F‖_W)` for every member of the sequence.
    pub distances: Vec<(usize, f64)>,
    /// Index of the approximant whose witnesses are reused.
    pub k: usize,
    /// First scale at which `D_{S_l}(F_K, F) < ε/3`.
    pub l_close: f64,
    /// Level `2^{-n/p} ε / 3` at which `F_K` was certified.
    pub eps_k: f64,
    pub approximant_certificate: ap_certifier::Certificate,
    /// Scale used for the limit function.
    pub l: f64,
    pub witnesses: Vec<ClosureWitness>,
    pub epsilon: f64,
    pub certified: bool,
}

/// Certifies the Weyl limit of equi-Weyl approximants by reusing their
/// ε-periods.
///
/// `K` is the first index with `‖F_K − F‖_W < ε/3`; `F_K` is certified in the
/// constant-exponent equi class at `2^{-n/p}ε/3` with `search`; every witness
/// τ is then checked for `F` at `l = max(l_K, l_close)`.
#[allow(clippy::too_many_arguments)]
pub fn weyl_limit_closure_check(
    f_seq: &[FunctionHandle],
    f: &FunctionHandle,
    p: f64,
    eps: f64,
    schedule: &LSchedule,
    domain: &Domain,
    search: &SearchConfig,
    q: &QuadratureConfig,
) -> Result<LimitClosureReport> {
    if f_seq.is_empty() {
        return Err(Error::InvalidInput("approximating sequence is empty".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    let b = f.param_indices();
    let mut distances = Vec::new();
    let mut chosen: Option<(usize, WeylEstimate)> = None;
    for (k, fk) in f_seq.iter().enumerate() {
        let w = weyl_distance(fk, f, p, schedule, domain, &b, q)?;
        distances.push((k, w.value));
        if w.value < eps / 3.0 {
            chosen = Some((k, w));
            break;
        }
    }
    let Some((k, w)) = chosen else {
        return Err(Error::Precondition(format!("no approximant within eps/3 = {} in Weyl distance", eps / 3.0)));
    };
    let l_close = w
        .report
        .samples
        .iter()
        .find(|s| s.1 < eps / 3.0)
        .map(|s| s.0)
        .expect("the tail sample is below eps/3");
    let n = domain.n as f64;
    let eps_k = 2f64.powf(-n / p) * eps / 3.0;
    let spec = ClassSpec::constant_p(p, true, domain.clone())?;
    let cert = match ap_certifier::certify(&f_seq[k], &spec, eps_k, search)? {
        Outcome::Certified(c) => c,
        Outcome::NotCertified(t) => {
            return Err(Error::Precondition(format!(
                "approximant {k} not certified at eps_k = {eps_k} ({} probes unwitnessed)",
                t.failures.len()
            )))
        }
    };
    let l = cert.l.unwrap_or(1.0).max(l_close);
    let mut witnesses = Vec::with_capacity(cert.witnesses.len());
    for wt in &cert.witnesses {
        let v = ap_certifier::verify_period(f, &spec, &wt.tau, eps, Scales::Fixed(l), &b, &search.quad)?;
        witnesses.push(ClosureWitness { probe: wt.probe.clone(), tau: wt.tau.clone(), measured: v.worst });
    }
    let certified = witnesses.iter().all(|w| w.measured < eps);
    Ok(LimitClosureReport {
        distances,
        k,
        l_close,
        eps_k,
        approximant_certificate: cert,
        l,
        witnesses,
        epsilon: eps,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_model::{gallery_chi_half, gallery_heaviside, gallery_stryja_staircase, AxisBreaks};
    use proptest::prelude::*;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn dom1(lo: f64, hi: f64, step: f64) -> Domain {
        Domain::euclidean(1, vec![], lo, hi, step).unwrap()
    }

    fn zero1() -> FunctionHandle {
        FunctionHandle::zero(1, 1)
    }

    #[test]
    fn schedule_validation() {
        assert!(LSchedule::geometric(1.0, 2.0, 1, 2, 1e-3).is_err());
        assert!(LSchedule::geometric(1.0, 1.0, 4, 2, 1e-3).is_err());
        assert!(LSchedule::from_scales(vec![1.0, 1.0, 2.0], 2, 1e-3).is_err());
        let s = LSchedule::geometric(1.0, 2.0, 4, 3, 1e-3).unwrap();
        assert_eq!(s.scales, vec![1.0, 2.0, 4.0, 8.0, 16.0]);
        assert_eq!(s.tail_scales(), &[4.0, 8.0, 16.0]);
    }

    #[test]
    fn report_gap_and_limit() {
        let r = ConvergenceReport::from_samples(vec![(1.0, 3.0), (2.0, 1.0), (4.0, 1.2), (8.0, 1.1)], 3, 0.5).unwrap();
        assert!((r.cauchy_gap - 0.2).abs() < 1e-12);
        assert_eq!(r.limit_estimate, 1.1);
        assert!(r.converged);
        assert!(ConvergenceReport::from_samples(vec![(2.0, 1.0), (1.0, 1.0)], 2, 0.1).is_err());
        assert!(grows(&[1.0, 2.0, 3.0]));
        assert!(!grows(&[1.0, 1.2, 1.3]));
        assert!(!grows(&[1.0, 3.0, 2.9]));
    }

    #[test]
    fn chi_half_stepanov_values() {
        // Window covering [0, 1/2] gives 1/(2l) for p = 1.
        let d = dom1(-4.0, 4.0, 0.25);
        for l in [1.0, 2.0, 4.0, 8.0] {
            let v = stepanov_distance(&gallery_chi_half(), &zero1(), 1.0, l, &d, &[0], &q()).unwrap();
            assert!((v - 1.0 / (2.0 * l)).abs() < 1e-12, "l={l}: {v}");
        }
    }

    #[test]
    fn constant_has_constant_distance() {
        let c = FunctionHandle::constant(1, Complex64::new(0.0, -2.5));
        let d = dom1(-3.0, 3.0, 1.0);
        for l in [0.5, 3.0] {
            let v = stepanov_distance(&c, &zero1(), 1.0, l, &d, &[0], &q()).unwrap();
            assert!((v - 2.5).abs() < 1e-12);
        }
        assert_eq!(stepanov_distance(&c, &c, 2.0, 1.0, &d, &[0], &q()).unwrap(), 0.0);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let d = Domain::euclidean(1, vec![], 0.0, 1.0, 1.0).unwrap();
        let r = stepanov_distance_at(&zero1(), &zero1(), 1.0, 1.0, &d.omega, &[], &[0], &q());
        assert!(matches!(r, Err(Error::EmptyProbeGrid)));
    }

    #[test]
    fn chi_half_is_weyl_null() {
        let s = LSchedule::geometric(1.0, 4.0, 6, 2, 1e-3).unwrap();
        let w = weyl_distance(&gallery_chi_half(), &zero1(), 1.0, &s, &dom1(-4.0, 4.0, 0.5), &[0], &q()).unwrap();
        assert!(w.value < 1e-3 && w.dominated && w.report.converged, "{w:?}");
    }

    #[test]
    fn stepanov_sup_examples() {
        let d = dom1(-5.0, 5.0, 0.5);
        let one = FunctionHandle::constant(1, Complex64::new(1.0, 0.0));
        assert!((stepanov_bounded_sup(&one, 1.0, &d, &[0], &q()).unwrap() - 1.0).abs() < 1e-12);
        let h = gallery_heaviside(1).unwrap();
        assert!((stepanov_bounded_sup(&h, 1.0, &d, &[0], &q()).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(stepanov_bounded_sup(&zero1(), 1.0, &d, &[0], &q()).unwrap(), 0.0);
    }

    #[test]
    fn boundedness_verdicts() {
        let s = LSchedule::geometric(1.0, 2.0, 3, 2, 1e-3).unwrap();
        let d = dom1(-20.0, 20.0, 2.0);
        let one = FunctionHandle::constant(1, Complex64::new(1.0, 0.0));
        let v = weyl_bounded_check(&one, 1.0, &s, &d, &[0], &q()).unwrap();
        assert!(v.weyl_bounded && v.stepanov_bounded);
        let v = weyl_bounded_check(&gallery_chi_half(), 1.0, &s, &d, &[0], &q()).unwrap();
        assert!(v.weyl_bounded);
        let v = weyl_bounded_check(&gallery_stryja_staircase(), 1.0, &s, &d, &[0], &q()).unwrap();
        assert!(!v.weyl_bounded && !v.stepanov_bounded);
    }

    #[test]
    fn scaling_example_is_tight() {
        let d = dom1(-2.0, 2.0, 0.5);
        let c = scaling_property_check(&gallery_chi_half(), &zero1(), 1.0, 1.0, 2.0, &d, &[0], &q()).unwrap();
        assert!((c.d_l1 - 0.5).abs() < 1e-12);
        assert!((c.bound1 - 0.5).abs() < 1e-12);
        assert!(c.pass);
        let c = scaling_property_check(&gallery_chi_half(), &zero1(), 1.0, 1.0, 3.5, &d, &[0], &q()).unwrap();
        assert_eq!(c.k, 3);
        assert!(c.pass);
        assert!(scaling_property_check(&zero1(), &zero1(), 1.0, 2.0, 1.0, &d, &[0], &q()).is_err());
    }

    #[test]
    fn triangle_degenerate_cases() {
        let s = LSchedule::geometric(1.0, 2.0, 2, 2, 1e-3).unwrap();
        let d = dom1(-2.0, 2.0, 1.0);
        let f = gallery_chi_half();
        let g = crate::function_model::sine();
        assert!(triangle_check(&f, &g, &f, 1.0, &s, &d, &[0], &q()).unwrap().pass);
        assert!(triangle_check(&f, &g, &g, 2.0, &s, &d, &[0], &q()).unwrap().pass);
    }

    #[test]
    fn heaviside_translates_are_normal() {
        let s = LSchedule::geometric(1.0, 4.0, 5, 3, 1e-3).unwrap();
        let h = gallery_heaviside(1).unwrap();
        let tr: Vec<Vec<f64>> = [1.0, 2.0, 4.0, 8.0].iter().map(|v| vec![*v]).collect();
        let r = normality_check(&h, &tr, 1.0, &s, &dom1(-20.0, 20.0, 1.0), 0.1, 4, &[0], &q()).unwrap();
        match r.outcome {
            NormalityOutcome::Witness { indices, max_distance } => {
                assert_eq!(indices.len(), 4);
                assert!(max_distance <= 7.0 / 1024.0 + 1e-12);
            }
            other => panic!("expected witness, got {other:?}"),
        }
    }

    #[test]
    fn blocked_normality_reports_pair() {
        let s = LSchedule::geometric(1.0, 2.0, 2, 2, 1e-3).unwrap();
        let f = crate::function_model::sine();
        let tr = vec![vec![0.0], vec![std::f64::consts::PI]];
        let r = normality_check(&f, &tr, 1.0, &s, &dom1(-2.0, 2.0, 1.0), 0.1, 2, &[0], &QuadratureConfig::coarse()).unwrap();
        assert!(matches!(r.outcome, NormalityOutcome::Blocked { pair: (0, 1), .. }));
    }

    #[test]
    fn per_parameter_distance_is_dominated() {
        let f = FunctionHandle::new(1, 1, "x-scaled chi", |t, x, out| {
            out[0] = Complex64::new(if (0.0..=0.5).contains(&t[0]) { x[0] } else { 0.0 } + 0.1 * x[0], 0.0)
        })
        .with_params(vec![vec![1.0], vec![2.0]])
        .with_breaks(vec![AxisBreaks::at(vec![0.0, 0.5])]);
        let g = FunctionHandle::zero(1, 1).with_params(vec![vec![1.0], vec![2.0]]);
        let s = LSchedule::geometric(1.0, 2.0, 3, 2, 1e-3).unwrap();
        let r = weyl_distance_per_parameter(&f, &g, 1.0, &s, &dom1(-2.0, 2.0, 0.5), &[0, 1], &q()).unwrap();
        assert!(r.holds);
        assert!((r.value - r.joint).abs() < 1e-12);
    }

    fn piecewise(vals: Vec<f64>, width: f64) -> FunctionHandle {
        let k = vals.len() as f64;
        let b = AxisBreaks::lattice(0.0, width);
        FunctionHandle::real(1, "pw", move |t| {
            let i = (t[0] / width).floor().rem_euclid(k) as usize;
            vals[i]
        })
        .with_breaks(vec![b])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn distance_is_symmetric(a in prop::collection::vec(-2.0f64..2.0, 3), c in prop::collection::vec(-2.0f64..2.0, 3), p in 1.0f64..3.0) {
            let f = piecewise(a, 0.7);
            let g = piecewise(c, 0.45);
            let d = dom1(-3.0, 3.0, 1.5);
            let x = stepanov_distance(&f, &g, p, 1.3, &d, &[0], &q()).unwrap();
            let y = stepanov_distance(&g, &f, p, 1.3, &d, &[0], &q()).unwrap();
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }

        #[test]
        fn translation_keeps_grid_distance(a in prop::collection::vec(-2.0f64..2.0, 3), tau in 0.0f64..3.0) {
            // With Λ = R the shifted grid is again a grid of the same box, so
            // compare against the distance on the translated probe points.
            let f = piecewise(a, 0.6);
            let g = zero1();
            let d = dom1(-3.0, 3.0, 0.5);
            let pts = d.t_points(2.0).unwrap();
            let moved: Vec<Vec<f64>> = pts.iter().map(|t| vec![t[0] + tau]).collect();
            let x = stepanov_distance_at(&f.shifted(&[tau]), &g.shifted(&[tau]), 1.0, 2.0, &d.omega, &pts, &[0], &q()).unwrap();
            let y = stepanov_distance_at(&f, &g, 1.0, 2.0, &d.omega, &moved, &[0], &q()).unwrap();
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + y));
        }
    }
}

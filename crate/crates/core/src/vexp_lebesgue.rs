//! Variable-exponent Lebesgue spaces: `φ_{p(x)}`, the modular and the
//! Luxemburg norm.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_model::FunctionHandle;
use crate::quadrature::{refine, Cube, Hints, QuadratureConfig, Refined, TensorRule};

/// Default relative tolerance of the Luxemburg bisection.
pub const NORM_TOL: f64 = 1e-12;
const MAX_BRACKET_STEPS: usize = 2200;

type ExponentMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Constant(f64),
    Map(ExponentMap),
}

/// Exponent `p : region → [1, ∞]` with declared essential bounds.
#[derive(Clone)]
pub struct ExponentField {
    kind: Kind,
    p_minus: f64,
    p_plus: f64,
    label: String,
}

impl fmt::Debug for ExponentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExponentField({}, [{}, {}])", self.label, self.p_minus, self.p_plus)
    }
}

fn valid_exponent(p: f64) -> bool {
    p >= 1.0 && !p.is_nan()
}

impl ExponentField {
    pub fn constant(p: f64) -> Result<Self> {
        if !valid_exponent(p) {
            return Err(Error::InvalidInput(format!("exponent {p} outside [1, inf]")));
        }
        Ok(ExponentField { kind: Kind::Constant(p), p_minus: p, p_plus: p, label: format!("{p}") })
    }

    pub fn variable<F>(label: impl Into<String>, p_minus: f64, p_plus: f64, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !valid_exponent(p_minus) || !(p_minus <= p_plus) {
            return Err(Error::InvalidInput(format!("exponent bounds [{p_minus}, {p_plus}] invalid")));
        }
        Ok(ExponentField { kind: Kind::Map(Arc::new(f)), p_minus, p_plus, label: label.into() })
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Constant(p) => *p,
            Kind::Map(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.kind {
            Kind::Constant(p) => Some(p),
            Kind::Map(_) => None,
        }
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Checks `1 ≤ p⁻ ≤ p(x) ≤ p⁺` on the given points.
    pub fn check_samples(&self, points: &[Vec<f64>]) -> Result<()> {
        for x in points {
            let p = self.at(x);
            if !valid_exponent(p) || p < self.p_minus || p > self.p_plus {
                return Err(Error::ExponentMismatch(format!("p({x:?}) = {p} outside [{}, {}]", self.p_minus, self.p_plus)));
            }
        }
        Ok(())
    }

    /// `u ↦ p(c·u)`, the exponent of a dilated function.
    pub fn dilated(&self, c: f64) -> Self {
        match &self.kind {
            Kind::Constant(_) => self.clone(),
            Kind::Map(f) => {
                let f = f.clone();
                ExponentField {
                    kind: Kind::Map(Arc::new(move |x: &[f64]| {
                        let y: Vec<f64> = x.iter().map(|v| c * v).collect();
                        f(&y)
                    })),
                    p_minus: self.p_minus,
                    p_plus: self.p_plus,
                    label: format!("{}[{}u]", self.label, c),
                }
            }
        }
    }
}

/// Pointwise conjugate value: `1/p + 1/q = 1`.
pub fn conjugate_value(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub fn conjugate_exponent(p: &ExponentField) -> ExponentField {
    let (lo, hi) = (conjugate_value(p.p_plus), conjugate_value(p.p_minus));
    match &p.kind {
        Kind::Constant(v) => ExponentField::constant(conjugate_value(*v)).expect("conjugate of valid exponent"),
        Kind::Map(f) => {
            let f = f.clone();
            ExponentField { kind: Kind::Map(Arc::new(move |x: &[f64]| conjugate_value(f(x)))), p_minus: lo, p_plus: hi, label: format!("({})'", p.label) }
        }
    }
}

/// `φ_p(t)`: `t^p` for finite p; for p = ∞, 0 on `[0,1]` and ∞ beyond.
pub fn phi_p(p: f64, t: f64) -> Result<f64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeArgument(t));
    }
    Ok(phi_unchecked(p, t))
}

#[inline]
fn phi_unchecked(p: f64, t: f64) -> f64 {
    if p.is_infinite() {
        if t <= 1.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else if p == 1.0 {
        t
    } else if p == 2.0 {
        t * t
    } else {
        t.powf(p)
    }
}

/// Sampled integrand `(weight, magnitude, exponent)`.
pub type Sample = (f64, f64, f64);

fn modular_of(samples: &[Sample], lambda: f64) -> f64 {
    let mut acc = 0.0;
    for &(w, a, p) in samples {
        if w > 0.0 && a > 0.0 {
            acc += w * phi_unchecked(p, a / lambda);
        }
    }
    acc
}

/// `inf{λ > 0 : Σ w φ_p(a/λ) ≤ 1}` for finitely many samples.
pub fn luxemburg_from_samples(samples: &[Sample], tol: f64) -> Result<f64> {
    let vol: f64 = samples.iter().map(|s| s.0).sum();
    if vol == 0.0 {
        return Ok(0.0);
    }
    let amax = samples.iter().filter(|s| s.0 > 0.0).map(|s| s.1).fold(0.0, f64::max);
    if amax == 0.0 {
        return Ok(0.0);
    }
    let p0 = samples[0].2;
    if samples.iter().all(|s| s.2 == p0) {
        if p0.is_infinite() {
            return Ok(amax);
        }
        let s: f64 = samples.iter().filter(|s| s.0 > 0.0).map(|&(w, a, _)| w * (a / amax).powf(p0)).sum();
        return Ok(amax * s.powf(1.0 / p0));
    }
    let sup_inf = samples.iter().filter(|s| s.0 > 0.0 && s.2.is_infinite()).map(|s| s.1).fold(0.0, f64::max);
    let finite: Vec<Sample> = samples.iter().copied().filter(|s| s.0 > 0.0 && s.1 > 0.0 && s.2.is_finite()).collect();
    if finite.is_empty() {
        return Ok(sup_inf);
    }
    let (pm, pp) = finite.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(s.2), hi.max(s.2)));
    let fmax = finite.iter().map(|s| s.1).fold(0.0, f64::max);
    let proxy = |q: f64| fmax * finite.iter().map(|&(w, a, _)| w * (a / fmax).powf(q)).sum::<f64>().powf(1.0 / q);
    let (x, y) = (proxy(pm), proxy(pp));
    let mut lo = x.min(y);
    let mut hi = x.max(y);
    let mut steps = 0;
    while modular_of(&finite, hi) > 1.0 {
        hi *= 2.0;
        steps += 1;
        if steps > MAX_BRACKET_STEPS || !hi.is_finite() {
            return Err(Error::BracketNotFound { expansions: steps });
        }
    }
    while lo > 0.0 && modular_of(&finite, lo) <= 1.0 {
        lo *= 0.5;
        steps += 1;
        if steps > MAX_BRACKET_STEPS {
            return Err(Error::BracketNotFound { expansions: steps });
        }
    }
    if lo == 0.0 {
        return Err(Error::BracketNotFound { expansions: steps });
    }
    while hi > lo * (1.0 + tol) {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if modular_of(&finite, mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.max(sup_inf))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub trace: Vec<(usize, f64)>,
    pub converged: bool,
    /// Set when the region has zero volume and the norm is defined as 0.
    pub degenerate: bool,
    pub fingerprint: String,
}

fn sample_rule<M>(rule: &TensorRule, mag: &M, p: &ExponentField) -> Result<Vec<Sample>>
where
    M: Fn(&[f64]) -> f64 + Sync,
{
    let konst = p.as_constant();
    let raw = rule.map_nodes(|x| (mag(x), konst.unwrap_or_else(|| p.at(x))));
    let mut out = Vec::with_capacity(raw.len());
    for (i, (w, (a, pv))) in raw.into_iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::NonFinite { at: rule.point(i) });
        }
        if !valid_exponent(pv) {
            return Err(Error::ExponentMismatch(format!("p({:?}) = {pv}", rule.point(i))));
        }
        out.push((w, a, pv));
    }
    Ok(out)
}

/// Luxemburg norm of the magnitude field `mag` over `region`.
pub fn norm_of<M>(mag: M, hints: &Hints, p: &ExponentField, region: &Cube, q: &QuadratureConfig, tol: f64) -> Result<NormValue>
where
    M: Fn(&[f64]) -> f64 + Sync,
{
    q.validate()?;
    let fingerprint = q.fingerprint();
    if region.volume() == 0.0 {
        return Ok(NormValue { value: 0.0, trace: vec![], converged: true, degenerate: true, fingerprint });
    }
    let r: Refined<f64> = refine(q, |m| {
        let rule = TensorRule::new(region, m, hints);
        if rule.len() > q.max_points {
            return Ok(None);
        }
        let s = sample_rule(&rule, &mag, p)?;
        Ok(Some(luxemburg_from_samples(&s, tol)?))
    })?;
    Ok(NormValue { value: r.value.max(0.0), trace: r.trace, converged: r.converged, degenerate: false, fingerprint })
}

/// Modular of the magnitude field `mag` over `region`.
pub fn modular_of_field<M>(mag: M, hints: &Hints, p: &ExponentField, region: &Cube, q: &QuadratureConfig) -> Result<Refined<f64>>
where
    M: Fn(&[f64]) -> f64 + Sync,
{
    q.validate()?;
    refine(q, |m| {
        let rule = TensorRule::new(region, m, hints);
        if rule.len() > q.max_points {
            return Ok(None);
        }
        let s = sample_rule(&rule, &mag, p)?;
        Ok(Some(s.iter().filter(|s| s.0 > 0.0).map(|&(w, a, pv)| w * phi_unchecked(pv, a)).sum()))
    })
}

/// `ρ(f) = ∫ φ_{p(x)}(‖f(x)‖) dx` over `region`.
pub fn modular(f: &FunctionHandle, xi: usize, p: &ExponentField, region: &Cube, q: &QuadratureConfig) -> Result<Refined<f64>> {
    check_dim(f, region)?;
    modular_of_field(|x| f.norm_at(x, xi), &f.hints(region), p, region, q)
}

pub fn luxemburg_norm(
    f: &FunctionHandle,
    xi: usize,
    p: &ExponentField,
    region: &Cube,
    q: &QuadratureConfig,
    tol: f64,
) -> Result<NormValue> {
    check_dim(f, region)?;
    norm_of(|x| f.norm_at(x, xi), &f.hints(region), p, region, q, tol)
}

/// Luxemburg norm of `f_diff` on `t + lΩ`.
pub fn cell_seminorm(
    f_diff: &FunctionHandle,
    xi: usize,
    p: &ExponentField,
    t: &[f64],
    l: f64,
    omega: &Cube,
    q: &QuadratureConfig,
) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::InvalidInput(format!("scale l = {l} must be positive")));
    }
    let cell = omega.cell(t, l);
    Ok(luxemburg_norm(f_diff, xi, p, &cell, q, NORM_TOL)?.value)
}

fn check_dim(f: &FunctionHandle, region: &Cube) -> Result<()> {
    if f.dim() != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), found: f.dim() });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// `‖uv‖_{q(x)} ≤ 2‖u‖_{p(x)}‖v‖_{r(x)}` with `1/q = 1/p + 1/r`.
pub fn holder_product_norm_check(
    u: &FunctionHandle,
    v: &FunctionHandle,
    p: &ExponentField,
    r: &ExponentField,
    region: &Cube,
    q: &QuadratureConfig,
) -> Result<HolderCheck> {
    check_dim(u, region)?;
    check_dim(v, region)?;
    fn inv(x: f64) -> f64 {
        if x.is_infinite() {
            0.0
        } else {
            1.0 / x
        }
    }
    fn qv(a: f64, b: f64) -> f64 {
        let s = inv(a) + inv(b);
        if s == 0.0 {
            f64::INFINITY
        } else {
            1.0 / s
        }
    }
    let q_exp = match (p.as_constant(), r.as_constant()) {
        (Some(a), Some(b)) => {
            let c = qv(a, b);
            if c < 1.0 {
                return Err(Error::ExponentMismatch(format!("1/{a} + 1/{b} > 1")));
            }
            ExponentField::constant(c)?
        }
        _ => {
            let (p2, r2) = (p.clone(), r.clone());
            let lo = qv(p.p_minus(), r.p_minus());
            if lo < 1.0 {
                return Err(Error::ExponentMismatch("1/p + 1/r exceeds 1 somewhere".into()));
            }
            ExponentField::variable("holder-q", lo, qv(p.p_plus(), r.p_plus()), move |x| qv(p2.at(x), r2.at(x)))?
        }
    };
    let hints = u.hints(region).merge(v.hints(region));
    let lhs = norm_of(|x| u.norm_at(x, 0) * v.norm_at(x, 0), &hints, &q_exp, region, q, NORM_TOL)?.value;
    let nu = luxemburg_norm(u, 0, p, region, q, NORM_TOL)?.value;
    let nv = luxemburg_norm(v, 0, r, region, q, NORM_TOL)?.value;
    let rhs = 2.0 * nu * nv;
    Ok(HolderCheck { lhs, rhs, pass: lhs <= rhs * (1.0 + 1e-9) + 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_model::{gallery_chi_half, AxisBreaks};
    use proptest::prelude::*;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn step_fn(values: Vec<f64>) -> FunctionHandle {
        let k = values.len();
        let cuts: Vec<f64> = (1..k).map(|i| i as f64 / k as f64).collect();
        FunctionHandle::real(1, "step", move |t| {
            let i = ((t[0] * k as f64).floor() as isize).clamp(0, k as isize - 1) as usize;
            values[i]
        })
        .with_breaks(vec![AxisBreaks::at(cuts)])
    }

    /// Composite Simpson on [0,1]; independent of the midpoint machinery.
    fn simpson(f: impl Fn(f64) -> f64, n: usize) -> f64 {
        let h = 1.0 / n as f64;
        let mut s = f(0.0) + f(1.0);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_p(2.0, 3.0).unwrap(), 9.0);
        assert_eq!(phi_p(f64::INFINITY, 0.5).unwrap(), 0.0);
        assert_eq!(phi_p(f64::INFINITY, 2.0).unwrap(), f64::INFINITY);
        assert!(phi_p(2.0, -1.0).is_err());
    }

    #[test]
    fn modular_examples() {
        let one = FunctionHandle::real(1, "one", |_| 1.0);
        let p2 = ExponentField::constant(2.0).unwrap();
        assert!((modular(&one, 0, &p2, &Cube::unit(1), &q()).unwrap().value - 1.0).abs() < 1e-14);
        let zero = FunctionHandle::zero(1, 1);
        assert_eq!(modular(&zero, 0, &p2, &Cube::unit(1), &q()).unwrap().value, 0.0);

        let x = FunctionHandle::real(1, "x", |t| t[0]);
        let p = ExponentField::variable("2+x", 2.0, 3.0, |u| 2.0 + u[0]).unwrap();
        let got = modular(&x, 0, &p, &Cube::unit(1), &q()).unwrap().value;
        let oracle = simpson(|s| if s == 0.0 { 0.0 } else { s.powf(2.0 + s) }, 200_000);
        assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
    }

    #[test]
    fn modular_infinite_branch() {
        let two = FunctionHandle::real(1, "two", |_| 2.0);
        let pinf = ExponentField::constant(f64::INFINITY).unwrap();
        assert_eq!(modular(&two, 0, &pinf, &Cube::unit(1), &q()).unwrap().value, f64::INFINITY);
        assert_eq!(luxemburg_norm(&two, 0, &pinf, &Cube::unit(1), &q(), NORM_TOL).unwrap().value, 2.0);
    }

    #[test]
    fn luxemburg_examples() {
        let one = FunctionHandle::real(2, "one", |_| 1.0);
        let p3 = ExponentField::constant(3.0).unwrap();
        assert!((luxemburg_norm(&one, 0, &p3, &Cube::unit(2), &q(), NORM_TOL).unwrap().value - 1.0).abs() < 1e-12);

        let x = FunctionHandle::real(1, "x", |t| t[0]);
        let p2 = ExponentField::constant(2.0).unwrap();
        let n = luxemburg_norm(&x, 0, &p2, &Cube::unit(1), &q(), NORM_TOL).unwrap();
        assert!((n.value - 1.0 / 3f64.sqrt()).abs() < 1e-8, "{}", n.value);
    }

    #[test]
    fn luxemburg_variable_exponent_matches_root_oracle() {
        // ∫₀¹ λ^{-(2+x)} dx = λ^{-2} (1 − 1/λ) / ln λ; root by bisection on the closed form.
        let g = |lam: f64| lam.powi(-2) * (1.0 - 1.0 / lam) / lam.ln() - 1.0;
        let (mut a, mut b) = (0.5f64, 2.0f64);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m) > 0.0 {
                a = m
            } else {
                b = m
            }
        }
        let oracle = 0.5 * (a + b);
        let one = FunctionHandle::real(1, "one", |_| 1.0);
        let p = ExponentField::variable("2+x", 2.0, 3.0, |u| 2.0 + u[0]).unwrap();
        let got = luxemburg_norm(&one, 0, &p, &Cube::unit(1), &q(), NORM_TOL).unwrap().value;
        assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
        assert!((oracle - 1.0).abs() < 1e-12 || oracle != 1.0);
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate_exponent(&ExponentField::constant(2.0).unwrap()).as_constant(), Some(2.0));
        assert_eq!(conjugate_exponent(&ExponentField::constant(1.0).unwrap()).as_constant(), Some(f64::INFINITY));
        let p = ExponentField::variable("3", 3.0, 3.0, |_| 3.0).unwrap();
        assert_eq!(conjugate_exponent(&p).at(&[0.2]), 1.5);
        assert_eq!(conjugate_value(f64::INFINITY), 1.0);
    }

    #[test]
    fn holder_examples() {
        let one = FunctionHandle::real(1, "one", |_| 1.0);
        let p2 = ExponentField::constant(2.0).unwrap();
        let h = holder_product_norm_check(&one, &one, &p2, &p2, &Cube::unit(1), &q()).unwrap();
        assert!((h.lhs - 1.0).abs() < 1e-12 && (h.rhs - 2.0).abs() < 1e-12 && h.pass);
        let zero = FunctionHandle::zero(1, 1);
        let h0 = holder_product_norm_check(&zero, &one, &p2, &p2, &Cube::unit(1), &q()).unwrap();
        assert!(h0.lhs == 0.0 && h0.pass);
        let p1 = ExponentField::constant(1.0).unwrap();
        assert!(holder_product_norm_check(&one, &one, &p1, &p2, &Cube::unit(1), &q()).is_err());
    }

    #[test]
    fn cell_seminorm_examples() {
        let one = FunctionHandle::real(2, "one", |_| 1.0);
        let p1 = ExponentField::constant(1.0).unwrap();
        assert!((cell_seminorm(&one, 0, &p1, &[0.0, 0.0], 2.0, &Cube::unit(2), &q()).unwrap() - 4.0).abs() < 1e-12);
        let chi = gallery_chi_half();
        let diff = chi.shifted(&[0.3]).sub(&chi).unwrap();
        let v = cell_seminorm(&diff, 0, &p1, &[0.0], 1.0, &Cube::unit(1), &q()).unwrap();
        // supports [-0.3,0.2] and [0,0.5] restricted to [0,1]: symmetric difference [0.2,0.5]
        assert!((v - 0.3).abs() < 1e-12, "{v}");
        let w = cell_seminorm(&diff, 0, &p1, &[-1.0], 2.0, &Cube::unit(1), &q()).unwrap();
        assert!((w - 0.6).abs() < 1e-12, "{w}");
        // translate to the right: supports [0.3,0.8] and [0,0.5] inside [0,1]
        let right = chi.shifted(&[-0.3]).sub(&chi).unwrap();
        let r = cell_seminorm(&right, 0, &p1, &[0.0], 1.0, &Cube::unit(1), &q()).unwrap();
        assert!((r - 0.6).abs() < 1e-12, "{r}");
        assert_eq!(cell_seminorm(&FunctionHandle::zero(1, 1), 0, &p1, &[0.0], 1.0, &Cube::unit(1), &q()).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_region_is_zero() {
        let one = FunctionHandle::real(1, "one", |_| 1.0);
        let flat = Cube::new(vec![0.0], vec![0.0]).unwrap();
        let n = luxemburg_norm(&one, 0, &ExponentField::constant(2.0).unwrap(), &flat, &q(), NORM_TOL).unwrap();
        assert!(n.degenerate && n.value == 0.0);
    }

    #[test]
    fn nonfinite_samples_are_rejected() {
        let bad = FunctionHandle::real(1, "bad", |t| if t[0] > 0.5 { f64::NAN } else { 1.0 });
        let e = luxemburg_norm(&bad, 0, &ExponentField::constant(2.0).unwrap(), &Cube::unit(1), &q(), NORM_TOL);
        assert!(matches!(e, Err(Error::NonFinite { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bisection_agrees_with_classical_norm(vals in proptest::collection::vec(-3.0f64..3.0, 1..6), p in 1.0f64..6.0) {
            let f = step_fn(vals.clone());
            let fixed = ExponentField::constant(p).unwrap();
            let disguised = ExponentField::variable("const", p, p, move |_| p).unwrap();
            let a = luxemburg_norm(&f, 0, &fixed, &Cube::unit(1), &q(), NORM_TOL).unwrap().value;
            let b = luxemburg_norm(&f, 0, &disguised, &Cube::unit(1), &q(), NORM_TOL).unwrap().value;
            let k = vals.len() as f64;
            let classical = (vals.iter().map(|v| v.abs().powf(p) / k).sum::<f64>()).powf(1.0 / p);
            prop_assert!((a - classical).abs() <= 1e-10 * classical.max(1e-300));
            prop_assert!((b - classical).abs() <= 1e-9 * classical.max(1e-300));
        }

        #[test]
        fn modular_at_norm_is_one(vals in proptest::collection::vec(0.1f64..3.0, 1..6), a in 1.0f64..3.0, b in 0.0f64..3.0) {
            let f = step_fn(vals);
            let p = ExponentField::variable("affine", a, a + b, move |u| a + b * u[0]).unwrap();
            let n = luxemburg_norm(&f, 0, &p, &Cube::unit(1), &q(), NORM_TOL).unwrap().value;
            let g = f.scaled(num_complex::Complex64::new(1.0 / n, 0.0));
            let rho = modular(&g, 0, &p, &Cube::unit(1), &q()).unwrap().value;
            prop_assert!((rho - 1.0).abs() < 1e-6, "rho = {}", rho);
        }

        #[test]
        fn monotone_in_magnitude(vals in proptest::collection::vec(-3.0f64..3.0, 1..6), shrink in 0.0f64..1.0, a in 1.0f64..4.0) {
            let f = step_fn(vals.clone());
            let g = step_fn(vals.iter().map(|v| v * shrink).collect());
            let p = ExponentField::variable("affine", a, a + 1.0, move |u| a + u[0]).unwrap();
            let nf = luxemburg_norm(&f, 0, &p, &Cube::unit(1), &q(), NORM_TOL).unwrap().value;
            let ng = luxemburg_norm(&g, 0, &p, &Cube::unit(1), &q(), NORM_TOL).unwrap().value;
            prop_assert!(ng <= nf * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn embedding_constant(vals in proptest::collection::vec(-3.0f64..3.0, 1..6), a in 1.0f64..3.0, gap in 0.0f64..3.0, side in 0.2f64..3.0) {
            let f = step_fn(vals).dilated(1.0 / side, 1.0).unwrap();
            let region = Cube::new(vec![0.0], vec![side]).unwrap();
            let qe = ExponentField::variable("q", a, a + 0.5, move |u| a + 0.5 * (u[0] / side)).unwrap();
            let pe = ExponentField::variable("p", a + gap, a + gap + 0.5, move |u| a + gap + 0.5 * (u[0] / side)).unwrap();
            let nq = luxemburg_norm(&f, 0, &qe, &region, &q(), NORM_TOL).unwrap().value;
            let np = luxemburg_norm(&f, 0, &pe, &region, &q(), NORM_TOL).unwrap().value;
            prop_assert!(nq <= 2.0 * (1.0 + side) * np + 1e-9);
        }

        #[test]
        fn holder_random_steps(u in proptest::collection::vec(-3.0f64..3.0, 1..5), v in proptest::collection::vec(-3.0f64..3.0, 1..5)) {
            let (fu, fv) = (step_fn(u), step_fn(v));
            let p = ExponentField::constant(3.0).unwrap();
            let r = ExponentField::constant(1.5).unwrap();
            let h = holder_product_norm_check(&fu, &fv, &p, &r, &Cube::unit(1), &q()).unwrap();
            prop_assert!(h.pass);
        }

        #[test]
        fn diagonal_operator_norm_bound(d1 in -4.0f64..4.0, d2 in -4.0f64..4.0, vals in proptest::collection::vec(-2.0f64..2.0, 2..5)) {
            use num_complex::Complex64 as C;
            let vals2: Vec<f64> = vals.iter().rev().copied().collect();
            let (a, b) = (step_fn(vals), step_fn(vals2));
            let vec_f = FunctionHandle::new(1, 2, "pair", move |t, x, out| {
                out[0] = a.eval(t, 0)[0];
                out[1] = b.eval(t, 0)[0];
                let _ = x;
            }).with_breaks(vec![AxisBreaks::at((1..6).map(|i| i as f64 / 6.0).chain((1..5).map(|i| i as f64 / 4.0)).chain((1..3).map(|i| i as f64 / 3.0)).collect())]);
            let mapped = vec_f.linear_map(vec![vec![C::new(d1, 0.0), C::new(0.0, 0.0)], vec![C::new(0.0, 0.0), C::new(d2, 0.0)]]).unwrap();
            let p = ExponentField::variable("1+x", 1.0, 2.0, |u| 1.0 + u[0]).unwrap();
            let n0 = luxemburg_norm(&vec_f, 0, &p, &Cube::unit(1), &q(), NORM_TOL).unwrap().value;
            let n1 = luxemburg_norm(&mapped, 0, &p, &Cube::unit(1), &q(), NORM_TOL).unwrap().value;
            prop_assert!(n1 <= d1.abs().max(d2.abs()) * n0 * (1.0 + 1e-6) + 1e-9);
        }
    }
}

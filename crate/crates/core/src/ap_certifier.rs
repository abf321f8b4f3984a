//! ε-almost-period certification for the weighted Weyl classes.
//!
//! A class is fixed by a [`ClassSpec`]: which of the weighted expressions is
//! measured, the exponent field, the pair (φ, 𝔽), equi (one scale `l`) or
//! limsup (tail of a scale schedule), and the translation domain. `certify`
//! looks for `l`, `L` and one witness τ in every probe ball.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_model::{cartesian, Domain, FunctionHandle};
use crate::quadrature::{Cube, Hints, QuadratureConfig};
use crate::vexp_lebesgue::{norm_of, ExponentField, NORM_TOL};
use crate::weyl_metrics::LSchedule;

type RealMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type WeightMap = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Outer function φ with its submultiplicative companion φ̃,
/// `φ(xy) ≤ φ̃(y) φ(x)`.
#[derive(Clone)]
pub struct Phi {
    f: RealMap,
    companion: RealMap,
    pub monotone: bool,
    pub convex: bool,
    label: String,
    identity: bool,
}

impl fmt::Debug for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phi({})", self.label)
    }
}

impl Phi {
    pub fn identity() -> Self {
        Phi { f: Arc::new(|x| x), companion: Arc::new(|y| y), monotone: true, convex: true, label: "id".into(), identity: true }
    }

    /// `x^α` with companion `y^α`; convex iff `α ≥ 1`.
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::IncompatibleSpec(format!("power phi needs alpha > 0, got {alpha}")));
        }
        if alpha == 1.0 {
            return Ok(Phi::identity());
        }
        Ok(Phi {
            f: Arc::new(move |x| x.powf(alpha)),
            companion: Arc::new(move |y| y.powf(alpha)),
            monotone: true,
            convex: alpha >= 1.0,
            label: format!("x^{alpha}"),
            identity: false,
        })
    }

    /// User-supplied φ and φ̃; the declared flags are spot-checked.
    pub fn custom<F, G>(label: impl Into<String>, f: F, companion: G, monotone: bool, convex: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let phi = Phi { f: Arc::new(f), companion: Arc::new(companion), monotone, convex, label: label.into(), identity: false };
        phi.spot_check()?;
        Ok(phi)
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn companion(&self, y: f64) -> f64 {
        (self.companion)(y)
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Checks `φ(0) ≥ 0`, the declared monotonicity and convexity, and the
    /// companion inequality on a fixed log-spaced sample set.
    pub fn spot_check(&self) -> Result<()> {
        let xs: Vec<f64> = std::iter::once(0.0).chain((-12..=12).map(|k| 2f64.powf(k as f64 / 2.0))).collect();
        let bad = |what: &str, x: f64| Err(Error::IncompatibleSpec(format!("phi `{}` fails {what} at {x}", self.label)));
        if !(self.eval(0.0) >= 0.0) {
            return bad("phi(0) >= 0", 0.0);
        }
        for w in xs.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (fa, fb) = (self.eval(a), self.eval(b));
            if !(fa >= 0.0) || !fa.is_finite() {
                return bad("nonnegativity", a);
            }
            if self.monotone && fb < fa * (1.0 - 1e-12) {
                return bad("monotonicity", b);
            }
            if self.convex && self.eval(0.5 * (a + b)) > 0.5 * (fa + fb) * (1.0 + 1e-12) + 1e-300 {
                return bad("midpoint convexity", 0.5 * (a + b));
            }
        }
        for &x in &xs {
            for &y in &xs {
                if self.eval(x * y) > self.companion(y) * self.eval(x) * (1.0 + 1e-9) + 1e-300 {
                    return bad("the companion inequality", x * y);
                }
            }
        }
        Ok(())
    }
}

/// Scale weight 𝔽(l, t).
#[derive(Clone)]
pub enum Weight {
    /// `l^{−σ}`.
    Power { sigma: f64 },
    /// `l^{−n/p}`.
    ConstantP { n: usize, p: f64 },
    Custom { label: String, f: WeightMap, t_independent: bool },
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Weight({})", self.label())
    }
}

impl Weight {
    pub fn custom<F>(label: impl Into<String>, t_independent: bool, f: F) -> Self
    where
        F: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        Weight::Custom { label: label.into(), f: Arc::new(f), t_independent }
    }

    pub fn eval(&self, l: f64, t: &[f64]) -> f64 {
        match self {
            Weight::Power { sigma } => l.powf(-sigma),
            Weight::ConstantP { n, p } => l.powf(-(*n as f64) / p),
            Weight::Custom { f, .. } => f(l, t),
        }
    }

    pub fn t_independent(&self) -> bool {
        match self {
            Weight::Custom { t_independent, .. } => *t_independent,
            _ => true,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Weight::Power { sigma } => format!("l^-{sigma}"),
            Weight::ConstantP { n, p } => format!("l^-({n}/{p})"),
            Weight::Custom { label, .. } => label.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightSpec {
    pub phi: Phi,
    pub weight: Weight,
}

impl WeightSpec {
    pub fn new(phi: Phi, weight: Weight) -> Self {
        WeightSpec { phi, weight }
    }

    /// Weight for a bracketed variant measuring the same quantity as the
    /// parenthesised variant with `self`, for constant `p`:
    /// `‖g(t+l·)‖_{L^p(Ω)} = l^{−n/p} ‖g‖_{L^p(t+lΩ)}`, so
    /// `𝔽_b(l,t) = 𝔽(l,t)·l^{n/p − n}`.
    pub fn bracket_equivalent(&self, n: usize, p: f64) -> WeightSpec {
        let w = self.weight.clone();
        let e = n as f64 / p - n as f64;
        let ti = w.t_independent();
        WeightSpec {
            phi: self.phi.clone(),
            weight: Weight::custom(format!("{}*l^({e})", w.label()), ti, move |l, t| w.eval(l, t) * l.powf(e)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Paren,
    Paren1,
    Paren2,
    Bracket,
    Bracket1,
    Bracket2,
    ConstantP,
    TripleLambda,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::Paren,
        Variant::Paren1,
        Variant::Paren2,
        Variant::Bracket,
        Variant::Bracket1,
        Variant::Bracket2,
        Variant::ConstantP,
        Variant::TripleLambda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Paren => "paren",
            Variant::Paren1 => "paren1",
            Variant::Paren2 => "paren2",
            Variant::Bracket => "bracket",
            Variant::Bracket1 => "bracket1",
            Variant::Bracket2 => "bracket2",
            Variant::ConstantP => "constant-p",
            Variant::TripleLambda => "triple-lambda",
        }
    }

    pub fn parse(s: &str) -> Result<Variant> {
        let k = s.to_ascii_lowercase().replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == k || v.name().replace('-', "") == k.replace('-', ""))
            .ok_or_else(|| Error::InvalidInput(format!("unknown class variant `{s}`")))
    }

    pub fn is_bracket(self) -> bool {
        matches!(self, Variant::Bracket | Variant::Bracket1 | Variant::Bracket2)
    }
}

#[derive(Clone, Debug)]
pub struct ClassSpec {
    pub variant: Variant,
    pub exponent: ExponentField,
    pub weights: WeightSpec,
    pub equi: bool,
    pub domain: Domain,
}

impl ClassSpec {
    pub fn new(variant: Variant, exponent: ExponentField, weights: WeightSpec, equi: bool, domain: Domain) -> Result<Self> {
        let s = ClassSpec { variant, exponent, weights, equi, domain };
        s.validate()?;
        Ok(s)
    }

    /// Constant exponent `p`, φ = id, 𝔽 = `l^{−n/p}`.
    pub fn constant_p(p: f64, equi: bool, domain: Domain) -> Result<Self> {
        let n = domain.n;
        ClassSpec::new(
            Variant::ConstantP,
            ExponentField::constant(p)?,
            WeightSpec::new(Phi::identity(), Weight::ConstantP { n, p }),
            equi,
            domain,
        )
    }

    /// Constant-exponent class with translations restricted to Λ″.
    pub fn triple_lambda(p: f64, equi: bool, domain: Domain) -> Result<Self> {
        let n = domain.n;
        ClassSpec::new(
            Variant::TripleLambda,
            ExponentField::constant(p)?,
            WeightSpec::new(Phi::identity(), Weight::ConstantP { n, p }),
            equi,
            domain,
        )
    }

    /// Parenthesised class with φ = id and `𝔽 = l^{−σ}`.
    pub fn paren_power(p: f64, sigma: f64, equi: bool, domain: Domain) -> Result<Self> {
        ClassSpec::new(
            Variant::Paren,
            ExponentField::constant(p)?,
            WeightSpec::new(Phi::identity(), Weight::Power { sigma }),
            equi,
            domain,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let n = self.domain.n;
        if matches!(self.variant, Variant::ConstantP | Variant::TripleLambda) {
            let Some(p) = self.exponent.as_constant() else {
                return Err(Error::IncompatibleSpec(format!("{} needs a constant exponent", self.variant.name())));
            };
            if !self.weights.phi.is_identity() {
                return Err(Error::IncompatibleSpec(format!("{} forces phi = id", self.variant.name())));
            }
            match &self.weights.weight {
                Weight::ConstantP { n: wn, p: wp } if *wn == n && *wp == p => {}
                w => {
                    return Err(Error::IncompatibleSpec(format!(
                        "{} forces F = l^-(n/p) = l^-({n}/{p}), got {}",
                        self.variant.name(),
                        w.label()
                    )))
                }
            }
        }
        if self.variant == Variant::TripleLambda {
            match &self.domain.lambda_double_prime {
                None => return Err(Error::IncompatibleSpec("triple-lambda needs a declared translation set".into())),
                Some(r) if r.dim() != n => return Err(Error::DimensionMismatch { expected: n, found: r.dim() }),
                _ => {}
            }
            if self.domain.omega != Cube::unit(n) {
                return Err(Error::IncompatibleSpec("triple-lambda is stated for the unit cube".into()));
            }
        }
        Ok(())
    }

    /// Region that witnesses must lie in.
    fn tau_region(&self) -> &crate::function_model::Region {
        match (self.variant, &self.domain.lambda_double_prime) {
            (Variant::TripleLambda, Some(r)) => r,
            _ => &self.domain.lambda_prime,
        }
    }

    /// Spec for `F(c₁·)`: every set divided by `c₁` and `p` composed with the dilation.
    pub fn dilated(&self, c1: f64) -> Result<Self> {
        if c1 == 0.0 || !c1.is_finite() {
            return Err(Error::InvalidInput("dilation factor must be finite and nonzero".into()));
        }
        let d = &self.domain;
        let mut domain = Domain::new(
            d.n,
            d.lambda.divided(c1),
            d.lambda_prime.divided(c1),
            d.probes.iter().map(|p| p.iter().map(|v| v / c1).collect()).collect(),
            d.omega.divided(c1),
            d.t_grid.divided(c1),
        )?;
        if let Some(r) = &d.lambda_double_prime {
            domain = domain.with_double_prime(r.divided(c1))?;
        }
        let w = self.weights.weight.clone();
        let ti = w.t_independent();
        let weights = WeightSpec {
            phi: self.weights.phi.clone(),
            weight: match w {
                Weight::Custom { .. } => Weight::custom(format!("{}[{c1}t]", w.label()), ti, move |l, t| {
                    let s: Vec<f64> = t.iter().map(|v| c1 * v).collect();
                    w.eval(l, &s)
                }),
                other => other,
            },
        };
        Ok(ClassSpec { variant: self.variant, exponent: self.exponent.dilated(c1), weights, equi: self.equi, domain })
    }

    pub fn label(&self) -> String {
        format!(
            "{}{}(p={}, phi={}, F={})",
            if self.equi { "e-" } else { "" },
            self.variant.name(),
            self.exponent.label(),
            self.weights.phi.label(),
            self.weights.weight.label()
        )
    }
}

/// The weighted expression selected by `spec.variant` at `(τ, l, t, x)`.
#[allow(clippy::too_many_arguments)]
pub fn class_quantity(
    f: &FunctionHandle,
    spec: &ClassSpec,
    tau: &[f64],
    l: f64,
    t: &[f64],
    xi: usize,
    q: &QuadratureConfig,
) -> Result<f64> {
    let n = spec.domain.n;
    if f.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.dim() });
    }
    if tau.len() != n || t.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: if tau.len() != n { tau.len() } else { t.len() } });
    }
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::InvalidInput(format!("scale l = {l} must be positive")));
    }
    let omega = &spec.domain.omega;
    let phi = &spec.weights.phi;
    let w = spec.weights.weight.eval(l, t);
    let cell = omega.cell(t, l);
    let diff = |u: &[f64]| {
        let s: smallvec::SmallVec<[f64; 4]> = u.iter().zip(tau).map(|(a, b)| a + b).collect();
        f.gap_norm(&s, f, u, xi)
    };
    let cell_hints = f.diff_hints(tau, &cell);
    let paren_norm = |inner_phi: bool| -> Result<f64> {
        let v = norm_of(
            |u| if inner_phi { phi.eval(diff(u)) } else { diff(u) },
            &cell_hints,
            &spec.exponent,
            &cell,
            q,
            NORM_TOL,
        )?;
        Ok(v.value)
    };
    let bracket_norm = |inner_phi: bool| -> Result<f64> {
        let hints = Hints {
            breaks: cell_hints
                .breaks
                .iter()
                .enumerate()
                .map(|(i, b)| b.iter().map(|x| (x - t[i]) / l).collect())
                .collect(),
            bandwidth: cell_hints.bandwidth * l,
        };
        let mag = |u: &[f64]| {
            let s: smallvec::SmallVec<[f64; 4]> = u.iter().zip(t).map(|(a, b)| b + l * a).collect();
            let d = diff(&s);
            if inner_phi {
                phi.eval(d)
            } else {
                d
            }
        };
        Ok(norm_of(mag, &hints, &spec.exponent, omega, q, NORM_TOL)?.value)
    };
    let ln = l.powi(n as i32);
    let v = match spec.variant {
        Variant::Paren => w * paren_norm(true)?,
        Variant::Paren1 => w * phi.eval(paren_norm(false)?),
        Variant::Paren2 => phi.eval(w * paren_norm(false)?),
        Variant::Bracket => ln * w * bracket_norm(true)?,
        Variant::Bracket1 => ln * w * phi.eval(bracket_norm(false)?),
        Variant::Bracket2 => phi.eval(ln * w * bracket_norm(false)?),
        Variant::ConstantP | Variant::TripleLambda => w * paren_norm(false)?,
    };
    Ok(v)
}

/// Which scales a verification uses.
#[derive(Clone, Copy, Debug)]
pub enum Scales<'a> {
    Fixed(f64),
    /// Maximum over the tail window of the schedule.
    Tail(&'a LSchedule),
}

impl Scales<'_> {
    fn list(&self) -> Vec<f64> {
        match self {
            Scales::Fixed(l) => vec![*l],
            Scales::Tail(s) => s.tail_scales().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodCheck {
    pub pass: bool,
    /// Supremum of the class quantity over scales, grid points and parameters.
    pub worst: f64,
    pub worst_l: f64,
    pub worst_t: Vec<f64>,
    pub worst_x: usize,
}

/// Supremum of the class quantity at `τ` over the probe grid and `B`.
pub fn verify_period(
    f: &FunctionHandle,
    spec: &ClassSpec,
    tau: &[f64],
    eps: f64,
    scales: Scales<'_>,
    b: &[usize],
    q: &QuadratureConfig,
) -> Result<PeriodCheck> {
    if b.is_empty() || b.iter().any(|&x| x >= f.params().len()) {
        return Err(Error::InvalidInput("parameter index set is empty or out of range".into()));
    }
    let mut best = PeriodCheck { pass: true, worst: 0.0, worst_l: 0.0, worst_t: vec![], worst_x: 0 };
    for l in scales.list() {
        let pts = spec.domain.t_points(l)?;
        let jobs: Vec<(usize, usize)> = (0..pts.len()).flat_map(|i| b.iter().map(move |&x| (i, x))).collect();
        let vals = jobs
            .par_iter()
            .map(|&(i, x)| class_quantity(f, spec, tau, l, &pts[i], x, q))
            .collect::<Result<Vec<f64>>>()?;
        for (v, &(i, x)) in vals.iter().zip(&jobs) {
            if *v > best.worst || best.worst_t.is_empty() {
                best = PeriodCheck { pass: true, worst: *v, worst_l: l, worst_t: pts[i].clone(), worst_x: x };
            }
        }
    }
    best.pass = best.worst < eps;
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub probe: Vec<f64>,
    pub tau: Vec<f64>,
    pub measured: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub class: String,
    pub epsilon: f64,
    /// Scale of an equi class; limsup classes carry `l_schedule` instead.
    pub l: Option<f64>,
    pub l_schedule: Option<Vec<f64>>,
    pub big_l: f64,
    pub witnesses: Vec<Witness>,
    pub grid_fingerprint: String,
    pub quadrature_fingerprint: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeFailure {
    pub probe: Vec<f64>,
    pub scanned: usize,
    /// Smallest class quantity over the scanned translations.
    pub min_quantity: f64,
    pub best_tau: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureTrace {
    pub class: String,
    pub epsilon: f64,
    /// Last `(l, L)` tried; `l` is absent for limsup classes.
    pub l: Option<f64>,
    pub big_l: f64,
    pub failures: Vec<ProbeFailure>,
    /// Search stopped because `max_evaluations` was reached.
    pub budget_exhausted: bool,
    pub evaluations: usize,
    /// "not certified at resolution R".
    pub resolution: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    Certified(Certificate),
    NotCertified(FailureTrace),
}

impl Outcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, Outcome::Certified(_))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TauSource {
    /// Points of `step·Zⁿ`.
    Lattice { step: f64 },
    /// Explicit translations, scanned in the given order.
    Candidates(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Scales tried for equi classes.
    pub l_schedule: Vec<f64>,
    /// Schedule whose tail is used for limsup classes.
    pub limsup: LSchedule,
    /// Ball radii, tried in order for every scale.
    pub big_l: Vec<f64>,
    pub tau: TauSource,
    /// Cap on the number of translations verified.
    pub max_evaluations: usize,
    pub quad: QuadratureConfig,
}

impl SearchConfig {
    pub fn new(l_schedule: Vec<f64>, big_l: Vec<f64>, step: f64) -> Result<Self> {
        let s = SearchConfig {
            l_schedule,
            limsup: LSchedule::geometric(1.0, 2.0, 10, 3, 1e-3)?,
            big_l,
            tau: TauSource::Lattice { step },
            max_evaluations: 200_000,
            quad: QuadratureConfig::default(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l_schedule.is_empty() || self.l_schedule.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::InvalidSchedule("l schedule must be nonempty and positive".into()));
        }
        if self.big_l.is_empty() || self.big_l.iter().any(|l| !(*l >= 0.0)) {
            return Err(Error::InvalidSchedule("L schedule must be nonempty and nonnegative".into()));
        }
        if let TauSource::Lattice { step } = self.tau {
            if !(step > 0.0) {
                return Err(Error::InvalidInput("translation lattice step must be positive".into()));
            }
        }
        self.quad.validate()
    }
}

fn euclid_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Translations in `B(t₀, L)` that lie in the witness region, lexicographic.
fn ball_taus(spec: &ClassSpec, src: &TauSource, t0: &[f64], big_l: f64) -> Vec<Vec<f64>> {
    let region = spec.tau_region();
    let inside = |tau: &[f64]| euclid_dist(tau, t0) <= big_l * (1.0 + 1e-12) && region.contains(tau);
    match src {
        TauSource::Lattice { step } => {
            let axes: Vec<Vec<f64>> = t0
                .iter()
                .map(|c| {
                    let k0 = ((c - big_l) / step).ceil() as i64;
                    let k1 = ((c + big_l) / step).floor() as i64;
                    (k0..=k1).map(|k| k as f64 * step).collect()
                })
                .collect();
            cartesian(&axes).into_iter().filter(|t| inside(t)).collect()
        }
        TauSource::Candidates(c) => c.iter().filter(|t| t.len() == t0.len() && inside(t)).cloned().collect(),
    }
}

enum ProbeResult {
    Found(Witness),
    Missing(ProbeFailure),
    Budget(ProbeFailure),
}

fn scan_probe(
    f: &FunctionHandle,
    spec: &ClassSpec,
    eps: f64,
    scales: Scales<'_>,
    t0: &[f64],
    big_l: f64,
    cfg: &SearchConfig,
    used: &mut usize,
) -> Result<ProbeResult> {
    let b = f.param_indices();
    let mut fail = ProbeFailure { probe: t0.to_vec(), scanned: 0, min_quantity: f64::INFINITY, best_tau: None };
    for tau in ball_taus(spec, &cfg.tau, t0, big_l) {
        if *used >= cfg.max_evaluations {
            return Ok(ProbeResult::Budget(fail));
        }
        *used += 1;
        let v = verify_period(f, spec, &tau, eps, scales, &b, &cfg.quad)?;
        fail.scanned += 1;
        if v.pass {
            return Ok(ProbeResult::Found(Witness { probe: t0.to_vec(), tau, measured: v.worst }));
        }
        if v.worst < fail.min_quantity {
            fail.min_quantity = v.worst;
            fail.best_tau = Some(tau);
        }
    }
    Ok(ProbeResult::Missing(fail))
}

/// Searches `(l, L)` and one ε-period per probe ball.
///
/// Probes are scanned in declaration order and translations in lexicographic
/// order; the first passing translation is the witness.
pub fn certify(f: &FunctionHandle, spec: &ClassSpec, eps: f64, cfg: &SearchConfig) -> Result<Outcome> {
    spec.validate()?;
    cfg.validate()?;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if spec.domain.probes.is_empty() {
        return Err(Error::InvalidInput("the probe list of the translation domain is empty".into()));
    }
    let ls: Vec<Option<f64>> = if spec.equi { cfg.l_schedule.iter().map(|l| Some(*l)).collect() } else { vec![None] };
    let mut used = 0usize;
    let mut last: Option<FailureTrace> = None;
    for l in &ls {
        let scales = match l {
            Some(l) => Scales::Fixed(*l),
            None => Scales::Tail(&cfg.limsup),
        };
        for &big_l in &cfg.big_l {
            let mut witnesses = Vec::new();
            let mut failures = Vec::new();
            let mut exhausted = false;
            for t0 in &spec.domain.probes {
                match scan_probe(f, spec, eps, scales, t0, big_l, cfg, &mut used)? {
                    ProbeResult::Found(w) => witnesses.push(w),
                    ProbeResult::Missing(p) => {
                        failures.push(p);
                        // One empty ball rules out this (l, L).
                        break;
                    }
                    ProbeResult::Budget(p) => {
                        failures.push(p);
                        exhausted = true;
                        break;
                    }
                }
            }
            if failures.is_empty() {
                let grid_l = l.unwrap_or_else(|| cfg.limsup.last());
                return Ok(Outcome::Certified(Certificate {
                    class: spec.label(),
                    epsilon: eps,
                    l: *l,
                    l_schedule: l.is_none().then(|| cfg.limsup.tail_scales().to_vec()),
                    big_l,
                    witnesses,
                    grid_fingerprint: spec.domain.fingerprint(grid_l),
                    quadrature_fingerprint: cfg.quad.fingerprint(),
                }));
            }
            let grid_l = l.unwrap_or_else(|| cfg.limsup.last());
            let trace = FailureTrace {
                class: spec.label(),
                epsilon: eps,
                l: *l,
                big_l,
                failures,
                budget_exhausted: exhausted,
                evaluations: used,
                resolution: format!("{};{}", spec.domain.fingerprint(grid_l), cfg.quad.fingerprint()),
            };
            if exhausted {
                return Ok(Outcome::NotCertified(trace));
            }
            last = Some(trace);
        }
    }
    let mut trace = last.expect("at least one (l, L) pair is tried");
    // The last pair is reported in full: every probe, not only the first gap.
    let scales = match trace.l {
        Some(l) => Scales::Fixed(l),
        None => Scales::Tail(&cfg.limsup),
    };
    let mut full = Vec::new();
    for t0 in &spec.domain.probes {
        if let ProbeResult::Missing(p) | ProbeResult::Budget(p) =
            scan_probe(f, spec, eps, scales, t0, trace.big_l, cfg, &mut 0usize)?
        {
            full.push(p);
        }
    }
    trace.failures = full;
    Ok(Outcome::NotCertified(trace))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayRow {
    pub probe: Vec<f64>,
    pub tau: Vec<f64>,
    pub stored: f64,
    pub recomputed: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub rows: Vec<ReplayRow>,
    /// Every recomputed value equals the stored one bit for bit.
    pub identical: bool,
    pub all_below_epsilon: bool,
}

/// Re-verifies every stored witness with the certificate's own scales.
pub fn replay(
    f: &FunctionHandle,
    spec: &ClassSpec,
    cert: &Certificate,
    limsup: &LSchedule,
    q: &QuadratureConfig,
) -> Result<ReplayReport> {
    let b = f.param_indices();
    let tail;
    let scales = match (cert.l, &cert.l_schedule) {
        (Some(l), _) => Scales::Fixed(l),
        (None, Some(s)) => {
            if s.as_slice() != limsup.tail_scales() {
                return Err(Error::InvalidSchedule("certificate tail differs from the supplied schedule".into()));
            }
            tail = limsup.clone();
            Scales::Tail(&tail)
        }
        (None, None) => return Err(Error::InvalidInput("certificate carries neither l nor a schedule".into())),
    };
    let mut rows = Vec::with_capacity(cert.witnesses.len());
    for w in &cert.witnesses {
        let v = verify_period(f, spec, &w.tau, cert.epsilon, scales, &b, q)?;
        rows.push(ReplayRow { probe: w.probe.clone(), tau: w.tau.clone(), stored: w.measured, recomputed: v.worst });
    }
    let identical = rows.iter().all(|r| r.stored.to_bits() == r.recomputed.to_bits());
    let all_below_epsilon = rows.iter().all(|r| r.recomputed < cert.epsilon);
    Ok(ReplayReport { rows, identical, all_below_epsilon })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformContinuity {
    pub delta: f64,
    pub l: f64,
    /// Largest scaled translate difference over `|v| ≤ δ`.
    pub worst: f64,
}

/// Finds `δ, l` with `sup_t l^{−n/p}‖F(t+·+v) − F(t+·)‖_{L^p(lΩ)} < ε` for
/// every `v` of the `δ/k` lattice in the closed δ-ball.
///
/// Scales are tried in order and, for each, the largest δ first.
#[allow(clippy::too_many_arguments)]
pub fn equi_uniform_continuity_check(
    f: &FunctionHandle,
    p: f64,
    eps: f64,
    delta_schedule: &[f64],
    l_schedule: &[f64],
    domain: &Domain,
    per_axis: usize,
    q: &QuadratureConfig,
) -> Result<Option<UniformContinuity>> {
    let spec = ClassSpec::constant_p(p, true, domain.clone())?;
    let b = f.param_indices();
    let mut deltas = delta_schedule.to_vec();
    deltas.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let k = per_axis.max(1) as i64;
    for &l in l_schedule {
        'delta: for &delta in &deltas {
            let h = delta / k as f64;
            let axes: Vec<Vec<f64>> = (0..domain.n).map(|_| (-k..=k).map(|j| j as f64 * h).collect()).collect();
            let mut worst: f64 = 0.0;
            for v in cartesian(&axes) {
                if euclid_dist(&v, &vec![0.0; domain.n]) > delta * (1.0 + 1e-12) {
                    continue;
                }
                let c = verify_period(f, &spec, &v, eps, Scales::Fixed(l), &b, q)?;
                worst = worst.max(c.worst);
                if !c.pass {
                    continue 'delta;
                }
            }
            return Ok(Some(UniformContinuity { delta, l, worst }));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepanovBound {
    pub l: f64,
    /// `ε·l^{n/p} + sup_{|v| ≤ M+L} ‖F‖_{L^p(v+lΩ)}`.
    pub m_prime: f64,
    pub reach_sup: f64,
    /// `sup_t ‖F‖_{L^p(t+lΩ)}` on the probe grid.
    pub grid_sup: f64,
    pub holds: bool,
}

/// Bound on the unnormalized cell norms of an equi-certified function.
///
/// Every `t` is reached from `|v| ≤ M` by a translation whose ε-period lies
/// within `L`, so `‖F‖_{L^p(t+lΩ)} ≤ ε l^{n/p} + sup_{|v|≤M+L} ‖F‖_{L^p(v+lΩ)}`.
pub fn stepanov_bound_from_ap(
    f: &FunctionHandle,
    spec: &ClassSpec,
    outcome: &Outcome,
    m_reach: f64,
    q: &QuadratureConfig,
) -> Result<StepanovBound> {
    let cert = match outcome {
        Outcome::Certified(c) => c,
        Outcome::NotCertified(_) => {
            return Err(Error::Precondition(format!("`{}` is not certified equi-Weyl at this resolution", f.label())))
        }
    };
    let (Some(l), Some(p), true) = (cert.l, spec.exponent.as_constant(), spec.equi) else {
        return Err(Error::Precondition("an equi certificate with constant exponent is required".into()));
    };
    let n = spec.domain.n;
    let zero = FunctionHandle::zero(n, f.arity()).with_params(f.params().to_vec());
    let b = f.param_indices();
    let cell_sup = |pts: &[Vec<f64>]| -> Result<f64> {
        // `stepanov_distance_at` scales by l^{−n/p}; undo it.
        let s = crate::weyl_metrics::stepanov_distance_at(f, &zero, p, l, &spec.domain.omega, pts, &b, q)?;
        Ok(s * l.powf(n as f64 / p))
    };
    let r = m_reach + cert.big_l;
    let h = (l / 4.0).min(r.max(l) / 8.0);
    let k = (r / h).ceil() as i64;
    let axes: Vec<Vec<f64>> = (0..n).map(|_| (-k..=k).map(|j| j as f64 * h).collect()).collect();
    let ball: Vec<Vec<f64>> =
        cartesian(&axes).into_iter().filter(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt() <= r * (1.0 + 1e-12)).collect();
    let reach_sup = cell_sup(&ball)?;
    let grid_sup = cell_sup(&spec.domain.t_points(l)?)?;
    let m_prime = cert.epsilon * l.powf(n as f64 / p) + reach_sup;
    Ok(StepanovBound { l, m_prime, reach_sup, grid_sup, holds: crate::weyl_metrics::within(grid_sup, m_prime) })
}

/// Level at which `cF` is certified with the witnesses of `F`:
/// `φ(|c|·d) ≤ φ̃(|c|) φ(d)` gives `ε·φ̃(|c|)` for inner-φ variants.
pub fn scalar_multiple_level(phi: &Phi, c: f64, eps: f64) -> f64 {
    eps * phi.companion(c.abs()).max(f64::MIN_POSITIVE)
}

/// Maps the witnesses of `F` to the dilated function `F(c₁·)`.
pub fn dilate_certificate(cert: &Certificate, c1: f64) -> Certificate {
    let mut out = cert.clone();
    for w in &mut out.witnesses {
        w.probe.iter_mut().for_each(|v| *v /= c1);
        w.tau.iter_mut().for_each(|v| *v /= c1);
    }
    out.big_l = cert.big_l / c1.abs();
    out.class = format!("{}[{c1}t]", cert.class);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_model::{gallery_chi_half, sine, Region};
    use proptest::prelude::*;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn dom(probes: Vec<Vec<f64>>, lo: f64, hi: f64, step: f64) -> Domain {
        Domain::euclidean(1, probes, lo, hi, step).unwrap()
    }

    /// `∫_{t}^{t+l} |χ(u+τ) − χ(u)| du` for χ = 1 on [0, 1/2], by interval algebra.
    fn chi_oracle(t: f64, l: f64, tau: f64) -> f64 {
        let overlap = |a: f64, b: f64| (b.min(t + l) - a.max(t)).max(0.0);
        let (a1, b1) = (-tau, 0.5 - tau);
        let both = (b1.min(0.5) - a1.max(0.0)).max(0.0);
        let common = if both > 0.0 { overlap(a1.max(0.0), b1.min(0.5)) } else { 0.0 };
        overlap(a1, b1) + overlap(0.0, 0.5) - 2.0 * common
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(Variant::parse(v.name()).unwrap(), v);
        }
        assert_eq!(Variant::parse("PAREN_1").unwrap(), Variant::Paren1);
        assert!(Variant::parse("round").is_err());
    }

    #[test]
    fn spec_compatibility() {
        let d = dom(vec![vec![0.0]], -1.0, 1.0, 1.0);
        let e = ExponentField::constant(2.0).unwrap();
        let bad = ClassSpec::new(Variant::ConstantP, e.clone(), WeightSpec::new(Phi::identity(), Weight::Power { sigma: 1.0 }), true, d.clone());
        assert!(matches!(bad, Err(Error::IncompatibleSpec(_))));
        assert!(matches!(ClassSpec::triple_lambda(2.0, true, d.clone()), Err(Error::IncompatibleSpec(_))));
        let with = d.with_double_prime(Region::whole(1)).unwrap();
        assert!(ClassSpec::triple_lambda(2.0, true, with).is_ok());
        let var = ExponentField::variable("1+x^2", 1.0, 3.0, |x| 1.0 + x[0].abs().min(2.0)).unwrap();
        let r = ClassSpec::new(Variant::ConstantP, var, WeightSpec::new(Phi::identity(), Weight::ConstantP { n: 1, p: 2.0 }), true, dom(vec![], 0.0, 1.0, 1.0));
        assert!(r.is_err());
    }

    #[test]
    fn phi_spot_checks() {
        assert!(Phi::identity().spot_check().is_ok());
        assert!(Phi::power(2.0).unwrap().spot_check().is_ok());
        assert!(Phi::power(0.5).unwrap().spot_check().is_ok());
        assert!(Phi::custom("sqrt-declared-convex", |x: f64| x.sqrt(), |y: f64| y.sqrt(), true, true).is_err());
        assert!(Phi::custom("bad-companion", |x: f64| x * x, |y: f64| y, true, true).is_err());
    }

    #[test]
    fn tau_zero_gives_zero() {
        let d = dom(vec![vec![0.0]], -2.0, 2.0, 0.5);
        for v in Variant::ALL {
            let spec = match v {
                Variant::ConstantP => ClassSpec::constant_p(1.5, true, d.clone()).unwrap(),
                Variant::TripleLambda => ClassSpec::triple_lambda(1.5, true, d.clone().with_double_prime(Region::whole(1)).unwrap()).unwrap(),
                _ => ClassSpec::new(v, ExponentField::constant(1.5).unwrap(), WeightSpec::new(Phi::power(2.0).unwrap(), Weight::Power { sigma: 0.5 }), true, d.clone()).unwrap(),
            };
            assert_eq!(class_quantity(&sine(), &spec, &[0.0], 3.0, &[0.7], 0, &q()).unwrap(), 0.0, "{v:?}");
        }
    }

    #[test]
    fn paren_matches_interval_oracle() {
        let d = dom(vec![vec![0.0]], -2.0, 2.0, 0.5);
        let spec = ClassSpec::paren_power(1.0, 1.0, true, d).unwrap();
        for (tau, l, t) in [(0.3, 2.0, 0.0), (0.3, 1.0, -0.4), (1.7, 3.0, -2.0), (-0.2, 0.25, 0.3)] {
            let v = class_quantity(&gallery_chi_half(), &spec, &[tau], l, &[t], 0, &q()).unwrap();
            assert!((v - chi_oracle(t, l, tau) / l).abs() < 1e-12, "tau={tau} l={l} t={t}: {v}");
        }
    }

    #[test]
    fn bracket_equals_paren_with_paired_weight() {
        let d = dom(vec![vec![0.0]], -2.0, 2.0, 0.5);
        let p = 2.0;
        let ws = WeightSpec::new(Phi::identity(), Weight::ConstantP { n: 1, p });
        let paren = ClassSpec::new(Variant::Paren, ExponentField::constant(p).unwrap(), ws.clone(), true, d.clone()).unwrap();
        let bracket = ClassSpec::new(Variant::Bracket, ExponentField::constant(p).unwrap(), ws.bracket_equivalent(1, p), true, d).unwrap();
        let a = class_quantity(&gallery_chi_half(), &paren, &[0.3], 2.0, &[0.0], 0, &q()).unwrap();
        let b = class_quantity(&gallery_chi_half(), &bracket, &[0.3], 2.0, &[0.0], 0, &q()).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!((a - (chi_oracle(0.0, 2.0, 0.3) / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn chi_half_period_verdicts() {
        let d = dom(vec![vec![0.0]], -3.0, 3.0, 0.25);
        let s1 = ClassSpec::paren_power(1.0, 1.0, true, d.clone()).unwrap();
        let v = verify_period(&gallery_chi_half(), &s1, &[0.3], 0.1, Scales::Fixed(100.0), &[0], &q()).unwrap();
        assert!(v.pass && v.worst <= 0.006 + 1e-12);
        let s0 = ClassSpec::paren_power(1.0, 0.0, true, d).unwrap();
        for l in [1.0, 10.0, 100.0] {
            let v = verify_period(&gallery_chi_half(), &s0, &[0.3], 0.1, Scales::Fixed(l), &[0], &q()).unwrap();
            assert!(!v.pass && (v.worst - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_function_certifies_with_exact_period() {
        let d = dom(vec![vec![20.0], vec![-50.0]], -5.0, 5.0, 1.0);
        let spec = ClassSpec::constant_p(2.0, true, d).unwrap();
        let mut cfg = SearchConfig::new(vec![1.0], vec![4.0], 1.0).unwrap();
        cfg.tau = TauSource::Candidates((-20..=20).map(|k| vec![k as f64 * std::f64::consts::TAU]).collect());
        match certify(&sine(), &spec, 1e-6, &cfg).unwrap() {
            Outcome::Certified(c) => {
                assert_eq!(c.witnesses.len(), 2);
                for w in &c.witnesses {
                    assert!((w.tau[0] - w.probe[0]).abs() <= 4.0);
                    assert!(w.measured < 1e-6);
                }
                let r = replay(&sine(), &spec, &c, &cfg.limsup, &cfg.quad).unwrap();
                assert!(r.identical && r.all_below_epsilon);
            }
            Outcome::NotCertified(t) => panic!("{t:?}"),
        }
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let d = dom(vec![vec![10.0]], -2.0, 2.0, 1.0);
        let spec = ClassSpec::paren_power(1.0, 0.0, true, d).unwrap();
        let mut cfg = SearchConfig::new(vec![1.0], vec![2.0], 0.5).unwrap();
        cfg.max_evaluations = 3;
        match certify(&gallery_chi_half(), &spec, 0.1, &cfg).unwrap() {
            Outcome::NotCertified(t) => assert!(t.budget_exhausted && t.evaluations == 3),
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn uniform_continuity_of_sine_and_constants() {
        let d = dom(vec![], -3.0, 3.0, 0.5);
        let c = FunctionHandle::constant(1, crate::Complex64::new(2.0, 0.0));
        let r = equi_uniform_continuity_check(&c, 1.0, 0.01, &[1.0, 0.1], &[1.0], &d, 2, &q()).unwrap().unwrap();
        assert_eq!(r.delta, 1.0);
        // |sin(u+v) − sin u| ≤ |v|, so δ = ε/2 passes and δ = 4ε does not for p = ∞-like sup at p = 1.
        let r = equi_uniform_continuity_check(&sine(), 1.0, 0.1, &[0.4, 0.05], &[1.0], &d, 2, &q()).unwrap().unwrap();
        assert_eq!(r.delta, 0.05);
        assert!(r.worst <= 0.05 + 1e-12);
    }

    #[test]
    fn dilation_maps_witnesses() {
        let d = dom(vec![vec![4.0]], -4.0, 4.0, 0.5);
        let spec = ClassSpec::paren_power(1.0, 1.0, true, d).unwrap();
        let cfg = SearchConfig::new(vec![10.0], vec![2.0], 0.5).unwrap();
        let Outcome::Certified(cert) = certify(&gallery_chi_half(), &spec, 0.2, &cfg).unwrap() else { panic!() };
        for c1 in [2.0, -1.0, 0.5] {
            let g = gallery_chi_half().dilated(c1, 1.0).unwrap();
            let ds = spec.dilated(c1).unwrap();
            let dc = dilate_certificate(&cert, c1);
            for (w, w0) in dc.witnesses.iter().zip(&cert.witnesses) {
                let v = verify_period(&g, &ds, &w.tau, 0.2, Scales::Fixed(10.0), &[0], &q()).unwrap();
                // Cells shrink by |c₁| in every direction: exact factor |c₁|^{-n}.
                assert!((v.worst - w0.measured / c1.abs()).abs() < 1e-9, "c1={c1}: {} vs {}", v.worst, w0.measured);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn paren_oracle_property(tau in -2.0f64..2.0, l in 0.1f64..6.0, t in -3.0f64..3.0) {
            let d = dom(vec![vec![0.0]], -1.0, 1.0, 1.0);
            let spec = ClassSpec::paren_power(1.0, 0.0, true, d).unwrap();
            let v = class_quantity(&gallery_chi_half(), &spec, &[tau], l, &[t], 0, &q()).unwrap();
            prop_assert!((v - chi_oracle(t, l, tau)).abs() < 1e-9);
        }

        #[test]
        fn scalar_multiple_scales_linearly(c in -3.0f64..3.0, tau in -1.0f64..1.0) {
            let d = dom(vec![vec![0.0]], -1.0, 1.0, 1.0);
            let spec = ClassSpec::paren_power(1.0, 1.0, true, d).unwrap();
            let f = gallery_chi_half();
            let a = class_quantity(&f, &spec, &[tau], 2.0, &[0.0], 0, &q()).unwrap();
            let b = class_quantity(&f.scaled(crate::Complex64::new(c, 0.0)), &spec, &[tau], 2.0, &[0.0], 0, &q()).unwrap();
            prop_assert!((b - c.abs() * a).abs() < 1e-12);
            prop_assert!(b <= scalar_multiple_level(&Phi::identity(), c, a) + 1e-12);
        }
    }
}

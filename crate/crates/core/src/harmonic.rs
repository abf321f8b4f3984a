//! Trigonometric polynomials, Bohr–Fourier mean values over growing cubes,
//! spectrum scans and Weyl approximation by trigonometric polynomials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap_certifier::{self, ClassSpec, Outcome, SearchConfig, TauSource};
use crate::error::{Error, Result};
use crate::function_model::{cartesian, euclid, Domain, FunctionHandle};
use crate::quadrature::{integrate_complex, Cube, Hints, QuadratureConfig};
use crate::weyl_metrics::{self, ConvergenceReport, LSchedule, WeylEstimate};
use crate::Complex64;

/// Finite sum `Σ_j c_j e^{i⟨λ_j, t⟩}` with vector coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigPolynomial {
    terms: Vec<(Vec<f64>, Vec<Complex64>)>,
}

impl TrigPolynomial {
    pub fn new(terms: Vec<(Vec<f64>, Vec<Complex64>)>) -> Result<Self> {
        let Some((l0, c0)) = terms.first() else {
            return Err(Error::InvalidInput("a trigonometric polynomial needs at least one term".into()));
        };
        let (n, k) = (l0.len(), c0.len());
        if n == 0 || k == 0 {
            return Err(Error::InvalidInput("frequency and coefficient vectors must be nonempty".into()));
        }
        for (l, c) in &terms {
            if l.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: l.len() });
            }
            if c.len() != k {
                return Err(Error::DimensionMismatch { expected: k, found: c.len() });
            }
            if l.iter().any(|v| !v.is_finite()) || c.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput("frequencies and coefficients must be finite".into()));
            }
        }
        Ok(TrigPolynomial { terms })
    }

    /// Scalar polynomial from `(λ, c)` pairs.
    pub fn scalar(terms: Vec<(Vec<f64>, Complex64)>) -> Result<Self> {
        TrigPolynomial::new(terms.into_iter().map(|(l, c)| (l, vec![c])).collect())
    }

    pub fn dim(&self) -> usize {
        self.terms[0].0.len()
    }

    pub fn arity(&self) -> usize {
        self.terms[0].1.len()
    }

    pub fn terms(&self) -> &[(Vec<f64>, Vec<Complex64>)] {
        &self.terms
    }

    pub fn eval_into(&self, t: &[f64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (l, c) in &self.terms {
            let e = Complex64::from_polar(1.0, l.iter().zip(t).map(|(a, b)| a * b).sum());
            for (o, ci) in out.iter_mut().zip(c) {
                *o += ci * e;
            }
        }
    }

    pub fn eval(&self, t: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.arity()];
        self.eval_into(t, &mut out);
        out
    }

    /// `Σ_j ‖c_j‖`, a uniform bound.
    pub fn coefficient_mass(&self) -> f64 {
        self.terms.iter().map(|(_, c)| euclid(c)).sum()
    }

    /// Largest `|λ_j|`.
    pub fn bandwidth(&self) -> f64 {
        self.terms.iter().map(|(l, _)| l.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    /// Declared coefficient at `lambda` (sum over equal frequencies), zero otherwise.
    pub fn coefficient(&self, lambda: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.arity()];
        for (l, c) in &self.terms {
            if l.as_slice() == lambda {
                for (o, ci) in out.iter_mut().zip(c) {
                    *o += ci;
                }
            }
        }
        out
    }

    /// `sup_t ‖P(t+τ) − P(t)‖ ≤ Σ_j ‖c_j‖ |e^{i⟨λ_j,τ⟩} − 1|`.
    pub fn translation_bound(&self, tau: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(l, c)| {
                let ph: f64 = l.iter().zip(tau).map(|(a, b)| a * b).sum();
                euclid(c) * (Complex64::from_polar(1.0, ph) - 1.0).norm()
            })
            .sum()
    }

    pub fn to_handle(&self, label: &str) -> FunctionHandle {
        let me = self.clone();
        FunctionHandle::new(self.dim(), self.arity(), label, move |t, _x, out| me.eval_into(t, out))
            .with_sup_bound(self.coefficient_mass())
            .with_bandwidth(self.bandwidth())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientEstimate {
    /// Tail value of the mean along the schedule.
    pub value: Vec<Complex64>,
    /// `(T, mean over the cube of side T)`.
    pub samples: Vec<(f64, Vec<Complex64>)>,
    pub report: ConvergenceReport,
    /// Unit-cell Stepanov sup near the averaging region.
    pub stepanov_sup: f64,
}

impl CoefficientEstimate {
    /// First component, for scalar functions.
    pub fn scalar(&self) -> Complex64 {
        self.value[0]
    }

    pub fn modulus(&self) -> f64 {
        euclid(&self.value)
    }
}

fn vector_report(samples: &[(f64, Vec<Complex64>)], schedule: &LSchedule) -> Result<ConvergenceReport> {
    let mut r = ConvergenceReport::from_samples(
        samples.iter().map(|(t, v)| (*t, euclid(v))).collect(),
        schedule.tail,
        schedule.tol,
    )?;
    let w = &samples[samples.len() - schedule.tail.min(samples.len())..];
    let mut gap: f64 = 0.0;
    for (i, a) in w.iter().enumerate() {
        for b in &w[i + 1..] {
            let d: Vec<Complex64> = a.1.iter().zip(&b.1).map(|(x, y)| x - y).collect();
            gap = gap.max(euclid(&d));
        }
    }
    r.cauchy_gap = gap;
    r.converged = w.len() >= 2 && gap < schedule.tol;
    Ok(r)
}

/// Unit-cell Stepanov sup of `F` over a `9^n` probe grid spread across
/// `s + [a, b]^n`; the mean value is only attempted when this is finite.
pub fn stepanov_precondition(f: &FunctionHandle, s: &[f64], a: f64, b: f64, xi: usize, q: &QuadratureConfig) -> Result<f64> {
    let n = f.dim();
    let axes: Vec<Vec<f64>> = (0..n).map(|i| (0..9).map(|j| s[i] + a + (b - a) * j as f64 / 8.0).collect()).collect();
    let zero = FunctionHandle::zero(n, f.arity()).with_params(f.params().to_vec());
    let sup = weyl_metrics::stepanov_distance_at(f, &zero, 1.0, 1.0, &Cube::unit(n), &cartesian(&axes), &[xi], q)?;
    if !sup.is_finite() {
        return Err(Error::Precondition("function is not Stepanov bounded near the averaging region".into()));
    }
    Ok(sup)
}

fn check_lambda(f: &FunctionHandle, lambda: &[f64], s: &[f64]) -> Result<()> {
    if lambda.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: lambda.len() });
    }
    if s.len() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: s.len() });
    }
    Ok(())
}

/// Mean of `e^{-i⟨λ,t⟩}F(t)` over `cube`, componentwise.
fn cube_mean(f: &FunctionHandle, lambda: &[f64], cube: &Cube, xi: usize, q: &QuadratureConfig) -> Result<Vec<Complex64>> {
    let lam_norm = lambda.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hints = f.hints(cube).merge(Hints { breaks: vec![], bandwidth: f.bandwidth() + lam_norm });
    let vol = cube.volume();
    (0..f.arity())
        .map(|c| {
            let r = integrate_complex(cube, &hints, q, |t| {
                let ph: f64 = lambda.iter().zip(t).map(|(a, b)| a * b).sum();
                Complex64::from_polar(1.0, -ph) * f.eval(t, xi)[c]
            })?;
            Ok(r.value / vol)
        })
        .collect()
}

fn coefficient_along(
    f: &FunctionHandle,
    lambda: &[f64],
    schedule: &LSchedule,
    xi: usize,
    q: &QuadratureConfig,
    stepanov_sup: f64,
    cube_at: impl Fn(f64) -> Result<Cube>,
) -> Result<CoefficientEstimate> {
    let mut samples = Vec::with_capacity(schedule.scales.len());
    for &t in &schedule.scales {
        samples.push((t, cube_mean(f, lambda, &cube_at(t)?, xi, q)?));
    }
    let report = vector_report(&samples, schedule)?;
    Ok(CoefficientEstimate { value: samples.last().unwrap().1.clone(), samples, report, stepanov_sup })
}

/// `(1/Tⁿ) ∫_{s+[0,T]ⁿ} e^{−i⟨λ,t⟩} F(t) dt` along the schedule of `T`.
pub fn bohr_fourier_coefficient(
    f: &FunctionHandle,
    lambda: &[f64],
    schedule: &LSchedule,
    s: &[f64],
    xi: usize,
    q: &QuadratureConfig,
) -> Result<CoefficientEstimate> {
    check_lambda(f, lambda, s)?;
    let sup = stepanov_precondition(f, s, 0.0, schedule.last(), xi, q)?;
    coefficient_along(f, lambda, schedule, xi, q, sup, |t| Cube::new(s.to_vec(), vec![t; s.len()]))
}

/// `(1/(2T)ⁿ) ∫_{s+[−T,T]ⁿ} e^{−i⟨λ,t⟩} F(t) dt` along the schedule of `T`.
pub fn symmetric_cube_coefficient(
    f: &FunctionHandle,
    lambda: &[f64],
    schedule: &LSchedule,
    s: &[f64],
    xi: usize,
    q: &QuadratureConfig,
) -> Result<CoefficientEstimate> {
    check_lambda(f, lambda, s)?;
    let last = schedule.last();
    let sup = stepanov_precondition(f, s, -last, last, xi, q)?;
    coefficient_along(f, lambda, schedule, xi, q, sup, |t| {
        Cube::new(s.iter().map(|v| v - t).collect(), vec![2.0 * t; s.len()])
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftCheck {
    pub base: Vec<Complex64>,
    /// `(s, |mean over s+[0,T]ⁿ − mean over [0,T]ⁿ|)`.
    pub deviations: Vec<(Vec<f64>, f64)>,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Compares the mean over `[0,T]ⁿ` with the means over `s+[0,T]ⁿ`.
#[allow(clippy::too_many_arguments)]
pub fn shift_independence_check(
    f: &FunctionHandle,
    lambda: &[f64],
    t: f64,
    s_list: &[Vec<f64>],
    eps: f64,
    xi: usize,
    q: &QuadratureConfig,
) -> Result<ShiftCheck> {
    let n = f.dim();
    let origin = vec![0.0; n];
    check_lambda(f, lambda, &origin)?;
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("averaging side T = {t} must be positive")));
    }
    let base = cube_mean(f, lambda, &Cube::new(origin, vec![t; n])?, xi, q)?;
    let mut deviations = Vec::with_capacity(s_list.len());
    for s in s_list {
        check_lambda(f, lambda, s)?;
        let m = cube_mean(f, lambda, &Cube::new(s.clone(), vec![t; n])?, xi, q)?;
        let d: Vec<Complex64> = m.iter().zip(&base).map(|(a, b)| a - b).collect();
        deviations.push((s.clone(), euclid(&d)));
    }
    let max_deviation = deviations.iter().map(|d| d.1).fold(0.0, f64::max);
    Ok(ShiftCheck { base, deviations, max_deviation, pass: max_deviation < eps })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub lambda: Vec<f64>,
    pub value: Vec<Complex64>,
    pub modulus: f64,
    pub report: ConvergenceReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEstimate {
    /// Frequencies whose tail coefficient exceeds the threshold, largest first.
    pub entries: Vec<SpectrumEntry>,
    pub threshold: f64,
    pub scanned: usize,
}

/// Coefficients on a declared frequency list, keeping those above `threshold`.
pub fn spectrum_scan(
    f: &FunctionHandle,
    lambda_grid: &[Vec<f64>],
    threshold: f64,
    schedule: &LSchedule,
    xi: usize,
    q: &QuadratureConfig,
) -> Result<SpectrumEstimate> {
    let s = vec![0.0; f.dim()];
    for l in lambda_grid {
        check_lambda(f, l, &s)?;
    }
    let sup = stepanov_precondition(f, &s, 0.0, schedule.last(), xi, q)?;
    let all = lambda_grid
        .par_iter()
        .map(|l| coefficient_along(f, l, schedule, xi, q, sup, |t| Cube::new(s.clone(), vec![t; s.len()])))
        .collect::<Result<Vec<_>>>()?;
    let mut entries: Vec<SpectrumEntry> = lambda_grid
        .iter()
        .zip(all)
        .filter(|(_, e)| e.modulus() > threshold)
        .map(|(l, e)| SpectrumEntry { lambda: l.clone(), modulus: e.modulus(), value: e.value, report: e.report })
        .collect();
    // Stable sort keeps grid order among equal moduli.
    entries.sort_by(|a, b| b.modulus.partial_cmp(&a.modulus).unwrap_or(std::cmp::Ordering::Equal));
    Ok(SpectrumEstimate { entries, threshold, scanned: lambda_grid.len() })
}

/// `D_W(F, P)` along the schedule.
pub fn weyl_approx_error(
    f: &FunctionHandle,
    poly: &TrigPolynomial,
    p: f64,
    schedule: &LSchedule,
    domain: &Domain,
    q: &QuadratureConfig,
) -> Result<WeylEstimate> {
    let ph = poly.to_handle("P").with_params(f.params().to_vec());
    weyl_metrics::weyl_distance(f, &ph, p, schedule, domain, &f.param_indices(), q)
}

/// Translations `τ` in the box `[lo, hi]` along the near-period lattice of
/// the dominant term with `Σ_j ‖c_j‖ |e^{i⟨λ_j,τ⟩} − 1| < threshold`.
///
/// Axis `i` is stepped by `2π/|μ_i|`, where `μ` is the frequency of the
/// largest coefficient having a nonzero `i`-th component; axes where every
/// frequency vanishes are stepped by 1. Output is lexicographic.
pub fn near_period_candidates(poly: &TrigPolynomial, threshold: f64, lo: &[f64], hi: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = poly.dim();
    if lo.len() != n || hi.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: lo.len().min(hi.len()) });
    }
    let mut order: Vec<&(Vec<f64>, Vec<Complex64>)> = poly.terms().iter().collect();
    order.sort_by(|a, b| euclid(&b.1).partial_cmp(&euclid(&a.1)).unwrap_or(std::cmp::Ordering::Equal));
    let mut axes = Vec::with_capacity(n);
    let mut total: f64 = 1.0;
    for i in 0..n {
        let step = order
            .iter()
            .map(|(l, _)| l[i].abs())
            .find(|m| *m > 0.0)
            .map_or(1.0, |m| std::f64::consts::TAU / m);
        let k0 = (lo[i] / step).ceil() as i64;
        let k1 = (hi[i] / step).floor() as i64;
        let ax: Vec<f64> = (k0..=k1).map(|k| k as f64 * step).collect();
        total *= ax.len() as f64;
        axes.push(ax);
    }
    if total > 5e7 {
        return Err(Error::InvalidInput(format!("candidate box holds {total:e} lattice points")));
    }
    let pts = cartesian(&axes);
    Ok(pts.into_par_iter().filter(|t| poly.translation_bound(t) < threshold).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigApproxReport {
    /// `D_W(F, P_k)` for each polynomial.
    pub errors: Vec<f64>,
    pub precondition_met: bool,
    /// Index of the polynomial whose near-periods were offered.
    pub chosen: Option<usize>,
    pub candidate_threshold: f64,
    pub candidates: usize,
    pub certified: bool,
    pub outcome: Option<Outcome>,
}

/// Certifies `F` in the constant-exponent class with translations drawn from
/// the near-periods of its best polynomial approximant.
///
/// The precondition is that the approximation errors do not increase and the
/// last one is below `ε/4`; otherwise no certification is attempted.
#[allow(clippy::too_many_arguments)]
pub fn trig_approx_implies_ap_check(
    f: &FunctionHandle,
    p_seq: &[TrigPolynomial],
    p: f64,
    eps: f64,
    equi: bool,
    schedule: &LSchedule,
    domain: &Domain,
    search: &SearchConfig,
    q: &QuadratureConfig,
) -> Result<TrigApproxReport> {
    if p_seq.is_empty() {
        return Err(Error::InvalidInput("polynomial sequence is empty".into()));
    }
    let errors =
        p_seq.iter().map(|pk| weyl_approx_error(f, pk, p, schedule, domain, q).map(|w| w.value)).collect::<Result<Vec<_>>>()?;
    let monotone = errors.windows(2).all(|w| weyl_metrics::within(w[1], w[0]));
    let last = *errors.last().unwrap();
    let precondition_met = monotone && last < eps / 4.0;
    if !precondition_met {
        return Ok(TrigApproxReport {
            errors,
            precondition_met,
            chosen: None,
            candidate_threshold: 0.0,
            candidates: 0,
            certified: false,
            outcome: None,
        });
    }
    let k = p_seq.len() - 1;
    // ‖F(·+τ) − F‖ ≤ 2 D(F, P) + sup |P(·+τ) − P|, up to the scale factor.
    let candidate_threshold = eps / 2.0 - 2.0 * last;
    let (lo, hi) = probe_hull(domain, search.big_l.iter().copied().fold(0.0, f64::max));
    let cands = near_period_candidates(&p_seq[k], candidate_threshold, &lo, &hi)?;
    let spec = ClassSpec::constant_p(p, equi, domain.clone())?;
    let mut cfg = search.clone();
    let candidates = cands.len();
    cfg.tau = TauSource::Candidates(cands);
    let outcome = ap_certifier::certify(f, &spec, eps, &cfg)?;
    Ok(TrigApproxReport {
        errors,
        precondition_met,
        chosen: Some(k),
        candidate_threshold,
        candidates,
        certified: matches!(outcome, Outcome::Certified(_)),
        outcome: Some(outcome),
    })
}

/// Bounding box of every probe ball of radius `big_l`.
pub fn probe_hull(domain: &Domain, big_l: f64) -> (Vec<f64>, Vec<f64>) {
    let n = domain.n;
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for t in &domain.probes {
        for i in 0..n {
            lo[i] = lo[i].min(t[i] - big_l);
            hi[i] = hi[i].max(t[i] + big_l);
        }
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_model::{gallery_chi_half, gallery_heaviside, gallery_trig_pair};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sched(ts: &[f64]) -> LSchedule {
        LSchedule::from_scales(ts.to_vec(), 2, 0.05).unwrap()
    }

    fn q() -> QuadratureConfig {
        QuadratureConfig::coarse()
    }

    /// `(1/T)∫_s^{s+T} e^{iωt} dt` in closed form.
    fn exp_mean(omega: f64, s: f64, t: f64) -> Complex64 {
        if omega == 0.0 {
            return c(1.0, 0.0);
        }
        (Complex64::new(0.0, omega * (s + t)).exp() - Complex64::new(0.0, omega * s).exp()) / (c(0.0, omega) * t)
    }

    #[test]
    fn construction_and_eval() {
        assert!(TrigPolynomial::new(vec![]).is_err());
        assert!(TrigPolynomial::new(vec![(vec![1.0], vec![c(1.0, 0.0)]), (vec![1.0, 2.0], vec![c(1.0, 0.0)])]).is_err());
        let p = TrigPolynomial::scalar(vec![(vec![1.0], c(2.0, 0.0)), (vec![-1.0], c(0.0, 1.0))]).unwrap();
        let v = p.eval(&[0.3])[0];
        let expect = c(2.0, 0.0) * Complex64::new(0.0, 0.3).exp() + c(0.0, 1.0) * Complex64::new(0.0, -0.3).exp();
        assert!((v - expect).norm() < 1e-15);
        assert_eq!(p.coefficient_mass(), 3.0);
        assert_eq!(p.coefficient(&[-1.0])[0], c(0.0, 1.0));
        assert_eq!(p.coefficient(&[5.0])[0], c(0.0, 0.0));
        let h = p.to_handle("p");
        assert_eq!(h.sup_bound(), Some(3.0));
        assert_eq!(h.bandwidth(), 1.0);
    }

    #[test]
    fn exact_frequency_gives_coefficient() {
        let p = TrigPolynomial::scalar(vec![(vec![0.7, -1.3], c(2.0, 0.0))]).unwrap().to_handle("w");
        let e = bohr_fourier_coefficient(&p, &[0.7, -1.3], &sched(&[2.0, 4.0, 8.0]), &[0.5, -1.0], 0, &q()).unwrap();
        for (_, v) in &e.samples {
            assert!((v[0] - c(2.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn off_frequency_matches_closed_form() {
        let f = gallery_trig_pair();
        let s = sched(&[10.0, 40.0, 160.0]);
        let e = bohr_fourier_coefficient(&f, &[1.0], &s, &[3.0], 0, &QuadratureConfig::default()).unwrap();
        for (t, v) in &e.samples {
            let oracle = c(1.0, 0.0) + exp_mean(std::f64::consts::SQRT_2 - 1.0, 3.0, *t);
            assert!((v[0] - oracle).norm() < 1e-4, "T={t}: {} vs {}", v[0], oracle);
        }
    }

    #[test]
    fn heaviside_symmetric_mean_is_half() {
        let h = gallery_heaviside(1).unwrap();
        let e = symmetric_cube_coefficient(&h, &[0.0], &sched(&[4.0, 16.0, 64.0]), &[0.0], 0, &q()).unwrap();
        assert!((e.scalar() - c(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_function_has_zero_spectrum() {
        let z = FunctionHandle::zero(1, 1);
        let grid: Vec<Vec<f64>> = (-4..=4).map(|k| vec![k as f64 * 0.5]).collect();
        let s = spectrum_scan(&z, &grid, 1e-6, &sched(&[4.0, 8.0, 16.0]), 0, &q()).unwrap();
        assert!(s.entries.is_empty());
        assert_eq!(s.scanned, 9);
    }

    #[test]
    fn spectrum_of_plane_wave() {
        let f = crate::function_model::gallery_plane_wave_2d();
        let grid: Vec<Vec<f64>> = [[1.0, -1.0], [1.0, 1.0], [0.0, 0.0], [-1.0, 1.0]].iter().map(|v| v.to_vec()).collect();
        // Leakage at the other grid points is at most 3·2/(2·32).
        let s = spectrum_scan(&f, &grid, 0.2, &sched(&[8.0, 16.0, 32.0]), 0, &q()).unwrap();
        assert_eq!(s.entries.len(), 1);
        assert_eq!(s.entries[0].lambda, vec![1.0, -1.0]);
        assert!((s.entries[0].value[0] - c(3.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn chi_half_spectrum_decays() {
        let e = bohr_fourier_coefficient(&gallery_chi_half(), &[0.0], &sched(&[4.0, 64.0, 1024.0]), &[0.0], 0, &q()).unwrap();
        assert!((e.samples[0].1[0].re - 0.125).abs() < 1e-12);
        assert!(e.modulus() < 1e-3);
    }

    #[test]
    fn shift_check_on_trig_pair() {
        let s: Vec<Vec<f64>> = [0.0, 1.0, 10.0].iter().map(|v| vec![*v]).collect();
        let r = shift_independence_check(&gallery_trig_pair(), &[1.0], 200.0, &s, 0.05, 0, &QuadratureConfig::default()).unwrap();
        assert!(r.pass, "{r:?}");
        // Closed-form deviation for s = 10.
        let oracle = (exp_mean(std::f64::consts::SQRT_2 - 1.0, 10.0, 200.0) - exp_mean(std::f64::consts::SQRT_2 - 1.0, 0.0, 200.0)).norm();
        assert!((r.deviations[2].1 - oracle).abs() < 1e-5);
    }

    #[test]
    fn near_periods_of_single_frequency() {
        let p = TrigPolynomial::scalar(vec![(vec![1.0], c(1.0, 0.0))]).unwrap();
        let v = near_period_candidates(&p, 1e-9, &[-20.0], &[20.0]).unwrap();
        assert_eq!(v.len(), 7);
        assert!(v.windows(2).all(|w| w[0][0] < w[1][0]));
        for t in v {
            assert!(p.translation_bound(&t) < 1e-9);
        }
    }

    #[test]
    fn approx_error_of_self_is_zero() {
        let p = TrigPolynomial::scalar(vec![(vec![1.0], c(1.0, 0.0)), (vec![2.0], c(0.5, 0.0))]).unwrap();
        let d = Domain::euclidean(1, vec![vec![0.0]], -3.0, 3.0, 1.0).unwrap();
        let w = weyl_approx_error(&p.to_handle("p"), &p, 2.0, &sched(&[1.0, 2.0, 4.0]), &d, &q()).unwrap();
        assert_eq!(w.value, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn coefficient_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, lam in -2.0f64..2.0) {
            let f = gallery_trig_pair();
            let g = gallery_chi_half();
            let comb = f.scaled(c(a, 0.0)).add(&g.scaled(c(b, 0.0))).unwrap();
            let s = sched(&[4.0, 8.0, 16.0]);
            let cf = bohr_fourier_coefficient(&f, &[lam], &s, &[0.0], 0, &QuadratureConfig::default()).unwrap().scalar();
            let cg = bohr_fourier_coefficient(&g, &[lam], &s, &[0.0], 0, &QuadratureConfig::default()).unwrap().scalar();
            let cc = bohr_fourier_coefficient(&comb, &[lam], &s, &[0.0], 0, &QuadratureConfig::default()).unwrap().scalar();
            prop_assert!((cc - (cf * a + cg * b)).norm() < 1e-6, "{cc} {cf} {cg}");
        }

        #[test]
        fn translation_bound_dominates_samples(tau in -50.0f64..50.0, t in -50.0f64..50.0) {
            let p = crate::function_model::sqrt_series(8);
            let d: Vec<Complex64> = p.eval(&[t + tau]).iter().zip(p.eval(&[t])).map(|(x, y)| x - y).collect();
            prop_assert!(euclid(&d) <= p.translation_bound(&[tau]) + 1e-12);
        }
    }
}

//! Worked examples regenerated from the library.

use anyhow::bail;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use weylap::ap_certifier::{certify, ClassSpec, SearchConfig};
use weylap::function_model::{gallery_chi_half, gallery_heaviside, Domain, FunctionHandle, ProbeGrid};
use weylap::quadrature::{Cube, QuadratureConfig};
use weylap::vexp_lebesgue::{luxemburg_norm, ExponentField, NORM_TOL};
use weylap::weyl_metrics::{stepanov_distance, LSchedule};

use crate::{emit, Cli, RunOutput, EXIT_NOT_CERTIFIED};

pub const TARGETS: &[&str] = &["heaviside", "chi-half", "weyl-null"];

#[derive(Serialize, Clone, Debug)]
pub struct BoundRow {
    pub n: usize,
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    pub l: f64,
    pub integral: f64,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Serialize, Clone, Debug)]
pub struct Verdict {
    pub n: usize,
    pub sigma: f64,
    pub equi: bool,
    pub certified: bool,
    pub expected: bool,
}

#[derive(Serialize)]
pub struct HeavisideReport {
    pub rows: Vec<BoundRow>,
    pub verdicts: Vec<Verdict>,
    pub all_hold: bool,
}

/// `∫_{t+l[0,1]ⁿ} |H(τ+u) − H(u)| du` against `2ⁿ lⁿ⁻¹ |τ|` on random
/// `(t, τ, l)` with `l > |τ|`.
pub fn heaviside_rows(n: usize, samples: usize, seed: u64, q: &QuadratureConfig) -> anyhow::Result<Vec<BoundRow>> {
    let h = gallery_heaviside(n)?;
    let one = ExponentField::constant(1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
    let mut rows = Vec::with_capacity(samples);
    for _ in 0..samples {
        let l: f64 = rng.gen_range(0.5..8.0);
        let mut tau: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = tau.iter().map(|v| v * v).sum::<f64>().sqrt();
        let target = rng.gen_range(0.0..0.95) * l;
        tau.iter_mut().for_each(|v| *v *= target / r.max(1e-300));
        let t: Vec<f64> = (0..n).map(|_| rng.gen_range(-l - 2.0..2.0)).collect();
        let diff = h.shifted(&tau).sub(&h)?;
        let integral = luxemburg_norm(&diff, 0, &one, &Cube::unit(n).cell(&t, l), q, NORM_TOL)?.value;
        let norm_tau = tau.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bound = 2f64.powi(n as i32) * l.powi(n as i32 - 1) * norm_tau;
        rows.push(BoundRow { n, t, tau, l, integral, bound, holds: integral <= bound + 1e-3 });
    }
    Ok(rows)
}

/// Probes at distance 10 along the axes.
pub fn far_probes(n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for v in [10.0, -10.0] {
        for i in 0..n {
            let mut p = vec![0.0; n];
            p[i] = v;
            out.push(p);
        }
    }
    out
}

/// Limsup-class search setup whose tail reaches `2^{15+n}…2^{17+n}`.
pub fn heaviside_limsup_search(n: usize) -> anyhow::Result<(Domain, SearchConfig)> {
    let d = Domain::euclidean(n, far_probes(n), -20.0, 20.0, if n == 1 { 1.0 } else { 5.0 })?;
    let mut s = SearchConfig::new(vec![1.0], vec![1.0], 0.5)?;
    s.limsup = LSchedule::geometric(2f64.powi(13 + n as i32), 2.0, 4, 3, 1e-3)?;
    s.quad = QuadratureConfig::coarse();
    Ok((d, s))
}

/// Equi-class search setup at scales 1…8.
pub fn heaviside_equi_search(n: usize) -> anyhow::Result<(Domain, SearchConfig)> {
    let probes: Vec<Vec<f64>> = [10.0, 20.0, 40.0].iter().map(|v| {
        let mut p = vec![0.0; n];
        p[0] = *v;
        p
    }).collect();
    let d = Domain::euclidean(n, probes, -20.0, 20.0, if n == 1 { 1.0 } else { 2.0 })?;
    let mut s = SearchConfig::new(vec![1.0, 2.0, 4.0, 8.0], vec![1.0, 2.0], if n == 1 { 0.25 } else { 0.5 })?;
    s.quad = QuadratureConfig::coarse();
    Ok((d, s))
}

pub fn heaviside_verdicts(n: usize) -> anyhow::Result<Vec<Verdict>> {
    let h = gallery_heaviside(n)?;
    let mut out = Vec::new();
    let sigma = (n as f64 - 1.0) + 0.5;
    let (d, s) = heaviside_limsup_search(n)?;
    let spec = ClassSpec::paren_power(1.0, sigma, false, d)?;
    out.push(Verdict { n, sigma, equi: false, certified: certify(&h, &spec, 0.1, &s)?.is_certified(), expected: true });
    for sigma in [0.5, 1.0, 2.0] {
        let (d, s) = heaviside_equi_search(n)?;
        let spec = ClassSpec::paren_power(1.0, sigma, true, d)?;
        out.push(Verdict { n, sigma, equi: true, certified: certify(&h, &spec, 0.1, &s)?.is_certified(), expected: false });
    }
    Ok(out)
}

/// Equi search for `χ_{[0,1/2]}` with scales up to 256.
pub fn chi_half_search() -> anyhow::Result<(Domain, SearchConfig)> {
    let probes = [10.0, 20.0, 40.0, -10.0, -20.0, -40.0].iter().map(|v| vec![*v]).collect();
    let d = Domain::euclidean(1, probes, -300.0, 10.0, 1.0)?;
    let ls = (0..=8).map(|k| 2f64.powi(k)).collect();
    let mut s = SearchConfig::new(ls, vec![1.0, 2.0], 0.25)?;
    s.quad = QuadratureConfig::coarse();
    Ok((d, s))
}

pub fn chi_half_verdicts() -> anyhow::Result<Vec<Verdict>> {
    let f = gallery_chi_half();
    let (d, s) = chi_half_search()?;
    let mut out = Vec::new();
    for sigma in [0.0, 0.5, 1.0, 2.0] {
        let spec = ClassSpec::paren_power(1.0, sigma, true, d.clone())?;
        out.push(Verdict { n: 1, sigma, equi: true, certified: certify(&f, &spec, 0.1, &s)?.is_certified(), expected: sigma > 0.0 });
    }
    Ok(out)
}

#[derive(Serialize)]
pub struct NullRow {
    pub p: f64,
    pub l: f64,
    pub stepanov: f64,
    pub closed_form: f64,
}

pub fn weyl_null_rows(q: &QuadratureConfig) -> anyhow::Result<Vec<NullRow>> {
    let f = gallery_chi_half();
    let zero = FunctionHandle::zero(1, 1);
    let d = Domain::euclidean(1, vec![], -4.0, 4.0, 0.5)?.with_grid(ProbeGrid::new(vec![-4.0], vec![4.0], 0.5)?)?;
    let mut rows = Vec::new();
    for p in [1.0, 2.0] {
        for k in 0..=10 {
            let l = 2f64.powi(k);
            let v = stepanov_distance(&f, &zero, p, l, &d, &[0], q)?;
            rows.push(NullRow { p, l, stepanov: v, closed_form: (1.0 / (2.0 * l)).powf(1.0 / p) });
        }
    }
    Ok(rows)
}

pub fn run(cli: &Cli, target: &str, samples: usize, q: &QuadratureConfig) -> anyhow::Result<RunOutput> {
    match target {
        "heaviside" => {
            let mut rows = heaviside_rows(1, samples, cli.seed, q)?;
            rows.extend(heaviside_rows(2, samples, cli.seed, q)?);
            let mut verdicts = heaviside_verdicts(1)?;
            verdicts.extend(heaviside_verdicts(2)?);
            let all_hold = rows.iter().all(|r| r.holds) && verdicts.iter().all(|v| v.certified == v.expected);
            let status = if all_hold { 0 } else { EXIT_NOT_CERTIFIED };
            let rep = HeavisideReport { rows, verdicts, all_hold };
            emit(cli, "reproduce", target, &rep, String::new(), vec![], status)
        }
        "chi-half" => {
            let v = chi_half_verdicts()?;
            let ok = v.iter().all(|v| v.certified == v.expected);
            let rows: Vec<(f64, f64)> = v.iter().map(|v| (v.sigma, if v.certified { 1.0 } else { 0.0 })).collect();
            crate::plot(cli, crate::record::PlotSource::Rows(&rows), "chi-half equi verdicts", ("sigma", "certified"))?;
            emit(cli, "reproduce", target, &v, String::new(), vec![], if ok { 0 } else { EXIT_NOT_CERTIFIED })
        }
        "weyl-null" => {
            let rows = weyl_null_rows(q)?;
            let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.p == 1.0).map(|r| (r.l, r.stepanov)).collect();
            crate::plot(cli, crate::record::PlotSource::Rows(&pts), "chi-half p=1", ("l", "D_S_l"))?;
            emit(cli, "reproduce", target, &rows, String::new(), vec![], 0)
        }
        other => bail!("unknown reproduce target `{other}`; known: {}", TARGETS.join(", ")),
    }
}

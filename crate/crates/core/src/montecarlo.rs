//! Seeded, parallel Monte Carlo evaluation of the geometric loss.
//!
//! Trial `i` draws its pose from [`TrialStream::new(seed, i)`](TrialStream),
//! results are collected in trial order, and every total is a pairwise sum
//! over that fixed order, so outputs do not depend on the thread count.

use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::beam::BeamParams;
use crate::error::{Error, Result};
use crate::geoloss::{approx_mean, approx_params, loss_db, DetectorParams, LossModel};
use crate::geometry::footprint_center;
use crate::numerics::{SymMatrix2, DEFAULT_REL_TOL};
use crate::rng::TrialStream;
use crate::stochastic::{linearized_footprint, sample_pose, GeoLossPdf, PoseDistribution};

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "FSO_GEOLOSS_THREADS";

pub const DEFAULT_TRIALS: u64 = 100_000;

/// Probabilities at which [`LossStats::quantiles`] are reported.
pub const QUANTILE_PROBS: [f64; 7] = [0.001, 0.01, 0.05, 0.5, 0.95, 0.99, 0.999];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKernel {
    Exact,
    ApproxMean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialPlan {
    pub n_trials: u64,
    pub seed: u64,
    pub distribution: PoseDistribution,
    pub beam: BeamParams,
    pub detector: DetectorParams,
    pub kernel: LossKernel,
    pub rel_tol: f64,
}

impl TrialPlan {
    pub fn new(distribution: PoseDistribution, kernel: LossKernel, n_trials: u64, seed: u64) -> Self {
        Self {
            n_trials,
            seed,
            distribution,
            beam: BeamParams::default(),
            detector: DetectorParams::default(),
            kernel,
            rel_tol: DEFAULT_REL_TOL,
        }
    }

    pub fn with_kernel(&self, kernel: LossKernel) -> Self {
        Self { kernel, ..*self }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossStats {
    pub mean_linear: f64,
    /// `−10 log₁₀` of `mean_linear`.
    pub mean_db: f64,
    /// Mean of the per-sample dB losses (may be infinite).
    pub mean_of_db: f64,
    pub std_linear: f64,
    pub n: u64,
    /// Trials whose pose made the beam parallel to the detector plane.
    pub degenerate: u64,
    /// `(p, loss)` pairs in increasing `p`, linear loss.
    pub quantiles: Vec<(f64, f64)>,
}

impl LossStats {
    pub fn from_samples(samples: &[f64], degenerate: u64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("no samples"));
        }
        let n = samples.len() as f64;
        let mean = pairwise_sum(samples) / n;
        // shifted-data variance: exact zero for constant samples
        let x0 = samples[0];
        let d: Vec<f64> = samples.iter().map(|x| x - x0).collect();
        let d2: Vec<f64> = d.iter().map(|x| x * x).collect();
        let sd = pairwise_sum(&d);
        let var = if samples.len() > 1 { ((pairwise_sum(&d2) - sd * sd / n) / (n - 1.0)).max(0.0) } else { 0.0 };
        let dbs: Vec<f64> = samples.iter().map(|&h| loss_db(h)).collect();
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let quantiles = QUANTILE_PROBS.iter().map(|&p| (p, quantile_sorted(&sorted, p))).collect();
        Ok(Self {
            mean_linear: mean,
            mean_db: loss_db(mean),
            mean_of_db: pairwise_sum(&dbs) / n,
            std_linear: var.sqrt(),
            n: samples.len() as u64,
            degenerate,
            quantiles,
        })
    }

    pub fn quantile(&self, p: f64) -> Option<f64> {
        self.quantiles.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Sum with pairwise (cascade) splitting in a fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub samples: Vec<f64>,
    pub stats: LossStats,
}

/// Thread count from `FSO_GEOLOSS_THREADS`, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` on a pool of `threads` workers (or the default pool size).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    match builder.build() {
        Ok(pool) => pool.install(f),
        Err(e) => {
            log::warn!("could not build thread pool ({e}); running on the global pool");
            f()
        }
    }
}

pub fn run_trials(plan: &TrialPlan) -> Result<TrialOutcome> {
    run_trials_with_threads(plan, env_threads())
}

pub fn run_trials_with_threads(plan: &TrialPlan, threads: Option<usize>) -> Result<TrialOutcome> {
    if plan.n_trials == 0 {
        return Err(Error::invalid("n_trials must be at least 1"));
    }
    let model = LossModel::new(plan.beam, plan.detector, plan.rel_tol);
    let results: Vec<Result<Option<f64>>> =
        with_threads(threads, || (0..plan.n_trials).into_par_iter().map(|i| one_trial(plan, &model, i)).collect());
    let mut samples = Vec::with_capacity(results.len());
    let mut degenerate = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(Some(h)) => samples.push(h),
            Ok(None) => {
                degenerate += 1;
                samples.push(0.0);
            }
            Err(e) => return Err(Error::Trial { index: i as u64, source: Box::new(e) }),
        }
    }
    if degenerate > 0 {
        log::warn!("{degenerate} trial(s) hit a degenerate pose and were recorded with loss 0");
    }
    let stats = LossStats::from_samples(&samples, degenerate)?;
    Ok(TrialOutcome { samples, stats })
}

/// `Ok(None)` marks a degenerate pose.
fn one_trial(plan: &TrialPlan, model: &LossModel, index: u64) -> Result<Option<f64>> {
    let pose = sample_pose(&plan.distribution, &mut TrialStream::new(plan.seed, index));
    let h = match plan.kernel {
        LossKernel::Exact => model.exact(&pose),
        LossKernel::ApproxMean => approx_params(&pose, &plan.beam, &plan.detector).map(|ap| approx_mean(&ap)),
    };
    match h {
        Ok(h) => Ok(Some(h)),
        Err(Error::DegenerateGeometry(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Sample covariances of the exact and the linearised footprint centre,
/// computed from the same pose draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintCovariance {
    pub exact: SymMatrix2,
    pub linearized: SymMatrix2,
    pub n: u64,
}

pub fn footprint_covariance(d: &PoseDistribution, n: u64, seed: u64, threads: Option<usize>) -> Result<FootprintCovariance> {
    if n < 2 {
        return Err(Error::invalid("need at least two trials for a covariance"));
    }
    let pairs: Vec<Result<[f64; 4]>> = with_threads(threads, || {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let eps = d.sample_perturbation(&mut TrialStream::new(seed, i));
                let f = footprint_center(&d.perturbed(eps))?;
                let l = linearized_footprint(d, eps)?;
                Ok([f.fy, f.fz, l.fy, l.fz])
            })
            .collect()
    });
    let mut cols = [
        Vec::with_capacity(n as usize),
        Vec::with_capacity(n as usize),
        Vec::with_capacity(n as usize),
        Vec::with_capacity(n as usize),
    ];
    for (i, p) in pairs.into_iter().enumerate() {
        let p = p.map_err(|e| Error::Trial { index: i as u64, source: Box::new(e) })?;
        for (c, v) in cols.iter_mut().zip(p) {
            c.push(v);
        }
    }
    Ok(FootprintCovariance {
        exact: sample_cov(&cols[0], &cols[1]),
        linearized: sample_cov(&cols[2], &cols[3]),
        n,
    })
}

fn sample_cov(y: &[f64], z: &[f64]) -> SymMatrix2 {
    let n = y.len() as f64;
    let my = pairwise_sum(y) / n;
    let mz = pairwise_sum(z) / n;
    let prod = |f: &dyn Fn(f64, f64) -> f64| {
        let v: Vec<f64> = y.iter().zip(z).map(|(&a, &b)| f(a - my, b - mz)).collect();
        pairwise_sum(&v) / (n - 1.0)
    };
    SymMatrix2::new(prod(&|a, _| a * a), prod(&|a, b| a * b), prod(&|_, b| b * b))
}

/// Equal-width histogram on `[lo, hi]`; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    /// Samples inside `[lo, hi]`.
    pub total: u64,
    pub underflow: u64,
    pub overflow: u64,
}

impl Histogram {
    pub fn n_samples(&self) -> u64 {
        self.total + self.underflow + self.overflow
    }

    pub fn bin_width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    /// Counts normalised to a density over all samples.
    pub fn density(&self) -> Vec<f64> {
        let scale = 1.0 / (self.n_samples() as f64 * self.bin_width());
        self.counts.iter().map(|&c| c as f64 * scale).collect()
    }
}

pub fn build_histogram(samples: &[f64], n_bins: usize, range: (f64, f64)) -> Result<Histogram> {
    let (lo, hi) = range;
    if samples.is_empty() {
        return Err(Error::invalid("cannot build a histogram from no samples"));
    }
    if n_bins == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("bad histogram spec: {n_bins} bins on [{lo}, {hi}]")));
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|j| if j == n_bins { hi } else { lo + j as f64 * width }).collect();
    let mut counts = vec![0u64; n_bins];
    let (mut under, mut over) = (0, 0);
    for &x in samples {
        if x < lo {
            under += 1;
        } else if x > hi {
            over += 1;
        } else {
            let mut j = (((x - lo) / width) as usize).min(n_bins - 1);
            // guard against rounding at interior edges
            while j > 0 && x < edges[j] {
                j -= 1;
            }
            while j + 1 < n_bins && x >= edges[j + 1] {
                j += 1;
            }
            counts[j] += 1;
        }
    }
    let total = counts.iter().sum();
    Ok(Histogram { edges, counts, total, underflow: under, overflow: over })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
    /// Class boundaries after merging (first and last classes are open-ended).
    pub class_edges: Vec<f64>,
}

pub const MIN_EXPECTED: f64 = 5.0;

/// Pearson χ² test of a histogram against the closed-form loss density.
///
/// The first and last classes absorb under- and overflow, so every sample
/// is tested. Adjacent classes are merged from the left until each holds an
/// expected count of at least [`MIN_EXPECTED`].
pub fn chi_square_gof(h: &Histogram, pdf: &GeoLossPdf) -> Result<GofResult> {
    let n = h.n_samples() as f64;
    let nb = h.counts.len();
    let mut observed: Vec<f64> = h.counts.iter().map(|&c| c as f64).collect();
    observed[0] += h.underflow as f64;
    observed[nb - 1] += h.overflow as f64;
    let surv: Vec<f64> = h.edges.iter().map(|&e| pdf.exceedance(e)).collect();
    let mut expected: Vec<f64> = (0..nb).map(|j| n * (surv[j] - surv[j + 1]).max(0.0)).collect();
    expected[0] += n * (1.0 - surv[0]);
    expected[nb - 1] += n * surv[nb];

    let mut classes: Vec<(f64, f64, f64)> = Vec::new(); // (lower edge, observed, expected)
    let (mut o_acc, mut e_acc, mut edge) = (0.0, 0.0, h.edges[0]);
    for j in 0..nb {
        if o_acc == 0.0 && e_acc == 0.0 {
            edge = h.edges[j];
        }
        o_acc += observed[j];
        e_acc += expected[j];
        if e_acc >= MIN_EXPECTED {
            classes.push((edge, o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if o_acc > 0.0 || e_acc > 0.0 {
        match classes.last_mut() {
            Some(last) => {
                last.1 += o_acc;
                last.2 += e_acc;
            }
            None => classes.push((edge, o_acc, e_acc)),
        }
    }
    if classes.len() < 2 || classes.iter().any(|c| c.2 < MIN_EXPECTED) {
        return Err(Error::Inconclusive(format!(
            "only {} class(es) reach an expected count of {MIN_EXPECTED} from {n} samples; increase the number of trials",
            classes.len()
        )));
    }
    let statistic: f64 = classes.iter().map(|&(_, o, e)| (o - e) * (o - e) / e).sum();
    let dof = classes.len() as u64 - 1;
    let dist = ChiSquared::new(dof as f64).map_err(|e| Error::invalid(e.to_string()))?;
    Ok(GofResult {
        statistic,
        dof,
        p_value: dist.sf(statistic),
        class_edges: classes.iter().map(|c| c.0).chain([*h.edges.last().unwrap_or(&0.0)]).collect(),
    })
}

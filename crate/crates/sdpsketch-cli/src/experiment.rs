//! Seeded experiment runners: the value-bound suite on packing instances,
//! the LMI certification suite, and the trace-product distortion suite.
//!
//! Trials are independent and run on a work pool; records are sorted by seed
//! before reporting so results are schedule-independent. All randomness in a
//! trial derives from its seed (instance and transform draw from separate
//! substreams).

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use sdpsketch::bounds::{packing_bounds, packing_nu, recover_packing_point};
use sdpsketch::certify::{
    certified_epsilon, certify_infeasible, CertifyOutcome, SeparatorCertificate,
};
use sdpsketch::jlt::{
    sample_gaussian_jlt, sample_sparse_jlt, sketch_dimension, Ensemble, SketchConfig, SketchMatrix,
};
use sdpsketch::linalg::{schatten_norm, SchattenP};
use sdpsketch::sketch::{hs_distortion_report, sketch_sdp_with_norms};
use sdpsketch::solver::{solve, solve_feasibility, SolveStatus, SolverOptions};

use crate::gen::{
    generate_feasible_lmi, generate_infeasible_lmi, generate_packing_instance,
    generate_rank_matrices, spike_matrices,
};

/// Instance families the runners understand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum Family {
    /// Packing SDPs with certified trace bounds (value-bound suite).
    Packing,
    /// Planted-infeasible LMIs (certification suite).
    InfeasibleLmi,
    /// Feasible LMIs (soundness control for the certification suite).
    FeasibleLmi,
    /// Random low-rank matrices (trace-product distortion suite).
    Lemma31Matrices,
    /// Coordinate spikes at a forced small sketch dimension, demonstrating
    /// that Schatten-2 normalization fails where Schatten-1 scaling is the
    /// honest yardstick.
    SpikeDemo,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Packing => "packing",
            Family::InfeasibleLmi => "infeasible-lmi",
            Family::FeasibleLmi => "feasible-lmi",
            Family::Lemma31Matrices => "lemma31-matrices",
            Family::SpikeDemo => "spike-demo",
        }
    }
}

/// Experiment configuration shared by all runners.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub family: Family,
    pub dim: usize,
    pub m: usize,
    pub rank: usize,
    pub trials: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
    /// Planted separation margin (LMI families).
    pub tau: f64,
    pub ensemble: Ensemble,
    pub base_seed: u64,
    /// Tolerance for the desk-scale oracle solves of the original problem.
    pub oracle_tol: f64,
    /// Tolerance for sketched-problem solves.
    pub sketch_tol: f64,
    /// Oracle solves are skipped above this ambient dimension.
    pub oracle_dim_cap: usize,
    /// Force the sketch dimension (spike demo); clamped to the ambient dim.
    pub force_sketch_dim: Option<usize>,
    /// Derive epsilon per trial from the planted separator instead of using
    /// the configured value (LMI families).
    pub use_certified_epsilon: bool,
    /// Also compute the Schatten-2-normalized deviation column (distortion
    /// families); costs one eigendecomposition per matrix per trial.
    pub compute_hs2: bool,
    /// Record wall-clock timings; disable for byte-reproducible reports.
    pub collect_timings: bool,
}

impl ExperimentConfig {
    pub fn new(family: Family) -> Self {
        ExperimentConfig {
            family,
            dim: 64,
            m: 5,
            rank: 4,
            trials: 20,
            epsilon: 0.5,
            delta: 0.05,
            eta: 1.0,
            tau: 0.5,
            ensemble: Ensemble::Gaussian,
            base_seed: 0,
            oracle_tol: 1e-6,
            sketch_tol: 1e-8,
            oracle_dim_cap: 512,
            force_sketch_dim: None,
            use_certified_epsilon: false,
            compute_hs2: matches!(family, Family::SpikeDemo),
            collect_timings: true,
        }
    }
}

const SKETCH_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// One trial's outcome. CSV rows expose the fixed schema columns; the extra
/// fields feed the summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed: u64,
    pub dim: usize,
    pub sketch_dim: usize,
    pub m: usize,
    pub family: String,
    pub alpha_orig: Option<f64>,
    pub alpha_sketch: Option<f64>,
    pub upper: Option<f64>,
    pub lower: Option<f64>,
    pub bound_held: Option<bool>,
    pub t_sketch_ns: u128,
    pub t_solve_ns: u128,
    pub entries_stored: usize,
    // Summary-only fields.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle_solve_ns: Option<u128>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub packing_chain_ok: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recovered_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub hs2_max_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub aborted: Option<String>,
}

impl TrialRecord {
    fn empty(seed: u64, cfg: &ExperimentConfig, sketch_dim: usize) -> Self {
        TrialRecord {
            seed,
            dim: cfg.dim,
            sketch_dim,
            m: cfg.m,
            family: cfg.family.name().to_string(),
            alpha_orig: None,
            alpha_sketch: None,
            upper: None,
            lower: None,
            bound_held: None,
            t_sketch_ns: 0,
            t_solve_ns: 0,
            entries_stored: 0,
            oracle_solve_ns: None,
            packing_chain_ok: None,
            recovered_objective: None,
            hs2_max_deviation: None,
            aborted: None,
        }
    }
}

fn draw_transform(
    cfg: &ExperimentConfig,
    config: &SketchConfig,
    ambient: usize,
) -> (SketchMatrix, usize) {
    let d = match cfg.force_sketch_dim {
        Some(d) => d.clamp(1, ambient),
        None => sketch_dimension(config, ambient).expect("valid sketch config"),
    };
    let s = match config.ensemble {
        Ensemble::Gaussian => sample_gaussian_jlt(d, ambient, config.seed).expect("sample"),
        Ensemble::Sparse => {
            let s_cols = config
                .sparsity
                .unwrap_or_else(|| config.derived_sparsity(d))
                .min(d);
            sample_sparse_jlt(d, ambient, s_cols, config.seed).expect("sample")
        }
    };
    (s, d)
}

fn elapsed_ns(start: Instant, collect: bool) -> u128 {
    if collect {
        start.elapsed().as_nanos()
    } else {
        0
    }
}

/// Per-trial work of the value experiment.
fn value_trial(cfg: &ExperimentConfig, trial: usize) -> TrialRecord {
    let seed = cfg.base_seed + trial as u64;
    let inst = generate_packing_instance(cfg.dim, cfg.m, cfg.rank, cfg.eta, seed);
    let mut record = TrialRecord::empty(seed, cfg, 0);

    // Desk-scale oracle for ground truth.
    let mut oracle_value = None;
    if cfg.dim <= cfg.oracle_dim_cap {
        let t0 = Instant::now();
        match solve(&inst.problem, &SolverOptions::with_tol(cfg.oracle_tol)) {
            Ok(rep) if rep.status == SolveStatus::Optimal => {
                oracle_value = rep.value;
                record.oracle_solve_ns = Some(elapsed_ns(t0, cfg.collect_timings));
            }
            Ok(rep) => {
                record.aborted = Some(format!("oracle solve ended with {:?}", rep.status));
                return record;
            }
            Err(e) => {
                record.aborted = Some(format!("oracle solve failed: {e}"));
                return record;
            }
        }
    }
    record.alpha_orig = oracle_value;

    let mut sketch_cfg = SketchConfig::new(
        cfg.epsilon,
        cfg.delta,
        inst.certificates.k_budget,
        inst.certificates.eta,
        seed ^ SKETCH_SEED_SALT,
    );
    sketch_cfg.ensemble = cfg.ensemble;
    let (s, d) = draw_transform(cfg, &sketch_cfg, cfg.dim);
    record.sketch_dim = d;

    let t0 = Instant::now();
    let sketched = match sketch_sdp_with_norms(
        &inst.problem,
        &sketch_cfg,
        &s,
        &inst.certificates.constraint_trace_norms,
    ) {
        Ok(sk) => sk,
        Err(e) => {
            record.aborted = Some(format!("sketch failed: {e}"));
            return record;
        }
    };
    record.t_sketch_ns = elapsed_ns(t0, cfg.collect_timings);
    record.entries_stored = sketched.problem.stored_entries();

    let t1 = Instant::now();
    let rep = match solve(&sketched.problem, &SolverOptions::with_tol(cfg.sketch_tol)) {
        Ok(rep) if rep.status == SolveStatus::Optimal => rep,
        Ok(rep) => {
            record.aborted = Some(format!("sketched solve ended with {:?}", rep.status));
            return record;
        }
        Err(e) => {
            record.aborted = Some(format!("sketched solve failed: {e}"));
            return record;
        }
    };
    record.t_solve_ns = elapsed_ns(t1, cfg.collect_timings);
    record.alpha_sketch = rep.value;

    let bounds = match packing_bounds(&inst.problem, &sketched, &rep) {
        Ok(b) => b,
        Err(e) => {
            record.aborted = Some(format!("bounds failed: {e}"));
            return record;
        }
    };
    record.upper = Some(bounds.upper);
    record.lower = bounds.lower.as_ref().map(|l| l.value);
    record.bound_held = oracle_value.map(|alpha| bounds.upper >= alpha - 1e-9);

    // Feasible-point recovery and the deterministic packing chain:
    // every original constraint within 10 tol, objective at least
    // alpha_S / (1 + nu) - 10 tol.
    let nu = packing_nu(&sketched);
    let y_star = rep
        .primal
        .as_ref()
        .expect("optimal report carries a primal");
    match recover_packing_point(y_star, &s, nu) {
        Ok(x_hat) => {
            let x_dense = x_hat.to_mat();
            let slack_tol = 10.0 * cfg.sketch_tol;
            let feasible = inst
                .problem
                .constraints
                .iter()
                .all(|c| c.matrix.trace_with_mat(&x_dense) <= c.rhs + slack_tol);
            let recovered_obj = inst.problem.objective.trace_with_mat(&x_dense);
            let alpha_sketch = rep.value.unwrap_or(f64::NAN);
            let chain = feasible && recovered_obj >= alpha_sketch / (1.0 + nu) - slack_tol;
            record.recovered_objective = Some(recovered_obj);
            record.packing_chain_ok = Some(chain);
        }
        Err(e) => {
            record.aborted = Some(format!("recovery failed: {e}"));
        }
    }
    record
}

fn lmi_trial(cfg: &ExperimentConfig, trial: usize) -> TrialRecord {
    let seed = cfg.base_seed + trial as u64;
    let mut record = TrialRecord::empty(seed, cfg, 0);

    let (lmi, planted_separator) = match cfg.family {
        Family::InfeasibleLmi => {
            let planted = generate_infeasible_lmi(cfg.dim, cfg.m, cfg.tau, seed);
            (planted.problem, Some((planted.separator, planted.k_budget)))
        }
        Family::FeasibleLmi => {
            let (lmi, _witness) = generate_feasible_lmi(cfg.dim, cfg.m, seed);
            (lmi, None)
        }
        _ => unreachable!("lmi_trial on a non-LMI family"),
    };

    // Oracle phase-I on the original system (desk scale) for ground truth.
    if cfg.dim <= cfg.oracle_dim_cap {
        let t0 = Instant::now();
        match solve_feasibility(&lmi, &SolverOptions::with_tol(cfg.oracle_tol)) {
            Ok(rep) => {
                record.alpha_orig = Some(rep.t_star);
                record.oracle_solve_ns = Some(elapsed_ns(t0, cfg.collect_timings));
            }
            Err(e) => {
                record.aborted = Some(format!("oracle phase-I failed: {e}"));
                return record;
            }
        }
    }

    // Epsilon: certified from the planted separator when requested.
    let (epsilon, k_budget) = match (&planted_separator, cfg.use_certified_epsilon) {
        (Some((rho, k_budget)), true) => {
            let rho_dense = rho.to_mat();
            let margins: Vec<f64> = lmi
                .constraints
                .iter()
                .map(|b| b.trace_with_mat(&rho_dense))
                .collect();
            let objective_margin = lmi.objective.trace_with_mat(&rho_dense);
            let cert = SeparatorCertificate {
                rho: rho.clone(),
                constraint_margins: margins,
                objective_margin,
                certified_epsilon: 0.0,
            };
            match certified_epsilon(&cert, &lmi) {
                Ok(eps) => (eps.min(1.0), *k_budget),
                Err(e) => {
                    record.aborted = Some(format!("certified epsilon failed: {e}"));
                    return record;
                }
            }
        }
        (Some((_, k_budget)), false) => (cfg.epsilon, *k_budget),
        (None, _) => (cfg.epsilon, (cfg.m + 1) * cfg.dim),
    };

    let mut sketch_cfg =
        SketchConfig::new(epsilon, cfg.delta, k_budget, 0.0, seed ^ SKETCH_SEED_SALT);
    sketch_cfg.ensemble = cfg.ensemble;
    record.sketch_dim = sketch_dimension(&sketch_cfg, cfg.dim).expect("valid sketch config");

    let t0 = Instant::now();
    let outcome =
        match certify_infeasible(&lmi, &sketch_cfg, &SolverOptions::with_tol(cfg.sketch_tol)) {
            Ok(o) => o,
            Err(e) => {
                record.aborted = Some(format!("certification failed: {e}"));
                return record;
            }
        };
    record.t_solve_ns = elapsed_ns(t0, cfg.collect_timings);
    // Sketched-problem storage: the m generators plus the objective at d^2
    // dense entries each.
    record.entries_stored = (cfg.m + 1) * record.sketch_dim * record.sketch_dim + cfg.m;
    match outcome {
        CertifyOutcome::InfeasibleCertified(cert) => {
            record.alpha_sketch = Some(cert.t_star);
            record.bound_held = Some(true);
        }
        CertifyOutcome::SketchFeasible { .. } => {
            record.bound_held = Some(false);
        }
        CertifyOutcome::Inconclusive { t_star } => {
            record.alpha_sketch = Some(t_star);
            record.bound_held = Some(false);
        }
    }
    record
}

fn lemma31_trial(cfg: &ExperimentConfig, trial: usize) -> TrialRecord {
    let seed = cfg.base_seed + trial as u64;
    let mut record = TrialRecord::empty(seed, cfg, 0);
    let mats = match cfg.family {
        Family::SpikeDemo => spike_matrices(cfg.dim, cfg.m),
        _ => generate_rank_matrices(cfg.dim, cfg.m, cfg.rank, seed),
    };
    let total_rank = match cfg.family {
        Family::SpikeDemo => cfg.m,
        _ => cfg.m * cfg.rank,
    };
    let mut sketch_cfg = SketchConfig::new(
        cfg.epsilon,
        cfg.delta,
        total_rank.max(1),
        cfg.eta,
        seed ^ SKETCH_SEED_SALT,
    );
    sketch_cfg.ensemble = cfg.ensemble;
    let (s, d) = draw_transform(cfg, &sketch_cfg, cfg.dim);
    record.sketch_dim = d;

    let t0 = Instant::now();
    let report = match hs_distortion_report(&mats, &s) {
        Ok(r) => r,
        Err(e) => {
            record.aborted = Some(format!("distortion report failed: {e}"));
            return record;
        }
    };
    record.t_sketch_ns = elapsed_ns(t0, cfg.collect_timings);

    // Schatten-2 normalization of the same deviations (optional: one
    // eigendecomposition per matrix).
    let hs2_max = cfg.compute_hs2.then(|| {
        let norms2: Vec<f64> = mats
            .iter()
            .map(|m| schatten_norm(m, SchattenP::Two).expect("finite matrices"))
            .collect();
        report
            .pairs
            .iter()
            .map(|p| {
                let denom = norms2[p.i] * norms2[p.j];
                if denom > 0.0 {
                    p.deviation / denom
                } else {
                    0.0
                }
            })
            .fold(0.0_f64, f64::max)
    });

    let threshold = 3.0 * cfg.epsilon;
    record.alpha_sketch = Some(report.max_normalized_deviation);
    record.upper = Some(threshold);
    record.lower = hs2_max;
    record.hs2_max_deviation = hs2_max;
    record.bound_held = Some(report.max_normalized_deviation <= threshold);
    record.entries_stored = mats.len() * d * d;
    record
}

fn run_trials(
    cfg: &ExperimentConfig,
    trial_fn: fn(&ExperimentConfig, usize) -> TrialRecord,
) -> Vec<TrialRecord> {
    let mut records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| trial_fn(cfg, t))
        .collect();
    records.sort_by_key(|r| r.seed);
    records
}

/// Summary of a value-bound experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValueSummary {
    pub family: String,
    pub trials: usize,
    pub aborted: usize,
    pub oracle_trials: usize,
    pub upper_bound_failures: usize,
    pub upper_bound_failure_rate: f64,
    pub packing_chain_violations: usize,
    pub mean_relative_gap: Option<f64>,
    pub mean_oracle_solve_ns: Option<f64>,
    pub mean_sketch_build_ns: f64,
    pub mean_sketched_solve_ns: f64,
    /// Oracle solve time over sketch-build + sketched-solve time.
    pub speedup: Option<f64>,
    pub max_entries_stored: usize,
    /// `(m_total + 1) d^2 + m_total` with `m_total` the constraint count of
    /// the sketched problem.
    pub entries_bound: usize,
    pub sketch_dim: usize,
}

pub fn run_value_experiment(cfg: &ExperimentConfig) -> (Vec<TrialRecord>, ValueSummary) {
    assert_eq!(
        cfg.family,
        Family::Packing,
        "value experiment needs the packing family"
    );
    let records = run_trials(cfg, value_trial);
    let valid: Vec<&TrialRecord> = records.iter().filter(|r| r.aborted.is_none()).collect();
    let aborted = records.len() - valid.len();
    let oracle: Vec<&&TrialRecord> = valid.iter().filter(|r| r.alpha_orig.is_some()).collect();
    let failures = oracle
        .iter()
        .filter(|r| r.bound_held == Some(false))
        .count();
    let chain_violations = valid
        .iter()
        .filter(|r| r.packing_chain_ok == Some(false))
        .count();
    let mean_rel_gap = {
        let gaps: Vec<f64> = oracle
            .iter()
            .filter_map(|r| {
                let (u, l, a) = (r.upper?, r.lower?, r.alpha_orig?);
                Some((u - l) / a.abs().max(1e-12))
            })
            .collect();
        if gaps.is_empty() {
            None
        } else {
            Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
        }
    };
    let mean = |xs: Vec<u128>| -> f64 {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<u128>() as f64 / xs.len() as f64
        }
    };
    let mean_oracle = {
        let xs: Vec<u128> = oracle.iter().filter_map(|r| r.oracle_solve_ns).collect();
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<u128>() as f64 / xs.len() as f64)
        }
    };
    let mean_sketch = mean(valid.iter().map(|r| r.t_sketch_ns).collect());
    let mean_solve = mean(valid.iter().map(|r| r.t_solve_ns).collect());
    let speedup = mean_oracle.and_then(|o| {
        let denom = mean_sketch + mean_solve;
        (denom > 0.0).then_some(o / denom)
    });
    let sketch_dim = valid.first().map(|r| r.sketch_dim).unwrap_or(0);
    let m_total = cfg.m + 1;
    let summary = ValueSummary {
        family: cfg.family.name().into(),
        trials: records.len(),
        aborted,
        oracle_trials: oracle.len(),
        upper_bound_failures: failures,
        upper_bound_failure_rate: if oracle.is_empty() {
            0.0
        } else {
            failures as f64 / oracle.len() as f64
        },
        packing_chain_violations: chain_violations,
        mean_relative_gap: mean_rel_gap,
        mean_oracle_solve_ns: mean_oracle,
        mean_sketch_build_ns: mean_sketch,
        mean_sketched_solve_ns: mean_solve,
        speedup,
        max_entries_stored: valid.iter().map(|r| r.entries_stored).max().unwrap_or(0),
        entries_bound: (m_total + 1) * sketch_dim * sketch_dim + m_total,
        sketch_dim,
    };
    (records, summary)
}

/// Summary of an LMI certification experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LmiSummary {
    pub family: String,
    pub trials: usize,
    pub aborted: usize,
    pub certified: usize,
    pub certification_rate: f64,
    /// Trials where the desk-scale oracle called the original infeasible.
    pub oracle_infeasible: usize,
    /// Certificates issued on trials the oracle called feasible; must be 0.
    pub false_certificates: usize,
    pub sketch_dim: usize,
}

pub fn run_lmi_experiment(cfg: &ExperimentConfig) -> (Vec<TrialRecord>, LmiSummary) {
    assert!(
        matches!(cfg.family, Family::InfeasibleLmi | Family::FeasibleLmi),
        "LMI experiment needs an LMI family"
    );
    let records = run_trials(cfg, lmi_trial);
    let valid: Vec<&TrialRecord> = records.iter().filter(|r| r.aborted.is_none()).collect();
    let aborted = records.len() - valid.len();
    let certified = valid.iter().filter(|r| r.bound_held == Some(true)).count();
    // The oracle's phase-I t* is recorded in alpha_orig; infeasible means
    // t* at or above the default reporting margin.
    let oracle_infeasible = valid
        .iter()
        .filter(|r| r.alpha_orig.map(|t| t >= 1e-6).unwrap_or(false))
        .count();
    let false_certificates = valid
        .iter()
        .filter(|r| r.bound_held == Some(true) && r.alpha_orig.map(|t| t <= 0.0).unwrap_or(false))
        .count();
    let summary = LmiSummary {
        family: cfg.family.name().into(),
        trials: records.len(),
        aborted,
        certified,
        certification_rate: if valid.is_empty() {
            0.0
        } else {
            certified as f64 / valid.len() as f64
        },
        oracle_infeasible,
        false_certificates,
        sketch_dim: valid.first().map(|r| r.sketch_dim).unwrap_or(0),
    };
    (records, summary)
}

/// Summary of a distortion experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionSummary {
    pub family: String,
    pub trials: usize,
    pub threshold: f64,
    pub exceedances: usize,
    pub exceedance_rate: f64,
    /// Fraction of trials whose Schatten-2-normalized deviation exceeds the
    /// same threshold.
    pub hs2_exceedance_rate: f64,
    pub max_observed_deviation: f64,
    pub sketch_dim: usize,
}

pub fn run_lemma31_experiment(cfg: &ExperimentConfig) -> (Vec<TrialRecord>, DistortionSummary) {
    assert!(
        matches!(cfg.family, Family::Lemma31Matrices | Family::SpikeDemo),
        "distortion experiment needs a matrix family"
    );
    let records = run_trials(cfg, lemma31_trial);
    let valid: Vec<&TrialRecord> = records.iter().filter(|r| r.aborted.is_none()).collect();
    let threshold = 3.0 * cfg.epsilon;
    let exceedances = valid.iter().filter(|r| r.bound_held == Some(false)).count();
    let hs2_exceed = valid
        .iter()
        .filter(|r| r.hs2_max_deviation.map(|d| d > threshold).unwrap_or(false))
        .count();
    let summary = DistortionSummary {
        family: cfg.family.name().into(),
        trials: records.len(),
        threshold,
        exceedances,
        exceedance_rate: if valid.is_empty() {
            0.0
        } else {
            exceedances as f64 / valid.len() as f64
        },
        hs2_exceedance_rate: if valid.is_empty() {
            0.0
        } else {
            hs2_exceed as f64 / valid.len() as f64
        },
        max_observed_deviation: valid
            .iter()
            .filter_map(|r| r.alpha_sketch)
            .fold(0.0_f64, f64::max),
        sketch_dim: valid.first().map(|r| r.sketch_dim).unwrap_or(0),
    };
    (records, summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_experiment_smoke() {
        let mut cfg = ExperimentConfig::new(Family::Packing);
        cfg.dim = 24;
        cfg.m = 4;
        cfg.rank = 2;
        cfg.trials = 4;
        cfg.epsilon = 0.5;
        let (records, summary) = run_value_experiment(&cfg);
        assert_eq!(records.len(), 4);
        assert_eq!(summary.aborted, 0);
        // Deterministic packing chain holds on every trial.
        assert_eq!(summary.packing_chain_violations, 0);
        for r in &records {
            assert!(r.alpha_orig.is_some());
            assert!(r.upper.unwrap() >= r.lower.unwrap());
            assert!(r.entries_stored <= summary.entries_bound);
        }
        // Determinism across runs.
        let (records2, _) = run_value_experiment(&cfg);
        for (a, b) in records.iter().zip(records2.iter()) {
            assert_eq!(a.alpha_sketch, b.alpha_sketch);
            assert_eq!(a.upper, b.upper);
        }
    }

    #[test]
    fn lmi_experiment_smoke() {
        let mut cfg = ExperimentConfig::new(Family::InfeasibleLmi);
        cfg.dim = 24;
        cfg.m = 3;
        cfg.trials = 4;
        cfg.tau = 0.5;
        cfg.use_certified_epsilon = true;
        let (records, summary) = run_lmi_experiment(&cfg);
        assert_eq!(records.len(), 4);
        assert_eq!(summary.aborted, 0);
        assert_eq!(
            summary.certified, 4,
            "planted instances certify at desk scale"
        );
        assert_eq!(summary.false_certificates, 0);
        assert_eq!(summary.oracle_infeasible, 4);

        let mut control = cfg.clone();
        control.family = Family::FeasibleLmi;
        control.use_certified_epsilon = false;
        control.epsilon = 0.25;
        let (_, control_summary) = run_lmi_experiment(&control);
        assert_eq!(
            control_summary.certified, 0,
            "soundness: no false certificates"
        );
        assert_eq!(control_summary.oracle_infeasible, 0);
    }

    #[test]
    fn certification_rate_monotone_in_epsilon() {
        // Shrinking epsilon below the certified value cannot hurt the rate.
        let mut cfg = ExperimentConfig::new(Family::InfeasibleLmi);
        cfg.dim = 24;
        cfg.m = 3;
        cfg.trials = 10;
        cfg.tau = 0.5;
        cfg.epsilon = 0.2;
        let (_, at_base) = run_lmi_experiment(&cfg);
        cfg.epsilon = 0.1;
        let (_, at_half) = run_lmi_experiment(&cfg);
        assert!(at_half.certification_rate >= at_base.certification_rate);
    }

    #[test]
    fn lemma31_experiment_smoke() {
        let mut cfg = ExperimentConfig::new(Family::Lemma31Matrices);
        cfg.dim = 64;
        cfg.m = 4;
        cfg.rank = 2;
        cfg.trials = 5;
        cfg.epsilon = 0.5;
        let (records, summary) = run_lemma31_experiment(&cfg);
        assert_eq!(records.len(), 5);
        assert!(summary.max_observed_deviation.is_finite());
        for r in &records {
            assert!(r.alpha_sketch.unwrap() >= 0.0);
        }
    }

    #[test]
    fn spike_demo_shows_hs2_failure() {
        // At a forced small sketch dimension the Schatten-2-normalized
        // deviation blows past 3 eps in most trials.
        let mut cfg = ExperimentConfig::new(Family::SpikeDemo);
        cfg.dim = 256;
        cfg.m = 32;
        cfg.trials = 20;
        cfg.epsilon = 0.1;
        cfg.force_sketch_dim = Some(8);
        let (_, summary) = run_lemma31_experiment(&cfg);
        assert!(
            summary.hs2_exceedance_rate > 0.5,
            "rate {}",
            summary.hs2_exceedance_rate
        );
    }
}

//! Infeasibility certification for LMIs: search for a separating state,
//! derive a certified sketch accuracy from its margins, test the sketched
//! system, and emit seed-reproducible certificates.
//!
//! The inference "sketched infeasible implies original infeasible" is
//! deterministically sound: conjugation preserves PSD, so any multiplier
//! feasible for the original system transports to the sketched one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jlt::{sample_from_config, SketchConfig, SketchDescriptor};
use crate::linalg::{schatten_norm, Mat, SchattenP, SymMatrix, SymStorage};
use crate::model::LmiProblem;
use crate::sketch::sketch_lmi;
use crate::solver::{
    solve_conic, solve_feasibility, FeasibilityStatus, RawConstraint, RawKind, RawParams,
    RawProblem, RawStatus, SolverOptions,
};

/// A strictly separating state for an infeasible LMI: `rho` is PSD with unit
/// trace, every `Tr(rho B_i)` is strictly negative and `Tr(rho A)` strictly
/// positive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparatorCertificate {
    pub rho: SymMatrix,
    /// `Tr(rho B_i)`, all `< 0`.
    pub constraint_margins: Vec<f64>,
    /// `Tr(rho A)`, `> 0`.
    pub objective_margin: f64,
    /// The sketch accuracy certified by these margins.
    pub certified_epsilon: f64,
}

/// Seed-reproducible witness that a sketched LMI was infeasible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub sketch: SketchDescriptor,
    /// Phase-I optimum of the sketched LMI (`> 0`).
    pub t_star: f64,
    /// FNV-1a hash of the original problem's canonical JSON.
    pub problem_hash: String,
    /// Unix seconds; omitted by default so artifacts are byte-reproducible.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<u64>,
}

/// Outcome of the certification pipeline.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CertifyOutcome {
    /// The sketched LMI is infeasible, hence so is the original.
    InfeasibleCertified(InfeasibilityCertificate),
    /// The sketched LMI is feasible; the original is feasible or close to
    /// feasible. No claim is certified.
    SketchFeasible { witness_c: Vec<f64> },
    /// The sketched phase-I value fell inside the ambiguity margin.
    Inconclusive { t_star: f64 },
}

/// 64-bit FNV-1a over the canonical JSON encoding of a problem.
pub fn content_hash(l: &LmiProblem) -> String {
    let bytes = serde_json::to_vec(l).expect("LMI serialization cannot fail");
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

fn embed_with_corner(m: &SymMatrix, corner: f64) -> SymMatrix {
    let dim = m.dim();
    match m.storage() {
        SymStorage::SparseUpper(entries) => {
            let mut triplets: Vec<(usize, usize, f64)> = entries
                .iter()
                .map(|&(r, c, v)| (r as usize, c as usize, v))
                .collect();
            if corner != 0.0 {
                triplets.push((dim, dim, corner));
            }
            SymMatrix::sparse_from_triplets(dim + 1, &triplets).expect("valid embedding")
        }
        SymStorage::Dense(src) => {
            let mut out = Mat::zeros(dim + 1, dim + 1);
            for i in 0..dim {
                for j in 0..dim {
                    out.set(i, j, src.get(i, j));
                }
            }
            out.set(dim, dim, corner);
            SymMatrix::from_symmetric_mat(out)
        }
    }
}

/// Search for a separator by maximizing the margin `s` subject to
/// `Tr(rho B_i) <= -s`, `Tr(rho A) >= s`, `Tr(rho) = 1`, `rho >= 0`.
///
/// The margin is floored at a data-dependent `-s_max` (as a PSD corner
/// variable) so the search program is always strictly feasible; the floor
/// never binds when a genuine separator exists. Returns `None` when the
/// optimal margin is at most `tol` — the LMI may be feasible, or the
/// separation hypotheses may fail.
pub fn find_separator(l: &LmiProblem, tol: f64) -> Result<Option<SeparatorCertificate>> {
    l.validate()?;
    let dim = l.dim();
    let m = l.num_generators();
    let s_max = 1.0
        + (l.constraints
            .iter()
            .map(|b| b.trace().abs())
            .fold(0.0_f64, f64::max)
            + l.objective.trace().abs())
            / dim as f64;

    // Variable X~ = diag(rho, s') with s = s' - s_max.
    let mut constraints: Vec<RawConstraint> = Vec::with_capacity(m + 2);
    for b in &l.constraints {
        constraints.push(RawConstraint {
            mat: embed_with_corner(b, 1.0),
            rhs: s_max,
            kind: RawKind::Le,
        });
    }
    constraints.push(RawConstraint {
        mat: embed_with_corner(&l.objective.scaled(-1.0), 1.0),
        rhs: s_max,
        kind: RawKind::Le,
    });
    constraints.push(RawConstraint {
        mat: embed_with_corner(&SymMatrix::identity(dim), 0.0),
        rhs: 1.0,
        kind: RawKind::Eq,
    });
    let objective =
        SymMatrix::sparse_from_triplets(dim + 1, &[(dim, dim, 1.0)]).expect("corner objective");
    let problem = RawProblem {
        objective,
        constraints,
    };
    let params = RawParams {
        tol: 1e-8,
        max_iter: 200,
    };
    let outcome = solve_conic(&problem, &params)?;
    if outcome.status != RawStatus::Optimal {
        return Err(Error::NumericalFailure(format!(
            "separator search ended with {:?}",
            outcome.status
        )));
    }
    let margin = outcome.primal_objective - s_max;
    if margin <= tol {
        return Ok(None);
    }

    // Extract and renormalize the separator block.
    let mut rho_mat = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            rho_mat.set(i, j, outcome.x.get(i, j));
        }
    }
    rho_mat.symmetrize_average();
    let trace = rho_mat.trace();
    if trace <= 0.0 {
        return Ok(None);
    }
    rho_mat.scale_in_place(1.0 / trace);
    let rho = SymMatrix::from_symmetric_mat(rho_mat);

    let rho_dense = rho.to_mat();
    let constraint_margins: Vec<f64> = l
        .constraints
        .iter()
        .map(|b| b.trace_with_mat(&rho_dense))
        .collect();
    let objective_margin = l.objective.trace_with_mat(&rho_dense);
    // Strictness check: renormalization and solver tolerance must not have
    // eroded the separation.
    if constraint_margins.iter().any(|&v| v >= -1e-9) || objective_margin <= 1e-9 {
        return Ok(None);
    }
    let certified = certified_epsilon_from_margins(&constraint_margins, objective_margin, l)?;
    Ok(Some(SeparatorCertificate {
        rho,
        constraint_margins,
        objective_margin,
        certified_epsilon: certified,
    }))
}

fn certified_epsilon_from_margins(
    constraint_margins: &[f64],
    objective_margin: f64,
    l: &LmiProblem,
) -> Result<f64> {
    let mut ratios = Vec::with_capacity(constraint_margins.len() + 1);
    for (margin, b) in constraint_margins.iter().zip(l.constraints.iter()) {
        let norm = schatten_norm(b, SchattenP::One)?;
        if norm == 0.0 {
            return Err(Error::DegenerateCertificate(
                "a generator has zero trace norm".into(),
            ));
        }
        ratios.push(margin.abs() / norm);
    }
    let norm_a = schatten_norm(&l.objective, SchattenP::One)?;
    if norm_a == 0.0 {
        return Err(Error::DegenerateCertificate(
            "the objective matrix has zero trace norm".into(),
        ));
    }
    ratios.push(objective_margin.abs() / norm_a);
    let min_ratio = ratios.iter().fold(f64::INFINITY, |acc, v| acc.min(*v));
    Ok(min_ratio / 6.0)
}

/// The certified sketch accuracy of a separator:
/// `(1/6) min { |Tr(rho B_i)| / ||B_i||_1, |Tr(rho A)| / ||A||_1 }`.
pub fn certified_epsilon(cert: &SeparatorCertificate, l: &LmiProblem) -> Result<f64> {
    if cert.constraint_margins.len() != l.num_generators() {
        return Err(Error::DimensionMismatch(format!(
            "certificate has {} margins but the LMI has {} generators",
            cert.constraint_margins.len(),
            l.num_generators()
        )));
    }
    certified_epsilon_from_margins(&cert.constraint_margins, cert.objective_margin, l)
}

/// Sufficient condition for the separation hypotheses: if
/// `Tr(rho B_i) <= -tau < 0` for all `i`, every nonzero element of
/// `cone{B_1, ..., B_m}` has a strictly negative trace against `rho`, so the
/// cone is pointed and meets the PSD cone only at the origin.
pub fn check_sufficient_cone_conditions(l: &LmiProblem, rho: &SymMatrix, tau: f64) -> Result<bool> {
    if rho.dim() != l.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rho dim {} vs LMI dim {}",
            rho.dim(),
            l.dim()
        )));
    }
    let rho_dense = rho.to_mat();
    Ok(l.constraints
        .iter()
        .all(|b| b.trace_with_mat(&rho_dense) <= -tau))
}

/// Sketch the LMI and test feasibility of the reduced system.
///
/// A phase-I Infeasible verdict yields a deterministic certificate for the
/// original problem. A Feasible verdict only reports the witness: the
/// original is feasible or close to feasible (with high probability when the
/// supplied `epsilon` is at most the certified one). Marginal verdicts stay
/// inconclusive and never emit certificates.
pub fn certify_infeasible(
    l: &LmiProblem,
    config: &SketchConfig,
    options: &SolverOptions,
) -> Result<CertifyOutcome> {
    l.validate()?;
    config.validate(false)?;
    let s = sample_from_config(config, l.dim())?;
    let sketched = sketch_lmi(l, &s)?;
    let report = solve_feasibility(&sketched, options)?;
    match report.status {
        FeasibilityStatus::Infeasible => Ok(CertifyOutcome::InfeasibleCertified(
            InfeasibilityCertificate {
                sketch: s
                    .descriptor()
                    .cloned()
                    .expect("sampled transforms carry descriptors"),
                t_star: report.t_star,
                problem_hash: content_hash(l),
                timestamp: None,
            },
        )),
        FeasibilityStatus::Feasible => Ok(CertifyOutcome::SketchFeasible {
            witness_c: report.witness_c.unwrap_or_default(),
        }),
        FeasibilityStatus::Marginal => Ok(CertifyOutcome::Inconclusive {
            t_star: report.t_star,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::is_psd;

    fn isotropic_infeasible(dim: usize) -> LmiProblem {
        LmiProblem::new(
            SymMatrix::identity(dim),
            vec![SymMatrix::identity(dim).scaled(-1.0)],
        )
        .unwrap()
    }

    #[test]
    fn separator_on_isotropic_instance() {
        // B = -I, A = I: rho = I/D separates with margins -1 and +1.
        let l = isotropic_infeasible(6);
        let cert = find_separator(&l, 1e-6).unwrap().expect("separator exists");
        assert!((cert.constraint_margins[0] + 1.0).abs() < 1e-5);
        assert!((cert.objective_margin - 1.0).abs() < 1e-5);
        assert!((cert.rho.trace() - 1.0).abs() < 1e-8);
        assert!(is_psd(&cert.rho, 1e-8).unwrap());
        // epsilon = (1/6) min(1/D, 1/D) here since ||I||_1 = D.
        assert!((cert.certified_epsilon - 1.0 / (6.0 * 6.0)).abs() < 1e-6);
    }

    #[test]
    fn no_separator_for_feasible_lmi() {
        let l = LmiProblem::new(SymMatrix::identity(4), vec![SymMatrix::identity(4)]).unwrap();
        assert!(find_separator(&l, 1e-6).unwrap().is_none());
    }

    #[test]
    fn certified_epsilon_hand_values() {
        // rho = I/2, B1 = -I2 (norm 2), A = I2 (norm 2):
        // ratios 1/2 and 1/2, epsilon = 1/12.
        let l = isotropic_infeasible(2);
        let cert = SeparatorCertificate {
            rho: SymMatrix::identity(2).scaled(0.5),
            constraint_margins: vec![-1.0],
            objective_margin: 1.0,
            certified_epsilon: 0.0,
        };
        let eps = certified_epsilon(&cert, &l).unwrap();
        assert!((eps - 1.0 / 12.0).abs() < 1e-12);

        // Scaling B by 10 leaves the ratio (and epsilon) unchanged.
        let scaled = LmiProblem::new(
            SymMatrix::identity(2),
            vec![SymMatrix::identity(2).scaled(-10.0)],
        )
        .unwrap();
        let cert_scaled = SeparatorCertificate {
            constraint_margins: vec![-10.0],
            ..cert.clone()
        };
        let eps_scaled = certified_epsilon(&cert_scaled, &scaled).unwrap();
        assert!((eps_scaled - eps).abs() < 1e-12);
    }

    #[test]
    fn certified_epsilon_min_rule() {
        // Two generators with margin/norm ratios 0.5 and 0.2 -> eps = 0.2/6.
        let l = LmiProblem::new(
            SymMatrix::identity(2),
            vec![
                SymMatrix::identity(2).scaled(-1.0),
                SymMatrix::identity(2).scaled(-1.0),
            ],
        )
        .unwrap();
        let cert = SeparatorCertificate {
            rho: SymMatrix::identity(2).scaled(0.5),
            constraint_margins: vec![-1.0, -0.4],
            objective_margin: 1.6,
            certified_epsilon: 0.0,
        };
        let eps = certified_epsilon(&cert, &l).unwrap();
        assert!((eps - 0.2 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_certificate_rejected() {
        let l = LmiProblem::new(SymMatrix::identity(2), vec![SymMatrix::zeros(2)]).unwrap();
        let cert = SeparatorCertificate {
            rho: SymMatrix::identity(2).scaled(0.5),
            constraint_margins: vec![-1.0],
            objective_margin: 1.0,
            certified_epsilon: 0.0,
        };
        assert!(matches!(
            certified_epsilon(&cert, &l),
            Err(Error::DegenerateCertificate(_))
        ));
    }

    #[test]
    fn cone_condition_examples() {
        let dim = 4;
        let rho = SymMatrix::identity(dim).scaled(1.0 / dim as f64);
        let negative = LmiProblem::new(
            SymMatrix::identity(dim),
            vec![SymMatrix::identity(dim).scaled(-1.0)],
        )
        .unwrap();
        assert!(check_sufficient_cone_conditions(&negative, &rho, 0.5).unwrap());

        let positive =
            LmiProblem::new(SymMatrix::identity(dim), vec![SymMatrix::identity(dim)]).unwrap();
        assert!(!check_sufficient_cone_conditions(&positive, &rho, 0.5).unwrap());

        // One margin lands at 0 > -tau: the sufficient test must reject.
        let mixed = LmiProblem::new(
            SymMatrix::identity(dim),
            vec![
                SymMatrix::identity(dim).scaled(-1.0),
                SymMatrix::diagonal(&[1.0, 1.0, -1.0, -1.0]),
            ],
        )
        .unwrap();
        assert!(!check_sufficient_cone_conditions(&mixed, &rho, 0.5).unwrap());
    }

    #[test]
    fn certify_isotropic_infeasible() {
        let l = isotropic_infeasible(8);
        let mut cfg = SketchConfig::new(0.5, 0.05, 24, 0.0, 11);
        cfg.rank_budget = 24;
        let out = certify_infeasible(&l, &cfg, &SolverOptions::default()).unwrap();
        match out {
            CertifyOutcome::InfeasibleCertified(cert) => {
                assert!(cert.t_star > 0.0);
                assert_eq!(cert.problem_hash, content_hash(&l));
                assert!(cert.timestamp.is_none());
                // Replaying the descriptor reproduces t* (determinism).
                let s = cert.sketch.realize().unwrap();
                let sk = sketch_lmi(&l, &s).unwrap();
                let rep = solve_feasibility(&sk, &SolverOptions::default()).unwrap();
                assert!((rep.t_star - cert.t_star).abs() <= 10.0 * 1e-8);
            }
            other => panic!("expected a certificate, got {other:?}"),
        }
    }

    #[test]
    fn certify_feasible_reports_witness() {
        let l = LmiProblem::new(SymMatrix::identity(6), vec![SymMatrix::identity(6)]).unwrap();
        let cfg = SketchConfig::new(0.5, 0.05, 16, 0.0, 3);
        let out = certify_infeasible(&l, &cfg, &SolverOptions::default()).unwrap();
        match out {
            CertifyOutcome::SketchFeasible { witness_c } => {
                assert_eq!(witness_c.len(), 1);
                assert!(witness_c[0] > 0.0);
            }
            other => panic!("expected sketch-feasible, got {other:?}"),
        }
    }

    #[test]
    fn content_hash_is_stable_and_sensitive() {
        let a = isotropic_infeasible(4);
        let b = isotropic_infeasible(4);
        assert_eq!(content_hash(&a), content_hash(&b));
        let c = isotropic_infeasible(5);
        assert_ne!(content_hash(&a), content_hash(&c));
    }
}

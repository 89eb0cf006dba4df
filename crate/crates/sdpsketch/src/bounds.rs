//! Turn sketched-problem solutions into guarantees about the original
//! problem: probabilistic upper bounds on the value, deterministic lower
//! bounds through the relaxed problem or packing recovery, and recovered
//! feasible points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jlt::SketchMatrix;
use crate::linalg::{min_eigenvalue, schatten_norm, SchattenP, SymMatrix};
use crate::model::{is_packing, RelaxedSdp, SketchableSdp, SketchedSdp, PACKING_PSD_TOL};
use crate::sketch::{lift, relax_sdp};
use crate::solver::{SolveReport, SolveStatus};

/// Inputs behind an upper bound `alpha_S + 3 eps eta ||A||_1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpperBoundProvenance {
    pub alpha_sketch: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub objective_trace_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum LowerBoundMethod {
    /// Packing recovery: `alpha_S / (1 + nu)` with
    /// `nu = 3 eps eta max_i ||B_i||_1`.
    Packing { nu: f64 },
    /// Rearranged dual-norm bound from a strictly feasible point.
    DualNorm {
        c1: f64,
        c2: f64,
        objective_at_x0: f64,
        dual_norm_bound: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    #[serde(flatten)]
    pub method: LowerBoundMethod,
}

/// Value bounds for the original problem derived from a sketched solve,
/// together with the assumptions they rest on.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValueBounds {
    pub upper: f64,
    pub upper_provenance: UpperBoundProvenance,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lower: Option<LowerBound>,
    /// Which hypotheses were supplied versus verified.
    pub assumptions: Vec<String>,
}

/// `alpha_S + 3 eps eta ||A||_1`: an upper bound for the original value that
/// holds with probability at least `1 - delta` under the rank-budget
/// condition on the transform.
pub fn upper_bound_on_original(alpha_sketch: f64, epsilon: f64, eta: f64, norm1_a: f64) -> f64 {
    alpha_sketch + 3.0 * epsilon * eta * norm1_a
}

/// The original-dimension problem with each right-hand side inflated by
/// `3 eps eta ||B_i||_1`. The caller asserts `eta >= Tr(X*)`.
pub fn build_relaxed_sdp(p: &SketchableSdp, epsilon: f64, eta: f64) -> Result<RelaxedSdp> {
    relax_sdp(p, epsilon, eta)
}

/// Output of [`dual_norm_lower_bound`]: a computable lower bound on the
/// original value plus the audit quantities of the bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualNormBound {
    /// Lower bound `(alpha_S + (eps C1/C2) Tr(A X0)) / (1 + eps C1/C2)`.
    pub lower: f64,
    /// `C1 = max_i 3 eta ||B_i||_1`.
    pub c1: f64,
    /// `C2 = min_i (gamma_i - Tr(B_i X0))`.
    pub c2: f64,
    /// `Tr(A X0)`.
    pub objective_at_x0: f64,
    /// Bound on the dual multiplier norm: `(alpha_upper - Tr(A X0)) / C2`.
    pub dual_norm_bound: f64,
}

/// Lower bound on the original value from a strictly feasible point `X0`.
///
/// `alpha_sketch` enters the rearranged perturbation inequality; a certified
/// upper bound `alpha_upper >= alpha(0)` feeds the dual-norm audit record.
pub fn dual_norm_lower_bound(
    alpha_sketch: f64,
    alpha_upper: f64,
    p: &SketchableSdp,
    x0: &SymMatrix,
    epsilon: f64,
    eta: f64,
) -> Result<DualNormBound> {
    p.validate()?;
    if x0.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "X0 dim {} vs problem dim {}",
            x0.dim(),
            p.dim()
        )));
    }
    let lambda_min = min_eigenvalue(&x0.to_mat())?;
    if lambda_min <= 0.0 {
        return Err(Error::NotStrictlyFeasible(format!(
            "lambda_min(X0) = {lambda_min} is not positive"
        )));
    }
    let x0_mat = x0.to_mat();
    let mut c2 = f64::INFINITY;
    let mut c1 = 0.0_f64;
    for c in &p.constraints {
        let margin = c.rhs - c.matrix.trace_with_mat(&x0_mat);
        if margin <= 0.0 {
            return Err(Error::NotStrictlyFeasible(format!(
                "constraint margin {margin} is not positive"
            )));
        }
        c2 = c2.min(margin);
        let norm1 = schatten_norm(&c.matrix, SchattenP::One)?;
        c1 = c1.max(3.0 * eta * norm1);
    }
    let objective_at_x0 = p.objective.trace_with_mat(&x0_mat);
    let ratio = epsilon * c1 / c2;
    let lower = (alpha_sketch + ratio * objective_at_x0) / (1.0 + ratio);
    let dual_norm_bound = (alpha_upper - objective_at_x0) / c2;
    Ok(DualNormBound {
        lower,
        c1,
        c2,
        objective_at_x0,
        dual_norm_bound,
    })
}

/// Bounds for a normalized packing problem from an Optimal sketched solve:
/// lower `alpha_S / (1 + nu)`, upper from [`upper_bound_on_original`].
pub fn packing_bounds(
    p_normalized: &SketchableSdp,
    sketched: &SketchedSdp,
    report: &SolveReport,
) -> Result<ValueBounds> {
    if !is_packing(p_normalized, PACKING_PSD_TOL) {
        return Err(Error::NotPacking(
            "packing bounds need PSD constraint matrices and positive right-hand sides".into(),
        ));
    }
    if p_normalized.constraints.iter().any(|c| c.rhs != 1.0) {
        return Err(Error::NotPacking(
            "packing bounds need all right-hand sides normalized to 1".into(),
        ));
    }
    if report.status != SolveStatus::Optimal {
        return Err(Error::InvalidInput(format!(
            "packing bounds need an Optimal sketched report, got {:?}",
            report.status
        )));
    }
    let alpha_sketch = report
        .value
        .ok_or_else(|| Error::InvalidInput("Optimal report without value".into()))?;
    let epsilon = sketched.provenance.epsilon;
    let eta = sketched.provenance.eta;
    let nu = packing_nu(sketched);
    let norm1_a = schatten_norm(&p_normalized.objective, SchattenP::One)?;
    let upper = upper_bound_on_original(alpha_sketch, epsilon, eta, norm1_a);
    Ok(ValueBounds {
        upper,
        upper_provenance: UpperBoundProvenance {
            alpha_sketch,
            epsilon,
            eta,
            objective_trace_norm: norm1_a,
        },
        lower: Some(LowerBound {
            value: alpha_sketch / (1.0 + nu),
            method: LowerBoundMethod::Packing { nu },
        }),
        assumptions: vec![
            "packing: verified (B_i PSD, gamma_i = 1)".into(),
            format!("trace bound eta = {eta}: supplied"),
            "rank budget k covers rank(X*) + rank(A) + sum rank(B_i): supplied".into(),
        ],
    })
}

/// `nu = 3 eps eta max_i ||B_i||_1` from the recorded constraint norms.
pub fn packing_nu(sketched: &SketchedSdp) -> f64 {
    let max_norm = sketched
        .provenance
        .constraint_trace_norms
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(*v));
    3.0 * sketched.provenance.epsilon * sketched.provenance.eta * max_norm
}

/// Lift an optimal sketched point back to a feasible point of the original
/// packing problem: `X_hat = S^T Y* S / (1 + nu)`.
pub fn recover_packing_point(y_star: &SymMatrix, s: &SketchMatrix, nu: f64) -> Result<SymMatrix> {
    if nu < 0.0 {
        return Err(Error::InvalidInput(format!(
            "nu must be nonnegative, got {nu}"
        )));
    }
    let lifted = lift(s, y_star)?;
    Ok(lifted.scaled(1.0 / (1.0 + nu)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jlt::SketchConfig;
    use crate::linalg::Mat;
    use crate::model::SymConstraint;
    use crate::sketch::sketch_sdp;
    use crate::solver::{solve, SolverOptions};

    #[test]
    fn upper_bound_formula() {
        assert!((upper_bound_on_original(5.0, 0.1, 2.0, 3.0) - 6.8).abs() < 1e-12);
        assert_eq!(upper_bound_on_original(5.0, 0.0, 2.0, 3.0), 5.0);
        assert_eq!(upper_bound_on_original(5.0, 0.1, 0.0, 3.0), 5.0);
    }

    fn toy_problem() -> SketchableSdp {
        SketchableSdp::new(
            SymMatrix::identity(2),
            vec![SymConstraint {
                matrix: SymMatrix::identity(2),
                rhs: 1.0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn relaxed_examples() {
        let p = toy_problem();
        let same = build_relaxed_sdp(&p, 0.0, 1.0).unwrap();
        assert_eq!(same.problem.constraints[0].rhs, 1.0);
        let relaxed = build_relaxed_sdp(&p, 0.1, 1.0).unwrap();
        assert!((relaxed.inflation[0] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn relaxed_value_monotone_in_epsilon() {
        let p = toy_problem();
        let opts = SolverOptions::default();
        let mut last = f64::NEG_INFINITY;
        for eps in [0.0, 0.2, 0.5] {
            let relaxed = build_relaxed_sdp(&p, eps, 1.0).unwrap();
            let v = solve(&relaxed.problem, &opts).unwrap().value.unwrap();
            assert!(
                v >= last - 1e-7,
                "value {v} dropped below {last} at eps {eps}"
            );
            last = v;
        }
    }

    #[test]
    fn dual_norm_bound_examples() {
        // eps = 0 collapses the lower bound to alpha_S.
        let p = toy_problem();
        let x0 = SymMatrix::diagonal(&[0.25, 0.25]);
        let b = dual_norm_lower_bound(0.9, 1.2, &p, &x0, 0.0, 1.0).unwrap();
        assert!((b.lower - 0.9).abs() < 1e-12);

        // Hand-checked rearrangement: alpha_S = 2, Tr(A X0) = 0.5,
        // eps C1/C2 = 1 -> (2 + 0.5) / 2 = 1.25.
        // Here: C1 = 3 eta ||B||_1 = 6, C2 = 1 - 0.5 = 0.5, so eps = 1/12
        // gives ratio exactly 1.
        let b = dual_norm_lower_bound(2.0, 2.0, &p, &x0, 1.0 / 12.0, 1.0).unwrap();
        assert!((b.c1 - 6.0).abs() < 1e-12);
        assert!((b.c2 - 0.5).abs() < 1e-12);
        assert!((b.lower - 1.25).abs() < 1e-12);

        // Audit record: (alpha_upper - Tr(A X0)) / C2 = (2 - 0.5) / 0.5 = 3.
        assert!((b.dual_norm_bound - 3.0).abs() < 1e-12);
    }

    #[test]
    fn dual_norm_bound_rejects_non_strict_points() {
        let p = toy_problem();
        let boundary = SymMatrix::diagonal(&[1.0, 0.0]);
        assert!(matches!(
            dual_norm_lower_bound(1.0, 1.0, &p, &boundary, 0.1, 1.0),
            Err(Error::NotStrictlyFeasible(_))
        ));
        let saturating = SymMatrix::diagonal(&[0.5, 0.5]);
        assert!(matches!(
            dual_norm_lower_bound(1.0, 1.0, &p, &saturating, 0.1, 1.0),
            Err(Error::NotStrictlyFeasible(_))
        ));
    }

    #[test]
    fn packing_bounds_identity_sketch() {
        // With S = I and eps = 0 the chain collapses: lower = upper = alpha = 1.
        let p = toy_problem();
        let mut cfg = SketchConfig::new(0.0, 0.05, 4, 1.0, 0);
        cfg.epsilon = 0.0;
        let s = SketchMatrix::identity(2);
        let sk = sketch_sdp(&p, &cfg, &s).unwrap();
        let rep = solve(&sk.problem, &SolverOptions::default()).unwrap();
        let bounds = packing_bounds(&p, &sk, &rep).unwrap();
        assert!((bounds.upper - 1.0).abs() < 1e-6);
        let lower = bounds.lower.as_ref().unwrap();
        assert!((lower.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn packing_lower_bound_values() {
        // alpha_S = 1.2, nu = 0.2 -> lower = 1.0; nu = 0 -> alpha_S.
        assert!((1.2_f64 / (1.0 + 0.2) - 1.0).abs() < 1e-12);
        let p = toy_problem();
        let rhs_not_one = SketchableSdp::new(
            SymMatrix::identity(2),
            vec![SymConstraint {
                matrix: SymMatrix::identity(2),
                rhs: 2.0,
            }],
        )
        .unwrap();
        let cfg = SketchConfig::new(0.5, 0.05, 4, 1.0, 0);
        let s = SketchMatrix::identity(2);
        let sk = sketch_sdp(&p, &cfg, &s).unwrap();
        let rep = solve(&sk.problem, &SolverOptions::default()).unwrap();
        assert!(matches!(
            packing_bounds(&rhs_not_one, &sk, &rep),
            Err(Error::NotPacking(_))
        ));
    }

    #[test]
    fn recover_point_examples() {
        // Y* = [1], S = [1 0], nu = 0 -> diag(1, 0).
        let y = SymMatrix::diagonal(&[1.0]);
        let s = SketchMatrix::from_dense(Mat::from_vec(1, 2, vec![1.0, 0.0]).unwrap());
        let x = recover_packing_point(&y, &s, 0.0).unwrap();
        assert_eq!(x.entry(0, 0), 1.0);
        assert_eq!(x.entry(1, 1), 0.0);

        // nu = 0.5 scales by 1/1.5.
        let x = recover_packing_point(&y, &s, 0.5).unwrap();
        assert!((x.entry(0, 0) - 2.0 / 3.0).abs() < 1e-15);
    }
}

//! Reference SDP solver: a primal-dual interior-point method for problems in
//! sketchable form plus a phase-I feasibility solver for LMIs.
//!
//! Single-threaded per solve; every solve is deterministic for fixed input
//! and tolerance. Concurrent solves on disjoint problem values are safe.

mod ipm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, SymMatrix};
use crate::model::{LmiProblem, SketchableSdp};
use ipm::{ConicConstraint, ConicProblem, ConstraintKind, IpmParams, IpmStatus};

pub(crate) use ipm::{
    solve_conic, ConicConstraint as RawConstraint, ConicProblem as RawProblem,
    ConstraintKind as RawKind, IpmParams as RawParams, IpmStatus as RawStatus,
};

/// Solver knobs. `tol` bounds the relative duality gap and scaled
/// primal/dual residuals at termination.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Phase-I classification margin: `t* >= feasibility_margin` reports
    /// Infeasible, `t* <= 0` reports Feasible, anything between is Marginal.
    pub feasibility_margin: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 200,
            feasibility_margin: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions {
            tol,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    IterationLimit,
}

/// Solver output for a sketchable SDP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Objective value `Tr(A X*)`; meaningful when status is Optimal.
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub primal: Option<SymMatrix>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dual: Option<Vec<f64>>,
    pub duality_gap: Option<f64>,
    pub iterations: usize,
    pub tolerance: f64,
}

/// Solve `max Tr(A X)` s.t. `Tr(B_i X) <= gamma_i`, `X >= 0`.
pub fn solve(p: &SketchableSdp, options: &SolverOptions) -> Result<SolveReport> {
    p.validate()?;
    let conic = ConicProblem {
        objective: p.objective.clone(),
        constraints: p
            .constraints
            .iter()
            .map(|c| ConicConstraint {
                mat: c.matrix.clone(),
                rhs: c.rhs,
                kind: ConstraintKind::Le,
            })
            .collect(),
    };
    let params = IpmParams {
        tol: options.tol,
        max_iter: options.max_iter,
    };
    let outcome = match ipm::solve_conic(&conic, &params) {
        Ok(o) => o,
        Err(Error::NumericalFailure(_)) | Err(Error::ConvergenceFailure(_)) => {
            return Ok(SolveReport {
                status: SolveStatus::NumericalFailure,
                value: None,
                primal: None,
                dual: None,
                duality_gap: None,
                iterations: 0,
                tolerance: options.tol,
            })
        }
        Err(e) => return Err(e),
    };
    let status = match outcome.status {
        IpmStatus::Optimal => SolveStatus::Optimal,
        IpmStatus::Infeasible => SolveStatus::Infeasible,
        IpmStatus::Unbounded => SolveStatus::Unbounded,
        IpmStatus::IterationLimit => SolveStatus::IterationLimit,
        IpmStatus::NumericalFailure => SolveStatus::NumericalFailure,
    };
    let converged = status == SolveStatus::Optimal;
    let report_gap = converged || status == SolveStatus::IterationLimit;
    let gap = (outcome.dual_objective - outcome.primal_objective).abs()
        / (1.0
            + outcome
                .primal_objective
                .abs()
                .max(outcome.dual_objective.abs()));
    Ok(SolveReport {
        status,
        value: converged.then_some(outcome.primal_objective),
        primal: converged.then(|| SymMatrix::from_symmetric_mat(outcome.x)),
        dual: converged.then_some(outcome.y),
        duality_gap: report_gap.then_some(gap),
        iterations: outcome.iterations,
        tolerance: options.tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    Marginal,
}

/// Phase-I outcome for an LMI `sum c_i B_i - A >= 0`, `c >= 0`.
///
/// `t_star` is the optimum of `min t` s.t. `sum c_i B_i - A + t I >= 0`
/// (floored at -1; only the sign matters for classification).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub status: FeasibilityStatus,
    pub t_star: f64,
    /// Multipliers witnessing feasibility (present when status is Feasible).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness_c: Option<Vec<f64>>,
    pub iterations: usize,
}

/// Phase-I feasibility test, solved through the Lagrangian-dual program
/// `max Tr((A - t_lo I) X)` over `{X >= 0, Tr(B_i X) <= sigma_i, Tr(X) <= 1}`
/// with `t_lo = -1` and tiny margins `sigma_i` keeping both sides strictly
/// feasible. The phase-I value is `t_lo` plus that maximum; the witness
/// multipliers are the dual variables of the inequality rows.
pub fn solve_feasibility(l: &LmiProblem, options: &SolverOptions) -> Result<FeasibilityReport> {
    l.validate()?;
    let dim = l.dim();
    let m = l.num_generators();
    let t_lo = -1.0_f64;

    let mut constraints: Vec<ConicConstraint> = Vec::with_capacity(m + 1);
    for b in &l.constraints {
        let sigma = 1e-9 * (1.0 + b.max_abs());
        constraints.push(ConicConstraint {
            mat: b.clone(),
            rhs: sigma,
            kind: ConstraintKind::Le,
        });
    }
    constraints.push(ConicConstraint {
        mat: SymMatrix::identity(dim),
        rhs: 1.0,
        kind: ConstraintKind::Le,
    });

    // Objective A - t_lo I.
    let mut obj = l.objective.to_mat();
    for i in 0..dim {
        obj.add_to(i, i, -t_lo);
    }
    let conic = ConicProblem {
        objective: SymMatrix::from_symmetric_mat(obj),
        constraints,
    };
    let params = IpmParams {
        tol: options.tol,
        max_iter: options.max_iter,
    };
    let outcome = ipm::solve_conic(&conic, &params)
        .map_err(|e| Error::NumericalFailure(format!("phase-I solve failed: {e}")))?;
    if outcome.status != IpmStatus::Optimal {
        return Err(Error::NumericalFailure(format!(
            "phase-I solve ended with {:?}",
            outcome.status
        )));
    }
    let t_star = t_lo + outcome.primal_objective;
    let status = if t_star <= 0.0 {
        FeasibilityStatus::Feasible
    } else if t_star >= options.feasibility_margin {
        FeasibilityStatus::Infeasible
    } else {
        FeasibilityStatus::Marginal
    };
    let witness = if status == FeasibilityStatus::Feasible {
        Some(outcome.y[..m].to_vec())
    } else {
        None
    };
    Ok(FeasibilityReport {
        status,
        t_star,
        witness_c: witness,
        iterations: outcome.iterations,
    })
}

/// Primal/dual residual summary for an Optimal report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualReport {
    /// `max_i max(0, Tr(B_i X*) - gamma_i)`.
    pub max_primal_violation: f64,
    /// `lambda_min(sum y*_i B_i - A)`.
    pub dual_slack_min_eig: f64,
    /// `Tr[(sum y*_i B_i - A) X*]`.
    pub complementarity: f64,
}

/// Evaluate KKT residuals of an Optimal solve report against its problem.
pub fn residuals(p: &SketchableSdp, report: &SolveReport) -> Result<ResidualReport> {
    let x = report
        .primal
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("report carries no primal point".into()))?;
    let y = report
        .dual
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("report carries no dual point".into()))?;
    if y.len() != p.num_constraints() {
        return Err(Error::DimensionMismatch(format!(
            "dual length {} vs {} constraints",
            y.len(),
            p.num_constraints()
        )));
    }
    let x_mat = x.to_mat();
    let mut max_violation = 0.0_f64;
    for c in &p.constraints {
        let v = c.matrix.trace_with_mat(&x_mat) - c.rhs;
        max_violation = max_violation.max(v);
    }
    max_violation = max_violation.max(0.0);

    // Dual slack sum y_i B_i - A.
    let dim = p.dim();
    let mut slack = p.objective.to_mat();
    slack.scale_in_place(-1.0);
    for (yi, c) in y.iter().zip(p.constraints.iter()) {
        if *yi != 0.0 {
            for i in 0..dim {
                for j in 0..dim {
                    slack.add_to(i, j, yi * c.matrix.entry(i, j));
                }
            }
        }
    }
    slack.symmetrize_average();
    let min_eig = min_eigenvalue(&slack)?;
    let complementarity = slack.dot(&x_mat);
    Ok(ResidualReport {
        max_primal_violation: max_violation,
        dual_slack_min_eig: min_eig,
        complementarity,
    })
}

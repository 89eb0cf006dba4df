//! Problem data model: sketchable SDPs (trace objective, trace inequality
//! constraints, PSD variable), LMI feasibility systems, their duals, and the
//! reduced/perturbed problems derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jlt::SketchDescriptor;
use crate::linalg::{is_psd, SymMatrix};

/// One inequality `Tr(B X) <= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymConstraint {
    pub matrix: SymMatrix,
    pub rhs: f64,
}

/// maximize `Tr(A X)` subject to `Tr(B_i X) <= gamma_i` for `i in [m]` and
/// `X >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchableSdp {
    pub objective: SymMatrix,
    pub constraints: Vec<SymConstraint>,
}

impl SketchableSdp {
    pub fn new(objective: SymMatrix, constraints: Vec<SymConstraint>) -> Result<Self> {
        let p = SketchableSdp {
            objective,
            constraints,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(Error::InvalidInput(
                "a sketchable SDP needs at least one constraint".into(),
            ));
        }
        if !self.objective.is_finite() {
            return Err(Error::NonFinite("objective matrix"));
        }
        let dim = self.objective.dim();
        for (i, c) in self.constraints.iter().enumerate() {
            if c.matrix.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "constraint {i} has dimension {} but the objective has {dim}",
                    c.matrix.dim()
                )));
            }
            if !c.matrix.is_finite() || !c.rhs.is_finite() {
                return Err(Error::NonFinite("constraint data"));
            }
        }
        Ok(())
    }

    /// Number of floats stored across the objective, constraint matrices and
    /// right-hand sides.
    pub fn stored_entries(&self) -> usize {
        self.objective.stored_len()
            + self
                .constraints
                .iter()
                .map(|c| c.matrix.stored_len())
                .sum::<usize>()
            + self.constraints.len()
    }
}

/// Feasibility system `sum_i c_i B_i - A >= 0`, `c in R^m_+`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiProblem {
    /// The matrix `A` on the right of the cone inequality.
    pub objective: SymMatrix,
    /// The generators `B_1, ..., B_m`.
    pub constraints: Vec<SymMatrix>,
}

impl LmiProblem {
    pub fn new(objective: SymMatrix, constraints: Vec<SymMatrix>) -> Result<Self> {
        let l = LmiProblem {
            objective,
            constraints,
        };
        l.validate()?;
        Ok(l)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn num_generators(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.constraints.is_empty() {
            return Err(Error::InvalidInput(
                "an LMI needs at least one generator".into(),
            ));
        }
        if !self.objective.is_finite() {
            return Err(Error::NonFinite("LMI objective matrix"));
        }
        let dim = self.objective.dim();
        for (i, b) in self.constraints.iter().enumerate() {
            if b.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "LMI generator {i} has dimension {} but A has {dim}",
                    b.dim()
                )));
            }
            if !b.is_finite() {
                return Err(Error::NonFinite("LMI generator"));
            }
        }
        Ok(())
    }
}

/// Sketch parameters recorded alongside a reduced problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchProvenance {
    pub seed: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub k: usize,
    pub eta: f64,
    pub mu: f64,
    /// `||B_i||_1` for each original constraint, in order.
    pub constraint_trace_norms: Vec<f64>,
    /// Descriptor of the transform; absent only for hand-built sketches,
    /// which cannot be replayed from a seed.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sketch: Option<SketchDescriptor>,
}

/// The reduced problem: `A_hat = S A S^T`, `B_hat_i = S B_i S^T`,
/// `gamma_hat_i = gamma_i + mu ||B_i||_1` with `mu = 3 eps eta`.
#[derive(Debug, Clone)]
pub struct SketchedSdp {
    /// The reduced problem in sketch dimension `d`, inflated right-hand
    /// sides included.
    pub problem: SketchableSdp,
    pub mu: f64,
    /// Original (uninflated) right-hand sides.
    pub base_rhs: Vec<f64>,
    pub provenance: SketchProvenance,
}

impl SketchedSdp {
    pub fn sketch_dim(&self) -> usize {
        self.problem.dim()
    }

    /// `gamma_hat_i >= gamma_i` whenever `mu >= 0`.
    pub fn rhs_inflation_nonnegative(&self) -> bool {
        self.problem
            .constraints
            .iter()
            .zip(self.base_rhs.iter())
            .all(|(c, &g)| c.rhs >= g)
    }
}

/// The original-dimension problem with right-hand sides inflated by
/// `eps_tilde_i = 3 eps eta ||B_i||_1`.
#[derive(Debug, Clone)]
pub struct RelaxedSdp {
    pub problem: SketchableSdp,
    /// The per-constraint inflation `eps_tilde_i`.
    pub inflation: Vec<f64>,
}

/// Dual of a sketchable SDP:
/// minimize `<c, gamma>` subject to `sum c_i B_i - A >= 0`, `c >= 0`.
#[derive(Debug, Clone)]
pub struct DualProgram {
    pub gamma: Vec<f64>,
    /// The cone system `sum c_i B_i - A >= 0` as an LMI.
    pub lmi: LmiProblem,
}

impl DualProgram {
    pub fn value_at(&self, c: &[f64]) -> f64 {
        c.iter().zip(self.gamma.iter()).map(|(a, b)| a * b).sum()
    }

    /// Dense dual slack `sum c_i B_i - A` at a candidate multiplier.
    pub fn slack_at(&self, c: &[f64]) -> Result<SymMatrix> {
        if c.len() != self.lmi.constraints.len() {
            return Err(Error::DimensionMismatch(format!(
                "multiplier length {} vs {} generators",
                c.len(),
                self.lmi.constraints.len()
            )));
        }
        let dim = self.lmi.dim();
        let mut acc = self.lmi.objective.scaled(-1.0).to_mat();
        for (ci, b) in c.iter().zip(self.lmi.constraints.iter()) {
            if *ci != 0.0 {
                for i in 0..dim {
                    for j in 0..dim {
                        acc.add_to(i, j, ci * b.entry(i, j));
                    }
                }
            }
        }
        acc.symmetrize_average();
        Ok(SymMatrix::from_symmetric_mat(acc))
    }
}

/// A dual feasible point and its objective value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualData {
    pub coefficients: Vec<f64>,
    pub value: f64,
}

/// Form the dual program of a sketchable SDP. Applying this once yields the
/// multiplier-space description the solver consumes; it is not an involution.
pub fn dualize(p: &SketchableSdp) -> Result<DualProgram> {
    p.validate()?;
    Ok(DualProgram {
        gamma: p.rhs(),
        lmi: LmiProblem {
            objective: p.objective.clone(),
            constraints: p.constraints.iter().map(|c| c.matrix.clone()).collect(),
        },
    })
}

/// True iff every constraint matrix is PSD at tolerance `tol` and every
/// right-hand side is strictly positive.
pub fn is_packing(p: &SketchableSdp, tol: f64) -> bool {
    p.constraints
        .iter()
        .all(|c| c.rhs > 0.0 && is_psd(&c.matrix, tol).unwrap_or(false))
}

pub const PACKING_PSD_TOL: f64 = 1e-9;

/// Rescale a packing problem so every right-hand side is 1
/// (`B_i <- B_i / gamma_i`). The optimal value is unchanged.
pub fn normalize_packing(p: &SketchableSdp) -> Result<SketchableSdp> {
    if !is_packing(p, PACKING_PSD_TOL) {
        return Err(Error::NotPacking(
            "normalization requires PSD constraint matrices and positive right-hand sides".into(),
        ));
    }
    let constraints = p
        .constraints
        .iter()
        .map(|c| {
            if c.rhs == 1.0 {
                c.clone()
            } else {
                SymConstraint {
                    matrix: c.matrix.scaled(1.0 / c.rhs),
                    rhs: 1.0,
                }
            }
        })
        .collect();
    Ok(SketchableSdp {
        objective: p.objective.clone(),
        constraints,
    })
}

// --- JSON encodings ------------------------------------------------------
//
// Problem: {"dim": D, "objective": <matrix>,
//           "constraints": [{"matrix": <matrix>, "rhs": gamma_i}]}
// LMI: identical minus "rhs".

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    dim: usize,
    objective: SymMatrix,
    constraints: Vec<SymConstraint>,
}

impl Serialize for SketchableSdp {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        ProblemJson {
            dim: self.dim(),
            objective: self.objective.clone(),
            constraints: self.constraints.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SketchableSdp {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let json = ProblemJson::deserialize(deserializer)?;
        let p = SketchableSdp {
            objective: json.objective,
            constraints: json.constraints,
        };
        if p.dim() != json.dim {
            return Err(D::Error::custom(format!(
                "declared dim {} does not match objective dim {}",
                json.dim,
                p.dim()
            )));
        }
        p.validate().map_err(D::Error::custom)?;
        Ok(p)
    }
}

#[derive(Serialize, Deserialize)]
struct LmiGeneratorJson {
    matrix: SymMatrix,
}

#[derive(Serialize, Deserialize)]
struct LmiJson {
    dim: usize,
    objective: SymMatrix,
    constraints: Vec<LmiGeneratorJson>,
}

impl Serialize for LmiProblem {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        LmiJson {
            dim: self.dim(),
            objective: self.objective.clone(),
            constraints: self
                .constraints
                .iter()
                .map(|m| LmiGeneratorJson { matrix: m.clone() })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LmiProblem {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let json = LmiJson::deserialize(deserializer)?;
        let l = LmiProblem {
            objective: json.objective,
            constraints: json.constraints.into_iter().map(|g| g.matrix).collect(),
        };
        if l.dim() != json.dim {
            return Err(D::Error::custom(format!(
                "declared dim {} does not match objective dim {}",
                json.dim,
                l.dim()
            )));
        }
        l.validate().map_err(D::Error::custom)?;
        Ok(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_product;

    fn simple_problem() -> SketchableSdp {
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
    fn dualize_identity_example() {
        // A = I2, one constraint (I2, 1): dual is min c1 s.t. c1 I - I >= 0,
        // so the optimum sits at c1 = 1 with value 1.
        let dual = dualize(&simple_problem()).unwrap();
        assert_eq!(dual.gamma, vec![1.0]);
        assert_eq!(dual.value_at(&[1.0]), 1.0);
        let slack = dual.slack_at(&[1.0]).unwrap();
        assert!(is_psd(&slack, 1e-12).unwrap());
        let slack_below = dual.slack_at(&[0.9]).unwrap();
        assert!(!is_psd(&slack_below, 1e-12).unwrap());
    }

    #[test]
    fn dualize_zero_objective() {
        let p = SketchableSdp::new(
            SymMatrix::zeros(2),
            vec![SymConstraint {
                matrix: SymMatrix::identity(2),
                rhs: 1.0,
            }],
        )
        .unwrap();
        let dual = dualize(&p).unwrap();
        // c = 0 is dual feasible with value 0.
        assert_eq!(dual.value_at(&[0.0]), 0.0);
        assert!(is_psd(&dual.slack_at(&[0.0]).unwrap(), 1e-12).unwrap());
    }

    #[test]
    fn dualize_scaling_invariance() {
        // Dividing (B1, gamma1) by gamma1 > 0 leaves dual values invariant:
        // the multiplier rescales in the opposite direction.
        let p = SketchableSdp::new(
            SymMatrix::identity(2),
            vec![SymConstraint {
                matrix: SymMatrix::identity(2).scaled(2.0),
                rhs: 2.0,
            }],
        )
        .unwrap();
        let dual = dualize(&p).unwrap();
        let q = normalize_packing(&p).unwrap();
        let dual_q = dualize(&q).unwrap();
        // c feasible for p iff c * gamma feasible for q, with equal value.
        let c = [0.7];
        assert!((dual.value_at(&c) - dual_q.value_at(&[c[0] * 2.0])).abs() < 1e-14);
    }

    #[test]
    fn packing_detection() {
        let p = simple_problem();
        assert!(is_packing(&p, PACKING_PSD_TOL));

        let indefinite = SketchableSdp::new(
            SymMatrix::identity(2),
            vec![SymConstraint {
                matrix: SymMatrix::diagonal(&[1.0, -1.0]),
                rhs: 1.0,
            }],
        )
        .unwrap();
        assert!(!is_packing(&indefinite, PACKING_PSD_TOL));

        let zero_rhs = SketchableSdp::new(
            SymMatrix::identity(2),
            vec![SymConstraint {
                matrix: SymMatrix::identity(2),
                rhs: 0.0,
            }],
        )
        .unwrap();
        assert!(!is_packing(&zero_rhs, PACKING_PSD_TOL));
        assert!(matches!(
            normalize_packing(&zero_rhs),
            Err(Error::NotPacking(_))
        ));
    }

    #[test]
    fn normalize_packing_examples() {
        let p = SketchableSdp::new(
            SymMatrix::identity(2),
            vec![SymConstraint {
                matrix: SymMatrix::identity(2).scaled(2.0),
                rhs: 2.0,
            }],
        )
        .unwrap();
        let q = normalize_packing(&p).unwrap();
        assert_eq!(q.constraints[0].rhs, 1.0);
        assert_eq!(q.constraints[0].matrix.entry(0, 0), 1.0);
        // Idempotent on already-normalized input.
        let r = normalize_packing(&q).unwrap();
        assert_eq!(r, q);
    }

    #[test]
    fn normalize_packing_preserves_solver_value() {
        // Scaling (B_i, gamma_i) to gamma_i = 1 leaves the optimum unchanged.
        let p = SketchableSdp::new(
            SymMatrix::dense_from_rows(2, vec![0.8, 0.1, 0.1, 0.4]).unwrap(),
            vec![
                SymConstraint {
                    matrix: SymMatrix::identity(2).scaled(2.0),
                    rhs: 2.0,
                },
                SymConstraint {
                    matrix: SymMatrix::diagonal(&[1.0, 3.0]),
                    rhs: 1.5,
                },
            ],
        )
        .unwrap();
        let q = normalize_packing(&p).unwrap();
        let opts = crate::solver::SolverOptions::default();
        let before = crate::solver::solve(&p, &opts).unwrap().value.unwrap();
        let after = crate::solver::solve(&q, &opts).unwrap().value.unwrap();
        assert!((before - after).abs() <= 1e-6);
    }

    #[test]
    fn weak_duality_on_feasible_pairs() {
        // For feasible X and dual-feasible c: Tr(A X) <= <c, gamma>.
        let p = simple_problem();
        let dual = dualize(&p).unwrap();
        let x = SymMatrix::diagonal(&[0.5, 0.5]);
        let primal_val = trace_product(&p.objective, &x).unwrap();
        assert!(primal_val <= dual.value_at(&[1.0]) + 1e-12);
    }

    #[test]
    fn problem_json_roundtrip() {
        let p = SketchableSdp::new(
            SymMatrix::dense_from_rows(2, vec![1.0, 0.25, 0.25, -0.5]).unwrap(),
            vec![
                SymConstraint {
                    matrix: SymMatrix::identity(2),
                    rhs: 1.5,
                },
                SymConstraint {
                    matrix: SymMatrix::sparse_from_triplets(2, &[(0, 1, 2.0)]).unwrap(),
                    rhs: -0.5,
                },
            ],
        )
        .unwrap();
        let text = serde_json::to_string_pretty(&p).unwrap();
        assert!(text.contains("\"dim\""));
        assert!(text.contains("\"rhs\""));
        let back: SketchableSdp = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
        // Serialization round-trips bit-exactly.
        let text2 = serde_json::to_string_pretty(&back).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn lmi_json_roundtrip() {
        let l = LmiProblem::new(
            SymMatrix::identity(3),
            vec![
                SymMatrix::diagonal(&[1.0, 2.0, 3.0]),
                SymMatrix::sparse_from_triplets(3, &[(0, 2, -1.0)]).unwrap(),
            ],
        )
        .unwrap();
        let text = serde_json::to_string(&l).unwrap();
        assert!(!text.contains("rhs"));
        let back: LmiProblem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn validation_errors() {
        let mismatched = SketchableSdp::new(
            SymMatrix::identity(2),
            vec![SymConstraint {
                matrix: SymMatrix::identity(3),
                rhs: 1.0,
            }],
        );
        assert!(matches!(mismatched, Err(Error::DimensionMismatch(_))));
        let empty = SketchableSdp::new(SymMatrix::identity(2), vec![]);
        assert!(empty.is_err());
    }
}

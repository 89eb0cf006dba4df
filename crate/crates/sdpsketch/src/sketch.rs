//! Apply the positive map `X -> S X S^T` to matrices and whole problems, and
//! measure how well trace inner products survive the reduction.
//!
//! Conjugation is always two-phase (`T = S M`, then `T S^T`) through a
//! `d x D` buffer; no `D x D` intermediate is ever formed.

use crate::error::{Error, Result};
use crate::jlt::{SketchConfig, SketchMatrix};
use crate::linalg::{dense, schatten_norm, Mat, SchattenP, SymMatrix, SymStorage};
use crate::model::{
    LmiProblem, RelaxedSdp, SketchProvenance, SketchableSdp, SketchedSdp, SymConstraint,
};

/// `S M S^T`, exactly symmetric, in the sketch dimension.
pub fn conjugate(s: &SketchMatrix, m: &SymMatrix) -> Result<SymMatrix> {
    if m.dim() != s.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "conjugate: matrix dim {} vs ambient dim {}",
            m.dim(),
            s.ambient_dim()
        )));
    }
    let d = s.sketch_dim();
    let ambient = s.ambient_dim();

    // Phase one: T = S M (d x D).
    let t = match (s.dense_entries(), m.storage()) {
        (Some(sd), SymStorage::Dense(md)) => dense::mat_mul(sd, md),
        (Some(sd), SymStorage::SparseUpper(entries)) => {
            let mut t = Mat::zeros(d, ambient);
            for &(a, b, v) in entries {
                let (a, b) = (a as usize, b as usize);
                for i in 0..d {
                    t.add_to(i, b, v * sd.get(i, a));
                }
                if a != b {
                    for i in 0..d {
                        t.add_to(i, a, v * sd.get(i, b));
                    }
                }
            }
            t
        }
        (None, _) => {
            let cols = s.sparse_columns().expect("sparse storage");
            let mut t = Mat::zeros(d, ambient);
            match m.storage() {
                SymStorage::Dense(md) => {
                    // T[r, :] += val * M[i, :] for each sparse entry (r, val)
                    // in column i of S.
                    for (i, col) in cols.iter().enumerate() {
                        let src = md.row(i).to_vec();
                        for &(r, val) in col {
                            let dst = t.row_mut(r as usize);
                            for (dv, sv) in dst.iter_mut().zip(src.iter()) {
                                *dv += val * sv;
                            }
                        }
                    }
                }
                SymStorage::SparseUpper(entries) => {
                    let scatter = |col_of_s: usize, into_col: usize, v: f64, t: &mut Mat| {
                        for &(r, val) in &cols[col_of_s] {
                            t.add_to(r as usize, into_col, v * val);
                        }
                    };
                    for &(a, b, v) in entries {
                        let (a, b) = (a as usize, b as usize);
                        scatter(a, b, v, &mut t);
                        if a != b {
                            scatter(b, a, v, &mut t);
                        }
                    }
                }
            }
            t
        }
    };

    // Phase two: R = T S^T (d x d).
    let mut r = match s.dense_entries() {
        Some(sd) => dense::mat_mul_nt(&t, sd),
        None => {
            let cols = s.sparse_columns().expect("sparse storage");
            let mut r = Mat::zeros(d, d);
            for (i, col) in cols.iter().enumerate() {
                for &(rr, val) in col {
                    let rr = rr as usize;
                    for row in 0..d {
                        r.add_to(row, rr, val * t.get(row, i));
                    }
                }
            }
            r
        }
    };
    r.symmetrize_average();
    Ok(SymMatrix::from_symmetric_mat(r))
}

/// Adjoint map `Y -> S^T Y S`, lifting a sketch-dimension matrix back to the
/// ambient dimension.
pub fn lift(s: &SketchMatrix, y: &SymMatrix) -> Result<SymMatrix> {
    if y.dim() != s.sketch_dim() {
        return Err(Error::DimensionMismatch(format!(
            "lift: matrix dim {} vs sketch dim {}",
            y.dim(),
            s.sketch_dim()
        )));
    }
    let d = s.sketch_dim();
    let ambient = s.ambient_dim();
    let yd = y.to_mat();
    let mut out = match s.dense_entries() {
        Some(sd) => {
            // (S^T Y) S via two rectangular products.
            let ty = dense::mat_mul_tn(sd, &yd); // D x d
            dense::mat_mul(&ty, sd)
        }
        None => {
            let cols = s.sparse_columns().expect("sparse storage");
            // T = S^T Y (D x d): row j of T is sum over entries (r, v) of
            // column j of S of v * Y[r, :].
            let mut t = Mat::zeros(ambient, d);
            for (j, col) in cols.iter().enumerate() {
                for &(r, v) in col {
                    let src = yd.row(r as usize).to_vec();
                    let dst = t.row_mut(j);
                    for (dv, sv) in dst.iter_mut().zip(src.iter()) {
                        *dv += v * sv;
                    }
                }
            }
            // out = T S (D x D): out[:, j] += v * T[:, r] per entry of col j.
            let mut out = Mat::zeros(ambient, ambient);
            for (j, col) in cols.iter().enumerate() {
                for &(r, v) in col {
                    let r = r as usize;
                    for row in 0..ambient {
                        out.add_to(row, j, v * t.get(row, r));
                    }
                }
            }
            out
        }
    };
    out.symmetrize_average();
    Ok(SymMatrix::from_symmetric_mat(out))
}

/// Reduce a whole problem: conjugate the objective and every constraint, and
/// inflate each right-hand side by `mu ||B_i||_1` with `mu = 3 eps eta`.
///
/// Trace norms are computed spectrally here; when certified upper bounds are
/// already known (the usual standing assumption), use
/// [`sketch_sdp_with_norms`] to keep sketch construction at conjugation cost.
pub fn sketch_sdp(
    p: &SketchableSdp,
    config: &SketchConfig,
    s: &SketchMatrix,
) -> Result<SketchedSdp> {
    let norms: Vec<f64> = p
        .constraints
        .iter()
        .map(|c| schatten_norm(&c.matrix, SchattenP::One))
        .collect::<Result<_>>()?;
    sketch_sdp_with_norms(p, config, s, &norms)
}

/// As [`sketch_sdp`], with caller-supplied upper bounds on `||B_i||_1`.
/// Inflating by an upper bound keeps every guarantee valid; it only loosens
/// the right-hand sides.
pub fn sketch_sdp_with_norms(
    p: &SketchableSdp,
    config: &SketchConfig,
    s: &SketchMatrix,
    trace_norm_bounds: &[f64],
) -> Result<SketchedSdp> {
    p.validate()?;
    config.validate(true)?;
    if p.dim() != s.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "sketch_sdp: problem dim {} vs ambient dim {}",
            p.dim(),
            s.ambient_dim()
        )));
    }
    if trace_norm_bounds.len() != p.constraints.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} trace-norm bounds for {} constraints",
            trace_norm_bounds.len(),
            p.constraints.len()
        )));
    }
    if trace_norm_bounds
        .iter()
        .any(|n| !(n.is_finite() && *n >= 0.0))
    {
        return Err(Error::InvalidInput(
            "trace-norm bounds must be nonnegative reals".into(),
        ));
    }
    let mu = 3.0 * config.epsilon * config.trace_bound;
    let norms = trace_norm_bounds.to_vec();
    let mut constraints = Vec::with_capacity(p.constraints.len());
    for (c, norm1) in p.constraints.iter().zip(norms.iter()) {
        constraints.push(SymConstraint {
            matrix: conjugate(s, &c.matrix)?,
            rhs: c.rhs + mu * norm1,
        });
    }
    let objective = conjugate(s, &p.objective)?;
    Ok(SketchedSdp {
        problem: SketchableSdp {
            objective,
            constraints,
        },
        mu,
        base_rhs: p.rhs(),
        provenance: SketchProvenance {
            seed: config.seed,
            epsilon: config.epsilon,
            delta: config.delta,
            k: config.rank_budget,
            eta: config.trace_bound,
            mu,
            constraint_trace_norms: norms,
            sketch: s.descriptor().cloned(),
        },
    })
}

/// Conjugate every matrix of an LMI.
pub fn sketch_lmi(l: &LmiProblem, s: &SketchMatrix) -> Result<LmiProblem> {
    l.validate()?;
    Ok(LmiProblem {
        objective: conjugate(s, &l.objective)?,
        constraints: l
            .constraints
            .iter()
            .map(|b| conjugate(s, b))
            .collect::<Result<_>>()?,
    })
}

/// Deviation of one ordered pair in a distortion report.
#[derive(Debug, Clone)]
pub struct PairDeviation {
    pub i: usize,
    pub j: usize,
    /// `|Tr(S B_i S^T S B_j S^T) - Tr(B_i B_j)|`
    pub deviation: f64,
    /// Deviation divided by `||B_i||_1 ||B_j||_1` (0 when either norm is 0).
    pub normalized: f64,
}

#[derive(Debug, Clone)]
pub struct DistortionReport {
    pub max_normalized_deviation: f64,
    pub pairs: Vec<PairDeviation>,
}

/// Compare trace inner products before and after conjugation for every
/// ordered pair `(i, j)` with `i <= j`, normalizing by trace norms.
pub fn hs_distortion_report(mats: &[SymMatrix], s: &SketchMatrix) -> Result<DistortionReport> {
    for m in mats {
        if m.dim() != s.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "hs_distortion_report: matrix dim {} vs ambient dim {}",
                m.dim(),
                s.ambient_dim()
            )));
        }
    }
    let sketched: Vec<SymMatrix> = mats
        .iter()
        .map(|m| conjugate(s, m))
        .collect::<Result<_>>()?;
    let norms: Vec<f64> = mats
        .iter()
        .map(|m| schatten_norm(m, SchattenP::One))
        .collect::<Result<_>>()?;
    let mut pairs = Vec::with_capacity(mats.len() * (mats.len() + 1) / 2);
    let mut worst = 0.0_f64;
    for i in 0..mats.len() {
        for j in i..mats.len() {
            let original = crate::linalg::trace_product(&mats[i], &mats[j])?;
            let mapped = crate::linalg::trace_product(&sketched[i], &sketched[j])?;
            let deviation = (mapped - original).abs();
            let denom = norms[i] * norms[j];
            let normalized = if denom > 0.0 { deviation / denom } else { 0.0 };
            worst = worst.max(normalized);
            pairs.push(PairDeviation {
                i,
                j,
                deviation,
                normalized,
            });
        }
    }
    Ok(DistortionReport {
        max_normalized_deviation: worst,
        pairs,
    })
}

/// Relaxed right-hand sides: `gamma_i + 3 eps eta ||B_i||_1` in the original
/// dimension. Shared by the bounds module.
pub fn relax_sdp(p: &SketchableSdp, epsilon: f64, eta: f64) -> Result<RelaxedSdp> {
    p.validate()?;
    let factor = 3.0 * epsilon * eta;
    let mut inflation = Vec::with_capacity(p.constraints.len());
    let mut constraints = Vec::with_capacity(p.constraints.len());
    for c in &p.constraints {
        let norm1 = schatten_norm(&c.matrix, SchattenP::One)?;
        let bump = factor * norm1;
        inflation.push(bump);
        constraints.push(SymConstraint {
            matrix: c.matrix.clone(),
            rhs: c.rhs + bump,
        });
    }
    Ok(RelaxedSdp {
        problem: SketchableSdp {
            objective: p.objective.clone(),
            constraints,
        },
        inflation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jlt::{sample_gaussian_jlt, sample_sparse_jlt};
    use crate::linalg::{is_psd, min_eigenvalue, trace_product};

    #[test]
    fn conjugate_identity_and_projection() {
        let s = SketchMatrix::identity(2);
        let m = SymMatrix::diagonal(&[1.0, 2.0]);
        let out = conjugate(&s, &m).unwrap();
        assert_eq!(out.entry(0, 0), 1.0);
        assert_eq!(out.entry(1, 1), 2.0);
        assert_eq!(out.entry(0, 1), 0.0);

        let proj = SketchMatrix::from_dense(Mat::from_vec(1, 2, vec![1.0, 0.0]).unwrap());
        let m = SymMatrix::diagonal(&[3.0, 5.0]);
        let out = conjugate(&proj, &m).unwrap();
        assert_eq!(out.dim(), 1);
        assert_eq!(out.entry(0, 0), 3.0);

        let swap = SketchMatrix::from_dense(Mat::from_vec(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap());
        let out = conjugate(&swap, &SymMatrix::diagonal(&[1.0, 2.0])).unwrap();
        assert_eq!(out.entry(0, 0), 2.0);
        assert_eq!(out.entry(1, 1), 1.0);
    }

    #[test]
    fn conjugate_storage_paths_agree() {
        let dim = 12;
        let mut tri = Vec::new();
        for i in 0..dim {
            tri.push((i, i, (i + 1) as f64 * 0.3));
            if i + 2 < dim {
                tri.push((i, i + 2, -0.5));
            }
        }
        let sparse_m = SymMatrix::sparse_from_triplets(dim, &tri).unwrap();
        let dense_m = SymMatrix::dense_from_rows(dim, sparse_m.to_mat().into_vec()).unwrap();

        let s_dense = sample_gaussian_jlt(5, dim, 4).unwrap();
        let s_sparse = sample_sparse_jlt(5, dim, 3, 4).unwrap();

        for s in [&s_dense, &s_sparse] {
            let a = conjugate(s, &sparse_m).unwrap();
            let b = conjugate(s, &dense_m).unwrap();
            for i in 0..5 {
                for j in 0..5 {
                    assert!((a.entry(i, j) - b.entry(i, j)).abs() < 1e-12);
                }
            }
            // Against the plain dense reference.
            let sd = s.to_dense();
            let reference = dense::mat_mul_nt(&dense::mat_mul(&sd, &dense_m.to_mat()), &sd);
            for i in 0..5 {
                for j in 0..5 {
                    assert!((a.entry(i, j) - reference.get(i, j)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn positivity_of_conjugation() {
        let dim = 16;
        // Exactly PSD test matrix G G^T.
        let g = sample_gaussian_jlt(dim, dim, 99).unwrap().to_dense();
        let psd = {
            let mut m = dense::mat_mul_nt(&g, &g);
            m.symmetrize_average();
            SymMatrix::from_symmetric_mat(m)
        };
        for s in [
            sample_gaussian_jlt(6, dim, 1).unwrap(),
            sample_sparse_jlt(6, dim, 2, 2).unwrap(),
        ] {
            let mapped = conjugate(&s, &psd).unwrap();
            let floor = -1e-9 * mapped.max_abs().max(1.0);
            assert!(min_eigenvalue(&mapped.to_mat()).unwrap() >= floor);
        }
    }

    #[test]
    fn lift_matches_dense_reference() {
        let s = sample_sparse_jlt(4, 10, 2, 7).unwrap();
        let y = SymMatrix::dense_from_rows(
            4,
            vec![
                1.0, 0.2, 0.0, -0.1, 0.2, 2.0, 0.3, 0.0, 0.0, 0.3, 0.5, 0.1, -0.1, 0.0, 0.1, 1.5,
            ],
        )
        .unwrap();
        let lifted = lift(&s, &y).unwrap();
        let sd = s.to_dense();
        let reference = dense::mat_mul(&dense::mat_mul_tn(&sd, &y.to_mat()), &sd);
        for i in 0..10 {
            for j in 0..10 {
                assert!((lifted.entry(i, j) - reference.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trace_cyclicity_through_lift() {
        // Tr(S B S^T Y) = Tr(B S^T Y S) up to rounding.
        let dim = 14;
        let s = sample_gaussian_jlt(6, dim, 3).unwrap();
        let b = SymMatrix::sparse_from_triplets(dim, &[(0, 3, 1.5), (2, 2, -0.7), (5, 9, 0.4)])
            .unwrap();
        let y = {
            let g = sample_gaussian_jlt(6, 6, 5).unwrap().to_dense();
            let mut m = dense::mat_mul_nt(&g, &g);
            m.symmetrize_average();
            SymMatrix::from_symmetric_mat(m)
        };
        let left = trace_product(&conjugate(&s, &b).unwrap(), &y).unwrap();
        let right = trace_product(&b, &lift(&s, &y).unwrap()).unwrap();
        assert!((left - right).abs() <= 1e-8 * left.abs().max(1.0));
    }

    #[test]
    fn sketch_sdp_inflation() {
        // gamma = 1, ||B||_1 = 2, eps = 0.1, eta = 1 -> rhs 1.6.
        let p = SketchableSdp::new(
            SymMatrix::identity(2),
            vec![SymConstraint {
                matrix: SymMatrix::identity(2),
                rhs: 1.0,
            }],
        )
        .unwrap();
        let mut cfg = SketchConfig::new(0.1, 0.05, 4, 1.0, 0);
        cfg.epsilon = 0.1;
        let s = SketchMatrix::identity(2);
        let sk = sketch_sdp(&p, &cfg, &s).unwrap();
        assert!((sk.mu - 0.3).abs() < 1e-15);
        assert!((sk.problem.constraints[0].rhs - 1.6).abs() < 1e-12);
        assert_eq!(sk.provenance.constraint_trace_norms, vec![2.0]);
        assert!(sk.rhs_inflation_nonnegative());

        // Degenerate eps = 0 with the identity sketch reproduces the problem.
        let mut cfg0 = cfg.clone();
        cfg0.epsilon = 0.0;
        let sk0 = sketch_sdp(&p, &cfg0, &s).unwrap();
        assert_eq!(sk0.problem.constraints[0].rhs, 1.0);
        assert_eq!(sk0.problem.constraints[0].matrix.entry(0, 0), 1.0);
        assert_eq!(sk0.mu, 0.0);
    }

    #[test]
    fn sketch_sdp_preserves_constraint_order() {
        let p = SketchableSdp::new(
            SymMatrix::identity(3),
            (1..=4)
                .map(|i| SymConstraint {
                    matrix: SymMatrix::diagonal(&[i as f64, 0.0, 0.0]),
                    rhs: i as f64,
                })
                .collect(),
        )
        .unwrap();
        let cfg = SketchConfig::new(0.5, 0.1, 4, 0.0, 5);
        let s = sample_gaussian_jlt(2, 3, 5).unwrap();
        let sk = sketch_sdp(&p, &cfg, &s).unwrap();
        assert_eq!(sk.problem.num_constraints(), 4);
        // eta = 0 keeps the base rhs, so order is visible there.
        for (i, c) in sk.problem.constraints.iter().enumerate() {
            assert_eq!(c.rhs, (i + 1) as f64);
        }
    }

    #[test]
    fn sketch_lmi_identity_and_projection() {
        let l = LmiProblem::new(
            SymMatrix::identity(2),
            vec![SymMatrix::diagonal(&[1.0, -1.0])],
        )
        .unwrap();
        let id = SketchMatrix::identity(2);
        let same = sketch_lmi(&l, &id).unwrap();
        assert_eq!(same.constraints[0].entry(1, 1), -1.0);

        let proj = SketchMatrix::from_dense(Mat::from_vec(1, 2, vec![1.0, 0.0]).unwrap());
        let reduced = sketch_lmi(&l, &proj).unwrap();
        assert_eq!(reduced.dim(), 1);
        assert_eq!(reduced.constraints[0].entry(0, 0), 1.0);
    }

    #[test]
    fn lmi_feasible_point_transports() {
        // Any feasible c stays feasible after conjugation: positive maps
        // preserve PSD.
        let dim = 10;
        let b1 = SymMatrix::identity(dim).scaled(2.0);
        let a = SymMatrix::identity(dim);
        let l = LmiProblem::new(a, vec![b1]).unwrap();
        let c = [1.0];
        for s in [
            sample_gaussian_jlt(4, dim, 21).unwrap(),
            sample_sparse_jlt(4, dim, 2, 22).unwrap(),
        ] {
            let sk = sketch_lmi(&l, &s).unwrap();
            let dual = crate::model::DualProgram {
                gamma: vec![0.0],
                lmi: sk,
            };
            let slack = dual.slack_at(&c).unwrap();
            let tol = 1e-9 * slack.max_abs().max(1.0);
            assert!(is_psd(&slack, tol).unwrap());
        }
    }

    #[test]
    fn distortion_report_identity_is_zero() {
        let mats = vec![
            SymMatrix::diagonal(&[1.0, 2.0, -1.0]),
            SymMatrix::sparse_from_triplets(3, &[(0, 1, 0.5)]).unwrap(),
        ];
        let s = SketchMatrix::identity(3);
        let rep = hs_distortion_report(&mats, &s).unwrap();
        assert!(rep.max_normalized_deviation < 1e-12);
    }

    #[test]
    fn distortion_rank_one_formula() {
        // For B = e1 e1^T the deviation equals | ||S e1||^4 - 1 |.
        let dim = 20;
        let s = sample_gaussian_jlt(6, dim, 13).unwrap();
        let b = SymMatrix::sparse_from_triplets(dim, &[(0, 0, 1.0)]).unwrap();
        let rep = hs_distortion_report(&[b], &s).unwrap();
        let mut e1 = vec![0.0; dim];
        e1[0] = 1.0;
        let se1 = s.apply_vec(&e1).unwrap();
        let norm_sq: f64 = se1.iter().map(|v| v * v).sum();
        let expect = (norm_sq * norm_sq - 1.0).abs();
        assert!((rep.max_normalized_deviation - expect).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_reports_zero_deviation() {
        let mats = vec![SymMatrix::zeros(5), SymMatrix::identity(5)];
        let s = sample_gaussian_jlt(3, 5, 2).unwrap();
        let rep = hs_distortion_report(&mats, &s).unwrap();
        let pair = rep.pairs.iter().find(|p| p.i == 0 && p.j == 0).unwrap();
        assert_eq!(pair.normalized, 0.0);
    }

    #[test]
    fn relax_sdp_inflation_values() {
        let p = SketchableSdp::new(
            SymMatrix::identity(2),
            vec![SymConstraint {
                matrix: SymMatrix::identity(2),
                rhs: 1.0,
            }],
        )
        .unwrap();
        let relaxed = relax_sdp(&p, 0.1, 1.0).unwrap();
        assert!((relaxed.inflation[0] - 0.6).abs() < 1e-12);
        assert!((relaxed.problem.constraints[0].rhs - 1.6).abs() < 1e-12);
        let same = relax_sdp(&p, 0.0, 1.0).unwrap();
        assert_eq!(same.problem.constraints[0].rhs, 1.0);
    }
}

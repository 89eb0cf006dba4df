//! Infeasible-start primal-dual path-following interior-point method with
//! Nesterov-Todd scaling for the PSD block, scalar slacks for inequality
//! rows, and Mehrotra-style predictor-corrector steps.
//!
//! Solves max Tr(A0 X) s.t. Tr(A_k X) <= b_k (Le rows, slack w_k >= 0) or
//! Tr(A_k X) = b_k (Eq rows), X >= 0. Dual: min <b, y> with
//! Z = sum y_k A_k - A0 >= 0, y_k >= 0 on Le rows.

use crate::error::{Error, Result};
use crate::linalg::dense::{self, Mat};
use crate::linalg::{sym_eigen_full, sym_eigenvalues, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ConstraintKind {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct ConicConstraint {
    pub mat: SymMatrix,
    pub rhs: f64,
    pub kind: ConstraintKind,
}

#[derive(Debug, Clone)]
pub(crate) struct ConicProblem {
    pub objective: SymMatrix,
    pub constraints: Vec<ConicConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmOutcome {
    pub status: IpmStatus,
    pub x: Mat,
    pub y: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

pub(crate) struct IpmParams {
    pub tol: f64,
    pub max_iter: usize,
}

const DIVERGENCE_SCALE: f64 = 1e12;
const MIN_STEP: f64 = 1e-9;

/// Accumulate `out = base + sum coeffs[k] * A_k` densely.
fn linear_combination(base: &Mat, coeffs: &[f64], constraints: &[ConicConstraint], out: &mut Mat) {
    out.data_mut().copy_from_slice(base.data());
    let n = base.rows();
    for (c, con) in coeffs.iter().zip(constraints.iter()) {
        if *c == 0.0 {
            continue;
        }
        match con.mat.storage() {
            crate::linalg::SymStorage::Dense(m) => {
                out.axpy_in_place(*c, m);
            }
            crate::linalg::SymStorage::SparseUpper(entries) => {
                for &(r, col, v) in entries {
                    let (r, col) = (r as usize, col as usize);
                    out.add_to(r, col, c * v);
                    if r != col {
                        out.add_to(col, r, c * v);
                    }
                }
            }
        }
    }
    debug_assert_eq!(out.rows(), n);
}

/// Largest step `alpha` keeping `P + alpha * D` positive definite, where `P`
/// is factored as `L L^T`. Returns `f64::INFINITY` when every step works.
fn psd_max_step(l: &Mat, direction: &Mat) -> Result<f64> {
    let scaled = dense::two_sided_lower_solve(l, direction);
    let mut sym = scaled;
    sym.symmetrize_average();
    let vals = sym_eigenvalues(&sym)?;
    let lambda_min = *vals.last().expect("nonempty spectrum");
    if lambda_min >= -1e-300 {
        Ok(f64::INFINITY)
    } else {
        Ok(-1.0 / lambda_min)
    }
}

fn vec_max_step(values: &[f64], directions: &[f64], mask: &[bool]) -> f64 {
    let mut alpha = f64::INFINITY;
    for ((v, d), active) in values.iter().zip(directions.iter()).zip(mask.iter()) {
        if *active && *d < 0.0 {
            alpha = alpha.min(-v / d);
        }
    }
    alpha
}

fn lower_triangular_inverse(l: &Mat) -> Mat {
    let n = l.rows();
    let mut inv = Mat::zeros(n, n);
    for j in 0..n {
        inv.set(j, j, 1.0 / l.get(j, j));
        for i in (j + 1)..n {
            let mut s = 0.0;
            for k in j..i {
                s += l.get(i, k) * inv.get(k, j);
            }
            inv.set(i, j, -s / l.get(i, i));
        }
    }
    inv
}

struct Workspace {
    dim: usize,
    m: usize,
    le_mask: Vec<bool>,
    b: Vec<f64>,
    a0: Mat,
    x: Mat,
    z: Mat,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl Workspace {
    fn init(p: &ConicProblem) -> Self {
        let dim = p.objective.dim();
        let m = p.constraints.len();
        let le_mask: Vec<bool> = p
            .constraints
            .iter()
            .map(|c| c.kind == ConstraintKind::Le)
            .collect();
        let b: Vec<f64> = p.constraints.iter().map(|c| c.rhs).collect();
        let a0 = p.objective.to_mat();

        let rho0 = b.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let mut x = Mat::zeros(dim, dim);
        for i in 0..dim {
            x.set(i, i, rho0);
        }
        let xi = 1.0_f64.max(a0.max_abs())
            + p.constraints
                .iter()
                .map(|c| c.mat.max_abs())
                .fold(0.0_f64, f64::max);
        let mut z = Mat::zeros(dim, dim);
        for i in 0..dim {
            z.set(i, i, xi);
        }
        let y: Vec<f64> = le_mask
            .iter()
            .map(|le| if *le { 1.0 } else { 0.0 })
            .collect();
        let w: Vec<f64> = p
            .constraints
            .iter()
            .map(|c| {
                if c.kind == ConstraintKind::Le {
                    let gap = c.rhs - c.mat.trace_with_mat(&x);
                    gap.abs().max(1.0)
                } else {
                    0.0
                }
            })
            .collect();
        Workspace {
            dim,
            m,
            le_mask,
            b,
            a0,
            x,
            z,
            y,
            w,
        }
    }

    fn mu(&self) -> f64 {
        let n_le = self.le_mask.iter().filter(|m| **m).count();
        let lp: f64 = self
            .w
            .iter()
            .zip(self.y.iter())
            .zip(self.le_mask.iter())
            .filter(|(_, le)| **le)
            .map(|((w, y), _)| w * y)
            .sum();
        (self.x.dot(&self.z) + lp) / (self.dim + n_le) as f64
    }
}

pub(crate) fn solve_conic(p: &ConicProblem, params: &IpmParams) -> Result<IpmOutcome> {
    let dim = p.objective.dim();
    for c in &p.constraints {
        if c.mat.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "constraint dim {} vs problem dim {}",
                c.mat.dim(),
                dim
            )));
        }
    }
    let mut st = Workspace::init(p);
    let m = st.m;
    let b_scale = 1.0 + st.b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let a_scale = 1.0 + st.a0.max_abs();
    let x_init_scale = st.x.max_abs();

    let mut consecutive_tiny_steps = 0usize;

    for iter in 0..params.max_iter {
        // Residuals and objective values.
        let tr_ax: Vec<f64> = p
            .constraints
            .iter()
            .map(|c| c.mat.trace_with_mat(&st.x))
            .collect();
        let rp: Vec<f64> = (0..m)
            .map(|k| {
                let slack = if st.le_mask[k] { st.w[k] } else { 0.0 };
                st.b[k] - tr_ax[k] - slack
            })
            .collect();
        // Rd = A0 + Z - sum y_k A_k (want 0).
        let mut rd = Mat::zeros(dim, dim);
        {
            let mut base = st.z.clone();
            base.axpy_in_place(1.0, &st.a0);
            let neg_y: Vec<f64> = st.y.iter().map(|v| -v).collect();
            linear_combination(&base, &neg_y, &p.constraints, &mut rd);
        }

        let pobj = st.a0.dot(&st.x);
        let dobj = dense::dot(&st.b, &st.y);
        let mu = st.mu();

        let prim_inf = rp.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())) / b_scale;
        let dual_inf = rd.max_abs() / a_scale;
        let rel_gap = (dobj - pobj).abs() / (1.0 + pobj.abs().max(dobj.abs()));

        if prim_inf <= params.tol && dual_inf <= params.tol && rel_gap <= params.tol {
            return Ok(IpmOutcome {
                status: IpmStatus::Optimal,
                x: st.x,
                y: st.y,
                primal_objective: pobj,
                dual_objective: dobj,
                iterations: iter,
            });
        }

        // Divergence heuristics. An exploding, nearly feasible primal with a
        // growing objective signals an unbounded problem (dual infeasible); a
        // diverging dual with a collapsing objective signals primal
        // infeasibility.
        let x_norm = st.x.max_abs();
        let y_norm = st.y.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if x_norm > DIVERGENCE_SCALE * x_init_scale
            && prim_inf <= params.tol.sqrt()
            && pobj > DIVERGENCE_SCALE
        {
            return Ok(IpmOutcome {
                status: IpmStatus::Unbounded,
                x: st.x,
                y: st.y,
                primal_objective: pobj,
                dual_objective: dobj,
                iterations: iter,
            });
        }
        if y_norm > DIVERGENCE_SCALE && dual_inf <= params.tol.sqrt() && dobj < -DIVERGENCE_SCALE {
            return Ok(IpmOutcome {
                status: IpmStatus::Infeasible,
                x: st.x,
                y: st.y,
                primal_objective: pobj,
                dual_objective: dobj,
                iterations: iter,
            });
        }

        // Nesterov-Todd scaling point W with W Z W = X, computed from the
        // Cholesky factor of X and one eigendecomposition of L_x^T Z L_x.
        let l_x = dense::cholesky(&st.x, 0.0)
            .ok_or_else(|| Error::NumericalFailure("primal iterate lost definiteness".into()))?;
        let l_z = dense::cholesky(&st.z, 0.0)
            .ok_or_else(|| Error::NumericalFailure("dual iterate lost definiteness".into()))?;
        let k_mat = {
            let t = dense::mat_mul(&st.z, &l_x);
            let mut k = dense::mat_mul_tn(&l_x, &t);
            k.symmetrize_average();
            k
        };
        let (lam, v) = sym_eigen_full(&k_mat)?;
        if lam.last().copied().unwrap_or(0.0) <= 0.0 {
            return Err(Error::NumericalFailure(
                "NT scaling spectrum lost positivity".into(),
            ));
        }
        // G = L_x V diag(lam^{-1/4}); W = G G^T.
        let mut g = dense::mat_mul(&l_x, &v);
        for j in 0..dim {
            let s = lam[j].powf(-0.25);
            for i in 0..dim {
                g.set(i, j, g.get(i, j) * s);
            }
        }
        let mut w_scale = dense::mat_mul_nt(&g, &g);
        w_scale.symmetrize_average();

        // Z^{-1} via the triangular inverse.
        let l_z_inv = lower_triangular_inverse(&l_z);
        let mut z_inv = dense::mat_mul_tn(&l_z_inv, &l_z_inv);
        z_inv.symmetrize_average();

        // Schur complement M_kl = Tr(A_k W A_l W) + diag(w_k / y_k on Le).
        let mut u_mats: Vec<Mat> = Vec::with_capacity(m);
        for c in &p.constraints {
            let mut u = Mat::zeros(dim, dim);
            c.mat.mul_dense_into(&w_scale, &mut u);
            u_mats.push(u);
        }
        let ut_mats: Vec<Mat> = u_mats.iter().map(|u| u.transpose()).collect();
        let mut schur = Mat::zeros(m, m);
        for k in 0..m {
            for l in k..m {
                let val = u_mats[k].dot(&ut_mats[l]);
                schur.set(k, l, val);
                schur.set(l, k, val);
            }
        }
        for k in 0..m {
            if st.le_mask[k] {
                schur.add_to(k, k, st.w[k] / st.y[k]);
            }
        }
        let schur_chol = {
            let max_diag = (0..m).fold(0.0_f64, |acc, i| acc.max(schur.get(i, i)));
            let mut reg = 0.0;
            loop {
                let mut trial = schur.clone();
                if reg > 0.0 {
                    for i in 0..m {
                        trial.add_to(i, i, reg);
                    }
                }
                if let Some(chol) = dense::cholesky(&trial, 0.0) {
                    break Some(chol);
                }
                reg = if reg == 0.0 {
                    1e-14 * max_diag.max(1.0)
                } else {
                    reg * 100.0
                };
                if reg > 1e-6 * max_diag.max(1.0) {
                    break None;
                }
            }
        };
        let schur_chol = schur_chol.ok_or_else(|| {
            Error::NumericalFailure("Schur complement not positive definite".into())
        })?;
        let solve_schur = |rhs: &[f64]| -> Vec<f64> {
            let mut sol = rhs.to_vec();
            dense::solve_lower(&schur_chol, &mut sol);
            dense::solve_lower_transpose(&schur_chol, &mut sol);
            sol
        };

        // Shared per-constraint traces.
        let g_rd = {
            let t = dense::mat_mul(&w_scale, &rd);
            let mut g = dense::mat_mul(&t, &w_scale);
            g.symmetrize_average();
            g
        };
        let tr_a_grd: Vec<f64> = p
            .constraints
            .iter()
            .map(|c| c.mat.trace_with_mat(&g_rd))
            .collect();
        let tr_a_zinv: Vec<f64> = p
            .constraints
            .iter()
            .map(|c| c.mat.trace_with_mat(&z_inv))
            .collect();

        // Direction solve for a given centering target.
        let compute_direction =
            |sigma_mu: f64, rc_lp: &[f64]| -> Result<(Mat, Mat, Vec<f64>, Vec<f64>)> {
                let rhs: Vec<f64> = (0..m)
                    .map(|k| {
                        let tr_a_rc = sigma_mu * tr_a_zinv[k] - tr_ax[k];
                        let lp_term = if st.le_mask[k] {
                            rc_lp[k] / st.y[k]
                        } else {
                            0.0
                        };
                        tr_a_rc + tr_a_grd[k] + lp_term - rp[k]
                    })
                    .collect();
                let dy = solve_schur(&rhs);
                // dZ = sum dy_k A_k - Rd
                let mut dz = Mat::zeros(dim, dim);
                {
                    let mut neg_rd = rd.clone();
                    neg_rd.scale_in_place(-1.0);
                    linear_combination(&neg_rd, &dy, &p.constraints, &mut dz);
                }
                dz.symmetrize_average();
                // dX = sigma_mu Z^{-1} - X - W dZ W
                let mut dx = {
                    let t = dense::mat_mul(&w_scale, &dz);
                    dense::mat_mul(&t, &w_scale)
                };
                dx.scale_in_place(-1.0);
                dx.axpy_in_place(sigma_mu, &z_inv);
                dx.axpy_in_place(-1.0, &st.x);
                dx.symmetrize_average();
                let dw: Vec<f64> = (0..m)
                    .map(|k| {
                        if st.le_mask[k] {
                            (rc_lp[k] - st.w[k] * dy[k]) / st.y[k]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                Ok((dx, dz, dy, dw))
            };

        // Predictor: aim at zero complementarity.
        let rc_aff: Vec<f64> = (0..m)
            .map(|k| {
                if st.le_mask[k] {
                    -st.w[k] * st.y[k]
                } else {
                    0.0
                }
            })
            .collect();
        let (dx_a, dz_a, dy_a, dw_a) = compute_direction(0.0, &rc_aff)?;
        let ap_aff = psd_max_step(&l_x, &dx_a)?
            .min(vec_max_step(&st.w, &dw_a, &st.le_mask))
            .min(1.0);
        let ad_aff = psd_max_step(&l_z, &dz_a)?
            .min(vec_max_step(&st.y, &dy_a, &st.le_mask))
            .min(1.0);
        // mu after the affine step.
        let mu_aff = {
            let tr_xz = st.x.dot(&st.z)
                + ap_aff * dx_a.dot(&st.z)
                + ad_aff * st.x.dot(&dz_a)
                + ap_aff * ad_aff * dx_a.dot(&dz_a);
            let mut lp = 0.0;
            let mut n_le = 0usize;
            for k in 0..m {
                if st.le_mask[k] {
                    lp += (st.w[k] + ap_aff * dw_a[k]) * (st.y[k] + ad_aff * dy_a[k]);
                    n_le += 1;
                }
            }
            (tr_xz + lp).max(0.0) / (dim + n_le) as f64
        };
        let sigma = (mu_aff / mu).powi(3).clamp(1e-10, 1.0);

        // Corrector with LP second-order term.
        let rc_corr: Vec<f64> = (0..m)
            .map(|k| {
                if st.le_mask[k] {
                    sigma * mu - st.w[k] * st.y[k] - dw_a[k] * dy_a[k]
                } else {
                    0.0
                }
            })
            .collect();
        let (dx, dz, dy, dw) = compute_direction(sigma * mu, &rc_corr)?;

        let ap_max = psd_max_step(&l_x, &dx)?.min(vec_max_step(&st.w, &dw, &st.le_mask));
        let ad_max = psd_max_step(&l_z, &dz)?.min(vec_max_step(&st.y, &dy, &st.le_mask));
        let damp = 0.9 + 0.09 * ap_max.min(ad_max).min(1.0);
        let ap = (damp * ap_max).min(1.0);
        let ad = (damp * ad_max).min(1.0);

        if ap.max(ad) < MIN_STEP {
            consecutive_tiny_steps += 1;
            if consecutive_tiny_steps >= 2 {
                return Ok(IpmOutcome {
                    status: IpmStatus::NumericalFailure,
                    x: st.x,
                    y: st.y,
                    primal_objective: pobj,
                    dual_objective: dobj,
                    iterations: iter,
                });
            }
        } else {
            consecutive_tiny_steps = 0;
        }

        st.x.axpy_in_place(ap, &dx);
        st.x.symmetrize_average();
        st.z.axpy_in_place(ad, &dz);
        st.z.symmetrize_average();
        for k in 0..m {
            if st.le_mask[k] {
                st.w[k] += ap * dw[k];
                st.y[k] += ad * dy[k];
            } else {
                st.y[k] += ad * dy[k];
            }
        }
    }

    let pobj = st.a0.dot(&st.x);
    let dobj = dense::dot(&st.b, &st.y);
    Ok(IpmOutcome {
        status: IpmStatus::IterationLimit,
        x: st.x,
        y: st.y,
        primal_objective: pobj,
        dual_objective: dobj,
        iterations: params.max_iter,
    })
}

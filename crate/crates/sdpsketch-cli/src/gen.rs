//! Instance generators with planted structure: packing problems with
//! certified trace bounds and Slater points, LMIs with planted separators,
//! feasible control LMIs, and low-rank matrix families for distortion
//! experiments.
//!
//! Every generator is a pure function of its parameters and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use sdpsketch::linalg::{dense, Mat, SymMatrix};
use sdpsketch::model::{LmiProblem, SketchableSdp, SymConstraint};

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn gaussian_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    let mut g = Mat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            g.set(i, j, rng.sample(StandardNormal));
        }
    }
    g
}

/// Rank-`rank` PSD matrix `G G^T / Tr(G G^T)`; the trace norm is exactly 1
/// (PSD, so the Schatten-1 norm equals the trace).
fn unit_trace_psd(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> SymMatrix {
    let g = gaussian_mat(rng, dim, rank);
    let mut b = dense::mat_mul_nt(&g, &g);
    let tr = b.trace();
    b.scale_in_place(1.0 / tr);
    b.symmetrize_average();
    SymMatrix::from_symmetric_mat(b)
}

/// Symmetric matrix with entries of spectral scale O(1):
/// `(G + G^T) / (2 sqrt(D))`.
fn random_symmetric(rng: &mut ChaCha8Rng, dim: usize) -> SymMatrix {
    let g = gaussian_mat(rng, dim, dim);
    let mut b = Mat::zeros(dim, dim);
    let scale = 0.5 / (dim as f64).sqrt();
    for i in 0..dim {
        for j in 0..dim {
            b.set(i, j, (g.get(i, j) + g.get(j, i)) * scale);
        }
    }
    SymMatrix::from_symmetric_mat(b)
}

/// Certificates attached to a generated packing instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingCertificates {
    /// Trace bound: the instance carries an explicit constraint
    /// `Tr(X) <= eta`, so the bound is a property, not an assumption.
    pub eta: f64,
    /// Declared rank budget covering rank(A) + sum rank(B_i) plus a
    /// worst-case allowance (the ambient dimension) for the optimal point.
    pub k_budget: usize,
    /// Strictly feasible point `I / (2 D m)` with margins >= 1/2.
    pub slater_point: SymMatrix,
    /// `||A||_1`, exactly 1 by construction.
    pub objective_trace_norm: f64,
    /// `||B_i||_1` for every constraint in order; exact since all matrices
    /// are PSD (the trace norm is the trace).
    pub constraint_trace_norms: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingInstance {
    pub problem: SketchableSdp,
    pub certificates: PackingCertificates,
}

/// Packing instance: `m` constraints `B_i = G_i G_i^T / ||G_i G_i^T||_1`
/// with `gamma_i = 1`, a rank-`rank` PSD objective with unit trace norm, and
/// an appended trace constraint `Tr(X / eta) <= 1` enforcing `Tr(X) <= eta`.
pub fn generate_packing_instance(
    dim: usize,
    m: usize,
    rank: usize,
    eta: f64,
    seed: u64,
) -> PackingInstance {
    assert!(dim >= 1 && m >= 1 && rank >= 1 && rank <= dim);
    assert!(eta > 0.0, "trace bound must be positive");
    let mut constraints: Vec<SymConstraint> = (0..m)
        .map(|i| SymConstraint {
            matrix: unit_trace_psd(&mut stream_rng(seed, i as u64), dim, rank),
            rhs: 1.0,
        })
        .collect();
    constraints.push(SymConstraint {
        matrix: SymMatrix::identity(dim).scaled(1.0 / eta),
        rhs: 1.0,
    });
    let objective = unit_trace_psd(&mut stream_rng(seed, m as u64), dim, rank);
    let slater_point = SymMatrix::identity(dim).scaled(1.0 / (2.0 * dim as f64 * m as f64));
    // rank(A) + sum_i rank(B_i) + rank of the trace row + worst-case rank(X*).
    let k_budget = rank + m * rank + dim + dim;
    let problem = SketchableSdp::new(objective, constraints).expect("generated packing instance");
    let constraint_trace_norms = problem
        .constraints
        .iter()
        .map(|c| c.matrix.trace())
        .collect();
    PackingInstance {
        problem,
        certificates: PackingCertificates {
            eta,
            k_budget,
            slater_point,
            objective_trace_norm: 1.0,
            constraint_trace_norms,
        },
    }
}

/// A planted-infeasible LMI together with its separator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedLmi {
    pub problem: LmiProblem,
    /// PSD, unit trace; `Tr(rho B_i) = -tau` and `Tr(rho A) = tau` exactly.
    pub separator: SymMatrix,
    pub tau: f64,
    pub k_budget: usize,
}

/// Infeasible LMI with planted separation margin `tau`: sample a low-rank
/// state `rho`, then shift each generator by `-(Tr(rho B_i) + tau) I` and the
/// objective by `(tau - Tr(rho A)) I`. Any `c >= 0` gives
/// `Tr(rho (sum c_i B_i - A)) = -tau (sum c_i + 1) < 0`, so the system has
/// no PSD point.
pub fn generate_infeasible_lmi(dim: usize, m: usize, tau: f64, seed: u64) -> PlantedLmi {
    assert!(tau > 0.0, "planted margin must be positive");
    let rho_rank = 4.min(dim);
    let separator = unit_trace_psd(&mut stream_rng(seed, 0), dim, rho_rank);
    let rho_dense = separator.to_mat();

    let mut constraints = Vec::with_capacity(m);
    for i in 0..m {
        let raw = random_symmetric(&mut stream_rng(seed, 1 + i as u64), dim);
        let shift = raw.trace_with_mat(&rho_dense) + tau;
        let mut shifted = raw.to_mat();
        for d in 0..dim {
            shifted.add_to(d, d, -shift);
        }
        constraints.push(SymMatrix::from_symmetric_mat(shifted));
    }
    let raw_a = random_symmetric(&mut stream_rng(seed, 1 + m as u64), dim);
    let shift_a = tau - raw_a.trace_with_mat(&rho_dense);
    let mut objective = raw_a.to_mat();
    for d in 0..dim {
        objective.add_to(d, d, shift_a);
    }
    let problem = LmiProblem::new(SymMatrix::from_symmetric_mat(objective), constraints)
        .expect("generated LMI");
    PlantedLmi {
        problem,
        separator,
        tau,
        k_budget: (m + 1) * dim + rho_rank,
    }
}

/// Feasible LMI control instance: draw generators and a PSD slack `P`, then
/// set `A = sum cbar_i B_i - P` so `cbar` is a feasibility witness.
pub fn generate_feasible_lmi(dim: usize, m: usize, seed: u64) -> (LmiProblem, Vec<f64>) {
    let mut constraints = Vec::with_capacity(m);
    for i in 0..m {
        constraints.push(random_symmetric(&mut stream_rng(seed, i as u64), dim));
    }
    let mut coeff_rng = stream_rng(seed, m as u64);
    let witness: Vec<f64> = (0..m).map(|_| 0.5 + coeff_rng.random::<f64>()).collect();
    let slack = {
        let g = gaussian_mat(&mut stream_rng(seed, m as u64 + 1), dim, dim.max(1));
        let mut p = dense::mat_mul_nt(&g, &g);
        p.scale_in_place(1.0 / dim as f64);
        for d in 0..dim {
            p.add_to(d, d, 0.1);
        }
        p.symmetrize_average();
        p
    };
    let mut objective = Mat::zeros(dim, dim);
    for (c, b) in witness.iter().zip(constraints.iter()) {
        let bd = b.to_mat();
        objective.axpy_in_place(*c, &bd);
    }
    objective.axpy_in_place(-1.0, &slack);
    objective.symmetrize_average();
    let problem = LmiProblem::new(SymMatrix::from_symmetric_mat(objective), constraints)
        .expect("generated LMI");
    (problem, witness)
}

/// Rank-`rank` symmetric matrices with eigenvalues exactly +-1 on random
/// orthonormal directions: `B = sum_k s_k q_k q_k^T`. Both the rank and the
/// Schatten norms are known exactly (`||B||_1 = rank`, `||B||_2 = sqrt(rank)`).
pub fn generate_rank_matrices(dim: usize, count: usize, rank: usize, seed: u64) -> Vec<SymMatrix> {
    assert!(rank <= dim);
    (0..count)
        .map(|idx| {
            let mut rng = stream_rng(seed, idx as u64);
            let g = gaussian_mat(&mut rng, dim, rank);
            // Modified Gram-Schmidt, twice for orthogonality at working
            // precision.
            let mut q = g;
            for _pass in 0..2 {
                for j in 0..rank {
                    for prev in 0..j {
                        let mut dot = 0.0;
                        for i in 0..dim {
                            dot += q.get(i, j) * q.get(i, prev);
                        }
                        for i in 0..dim {
                            let v = q.get(i, j) - dot * q.get(i, prev);
                            q.set(i, j, v);
                        }
                    }
                    let norm: f64 = (0..dim)
                        .map(|i| q.get(i, j) * q.get(i, j))
                        .sum::<f64>()
                        .sqrt();
                    for i in 0..dim {
                        q.set(i, j, q.get(i, j) / norm);
                    }
                }
            }
            let mut b = Mat::zeros(dim, dim);
            for j in 0..rank {
                let sign: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
                for r in 0..dim {
                    let qr = q.get(r, j);
                    if qr == 0.0 {
                        continue;
                    }
                    for c in 0..dim {
                        b.add_to(r, c, sign * qr * q.get(c, j));
                    }
                }
            }
            b.symmetrize_average();
            SymMatrix::from_symmetric_mat(b)
        })
        .collect()
}

/// The coordinate-spike family `e_1 e_1^T, ..., e_count e_count^T`, whose
/// Schatten 1- and 2-norms are both exactly 1.
pub fn spike_matrices(dim: usize, count: usize) -> Vec<SymMatrix> {
    assert!(count <= dim);
    (0..count)
        .map(|i| SymMatrix::sparse_from_triplets(dim, &[(i, i, 1.0)]).expect("spike"))
        .collect()
}

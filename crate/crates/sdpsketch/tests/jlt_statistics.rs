//! Statistical acceptance of the transform ensembles: with the dimension
//! formula at c = 8, the pairwise distortion of k random unit vectors
//! exceeds epsilon in at most a delta-plus-margin fraction of seeded trials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sdpsketch::jlt::{
    jlt_distortion, sample_gaussian_jlt, sample_sparse_jlt, sketch_dimension, Ensemble,
    SketchConfig,
};

fn random_unit_vectors(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in &mut v {
                *x /= norm;
            }
            v
        })
        .collect()
}

fn exceedance_count(ensemble: Ensemble) -> (usize, usize) {
    let ambient = 512;
    let trials = 200;
    let epsilon = 0.5;
    let delta = 0.05;
    let k = 16;
    let mut config = SketchConfig::new(epsilon, delta, k, 1.0, 0);
    config.ensemble = ensemble;
    let d = sketch_dimension(&config, ambient).unwrap();
    let s_cols = config.derived_sparsity(d);

    let mut exceed = 0usize;
    for trial in 0..trials {
        let seed = 1_000 + trial as u64;
        let vectors = random_unit_vectors(k, ambient, seed ^ 0x5eed);
        let transform = match ensemble {
            Ensemble::Gaussian => sample_gaussian_jlt(d, ambient, seed).unwrap(),
            Ensemble::Sparse => sample_sparse_jlt(d, ambient, s_cols, seed).unwrap(),
        };
        let distortion = jlt_distortion(&transform, &vectors).unwrap();
        if distortion > epsilon {
            exceed += 1;
        }
    }
    // delta + 3 sqrt(delta / T)
    let margin = delta + 3.0 * (delta / trials as f64).sqrt();
    let allowed = (margin * trials as f64).floor() as usize;
    (exceed, allowed)
}

#[test]
fn gaussian_ensemble_meets_jlt_property() {
    let (exceed, allowed) = exceedance_count(Ensemble::Gaussian);
    assert!(
        exceed <= allowed,
        "gaussian: {exceed} exceedances, allowed {allowed}"
    );
}

#[test]
fn sparse_ensemble_meets_jlt_property() {
    let (exceed, allowed) = exceedance_count(Ensemble::Sparse);
    assert!(
        exceed <= allowed,
        "sparse: {exceed} exceedances, allowed {allowed}"
    );
}

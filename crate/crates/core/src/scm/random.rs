use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{ConfoundedAnm, NoiseSpec, StructuralFunction};
use crate::error::Result;
use crate::graph::Dag;
use crate::seeds;

/// Parameters of the synthetic ANM generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomAnmConfig {
    /// Magnitudes are uniform on `[coef_min, coef_max]` with a random sign.
    pub coef_min: f64,
    pub coef_max: f64,
    /// Probability that each parent pair gets a product term.
    pub pairwise_prob: f64,
    /// Noise means are uniform on `[-mean_range, mean_range]`.
    pub mean_range: f64,
    pub var_min: f64,
    pub var_max: f64,
    /// Weight of the random dense correlation against the identity.
    pub confounding: f64,
}

impl Default for RandomAnmConfig {
    fn default() -> Self {
        RandomAnmConfig {
            coef_min: 0.25,
            coef_max: 1.0,
            pairwise_prob: 0.0,
            mean_range: 1.0,
            var_min: 0.5,
            var_max: 1.0,
            confounding: 0.6,
        }
    }
}

impl RandomAnmConfig {
    fn coef<R: Rng>(&self, rng: &mut R) -> f64 {
        let mag = rng.random_range(self.coef_min..=self.coef_max);
        if rng.random_bool(0.5) {
            mag
        } else {
            -mag
        }
    }

    fn function<R: Rng>(&self, parents: &[usize], rng: &mut R) -> StructuralFunction {
        let mut f = StructuralFunction::constant(0.0);
        for &p in parents {
            f = f.with_linear(p, self.coef(rng));
        }
        for (k, &p) in parents.iter().enumerate() {
            for &q in &parents[k + 1..] {
                if rng.random_bool(self.pairwise_prob) {
                    f = f.with_pairwise(p, q, self.coef(rng));
                }
            }
        }
        f
    }
}

/// Draws structural functions and a dense confounding covariance for `graph`.
pub fn random_anm(graph: &Dag, cfg: &RandomAnmConfig, seed: u64) -> Result<ConfoundedAnm> {
    let n = graph.n();
    let d = n + 1;
    let mut rng = seeds::rng(seed);
    let treatments: Vec<StructuralFunction> = (0..n).map(|i| cfg.function(graph.parents(i), &mut rng)).collect();
    let all: Vec<usize> = (0..n).collect();
    let outcome = cfg.function(&all, &mut rng);

    let mean = DVector::from_fn(d, |_, _| rng.random_range(-cfg.mean_range..=cfg.mean_range));
    let sd = DVector::from_fn(d, |_, _| rng.random_range(cfg.var_min..=cfg.var_max).sqrt());
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let gram = &a * a.transpose();
    let corr = DMatrix::from_fn(d, d, |i, j| {
        let c = gram[(i, j)] / (gram[(i, i)] * gram[(j, j)]).sqrt();
        if i == j {
            1.0
        } else {
            cfg.confounding * c
        }
    });
    let cov = DMatrix::from_fn(d, d, |i, j| sd[i] * sd[j] * corr[(i, j)]);
    let cov = (&cov + cov.transpose()) * 0.5;
    let noise = NoiseSpec::new(mean, cov)?;
    ConfoundedAnm::unflagged(graph.clone(), treatments, outcome, noise)
}

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Ten Gaussian blobs with a small labelled split.
///
/// Class means are drawn from `N(0, separation^2 I)`; each point adds unit
/// Gaussian noise to its class mean. Labels cycle through the classes, so
/// both splits are balanced.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTask {
    pub classes: usize,
    pub train_x: Array2<f64>,
    pub train_y: Vec<usize>,
    /// Indices into the training set whose labels the learner may use.
    pub labeled: Vec<usize>,
    /// The remaining training indices.
    pub unlabeled: Vec<usize>,
    pub test_x: Array2<f64>,
    pub test_y: Vec<usize>,
}

pub(crate) const CLASSES: usize = 10;

impl SyntheticTask {
    pub fn generate(
        dim: usize,
        train_size: usize,
        test_size: usize,
        labeled_fraction: f64,
        separation: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let means: Vec<Array1<f64>> = (0..CLASSES)
            .map(|_| Array1::from_shape_fn(dim, |_| normal() * separation))
            .collect();
        let mut points = |m: usize| {
            let y: Vec<usize> = (0..m).map(|i| i % CLASSES).collect();
            let x = Array2::from_shape_fn((m, dim), |(i, j)| means[y[i]][j] + normal());
            (x, y)
        };
        let (train_x, train_y) = points(train_size);
        let (test_x, test_y) = points(test_size);
        let mut perm: Vec<usize> = (0..train_size).collect();
        perm.shuffle(&mut rng);
        let nl = ((labeled_fraction * train_size as f64).round() as usize).min(train_size);
        let unlabeled = perm.split_off(nl);
        SyntheticTask {
            classes: CLASSES,
            train_x,
            train_y,
            labeled: perm,
            unlabeled,
            test_x,
            test_y,
        }
    }

    pub fn dim(&self) -> usize {
        self.train_x.ncols()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_are_disjoint_and_sized() {
        let t = SyntheticTask::generate(16, 5000, 1000, 0.01, 1.0, 3);
        assert_eq!(t.labeled.len(), 50);
        assert_eq!(t.labeled.len() + t.unlabeled.len(), 5000);
        let mut all: Vec<usize> = t.labeled.iter().chain(&t.unlabeled).copied().collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 5000);
        assert_eq!(t.test_x.dim(), (1000, 16));
        assert_eq!(t, SyntheticTask::generate(16, 5000, 1000, 0.01, 1.0, 3));
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, Dataset};

/// Seeded partition of `0..n` into sorted train and test index lists.
///
/// The train side receives `round(fraction * n)` indices; both sides must
/// be nonempty.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DataError::InvalidFraction(fraction));
    }
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(DataError::EmptySplit { n, fraction });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn train_test_split(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    let (train, test) = split_indices(ds.n_samples(), fraction, seed)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

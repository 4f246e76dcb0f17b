use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Sentence};

/// Deterministic sentence-level train/dev/test split. Ratios must be
/// positive and sum to 1 (within 1e-9).
pub fn split_corpus(
    sentences: &[Sentence],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(Vec<Sentence>, Vec<Sentence>, Vec<Sentence>), CorpusError> {
    let (r1, r2, r3) = ratios;
    if r1 <= 0.0 || r2 <= 0.0 || r3 <= 0.0 || (r1 + r2 + r3 - 1.0).abs() > 1e-9 {
        return Err(CorpusError::BadRatios([r1, r2, r3]));
    }
    let mut order: Vec<usize> = (0..sentences.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let n = sentences.len();
    let n_train = (n as f64 * r1).floor() as usize;
    let n_dev = (n as f64 * r2).floor() as usize;
    let take = |idx: &[usize]| idx.iter().map(|&i| sentences[i].clone()).collect::<Vec<_>>();
    Ok((
        take(&order[..n_train]),
        take(&order[n_train..n_train + n_dev]),
        take(&order[n_train + n_dev..]),
    ))
}

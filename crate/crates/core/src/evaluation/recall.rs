use crate::error::{Error, Result};
use crate::numerics::{Matrix, Scalar};

/// Zero-based rank of the best-ranked correct candidate for one query.
/// Candidates are ordered by descending score, ties by ascending index.
fn best_rank<T: Scalar>(scores: &[T], truth: &[usize]) -> usize {
    truth
        .iter()
        .map(|&t| {
            let st = scores[t];
            scores
                .iter()
                .enumerate()
                .filter(|&(c, &sc)| sc > st || (sc == st && c < t))
                .count()
        })
        .min()
        .expect("truth checked non-empty")
}

fn check_inputs<T: Scalar>(s: &Matrix<T>, truth: &[Vec<usize>]) -> Result<()> {
    if truth.len() != s.rows() {
        return Err(Error::Protocol(format!(
            "{} truth sets for {} queries",
            truth.len(),
            s.rows()
        )));
    }
    for (q, t) in truth.iter().enumerate() {
        if t.is_empty() {
            return Err(Error::Protocol(format!(
                "query {q} has no correct candidate"
            )));
        }
        if let Some(&bad) = t.iter().find(|&&c| c >= s.cols()) {
            return Err(Error::Protocol(format!(
                "query {q}: candidate {bad} out of range ({} candidates)",
                s.cols()
            )));
        }
    }
    Ok(())
}

/// Rank of the first correct candidate for every query (row of `s`).
pub fn ranks<T: Scalar>(s: &Matrix<T>, truth: &[Vec<usize>]) -> Result<Vec<usize>> {
    check_inputs(s, truth)?;
    Ok((0..s.rows())
        .map(|q| best_rank(s.row(q), &truth[q]))
        .collect())
}

/// Percentage of queries with a correct candidate among their top `k`.
pub fn recall_at_k<T: Scalar>(s: &Matrix<T>, truth: &[Vec<usize>], k: usize) -> Result<f64> {
    Ok(recall_at_ks(s, truth, &[k])?[0])
}

/// [`recall_at_k`] for several `k` with one ranking pass.
pub fn recall_at_ks<T: Scalar>(
    s: &Matrix<T>,
    truth: &[Vec<usize>],
    ks: &[usize],
) -> Result<Vec<f64>> {
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > s.cols()) {
        return Err(Error::Protocol(format!(
            "k = {k} outside 1..={} candidates",
            s.cols()
        )));
    }
    let r = ranks(s, truth)?;
    if r.is_empty() {
        return Err(Error::Protocol("no queries".into()));
    }
    Ok(ks
        .iter()
        .map(|&k| 100.0 * r.iter().filter(|&&x| x < k).count() as f64 / r.len() as f64)
        .collect())
}

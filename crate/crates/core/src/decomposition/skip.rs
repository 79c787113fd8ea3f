use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Indices `(j₁, …, j_J)` with `2 ≤ j₁`, `j_{i+1} ≥ j_i + 2`, `j_J ≤ k + 1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SkipSequence(pub Vec<usize>);

impl SkipSequence {
    pub fn entries(&self) -> &[usize] {
        &self.0
    }

    pub fn is_admissible(&self, k: usize) -> bool {
        let e = &self.0;
        !e.is_empty() && e[0] >= 2 && e.windows(2).all(|w| w[1] >= w[0] + 2) && *e.last().unwrap() <= k + 1
    }
}

/// All skip sequences with bound `k + 1`, built by
/// `M_{k+1} = M_k ∪ {(k+2)} ∪ {s ⊕ (k+2) : s ∈ M_{k−1}}`, sorted lexicographically.
pub fn enumerate_skip_sequences(k: usize) -> Result<Vec<SkipSequence>> {
    if k > 20 {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds 20")));
    }
    // levels[m] = M_m (bound m + 1)
    let mut levels: Vec<Vec<Vec<usize>>> = vec![vec![], vec![vec![2]]];
    for m in 1..k {
        let new_last = m + 2;
        let mut next = levels[m].clone();
        next.push(vec![new_last]);
        for s in &levels[m - 1] {
            let mut t = s.clone();
            t.push(new_last);
            next.push(t);
        }
        levels.push(next);
    }
    let mut out: Vec<SkipSequence> = levels[k].iter().cloned().map(SkipSequence).collect();
    out.sort();
    Ok(out)
}

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One leave-one-subject-out split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub held_out: String,
    pub train_subjects: Vec<String>,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// One fold per distinct subject, in sorted subject order. `subjects[i]`
/// is the subject of sample `i`.
pub fn loso_folds<S: AsRef<str>>(subjects: &[S]) -> Result<Vec<FoldPlan>> {
    let distinct: BTreeSet<&str> = subjects.iter().map(|s| s.as_ref()).collect();
    if distinct.len() < 2 {
        return Err(Error::contract(format!(
            "leave-one-subject-out needs at least 2 subjects, found {}",
            distinct.len()
        )));
    }
    Ok(distinct
        .iter()
        .map(|&held| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..subjects.len()).partition(|&i| subjects[i].as_ref() == held);
            FoldPlan {
                held_out: held.to_string(),
                train_subjects: distinct.iter().filter(|&&s| s != held).map(|s| s.to_string()).collect(),
                train_indices: train,
                test_indices: test,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_cover_every_sample_once() {
        let subjects = ["b", "a", "b", "c", "a"];
        let folds = loso_folds(&subjects).unwrap();
        assert_eq!(folds.len(), 3);
        assert_eq!(folds[0].held_out, "a");
        assert_eq!(folds[0].test_indices, vec![1, 4]);
        let mut seen: Vec<usize> = folds.iter().flat_map(|f| f.test_indices.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1, 2, 3, 4]);
        assert!(loso_folds(&["x", "x"]).is_err());
    }
}

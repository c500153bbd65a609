use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;

/// Which label set a dataset draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelKind {
    /// Spatial classes `1..=n`.
    ImageClass(usize),
    /// Spatio-temporal classes `1..=n`.
    TrajectoryClass(usize),
    /// `+1` / `-1`. Either label may be absent (degenerate one-vs-rest split).
    Binary,
}

impl LabelKind {
    pub fn contains(&self, label: i32) -> bool {
        match *self {
            LabelKind::ImageClass(n) | LabelKind::TrajectoryClass(n) => {
                label >= 1 && label as usize <= n
            }
            LabelKind::Binary => label == 1 || label == -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset<T> {
    items: Vec<(T, i32)>,
    kind: LabelKind,
}

impl<T> LabeledDataset<T> {
    pub fn new(items: Vec<(T, i32)>, kind: LabelKind) -> Result<Self, DataError> {
        if items.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        if let Some(&(_, label)) = items.iter().find(|(_, l)| !kind.contains(*l)) {
            return Err(DataError::LabelOutOfSet { label, kind });
        }
        Ok(Self { items, kind })
    }

    pub fn items(&self) -> &[(T, i32)] {
        &self.items
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn labels(&self) -> Vec<i32> {
        self.items.iter().map(|(_, l)| *l).collect()
    }

    /// A binary dataset missing one of the two labels.
    pub fn is_degenerate(&self) -> bool {
        self.kind == LabelKind::Binary
            && !(self.items.iter().any(|(_, l)| *l == 1) && self.items.iter().any(|(_, l)| *l == -1))
    }

    pub fn into_items(self) -> Vec<(T, i32)> {
        self.items
    }

    pub fn kfold(&self, k: usize, seed: u64) -> Result<Vec<Fold>, DataError> {
        stratified_kfold(&self.labels(), k, seed)
    }
}

impl<T: Clone> LabeledDataset<T> {
    /// Items at the given indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, DataError> {
        Self::new(
            indices.iter().map(|&i| self.items[i].clone()).collect(),
            self.kind,
        )
    }
}

/// Index sets of one train/test split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified K-fold split over item labels.
///
/// Members of each class are shuffled with a seeded generator and dealt
/// round-robin over the folds, continuing the deal across classes, so each
/// fold holds `floor` or `ceil` of `count / k` members of every class.
pub fn stratified_kfold(labels: &[i32], k: usize, seed: u64) -> Result<Vec<Fold>, DataError> {
    if k < 2 {
        return Err(DataError::InvalidFoldCount(k));
    }
    if labels.is_empty() {
        return Err(DataError::EmptyDataset);
    }
    let mut by_class: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((&label, members)) = by_class.iter().find(|(_, m)| m.len() < k) {
        return Err(DataError::ClassTooSmall {
            label,
            count: members.len(),
            k,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; labels.len()];
    let mut next = 0usize;
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..labels.len()).partition(|&i| assignment[i] == f);
            Fold { train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_items_two_folds() {
        let labels = [1, 1, 1, 1, 1, 2, 2, 2, 2, 2];
        let folds = stratified_kfold(&labels, 2, 7).unwrap();
        assert_eq!(folds.len(), 2);
        for f in &folds {
            assert_eq!(f.test.len(), 5);
            assert_eq!(f.train.len(), 5);
            let ones = f.test.iter().filter(|&&i| labels[i] == 1).count();
            assert!((2..=3).contains(&ones));
        }
    }

    #[test]
    fn singleton_class_is_rejected() {
        match stratified_kfold(&[1, 1, 2], 2, 0) {
            Err(DataError::ClassTooSmall { label, count, k }) => {
                assert_eq!((label, count, k), (2, 1, 2))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn labels_outside_kind_are_rejected() {
        assert!(LabeledDataset::new(vec![((), 0)], LabelKind::ImageClass(3)).is_err());
        assert!(LabeledDataset::new(vec![((), 2)], LabelKind::Binary).is_err());
        let d = LabeledDataset::new(vec![((), -1), ((), -1)], LabelKind::Binary).unwrap();
        assert!(d.is_degenerate());
    }

    proptest::proptest! {
        #[test]
        fn folds_partition_items(labels in proptest::collection::vec(1i32..4, 12..60), k in 2usize..4, seed: u64) {
            let mut counts = BTreeMap::new();
            for &l in &labels { *counts.entry(l).or_insert(0usize) += 1; }
            proptest::prop_assume!(counts.values().all(|&c| c >= k));
            let folds = stratified_kfold(&labels, k, seed).unwrap();
            let mut seen = vec![0usize; labels.len()];
            for f in &folds {
                for &i in &f.test { seen[i] += 1; }
                proptest::prop_assert_eq!(f.test.len() + f.train.len(), labels.len());
                for (&l, &c) in &counts {
                    let in_fold = f.test.iter().filter(|&&i| labels[i] == l).count();
                    let expected = c as f64 / k as f64;
                    proptest::prop_assert!((in_fold as f64 - expected).abs() <= 1.0);
                }
            }
            proptest::prop_assert!(seen.iter().all(|&s| s == 1));
            proptest::prop_assert_eq!(folds, stratified_kfold(&labels, k, seed).unwrap());
        }
    }
}

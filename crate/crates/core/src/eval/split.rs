//! Patient-level fold plans.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
}

impl Fold {
    pub fn role(&self, patient: &str) -> Option<Role> {
        let has = |set: &[String]| set.iter().any(|p| p == patient);
        if has(&self.test) {
            Some(Role::Test)
        } else if has(&self.train) {
            Some(Role::Train)
        } else if has(&self.validation) {
            Some(Role::Validation)
        } else {
            None
        }
    }

    pub fn is_disjoint(&self) -> bool {
        let train: BTreeSet<_> = self.train.iter().collect();
        let val: BTreeSet<_> = self.validation.iter().collect();
        let test: BTreeSet<_> = self.test.iter().collect();
        train.len() == self.train.len()
            && val.len() == self.validation.len()
            && test.len() == self.test.len()
            && train.is_disjoint(&val)
            && train.is_disjoint(&test)
            && val.is_disjoint(&test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub folds: Vec<Fold>,
    pub test_size: usize,
    pub train_ratio: f64,
    pub seed: u64,
}

impl SplitPlan {
    /// True when no patient appears in two folds' test sets.
    pub fn test_sets_disjoint(&self) -> bool {
        let mut seen = BTreeSet::new();
        self.folds
            .iter()
            .flat_map(|f| &f.test)
            .all(|p| seen.insert(p.as_str()))
    }
}

/// Shuffles the distinct patients with `seed`, cuts consecutive test blocks
/// of `test_size`, and splits each fold's remaining patients
/// `train_ratio : 1 - train_ratio` into train and validation.
pub fn make_splits(
    patients: &[String],
    test_size: usize,
    train_ratio: f64,
    seed: u64,
) -> Result<SplitPlan> {
    let mut ids: Vec<String> = patients.to_vec();
    ids.sort();
    ids.dedup();
    if test_size == 0 {
        return Err(Error::invalid("test_size must be at least 1"));
    }
    if test_size >= ids.len() {
        return Err(Error::invalid(format!(
            "test_size {test_size} leaves no training patients out of {}",
            ids.len()
        )));
    }
    if !(0.0..=1.0).contains(&train_ratio) {
        return Err(Error::invalid(format!(
            "train ratio {train_ratio} is outside [0, 1]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let folds = (0..ids.len() / test_size)
        .map(|f| {
            let block = f * test_size..(f + 1) * test_size;
            let test = ids[block.clone()].to_vec();
            let mut rest: Vec<String> = ids[..block.start]
                .iter()
                .chain(&ids[block.end..])
                .cloned()
                .collect();
            let mut fold_rng = ChaCha8Rng::seed_from_u64(seed);
            fold_rng.set_stream(f as u64 + 1);
            rest.shuffle(&mut fold_rng);
            let n_train = (rest.len() as f64 * train_ratio).round() as usize;
            let validation = rest.split_off(n_train);
            Fold {
                index: f,
                train: rest,
                validation,
                test,
            }
        })
        .collect();
    Ok(SplitPlan {
        folds,
        test_size,
        train_ratio,
        seed,
    })
}

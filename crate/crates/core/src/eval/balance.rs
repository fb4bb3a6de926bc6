use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Undersamples every class to the size of the smallest one, without
/// replacement, then shuffles. Classes are visited in label order so the
/// result depends only on the input order and `seed`.
pub fn balance_undersample<T: Clone, L: Ord>(
    items: &[T],
    label: impl Fn(&T) -> L,
    seed: u64,
) -> Result<Vec<T>> {
    let mut by_class: BTreeMap<L, Vec<usize>> = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        by_class.entry(label(item)).or_default().push(i);
    }
    if by_class.len() < 2 {
        return Err(Error::invalid(format!(
            "undersampling needs at least two classes, found {}",
            by_class.len()
        )));
    }
    let minority = by_class.values().map(Vec::len).min().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = Vec::with_capacity(minority * by_class.len());
    for members in by_class.values() {
        let mut chosen: Vec<usize> = index::sample(&mut rng, members.len(), minority)
            .into_iter()
            .map(|k| members[k])
            .collect();
        chosen.sort_unstable();
        picked.extend(chosen);
    }
    picked.shuffle(&mut rng);
    Ok(picked.into_iter().map(|i| items[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(v: &[(char, usize)]) -> BTreeMap<char, usize> {
        let mut m = BTreeMap::new();
        for (c, _) in v {
            *m.entry(*c).or_default() += 1;
        }
        m
    }

    #[test]
    fn minority_size() {
        let items: Vec<(char, usize)> = (0..100)
            .map(|i| ('A', i))
            .chain((0..10).map(|i| ('B', i)))
            .collect();
        let out = balance_undersample(&items, |x| x.0, 3).unwrap();
        assert_eq!(counts(&out), BTreeMap::from([('A', 10), ('B', 10)]));
        let mut ids: Vec<_> = out.iter().filter(|x| x.0 == 'A').map(|x| x.1).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 10);
        assert_eq!(out, balance_undersample(&items, |x| x.0, 3).unwrap());
    }

    #[test]
    fn balanced_input_keeps_multiset() {
        let items: Vec<(char, usize)> = (0..6)
            .map(|i| (if i % 2 == 0 { 'A' } else { 'B' }, i))
            .collect();
        let mut out = balance_undersample(&items, |x| x.0, 1).unwrap();
        out.sort();
        let mut want = items.clone();
        want.sort();
        assert_eq!(out, want);
    }

    #[test]
    fn single_class_is_rejected() {
        assert!(balance_undersample(&[1, 1, 1], |&x| x, 0).is_err());
    }
}

//! Zero-dimensional persistent homology of 1D signals.
//!
//! The signal is read as the piecewise-linear function through its samples.
//! For a threshold `alpha`, the sublevel set `{t : f(t) <= alpha}` has one
//! connected component per maximal run of consecutive samples that are all
//! `<= alpha`, so the filtration can be swept over vertices alone: visit the
//! samples in increasing order, start a component at every vertex with no
//! active neighbour, and merge components when a vertex bridges two of them.
//! At a merge the component with the higher birth value dies (elder rule).
//!
//! Conventions:
//! - the surviving component yields one *essential* interval
//!   `[global min, global max]`, closed at both ends;
//! - every other interval is half-open `[birth, death)`;
//! - equal values are ordered by sample index, so on a tie in birth value the
//!   component born at the smaller index survives;
//! - zero-length non-essential pairs (a plateau vertex that is born and
//!   absorbed at the same level) are not reported, so the number of
//!   intervals equals the number of local minima with plateaus counted once.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Default number of grid points per Betti curve.
pub const DEFAULT_BINS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiltrationKind {
    Sublevel,
    Superlevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistenceInterval {
    pub birth: f64,
    pub death: f64,
    pub essential: bool,
}

impl PersistenceInterval {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    /// Membership under the half-open / closed-essential convention.
    pub fn contains(&self, alpha: f64) -> bool {
        if self.essential {
            self.birth <= alpha && alpha <= self.death
        } else {
            self.birth <= alpha && alpha < self.death
        }
    }
}

/// One merge observed during the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    /// Threshold at which the two components meet.
    pub level: f64,
    pub survivor_birth: f64,
    pub dying_birth: f64,
}

/// Intervals of a sublevel or superlevel filtration.
///
/// Superlevel barcodes are stored in negated coordinates: they are the
/// sublevel barcode of `-f`, so `birth <= death` holds for both kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceBarcode {
    intervals: Vec<PersistenceInterval>,
    filtration_kind: FiltrationKind,
}

impl PersistenceBarcode {
    pub fn new(intervals: Vec<PersistenceInterval>, filtration_kind: FiltrationKind) -> Self {
        Self {
            intervals,
            filtration_kind,
        }
    }

    pub fn intervals(&self) -> &[PersistenceInterval] {
        &self.intervals
    }

    pub fn filtration_kind(&self) -> FiltrationKind {
        self.filtration_kind
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn essential(&self) -> Option<&PersistenceInterval> {
        self.intervals.iter().find(|i| i.essential)
    }

    /// Number of intervals containing `alpha`.
    pub fn count_at(&self, alpha: f64) -> usize {
        self.intervals.iter().filter(|i| i.contains(alpha)).count()
    }

    /// Intervals sorted by (birth, death, essential), handy for multiset
    /// comparisons.
    pub fn sorted_intervals(&self) -> Vec<PersistenceInterval> {
        let mut v = self.intervals.clone();
        v.sort_by(|a, b| {
            a.birth
                .total_cmp(&b.birth)
                .then(a.death.total_cmp(&b.death))
                .then(a.essential.cmp(&b.essential))
        });
        v
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "birth,death,essential")?;
        for i in &self.intervals {
            writeln!(out, "{},{},{}", i.birth, i.death, i.essential)?;
        }
        Ok(())
    }
}

/// Integer-valued curve `alpha -> #intervals containing alpha` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BettiCurve {
    grid: Vec<f64>,
    counts: Vec<u32>,
}

impl BettiCurve {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn counts_f64(&self) -> impl Iterator<Item = f64> + '_ {
        self.counts.iter().map(|&c| f64::from(c))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "alpha,count")?;
        for (a, c) in self.grid.iter().zip(&self.counts) {
            writeln!(out, "{a},{c}")?;
        }
        Ok(())
    }
}

const INACTIVE: u32 = u32::MAX;

/// Disjoint sets over sample indices. Every root is the elder vertex of its
/// component (lowest value, ties broken by lower index), so the root doubles
/// as the component's birth vertex.
struct ElderForest<'a> {
    parent: Vec<u32>,
    samples: &'a [f64],
}

impl ElderForest<'_> {
    fn is_active(&self, v: u32) -> bool {
        self.parent[v as usize] != INACTIVE
    }

    fn find(&mut self, mut v: u32) -> u32 {
        // Path halving.
        while self.parent[v as usize] != v {
            let grand = self.parent[self.parent[v as usize] as usize];
            self.parent[v as usize] = grand;
            v = grand;
        }
        v
    }

    fn is_elder(&self, a: u32, b: u32) -> bool {
        match self.samples[a as usize].total_cmp(&self.samples[b as usize]) {
            std::cmp::Ordering::Less => true,
            std::cmp::Ordering::Greater => false,
            std::cmp::Ordering::Equal => a < b,
        }
    }

    /// Links two roots; returns (survivor, dying).
    fn link(&mut self, a: u32, b: u32) -> (u32, u32) {
        let (old, young) = if self.is_elder(a, b) { (a, b) } else { (b, a) };
        self.parent[young as usize] = old;
        (old, young)
    }
}

fn check_samples(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::invalid(
            "cannot compute persistence of an empty signal",
        ));
    }
    if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite sample at index {i}")));
    }
    Ok(())
}

/// Runs the sublevel sweep, handing every non-trivial merge to `on_merge`
/// in sweep order.
fn sweep(samples: &[f64], mut on_merge: impl FnMut(MergeEvent)) {
    let n = samples.len();
    assert!(n < u32::MAX as usize, "signal too long");
    // Sorting (key, index) pairs keeps the comparisons in cache; the key
    // orders like `f64::total_cmp`, the index breaks ties.
    let mut keyed: Vec<(u64, u32)> = samples
        .iter()
        .zip(0..)
        .map(|(v, i)| {
            let bits = v.to_bits();
            let key = if bits >> 63 == 1 {
                !bits
            } else {
                bits | 1 << 63
            };
            (key, i)
        })
        .collect();
    keyed.sort_unstable();

    let mut forest = ElderForest {
        parent: vec![INACTIVE; n],
        samples,
    };
    for &(_, v) in &keyed {
        forest.parent[v as usize] = v;
        let level = samples[v as usize];
        let mut root = v;
        for nb in [v.wrapping_sub(1), v + 1] {
            if nb as usize >= n || !forest.is_active(nb) {
                continue;
            }
            let other = forest.find(nb);
            if other == root {
                continue;
            }
            let (survivor, dying) = forest.link(root, other);
            root = survivor;
            let dying_birth = samples[dying as usize];
            if dying_birth < level {
                on_merge(MergeEvent {
                    level,
                    survivor_birth: samples[survivor as usize],
                    dying_birth,
                });
            }
        }
    }
}

/// For each sample `v`, the highest value on the open path to its nearest
/// elder on the side scanned first; `INFINITY` when there is none. `elder`
/// says whether a stacked value is elder to the current one.
fn barriers(
    samples: impl Iterator<Item = f64>,
    len: usize,
    elder: impl Fn(f64, f64) -> bool,
) -> Vec<f64> {
    // Entries are (value, highest value between it and the entry below).
    let mut stack: Vec<(f64, f64)> = Vec::new();
    let mut out = Vec::with_capacity(len);
    for v in samples {
        let mut gap = f64::NEG_INFINITY;
        while let Some(&(top, top_gap)) = stack.last() {
            if elder(top, v) {
                break;
            }
            gap = gap.max(top).max(top_gap);
            stack.pop();
        }
        out.push(if stack.is_empty() { f64::INFINITY } else { gap });
        stack.push((v, gap));
    }
    out
}

/// Barcode by the elder rule without a sort. A component is born at every
/// sample whose neighbours both come later in the (value, index) order. It
/// dies when the sublevel set first joins it to an elder sample, which
/// happens at the lower of the two path maxima to the nearest elder on
/// either side. Two stack passes find those maxima in `O(n)`.
fn barcode_by_stacks(samples: &[f64], kind: FiltrationKind) -> PersistenceBarcode {
    let n = samples.len();
    // Earlier samples win ties, so a left elder may be equal, a right one
    // must be strictly lower.
    let left = barriers(samples.iter().copied(), n, |top, v| top <= v);
    let right = barriers(samples.iter().rev().copied(), n, |top, v| top < v);
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut intervals = vec![PersistenceInterval {
        birth: 0.0,
        death: 0.0,
        essential: true,
    }];
    for (i, &v) in samples.iter().enumerate() {
        min = min.min(v);
        max = max.max(v);
        let born = (i == 0 || samples[i - 1] > v) && (i + 1 == n || samples[i + 1] >= v);
        let death = left[i].min(right[n - 1 - i]);
        if born && death.is_finite() && death > v {
            intervals.push(PersistenceInterval {
                birth: v,
                death,
                essential: false,
            });
        }
    }
    intervals[0].birth = min;
    intervals[0].death = max;
    PersistenceBarcode::new(intervals, kind)
}

/// Barcode of the sublevel filtration of the raw samples.
pub fn sublevel_barcode_of(samples: &[f64]) -> Result<PersistenceBarcode> {
    check_samples(samples)?;
    Ok(barcode_by_stacks(samples, FiltrationKind::Sublevel))
}

/// Barcode of the sublevel filtration `{t : f(t) <= alpha}`.
///
/// Runs in `O(n)` time and memory; [`merge_events`] gives the same
/// intervals from an explicit union-find sweep.
pub fn sublevel_barcode(signal: &Signal) -> Result<PersistenceBarcode> {
    sublevel_barcode_of(signal.samples())
}

pub fn superlevel_barcode_of(samples: &[f64]) -> Result<PersistenceBarcode> {
    check_samples(samples)?;
    let negated: Vec<f64> = samples.iter().map(|v| -v).collect();
    Ok(barcode_by_stacks(&negated, FiltrationKind::Superlevel))
}

/// Barcode of the superlevel filtration `{t : f(t) >= alpha}`, expressed in
/// negated coordinates (see [`PersistenceBarcode`]).
pub fn superlevel_barcode(signal: &Signal) -> Result<PersistenceBarcode> {
    superlevel_barcode_of(signal.samples())
}

/// Every component merge of the sublevel sweep, in sweep order.
pub fn merge_events(samples: &[f64]) -> Result<Vec<MergeEvent>> {
    check_samples(samples)?;
    let mut merges = Vec::new();
    sweep(samples, |m| merges.push(m));
    Ok(merges)
}

fn upper_bound(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v <= x)
}

/// Discretizes a barcode on `bins` evenly spaced thresholds spanning
/// `[min birth, max death]`.
pub fn betti_curve(barcode: &PersistenceBarcode, bins: usize) -> Result<BettiCurve> {
    if barcode.is_empty() {
        return Err(Error::invalid(
            "cannot build a Betti curve from an empty barcode",
        ));
    }
    if bins < 2 {
        return Err(Error::invalid(format!(
            "bins must be at least 2, got {bins}"
        )));
    }
    let ivs = barcode.intervals();
    let lo = ivs.iter().map(|i| i.birth).fold(f64::INFINITY, f64::min);
    let hi = ivs
        .iter()
        .map(|i| i.death)
        .fold(f64::NEG_INFINITY, f64::max);

    let grid: Vec<f64> = if hi > lo {
        let span = hi - lo;
        let last = (bins - 1) as f64;
        (0..bins)
            .map(|i| {
                if i == bins - 1 {
                    hi
                } else {
                    lo + span * (i as f64 / last)
                }
            })
            .collect()
    } else {
        vec![lo; bins]
    };

    // #{birth <= a < death} = #{birth <= a} - #{death <= a} for the
    // half-open intervals; essential ones are closed and counted directly.
    let mut births = Vec::with_capacity(ivs.len());
    let mut deaths = Vec::with_capacity(ivs.len());
    let mut essentials = Vec::new();
    for iv in ivs {
        if iv.essential {
            essentials.push(*iv);
        } else {
            births.push(iv.birth);
            deaths.push(iv.death);
        }
    }
    births.sort_by(f64::total_cmp);
    deaths.sort_by(f64::total_cmp);

    let counts = grid
        .iter()
        .map(|&a| {
            let open = upper_bound(&births, a) - upper_bound(&deaths, a);
            let closed = essentials.iter().filter(|e| e.contains(a)).count();
            (open + closed) as u32
        })
        .collect();

    Ok(BettiCurve { grid, counts })
}

/// Sublevel and superlevel Betti curves of one signal, each on its own grid.
pub fn betti_pair(signal: &Signal, bins: usize) -> Result<(BettiCurve, BettiCurve)> {
    betti_pair_of(signal.samples(), bins)
}

pub fn betti_pair_of(samples: &[f64], bins: usize) -> Result<(BettiCurve, BettiCurve)> {
    let sub = betti_curve(&sublevel_barcode_of(samples)?, bins)?;
    let sup = betti_curve(&superlevel_barcode_of(samples)?, bins)?;
    Ok((sub, sup))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(birth: f64, death: f64, essential: bool) -> PersistenceInterval {
        PersistenceInterval {
            birth,
            death,
            essential,
        }
    }

    fn sorted(v: &[PersistenceInterval]) -> Vec<PersistenceInterval> {
        PersistenceBarcode::new(v.to_vec(), FiltrationKind::Sublevel).sorted_intervals()
    }

    #[test]
    fn two_minima() {
        let bc = sublevel_barcode_of(&[0.0, 2.0, 1.0, 3.0]).unwrap();
        assert_eq!(
            bc.sorted_intervals(),
            sorted(&[iv(0.0, 3.0, true), iv(1.0, 2.0, false)])
        );
    }

    #[test]
    fn monotone_and_constant() {
        let bc = sublevel_barcode_of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(bc.intervals(), &[iv(1.0, 4.0, true)]);
        let bc = sublevel_barcode_of(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(bc.intervals(), &[iv(5.0, 5.0, true)]);
    }

    #[test]
    fn superlevel_is_negated_sublevel() {
        let bc = superlevel_barcode_of(&[0.0, 2.0, 1.0, 3.0]).unwrap();
        assert_eq!(bc.filtration_kind(), FiltrationKind::Superlevel);
        assert_eq!(
            bc.sorted_intervals(),
            sorted(&[iv(-3.0, 0.0, true), iv(-2.0, -1.0, false)])
        );
        let bc = superlevel_barcode_of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(bc.intervals(), &[iv(-4.0, -1.0, true)]);
        let bc = superlevel_barcode_of(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(bc.intervals(), &[iv(-5.0, -5.0, true)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            sublevel_barcode_of(&[]),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            sublevel_barcode_of(&[0.0, f64::NAN]),
            Err(Error::InvalidInput(_))
        ));
        assert!(superlevel_barcode_of(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn plateau_minimum_counts_once() {
        // One plateau minimum, one strict minimum.
        let bc = sublevel_barcode_of(&[3.0, 1.0, 1.0, 1.0, 2.0, 0.5, 4.0]).unwrap();
        assert_eq!(
            bc.sorted_intervals(),
            sorted(&[iv(0.5, 4.0, true), iv(1.0, 2.0, false)])
        );
        // A descending plateau is not a minimum.
        let bc = sublevel_barcode_of(&[3.0, 1.0, 1.0, 0.0]).unwrap();
        assert_eq!(bc.intervals(), &[iv(0.0, 3.0, true)]);
    }

    #[test]
    fn equal_births_keep_smaller_index() {
        let ev = merge_events(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].level, 1.0);
        assert_eq!(ev[0].survivor_birth, 0.0);
        assert_eq!(ev[0].dying_birth, 0.0);
    }

    #[test]
    fn betti_queries() {
        let bc = sublevel_barcode_of(&[0.0, 2.0, 1.0, 3.0]).unwrap();
        assert_eq!(bc.count_at(1.5), 2);
        assert_eq!(bc.count_at(2.5), 1);
        assert_eq!(bc.count_at(-1.0), 0);
        assert_eq!(bc.count_at(3.0), 1);

        let single = PersistenceBarcode::new(vec![iv(0.0, 3.0, true)], FiltrationKind::Sublevel);
        for a in [0.0, 0.7, 1.5, 3.0] {
            assert_eq!(single.count_at(a), 1);
        }
    }

    #[test]
    fn betti_curve_grid_and_counts() {
        let s = Signal::from_samples(vec![0.0, 2.0, 1.0, 3.0]).unwrap();
        let (sub, sup) = betti_pair(&s, 4).unwrap();
        assert_eq!(sub.grid(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(sub.counts(), &[1, 2, 1, 1]);
        assert_eq!(sup.grid(), &[-3.0, -2.0, -1.0, 0.0]);
        assert_eq!(sup.counts(), &[1, 2, 1, 1]);
    }

    #[test]
    fn betti_interior_gap_counts_zero() {
        // Disconnected barcode built by hand: the gap between bars is empty.
        let bc = PersistenceBarcode::new(
            vec![iv(0.0, 1.0, false), iv(2.0, 3.0, true)],
            FiltrationKind::Sublevel,
        );
        let c = betti_curve(&bc, 7).unwrap();
        assert_eq!(c.counts(), &[1, 1, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn constant_signal_curve() {
        let s = Signal::from_samples(vec![5.0; 10]).unwrap();
        let (sub, sup) = betti_pair(&s, 6).unwrap();
        assert_eq!(sub.grid(), &[5.0; 6]);
        assert_eq!(sub.counts(), &[1; 6]);
        assert_eq!(sup.grid(), &[-5.0; 6]);
        assert_eq!(sup.counts(), &[1; 6]);
    }

    #[test]
    fn betti_rejects_bad_bins_and_empty() {
        let bc = sublevel_barcode_of(&[0.0, 1.0]).unwrap();
        assert!(betti_curve(&bc, 1).is_err());
        let empty = PersistenceBarcode::new(vec![], FiltrationKind::Sublevel);
        assert!(betti_curve(&empty, 10).is_err());
    }

    #[test]
    fn csv_rows() {
        let bc = sublevel_barcode_of(&[0.0, 2.0, 1.0, 3.0]).unwrap();
        let mut buf = Vec::new();
        bc.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "birth,death,essential\n0,3,true\n1,2,false\n");
    }
}

//! Majority-vote refinement of a class map inside superpixels.
//!
//! Every pixel of a segment receives the class predicted most often among
//! the segment's pixels. Frequencies and raw counts share the same argmax, so
//! votes are kept as integer counts. Ties go to the smallest class id.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::raster::{ClassMap, LabelMap, PixelMask, SuperpixelMap};

/// Class histogram of one segment. `counts[c]` is the number of member
/// pixels predicted as class `c`; index 0 is unused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTally {
    counts: Vec<u32>,
    size: u32,
}

impl VoteTally {
    pub fn new(num_classes: u16) -> Self {
        Self { counts: vec![0; num_classes as usize + 1], size: 0 }
    }

    /// Builds a tally from `(class, count)` pairs.
    pub fn from_counts(num_classes: u16, counts: &[(u16, u32)]) -> Self {
        let mut tally = VoteTally::new(num_classes);
        for &(class, n) in counts {
            tally.counts[class as usize] += n;
            tally.size += n;
        }
        tally
    }

    pub fn add(&mut self, class: u16) {
        self.counts[class as usize] += 1;
        self.size += 1;
    }

    pub fn count(&self, class: u16) -> u32 {
        self.counts[class as usize]
    }

    pub fn size(&self) -> u32 {
        self.size
    }
}

/// Most frequent class of a non-empty tally; the smallest id wins ties.
pub fn dominant_class(tally: &VoteTally) -> Result<u16> {
    if tally.size == 0 {
        return Err(Error::EmptySegment { segment: 0 });
    }
    let mut best = (0u32, 0u16);
    for (class, &n) in tally.counts.iter().enumerate().skip(1) {
        if n > best.0 {
            best = (n, class as u16);
        }
    }
    Ok(best.1)
}

/// One tally per segment, built from the predictions in `z`.
pub fn tally_segments(z: &ClassMap, sp: &SuperpixelMap) -> Result<Vec<VoteTally>> {
    z.dims().check("superpixels vs. class map", sp.dims())?;
    let mut tallies = vec![VoteTally::new(z.num_classes()); sp.num_segments()];
    for (&class, &segment) in z.classes().iter().zip(sp.segment_ids()) {
        tallies[segment as usize].add(class);
    }
    Ok(tallies)
}

/// Rewrites every pixel with the dominant class of its superpixel.
pub fn refine(z: &ClassMap, sp: &SuperpixelMap) -> Result<ClassMap> {
    let winners = tally_segments(z, sp)?
        .iter()
        .enumerate()
        .map(|(segment, t)| dominant_class(t).map_err(|_| Error::EmptySegment { segment }))
        .collect::<Result<Vec<u16>>>()?;
    let classes = sp.segment_ids().iter().map(|&s| winners[s as usize]).collect();
    let dims = z.dims();
    ClassMap::new(dims.height, dims.width, classes, z.num_classes())
}

/// Replaces predictions on training pixels with their known labels.
///
/// An optional step before [`refine`]; plain refinement votes with the
/// classifier's predictions only.
pub fn pin_training_labels(z: &ClassMap, labels: &LabelMap, train: &PixelMask) -> Result<ClassMap> {
    z.dims().check("labels vs. class map", labels.dims())?;
    z.dims().check("train mask vs. class map", train.dims())?;
    train.check_labeled(labels)?;
    let num_classes = z.num_classes().max(labels.num_classes());
    let classes = z.classes().iter().enumerate().map(|(p, &c)| if train.get(p) { labels.get(p) } else { c }).collect();
    let dims = z.dims();
    ClassMap::new(dims.height, dims.width, classes, num_classes)
}

/// Test pixels of one segment whose correctness changed under refinement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SegmentFlips {
    pub segment: u32,
    /// Wrong before, right after.
    pub fixed: u32,
    /// Right before, wrong after.
    pub broken: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementDelta {
    pub test_pixels: usize,
    pub correct_before: usize,
    pub correct_after: usize,
    pub oa_before: f64,
    pub oa_after: f64,
    /// Pixels anywhere in the raster whose class changed.
    pub pixels_changed: usize,
    /// Segments with at least one fixed or broken test pixel, by segment id.
    pub flips: Vec<SegmentFlips>,
}

impl RefinementDelta {
    pub fn delta(&self) -> f64 {
        self.oa_after - self.oa_before
    }

    pub fn net_fixed(&self) -> i64 {
        self.flips.iter().map(|f| f.fixed as i64 - f.broken as i64).sum()
    }
}

/// Accuracy of `z` and `y` on the test pixels, and where they differ.
pub fn refinement_delta(
    z: &ClassMap,
    y: &ClassMap,
    sp: &SuperpixelMap,
    truth: &LabelMap,
    test: &PixelMask,
) -> Result<RefinementDelta> {
    let dims = z.dims();
    dims.check("refined vs. raw class map", y.dims())?;
    dims.check("superpixels vs. class map", sp.dims())?;
    dims.check("labels vs. class map", truth.dims())?;
    dims.check("test mask vs. class map", test.dims())?;
    test.check_labeled(truth)?;

    let mut fixed = vec![0u32; sp.num_segments()];
    let mut broken = vec![0u32; sp.num_segments()];
    let (mut before, mut after, mut total) = (0usize, 0usize, 0usize);
    for p in test.indices() {
        let t = truth.get(p);
        let ok_before = z.get(p) == t;
        let ok_after = y.get(p) == t;
        total += 1;
        before += ok_before as usize;
        after += ok_after as usize;
        let s = sp.get(p) as usize;
        match (ok_before, ok_after) {
            (false, true) => fixed[s] += 1,
            (true, false) => broken[s] += 1,
            _ => {}
        }
    }
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    let flips = (0..sp.num_segments())
        .filter(|&s| fixed[s] + broken[s] > 0)
        .map(|s| SegmentFlips { segment: s as u32, fixed: fixed[s], broken: broken[s] })
        .collect();
    let pixels_changed = z.classes().iter().zip(y.classes()).filter(|(a, b)| a != b).count();
    Ok(RefinementDelta {
        test_pixels: total,
        correct_before: before,
        correct_after: after,
        oa_before: before as f64 / total as f64,
        oa_after: after as f64 / total as f64,
        pixels_changed,
        flips,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map(h: usize, w: usize, classes: Vec<u16>, c: u16) -> ClassMap {
        ClassMap::new(h, w, classes, c).unwrap()
    }

    #[test]
    fn dominant_examples() {
        assert_eq!(dominant_class(&VoteTally::from_counts(2, &[(1, 3), (2, 1)])).unwrap(), 1);
        assert_eq!(dominant_class(&VoteTally::from_counts(2, &[(1, 2), (2, 2)])).unwrap(), 1);
        assert_eq!(dominant_class(&VoteTally::from_counts(5, &[(4, 2), (2, 2), (5, 1)])).unwrap(), 2);
        assert!(matches!(dominant_class(&VoteTally::new(3)).unwrap_err(), Error::EmptySegment { .. }));
    }

    #[test]
    fn singletons_are_identity() {
        let z = map(2, 3, vec![1, 4, 2, 2, 3, 1], 4);
        let sp = SuperpixelMap::new(2, 3, (0..6).collect()).unwrap();
        assert_eq!(refine(&z, &sp).unwrap(), z);
    }

    #[test]
    fn one_segment_takes_majority() {
        let z = map(1, 8, vec![1, 2, 1, 2, 1, 1, 2, 1], 2);
        let sp = SuperpixelMap::new(1, 8, vec![0; 8]).unwrap();
        assert_eq!(refine(&z, &sp).unwrap().classes(), &[1; 8]);
    }

    #[test]
    fn dimension_mismatch() {
        let z = map(1, 2, vec![1, 1], 1);
        let sp = SuperpixelMap::new(2, 1, vec![0, 0]).unwrap();
        assert!(matches!(refine(&z, &sp).unwrap_err(), Error::DimensionMismatch { .. }));
    }

    #[test]
    fn delta_of_unchanged_map_is_zero() {
        let z = map(1, 4, vec![1, 2, 2, 1], 2);
        let sp = SuperpixelMap::new(1, 4, vec![0, 0, 1, 1]).unwrap();
        let truth = LabelMap::new(1, 4, vec![1, 1, 2, 0]).unwrap();
        let test = PixelMask::labeled(&truth);
        let d = refinement_delta(&z, &z, &sp, &truth, &test).unwrap();
        assert_eq!(d.delta(), 0.0);
        assert!(d.flips.is_empty());
    }

    #[test]
    fn one_fix_in_ten() {
        let truth = LabelMap::new(1, 10, vec![1; 10]).unwrap();
        let mut raw = vec![1u16; 10];
        raw[4] = 2;
        let z = map(1, 10, raw, 2);
        let sp = SuperpixelMap::new(1, 10, vec![0; 10]).unwrap();
        let y = refine(&z, &sp).unwrap();
        let d = refinement_delta(&z, &y, &sp, &truth, &PixelMask::labeled(&truth)).unwrap();
        assert!((d.delta() - 0.1).abs() < 1e-12);
        assert_eq!(d.flips, vec![SegmentFlips { segment: 0, fixed: 1, broken: 0 }]);
    }

    #[test]
    fn pinning_overrides_training_pixels_only() {
        let z = map(1, 4, vec![2, 2, 2, 2], 2);
        let labels = LabelMap::new(1, 4, vec![1, 1, 0, 2]).unwrap();
        let train = PixelMask::new(1, 4, vec![true, false, false, false]).unwrap();
        let pinned = pin_training_labels(&z, &labels, &train).unwrap();
        assert_eq!(pinned.classes(), &[1, 2, 2, 2]);
    }

    fn instance() -> impl Strategy<Value = (ClassMap, SuperpixelMap)> {
        (1usize..10, 1usize..10, 1u16..6, 1u32..8).prop_flat_map(|(h, w, c, k)| {
            (proptest::collection::vec(1..=c, h * w), proptest::collection::vec(0..k, h * w)).prop_map(
                move |(classes, ids)| {
                    (ClassMap::new(h, w, classes, c).unwrap(), SuperpixelMap::from_arbitrary_ids(h, w, &ids).unwrap())
                },
            )
        })
    }

    proptest! {
        #[test]
        fn idempotent_and_constant((z, sp) in instance()) {
            let y = refine(&z, &sp).unwrap();
            prop_assert_eq!(refine(&y, &sp).unwrap(), y.clone());
            for p in 0..z.dims().len() {
                for q in 0..z.dims().len() {
                    if sp.get(p) == sp.get(q) {
                        prop_assert_eq!(y.get(p), y.get(q));
                    }
                }
            }
        }

        #[test]
        fn order_preserving_relabel_commutes((z, sp) in instance(), gaps in proptest::collection::vec(1u16..4, 6)) {
            let mut image = vec![0u16; z.num_classes() as usize + 1];
            let mut next = 0u16;
            for c in 1..=z.num_classes() as usize {
                next += gaps[c - 1];
                image[c] = next;
            }
            let relabel = |m: &ClassMap| {
                let d = m.dims();
                ClassMap::new(d.height, d.width, m.classes().iter().map(|&c| image[c as usize]).collect(), next).unwrap()
            };
            prop_assert_eq!(refine(&relabel(&z), &sp).unwrap(), relabel(&refine(&z, &sp).unwrap()));
        }

        #[test]
        fn delta_reconciles((z, sp) in instance(), test_bits in proptest::collection::vec(any::<bool>(), 100)) {
            let d = z.dims();
            let truth: Vec<u16> = (0..d.len()).map(|p| if test_bits[p] { z.get((p * 7) % d.len()) } else { 0 }).collect();
            let truth = LabelMap::new(d.height, d.width, truth).unwrap();
            let test = PixelMask::labeled(&truth);
            prop_assume!(test.count() > 0);
            let y = refine(&z, &sp).unwrap();
            let delta = refinement_delta(&z, &y, &sp, &truth, &test).unwrap();
            prop_assert_eq!(delta.correct_after as i64 - delta.correct_before as i64, delta.net_fixed());
            prop_assert!((delta.delta() - delta.net_fixed() as f64 / delta.test_pixels as f64).abs() < 1e-12);
        }
    }
}

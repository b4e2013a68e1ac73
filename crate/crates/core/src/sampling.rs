//! Seeded train/test splits over labeled pixels.
//!
//! The training set has `round(fraction * labeled)` pixels. In stratified
//! mode that total is apportioned across classes in proportion to class size
//! by the largest-remainder method (ties to the smaller class id), then
//! topped up so each class gets at least `min_per_class` pixels where the
//! class is large enough. Pixels within a class are chosen by a SplitMix64
//! Fisher-Yates shuffle of the class's pixels in raster order, one stream per
//! class derived from the seed.

use crate::error::{Error, Result};
use crate::raster::{LabelMap, PixelMask};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub fraction: f64,
    pub seed: u64,
    pub stratified: bool,
    pub min_per_class: usize,
}

impl SplitSpec {
    pub fn new(fraction: f64, seed: u64) -> Self {
        Self { fraction, seed, stratified: true, min_per_class: 1 }
    }

    pub fn with_min_per_class(mut self, min_per_class: usize) -> Self {
        self.min_per_class = min_per_class;
        self
    }

    pub fn unstratified(mut self) -> Self {
        self.stratified = false;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction < 1.0) {
            return Err(Error::InvalidConfig {
                what: "split",
                reason: format!("fraction must lie in (0, 1), got {}", self.fraction),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: PixelMask,
    pub test: PixelMask,
}

/// Per-class training quotas, index `c - 1` for class `c`.
pub fn class_quotas(class_sizes: &[usize], fraction: f64, min_per_class: usize) -> Result<Vec<usize>> {
    let labeled: usize = class_sizes.iter().sum();
    let total = (fraction * labeled as f64).round() as usize;

    let exact: Vec<f64> = class_sizes.iter().map(|&n| total as f64 * n as f64 / labeled.max(1) as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut leftover = total - quotas.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - quotas[a] as f64;
        let rb = exact[b] - quotas[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in &order {
        if leftover == 0 {
            break;
        }
        if quotas[c] < class_sizes[c] {
            quotas[c] += 1;
            leftover -= 1;
        }
    }

    let floor: Vec<usize> = class_sizes.iter().map(|&n| n.min(min_per_class)).collect();
    let needed: usize = floor.iter().sum();
    if needed > total {
        return Err(Error::FractionTooSmall { fraction, min_per_class, needed, available: total });
    }
    // Raise short classes, taking from the class with the largest surplus.
    for c in 0..quotas.len() {
        while quotas[c] < floor[c] {
            let donor = (0..quotas.len())
                .filter(|&d| quotas[d] > floor[d])
                .max_by(|&a, &b| (quotas[a] - floor[a]).cmp(&(quotas[b] - floor[b])).then(b.cmp(&a)))
                .expect("total covers the floors");
            quotas[donor] -= 1;
            quotas[c] += 1;
        }
    }
    Ok(quotas)
}

pub fn split(labels: &LabelMap, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let dims = labels.dims();
    let num_classes = labels.num_classes() as usize;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (p, &l) in labels.labels().iter().enumerate() {
        if l != 0 {
            members[l as usize - 1].push(p);
        }
    }

    let mut train = PixelMask::empty(dims);
    if spec.stratified {
        if let Some(c) = members.iter().position(Vec::is_empty) {
            return Err(Error::EmptyClass { class: c as u16 + 1 });
        }
        let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
        let quotas = class_quotas(&sizes, spec.fraction, spec.min_per_class)?;
        for (c, pixels) in members.iter_mut().enumerate() {
            let mut rng = SplitMix64::derive(spec.seed, c as u64 + 1);
            rng.shuffle(pixels);
            for &p in &pixels[..quotas[c]] {
                train.set(p, true);
            }
        }
    } else {
        let mut pixels: Vec<usize> = members.concat();
        pixels.sort_unstable();
        let total = (spec.fraction * pixels.len() as f64).round() as usize;
        let mut rng = SplitMix64::derive(spec.seed, 0);
        rng.shuffle(&mut pixels);
        for &p in &pixels[..total] {
            train.set(p, true);
        }
    }

    let mut test = PixelMask::empty(dims);
    for (p, &l) in labels.labels().iter().enumerate() {
        if l != 0 && !train.get(p) {
            test.set(p, true);
        }
    }
    Ok(Split { train, test })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn class_counts(labels: &LabelMap, mask: &PixelMask) -> Vec<usize> {
        let mut counts = vec![0; labels.num_classes() as usize];
        for p in mask.indices() {
            counts[labels.get(p) as usize - 1] += 1;
        }
        counts
    }

    #[test]
    fn half_of_one_class() {
        let labels = LabelMap::new(2, 5, vec![1; 10]).unwrap();
        let s = split(&labels, &SplitSpec::new(0.5, 9)).unwrap();
        assert_eq!((s.train.count(), s.test.count()), (5, 5));
    }

    #[test]
    fn ninety_ten_at_ten_percent() {
        let mut l = vec![1u16; 90];
        l.extend(vec![2u16; 10]);
        let labels = LabelMap::new(10, 10, l).unwrap();
        let s = split(&labels, &SplitSpec::new(0.1, 1)).unwrap();
        assert_eq!(class_counts(&labels, &s.train), vec![9, 1]);
    }

    #[test]
    fn largest_remainder_by_hand() {
        // 7 pixels over sizes 5/3/2: exact 3.5, 2.1, 1.4 -> floors 3,2,1, the
        // leftover pixel goes to the largest remainder (class 1).
        assert_eq!(class_quotas(&[5, 3, 2], 0.7, 0).unwrap(), vec![4, 2, 1]);
        // Equal remainders go to the smaller class id.
        assert_eq!(class_quotas(&[1, 1], 0.5, 0).unwrap(), vec![1, 0]);
    }

    #[test]
    fn min_per_class_tops_up() {
        // round(0.05 * 102) = 5; class 2 would get 0 without the floor.
        assert_eq!(class_quotas(&[100, 2], 0.05, 0).unwrap(), vec![5, 0]);
        assert_eq!(class_quotas(&[100, 2], 0.05, 1).unwrap(), vec![4, 1]);
    }

    #[test]
    fn fraction_too_small() {
        let err = class_quotas(&[100, 100, 100], 0.005, 1).unwrap_err();
        assert!(matches!(err, Error::FractionTooSmall { needed: 3, available: 2, .. }));
    }

    #[test]
    fn empty_class() {
        let labels = LabelMap::new(1, 4, vec![1, 1, 3, 3]).unwrap();
        assert!(matches!(split(&labels, &SplitSpec::new(0.5, 0)).unwrap_err(), Error::EmptyClass { class: 2 }));
        assert!(split(&labels, &SplitSpec::new(0.5, 0).unstratified()).is_ok());
    }

    #[test]
    fn fraction_bounds() {
        let labels = LabelMap::new(1, 2, vec![1, 1]).unwrap();
        for f in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(split(&labels, &SplitSpec::new(f, 0)).is_err());
        }
    }

    #[test]
    fn twenty_percent_of_indian_pines_sized_map() {
        // Indian Pines class sizes.
        let sizes = [46, 1428, 830, 237, 483, 730, 28, 478, 20, 972, 2455, 593, 205, 1265, 386, 93];
        let mut l = Vec::new();
        for (c, &n) in sizes.iter().enumerate() {
            l.extend(std::iter::repeat_n(c as u16 + 1, n));
        }
        let labeled = l.len();
        l.resize(145 * 145, 0);
        let labels = LabelMap::new(145, 145, l).unwrap();
        let s = split(&labels, &SplitSpec::new(0.20, 3)).unwrap();
        assert_eq!(labeled, 10249);
        assert_eq!(s.train.count(), (0.20 * labeled as f64).round() as usize);
    }

    fn label_map_strategy() -> impl Strategy<Value = LabelMap> {
        (1usize..12, 1usize..12, 1u16..6).prop_flat_map(|(h, w, c)| {
            proptest::collection::vec(0..=c, h * w).prop_map(move |v| LabelMap::new(h, w, v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn masks_partition_labeled_pixels(labels in label_map_strategy(), fraction in 0.01f64..0.99, seed: u64) {
            let spec = SplitSpec::new(fraction, seed).unstratified();
            let s = split(&labels, &spec).unwrap();
            for p in 0..labels.dims().len() {
                let labeled = labels.get(p) != 0;
                prop_assert!(!(s.train.get(p) && s.test.get(p)));
                prop_assert_eq!(s.train.get(p) || s.test.get(p), labeled);
            }
            prop_assert_eq!(s.train.count(), (fraction * labels.labeled_count() as f64).round() as usize);
            prop_assert_eq!(split(&labels, &spec).unwrap(), s);
        }

        #[test]
        fn stratified_counts_are_proportional(labels in label_map_strategy(), fraction in 0.01f64..0.99, seed: u64) {
            let hist = labels.class_histogram();
            prop_assume!(labels.num_classes() > 0 && hist[1..].iter().all(|&n| n > 0));
            let spec = SplitSpec::new(fraction, seed).with_min_per_class(0);
            let s = split(&labels, &spec).unwrap();
            let labeled = labels.labeled_count();
            let total = (fraction * labeled as f64).round() as usize;
            prop_assert_eq!(s.train.count(), total);
            for (c, got) in class_counts(&labels, &s.train).into_iter().enumerate() {
                let exact = total as f64 * hist[c + 1] as f64 / labeled as f64;
                prop_assert!((got as f64 - exact).abs() < 1.0, "class {} got {} exact {}", c + 1, got, exact);
            }
            for p in 0..labels.dims().len() {
                prop_assert_eq!(s.train.get(p) || s.test.get(p), labels.get(p) != 0);
                prop_assert!(!(s.train.get(p) && s.test.get(p)));
            }
        }
    }
}

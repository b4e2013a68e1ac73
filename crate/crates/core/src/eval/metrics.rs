use crate::error::{Error, Result};
use crate::raster::{ClassMap, LabelMap, PixelMask};

/// Fraction of masked pixels where the prediction equals the label.
pub fn overall_accuracy(pred: &ClassMap, truth: &LabelMap, mask: &PixelMask) -> Result<f64> {
    check(pred, truth, mask)?;
    let (mut hits, mut total) = (0usize, 0usize);
    for p in mask.indices() {
        total += 1;
        hits += (pred.get(p) == truth.get(p)) as usize;
    }
    if total == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(hits as f64 / total as f64)
}

fn check(pred: &ClassMap, truth: &LabelMap, mask: &PixelMask) -> Result<()> {
    pred.dims().check("labels vs. prediction", truth.dims())?;
    pred.dims().check("mask vs. prediction", mask.dims())?;
    mask.check_labeled(truth)
}

/// Square confusion matrix, rows indexed by true class and columns by
/// predicted class, both `1..=num_classes` stored at `c - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confusion {
    num_classes: usize,
    counts: Vec<u64>,
}

impl Confusion {
    pub fn new(num_classes: usize) -> Self {
        Self { num_classes, counts: vec![0; num_classes * num_classes] }
    }

    /// From row-major counts.
    pub fn from_counts(num_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != num_classes * num_classes {
            return Err(Error::DimensionMismatch {
                what: "confusion counts".into(),
                expected: (num_classes * num_classes).to_string(),
                found: counts.len().to_string(),
            });
        }
        Ok(Self { num_classes, counts })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, truth: u16, pred: u16) -> u64 {
        self.counts[(truth as usize - 1) * self.num_classes + pred as usize - 1]
    }

    fn add(&mut self, truth: u16, pred: u16) {
        self.counts[(truth as usize - 1) * self.num_classes + pred as usize - 1] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|i| self.counts[i * self.num_classes + i]).sum()
    }

    pub fn overall_accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    /// Recall of each class; `None` for classes absent from the truth.
    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        (0..self.num_classes)
            .map(|i| {
                let row = &self.counts[i * self.num_classes..(i + 1) * self.num_classes];
                let n: u64 = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect()
    }

    /// Cohen's kappa. When chance agreement is total (`p_e == 1`, e.g. a
    /// single class on both sides) kappa is defined as 0.
    pub fn kappa(&self) -> f64 {
        let n = self.total() as f64;
        let k = self.num_classes;
        let p_o = self.trace() as f64 / n;
        let p_e: f64 = (0..k)
            .map(|i| {
                let row: u64 = self.counts[i * k..(i + 1) * k].iter().sum();
                let col: u64 = (0..k).map(|j| self.counts[j * k + i]).sum();
                row as f64 * col as f64
            })
            .sum::<f64>()
            / (n * n);
        if p_e >= 1.0 {
            return 0.0;
        }
        (p_o - p_e) / (1.0 - p_e)
    }
}

pub fn confusion_and_kappa(pred: &ClassMap, truth: &LabelMap, mask: &PixelMask) -> Result<(Confusion, f64)> {
    check(pred, truth, mask)?;
    let num_classes = pred.num_classes().max(truth.num_classes()) as usize;
    let mut confusion = Confusion::new(num_classes);
    for p in mask.indices() {
        confusion.add(truth.get(p), pred.get(p));
    }
    if confusion.total() == 0 {
        return Err(Error::EmptyMask);
    }
    let kappa = confusion.kappa();
    Ok((confusion, kappa))
}

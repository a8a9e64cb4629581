use rand::seq::SliceRandom;

use super::{train_linear, LabeledInstances, LinearConfig};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Macro-averaged precision, recall and F1, plus hamming loss.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ClassificationMetrics<T> {
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub hamming: T,
}

/// Macro averages run over every class that occurs in `y_true` or `y_pred`;
/// a class with no predictions has precision 0.
pub fn classification_metrics<T: Scalar>(
    y_true: &[usize],
    y_pred: &[usize],
    classes: usize,
) -> Result<ClassificationMetrics<T>> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch(y_true.len(), y_pred.len()));
    }
    if y_true.is_empty() {
        return Err(Error::invalid("no labels to score"));
    }
    if let Some(&bad) = y_true.iter().chain(y_pred).find(|&&l| l >= classes) {
        return Err(Error::invalid(format!("label {bad} outside 0..{classes}")));
    }
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    let mut wrong = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t == p {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
            wrong += 1;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut p_sum, mut r_sum, mut f_sum, mut seen) = (0.0, 0.0, 0.0, 0usize);
    for c in 0..classes {
        if tp[c] + fp[c] + fn_[c] == 0 {
            continue;
        }
        seen += 1;
        let p = ratio(tp[c], tp[c] + fp[c]);
        let r = ratio(tp[c], tp[c] + fn_[c]);
        p_sum += p;
        r_sum += r;
        f_sum += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    let seen = seen as f64;
    Ok(ClassificationMetrics {
        precision: T::of(p_sum / seen),
        recall: T::of(r_sum / seen),
        f1: T::of(f_sum / seen),
        hamming: T::of(wrong as f64 / y_true.len() as f64),
    })
}

/// Area under the ROC curve as the Mann-Whitney statistic; tied scores
/// count one half.
pub fn auroc<T: Scalar>(scores: &[T], labels: &[bool]) -> Result<T> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::invalid("AUROC needs both positive and negative labels"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("no NaN"));
    // sum of (1-based, tie-averaged) ranks of positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg_rank * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (pos, neg) = (pos as f64, neg as f64);
    Ok(T::of((rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg)))
}

/// Assign instances to `folds` folds: each class is shuffled then dealt
/// round-robin, continuing where the previous class stopped.
pub fn stratified_folds(labels: &[usize], classes: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::param("need at least 2 folds"));
    }
    if folds > labels.len() {
        return Err(Error::param(format!("{folds} folds for {} instances", labels.len())));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            out[next].push(i);
            next = (next + 1) % folds;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FoldReport<T> {
    pub test_size: usize,
    pub metrics: ClassificationMetrics<T>,
    /// Only for binary problems whose test fold holds both classes.
    pub auroc: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvReport<T> {
    pub folds: Vec<FoldReport<T>>,
    pub mean: ClassificationMetrics<T>,
    pub mean_auroc: Option<T>,
}

/// Stratified k-fold cross-validation of a linear model; metrics are
/// averaged over folds.
pub fn cross_validate<T: Scalar>(
    data: &LabeledInstances<T>,
    folds: usize,
    config: &LinearConfig<T>,
    seed: u64,
) -> Result<CvReport<T>> {
    let assignment = stratified_folds(&data.labels, data.classes, folds, rng::mix(seed, &[0]))?;
    let binary = data.classes == 2;
    let mut reports = Vec::with_capacity(folds);
    for (k, test) in assignment.iter().enumerate() {
        let mut in_test = vec![false; data.len()];
        test.iter().for_each(|&i| in_test[i] = true);
        let train: Vec<usize> = (0..data.len()).filter(|&i| !in_test[i]).collect();
        let model = train_linear(&data.subset(&train), config, rng::mix(seed, &[1, k as u64]))?;
        let y_true: Vec<usize> = test.iter().map(|&i| data.labels[i]).collect();
        let y_pred: Vec<usize> = test.iter().map(|&i| model.predict(&data.features[i])).collect();
        let metrics = classification_metrics(&y_true, &y_pred, data.classes)?;
        let auroc = if binary && y_true.contains(&0) && y_true.contains(&1) {
            let scores: Vec<T> = test.iter().map(|&i| model.decision(&data.features[i])).collect();
            let labels: Vec<bool> = y_true.iter().map(|&l| l == 1).collect();
            Some(auroc(&scores, &labels)?)
        } else {
            None
        };
        reports.push(FoldReport {
            test_size: test.len(),
            metrics,
            auroc,
        });
    }
    let nf = T::from_usize(reports.len()).expect("fold count fits");
    let avg = |f: fn(&ClassificationMetrics<T>) -> T| reports.iter().map(|r| f(&r.metrics)).sum::<T>() / nf;
    let mean = ClassificationMetrics {
        precision: avg(|m| m.precision),
        recall: avg(|m| m.recall),
        f1: avg(|m| m.f1),
        hamming: avg(|m| m.hamming),
    };
    let aurocs: Vec<T> = reports.iter().filter_map(|r| r.auroc).collect();
    let mean_auroc = (!aurocs.is_empty())
        .then(|| aurocs.iter().copied().sum::<T>() / T::from_usize(aurocs.len()).expect("fits"));
    Ok(CvReport {
        folds: reports,
        mean,
        mean_auroc,
    })
}

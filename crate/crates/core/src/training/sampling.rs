//! Class balancing, stratified splits and mixed-task batching.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use super::TrainError;
use crate::preprocess::CleanPost;
use crate::seed;

fn by_class<T>(items: &[T], classes: usize, label: impl Fn(&T) -> usize) -> Result<Vec<Vec<usize>>, TrainError> {
    let mut groups = vec![Vec::new(); classes];
    for (i, it) in items.iter().enumerate() {
        let l = label(it);
        if l >= classes {
            return Err(TrainError::Data(format!("label {l} out of range for {classes} classes")));
        }
        groups[l].push(i);
    }
    Ok(groups)
}

/// Duplicates minority-class items (uniformly, with replacement) until every
/// class matches the majority count. All originals are kept and the result
/// is shuffled.
pub fn oversample_by<T: Clone>(
    items: &[T],
    classes: usize,
    label: impl Fn(&T) -> usize,
    seed: u64,
) -> Result<Vec<T>, TrainError> {
    let groups = by_class(items, classes, label)?;
    if let Some(c) = groups.iter().position(Vec::is_empty) {
        return Err(TrainError::EmptyClass(c));
    }
    let target = groups.iter().map(Vec::len).max().unwrap_or(0);
    let mut rng = seed::Rng::seed_from_u64(seed);
    let mut out: Vec<T> = items.to_vec();
    for g in &groups {
        for _ in g.len()..target {
            out.push(items[g[rng.random_range(0..g.len())]].clone());
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

pub fn oversample(posts: &[CleanPost], classes: usize, seed: u64) -> Result<Vec<CleanPost>, TrainError> {
    oversample_by(posts, classes, |p| p.label_id, seed)
}

/// Number of items of a class of size `n` that go to the training side.
pub fn train_share(n: usize, ratio: f64) -> usize {
    ((n as f64 * ratio).round() as usize).clamp(1, n.saturating_sub(1))
}

/// Per-class random split; each present class needs at least two items so it
/// appears on both sides. Both halves keep the input order.
pub fn stratified_split_by<T: Clone>(
    items: &[T],
    classes: usize,
    label: impl Fn(&T) -> usize,
    ratio: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), TrainError> {
    let groups = by_class(items, classes, label)?;
    let mut rng = seed::Rng::seed_from_u64(seed);
    let mut to_train = vec![false; items.len()];
    for (c, g) in groups.iter().enumerate() {
        if g.is_empty() {
            continue;
        }
        if g.len() < 2 {
            return Err(TrainError::ClassTooSmall { class: c, count: g.len() });
        }
        let mut g = g.clone();
        g.shuffle(&mut rng);
        for &i in &g[..train_share(g.len(), ratio)] {
            to_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (it, &t) in items.iter().zip(&to_train) {
        if t {
            train.push(it.clone());
        } else {
            test.push(it.clone());
        }
    }
    Ok((train, test))
}

pub fn stratified_split(
    posts: &[CleanPost],
    classes: usize,
    ratio: f64,
    seed: u64,
) -> Result<(Vec<CleanPost>, Vec<CleanPost>), TrainError> {
    stratified_split_by(posts, classes, |p| p.label_id, ratio, seed)
}

/// Keeps `count` items, allocated to classes proportionally (largest
/// remainder) with at least one item per present class.
pub fn subsample_stratified(
    posts: &[CleanPost],
    classes: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<CleanPost>, TrainError> {
    let groups = by_class(posts, classes, |p| p.label_id)?;
    let present: Vec<usize> = (0..classes).filter(|&c| !groups[c].is_empty()).collect();
    if count >= posts.len() {
        return Ok(posts.to_vec());
    }
    if count < present.len() {
        return Err(TrainError::Data(format!(
            "cannot keep {count} samples across {} classes",
            present.len()
        )));
    }
    let total = posts.len() as f64;
    let mut quota: Vec<usize> = vec![0; classes];
    let mut remainders = Vec::new();
    for &c in &present {
        let exact = count as f64 * groups[c].len() as f64 / total;
        quota[c] = (exact.floor() as usize).max(1);
        remainders.push((exact - exact.floor(), c));
    }
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut assigned: usize = quota.iter().sum();
    for &(_, c) in remainders.iter().cycle().take(4 * classes) {
        if assigned >= count {
            break;
        }
        if quota[c] < groups[c].len() {
            quota[c] += 1;
            assigned += 1;
        }
    }
    while assigned > count {
        let c = *present
            .iter()
            .max_by_key(|&&c| (quota[c], std::cmp::Reverse(c)))
            .expect("present classes");
        quota[c] -= 1;
        assigned -= 1;
    }
    let mut rng = seed::Rng::seed_from_u64(seed);
    let mut keep = vec![false; posts.len()];
    for &c in &present {
        let mut g = groups[c].clone();
        g.shuffle(&mut rng);
        for &i in &g[..quota[c]] {
            keep[i] = true;
        }
    }
    Ok(posts
        .iter()
        .zip(keep)
        .filter(|&(_, k)| k)
        .map(|(p, _)| p.clone())
        .collect())
}

/// Position of one training item: which task, and its index in that task's
/// (balanced) training set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BatchItem {
    pub task: usize,
    pub index: usize,
}

/// One epoch of batches: a seeded shuffle of every item of every task,
/// chunked into groups of `batch_size` (the last may be short).
pub fn mixed_batches(
    task_sizes: &[usize],
    batch_size: usize,
    seed: u64,
) -> Result<Vec<Vec<BatchItem>>, TrainError> {
    if batch_size == 0 {
        return Err(TrainError::Config("batch size must be positive".into()));
    }
    let mut all: Vec<BatchItem> = task_sizes
        .iter()
        .enumerate()
        .flat_map(|(task, &n)| (0..n).map(move |index| BatchItem { task, index }))
        .collect();
    if all.is_empty() {
        return Err(TrainError::Data("no training samples".into()));
    }
    let mut rng = seed::Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    Ok(all.chunks(batch_size).map(<[BatchItem]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn posts(counts: &[usize]) -> Vec<CleanPost> {
        let mut out = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            for i in 0..n {
                out.push(CleanPost {
                    id: format!("{c}-{i}"),
                    tokens: vec![format!("w{i}")],
                    label_id: c,
                    task: "t".into(),
                });
            }
        }
        out
    }

    fn histogram(p: &[CleanPost], k: usize) -> Vec<usize> {
        let mut h = vec![0; k];
        for x in p {
            h[x.label_id] += 1;
        }
        h
    }

    #[test]
    fn oversample_balances() {
        let p = posts(&[5, 2, 1]);
        let out = oversample(&p, 3, 7).unwrap();
        assert_eq!(histogram(&out, 3), vec![5, 5, 5]);
        assert_eq!(out.len(), 15);
        let ids: HashSet<_> = out.iter().map(|x| x.id.clone()).collect();
        assert!(p.iter().all(|x| ids.contains(&x.id)));
    }

    #[test]
    fn balanced_input_is_permuted() {
        let p = posts(&[3, 3]);
        let mut out: Vec<String> = oversample(&p, 2, 1).unwrap().into_iter().map(|x| x.id).collect();
        let mut ids: Vec<String> = p.into_iter().map(|x| x.id).collect();
        out.sort();
        ids.sort();
        assert_eq!(out, ids);
    }

    #[test]
    fn oversample_empty_class() {
        assert!(matches!(oversample(&posts(&[3, 0]), 2, 0), Err(TrainError::EmptyClass(1))));
    }

    #[test]
    fn split_ninety_ten() {
        let p = posts(&[50, 50]);
        let (tr, te) = stratified_split(&p, 2, 0.9, 3).unwrap();
        assert_eq!((tr.len(), te.len()), (90, 10));
        assert_eq!(histogram(&tr, 2), vec![45, 45]);
        assert_eq!(histogram(&te, 2), vec![5, 5]);
        let again = stratified_split(&p, 2, 0.9, 3).unwrap();
        assert_eq!(again.0, tr);
        let ids: HashSet<_> = tr.iter().map(|x| &x.id).collect();
        assert!(te.iter().all(|x| !ids.contains(&x.id)));
    }

    #[test]
    fn split_share_within_one_sample_exhaustive() {
        for n in 2..=50usize {
            let p = posts(&[n]);
            let (tr, te) = stratified_split(&p, 1, 0.9, n as u64).unwrap();
            assert_eq!(tr.len() + te.len(), n);
            assert!(!tr.is_empty() && !te.is_empty());
            let dev = (tr.len() as f64 - 0.9 * n as f64).abs();
            assert!(dev <= 1.0, "n={n}: {} train", tr.len());
        }
    }

    #[test]
    fn split_rejects_singletons() {
        assert!(matches!(
            stratified_split(&posts(&[5, 1]), 2, 0.9, 0),
            Err(TrainError::ClassTooSmall { class: 1, count: 1 })
        ));
    }

    #[test]
    fn subsample_keeps_every_class() {
        let p = posts(&[60, 30, 10]);
        let s = subsample_stratified(&p, 3, 20, 5).unwrap();
        assert_eq!(s.len(), 20);
        assert_eq!(histogram(&s, 3), vec![12, 6, 2]);
        let s = subsample_stratified(&p, 3, 4, 5).unwrap();
        assert_eq!(s.len(), 4);
        assert!(histogram(&s, 3).iter().all(|&c| c >= 1));
    }

    #[test]
    fn batches_cover_everything_once() {
        let b = mixed_batches(&[6, 4], 5, 11).unwrap();
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![5, 5]);
        let all: HashSet<_> = b.iter().flatten().copied().collect();
        assert_eq!(all.len(), 10);
        let short = mixed_batches(&[7], 3, 0).unwrap();
        assert_eq!(short.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 3, 1]);
        assert!(short.iter().flatten().all(|x| x.task == 0));
        assert!(mixed_batches(&[0, 0], 3, 0).is_err());
    }

    #[test]
    fn batch_mix_tracks_task_sizes() {
        // Expected share of task 0 in the first batch is 60/100.
        let trials = 10_000;
        let mut hits = 0usize;
        let mut total = 0usize;
        for s in 0..trials {
            let b = mixed_batches(&[60, 40], 10, s).unwrap();
            hits += b[0].iter().filter(|x| x.task == 0).count();
            total += b[0].len();
        }
        let share = hits as f64 / total as f64;
        assert!((share - 0.6).abs() < 0.02, "share {share}");
    }
}

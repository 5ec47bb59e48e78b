//! Repeated random 90/10 resampling with mean and standard deviation.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::macro_f1;
use super::EvalError;
use crate::nn::TaskInfo;
use crate::preprocess::CleanPost;
use crate::training::{stratified_split, TaskSplit, TrainError, TRAIN_RATIO};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub run: usize,
    pub task: String,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: String,
    pub mean: f64,
    /// Population standard deviation over runs.
    pub std: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatedReport {
    pub rows: Vec<RunRow>,
    pub summary: Vec<TaskSummary>,
}

impl RepeatedReport {
    pub fn from_rows(rows: Vec<RunRow>) -> Self {
        let mut tasks: Vec<String> = Vec::new();
        for r in &rows {
            if !tasks.contains(&r.task) {
                tasks.push(r.task.clone());
            }
        }
        let summary = tasks
            .into_iter()
            .map(|task| {
                let xs: Vec<f64> = rows.iter().filter(|r| r.task == task).map(|r| r.macro_f1).collect();
                let (mean, std) = mean_std(&xs);
                TaskSummary {
                    task,
                    mean,
                    std,
                    runs: xs.len(),
                }
            })
            .collect();
        Self { rows, summary }
    }

    pub fn summary_for(&self, task: &str) -> Option<&TaskSummary> {
        self.summary.iter().find(|s| s.task == task)
    }

    /// CSV `run,task,macro_f1`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["run", "task", "macro_f1"])?;
        for r in &self.rows {
            w.write_record([r.run.to_string(), r.task.clone(), format!("{:.6}", r.macro_f1)])?;
        }
        w.flush()
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs `repetitions` independent experiments. Run `r` splits every task
/// 90/10 with seed `first_seed + r`, hands the splits to `run` (which trains
/// on `train` and returns predicted label ids for every `validation` post,
/// per task) and scores the predictions with macro-F1.
pub fn repeated_experiment<F, E>(
    tasks: &[(TaskInfo, Vec<CleanPost>)],
    repetitions: usize,
    first_seed: u64,
    mut run: F,
) -> Result<RepeatedReport, E>
where
    F: FnMut(u64, &[TaskSplit]) -> Result<Vec<Vec<usize>>, E>,
    E: From<EvalError> + From<TrainError>,
{
    if repetitions == 0 {
        return Err(EvalError::NoRepetitions.into());
    }
    let mut rows = Vec::with_capacity(repetitions * tasks.len());
    for r in 0..repetitions {
        let seed = first_seed + r as u64;
        let splits = tasks
            .iter()
            .map(|(info, posts)| {
                let (train, validation) = stratified_split(posts, info.labels.len(), TRAIN_RATIO, seed)?;
                Ok(TaskSplit {
                    info: info.clone(),
                    train,
                    validation,
                })
            })
            .collect::<Result<Vec<_>, TrainError>>()?;
        let preds = run(seed, &splits)?;
        if preds.len() != splits.len() {
            return Err(EvalError::LengthMismatch {
                gold: splits.len(),
                pred: preds.len(),
            }
            .into());
        }
        for (split, pred) in splits.iter().zip(&preds) {
            let gold: Vec<usize> = split.validation.iter().map(|p| p.label_id).collect();
            rows.push(RunRow {
                run: r,
                task: split.info.name.clone(),
                macro_f1: macro_f1(&gold, pred, split.num_classes())?,
            });
        }
    }
    Ok(RepeatedReport::from_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    #[allow(dead_code)]
    enum E {
        Eval(EvalError),
        Train(TrainError),
    }
    impl From<EvalError> for E {
        fn from(e: EvalError) -> Self {
            E::Eval(e)
        }
    }
    impl From<TrainError> for E {
        fn from(e: TrainError) -> Self {
            E::Train(e)
        }
    }

    fn task(n_per_class: usize) -> (TaskInfo, Vec<CleanPost>) {
        let posts = (0..2 * n_per_class)
            .map(|i| CleanPost {
                id: i.to_string(),
                tokens: vec!["w".into()],
                label_id: i % 2,
                task: "t".into(),
            })
            .collect();
        (
            TaskInfo {
                name: "t".into(),
                labels: vec!["a".into(), "b".into()],
            },
            posts,
        )
    }

    #[test]
    fn constant_classifier_has_zero_variance() {
        let tasks = [task(50)];
        let report = repeated_experiment::<_, E>(&tasks, 10, 0, |_, splits| {
            Ok(splits.iter().map(|s| vec![0; s.validation.len()]).collect())
        })
        .unwrap();
        assert_eq!(report.rows.len(), 10);
        let s = report.summary_for("t").unwrap();
        // Half right: class a F1 = 2/3, class b F1 = 0.
        assert!((s.mean - 1.0 / 3.0).abs() < 1e-12);
        assert!(s.std < 1e-12);
        assert_eq!(s.runs, 10);
    }

    #[test]
    fn std_matches_population_formula() {
        let tasks = [task(10)];
        let mut k = 0;
        let report = repeated_experiment::<_, E>(&tasks, 10, 0, |_, splits| {
            k += 1;
            let v = &splits[0].validation;
            // Get the first k mod 3 validation items right, rest wrong.
            let pred = v
                .iter()
                .enumerate()
                .map(|(i, p)| if i < k % 3 { p.label_id } else { 1 - p.label_id })
                .collect();
            Ok(vec![pred])
        })
        .unwrap();
        let xs: Vec<f64> = report.rows.iter().map(|r| r.macro_f1).collect();
        let mut sum = 0.0;
        for x in &xs {
            sum += x;
        }
        let mean = sum / 10.0;
        let mut ss = 0.0;
        for x in &xs {
            ss += (x - mean) * (x - mean);
        }
        let s = report.summary_for("t").unwrap();
        assert!((s.mean - mean).abs() < 1e-12);
        assert!((s.std - (ss / 10.0).sqrt()).abs() < 1e-12);
        assert!(s.std > 0.0);
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 11);
    }

    #[test]
    fn zero_repetitions() {
        let r = repeated_experiment::<_, E>(&[task(5)], 0, 0, |_, _| Ok(vec![]));
        assert!(matches!(r, Err(E::Eval(EvalError::NoRepetitions))));
    }
}

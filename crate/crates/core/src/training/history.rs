use serde::{Deserialize, Serialize};

use crate::evaluation::ReportEntry;

use super::scheduler::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub task: Task,
    pub batch: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// Number of updates applied before this evaluation.
    pub iteration: usize,
    pub recall_sum: f64,
    pub metrics: Vec<ReportEntry>,
    pub c2i_steps: usize,
    pub c2c_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Patience,
    MaxIterations,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub steps: Vec<StepRecord>,
    pub evals: Vec<EvalRecord>,
    /// Index into `evals` of the best recall sum (earliest on ties).
    pub best: Option<usize>,
    pub stop_reason: Option<StopReason>,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line<'a> {
    Step(&'a StepRecord),
    Eval(&'a EvalRecord),
    Stop {
        reason: Option<StopReason>,
        best_iteration: Option<usize>,
        best_recall_sum: Option<f64>,
    },
}

impl TrainHistory {
    pub fn best_eval(&self) -> Option<&EvalRecord> {
        self.best.map(|i| &self.evals[i])
    }

    /// Appends an evaluation and returns whether it is a new best.
    pub fn record_eval(&mut self, record: EvalRecord) -> bool {
        let improved = self
            .best_eval()
            .is_none_or(|b| record.recall_sum > b.recall_sum);
        self.evals.push(record);
        if improved {
            self.best = Some(self.evals.len() - 1);
        }
        improved
    }

    pub fn c2i_steps(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s.task, Task::C2i { .. }))
            .count()
    }

    pub fn c2c_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.task == Task::C2c).count()
    }

    /// Line-delimited JSON: steps and evaluations in the order they
    /// happened, then a closing stop line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &Line| {
            out.push_str(&serde_json::to_string(line).expect("plain records serialize"));
            out.push('\n');
        };
        let mut evals = self.evals.iter().peekable();
        for step in &self.steps {
            while let Some(e) = evals.next_if(|e| e.iteration < step.iteration) {
                push(&Line::Eval(e));
            }
            push(&Line::Step(step));
        }
        for e in evals {
            push(&Line::Eval(e));
        }
        let best = self.best_eval();
        push(&Line::Stop {
            reason: self.stop_reason,
            best_iteration: best.map(|b| b.iteration),
            best_recall_sum: best.map(|b| b.recall_sum),
        });
        out
    }
}

/// Stop once the last `patience` evaluations all failed to beat the best
/// earlier one.
pub fn evaluate_stopping(history: &TrainHistory, patience: usize) -> StopDecision {
    match history.best {
        Some(best) if history.evals.len() - 1 - best >= patience => StopDecision::Stop,
        _ => StopDecision::Continue,
    }
}

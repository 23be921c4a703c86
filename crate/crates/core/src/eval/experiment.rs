//! End-to-end experiment: rank, select, split, cross-validate, fit, score.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::credibility::{predict_credibility, Verdict};
use super::metrics::{mean_metrics, ConfusionCounts, MeanMetrics, Metrics};
use super::split::{k_fold, make_split};
use super::{cross_credibility, evaluate_dataset, CrossResult};
use crate::corpus::{TopicId, TruthStatus, TweetId};
use crate::error::{Error, Result};
use crate::learn::{
    fit_forest, fit_logreg, select_top_k, Dataset, ForestParams, LogRegModel, LogRegOptions,
};
use crate::pipeline::{EdgeTable, DIFFUSION_COLUMN};

/// Which edges the forest ranking is computed on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankingScope {
    /// One ranking per truth class, from that class's training edges.
    #[default]
    PerClass,
    /// One ranking from the training edges of both classes.
    Pooled,
}

/// Where the diffusion column of credibility test edges comes from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionSource {
    #[default]
    Observed,
    /// Predicted by a diffusion model trained on both classes.
    Predicted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub top_k: usize,
    pub train_frac: f64,
    pub folds: usize,
    pub threshold: f64,
    pub logreg: LogRegOptions,
    /// `seed` here is ignored in favor of the experiment seed.
    pub forest: ForestParams,
    pub ranking: RankingScope,
    pub diffusion_source: DiffusionSource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            top_k: 20,
            train_frac: 0.8,
            folds: 10,
            threshold: 0.5,
            logreg: LogRegOptions::default(),
            forest: ForestParams::default(),
            ranking: RankingScope::PerClass,
            diffusion_source: DiffusionSource::Observed,
        }
    }
}

impl ExperimentConfig {
    fn forest(&self) -> ForestParams {
        ForestParams {
            seed: self.seed,
            ..self.forest
        }
    }

    fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::invalid("top-k", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::invalid(
                "threshold",
                format!("{} not in [0, 1]", self.threshold),
            ));
        }
        if self.folds < 2 {
            return Err(Error::invalid("folds", format!("{} < 2", self.folds)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterTopicReport {
    pub held_out_topic: TopicId,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub status: TruthStatus,
    pub edges: usize,
    pub diffused_fraction: f64,
    pub train_size: usize,
    pub test_size: usize,
    /// Every feature with its importance, most important first.
    pub ranking: Vec<(String, f64)>,
    pub selected: Vec<String>,
    pub cv_folds: Vec<Metrics>,
    pub cv_mean: MeanMetrics,
    pub heldout: Metrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inter_topic: Option<InterTopicReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionReport {
    pub classes: Vec<ClassReport>,
    pub cross: Vec<CrossResult>,
}

impl DiffusionReport {
    pub fn class(&self, status: TruthStatus) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.status == status)
    }
}

/// A diffusion experiment with the final per-class models.
#[derive(Debug, Clone)]
pub struct DiffusionRun {
    pub report: DiffusionReport,
    pub models: BTreeMap<TruthStatus, LogRegModel>,
}

fn forest_ranking(data: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<(String, f64)>> {
    Ok(fit_forest(data, &cfg.forest())?.ranking().entries)
}

fn top_k(ranking: &[(String, f64)], k: usize) -> Result<Vec<String>> {
    select_top_k(
        &crate::learn::FeatureRanking {
            entries: ranking.to_vec(),
        },
        k.min(ranking.len()),
    )
}

fn fit_named(
    data: &Dataset,
    selected: &[String],
    cfg: &ExperimentConfig,
    tag: String,
) -> Result<LogRegModel> {
    let mut model = fit_logreg(&data.select(selected)?, &cfg.logreg)?;
    model.trained_on = Some(tag);
    Ok(model)
}

struct ClassSplit {
    status: TruthStatus,
    table: EdgeTable,
    train: Vec<usize>,
    test: Vec<usize>,
}

fn inter_topic(
    split: &ClassSplit,
    selected: &[String],
    cfg: &ExperimentConfig,
) -> Result<Option<InterTopicReport>> {
    let topics: BTreeSet<&TopicId> = split.table.topic_ids.iter().collect();
    let Some(&last) = topics.iter().next_back() else {
        return Ok(None);
    };
    if topics.len() < 2 {
        return Ok(None);
    }
    let (test, train): (Vec<usize>, Vec<usize>) =
        (0..split.table.len()).partition(|&i| &split.table.topic_ids[i] == last);
    let data = split.table.diffusion_dataset();
    let (tr, te) = (data.subset(&train), data.subset(&test));
    if tr.check_two_classes().is_err() || te.is_empty() {
        return Ok(None);
    }
    let model = fit_named(&tr, selected, cfg, format!("{} inter-topic", split.status))?;
    Ok(Some(InterTopicReport {
        held_out_topic: last.clone(),
        train_size: train.len(),
        test_size: test.len(),
        metrics: evaluate_dataset(&model, &te, cfg.threshold)?,
    }))
}

/// Per truth class: forest ranking on the training split, top-k selection,
/// k-fold CV on the training split, a final fit scored on the held-out
/// split, and a held-out-topic run. Then each class model is scored on the
/// other class's held-out edges.
pub fn run_diffusion(table: &EdgeTable, cfg: &ExperimentConfig) -> Result<DiffusionRun> {
    cfg.validate()?;
    let mut splits = Vec::new();
    for status in TruthStatus::ALL {
        let sub = table.with_status(status);
        if sub.is_empty() {
            return Err(Error::invalid(
                "diffusion experiment",
                format!("no {status} edges"),
            ));
        }
        let plan = make_split(
            sub.len(),
            cfg.train_frac,
            cfg.seed,
            Some(&sub.diffusion_labels()),
        )?;
        splits.push(ClassSplit {
            status,
            table: sub,
            train: plan.train_indices,
            test: plan.test_indices,
        });
    }

    let pooled = match cfg.ranking {
        RankingScope::PerClass => None,
        RankingScope::Pooled => {
            let mut all = splits[0].table.diffusion_dataset().subset(&splits[0].train);
            for s in &splits[1..] {
                let d = s.table.diffusion_dataset().subset(&s.train);
                all.rows.extend(d.rows);
                all.labels.extend(d.labels);
            }
            Some(forest_ranking(&all, cfg)?)
        }
    };

    let mut classes = Vec::new();
    let mut models = BTreeMap::new();
    for s in &splits {
        let data = s.table.diffusion_dataset();
        let train = data.subset(&s.train);
        let test = data.subset(&s.test);
        let ranking = match &pooled {
            Some(r) => r.clone(),
            None => forest_ranking(&train, cfg)?,
        };
        let selected = top_k(&ranking, cfg.top_k)?;

        let plan = k_fold(train.len(), cfg.folds, cfg.seed)?;
        let mut cv_folds = Vec::with_capacity(cfg.folds);
        for i in 0..cfg.folds {
            let (tr, te) = plan.fold(i).expect("fold index in range");
            let m = fit_named(
                &train.subset(&tr),
                &selected,
                cfg,
                format!("{} fold {i}", s.status),
            )?;
            cv_folds.push(evaluate_dataset(&m, &train.subset(&te), cfg.threshold)?);
        }
        let model = fit_named(&train, &selected, cfg, s.status.to_string())?;
        let heldout = evaluate_dataset(&model, &test, cfg.threshold)?;
        classes.push(ClassReport {
            status: s.status,
            edges: s.table.len(),
            diffused_fraction: data.positives() as f64 / data.len() as f64,
            train_size: train.len(),
            test_size: test.len(),
            ranking,
            selected: selected.clone(),
            cv_mean: mean_metrics(&cv_folds).expect("at least two folds"),
            cv_folds,
            heldout,
            inter_topic: inter_topic(s, &selected, cfg)?,
        });
        models.insert(s.status, model);
    }

    let mut cross = Vec::new();
    for s in &splits {
        let trained_on = s.status.other();
        let test = s.table.subset(&s.test);
        cross.push(cross_credibility(
            &models[&trained_on],
            trained_on,
            &test.edges,
            &test.vectors,
            cfg.threshold,
        )?);
    }
    cross.sort_by_key(|c| c.trained_on);

    Ok(DiffusionRun {
        report: DiffusionReport { classes, cross },
        models,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageVerdict {
    pub message_id: TweetId,
    pub actual: TruthStatus,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibilityReport {
    pub with_diffusion: bool,
    pub diffusion_source: DiffusionSource,
    pub selected: Vec<String>,
    /// Per-edge classification of truth status, `True` positive.
    pub edge: Metrics,
    /// Per-message majority vote, `True` positive.
    pub message: Metrics,
    pub ties: usize,
    pub verdicts: Vec<MessageVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub with_diffusion: CredibilityReport,
    pub without_diffusion: CredibilityReport,
    /// F(with) - F(without), edge level.
    pub delta_f_edge: f64,
    /// F(with) - F(without), message level.
    pub delta_f_message: f64,
}

/// Message-level split and feature selection shared by the with/without
/// diffusion variants.
struct CredibilityPlan {
    train: Dataset,
    test: Dataset,
    test_messages: Vec<(TweetId, TruthStatus, Vec<usize>)>,
    selected: Vec<String>,
    train_diffusion: Vec<bool>,
    test_diffusion: Vec<bool>,
    source: DiffusionSource,
}

fn plan_credibility(table: &EdgeTable, cfg: &ExperimentConfig) -> Result<CredibilityPlan> {
    cfg.validate()?;
    let messages: Vec<(String, Vec<usize>)> = table
        .messages()
        .into_iter()
        .map(|(m, idx)| (m.to_string(), idx))
        .collect();
    if messages.len() < 2 {
        return Err(Error::invalid("credibility", "need at least two messages"));
    }
    let status_of = |idx: &[usize]| table.edges[idx[0]].topic_status;
    let is_true: Vec<bool> = messages
        .iter()
        .map(|(_, idx)| status_of(idx) == TruthStatus::True)
        .collect();
    let plan = make_split(messages.len(), cfg.train_frac, cfg.seed, Some(&is_true))?;
    let gather = |which: &[usize]| -> Vec<usize> {
        which
            .iter()
            .flat_map(|&m| messages[m].1.iter().copied())
            .collect()
    };
    let train_idx = gather(&plan.train_indices);
    let test_idx = gather(&plan.test_indices);

    let cred = table.credibility_dataset(None)?;
    let train = cred.subset(&train_idx);
    let test = cred.subset(&test_idx);
    train.check_two_classes()?;
    let selected = top_k(&forest_ranking(&train, cfg)?, cfg.top_k)?;

    let observed = table.diffusion_labels();
    let train_diffusion: Vec<bool> = train_idx.iter().map(|&i| observed[i]).collect();
    let test_diffusion: Vec<bool> = match cfg.diffusion_source {
        DiffusionSource::Observed => test_idx.iter().map(|&i| observed[i]).collect(),
        DiffusionSource::Predicted => {
            let diff = table.diffusion_dataset();
            let diff_train = diff.subset(&train_idx);
            let chosen = top_k(&forest_ranking(&diff_train, cfg)?, cfg.top_k)?;
            let model = fit_named(&diff_train, &chosen, cfg, "pooled".into())?;
            model
                .predict_dataset(&diff.subset(&test_idx))?
                .into_iter()
                .map(|p| p >= cfg.threshold)
                .collect()
        }
    };

    let mut offset = 0;
    let mut test_messages = Vec::new();
    for &m in &plan.test_indices {
        let (id, idx) = &messages[m];
        test_messages.push((
            id.clone(),
            status_of(idx),
            (offset..offset + idx.len()).collect(),
        ));
        offset += idx.len();
    }
    Ok(CredibilityPlan {
        train,
        test,
        test_messages,
        selected,
        train_diffusion,
        test_diffusion,
        source: cfg.diffusion_source,
    })
}

fn diffusion_values(d: &[bool]) -> Vec<f64> {
    d.iter().map(|&x| f64::from(u8::from(x))).collect()
}

fn score_credibility(
    plan: &CredibilityPlan,
    with_diffusion: bool,
    cfg: &ExperimentConfig,
) -> Result<(CredibilityReport, LogRegModel)> {
    let mut selected = plan.selected.clone();
    let (train, test) = if with_diffusion {
        selected.push(DIFFUSION_COLUMN.to_string());
        (
            plan.train
                .with_column(DIFFUSION_COLUMN, &diffusion_values(&plan.train_diffusion))?,
            plan.test
                .with_column(DIFFUSION_COLUMN, &diffusion_values(&plan.test_diffusion))?,
        )
    } else {
        (plan.train.clone(), plan.test.clone())
    };
    let tag = if with_diffusion {
        "credibility"
    } else {
        "credibility without diffusion"
    };
    let model = fit_named(&train, &selected, cfg, tag.into())?;
    let edge = evaluate_dataset(&model, &test, cfg.threshold)?;

    let mut counts = ConfusionCounts::default();
    let mut verdicts = Vec::with_capacity(plan.test_messages.len());
    for (id, actual, idx) in &plan.test_messages {
        let verdict = predict_credibility(&model, &test.subset(idx), cfg.threshold)?;
        counts.record(
            verdict.status == TruthStatus::True,
            *actual == TruthStatus::True,
        );
        verdicts.push(MessageVerdict {
            message_id: id.clone(),
            actual: *actual,
            verdict,
        });
    }
    let report = CredibilityReport {
        with_diffusion,
        diffusion_source: plan.source,
        selected,
        edge,
        message: Metrics::from_counts(counts),
        ties: verdicts.iter().filter(|v| v.verdict.tie).count(),
        verdicts,
    };
    Ok((report, model))
}

/// Message-level split, forest selection on truth labels, then a
/// credibility model with or without the diffusion column.
pub fn run_credibility(
    table: &EdgeTable,
    cfg: &ExperimentConfig,
    with_diffusion: bool,
) -> Result<(CredibilityReport, LogRegModel)> {
    score_credibility(&plan_credibility(table, cfg)?, with_diffusion, cfg)
}

/// Fits the credibility model twice on the same split and features, once
/// with the diffusion column and once without.
pub fn ablate_diffusion_feature(
    table: &EdgeTable,
    cfg: &ExperimentConfig,
) -> Result<AblationReport> {
    let plan = plan_credibility(table, cfg)?;
    let (with, _) = score_credibility(&plan, true, cfg)?;
    let (without, _) = score_credibility(&plan, false, cfg)?;
    Ok(AblationReport {
        delta_f_edge: with.edge.f - without.edge.f,
        delta_f_message: with.message.f - without.message.f,
        with_diffusion: with,
        without_diffusion: without,
    })
}

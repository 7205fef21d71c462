//! Metric computation from a parsed log.

use std::collections::{BTreeMap, BTreeSet};

use super::accuracy::{marked_word_breakdown, role_accuracy};
use super::divergence::{corpus_divergence, snd, Description};
use super::language::{effective_vocabulary, new_words, utterance_length};
use super::logfile::{LogHeader, LogLine};
use super::table::MetricTable;
use crate::error::{invalid, Result};
use crate::learning::Role;
use crate::rng::{derive_seed, label};

pub const ACCURACY: &str = "accuracy";
pub const MARKED_WITH: &str = "accuracy_marked";
pub const MARKED_WITHOUT: &str = "accuracy_unmarked";
pub const OFFLINE_ACCURACY: &str = "offline_accuracy";
pub const UTTERANCE_LENGTH: &str = "utterance_length";
pub const EFFECTIVE_VOCABULARY: &str = "effective_vocabulary";
pub const NEW_WORDS: &str = "new_words";
pub const SND: &str = "snd";
pub const CORPUS_SIMILARITY: &str = "corpus_similarity";

/// Every metric of the log. Bootstrap seeds derive from the header's master
/// seed and the cell, so the table is a pure function of the lines.
/// `word_set` overrides the header's marked words.
pub fn compute_metrics(lines: &[LogLine], word_set: Option<&BTreeSet<String>>) -> Result<MetricTable> {
    let header: &LogHeader = match lines.first() {
        Some(LogLine::Header(h)) => h,
        _ => return Err(invalid("log does not start with a header line")),
    };
    let marked: BTreeSet<String> = match word_set {
        Some(w) => w.clone(),
        None => header.marked_words.iter().cloned().collect(),
    };
    let resamples = header.bootstrap_resamples;
    let cell_seed = |metric: &str, round: u32, system: &str, role: u64| {
        derive_seed(&[header.master_seed, label(metric), u64::from(round), label(system), role])
    };

    type Games<'a> = Vec<(&'a [String], bool)>;
    let mut games: BTreeMap<(u32, &str, Role), Games> = BTreeMap::new();
    let mut evals: BTreeMap<(&str, u32), Vec<(usize, &Description)>> = BTreeMap::new();
    let mut offline: BTreeMap<(u32, &str), Vec<bool>> = BTreeMap::new();
    for line in &lines[1..] {
        match line {
            LogLine::Header(_) => return Err(invalid("more than one header line")),
            LogLine::Interaction { record, words } => games
                .entry((record.round, record.system.as_str(), record.role))
                .or_default()
                .push((words.as_slice(), record.success())),
            LogLine::Eval(e) => evals
                .entry((e.system.as_str(), e.round))
                .or_default()
                .push((e.shape_id, &e.words)),
            LogLine::Offline(o) => offline.entry((o.round, o.system.as_str())).or_default().push(o.success),
        }
    }

    let mut table = MetricTable::default();
    for (&(round, system, role), cell) in &games {
        let role_id = role as u64;
        let outcomes: Vec<bool> = cell.iter().map(|(_, s)| *s).collect();
        let acc = role_accuracy(&outcomes, resamples, cell_seed(ACCURACY, round, system, role_id))?;
        table.push_estimate(round, system, Some(role), ACCURACY, acc);
        if !marked.is_empty() {
            let m = marked_word_breakdown(cell, &marked, resamples, cell_seed("marked", round, system, role_id))?;
            if let Some(e) = m.with {
                table.push_estimate(round, system, Some(role), MARKED_WITH, e);
            }
            if let Some(e) = m.without {
                table.push_estimate(round, system, Some(role), MARKED_WITHOUT, e);
            }
        }
    }
    for (&(round, system), outcomes) in &offline {
        let acc = role_accuracy(outcomes, resamples, cell_seed(OFFLINE_ACCURACY, round, system, 0))?;
        table.push_estimate(round, system, Some(Role::Listener), OFFLINE_ACCURACY, acc);
    }

    let descriptions = |cell: &[(usize, &Description)]| -> Vec<Description> { cell.iter().map(|(_, d)| (*d).clone()).collect() };
    let mut per_system: BTreeMap<&str, Vec<(u32, Vec<Description>)>> = BTreeMap::new();
    for (&(system, round), cell) in &evals {
        let descs = descriptions(cell);
        table.push_value(round, system, None, UTTERANCE_LENGTH, utterance_length(&descs));
        table.push_value(round, system, None, EFFECTIVE_VOCABULARY, effective_vocabulary(&descs) as f64);
        let mut by_shape: BTreeMap<usize, Vec<Description>> = BTreeMap::new();
        for (shape, d) in cell {
            by_shape.entry(*shape).or_default().push((*d).clone());
        }
        if let Ok(v) = snd(&by_shape) {
            table.push_value(round, system, None, SND, v);
        }
        if let Some(reference) = evals.get(&(super::HUMAN_SYSTEM, round)) {
            if system != super::HUMAN_SYSTEM {
                let v = corpus_divergence(&descs, &descriptions(reference))?;
                table.push_value(round, system, None, CORPUS_SIMILARITY, v);
            }
        }
        per_system.entry(system).or_default().push((round, descs));
    }
    for (system, rounds) in per_system {
        let sets: Vec<Vec<Description>> = rounds.iter().map(|(_, d)| d.clone()).collect();
        for ((round, _), fresh) in rounds.iter().zip(new_words(&sets)) {
            table.push_value(*round, system, None, NEW_WORDS, fresh as f64);
        }
    }
    Ok(table)
}

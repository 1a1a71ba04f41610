//! Corpus statistics for generated stories: sentence and word averages and
//! n-gram novelty against a reference corpus.
//!
//! Sentences end at `.`, `!` or `?`. Words are whitespace-separated tokens
//! with leading and trailing punctuation stripped; tokens left empty are
//! dropped. N-grams are taken over each document's lowercased word stream
//! and counted as distinct types.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Score;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no stories to measure")]
    NoStories,
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats<S> {
    pub story_count: usize,
    pub avg_sentences_per_story: S,
    pub avg_words_per_sentence: S,
    pub unique_bigrams: usize,
    pub unique_trigrams: usize,
}

fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| c.is_ascii_punctuation() || matches!(c, '“' | '”' | '‘' | '’')))
        .filter(|t| !t.is_empty())
}

/// Word counts of each sentence in `text`, skipping sentences with no words.
fn sentence_lengths(text: &str) -> Vec<usize> {
    text.split(['.', '!', '?'])
        .map(|s| words(s).count())
        .filter(|&n| n > 0)
        .collect()
}

/// Returns (average sentences per story, average words per sentence).
/// Both averages are over the whole set, not per story.
pub fn story_stats<S: Score, T: AsRef<str>>(stories: &[T]) -> Result<(S, S), MetricsError> {
    if stories.is_empty() {
        return Err(MetricsError::NoStories);
    }
    let (sentences, words) = stories
        .iter()
        .map(|s| sentence_lengths(s.as_ref()))
        .fold((0usize, 0usize), |(s, w), lens| {
            (s + lens.len(), w + lens.iter().sum::<usize>())
        });
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            S::zero()
        } else {
            S::from_usize(num).unwrap_or_else(S::nan) / S::from_usize(den).unwrap_or_else(S::nan)
        }
    };
    Ok((ratio(sentences, stories.len()), ratio(words, sentences)))
}

/// Lowercased word stream used for n-grams.
pub fn tokenize(text: &str) -> Vec<String> {
    words(text).map(str::to_lowercase).collect()
}

fn ngram_set(text: &str, order: usize) -> HashSet<Vec<String>> {
    let tokens = tokenize(text);
    tokens.windows(order).map(<[String]>::to_vec).collect()
}

/// Number of distinct n-grams found in `stories` but nowhere in `reference`.
pub fn unique_ngrams<T: AsRef<str>>(stories: &[T], reference: &str, order: usize) -> Result<usize, MetricsError> {
    if order == 0 {
        return Err(MetricsError::InvalidOrder);
    }
    let known = ngram_set(reference, order);
    let generated: HashSet<Vec<String>> = stories.iter().flat_map(|s| ngram_set(s.as_ref(), order)).collect();
    Ok(generated.difference(&known).count())
}

pub fn corpus_stats<S: Score, T: AsRef<str>>(stories: &[T], reference: &str) -> Result<CorpusStats<S>, MetricsError> {
    let (avg_sentences_per_story, avg_words_per_sentence) = story_stats(stories)?;
    Ok(CorpusStats {
        story_count: stories.len(),
        avg_sentences_per_story,
        avg_words_per_sentence,
        unique_bigrams: unique_ngrams(stories, reference, 2)?,
        unique_trigrams: unique_ngrams(stories, reference, 3)?,
    })
}

impl<S: Score> fmt::Display for CorpusStats<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows = [
            ("Stories", self.story_count.to_string()),
            (
                "Avg. Sent/Story",
                format!("{:.2}", self.avg_sentences_per_story.to_f64_lossy()),
            ),
            (
                "Avg. Words/Sent",
                format!("{:.2}", self.avg_words_per_sentence.to_f64_lossy()),
            ),
            ("Unique Bigrams", self.unique_bigrams.to_string()),
            ("Unique Trigrams", self.unique_trigrams.to_string()),
        ];
        let label_width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let value_width = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        for (label, value) in rows {
            writeln!(f, "{label:<label_width$}  {value:>value_width$}")?;
        }
        Ok(())
    }
}

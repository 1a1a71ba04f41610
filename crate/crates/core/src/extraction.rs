//! Plot-outline extraction.
//!
//! Coreference clusters and relation triples come in as annotations over a
//! source text (see [`parse_annotated_story`] for the fixture grammar); a
//! single character is chosen and the triples whose subject is one of that
//! character's mentions become the ordered plot points of the outline.
//!
//! All offsets are counted in Unicode scalar values, not bytes.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractionError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("integrity error at line {line}: {message}")]
    Integrity { line: usize, message: String },
    #[error("no character clusters to choose from")]
    NoCharacter,
    #[error("unknown character {0:?}")]
    UnknownCharacter(String),
    #[error("character {character:?} has {found} aligned plot point(s); at least 2 are required")]
    InsufficientPlot { character: String, found: usize },
    #[error("invalid outline: {0}")]
    InvalidOutline(String),
}

/// Half-open character range `[start, end)` into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Option<Self> {
        (start < end).then_some(Self { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn overlaps(&self, other: &CharSpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn contains(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl fmt::Display for CharSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub text: String,
    pub span: CharSpan,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefCluster {
    pub canonical_name: String,
    pub mentions: Vec<Mention>,
}

impl CorefCluster {
    /// Builds a cluster, sorting mentions by start and dropping repeated spans.
    /// Returns `None` for an empty mention list.
    pub fn new(canonical_name: impl Into<String>, mut mentions: Vec<Mention>) -> Option<Self> {
        if mentions.is_empty() {
            return None;
        }
        mentions.sort_by_key(|m| m.span);
        mentions.dedup_by_key(|m| m.span);
        Some(Self {
            canonical_name: canonical_name.into(),
            mentions,
        })
    }

    fn first_start(&self) -> usize {
        self.mentions.first().map_or(usize::MAX, |m| m.span.start)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub subject_span: CharSpan,
    pub relation: String,
    #[serde(default)]
    pub object: String,
    pub span: CharSpan,
}

impl Triple {
    /// The subject-relation-object phrase, single-spaced, without punctuation.
    pub fn phrase(&self) -> String {
        [&self.subject, &self.relation, &self.object]
            .iter()
            .flat_map(|part| part.split_whitespace())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotPoint {
    #[serde(flatten)]
    pub triple: Triple,
    pub order_index: usize,
    /// Filled from the outline's character on load.
    #[serde(skip)]
    pub subject_canonical: String,
}

impl PlotPoint {
    pub fn phrase(&self) -> String {
        self.triple.phrase()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlotOutline {
    pub character: String,
    pub points: Vec<PlotPoint>,
    #[serde(default)]
    pub source_length: usize,
}

impl PlotOutline {
    pub fn from_json(json: &str) -> Result<Self, ExtractionError> {
        let mut outline: PlotOutline =
            serde_json::from_str(json).map_err(|e| ExtractionError::InvalidOutline(e.to_string()))?;
        for point in &mut outline.points {
            point.subject_canonical = outline.character.clone();
        }
        outline.validate()?;
        Ok(outline)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outline serialization is infallible")
    }

    pub fn validate(&self) -> Result<(), ExtractionError> {
        if self.points.len() < 2 {
            return Err(ExtractionError::InsufficientPlot {
                character: self.character.clone(),
                found: self.points.len(),
            });
        }
        for (i, point) in self.points.iter().enumerate() {
            if point.order_index != i {
                return Err(ExtractionError::InvalidOutline(format!(
                    "point {i} carries order_index {}",
                    point.order_index
                )));
            }
            if point.triple.subject_span.is_empty() {
                return Err(ExtractionError::InvalidOutline(format!(
                    "point {i} has an empty subject span"
                )));
            }
            if self.source_length > 0 && point.triple.subject_span.end > self.source_length {
                return Err(ExtractionError::InvalidOutline(format!(
                    "point {i} subject span {} exceeds source length {}",
                    point.triple.subject_span, self.source_length
                )));
            }
        }
        let ordered = self
            .points
            .windows(2)
            .all(|w| w[0].triple.subject_span.start <= w[1].triple.subject_span.start);
        if !ordered {
            return Err(ExtractionError::InvalidOutline(
                "points are not ordered by subject position".into(),
            ));
        }
        Ok(())
    }
}

/// Output of [`parse_annotated_story`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotatedStory {
    pub text: String,
    pub clusters: Vec<CorefCluster>,
    pub triples: Vec<Triple>,
}

impl AnnotatedStory {
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// Character-offset view over a string.
struct SourceText<'a> {
    text: &'a str,
    // byte offset of every char boundary, plus one past the end
    boundaries: Vec<usize>,
}

impl<'a> SourceText<'a> {
    fn new(text: &'a str) -> Self {
        let mut boundaries: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        boundaries.push(text.len());
        Self { text, boundaries }
    }

    fn char_len(&self) -> usize {
        self.boundaries.len() - 1
    }

    fn slice(&self, span: CharSpan) -> Option<&'a str> {
        if span.end > self.char_len() || span.is_empty() {
            return None;
        }
        Some(&self.text[self.boundaries[span.start]..self.boundaries[span.end]])
    }
}

/// Parses the line-oriented annotation format:
///
/// ```text
/// #TEXT
/// <story lines, joined with '\n'>
/// #CLUSTER <name>
/// mention <start> <end> [| <text>]
/// #TRIPLE <subj_start> <subj_end> <trip_start> <trip_end> | <subject> | <relation> | <object>
/// ```
///
/// The text block runs until the next `#CLUSTER`, `#TRIPLE` or `#TEXT`
/// directive. Outside it, blank lines are ignored. Every span is checked
/// against the reconstructed text once the whole document has been read.
pub fn parse_annotated_story(document: &str) -> Result<AnnotatedStory, ExtractionError> {
    enum Section {
        Preamble,
        Text,
        Cluster,
        Triples,
    }

    let mut section = Section::Preamble;
    let mut text_lines: Vec<&str> = Vec::new();
    let mut seen_text = false;
    // (name, header line, mentions with their line and optional claimed text)
    type RawCluster = (String, usize, Vec<(usize, CharSpan, Option<String>)>);
    let mut clusters: Vec<RawCluster> = Vec::new();
    let mut triples: Vec<(usize, Triple)> = Vec::new();

    for (idx, raw) in document.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let directive = directive_of(line);

        if matches!(section, Section::Text) && directive.is_none() {
            text_lines.push(line);
            continue;
        }

        match directive {
            Some(Directive::Text) => {
                if seen_text {
                    return Err(parse_err(line_no, 1, "duplicate #TEXT block"));
                }
                if !line.trim_start_matches("#TEXT").trim().is_empty() {
                    return Err(parse_err(line_no, 6, "#TEXT takes no arguments"));
                }
                seen_text = true;
                section = Section::Text;
            }
            Some(Directive::Cluster) => {
                let name = line["#CLUSTER".len()..].trim();
                if name.is_empty() {
                    return Err(parse_err(line_no, 9, "#CLUSTER requires a name"));
                }
                clusters.push((name.to_string(), line_no, Vec::new()));
                section = Section::Cluster;
            }
            Some(Directive::Triple) => {
                triples.push((line_no, parse_triple_line(line, line_no)?));
                section = Section::Triples;
            }
            None => {
                let trimmed = line.trim();
                if trimmed.is_empty() {
                    continue;
                }
                match section {
                    Section::Cluster if trimmed.starts_with("mention") => {
                        let (span, text) = parse_mention_line(line, line_no)?;
                        clusters
                            .last_mut()
                            .expect("cluster section implies a cluster")
                            .2
                            .push((line_no, span, text));
                    }
                    _ => {
                        let column = line.len() - line.trim_start().len() + 1;
                        return Err(parse_err(line_no, column, "unexpected content"));
                    }
                }
            }
        }
    }

    let text = text_lines.join("\n");
    let source = SourceText::new(&text);

    let mut out_clusters = Vec::with_capacity(clusters.len());
    for (name, header_line, raw_mentions) in clusters {
        let mut mentions = Vec::with_capacity(raw_mentions.len());
        for (line, span, claimed) in raw_mentions {
            let actual = source.slice(span).ok_or_else(|| ExtractionError::Integrity {
                line,
                message: format!("mention span {span} lies outside the text"),
            })?;
            if let Some(claimed) = claimed {
                if claimed != actual {
                    return Err(ExtractionError::Integrity {
                        line,
                        message: format!("mention text {claimed:?} does not match source {actual:?}"),
                    });
                }
            }
            mentions.push(Mention {
                text: actual.to_string(),
                span,
            });
        }
        let cluster = CorefCluster::new(name.clone(), mentions).ok_or_else(|| ExtractionError::Integrity {
            line: header_line,
            message: format!("cluster {name:?} has no mentions"),
        })?;
        out_clusters.push(cluster);
    }

    let mut out_triples = Vec::with_capacity(triples.len());
    for (line, triple) in triples {
        for span in [triple.subject_span, triple.span] {
            if source.slice(span).is_none() {
                return Err(ExtractionError::Integrity {
                    line,
                    message: format!("span {span} lies outside the text"),
                });
            }
        }
        if !triple.span.contains(&triple.subject_span) {
            return Err(ExtractionError::Integrity {
                line,
                message: "subject span is not contained in the triple span".into(),
            });
        }
        let actual = source.slice(triple.subject_span).unwrap_or_default();
        if actual != triple.subject {
            return Err(ExtractionError::Integrity {
                line,
                message: format!("subject {:?} does not match source {actual:?}", triple.subject),
            });
        }
        out_triples.push(triple);
    }

    Ok(AnnotatedStory {
        text,
        clusters: out_clusters,
        triples: out_triples,
    })
}

#[derive(Clone, Copy)]
enum Directive {
    Text,
    Cluster,
    Triple,
}

fn directive_of(line: &str) -> Option<Directive> {
    match line.split_whitespace().next() {
        Some("#TEXT") if line.starts_with('#') => Some(Directive::Text),
        Some("#CLUSTER") if line.starts_with('#') => Some(Directive::Cluster),
        Some("#TRIPLE") if line.starts_with('#') => Some(Directive::Triple),
        _ => None,
    }
}

fn parse_err(line: usize, column: usize, message: &str) -> ExtractionError {
    ExtractionError::Parse {
        line,
        column,
        message: message.to_string(),
    }
}

/// Splits whitespace-separated fields, remembering each field's 1-based column.
fn fields_with_columns(s: &str, base_column: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(st)) => {
                out.push((st, &s[st..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(st) = start {
        out.push((st, &s[st..]));
    }
    out.into_iter()
        .map(|(byte, field)| (base_column + s[..byte].chars().count(), field))
        .collect()
}

fn parse_offset(
    field: Option<&(usize, &str)>,
    line: usize,
    fallback_column: usize,
    what: &str,
) -> Result<usize, ExtractionError> {
    let (column, raw) = field.ok_or_else(|| parse_err(line, fallback_column, &format!("missing {what}")))?;
    raw.parse::<usize>().map_err(|_| {
        parse_err(
            line,
            *column,
            &format!("{what} must be a non-negative integer, got {raw:?}"),
        )
    })
}

fn make_span(start: usize, end: usize, line: usize, column: usize) -> Result<CharSpan, ExtractionError> {
    CharSpan::new(start, end)
        .ok_or_else(|| parse_err(line, column, &format!("span start {start} must be below end {end}")))
}

fn parse_mention_line(line: &str, line_no: usize) -> Result<(CharSpan, Option<String>), ExtractionError> {
    let (head, text) = match line.split_once('|') {
        Some((head, text)) => (head, Some(text.trim().to_string())),
        None => (line, None),
    };
    let fields = fields_with_columns(head, 1);
    if fields.len() > 3 {
        return Err(parse_err(
            line_no,
            fields[3].0,
            "unexpected field after mention offsets",
        ));
    }
    let end_col = head.chars().count() + 1;
    let start = parse_offset(fields.get(1), line_no, end_col, "mention start")?;
    let end = parse_offset(fields.get(2), line_no, end_col, "mention end")?;
    Ok((make_span(start, end, line_no, fields[1].0)?, text))
}

fn parse_triple_line(line: &str, line_no: usize) -> Result<Triple, ExtractionError> {
    let mut parts = line.splitn(4, '|');
    let head = parts.next().unwrap_or_default();
    let fields = fields_with_columns(head, 1);
    let end_col = head.chars().count() + 1;
    if fields.len() > 5 {
        return Err(parse_err(line_no, fields[5].0, "unexpected field before '|'"));
    }
    let subj_start = parse_offset(fields.get(1), line_no, end_col, "subject start")?;
    let subj_end = parse_offset(fields.get(2), line_no, end_col, "subject end")?;
    let trip_start = parse_offset(fields.get(3), line_no, end_col, "triple start")?;
    let trip_end = parse_offset(fields.get(4), line_no, end_col, "triple end")?;

    let line_end = line.chars().count() + 1;
    let subject = parts
        .next()
        .map(str::trim)
        .ok_or_else(|| parse_err(line_no, line_end, "missing '| subject'"))?;
    let relation = parts
        .next()
        .map(str::trim)
        .ok_or_else(|| parse_err(line_no, line_end, "missing '| relation'"))?;
    let object = parts
        .next()
        .map(str::trim)
        .ok_or_else(|| parse_err(line_no, line_end, "missing '| object'"))?;
    if subject.is_empty() {
        return Err(parse_err(line_no, end_col, "empty subject"));
    }
    if relation.is_empty() {
        return Err(parse_err(line_no, end_col, "empty relation"));
    }

    Ok(Triple {
        subject: subject.to_string(),
        subject_span: make_span(subj_start, subj_end, line_no, fields[1].0)?,
        relation: relation.to_string(),
        object: object.to_string(),
        span: make_span(trip_start, trip_end, line_no, fields[3].0)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ClusterStrategy {
    /// Most mentions; ties go to the earliest first mention.
    #[default]
    Largest,
    /// Uniform seeded draw.
    Random,
    ByName(String),
}

impl std::str::FromStr for ClusterStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "largest" => Ok(Self::Largest),
            "random" => Ok(Self::Random),
            _ => match s.strip_prefix("name:") {
                Some(name) if !name.is_empty() => Ok(Self::ByName(name.to_string())),
                _ => Err(format!(
                    "unknown cluster strategy {s:?} (expected largest, random or name:<x>)"
                )),
            },
        }
    }
}

impl fmt::Display for ClusterStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Largest => f.write_str("largest"),
            Self::Random => f.write_str("random"),
            Self::ByName(name) => write!(f, "name:{name}"),
        }
    }
}

pub fn select_cluster<'a>(
    clusters: &'a [CorefCluster],
    strategy: &ClusterStrategy,
    seed: u64,
) -> Result<&'a CorefCluster, ExtractionError> {
    if clusters.is_empty() {
        return Err(ExtractionError::NoCharacter);
    }
    match strategy {
        ClusterStrategy::Largest => Ok(clusters
            .iter()
            .min_by_key(|c| (std::cmp::Reverse(c.mentions.len()), c.first_start()))
            .expect("non-empty")),
        ClusterStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(&clusters[rng.gen_range(0..clusters.len())])
        }
        ClusterStrategy::ByName(name) => clusters
            .iter()
            .find(|c| &c.canonical_name == name)
            .ok_or_else(|| ExtractionError::UnknownCharacter(name.clone())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanMatch {
    /// Subject and mention spans share at least one character.
    #[default]
    Overlap,
    /// Subject and mention spans are identical.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignOptions {
    pub span_match: SpanMatch,
    /// Replace pronoun subjects with the cluster's canonical name.
    pub rewrite_pronouns: bool,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            span_match: SpanMatch::Overlap,
            rewrite_pronouns: true,
        }
    }
}

const PRONOUNS: &[&str] = &[
    "he",
    "she",
    "they",
    "it",
    "him",
    "her",
    "them",
    "his",
    "hers",
    "its",
    "their",
    "theirs",
    "i",
    "me",
    "my",
    "we",
    "us",
    "our",
    "you",
    "your",
    "himself",
    "herself",
    "themselves",
    "itself",
];

fn is_pronoun(subject: &str) -> bool {
    let lower = subject.trim().to_lowercase();
    PRONOUNS.contains(&lower.as_str())
}

/// Selects the triples whose subject is a mention of `cluster`, ordered by
/// subject position and deduplicated on (subject span, relation, object).
///
/// The result does not depend on the order of `triples`: candidates are
/// sorted on their full content before duplicates are dropped.
pub fn align_plot_points(
    cluster: &CorefCluster,
    triples: &[Triple],
    options: &AlignOptions,
    source_length: usize,
) -> Result<PlotOutline, ExtractionError> {
    let matches = |triple: &Triple| {
        cluster.mentions.iter().any(|m| match options.span_match {
            SpanMatch::Overlap => m.span.overlaps(&triple.subject_span),
            SpanMatch::Exact => m.span == triple.subject_span,
        })
    };

    let mut aligned: Vec<&Triple> = triples.iter().filter(|t| matches(t)).collect();
    aligned.sort_by(|a, b| {
        (a.subject_span, a.span, &a.relation, &a.object, &a.subject).cmp(&(
            b.subject_span,
            b.span,
            &b.relation,
            &b.object,
            &b.subject,
        ))
    });
    aligned.dedup_by(|b, a| a.subject_span == b.subject_span && a.relation == b.relation && a.object == b.object);

    if aligned.len() < 2 {
        return Err(ExtractionError::InsufficientPlot {
            character: cluster.canonical_name.clone(),
            found: aligned.len(),
        });
    }

    let points = aligned
        .into_iter()
        .enumerate()
        .map(|(order_index, triple)| {
            let mut triple = triple.clone();
            if options.rewrite_pronouns && is_pronoun(&triple.subject) {
                triple.subject = cluster.canonical_name.clone();
            }
            PlotPoint {
                triple,
                order_index,
                subject_canonical: cluster.canonical_name.clone(),
            }
        })
        .collect();

    Ok(PlotOutline {
        character: cluster.canonical_name.clone(),
        points,
        source_length,
    })
}

/// Parse, select and align in one step.
pub fn extract_outline(
    document: &str,
    strategy: &ClusterStrategy,
    seed: u64,
    options: &AlignOptions,
) -> Result<PlotOutline, ExtractionError> {
    let story = parse_annotated_story(document)?;
    let cluster = select_cluster(&story.clusters, strategy, seed)?;
    align_plot_points(cluster, &story.triples, options, story.char_len())
}

#[cfg(test)]
mod tests {
    use super::*;

    // "Anna found a key. Anna opened the door. The door creaked."
    //  0         1         2         3         4         5
    //  0123456789012345678901234567890123456789012345678901234567
    const MINI: &str = "#TEXT
Anna found a key. Anna opened the door. The door creaked.
#CLUSTER Anna
mention 0 4 | Anna
mention 18 22 | Anna
#CLUSTER door
mention 40 48
#TRIPLE 0 4 0 16 | Anna | found | a key
#TRIPLE 18 22 18 38 | Anna | opened | the door
#TRIPLE 40 48 40 56 | The door | creaked |
";

    #[test]
    fn parses_mini_fixture() {
        let story = parse_annotated_story(MINI).unwrap();
        assert_eq!(story.text, "Anna found a key. Anna opened the door. The door creaked.");
        assert_eq!(story.clusters.len(), 2);
        assert_eq!(story.clusters[0].mentions.len(), 2);
        assert_eq!(story.clusters[1].mentions[0].text, "The door");
        assert_eq!(story.triples.len(), 3);
        assert_eq!(story.triples[2].object, "");
    }

    #[test]
    fn empty_document_is_empty() {
        let story = parse_annotated_story("").unwrap();
        assert!(story.text.is_empty());
        assert!(story.clusters.is_empty());
        assert!(story.triples.is_empty());
    }

    #[test]
    fn mention_text_mismatch_is_integrity_error() {
        let doc = "#TEXT\nAnna ran.\n#CLUSTER Anna\nmention 0 4 | Anne\n";
        let err = parse_annotated_story(doc).unwrap_err();
        assert!(matches!(err, ExtractionError::Integrity { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn subject_text_mismatch_is_integrity_error() {
        let doc = "#TEXT\nAnna ran.\n#TRIPLE 0 4 0 8 | Bob | ran |\n";
        assert!(matches!(
            parse_annotated_story(doc),
            Err(ExtractionError::Integrity { line: 3, .. })
        ));
    }

    #[test]
    fn out_of_range_span_is_integrity_error() {
        let doc = "#TEXT\nAnna ran.\n#CLUSTER Anna\nmention 0 40\n";
        assert!(matches!(
            parse_annotated_story(doc),
            Err(ExtractionError::Integrity { line: 4, .. })
        ));
    }

    #[test]
    fn malformed_offsets_report_line_and_column() {
        let doc = "#TEXT\nAnna ran.\n#CLUSTER Anna\nmention zero 4\n";
        assert_eq!(
            parse_annotated_story(doc).unwrap_err(),
            ExtractionError::Parse {
                line: 4,
                column: 9,
                message: "mention start must be a non-negative integer, got \"zero\"".into()
            }
        );
        let doc = "#TEXT\nAnna ran.\n#TRIPLE 0 4 0 8 | Anna\n";
        assert!(matches!(
            parse_annotated_story(doc),
            Err(ExtractionError::Parse { line: 3, .. })
        ));
        let doc = "#TEXT\nx\n#CLUSTER A\nmention 3 3\n";
        assert!(matches!(
            parse_annotated_story(doc),
            Err(ExtractionError::Parse { line: 4, column: 9, .. })
        ));
    }

    #[test]
    fn stray_content_outside_text_is_rejected() {
        let doc = "hello\n#TEXT\nx\n";
        assert!(matches!(
            parse_annotated_story(doc),
            Err(ExtractionError::Parse { line: 1, column: 1, .. })
        ));
    }

    #[test]
    fn multiline_text_and_unicode_offsets() {
        let doc = "#TEXT\nZoë sat.\nZoë slept.\n#CLUSTER Zoë\nmention 0 3 | Zoë\nmention 9 12 | Zoë\n";
        let story = parse_annotated_story(doc).unwrap();
        assert_eq!(story.text, "Zoë sat.\nZoë slept.");
        assert_eq!(story.char_len(), 19);
        assert_eq!(story.clusters[0].mentions[1].span, CharSpan { start: 9, end: 12 });
    }

    #[test]
    fn select_largest_prefers_size_then_position() {
        let mk = |name: &str, starts: &[usize]| {
            CorefCluster::new(
                name,
                starts
                    .iter()
                    .map(|&s| Mention {
                        text: name.into(),
                        span: CharSpan { start: s, end: s + 1 },
                    })
                    .collect(),
            )
            .unwrap()
        };
        let clusters = vec![mk("b", &[5, 6]), mk("a", &[1, 2, 3, 4, 9]), mk("c", &[0, 7])];
        assert_eq!(
            select_cluster(&clusters, &ClusterStrategy::Largest, 0)
                .unwrap()
                .canonical_name,
            "a"
        );
        let tied = vec![mk("b", &[5, 6]), mk("c", &[0, 7])];
        assert_eq!(
            select_cluster(&tied, &ClusterStrategy::Largest, 0)
                .unwrap()
                .canonical_name,
            "c"
        );
    }

    #[test]
    fn select_random_is_seeded() {
        let story = parse_annotated_story(MINI).unwrap();
        for seed in 0..20 {
            let a = select_cluster(&story.clusters, &ClusterStrategy::Random, seed).unwrap();
            let b = select_cluster(&story.clusters, &ClusterStrategy::Random, seed).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn select_errors() {
        assert_eq!(
            select_cluster(&[], &ClusterStrategy::Largest, 0),
            Err(ExtractionError::NoCharacter)
        );
        let story = parse_annotated_story(MINI).unwrap();
        assert_eq!(
            select_cluster(&story.clusters, &ClusterStrategy::ByName("Bob".into()), 0),
            Err(ExtractionError::UnknownCharacter("Bob".into()))
        );
        let anna = select_cluster(&story.clusters, &ClusterStrategy::ByName("Anna".into()), 0).unwrap();
        assert_eq!(anna.mentions.len(), 2);
    }

    #[test]
    fn strategy_parses() {
        assert_eq!("largest".parse::<ClusterStrategy>().unwrap(), ClusterStrategy::Largest);
        assert_eq!(
            "name:Anna".parse::<ClusterStrategy>().unwrap(),
            ClusterStrategy::ByName("Anna".into())
        );
        assert!("name:".parse::<ClusterStrategy>().is_err());
        assert_eq!(ClusterStrategy::ByName("X".into()).to_string(), "name:X");
    }

    #[test]
    fn aligns_mini_outline() {
        let story = parse_annotated_story(MINI).unwrap();
        let outline = align_plot_points(
            &story.clusters[0],
            &story.triples,
            &AlignOptions::default(),
            story.char_len(),
        )
        .unwrap();
        let phrases: Vec<_> = outline.points.iter().map(PlotPoint::phrase).collect();
        assert_eq!(phrases, ["Anna found a key", "Anna opened the door"]);
        assert_eq!(outline.points[1].order_index, 1);
        assert_eq!(outline.source_length, 57);
    }

    #[test]
    fn unaligned_cluster_is_insufficient() {
        let story = parse_annotated_story(MINI).unwrap();
        let stranger = CorefCluster::new(
            "ghost",
            vec![Mention {
                text: "key".into(),
                span: CharSpan { start: 13, end: 16 },
            }],
        )
        .unwrap();
        assert!(matches!(
            align_plot_points(&stranger, &story.triples, &AlignOptions::default(), 57),
            Err(ExtractionError::InsufficientPlot { found: 0, .. })
        ));
        // the door cluster aligns a single triple
        assert!(matches!(
            align_plot_points(&story.clusters[1], &story.triples, &AlignOptions::default(), 57),
            Err(ExtractionError::InsufficientPlot { found: 1, .. })
        ));
    }

    #[test]
    fn duplicate_triples_appear_once() {
        let story = parse_annotated_story(MINI).unwrap();
        let mut triples = story.triples.clone();
        triples.push(story.triples[0].clone());
        let outline = align_plot_points(&story.clusters[0], &triples, &AlignOptions::default(), 57).unwrap();
        assert_eq!(outline.points.len(), 2);
    }

    #[test]
    fn exact_mode_is_stricter() {
        let cluster = CorefCluster::new(
            "Anna",
            vec![
                Mention {
                    text: "Anna".into(),
                    span: CharSpan { start: 0, end: 4 },
                },
                Mention {
                    text: "Anna".into(),
                    span: CharSpan { start: 18, end: 22 },
                },
            ],
        )
        .unwrap();
        let story = parse_annotated_story(MINI).unwrap();
        let mut triples = story.triples.clone();
        // subject span "Anna " over-extends the mention
        triples[1].subject_span = CharSpan { start: 18, end: 23 };
        let loose = align_plot_points(&cluster, &triples, &AlignOptions::default(), 57).unwrap();
        assert_eq!(loose.points.len(), 2);
        let exact = AlignOptions {
            span_match: SpanMatch::Exact,
            ..Default::default()
        };
        assert!(align_plot_points(&cluster, &triples, &exact, 57).is_err());
    }

    #[test]
    fn pronoun_subjects_are_rewritten_when_enabled() {
        let doc = "#TEXT\nHolmes left. He called Jones.\n#CLUSTER Holmes\nmention 0 6\nmention 13 15\n\
#TRIPLE 0 6 0 11 | Holmes | left |\n#TRIPLE 13 15 13 28 | He | called | Jones\n";
        let story = parse_annotated_story(doc).unwrap();
        let outline = align_plot_points(
            &story.clusters[0],
            &story.triples,
            &AlignOptions::default(),
            story.char_len(),
        )
        .unwrap();
        assert_eq!(outline.points[1].phrase(), "Holmes called Jones");
        let keep = AlignOptions {
            rewrite_pronouns: false,
            ..Default::default()
        };
        let outline = align_plot_points(&story.clusters[0], &story.triples, &keep, story.char_len()).unwrap();
        assert_eq!(outline.points[1].phrase(), "He called Jones");
        assert_eq!(outline.points[1].subject_canonical, "Holmes");
    }

    #[test]
    fn outline_json_round_trip_restores_canonical_subject() {
        let outline = extract_outline(MINI, &ClusterStrategy::Largest, 0, &AlignOptions::default()).unwrap();
        let json = outline.to_json();
        assert!(json.contains("\"subject_span\""));
        assert!(json.contains("\"order_index\""));
        let back = PlotOutline::from_json(&json).unwrap();
        assert_eq!(back, outline);
    }

    #[test]
    fn outline_json_with_one_point_is_insufficient() {
        let json = r#"{"character":"A","points":[{"subject":"A","relation":"ran","object":"",
            "subject_span":{"start":0,"end":1},"span":{"start":0,"end":5},"order_index":0}]}"#;
        assert!(matches!(
            PlotOutline::from_json(json),
            Err(ExtractionError::InsufficientPlot { found: 1, .. })
        ));
    }
}

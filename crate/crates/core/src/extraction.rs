//! Selection of direction-verified sentence pairs.
//!
//! A link qualifies when it is 1-to-1, its source sentence carries no
//! language attribute, its target sentence carries a language attribute
//! equal to the source corpus language, and the source speaker's normalized
//! name is on the whitelist.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{AlignmentLink, Corpus, LangCode, SentenceKey, SentenceRef};
use crate::par::Execution;

/// Case-folds, strips diacritics and collapses whitespace.
pub fn normalize_name(raw: &str) -> String {
    let folded: String = raw
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect();
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpeakerWhitelist {
    names: BTreeSet<String>,
}

impl SpeakerWhitelist {
    pub fn new<S: AsRef<str>>(raw: impl IntoIterator<Item = S>) -> Self {
        SpeakerWhitelist {
            names: raw
                .into_iter()
                .map(|n| normalize_name(n.as_ref()))
                .filter(|n| !n.is_empty())
                .collect(),
        }
    }

    /// One raw name per line; blank lines are ignored.
    pub fn from_reader<R: BufRead>(input: R) -> std::io::Result<Self> {
        let lines = input.lines().collect::<Result<Vec<_>, _>>()?;
        Ok(SpeakerWhitelist::new(lines))
    }

    pub fn contains(&self, raw: &str) -> bool {
        self.names.contains(&normalize_name(raw))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

/// Ordered language pair, rendered as `en-de`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Direction {
    pub from: LangCode,
    pub to: LangCode,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.from, self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PairId(pub String);

impl fmt::Display for PairId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PairId {
    fn from(s: &str) -> Self {
        PairId(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencePair {
    pub id: PairId,
    pub source: SentenceKey,
    pub target: SentenceKey,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub genre: Option<String>,
}

impl SentencePair {
    /// Pair ids are `<direction>:<source doc>:<source sentence>`, unique as
    /// long as the sentence alignment is a partition.
    pub fn derive_id(direction: &Direction, source: &SentenceRef) -> PairId {
        PairId(format!("{}:{}:{}", direction, source.document, source.sentence))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    NotOneToOne,
    SourceHasLangAttr,
    TargetLangAttrMissingOrWrong,
    SpeakerNotWhitelisted,
    SpeakerMissing,
}

impl SkipReason {
    pub const ALL: [SkipReason; 5] = [
        SkipReason::NotOneToOne,
        SkipReason::SourceHasLangAttr,
        SkipReason::TargetLangAttrMissingOrWrong,
        SkipReason::SpeakerNotWhitelisted,
        SkipReason::SpeakerMissing,
    ];

    pub fn code(self) -> &'static str {
        match self {
            SkipReason::NotOneToOne => "not_one_to_one",
            SkipReason::SourceHasLangAttr => "source_has_lang_attr",
            SkipReason::TargetLangAttrMissingOrWrong => "target_lang_attr_missing_or_wrong",
            SkipReason::SpeakerNotWhitelisted => "speaker_not_whitelisted",
            SkipReason::SpeakerMissing => "speaker_missing",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// A link that produced no pair. `reasons` lists every failed condition;
/// a link that is not 1-to-1 is reported with that reason alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub link_index: usize,
    pub link: AlignmentLink,
    pub reasons: Vec<SkipReason>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    pub pairs: Vec<SentencePair>,
    pub skipped: Vec<SkipReport>,
}

impl Extraction {
    /// Number of skipped links carrying `reason`.
    pub fn tally(&self, reason: SkipReason) -> usize {
        self.skipped.iter().filter(|s| s.reasons.contains(&reason)).count()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractionError {
    #[error("link {link_index} references {side} sentence {sentence} which does not exist")]
    DanglingReference {
        link_index: usize,
        side: &'static str,
        sentence: SentenceRef,
    },
}

pub fn select_original_pairs(
    source: &Corpus,
    target: &Corpus,
    links: &[AlignmentLink],
    whitelist: &SpeakerWhitelist,
) -> Result<Extraction, ExtractionError> {
    select_original_pairs_with(source, target, links, whitelist, Execution::default())
}

enum Outcome {
    Pair(SentencePair),
    Skip(SkipReport),
}

pub fn select_original_pairs_with(
    source: &Corpus,
    target: &Corpus,
    links: &[AlignmentLink],
    whitelist: &SpeakerWhitelist,
    exec: Execution,
) -> Result<Extraction, ExtractionError> {
    let source_index = source.index();
    let target_index = target.index();
    let direction = Direction {
        from: source.language.clone(),
        to: target.language.clone(),
    };
    let indexed: Vec<(usize, &AlignmentLink)> = links.iter().enumerate().collect();

    let outcomes = exec.try_map(&indexed, |&(link_index, link)| {
        let lookup = |side: &'static str, r: &SentenceRef| {
            let index = if side == "source" { &source_index } else { &target_index };
            index
                .get(&(r.document.as_str(), r.sentence.as_str()))
                .copied()
                .ok_or_else(|| ExtractionError::DanglingReference {
                    link_index,
                    side,
                    sentence: r.clone(),
                })
        };
        let src: Vec<_> = link
            .source_ids
            .iter()
            .map(|r| lookup("source", r))
            .collect::<Result<_, _>>()?;
        let tgt: Vec<_> = link
            .target_ids
            .iter()
            .map(|r| lookup("target", r))
            .collect::<Result<_, _>>()?;

        let skip = |reasons| {
            Ok(Outcome::Skip(SkipReport {
                link_index,
                link: link.clone(),
                reasons,
            }))
        };
        if src.len() != 1 || tgt.len() != 1 {
            return skip(vec![SkipReason::NotOneToOne]);
        }
        let (s, t) = (src[0], tgt[0]);
        let mut reasons = Vec::new();
        if s.language_attr.is_some() {
            reasons.push(SkipReason::SourceHasLangAttr);
        }
        if t.language_attr.as_ref() != Some(&source.language) {
            reasons.push(SkipReason::TargetLangAttrMissingOrWrong);
        }
        match &s.speaker_name {
            None => reasons.push(SkipReason::SpeakerMissing),
            Some(name) if !whitelist.contains(name) => reasons.push(SkipReason::SpeakerNotWhitelisted),
            Some(_) => {}
        }
        if !reasons.is_empty() {
            return skip(reasons);
        }
        let source_ref = &link.source_ids[0];
        Ok(Outcome::Pair(SentencePair {
            id: SentencePair::derive_id(&direction, source_ref),
            source: SentenceKey::new(source.language.clone(), source_ref),
            target: SentenceKey::new(target.language.clone(), &link.target_ids[0]),
            direction: direction.clone(),
            speaker_name: s.speaker_name.clone(),
            genre: None,
        }))
    })?;

    let mut result = Extraction::default();
    for outcome in outcomes {
        match outcome {
            Outcome::Pair(p) => result.pairs.push(p),
            Outcome::Skip(s) => result.skipped.push(s),
        }
    }
    Ok(result)
}

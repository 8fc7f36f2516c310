//! The annotation project and its single-file store.
//!
//! A project bundles up to two corpora, their sentence alignment, the
//! extracted sentence pairs, the predicate registry, per-sentence
//! predicate-argument lists and the transeme alignments. It is persisted as
//! canonical JSON (sorted keys, two-space indent, LF endings), so equal
//! projects serialize to identical bytes.
//!
//! Every write goes through [`apply`]: the edit runs on a copy, the copy is
//! re-checked for referential integrity and rule violations, and only then
//! does it replace the committed state with `revision + 1`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{check_partition, AlignmentLink, Corpus, CorpusError, LangCode, Sentence, SentenceKey};
use crate::extraction::{
    select_original_pairs_with, Extraction, ExtractionError, PairId, SentencePair, SpeakerWhitelist,
};
use crate::par::Execution;
use crate::pas::{
    check_span, default_tag_inventory, is_valid_role_name, suggest_roles, IdAllocator, InstanceId, NewPredicateType,
    PasError, PasList, PredicateType, PredicateTypeId, RealizationTag, Registry, Span,
};
use crate::shift::{
    check_rules, AlignmentId, ShiftTag, Side, SpecialMarker, TransemeAlignment, TransemeInfo, TransemeKind,
    TransemeRef, Violation,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Conventional file suffix for project files.
pub const FILE_SUFFIX: &str = ".shifts.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectConfig {
    pub tag_inventory: BTreeSet<RealizationTag>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub genre_labels: BTreeSet<String>,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            tag_inventory: default_tag_inventory(),
            genre_labels: BTreeSet::new(),
        }
    }
}

impl ProjectConfig {
    fn is_default(&self) -> bool {
        *self == ProjectConfig::default()
    }
}

/// Sentence links run from `corpora[0]` (source) to `corpora[1]` (target).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub schema_version: u32,
    #[serde(default)]
    pub revision: u64,
    #[serde(default)]
    pub next_id: IdAllocator,
    #[serde(default, skip_serializing_if = "ProjectConfig::is_default")]
    pub config: ProjectConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corpora: Vec<Corpus>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub links: Vec<AlignmentLink>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<SentencePair>,
    #[serde(default, skip_serializing_if = "Registry::is_empty")]
    pub registry: Registry,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<PasList>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alignments: Vec<TransemeAlignment>,
}

impl Default for Project {
    fn default() -> Self {
        Project {
            schema_version: SCHEMA_VERSION,
            revision: 0,
            next_id: IdAllocator::default(),
            config: ProjectConfig::default(),
            corpora: Vec::new(),
            links: Vec::new(),
            pairs: Vec::new(),
            registry: Registry::default(),
            annotations: Vec::new(),
            alignments: Vec::new(),
        }
    }
}

/// A new alignment record as submitted by a client.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentRequest {
    #[serde(default)]
    pub source: Option<TransemeRef>,
    #[serde(default)]
    pub target: Option<TransemeRef>,
    #[serde(default)]
    pub tags: Vec<ShiftTag>,
    #[serde(default)]
    pub marker: Option<SpecialMarker>,
    #[serde(default)]
    pub note: Option<String>,
}

impl AlignmentRequest {
    pub fn between(source: TransemeRef, target: TransemeRef, tags: &[ShiftTag]) -> Self {
        AlignmentRequest {
            source: Some(source),
            target: Some(target),
            tags: tags.to_vec(),
            ..Default::default()
        }
    }

    pub fn source_only(source: TransemeRef, tags: &[ShiftTag]) -> Self {
        AlignmentRequest {
            source: Some(source),
            tags: tags.to_vec(),
            ..Default::default()
        }
    }

    pub fn target_only(target: TransemeRef, tags: &[ShiftTag]) -> Self {
        AlignmentRequest {
            target: Some(target),
            tags: tags.to_vec(),
            ..Default::default()
        }
    }

    pub fn with_marker(mut self, marker: SpecialMarker) -> Self {
        self.marker = Some(marker);
        self
    }

    pub fn with_note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("unknown sentence pair {0}")]
    UnknownPair(PairId),
    #[error("an alignment needs a source or a target transeme")]
    NoTransemes,
    #[error("{found} given where a {expected:?} transeme is expected")]
    WrongSide { expected: Side, found: TransemeRef },
    #[error("{0} does not resolve in this sentence pair")]
    DanglingRef(TransemeRef),
    #[error("{transeme} already participates in {existing}")]
    DuplicateParticipation {
        transeme: TransemeRef,
        existing: AlignmentId,
    },
    #[error("semantic_modification requires a note explaining the divergence")]
    NoteRequired,
    #[error("unknown alignment {0}")]
    UnknownAlignment(AlignmentId),
    #[error("alignment violates {}", rule_list(.0))]
    Violations(Vec<Violation>),
}

fn rule_list(v: &[Violation]) -> String {
    v.iter().map(|v| v.rule.as_str()).collect::<Vec<_>>().join(", ")
}

impl AlignError {
    pub fn code(&self) -> &'static str {
        match self {
            AlignError::UnknownPair(_) => "unknown_pair",
            AlignError::NoTransemes => "no_transemes",
            AlignError::WrongSide { .. } => "wrong_side",
            AlignError::DanglingRef(_) => "dangling_ref",
            AlignError::DuplicateParticipation { .. } => "duplicate_participation",
            AlignError::NoteRequired => "note_required",
            AlignError::UnknownAlignment(_) => "unknown_alignment",
            AlignError::Violations(v) => v.first().map(|v| v.rule.as_str()).unwrap_or("violation"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegrityIssue {
    pub subject: String,
    pub message: String,
}

impl fmt::Display for IntegrityIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

fn issues_summary(issues: &[IntegrityIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum EditError {
    #[error("stale revision: edit based on revision {expected}, store is at {current}")]
    StaleRevision { expected: u64, current: u64 },
    #[error(transparent)]
    Pas(#[from] PasError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("unknown sentence {0}")]
    UnknownSentence(SentenceKey),
    #[error("{0}")]
    Invalid(String),
    #[error("integrity check failed: {}", issues_summary(.0))]
    Integrity(Vec<IntegrityIssue>),
    #[error("could not persist project: {0}")]
    Persist(String),
}

impl EditError {
    pub fn code(&self) -> &'static str {
        match self {
            EditError::StaleRevision { .. } => "stale_revision",
            EditError::Pas(e) => e.code(),
            EditError::Align(e) => e.code(),
            EditError::Extraction(_) => "dangling_ref",
            EditError::Corpus(_) => "invalid_corpus",
            EditError::UnknownSentence(_) => "unknown_sentence",
            EditError::Invalid(_) => "invalid_edit",
            EditError::Integrity(_) => "integrity",
            EditError::Persist(_) => "persist_failed",
        }
    }

    pub fn violations(&self) -> Option<&[Violation]> {
        match self {
            EditError::Align(AlignError::Violations(v)) => Some(v),
            _ => None,
        }
    }
}

/// Transemes of one pair split by whether an alignment record covers them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub aligned: Vec<TransemeRef>,
    pub unaligned_source: Vec<TransemeRef>,
    pub unaligned_target: Vec<TransemeRef>,
}

impl Coverage {
    pub fn total(&self) -> usize {
        self.aligned.len() + self.unaligned_source.len() + self.unaligned_target.len()
    }

    pub fn is_complete(&self) -> bool {
        self.unaligned_source.is_empty() && self.unaligned_target.is_empty()
    }

    /// Covered share in percent; 0 for a pair without transemes.
    pub fn percent(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => 100.0 * self.aligned.len() as f64 / n as f64,
        }
    }
}

/// A non-blocking hint attached to a pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advisory {
    pub alignment: AlignmentId,
    pub transeme: TransemeRef,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairViolation {
    pub pair: PairId,
    pub alignment: AlignmentId,
    pub violation: Violation,
}

/// Hash lookups over a project snapshot for the batch paths.
pub struct ProjectIndex<'a> {
    pub pairs: HashMap<&'a PairId, &'a SentencePair>,
    pub pas: HashMap<&'a SentenceKey, &'a PasList>,
    pub types: HashMap<PredicateTypeId, &'a PredicateType>,
}

impl<'a> ProjectIndex<'a> {
    pub fn new(project: &'a Project) -> Self {
        ProjectIndex {
            pairs: project.pairs.iter().map(|p| (&p.id, p)).collect(),
            pas: project.annotations.iter().map(|l| (&l.sentence, l)).collect(),
            types: project.registry.types.iter().map(|t| (t.id, t)).collect(),
        }
    }

    fn side_key(pair: &SentencePair, side: Side) -> &SentenceKey {
        match side {
            Side::Source => &pair.source,
            Side::Target => &pair.target,
        }
    }

    pub fn resolve(&self, pair: &SentencePair, r: &TransemeRef) -> Result<TransemeInfo, AlignError> {
        let list = self
            .pas
            .get(Self::side_key(pair, r.side))
            .ok_or(AlignError::DanglingRef(*r))?;
        match r.kind {
            TransemeKind::Predicate => {
                let p = list.predicate(r.instance).ok_or(AlignError::DanglingRef(*r))?;
                let ty = self.types.get(&p.predicate_type).ok_or(AlignError::DanglingRef(*r))?;
                Ok(TransemeInfo::predicate(ty.class))
            }
            TransemeKind::Argument => {
                let a = list.argument(r.instance).ok_or(AlignError::DanglingRef(*r))?;
                Ok(TransemeInfo {
                    has_antecedent: a.antecedent_span.is_some(),
                    ..TransemeInfo::argument()
                })
            }
        }
    }

    /// Resolves both refs and runs the rule engine.
    pub fn validate(&self, alignment: &TransemeAlignment) -> Result<Vec<Violation>, AlignError> {
        let pair = self
            .pairs
            .get(&alignment.pair)
            .ok_or_else(|| AlignError::UnknownPair(alignment.pair.clone()))?;
        if alignment.source.is_none() && alignment.target.is_none() {
            return Err(AlignError::NoTransemes);
        }
        for (r, expected) in [(alignment.source, Side::Source), (alignment.target, Side::Target)] {
            if let Some(r) = r {
                if r.side != expected {
                    return Err(AlignError::WrongSide { expected, found: r });
                }
            }
        }
        let source = alignment.source.map(|r| self.resolve(pair, &r)).transpose()?;
        let target = alignment.target.map(|r| self.resolve(pair, &r)).transpose()?;
        Ok(check_rules(alignment, source.as_ref(), target.as_ref()))
    }

    /// Every transeme of one side of a pair: predicates, then arguments.
    pub fn transemes(&self, pair: &SentencePair, side: Side) -> Vec<TransemeRef> {
        let Some(list) = self.pas.get(Self::side_key(pair, side)) else {
            return Vec::new();
        };
        let mk = |kind, instance| TransemeRef { side, kind, instance };
        list.predicates
            .iter()
            .map(|p| mk(TransemeKind::Predicate, p.id))
            .chain(list.arguments.iter().map(|a| mk(TransemeKind::Argument, a.id)))
            .collect()
    }
}

impl Project {
    pub fn new() -> Self {
        Project::default()
    }

    /// A fresh project over a source corpus, a target corpus and the
    /// sentence links between them.
    pub fn from_bitext(source: Corpus, target: Corpus, links: Vec<AlignmentLink>) -> Result<Self, EditError> {
        let mut p = Project::new();
        p.add_corpus(source)?;
        p.add_corpus(target)?;
        p.links = links;
        let issues = p.check_integrity();
        if !issues.is_empty() {
            return Err(EditError::Integrity(issues));
        }
        Ok(p)
    }

    pub fn add_corpus(&mut self, corpus: Corpus) -> Result<(), EditError> {
        corpus.validate()?;
        if self.corpora.len() >= 2 {
            return Err(EditError::Invalid("a project holds at most two corpora".into()));
        }
        if self.corpus(&corpus.language).is_some() {
            return Err(EditError::Invalid(format!(
                "a {} corpus is already present",
                corpus.language
            )));
        }
        self.corpora.push(corpus);
        Ok(())
    }

    pub fn corpus(&self, lang: &LangCode) -> Option<&Corpus> {
        self.corpora.iter().find(|c| &c.language == lang)
    }

    pub fn sentence(&self, key: &SentenceKey) -> Option<&Sentence> {
        self.corpus(&key.lang)?.sentence(&key.document, &key.sentence)
    }

    pub fn pair(&self, id: &PairId) -> Option<&SentencePair> {
        self.pairs.iter().find(|p| &p.id == id)
    }

    pub fn pas(&self, key: &SentenceKey) -> Option<&PasList> {
        self.annotations.iter().find(|l| &l.sentence == key)
    }

    pub fn alignments_of<'a>(&'a self, pair: &PairId) -> impl Iterator<Item = &'a TransemeAlignment> + 'a {
        let pair = pair.clone();
        self.alignments.iter().filter(move |a| a.pair == pair)
    }

    pub fn index(&self) -> ProjectIndex<'_> {
        ProjectIndex::new(self)
    }

    /// Runs pair extraction over the stored corpora and links and appends
    /// pairs that are not yet in the project.
    pub fn extract(
        &mut self,
        whitelist: &SpeakerWhitelist,
        genre: Option<&str>,
        exec: Execution,
    ) -> Result<Extraction, EditError> {
        let [source, target] = self.corpora.as_slice() else {
            return Err(EditError::Invalid(
                "extraction needs a source and a target corpus".into(),
            ));
        };
        let mut result = select_original_pairs_with(source, target, &self.links, whitelist, exec)?;
        if let Some(g) = genre {
            for p in &mut result.pairs {
                p.genre = Some(g.to_string());
            }
            self.config.genre_labels.insert(g.to_string());
        }
        let known: HashSet<PairId> = self.pairs.iter().map(|p| p.id.clone()).collect();
        self.pairs
            .extend(result.pairs.iter().filter(|p| !known.contains(&p.id)).cloned());
        Ok(result)
    }

    pub fn register_predicate_type(&mut self, new: NewPredicateType) -> Result<PredicateTypeId, EditError> {
        Ok(self.registry.register(&mut self.next_id, new)?)
    }

    fn pas_list_mut(&mut self, key: &SentenceKey) -> &mut PasList {
        let pos = match self.annotations.iter().position(|l| &l.sentence == key) {
            Some(pos) => pos,
            None => {
                self.annotations.push(PasList::new(key.clone()));
                self.annotations.len() - 1
            }
        };
        &mut self.annotations[pos]
    }

    pub fn annotate_predicate(
        &mut self,
        sentence: &SentenceKey,
        span: Span,
        predicate_type: PredicateTypeId,
        realization_tags: &[&str],
    ) -> Result<InstanceId, EditError> {
        let s = self
            .sentence(sentence)
            .cloned()
            .ok_or_else(|| EditError::UnknownSentence(sentence.clone()))?;
        let tags = realization_tags.iter().map(|t| t.to_string()).collect();
        let (registry, inventory, mut ids) = (self.registry.clone(), self.config.tag_inventory.clone(), self.next_id);
        let id = self.pas_list_mut(sentence).annotate_predicate(
            &s,
            &registry,
            &inventory,
            &mut ids,
            span,
            predicate_type,
            tags,
        )?;
        self.next_id = ids;
        Ok(id)
    }

    fn locate_instance(&self, id: InstanceId) -> Option<(usize, TransemeKind)> {
        self.annotations.iter().enumerate().find_map(|(i, l)| {
            if l.predicate(id).is_some() {
                Some((i, TransemeKind::Predicate))
            } else if l.argument(id).is_some() {
                Some((i, TransemeKind::Argument))
            } else {
                None
            }
        })
    }

    /// Sentence holding an annotated instance.
    pub fn instance_sentence(&self, id: InstanceId) -> Option<&SentenceKey> {
        self.locate_instance(id).map(|(i, _)| &self.annotations[i].sentence)
    }

    pub fn annotate_argument(
        &mut self,
        parent: InstanceId,
        span: Span,
        role: &str,
        antecedent_span: Option<Span>,
    ) -> Result<InstanceId, EditError> {
        let (list_index, kind) = self
            .locate_instance(parent)
            .ok_or(PasError::UnknownPredicateInstance(parent))?;
        if kind != TransemeKind::Predicate {
            return Err(PasError::UnknownPredicateInstance(parent).into());
        }
        let key = self.annotations[list_index].sentence.clone();
        let s = self
            .sentence(&key)
            .cloned()
            .ok_or_else(|| EditError::UnknownSentence(key.clone()))?;
        let mut ids = self.next_id;
        let list = &mut self.annotations[list_index];
        let id = list.annotate_argument(&s, &mut self.registry, &mut ids, parent, span, role, antecedent_span)?;
        self.next_id = ids;
        Ok(id)
    }

    fn aligned_in(&self, instance: InstanceId) -> Option<AlignmentId> {
        self.alignments
            .iter()
            .find(|a| a.refs().any(|r| r.instance == instance))
            .map(|a| a.id)
    }

    /// Removes an instance. Removing a predicate also removes its
    /// arguments; nothing aligned may be removed.
    pub fn remove_instance(&mut self, id: InstanceId) -> Result<(), EditError> {
        let (list_index, kind) = self.locate_instance(id).ok_or(PasError::UnknownInstance(id))?;
        let doomed: Vec<InstanceId> = match kind {
            TransemeKind::Argument => vec![id],
            TransemeKind::Predicate => std::iter::once(id)
                .chain(self.annotations[list_index].arguments_of(id).map(|a| a.id))
                .collect(),
        };
        if let Some((inst, al)) = doomed.iter().find_map(|i| self.aligned_in(*i).map(|a| (*i, a))) {
            return Err(PasError::InUse(inst, al.to_string()).into());
        }
        let list = &mut self.annotations[list_index];
        list.predicates.retain(|p| !doomed.contains(&p.id));
        list.arguments.retain(|a| !doomed.contains(&a.id));
        if list.is_empty() {
            self.annotations.remove(list_index);
        }
        Ok(())
    }

    /// Checks a record without storing it.
    pub fn validate_alignment(&self, alignment: &TransemeAlignment) -> Result<Vec<Violation>, AlignError> {
        self.index().validate(alignment)
    }

    /// Stores a new alignment record iff it resolves, violates no rule and
    /// respects single participation. Checks run in that order.
    pub fn align(&mut self, pair: &PairId, request: AlignmentRequest) -> Result<AlignmentId, EditError> {
        let mut record = TransemeAlignment {
            id: AlignmentId(0),
            pair: pair.clone(),
            source: request.source,
            target: request.target,
            tags: request.tags,
            marker: request.marker,
            note: request.note.filter(|n| !n.trim().is_empty()),
        };
        let violations = self.validate_alignment(&record)?;
        if !violations.is_empty() {
            return Err(AlignError::Violations(violations).into());
        }
        for r in record.refs() {
            if let Some(existing) = self
                .alignments_of(pair)
                .find(|a| a.refs().any(|o| o.side == r.side && o.instance == r.instance))
            {
                return Err(AlignError::DuplicateParticipation {
                    transeme: r,
                    existing: existing.id,
                }
                .into());
            }
        }
        if record.has_tag(ShiftTag::SemanticModification) && record.note.is_none() {
            return Err(AlignError::NoteRequired.into());
        }
        record.id = AlignmentId(self.next_id.fresh());
        let id = record.id;
        self.alignments.push(record);
        Ok(id)
    }

    pub fn remove_alignment(&mut self, id: AlignmentId) -> Result<TransemeAlignment, EditError> {
        let pos = self
            .alignments
            .iter()
            .position(|a| a.id == id)
            .ok_or(AlignError::UnknownAlignment(id))?;
        Ok(self.alignments.remove(pos))
    }

    pub fn coverage_report(&self, pair: &PairId) -> Result<Coverage, AlignError> {
        let index = self.index();
        let p = index
            .pairs
            .get(pair)
            .ok_or_else(|| AlignError::UnknownPair(pair.clone()))?;
        let covered: HashSet<(Side, InstanceId)> = self
            .alignments_of(pair)
            .flat_map(|a| a.refs())
            .map(|r| (r.side, r.instance))
            .collect();
        let mut report = Coverage::default();
        for side in [Side::Source, Side::Target] {
            for t in index.transemes(p, side) {
                if covered.contains(&(t.side, t.instance)) {
                    report.aligned.push(t);
                } else if side == Side::Source {
                    report.unaligned_source.push(t);
                } else {
                    report.unaligned_target.push(t);
                }
            }
        }
        Ok(report)
    }

    /// Depassivised predicates whose target-side arguments are still
    /// unaligned; the usual companion shift there is an addition.
    pub fn advisories(&self, pair: &PairId) -> Result<Vec<Advisory>, AlignError> {
        let p = self.pair(pair).ok_or_else(|| AlignError::UnknownPair(pair.clone()))?;
        let Some(target_list) = self.pas(&p.target) else {
            return Ok(Vec::new());
        };
        let covered: HashSet<InstanceId> = self
            .alignments_of(pair)
            .filter_map(|a| a.target)
            .map(|r| r.instance)
            .collect();
        let mut out = Vec::new();
        for a in self
            .alignments_of(pair)
            .filter(|a| a.has_tag(ShiftTag::Depassivisation))
        {
            let Some(target) = a.target.filter(|t| t.kind == TransemeKind::Predicate) else {
                continue;
            };
            for arg in target_list.arguments_of(target.instance) {
                if !covered.contains(&arg.id) {
                    out.push(Advisory {
                        alignment: a.id,
                        transeme: TransemeRef::target(TransemeKind::Argument, arg.id),
                        message: format!(
                            "argument {} ({}) of the depassivised predicate is unaligned; the agent is often an addition",
                            arg.id, arg.role
                        ),
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn suggest_roles(&self, predicate_type: PredicateTypeId) -> Result<Vec<String>, PasError> {
        suggest_roles(&self.registry, &self.annotations, predicate_type)
    }

    /// Every dangling reference or broken invariant, in a stable order.
    pub fn check_integrity(&self) -> Vec<IntegrityIssue> {
        let mut issues = Vec::new();
        let mut issue = |subject: String, message: String| issues.push(IntegrityIssue { subject, message });

        if self.schema_version != SCHEMA_VERSION {
            issue(
                "schema_version".into(),
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            );
        }
        if self.corpora.len() > 2 {
            issue(
                "corpora".into(),
                format!("{} corpora, at most 2 allowed", self.corpora.len()),
            );
        }
        let mut langs = HashSet::new();
        for c in &self.corpora {
            if let Err(e) = c.validate() {
                issue(format!("corpus {}", c.language), e.to_string());
            }
            if !langs.insert(&c.language) {
                issue(format!("corpus {}", c.language), "duplicate corpus language".into());
            }
        }
        let sentences: HashMap<SentenceKey, &Sentence> = self
            .corpora
            .iter()
            .flat_map(|c| {
                c.documents.iter().flat_map(move |d| {
                    d.sentences.iter().map(move |s| {
                        (
                            SentenceKey {
                                lang: c.language.clone(),
                                document: d.id.clone(),
                                sentence: s.id.clone(),
                            },
                            s,
                        )
                    })
                })
            })
            .collect();

        if !self.links.is_empty() {
            if self.corpora.len() != 2 {
                issue(
                    "links".into(),
                    "sentence links need a source and a target corpus".into(),
                );
            } else {
                if let Err(e) = check_partition(&self.links) {
                    issue("links".into(), e.to_string());
                }
                for (i, link) in self.links.iter().enumerate() {
                    for (corpus, refs) in [
                        (&self.corpora[0], &link.source_ids),
                        (&self.corpora[1], &link.target_ids),
                    ] {
                        for r in refs {
                            if !sentences.contains_key(&SentenceKey::new(corpus.language.clone(), r)) {
                                issue(
                                    format!("link {i}"),
                                    format!("dangling sentence {}:{}", corpus.language, r),
                                );
                            }
                        }
                    }
                }
            }
        }

        let mut pair_ids = HashSet::new();
        for p in &self.pairs {
            if !pair_ids.insert(&p.id) {
                issue(format!("pair {}", p.id), "duplicate pair id".into());
            }
            for key in [&p.source, &p.target] {
                if !sentences.contains_key(key) {
                    issue(format!("pair {}", p.id), format!("dangling sentence {key}"));
                }
            }
            if p.direction.from != p.source.lang || p.direction.to != p.target.lang {
                issue(
                    format!("pair {}", p.id),
                    format!("direction {} does not match its sentences", p.direction),
                );
            }
        }

        let mut ids: HashSet<u64> = HashSet::new();
        let mut claim = |id: u64, subject: String, issues: &mut Vec<IntegrityIssue>| {
            if id >= self.next_id.0 {
                issues.push(IntegrityIssue {
                    subject: subject.clone(),
                    message: format!("id {id} not below next_id {}", self.next_id.0),
                });
            }
            if !ids.insert(id) {
                issues.push(IntegrityIssue {
                    subject,
                    message: format!("id {id} used twice"),
                });
            }
        };

        let groups: HashMap<_, _> = self.registry.groups.iter().map(|g| (g.id, g)).collect();
        for g in &self.registry.groups {
            claim(g.id.0, g.id.to_string(), &mut issues);
            for role in &g.roles {
                if !is_valid_role_name(role) {
                    issues.push(IntegrityIssue {
                        subject: g.id.to_string(),
                        message: format!("invalid role name {role:?}"),
                    });
                }
            }
        }
        let mut type_keys = HashSet::new();
        for t in &self.registry.types {
            claim(t.id.0, t.id.to_string(), &mut issues);
            let mut bad = |m: String| {
                issues.push(IntegrityIssue {
                    subject: t.id.to_string(),
                    message: m,
                })
            };
            if t.lemma.is_empty() || t.lemma != t.lemma.to_uppercase() {
                bad(format!("lemma {:?} is not an uppercase citation form", t.lemma));
            }
            if t.sense == 0 {
                bad("sense must be at least 1".into());
            }
            match groups.get(&t.group) {
                None => bad(format!("dangling group {}", t.group)),
                Some(g) if g.language != t.language => bad(format!("group {} has another language", t.group)),
                Some(_) => {}
            }
            if !type_keys.insert((&t.language, &t.lemma, t.sense)) {
                bad(format!("duplicate {} {} sense {}", t.language, t.lemma, t.sense));
            }
        }

        let types: HashMap<_, _> = self.registry.types.iter().map(|t| (t.id, t)).collect();
        let mut lists = HashSet::new();
        for list in &self.annotations {
            let subject = format!("annotations {}", list.sentence);
            if !lists.insert(&list.sentence) {
                issues.push(IntegrityIssue {
                    subject: subject.clone(),
                    message: "sentence listed twice".into(),
                });
            }
            let sentence = sentences.get(&list.sentence).copied();
            if sentence.is_none() {
                issues.push(IntegrityIssue {
                    subject: subject.clone(),
                    message: "dangling sentence".into(),
                });
            }
            for p in &list.predicates {
                claim(p.id.0, p.id.to_string(), &mut issues);
                let mut bad = |m: String| {
                    issues.push(IntegrityIssue {
                        subject: p.id.to_string(),
                        message: m,
                    })
                };
                match types.get(&p.predicate_type) {
                    None => bad(format!("dangling predicate type {}", p.predicate_type)),
                    Some(t) if t.language != list.sentence.lang => {
                        bad(format!("predicate type {} has language {}", t.id, t.language))
                    }
                    Some(_) => {}
                }
                if let Some(s) = sentence {
                    if let Err(e) = check_span(&p.span, s) {
                        bad(e.to_string());
                    }
                }
                for tag in &p.realization_tags {
                    if !self.config.tag_inventory.contains(tag) {
                        bad(format!("realization tag {tag:?} not in inventory"));
                    }
                }
            }
            for a in &list.arguments {
                claim(a.id.0, a.id.to_string(), &mut issues);
                let mut bad = |m: String| {
                    issues.push(IntegrityIssue {
                        subject: a.id.to_string(),
                        message: m,
                    })
                };
                match list.predicate(a.parent) {
                    None => bad(format!("dangling parent {}", a.parent)),
                    Some(p) => {
                        let role_ok = types
                            .get(&p.predicate_type)
                            .and_then(|t| groups.get(&t.group))
                            .is_some_and(|g| g.roles.contains(&a.role));
                        if !role_ok {
                            bad(format!("role {:?} is not registered in the parent's group", a.role));
                        }
                    }
                }
                if let Some(s) = sentence {
                    if let Err(e) = check_span(&a.span, s) {
                        bad(e.to_string());
                    }
                    if let Some(ante) = &a.antecedent_span {
                        if let Err(e) = check_span(ante, s) {
                            bad(format!("antecedent: {e}"));
                        }
                        if !ante.is_disjoint(&a.span) {
                            bad("antecedent overlaps the argument span".into());
                        }
                    }
                }
            }
        }

        let index = self.index();
        let mut participation: HashSet<(&PairId, Side, InstanceId)> = HashSet::new();
        for a in &self.alignments {
            claim(a.id.0, a.id.to_string(), &mut issues);
            if let Err(e) = index.validate(a) {
                issues.push(IntegrityIssue {
                    subject: a.id.to_string(),
                    message: e.to_string(),
                });
            }
            for r in a.refs() {
                if !participation.insert((&a.pair, r.side, r.instance)) {
                    issues.push(IntegrityIssue {
                        subject: a.id.to_string(),
                        message: format!("{r} participates in more than one alignment"),
                    });
                }
            }
        }
        issues
    }
}

/// Revalidates every stored alignment record.
pub fn validate_project(project: &Project, exec: Execution) -> Vec<PairViolation> {
    let index = project.index();
    exec.map(&project.alignments, |a| {
        index
            .validate(a)
            .map(|vs| {
                vs.into_iter()
                    .map(|violation| PairViolation {
                        pair: a.pair.clone(),
                        alignment: a.id,
                        violation,
                    })
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Runs `edit` on a copy of `project`. On success the copy passes the
/// integrity and rule checks and carries `revision + 1`; on failure the
/// original is untouched.
pub fn apply<T>(
    project: &Project,
    expected_revision: Option<u64>,
    edit: impl FnOnce(&mut Project) -> Result<T, EditError>,
) -> Result<(Project, T), EditError> {
    if let Some(expected) = expected_revision {
        if expected != project.revision {
            return Err(EditError::StaleRevision {
                expected,
                current: project.revision,
            });
        }
    }
    let mut next = project.clone();
    let out = edit(&mut next)?;
    let issues = next.check_integrity();
    if !issues.is_empty() {
        return Err(EditError::Integrity(issues));
    }
    let violations: Vec<Violation> = validate_project(&next, Execution::Sequential)
        .into_iter()
        .map(|v| v.violation)
        .collect();
    if !violations.is_empty() {
        return Err(AlignError::Violations(violations).into());
    }
    next.revision = project.revision + 1;
    Ok((next, out))
}

// ---------------------------------------------------------------------------
// Persistence

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unsupported schema_version {found} (this build reads {expected})")]
    UnsupportedVersion { found: u64, expected: u32 },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("integrity check failed: {}", issues_summary(.0))]
    Integrity(Vec<IntegrityIssue>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, canonicalize(v))).collect())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Canonical text form: sorted keys, two-space indent, trailing newline.
pub fn to_canonical_json(project: &Project) -> String {
    let value = serde_json::to_value(project).expect("project serializes");
    let mut text = serde_json::to_string_pretty(&canonicalize(value)).expect("value serializes");
    text.push('\n');
    text
}

fn parse_error(e: serde_json::Error) -> StoreError {
    StoreError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn from_json_str(text: &str) -> Result<Project, StoreError> {
    let value: Value = serde_json::from_str(text).map_err(parse_error)?;
    let version = value.get("schema_version").ok_or(StoreError::Parse {
        line: 1,
        column: 1,
        message: "missing schema_version".into(),
    })?;
    match version.as_u64() {
        Some(v) if v == u64::from(SCHEMA_VERSION) => {}
        Some(found) => {
            return Err(StoreError::UnsupportedVersion {
                found,
                expected: SCHEMA_VERSION,
            })
        }
        None => {
            return Err(StoreError::Parse {
                line: 1,
                column: 1,
                message: "schema_version is not an integer".into(),
            })
        }
    }
    let project: Project = serde_json::from_str(text).map_err(parse_error)?;
    let issues = project.check_integrity();
    if !issues.is_empty() {
        return Err(StoreError::Integrity(issues));
    }
    Ok(project)
}

pub fn load(path: impl AsRef<Path>) -> Result<Project, StoreError> {
    let text = fs::read_to_string(path)?;
    from_json_str(&text)
}

/// Writes the canonical form, refusing projects with dangling references.
/// The file is replaced atomically.
pub fn save(project: &Project, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let issues = project.check_integrity();
    if !issues.is_empty() {
        return Err(StoreError::Integrity(issues));
    }
    let path = path.as_ref();
    let text = to_canonical_json(project);
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "project".into());
    let tmp = path.with_file_name(format!(".{file_name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Single-writer, many-reader holder of the last committed project,
/// optionally backed by a file that is rewritten on every commit.
pub struct ProjectStore {
    path: Option<PathBuf>,
    current: RwLock<Project>,
}

impl ProjectStore {
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let path = path.into();
        let project = load(&path)?;
        Ok(ProjectStore {
            path: Some(path),
            current: RwLock::new(project),
        })
    }

    pub fn in_memory(project: Project) -> Self {
        ProjectStore {
            path: None,
            current: RwLock::new(project),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn read<R>(&self, f: impl FnOnce(&Project) -> R) -> R {
        let guard = self.current.read().unwrap_or_else(|e| e.into_inner());
        f(&guard)
    }

    pub fn snapshot(&self) -> Project {
        self.read(Project::clone)
    }

    pub fn revision(&self) -> u64 {
        self.read(|p| p.revision)
    }

    /// Commits `edit` and returns its output with the new revision.
    pub fn apply<T>(
        &self,
        expected_revision: Option<u64>,
        edit: impl FnOnce(&mut Project) -> Result<T, EditError>,
    ) -> Result<(T, u64), EditError> {
        let mut guard = self.current.write().unwrap_or_else(|e| e.into_inner());
        let (next, out) = apply(&guard, expected_revision, edit)?;
        if let Some(path) = &self.path {
            save(&next, path).map_err(|e| EditError::Persist(e.to_string()))?;
        }
        let revision = next.revision;
        *guard = next;
        Ok((out, revision))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, SentenceRef};
    use crate::pas::PredicateClass;

    fn tiny() -> Project {
        let en = Corpus {
            language: LangCode::parse("en").unwrap(),
            documents: vec![Document {
                id: "d".into(),
                sentences: vec![Sentence::from_surfaces("1", ["It", "was", "done"])],
            }],
        };
        let de = Corpus {
            language: LangCode::parse("de").unwrap(),
            documents: vec![Document {
                id: "d".into(),
                sentences: vec![Sentence::from_surfaces("1", ["Wir", "taten", "es"])],
            }],
        };
        let mut en = en;
        en.documents[0].sentences[0].speaker_name = Some("Smith".into());
        let mut de = de;
        de.documents[0].sentences[0].language_attr = Some(LangCode::parse("en").unwrap());
        let link = AlignmentLink::one_to_one(SentenceRef::new("d", "1"), SentenceRef::new("d", "1"));
        let mut p = Project::from_bitext(en, de, vec![link]).unwrap();
        p.extract(&SpeakerWhitelist::new(["Smith"]), None, Execution::Sequential)
            .unwrap();
        p
    }

    #[test]
    fn empty_project_is_minimal() {
        let text = to_canonical_json(&Project::new());
        assert_eq!(
            text,
            "{\n  \"next_id\": 1,\n  \"revision\": 0,\n  \"schema_version\": 1\n}\n"
        );
        assert_eq!(from_json_str(&text).unwrap(), Project::new());
    }

    #[test]
    fn version_and_truncation_errors() {
        assert!(matches!(
            from_json_str(r#"{"schema_version": 999}"#),
            Err(StoreError::UnsupportedVersion {
                found: 999,
                expected: 1
            })
        ));
        let text = to_canonical_json(&tiny());
        let cut = &text[..text.len() / 2];
        assert!(matches!(from_json_str(cut), Err(StoreError::Parse { .. })));
        assert!(matches!(from_json_str("{}"), Err(StoreError::Parse { .. })));
    }

    #[test]
    fn dangling_predicate_ref_fails_save() {
        let mut p = tiny();
        let key = p.pairs[0].source.clone();
        let ty = p
            .register_predicate_type(NewPredicateType::new(key.lang.clone(), "do", PredicateClass::Verbal))
            .unwrap();
        p.annotate_predicate(&key, Span::from([2]), ty, &["passive"]).unwrap();
        p.registry.types.clear();
        let dir = tempfile::tempdir().unwrap();
        match save(&p, dir.path().join("x.shifts.json")) {
            Err(StoreError::Integrity(issues)) => {
                assert!(issues.iter().any(|i| i.message.contains(&ty.to_string())), "{issues:?}")
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn apply_bumps_revision_and_checks_staleness() {
        let mut p = tiny();
        p.revision = 5;
        let key = p.pairs[0].source.clone();
        let (next, ty) = apply(&p, Some(5), |p| {
            p.register_predicate_type(NewPredicateType::new(key.lang.clone(), "do", PredicateClass::Verbal))
        })
        .unwrap();
        assert_eq!(next.revision, 6);
        assert!(next.registry.predicate_type(ty).is_some());
        assert!(matches!(
            apply(&next, Some(4), |_| Ok(())),
            Err(EditError::StaleRevision {
                expected: 4,
                current: 6
            })
        ));
    }

    #[test]
    fn failed_edit_leaves_project_untouched() {
        let p = tiny();
        let before = to_canonical_json(&p);
        let err = apply(&p, None, |p| {
            let key = p.pairs[0].source.clone();
            let ty =
                p.register_predicate_type(NewPredicateType::new(key.lang.clone(), "do", PredicateClass::Verbal))?;
            p.annotate_predicate(&key, Span::from([9]), ty, &[])
        })
        .unwrap_err();
        assert_eq!(err.code(), "span_out_of_range");
        assert_eq!(to_canonical_json(&p), before);
    }

    #[test]
    fn store_persists_each_commit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.shifts.json");
        save(&tiny(), &path).unwrap();
        let store = ProjectStore::open(&path).unwrap();
        let before = fs::read(&path).unwrap();
        assert!(store
            .apply(Some(0), |_| Err::<(), _>(EditError::Invalid("nope".into())))
            .is_err());
        assert_eq!(fs::read(&path).unwrap(), before);
        let (_, rev) = store
            .apply(Some(0), |p| {
                let lang = p.pairs[0].source.lang.clone();
                p.register_predicate_type(NewPredicateType::new(lang, "do", PredicateClass::Verbal))
            })
            .unwrap();
        assert_eq!(rev, 1);
        assert_eq!(load(&path).unwrap(), store.snapshot());
    }

    #[test]
    fn remove_instance_refuses_aligned_transemes() {
        let mut p = tiny();
        let pair = p.pairs[0].clone();
        let vt = p
            .register_predicate_type(NewPredicateType::new(
                pair.source.lang.clone(),
                "do",
                PredicateClass::Verbal,
            ))
            .unwrap();
        let dt = p
            .register_predicate_type(NewPredicateType::new(
                pair.target.lang.clone(),
                "tun",
                PredicateClass::Verbal,
            ))
            .unwrap();
        let sp = p
            .annotate_predicate(&pair.source, Span::from([2]), vt, &["passive"])
            .unwrap();
        let tp = p.annotate_predicate(&pair.target, Span::from([1]), dt, &[]).unwrap();
        let targ = p.annotate_argument(tp, Span::from([0]), "agent", None).unwrap();
        let al = p
            .align(
                &pair.id,
                AlignmentRequest::between(
                    TransemeRef::source(TransemeKind::Predicate, sp),
                    TransemeRef::target(TransemeKind::Predicate, tp),
                    &[ShiftTag::Depassivisation],
                ),
            )
            .unwrap();
        let adv = p.advisories(&pair.id).unwrap();
        assert_eq!(adv.len(), 1);
        assert_eq!(adv[0].transeme.instance, targ);

        assert_eq!(p.remove_instance(tp).unwrap_err().code(), "instance_in_use");
        p.remove_alignment(al).unwrap();
        p.remove_instance(tp).unwrap();
        assert!(p.pas(&pair.target).is_none());
        assert!(p.check_integrity().is_empty());
    }
}

//! Monolingual predicate-argument annotation.
//!
//! Predicates are registered once per language as uppercase citation forms
//! with a class and a sense number. Related predicate types share a group,
//! and role names are only meaningful inside their group. A sentence's
//! annotations are a flat list: predicate instances never nest, although an
//! argument span may contain another predicate's span.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LangCode, Sentence, SentenceKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PredicateClass {
    #[serde(rename = "v")]
    Verbal,
    #[serde(rename = "n")]
    Nominal,
    #[serde(rename = "a")]
    Adjectival,
    #[serde(rename = "c")]
    Copula,
    #[serde(rename = "l")]
    LightVerb,
}

impl PredicateClass {
    pub fn code(self) -> &'static str {
        match self {
            PredicateClass::Verbal => "v",
            PredicateClass::Nominal => "n",
            PredicateClass::Adjectival => "a",
            PredicateClass::Copula => "c",
            PredicateClass::LightVerb => "l",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Some(match code {
            "v" => PredicateClass::Verbal,
            "n" => PredicateClass::Nominal,
            "a" => PredicateClass::Adjectival,
            "c" => PredicateClass::Copula,
            "l" => PredicateClass::LightVerb,
            _ => return None,
        })
    }
}

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{}"), self.0)
            }
        }
    };
}
pub(crate) use id_type;

id_type!(PredicateTypeId, "type#");
id_type!(GroupId, "group#");
id_type!(InstanceId, "instance#");

/// Monotonic id source shared by every entity of a project.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IdAllocator(pub u64);

impl Default for IdAllocator {
    fn default() -> Self {
        IdAllocator(1)
    }
}

impl IdAllocator {
    pub fn fresh(&mut self) -> u64 {
        let id = self.0;
        self.0 += 1;
        id
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateType {
    pub id: PredicateTypeId,
    pub lemma: String,
    pub class: PredicateClass,
    pub sense: u32,
    pub group: GroupId,
    pub language: LangCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateGroup {
    pub id: GroupId,
    pub language: LangCode,
    pub roles: BTreeSet<String>,
}

/// Lowercase ASCII words joined by single underscores, e.g. `ent_dramatised`.
pub fn is_valid_role_name(role: &str) -> bool {
    !role.is_empty()
        && role
            .split('_')
            .all(|w| !w.is_empty() && w.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()))
        && role.as_bytes()[0].is_ascii_lowercase()
}

/// Sorted token indices; may be discontinuous.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Span(pub BTreeSet<usize>);

impl Span {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_disjoint(&self, other: &Span) -> bool {
        self.0.is_disjoint(&other.0)
    }

    pub fn contains_span(&self, other: &Span) -> bool {
        other.0.is_subset(&self.0)
    }
}

impl FromIterator<usize> for Span {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Span(iter.into_iter().collect())
    }
}

impl<const N: usize> From<[usize; N]> for Span {
    fn from(value: [usize; N]) -> Self {
        value.into_iter().collect()
    }
}

impl From<std::ops::RangeInclusive<usize>> for Span {
    fn from(value: std::ops::RangeInclusive<usize>) -> Self {
        value.collect()
    }
}

/// Realization tags (`passive`, `infinitive`, ...). The admissible set is
/// the project's tag inventory.
pub type RealizationTag = String;

pub fn default_tag_inventory() -> BTreeSet<RealizationTag> {
    ["infinitive", "passive"].into_iter().map(String::from).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateInstance {
    pub id: InstanceId,
    pub predicate_type: PredicateTypeId,
    pub span: Span,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub realization_tags: BTreeSet<RealizationTag>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgumentInstance {
    pub id: InstanceId,
    pub parent: InstanceId,
    pub role: String,
    pub span: Span,
    /// Present only for relative-pronoun arguments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub antecedent_span: Option<Span>,
}

/// The flat annotation list of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasList {
    pub sentence: SentenceKey,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predicates: Vec<PredicateInstance>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arguments: Vec<ArgumentInstance>,
}

impl PasList {
    pub fn new(sentence: SentenceKey) -> Self {
        PasList {
            sentence,
            predicates: Vec::new(),
            arguments: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty() && self.arguments.is_empty()
    }

    pub fn predicate(&self, id: InstanceId) -> Option<&PredicateInstance> {
        self.predicates.iter().find(|p| p.id == id)
    }

    pub fn argument(&self, id: InstanceId) -> Option<&ArgumentInstance> {
        self.arguments.iter().find(|a| a.id == id)
    }

    pub fn arguments_of(&self, parent: InstanceId) -> impl Iterator<Item = &ArgumentInstance> {
        self.arguments.iter().filter(move |a| a.parent == parent)
    }

    pub fn annotate_predicate(
        &mut self,
        sentence: &Sentence,
        registry: &Registry,
        inventory: &BTreeSet<RealizationTag>,
        ids: &mut IdAllocator,
        span: Span,
        predicate_type: PredicateTypeId,
        realization_tags: BTreeSet<RealizationTag>,
    ) -> Result<InstanceId, PasError> {
        check_span(&span, sentence)?;
        let ty = registry
            .predicate_type(predicate_type)
            .ok_or(PasError::UnknownPredicateType(predicate_type))?;
        if ty.language != self.sentence.lang {
            return Err(PasError::LanguageMismatch {
                expected: self.sentence.lang.clone(),
                found: ty.language.clone(),
            });
        }
        if let Some(tag) = realization_tags.iter().find(|t| !inventory.contains(*t)) {
            return Err(PasError::UnknownTag(tag.clone()));
        }
        let id = InstanceId(ids.fresh());
        self.predicates.push(PredicateInstance {
            id,
            predicate_type,
            span,
            realization_tags,
        });
        Ok(id)
    }

    /// Attaches an argument to `parent`, registering `role` in the parent
    /// type's group on first use.
    pub fn annotate_argument(
        &mut self,
        sentence: &Sentence,
        registry: &mut Registry,
        ids: &mut IdAllocator,
        parent: InstanceId,
        span: Span,
        role: &str,
        antecedent_span: Option<Span>,
    ) -> Result<InstanceId, PasError> {
        let parent_type = self
            .predicate(parent)
            .ok_or(PasError::UnknownPredicateInstance(parent))?
            .predicate_type;
        check_span(&span, sentence)?;
        if !is_valid_role_name(role) {
            return Err(PasError::RoleSyntax(role.to_string()));
        }
        if let Some(ante) = &antecedent_span {
            check_span(ante, sentence)?;
            if !ante.is_disjoint(&span) {
                return Err(PasError::AntecedentOverlap);
            }
        }
        let group = registry
            .predicate_type(parent_type)
            .map(|t| t.group)
            .ok_or(PasError::UnknownPredicateType(parent_type))?;
        registry
            .group_mut(group)
            .ok_or(PasError::UnknownGroup(group))?
            .roles
            .insert(role.to_string());
        let id = InstanceId(ids.fresh());
        self.arguments.push(ArgumentInstance {
            id,
            parent,
            role: role.to_string(),
            span,
            antecedent_span,
        });
        Ok(id)
    }
}

pub fn check_span(span: &Span, sentence: &Sentence) -> Result<(), PasError> {
    if span.is_empty() {
        return Err(PasError::EmptySpan);
    }
    let len = sentence.tokens.len();
    match span.0.last() {
        Some(&max) if max >= len => Err(PasError::SpanOutOfRange { index: max, len }),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PasError {
    #[error("span is empty")]
    EmptySpan,
    #[error("token index {index} out of range for a sentence of {len} tokens")]
    SpanOutOfRange { index: usize, len: usize },
    #[error("realization tag {0:?} is not in the project's tag inventory")]
    UnknownTag(String),
    #[error("unknown predicate type {0}")]
    UnknownPredicateType(PredicateTypeId),
    #[error("unknown predicate group {0}")]
    UnknownGroup(GroupId),
    #[error("unknown predicate instance {0}")]
    UnknownPredicateInstance(InstanceId),
    #[error("unknown instance {0}")]
    UnknownInstance(InstanceId),
    #[error("predicate language {found} does not match sentence language {expected}")]
    LanguageMismatch { expected: LangCode, found: LangCode },
    #[error("{lemma} sense {sense} already registered as {existing}")]
    DuplicatePredicateType {
        existing: PredicateTypeId,
        lemma: String,
        sense: u32,
    },
    #[error("lemma must not be empty")]
    EmptyLemma,
    #[error("sense numbers start at 1")]
    InvalidSense,
    #[error("role name {0:?} must be lowercase words joined by underscores")]
    RoleSyntax(String),
    #[error("antecedent span overlaps the argument span")]
    AntecedentOverlap,
    #[error("{0} is still referenced by {1}")]
    InUse(InstanceId, String),
}

impl PasError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            PasError::EmptySpan | PasError::SpanOutOfRange { .. } => "span_out_of_range",
            PasError::UnknownTag(_) => "unknown_tag",
            PasError::UnknownPredicateType(_) => "unknown_predicate_type",
            PasError::UnknownGroup(_) => "unknown_group",
            PasError::UnknownPredicateInstance(_) | PasError::UnknownInstance(_) => "unknown_instance",
            PasError::LanguageMismatch { .. } => "language_mismatch",
            PasError::DuplicatePredicateType { .. } => "duplicate_predicate_type",
            PasError::EmptyLemma => "empty_lemma",
            PasError::InvalidSense => "invalid_sense",
            PasError::RoleSyntax(_) => "role_syntax",
            PasError::AntecedentOverlap => "antecedent_overlap",
            PasError::InUse(..) => "instance_in_use",
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewPredicateType {
    pub language: LangCode,
    pub lemma: String,
    pub class: PredicateClass,
    pub sense: u32,
    pub group: Option<GroupId>,
    pub description: Option<String>,
}

impl NewPredicateType {
    pub fn new(language: LangCode, lemma: &str, class: PredicateClass) -> Self {
        NewPredicateType {
            language,
            lemma: lemma.to_string(),
            class,
            sense: 1,
            group: None,
            description: None,
        }
    }

    pub fn sense(mut self, sense: u32) -> Self {
        self.sense = sense;
        self
    }

    pub fn in_group(mut self, group: GroupId) -> Self {
        self.group = Some(group);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub types: Vec<PredicateType>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<PredicateGroup>,
}

impl Registry {
    pub fn is_empty(&self) -> bool {
        self.types.is_empty() && self.groups.is_empty()
    }

    pub fn predicate_type(&self, id: PredicateTypeId) -> Option<&PredicateType> {
        self.types.iter().find(|t| t.id == id)
    }

    pub fn group(&self, id: GroupId) -> Option<&PredicateGroup> {
        self.groups.iter().find(|g| g.id == id)
    }

    fn group_mut(&mut self, id: GroupId) -> Option<&mut PredicateGroup> {
        self.groups.iter_mut().find(|g| g.id == id)
    }

    pub fn lookup(&self, language: &LangCode, lemma: &str, sense: u32) -> Option<&PredicateType> {
        let lemma = lemma.to_uppercase();
        self.types
            .iter()
            .find(|t| &t.language == language && t.lemma == lemma && t.sense == sense)
    }

    /// Registers a predicate type. Without an explicit group a fresh
    /// singleton group is created.
    pub fn register(&mut self, ids: &mut IdAllocator, new: NewPredicateType) -> Result<PredicateTypeId, PasError> {
        let lemma = new.lemma.trim().to_uppercase();
        if lemma.is_empty() {
            return Err(PasError::EmptyLemma);
        }
        if new.sense == 0 {
            return Err(PasError::InvalidSense);
        }
        if let Some(existing) = self.lookup(&new.language, &lemma, new.sense) {
            return Err(PasError::DuplicatePredicateType {
                existing: existing.id,
                lemma,
                sense: new.sense,
            });
        }
        let group = match new.group {
            Some(g) => {
                let group = self.group(g).ok_or(PasError::UnknownGroup(g))?;
                if group.language != new.language {
                    return Err(PasError::LanguageMismatch {
                        expected: group.language.clone(),
                        found: new.language,
                    });
                }
                g
            }
            None => {
                let g = GroupId(ids.fresh());
                self.groups.push(PredicateGroup {
                    id: g,
                    language: new.language.clone(),
                    roles: BTreeSet::new(),
                });
                g
            }
        };
        let id = PredicateTypeId(ids.fresh());
        self.types.push(PredicateType {
            id,
            lemma,
            class: new.class,
            sense: new.sense,
            group,
            language: new.language,
            description: new.description,
        });
        Ok(id)
    }
}

/// Role names of the type's group, most used first, ties lexicographic.
pub fn suggest_roles<'a>(
    registry: &Registry,
    annotations: impl IntoIterator<Item = &'a PasList>,
    predicate_type: PredicateTypeId,
) -> Result<Vec<String>, PasError> {
    let ty = registry
        .predicate_type(predicate_type)
        .ok_or(PasError::UnknownPredicateType(predicate_type))?;
    let group = registry.group(ty.group).ok_or(PasError::UnknownGroup(ty.group))?;
    let mut usage: BTreeMap<&str, usize> = group.roles.iter().map(|r| (r.as_str(), 0)).collect();
    for list in annotations {
        for arg in &list.arguments {
            let in_group = list
                .predicate(arg.parent)
                .and_then(|p| registry.predicate_type(p.predicate_type))
                .is_some_and(|t| t.group == group.id);
            if in_group {
                if let Some(n) = usage.get_mut(arg.role.as_str()) {
                    *n += 1;
                }
            }
        }
    }
    let mut ranked: Vec<(&str, usize)> = usage.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Ok(ranked.into_iter().map(|(r, _)| r.to_string()).collect())
}

/// Spans whose case-folded surface matches a registered lemma of the
/// sentence's language. Multi-word lemmas match contiguous token runs.
/// The result is sorted and free of duplicates.
pub fn suggest_predicate_candidates(sentence: &Sentence, language: &LangCode, registry: &Registry) -> Vec<Span> {
    let surfaces: Vec<String> = sentence.tokens.iter().map(|t| t.surface.to_lowercase()).collect();
    let mut found = BTreeSet::new();
    for ty in registry.types.iter().filter(|t| &t.language == language) {
        let words: Vec<String> = ty.lemma.split_whitespace().map(str::to_lowercase).collect();
        if words.is_empty() || words.len() > surfaces.len() {
            continue;
        }
        for start in 0..=surfaces.len() - words.len() {
            if surfaces[start..start + words.len()] == words[..] {
                found.insert(Span::from(start..=start + words.len() - 1));
            }
        }
    }
    found.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn en() -> LangCode {
        LangCode::parse("en").unwrap()
    }

    fn key() -> SentenceKey {
        SentenceKey {
            lang: en(),
            document: "ep-00-01-18".into(),
            sentence: "8.4".into(),
        }
    }

    fn dramatise_sentence() -> Sentence {
        Sentence::from_surfaces(
            "8.4",
            [
                "It",
                "should",
                "not",
                "be",
                "dramatised",
                "into",
                "something",
                "more",
                "than",
                "that",
                ".",
            ],
        )
    }

    #[test]
    fn register_uppercases_and_creates_group() {
        let mut ids = IdAllocator::default();
        let mut reg = Registry::default();
        let id = reg
            .register(
                &mut ids,
                NewPredicateType::new(en(), "dramatise", PredicateClass::Verbal),
            )
            .unwrap();
        let ty = reg.predicate_type(id).unwrap();
        assert_eq!(ty.lemma, "DRAMATISE");
        assert_eq!(ty.sense, 1);
        assert!(reg.group(ty.group).unwrap().roles.is_empty());

        let group = ty.group;
        let noun = reg
            .register(
                &mut ids,
                NewPredicateType::new(en(), "dramatisation", PredicateClass::Nominal).in_group(group),
            )
            .unwrap();
        assert_eq!(reg.predicate_type(noun).unwrap().group, group);
        assert_eq!(reg.groups.len(), 1);
    }

    #[test]
    fn duplicate_registration_names_existing() {
        let de = LangCode::parse("de").unwrap();
        let mut ids = IdAllocator::default();
        let mut reg = Registry::default();
        let first = reg
            .register(
                &mut ids,
                NewPredicateType::new(de.clone(), "beziehen", PredicateClass::Verbal),
            )
            .unwrap();
        let err = reg
            .register(
                &mut ids,
                NewPredicateType::new(de.clone(), "beziehen", PredicateClass::Verbal),
            )
            .unwrap_err();
        assert!(matches!(err, PasError::DuplicatePredicateType { existing, .. } if existing == first));
        // another sense is fine
        reg.register(
            &mut ids,
            NewPredicateType::new(de, "BEZIEHEN", PredicateClass::Verbal).sense(2),
        )
        .unwrap();
        assert!(reg.types.iter().all(|t| t.lemma == t.lemma.to_uppercase()));
        assert_eq!(
            reg.register(&mut ids, NewPredicateType::new(en(), "  ", PredicateClass::Verbal)),
            Err(PasError::EmptyLemma)
        );
    }

    #[test]
    fn predicate_and_argument_annotation() {
        let mut ids = IdAllocator::default();
        let mut reg = Registry::default();
        let inventory = default_tag_inventory();
        let s = dramatise_sentence();
        let ty = reg
            .register(
                &mut ids,
                NewPredicateType::new(en(), "dramatise", PredicateClass::Verbal),
            )
            .unwrap();
        let mut list = PasList::new(key());
        let pred = list
            .annotate_predicate(
                &s,
                &reg,
                &inventory,
                &mut ids,
                Span::from([4]),
                ty,
                ["passive".to_string()].into(),
            )
            .unwrap();
        assert!(list.predicate(pred).unwrap().realization_tags.contains("passive"));

        let arg = list
            .annotate_argument(&s, &mut reg, &mut ids, pred, Span::from([0]), "ent_dramatised", None)
            .unwrap();
        assert_eq!(list.argument(arg).unwrap().parent, pred);
        let group = reg.predicate_type(ty).unwrap().group;
        assert!(reg.group(group).unwrap().roles.contains("ent_dramatised"));

        assert_eq!(
            list.annotate_predicate(&s, &reg, &inventory, &mut ids, Span::default(), ty, BTreeSet::new()),
            Err(PasError::EmptySpan)
        );
        assert_eq!(
            list.annotate_predicate(&s, &reg, &inventory, &mut ids, Span::from([11]), ty, BTreeSet::new()),
            Err(PasError::SpanOutOfRange { index: 11, len: 11 })
        );
        assert_eq!(
            list.annotate_predicate(
                &s,
                &reg,
                &inventory,
                &mut ids,
                Span::from([4]),
                ty,
                ["gerund".to_string()].into()
            ),
            Err(PasError::UnknownTag("gerund".into()))
        );
        assert_eq!(
            list.annotate_argument(&s, &mut reg, &mut ids, pred, Span::from([0]), "Ent Dramatised", None),
            Err(PasError::RoleSyntax("Ent Dramatised".into()))
        );
    }

    #[test]
    fn shared_group_reuses_roles() {
        let mut ids = IdAllocator::default();
        let mut reg = Registry::default();
        let inv = default_tag_inventory();
        let verb = reg
            .register(
                &mut ids,
                NewPredicateType::new(en(), "dramatise", PredicateClass::Verbal),
            )
            .unwrap();
        let group = reg.predicate_type(verb).unwrap().group;
        let noun = reg
            .register(
                &mut ids,
                NewPredicateType::new(en(), "dramatisation", PredicateClass::Nominal).in_group(group),
            )
            .unwrap();
        let s = Sentence::from_surfaces("1", ["the", "dramatisation", "of", "it"]);
        let mut list = PasList::new(key());
        let p = list
            .annotate_predicate(&s, &reg, &inv, &mut ids, Span::from([1]), noun, BTreeSet::new())
            .unwrap();
        list.annotate_argument(&s, &mut reg, &mut ids, p, Span::from([2, 3]), "ent_dramatised", None)
            .unwrap();
        assert_eq!(reg.group(group).unwrap().roles.len(), 1);
    }

    #[test]
    fn antecedent_must_be_disjoint() {
        let mut ids = IdAllocator::default();
        let mut reg = Registry::default();
        let inv = default_tag_inventory();
        let ty = reg
            .register(&mut ids, NewPredicateType::new(en(), "see", PredicateClass::Verbal))
            .unwrap();
        let s = Sentence::from_surfaces("1", ["the", "report", "which", "I", "saw"]);
        let mut list = PasList::new(key());
        let p = list
            .annotate_predicate(&s, &reg, &inv, &mut ids, Span::from([4]), ty, BTreeSet::new())
            .unwrap();
        list.annotate_argument(
            &s,
            &mut reg,
            &mut ids,
            p,
            Span::from([2]),
            "ent_seen",
            Some(Span::from([0, 1])),
        )
        .unwrap();
        assert_eq!(
            list.annotate_argument(
                &s,
                &mut reg,
                &mut ids,
                p,
                Span::from([2]),
                "ent_seen",
                Some(Span::from([1, 2]))
            ),
            Err(PasError::AntecedentOverlap)
        );
    }

    #[test]
    fn argument_may_contain_another_predicate() {
        let mut ids = IdAllocator::default();
        let mut reg = Registry::default();
        let inv = default_tag_inventory();
        let agree = reg
            .register(&mut ids, NewPredicateType::new(en(), "agree", PredicateClass::Verbal))
            .unwrap();
        let have = reg
            .register(&mut ids, NewPredicateType::new(en(), "have", PredicateClass::Verbal))
            .unwrap();
        let s = Sentence::from_surfaces("1", ["we", "agreed", "to", "have", "the", "report"]);
        let mut list = PasList::new(key());
        let outer = list
            .annotate_predicate(&s, &reg, &inv, &mut ids, Span::from([1]), agree, BTreeSet::new())
            .unwrap();
        let inner = list
            .annotate_predicate(&s, &reg, &inv, &mut ids, Span::from([3]), have, BTreeSet::new())
            .unwrap();
        list.annotate_argument(&s, &mut reg, &mut ids, outer, Span::from(2..=5), "ent_agreed", None)
            .unwrap();
        assert!(list
            .argument(InstanceId(ids.0 - 1))
            .unwrap()
            .span
            .contains_span(&list.predicate(inner).unwrap().span));
        assert_eq!(list.predicates.len(), 2);
    }

    #[test]
    fn role_suggestions_rank_by_usage() {
        let mut ids = IdAllocator::default();
        let mut reg = Registry::default();
        let inv = default_tag_inventory();
        let ty = reg
            .register(
                &mut ids,
                NewPredicateType::new(en(), "dramatise", PredicateClass::Verbal),
            )
            .unwrap();
        assert!(suggest_roles(&reg, &[], ty).unwrap().is_empty());

        let s = dramatise_sentence();
        let mut list = PasList::new(key());
        for _ in 0..3 {
            let p = list
                .annotate_predicate(&s, &reg, &inv, &mut ids, Span::from([4]), ty, BTreeSet::new())
                .unwrap();
            list.annotate_argument(&s, &mut reg, &mut ids, p, Span::from([0]), "ent_dramatised", None)
                .unwrap();
        }
        let p = list.predicates[0].id;
        list.annotate_argument(&s, &mut reg, &mut ids, p, Span::from([9]), "agent", None)
            .unwrap();
        assert_eq!(suggest_roles(&reg, [&list], ty).unwrap(), ["ent_dramatised", "agent"]);

        list.annotate_argument(&s, &mut reg, &mut ids, p, Span::from([9]), "b_role", None)
            .unwrap();
        list.annotate_argument(&s, &mut reg, &mut ids, p, Span::from([9]), "a_role", None)
            .unwrap();
        assert_eq!(
            suggest_roles(&reg, [&list], ty).unwrap(),
            ["ent_dramatised", "a_role", "agent", "b_role"]
        );
    }

    #[test]
    fn candidate_lookup() {
        let mut ids = IdAllocator::default();
        let mut reg = Registry::default();
        let s = Sentence::from_surfaces(
            "4.2",
            ["I", "refer", "to", "item", "11", "and", "drag", "up", "nothing"],
        );
        assert!(suggest_predicate_candidates(&s, &en(), &reg).is_empty());
        reg.register(&mut ids, NewPredicateType::new(en(), "refer", PredicateClass::Verbal))
            .unwrap();
        reg.register(&mut ids, NewPredicateType::new(en(), "drag up", PredicateClass::Verbal))
            .unwrap();
        reg.register(
            &mut ids,
            NewPredicateType::new(LangCode::parse("de").unwrap(), "item", PredicateClass::Nominal),
        )
        .unwrap();
        assert_eq!(
            suggest_predicate_candidates(&s, &en(), &reg),
            [Span::from([1]), Span::from([6, 7])]
        );
        let none = Sentence::from_surfaces("1", ["nothing", "here"]);
        assert!(suggest_predicate_candidates(&none, &en(), &reg).is_empty());
    }

    #[test]
    fn role_name_syntax() {
        for ok in ["agent", "ent_dramatised", "arg2", "a_b_c"] {
            assert!(is_valid_role_name(ok), "{ok}");
        }
        for bad in ["", "Agent", "ent dramatised", "_x", "x_", "a__b", "2arg", "ent-x"] {
            assert!(!is_valid_role_name(bad), "{bad}");
        }
    }
}

//! Shift-tag taxonomy and the rule engine for transeme alignments.
//!
//! Rule ids `R1`..`R12` are a stable contract shared with the CLI, the
//! HTTP service and the annotation UI:
//!
//! | id  | constraint |
//! |-----|------------|
//! | R1  | at most two tags, at most one per category |
//! | R2  | (de)passivisation only between predicates of class `v` or `l` |
//! | R3  | (de)pronominalisation only between arguments |
//! | R4  | addition needs a lone target, deletion a lone source |
//! | R5  | addition and deletion stand alone on their record |
//! | R6  | explicitation never with depronominalisation |
//! | R7  | generalisation never with pronominalisation |
//! | R8  | no pronominalisation onto a relative pronoun (target has an antecedent) |
//! | R9  | a marker needs exactly one side and no tags |
//! | R10 | dangling_modal marks predicates only |
//! | R11 | number_change between two arguments or two nominal predicates |
//! | R12 | a record with both sides carries neither addition nor deletion |
//!
//! R4 is checked on one-sided records and R12 on two-sided ones, so a
//! misplaced addition or deletion is reported under exactly one rule.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::extraction::PairId;
use crate::pas::{id_type, InstanceId, PredicateClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftTag {
    CategoryChange,
    Passivisation,
    Depassivisation,
    Pronominalisation,
    Depronominalisation,
    NumberChange,
    SemanticModification,
    Explicitation,
    Generalisation,
    Addition,
    Deletion,
    Mutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TagCategory {
    Grammatical,
    Semantic,
}

impl ShiftTag {
    pub const ALL: [ShiftTag; 12] = [
        ShiftTag::CategoryChange,
        ShiftTag::Passivisation,
        ShiftTag::Depassivisation,
        ShiftTag::Pronominalisation,
        ShiftTag::Depronominalisation,
        ShiftTag::NumberChange,
        ShiftTag::SemanticModification,
        ShiftTag::Explicitation,
        ShiftTag::Generalisation,
        ShiftTag::Addition,
        ShiftTag::Deletion,
        ShiftTag::Mutation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShiftTag::CategoryChange => "category_change",
            ShiftTag::Passivisation => "passivisation",
            ShiftTag::Depassivisation => "depassivisation",
            ShiftTag::Pronominalisation => "pronominalisation",
            ShiftTag::Depronominalisation => "depronominalisation",
            ShiftTag::NumberChange => "number_change",
            ShiftTag::SemanticModification => "semantic_modification",
            ShiftTag::Explicitation => "explicitation",
            ShiftTag::Generalisation => "generalisation",
            ShiftTag::Addition => "addition",
            ShiftTag::Deletion => "deletion",
            ShiftTag::Mutation => "mutation",
        }
    }
}

pub fn classify_tag(tag: ShiftTag) -> TagCategory {
    match tag {
        ShiftTag::CategoryChange
        | ShiftTag::Passivisation
        | ShiftTag::Depassivisation
        | ShiftTag::Pronominalisation
        | ShiftTag::Depronominalisation
        | ShiftTag::NumberChange => TagCategory::Grammatical,
        ShiftTag::SemanticModification
        | ShiftTag::Explicitation
        | ShiftTag::Generalisation
        | ShiftTag::Addition
        | ShiftTag::Deletion
        | ShiftTag::Mutation => TagCategory::Semantic,
    }
}

impl fmt::Display for ShiftTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShiftTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ShiftTag::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown shift tag {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialMarker {
    DanglingModal,
    NonPas,
}

impl SpecialMarker {
    pub const ALL: [SpecialMarker; 2] = [SpecialMarker::DanglingModal, SpecialMarker::NonPas];

    pub fn name(self) -> &'static str {
        match self {
            SpecialMarker::DanglingModal => "dangling_modal",
            SpecialMarker::NonPas => "non_pas",
        }
    }
}

impl fmt::Display for SpecialMarker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransemeKind {
    Predicate,
    Argument,
}

impl TransemeKind {
    pub fn name(self) -> &'static str {
        match self {
            TransemeKind::Predicate => "predicate",
            TransemeKind::Argument => "argument",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransemeRef {
    pub side: Side,
    pub kind: TransemeKind,
    pub instance: InstanceId,
}

impl TransemeRef {
    pub fn source(kind: TransemeKind, instance: InstanceId) -> Self {
        TransemeRef {
            side: Side::Source,
            kind,
            instance,
        }
    }

    pub fn target(kind: TransemeKind, instance: InstanceId) -> Self {
        TransemeRef {
            side: Side::Target,
            kind,
            instance,
        }
    }
}

impl fmt::Display for TransemeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Source => "source",
            Side::Target => "target",
        };
        write!(f, "{side} {} {}", self.kind.name(), self.instance)
    }
}

id_type!(AlignmentId, "alignment#");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransemeAlignment {
    pub id: AlignmentId,
    pub pair: PairId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<TransemeRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TransemeRef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<ShiftTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marker: Option<SpecialMarker>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TransemeAlignment {
    pub fn refs(&self) -> impl Iterator<Item = TransemeRef> {
        self.source.into_iter().chain(self.target)
    }

    pub fn has_tag(&self, tag: ShiftTag) -> bool {
        self.tags.contains(&tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    R1,
    R2,
    R3,
    R4,
    R5,
    R6,
    R7,
    R8,
    R9,
    R10,
    R11,
    R12,
}

impl RuleId {
    pub const ALL: [RuleId; 12] = [
        RuleId::R1,
        RuleId::R2,
        RuleId::R3,
        RuleId::R4,
        RuleId::R5,
        RuleId::R6,
        RuleId::R7,
        RuleId::R8,
        RuleId::R9,
        RuleId::R10,
        RuleId::R11,
        RuleId::R12,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleId::R1 => "R1",
            RuleId::R2 => "R2",
            RuleId::R3 => "R3",
            RuleId::R4 => "R4",
            RuleId::R5 => "R5",
            RuleId::R6 => "R6",
            RuleId::R7 => "R7",
            RuleId::R8 => "R8",
            RuleId::R9 => "R9",
            RuleId::R10 => "R10",
            RuleId::R11 => "R11",
            RuleId::R12 => "R12",
        }
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: RuleId,
    pub message: String,
    pub refs: Vec<TransemeRef>,
}

/// What the rule engine needs to know about one side of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransemeInfo {
    pub kind: TransemeKind,
    /// Class of the predicate type, for predicate transemes.
    pub class: Option<PredicateClass>,
    /// Argument carries an antecedent span (relative pronoun).
    pub has_antecedent: bool,
}

impl TransemeInfo {
    pub fn predicate(class: PredicateClass) -> Self {
        TransemeInfo {
            kind: TransemeKind::Predicate,
            class: Some(class),
            has_antecedent: false,
        }
    }

    pub fn argument() -> Self {
        TransemeInfo {
            kind: TransemeKind::Argument,
            class: None,
            has_antecedent: false,
        }
    }

    pub fn relative_pronoun() -> Self {
        TransemeInfo {
            has_antecedent: true,
            ..TransemeInfo::argument()
        }
    }

    fn is_argument(&self) -> bool {
        self.kind == TransemeKind::Argument
    }

    fn is_predicate_of(&self, classes: &[PredicateClass]) -> bool {
        self.kind == TransemeKind::Predicate && self.class.is_some_and(|c| classes.contains(&c))
    }
}

/// Evaluates R1..R12 against one record and reports every violated rule
/// in rule order. `source`/`target` describe the resolved sides and must be
/// present exactly when the record's refs are.
pub fn check_rules(
    alignment: &TransemeAlignment,
    source: Option<&TransemeInfo>,
    target: Option<&TransemeInfo>,
) -> Vec<Violation> {
    let tags = &alignment.tags;
    let has = |t: ShiftTag| tags.contains(&t);
    let refs: Vec<TransemeRef> = alignment.refs().collect();
    let mut out = Vec::new();
    let mut flag = |rule: RuleId, message: String| {
        out.push(Violation {
            rule,
            message,
            refs: refs.clone(),
        })
    };
    let both = source.zip(target);
    let one_sided = source.is_some() != target.is_some();

    // R1
    let grammatical = tags
        .iter()
        .filter(|t| classify_tag(**t) == TagCategory::Grammatical)
        .count();
    let semantic = tags.len() - grammatical;
    if tags.len() > 2 || grammatical > 1 || semantic > 1 {
        flag(
            RuleId::R1,
            format!(
                "at most one grammatical and one semantic shift per record ({} grammatical, {} semantic given)",
                grammatical, semantic
            ),
        );
    }

    // R2
    let verbal = [PredicateClass::Verbal, PredicateClass::LightVerb];
    for tag in [ShiftTag::Passivisation, ShiftTag::Depassivisation] {
        if has(tag) && !both.is_some_and(|(s, t)| s.is_predicate_of(&verbal) && t.is_predicate_of(&verbal)) {
            flag(
                RuleId::R2,
                format!("{tag} requires verbal or light-verb predicates on both sides"),
            );
        }
    }

    // R3
    for tag in [ShiftTag::Pronominalisation, ShiftTag::Depronominalisation] {
        if has(tag) && !both.is_some_and(|(s, t)| s.is_argument() && t.is_argument()) {
            flag(RuleId::R3, format!("{tag} requires arguments on both sides"));
        }
    }

    // R4
    if one_sided {
        if has(ShiftTag::Addition) && source.is_some() {
            flag(
                RuleId::R4,
                "addition applies to a target transeme without a source".into(),
            );
        }
        if has(ShiftTag::Deletion) && target.is_some() {
            flag(
                RuleId::R4,
                "deletion applies to a source transeme without a target".into(),
            );
        }
    }

    // R5
    if (has(ShiftTag::Addition) || has(ShiftTag::Deletion)) && tags.len() > 1 {
        flag(
            RuleId::R5,
            "addition and deletion admit no other tag on the same record".into(),
        );
    }

    // R6
    if has(ShiftTag::Explicitation) && has(ShiftTag::Depronominalisation) {
        flag(
            RuleId::R6,
            "explicitation is redundant next to depronominalisation and is not annotated".into(),
        );
    }

    // R7
    if has(ShiftTag::Generalisation) && has(ShiftTag::Pronominalisation) {
        flag(
            RuleId::R7,
            "generalisation is not used for pronominalisation shifts".into(),
        );
    }

    // R8
    if has(ShiftTag::Pronominalisation) && target.is_some_and(|t| t.is_argument() && t.has_antecedent) {
        flag(
            RuleId::R8,
            "pronominalisation is not used when the target is a relative pronoun".into(),
        );
    }

    if let Some(marker) = alignment.marker {
        // R9
        if !one_sided || !tags.is_empty() {
            flag(
                RuleId::R9,
                format!("{marker} marks a single unaligned transeme and carries no shift tags"),
            );
        }
        // R10
        if marker == SpecialMarker::DanglingModal
            && source
                .into_iter()
                .chain(target)
                .any(|s| s.kind != TransemeKind::Predicate)
        {
            flag(RuleId::R10, "dangling_modal applies only to predicates".into());
        }
    }

    // R11
    if has(ShiftTag::NumberChange) {
        let ok = both.is_some_and(|(s, t)| {
            (s.is_argument() && t.is_argument())
                || (s.is_predicate_of(&[PredicateClass::Nominal]) && t.is_predicate_of(&[PredicateClass::Nominal]))
        });
        if !ok {
            flag(
                RuleId::R11,
                "number_change requires two arguments or two nominal predicates".into(),
            );
        }
    }

    // R12
    if both.is_some() && (has(ShiftTag::Addition) || has(ShiftTag::Deletion)) {
        flag(
            RuleId::R12,
            "a record aligning two transemes cannot carry addition or deletion".into(),
        );
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use PredicateClass::*;
    use ShiftTag::*;

    fn record(source: Option<TransemeKind>, target: Option<TransemeKind>, tags: &[ShiftTag]) -> TransemeAlignment {
        TransemeAlignment {
            id: AlignmentId(1),
            pair: PairId::from("p"),
            source: source.map(|k| TransemeRef::source(k, InstanceId(1))),
            target: target.map(|k| TransemeRef::target(k, InstanceId(2))),
            tags: tags.to_vec(),
            marker: None,
            note: None,
        }
    }

    fn rules(v: Vec<Violation>) -> Vec<RuleId> {
        v.into_iter().map(|v| v.rule).collect()
    }

    const P: Option<TransemeKind> = Some(TransemeKind::Predicate);
    const A: Option<TransemeKind> = Some(TransemeKind::Argument);

    #[test]
    fn classification_partitions_six_six() {
        let grammatical = ShiftTag::ALL
            .iter()
            .filter(|t| classify_tag(**t) == TagCategory::Grammatical)
            .count();
        assert_eq!(grammatical, 6);
        assert_eq!(classify_tag(Passivisation), TagCategory::Grammatical);
        assert_eq!(classify_tag(Explicitation), TagCategory::Semantic);
        assert_eq!(classify_tag(Mutation), TagCategory::Semantic);
        for t in ShiftTag::ALL {
            assert_eq!(t.name().parse::<ShiftTag>().unwrap(), t);
        }
    }

    #[test]
    fn two_grammatical_tags() {
        let verb = TransemeInfo::predicate(Verbal);
        let r = record(P, P, &[CategoryChange, Passivisation]);
        assert_eq!(rules(check_rules(&r, Some(&verb), Some(&verb))), [RuleId::R1]);
    }

    #[test]
    fn marker_with_both_sides() {
        let verb = TransemeInfo::predicate(Verbal);
        let mut r = record(P, P, &[]);
        r.marker = Some(SpecialMarker::DanglingModal);
        assert_eq!(rules(check_rules(&r, Some(&verb), Some(&verb))), [RuleId::R9]);
    }

    #[test]
    fn passivisation_between_arguments() {
        let arg = TransemeInfo::argument();
        let r = record(A, A, &[Passivisation]);
        assert_eq!(rules(check_rules(&r, Some(&arg), Some(&arg))), [RuleId::R2]);
    }

    #[test]
    fn violations_are_collected_exhaustively() {
        let verb = TransemeInfo::predicate(Verbal);
        let r = record(P, P, &[Depronominalisation, Explicitation, Addition]);
        assert_eq!(
            rules(check_rules(&r, Some(&verb), Some(&verb))),
            [RuleId::R1, RuleId::R3, RuleId::R5, RuleId::R6, RuleId::R12]
        );
    }

    #[test]
    fn light_verbs_passivise_copulas_do_not() {
        let lv = TransemeInfo::predicate(LightVerb);
        let verb = TransemeInfo::predicate(Verbal);
        let cop = TransemeInfo::predicate(Copula);
        let r = record(P, P, &[Passivisation]);
        assert!(check_rules(&r, Some(&lv), Some(&verb)).is_empty());
        assert_eq!(rules(check_rules(&r, Some(&cop), Some(&verb))), [RuleId::R2]);
    }

    #[test]
    fn mutation_with_one_grammatical_tag() {
        let verb = TransemeInfo::predicate(Verbal);
        let noun = TransemeInfo::predicate(Nominal);
        let r = record(P, P, &[CategoryChange, Mutation]);
        assert!(check_rules(&r, Some(&verb), Some(&noun)).is_empty());
    }

    #[test]
    fn check_rules_is_pure() {
        let arg = TransemeInfo::argument();
        let r = record(A, A, &[Depronominalisation, Explicitation]);
        let first = check_rules(&r, Some(&arg), Some(&arg));
        assert_eq!(first, check_rules(&r, Some(&arg), Some(&arg)));
        assert_eq!(rules(first), [RuleId::R6]);
    }
}

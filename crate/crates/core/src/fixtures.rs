//! Bundled fixtures: the four worked English-German examples as a fully
//! annotated project, and a six-link extraction fixture.

use crate::corpus::{
    parse_alignment, parse_corpus, AlignmentLink, Corpus, CorpusFormat, Document, LangCode, Sentence, SentenceKey,
    SentenceRef,
};
use crate::extraction::{PairId, SpeakerWhitelist};
use crate::par::Execution;
use crate::pas::{InstanceId, NewPredicateType, PredicateClass, Span};
use crate::project::{AlignmentRequest, Project};
use crate::shift::{RuleId, ShiftTag, SpecialMarker, TransemeKind, TransemeRef};

pub const WORKED_DOCUMENT: &str = "ep-00-01-18";
pub const WORKED_SENTENCES: [&str; 4] = ["4.2", "8.4", "11.1", "13.3"];

/// Raw inputs of a bilingual fixture.
pub struct Bitext {
    pub source: Corpus,
    pub target: Corpus,
    pub links: Vec<AlignmentLink>,
    pub whitelist: SpeakerWhitelist,
}

fn bitext(source: &str, target: &str, links: &str, whitelist: &str) -> Bitext {
    Bitext {
        source: parse_corpus(source.as_bytes(), CorpusFormat::Xml).expect("bundled source corpus parses"),
        target: parse_corpus(target.as_bytes(), CorpusFormat::Xml).expect("bundled target corpus parses"),
        links: parse_alignment(links.as_bytes()).expect("bundled links parse"),
        whitelist: SpeakerWhitelist::from_reader(whitelist.as_bytes()).expect("bundled whitelist reads"),
    }
}

pub fn worked_bitext() -> Bitext {
    bitext(
        include_str!("../fixtures/worked/en.xml"),
        include_str!("../fixtures/worked/de.xml"),
        include_str!("../fixtures/worked/links.tsv"),
        include_str!("../fixtures/worked/whitelist.txt"),
    )
}

pub fn extraction_bitext() -> Bitext {
    bitext(
        include_str!("../fixtures/extraction/en.xml"),
        include_str!("../fixtures/extraction/de.xml"),
        include_str!("../fixtures/extraction/links.tsv"),
        include_str!("../fixtures/extraction/whitelist.txt"),
    )
}

/// Ingested and extracted but not yet annotated.
pub fn worked_pairs() -> Project {
    let b = worked_bitext();
    let mut p = Project::from_bitext(b.source, b.target, b.links).expect("worked bitext is consistent");
    p.extract(&b.whitelist, Some("debate"), Execution::Sequential)
        .expect("worked links resolve");
    p
}

pub fn worked_pair_id(sentence: &str) -> PairId {
    PairId(format!("en-de:{WORKED_DOCUMENT}:{sentence}"))
}

struct Builder {
    project: Project,
}

impl Builder {
    fn key(&self, lang: &LangCode, sentence: &str) -> SentenceKey {
        SentenceKey {
            lang: lang.clone(),
            document: WORKED_DOCUMENT.into(),
            sentence: sentence.into(),
        }
    }

    fn predicate(&mut self, lang: &LangCode, sentence: &str, lemma: &str, span: Span, tags: &[&str]) -> InstanceId {
        let ty = self
            .project
            .register_predicate_type(NewPredicateType::new(lang.clone(), lemma, PredicateClass::Verbal))
            .expect("fixture lemma registers");
        let key = self.key(lang, sentence);
        self.project
            .annotate_predicate(&key, span, ty, tags)
            .expect("fixture predicate annotates")
    }

    fn argument(&mut self, parent: InstanceId, span: Span, role: &str) -> InstanceId {
        self.project
            .annotate_argument(parent, span, role, None)
            .expect("fixture argument annotates")
    }

    fn align(&mut self, sentence: &str, request: AlignmentRequest) {
        self.project
            .align(&worked_pair_id(sentence), request)
            .expect("fixture alignment is valid");
    }
}

fn sp(i: InstanceId) -> TransemeRef {
    TransemeRef::source(TransemeKind::Predicate, i)
}

fn tp(i: InstanceId) -> TransemeRef {
    TransemeRef::target(TransemeKind::Predicate, i)
}

fn sa(i: InstanceId) -> TransemeRef {
    TransemeRef::source(TransemeKind::Argument, i)
}

fn ta(i: InstanceId) -> TransemeRef {
    TransemeRef::target(TransemeKind::Argument, i)
}

/// The four worked examples, fully annotated and aligned.
pub fn worked_examples() -> Project {
    let project = worked_pairs();
    let en = project.corpora[0].language.clone();
    let de = project.corpora[1].language.clone();
    let mut b = Builder { project };

    // Example 1: no shift.
    let s = "4.2";
    let refer = b.predicate(&en, s, "refer", Span::from([1]), &[]);
    let refer_agent = b.argument(refer, Span::from([0]), "agent");
    let refer_topic = b.argument(refer, Span::from(2..=9), "topic");
    let beziehen = b.predicate(&de, s, "beziehen", Span::from([1, 2]), &[]);
    let beziehen_agent = b.argument(beziehen, Span::from([0]), "agent");
    let beziehen_topic = b.argument(beziehen, Span::from(3..=7), "topic");
    b.align(s, AlignmentRequest::between(sp(refer), tp(beziehen), &[]));
    b.align(s, AlignmentRequest::between(sa(refer_agent), ta(beziehen_agent), &[]));
    b.align(s, AlignmentRequest::between(sa(refer_topic), ta(beziehen_topic), &[]));

    // Example 2: agentless passive rendered actively.
    let s = "8.4";
    let dramatise = b.predicate(&en, s, "dramatise", Span::from([4]), &["passive"]);
    let dramatise_theme = b.argument(dramatise, Span::from([0]), "theme");
    let dramatise_result = b.argument(dramatise, Span::from(5..=9), "result");
    let aufbauschen = b.predicate(&de, s, "aufbauschen", Span::from([7]), &[]);
    let aufbauschen_agent = b.argument(aufbauschen, Span::from([0]), "agent");
    let aufbauschen_theme = b.argument(aufbauschen, Span::from([2, 3, 4]), "theme");
    b.align(
        s,
        AlignmentRequest::between(sp(dramatise), tp(aufbauschen), &[ShiftTag::Depassivisation]),
    );
    b.align(
        s,
        AlignmentRequest::target_only(ta(aufbauschen_agent), &[ShiftTag::Addition]),
    );
    b.align(
        s,
        AlignmentRequest::source_only(sa(dramatise_result), &[ShiftTag::Deletion]),
    );
    b.align(
        s,
        AlignmentRequest::between(
            sa(dramatise_theme),
            ta(aufbauschen_theme),
            &[ShiftTag::Depronominalisation],
        ),
    );

    // Example 3: stative source predicate, telic target predicate.
    let s = "11.1";
    let have = b.predicate(&en, s, "have", Span::from([4]), &["infinitive"]);
    let have_agent = b.argument(have, Span::from([0]), "agent");
    let have_theme = b.argument(have, Span::from([5, 6, 7]), "theme");
    let have_location = b.argument(have, Span::from(8..=10), "location");
    let setzen = b.predicate(&de, s, "setzen", Span::from([14]), &["infinitive"]);
    let setzen_agent = b.argument(setzen, Span::from([0]), "agent");
    let setzen_theme = b.argument(setzen, Span::from([5, 6, 7]), "theme");
    let setzen_location = b.argument(setzen, Span::from(8..=12), "location");
    b.align(
        s,
        AlignmentRequest::between(sp(have), tp(setzen), &[ShiftTag::SemanticModification])
            .with_note("aktionsart: stative have vs. telic setzen"),
    );
    b.align(s, AlignmentRequest::between(sa(have_agent), ta(setzen_agent), &[]));
    b.align(s, AlignmentRequest::between(sa(have_theme), ta(setzen_theme), &[]));
    b.align(
        s,
        AlignmentRequest::between(sa(have_location), ta(setzen_location), &[]),
    );

    // Example 4: specific noun phrase rendered by a general one.
    let s = "13.3";
    let drag_up = b.predicate(&en, s, "drag up", Span::from([5, 6]), &["infinitive"]);
    let drag_agent = b.argument(drag_up, Span::from([0]), "agent");
    let drag_topic = b.argument(drag_up, Span::from(7..=11), "topic");
    let herumreiten = b.predicate(&de, s, "herumreiten", Span::from([7]), &[]);
    let reiten_agent = b.argument(herumreiten, Span::from([0]), "agent");
    let reiten_topic = b.argument(herumreiten, Span::from([4, 5, 6]), "topic");
    b.align(s, AlignmentRequest::between(sp(drag_up), tp(herumreiten), &[]));
    b.align(s, AlignmentRequest::between(sa(drag_agent), ta(reiten_agent), &[]));
    b.align(
        s,
        AlignmentRequest::between(sa(drag_topic), ta(reiten_topic), &[ShiftTag::Generalisation]),
    );

    b.project
}

/// Transemes of the rule-matrix pair.
#[derive(Debug, Clone, Copy)]
pub struct MatrixTransemes {
    pub source_verb: InstanceId,
    pub source_noun: InstanceId,
    pub source_arg: InstanceId,
    pub target_verb: InstanceId,
    pub target_noun: InstanceId,
    pub target_arg: InstanceId,
    pub target_relative: InstanceId,
}

/// A violating record and a passing sibling for one rule.
#[derive(Debug, Clone)]
pub struct RuleCase {
    pub rule: RuleId,
    pub violating: AlignmentRequest,
    pub passing: AlignmentRequest,
}

pub const MATRIX_PAIR: &str = "en-de:m:1";

/// One pair with verbal and nominal predicates on both sides and a
/// relative pronoun on the target side; nothing aligned yet.
pub fn rule_matrix_project() -> (Project, MatrixTransemes) {
    let en = LangCode::parse("en").expect("valid code");
    let de = LangCode::parse("de").expect("valid code");
    let mut source = Sentence::from_surfaces("1", ["She", "praised", "the", "decision", "."]);
    source.speaker_name = Some("Moss, Ada".into());
    let mut target = Sentence::from_surfaces("1", ["Sie", "lobte", "die", "Entscheidung", ",", "die", "fiel", "."]);
    target.language_attr = Some(en.clone());
    let corpus = |language: &LangCode, s: Sentence| Corpus {
        language: language.clone(),
        documents: vec![Document {
            id: "m".into(),
            sentences: vec![s],
        }],
    };
    let link = AlignmentLink::one_to_one(SentenceRef::new("m", "1"), SentenceRef::new("m", "1"));
    let mut p = Project::from_bitext(corpus(&en, source), corpus(&de, target), vec![link])
        .expect("matrix bitext is consistent");
    p.extract(&SpeakerWhitelist::new(["Moss, Ada"]), None, Execution::Sequential)
        .expect("matrix link resolves");
    let src = SentenceKey::new(en.clone(), &SentenceRef::new("m", "1"));
    let tgt = SentenceKey::new(de.clone(), &SentenceRef::new("m", "1"));

    let mut ty = |lang: &LangCode, lemma: &str, class| {
        p.register_predicate_type(NewPredicateType::new(lang.clone(), lemma, class))
            .expect("matrix lemma registers")
    };
    let praise = ty(&en, "praise", PredicateClass::Verbal);
    let decision = ty(&en, "decision", PredicateClass::Nominal);
    let loben = ty(&de, "loben", PredicateClass::Verbal);
    let entscheidung = ty(&de, "entscheidung", PredicateClass::Nominal);
    let fallen = ty(&de, "fallen", PredicateClass::Verbal);

    let ok = "matrix annotation is valid";
    let source_verb = p.annotate_predicate(&src, Span::from([1]), praise, &[]).expect(ok);
    let source_noun = p.annotate_predicate(&src, Span::from([3]), decision, &[]).expect(ok);
    let source_arg = p
        .annotate_argument(source_verb, Span::from([0]), "agent", None)
        .expect(ok);
    let target_verb = p.annotate_predicate(&tgt, Span::from([1]), loben, &[]).expect(ok);
    let target_noun = p
        .annotate_predicate(&tgt, Span::from([3]), entscheidung, &[])
        .expect(ok);
    let target_arg = p
        .annotate_argument(target_verb, Span::from([0]), "agent", None)
        .expect(ok);
    let fallen_pred = p.annotate_predicate(&tgt, Span::from([6]), fallen, &[]).expect(ok);
    let target_relative = p
        .annotate_argument(fallen_pred, Span::from([5]), "theme", Some(Span::from([2, 3])))
        .expect(ok);
    (
        p,
        MatrixTransemes {
            source_verb,
            source_noun,
            source_arg,
            target_verb,
            target_noun,
            target_arg,
            target_relative,
        },
    )
}

/// Twelve minimal violating records with passing siblings, one per rule.
pub fn rule_matrix(t: &MatrixTransemes) -> Vec<RuleCase> {
    use ShiftTag::*;
    let (sv, sn, sarg) = (sp(t.source_verb), sp(t.source_noun), sa(t.source_arg));
    let (tv, tn, targ, trel) = (
        tp(t.target_verb),
        tp(t.target_noun),
        ta(t.target_arg),
        ta(t.target_relative),
    );
    let pair = AlignmentRequest::between;
    let case = |rule, violating, passing| RuleCase {
        rule,
        violating,
        passing,
    };
    vec![
        case(
            RuleId::R1,
            pair(sv, tv, &[CategoryChange, Passivisation]),
            pair(sv, tv, &[Passivisation]),
        ),
        case(
            RuleId::R2,
            pair(sarg, targ, &[Passivisation]),
            pair(sv, tv, &[Passivisation]),
        ),
        case(
            RuleId::R3,
            pair(sv, tv, &[Depronominalisation]),
            pair(sarg, targ, &[Depronominalisation]),
        ),
        case(
            RuleId::R4,
            AlignmentRequest::source_only(sarg, &[Addition]),
            AlignmentRequest::target_only(targ, &[Addition]),
        ),
        case(
            RuleId::R5,
            AlignmentRequest::target_only(targ, &[CategoryChange, Addition]),
            AlignmentRequest::target_only(targ, &[Addition]),
        ),
        case(
            RuleId::R6,
            pair(sarg, targ, &[Depronominalisation, Explicitation]),
            pair(sarg, targ, &[Depronominalisation]),
        ),
        case(
            RuleId::R7,
            pair(sarg, targ, &[Pronominalisation, Generalisation]),
            pair(sarg, targ, &[Pronominalisation]),
        ),
        case(
            RuleId::R8,
            pair(sarg, trel, &[Pronominalisation]),
            pair(sarg, targ, &[Pronominalisation]),
        ),
        case(
            RuleId::R9,
            pair(sv, tv, &[]).with_marker(SpecialMarker::DanglingModal),
            AlignmentRequest::target_only(tv, &[]).with_marker(SpecialMarker::DanglingModal),
        ),
        case(
            RuleId::R10,
            AlignmentRequest::source_only(sarg, &[]).with_marker(SpecialMarker::DanglingModal),
            AlignmentRequest::source_only(sv, &[]).with_marker(SpecialMarker::DanglingModal),
        ),
        case(
            RuleId::R11,
            pair(sv, tv, &[NumberChange]),
            pair(sn, tn, &[NumberChange]),
        ),
        case(
            RuleId::R12,
            pair(sarg, targ, &[Addition]),
            AlignmentRequest::source_only(sarg, &[Deletion]),
        ),
    ]
}

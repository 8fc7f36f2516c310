//! Seeded generator of valid random projects for property tests and
//! benchmarks. Every mutation goes through the public project API, so a
//! generated project is valid by construction.

use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};

use crate::corpus::{AlignmentLink, Corpus, Document, LangCode, Sentence, SentenceRef};
use crate::extraction::SpeakerWhitelist;
use crate::par::Execution;
use crate::pas::{InstanceId, NewPredicateType, PredicateClass, PredicateTypeId, Span};
use crate::project::{AlignmentRequest, Project};
use crate::shift::{ShiftTag, SpecialMarker, TransemeKind, TransemeRef};

#[derive(Debug, Clone, Copy)]
pub struct GenConfig {
    pub sentences: usize,
    pub max_tokens: usize,
    pub max_predicates: usize,
    pub align_attempts: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            sentences: 6,
            max_tokens: 10,
            max_predicates: 3,
            align_attempts: 12,
        }
    }
}

const WORDS: &[&str] = &[
    "we", "agree", "the", "report", "today", "Wir", "Bericht", "heute", "setzen", "über", "ça", "item", "order",
];
const SPEAKERS: &[&str] = &["Halloran, Ruth", "Lindqvist, Per", "Mercadal, Iñigo"];
const GENRES: &[&str] = &["debate", "literary", "news, wire"];
const ROLES: &[&str] = &["agent", "theme", "topic", "location", "result"];
const CLASSES: &[PredicateClass] = &[
    PredicateClass::Verbal,
    PredicateClass::Verbal,
    PredicateClass::LightVerb,
    PredicateClass::Nominal,
    PredicateClass::Adjectival,
    PredicateClass::Copula,
];

fn span(rng: &mut StdRng, len: usize) -> Span {
    let start = rng.random_range(0..len);
    let end = (start + rng.random_range(0..3)).min(len - 1);
    Span::from(start..=end)
}

fn corpus(rng: &mut StdRng, lang: &str, cfg: &GenConfig, source_lang: Option<&LangCode>) -> Corpus {
    let language = LangCode::parse(lang).expect("valid code");
    let sentences = (1..=cfg.sentences)
        .map(|i| {
            let n = rng.random_range(1..=cfg.max_tokens.max(1));
            let mut s = Sentence::from_surfaces(format!("{i}"), (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")));
            s.speaker_name = Some(SPEAKERS.choose(rng).expect("non-empty").to_string());
            s.language_attr = source_lang.cloned();
            s
        })
        .collect();
    Corpus {
        language,
        documents: vec![Document {
            id: "g".into(),
            sentences,
        }],
    }
}

fn random_tags(rng: &mut StdRng) -> Vec<ShiftTag> {
    let n = [0, 1, 1, 1, 2, 3].choose(rng).copied().unwrap_or(0);
    (0..n).map(|_| *ShiftTag::ALL.choose(rng).expect("non-empty")).collect()
}

/// A random valid project. The same seed and config give the same project.
pub fn random_project(seed: u64, cfg: &GenConfig) -> Project {
    let mut rng = StdRng::seed_from_u64(seed);
    let (src_code, tgt_code) = if rng.random_bool(0.8) {
        ("en", "de")
    } else {
        ("de", "en")
    };
    let source = corpus(&mut rng, src_code, cfg, None);
    let target = corpus(&mut rng, tgt_code, cfg, Some(&source.language));
    let links: Vec<AlignmentLink> = (1..=cfg.sentences)
        .map(|i| {
            let r = SentenceRef::new("g", format!("{i}"));
            AlignmentLink::one_to_one(r.clone(), r)
        })
        .collect();
    let (src_lang, tgt_lang) = (source.language.clone(), target.language.clone());
    let mut p = Project::from_bitext(source, target, links).expect("generated bitext is consistent");
    p.extract(&SpeakerWhitelist::new(SPEAKERS), None, Execution::Sequential)
        .expect("generated links resolve");
    for pair in &mut p.pairs {
        if rng.random_bool(0.8) {
            let genre = GENRES.choose(&mut rng).expect("non-empty").to_string();
            p.config.genre_labels.insert(genre.clone());
            pair.genre = Some(genre);
        }
    }

    let mut types: Vec<(LangCode, PredicateTypeId)> = Vec::new();
    for lang in [&src_lang, &tgt_lang] {
        for i in 0..4 {
            let class = *CLASSES.choose(&mut rng).expect("non-empty");
            let lemma = format!("{}{}", WORDS.choose(&mut rng).expect("non-empty"), i);
            let id = p
                .register_predicate_type(NewPredicateType::new(lang.clone(), &lemma, class))
                .expect("generated lemmas are distinct");
            types.push((lang.clone(), id));
        }
    }

    let pairs = p.pairs.clone();
    for pair in &pairs {
        let mut refs: [Vec<TransemeRef>; 2] = [Vec::new(), Vec::new()];
        for (slot, key) in [&pair.source, &pair.target].into_iter().enumerate() {
            let len = p.sentence(key).map(|s| s.tokens.len()).expect("pair sentence exists");
            let candidates: Vec<PredicateTypeId> = types
                .iter()
                .filter(|(l, _)| l == &key.lang)
                .map(|(_, id)| *id)
                .collect();
            for _ in 0..rng.random_range(0..=cfg.max_predicates) {
                let ty = *candidates.choose(&mut rng).expect("types per language");
                let tags: &[&str] = match rng.random_range(0..4) {
                    0 => &["passive"],
                    1 => &["infinitive"],
                    _ => &[],
                };
                let sp = span(&mut rng, len);
                let pred = p.annotate_predicate(key, sp, ty, tags).expect("span in range");
                refs[slot].push(side_ref(slot, TransemeKind::Predicate, pred));
                for _ in 0..rng.random_range(0..=2) {
                    let role = *ROLES.choose(&mut rng).expect("non-empty");
                    let arg_span = span(&mut rng, len);
                    let antecedent = if rng.random_bool(0.2) {
                        let a = span(&mut rng, len);
                        a.is_disjoint(&arg_span).then_some(a)
                    } else {
                        None
                    };
                    let arg = p
                        .annotate_argument(pred, arg_span, role, antecedent)
                        .expect("argument is valid");
                    refs[slot].push(side_ref(slot, TransemeKind::Argument, arg));
                }
            }
        }
        for _ in 0..cfg.align_attempts {
            let source = if rng.random_bool(0.8) {
                refs[0].choose(&mut rng).copied()
            } else {
                None
            };
            let target = if rng.random_bool(0.8) {
                refs[1].choose(&mut rng).copied()
            } else {
                None
            };
            let mut request = AlignmentRequest {
                source,
                target,
                tags: random_tags(&mut rng),
                ..Default::default()
            };
            if rng.random_bool(0.1) {
                request.marker = Some(*SpecialMarker::ALL.choose(&mut rng).expect("non-empty"));
                request.tags.clear();
            }
            if rng.random_bool(0.5) {
                request.note = Some("n".into());
            }
            let _ = p.align(&pair.id, request);
        }
    }
    p
}

fn side_ref(slot: usize, kind: TransemeKind, id: InstanceId) -> TransemeRef {
    if slot == 0 {
        TransemeRef::source(kind, id)
    } else {
        TransemeRef::target(kind, id)
    }
}

//! Sentence-aligned bilingual corpora.
//!
//! Two interchange formats are supported for corpora:
//!
//! * a small XML dialect:
//!   `<corpus lang="en"><doc id="..."><s id="4.2" name="..." language="EN"><w>It</w> ...</s></doc></corpus>`
//! * a line-delimited JSON alternative with one record per line
//!   (`corpus`, `doc`, `sentence`, `token`), each record attaching to the
//!   most recent enclosing record.
//!
//! Sentence alignments are read from a tab-separated file with one link per
//! line: `src-doc:src-id[,src-id...] <TAB> tgt-doc:tgt-id[,tgt-id...]`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Where in an input stream a problem was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Byte(u64),
    Line(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Byte(b) => write!(f, "byte {b}"),
            Location::Line(l) => write!(f, "line {l}"),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed input at {location}: {message}")]
    Malformed { location: Location, message: String },
    #[error("duplicate {what} id {id:?}")]
    DuplicateId { what: &'static str, id: String },
    #[error("sentence {0} appears in more than one alignment link")]
    OverlappingLink(SentenceRef),
    #[error("invalid corpus: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    fn malformed(location: Location, message: impl Into<String>) -> Self {
        CorpusError::Malformed {
            location,
            message: message.into(),
        }
    }
}

/// ISO-639-1 language code, always stored as two lowercase ASCII letters.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LangCode(String);

impl LangCode {
    /// Accepts two ASCII letters in any case and lowercases them.
    pub fn parse(raw: &str) -> Result<Self, InvalidLangCode> {
        if raw.len() == 2 && raw.bytes().all(|b| b.is_ascii_alphabetic()) {
            Ok(LangCode(raw.to_ascii_lowercase()))
        } else {
            Err(InvalidLangCode(raw.to_string()))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid language code {0:?} (expected two ASCII letters)")]
pub struct InvalidLangCode(pub String);

impl TryFrom<String> for LangCode {
    type Error = InvalidLangCode;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        LangCode::parse(&value)
    }
}

impl From<LangCode> for String {
    fn from(value: LangCode) -> Self {
        value.0
    }
}

impl FromStr for LangCode {
    type Err = InvalidLangCode;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LangCode::parse(s)
    }
}

impl fmt::Display for LangCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub surface: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_attr: Option<LangCode>,
}

impl Sentence {
    /// Builds a sentence from token surfaces, numbering them from 0.
    pub fn from_surfaces<S: Into<String>>(id: impl Into<String>, surfaces: impl IntoIterator<Item = S>) -> Self {
        Sentence {
            id: id.into(),
            tokens: surfaces
                .into_iter()
                .enumerate()
                .map(|(index, s)| Token {
                    index,
                    surface: s.into(),
                })
                .collect(),
            speaker_name: None,
            language_attr: None,
        }
    }

    pub fn text(&self) -> String {
        self.tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub sentences: Vec<Sentence>,
}

impl Document {
    pub fn sentence(&self, id: &str) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub language: LangCode,
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn new(language: LangCode) -> Self {
        Corpus {
            language,
            documents: Vec::new(),
        }
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    pub fn sentence(&self, document: &str, sentence: &str) -> Option<&Sentence> {
        self.document(document)?.sentence(sentence)
    }

    /// Lookup table from `(document id, sentence id)` to sentence.
    pub fn index(&self) -> HashMap<(&str, &str), &Sentence> {
        self.documents
            .iter()
            .flat_map(|d| d.sentences.iter().map(move |s| ((d.id.as_str(), s.id.as_str()), s)))
            .collect()
    }

    pub fn sentence_count(&self) -> usize {
        self.documents.iter().map(|d| d.sentences.len()).sum()
    }

    pub fn token_count(&self) -> usize {
        self.documents
            .iter()
            .flat_map(|d| &d.sentences)
            .map(|s| s.tokens.len())
            .sum()
    }

    /// Checks every structural invariant of the corpus.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut doc_ids = HashSet::new();
        for doc in &self.documents {
            if !is_valid_document_id(&doc.id) {
                return Err(CorpusError::Invalid(format!("invalid document id {:?}", doc.id)));
            }
            if !doc_ids.insert(doc.id.as_str()) {
                return Err(CorpusError::DuplicateId {
                    what: "document",
                    id: doc.id.clone(),
                });
            }
            let mut sentence_ids = HashSet::new();
            for s in &doc.sentences {
                if !is_valid_sentence_id(&s.id) {
                    return Err(CorpusError::Invalid(format!("invalid sentence id {:?}", s.id)));
                }
                if !sentence_ids.insert(s.id.as_str()) {
                    return Err(CorpusError::DuplicateId {
                        what: "sentence",
                        id: s.id.clone(),
                    });
                }
                for (i, t) in s.tokens.iter().enumerate() {
                    if t.index != i {
                        return Err(CorpusError::Invalid(format!(
                            "sentence {}: token {} carries index {}",
                            s.id, i, t.index
                        )));
                    }
                    if let Err(why) = check_surface(&t.surface) {
                        return Err(CorpusError::Invalid(format!("sentence {}: token {}: {}", s.id, i, why)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sentence ids are dotted decimal numbers such as `4` or `4.2`.
pub fn is_valid_sentence_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .split('.')
            .all(|part| !part.is_empty() && part.bytes().all(|b| b.is_ascii_digit()))
}

/// Document ids may not be empty or contain whitespace, `:` or `,`, the
/// separators of the alignment file.
pub fn is_valid_document_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c == ':' || c == ',')
}

fn check_surface(surface: &str) -> Result<(), &'static str> {
    if surface.is_empty() {
        Err("empty token")
    } else if surface.contains(['\n', '\r']) {
        Err("token contains a line break")
    } else {
        Ok(())
    }
}

/// A `(document id, sentence id)` pair inside one corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceRef {
    pub document: String,
    pub sentence: String,
}

impl SentenceRef {
    pub fn new(document: impl Into<String>, sentence: impl Into<String>) -> Self {
        SentenceRef {
            document: document.into(),
            sentence: sentence.into(),
        }
    }
}

impl fmt::Display for SentenceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.document, self.sentence)
    }
}

/// A fully qualified sentence: corpus language plus position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SentenceKey {
    pub lang: LangCode,
    pub document: String,
    pub sentence: String,
}

impl SentenceKey {
    pub fn new(lang: LangCode, r: &SentenceRef) -> Self {
        SentenceKey {
            lang,
            document: r.document.clone(),
            sentence: r.sentence.clone(),
        }
    }
}

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.lang, self.document, self.sentence)
    }
}

/// One sentence-alignment link between a source and a target corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentLink {
    pub source_ids: Vec<SentenceRef>,
    pub target_ids: Vec<SentenceRef>,
}

impl AlignmentLink {
    pub fn one_to_one(source: SentenceRef, target: SentenceRef) -> Self {
        AlignmentLink {
            source_ids: vec![source],
            target_ids: vec![target],
        }
    }

    pub fn is_one_to_one(&self) -> bool {
        self.source_ids.len() == 1 && self.target_ids.len() == 1
    }
}

impl fmt::Display for AlignmentLink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_link_side(f, &self.source_ids)?;
        f.write_str("\t")?;
        write_link_side(f, &self.target_ids)
    }
}

fn write_link_side(f: &mut fmt::Formatter<'_>, ids: &[SentenceRef]) -> fmt::Result {
    // Every id of one side lives in the same document; the parser enforces it.
    let doc = ids.first().map(|r| r.document.as_str()).unwrap_or_default();
    write!(f, "{doc}:")?;
    for (i, r) in ids.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        f.write_str(&r.sentence)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Xml,
    JsonLines,
}

impl FromStr for CorpusFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "xml" => Ok(CorpusFormat::Xml),
            "jsonl" | "jsonlines" => Ok(CorpusFormat::JsonLines),
            other => Err(format!("unknown corpus format {other:?} (expected xml or jsonl)")),
        }
    }
}

pub fn parse_corpus<R: BufRead>(input: R, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    let corpus = match format {
        CorpusFormat::Xml => parse_xml(input)?,
        CorpusFormat::JsonLines => parse_jsonl(input)?,
    };
    corpus.validate()?;
    Ok(corpus)
}

pub fn write_corpus<W: Write>(corpus: &Corpus, format: CorpusFormat, out: W) -> std::io::Result<()> {
    match format {
        CorpusFormat::Xml => write_xml(corpus, out),
        CorpusFormat::JsonLines => write_jsonl(corpus, out),
    }
}

// ---------------------------------------------------------------------------
// XML dialect

#[derive(Clone, Copy, PartialEq, Eq)]
enum XmlState {
    Start,
    Corpus,
    Doc,
    Sentence,
    Word,
    End,
}

fn xml_attrs<R>(
    reader: &Reader<R>,
    e: &BytesStart<'_>,
    allowed: &[&str],
) -> Result<HashMap<String, String>, CorpusError> {
    let at = Location::Byte(reader.buffer_position());
    let mut out = HashMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| CorpusError::malformed(at, err.to_string()))?;
        let key = std::str::from_utf8(attr.key.as_ref())
            .map_err(|err| CorpusError::malformed(at, err.to_string()))?
            .to_string();
        if !allowed.contains(&key.as_str()) {
            return Err(CorpusError::malformed(at, format!("unexpected attribute {key:?}")));
        }
        let value = attr
            .decode_and_unescape_value(reader.decoder())
            .map_err(|err| CorpusError::malformed(at, err.to_string()))?
            .into_owned();
        out.insert(key, value);
    }
    Ok(out)
}

fn parse_xml<R: BufRead>(input: R) -> Result<Corpus, CorpusError> {
    let mut reader = Reader::from_reader(input);
    let mut buf = Vec::new();
    let mut state = XmlState::Start;
    let mut corpus: Option<Corpus> = None;
    let mut doc: Option<Document> = None;
    let mut sentence: Option<Sentence> = None;
    let mut word: Option<String> = None;

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| CorpusError::malformed(Location::Byte(reader.error_position()), e.to_string()))?;
        let at = Location::Byte(reader.buffer_position());
        // Empty elements are handled like a start immediately followed by an end.
        let (start, is_empty) = match &event {
            Event::Start(e) => (Some(e.clone().into_owned()), false),
            Event::Empty(e) => (Some(e.clone().into_owned()), true),
            _ => (None, false),
        };
        if let Some(e) = start {
            let name = e.name();
            match (state, name.as_ref()) {
                (XmlState::Start, b"corpus") => {
                    let attrs = xml_attrs(&reader, &e, &["lang"])?;
                    let lang = attrs
                        .get("lang")
                        .ok_or_else(|| CorpusError::malformed(at, "corpus element lacks lang attribute"))?;
                    let lang = LangCode::parse(lang).map_err(|err| CorpusError::malformed(at, err.to_string()))?;
                    corpus = Some(Corpus::new(lang));
                    state = XmlState::Corpus;
                }
                (XmlState::Corpus, b"doc") => {
                    let attrs = xml_attrs(&reader, &e, &["id"])?;
                    let id = attrs
                        .get("id")
                        .ok_or_else(|| CorpusError::malformed(at, "doc element lacks id attribute"))?;
                    if !is_valid_document_id(id) {
                        return Err(CorpusError::malformed(at, format!("invalid document id {id:?}")));
                    }
                    let c = corpus.as_ref().expect("corpus open");
                    if c.document(id).is_some() {
                        return Err(CorpusError::DuplicateId {
                            what: "document",
                            id: id.clone(),
                        });
                    }
                    doc = Some(Document {
                        id: id.clone(),
                        sentences: Vec::new(),
                    });
                    state = XmlState::Doc;
                }
                (XmlState::Doc, b"s") => {
                    let mut attrs = xml_attrs(&reader, &e, &["id", "name", "language"])?;
                    let id = attrs
                        .remove("id")
                        .ok_or_else(|| CorpusError::malformed(at, "s element lacks id attribute"))?;
                    if !is_valid_sentence_id(&id) {
                        return Err(CorpusError::malformed(at, format!("invalid sentence id {id:?}")));
                    }
                    if doc.as_ref().expect("doc open").sentence(&id).is_some() {
                        return Err(CorpusError::DuplicateId { what: "sentence", id });
                    }
                    let language_attr = attrs
                        .remove("language")
                        .map(|l| LangCode::parse(&l))
                        .transpose()
                        .map_err(|err| CorpusError::malformed(at, err.to_string()))?;
                    sentence = Some(Sentence {
                        id,
                        tokens: Vec::new(),
                        speaker_name: attrs.remove("name"),
                        language_attr,
                    });
                    state = XmlState::Sentence;
                }
                (XmlState::Sentence, b"w") => {
                    xml_attrs(&reader, &e, &[])?;
                    word = Some(String::new());
                    state = XmlState::Word;
                }
                (_, other) => {
                    return Err(CorpusError::malformed(
                        at,
                        format!("unexpected element <{}>", String::from_utf8_lossy(other)),
                    ));
                }
            }
            if !is_empty {
                buf.clear();
                continue;
            }
        }

        let end_name: Option<Vec<u8>> = match &event {
            Event::End(e) => Some(e.name().as_ref().to_vec()),
            Event::Empty(e) => Some(e.name().as_ref().to_vec()),
            _ => None,
        };
        if let Some(name) = end_name {
            match (state, name.as_slice()) {
                (XmlState::Word, b"w") => {
                    let surface = word.take().expect("word open");
                    check_surface(&surface).map_err(|why| CorpusError::malformed(at, why))?;
                    let s = sentence.as_mut().expect("sentence open");
                    let index = s.tokens.len();
                    s.tokens.push(Token { index, surface });
                    state = XmlState::Sentence;
                }
                (XmlState::Sentence, b"s") => {
                    let s = sentence.take().expect("sentence open");
                    doc.as_mut().expect("doc open").sentences.push(s);
                    state = XmlState::Doc;
                }
                (XmlState::Doc, b"doc") => {
                    let d = doc.take().expect("doc open");
                    corpus.as_mut().expect("corpus open").documents.push(d);
                    state = XmlState::Corpus;
                }
                (XmlState::Corpus, b"corpus") => state = XmlState::End,
                (_, other) => {
                    return Err(CorpusError::malformed(
                        at,
                        format!("unexpected closing tag </{}>", String::from_utf8_lossy(other)),
                    ));
                }
            }
            buf.clear();
            continue;
        }

        match event {
            Event::Text(t) => {
                let text = t
                    .unescape()
                    .map_err(|err| CorpusError::malformed(at, err.to_string()))?;
                if state == XmlState::Word {
                    word.as_mut().expect("word open").push_str(&text);
                } else if !text.trim().is_empty() {
                    return Err(CorpusError::malformed(at, "text outside of a <w> element"));
                }
            }
            Event::CData(t) => {
                if state != XmlState::Word {
                    return Err(CorpusError::malformed(at, "CDATA outside of a <w> element"));
                }
                let text = std::str::from_utf8(&t).map_err(|err| CorpusError::malformed(at, err.to_string()))?;
                word.as_mut().expect("word open").push_str(text);
            }
            Event::Eof => break,
            Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
            _ => {}
        }
        buf.clear();
    }

    match (state, corpus) {
        (XmlState::End, Some(c)) => Ok(c),
        _ => Err(CorpusError::malformed(
            Location::Byte(reader.buffer_position()),
            "unexpected end of input",
        )),
    }
}

fn xml_escape(s: &str) -> std::borrow::Cow<'_, str> {
    quick_xml::escape::escape(s)
}

fn write_xml<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(out, r#"<corpus lang="{}">"#, corpus.language)?;
    for doc in &corpus.documents {
        writeln!(out, r#"  <doc id="{}">"#, xml_escape(&doc.id))?;
        for s in &doc.sentences {
            write!(out, r#"    <s id="{}""#, xml_escape(&s.id))?;
            if let Some(name) = &s.speaker_name {
                write!(out, r#" name="{}""#, xml_escape(name))?;
            }
            if let Some(lang) = &s.language_attr {
                // Source data spells the attribute in upper case.
                write!(out, r#" language="{}""#, lang.as_str().to_ascii_uppercase())?;
            }
            write!(out, ">")?;
            for (i, t) in s.tokens.iter().enumerate() {
                if i > 0 {
                    write!(out, " ")?;
                }
                write!(out, "<w>{}</w>", xml_escape(&t.surface))?;
            }
            writeln!(out, "</s>")?;
        }
        writeln!(out, "  </doc>")?;
    }
    writeln!(out, "</corpus>")
}

// ---------------------------------------------------------------------------
// Line-delimited records

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case", deny_unknown_fields)]
enum Record {
    Corpus {
        language: String,
    },
    Doc {
        id: String,
    },
    Sentence {
        id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        speaker_name: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        language_attr: Option<String>,
    },
    Token {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
        surface: String,
    },
}

fn parse_jsonl<R: BufRead>(input: R) -> Result<Corpus, CorpusError> {
    let mut corpus: Option<Corpus> = None;
    for (n, line) in input.lines().enumerate() {
        let at = Location::Line(n + 1);
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => CorpusError::malformed(at, "invalid UTF-8"),
            _ => CorpusError::Io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| CorpusError::malformed(at, e.to_string()))?;
        match record {
            Record::Corpus { language } => {
                if corpus.is_some() {
                    return Err(CorpusError::malformed(at, "second corpus record"));
                }
                let lang = LangCode::parse(&language).map_err(|e| CorpusError::malformed(at, e.to_string()))?;
                corpus = Some(Corpus::new(lang));
            }
            Record::Doc { id } => {
                let c = corpus
                    .as_mut()
                    .ok_or_else(|| CorpusError::malformed(at, "doc record before corpus record"))?;
                if !is_valid_document_id(&id) {
                    return Err(CorpusError::malformed(at, format!("invalid document id {id:?}")));
                }
                if c.document(&id).is_some() {
                    return Err(CorpusError::DuplicateId { what: "document", id });
                }
                c.documents.push(Document {
                    id,
                    sentences: Vec::new(),
                });
            }
            Record::Sentence {
                id,
                speaker_name,
                language_attr,
            } => {
                let doc = corpus
                    .as_mut()
                    .and_then(|c| c.documents.last_mut())
                    .ok_or_else(|| CorpusError::malformed(at, "sentence record outside of a document"))?;
                if !is_valid_sentence_id(&id) {
                    return Err(CorpusError::malformed(at, format!("invalid sentence id {id:?}")));
                }
                if doc.sentence(&id).is_some() {
                    return Err(CorpusError::DuplicateId { what: "sentence", id });
                }
                let language_attr = language_attr
                    .map(|l| LangCode::parse(&l))
                    .transpose()
                    .map_err(|e| CorpusError::malformed(at, e.to_string()))?;
                doc.sentences.push(Sentence {
                    id,
                    tokens: Vec::new(),
                    speaker_name,
                    language_attr,
                });
            }
            Record::Token { index, surface } => {
                let s = corpus
                    .as_mut()
                    .and_then(|c| c.documents.last_mut())
                    .and_then(|d| d.sentences.last_mut())
                    .ok_or_else(|| CorpusError::malformed(at, "token record outside of a sentence"))?;
                let next = s.tokens.len();
                if let Some(i) = index {
                    if i != next {
                        return Err(CorpusError::malformed(at, format!("token index {i}, expected {next}")));
                    }
                }
                check_surface(&surface).map_err(|why| CorpusError::malformed(at, why))?;
                s.tokens.push(Token { index: next, surface });
            }
        }
    }
    corpus.ok_or_else(|| CorpusError::malformed(Location::Line(1), "missing corpus record"))
}

fn write_jsonl<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    let mut emit = |r: &Record| -> std::io::Result<()> {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")
    };
    emit(&Record::Corpus {
        language: corpus.language.to_string(),
    })?;
    for doc in &corpus.documents {
        emit(&Record::Doc { id: doc.id.clone() })?;
        for s in &doc.sentences {
            emit(&Record::Sentence {
                id: s.id.clone(),
                speaker_name: s.speaker_name.clone(),
                language_attr: s.language_attr.as_ref().map(|l| l.as_str().to_ascii_uppercase()),
            })?;
            for t in &s.tokens {
                emit(&Record::Token {
                    index: Some(t.index),
                    surface: t.surface.clone(),
                })?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sentence alignment

pub fn parse_alignment<R: BufRead>(input: R) -> Result<Vec<AlignmentLink>, CorpusError> {
    let mut links = Vec::new();
    let mut seen_source = HashSet::new();
    let mut seen_target = HashSet::new();
    for (n, line) in input.lines().enumerate() {
        let at = Location::Line(n + 1);
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => CorpusError::malformed(at, "invalid UTF-8"),
            _ => CorpusError::Io(e),
        })?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (src, tgt) = line
            .split_once('\t')
            .ok_or_else(|| CorpusError::malformed(at, "expected two tab-separated fields"))?;
        if tgt.contains('\t') {
            return Err(CorpusError::malformed(at, "more than two tab-separated fields"));
        }
        let source_ids = parse_link_side(src).map_err(|m| CorpusError::malformed(at, m))?;
        let target_ids = parse_link_side(tgt).map_err(|m| CorpusError::malformed(at, m))?;
        for r in &source_ids {
            if !seen_source.insert(r.clone()) {
                return Err(CorpusError::OverlappingLink(r.clone()));
            }
        }
        for r in &target_ids {
            if !seen_target.insert(r.clone()) {
                return Err(CorpusError::OverlappingLink(r.clone()));
            }
        }
        links.push(AlignmentLink { source_ids, target_ids });
    }
    Ok(links)
}

fn parse_link_side(field: &str) -> Result<Vec<SentenceRef>, String> {
    let (doc, ids) = field
        .trim()
        .split_once(':')
        .ok_or_else(|| format!("expected doc:id[,id...], found {field:?}"))?;
    if !is_valid_document_id(doc) {
        return Err(format!("invalid document id {doc:?}"));
    }
    ids.split(',')
        .map(|id| {
            if is_valid_sentence_id(id) {
                Ok(SentenceRef::new(doc, id))
            } else {
                Err(format!("invalid sentence id {id:?}"))
            }
        })
        .collect()
}

pub fn write_alignment<W: Write>(links: &[AlignmentLink], mut out: W) -> std::io::Result<()> {
    for link in links {
        writeln!(out, "{link}")?;
    }
    Ok(())
}

/// Checks the partition invariant over an already-built link list.
pub fn check_partition(links: &[AlignmentLink]) -> Result<(), CorpusError> {
    let mut seen_source = HashSet::new();
    let mut seen_target = HashSet::new();
    for link in links {
        if link.source_ids.is_empty() || link.target_ids.is_empty() {
            return Err(CorpusError::Invalid("alignment link with an empty side".into()));
        }
        for r in &link.source_ids {
            if !seen_source.insert(r) {
                return Err(CorpusError::OverlappingLink(r.clone()));
            }
        }
        for r in &link.target_ids {
            if !seen_target.insert(r) {
                return Err(CorpusError::OverlappingLink(r.clone()));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SENTENCES: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<corpus lang="en">
  <doc id="ep-00-01-18">
    <s id="4.1" name="Smith"><w>Good</w> <w>morning</w> <w>.</w></s>
    <s id="4.2" name="Smith" language="EN"><w>I</w> <w>refer</w> <w>to</w> <w>item</w> <w>11</w></s>
  </doc>
</corpus>
"#;

    fn xml(s: &str) -> Result<Corpus, CorpusError> {
        parse_corpus(s.as_bytes(), CorpusFormat::Xml)
    }

    #[test]
    fn empty_document_list() {
        let c = xml(r#"<corpus lang="de"/>"#).unwrap();
        assert_eq!(c.language.as_str(), "de");
        assert!(c.documents.is_empty());
        let c = xml(r#"<corpus lang="de"></corpus>"#).unwrap();
        assert!(c.documents.is_empty());
    }

    #[test]
    fn language_attribute_is_lowercased() {
        let c = xml(TWO_SENTENCES).unwrap();
        let doc = &c.documents[0];
        assert_eq!(doc.id, "ep-00-01-18");
        assert_eq!(doc.sentences.len(), 2);
        assert_eq!(doc.sentences[0].language_attr, None);
        assert_eq!(doc.sentences[1].language_attr.as_ref().unwrap().as_str(), "en");
        assert_eq!(doc.sentences[1].speaker_name.as_deref(), Some("Smith"));
        let surfaces: Vec<_> = doc.sentences[1].tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, ["I", "refer", "to", "item", "11"]);
        assert_eq!(c.token_count(), 8);
    }

    #[test]
    fn duplicate_sentence_id_is_named() {
        let dup = TWO_SENTENCES.replace(r#"id="4.1""#, r#"id="4.2""#);
        match xml(&dup) {
            Err(CorpusError::DuplicateId { what: "sentence", id }) => assert_eq!(id, "4.2"),
            other => panic!("expected duplicate id, got {other:?}"),
        }
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let broken = TWO_SENTENCES.replace("</s>\n  </doc>", "</doc>");
        match xml(&broken) {
            Err(CorpusError::Malformed {
                location: Location::Byte(b),
                ..
            }) => assert!(b > 0),
            other => panic!("expected malformed, got {other:?}"),
        }
        assert!(matches!(
            xml(r#"<corpus lang="english"/>"#),
            Err(CorpusError::Malformed { .. })
        ));
        assert!(matches!(
            xml(r#"<corpus lang="en"><doc id="a">stray</doc></corpus>"#),
            Err(CorpusError::Malformed { .. })
        ));
        assert!(matches!(
            xml(r#"<corpus lang="en"><doc id="a"><s id="1"><w></w></s></doc></corpus>"#),
            Err(CorpusError::Malformed { .. })
        ));
        assert!(matches!(
            xml(r#"<corpus lang="en"><doc id="a">"#),
            Err(CorpusError::Malformed { .. })
        ));
    }

    #[test]
    fn entities_are_unescaped_and_written_back() {
        let c = xml(r#"<corpus lang="en"><doc id="a"><s id="1" name="O&apos;Neill"><w>&amp;</w><w>&lt;b&gt;</w></s></doc></corpus>"#).unwrap();
        let s = &c.documents[0].sentences[0];
        assert_eq!(s.speaker_name.as_deref(), Some("O'Neill"));
        assert_eq!(s.tokens[0].surface, "&");
        assert_eq!(s.tokens[1].surface, "<b>");
        let mut out = Vec::new();
        write_corpus(&c, CorpusFormat::Xml, &mut out).unwrap();
        assert_eq!(parse_corpus(&out[..], CorpusFormat::Xml).unwrap(), c);
    }

    #[test]
    fn jsonl_mirrors_xml() {
        let c = xml(TWO_SENTENCES).unwrap();
        let mut out = Vec::new();
        write_corpus(&c, CorpusFormat::JsonLines, &mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.lines().next().unwrap().contains(r#""record":"corpus""#));
        assert_eq!(text.lines().filter(|l| l.contains(r#""record":"token""#)).count(), 8);
        assert_eq!(parse_corpus(&out[..], CorpusFormat::JsonLines).unwrap(), c);
    }

    #[test]
    fn jsonl_errors_carry_line_numbers() {
        let input = "{\"record\":\"corpus\",\"language\":\"en\"}\n{\"record\":\"token\",\"surface\":\"x\"}\n";
        match parse_corpus(input.as_bytes(), CorpusFormat::JsonLines) {
            Err(CorpusError::Malformed { location, .. }) => assert_eq!(location, Location::Line(2)),
            other => panic!("{other:?}"),
        }
        let input = "{\"record\":\"corpus\",\"language\":\"en\"}\n{\"record\":\"doc\",\"id\":\"d\"}\n{\"record\":\"sentence\",\"id\":\"1\"}\n{\"record\":\"token\",\"index\":3,\"surface\":\"x\"}\n";
        assert!(matches!(
            parse_corpus(input.as_bytes(), CorpusFormat::JsonLines),
            Err(CorpusError::Malformed {
                location: Location::Line(4),
                ..
            })
        ));
    }

    #[test]
    fn alignment_links_in_file_order() {
        assert!(parse_alignment(&b""[..]).unwrap().is_empty());
        let links =
            parse_alignment(&b"ep-00-01-18:4.2\tep-00-01-18:4.2\nep-00-01-18:8.4\tep-00-01-18:8.4\n"[..]).unwrap();
        assert_eq!(links.len(), 2);
        assert!(links.iter().all(AlignmentLink::is_one_to_one));
        assert_eq!(links[1].source_ids[0].sentence, "8.4");
        let many = parse_alignment(&b"d:1,2\td:1\n"[..]).unwrap();
        assert_eq!(many[0].source_ids.len(), 2);
        assert!(!many[0].is_one_to_one());
        let mut out = Vec::new();
        write_alignment(&many, &mut out).unwrap();
        assert_eq!(out, b"d:1,2\td:1\n");
    }

    #[test]
    fn overlapping_link_is_named() {
        let err = parse_alignment(&b"d:4.2\td:4.2\nd:4.2,4.3\td:8.4\n"[..]).unwrap_err();
        match err {
            CorpusError::OverlappingLink(r) => assert_eq!(r.sentence, "4.2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_alignment_lines() {
        for bad in [
            "d:4.2 d:4.2\n",
            "d:4.x\td:1\n",
            "d4.2\td:1\n",
            "d:1\td:1\td:2\n",
            "d:\td:1\n",
        ] {
            assert!(
                matches!(
                    parse_alignment(bad.as_bytes()),
                    Err(CorpusError::Malformed {
                        location: Location::Line(1),
                        ..
                    })
                ),
                "{bad:?}"
            );
        }
    }

    #[test]
    fn lang_codes() {
        assert_eq!(LangCode::parse("EN").unwrap().as_str(), "en");
        assert!(LangCode::parse("eng").is_err());
        assert!(LangCode::parse("e1").is_err());
        assert!(LangCode::parse("").is_err());
    }
}

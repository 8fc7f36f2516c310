#!/usr/bin/env python3
"""Brute-force re-check of the extraction fixture.

Reads the bundled corpora, links and whitelist with the standard library
only and prints, for every link, whether it qualifies and which conditions
it fails. The output is frozen in extraction_expected.json.
"""
import json
import sys
import unicodedata
import xml.etree.ElementTree as ET
from pathlib import Path

ROOT = Path(__file__).resolve().parents[2] / "fixtures" / "extraction"


def norm(name):
    decomposed = unicodedata.normalize("NFD", name)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return " ".join(stripped.lower().split())


def sentences(path):
    root = ET.parse(path).getroot()
    lang = root.get("lang").lower()
    out = {}
    for doc in root.iter("doc"):
        for s in doc.iter("s"):
            out[(doc.get("id"), s.get("id"))] = s
    return lang, out


def refs(field):
    doc, ids = field.split(":", 1)
    return [(doc, i) for i in ids.split(",")]


def main():
    src_lang, src = sentences(ROOT / "en.xml")
    tgt_lang, tgt = sentences(ROOT / "de.xml")
    whitelist = {norm(l) for l in (ROOT / "whitelist.txt").read_text().splitlines() if l.strip()}
    results = []
    for i, line in enumerate(l for l in (ROOT / "links.tsv").read_text().splitlines() if l.strip()):
        s_field, t_field = line.split("\t")
        s_refs, t_refs = refs(s_field), refs(t_field)
        if len(s_refs) != 1 or len(t_refs) != 1:
            results.append({"link": i, "emitted": False, "reasons": ["not_one_to_one"]})
            continue
        s, t = src[s_refs[0]], tgt[t_refs[0]]
        reasons = []
        if s.get("language") is not None:
            reasons.append("source_has_lang_attr")
        if (t.get("language") or "").lower() != src_lang:
            reasons.append("target_lang_attr_missing_or_wrong")
        speaker = s.get("name")
        if speaker is None or not norm(speaker):
            reasons.append("speaker_missing")
        elif norm(speaker) not in whitelist:
            reasons.append("speaker_not_whitelisted")
        results.append({"link": i, "emitted": not reasons, "reasons": reasons})
    json.dump(results, sys.stdout, indent=2)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()

"""Scan a clinic note and print every recognized concept span.

Shows the full annotation pipeline on plain text: leftmost-longest
matching against the packaged lexicon, negation scoping, modifier
attachment, and ambiguous spans left for the user to disambiguate.

Usage:
    python demos/recognize_and_annotate.py
    python demos/recognize_and_annotate.py --text "Denies fever or chills."
"""

from __future__ import annotations

import argparse

from knowted.negation import annotate, load_negation_rules
from knowted.ontology import load_lexicon
from knowted.recognizer import build_automaton, load_stoplist, scan
from knowted.service import packaged_lexicon_dir

DEFAULT_TEXT = (
    "Pt presents with chest pain and mild fever. "
    "Denies chills, dyspnea, or nausea. "
    "CHF stable on furosemide; started potassium chloride today. "
    "Echo scheduled to rule out worsening heart failure."
)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--text", default=DEFAULT_TEXT, help="note text to scan")
    args = parser.parse_args()

    lexicon_dir = packaged_lexicon_dir()
    lexicon = load_lexicon(lexicon_dir)
    stoplist = load_stoplist(lexicon_dir / "stoplist.txt", lexicon)
    automaton = build_automaton(lexicon, stoplist)
    rules = load_negation_rules(lexicon_dir / "negation_rules.tsv")

    spans = annotate(args.text, scan(automaton, args.text), lexicon, rules)

    print(f"note: {args.text!r}")
    print(f"{len(spans)} spans recognized\n")
    for span in spans:
        surface = args.text[span.start : span.end]
        flags = []
        if span.negated:
            flags.append("negated")
        for modifier in span.modifiers:
            flags.append(f"{modifier.cls}={modifier.term}")
        if span.resolved is not None:
            concept = lexicon.concept(span.resolved)
            label = f"{span.resolved} ({concept.concept_type.value})"
        else:
            label = f"ambiguous: {', '.join(span.candidates)}"
        suffix = f"  [{', '.join(flags)}]" if flags else ""
        print(f"  [{span.start:3d},{span.end:3d})  {surface!r:24}  {label}{suffix}")

    unresolved = [s for s in spans if s.resolved is None]
    if unresolved:
        print(
            f"\n{len(unresolved)} span(s) match several concept types; in the editor"
            " these render grey until the user picks a candidate."
        )


if __name__ == "__main__":
    main()

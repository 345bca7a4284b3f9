"""Replay a clinician typing and watch the suggestion engine respond.

Feeds a plan line to the trigger scorer one keystroke at a time, prints
the point where the dropdown opens, the ranked candidates with their
detail text, and the one-click insertion strings for a lab concept that
has results in the patient record.
"""

from __future__ import annotations

from knowted import autocomplete as ac
from knowted.ontology import load_lexicon
from knowted.recognizer import build_automaton, load_stoplist
from knowted.records import ingest
from knowted.service import packaged_lexicon_dir

# Minimal chart: enough potassium history to make the summary tree useful.
PATIENT = {
    "patient_id": "demo-patient",
    "labs": [
        {"id": "k1", "concept": "lab-potassium", "value": "3.4",
         "unit": "mmol/L", "timestamp": "2026-07-02T08:10:00Z"},
        {"id": "k2", "concept": "lab-potassium", "value": "3.9",
         "unit": "mmol/L", "timestamp": "2026-07-21T07:55:00Z"},
        {"id": "k3", "concept": "lab-potassium", "value": "4.4",
         "unit": "mmol/L", "timestamp": "2026-08-05T08:02:00Z"},
        {"id": "c1", "concept": "lab-creatinine", "value": "1.05",
         "unit": "mg/dL", "timestamp": "2026-08-05T08:02:00Z"},
    ],
    "notes": [],
    "entries": [],
}

TYPED = "Plan: recheck potas"


def dropdown(lexicon, record, scorer, text: str) -> None:
    trigger, prior = ac.should_trigger(scorer, text)
    caret = len(text)
    marker = "OPEN" if trigger else "closed"
    print(f"  typed {text!r:28} dropdown {marker}")
    if not trigger:
        return
    context = ac.caret_context(text, caret)
    query = ac.AutocompleteQuery(
        text_before_caret=text,
        prefix=context.prefix,
        filter=context.filter,
        patient=record.patient_id,
    )
    for rank, suggestion in enumerate(ac.suggest(query, lexicon, record, prior), 1):
        star = "*" if suggestion.in_record else " "
        print(
            f"      {rank}. {star} {suggestion.display:22} "
            f"{suggestion.detail}  (score {suggestion.score:.3f})"
        )


def main() -> None:
    lexicon_dir = packaged_lexicon_dir()
    lexicon = load_lexicon(lexicon_dir)
    automaton = build_automaton(lexicon, load_stoplist(lexicon_dir / "stoplist.txt", lexicon))
    scorer = ac.RuleBasedScorer(
        lexicon=lexicon,
        cue_phrases=ac.load_cue_phrases(lexicon_dir / "cue_phrases.tsv"),
    )
    record = ingest(PATIENT, lexicon, automaton)

    print("keystroke replay ('*' marks concepts with data in this chart):\n")
    for end in range(len("Plan: recheck p"), len(TYPED) + 1):
        dropdown(lexicon, record, scorer, TYPED[:end])

    print("\nslash filters restrict by type and always open the dropdown:")
    dropdown(lexicon, record, scorer, "access /l pot")

    print("\nlab concepts expose a summary tree for one-click insertion:")
    tree = ac.lab_tree("lab-potassium", record, lexicon)
    for frame in tree.frames:
        rendered = ac.format_lab_insertion(ac.LabSelection(tree, frame=frame.name))
        print(f"  {frame.name:12} -> {rendered!r}")
    for stat in tree.frames[0].stats:
        rendered = ac.format_lab_insertion(
            ac.LabSelection(tree, frame=tree.frames[0].name, stat=stat.name)
        )
        print(f"  {stat.name:12} -> {rendered!r}")


if __name__ == "__main__":
    main()

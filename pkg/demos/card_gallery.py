"""Generate synthetic patients and print their concept cards.

Every concept with chart data gets a card assembled from the per-type
recipe (or a curated override), grouping labs, medications, vitals,
procedures and note snippets under the concept that ties them together.

Usage:
    python demos/card_gallery.py
    python demos/card_gallery.py --seed 11 --patients 2 --max-cards 4
"""

from __future__ import annotations

import argparse

from knowted.cards import BlockKind, assemble_card, load_overrides
from knowted.ontology import ConceptType, load_lexicon
from knowted.recognizer import build_automaton, load_stoplist
from knowted.records import generate_patients, ingest
from knowted.service import packaged_lexicon_dir


def describe(block, lexicon) -> str:
    payload = block.payload
    if block.kind is BlockKind.LAB_TABLE:
        names = [lexicon.concept(c["concept"]).canonical_name for c in payload["columns"]]
        return f"columns {names}, {len(payload['rows'])} timestamped rows"
    if block.kind is BlockKind.LAB_SERIES:
        return f"{len(payload['points'])} points for a zoomable chart"
    if block.kind is BlockKind.LAB_AGGREGATE:
        frames = [f["name"] for f in payload["frames"]]
        return f"box-plot stats over {frames}"
    if block.kind is BlockKind.MEDICATION_LIST:
        return f"{len(payload['items'])} medication entries"
    if block.kind is BlockKind.VITALS_LIST:
        return f"{len(payload['items'])} linked results"
    if block.kind is BlockKind.PROCEDURE_LIST:
        return f"{len(payload['items'])} procedure entries"
    snippets = payload["snippets"]
    preview = snippets[0]["text"][:50] if snippets else ""
    return f"{len(snippets)} snippets, oldest: {preview!r}"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=340)
    parser.add_argument("--patients", type=int, default=1)
    parser.add_argument("--max-cards", type=int, default=6)
    args = parser.parse_args()

    lexicon_dir = packaged_lexicon_dir()
    lexicon = load_lexicon(lexicon_dir)
    automaton = build_automaton(lexicon, load_stoplist(lexicon_dir / "stoplist.txt", lexicon))
    overrides = load_overrides(lexicon_dir / "overrides.tsv", lexicon)

    for doc in generate_patients(lexicon, args.seed, args.patients):
        record = ingest(doc, lexicon, automaton)
        print(f"== {record.patient_id}: {len(record.labs)} results, "
              f"{len(record.entries)} entries, {len(record.notes)} prior notes")
        present = sorted(
            {entry.concept for entry in record.entries}
            | {lab.concept for lab in record.labs}
        )
        shown = 0
        for concept_id in present:
            if shown >= args.max_cards:
                break
            if lexicon.concept(concept_id).concept_type is ConceptType.SYMPTOM:
                continue
            card = assemble_card(concept_id, record, lexicon, automaton, overrides)
            if not card.body:
                continue
            shown += 1
            print(f"\n  card: {card.title}  ({concept_id})")
            if card.synonyms:
                print(f"    aka {', '.join(card.synonyms[:4])}")
            for block in card.body:
                print(f"    - {block.kind.value:16} {describe(block, lexicon)}")
        print()


if __name__ == "__main__":
    main()

"""Shared fixtures: the packaged lexicon, tiny hand-built lexicons, a service factory."""

from __future__ import annotations

import pytest

from knowted.ontology import Link, LinkRole, build_lexicon, load_lexicon, make_concept
from knowted.ontology import ConceptType as CT
from knowted.recognizer import build_automaton, load_stoplist
from knowted.service import packaged_lexicon_dir


@pytest.fixture(scope="session")
def shipped_lexicon():
    return load_lexicon(packaged_lexicon_dir())


@pytest.fixture(scope="session")
def shipped_stoplist(shipped_lexicon):
    return load_stoplist(packaged_lexicon_dir() / "stoplist.txt", shipped_lexicon)


@pytest.fixture(scope="session")
def shipped_automaton(shipped_lexicon, shipped_stoplist):
    return build_automaton(shipped_lexicon, shipped_stoplist)


@pytest.fixture
def tiny_lexicon():
    """Handful of concepts exercising ambiguity, links and every type."""
    concepts = [
        make_concept("fever", CT.SYMPTOM, "fever", synonyms=("febrile",)),
        make_concept(
            "potassium", CT.LAB, "Potassium", synonyms=("K",),
            detail="serum or plasma; ref 3.5 - 5.2 mmol/L",
        ),
        make_concept(
            "creatinine", CT.LAB, "Creatinine",
            detail="serum or plasma; ref 0.7 - 1.3 mg/dL",
        ),
        make_concept("patient-term", CT.CONDITION, "Patient Status", synonyms=("pt",)),
        make_concept("physical-therapy", CT.PROCEDURE, "Physical Therapy", synonyms=("pt",)),
        make_concept("prothrombin-time", CT.LAB, "Prothrombin Time", synonyms=("pt",)),
        make_concept("kcl", CT.MEDICATION, "Potassium Chloride", synonyms=("KCl",)),
        make_concept("chf", CT.CONDITION, "Congestive Heart Failure", synonyms=("CHF",)),
        make_concept("heart-rate", CT.VITAL_SIGN, "Heart Rate", synonyms=("HR",)),
    ]
    return build_lexicon(
        concepts,
        modifier_vocab={
            "severity": frozenset({"mild", "severe"}),
            "laterality": frozenset({"left", "right"}),
            "temporality": frozenset({"chronic", "acute"}),
        },
        body_system_map={"fever": "Constitutional"},
        concept_links={
            "potassium": (Link(LinkRole.CONTEXTUAL_LAB, "creatinine"),),
            "chf": (
                Link(LinkRole.RELEVANT_MEDICATION, "kcl"),
                Link(LinkRole.RELEVANT_LAB, "heart-rate"),
                Link(LinkRole.RELATED_PROCEDURE, "physical-therapy"),
            ),
        },
    )


@pytest.fixture
def tiny_automaton(tiny_lexicon):
    return build_automaton(tiny_lexicon)


@pytest.fixture
def make_service(tmp_path):
    """TestClient factory over one data dir; call again to simulate a restart."""
    import json

    from fastapi.testclient import TestClient

    import regen_wire_goldens
    from knowted.service import ServiceConfig, create_app

    data_dir = tmp_path / "service-data"
    patients = data_dir / "patients"
    patients.mkdir(parents=True)
    (patients / "p001.json").write_text(json.dumps(regen_wire_goldens.GOLDEN_DOC))
    (patients / "p002.json").write_text(json.dumps({
        "patient_id": "p002",
        "labs": [
            {"id": "g1", "concept": "lab-glucose", "value": "104",
             "unit": "mg/dL", "timestamp": "2026-03-01T08:00:00Z"},
        ],
        "notes": [
            {"id": "m1", "timestamp": "2026-03-02T08:00:00Z",
             "author_role": "physician", "text": "Routine visit."},
        ],
        "entries": [],
    }))
    clients: list[TestClient] = []

    def factory(**overrides):
        overrides.setdefault("debounce_ms", 25)
        config = ServiceConfig(
            data_dir=data_dir, lexicon_path=packaged_lexicon_dir(), **overrides
        )
        client = TestClient(create_app(config))
        client.__enter__()
        clients.append(client)
        return client

    yield factory
    for client in clients:
        client.__exit__(None, None, None)
        client.app.state.engine.store.close()

"""Clinical documentation engine: concept recognition, structured chips,
context-aware autocomplete, and live patient-data cards for note writing.
"""

from .ontology import (
    BODY_SYSTEMS,
    Concept,
    ConceptType,
    LexiconError,
    Lexicon,
    Link,
    LinkRole,
    ParseError,
    ValidationError,
    build_lexicon,
    compile_index,
    load_index,
    load_lexicon,
    make_concept,
    normalize,
)
from .recognizer import (
    Automaton,
    DisambiguationError,
    Modifier,
    RecognitionSpan,
    build_automaton,
    default_stoplist,
    disambiguate,
    display_class,
    leftmost_longest,
    load_stoplist,
    rescan_ranges,
    scan,
    tokenize,
)
from .negation import (
    NegationRules,
    annotate,
    attach_modifiers,
    detect_negations,
    load_negation_rules,
    render_negated,
)
from .records import (
    LabResult,
    PatientRecord,
    PriorNote,
    RecordEntry,
    Snippet,
    generate_patients,
    in_record,
    ingest,
    labs_for,
    notes_mentioning,
    record_clock,
    write_fixture,
)
from .autocomplete import (
    AutocompleteQuery,
    LabSelection,
    LabTree,
    RuleBasedScorer,
    Suggestion,
    caret_context,
    format_lab_insertion,
    lab_tree,
    load_cue_phrases,
    parse_slash_filter,
    should_trigger,
    suggest,
)
from .cards import (
    BlockKind,
    Card,
    CardBlock,
    CardOverride,
    UnsupportedConceptError,
    assemble_card,
    contextual_columns,
    load_overrides,
)
from .notes import (
    Chip,
    ChipImmutabilityError,
    Completion,
    Edit,
    Note,
    Section,
    StaleDropdownError,
    accept_completion,
    apply_edit,
    autofill_section,
    chips_from_spans,
    new_note,
)
from .sessions import SessionHub, SidebarState, UsageEvent, UsageKind
from .storage import Store
from .service import ServiceConfig, create_app

__version__ = "0.1.0"

__all__ = [
    "BODY_SYSTEMS",
    "Automaton",
    "AutocompleteQuery",
    "BlockKind",
    "Card",
    "CardBlock",
    "CardOverride",
    "Chip",
    "ChipImmutabilityError",
    "Completion",
    "Concept",
    "ConceptType",
    "DisambiguationError",
    "Edit",
    "LabResult",
    "LabSelection",
    "LabTree",
    "Lexicon",
    "LexiconError",
    "Link",
    "LinkRole",
    "Modifier",
    "NegationRules",
    "Note",
    "ParseError",
    "PatientRecord",
    "PriorNote",
    "RecognitionSpan",
    "RecordEntry",
    "RuleBasedScorer",
    "Section",
    "ServiceConfig",
    "SessionHub",
    "SidebarState",
    "Snippet",
    "StaleDropdownError",
    "Store",
    "Suggestion",
    "UnsupportedConceptError",
    "UsageEvent",
    "UsageKind",
    "ValidationError",
    "accept_completion",
    "annotate",
    "apply_edit",
    "assemble_card",
    "attach_modifiers",
    "autofill_section",
    "build_automaton",
    "build_lexicon",
    "caret_context",
    "chips_from_spans",
    "compile_index",
    "contextual_columns",
    "create_app",
    "default_stoplist",
    "detect_negations",
    "disambiguate",
    "display_class",
    "format_lab_insertion",
    "generate_patients",
    "in_record",
    "ingest",
    "lab_tree",
    "labs_for",
    "leftmost_longest",
    "load_cue_phrases",
    "load_index",
    "load_lexicon",
    "load_negation_rules",
    "load_overrides",
    "load_stoplist",
    "make_concept",
    "new_note",
    "normalize",
    "notes_mentioning",
    "parse_slash_filter",
    "record_clock",
    "render_negated",
    "rescan_ranges",
    "scan",
    "should_trigger",
    "suggest",
    "tokenize",
    "write_fixture",
]

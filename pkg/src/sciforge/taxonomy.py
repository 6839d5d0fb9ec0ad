"""The two-level subject / image-type taxonomy.

Five subjects and twenty-five image types. The canonical type names are the
ones used throughout manifests and reports; a small alias table maps the
variant spellings that the curation prompt itself uses (e.g. "Function
Graph") onto their canonical equivalents so parsed model output normalizes
cleanly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TaxonomyError

SUBJECTS = ("Math", "Physics", "Chemistry", "Biology", "Universal")

TYPES_BY_SUBJECT: dict[str, tuple[str, ...]] = {
    "Math": (
        "Plane Geometric",
        "Solid Geometric",
        "Analytic Geometry",
        "Set & Probability",
    ),
    "Physics": (
        "Mechanical",
        "Field Diagram",
        "Waveform",
        "Optical Ray",
        "Astronomical",
        "Circuit",
        "Thermodynamic",
    ),
    "Chemistry": (
        "Molecular Structure",
        "Reaction Scheme",
        "Electron Config",
        "Crystal Structure",
        "Spectra",
        "Orbital / Quantum",
    ),
    "Biology": (
        "Cell Diagram",
        "Ecological",
        "Genetics",
        "Molecular Process",
    ),
    "Universal": (
        "Plot & Chart",
        "Graph & Flow",
        "Table & Grid",
        "Exp. Setup",
    ),
}

# Spellings the curation prompt presents to the model, mapped to canon.
SUBJECT_ALIASES = {"Mathematics": "Math"}
TYPE_ALIASES = {
    "Function Graph": "Plot & Chart",
    "Data Chart": "Plot & Chart",
    "Node-Link": "Graph & Flow",
    "Table / Grid": "Table & Grid",
    "Chart & Graph": "Plot & Chart",
    "Experimental Setup": "Exp. Setup",
}


@dataclass(frozen=True)
class Taxonomy:
    """Frozen view of the subject -> image-type map."""

    subjects: tuple[str, ...] = SUBJECTS
    types_by_subject: dict[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(TYPES_BY_SUBJECT)
    )

    def all_types(self) -> list[str]:
        return [t for ts in self.types_by_subject.values() for t in ts]

    def subject_of(self, image_type: str) -> str:
        for subject, types in self.types_by_subject.items():
            if image_type in types:
                return subject
        raise TaxonomyError(f"unknown image type {image_type!r}")

    def is_legal_pair(self, subject: str, image_type: str) -> bool:
        return image_type in self.types_by_subject.get(subject, ())


TAXONOMY = Taxonomy()

assert len(TAXONOMY.subjects) == 5
assert len(TAXONOMY.all_types()) == 25


def normalize_subject(name: str) -> str:
    """Map a subject spelling to its canonical name.

    Raises TaxonomyError for names outside the five-subject set.
    """
    canon = SUBJECT_ALIASES.get(name, name)
    if canon not in SUBJECTS:
        raise TaxonomyError(f"unknown subject {name!r}")
    return canon


def normalize_type(name: str) -> str:
    canon = TYPE_ALIASES.get(name, name)
    if canon not in TAXONOMY.all_types():
        raise TaxonomyError(f"unknown image type {name!r}")
    return canon


def check_pair(subject: str, image_type: str) -> tuple[str, str]:
    """Normalize and validate a (subject, image type) pair."""
    subject = normalize_subject(subject)
    image_type = normalize_type(image_type)
    if not TAXONOMY.is_legal_pair(subject, image_type):
        raise TaxonomyError(
            f"image type {image_type!r} does not belong to subject {subject!r}"
        )
    return subject, image_type

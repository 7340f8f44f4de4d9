"""Scene-prior knowledge graph: weighted (target, relation, reference) triplets.

Triplet weights blend a precomputed text-similarity score with a human
prior: w = alpha * similarity + (1 - alpha) * prior. Both inputs live in
the KG file; nothing is learned or embedded at runtime.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import errors as E
from .errors import SimError

RELATIONS = ("inside", "on_top", "adjacent")

DEFAULT_ALPHA = 0.5


@dataclass(frozen=True)
class Triplet:
    target: str
    relation: str
    reference: str
    prior: float
    similarity: float
    weight: float

    @staticmethod
    def make(target: str, relation: str, reference: str, prior: float,
             similarity: float, alpha: float) -> "Triplet":
        if relation not in RELATIONS:
            raise SimError(E.E_PARSE, f"unknown relation {relation!r}")
        if not (0.0 <= prior <= 1.0 and 0.0 <= similarity <= 1.0):
            raise SimError(E.E_PARSE,
                           f"prior/similarity out of [0,1] for ({target},{relation},{reference})")
        w = alpha * similarity + (1.0 - alpha) * prior
        return Triplet(target, relation, reference, prior, similarity, w)


@dataclass
class KnowledgeGraph:
    triplets: list[Triplet]
    alpha: float
    category_registry: dict[str, str]  # category -> "target" | "receptacle"

    def triplets_for(self, target: str) -> list[Triplet]:
        return [t for t in self.triplets if t.target == target]

    def targets(self) -> list[str]:
        seen = []
        for t in self.triplets:
            if t.target not in seen:
                seen.append(t.target)
        return seen


def load_categories(path) -> dict[str, str]:
    """Category registry file: TSV with columns category, kind."""
    registry: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].split() != ["category", "kind"]:
        raise SimError(E.E_PARSE, f"{path}: missing 'category kind' header")
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2 or parts[1] not in ("target", "receptacle"):
            raise SimError(E.E_PARSE, f"{path}: bad row {ln!r}")
        registry[parts[0]] = parts[1]
    return registry


def parse_kg(text: str, registry: dict[str, str], alpha: float = DEFAULT_ALPHA) -> KnowledgeGraph:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].split() != ["target", "relation", "reference", "prior", "similarity"]:
        raise SimError(E.E_PARSE, "KG file must start with the header row "
                                  "'target relation reference prior similarity'")
    triplets: list[Triplet] = []
    seen: set[tuple[str, str, str]] = set()
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 5:
            raise SimError(E.E_PARSE, f"line {i}: expected 5 columns, got {len(parts)}")
        target, relation, reference, prior_s, sim_s = parts
        key = (target, relation, reference)
        if key in seen:
            raise SimError(E.E_DUP_TRIPLET, f"line {i}: duplicate triplet {key}")
        seen.add(key)
        if registry.get(target) != "target":
            raise SimError(E.E_UNKNOWN_CATEGORY, f"line {i}: {target!r} is not a target category")
        if reference not in registry:
            raise SimError(E.E_UNKNOWN_CATEGORY, f"line {i}: unknown reference {reference!r}")
        try:
            prior, similarity = float(prior_s), float(sim_s)
        except ValueError:
            raise SimError(E.E_PARSE, f"line {i}: bad numeric value")
        triplets.append(Triplet.make(target, relation, reference, prior, similarity, alpha))
    return KnowledgeGraph(triplets=triplets, alpha=alpha, category_registry=dict(registry))


def load_kg(path, registry: dict[str, str], alpha: float = DEFAULT_ALPHA) -> KnowledgeGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kg(fh.read(), registry, alpha)

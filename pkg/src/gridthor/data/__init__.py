"""Shipped benchmark data: scenes, category registry, priors, templates."""

from __future__ import annotations

from pathlib import Path

DATA_DIR = Path(__file__).resolve().parent
SCENE_DIR = DATA_DIR / "scenes"
KG_PATH = DATA_DIR / "kg.tsv"
CATEGORIES_PATH = DATA_DIR / "categories.tsv"
TEMPLATES_PATH = DATA_DIR / "templates.tsv"
SUITE_PATH = DATA_DIR / "suite_30.jsonl"


def load_default_scenes():
    from ..scene import load_scene_file
    return [load_scene_file(p) for p in sorted(SCENE_DIR.glob("*.scene"))]


def load_default_kg(alpha: float = 0.5):
    from ..kg import load_categories, load_kg
    registry = load_categories(CATEGORIES_PATH)
    return load_kg(KG_PATH, registry, alpha)


def load_default_templates():
    from ..tasks import load_templates
    return load_templates(TEMPLATES_PATH)

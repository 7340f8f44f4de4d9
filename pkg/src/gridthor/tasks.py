"""Task templates, episode instantiation and benchmark dataset generation.

Instantiation realizes a (target, relation, reference) prior into concrete
cells inside a scene: `inside`/`on_top` land in the reference receptacle's
region, `adjacent` in the one-cell ring around it. Everything is a pure
function of its seed.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass

from . import errors as E
from .errors import SimError
from .kg import KnowledgeGraph, Triplet
from .scene import SceneSpec
from .util import stable_seed
from .world import GoalSpec

SCHEMA_VERSION = 1

VOWELS = "aeiou"


def article(noun: str) -> str:
    return "an" if noun[:1].lower() in VOWELS else "a"


@dataclass(frozen=True)
class TaskTemplate:
    template_id: str
    task_kind: str  # "manipulation" | "navigation"
    target_category: str
    receptacle_category: str | None = None
    preposition: str = "in"

    def realize_nl(self) -> str:
        if self.task_kind == "navigation":
            return f"Find the {self.target_category}."
        t, r = self.target_category, self.receptacle_category
        return (f"Picking {article(t)} {t} and place it "
                f"{self.preposition} {article(r)} {r}.")


@dataclass
class TaskSpec:
    task_id: str
    scene_id: str
    template_id: str
    kind: str
    goal: GoalSpec
    target: dict  # placement record
    distractors: list[dict]
    nl_description: str
    seed: int
    schema_version: int = SCHEMA_VERSION

    def placements(self) -> list[dict]:
        return [self.target] + list(self.distractors)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "task_id": self.task_id,
            "scene_id": self.scene_id,
            "template_id": self.template_id,
            "kind": self.kind,
            "goal": self.goal.to_dict(),
            "target": self.target,
            "distractors": self.distractors,
            "nl_description": self.nl_description,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "TaskSpec":
        return TaskSpec(
            task_id=d["task_id"],
            scene_id=d["scene_id"],
            template_id=d["template_id"],
            kind=d["kind"],
            goal=GoalSpec.from_dict(d["goal"]),
            target=d["target"],
            distractors=d["distractors"],
            nl_description=d["nl_description"],
            seed=d["seed"],
            schema_version=d["schema_version"],
        )


def load_templates(path) -> list[TaskTemplate]:
    """Template file: TSV with columns template_id, kind, target, receptacle, prep."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].split() != ["template_id", "kind", "target", "receptacle", "prep"]:
        raise SimError(E.E_PARSE, f"{path}: bad or missing template header")
    templates = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if len(parts) != 5:
            raise SimError(E.E_PARSE, f"{path}: line {i}: expected 5 columns")
        tid, kind, target, receptacle, prep = parts
        if kind not in ("manipulation", "navigation"):
            raise SimError(E.E_PARSE, f"{path}: line {i}: bad kind {kind!r}")
        templates.append(TaskTemplate(
            template_id=tid,
            task_kind=kind,
            target_category=target,
            receptacle_category=None if receptacle == "-" else receptacle,
            preposition=prep,
        ))
    return templates


def scene_receptacle_categories(scene: SceneSpec) -> set[str]:
    return {a.category for a in scene.receptacle_anchors}


def realizable_triplets(kg: KnowledgeGraph, target: str, scene: SceneSpec) -> list[Triplet]:
    """Triplets of `target` whose reference receptacle is anchored in the scene."""
    present = scene_receptacle_categories(scene)
    return [t for t in kg.triplets_for(target) if t.reference in present]


def applicable_templates(scene: SceneSpec, templates: list[TaskTemplate],
                         kg: KnowledgeGraph) -> list[TaskTemplate]:
    """Templates whose goal receptacle is anchored here and whose target can be placed."""
    present = scene_receptacle_categories(scene)
    out = []
    for tpl in templates:
        if tpl.task_kind == "manipulation" and tpl.receptacle_category not in present:
            continue
        if not realizable_triplets(kg, tpl.target_category, scene):
            continue
        out.append(tpl)
    return out


def _receptacle_ids(scene: SceneSpec) -> list[tuple[str, str]]:
    """(category, object_id) per anchor, matching world receptacle numbering."""
    counts: dict[str, int] = {}
    out = []
    for a in scene.receptacle_anchors:
        counts[a.category] = counts.get(a.category, 0) + 1
        out.append((a.category, f"{a.category}_{counts[a.category]}"))
    return out


def _relation_area(scene: SceneSpec, rect, relation: str) -> list[tuple[int, int]]:
    x0, y0, x1, y1 = rect
    if relation in ("inside", "on_top"):
        cells = scene.rect_cells(rect)
    else:  # adjacent: one-cell ring
        cells = [
            (x, y)
            for y in range(y0 - 1, y1 + 2)
            for x in range(x0 - 1, x1 + 2)
            if not (x0 <= x <= x1 and y0 <= y <= y1)
        ]
    return [c for c in cells if scene.is_floor(*c)]


def _place_by_triplet(scene: SceneSpec, triplet: Triplet, category: str, rng: random.Random,
                      used: set[tuple[int, int]]) -> dict:
    anchors = [(cat, oid, a) for (cat, oid), a in
               zip(_receptacle_ids(scene), scene.receptacle_anchors) if cat == triplet.reference]
    if not anchors:
        raise SimError(E.E_BAD_TASK, f"no {triplet.reference!r} anchor in {scene.scene_id}")
    _, ref_id, anchor = anchors[rng.randrange(len(anchors))] if len(anchors) > 1 else anchors[0]
    area = [c for c in _relation_area(scene, anchor.rect, triplet.relation) if c not in used]
    if not area:
        raise SimError(E.E_NO_SPACE,
                       f"no free cell for {category} {triplet.relation} {ref_id}")
    cell = area[rng.randrange(len(area))]
    used.add(cell)
    return {
        "object_id": f"{category}_1",
        "category": category,
        "relation": triplet.relation,
        "reference_id": ref_id,
        "reference_category": triplet.reference,
        "cell": list(cell),
        "containment": "inside" if triplet.relation in ("inside", "on_top") else "on_floor",
    }


def instantiate_task(template: TaskTemplate, scene: SceneSpec, triplet: Triplet,
                     seed: int, kg: KnowledgeGraph, task_id: str | None = None) -> TaskSpec:
    """Realize one episode; deterministic given the seed."""
    if triplet.target != template.target_category:
        raise SimError(E.E_BAD_TASK,
                       f"triplet target {triplet.target!r} does not match template "
                       f"{template.target_category!r}")
    rng = random.Random(seed)
    used: set[tuple[int, int]] = set()
    target_rec = _place_by_triplet(scene, triplet, template.target_category, rng, used)

    distractors = []
    other = [c for c, kind in sorted(kg.category_registry.items())
             if kind == "target" and c != template.target_category]
    for cat in other:
        options = realizable_triplets(kg, cat, scene)
        if not options:
            continue
        weights = [t.weight for t in options]
        if sum(weights) <= 0:
            chosen = options[rng.randrange(len(options))]
        else:
            chosen = rng.choices(options, weights=weights, k=1)[0]
        try:
            distractors.append(_place_by_triplet(scene, chosen, cat, rng, used))
        except SimError as err:
            if err.code != E.E_NO_SPACE:
                raise
            # crowded area: this task simply omits the distractor

    if template.task_kind == "manipulation":
        goal = GoalSpec("manipulation", template.target_category, template.receptacle_category)
    else:
        goal = GoalSpec("navigation", template.target_category)
    return TaskSpec(
        task_id=task_id or f"{scene.scene_id}:{template.template_id}:{seed & 0xFFFF}",
        scene_id=scene.scene_id,
        template_id=template.template_id,
        kind=template.task_kind,
        goal=goal,
        target=target_rec,
        distractors=distractors,
        nl_description=template.realize_nl(),
        seed=seed,
    )


def generate_dataset(scenes: list[SceneSpec], templates: list[TaskTemplate],
                     kg: KnowledgeGraph, base_seed: int) -> tuple[list[TaskSpec], list[TaskSpec]]:
    """(manipulation tasks, navigation tasks) for the full scene set.

    One manipulation task per scene x applicable template x realizable
    triplet of the template's target. The navigation set keeps the search
    sub-goal only: one task per scene x applicable target x triplet, where
    targets are deduplicated across manipulation templates, plus any
    navigation-only templates.
    """
    manip: list[TaskSpec] = []
    nav: list[TaskSpec] = []
    for scene in sorted(scenes, key=lambda s: s.scene_id):
        applicable = applicable_templates(scene, templates, kg)
        nav_targets: list[str] = []
        for tpl in applicable:
            if tpl.task_kind == "navigation":
                if tpl.target_category not in nav_targets:
                    nav_targets.append(tpl.target_category)
                continue
            for k, triplet in enumerate(realizable_triplets(kg, tpl.target_category, scene)):
                seed = stable_seed(base_seed, scene.scene_id, tpl.template_id, k)
                task_id = f"{scene.scene_id}:{tpl.template_id}:{k}"
                manip.append(instantiate_task(tpl, scene, triplet, seed, kg, task_id=task_id))
            if tpl.target_category not in nav_targets:
                nav_targets.append(tpl.target_category)
        for target in nav_targets:
            nav_tpl = TaskTemplate(f"nav_{target}", "navigation", target)
            for k, triplet in enumerate(realizable_triplets(kg, target, scene)):
                seed = stable_seed(base_seed, scene.scene_id, nav_tpl.template_id, k)
                task_id = f"{scene.scene_id}:{nav_tpl.template_id}:{k}"
                nav.append(instantiate_task(nav_tpl, scene, triplet, seed, kg, task_id=task_id))
    return manip, nav


def count_manipulation_tasks(scenes: list[SceneSpec], templates: list[TaskTemplate],
                             kg: KnowledgeGraph) -> int:
    """The counting rule: sum over scenes and applicable templates of the
    number of scene-realizable triplets of the template's target."""
    total = 0
    for scene in scenes:
        for tpl in applicable_templates(scene, templates, kg):
            if tpl.task_kind != "manipulation":
                continue
            total += len(realizable_triplets(kg, tpl.target_category, scene))
    return total


def emit_dataset(tasks: list[TaskSpec], path) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"record": "header", "schema_version": SCHEMA_VERSION,
                                 "count": len(tasks)}, sort_keys=True) + "\n")
            for t in tasks:
                fh.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")
    except OSError as err:
        raise SimError(E.E_IO, f"cannot write {path}: {err}")


def load_dataset(path) -> list[TaskSpec]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as err:
        raise SimError(E.E_IO, f"cannot read {path}: {err}")
    if not lines:
        raise SimError(E.E_PARSE, f"{path}: empty dataset")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError:
        raise SimError(E.E_PARSE, f"{path}: record 0: bad header")
    if header.get("record") != "header":
        raise SimError(E.E_PARSE, f"{path}: record 0: missing header record")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise SimError(E.E_PARSE,
                       f"{path}: unsupported schema_version {header.get('schema_version')}")
    tasks = []
    for i, ln in enumerate(lines[1:], start=1):
        try:
            tasks.append(TaskSpec.from_dict(json.loads(ln)))
        except (json.JSONDecodeError, KeyError) as err:
            raise SimError(E.E_PARSE, f"{path}: record {i}: {err}")
    if header.get("count") != len(tasks):
        raise SimError(E.E_PARSE,
                       f"{path}: header count {header.get('count')} != {len(tasks)} records")
    return tasks

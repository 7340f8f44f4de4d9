"""Episode runner and metrics engine.

Runs server plus policy clients for dataset subsets, computes success
rate, time-weighted success rate, adoption and trust aggregates, and
writes trial rows, replays and report tables.
"""

from __future__ import annotations

import asyncio
import math
import statistics
from dataclasses import dataclass
from pathlib import Path

from . import errors as E
from .client import run_policy_client
from .errors import SimError
from .mapping import distance_map
from .policies import FrontierPolicy, HumanProxyPolicy, IdlePolicy, OraclePolicy
from .scene import SceneSpec
from .server import GridServer
from .tasks import TaskSpec
from .util import stable_seed
from .world import World, load_scene

SETTING_LABELS = {
    "no_robot": "No Robot",
    "frontier": "Frontier",
    "oracle": "Oracle",
    "custom": "Custom",
}

DETECTION_RANGE_CELLS = 6  # 1.5 m


def compute_twsr(s: int, elapsed: float, optimal: float) -> float:
    """Time-weighted success: s * T_opt / max(T_opt, T).

    The only zero/zero case (pre-solved task finished instantly) scores 1.
    """
    if elapsed < 0 or optimal < 0:
        raise SimError(E.E_BAD_ARG, "times must be non-negative")
    if s not in (0, 1):
        raise SimError(E.E_BAD_ARG, "success flag must be 0 or 1")
    if s == 0:
        return 0.0
    if optimal == 0 and elapsed == 0:
        return 1.0
    return s * optimal / max(optimal, elapsed)


def _spawned_world(scene: SceneSpec, task: TaskSpec) -> World:
    world = load_scene(scene)
    world.add_agent("human", "human", ("navigate", "manipulate"))
    world.apply_task(task)
    return world


def estimate_optimal_ticks(world: World) -> int:
    """Minimum ticks to solve the goal, from shortest-path distances.

    Navigation stops at detection range. Manipulation walks to a cell
    beside the target, picks, carries to a cell beside the goal receptacle
    and places, with one extra tick when the receptacle must be opened.
    Motion counts two cells per tick (the 0.5 m action clamp).
    """
    if world.goal is None:
        raise SimError(E.E_BAD_ARG, "world has no goal")
    human = next((a for a in world.agents.values() if a.role == "human"), None)
    if human is None or human.position is None:
        raise SimError(E.E_BAD_ARG, "world has no spawned human")
    floor = ~world.scene.walls
    dist_h = distance_map(floor, [human.position])

    target_cells = [o.position for o in world.objects.values()
                    if o.kind == "target" and o.category == world.goal.target_category
                    and o.position is not None]
    if not target_cells:
        raise SimError(E.E_UNREACHABLE, f"no {world.goal.target_category} in world")

    if world.goal.task_kind == "navigation":
        best = None
        for cell in target_cells:
            d = dist_h[cell[1], cell[0]]
            if d >= 0 and (best is None or d < best):
                best = int(d)
        if best is None:
            raise SimError(E.E_UNREACHABLE, "target cell unreachable")
        return math.ceil(max(0, best - DETECTION_RANGE_CELLS) / 2)

    h, w = floor.shape
    best_total = None
    for tcell in target_cells:
        pick_cells = [(tcell[0] + dx, tcell[1] + dy)
                      for dx, dy in ((-1, 0), (0, -1), (0, 1), (1, 0))]
        pick_cells = [c for c in pick_cells
                      if 0 <= c[0] < w and 0 <= c[1] < h and floor[c[1], c[0]]]
        for rec in world.receptacles_of(world.goal.receptacle_category):
            ring = []
            x0, y0, x1, y1 = rec.region
            for y in range(y0 - 1, y1 + 2):
                for x in range(x0 - 1, x1 + 2):
                    if (x0 <= x <= x1 and y0 <= y <= y1) or not (0 <= x < w and 0 <= y < h):
                        continue
                    if floor[y, x]:
                        ring.append((x, y))
            if not ring:
                continue
            dist_rec = distance_map(floor, ring)
            overhead = 3 if rec.openable else 2  # pick + place (+ open)
            for p in pick_cells:
                d1 = dist_h[p[1], p[0]]
                d2 = dist_rec[p[1], p[0]]
                if d1 < 0 or d2 < 0:
                    continue
                total = math.ceil(d1 / 2) + math.ceil(d2 / 2) + overhead
                if best_total is None or total < best_total:
                    best_total = total
    if best_total is None:
        raise SimError(E.E_UNREACHABLE, "no feasible pick-and-place route")
    return best_total


# ----------------------------------------------------------------------
# episode results

@dataclass
class EpisodeResult:
    task_id: str
    scene_id: str
    setting: str
    participant: int
    trial_index: int
    seed: int
    status: str  # success | timeout | broken
    success: int
    elapsed_ticks: int
    optimal_ticks: int
    twsr: float
    adopted: bool | None  # None = n/a (no robot)
    messages_sent: int
    trust: int | None
    replay_path: str

    @property
    def broken(self) -> bool:
        return self.status == "broken"

    COLUMNS = ("setting", "participant", "trial_index", "task_id", "scene_id", "seed",
               "status", "success", "elapsed_ticks", "optimal_ticks", "twsr", "adopted",
               "messages_sent", "trust", "replay_path")

    def to_row(self) -> list[str]:
        return [
            self.setting, str(self.participant), str(self.trial_index), self.task_id,
            self.scene_id, str(self.seed), self.status, str(self.success),
            str(self.elapsed_ticks), str(self.optimal_ticks), repr(self.twsr),
            "/" if self.adopted is None else ("yes" if self.adopted else "no"),
            str(self.messages_sent), "/" if self.trust is None else str(self.trust),
            self.replay_path,
        ]

    @staticmethod
    def from_row(row: list[str]) -> "EpisodeResult":
        return EpisodeResult(
            setting=row[0], participant=int(row[1]), trial_index=int(row[2]),
            task_id=row[3], scene_id=row[4], seed=int(row[5]), status=row[6],
            success=int(row[7]), elapsed_ticks=int(row[8]), optimal_ticks=int(row[9]),
            twsr=float(row[10]),
            adopted=None if row[11] == "/" else row[11] == "yes",
            messages_sent=int(row[12]),
            trust=None if row[13] == "/" else int(row[13]),
            replay_path=row[14],
        )


@dataclass
class ProxyConfig:
    confirm_probability: float = 1.0
    reaction_delay_ticks: int = 0

    @staticmethod
    def parse(text: str) -> "ProxyConfig":
        # "proxy:<confirm_probability>,<delay>"
        body = text.split(":", 1)[1] if ":" in text else ""
        if not body:
            return ProxyConfig()
        parts = body.split(",")
        cp = float(parts[0])
        delay = int(parts[1]) if len(parts) > 1 else 0
        if not 0.0 <= cp <= 1.0 or delay < 0:
            raise SimError(E.E_BAD_ARG, f"bad proxy spec {text!r}")
        return ProxyConfig(cp, delay)


SETTING_ROBOTS = {"no_robot": None, "frontier": "frontier", "oracle": "oracle"}


async def _run_episode_async(scene: SceneSpec, task: TaskSpec, setting: str, seed: int,
                             proxy: ProxyConfig, replay_path: Path,
                             robot_policy: str | None = "default",
                             episode_wall_limit_s: float = 120.0) -> dict:
    server = GridServer(scene, seed=seed, mode="lockstep")
    host, port = await server.start_tcp("127.0.0.1", 0)
    config = None
    runners: list[asyncio.Task] = []
    try:
        from .client import ProtocolClient
        config = await ProtocolClient.connect(host, port)
        await config.hello("config")
        await config.request("config", {"op": "apply_task", "task": task.to_dict()})

        robot_kind = SETTING_ROBOTS.get(setting, "frontier") if robot_policy == "default" \
            else robot_policy
        if setting != "no_robot" and robot_kind is not None:
            if robot_kind == "oracle":
                factory = lambda ack: OraclePolicy(scene, task)
            else:
                factory = lambda ack: FrontierPolicy(
                    scene.width, scene.height, task.goal.target_category)
            ready = asyncio.Event()
            runners.append(asyncio.create_task(run_policy_client(
                host, port, "robot", factory, capabilities=["navigate", "communicate"],
                ready=ready)))
            await ready.wait()

        proxy_seed = stable_seed(seed, "proxy")

        def human_factory(ack):
            return HumanProxyPolicy(
                scene.width, scene.height, goal=task.goal.to_dict(), seed=proxy_seed,
                confirm_probability=proxy.confirm_probability,
                reaction_delay_ticks=proxy.reaction_delay_ticks)

        ready = asyncio.Event()
        runners.append(asyncio.create_task(
            run_policy_client(host, port, "human", human_factory, ready=ready)))
        await ready.wait()

        await config.request("config", {"op": "run"})
        await asyncio.wait_for(server.episode_over.wait(), timeout=episode_wall_limit_s)
        result = dict(server.episode_result)
        crashed = [t for t in runners if t.done() and t.exception() is not None]
        if crashed:
            result["broken"] = f"client crashed: {crashed[0].exception()!r}"
        if result["broken"] is None and server.recorder is not None:
            replay_path.parent.mkdir(parents=True, exist_ok=True)
            server.recorder.write(replay_path, server.world)
        return result
    except asyncio.TimeoutError:
        return {"status": "timeout", "broken": "episode wall-clock limit exceeded",
                "ticks": server.world.tick, "success_tick": None,
                "messages_sent": len(server.world.messages), "messages_confirmed": 0}
    finally:
        for t in runners:
            t.cancel()
        if config is not None:
            await config.close()
        await server.close()
        await asyncio.sleep(0)


def run_episode(scene: SceneSpec, task: TaskSpec, setting: str, seed: int,
                proxy: ProxyConfig, replay_path: Path, participant: int = 0,
                trial_index: int = 0) -> EpisodeResult:
    """One headless trial: boots a server, wires policy clients, scores it."""
    optimal = estimate_optimal_ticks(_spawned_world(scene, task))
    raw = asyncio.run(_run_episode_async(scene, task, setting, seed, proxy, replay_path))
    if raw.get("broken"):
        return EpisodeResult(
            task_id=task.task_id, scene_id=task.scene_id, setting=setting,
            participant=participant, trial_index=trial_index, seed=seed,
            status="broken", success=0, elapsed_ticks=raw.get("ticks", 0),
            optimal_ticks=optimal, twsr=0.0,
            adopted=None if setting == "no_robot" else False,
            messages_sent=raw.get("messages_sent", 0), trust=None,
            replay_path="")
    success = 1 if raw["status"] == "success" else 0
    elapsed = raw["success_tick"] if success else raw["ticks"]
    twsr = compute_twsr(success, elapsed, optimal)
    adopted = None if setting == "no_robot" else raw["messages_confirmed"] > 0
    trust = None if setting == "no_robot" else max(1, min(7, round(7 * twsr)))
    return EpisodeResult(
        task_id=task.task_id, scene_id=task.scene_id, setting=setting,
        participant=participant, trial_index=trial_index, seed=seed,
        status=raw["status"], success=success, elapsed_ticks=elapsed,
        optimal_ticks=optimal, twsr=twsr, adopted=adopted,
        messages_sent=raw["messages_sent"], trust=trust,
        replay_path=str(replay_path))


# ----------------------------------------------------------------------
# suites and reports

@dataclass
class RunReport:
    rows: list[EpisodeResult]
    settings: list[str]

    def valid_rows(self, setting: str | None = None) -> list[EpisodeResult]:
        rows = [r for r in self.rows if not r.broken]
        if setting is not None:
            rows = [r for r in rows if r.setting == setting]
        return rows

    def aggregate(self, setting: str) -> dict:
        rows = self.valid_rows(setting)
        if not rows:
            return {"setting": setting, "n": 0}
        sr = statistics.mean(r.success for r in rows)
        twsr = statistics.mean(r.twsr for r in rows)
        with_robot = [r for r in rows if r.adopted is not None]
        adoption = (sum(1 for r in with_robot if r.adopted) / len(with_robot)
                    if with_robot else None)
        seconds = sorted(r.elapsed_ticks * 0.25 for r in rows)
        return {
            "setting": setting,
            "n": len(rows),
            "sr": sr,
            "twsr": twsr,
            "adoption": adoption,
            "time_quartiles": _quartiles(seconds),
            "broken": sum(1 for r in self.rows if r.setting == setting and r.broken),
        }

    def trust_series(self, setting: str) -> list[dict]:
        rows = [r for r in self.valid_rows(setting) if r.trust is not None]
        by_index: dict[int, list[int]] = {}
        for r in rows:
            by_index.setdefault(r.trial_index, []).append(r.trust)
        series = []
        for idx in sorted(by_index):
            vals = by_index[idx]
            mean = statistics.mean(vals)
            stderr = (statistics.stdev(vals) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
            series.append({"trial_index": idx, "mean": mean, "stderr": stderr, "n": len(vals)})
        return series


def _quartiles(sorted_vals: list[float]) -> dict:
    if not sorted_vals:
        return {}
    qs = statistics.quantiles(sorted_vals, n=4, method="inclusive") if len(sorted_vals) > 1 \
        else [sorted_vals[0]] * 3
    return {"min": sorted_vals[0], "q1": qs[0], "median": qs[1], "q3": qs[2],
            "max": sorted_vals[-1]}


def fmt_pct(value: float | None) -> str:
    return "/" if value is None else f"{100 * value:.1f}"


def format_table(aggregates: list[dict]) -> str:
    """The headline metric table; one row per setting."""
    lines = ["Robot setting | SR (%) | TWSR (%) | Adoption Rate (%)"]
    for agg in aggregates:
        if agg.get("n", 0) == 0:
            continue
        label = SETTING_LABELS.get(agg["setting"], agg["setting"])
        lines.append(f"{label} | {fmt_pct(agg['sr'])} | {fmt_pct(agg['twsr'])} | "
                     f"{fmt_pct(agg['adoption'])}")
    return "\n".join(lines) + "\n"


def select_participant_tasks(tasks: list[TaskSpec], setting: str, participant: int,
                             base_seed: int) -> list[TaskSpec]:
    """One task per scene in a seeded-shuffled scene order."""
    import random
    by_scene: dict[str, list[TaskSpec]] = {}
    for t in tasks:
        by_scene.setdefault(t.scene_id, []).append(t)
    rng = random.Random(stable_seed(base_seed, setting, participant, "order"))
    chosen = []
    for scene_id in sorted(by_scene):
        options = sorted(by_scene[scene_id], key=lambda t: t.task_id)
        chosen.append(options[rng.randrange(len(options))])
    rng.shuffle(chosen)
    return chosen


def run_suite(scenes: dict[str, SceneSpec], tasks: list[TaskSpec], settings: list[str],
              proxies: int, proxy_config: ProxyConfig, base_seed: int, out_dir: Path,
              echo=None, parallel: int = 1) -> RunReport:
    """The full study shape: per setting, each proxy participant plays one
    task per scene in seeded-random order.

    With parallel > 1 that many fully isolated server+client bundles run
    concurrently (ephemeral ports, independent seeds); results land in
    plan order, so reports are identical either way.
    """
    out_dir = Path(out_dir)
    plan: list[tuple[str, int, int, TaskSpec, int, Path]] = []
    for setting in settings:
        for participant in range(proxies):
            chosen = select_participant_tasks(tasks, setting, participant, base_seed)
            for trial_index, task in enumerate(chosen, start=1):
                seed = stable_seed(base_seed, setting, participant, task.task_id)
                replay = out_dir / "replays" / f"{setting}_p{participant}_t{trial_index:02d}.jsonl"
                plan.append((setting, participant, trial_index, task, seed, replay))

    def execute(entry) -> EpisodeResult:
        setting, participant, trial_index, task, seed, replay = entry
        result = run_episode(scenes[task.scene_id], task, setting, seed, proxy_config,
                             replay, participant=participant, trial_index=trial_index)
        if not result.broken:
            result.replay_path = str(replay.relative_to(out_dir))
        return result

    rows: list[EpisodeResult | None] = [None] * len(plan)
    if parallel <= 1:
        for i, entry in enumerate(plan):
            rows[i] = execute(entry)
            if echo:
                r = rows[i]
                echo(f"[{i + 1}/{len(plan)}] {r.setting} p{r.participant} {r.task_id}: "
                     f"{r.status} T={r.elapsed_ticks} T*={r.optimal_ticks}")
    else:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            for i, result in enumerate(pool.map(execute, plan)):
                rows[i] = result
                if echo:
                    echo(f"[{i + 1}/{len(plan)}] {result.setting} p{result.participant} "
                         f"{result.task_id}: {result.status}")
    return RunReport(rows=list(rows), settings=list(settings))


def emit_report(report: RunReport, out_dir: Path) -> dict:
    """Write trial rows, the metric table and the trust series; returns paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trials_path = out_dir / "trials.tsv"
    with open(trials_path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(EpisodeResult.COLUMNS) + "\n")
        for r in report.rows:
            fh.write("\t".join(r.to_row()) + "\n")

    aggregates = [report.aggregate(s) for s in report.settings]
    table_path = out_dir / "report.txt"
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write(format_table(aggregates))
        fh.write("\nTime spent (seconds)\n")
        fh.write("setting | n | min | q1 | median | q3 | max | broken\n")
        for agg in aggregates:
            if agg.get("n", 0) == 0:
                fh.write(f"{SETTING_LABELS.get(agg['setting'], agg['setting'])} | 0 "
                         f"(no valid trials)\n")
                continue
            q = agg["time_quartiles"]
            fh.write(f"{SETTING_LABELS.get(agg['setting'], agg['setting'])} | {agg['n']} | "
                     f"{q['min']:.2f} | {q['q1']:.2f} | {q['median']:.2f} | "
                     f"{q['q3']:.2f} | {q['max']:.2f} | {agg['broken']}\n")

    series_path = out_dir / "trust_series.tsv"
    with open(series_path, "w", encoding="utf-8") as fh:
        fh.write("setting\ttrial_index\tmean\tstderr\tn\n")
        for setting in report.settings:
            for point in report.trust_series(setting):
                fh.write(f"{setting}\t{point['trial_index']}\t{point['mean']!r}\t"
                         f"{point['stderr']!r}\t{point['n']}\n")
    return {"trials": trials_path, "table": table_path, "series": series_path}


def load_trials(path) -> RunReport:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].split("\t") != list(EpisodeResult.COLUMNS):
        raise SimError(E.E_PARSE, f"{path}: bad trials header")
    rows = [EpisodeResult.from_row(ln.split("\t")) for ln in lines[1:]]
    settings = []
    for r in rows:
        if r.setting not in settings:
            settings.append(r.setting)
    return RunReport(rows=rows, settings=settings)


def initially_solved(scene: SceneSpec, task: TaskSpec) -> bool:
    world = _spawned_world(scene, task)
    return world.check_goal()


def sample_suite(scenes: dict[str, SceneSpec], tasks: list[TaskSpec], per_scene: int,
                 seed: int, min_optimal_ticks: int = 0) -> list[TaskSpec]:
    """Seeded benchmark subset: per scene, `per_scene` solvable tasks that
    are neither pre-solved nor below the difficulty floor."""
    import random
    rng = random.Random(seed)
    chosen: list[TaskSpec] = []
    by_scene: dict[str, list[TaskSpec]] = {}
    for t in tasks:
        by_scene.setdefault(t.scene_id, []).append(t)
    for scene_id in sorted(by_scene):
        scene = scenes[scene_id]
        eligible = []
        for t in sorted(by_scene[scene_id], key=lambda t: t.task_id):
            if initially_solved(scene, t):
                continue
            try:
                opt = estimate_optimal_ticks(_spawned_world(scene, t))
            except SimError:
                continue
            if opt >= min_optimal_ticks:
                eligible.append(t)
        if len(eligible) < per_scene:
            raise SimError(E.E_BAD_TASK,
                           f"scene {scene_id} has only {len(eligible)} eligible tasks")
        idx = rng.sample(range(len(eligible)), per_scene)
        chosen.extend(eligible[i] for i in sorted(idx))
    return chosen

"""Command-line entry point: taskgen, run, serve, replay.

Exit codes: 0 success, 2 configuration error, 3 data/run error,
4 environment error (e.g. a busy port). GRIDTHOR_SEED overrides --seed
everywhere, for reproduction runs.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import os
import sys
from pathlib import Path

from . import data as shipped
from .errors import SimError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUN = 3
EXIT_ENV = 4


def _seed_from_env(seed: int) -> int:
    env = os.environ.get("GRIDTHOR_SEED")
    if env is None:
        return seed
    try:
        return int(env)
    except ValueError:
        raise SimError("E_BAD_ARG", f"GRIDTHOR_SEED={env!r} is not an integer")


def _load_scenes(scene_dir: Path | None):
    from .scene import load_scene_file
    if scene_dir is None:
        return {s.scene_id: s for s in shipped.load_default_scenes()}
    paths = sorted(Path(scene_dir).glob("*.scene"))
    if not paths:
        raise SimError("E_BAD_ARG", f"no .scene files under {scene_dir}")
    return {s.scene_id: s for s in map(load_scene_file, paths)}


def _parse_listen(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridthor",
        description="Grid-world human-robot collaboration platform and benchmark",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("taskgen", help="generate benchmark datasets from scenes and priors",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--scenes", type=Path, default=None,
                   help="scene directory (default: shipped 10-house set)")
    p.add_argument("--kg", type=Path, default=shipped.KG_PATH, help="knowledge-graph table")
    p.add_argument("--categories", type=Path, default=shipped.CATEGORIES_PATH,
                   help="category registry table")
    p.add_argument("--templates", type=Path, default=shipped.TEMPLATES_PATH,
                   help="task template table")
    p.add_argument("--alpha", type=float, default=0.5,
                   help="similarity/prior blend weight for triplet scores")
    p.add_argument("--seed", type=int, default=20240901, help="base generation seed")
    p.add_argument("--kind", choices=("both", "manipulation", "navigation"), default="both",
                   help="which dataset(s) to emit")
    p.add_argument("--out", type=Path, default=Path("dataset_manipulation.jsonl"),
                   help="manipulation dataset path")
    p.add_argument("--nav-out", type=Path, default=Path("dataset_navigation.jsonl"),
                   help="navigation dataset path")

    p = sub.add_parser("run", help="run the headless benchmark and write reports",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--scenes", type=Path, default=None,
                   help="scene directory (default: shipped set)")
    p.add_argument("--dataset", type=Path, default=shipped.SUITE_PATH,
                   help="task dataset (default: shipped 30-task suite)")
    p.add_argument("--settings", default="no_robot,frontier,oracle",
                   help="comma-separated robot settings")
    p.add_argument("--proxies", type=int, default=6, help="proxy participants per setting")
    p.add_argument("--human", default="proxy:1.0,4",
                   help="human driver: proxy:<confirm_probability>,<delay_ticks>")
    p.add_argument("--robot", default="default",
                   help="robot policy override: default|frontier|oracle|none")
    p.add_argument("--seed", type=int, default=42, help="base seed for the whole run")
    p.add_argument("--tasks", type=int, default=None,
                   help="quick mode: run only the first N tasks, once each per setting")
    p.add_argument("--parallel", type=int, default=1,
                   help="episodes to run concurrently (isolated servers)")
    p.add_argument("--out", type=Path, default=Path("runs/latest"), help="report directory")
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering the box-plot/trust figures")

    p = sub.add_parser("serve", help="serve live sessions for a human player",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--scenes", type=Path, default=None,
                   help="scene directory (default: shipped set)")
    p.add_argument("--dataset", type=Path, default=shipped.SUITE_PATH,
                   help="tasks to play, in order")
    p.add_argument("--listen", default="127.0.0.1:7777", help="agent TCP listener")
    p.add_argument("--web-listen", default="127.0.0.1:7778", help="browser transport")
    p.add_argument("--web-root", type=Path, default=None,
                   help="static UI directory (default: packaged client if present)")
    p.add_argument("--robot", default="frontier", help="robot companion: frontier|oracle|none")
    p.add_argument("--human", default="live", help="human driver: live is the only serve mode")
    p.add_argument("--seed", type=int, default=42, help="base seed")
    p.add_argument("--tasks", type=int, default=None, help="limit how many tasks are played")
    p.add_argument("--time-scale", type=float, default=1.0,
                   help="tick pacing multiplier (2.0 = half speed)")
    p.add_argument("--out", type=Path, default=Path("runs/live"), help="trial log directory")

    p = sub.add_parser("replay", help="verify a replay log and export overlays",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--replay", type=Path, required=True, help="replay log path")
    p.add_argument("--export-traj", type=Path, default=None,
                   help="write a trajectory overlay JSON here")
    p.add_argument("--render", type=Path, default=None,
                   help="write a top-view PNG of the trajectories here")
    return parser


def cmd_taskgen(args) -> int:
    from .kg import load_categories, load_kg
    from .tasks import emit_dataset, generate_dataset, load_templates
    for path in (args.kg, args.categories, args.templates):
        if not Path(path).is_file():
            print(f"gridthor: missing input file: {path}", file=sys.stderr)
            return EXIT_CONFIG
    scenes = _load_scenes(args.scenes)
    registry = load_categories(args.categories)
    kg = load_kg(args.kg, registry, args.alpha)
    templates = load_templates(args.templates)
    seed = _seed_from_env(args.seed)
    try:
        manip, nav = generate_dataset(list(scenes.values()), templates, kg, base_seed=seed)
    except SimError as err:
        print(f"gridthor: generation failed: {err}", file=sys.stderr)
        return EXIT_RUN
    if args.kind in ("both", "manipulation"):
        emit_dataset(manip, args.out)
        print(f"manipulation tasks: {len(manip)} -> {args.out}")
    if args.kind in ("both", "navigation"):
        emit_dataset(nav, args.nav_out)
        print(f"navigation tasks: {len(nav)} -> {args.nav_out}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .harness import (ProxyConfig, emit_report, format_table, run_episode, run_suite)
    from .tasks import load_dataset
    if not Path(args.dataset).is_file():
        print(f"gridthor: dataset not found: {args.dataset}", file=sys.stderr)
        return EXIT_CONFIG
    settings = [s.strip() for s in args.settings.split(",") if s.strip()]
    valid = {"no_robot", "frontier", "oracle", "custom"}
    if not settings or not set(settings) <= valid:
        print(f"gridthor: invalid settings {args.settings!r}; choose from {sorted(valid)}",
              file=sys.stderr)
        return EXIT_CONFIG
    if not args.human.startswith("proxy"):
        print("gridthor: run is headless; --human must be proxy:<p>,<delay>", file=sys.stderr)
        return EXIT_CONFIG
    try:
        proxy = ProxyConfig.parse(args.human)
    except (SimError, ValueError) as err:
        print(f"gridthor: bad --human spec: {err}", file=sys.stderr)
        return EXIT_CONFIG
    scenes = _load_scenes(args.scenes)
    tasks = load_dataset(args.dataset)
    missing = sorted({t.scene_id for t in tasks} - set(scenes))
    if missing:
        print(f"gridthor: dataset references unknown scenes {missing}", file=sys.stderr)
        return EXIT_CONFIG
    seed = _seed_from_env(args.seed)
    out_dir = Path(args.out)

    if args.tasks is not None:
        from .util import stable_seed
        rows = []
        for task in tasks[:args.tasks]:
            for setting in settings:
                replay = out_dir / "replays" / f"{setting}_{task.task_id.replace(':', '_')}.jsonl"
                result = run_episode(scenes[task.scene_id], task, setting,
                                     stable_seed(seed, setting, task.task_id), proxy, replay)
                rows.append(result)
                print(f"{setting:9s} {task.task_id}: {result.status} "
                      f"T={result.elapsed_ticks} T*={result.optimal_ticks} "
                      f"twsr={result.twsr:.3f} adopted={result.adopted}")
        broken = sum(1 for r in rows if r.broken)
        return EXIT_RUN if rows and broken / len(rows) > 0.2 else EXIT_OK

    report = run_suite(scenes, tasks, settings, args.proxies, proxy, seed, out_dir,
                       echo=print, parallel=args.parallel)
    paths = emit_report(report, out_dir)
    if not args.no_figures:
        from .figures import render_time_box, render_trust_series
        render_time_box(report, out_dir / "time_spent.png")
        render_trust_series(report, out_dir / "trust_series.png")
    print()
    print(format_table([report.aggregate(s) for s in report.settings]), end="")
    print(f"\nreports under {out_dir} ({', '.join(p.name for p in paths.values())})")
    total = len(report.rows)
    broken = sum(1 for r in report.rows if r.broken)
    if total and broken / total > 0.2:
        print(f"gridthor: {broken}/{total} trials broken", file=sys.stderr)
        return EXIT_RUN
    return EXIT_OK


def cmd_serve(args) -> int:
    from .live import serve_live
    scenes = _load_scenes(args.scenes)
    from .tasks import load_dataset
    if not Path(args.dataset).is_file():
        print(f"gridthor: dataset not found: {args.dataset}", file=sys.stderr)
        return EXIT_CONFIG
    tasks = load_dataset(args.dataset)
    if args.tasks is not None:
        tasks = tasks[:args.tasks]
    if args.robot not in ("frontier", "oracle", "none"):
        print(f"gridthor: bad --robot {args.robot!r}", file=sys.stderr)
        return EXIT_CONFIG
    if args.human != "live":
        print("gridthor: serve hosts a live human; use 'gridthor run' for proxies",
              file=sys.stderr)
        return EXIT_CONFIG
    web_root = args.web_root
    if web_root is None:
        packaged = Path(__file__).resolve().parent / "web"
        web_root = packaged if packaged.is_dir() else None
    try:
        host, port = _parse_listen(args.listen)
        whost, wport = _parse_listen(args.web_listen)
    except ValueError:
        print("gridthor: --listen/--web-listen must be HOST:PORT", file=sys.stderr)
        return EXIT_CONFIG
    try:
        asyncio.run(serve_live(scenes, tasks, robot=args.robot,
                               listen=(host, port), web_listen=(whost, wport),
                               web_root=web_root, seed=_seed_from_env(args.seed),
                               out_dir=Path(args.out), time_scale=args.time_scale))
    except OSError as err:
        print(f"gridthor: cannot bind listener: {err}", file=sys.stderr)
        return EXIT_ENV
    except KeyboardInterrupt:
        print("\ngridthor: interrupted; logs flushed")
    return EXIT_OK


def cmd_replay(args) -> int:
    from .replay import export_trajectories, replay
    if not Path(args.replay).is_file():
        print(f"gridthor: replay not found: {args.replay}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        world = replay(args.replay, verify=True)
    except SimError as err:
        print(f"gridthor: replay verification failed: {err}", file=sys.stderr)
        return EXIT_RUN
    print(f"replay ok: {world.scene.scene_id} status={world.status} ticks={world.tick} "
          f"hash={world.state_hash()[:16]}")
    if args.export_traj or args.render:
        overlay = export_trajectories(args.replay)
        if args.export_traj:
            args.export_traj.parent.mkdir(parents=True, exist_ok=True)
            args.export_traj.write_text(json.dumps(overlay, indent=2), encoding="utf-8")
            print(f"trajectories -> {args.export_traj}")
        if args.render:
            from .figures import render_topview
            args.render.parent.mkdir(parents=True, exist_ok=True)
            render_topview(overlay, args.render)
            print(f"top view -> {args.render}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        handler = {"taskgen": cmd_taskgen, "run": cmd_run,
                   "serve": cmd_serve, "replay": cmd_replay}[args.command]
        return handler(args)
    except SimError as err:
        print(f"gridthor: {err}", file=sys.stderr)
        return EXIT_CONFIG if err.code in ("E_BAD_ARG", "E_PARSE") else EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())

"""Live-play serving: real human in the browser, tasks played in sequence.

One realtime server carries all episodes; the web client binds the human
session once and keeps it across tasks. Trial rows (including the trust
score the client submits after each episode) land in the same format the
headless harness writes.
"""

from __future__ import annotations

import asyncio
from pathlib import Path

from .client import ProtocolClient, run_policy_client
from .harness import EpisodeResult, _spawned_world, compute_twsr, estimate_optimal_ticks
from .policies import FrontierPolicy, OraclePolicy
from .server import GridServer
from .tasks import TaskSpec
from .util import stable_seed
from .webserver import WebTransport

TRUST_WAIT_S = 600.0


class _TaskHolder:
    task: TaskSpec | None = None
    scene = None


def _robot_factory(kind: str, holder: _TaskHolder):
    def factory(ack):
        scene = holder.scene
        if kind == "oracle":
            return OraclePolicy(scene, holder.task)
        return FrontierPolicy(scene.width, scene.height,
                              holder.task.goal.target_category if holder.task else None)
    return factory


async def serve_live(scenes: dict, tasks: list[TaskSpec], robot: str,
                     listen: tuple[str, int], web_listen: tuple[str, int],
                     web_root, seed: int, out_dir: Path, time_scale: float = 1.0) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    trials_path = out_dir / "live_trials.tsv"
    if not trials_path.exists():
        trials_path.write_text("\t".join(EpisodeResult.COLUMNS) + "\n", encoding="utf-8")

    first_scene = scenes[tasks[0].scene_id]
    server = GridServer(first_scene, seed=seed, mode="realtime", time_scale=time_scale,
                        scene_library=scenes)
    host, port = await server.start_tcp(*listen)
    web = WebTransport(server, web_root)
    whost, wport = await web.start(*web_listen)
    print(f"agent listener on {host}:{port}")
    print(f"join as the human at http://{whost}:{wport}/")

    config = await ProtocolClient.connect(host, port)
    await config.hello("config")

    robot_task = None
    holder = _TaskHolder()
    holder.scene = first_scene
    if robot != "none":
        ready = asyncio.Event()
        robot_task = asyncio.create_task(run_policy_client(
            host, port, "robot", _robot_factory(robot, holder),
            capabilities=["navigate", "communicate"], ready=ready, persist=True))
        await ready.wait()

    print("waiting for the human to join...")
    while "human" not in server.agent_sessions:
        await asyncio.sleep(0.2)
    print("human joined; starting tasks")

    try:
        for index, task in enumerate(tasks, start=1):
            holder.task = task
            holder.scene = scenes[task.scene_id]
            await config.request("config", {"op": "apply_task", "task": task.to_dict()})
            print(f"[{index}/{len(tasks)}] {task.task_id}: {task.nl_description}")
            await config.request("config", {"op": "run"})
            await server.episode_over.wait()
            raw = server.episode_result
            replay_rel = f"replays/live_{index:03d}.jsonl"
            if server.recorder is not None and not raw.get("broken"):
                (out_dir / "replays").mkdir(parents=True, exist_ok=True)
                server.recorder.write(out_dir / replay_rel, server.world)

            trust = None
            if robot != "none" and not raw.get("broken"):
                print("waiting for the trust score from the client...")
                try:
                    trust = await asyncio.wait_for(server.trust_future, timeout=TRUST_WAIT_S)
                except asyncio.TimeoutError:
                    print("no trust score submitted; recording as missing")

            optimal = estimate_optimal_ticks(_spawned_world(holder.scene, task))
            success = 1 if raw["status"] == "success" else 0
            elapsed = raw["success_tick"] if success else raw["ticks"]
            status = "broken" if raw.get("broken") else raw["status"]
            row = EpisodeResult(
                task_id=task.task_id, scene_id=task.scene_id, setting="live",
                participant=0, trial_index=index,
                seed=stable_seed(seed, "live", task.task_id),
                status=status, success=success, elapsed_ticks=elapsed,
                optimal_ticks=optimal, twsr=compute_twsr(success, elapsed, optimal),
                adopted=None if robot == "none" else raw.get("messages_confirmed", 0) > 0,
                messages_sent=raw.get("messages_sent", 0), trust=trust,
                replay_path=replay_rel if status != "broken" else "")
            with open(trials_path, "a", encoding="utf-8") as fh:
                fh.write("\t".join(row.to_row()) + "\n")
            print(f"  -> {status}, T={elapsed} ticks, trust={trust}")
    finally:
        if robot_task is not None:
            robot_task.cancel()
        await config.close()
        await web.close()
        await server.close()
    print(f"all tasks done; rows in {trials_path}")

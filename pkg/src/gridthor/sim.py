"""In-process episode driver: world + policies without the socket layer.

Replicates the server's lockstep semantics exactly (batch ordering,
message-push timing), so policy behavior and outcomes match wire-driven
runs tick for tick. Used by the suite builder, coverage checks and tests;
the benchmark harness proper drives real protocol clients instead.
"""

from __future__ import annotations

from .world import World


def drive_world(world: World, policies: dict[str, object], max_ticks: int | None = None,
                on_tick=None) -> list[dict]:
    """Run an episode to completion; returns the start events + all events.

    Message pushes reach the human policy after its next observation, the
    same ordering the protocol layer produces.
    """
    all_events = list(world.start_episode())
    human_id = next((a.agent_id for a in world.agents.values() if a.role == "human"), None)
    queued_messages: list[dict] = []
    limit = max_ticks if max_ticks is not None else world.deadline_ticks + 1
    while world.status == "running" and world.tick < limit:
        comms: list[tuple[str, dict]] = []
        acts: list[tuple[str, dict]] = []
        for aid in world.agents:
            policy = policies.get(aid)
            if policy is None:
                continue
            obs = world.observe(aid)
            commands = policy.on_observation(obs)
            if aid == human_id and queued_messages and hasattr(policy, "on_message_push"):
                for payload in queued_messages:
                    policy.on_message_push(payload, tick=obs["tick"])
                queued_messages = []
            for cmd in commands:
                (comms if "comm" in cmd else acts).append((aid, cmd))
        events = world.step(comms + acts)
        all_events.extend(events)
        for ev in events:
            if ev["kind"] == "message_sent" and human_id is not None:
                msg = world.get_message(ev["message_id"])
                queued_messages.append({"kind": "message",
                                        "message": msg.to_dict(with_snapshot=False)})
        if on_tick is not None:
            on_tick(world, events)
    return all_events


def probe_episode(scene, task, setting: str, seed: int, confirm_probability: float = 1.0,
                  reaction_delay_ticks: int = 4, max_ticks: int | None = None) -> dict:
    """Headless outcome probe for one task/setting; cheap and socket-free."""
    from .policies import FrontierPolicy, HumanProxyPolicy, OraclePolicy
    from .util import stable_seed
    from .world import load_scene

    world = load_scene(scene, seed=seed)
    policies: dict[str, object] = {}
    if setting != "no_robot":
        world.add_agent("robot_1", "robot", ("navigate", "communicate"))
    world.add_agent("human", "human", ("navigate", "manipulate"))
    world.apply_task(task)
    if setting == "oracle":
        policies["robot_1"] = OraclePolicy(scene, task)
    elif setting != "no_robot":
        policies["robot_1"] = FrontierPolicy(scene.width, scene.height,
                                             task.goal.target_category)
    policies["human"] = HumanProxyPolicy(
        scene.width, scene.height, goal=task.goal.to_dict(),
        seed=stable_seed(seed, "proxy"), confirm_probability=confirm_probability,
        reaction_delay_ticks=reaction_delay_ticks)
    events = drive_world(world, policies, max_ticks=max_ticks)
    message_ticks = [ev["tick"] for ev in events if ev["kind"] == "message_sent"]
    return {
        "status": world.status,
        "success": world.status == "success",
        "ticks": world.success_tick if world.status == "success" else world.tick,
        "first_message_tick": message_ticks[0] if message_ticks else None,
        "messages": len(message_ticks),
    }

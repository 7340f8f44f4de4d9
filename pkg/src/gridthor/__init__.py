"""gridthor: a desk-scale grid-world platform for human-robot collaboration.

An authoritative tick server with a newline-JSON wire protocol, scene-prior
task generation, frontier/oracle baseline robots, a scripted human proxy,
and a benchmark harness computing success-rate, time-weighted success-rate
and adoption metrics. A browser client (see frontend/) lets a real human
play episodes alongside the robot.
"""

__version__ = "0.1.0"

from .errors import SimError  # noqa: F401
from .scene import SceneSpec, parse_scene, load_scene_file  # noqa: F401
from .world import GoalSpec, World, load_scene  # noqa: F401

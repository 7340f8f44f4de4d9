import pytest

from gridthor.scene import parse_scene

BASIC_SCENE = """\
scene_id: lab
name: Test lab
cell_size: 0.25

[grid]
####################
#..................#
#..................#
#..................#
#..................#
#..................#
#..................#
#..................#
#..................#
#..................#
#..................#
####################

[receptacles]
fridge 2 2 3 3 yes
bed 15 8 17 9 no

[spawns]
human 9 5 11 6
robot 4 8 6 9
"""


@pytest.fixture
def lab_scene():
    return parse_scene(BASIC_SCENE)


@pytest.fixture
def lab_world(lab_scene):
    from gridthor.world import load_scene
    world = load_scene(lab_scene, seed=1)
    world.add_agent("human", "human", ("navigate", "manipulate"))
    world.add_agent("robot_1", "robot", ("navigate", "communicate"))
    return world


def place_object(world, object_id, category, cell, containment=("on_floor",)):
    from gridthor.world import ObjectInstance
    world.objects[object_id] = ObjectInstance(
        object_id=object_id, category=category, kind="target",
        position=tuple(cell), containment=tuple(containment))
    return world.objects[object_id]

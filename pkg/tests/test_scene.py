import pytest

from gridthor import errors as E
from gridthor.data import SCENE_DIR, load_default_scenes
from gridthor.errors import SimError
from gridthor.scene import SceneSpec, parse_scene
from tests.conftest import BASIC_SCENE


def test_parse_basic(lab_scene):
    assert lab_scene.scene_id == "lab"
    assert lab_scene.width == 20 and lab_scene.height == 12
    assert lab_scene.cell_size == 0.25
    assert [a.category for a in lab_scene.receptacle_anchors] == ["fridge", "bed"]
    assert lab_scene.receptacle_anchors[0].openable
    assert not lab_scene.receptacle_anchors[1].openable
    assert lab_scene.spawn_regions["human"] == (9, 5, 11, 6)


def test_dict_round_trip(lab_scene):
    again = SceneSpec.from_dict(lab_scene.to_dict())
    assert again.to_dict() == lab_scene.to_dict()


def test_minimal_all_floor_scene():
    rows = ["." * 20 for _ in range(20)]
    text = "scene_id: open\ncell_size: 0.25\n\n[grid]\n" + "\n".join(rows) + \
        "\n\n[receptacles]\nfridge 2 2 3 3 yes\n\n[spawns]\nhuman 5 5 6 6\nrobot 8 8 9 9\n"
    spec = parse_scene(text)
    assert spec.width == 20
    assert len(spec.receptacle_anchors) == 1


def _mutate(text: str, old: str, new: str) -> str:
    assert old in text
    return text.replace(old, new)


def test_receptacle_on_wall_rejected():
    bad = _mutate(BASIC_SCENE, "fridge 2 2 3 3 yes", "fridge 0 0 1 1 yes")
    with pytest.raises(SimError) as err:
        parse_scene(bad)
    assert err.value.code == E.E_BAD_SCENE
    assert "fridge" in err.value.message


def test_out_of_bounds_region_rejected():
    bad = _mutate(BASIC_SCENE, "bed 15 8 17 9 no", "bed 15 8 25 9 no")
    with pytest.raises(SimError) as err:
        parse_scene(bad)
    assert err.value.code == E.E_BAD_SCENE


def test_disconnected_floor_rejected():
    bad = _mutate(BASIC_SCENE,
                  "#..................#\n#..................#\n#..................#\n####",
                  "#..................#\n####################\n#..................#\n####")
    with pytest.raises(SimError) as err:
        parse_scene(bad)
    assert err.value.code == E.E_BAD_SCENE
    assert "disconnected" in err.value.message


def test_too_small_grid_rejected():
    rows = ["#####", "#...#", "#####"]
    text = "scene_id: tiny\ncell_size: 0.25\n\n[grid]\n" + "\n".join(rows) + "\n"
    with pytest.raises(SimError) as err:
        parse_scene(text)
    assert err.value.code == E.E_BAD_SCENE


def test_shipped_scene_set():
    scenes = load_default_scenes()
    assert len(scenes) == 10
    assert len(sorted(SCENE_DIR.glob("*.scene"))) == 10
    categories = set()
    for s in scenes:
        assert s.scene_id.startswith("house_")
        assert {"human", "robot"} <= set(s.spawn_regions)
        categories.update(a.category for a in s.receptacle_anchors)
    # all eight receptacle categories are represented somewhere in the set
    assert categories == {"fridge", "cabinet", "bed", "table", "sofa", "sink", "shelf", "box"}


def test_shipped_scene_receptacle_count():
    by_id = {s.scene_id: s for s in load_default_scenes()}
    assert len(by_id["house_01"].receptacle_anchors) == 5

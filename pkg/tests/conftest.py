import pytest

from drcount.assets import Assets
from drcount.config import config_from_dict
from drcount.samples import write_demo_assets


@pytest.fixture(scope="session")
def asset_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("assets")
    write_demo_assets(root, n_textures=8, n_backgrounds=12, bg_size=(200, 150), seed=3)
    return root


@pytest.fixture(scope="session")
def make_config(asset_root):
    def make(**overrides):
        data = {
            "size": 4,
            "n_objects": [5, 15],
            "width": 160,
            "height": 120,
            "meshes": str(asset_root / "meshes"),
            "textures": str(asset_root / "textures"),
            "backgrounds": str(asset_root / "backgrounds"),
        }
        data.update(overrides)
        return config_from_dict(data)

    return make


@pytest.fixture(scope="session")
def assets(make_config):
    return Assets.from_config(make_config())


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from drcount import scene as sc
from drcount.config import LightConfig
from drcount.rng import make_rng
from drcount.scene import Box, GmmSpec

REGION = Box((-10, -8, 20), (10, 8, 60))


def test_component_count_n20():
    rng = make_rng(0)
    ks = {sc.sample_component_count(20, rng) for _ in range(5000)}
    assert ks == {2, 3, 4}


def test_component_count_empty_scene():
    assert sc.sample_component_count(0, make_rng(0)) == 0


def test_component_bounds_helper():
    assert sc.component_count_bounds(20) == (2, 4)  # U(2, 4.5)
    assert sc.component_count_bounds(8) == (1, 3)  # U(1.4, 3)
    assert sc.component_count_bounds(36) == (3, 6)  # U(2.8, 6.5)


def test_gmm_spec_validation():
    with pytest.raises(ValueError):
        GmmSpec([0.5, 0.4], [[0, 0, 0], [1, 1, 1]])
    with pytest.raises(ValueError):
        GmmSpec([], np.zeros((0, 3)))


@given(st.integers(1, 300), st.integers(0, 2**32), st.sampled_from(["uniform", "dirichlet"]))
def test_gmm_weights_sum_to_one(n, seed, weighting):
    spec = sc.build_gmm(n, REGION, make_rng(seed), weighting)
    assert abs(spec.weights.sum() - 1.0) <= 1e-9
    assert REGION.contains(spec.means).all()


def test_single_component_mean():
    mu = np.array([1.0, -2.0, 30.0])
    spec = GmmSpec([1.0], [mu])
    pts = sc.sample_gmm(spec, 10_000, make_rng(7))
    assert np.abs(pts.mean(axis=0) - mu).max() < 0.05
    assert np.abs(pts.var(axis=0) - 1.0).max() < 0.1


def test_placements_inside_region_and_count():
    rng = make_rng(3)
    for n in (0, 1, 7, 100):
        pts = sc.sample_placements(n, REGION, rng)
        assert pts.shape == (n, 3)
        assert REGION.contains(pts).all()


def test_uniform_mode_spreads_out():
    # GMM clusters have unit spread, so their mean pairwise distance is far
    # smaller than for uniform points in a 20 x 16 x 40 box.
    def spread(mode):
        pts = sc.sample_placements(200, REGION, make_rng(1), mode)
        d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
        return np.sort(d, axis=1)[:, 1].mean()

    assert spread("gmm") < spread("uniform")


def test_unknown_placement_mode():
    with pytest.raises(ValueError):
        sc.sample_placements(3, REGION, make_rng(0), "grid")


def test_assign_textures():
    assert sc.assign_textures(["skin"], ["t0"], make_rng(0)) == {"skin": "t0"}
    lib = [f"t{i}" for i in range(1000)]
    a = sc.assign_textures(["a", "b", "c", "d"], lib, make_rng(9))
    assert set(a) == {"a", "b", "c", "d"}
    assert a == sc.assign_textures(["a", "b", "c", "d"], lib, make_rng(9))
    with pytest.raises(ValueError):
        sc.assign_textures(["a"], [], make_rng(0))


def test_assign_textures_allows_duplicates():
    rng = make_rng(0)
    dup = any(len(set(sc.assign_textures("abcd", ["x", "y"], rng).values())) < 4 for _ in range(5))
    assert dup


def test_select_background_excludes():
    lib = [(f"b{i}", cat) for i, cat in enumerate(["street", "stadium-football", "forest"] * 5)]
    rng = make_rng(0)
    cats = dict(lib)
    for _ in range(10_000):
        assert cats[sc.select_background(lib, {"stadium-football"}, rng)] != "stadium-football"
    assert sc.select_background([("only", "x")], set(), rng) == "only"
    with pytest.raises(ValueError):
        sc.select_background(lib, {"street", "stadium-football", "forest"}, rng)


def test_place_lights():
    cfg = LightConfig(count=(1, 1), color_min=(0.5, 0.5, 0.5), color_max=(0.6, 0.6, 0.6))
    lights, ambient = sc.place_lights(cfg, REGION, make_rng(0))
    assert len(lights) == 1
    assert all(0.5 <= c <= 0.6 for c in lights[0].color)
    assert REGION.inflate(cfg.inflate).contains(lights[0].position)
    assert cfg.ambient[0] <= ambient <= cfg.ambient[1]


def test_light_count_range():
    cfg = LightConfig(count=(2, 5))
    rng = make_rng(1)
    counts = {len(sc.place_lights(cfg, REGION, rng)[0]) for _ in range(2000)}
    assert counts == {2, 3, 4, 5}
    a = sc.place_lights(cfg, REGION, make_rng(4))
    b = sc.place_lights(cfg, REGION, make_rng(4))
    assert a == b
    with pytest.raises(ValueError):
        sc.place_lights(LightConfig(count=(3, 2)), REGION, rng)


def test_placement_region_is_in_frustum(make_config):
    cfg = make_config()
    cam = cfg.make_camera()
    region = sc.placement_region(cam, cfg.camera.depth_band)
    corners = np.array([[x, y, z] for x in (region.lo[0], region.hi[0])
                        for y in (region.lo[1], region.hi[1])
                        for z in (region.lo[2], region.hi[2])])
    scr = cam.to_screen(corners)
    assert np.all((scr[:, 0] >= -1e-9) & (scr[:, 0] <= cam.width + 1e-9))
    assert np.all((scr[:, 1] >= -1e-9) & (scr[:, 1] <= cam.height + 1e-9))


def test_build_scene_exact_count(make_config, assets):
    cfg = make_config(n_objects=[5, 5])
    s = sc.build_scene(cfg, assets, seed=1)
    assert len(s.instances) == 5 == s.n_requested
    assert len(s.lights) >= 1


def test_build_scene_extrude_params(make_config, assets):
    cfg = make_config(transform="extrude", n_objects=[10, 30])
    for seed in range(5):
        s = sc.build_scene(cfg, assets, seed=seed)
        for inst in s.instances:
            assert inst.transform.kind == "extrude"
            assert -0.1 <= inst.transform.thickness <= 0.5
            n = s.n_requested
            assert 1 / n <= inst.transform.object_scale <= 8 / n
            base = assets.mesh(inst.asset_id)
            assert inst.mesh.n_faces == 2 * base.n_faces


@pytest.mark.parametrize("kind", ["none", "scale", "randomize", "extrude"])
def test_build_scene_deterministic(make_config, assets, kind):
    cfg = make_config(transform=kind)
    a = sc.build_scene(cfg, assets, seed=42)
    b = sc.build_scene(cfg, assets, seed=42)
    assert [i.to_dict() for i in a.instances] == [i.to_dict() for i in b.instances]
    for x, y in zip(a.instances, b.instances):
        assert x.mesh.vertices.tobytes() == y.mesh.vertices.tobytes()
    assert (a.background_id, a.lights, a.ambient) == (b.background_id, b.lights, b.ambient)


def test_instances_inside_region(make_config, assets):
    cfg = make_config(n_objects=[40, 60])
    s = sc.build_scene(cfg, assets, seed=3)
    cam_pos = s.camera.to_camera(np.array([i.position for i in s.instances]))
    np.testing.assert_allclose(s.region.clamp(cam_pos), cam_pos, atol=1e-9)


def test_transform_record_replays(make_config, assets):
    cfg = make_config(transform="randomize")
    s = sc.build_scene(cfg, assets, seed=5)
    for inst in s.instances:
        again = sc.realize_instance(assets.mesh(inst.asset_id), inst.transform, inst.position,
                                    cfg.size_reference)
        assert again.vertices.tobytes() == inst.mesh.vertices.tobytes()


def test_excluded_backgrounds_never_used(make_config, assets):
    cfg = make_config(excluded_categories=["stadium-football", "iceberg"])
    cats = {sc.build_scene(cfg, assets, seed=s).background_category for s in range(60)}
    assert not cats & {"stadium-football", "iceberg"}
    assert len(cats) > 1


def test_scale_transform_records_axis(make_config, assets):
    cfg = make_config(transform="scale")
    s = sc.build_scene(cfg, assets, seed=8)
    for inst in s.instances:
        assert inst.transform.axis in ("x", "y", "z")
        lo, hi = cfg.axis_scale_range
        assert lo <= inst.transform.axis_factor <= hi

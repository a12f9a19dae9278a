import json
import math

import numpy as np
import pytest

from app.config import PipelineConfig
from app.errors import EmptyRegionError
from app.imaging.raster import RasterImage, RegionMask
from app.pipeline.fixtures import FIXTURE_KINDS, generate_fixture
from app.pipeline.orchestrator import CompletionPipeline, run_pipeline
from main import build_parser, config_from_args, main


def _write_scene(scene, directory):
    image_path, mask_path, _ = scene.save(directory, scene.kind)
    return image_path, mask_path


def _psnr(first, second):
    mse = float(np.mean((first - second) ** 2))
    return math.inf if mse == 0 else 10.0 * math.log10(1.0 / mse)


# Fixtures


@pytest.mark.parametrize("kind", FIXTURE_KINDS)
def test_fixtures_are_deterministic(kind, tmp_path):
    first = generate_fixture(kind, 64, seed=7)
    second = generate_fixture(kind, 64, seed=7)

    assert np.array_equal(first.image.pixels, second.image.pixels)
    assert np.array_equal(first.mask.inside, second.mask.inside)
    assert first.mask.unknown_count > 0
    assert not first.mask.is_full

    a = first.save(tmp_path / "a")
    b = second.save(tmp_path / "b")
    for left, right in zip(a, b):
        assert left.read_bytes() == right.read_bytes()


def test_stripes_fixture_layout():
    scene = generate_fixture("stripes", 256, seed=2)
    row = scene.truth.pixels[0, :, 0]
    assert np.array_equal(row[16:], row[:-16])
    assert set(np.round(row, 2).tolist()) == {0.15, 0.85}
    ys, xs = np.nonzero(scene.mask.inside)
    assert (ys.max() - ys.min() + 1, xs.max() - xs.min() + 1) == (48, 48)
    assert scene.mask.unknown_count == 48 * 48


def test_two_region_fixture_layout():
    scene = generate_fixture("two-region", 64, seed=0)
    row = scene.meta["boundary_row"]
    truth = scene.truth.pixels[..., 0]
    assert np.allclose(truth[:row], 0.1) and np.allclose(truth[row:], 0.9)
    ys = np.flatnonzero(scene.mask.inside.any(axis=1))
    assert ys.min() < row <= ys.max()


def test_fixture_arguments_are_validated():
    with pytest.raises(ValueError):
        generate_fixture("spirals", 64)
    with pytest.raises(ValueError):
        generate_fixture("stripes", 32)


# Pipeline runs


def test_run_pipeline_writes_output_and_debug_files(tmp_path, cfg):
    image_path, mask_path = _write_scene(generate_fixture("circle-step", 64, seed=0), tmp_path)
    output = tmp_path / "out.png"
    debug = tmp_path / "debug"

    code = run_pipeline(image_path, mask_path, output, cfg, debug)

    assert code == 0
    result = RasterImage.load(output)
    assert result.shape == (64, 64)
    for name in ("strength.png", "contours.txt", "edges.txt", "pairs.txt", "curves.txt", "propagated.png"):
        assert (debug / name).exists(), name
    curves = (debug / "curves.txt").read_text().splitlines()
    if curves:
        assert (debug / "assignments.txt").exists()
        for line in curves:
            record = json.loads(line)
            assert {"source", "target", "fallback", "curvature", "samples"} <= set(record)


def test_run_pipeline_dimension_mismatch(tmp_path, cfg):
    image_path, _ = _write_scene(generate_fixture("two-region", 64, seed=0), tmp_path)
    mask_path = tmp_path / "small_mask.png"
    RegionMask(np.ones((32, 32), dtype=bool)).save(mask_path)

    assert run_pipeline(image_path, mask_path, tmp_path / "out.png", cfg) == 3


@pytest.mark.parametrize("fill", [True, False])
def test_run_pipeline_without_work_or_source(tmp_path, cfg, fill):
    image_path, _ = _write_scene(generate_fixture("two-region", 64, seed=0), tmp_path)
    mask_path = tmp_path / "trivial_mask.png"
    RegionMask(np.full((64, 64), fill)).save(mask_path)

    assert run_pipeline(image_path, mask_path, tmp_path / "out.png", cfg) == 4


def test_run_pipeline_missing_input(tmp_path, cfg):
    code = run_pipeline(tmp_path / "nope.png", tmp_path / "nope_mask.png", tmp_path / "out.png", cfg)
    assert code == 2


def test_pipeline_rejects_trivial_masks_directly(cfg):
    scene = generate_fixture("two-region", 64, seed=0)
    with pytest.raises(EmptyRegionError):
        CompletionPipeline(cfg).run(scene.image, RegionMask(np.zeros((64, 64), dtype=bool)))


@pytest.mark.parametrize("kind", FIXTURE_KINDS)
def test_thread_count_does_not_change_the_result(kind):
    scene = generate_fixture(kind, 64, seed=1)

    single = CompletionPipeline(PipelineConfig(threads=1)).run(scene.image, scene.mask)
    pooled = CompletionPipeline(PipelineConfig(threads=8)).run(scene.image, scene.mask)

    assert np.array_equal(single.image.pixels, pooled.image.pixels)
    assert [(c.source_edge_id, c.target_edge_id) for c in single.curves] == [
        (c.source_edge_id, c.target_edge_id) for c in pooled.curves
    ]


def test_exemplar_mode_skips_structure():
    scene = generate_fixture("two-region", 64, seed=0)

    result = CompletionPipeline(PipelineConfig(mode="exemplar")).run(scene.image, scene.mask)

    assert result.curves == [] and result.propagation is None
    assert result.fill_iterations > 0
    assert _psnr(result.image.pixels, scene.truth.pixels) >= 30.0


def test_structure_mode_completes_the_step():
    scene = generate_fixture("circle-step", 64, seed=0)

    result = CompletionPipeline(PipelineConfig()).run(scene.image, scene.mask)

    assert _psnr(result.image.pixels, scene.truth.pixels) >= 20.0
    assert result.edges


@pytest.mark.slow
def test_kanizsa_pairs_stubs_of_the_same_disc():
    scene = generate_fixture("kanizsa", 256, seed=7)
    discs = scene.meta["discs"]
    radius = scene.meta["radius"]

    edges, pairing, curves = CompletionPipeline(PipelineConfig()).estimate_structure(scene.image, scene.mask)
    hits = {edge.id: edge.hit for edge in edges}

    def disc_of(edge_id):
        x, y = hits[edge_id]
        for index, (cx, cy) in enumerate(discs):
            if math.hypot(x - cx, y - cy) <= radius + 4:
                return index
        return None

    assert len(edges) == 6
    assert len(pairing.pairs) == 3
    assert sorted(disc_of(source) for source, _, _ in pairing.pairs) == [0, 1, 2]
    assert all(disc_of(source) == disc_of(target) for source, target, _ in pairing.pairs)

    assert len(curves) == 3
    for curve in curves:
        assert not curve.fallback
        cx, cy = discs[disc_of(curve.source_edge_id)]
        radial = np.hypot(curve.samples[:, 0] - cx, curve.samples[:, 1] - cy)
        assert np.mean(np.abs(radial - radius) <= 1.0) >= 0.95
        for first, second in zip(curve.segments, curve.segments[1:]):
            assert second.kappa == pytest.approx(first.end_kappa)
            assert second.heading == pytest.approx(first.heading + first.kappa * first.length
                                                   + 0.5 * first.rate * first.length ** 2)


# Command line


def test_cli_generates_and_completes_a_fixture(tmp_path):
    output = tmp_path / "run" / "out.png"
    code = main([
        "--fixture", "two-region", "--size", "64", "--seed", "0",
        "--mode", "exemplar", "--output", str(output),
    ])

    assert code == 0
    assert output.exists()
    assert (tmp_path / "run" / "out_input.png").exists()
    assert (tmp_path / "run" / "out_mask.png").exists()


def test_cli_rejects_invalid_tunables(tmp_path):
    code = main([
        "--fixture", "two-region", "--size", "64", "--patch-size", "8",
        "--output", str(tmp_path / "out.png"),
    ])
    assert code == 1


def test_cli_requires_input_without_fixture(tmp_path):
    with pytest.raises(SystemExit):
        main(["--output", str(tmp_path / "out.png")])


def test_cli_pair_metric_defaults_to_the_printed_formula(tmp_path):
    parser = build_parser()

    default = config_from_args(parser.parse_args(["--fixture", "kanizsa", "--output", str(tmp_path / "a.png")]))
    chosen = config_from_args(parser.parse_args([
        "--fixture", "kanizsa", "--output", str(tmp_path / "a.png"), "--pair-metric", "paper",
    ]))

    assert default.pair_metric == "paper"
    assert chosen.pair_metric == "paper"
    with pytest.raises(SystemExit):
        parser.parse_args(["--fixture", "kanizsa", "--output", "x.png", "--pair-metric", "plain"])


def test_cli_choice_flags_are_documented():
    flags = {"--pair-metric", "--energy", "--mode"}
    documented = {
        option: action.help
        for action in build_parser()._actions
        for option in action.option_strings
        if option in flags
    }
    assert set(documented) == flags
    assert all(documented.values())
    text = " ".join(build_parser().format_help().split())
    assert "(default: paper)" in text
    assert "(default: divisor)" in text
    assert "(default: structure)" in text

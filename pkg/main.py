"""Main application entry point"""
import argparse
import logging
import math
import sys
from pathlib import Path
from typing import List, Optional, Tuple

from app.config import PipelineConfig, settings
from app.errors import ConfigError, classify_exit_code
from app.pipeline.fixtures import FIXTURE_KINDS, generate_fixture
from app.pipeline.orchestrator import run_pipeline

# Configure logging
logging.basicConfig(
    level=logging.DEBUG if settings.DEBUG else logging.INFO,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def parse_rotations(text: str) -> Tuple[float, ...]:
    """Comma-separated rotation angles in degrees, e.g. "0,45,-45,90,-90,180"."""
    try:
        return tuple(math.radians(float(part)) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid rotation list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Remove a masked object from an image by structure-guided completion",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    io = parser.add_argument_group("files")
    io.add_argument("--input", type=Path, help="Input PNG (written here when --fixture is used)")
    io.add_argument("--mask", type=Path, help="Mask PNG, nonzero = remove")
    io.add_argument("--output", type=Path, required=True, help="Completed PNG")
    io.add_argument("--debug-dir", type=Path, default=None, help="Directory for intermediate artifacts")

    fixture = parser.add_argument_group("synthetic input")
    fixture.add_argument("--fixture", choices=FIXTURE_KINDS, default=None, help="Generate the input scene")
    fixture.add_argument("--size", type=int, default=256, help="Fixture side length")
    fixture.add_argument("--seed", type=int, default=0, help="Fixture seed")

    tune = parser.add_argument_group("tunables")
    tune.add_argument("--patch-size", type=int, default=settings.PATCH_SIZE, help="Odd patch side l")
    tune.add_argument("--bins", type=int, default=settings.HISTOGRAM_BINS, help="Histogram bins per channel")
    tune.add_argument("--sigma", type=float, default=settings.EDGE_SIGMA, help="Edge Gaussian scale")
    tune.add_argument("--levels", type=int, default=settings.CONTOUR_LEVELS, help="Quantized contour levels")
    tune.add_argument("--delta-t", type=float, default=settings.DELTA_T, help="Threshold sweep floor")
    tune.add_argument("--flank-depth", type=int, default=settings.FLANK_DEPTH, help="Extra levels for flank regions")
    tune.add_argument("--chain-spacing", type=float, default=settings.CHAIN_SPACING, help="Chain sampling spacing (px)")
    tune.add_argument("--delta-h", type=float, default=settings.DELTA_H, help="Max JS distance per flank")
    tune.add_argument("--mu-single", type=float, default=settings.MU_SINGLE, help="Cost of an unmatched edge")
    tune.add_argument("--segment-penalty", type=float, default=settings.SEGMENT_PENALTY, help="Polyline segment penalty")
    tune.add_argument("--band-factor", type=float, default=settings.CANDIDATE_BAND_FACTOR,
                      help="Candidate band width in patch sides")
    tune.add_argument("--m-max", type=int, default=settings.CANDIDATE_MAX, help="Max candidate patches")
    tune.add_argument("--shortlist", type=int, default=settings.CANDIDATE_SHORTLIST, help="Labels kept per anchor")
    tune.add_argument("--delta-msg", type=float, default=settings.MESSAGE_DELTA, help="Message convergence threshold")
    tune.add_argument("--max-iters", type=int, default=settings.MESSAGE_MAX_ITERS, help="Max message rounds")
    tune.add_argument("--e-cap", type=float, default=settings.ENERGY_CAP, help="Energy for empty overlaps")
    tune.add_argument("--pair-metric", choices=("paper", "regularized"), default=settings.PAIR_METRIC,
                      help="Edge-pair cost multiplier")
    tune.add_argument("--energy", choices=("divisor", "literal"), default=settings.ENERGY_MODE,
                      help="How the overlap factor enters patch energies")
    tune.add_argument("--rotations", type=parse_rotations, default=None,
                      help="Rotation set in degrees (default 0,45,-45,90,-90,180)")
    tune.add_argument("--snapshot-every", type=int, default=settings.SNAPSHOT_EVERY,
                      help="Fill snapshot interval in the debug dir (0 = off)")
    tune.add_argument("--mode", choices=("structure", "exemplar"), default=settings.PIPELINE_MODE,
                      help="Run structure propagation before the texture fill, or the fill alone")
    tune.add_argument("--threads", type=int, default=settings.WORKER_THREADS, help="Worker threads")
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    return PipelineConfig.from_settings(
        settings,
        patch_size=args.patch_size,
        bins_per_channel=args.bins,
        sigma=args.sigma,
        levels=args.levels,
        delta_t=args.delta_t,
        flank_depth=args.flank_depth,
        chain_spacing=args.chain_spacing,
        delta_h=args.delta_h,
        mu_single=args.mu_single,
        segment_penalty=args.segment_penalty,
        band_factor=args.band_factor,
        m_max=args.m_max,
        candidate_shortlist=args.shortlist,
        delta_msg=args.delta_msg,
        max_iters=args.max_iters,
        e_cap=args.e_cap,
        pair_metric=args.pair_metric,
        energy=args.energy,
        rotations=args.rotations,
        snapshot_every=args.snapshot_every,
        mode=args.mode,
        threads=args.threads,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        logger.error("Invalid configuration: %s", exc)
        return exc.exit_code

    input_path, mask_path = args.input, args.mask
    if args.fixture:
        stem = args.output.with_suffix("")
        input_path = input_path or stem.parent / f"{stem.name}_input.png"
        mask_path = mask_path or stem.parent / f"{stem.name}_mask.png"
        try:
            scene = generate_fixture(args.fixture, args.size, args.seed)
            scene.image.save(input_path)
            scene.mask.save(mask_path)
        except Exception as exc:
            logger.error("Cannot generate fixture %s: %s", args.fixture, exc)
            return classify_exit_code(exc)
        logger.info("Generated %s fixture (%d px, seed %d)", args.fixture, args.size, args.seed)
    elif input_path is None or mask_path is None:
        parser.error("--input and --mask are required unless --fixture is given")

    return run_pipeline(input_path, mask_path, args.output, cfg, args.debug_dir)


if __name__ == "__main__":
    sys.exit(main())

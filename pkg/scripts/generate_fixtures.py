"""Write synthetic image/mask/ground-truth triples for every fixture kind"""
import argparse
import logging
import sys
from pathlib import Path

# Add parent directory to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from app.pipeline.fixtures import FIXTURE_KINDS, generate_fixture

logging.basicConfig(level=logging.INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = logging.getLogger(__name__)


def main() -> int:
    parser = argparse.ArgumentParser(description="Generate synthetic completion fixtures")
    parser.add_argument("--out", type=Path, default=PROJECT_ROOT / "fixtures", help="Output directory")
    parser.add_argument("--kind", choices=FIXTURE_KINDS, action="append",
                        help="Fixture kind (repeatable, default: all)")
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    kinds = args.kind or list(FIXTURE_KINDS)
    for kind in kinds:
        scene = generate_fixture(kind, args.size, args.seed)
        image_path, mask_path, truth_path = scene.save(args.out, f"{kind}_{args.size}_{args.seed}")
        logger.info("%s: %s, %s, %s (%d target px)", kind, image_path.name, mask_path.name,
                    truth_path.name, scene.mask.unknown_count)
    return 0


if __name__ == "__main__":
    sys.exit(main())

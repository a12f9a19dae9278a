"""Application configuration"""
import math
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings

from app.errors import ConfigError

# Index order of the rotation set doubles as the tie-break order.
DEFAULT_ROTATIONS: Tuple[float, ...] = (
    0.0,
    math.pi / 4,
    -math.pi / 4,
    math.pi / 2,
    -math.pi / 2,
    math.pi,
)


class Settings(BaseSettings):
    """Application settings loaded from environment variables"""

    # Application
    DEBUG: bool = False
    WORKER_THREADS: int = 1  # Caps ThreadPoolExecutor workers (1 = sequential)

    # Patches and histograms
    PATCH_SIZE: int = 9  # Odd side length l
    HISTOGRAM_BINS: int = 16  # n_b per channel

    # Contour detection
    EDGE_SIGMA: float = 1.0
    EDGE_CHANNEL_WEIGHTS: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    CONTOUR_LEVELS: int = 32

    # Structure estimation
    DELTA_T: float = 0.1  # Sweep floor
    FLANK_DEPTH: int = 2  # Extra levels when building flank regions
    CHAIN_SPACING: float = 3.0  # Delta_d for curvature sampling
    STUB_LENGTH: float = 18.0  # Max chain length kept per boundary edge
    DELTA_H: float = 0.6  # Max JS distance per flank
    MU_SINGLE: float = 0.25  # Cost of leaving an edge unmatched
    SEGMENT_PENALTY: float = 2.0
    PAIR_METRIC: Literal["paper", "regularized"] = "paper"
    CURVE_MAX_ITERATIONS: int = 200
    CURVE_ENDPOINT_TOLERANCE: float = 0.5
    CURVE_STEP: float = 0.25  # RK4 step in px

    # Structure propagation
    CANDIDATE_BAND_FACTOR: float = 4.0  # band width = factor * l
    CANDIDATE_MAX: int = 600
    CANDIDATE_SHORTLIST: int = 32
    MESSAGE_DELTA: float = 1e-3
    MESSAGE_MAX_ITERS: int = 50
    ENERGY_CAP: float = 1e6
    ENERGY_MODE: Literal["divisor", "literal"] = "divisor"
    STRUCTURE_CONFIDENCE: float = 0.9

    # Texture fill
    SEARCH_STRIDE: int = 1
    SEARCH_NEAR_FACTOR: float = 6.0  # stride-1 window radius = factor * l
    PRIORITY_EPSILON: float = 1e-6
    SNAPSHOT_EVERY: int = 0  # Fill snapshots in the debug dir (0 = off)

    # Pipeline
    PIPELINE_MODE: Literal["structure", "exemplar"] = "structure"

    class Config:
        env_file = ".env"
        case_sensitive = True


settings = Settings()


class PipelineConfig(BaseModel):
    """Validated, immutable set of tunables for one pipeline run."""

    model_config = ConfigDict(frozen=True)

    patch_size: int = 9
    bins_per_channel: int = 16
    sigma: float = 1.0
    channel_weights: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    levels: int = 32
    delta_t: float = 0.1
    flank_depth: int = 2
    chain_spacing: float = 3.0
    stub_length: float = 18.0
    delta_h: float = 0.6
    mu_single: float = 0.25
    segment_penalty: float = 2.0
    pair_metric: Literal["paper", "regularized"] = "paper"
    curve_max_iterations: int = 200
    curve_endpoint_tolerance: float = 0.5
    curve_step: float = 0.25
    band_factor: float = 4.0
    m_max: int = 600
    candidate_shortlist: int = 32
    delta_msg: float = 1e-3
    max_iters: int = 50
    e_cap: float = 1e6
    energy: Literal["divisor", "literal"] = "divisor"
    rotations: Tuple[float, ...] = DEFAULT_ROTATIONS
    structure_confidence: float = 0.9
    search_stride: int = 1
    search_near_factor: float = 6.0
    priority_epsilon: float = 1e-6
    snapshot_every: int = 0
    threads: int = 1
    mode: Literal["structure", "exemplar"] = "structure"

    @field_validator("patch_size")
    @classmethod
    def _odd_patch(cls, value: int) -> int:
        if value < 3 or value % 2 == 0:
            raise ValueError(f"patch size must be odd and >= 3, got {value}")
        return value

    @field_validator("bins_per_channel")
    @classmethod
    def _enough_bins(cls, value: int) -> int:
        if value < 2:
            raise ValueError(f"bins per channel must be >= 2, got {value}")
        return value

    @field_validator("levels")
    @classmethod
    def _enough_levels(cls, value: int) -> int:
        if value < 2:
            raise ValueError(f"levels must be >= 2, got {value}")
        return value

    @field_validator("delta_t")
    @classmethod
    def _unit_open(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError(f"delta_t must lie in (0, 1), got {value}")
        return value

    @field_validator("channel_weights")
    @classmethod
    def _weights_sum_to_one(cls, value: Tuple[float, float, float]) -> Tuple[float, float, float]:
        if any(w < 0 for w in value) or abs(sum(value) - 1.0) > 1e-9:
            raise ValueError(f"channel weights must be >= 0 and sum to 1, got {value}")
        return value

    @field_validator("rotations")
    @classmethod
    def _rotations_present(cls, value: Tuple[float, ...]) -> Tuple[float, ...]:
        if not value:
            raise ValueError("rotation set must not be empty")
        if len(set(value)) != len(value):
            raise ValueError("rotation set contains duplicates")
        return value

    @model_validator(mode="after")
    def _positive_numerics(self) -> "PipelineConfig":
        positive = (
            "sigma", "flank_depth", "chain_spacing", "stub_length", "delta_h",
            "mu_single", "segment_penalty", "curve_max_iterations",
            "curve_endpoint_tolerance", "curve_step", "band_factor", "m_max",
            "candidate_shortlist", "delta_msg", "max_iters", "e_cap",
            "structure_confidence", "search_stride", "search_near_factor",
            "priority_epsilon", "threads",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every must be >= 0")
        if self.structure_confidence > 1.0:
            raise ValueError("structure_confidence must not exceed 1")
        return self

    @property
    def half_extent(self) -> int:
        return (self.patch_size - 1) // 2

    @property
    def band_width(self) -> float:
        return self.band_factor * self.patch_size

    @property
    def candidate_stride(self) -> int:
        return max(1, math.ceil(self.patch_size / 2))

    @property
    def anchor_spacing(self) -> int:
        return max(1, round(self.patch_size / 4))

    @classmethod
    def from_settings(cls, source: Optional[Settings] = None, **overrides) -> "PipelineConfig":
        """Build a config from Settings, applying non-None keyword overrides."""
        source = source or settings
        values = {
            "patch_size": source.PATCH_SIZE,
            "bins_per_channel": source.HISTOGRAM_BINS,
            "sigma": source.EDGE_SIGMA,
            "channel_weights": source.EDGE_CHANNEL_WEIGHTS,
            "levels": source.CONTOUR_LEVELS,
            "delta_t": source.DELTA_T,
            "flank_depth": source.FLANK_DEPTH,
            "chain_spacing": source.CHAIN_SPACING,
            "stub_length": source.STUB_LENGTH,
            "delta_h": source.DELTA_H,
            "mu_single": source.MU_SINGLE,
            "segment_penalty": source.SEGMENT_PENALTY,
            "pair_metric": source.PAIR_METRIC,
            "curve_max_iterations": source.CURVE_MAX_ITERATIONS,
            "curve_endpoint_tolerance": source.CURVE_ENDPOINT_TOLERANCE,
            "curve_step": source.CURVE_STEP,
            "band_factor": source.CANDIDATE_BAND_FACTOR,
            "m_max": source.CANDIDATE_MAX,
            "candidate_shortlist": source.CANDIDATE_SHORTLIST,
            "delta_msg": source.MESSAGE_DELTA,
            "max_iters": source.MESSAGE_MAX_ITERS,
            "e_cap": source.ENERGY_CAP,
            "energy": source.ENERGY_MODE,
            "structure_confidence": source.STRUCTURE_CONFIDENCE,
            "search_stride": source.SEARCH_STRIDE,
            "search_near_factor": source.SEARCH_NEAR_FACTOR,
            "priority_epsilon": source.PRIORITY_EPSILON,
            "snapshot_every": source.SNAPSHOT_EVERY,
            "threads": source.WORKER_THREADS,
            "mode": source.PIPELINE_MODE,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc

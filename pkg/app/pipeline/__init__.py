from app.pipeline.debug import DebugRecorder
from app.pipeline.fixtures import FIXTURE_KINDS, FixtureScene, generate_fixture
from app.pipeline.orchestrator import CompletionPipeline, CompletionResult, run_pipeline

__all__ = [
    "FIXTURE_KINDS",
    "CompletionPipeline",
    "CompletionResult",
    "DebugRecorder",
    "FixtureScene",
    "generate_fixture",
    "run_pipeline",
]

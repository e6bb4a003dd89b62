from .config import MODES, LONG_RUN_ITERATIONS, ConfigError, RunConfig, config_from_dict, load_config
from .manifest import Manifest, ManifestError, ManifestRecord, ingest_manifest, write_manifest
from .runner import GridMismatch, RunError, RunLocked, RunResult, compare_runs, run, synth_user_latents

__all__ = [
    "MODES", "LONG_RUN_ITERATIONS", "ConfigError", "RunConfig", "config_from_dict", "load_config",
    "Manifest", "ManifestError", "ManifestRecord", "ingest_manifest", "write_manifest",
    "GridMismatch", "RunError", "RunLocked", "RunResult", "compare_runs", "run", "synth_user_latents",
]

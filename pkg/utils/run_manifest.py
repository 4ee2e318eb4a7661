"""
Run manifest: what was run, with which configuration and seed, and how long
each phase took.
"""
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Optional
import time
from config.logging_config import get_logger
from config.settings import ARTIFACT_VERSION
from cli.io import write_json

logger = get_logger('cli')


@dataclass
class RunManifest:
    """
    Accompanies every output directory. ``reproducible_fields`` is the
    deterministic part that may be embedded in result files; wall-clock and
    phase timings live only in the manifest file itself.
    """
    command: str
    config: Dict[str, Any] = field(default_factory=dict)
    master_seed: Optional[int] = None
    artifact_version: str = ARTIFACT_VERSION
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    wall_seconds: float = 0.0
    phases: Dict[str, float] = field(default_factory=dict)
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    @contextmanager
    def phase(self, name: str):
        """Time a block; repeated names accumulate."""
        started = time.perf_counter()
        try:
            yield
        finally:
            elapsed = time.perf_counter() - started
            self.phases[name] = self.phases.get(name, 0.0) + elapsed
            logger.info(f"{self.command}: phase '{name}' took {elapsed:.3f}s")

    def finish(self) -> 'RunManifest':
        self.wall_seconds = time.perf_counter() - self._t0
        return self

    def reproducible_fields(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'config': self.config,
            'master_seed': self.master_seed,
            'artifact_version': self.artifact_version,
        }

    def to_dict(self) -> Dict[str, Any]:
        out = self.reproducible_fields()
        out.update({
            'started_at': self.started_at,
            'wall_seconds': self.wall_seconds,
            'phases': dict(self.phases),
        })
        return out

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / 'manifest.json'
        write_json(path, self.finish().to_dict())
        return path

"""
Run record: config hash, per-combination status, outputs and stage timings.

Written as sorted ``key = value`` lines so two runs of the same config differ
only in the ``timing.*`` entries.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

DONE = "done"
FAILED = "failed"


@dataclass
class RunManifest:
    """Mutable record filled in by the stages of one run."""
    config_hash: str
    statuses: dict[str, str] = field(default_factory=dict)
    errors: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    timings_ms: dict[str, float] = field(default_factory=dict)

    def mark_done(self, key: str) -> None:
        self.statuses[key] = DONE
        self.errors.pop(key, None)

    def mark_failed(self, key: str, error: object) -> None:
        self.statuses[key] = FAILED
        self.errors[key] = " ".join(str(error).split())

    def record_output(self, name: str, path: Path, root: Optional[Path] = None) -> None:
        self.outputs[name] = str(path.relative_to(root)) if root is not None else str(path)

    def record_timing(self, stage: str, elapsed_ms: float) -> None:
        self.timings_ms[stage] = elapsed_ms

    @property
    def done(self) -> list[str]:
        return sorted(key for key, status in self.statuses.items() if status == DONE)

    @property
    def failed(self) -> list[str]:
        return sorted(key for key, status in self.statuses.items() if status == FAILED)

    def lines(self) -> list[str]:
        lines = [f"config_hash = {self.config_hash}"]
        lines += [f"status.{key} = {self.statuses[key]}" for key in sorted(self.statuses)]
        lines += [f"error.{key} = {self.errors[key]}" for key in sorted(self.errors)]
        lines += [f"output.{name} = {self.outputs[name]}" for name in sorted(self.outputs)]
        lines += [f"timing.{stage}_ms = {self.timings_ms[stage]:.1f}" for stage in sorted(self.timings_ms)]
        return lines

    def write(self, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(self.lines()) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, path: Path) -> "RunManifest":
        """Parse a manifest written by ``write``."""
        if not path.exists():
            raise FileNotFoundError(f"Manifest not found: {path}")
        manifest = cls(config_hash="")
        for raw in path.read_text(encoding="utf-8").splitlines():
            if " = " not in raw:
                continue
            key, value = raw.split(" = ", 1)
            if key == "config_hash":
                manifest.config_hash = value
            elif key.startswith("status."):
                manifest.statuses[key[len("status."):]] = value
            elif key.startswith("error."):
                manifest.errors[key[len("error."):]] = value
            elif key.startswith("output."):
                manifest.outputs[key[len("output."):]] = value
            elif key.startswith("timing.") and key.endswith("_ms"):
                manifest.timings_ms[key[len("timing."):-len("_ms")]] = float(value)
        return manifest

"""Run manifests: check verdicts, file checksums, config echo.

The manifest is written atomically (temp file + rename) after all other
outputs exist.  Timestamp-like lines are `#`-prefixed so determinism
comparisons can strip them: two runs of the same config must agree on
every non-comment line.
"""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import dataclass, field

__all__ = ["CheckResult", "RunManifest", "write_manifest", "manifest_core"]

VERSION = "0.1.0"


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    detail: str = ""


@dataclass
class RunManifest:
    experiment: str
    config_text: str
    checks: list = field(default_factory=list)
    files: dict = field(default_factory=dict)  # relpath -> sha256
    wall_clock: float = 0.0
    version: str = VERSION

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add_file(self, outdir, relpath) -> None:
        digest = hashlib.sha256()
        with open(os.path.join(outdir, relpath), "rb") as f:
            digest.update(f.read())
        self.files[relpath] = digest.hexdigest()


def _render(man: RunManifest) -> str:
    lines = ["# nlpme run manifest", f"# wall_clock_seconds: {man.wall_clock:.3f}"]
    lines.append(f"experiment = {man.experiment}")
    lines.append(f"version = {man.version}")
    lines.append(f"all_passed = {str(man.all_passed).lower()}")
    for c in man.checks:
        status = "PASS" if c.passed else "FAIL"
        detail = f"  # {c.detail}" if c.detail else ""
        lines.append(f"check {c.name} = {status} value={c.value:.9g}{detail}")
    for relpath in sorted(man.files):
        lines.append(f"file {relpath} = sha256:{man.files[relpath]}")
    lines.append("config:")
    for ln in man.config_text.splitlines():
        lines.append("    " + ln)
    return "\n".join(lines) + "\n"


def write_manifest(man: RunManifest, outdir, name: str = "manifest.txt") -> str:
    """Atomic write: the manifest only appears once fully written."""
    path = os.path.join(outdir, name)
    fd, tmp = tempfile.mkstemp(dir=outdir, prefix=".manifest-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(_render(man))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def manifest_core(text: str) -> str:
    """Manifest content with comment (timestamp) lines stripped."""
    return "\n".join(
        ln for ln in text.splitlines() if not ln.lstrip().startswith("#")
    )

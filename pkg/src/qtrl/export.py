"""Exported policies, run manifests and episode logs on disk.

Policies and manifests are JSON; episode logs are CSV. Floats are written
with 17 significant digits so 64-bit values round-trip exactly. All files
are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, dense
from .dense import DenseNetSpec
from .envs import constants_hash
from .errors import QTRLError

FORMAT = "qtrl-policy/1"
LOG_HEADER = ("episode", "total_reward", "loss", "delta_theta_sq_cum", "elapsed_ms")


class PolicyFileError(QTRLError):
    """An exported policy file is missing, unreadable or inconsistent."""


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path: Path | str, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dumps(obj) -> str:
    """JSON with sorted keys; float arrays (np.ndarray) written with 17 digits."""
    arrays = {}

    def default(o):
        if isinstance(o, np.ndarray):
            key = f"@@array{len(arrays)}@@"
            arrays[key] = "[" + ", ".join(fmt(v) for v in o.ravel()) + "]"
            return key
        if isinstance(o, np.generic):
            return o.item()
        raise TypeError(f"cannot serialize {type(o).__name__}")

    text = json.dumps(obj, indent=2, sort_keys=True, default=default)
    for key, rendered in arrays.items():
        text = text.replace(f'"{key}"', rendered)
    return text + "\n"


@dataclass
class ExportedPolicy:
    policy_spec: DenseNetSpec
    theta: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        expected = dense.param_count(self.policy_spec)
        if self.theta.shape != (expected,):
            raise PolicyFileError(
                f"policy {list(self.policy_spec.layer_sizes)} needs {expected} weights, "
                f"file has {self.theta.size}"
            )
        if not np.all(np.isfinite(self.theta)):
            raise PolicyFileError("policy weights must be finite")

    def to_json(self) -> str:
        return _dumps({
            "format": FORMAT,
            "policy_spec": self.policy_spec.to_dict(),
            "theta": self.theta,
            "provenance": self.provenance,
        })

    @classmethod
    def from_json(cls, text: str) -> ExportedPolicy:
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PolicyFileError(f"policy file is not valid JSON: {exc}") from exc
        if not isinstance(d, dict) or d.get("format") != FORMAT:
            raise PolicyFileError(f"not a {FORMAT} file")
        try:
            spec = DenseNetSpec.from_dict(d["policy_spec"])
            theta = np.array(d["theta"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise PolicyFileError(f"malformed policy file: {exc}") from exc
        return cls(spec, theta, d.get("provenance", {}))

    def save(self, path: Path | str):
        atomic_write(path, self.to_json())

    @classmethod
    def load(cls, path: Path | str) -> ExportedPolicy:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise PolicyFileError(f"cannot read policy file {path}: {exc}") from exc
        return cls.from_json(text)


def write_log_csv(path: Path | str, records, *, timing: bool = False):
    """Episode log; ``elapsed_ms`` is left empty unless ``timing`` is set so
    that same-seed runs produce identical files."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_HEADER)
    for r in records:
        w.writerow([
            r.episode, fmt(r.total_reward), fmt(r.loss), fmt(r.delta_theta_sq_cum),
            fmt(r.elapsed_ms) if timing else "",
        ])
    atomic_write(path, buf.getvalue())


def read_log_csv(path: Path | str) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != LOG_HEADER:
        raise QTRLError(f"{path}: unexpected log header {rows[0] if rows else None}")
    cols = list(zip(*rows[1:])) if len(rows) > 1 else [()] * len(LOG_HEADER)
    out = {}
    for name, values in zip(LOG_HEADER, cols):
        out[name] = np.array([float(v) if v != "" else np.nan for v in values])
    return out


def make_manifest(config: dict, outputs: dict, started: datetime, finished: datetime, extra=None) -> dict:
    m = {
        "artifact": "qtrl",
        "version": __version__,
        "config": config,
        "constants_hash": constants_hash(),
        "started": started.isoformat(),
        "finished": finished.isoformat(),
        "outputs": outputs,
    }
    if extra:
        m.update(extra)
    return m


def now() -> datetime:
    return datetime.now(timezone.utc)

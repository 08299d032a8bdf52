"""INI-style settings file with [sqe], [tracker] and [distance] sections."""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .distance import MAX_PAIRS
from .errors import ValidationError
from .harness import K2_MERGE, K2_REID
from .sqe import SqeParams

_KNOWN = {
    "sqe": {"delta_l", "delta_d", "delta_m", "k1", "k2_reid", "k2_merge"},
    "tracker": {"max_gap"},
    "distance": {"max_pairs", "normalize"},
}


@dataclass(frozen=True)
class Settings:
    sqe: SqeParams = field(default_factory=SqeParams)
    k2_reid: float = K2_REID
    k2_merge: float = K2_MERGE
    max_gap: int = 30
    max_pairs: int | None = MAX_PAIRS
    normalize: bool = False

    def sqe_for(self, parameter: str) -> SqeParams:
        return self.sqe.with_k2(self.k2_merge if parameter.startswith("merge") else self.k2_reid)


def load_settings(path=None) -> Settings:
    if path is None:
        return Settings()
    cp = configparser.ConfigParser()
    try:
        with Path(path).open() as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from None
    for section in cp.sections():
        if section not in _KNOWN:
            raise ValidationError(f"{path}: unknown section [{section}]")
        extra = set(cp[section]) - _KNOWN[section]
        if extra:
            raise ValidationError(f"{path}: unknown keys in [{section}]: {sorted(extra)}")
    try:
        s = cp["sqe"] if cp.has_section("sqe") else {}
        d = SqeParams()
        k2_reid = float(s.get("k2_reid", K2_REID))
        params = SqeParams(
            float(s.get("delta_l", d.delta_L)),
            float(s.get("delta_d", d.delta_D)),
            float(s.get("delta_m", d.delta_m)),
            float(s.get("k1", d.k1)),
            k2_reid,
        )
        max_gap = cp.getint("tracker", "max_gap", fallback=30)
        raw_pairs = cp.get("distance", "max_pairs", fallback=str(MAX_PAIRS)).strip().lower()
        max_pairs = None if raw_pairs in ("none", "0", "") else int(raw_pairs)
        normalize = cp.getboolean("distance", "normalize", fallback=False)
        return Settings(params, k2_reid, float(s.get("k2_merge", K2_MERGE)), max_gap, max_pairs,
                        normalize)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None

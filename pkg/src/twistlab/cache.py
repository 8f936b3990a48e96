"""On-disk coefficient caches with checksums.

Format: a header line ``# kind=<kind> weight=<k> limit=<N>``, then one
``n,value`` line per n = 1..N, then ``# sha256=<hex>`` over every byte
before the footer line.
"""
from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Optional

from .arith import (CoeffSeq, build_tables, divisor_coeffs, hecke_normalize,
                    squares_coeffs, tau_series)
from .errors import DataCorruptionError, InvalidArgument

ENV_VAR = "TWISTLAB_CACHE"
KINDS = ("divisor", "hecke", "squares")


def cache_dir(path: Optional[os.PathLike] = None) -> Path:
    if path is None:
        path = os.environ.get(ENV_VAR) or Path.home() / ".cache" / "twistlab"
    return Path(path)


def cache_path(kind: str, limit: int, weight: int = 12, path=None) -> Path:
    tag = f"{kind}_k{weight}" if kind == "hecke" else kind
    return cache_dir(path) / f"{tag}_{limit}.csv"


def _exact_values(kind: str, limit: int, weight: int) -> list[int]:
    if kind == "hecke":
        return tau_series(limit, weight=weight)[1:]
    if kind == "divisor":
        return [int(v) for v in build_tables(limit).divisor[1:]]
    if kind == "squares":
        return [int(v) for v in squares_coeffs(limit).values[1:]]
    raise InvalidArgument(f"unknown kind {kind!r}; expected one of {KINDS}")


def _render(kind: str, limit: int, weight: int, values: list[int]) -> bytes:
    body = [f"# kind={kind} weight={weight} limit={limit}\n"]
    body += [f"{n},{v}\n" for n, v in enumerate(values, start=1)]
    data = "".join(body).encode()
    return data + f"# sha256={hashlib.sha256(data).hexdigest()}\n".encode()


def cache_coeffs(kind: str, limit: int, path=None, weight: int = 12) -> Path:
    """Write the exact coefficients of ``kind`` up to ``limit``; idempotent."""
    if limit < 1:
        raise InvalidArgument(f"limit must be >= 1, got {limit}")
    target = cache_path(kind, limit, weight, path)
    if target.exists():
        try:
            read_cache(target)
            return target
        except DataCorruptionError:
            pass
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = target.with_suffix(".tmp")
    tmp.write_bytes(_render(kind, limit, weight, _exact_values(kind, limit, weight)))
    tmp.replace(target)
    return target


def read_cache(path) -> tuple[str, int, int, list[int]]:
    """Parse and validate a cache file; returns (kind, weight, limit, values)."""
    raw = Path(path).read_bytes()
    cut = raw.rstrip(b"\n").rfind(b"\n") + 1
    data, footer = raw[:cut], raw[cut:].decode(errors="replace").strip()
    if not footer.startswith("# sha256="):
        raise DataCorruptionError(f"{path}: missing checksum footer")
    if hashlib.sha256(data).hexdigest() != footer.split("=", 1)[1]:
        raise DataCorruptionError(f"{path}: checksum mismatch, refusing to load")
    lines = data.decode().splitlines()
    try:
        head = dict(item.split("=") for item in lines[0].lstrip("# ").split())
        kind, weight, limit = head["kind"], int(head["weight"]), int(head["limit"])
        values = []
        for i, line in enumerate(lines[1:], start=1):
            n, v = line.split(",")
            if int(n) != i:
                raise ValueError(f"row {i} labelled {n}")
            values.append(int(v))
    except (KeyError, ValueError, IndexError) as exc:
        raise DataCorruptionError(f"{path}: malformed cache ({exc})") from None
    if len(values) != limit:
        raise DataCorruptionError(f"{path}: expected {limit} rows, found {len(values)}")
    if kind == "hecke":
        hecke_normalize([0] + values, weight)  # raises on a Deligne violation
    return kind, weight, limit, values


def load_coeffs(kind: str, limit: int, path=None, weight: int = 12) -> CoeffSeq:
    """Coefficients through the cache, writing it on first use."""
    kind_, weight_, _, values = read_cache(cache_coeffs(kind, limit, path, weight))
    if kind_ != kind:
        raise DataCorruptionError(f"cache holds kind {kind_!r}, wanted {kind!r}")
    if kind == "hecke":
        return hecke_normalize([0] + values, weight_)
    if kind == "divisor":
        return divisor_coeffs(limit)
    return squares_coeffs(limit)

"""Model bundle serialization.

A bundle is a directory of three files:

  manifest.json  config, vocabulary (original POI ids plus a sha256),
                 the parameter block table and the mechanism switches,
                 serialized with sorted keys and compact separators
  params.bin     all parameter blocks, little-endian float64, written
                 in declaration order
  guidance.bin   (k+1) x m_max little-endian float64: the k guidance
                 rows followed by the per-position confidence row

Loading reverses saving exactly, so save -> load -> save reproduces
identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from artrip.guidance import ConfidenceVector, GuidanceMatrix
from artrip.model.params import ModelConfig, ModelParams

BUNDLE_FORMAT = "trip-bundle-v1"
MECHANISM_KEYS = ("guiding", "drifting", "adapting")


@dataclass
class Bundle:
    params: ModelParams
    pm: GuidanceMatrix
    confidence: ConfidenceVector
    mechanisms: dict[str, bool]
    manifest: dict


def vocab_sha256(vocab_ids: list[int]) -> str:
    return hashlib.sha256(",".join(str(v) for v in vocab_ids).encode("ascii")).hexdigest()


def save_bundle(
    path,
    params: ModelParams,
    pm: GuidanceMatrix,
    confidence: ConfidenceVector,
    mechanisms: dict[str, bool],
    vocab_ids: list[int],
) -> None:
    """Write manifest.json, params.bin and guidance.bin under `path`."""
    if sorted(mechanisms) != sorted(MECHANISM_KEYS):
        raise ValueError(f"mechanisms must have exactly the keys {MECHANISM_KEYS}")
    if len(vocab_ids) != params.k or pm.k != params.k:
        raise ValueError("vocabulary, params and guidance disagree on k")
    if pm.m_max != params.m_max or len(confidence.values) != pm.m_max:
        raise ValueError("params and guidance disagree on m_max")
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    table = []
    offset = 0
    for name, block in params.blocks.items():
        table.append(
            {"name": name, "shape": list(block.shape), "offset": offset, "size": int(block.size)}
        )
        offset += int(block.size)
    manifest = {
        "format": BUNDLE_FORMAT,
        "config": asdict(params.config),
        "k": params.k,
        "m_max": params.m_max,
        "vocab_ids": [int(v) for v in vocab_ids],
        "vocab_sha256": vocab_sha256(vocab_ids),
        "blocks": table,
        "mechanisms": {key: bool(mechanisms[key]) for key in MECHANISM_KEYS},
        "guidance_totals": [int(t) for t in pm.poi_totals],
    }
    text = json.dumps(manifest, sort_keys=True, separators=(",", ":")) + "\n"
    (path / "manifest.json").write_text(text, encoding="ascii")
    payload = b"".join(block.astype("<f8").tobytes(order="C") for block in params.blocks.values())
    (path / "params.bin").write_bytes(payload)
    guidance = np.vstack([pm.values, confidence.values[None, :]])
    (path / "guidance.bin").write_bytes(guidance.astype("<f8").tobytes(order="C"))


def load_bundle(path) -> Bundle:
    """Read a bundle directory back into live objects."""
    path = Path(path)
    manifest = json.loads((path / "manifest.json").read_text(encoding="ascii"))
    if manifest.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"unsupported bundle format {manifest.get('format')!r}")
    config = ModelConfig(**manifest["config"])
    k = manifest["k"]
    m_max = manifest["m_max"]
    raw = np.frombuffer((path / "params.bin").read_bytes(), dtype="<f8")
    blocks: dict[str, np.ndarray] = {}
    expected = 0
    for entry in manifest["blocks"]:
        size = entry["size"]
        chunk = raw[entry["offset"] : entry["offset"] + size]
        if chunk.size != size:
            raise ValueError(f"params.bin truncated at block {entry['name']!r}")
        blocks[entry["name"]] = chunk.reshape(entry["shape"]).astype(np.float64)
        expected += size
    if raw.size != expected:
        raise ValueError("params.bin size does not match the manifest block table")
    params = ModelParams(config=config, k=k, m_max=m_max, blocks=blocks)
    grid = np.frombuffer((path / "guidance.bin").read_bytes(), dtype="<f8")
    if grid.size != (k + 1) * m_max:
        raise ValueError("guidance.bin size does not match k and m_max")
    grid = grid.reshape(k + 1, m_max)
    pm = GuidanceMatrix(
        values=grid[:k].astype(np.float64),
        m_max=m_max,
        poi_totals=np.array(manifest["guidance_totals"], dtype=np.float64),
    )
    confidence = ConfidenceVector(values=grid[k].astype(np.float64))
    return Bundle(
        params=params,
        pm=pm,
        confidence=confidence,
        mechanisms=dict(manifest["mechanisms"]),
        manifest=manifest,
    )

"""Versioned text checkpoints for trained encoders.

JSON with compact separators and insertion-ordered keys: floats serialize via
their shortest round-tripping decimal form, so save -> load -> save reproduces
the file byte for byte and every parameter bit for bit.  NaN/Inf are rejected
at save time (training aborts on them anyway).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .encoder import EncoderParams, Vocabulary
from .labelspace import DIMS, Kind, LabelSpace
from .lexicon import VadPoint

FORMAT_NAME = "emovad-checkpoint"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Checkpoint:
    params: EncoderParams
    vocab: Vocabulary
    space: LabelSpace
    kind: Kind
    seed: int


def save_checkpoint(
    path: str | Path,
    params: EncoderParams,
    vocab: Vocabulary,
    space: LabelSpace,
    kind: Kind,
) -> None:
    payload = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": kind,
        "seed": params.rng_seed,
        "embed_dim": params.embed_dim,
        "vocabulary": vocab.tokens,
        "labels": {
            "names": list(space.names),
            "coords": [[p.v, p.a, p.d] for p in space.coords],
            **{f"perm_{dim}": space.perm(dim).tolist() for dim in DIMS},
        },
        "params": {
            name: arr.tolist() for name, arr in params.named_arrays()
        },
    }
    text = json.dumps(payload, separators=(",", ":"), allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> Checkpoint:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"not a valid checkpoint file: {exc}") from None
    if payload.get("format") != FORMAT_NAME:
        raise ValueError("not a valid checkpoint file: bad format marker")
    if payload.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version: {payload.get('version')}")
    kind = payload["kind"]
    if kind not in ("single", "multi"):
        raise ValueError(f"bad kind in checkpoint: {kind!r}")

    vocab = Vocabulary(payload["vocabulary"])
    space = _load_space(payload["labels"])

    raw = payload["params"]
    params = EncoderParams(
        embeddings=np.array(raw["embeddings"], dtype=np.float64),
        head_w={dim: np.array(raw[f"head_{dim}_w"], dtype=np.float64) for dim in DIMS},
        head_b={dim: np.array(raw[f"head_{dim}_b"], dtype=np.float64) for dim in DIMS},
        reg_w=_optional_array(raw.get("reg_w")),
        reg_b=_optional_array(raw.get("reg_b")),
        rng_seed=int(payload["seed"]),
    )
    _validate(params, vocab, space)
    return Checkpoint(params, vocab, space, kind, int(payload["seed"]))


def _load_space(block: dict) -> LabelSpace:
    names = tuple(block["names"])
    coords = tuple(VadPoint(*triplet) for triplet in block["coords"])
    n = len(names)
    perms, values = {}, {}
    for dim in DIMS:
        perm = np.array(block[f"perm_{dim}"], dtype=np.intp)
        if sorted(perm.tolist()) != list(range(n)):
            raise ValueError(f"checkpoint perm_{dim} is not a permutation")
        vals = np.array([getattr(coords[i], dim) for i in perm], dtype=np.float64)
        if np.any(np.diff(vals) < 0):
            raise ValueError(f"checkpoint perm_{dim} does not sort coordinates")
        perms[dim] = perm
        values[dim] = vals
    return LabelSpace(names, coords, perms, values)


def _optional_array(data) -> np.ndarray | None:
    return None if data is None else np.array(data, dtype=np.float64)


def _validate(params: EncoderParams, vocab: Vocabulary, space: LabelSpace) -> None:
    if params.embeddings.shape[0] != vocab.size:
        raise ValueError("checkpoint embeddings disagree with vocabulary size")
    if params.n_classes != space.n_labels:
        raise ValueError("checkpoint heads disagree with label count")
    params.check_finite()

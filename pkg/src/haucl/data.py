"""Dataset files, synthetic dialogues and checkpoints.

Dataset files are JSON::

    {"classes": C, "num_speakers": S, "dims": {"t": d_t, "a": d_a, "v": d_v},
     "dialogues": [{"utterances": [{"t": [...], "a": [...], "v": [...],
                                    "speaker": 0, "label": 3}, ...]}, ...]}

The writer puts one utterance per line so files diff cleanly.

Checkpoints are a header line ``HAUCLCKPT1``, one line of JSON manifest
``{"tensors": [{"name", "shape", "byte_offset"}, ...], "meta": {...}}`` and a
blob of little-endian float64 values, row-major, concatenated in manifest
order. Offsets are relative to the start of the blob.
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .encoders import DialogueFeatures
from .errors import (
    CheckpointCorruptionError,
    CheckpointError,
    CheckpointVersionError,
    DataError,
    ParameterError,
)
from .hypergraph import MODALITIES
from .tensor import Tensor

CHECKPOINT_MAGIC = b"HAUCLCKPT1"
OBS_NOISE = 0.5


@dataclass
class Dataset:
    classes: int
    num_speakers: int
    dims: dict[str, int]
    dialogues: list[DialogueFeatures] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.dialogues)

    @property
    def num_utterances(self) -> int:
        return sum(len(d) for d in self.dialogues)

    def subset(self, indices: Sequence[int]) -> Dataset:
        return Dataset(self.classes, self.num_speakers, dict(self.dims), [self.dialogues[i] for i in indices])

    def validate(self, source: str = "<memory>") -> None:
        if self.classes < 1 or self.num_speakers < 1:
            raise DataError(f"{source}: classes and num_speakers must be positive")
        for m in MODALITIES:
            if int(self.dims.get(m, 0)) < 1:
                raise DataError(f"{source}: dims[{m!r}] must be a positive integer")
        for di, dlg in enumerate(self.dialogues):
            for m in MODALITIES:
                if dlg.modality(m).shape[1] != self.dims[m]:
                    raise DataError(
                        f"{source}: dialogue {di}: modality {m!r} has width "
                        f"{dlg.modality(m).shape[1]}, expected {self.dims[m]}"
                    )
                if not np.all(np.isfinite(dlg.modality(m))):
                    raise DataError(f"{source}: dialogue {di}: modality {m!r} has non-finite values")
            bad = np.flatnonzero((dlg.labels < 0) | (dlg.labels >= self.classes))
            if bad.size:
                raise DataError(f"{source}: dialogue {di}, utterance {bad[0]}: label out of range [0, {self.classes})")
            bad = np.flatnonzero((dlg.speakers < 0) | (dlg.speakers >= self.num_speakers))
            if bad.size:
                raise DataError(
                    f"{source}: dialogue {di}, utterance {bad[0]}: speaker out of range [0, {self.num_speakers})"
                )


# -- dataset files --------------------------------------------------------

class _LineDict(dict):
    """A parsed JSON object that remembers the line it started on."""

    line = 0


class _LineDecoder(json.JSONDecoder):
    """JSON decoder whose objects carry their 1-based source line."""

    def __init__(self):
        super().__init__()

        def parse_object(s_and_end, *args):
            s, end = s_and_end
            obj, new_end = json.decoder.JSONObject(s_and_end, *args)
            out = _LineDict(obj)
            out.line = s.count("\n", 0, end) + 1
            return out, new_end

        self.parse_object = parse_object
        self.scan_once = json.scanner.py_make_scanner(self)


def _where(path: Path, obj, di: int, ui: int | None = None) -> str:
    line = getattr(obj, "line", 0)
    loc = f"{path}:{line}" if line else str(path)
    return f"{loc}: dialogue {di}" + ("" if ui is None else f", utterance {ui}")


def _parse_utterance(u, dims: Mapping[str, int], where: str) -> tuple[list, int, int]:
    if not isinstance(u, dict):
        raise DataError(f"{where}: utterance must be an object")
    vecs = []
    for m in MODALITIES:
        vec = u.get(m)
        if not isinstance(vec, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec):
            raise DataError(f"{where}: field {m!r} must be a list of numbers")
        if len(vec) != dims[m]:
            raise DataError(f"{where}: field {m!r} has length {len(vec)}, expected {dims[m]}")
        vecs.append(vec)
    for key in ("speaker", "label"):
        if not isinstance(u.get(key), int) or isinstance(u.get(key), bool):
            raise DataError(f"{where}: field {key!r} must be an integer")
    return vecs, u["speaker"], u["label"]


def load_dataset(path) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read: {exc.strerror or exc}") from exc
    try:
        doc = _LineDecoder().decode(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise DataError(f"{path}: top level must be an object")
    try:
        classes = int(doc["classes"])
        num_speakers = int(doc["num_speakers"])
        dims = {m: int(doc["dims"][m]) for m in MODALITIES}
        raw_dialogues = doc["dialogues"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: missing or malformed header field: {exc}") from exc
    if not isinstance(raw_dialogues, list):
        raise DataError(f"{path}: 'dialogues' must be a list")

    dialogues = []
    for di, raw in enumerate(raw_dialogues):
        utts = raw.get("utterances") if isinstance(raw, dict) else None
        if not isinstance(utts, list) or not utts:
            raise DataError(f"{_where(path, raw, di)}: 'utterances' must be a non-empty list")
        cols: dict[str, list] = {m: [] for m in MODALITIES}
        speakers, labels = [], []
        for ui, u in enumerate(utts):
            vecs, s, y = _parse_utterance(u, dims, _where(path, u, di, ui))
            if not 0 <= y < classes:
                raise DataError(f"{_where(path, u, di, ui)}: label {y} out of range [0, {classes})")
            if not 0 <= s < num_speakers:
                raise DataError(f"{_where(path, u, di, ui)}: speaker {s} out of range [0, {num_speakers})")
            for m, vec in zip(MODALITIES, vecs):
                cols[m].append(vec)
            speakers.append(s)
            labels.append(y)
        dialogues.append(
            DialogueFeatures(
                np.array(cols["t"], dtype=np.float64).reshape(len(utts), dims["t"]),
                np.array(cols["a"], dtype=np.float64).reshape(len(utts), dims["a"]),
                np.array(cols["v"], dtype=np.float64).reshape(len(utts), dims["v"]),
                speakers,
                labels,
            )
        )
    ds = Dataset(classes, num_speakers, dims, dialogues)
    ds.validate(str(path))
    return ds


def dumps_dataset(ds: Dataset) -> str:
    header = json.dumps({"classes": ds.classes, "num_speakers": ds.num_speakers, "dims": ds.dims})
    lines = [header[:-1] + ', "dialogues": [']
    for di, dlg in enumerate(ds.dialogues):
        lines.append('{"utterances": [')
        for i in range(len(dlg)):
            utt = {m: dlg.modality(m)[i].tolist() for m in MODALITIES}
            utt["speaker"] = int(dlg.speakers[i])
            utt["label"] = int(dlg.labels[i])
            lines.append(json.dumps(utt) + ("," if i < len(dlg) - 1 else ""))
        lines.append("]}" + ("," if di < len(ds.dialogues) - 1 else ""))
    lines.append("]}")
    return "\n".join(lines) + "\n"


def save_dataset(ds: Dataset, path) -> None:
    path = Path(path)
    try:
        path.write_text(dumps_dataset(ds), encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot write: {exc.strerror or exc}") from exc


# -- synthetic dialogues ------------------------------------------------

def generate_synthetic(
    classes: int = 6,
    num_speakers: int = 2,
    num_dialogues: int = 20,
    len_range: tuple[int, int] = (8, 16),
    dims: Mapping[str, int] | None = None,
    inertia: float = 0.7,
    seed: int = 0,
    speaker_scale: float = 1.0,
) -> Dataset:
    """Class-conditional Gaussian features with sticky labels and speaker offsets.

    Labels follow a Markov chain that keeps the previous label with
    probability ``inertia`` and otherwise draws uniformly (possibly the same
    label again). Speakers take turns ``0, 1, ..., S-1, 0, ...``. Each
    modality vector is ``class_mean[label] + speaker_offset[speaker] + noise``
    with class means from N(0, I), offsets from N(0, speaker_scale^2 I) and
    noise from N(0, 0.25 I).
    """
    dims = dict(dims or {"t": 16, "a": 16, "v": 16})
    if classes < 2 or num_speakers < 2:
        raise ParameterError("need at least 2 classes and 2 speakers")
    if not 0.0 <= inertia <= 1.0:
        raise ParameterError(f"inertia must lie in [0, 1], got {inertia}")
    lo, hi = len_range
    if lo < 1 or hi < lo:
        raise ParameterError(f"bad dialogue length range {len_range}")
    if num_dialogues < 0 or any(dims.get(m, 0) < 1 for m in MODALITIES):
        raise ParameterError("dialogue count must be >= 0 and every modality dim >= 1")

    rng = np.random.default_rng(seed)
    means = {m: rng.standard_normal((classes, dims[m])) for m in MODALITIES}
    offsets = {m: speaker_scale * rng.standard_normal((num_speakers, dims[m])) for m in MODALITIES}
    dialogues = []
    for _ in range(num_dialogues):
        n = int(rng.integers(lo, hi + 1))
        labels = np.empty(n, dtype=np.int64)
        labels[0] = rng.integers(classes)
        for i in range(1, n):
            labels[i] = labels[i - 1] if rng.random() < inertia else rng.integers(classes)
        speakers = np.arange(n) % num_speakers
        feats = {
            m: means[m][labels] + offsets[m][speakers] + OBS_NOISE * rng.standard_normal((n, dims[m]))
            for m in MODALITIES
        }
        dialogues.append(DialogueFeatures(feats["t"], feats["a"], feats["v"], speakers, labels))
    return Dataset(classes, num_speakers, dims, dialogues)


# -- checkpoints ------------------------------------------------------------

def save_checkpoint(params: Mapping[str, Tensor | np.ndarray], path, meta: Mapping | None = None) -> None:
    entries = []
    chunks = []
    offset = 0
    for name, value in params.items():
        # asarray keeps 0-d shapes, unlike ascontiguousarray
        arr = np.asarray(value.data if isinstance(value, Tensor) else value, dtype="<f8", order="C")
        entries.append({"name": name, "shape": list(arr.shape), "byte_offset": offset})
        chunks.append(arr.tobytes(order="C"))
        offset += arr.nbytes
    manifest = json.dumps({"tensors": entries, "meta": dict(meta or {})}, separators=(",", ":"))
    path = Path(path)
    try:
        with open(path, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC + b"\n")
            fh.write(manifest.encode("utf-8") + b"\n")
            for c in chunks:
                fh.write(c)
    except OSError as exc:
        raise CheckpointError(f"{path}: cannot write checkpoint: {exc.strerror or exc}") from exc


def read_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    """Return ``(params, meta)``; parameters come back in manifest order."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: cannot read checkpoint: {exc.strerror or exc}") from exc
    first = raw.find(b"\n")
    if first < 0 or raw[:first] != CHECKPOINT_MAGIC:
        raise CheckpointVersionError(f"{path}: unknown checkpoint header {raw[:max(first, 0)][:16]!r}")
    second = raw.find(b"\n", first + 1)
    if second < 0:
        raise CheckpointCorruptionError(f"{path}: manifest is not terminated")
    try:
        manifest = json.loads(raw[first + 1:second].decode("utf-8"))
        entries = manifest["tensors"]
        meta = manifest.get("meta", {})
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise CheckpointCorruptionError(f"{path}: unreadable manifest: {exc}") from exc
    blob = memoryview(raw)[second + 1:]
    expected = 0
    params: dict[str, np.ndarray] = {}
    for e in entries:
        try:
            name, shape, off = e["name"], tuple(int(s) for s in e["shape"]), int(e["byte_offset"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointCorruptionError(f"{path}: bad manifest entry {e!r}") from exc
        nbytes = 8 * int(np.prod(shape, dtype=np.int64))
        if off < 0 or off + nbytes > len(blob):
            raise CheckpointCorruptionError(
                f"{path}: tensor {name!r} needs bytes [{off}, {off + nbytes}) but blob has {len(blob)}"
            )
        if name in params:
            raise CheckpointCorruptionError(f"{path}: duplicate tensor {name!r}")
        params[name] = np.frombuffer(blob[off:off + nbytes], dtype="<f8").reshape(shape).astype(np.float64)
        expected += nbytes
    if expected != len(blob):
        raise CheckpointCorruptionError(f"{path}: manifest describes {expected} bytes, blob has {len(blob)}")
    return params, meta


def load_checkpoint(path) -> dict[str, np.ndarray]:
    return read_checkpoint(path)[0]

"""Plain-text persistence for datasets and trained models.

Both formats are line oriented, human inspectable and platform independent.
Floats are written with 17 significant digits so that a save/load round
trip is bit exact. All writes go through a temp-file-and-rename so readers
never observe partial files.

Dataset format (``SPDDS v1``)::

    SPDDS v1 n=<n> C=<C> m=<m>
    <label of sample 1>
    <n rows of n space-separated values>
    <label of sample 2>
    ...

Model format (``SPDMODEL v1``)::

    SPDMODEL v1 method=<tag> n=<n> C=<C> M=<M>
    sigma_sq <float>          (mixture models)
    tau <float>               (euclidean-rslvq only)
    seed <int>                (optional metadata)
    config_hash <hex>         (optional metadata)
    priors <M floats>         (plrsq only)
    prototype <label>
    <n rows of n values>
    ...
    checksum sha256 <hex over all preceding bytes>
"""

import hashlib
import json
import os
import tempfile

import numpy as np

from .baselines import EuclideanRslvqModel, MdrmModel
from .data import LabeledDataset
from .exceptions import FileFormatError
from .plrsq import Model

METHOD_PLRSQ = "plrsq"
METHOD_MDRM = "mdrm"
METHOD_RSLVQ = "rslvq-euclidean"


def _format_float(x):
    return format(float(x), ".17g")


def _format_matrix(X):
    return "\n".join(" ".join(_format_float(v) for v in row) for row in X)


def atomic_write_text(path, text):
    """Write text to ``path`` via a temp file in the same directory + rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


class _LineReader:
    """Sequential line reader that tracks the byte offset of each line."""

    def __init__(self, text, path):
        self.lines = text.split("\n")
        self.path = path
        self.index = 0
        self.offset = 0
        self.line_start = 0

    def next_line(self, what):
        while True:
            if self.index >= len(self.lines):
                raise FileFormatError(
                    f"unexpected end of file while reading {what}",
                    path=self.path, byte_offset=self.offset,
                )
            line = self.lines[self.index]
            self.line_start = self.offset
            self.index += 1
            self.offset += len(line.encode("utf-8")) + 1
            if line.strip():
                return line.strip()

    def fail(self, message):
        raise FileFormatError(message, path=self.path, byte_offset=self.line_start)

    def at_end(self):
        return all(not line.strip() for line in self.lines[self.index:])


def _parse_header_fields(line, expected_magic, reader, required):
    parts = line.split()
    if parts[: len(expected_magic)] != expected_magic:
        reader.fail(f"bad header, expected '{' '.join(expected_magic)} ...'")
    fields = {}
    for token in parts[len(expected_magic):]:
        if "=" not in token:
            reader.fail(f"malformed header token {token!r}")
        key, value = token.split("=", 1)
        fields[key] = value
    for key in required:
        if key not in fields:
            reader.fail(f"header misses field {key}=")
    return fields


def _parse_int(reader, value, what):
    try:
        return int(value)
    except ValueError:
        reader.fail(f"{what} is not an integer: {value!r}")


def _parse_float(reader, value, what):
    try:
        return float(value)
    except ValueError:
        reader.fail(f"{what} is not a number: {value!r}")


def _read_matrix(reader, n, what):
    rows = []
    for r in range(n):
        line = reader.next_line(f"row {r + 1} of {what}")
        values = line.split()
        if len(values) != n:
            reader.fail(f"{what} row {r + 1} has {len(values)} values, expected {n}")
        rows.append([_parse_float(reader, v, f"{what} entry") for v in values])
    return np.array(rows)


def save_dataset(path, dataset):
    """Write a :class:`LabeledDataset` to ``path`` (atomic, lossless)."""
    dataset.validate(check_spd=False)
    parts = [f"SPDDS v1 n={dataset.dim} C={dataset.num_classes} m={len(dataset)}"]
    for label, matrix in zip(dataset.labels, dataset.matrices):
        parts.append(str(int(label)))
        parts.append(_format_matrix(matrix))
    atomic_write_text(path, "\n".join(parts) + "\n")


def load_dataset(path):
    """Read a dataset file, validating structure and SPD invariants.

    Raises
    ------
    FileFormatError
        On any structural problem, with the byte offset of the faulty line.
    ValidationError, DomainError
        If the parsed dataset violates label or SPD invariants.
    """
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    reader = _LineReader(text, path)
    header = reader.next_line("header")
    fields = _parse_header_fields(header, ["SPDDS", "v1"], reader, ("n", "C", "m"))
    n = _parse_int(reader, fields["n"], "n")
    num_classes = _parse_int(reader, fields["C"], "C")
    m = _parse_int(reader, fields["m"], "m")
    if n < 1 or num_classes < 1 or m < 0:
        reader.fail("header dimensions must be positive")
    matrices = np.empty((m, n, n))
    labels = np.empty(m, dtype=np.int64)
    for i in range(m):
        labels[i] = _parse_int(reader, reader.next_line(f"label of sample {i + 1}"),
                               "label")
        matrices[i] = _read_matrix(reader, n, f"sample {i + 1}")
    if not reader.at_end():
        reader.next_line("end of file")
        reader.fail("trailing content after the last sample")
    dataset = LabeledDataset(matrices, labels, num_classes)
    dataset.validate()
    return dataset


def config_hash(config):
    """Stable hash of a training configuration (sha256 of its sorted fields)."""
    payload = json.dumps(
        {k: v for k, v in sorted(vars(config).items())}, sort_keys=True, default=str
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _checksum(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def save_model(path, model, seed=None, config=None):
    """Write a trained model (any supported kind) to ``path``.

    ``seed`` and ``config`` are optional training metadata; the config is
    stored as a hash for provenance only.
    """
    parts = []
    if isinstance(model, Model):
        parts.append(
            f"SPDMODEL v1 method={METHOD_PLRSQ} n={model.dim} "
            f"C={model.num_classes} M={model.num_prototypes}"
        )
        parts.append(f"sigma_sq {_format_float(model.sigma_sq)}")
        _append_metadata(parts, seed, config)
        parts.append("priors " + " ".join(_format_float(p) for p in model.priors))
        for label, proto in zip(model.labels, model.prototypes):
            parts.append(f"prototype {int(label)}")
            parts.append(_format_matrix(proto))
    elif isinstance(model, MdrmModel):
        parts.append(
            f"SPDMODEL v1 method={METHOD_MDRM} n={model.dim} "
            f"C={model.num_classes} M={model.num_classes}"
        )
        _append_metadata(parts, seed, config)
        for label, mean in enumerate(model.class_means, start=1):
            parts.append(f"prototype {label}")
            parts.append(_format_matrix(mean))
    elif isinstance(model, EuclideanRslvqModel):
        parts.append(
            f"SPDMODEL v1 method={METHOD_RSLVQ} n={model.dim} "
            f"C={model.num_classes} M={model.num_prototypes}"
        )
        parts.append(f"sigma_sq {_format_float(model.sigma_sq)}")
        parts.append(f"tau {_format_float(model.tau)}")
        _append_metadata(parts, seed, config)
        for label, proto in zip(model.labels, model.prototypes):
            parts.append(f"prototype {int(label)}")
            parts.append(_format_matrix(proto))
    else:
        raise TypeError(f"cannot serialize model of type {type(model).__name__}")
    body = "\n".join(parts) + "\n"
    body += f"checksum sha256 {_checksum(body)}\n"
    atomic_write_text(path, body)


def _append_metadata(parts, seed, config):
    if seed is not None:
        parts.append(f"seed {int(seed)}")
    if config is not None:
        parts.append(f"config_hash {config_hash(config)}")


def load_model(path):
    """Read a model file back into the matching model class.

    The trailing sha256 checksum is verified before anything is parsed.
    """
    with open(path, "r", encoding="utf-8") as handle:
        text = handle.read()
    marker = "checksum sha256 "
    pos = text.rfind(marker)
    if pos < 0:
        raise FileFormatError("missing checksum line", path=path,
                              byte_offset=len(text.encode("utf-8")))
    body, trailer = text[:pos], text[pos:]
    stated = trailer[len(marker):].strip()
    if stated != _checksum(body):
        raise FileFormatError("checksum mismatch: file is corrupted", path=path,
                              byte_offset=pos)

    reader = _LineReader(body, path)
    header = reader.next_line("header")
    fields = _parse_header_fields(header, ["SPDMODEL", "v1"], reader,
                                  ("method", "n", "C", "M"))
    method = fields["method"]
    n = _parse_int(reader, fields["n"], "n")
    num_classes = _parse_int(reader, fields["C"], "C")
    num_protos = _parse_int(reader, fields["M"], "M")

    scalars = {}
    line = reader.next_line("model body")
    while not line.startswith("prototype"):
        key, _, value = line.partition(" ")
        if key in ("sigma_sq", "tau"):
            scalars[key] = _parse_float(reader, value, key)
        elif key == "seed":
            scalars[key] = _parse_int(reader, value, key)
        elif key == "config_hash":
            scalars[key] = value
        elif key == "priors":
            scalars[key] = np.array(
                [_parse_float(reader, v, "prior") for v in value.split()]
            )
        else:
            reader.fail(f"unknown field {key!r} before prototypes")
        line = reader.next_line("model body")

    protos = np.empty((num_protos, n, n))
    labels = np.empty(num_protos, dtype=np.int64)
    for i in range(num_protos):
        if i > 0:
            line = reader.next_line("prototype header")
        if not line.startswith("prototype"):
            reader.fail(f"expected 'prototype <label>', got {line!r}")
        labels[i] = _parse_int(reader, line.split()[1], "prototype label")
        protos[i] = _read_matrix(reader, n, f"prototype {i + 1}")
    if not reader.at_end():
        reader.next_line("end of model")
        reader.fail("trailing content after the last prototype")

    if method == METHOD_PLRSQ:
        if "sigma_sq" not in scalars or "priors" not in scalars:
            raise FileFormatError("plrsq model misses sigma_sq or priors", path=path)
        if scalars["priors"].shape != (num_protos,):
            raise FileFormatError("priors length does not match M", path=path)
        model = Model(protos, labels, scalars["sigma_sq"], scalars["priors"],
                      num_classes)
        model.validate()
        return model
    if method == METHOD_MDRM:
        if num_protos != num_classes or not np.array_equal(
            labels, np.arange(1, num_classes + 1)
        ):
            raise FileFormatError("mdrm model must store one mean per class in order",
                                  path=path)
        return MdrmModel(protos, num_classes)
    if method == METHOD_RSLVQ:
        if "sigma_sq" not in scalars or "tau" not in scalars:
            raise FileFormatError("rslvq model misses sigma_sq or tau", path=path)
        return EuclideanRslvqModel(protos, labels, scalars["sigma_sq"],
                                   scalars["tau"], num_classes)
    raise FileFormatError(f"unknown model method {method!r}", path=path)

"""JSON, CSV and SVG round trips for matrices, channels and reports.

The matrix wire format is shared by every artifact: an object with ``rows``,
``cols`` and a row-major ``data`` list of ``[re, im]`` pairs.  Floats are
emitted with Python's shortest round-trip representation, so writing and
re-reading a file reproduces the array bit for bit.

Malformed documents raise :class:`ValueError` (the CLI maps these to its
parse-error exit code); structurally sound documents with impossible shapes
raise the library's own shape errors.
"""

from __future__ import annotations

import json

import numpy as np

from .channels import Instrument, KrausChannel
from .codes import CodeCertificate, ProtectionClass
from .errors import ShapeMismatchError
from .linalg import DEFAULT_TOL, Isometry
from .numrange import PlanarRegion
from .recovery import Decoder
from .simulator import TrajectoryReport


# ---------------------------------------------------------------- matrices

def matrix_to_json(matrix) -> dict:
    """Encode a complex matrix as ``{"rows", "cols", "data"}``."""
    a = np.atleast_2d(np.asarray(matrix, dtype=complex))
    return {
        "rows": a.shape[0],
        "cols": a.shape[1],
        "data": [[float(z.real), float(z.imag)] for z in a.reshape(-1)],
    }


def matrix_from_json(doc) -> np.ndarray:
    """Decode the matrix wire format; raises ValueError on malformed input."""
    if not isinstance(doc, dict):
        raise ValueError("matrix document must be a JSON object")
    try:
        rows, cols, data = int(doc["rows"]), int(doc["cols"]), doc["data"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"matrix document missing field: {exc}") from exc
    if rows <= 0 or cols <= 0:
        raise ValueError("matrix dimensions must be positive")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise ValueError(f"matrix data must hold {rows * cols} entries")
    flat = np.empty(rows * cols, dtype=complex)
    for i, entry in enumerate(data):
        if not isinstance(entry, (list, tuple)) or len(entry) != 2:
            raise ValueError(f"entry {i} is not an [re, im] pair")
        flat[i] = complex(float(entry[0]), float(entry[1]))
    return flat.reshape(rows, cols)


# ---------------------------------------------------------------- channels

def channel_to_json(channel: KrausChannel, labels=None) -> dict:
    doc = {
        "dim": channel.dim,
        "tol": channel.tol,
        "kraus": [matrix_to_json(a) for a in channel.kraus],
    }
    if labels is not None:
        doc["labels"] = list(labels)
    return doc


def channel_from_json(doc, tol: float | None = None) -> KrausChannel:
    """Decode ``{"dim", "tol", "kraus", ["labels"]}`` into a channel.

    The completeness gate of :class:`KrausChannel` still runs, so an invalid
    document fails with the library error rather than silently loading.
    """
    if not isinstance(doc, dict) or "kraus" not in doc:
        raise ValueError("channel document must be an object with a 'kraus' list")
    if not isinstance(doc["kraus"], list) or not doc["kraus"]:
        raise ValueError("'kraus' must be a non-empty list of matrices")
    kraus = [matrix_from_json(m) for m in doc["kraus"]]
    effective_tol = tol if tol is not None else float(doc.get("tol", DEFAULT_TOL))
    channel = KrausChannel(kraus, tol=effective_tol)
    if "dim" in doc and int(doc["dim"]) != channel.dim:
        raise ShapeMismatchError(
            f"declared dim {doc['dim']} does not match operators of size {channel.dim}"
        )
    return channel


def instrument_from_json(doc, tol: float | None = None) -> Instrument:
    channel = channel_from_json(doc, tol)
    labels = doc.get("labels")
    if labels is not None and len(labels) != channel.num_kraus:
        raise ValueError("label count does not match the number of Kraus operators")
    return Instrument(channel, labels)


# ---------------------------------------------------------------- isometry

def isometry_to_json(code: Isometry) -> dict:
    return matrix_to_json(code.matrix)


def isometry_from_json(doc, tol: float = DEFAULT_TOL) -> Isometry:
    return Isometry(matrix_from_json(doc), tol=tol)


# ------------------------------------------------------------ certificates

def certificate_to_json(cert: CodeCertificate) -> dict:
    return {
        "class": cert.klass.label,
        "lambdas": [float(v) for v in cert.lambdas],
        "alpha": None if cert.alpha is None else matrix_to_json(cert.alpha),
        "entropy": None if cert.entropy is None else float(cert.entropy),
        "residuals": {k: float(v) for k, v in cert.residuals.items()},
        "tol": cert.tol,
    }


def certificate_from_json(doc) -> CodeCertificate:
    if not isinstance(doc, dict) or "class" not in doc:
        raise ValueError("certificate document must be an object with a 'class'")
    alpha = doc.get("alpha")
    return CodeCertificate(
        klass=ProtectionClass.from_label(doc["class"]),
        lambdas=tuple(float(v) for v in doc.get("lambdas", ())),
        alpha=None if alpha is None else matrix_from_json(alpha),
        entropy=None if doc.get("entropy") is None else float(doc["entropy"]),
        residuals=dict(doc.get("residuals", {})),
        tol=float(doc.get("tol", DEFAULT_TOL)),
    )


# ----------------------------------------------------------------- decoder

def decoder_to_json(decoder: Decoder) -> dict:
    return {
        "mode": decoder.mode,
        "D": [matrix_to_json(d) for d in decoder.operators],
        "weights": [float(w) for w in decoder.weights],
        "rebasing": None if decoder.rebasing is None else matrix_to_json(decoder.rebasing),
        "completion": matrix_to_json(decoder.completion_state),
    }


def decoder_from_json(doc) -> Decoder:
    if not isinstance(doc, dict) or "D" not in doc or "mode" not in doc:
        raise ValueError("decoder document must be an object with 'mode' and 'D'")
    if doc["mode"] not in ("strong", "weak"):
        raise ValueError(f"unknown decoder mode {doc['mode']!r}")
    rebasing = doc.get("rebasing")
    operators = tuple(matrix_from_json(d) for d in doc["D"])
    completion = doc.get("completion")
    if completion is None:
        k = operators[0].shape[0]
        completion_state = np.eye(k) / k
    else:
        completion_state = matrix_from_json(completion)
    return Decoder(
        mode=doc["mode"],
        operators=operators,
        weights=tuple(float(w) for w in doc.get("weights", ())),
        completion_state=completion_state,
        rebasing=None if rebasing is None else matrix_from_json(rebasing),
    )


# ----------------------------------------------------------------- reports

def report_to_json(report: TrajectoryReport) -> dict:
    return {
        "kind": report.kind,
        "trials": report.trials,
        "seed": report.seed,
        "counts": [int(c) for c in report.outcome_counts],
        "expected": [float(p) for p in report.expected_probabilities],
        "chi_square": report.chi_square,
        "p_value": report.p_value,
        "degrees_of_freedom": report.degrees_of_freedom,
        "max_pairwise_sigma": report.max_pairwise_sigma,
        "min_fidelity": report.min_fidelity,
        "mean_fidelity": report.mean_fidelity,
        "passed": report.passed,
        "notes": list(report.notes),
    }


# -------------------------------------------------------------------- file IO

def dump(doc, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: {exc}") from exc


# -------------------------------------------------------------- region files

def region_to_csv(region: PlanarRegion) -> str:
    """Vertices of the region, one ``re,im`` line per vertex."""
    lines = [f"{float(z.real)!r},{float(z.imag)!r}" for z in region.vertices]
    return "\n".join(lines) + ("\n" if lines else "")


def region_to_svg(region: PlanarRegion, eigenvalues=(), size: int = 420) -> str:
    """Minimal SVG: unit circle, shaded region, eigenvalue dots."""
    half = size / 2.0
    scale = half / 1.25

    def pt(z: complex) -> str:
        return f"{half + scale * z.real:.2f},{half - scale * z.imag:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<circle cx="{half}" cy="{half}" r="{scale:.2f}" fill="none" '
        'stroke="black" stroke-width="1"/>',
    ]
    verts = list(region.vertices)
    if region.kind == "polygon":
        parts.append(
            '<polygon points="%s" fill="gray" fill-opacity="0.5" stroke="black"/>'
            % " ".join(pt(z) for z in verts)
        )
    elif region.kind == "segment":
        parts.append(
            '<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="gray" stroke-width="3"/>'
            % (*pt(verts[0]).split(","), *pt(verts[1]).split(","))
        )
    elif region.kind == "point":
        x, y = pt(verts[0]).split(",")
        parts.append(f'<circle cx="{x}" cy="{y}" r="3" fill="gray"/>')
    for z in eigenvalues:
        x, y = pt(complex(z)).split(",")
        parts.append(f'<circle cx="{x}" cy="{y}" r="4" fill="black"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

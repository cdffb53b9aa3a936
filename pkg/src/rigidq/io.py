"""Text file formats: bead files and (spectral) vector files.

Bead file: one bead per line, three whitespace-separated decimal
coordinates; lines beginning '#' are ignored; bodies are separated by a
line containing only '---'.

Vector file: one decimal value per line.  Spectral vectors carry a header
line '# spectral n=<n>'.
"""

from __future__ import annotations

import numpy as np

from .model import BeadModel, MultiBodyModel


def save_beads(model, fp) -> None:
    bodies = model.bodies if isinstance(model, MultiBodyModel) else [model]
    for j, body in enumerate(bodies):
        if j:
            fp.write("---\n")
        for x, y, z in body.positions:
            fp.write(f"{x:.17g} {y:.17g} {z:.17g}\n")


def load_beads(fp) -> MultiBodyModel:
    chunks: list[list[list[float]]] = [[]]
    for lineno, line in enumerate(fp, 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped == "---":
            chunks.append([])
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 3 coordinates, got {len(parts)}")
        try:
            chunks[-1].append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    bodies = [BeadModel(c, body_id=j) for j, c in enumerate(chunks) if c]
    if not bodies:
        raise ValueError("no beads found")
    return MultiBodyModel(bodies)


def save_vector(vec, fp, spectral_n: int | None = None) -> None:
    if spectral_n is not None:
        fp.write(f"# spectral n={spectral_n}\n")
    for x in np.asarray(vec, dtype=float).ravel():
        fp.write(f"{x:.17g}\n")


def load_vector(fp) -> tuple[np.ndarray, int | None]:
    """Returns (vector, spectral_n or None)."""
    values = []
    spectral_n = None
    for lineno, line in enumerate(fp, 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if stripped.startswith("# spectral n="):
                spectral_n = int(stripped.split("=", 1)[1])
            continue
        try:
            values.append(float(stripped))
        except ValueError:
            raise ValueError(f"line {lineno}: not a number: {stripped!r}") from None
    return np.array(values), spectral_n

"""Residual records with witnesses, and reduction of batched results to them."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bundle import Sample, VecField, is_zero
from .jet import Jet

DEFAULT_TOL = 1e-8


class PreconditionError(RuntimeError):
    """A check was asked to run on data that does not meet its hypotheses."""


@dataclass
class Residual:
    """Max-abs residual of one check, with the point and fields where it is attained."""

    name: str
    value: float
    point: tuple = ()
    fields: tuple = ()

    def ok(self, tol: float = DEFAULT_TOL) -> bool:
        return bool(self.value < tol)

    def as_dict(self) -> dict:
        return {"name": self.name, "residual": self.value, "point": list(self.point), "fields": list(self.fields)}


@dataclass
class Report:
    """Ordered residuals; indexable by name."""

    residuals: list = field(default_factory=list)

    def add(self, r: Residual) -> Residual:
        self.residuals.append(r)
        return r

    def __getitem__(self, name: str) -> Residual:
        for r in self.residuals:
            if r.name == name:
                return r
        raise KeyError(name)

    def __iter__(self):
        return iter(self.residuals)

    def __len__(self):
        return len(self.residuals)

    @property
    def max(self) -> float:
        return max((r.value for r in self.residuals), default=0.0)

    def worst(self) -> Residual | None:
        return max(self.residuals, key=lambda r: r.value, default=None)

    def ok(self, tol: float = DEFAULT_TOL) -> bool:
        return all(r.ok(tol) for r in self.residuals)

    def as_dict(self) -> list:
        return [r.as_dict() for r in self.residuals]


def magnitude(value, npoints: int) -> np.ndarray:
    """Pointwise max-abs of a scalar or field result, shape ``(P, *batch)``."""
    if isinstance(value, VecField):
        parts = [magnitude(c, npoints) for c in value.comps]
        nd = max(p.ndim for p in parts)
        parts = [p.reshape(p.shape[:1] + (1,) * (nd - p.ndim) + p.shape[1:]) for p in parts]
        shape = np.broadcast_shapes(*[p.shape for p in parts])
        return np.max(np.stack([np.broadcast_to(p, shape) for p in parts]), axis=0)
    if isinstance(value, Jet):
        return np.abs(value.value)
    if isinstance(value, np.ndarray):
        return np.abs(value)
    if is_zero(value):
        return np.zeros((npoints,))
    return np.full((npoints,), abs(float(value)))


def measure(name: str, value, sample: Sample, axes: Sequence[Sequence[str]] = ()) -> Residual:
    """Reduce a batched result to its worst entry.

    ``axes`` names the entries along each batch axis (e.g. the field names), so
    the witness can be reported as a tuple of names.
    """
    mag = magnitude(value, len(sample))
    if mag.ndim < 1 + len(axes):
        mag = mag.reshape(mag.shape[:1] + (1,) * (1 + len(axes) - mag.ndim) + mag.shape[1:])
    full = (len(sample),) + tuple(len(a) for a in axes)
    mag = np.broadcast_to(mag, full)
    if not np.all(np.isfinite(mag)):
        idx = np.unravel_index(int(np.flatnonzero(~np.isfinite(mag))[0]), full)
        val = float("inf")
    else:
        idx = np.unravel_index(int(np.argmax(mag)), full)
        val = float(mag[idx])
    point = tuple(float(c) for c in sample.points[idx[0]])
    names = tuple(a[k] for a, k in zip(axes, idx[1:]))
    return Residual(name, val, point, names)


def combine(name: str, residuals: Sequence[Residual]) -> Residual:
    """The worst of several residuals, renamed."""
    worst = max(residuals, key=lambda r: r.value)
    return Residual(name, worst.value, worst.point, worst.fields)

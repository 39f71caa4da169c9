"""Heisenberg and Schrödinger uncertainty functionals per coordinate axis.

Accepts any record exposing ``var_x, var_px, cov_xpx`` (and the ``y``
counterparts): :class:`~undulator_cs.model.MomentState` or
:class:`~undulator_cs.propagators.SecondMoments`.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError

_AXES = {"x": ("var_x", "var_px", "cov_xpx"), "y": ("var_y", "var_py", "cov_ypy")}


def _axis_fields(ms, axis):
    try:
        names = _AXES[axis]
    except KeyError:
        raise DomainError(f"axis must be 'x' or 'y', got {axis!r}") from None
    return tuple(getattr(ms, n) for n in names)


def heisenberg_product(ms, axis: str = "x") -> float:
    vq, vp, _ = _axis_fields(ms, axis)
    return vq * vp


def schrodinger_functional(ms, axis: str = "x") -> float:
    vq, vp, cov = _axis_fields(ms, axis)
    return vq * vp - cov * cov


@dataclass(frozen=True)
class Minimization:
    minimizes_schrodinger: bool
    minimizes_heisenberg: bool
    violates_bound: bool


def classify_minimization(ms, axis: str = "x", tol: float = 1e-12, hbar: float = 1.0) -> Minimization:
    """Flag which functional sits within ``tol`` of ħ²/4.

    ``violates_bound`` marks states whose Schrödinger functional lies more
    than ``tol`` below ħ²/4, i.e. records that no quantum state can produce.
    """
    if not tol > 0:
        raise DomainError("tol must be > 0")
    bound = hbar**2 / 4.0
    schr = schrodinger_functional(ms, axis)
    heis = heisenberg_product(ms, axis)
    return Minimization(
        minimizes_schrodinger=abs(schr - bound) <= tol,
        minimizes_heisenberg=abs(heis - bound) <= tol,
        violates_bound=schr < bound - tol,
    )

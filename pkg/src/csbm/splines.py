"""B-spline rate functions with exponentiated coefficients.

A rate function is r(t) = sum_p exp(c_p) * B_p(t) on the play clock, where
{B_p} is a clamped B-spline basis.  Exponentiating the coefficients keeps
every rate strictly positive, and because the basis is a partition of unity
the all-zero coefficient vector gives the constant rate 1.

Integration is exact: the antiderivative of a spline is a spline one degree
higher, so exposure terms carry no quadrature error into the likelihood.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import BSpline

PLAY_SECONDS = 24.0

# |log-coefficient| clamp used by the optimizer; e^30 is beyond any rate a
# 24-second clock could ever support.
COEFF_BOUND = 30.0


def _as_times(t) -> np.ndarray:
    return np.atleast_1d(np.asarray(t, dtype=float))


@dataclass(frozen=True, eq=False)
class SplineBasis:
    """Clamped B-spline basis on [t_min, t_max].

    End knots have multiplicity degree+1, so the number of basis functions
    equals the number of interior intervals plus the degree.
    """

    knots: np.ndarray
    degree: int = 3

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")
        if knots.ndim != 1 or len(knots) < 2 * (self.degree + 1):
            raise ValueError("knot vector too short for the degree")
        if np.any(np.diff(knots) < 0):
            raise ValueError("knots must be nondecreasing")
        object.__setattr__(self, "knots", knots)

    @classmethod
    def uniform(cls, nbasis: int = 8, degree: int = 3,
                t_max: float = PLAY_SECONDS) -> "SplineBasis":
        """Basis of `nbasis` functions on uniformly spaced clamped knots."""
        if nbasis < degree + 1:
            raise ValueError("need at least degree+1 basis functions")
        breaks = np.linspace(0.0, float(t_max), nbasis - degree + 1)
        knots = np.concatenate([np.zeros(degree), breaks,
                                np.full(degree, float(t_max))])
        return cls(knots=knots, degree=degree)

    @property
    def nbasis(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def t_min(self) -> float:
        return float(self.knots[0])

    @property
    def t_max(self) -> float:
        return float(self.knots[-1])

    @cached_property
    def _identity_spline(self) -> BSpline:
        return BSpline(self.knots, np.eye(self.nbasis), self.degree,
                       extrapolate=False)

    @cached_property
    def _antiderivative(self) -> BSpline:
        return self._identity_spline.antiderivative()

    def _check_range(self, t: np.ndarray) -> None:
        if t.size and (t.min() < self.t_min - 1e-12 or
                       t.max() > self.t_max + 1e-12):
            raise ValueError(
                f"time outside [{self.t_min:g}, {self.t_max:g}]")

    def design(self, t) -> np.ndarray:
        """Basis values, one row per time point, one column per basis."""
        arr = _as_times(t)
        self._check_range(arr)
        if arr.size == 0:
            return np.zeros((0, self.nbasis))
        arr = np.clip(arr, self.t_min, self.t_max)
        return BSpline.design_matrix(arr, self.knots, self.degree).toarray()

    def cumulative(self, t) -> np.ndarray:
        """Per-basis integrals from t_min up to each time point."""
        arr = _as_times(t)
        self._check_range(arr)
        if arr.size == 0:
            return np.zeros((0, self.nbasis))
        return np.asarray(self._antiderivative(np.clip(arr, self.t_min,
                                                       self.t_max)))

    def span_integrals(self, t0, t1) -> np.ndarray:
        """Per-basis integrals over intervals [t0, t1] (vectorized)."""
        a, b = _as_times(t0), _as_times(t1)
        if np.any(b - a < -1e-12):
            raise ValueError("reversed interval")
        return self.cumulative(b) - self.cumulative(a)

    def to_dict(self) -> dict:
        return {"degree": int(self.degree),
                "knots": [float(x) for x in self.knots]}

    @classmethod
    def from_dict(cls, d: dict) -> "SplineBasis":
        return cls(knots=np.asarray(d["knots"], dtype=float),
                   degree=int(d["degree"]))

    def same_as(self, other: "SplineBasis") -> bool:
        return (self.degree == other.degree
                and len(self.knots) == len(other.knots)
                and np.allclose(self.knots, other.knots))


def validate_coeffs(coeffs, basis: SplineBasis) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    if c.shape[-1] != basis.nbasis:
        raise ValueError(f"expected {basis.nbasis} coefficients, "
                         f"got {c.shape[-1]}")
    if not np.all(np.isfinite(c)):
        raise ValueError("coefficients must be finite")
    return c


def rate_eval(basis: SplineBasis, coeffs, t):
    """Rate sum_p exp(c_p) B_p(t); strictly positive for finite coeffs."""
    c = validate_coeffs(coeffs, basis)
    values = basis.design(t) @ np.exp(c)
    return float(values[0]) if np.ndim(t) == 0 else values


def rate_integral(basis: SplineBasis, coeffs, t0, t1):
    """Exposure integral of the rate over [t0, t1] (exact)."""
    c = validate_coeffs(coeffs, basis)
    values = basis.span_integrals(t0, t1) @ np.exp(c)
    scalar = np.ndim(t0) == 0 and np.ndim(t1) == 0
    return float(values[0]) if scalar else values


def rate_gradient(basis: SplineBasis, coeffs, query):
    """Partial derivatives of the rate with respect to each coefficient.

    `query` is either a time point t (gradient of rate_eval, namely
    exp(c_p) B_p(t)) or an interval (t0, t1) (gradient of rate_integral,
    namely exp(c_p) * integral of B_p).
    """
    c = validate_coeffs(coeffs, basis)
    if isinstance(query, (tuple, list)) and len(query) == 2:
        rows = basis.span_integrals(query[0], query[1])
    else:
        rows = basis.design(query)
    return np.exp(c) * rows[0]

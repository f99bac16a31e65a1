"""Conformally flat circle bundles over compact oriented surfaces.

Three pieces:

* :func:`catalog` lists the constant-curvature solutions ``H (H^2 - K) = 0``
  by genus and degree.
* :func:`nonexistence_certificate` rules out a non-constant curvature function
  on the sphere. The boundary relations at the two critical points,

      abeqn:  B^2 + 2 alpha + A^2 = 0
      leqn:   4 pi / c + A^3 + alpha A = 0,   4 pi / c + B^3 + alpha B = 0,

  are eliminated by hand into ``4 pi / c = 0``, and a grid scan over a
  parameter box reports how far the residual vector stays from zero.
* :func:`flat_holonomy` and :func:`lattice_reduce` handle the ``2g``-torus of
  flat connections for genus ``g >= 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NoSuchBundleError, ParameterError

TWO_PI = 2.0 * math.pi
IDENTITY_TOL = 1e-12


@dataclass(frozen=True)
class ClassificationRecord:
    genus: int
    degree: int
    H: Fraction
    K: Fraction
    space_kind: str
    space_curvature: Fraction | None
    moduli_dim: int

    def __post_init__(self):
        if self.H * (self.H * self.H - self.K) != 0:
            raise AssertionError("catalog record violates H (H^2 - K) = 0")

    def as_dict(self) -> dict:
        def num(x):
            return None if x is None else float(x)

        return {
            "genus": self.genus,
            "degree": self.degree,
            "H": num(self.H),
            "K": num(self.K),
            "H_exact": str(self.H),
            "K_exact": str(self.K),
            "space_kind": self.space_kind,
            "space_curvature": num(self.space_curvature),
            "moduli_dim": self.moduli_dim,
        }


def catalog(genus: int, degree: int) -> ClassificationRecord:
    """Constant-curvature conformally flat circle bundle of the given topology.

    Base metrics are normalized: the round unit sphere for ``degree = 0``,
    ``K = 0`` on the torus and ``K = -1`` for ``genus >= 2``. For ``degree = d != 0``
    over the sphere, ``H = -2/d`` and ``K = H^2``; the total space is
    ``L(|d|, 1)`` with curvature ``1/d^2``.
    """
    if int(genus) != genus or genus < 0:
        raise ParameterError("genus must be a nonnegative integer")
    if int(degree) != degree:
        raise ParameterError("degree must be an integer")
    genus, degree = int(genus), int(degree)
    if genus == 0 and degree == 0:
        return ClassificationRecord(0, 0, Fraction(0), Fraction(1), "product_S2xS1", None, 0)
    if genus == 0:
        H = Fraction(-2, degree)
        return ClassificationRecord(
            0, degree, H, H * H, f"lens({abs(degree)},1)", Fraction(1, degree * degree), 0
        )
    if degree != 0:
        raise NoSuchBundleError(
            f"no conformally flat circle metric on a degree {degree} bundle over genus {genus}"
        )
    K = Fraction(0) if genus == 1 else Fraction(-1)
    curv = Fraction(0) if genus == 1 else None
    return ClassificationRecord(genus, 0, Fraction(0), K, "flat_bundle", curv, 2 * genus)


# -- non-existence ---------------------------------------------------------


def abeqn(A, B, alpha, c):
    return B * B + 2.0 * alpha + A * A


def leqn(X, alpha, c):
    return 4.0 * math.pi / c + X * X * X + alpha * X


@dataclass(frozen=True)
class EliminationStep:
    statement: str
    identity: str
    consequence: str
    max_error: float
    checked_points: int


@dataclass(frozen=True)
class NonexistenceCertificate:
    elimination_trace: list
    grid_min_residual: float
    grid_box: dict
    conclusion: bool
    grid_n: int = 0
    argmin: dict = field(default_factory=dict)
    final_constraint: str = ""

    @property
    def trace_complete(self) -> bool:
        return len(self.elimination_trace) == len(_STEPS) and all(
            s.max_error <= IDENTITY_TOL for s in self.elimination_trace
        )

    def __post_init__(self):
        if self.conclusion and not (self.trace_complete and self.grid_min_residual > 0):
            raise AssertionError("conclusion requires a completed trace and a positive grid minimum")

    def as_dict(self) -> dict:
        return {
            "conclusion": self.conclusion,
            "grid_n": self.grid_n,
            "grid_box": self.grid_box,
            "grid_min_residual": self.grid_min_residual,
            "final_constraint": self.final_constraint,
            "trace_complete": self.trace_complete,
            "argmin": self.argmin,
            "elimination_trace": [vars(s) for s in self.elimination_trace],
        }


# Each identity is (statement, identity text, consequence, lhs, rhs).
_STEPS = (
    (
        "subtract the two critical-point relations",
        "leqn(A) - leqn(B) = (A - B)(A^2 + A B + B^2 + alpha)",
        "A != B  =>  alpha = -(A^2 + A B + B^2)",
        lambda A, B, a, c: leqn(A, a, c) - leqn(B, a, c),
        lambda A, B, a, c: (A - B) * (A * A + A * B + B * B + a),
    ),
    (
        "substitute alpha into abeqn",
        "abeqn(A, B, -(A^2 + A B + B^2)) = -(A + B)^2",
        "B = -A  and then  alpha = -A^2",
        lambda A, B, a, c: abeqn(A, B, -(A * A + A * B + B * B), c),
        lambda A, B, a, c: -((A + B) ** 2),
    ),
    (
        "substitute B = -A, alpha = -A^2 into leqn(A)",
        "leqn(A, -A^2) = 4 pi / c",
        "4 pi / c = 0: unsatisfiable for finite c",
        lambda A, B, a, c: leqn(A, -A * A, c),
        lambda A, B, a, c: 4.0 * math.pi / c + 0.0 * A,
    ),
)

FINAL_CONSTRAINT = "4 pi / c = 0"


def _validate_box(box: dict):
    try:
        bounds = {k: tuple(float(v) for v in box[k]) for k in ("A", "B", "alpha", "c")}
        gap = float(box.get("min_gap", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"box needs A, B, alpha, c intervals: {exc}") from None
    for k, (lo, hi) in bounds.items():
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ParameterError(f"bad interval for {k}: {(lo, hi)}")
    clo, chi = bounds["c"]
    if clo <= 0 <= chi:
        raise ParameterError("c interval touches c = 0")
    if not gap > 0:
        raise ParameterError("box touches the diagonal A = B; set min_gap > 0")
    return bounds, gap


def elimination_trace(box: dict, n_points: int = 100, seed: int = 0) -> list:
    """The three elimination steps, each identity re-checked at random points of ``box``."""
    bounds, _ = _validate_box(box)
    rng = np.random.default_rng(seed)
    pts = [rng.uniform(*bounds[k], size=n_points) for k in ("A", "B", "alpha", "c")]
    steps = []
    for statement, identity, consequence, lhs, rhs in _STEPS:
        err = float(np.max(np.abs(lhs(*pts) - rhs(*pts))))
        steps.append(EliminationStep(statement, identity, consequence, err, n_points))
    return steps


def residual_norm(A, B, alpha, c):
    return np.sqrt(abeqn(A, B, alpha, c) ** 2 + leqn(A, alpha, c) ** 2 + leqn(B, alpha, c) ** 2)


def grid_scan(box: dict, grid_n: int):
    """Minimum residual norm over the ``grid_n^4`` box grid, skipping cells with ``|A-B| < min_gap``."""
    bounds, gap = _validate_box(box)
    axes = {k: np.linspace(*bounds[k], int(grid_n)) for k in ("A", "B", "alpha", "c")}
    Ag, Bg = np.meshgrid(axes["A"], axes["B"], indexing="ij")
    keep = np.abs(Ag - Bg) >= gap
    A, B = Ag[keep], Bg[keep]
    al, c = np.meshgrid(axes["alpha"], axes["c"], indexing="ij")
    al, c = al.ravel(), c.ravel()
    best, where = math.inf, None
    chunk = max(1, 200_000 // len(al))
    for s in range(0, len(A), chunk):
        a, b = A[s : s + chunk, None], B[s : s + chunk, None]
        res = residual_norm(a, b, al[None, :], c[None, :])
        i = np.unravel_index(np.argmin(res), res.shape)
        if res[i] < best:
            best = float(res[i])
            where = dict(A=float(a[i[0], 0]), B=float(b[i[0], 0]), alpha=float(al[i[1]]), c=float(c[i[1]]))
    if where is None:
        raise ParameterError("no grid cell satisfies |A - B| >= min_gap")
    return best, where


def implied_integrals(A, B, alpha, c) -> dict:
    """Degree and Gauss-Bonnet mismatch implied by a parameter point (informational)."""
    degree = -c * (B * B - A * A) / (4.0 * math.pi)
    gauss_bonnet = 0.5 * c * (B**3 + alpha * B - A**3 - alpha * A) - 4.0 * math.pi
    return {"degree": degree, "gauss_bonnet_mismatch": gauss_bonnet}


def nonexistence_certificate(box: dict, grid_n: int = 50, seed: int = 0) -> NonexistenceCertificate:
    if int(grid_n) != grid_n or grid_n < 50:
        raise ParameterError("grid_n must be an integer >= 50")
    trace = elimination_trace(box, seed=seed)
    best, where = grid_scan(box, int(grid_n))
    where.update(implied_integrals(**where))
    complete = all(s.max_error <= IDENTITY_TOL for s in trace)
    bounds, gap = _validate_box(box)
    grid_box = {k: list(v) for k, v in bounds.items()}
    grid_box["min_gap"] = gap
    return NonexistenceCertificate(
        elimination_trace=trace,
        grid_min_residual=best,
        grid_box=grid_box,
        conclusion=bool(complete and best > 0),
        grid_n=int(grid_n),
        argmin=where,
        final_constraint=FINAL_CONSTRAINT if complete else "",
    )


# -- flat connections --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HolonomyCharacter:
    """Character ``H_1(M, Z) -> S^1`` given by its ``2g`` periods (radians) on a homology basis."""

    genus: int
    coefficients: tuple

    def __post_init__(self):
        if int(self.genus) != self.genus or self.genus < 1:
            raise ParameterError("genus must be >= 1")
        coeffs = tuple(float(x) for x in self.coefficients)
        if len(coeffs) != 2 * self.genus:
            raise ParameterError(f"need {2 * self.genus} coefficients, got {len(coeffs)}")
        if not all(math.isfinite(x) for x in coeffs):
            raise ParameterError("coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def values(self) -> np.ndarray:
        return np.exp(1j * np.asarray(self.coefficients))

    def __mul__(self, other: "HolonomyCharacter") -> "HolonomyCharacter":
        if other.genus != self.genus:
            raise ParameterError("genus mismatch")
        return HolonomyCharacter(self.genus, tuple(a + b for a, b in zip(self.coefficients, other.coefficients)))

    def equivalent(self, other: "HolonomyCharacter", tol: float = IDENTITY_TOL) -> bool:
        """True iff the periods differ by ``2 pi`` times integers, up to ``tol``."""
        if other.genus != self.genus:
            return False
        d = (np.asarray(self.coefficients) - np.asarray(other.coefficients)) / TWO_PI
        return bool(np.all(np.abs(d - np.round(d)) * TWO_PI <= tol))

    __eq__ = equivalent
    __hash__ = None


def flat_holonomy(genus: int, coefficients) -> HolonomyCharacter:
    return HolonomyCharacter(int(genus), tuple(coefficients))


def lattice_reduce(ch: HolonomyCharacter) -> HolonomyCharacter:
    """Representative with every period in ``[0, 2 pi)``."""
    red = np.mod(np.asarray(ch.coefficients), TWO_PI)
    red[red >= TWO_PI] = 0.0
    return HolonomyCharacter(ch.genus, tuple(red))

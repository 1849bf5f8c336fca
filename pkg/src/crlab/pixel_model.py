"""Single-pixel temporal prediction with an occluded predictor.

The current pixel X is uniform on 0..M-1. Its temporal prediction X_p
equals X unless an occlusion happened (probability p), in which case X_p
is an independent uniform draw:

    Pr(x_p | x) = p/M + (1 - p) * [x_p == x]

The decoder never sees X_p itself, only a quantized version X^_p with
step Q (the bottleneck). R = X - X_p is the plain signed residual. All
joint masses are formed in exact rational arithmetic and rounded to
float64 once, so the entropy reports are exact to float precision.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InputError, InternalConsistencyError
from .info_measures import entropy
from .prob_core import (
    JointPMF,
    adjoin_difference,
    adjoin_map,
    as_exact,
    integer_alphabet,
    quantizer_map,
)

__all__ = [
    "EntropyReport",
    "PixelModelParams",
    "REPORT_FIELDS",
    "build_joint",
    "conditional_worse_region",
    "entropy_report",
    "sweep_p",
]

IDENTITY_TOL = 1e-9


@dataclass(frozen=True)
class PixelModelParams:
    """Model parameters: alphabet size M, occlusion probability p, step Q.

    p and Q are coerced to exact rationals (floats are read by their
    shortest decimal repr, so Q=1.4 means exactly 7/5).
    """

    p: Fraction
    Q: Fraction
    M: int = 256

    def __post_init__(self):
        object.__setattr__(self, "p", as_exact(self.p))
        object.__setattr__(self, "Q", as_exact(self.Q))
        object.__setattr__(self, "M", int(self.M))
        if self.M < 2:
            raise InputError(f"alphabet size must be >= 2, got {self.M}")
        if not 0 <= self.p <= 1:
            raise InputError(f"occlusion probability must be in [0, 1], got {self.p}")
        if self.Q < 1:
            raise InputError(f"quantizer step must be >= 1, got {self.Q}")


def build_joint(params: PixelModelParams) -> JointPMF:
    """Exact joint over (x, xp, xq, r) for the given parameters."""
    M, p = params.M, params.p
    ax = integer_alphabet("x", 0, M - 1)
    axp = integer_alphabet("xp", 0, M - 1)

    diag = p / M**2 + (1 - p) * Fraction(1, M)
    off = p / M**2
    if off == 0:
        idx = np.repeat(np.arange(M, dtype=np.intp)[:, None], 2, axis=1)
        probs = np.full(M, float(diag))
    else:
        grid = np.indices((M, M), dtype=np.intp).reshape(2, -1).T
        idx = np.ascontiguousarray(grid)
        probs = np.full(M * M, float(off))
        on_diag = idx[:, 0] == idx[:, 1]
        probs[on_diag] = float(diag)

    pmf = JointPMF((ax, axp), idx, probs, _trusted=True)
    pmf = adjoin_map(pmf, "xp", quantizer_map(axp, params.Q, "xq"), "xq")
    return adjoin_difference(pmf, "x", "xp", "r")


@dataclass(frozen=True)
class EntropyReport:
    """All Fig.-style rate quantities for one (Q, p) grid point, in bits.

    Field names double as the sweep CSV header; Xphat denotes the
    quantized predictor.
    """

    Q: float
    p: float
    H_R: float
    H_X_given_Xp: float
    H_X_given_Xphat: float
    H_R_given_Xphat: float
    H_R_given_Xp: float
    I_X_Xp: float
    I_X_Xphat: float
    I_R_Xp: float
    I_R_Xphat: float

    def row(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in REPORT_FIELDS)


REPORT_FIELDS = tuple(f.name for f in fields(EntropyReport))


def entropy_report(params: PixelModelParams, pmf: JointPMF | None = None) -> EntropyReport:
    """Evaluate the nine entropy/information measures on the exact joint.

    The conditioning ladder H(R|Xp) <= H(R|Xphat) <= H(R) and the
    residual/conditional equivalence H(X|Xp) = H(R|Xp) are checked here;
    a violation beyond 1e-9 means the joint was built wrong.
    """
    if pmf is None:
        pmf = build_joint(params)

    memo: dict[tuple[str, ...], float] = {}

    def h(*names: str) -> float:
        if names not in memo:
            memo[names] = entropy(pmf, names)
        return memo[names]

    rep = EntropyReport(
        Q=float(params.Q),
        p=float(params.p),
        H_R=h("r"),
        H_X_given_Xp=h("x", "xp") - h("xp"),
        H_X_given_Xphat=h("x", "xq") - h("xq"),
        H_R_given_Xphat=h("r", "xq") - h("xq"),
        H_R_given_Xp=h("r", "xp") - h("xp"),
        I_X_Xp=h("x") + h("xp") - h("x", "xp"),
        I_X_Xphat=h("x") + h("xq") - h("x", "xq"),
        I_R_Xp=h("r") + h("xp") - h("r", "xp"),
        I_R_Xphat=h("r") + h("xq") - h("r", "xq"),
    )
    if not (rep.H_R_given_Xp <= rep.H_R_given_Xphat + IDENTITY_TOL
            and rep.H_R_given_Xphat <= rep.H_R + IDENTITY_TOL):
        raise InternalConsistencyError(
            f"conditioning ladder violated at {params}: "
            f"{rep.H_R_given_Xp}, {rep.H_R_given_Xphat}, {rep.H_R}"
        )
    if abs(rep.H_X_given_Xp - rep.H_R_given_Xp) > IDENTITY_TOL:
        raise InternalConsistencyError(
            f"H(X|Xp) != H(R|Xp) at {params}: "
            f"{rep.H_X_given_Xp} vs {rep.H_R_given_Xp}"
        )
    return rep


def sweep_p(p_grid: Sequence, Q_list: Sequence, M: int = 256) -> list[EntropyReport]:
    """One EntropyReport per (p, Q) pair, rows ordered by (Q, p)."""
    ps = [as_exact(v) for v in p_grid]
    qs = [as_exact(v) for v in Q_list]
    if not ps or not qs:
        raise InputError("p grid and Q list must be nonempty")
    out = []
    for q in sorted(set(qs)):
        for p in sorted(set(ps)):
            out.append(entropy_report(PixelModelParams(p=p, Q=q, M=M)))
    return out


def conditional_worse_region(reports: Sequence[EntropyReport]) -> list[EntropyReport]:
    """Grid points where the bottlenecked conditional coder loses to the
    plain residual coder, i.e. H(X|Xphat) > H(R)."""
    return [r for r in reports if r.H_X_given_Xphat > r.H_R]

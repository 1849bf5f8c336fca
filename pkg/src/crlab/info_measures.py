"""Shannon measures over exact joint PMFs.

Entropy, conditional entropy, mutual information, and conditional mutual
information, all in bits, all evaluated from one shared log-sum kernel so
that identities formed by subtracting measures cancel rounding
consistently. 0*log(0) is 0 throughout. Results are clamped at -1e-12:
anything more negative indicates a defect and raises instead of clamping.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import InputError, InternalConsistencyError
from .prob_core import JointPMF, group_weights

__all__ = [
    "NEG_TOL",
    "conditional_entropy",
    "conditional_mutual_information",
    "entropy",
    "mutual_information",
]

NEG_TOL = 1e-12
_CHUNK = 4096


def _clamp_bits(value: float, what: str) -> float:
    if value < -NEG_TOL:
        raise InternalConsistencyError(f"{what} = {value!r} is negative beyond {NEG_TOL}")
    return 0.0 if value < 0.0 else float(value)


def _plogp_sum(weights: np.ndarray) -> float:
    """-sum(w * log2 w) with chunked pairwise partials folded by fsum."""
    w = weights[weights > 0.0]
    if w.size == 0:
        return 0.0
    terms = w * np.log2(w)
    partials = np.add.reduceat(terms, np.arange(0, terms.size, _CHUNK))
    return -math.fsum(partials.tolist())


def _names(vars_) -> tuple[str, ...]:
    if isinstance(vars_, str):
        return (vars_,)
    out = tuple(vars_)
    if not out:
        raise InputError("need at least one variable name")
    if len(set(out)) != len(out):
        raise InputError(f"repeated variable names in {out}")
    return out


def _disjoint(*groups: Sequence[str]):
    seen: set[str] = set()
    for g in groups:
        for n in g:
            if n in seen:
                raise InputError(f"variable {n!r} appears in more than one argument")
            seen.add(n)


def entropy(pmf: JointPMF, vars_) -> float:
    """Joint entropy H(vars) in bits."""
    names = _names(vars_)
    _, weights = group_weights(pmf, names)
    h = _plogp_sum(weights)
    cap = sum(math.log2(len(pmf.alphabet(n))) for n in names)
    if h > cap + 1e-9:
        raise InternalConsistencyError(f"H{names} = {h} above log2 alphabet bound {cap}")
    return _clamp_bits(h, f"H{names}")


def conditional_entropy(pmf: JointPMF, target, given=()) -> float:
    """H(target | given) = H(target, given) - H(given)."""
    t = _names(target)
    g = _names(given) if given else ()
    _disjoint(t, g)
    if not g:
        return entropy(pmf, t)
    return _clamp_bits(entropy(pmf, t + g) - entropy(pmf, g), f"H({t}|{g})")


def mutual_information(pmf: JointPMF, a, b) -> float:
    """I(a; b) = H(a) + H(b) - H(a, b)."""
    na, nb = _names(a), _names(b)
    _disjoint(na, nb)
    value = entropy(pmf, na) + entropy(pmf, nb) - entropy(pmf, na + nb)
    return _clamp_bits(value, f"I({na};{nb})")


def conditional_mutual_information(pmf: JointPMF, a, b, given=()) -> float:
    """I(a; b | given) via the four-entropy expansion."""
    na, nb = _names(a), _names(b)
    g = _names(given) if given else ()
    _disjoint(na, nb, g)
    if not g:
        return mutual_information(pmf, na, nb)
    value = (
        entropy(pmf, na + g)
        + entropy(pmf, nb + g)
        - entropy(pmf, na + nb + g)
        - entropy(pmf, g)
    )
    return _clamp_bits(value, f"I({na};{nb}|{g})")

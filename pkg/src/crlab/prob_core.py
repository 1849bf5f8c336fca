"""Exact finite joint probability distributions.

A :class:`JointPMF` carries named finite variables and a strictly positive
probability weight for every support point. The support is stored as one
row of alphabet indices per point (a coordinate list), so adjoining a
deterministic function of an existing variable adds a derived column
instead of a new dense axis. The largest in-scope object, a four-variable
pixel-model joint at M=256, therefore stays at 256*256 support points.

Symbols are exact numbers (int or Fraction). Floats given as symbols or
quantizer steps are read through their shortest decimal representation, so
a step of 1.4 means exactly 7/5 and cell boundaries never depend on binary
rounding.

All values are immutable after construction and all operations are pure.
Sampling takes an explicit seed per call; there is no hidden global state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "Alphabet",
    "DeterministicMap",
    "JointPMF",
    "Symbol",
    "adjoin_difference",
    "adjoin_channel",
    "adjoin_map",
    "adjoin_sum",
    "as_exact",
    "condition",
    "difference_alphabet",
    "integer_alphabet",
    "marginalize",
    "quantizer_map",
    "random_pmf",
    "sample",
    "splitmix64",
    "sum_alphabet",
]

SUM_TOL = 1e-12

Symbol = Union[int, Fraction]


def as_exact(value) -> Symbol:
    """Coerce a number to an exact int or Fraction.

    Floats go through repr, so 1.4 becomes Fraction(7, 5), not the binary
    float it is stored as.
    """
    if isinstance(value, bool):
        raise InputError("booleans are not valid symbols")
    if isinstance(value, int):
        return value
    if isinstance(value, Fraction):
        return int(value) if value.denominator == 1 else value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise InputError(f"non-finite symbol value: {value!r}")
        return as_exact(Fraction(repr(value)))
    if isinstance(value, str):
        try:
            return as_exact(Fraction(value))
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse {value!r} as an exact number") from exc
    raise InputError(f"unsupported symbol type: {type(value).__name__}")


@dataclass(frozen=True)
class Alphabet:
    """Named ordered list of distinct exact symbol values."""

    name: str
    symbols: tuple[Symbol, ...]

    def __post_init__(self):
        symbols = tuple(as_exact(s) for s in self.symbols)
        if len(symbols) < 1:
            raise InputError(f"alphabet {self.name!r} is empty")
        for a, b in zip(symbols, symbols[1:]):
            if not a < b:
                raise InputError(
                    f"alphabet {self.name!r} symbols must be strictly ascending"
                )
        object.__setattr__(self, "symbols", symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    @cached_property
    def index(self) -> dict:
        return {s: i for i, s in enumerate(self.symbols)}

    @cached_property
    def is_contiguous_int(self) -> bool:
        s = self.symbols
        return all(isinstance(v, int) for v in s) and s[-1] - s[0] == len(s) - 1


def integer_alphabet(name: str, lo: int, hi: int) -> Alphabet:
    """Alphabet of the consecutive integers lo..hi inclusive."""
    if hi < lo:
        raise InputError(f"empty integer range {lo}..{hi}")
    return Alphabet(name, tuple(range(lo, hi + 1)))


def _cross_alphabet(a: Alphabet, b: Alphabet, op, name: str) -> Alphabet:
    values = sorted({op(u, v) for u in a.symbols for v in b.symbols})
    return Alphabet(name, tuple(values))


def difference_alphabet(a: Alphabet, b: Alphabet, name: str = "diff") -> Alphabet:
    """All values u - v for u in a, v in b (full cross set, support free)."""
    return _cross_alphabet(a, b, lambda u, v: u - v, name)


def sum_alphabet(a: Alphabet, b: Alphabet, name: str = "sum") -> Alphabet:
    """All values u + v for u in a, v in b."""
    return _cross_alphabet(a, b, lambda u, v: u + v, name)


@dataclass(frozen=True)
class DeterministicMap:
    """Total map from a domain alphabet into a codomain alphabet."""

    domain: Alphabet
    codomain: Alphabet
    images: tuple[Symbol, ...]

    def __post_init__(self):
        images = tuple(as_exact(v) for v in self.images)
        if len(images) != len(self.domain):
            raise InputError("map must list one image per domain symbol")
        missing = [v for v in images if v not in self.codomain.index]
        if missing:
            raise InputError(f"images {missing[:3]} not in codomain alphabet")
        object.__setattr__(self, "images", images)

    @cached_property
    def image_idx(self) -> np.ndarray:
        arr = np.array([self.codomain.index[v] for v in self.images], dtype=np.intp)
        arr.flags.writeable = False
        return arr

    @classmethod
    def from_callable(cls, domain: Alphabet, codomain: Alphabet, fn) -> "DeterministicMap":
        return cls(domain, codomain, tuple(fn(s) for s in domain.symbols))


def quantizer_map(domain: Alphabet, step, name: str = "quantized") -> DeterministicMap:
    """Lattice quantizer v -> floor(v/step)*step in exact rational arithmetic.

    Truncation (not round-half-up) is the convention here: on 0..M-1 with a
    step dividing M every cell has exactly step members, so the entropy lost
    by the bottleneck is exactly log2(step) bits.
    """
    q = as_exact(step)
    if q <= 0:
        raise InputError(f"quantizer step must be positive, got {step!r}")
    images = tuple(as_exact((Fraction(v) / q).__floor__() * q) for v in domain.symbols)
    codomain = Alphabet(name, tuple(sorted(set(images))))
    return DeterministicMap(domain, codomain, images)


class JointPMF:
    """Joint distribution over named finite variables, support-point form.

    variables: ordered (name, Alphabet) pairs.
    idx: (n_points, n_vars) alphabet indices, one row per support point.
    probs: (n_points,) strictly positive weights summing to 1 within 1e-12.
    """

    __slots__ = ("variables", "idx", "probs", "__dict__")

    def __init__(self, variables, idx, probs, *, _trusted: bool = False):
        variables = tuple(
            (v.name, v) if isinstance(v, Alphabet) else (str(v[0]), v[1])
            for v in variables
        )
        idx = np.ascontiguousarray(idx, dtype=np.intp)
        probs = np.ascontiguousarray(probs, dtype=np.float64)
        if not _trusted:
            variables, idx, probs = _validate_pmf(variables, idx, probs)
        idx.flags.writeable = False
        probs.flags.writeable = False
        self.variables = variables
        self.idx = idx
        self.probs = probs

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    @property
    def n_points(self) -> int:
        return self.idx.shape[0]

    def var_pos(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InputError(f"unknown variable {name!r}; have {self.names}") from None

    def alphabet(self, name: str) -> Alphabet:
        return self.variables[self.var_pos(name)][1]

    def column_values(self, name: str) -> list:
        """Symbol values of one variable, one entry per support point."""
        c = self.var_pos(name)
        syms = self.variables[c][1].symbols
        return [syms[i] for i in self.idx[:, c]]

    def __repr__(self) -> str:
        vs = ", ".join(f"{n}[{len(a)}]" for n, a in self.variables)
        return f"JointPMF({vs}; {self.n_points} support points)"


def _validate_pmf(variables, idx, probs):
    names = [n for n, _ in variables]
    if len(set(names)) != len(names):
        raise InputError(f"duplicate variable names in {names}")
    if idx.ndim != 2 or idx.shape[1] != len(variables):
        raise InputError("index matrix must be (n_points, n_vars)")
    if probs.shape != (idx.shape[0],):
        raise InputError("probability vector length must match support size")
    if not np.all(np.isfinite(probs)) or np.any(probs < 0):
        raise InputError("probabilities must be finite and nonnegative")
    for c, (name, alph) in enumerate(variables):
        col = idx[:, c]
        if col.size and (col.min() < 0 or col.max() >= len(alph)):
            raise InputError(f"index out of range for variable {name!r}")
    keep = probs > 0
    idx, probs = idx[keep], probs[keep]
    if idx.shape[0] == 0:
        raise InputError("distribution has empty support")
    total = float(probs.sum())
    if abs(total - 1.0) > SUM_TOL:
        raise InputError(f"probabilities sum to {total!r}, not 1 within {SUM_TOL}")
    key = _ravel_rows(idx, [len(a) for _, a in variables])
    if key is None:
        _, first = np.unique(idx, axis=0, return_index=True)
        if first.size != idx.shape[0]:
            raise InputError("duplicate support points")
        order = np.lexsort(idx.T[::-1])
    else:
        order = np.argsort(key, kind="stable")
        if np.any(np.diff(key[order]) == 0):
            raise InputError("duplicate support points")
    return tuple(variables), np.ascontiguousarray(idx[order]), np.ascontiguousarray(probs[order])


def _ravel_rows(idx: np.ndarray, sizes: Sequence[int]):
    """Mixed-radix key per row, or None if the radix product overflows."""
    total = 1
    for s in sizes:
        total *= int(s)
    if total > 2**62:
        return None
    key = np.zeros(idx.shape[0], dtype=np.int64)
    for c, s in enumerate(sizes):
        key = key * int(s) + idx[:, c].astype(np.int64)
    return key


def _positions(pmf: JointPMF, names: Iterable[str]) -> list[int]:
    names = list(names)
    if len(set(names)) != len(names):
        raise InputError(f"repeated variable names in {names}")
    return [pmf.var_pos(n) for n in names]


def group_weights(pmf: JointPMF, names: Sequence[str]):
    """Unique sub-rows over the named variables and their total weights.

    Returns (rows, weights) with rows sorted by mixed-radix key. This is the
    grouping kernel behind marginalization and every entropy evaluation.
    """
    cols = _positions(pmf, names)
    if not cols:
        raise InputError("need at least one variable to group by")
    sub = pmf.idx[:, cols]
    sizes = [len(pmf.variables[c][1]) for c in cols]
    key = _ravel_rows(sub, sizes)
    if key is None:
        rows, inverse = np.unique(sub, axis=0, return_inverse=True)
    else:
        _, first, inverse = np.unique(key, return_index=True, return_inverse=True)
        rows = sub[first]
    weights = np.bincount(inverse, weights=pmf.probs, minlength=rows.shape[0])
    return rows, weights


def marginalize(pmf: JointPMF, keep: Sequence[str]) -> JointPMF:
    """Sum out every variable not named in keep; result follows keep order."""
    if isinstance(keep, str):
        keep = [keep]
    rows, weights = group_weights(pmf, keep)
    variables = [(n, pmf.alphabet(n)) for n in keep]
    # weights of grouped positive rows stay positive and keys are unique
    return JointPMF(variables, rows, weights, _trusted=True)


def condition(pmf: JointPMF, var: str, value) -> JointPMF:
    """Normalized slice at var == value, over the remaining variables."""
    c = pmf.var_pos(var)
    if len(pmf.variables) == 1:
        raise InputError("cannot condition away the only variable")
    value = as_exact(value)
    vi = pmf.variables[c][1].index.get(value)
    if vi is None:
        raise InputError(f"{value!r} is not a symbol of variable {var!r}")
    mask = pmf.idx[:, c] == vi
    total = float(pmf.probs[mask].sum())
    if total <= 0.0:
        raise DomainError(f"conditioning event {var}={value!r} has probability 0")
    cols = [i for i in range(len(pmf.variables)) if i != c]
    variables = [pmf.variables[i] for i in cols]
    return JointPMF(variables, pmf.idx[np.ix_(mask.nonzero()[0], cols)],
                    pmf.probs[mask] / total, _trusted=True)


def _check_new_name(pmf: JointPMF, new_var: str):
    if new_var in pmf.names:
        raise InputError(f"variable name {new_var!r} already in use")


def adjoin_map(pmf: JointPMF, source_var: str, dmap: DeterministicMap,
               new_var: str) -> JointPMF:
    """Add new_var = dmap(source_var) as a derived column."""
    _check_new_name(pmf, new_var)
    c = pmf.var_pos(source_var)
    if pmf.variables[c][1].symbols != dmap.domain.symbols:
        raise InputError(
            f"map domain does not match the alphabet of {source_var!r}"
        )
    new_col = dmap.image_idx[pmf.idx[:, c]]
    idx = np.column_stack([pmf.idx, new_col])
    variables = list(pmf.variables) + [(new_var, dmap.codomain)]
    return JointPMF(variables, idx, pmf.probs, _trusted=True)


def _adjoin_combined(pmf: JointPMF, a: str, b: str, new_var: str, sign: int,
                     codomain: Alphabet) -> JointPMF:
    _check_new_name(pmf, new_var)
    ca, cb = pmf.var_pos(a), pmf.var_pos(b)
    alph_a = pmf.variables[ca][1]
    alph_b = pmf.variables[cb][1]
    if alph_a.is_contiguous_int and alph_b.is_contiguous_int and codomain.is_contiguous_int:
        va = pmf.idx[:, ca] + int(alph_a.symbols[0])
        vb = pmf.idx[:, cb] + int(alph_b.symbols[0])
        new_col = va + sign * vb - int(codomain.symbols[0])
    else:
        # exact symbol arithmetic; only small tables reach this path
        pair_cache: dict[tuple[int, int], int] = {}
        sa, sb = alph_a.symbols, alph_b.symbols
        cindex = codomain.index
        new_col = np.empty(pmf.n_points, dtype=np.intp)
        for r, (ia, ib) in enumerate(zip(pmf.idx[:, ca], pmf.idx[:, cb])):
            k = (int(ia), int(ib))
            j = pair_cache.get(k)
            if j is None:
                j = cindex[sa[k[0]] + sign * sb[k[1]]]
                pair_cache[k] = j
            new_col[r] = j
    idx = np.column_stack([pmf.idx, new_col])
    variables = list(pmf.variables) + [(new_var, codomain)]
    return JointPMF(variables, idx, pmf.probs, _trusted=True)


def adjoin_difference(pmf: JointPMF, minuend: str, subtrahend: str,
                      new_var: str) -> JointPMF:
    """Add new_var = minuend - subtrahend; alphabet is the full cross set."""
    codomain = difference_alphabet(pmf.alphabet(minuend), pmf.alphabet(subtrahend),
                                   name=new_var)
    return _adjoin_combined(pmf, minuend, subtrahend, new_var, -1, codomain)


def adjoin_sum(pmf: JointPMF, a: str, b: str, new_var: str) -> JointPMF:
    """Add new_var = a + b; alphabet is the full cross set."""
    codomain = sum_alphabet(pmf.alphabet(a), pmf.alphabet(b), name=new_var)
    return _adjoin_combined(pmf, a, b, new_var, +1, codomain)


def adjoin_channel(pmf: JointPMF, given: str, kernel: np.ndarray,
                   alphabet: Alphabet, new_var: str) -> JointPMF:
    """Extend by a conditional distribution: new_var ~ kernel[given, :].

    kernel rows must be indexed by the alphabet of `given` and sum to 1. The
    new variable is conditionally independent of everything else given
    `given`, which is exactly the memoryless test channel construction.
    """
    _check_new_name(pmf, new_var)
    c = pmf.var_pos(given)
    kernel = np.asarray(kernel, dtype=np.float64)
    if kernel.shape != (len(pmf.alphabet(given)), len(alphabet)):
        raise InputError(
            f"kernel shape {kernel.shape} does not match |{given}| x |{new_var}|"
        )
    if np.any(kernel < 0) or np.any(np.abs(kernel.sum(axis=1) - 1.0) > SUM_TOL):
        raise InputError("kernel rows must be nonnegative and sum to 1")
    m = len(alphabet)
    n = pmf.n_points
    idx = np.repeat(pmf.idx, m, axis=0)
    new_col = np.tile(np.arange(m, dtype=np.intp), n)
    probs = (pmf.probs[:, None] * kernel[pmf.idx[:, c], :]).ravel()
    keep = probs > 0
    idx = np.column_stack([idx[keep], new_col[keep]])
    variables = list(pmf.variables) + [(new_var, alphabet)]
    return JointPMF(variables, idx, probs[keep], _trusted=True)


MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> int:
    """One splitmix64 output for the given 64-bit state."""
    z = (state + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _as_seed(seed) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise InputError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= seed <= MASK64:
        raise InputError("seed must fit in 64 bits")
    return seed


def sample(pmf: JointPMF, n: int, seed) -> list[tuple]:
    """Draw n support tuples, reproducibly for a fixed seed."""
    if not isinstance(n, int) or n < 0:
        raise InputError(f"sample count must be a nonnegative integer, got {n!r}")
    if n == 0:
        return []
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(_as_seed(seed))
    picks = rng.choice(pmf.n_points, size=n, p=pmf.probs / pmf.probs.sum())
    columns = [pmf.column_values(name) for name in pmf.names]
    return [tuple(col[i] for col in columns) for i in picks]


def random_pmf(shape: Sequence[int], concentration: float = 1.0, *, seed,
               names: Sequence[str] | None = None) -> JointPMF:
    """Dirichlet-distributed joint over a full integer grid of the given shape."""
    shape = [int(s) for s in shape]
    if not shape or any(s < 1 for s in shape):
        raise InputError(f"all alphabet sizes must be >= 1, got {shape}")
    if not (concentration > 0):
        raise InputError(f"concentration must be positive, got {concentration!r}")
    if names is None:
        names = [f"v{i}" for i in range(len(shape))]
    if len(names) != len(shape):
        raise InputError("need one name per alphabet size")
    rng = seed if isinstance(seed, np.random.Generator) \
        else np.random.default_rng(_as_seed(seed))
    cells = int(np.prod(shape))
    probs = rng.dirichlet(np.full(cells, float(concentration)))
    idx = np.indices(shape).reshape(len(shape), -1).T
    variables = [(n, integer_alphabet(n, 0, s - 1)) for n, s in zip(names, shape)]
    return JointPMF(variables, idx, probs)

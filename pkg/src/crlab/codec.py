"""Lossless codecs for the three coding paradigms over (x, x_p) sequences.

Paradigms (byte values fixed in the bitstream header):

    0 residual               code r = x - x_p, no context
    1 conditional            code x, context = quantized prediction
    2 conditional-residual   code r, context = quantized prediction

Models are static frequency tables derived from the exact pixel-model
PMF, quantized to a fixed total T = 2^16 so that encoder and decoder
agree bit-exactly without adaptation.

Bitstream layout (big-endian), fixed so independent implementations
interoperate:

    offset  size  field
    0       4     magic "CRLB"
    4       1     format version (1)
    5       1     paradigm byte (0, 1, 2)
    6       2     alphabet size M
    8       8     symbol count n
    16      -     payload: range-coded bytes (absent when n = 0)

The payload is produced by a 32-bit range coder with byte-wise
renormalization and carry propagation via pending-byte counting: the
encoder keeps a 33-bit low accumulator; when a carry reaches the cached
byte it increments the cache and turns the run of pending 0xFF bytes
into 0x00s. Each symbol narrows the range by (start, size, T) taken
from the model's cumulative table. The decoder mirrors the arithmetic
exactly, consuming 5 priming bytes and then one byte per encoder
renormalization, so an intact stream is consumed in full and a
truncated one raises IntegrityError.
"""

from __future__ import annotations

import struct
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    FormatError,
    InputError,
    IntegrityError,
    ModelCoverageError,
)
from .pixel_model import PixelModelParams, build_joint
from .prob_core import integer_alphabet, marginalize, quantizer_map, sample

__all__ = [
    "Bitstream",
    "MAGIC",
    "PARADIGMS",
    "PARADIGM_NAMES",
    "ProbabilityModel",
    "RangeDecoder",
    "RangeEncoder",
    "TOTAL",
    "VERSION",
    "build_model",
    "decode",
    "encode",
    "expected_rate",
    "measure_rate",
    "quantize_freq",
    "sample_pairs",
]

MAGIC = b"CRLB"
VERSION = 1
TOTAL = 1 << 16

PARADIGMS = {"residual": 0, "conditional": 1, "conditional-residual": 2}
PARADIGM_NAMES = {v: k for k, v in PARADIGMS.items()}

_TOP = 1 << 24
_MASK32 = 0xFFFFFFFF
_HEADER = struct.Struct(">4sBBHQ")


class RangeEncoder:
    """Single-stream range encoder; not reusable after finish()."""

    def __init__(self):
        self._low = 0
        self._range = _MASK32
        self._cache = 0
        self._cache_size = 1
        self._out = bytearray()

    def encode(self, start: int, size: int, total: int) -> None:
        r = self._range // total
        self._low += start * r
        self._range = size * r
        while self._range < _TOP:
            self._range = (self._range << 8) & _MASK32
            self._shift_low()

    def _shift_low(self) -> None:
        low = self._low
        if (low & _MASK32) < 0xFF000000 or low > _MASK32:
            carry = low >> 32
            out = self._out
            out.append((self._cache + carry) & 0xFF)
            filler = (0xFF + carry) & 0xFF
            for _ in range(self._cache_size - 1):
                out.append(filler)
            self._cache = (low >> 24) & 0xFF
            self._cache_size = 0
        self._cache_size += 1
        self._low = (low << 8) & _MASK32

    def finish(self) -> bytes:
        for _ in range(5):
            self._shift_low()
        return bytes(self._out)


class RangeDecoder:
    """Mirror of RangeEncoder over a fixed byte payload."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0
        self._range = _MASK32
        self._code = 0
        self._r = 1
        for _ in range(5):
            self._code = ((self._code << 8) | self._next_byte()) & _MASK32

    def _next_byte(self) -> int:
        pos = self._pos
        if pos >= len(self._data):
            raise IntegrityError("bitstream truncated mid-symbol")
        self._pos = pos + 1
        return self._data[pos]

    def decode_target(self, total: int) -> int:
        """Cumulative-frequency target of the next symbol in [0, total)."""
        self._r = self._range // total
        v = self._code // self._r
        return total - 1 if v >= total else v

    def consume(self, start: int, size: int) -> None:
        """Commit the symbol whose cumulative span is [start, start+size)."""
        self._code -= start * self._r
        self._range = size * self._r
        while self._range < _TOP:
            self._range = (self._range << 8) & _MASK32
            self._code = ((self._code << 8) | self._next_byte()) & _MASK32


def quantize_freq(p: np.ndarray, total: int = TOTAL) -> np.ndarray:
    """Round a PMF to integer counts summing exactly to total.

    Floor then largest-remainder (ties to the lower index), then raise
    every positive-probability symbol to count >= 1, paying from the
    largest counts. Zero-probability symbols keep count 0.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise InputError("pmf must be a nonempty vector")
    if np.any(p < 0) or not np.isfinite(p).all():
        raise InputError("pmf entries must be finite and nonnegative")
    support = p > 0.0
    n_sup = int(support.sum())
    if n_sup == 0:
        raise InputError("pmf has empty support")
    if n_sup > total:
        raise InputError(f"support size {n_sup} exceeds frequency total {total}")
    f = np.floor(p * total).astype(np.int64)
    rem = int(total - f.sum())
    if rem < 0:
        for _ in range(-rem):
            f[int(np.argmax(f))] -= 1
    elif rem > 0:
        frac = p * total - f
        order = np.lexsort((np.arange(p.size), -frac))
        f[order[:rem]] += 1
    need = support & (f == 0)
    for _ in range(int(need.sum())):
        f[int(np.argmax(f))] -= 1
    f[need] = 1
    if f[np.argmax(f)] < 1 or int(f.sum()) != total or np.any(f[support] < 1):
        raise InputError(
            f"cannot allocate {total} counts over {n_sup} support symbols"
        )
    return f


@dataclass(frozen=True)
class ProbabilityModel:
    """Static per-context frequency tables for one paradigm.

    contexts are quantized-prediction values, or (None,) for the
    contextless residual paradigm. freq rows sum exactly to TOTAL and
    every symbol that the exact model can emit has count >= 1.
    """

    paradigm: str
    M: int
    Q: Fraction
    symbols: tuple
    contexts: tuple
    freq: np.ndarray

    def __post_init__(self):
        if self.paradigm not in PARADIGMS:
            raise InputError(
                f"unknown paradigm {self.paradigm!r}; expected one of "
                f"{sorted(PARADIGMS)}"
            )
        freq = np.ascontiguousarray(self.freq, dtype=np.int64)
        if freq.shape != (len(self.contexts), len(self.symbols)):
            raise InputError(
                f"freq shape {freq.shape} does not match "
                f"{len(self.contexts)} contexts x {len(self.symbols)} symbols"
            )
        if np.any(freq < 0):
            raise InputError("negative frequency count")
        sums = freq.sum(axis=1)
        if np.any(sums != TOTAL):
            raise InputError(f"context rows must sum to {TOTAL}, got {sums}")
        freq.flags.writeable = False
        object.__setattr__(self, "freq", freq)
        cum = np.zeros((freq.shape[0], freq.shape[1] + 1), dtype=np.int64)
        np.cumsum(freq, axis=1, out=cum[:, 1:])
        object.__setattr__(self, "_cum", cum)
        # hot-loop lookups: plain lists beat ndarray scalar indexing
        object.__setattr__(self, "_freq_rows", [list(map(int, r)) for r in freq])
        object.__setattr__(self, "_cum_rows", [list(map(int, r)) for r in cum])
        object.__setattr__(
            self, "_sym_index", {s: i for i, s in enumerate(self.symbols)}
        )
        if self.paradigm == "residual":
            ctx_of = np.zeros(self.M, dtype=np.int64)
        else:
            qmap = quantizer_map(integer_alphabet("xp", 0, self.M - 1), self.Q)
            ctx_index = {c: i for i, c in enumerate(self.contexts)}
            try:
                ctx_of = np.array(
                    [ctx_index[qmap.codomain.symbols[j]] for j in qmap.image_idx],
                    dtype=np.int64,
                )
            except KeyError as e:
                raise InputError(
                    f"model contexts do not cover quantizer image {e.args[0]!r}"
                ) from None
        object.__setattr__(self, "_ctx_of_xp", ctx_of)

    @property
    def paradigm_byte(self) -> int:
        return PARADIGMS[self.paradigm]

    @property
    def codes_residual(self) -> bool:
        """True when the coded symbol is r = x - x_p rather than x."""
        return self.paradigm != "conditional"


@dataclass(frozen=True)
class Bitstream:
    paradigm: int
    M: int
    n: int
    payload: bytes

    def __post_init__(self):
        if self.paradigm not in PARADIGM_NAMES:
            raise InputError(f"unknown paradigm byte {self.paradigm!r}")
        if not 2 <= self.M <= 0xFFFF:
            raise InputError(f"alphabet size {self.M} not encodable in 16 bits")
        if self.n < 0:
            raise InputError(f"negative symbol count {self.n}")

    def to_bytes(self) -> bytes:
        return _HEADER.pack(MAGIC, VERSION, self.paradigm, self.M, self.n) \
            + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "Bitstream":
        if len(data) < _HEADER.size:
            raise FormatError(
                f"stream too short for header: {len(data)} < {_HEADER.size}"
            )
        magic, version, paradigm, m, n = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported format version {version}")
        if paradigm not in PARADIGM_NAMES:
            raise FormatError(f"unknown paradigm byte {paradigm}")
        return cls(paradigm, m, n, bytes(data[_HEADER.size:]))


def _dense_conditionals(params: PixelModelParams, paradigm: str):
    """(context weights, p(symbol|context) rows, symbols, contexts)."""
    joint = build_joint(params)
    sym_var = "x" if paradigm == "conditional" else "r"
    sym_alph = joint.alphabet(sym_var)
    if paradigm == "residual":
        pmf = marginalize(joint, [sym_var])
        p = np.zeros((1, len(sym_alph)))
        p[0, pmf.idx[:, 0]] = pmf.probs
        return np.ones(1), p, sym_alph.symbols, (None,)
    pmf = marginalize(joint, [sym_var, "xq"])
    ctx_alph = joint.alphabet("xq")
    p = np.zeros((len(ctx_alph), len(sym_alph)))
    p[pmf.idx[:, 1], pmf.idx[:, 0]] = pmf.probs
    w = p.sum(axis=1)
    keep = w > 0.0
    p = p[keep] / w[keep, None]
    contexts = tuple(s for s, k in zip(ctx_alph.symbols, keep) if k)
    return w[keep], p, sym_alph.symbols, contexts


def build_model(params: PixelModelParams, paradigm: str) -> ProbabilityModel:
    """Static tables for one paradigm from the exact pixel-model PMF."""
    if paradigm not in PARADIGMS:
        raise InputError(
            f"unknown paradigm {paradigm!r}; expected one of {sorted(PARADIGMS)}"
        )
    _, p, symbols, contexts = _dense_conditionals(params, paradigm)
    freq = np.stack([quantize_freq(row) for row in p])
    return ProbabilityModel(paradigm, params.M, params.Q, symbols, contexts, freq)


def expected_rate(model: ProbabilityModel, params: PixelModelParams) -> float:
    """Model cross-entropy in bits/symbol: what the coder pays on average.

    Exceeds the matching conditional entropy only by the frequency
    quantization loss (zero when the exact PMF hits the count grid).
    """
    w, p, _, _ = _dense_conditionals(params, model.paradigm)
    if p.shape != model.freq.shape:
        raise InputError("model tables do not match these parameters")
    mask = p > 0.0
    if np.any(model.freq[mask] == 0):
        raise ModelCoverageError("model assigns zero count inside the support")
    bits = np.where(
        mask, -p * np.log2(np.where(mask, model.freq, 1) / TOTAL), 0.0
    )
    return float(w @ bits.sum(axis=1))


def _check_pair(x, xp, M):
    if not (isinstance(x, (int, np.integer)) and isinstance(xp, (int, np.integer))):
        raise InputError(f"symbols must be integers, got ({x!r}, {xp!r})")
    if not (0 <= x < M and 0 <= xp < M):
        raise InputError(f"pair ({x}, {xp}) outside alphabet 0..{M - 1}")


def encode(seq, paradigm: str, model: ProbabilityModel) -> Bitstream:
    """Encode (x, x_p) pairs; the quantized context is recomputed here."""
    if paradigm not in PARADIGMS:
        raise InputError(
            f"unknown paradigm {paradigm!r}; expected one of {sorted(PARADIGMS)}"
        )
    if paradigm != model.paradigm:
        raise InputError(
            f"model is for {model.paradigm!r}, requested {paradigm!r}"
        )
    pairs = list(seq)
    M = model.M
    enc = RangeEncoder()
    sym_index = model._sym_index
    ctx_of = model._ctx_of_xp
    freq_rows, cum_rows = model._freq_rows, model._cum_rows
    residual = model.codes_residual
    for x, xp in pairs:
        _check_pair(x, xp, M)
        sym = int(x) - int(xp) if residual else int(x)
        si = sym_index.get(sym)
        if si is None:
            raise InputError(f"symbol {sym!r} outside the model alphabet")
        ci = ctx_of[int(xp)]
        f = freq_rows[ci][si]
        if f == 0:
            raise ModelCoverageError(
                f"symbol {sym!r} has zero count in context {model.contexts[ci]!r}"
            )
        enc.encode(cum_rows[ci][si], f, TOTAL)
    payload = enc.finish() if pairs else b""
    return Bitstream(model.paradigm_byte, M, len(pairs), payload)


def decode(bs: Bitstream, x_p_seq, model: ProbabilityModel) -> list[int]:
    """Recover the x sequence from a stream plus the shared predictions."""
    if bs.paradigm != model.paradigm_byte:
        raise FormatError(
            f"stream paradigm {PARADIGM_NAMES[bs.paradigm]!r} does not match "
            f"model {model.paradigm!r}"
        )
    if bs.M != model.M:
        raise FormatError(f"stream M={bs.M} does not match model M={model.M}")
    preds = [int(v) for v in x_p_seq]
    if len(preds) != bs.n:
        raise FormatError(
            f"stream carries {bs.n} symbols but {len(preds)} predictions given"
        )
    if bs.n == 0:
        return []
    dec = RangeDecoder(bs.payload)
    ctx_of = model._ctx_of_xp
    freq_rows, cum_rows = model._freq_rows, model._cum_rows
    symbols = model.symbols
    residual = model.codes_residual
    M = model.M
    out = []
    for xp in preds:
        if not 0 <= xp < M:
            raise InputError(f"prediction {xp} outside alphabet 0..{M - 1}")
        ci = ctx_of[xp]
        cum = cum_rows[ci]
        v = dec.decode_target(TOTAL)
        si = bisect_right(cum, v) - 1
        dec.consume(cum[si], freq_rows[ci][si])
        sym = symbols[si]
        out.append(int(sym) + xp if residual else int(sym))
    return out


def measure_rate(bs: Bitstream, n: int) -> float:
    """Payload bits per symbol."""
    if n < 1:
        raise InputError(f"symbol count must be >= 1, got {n}")
    return 8.0 * len(bs.payload) / n


def sample_pairs(params: PixelModelParams, n: int, seed) -> list[tuple[int, int]]:
    """n iid (x, x_p) draws from the pixel model, reproducible by seed."""
    pmf = marginalize(build_joint(params), ["x", "xp"])
    return [(int(x), int(xp)) for x, xp in sample(pmf, n, seed)]

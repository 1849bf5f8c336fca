"""Rate-distortion curves for the four coding paradigms.

Slope-parametric Blahut-Arimoto on finite alphabets: for a fixed
Lagrangian slope (bits per unit distortion) the alternating updates

    W(xt|x)  ~  q(xt) * 2^(-slope * d(x, xt))      (row-normalized)
    q(xt)   <-  sum_x p(x) W(xt|x)

converge to a point on the lower convex envelope of R(D). The
conditional problem decomposes per condition value at a shared slope, so
conditional curves are weighted sums of per-cell solutions. All solves
are deterministic: uniform q init, fixed iteration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InputError, InternalConsistencyError
from .pixel_model import PixelModelParams, build_joint
from .prob_core import Alphabet, JointPMF, group_weights, marginalize

__all__ = [
    "BAConfig",
    "CONVEXITY_TOL",
    "DistortionMatrix",
    "RDCurve",
    "RDPoint",
    "blahut_arimoto",
    "compare_paradigms",
    "conditional_rd_curve",
    "default_slope_grid",
    "rd_curve",
    "squared_error",
]

CONVEXITY_TOL = 1e-6

PARADIGM_LABELS = ("res", "cond_ideal", "cond", "condres")


@dataclass(frozen=True)
class BAConfig:
    """tol is the certified suboptimality bound in nats; a returned point
    sits at most tol*log2(e) bits above the true envelope."""

    max_iters: int = 5000
    tol: float = 1e-9

    def __post_init__(self):
        if self.max_iters < 1 or not (self.tol > 0):
            raise InputError(f"bad solver config {self}")


@dataclass(frozen=True)
class DistortionMatrix:
    """d[i, j] = cost of reconstructing source symbol i as recon symbol j."""

    source: Alphabet
    recon: Alphabet
    d: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.d, dtype=np.float64)
        if d.shape != (len(self.source), len(self.recon)):
            raise InputError(
                f"distortion matrix shape {d.shape} does not match alphabets "
                f"({len(self.source)}, {len(self.recon)})"
            )
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InputError("distortion entries must be finite and nonnegative")
        d.flags.writeable = False
        object.__setattr__(self, "d", d)


def squared_error(source: Alphabet, recon: Alphabet) -> DistortionMatrix:
    sv = np.array([float(v) for v in source.symbols])
    rv = np.array([float(v) for v in recon.symbols])
    return DistortionMatrix(source, recon, (sv[:, None] - rv[None, :]) ** 2)


@dataclass(frozen=True)
class RDPoint:
    rate: float
    distortion: float
    slope: float
    converged: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.rate) and math.isfinite(self.distortion)
                and self.rate >= 0 and self.distortion >= 0):
            raise InputError(f"rate and distortion must be finite and >= 0: {self}")


@dataclass(frozen=True)
class RDCurve:
    """Points on a lower convex envelope, distortion ascending."""

    label: str
    points: tuple[RDPoint, ...]

    def __post_init__(self):
        pts = self.points
        for a, b in zip(pts, pts[1:]):
            if not (a.distortion < b.distortion and a.rate > b.rate):
                raise InputError(
                    f"curve {self.label!r}: points must be strictly ordered "
                    f"(distortion up, rate down); got {a} then {b}"
                )
        for a, m, b in zip(pts, pts[1:], pts[2:]):
            t = (m.distortion - a.distortion) / (b.distortion - a.distortion)
            chord = a.rate + t * (b.rate - a.rate)
            if m.rate > chord + CONVEXITY_TOL:
                raise InternalConsistencyError(
                    f"curve {self.label!r} not convex at D={m.distortion}: "
                    f"rate {m.rate} above chord {chord}"
                )

    @classmethod
    def assemble(cls, label: str, points) -> "RDCurve":
        """Sort, drop duplicates (lower rate wins at equal distortion), and
        prune points dominated in both coordinates."""
        pts = sorted(points, key=lambda p: (p.distortion, p.rate))
        frontier: list[RDPoint] = []
        for p in pts:
            if frontier and p.rate >= frontier[-1].rate - 1e-15:
                continue
            frontier.append(p)
        return cls(label, tuple(frontier))

    @property
    def distortions(self) -> np.ndarray:
        return np.array([p.distortion for p in self.points])

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    def rate_at(self, distortion: float) -> float:
        """Linear interpolation on the envelope; defined on its span only."""
        d = self.distortions
        if not (d[0] - 1e-12 <= distortion <= d[-1] + 1e-12):
            raise DomainError(
                f"distortion {distortion} outside curve {self.label!r} "
                f"span [{d[0]}, {d[-1]}]"
            )
        return float(np.interp(distortion, d, self.rates))


def default_slope_grid() -> np.ndarray:
    """64 slopes, log-spaced over 1e-3 .. 1e3 bits per unit distortion."""
    return np.geomspace(1e-3, 1e3, 64)


class _BAProblem:
    """One slope's reduced problem over the output marginal q.

    For C stacked sources sharing a distortion matrix, the parametric
    solve reduces to minimizing the convex F_c(q) = -sum_n P_cn ln Z_cn
    with Z = q @ K^T, K = exp(-s*d), over the simplex. One multiplicative
    update is q <- q*c with c = (P/Z) @ K, and convexity gives a
    certificate: the gap to the per-cell optimum is at most max_j c_j - 1
    nats, so convergence is declared on that bound, not on iterate
    movement (which stalls near flat valleys and on zero-rate sources).
    """

    def __init__(self, P: np.ndarray, d: np.ndarray, slope: float):
        if not (slope > 0):
            raise InputError(f"slope must be positive, got {slope!r}")
        s = slope * math.log(2.0)
        self.P = P
        self.d = d
        self.K = np.exp(-s * (d - d.min(axis=1, keepdims=True)))
        self.Kt = np.ascontiguousarray(self.K.T)
        self.src_mask = P > 0.0

    def step(self, q: np.ndarray, strict: bool = True):
        """Returns (q*c, c, F(q) per cell, bad mask); F in nats up to a
        constant. Cells whose partition function degenerates are flagged
        bad (F=inf) when strict is off, raised when on."""
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            Z = q @ self.Kt
            bad = np.any(self.src_mask & ~(Z > 1e-300), axis=1)
            if strict and np.any(bad):
                raise InternalConsistencyError("partition function underflowed to zero")
            safe_Z = np.where(Z > 1e-300, Z, 1.0)
            ratio = np.where(self.src_mask, self.P / safe_Z, 0.0)
            c = ratio @ self.K
            F = -np.einsum(
                "cn,cn->c", self.P, np.where(self.src_mask, np.log(safe_Z), 0.0)
            )
        bad |= ~np.isfinite(c).all(axis=1)
        if np.any(bad):
            F = np.where(bad, np.inf, F)
            c = np.where(bad[:, None], 2.0, c)
        return q * c, c, F, bad

    def gaps(self, c: np.ndarray) -> np.ndarray:
        return c.max(axis=1) - 1.0

    def restrict(self, keep: np.ndarray) -> "_BAProblem":
        """Copy with a row subset of the sources; K is shared."""
        sub = object.__new__(_BAProblem)
        sub.P = self.P[keep]
        sub.d = self.d
        sub.K = self.K
        sub.Kt = self.Kt
        sub.src_mask = self.src_mask[keep]
        return sub


def _extrapolate(q0, c0, c1, q2, cap):
    """Log-domain two-step extrapolation of the multiplicative iteration
    with a per-cell step length (SQUAREM style). Returns (q, alpha)."""
    mask = (q0 > 0.0) & (q2 > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(mask, np.log(np.where(mask, c0, 1.0)), 0.0)
        v = np.where(mask, np.log(np.where(mask, c1, 1.0)), 0.0) - u
    nu = np.sqrt((u * u).sum(axis=1))
    nv = np.sqrt((v * v).sum(axis=1))
    alpha = np.where(nv > 0.0, nu / np.where(nv > 0.0, nv, 1.0), 1.0)
    alpha = np.minimum(np.maximum(alpha, 1.0), cap)
    a = alpha[:, None]
    with np.errstate(divide="ignore"):
        lq = np.where(mask, np.log(np.where(mask, q0, 1.0)), -np.inf)
    lq = lq + 2.0 * a * u + a * a * v
    lq -= lq.max(axis=1, keepdims=True)
    q = np.exp(lq)
    return q / q.sum(axis=1, keepdims=True), alpha


def _newton_polish(P_row: np.ndarray, src_row: np.ndarray, K: np.ndarray,
                   q0: np.ndarray, tol: float):
    """Active-set Newton refinement of one cell's reduced problem.

    The multiplicative update identifies the optimal support slowly
    (mass enters or leaves only geometrically), which stalls it on
    near-flat objectives. Near the optimum it is cheaper to solve the
    stationarity system c_S(q) = 1 on the current support directly:
    Newton steps on the positive orthant, dropping columns driven to
    zero and entering the worst violator until the full certificate
    max_j c_j - 1 clears tol. Returns the certified q or None; a None
    simply leaves the cell to the iterative path, so this routine may
    be conservative.
    """
    P = P_row[src_row]
    Kp = K[src_row]
    m = K.shape[1]
    c0 = (P / (Kp @ q0)) @ Kp
    # a column belongs to the working set when its multiplier is near 1;
    # selecting by mass instead would trap dying columns (c < 1, q -> 0)
    # whose stationarity system has no positive root
    S = c0 >= 1.0 - 1e-3
    if not S.any():
        return None
    q = np.where(S, q0, 0.0)
    total = q.sum()
    if not (total > 0.0):
        return None
    q /= total
    budget = 80 + 4 * m
    while budget > 0:
        budget -= 1
        idx = np.flatnonzero(S)
        qs = q[idx]
        Ks = Kp[:, idx]
        Z = Ks @ qs
        if not np.all(Z > 1e-300):
            return None
        ratio = P / Z
        g = ratio @ Ks - 1.0
        if np.abs(g).max() < 1e-13:
            c_full = ratio @ Kp
            gap = c_full.max() - 1.0
            if gap < tol:
                out = np.zeros(m)
                out[idx] = qs / qs.sum()
                return out
            j = int(np.argmax(c_full))
            if S[j]:
                return None
            S[j] = True
            q[j] = 1e-6
            q /= q.sum()
            continue
        w = ratio / Z
        A = (Ks * w[:, None]).T @ Ks
        try:
            delta = np.linalg.solve(A, g)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(A, g, rcond=None)[0]
        if not np.all(np.isfinite(delta)):
            return None
        with np.errstate(divide="ignore"):
            steps = np.where(delta < 0.0, -qs / delta, np.inf)
        tmax = float(steps.min())
        if tmax <= 1.0:
            # boundary hit: walk onto the face and pivot the blockers out
            qs = np.maximum(qs + tmax * delta, 0.0)
            dead = qs <= 1e-14
            if dead.all():
                return None
            qs[dead] = 0.0
            S[idx[dead]] = False
        else:
            qs = qs + delta
        q = np.zeros(m)
        q[idx] = qs
    return None


_POLISH_GATE = 1e-5


def _ba_stack(P: np.ndarray, d: np.ndarray, slope: float, config: BAConfig):
    """Run BA on C stacked sources sharing one distortion matrix and slope.

    P: (C, n) rows summing to 1. Returns (rates, distortions, converged, q)
    with q the certified iterate. config.tol bounds the per-cell gap to
    the true envelope point (in nats); max_iters counts basic updates.
    """
    full = _BAProblem(P, d, slope)
    C, m = P.shape[0], d.shape[1]
    qout = np.full((C, m), 1.0 / m)
    done = np.zeros(C, dtype=bool)
    act = np.arange(C)
    prob = full
    q = np.full((C, m), 1.0 / m)
    cap = np.full(C, 64.0)
    tries = np.zeros(C, dtype=np.int64)
    iters = 0
    while iters < config.max_iters and act.size:
        q1, c0, F0, _ = prob.step(q)
        iters += 1
        # certificate checkpoint: freeze cells once individually certified,
        # so later extrapolation noise cannot un-converge them
        g0 = prob.gaps(c0)
        fin = g0 < config.tol
        for i in np.flatnonzero(~fin & (g0 < _POLISH_GATE) & (tries < 3)):
            qp = _newton_polish(prob.P[i], prob.src_mask[i], full.K,
                                q[i], config.tol)
            if qp is None:
                tries[i] += 1
            else:
                q[i] = qp
                fin[i] = True
        if fin.any():
            qout[act[fin]] = q[fin]
            done[act[fin]] = True
            keep = ~fin
            act, q, q1, cap = act[keep], q[keep], q1[keep], cap[keep]
            tries = tries[keep]
            prob = prob.restrict(keep)
            if act.size == 0:
                break
        if iters + 2 > config.max_iters:
            q = q1
            break
        q2, c1, F1, _ = prob.step(q1)
        qx, alpha = _extrapolate(q, c0[~fin] if fin.any() else c0, c1, q2, cap)
        q3, c2, Fx, bad = prob.step(qx, strict=False)
        iters += 2
        # keep extrapolated cells only where the objective did not worsen;
        # grow the step cap on cells that used it fully, shrink on misses
        accept = ~bad & (Fx <= F1 + 1e-13)
        q = np.where(accept[:, None], q3, q2)
        hit = accept & (alpha >= cap - 1e-9)
        cap = np.where(hit, cap * 4.0, cap)
        cap = np.where(~accept, np.maximum(cap / 4.0, 1.0), cap)

    if act.size:
        qout[act] = q
    converged = bool(done.all())
    q = qout

    A = q[:, None, :] * full.K[None, :, :]
    Z = A.sum(axis=2)
    if not np.all(Z[full.src_mask] > 0.0):
        raise InternalConsistencyError("partition function underflowed to zero")
    W = A / np.where(Z > 0.0, Z, 1.0)[:, :, None]
    q_m = np.einsum("cn,cnm->cm", P, W)
    # q_m can underflow to 0 beneath a denormal W; such cells carry no mass
    mask = full.src_mask[:, :, None] & (W > 0.0) & (q_m[:, None, :] > 0.0)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        terms = np.where(
            mask, W * np.log2(np.where(mask, W, 1.0) / q_m[:, None, :]), 0.0
        )
    rates = np.einsum("cn,cnm->c", P, terms)
    dists = np.einsum("cn,cnm->c", P, W * d[None, :, :])
    return np.maximum(rates, 0.0), dists, converged, q


def _source_vector(source: JointPMF) -> np.ndarray:
    if len(source.names) != 1:
        raise InputError(
            f"source must be a single-variable distribution, has {source.names}"
        )
    p = np.zeros(len(source.variables[0][1]))
    p[source.idx[:, 0]] = source.probs
    return p


def blahut_arimoto(source: JointPMF, recon_alphabet: Alphabet,
                   dist: DistortionMatrix, slope: float,
                   config: BAConfig = BAConfig()) -> RDPoint:
    """One rate-distortion point of a single-variable source at one slope."""
    if dist.recon.symbols != recon_alphabet.symbols:
        raise InputError("distortion matrix recon alphabet mismatch")
    if dist.source.symbols != source.variables[0][1].symbols:
        raise InputError("distortion matrix source alphabet mismatch")
    P = _source_vector(source)[None, :]
    rates, dists, conv, _ = _ba_stack(P, dist.d, slope, config)
    return RDPoint(float(rates[0]), float(dists[0]), float(slope), conv)


def _sweep_slopes(P: np.ndarray, d: np.ndarray, grid, config: BAConfig):
    """Independent cold-start solves, one per slope."""
    out = []
    for s in grid:
        rates, dists, conv, _ = _ba_stack(P, d, float(s), config)
        out.append((rates, dists, conv))
    return out


def rd_curve(source: JointPMF, recon_alphabet: Alphabet, dist: DistortionMatrix,
             slope_grid=None, config: BAConfig = BAConfig(),
             label: str = "rd") -> RDCurve:
    """Sweep slopes and assemble the unconditional envelope."""
    if dist.recon.symbols != recon_alphabet.symbols:
        raise InputError("distortion matrix recon alphabet mismatch")
    if dist.source.symbols != source.variables[0][1].symbols:
        raise InputError("distortion matrix source alphabet mismatch")
    grid = default_slope_grid() if slope_grid is None else slope_grid
    P = _source_vector(source)[None, :]
    pts = [RDPoint(float(r[0]), float(dd[0]), float(s), conv)
           for s, (r, dd, conv) in zip(grid, _sweep_slopes(P, dist.d, grid, config))]
    return RDCurve.assemble(label, pts)


def conditional_rd_curve(joint: JointPMF, source_var: str, cond_var: str,
                         recon_alphabet: Alphabet, dist: DistortionMatrix,
                         slope_grid=None, config: BAConfig = BAConfig(),
                         label: str | None = None) -> RDCurve:
    """Envelope of the conditional problem: per slope, solve each condition
    cell independently and weight rate and distortion by the cell mass."""
    if dist.recon.symbols != recon_alphabet.symbols:
        raise InputError("distortion matrix recon alphabet mismatch")
    if dist.source.symbols != joint.alphabet(source_var).symbols:
        raise InputError("distortion matrix source alphabet mismatch")
    grid = default_slope_grid() if slope_grid is None else slope_grid
    if label is None:
        label = f"{source_var}|{cond_var}"

    rows, weights = group_weights(joint, (cond_var, source_var))
    cond_rows, cell_inverse = np.unique(rows[:, 0], return_inverse=True)
    C = cond_rows.size
    n = len(joint.alphabet(source_var))
    P = np.zeros((C, n))
    P[cell_inverse, rows[:, 1]] = weights
    w_c = P.sum(axis=1)
    P = P / w_c[:, None]

    pts = [RDPoint(float(w_c @ r), float(w_c @ dd), float(s), conv)
           for s, (r, dd, conv) in zip(grid, _sweep_slopes(P, dist.d, grid, config))]
    return RDCurve.assemble(label, pts)


def compare_paradigms(params: PixelModelParams, slope_grid=None,
                      config: BAConfig = BAConfig(),
                      force: bool = False) -> dict[str, RDCurve]:
    """The four paradigm envelopes for one pixel-model instance.

    res        : residual r coded unconditionally
    cond_ideal : x coded given the raw prediction xp
    cond       : x coded given the bottlenecked prediction xq
    condres    : r coded given xq

    Residual-side distortion (r vs its reconstruction) equals the symbol
    distortion under squared error because the decoder adds xp back, so
    the four curves share one distortion axis.
    """
    if params.M > 64 and not force:
        raise InputError(
            f"M={params.M} makes the solve expensive; pass force=True to override"
        )
    joint = build_joint(params)
    x_alph = joint.alphabet("x")
    r_alph = joint.alphabet("r")
    d_x = squared_error(x_alph, x_alph)
    d_r = squared_error(r_alph, r_alph)
    grid = default_slope_grid() if slope_grid is None else slope_grid

    return {
        "res": rd_curve(marginalize(joint, ["r"]), r_alph, d_r, grid, config,
                        label="res"),
        "cond_ideal": conditional_rd_curve(joint, "x", "xp", x_alph, d_x, grid,
                                           config, label="cond_ideal"),
        "cond": conditional_rd_curve(joint, "x", "xq", x_alph, d_x, grid,
                                     config, label="cond"),
        "condres": conditional_rd_curve(joint, "r", "xq", r_alph, d_r, grid,
                                        config, label="condres"),
    }

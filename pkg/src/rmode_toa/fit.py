"""Joint estimation of per-transmitter jitter and the shared constant C.

With ``a_i = J_i**2`` and ``b = C**2`` the variance model is linear in
``(a_1, ..., a_m, b)``, so minimizing the residual sum of squares subject to
``J_i, C >= 0`` is a nonnegative linear least-squares problem with a unique
global optimum (when the design has full column rank).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from .model import SnrConvention, Unit, VarianceModel, predict_variance
from .nnls import nnls
from .phase import VarianceSample

RESIDUAL_SPACES = ("variance", "sigma")
WEIGHTINGS = ("uniform", "window_len", "inverse_variance")


class IdentifiabilityError(ValueError):
    """The samples cannot separate J_i from C."""

    def __init__(self, message: str, transmitters: Sequence[str] = ()):
        super().__init__(message)
        self.transmitters = list(transmitters)


@dataclass(frozen=True)
class FitInput:
    samples: Sequence[VarianceSample]
    weights: Sequence[float] | None = None

    def __post_init__(self):
        samples = tuple(self.samples)
        if not samples:
            raise ValueError("FitInput needs at least one sample")
        object.__setattr__(self, "samples", samples)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=np.float64)
            if w.shape != (len(samples),):
                raise ValueError(f"expected {len(samples)} weights, got shape {w.shape}")
            if not (np.all(np.isfinite(w)) and np.all(w > 0)):
                raise ValueError("weights must be finite and positive")
            object.__setattr__(self, "weights", tuple(w.tolist()))

    @property
    def transmitter_ids(self) -> list[str]:
        return list(dict.fromkeys(s.transmitter_id for s in self.samples))

    def weight_array(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.samples))
        return np.asarray(self.weights, dtype=np.float64)


@dataclass(frozen=True)
class FitConfig:
    residual_space: str = "variance"
    weighting: str = "uniform"
    snr_convention: SnrConvention = SnrConvention.DB_TO_LINEAR
    # SNRs closer than this (relative) count as one level for identifiability
    snr_distinct_rtol: float = 1e-9
    max_reweight_iter: int = 50
    reweight_tol: float = 1e-12

    def __post_init__(self):
        if self.residual_space not in RESIDUAL_SPACES:
            raise ValueError(f"residual_space must be one of {RESIDUAL_SPACES}, got {self.residual_space!r}")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")
        object.__setattr__(self, "snr_convention", SnrConvention(self.snr_convention))


@dataclass(frozen=True)
class FitResult:
    model: VarianceModel
    rss: float
    n_samples: int
    per_transmitter_rss: dict[str, float]
    solver: str
    residual_space: str
    weighting: str
    identifiability: str = "strong"
    iterations: int = 1
    weights: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "rss": self.rss,
            "n_samples": self.n_samples,
            "per_transmitter_rss": dict(self.per_transmitter_rss),
            "solver": self.solver,
            "residual_space": self.residual_space,
            "weighting": self.weighting,
            "identifiability": self.identifiability,
            "iterations": self.iterations,
        }


def _arrays(inp: FitInput, ids: list[str]):
    col = {tid: i for i, tid in enumerate(ids)}
    t = np.array([col[s.transmitter_id] for s in inp.samples], dtype=np.int64)
    snr = np.array([s.snr_linear for s in inp.samples], dtype=np.float64)
    var = np.array([s.variance_m2 for s in inp.samples], dtype=np.float64)
    return t, snr, var


def _design(t, snr, n_tx):
    A = np.zeros((len(t), n_tx + 1))
    A[np.arange(len(t)), t] = 1.0
    A[:, n_tx] = 1.0 / snr
    return A


def check_identifiable(inp: FitInput, rtol: float = 1e-9) -> list[str]:
    """Raise :class:`IdentifiabilityError` for an unusable sample set.

    Returns the transmitters observed at a single SNR level; those are still
    identifiable through the shared C but lean on other transmitters for it.
    """
    ids = inp.transmitter_ids
    t, snr, _ = _arrays(inp, ids)
    thin = [tid for i, tid in enumerate(ids) if (t == i).sum() < 2]
    if thin:
        raise IdentifiabilityError(
            f"need at least 2 samples per transmitter; too few for {', '.join(thin)}", thin
        )
    single = []
    for i, tid in enumerate(ids):
        s = snr[t == i]
        if s.max() - s.min() <= rtol * s.max():
            single.append(tid)
    if len(single) == len(ids):
        raise IdentifiabilityError(
            "jitter and C are not separable: every sample of "
            + ", ".join(single)
            + " is at a single SNR level",
            single,
        )
    return single


def rss(model: VarianceModel, inp: FitInput, residual_space: str = "variance", weights=None) -> float:
    """Weighted residual sum of squares of ``inp`` against ``model``."""
    return sum(_rss_parts(model, inp, residual_space, weights).values())


def _rss_parts(model, inp, residual_space, weights=None) -> dict[str, float]:
    if residual_space not in RESIDUAL_SPACES:
        raise ValueError(f"unknown residual space {residual_space!r}")
    missing = [tid for tid in inp.transmitter_ids if tid not in model.jitter]
    if missing:
        raise ValueError(f"model has no jitter for {', '.join(missing)}")
    w = inp.weight_array() if weights is None else np.asarray(weights, dtype=np.float64)
    parts = {tid: 0.0 for tid in inp.transmitter_ids}
    for s, wk in zip(inp.samples, w):
        pred = predict_variance(model, s.transmitter_id, s.snr_linear)
        if residual_space == "variance":
            r = s.variance_m2 - pred
        else:
            r = math.sqrt(s.variance_m2) - math.sqrt(pred)
        parts[s.transmitter_id] += float(wk) * r * r
    return parts


def _solve_nnls(A, y, w):
    """Weighted NNLS with column equilibration.

    Coefficients whose contribution is below the rounding level of the data
    are treated as bound-active, and the free ones are re-solved with one
    step of iterative refinement.
    """
    sw = np.sqrt(w)
    yw = y * sw
    As = A * sw[:, None]
    norms = np.linalg.norm(As, axis=0)
    norms[norms == 0] = 1.0
    As = As / norms
    x0, _ = nnls(As, yw)
    free = x0 > 64 * np.finfo(float).eps * np.linalg.norm(yw)
    x = np.zeros_like(x0)
    if free.any():
        Af = As[:, free]
        z = np.linalg.lstsq(Af, yw, rcond=None)[0]
        z = z + np.linalg.lstsq(Af, yw - Af @ z, rcond=None)[0]
        if (z >= 0).all():
            x[free] = z
        else:
            x[free] = x0[free]
    return x / norms


def _weak(A, w) -> bool:
    Aw = A * np.sqrt(w)[:, None]
    Aw = Aw / np.linalg.norm(Aw, axis=0)
    sv = np.linalg.svd(Aw, compute_uv=False)
    return sv[-1] <= 1e-6 * sv[0]


def fit_model(inp: FitInput, cfg: FitConfig = FitConfig()) -> FitResult:
    """Least-squares estimate of ``J_i`` (one per transmitter) and shared ``C``.

    In ``variance`` residual space the problem is solved exactly by NNLS in
    ``(J_i**2, C**2)``.  ``inverse_variance`` weighting repeats the solve
    with weights ``1 / predicted_variance**2`` until the weights settle.
    ``sigma`` residual space is nonlinear; it is started from the variance
    space solution and refined with a bounded trust-region solver.
    """
    single = check_identifiable(inp, cfg.snr_distinct_rtol)
    ids = inp.transmitter_ids
    t, snr, var = _arrays(inp, ids)
    n_tx = len(ids)
    A = _design(t, snr, n_tx)

    w = inp.weight_array()
    if cfg.weighting == "window_len":
        w = w * np.array([s.window_len for s in inp.samples], dtype=np.float64)
    base = w.copy()

    x = _solve_nnls(A, var, w)
    iterations = 1
    if cfg.weighting == "inverse_variance":
        floor = np.finfo(float).tiny
        for _ in range(cfg.max_reweight_iter):
            pred = A @ x
            if not (pred > 0).all():
                pred = np.maximum(pred, max(floor, 1e-12 * float(np.abs(var).max(initial=0.0))))
            if not (pred > 0).all():
                break
            w = base / (pred * pred)
            # keep weights O(1) so absolute tolerances inside NNLS stay meaningful
            w = w / w.mean()
            x_new = _solve_nnls(A, var, w)
            iterations += 1
            done = np.max(np.abs(x_new - x)) <= cfg.reweight_tol * max(1.0, np.max(np.abs(x_new)))
            x = x_new
            if done:
                break

    jit = np.sqrt(x[:n_tx])
    c = math.sqrt(x[n_tx])
    solver = "nnls"

    if cfg.residual_space == "sigma":
        jit, c = _refine_sigma(t, snr, var, w, jit, c)
        solver = "grid_refine"

    model = VarianceModel(dict(zip(ids, jit.tolist())), c, cfg.snr_convention, Unit.METERS)
    parts = _rss_parts(model, inp, cfg.residual_space, w)
    weak = _weak(A, w)
    return FitResult(
        model=model,
        rss=float(sum(parts.values())),
        n_samples=len(inp.samples),
        per_transmitter_rss=parts,
        solver=solver,
        residual_space=cfg.residual_space,
        weighting=cfg.weighting,
        identifiability="weak" if weak else "strong",
        iterations=iterations,
        weights=tuple(w.tolist()),
    )


def _refine_sigma(t, snr, var, w, jit0, c0):
    sigma = np.sqrt(var)
    sw = np.sqrt(w)
    n_tx = len(jit0)

    def resid(p):
        pred = np.sqrt(p[:n_tx][t] ** 2 + p[n_tx] ** 2 / snr)
        return sw * (sigma - pred)

    def cost(p):
        r = resid(p)
        return float(r @ r)

    scale = max(float(c0), float(np.max(jit0, initial=0.0)), float(np.sqrt(var.max())), 1e-12)
    starts = [np.append(jit0, c0)]
    for fj in (0.0, 0.5, 2.0):
        for fc in (0.5, 1.0, 2.0):
            starts.append(np.append(np.maximum(jit0 * fj, 0.0), c0 * fc))
    starts.append(np.full(n_tx + 1, 0.5 * scale))

    best = starts[0]
    best_cost = cost(best)
    for p0 in starts:
        p0 = np.clip(p0, 0.0, None) + 1e-12 * scale
        res = least_squares(resid, p0, bounds=(0.0, np.inf), xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if res.success and cost(res.x) < best_cost:
            best, best_cost = res.x, cost(res.x)
    return np.abs(best[:n_tx]), float(abs(best[n_tx]))

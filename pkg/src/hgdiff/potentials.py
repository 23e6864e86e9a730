"""Node and hyperedge potentials: values, (sub)gradients and proximal maps.

Edge potentials act on the last axis of their input, so a single hyperedge
``(k,)`` and a batch of same-size hyperedges ``(n, k)`` go through the same
code. Multi-channel features are handled by the callers moving channels into
the batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import _isotonic
from .exceptions import SolverError, ValidationError

NODE_KINDS = ("quadratic", "linear")

EDGE_KINDS = ("ce", "ce_norm", "div_mean", "tv", "lec")
_EDGE_ALIASES = {
    "clique_expansion": "ce",
    "clique_expansion_normalized": "ce_norm",
    "divergence_to_mean": "div_mean",
    "total_variation": "tv",
}


@dataclass(frozen=True)
class NodePotential:
    """``quadratic``: ``(h - x)**2``; ``linear``: ``-x * h``."""

    kind: str = "quadratic"

    def __post_init__(self):
        if self.kind not in NODE_KINDS:
            raise ValidationError(f"node potential kind must be one of {NODE_KINDS}, got {self.kind!r}")

    def value(self, h, x):
        h = np.asarray(h, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            return (h - x) ** 2
        return -x * h

    def grad(self, h, x):
        h = np.asarray(h, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            return 2.0 * (h - x)
        return -x + 0.0 * h

    def prox(self, z, x, scale):
        """``argmin_h scale * f(h; x) + (h - z)**2 / 2`` in closed form."""
        scale = np.asarray(scale, dtype=float)
        if np.any(scale < 0):
            raise ValidationError("prox scale must be non-negative")
        z = np.asarray(z, dtype=float)
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            return (z + 2.0 * scale * x) / (1.0 + 2.0 * scale)
        return z + scale * x

    def to_config(self) -> dict:
        return {"node_kind": self.kind}

    @classmethod
    def from_config(cls, doc) -> "NodePotential":
        if isinstance(doc, str):
            return cls(doc)
        return cls(doc.get("node_kind", "quadratic"))


def lec_y_vector(edge_size: int) -> np.ndarray:
    """Cardinality weights: ``+c`` on the top half, ``-c`` on the bottom half.

    ``c = 2/|e|`` for even sizes; odd sizes use ``c = 2/(|e|-1)`` and put a
    zero in the middle. The entries always sum to zero.
    """
    k = int(edge_size)
    if k < 1:
        raise ValidationError("edge_size must be at least 1")
    y = np.zeros(k)
    if k % 2 == 0:
        y[: k // 2] = 2.0 / k
        y[k // 2:] = -2.0 / k
    elif k > 1:
        c = 2.0 / (k - 1)
        y[: (k - 1) // 2] = c
        y[(k + 1) // 2:] = -c
    return y


def _tv_y(k):
    y = np.zeros(k)
    if k > 1:
        y[0], y[-1] = 1.0, -1.0
    return y


@dataclass(frozen=True)
class EdgePotential:
    """A permutation-invariant hyperedge potential.

    Parameters
    ----------
    kind : {"ce", "ce_norm", "div_mean", "tv", "lec"}
        ``ce`` sums ``(h_v - h_u)**2`` over *ordered* member pairs, so each
        unordered pair counts twice. ``ce_norm`` applies the same form to
        ``h_v / sqrt(d_v)``. ``div_mean`` is ``sum_v (h_v - ||H_e/|e|||_p)**2``.
        ``tv`` is ``(max - min)**p``. ``lec`` is ``<y, sort_desc(H_e)>**p``.
    p : float
        Exponent (``tv``/``lec``: 1 or 2) or inner norm order (``div_mean``).
    y : array-like or "cardinality", optional
        LEC weight vector. ``"cardinality"`` selects :func:`lec_y_vector`
        per hyperedge size.
    """

    kind: str = "ce"
    p: float = 2.0
    y: Union[None, str, tuple] = None
    _y_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        kind = _EDGE_ALIASES.get(self.kind, self.kind)
        if kind not in EDGE_KINDS:
            raise ValidationError(f"edge potential kind must be one of {EDGE_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        p = float(self.p)
        if kind in ("tv", "lec") and p not in (1.0, 2.0):
            raise ValidationError(f"{kind} requires p in {{1, 2}}, got {self.p}")
        if kind == "div_mean" and p < 1:
            raise ValidationError(f"div_mean requires p >= 1, got {self.p}")
        object.__setattr__(self, "p", p)
        if kind == "lec":
            y = self.y if self.y is not None else "cardinality"
            if not isinstance(y, str):
                y = tuple(float(v) for v in np.asarray(y, dtype=float).ravel())
                if not np.all(np.isfinite(y)):
                    raise ValidationError("LEC weight vector must be finite")
            elif y != "cardinality":
                raise ValidationError(f"unknown LEC weight rule {y!r}")
            object.__setattr__(self, "y", y)
        elif self.y is not None:
            raise ValidationError(f"{kind} does not take a weight vector")

    # -- configuration -----------------------------------------------------

    def to_config(self) -> dict:
        doc = {"kind": self.kind, "p": self.p}
        if self.kind == "lec":
            doc["y"] = self.y if isinstance(self.y, str) else list(self.y)
        return doc

    @classmethod
    def from_config(cls, doc: dict) -> "EdgePotential":
        unknown = set(doc) - {"kind", "p", "y"}
        if unknown:
            raise ValidationError(f"unknown edge potential keys {sorted(unknown)}")
        kind = doc.get("kind", "ce")
        default_p = 1.0 if kind == "tv" else 2.0
        return cls(kind, doc.get("p", default_p), doc.get("y"))

    # -- helpers -----------------------------------------------------------

    def weights(self, k: int) -> np.ndarray:
        """Sorted-order weights for size-``k`` hyperedges (TV and LEC only)."""
        if k not in self._y_cache:
            if self.kind == "tv":
                y = _tv_y(k)
            elif self.y == "cardinality":
                y = lec_y_vector(k)
            else:
                y = np.asarray(self.y)
                if len(y) != k:
                    raise ValidationError(f"LEC weight vector has length {len(y)}, hyperedge has {k} members")
            self._y_cache[k] = y
        return self._y_cache[k]

    @property
    def needs_degrees(self) -> bool:
        return self.kind == "ce_norm"

    def is_convex(self, k: int) -> bool:
        if self.kind in ("ce", "ce_norm"):
            return True
        if self.kind in ("tv", "lec"):
            y = self.weights(k)
            monotone = bool(np.all(np.diff(y) <= 0))
            if self.p == 1.0:
                return monotone
            return monotone and abs(y.sum()) <= 1e-12
        return False

    def _check(self, z, degrees):
        z = np.asarray(z, dtype=float)
        if z.ndim == 0 or z.shape[-1] < 1:
            raise ValidationError("hyperedge feature vector must have at least one entry")
        if self.kind == "ce_norm":
            if degrees is None:
                raise ValidationError("ce_norm requires member degrees")
            degrees = np.broadcast_to(np.asarray(degrees, dtype=float), z.shape)
            if np.any(degrees <= 0):
                raise ValidationError("member degrees must be positive")
        return z, degrees

    @staticmethod
    def _sort_desc(z):
        order = np.argsort(-z, axis=-1, kind="stable")
        return order, np.take_along_axis(z, order, axis=-1)

    # -- value / gradient --------------------------------------------------

    def value(self, z, degrees=None):
        z, degrees = self._check(z, degrees)
        k = z.shape[-1]
        if self.kind in ("ce", "ce_norm"):
            u = z / np.sqrt(degrees) if self.kind == "ce_norm" else z
            s = u.sum(axis=-1)
            return 2.0 * (k * (u * u).sum(axis=-1) - s * s)
        if self.kind == "div_mean":
            m = np.linalg.norm(z / k, ord=self.p, axis=-1)
            return ((z - m[..., None]) ** 2).sum(axis=-1)
        if self.kind == "tv":
            return (z.max(axis=-1) - z.min(axis=-1)) ** self.p
        _, s = self._sort_desc(z)
        return (s @ self.weights(k)) ** self.p

    def grad(self, z, degrees=None):
        """Gradient, or a fixed deterministic subgradient at kinks.

        TV puts its weight on the lowest-index argmax/argmin; LEC breaks
        sorting ties by ascending position.
        """
        z, degrees = self._check(z, degrees)
        k = z.shape[-1]
        if self.kind == "ce":
            return 4.0 * (k * z - z.sum(axis=-1, keepdims=True))
        if self.kind == "ce_norm":
            r = np.sqrt(degrees)
            u = z / r
            return 4.0 * (k * u - u.sum(axis=-1, keepdims=True)) / r
        if self.kind == "div_mean":
            return self._div_mean_grad(z)
        if self.kind == "tv":
            spread = z.max(axis=-1) - z.min(axis=-1)
            c = self.p * spread ** (self.p - 1.0)
            g = np.zeros_like(z)
            hi = np.argmax(z, axis=-1)[..., None]
            lo = np.argmin(z, axis=-1)[..., None]
            g_hi = np.take_along_axis(g, hi, -1) + c[..., None]
            np.put_along_axis(g, hi, g_hi, -1)
            g_lo = np.take_along_axis(g, lo, -1) - c[..., None]
            np.put_along_axis(g, lo, g_lo, -1)
            return g
        y = self.weights(k)
        order, s = self._sort_desc(z)
        inner = s @ y
        scale = self.p * inner ** (self.p - 1.0) if self.p != 1.0 else np.ones_like(inner)
        g = np.empty_like(z)
        np.put_along_axis(g, order, np.broadcast_to(y, z.shape) * scale[..., None], -1)
        return g

    def _div_mean_grad(self, z):
        k = z.shape[-1]
        p = self.p
        a = np.abs(z)
        norm = np.linalg.norm(z, ord=p, axis=-1)
        m = norm / k
        resid = z - m[..., None]
        safe = np.where(norm > 0, norm, 1.0)[..., None]
        if p == 1.0:
            dm = np.sign(z) / k
        else:
            dm = np.where(norm[..., None] > 0, np.sign(z) * (a / safe) ** (p - 1.0) / k, 0.0)
        return 2.0 * resid - 2.0 * resid.sum(axis=-1, keepdims=True) * dm

    # -- proximal map ------------------------------------------------------

    def prox(self, z, eta, degrees=None):
        """``argmin_Z eta * g(Z) + ||Z - z||**2 / 2`` along the last axis.

        CE and normalized CE are solved in closed form (diagonal plus rank-one
        system). TV and LEC with non-increasing weights use an exact sorted
        isotonic solve. Everything else falls back to :func:`numeric_prox`.
        """
        if eta < 0:
            raise ValidationError("eta must be non-negative")
        z, degrees = self._check(z, degrees)
        if eta == 0:
            return z.copy()
        k = z.shape[-1]
        if self.kind == "ce":
            return (z + 4.0 * eta * z.sum(axis=-1, keepdims=True)) / (1.0 + 4.0 * eta * k)
        if self.kind == "ce_norm":
            diag = 1.0 + 4.0 * eta * k / degrees
            w = 1.0 / np.sqrt(degrees)
            a = z / diag
            b = w / diag
            coef = 4.0 * eta * (w * a).sum(axis=-1, keepdims=True)
            denom = 1.0 - 4.0 * eta * (w * b).sum(axis=-1, keepdims=True)
            return a + b * coef / denom
        if self.kind in ("tv", "lec") and self.is_convex(k):
            if k == 1:
                return z.copy()
            flat = z.reshape(-1, k)
            order, s = self._sort_desc(flat)
            res = _isotonic.sorted_weight_prox_batch(
                np.ascontiguousarray(s), self.weights(k), float(eta), int(self.p)
            )
            out = np.empty_like(flat)
            np.put_along_axis(out, order, res, -1)
            return out.reshape(z.shape)
        flat = z.reshape(-1, k)
        out = np.stack([numeric_prox(self, row, eta)[0] for row in flat]) if len(flat) else flat.copy()
        return out.reshape(z.shape)


@dataclass
class ProxInfo:
    iterations: int
    residual: float
    converged: bool
    objective: float


def numeric_prox(potential: EdgePotential, z, eta, max_iter=10_000, tol=1e-8, strict=False, degrees=None):
    """Generic prox by first-order descent on ``eta*g(Z) + ||Z - z||**2 / 2``.

    Works on the ascending-sorted copy of ``z`` and scatters the result back,
    which keeps the map exactly permutation-equivariant. A backtracking
    (sub)gradient phase handles smooth potentials to high accuracy; it is
    followed by diminishing steps ``1/(k + 1/eta)`` for kinked potentials.
    The lowest-objective iterate is returned together with a
    :class:`ProxInfo`.

    Raises
    ------
    SolverError
        If ``strict`` and neither phase met ``tol`` within ``max_iter``
        iterations, or if iterates become non-finite.
    """
    z = np.asarray(z, dtype=float)
    if eta == 0:
        return z.copy(), ProxInfo(0, 0.0, True, 0.0)
    if degrees is not None:
        order = np.lexsort((np.asarray(degrees, float), z))
        deg = np.asarray(degrees, float)[order]
    else:
        order = np.argsort(z, kind="stable")
        deg = None
    target = z[order]

    def objective(w):
        return eta * float(potential.value(w, deg)) + 0.5 * float(np.sum((w - target) ** 2))

    def direction(w):
        return eta * potential.grad(w, deg) + (w - target)

    w = target.copy()
    best, best_f = w.copy(), objective(w)
    it = 0
    residual = np.inf
    converged = False

    step = 1.0
    f = best_f
    while it < max_iter:
        it += 1
        d = direction(w)
        gg = float(d @ d)
        while step > 1e-16:
            cand = w - step * d
            fc = objective(cand)
            if fc <= f - 0.5 * step * gg:
                break
            step *= 0.5
        else:
            break
        residual = float(np.max(np.abs(cand - w)))
        w, f = cand, fc
        if f < best_f:
            best, best_f = w.copy(), f
        # a collapsed step at a kink is not convergence; require a small subgradient
        if float(np.max(np.abs(direction(w)))) < tol:
            converged = True
            break
        if residual < tol:
            break
        step = min(1.0, step * 2.0)

    if not converged:
        w = best.copy()
        for j in range(max_iter - it):
            it += 1
            s = 1.0 / (j + 1.0 / eta)
            cand = w - s * direction(w)
            if not np.all(np.isfinite(cand)):
                raise SolverError("numeric prox produced non-finite iterates", residual)
            residual = float(np.max(np.abs(cand - w)))
            w = cand
            fw = objective(w)
            if fw < best_f:
                best, best_f = w.copy(), fw
            if residual < tol:
                converged = True
                break

    if strict and not converged:
        raise SolverError(f"numeric prox did not converge in {max_iter} iterations", residual)
    out = np.empty_like(best)
    out[order] = best
    return out, ProxInfo(it, residual, converged, best_f)


def edge_map(potential: EdgePotential, op: str, he, eta=None, degrees=None):
    """Apply ``grad``/``prox`` to one hyperedge with an ``(|e|,)`` or ``(|e|, F)`` input."""
    he = np.asarray(he, dtype=float)
    if he.ndim == 1:
        return potential.grad(he, degrees) if op == "grad" else potential.prox(he, eta, degrees)
    zt = np.ascontiguousarray(he.T)
    dt = None
    if degrees is not None:
        d = np.asarray(degrees, float)
        d = d[:, None] if d.ndim == 1 else d
        dt = np.ascontiguousarray(np.broadcast_to(d, he.shape).T)
    res = potential.grad(zt, dt) if op == "grad" else potential.prox(zt, eta, dt)
    return res.T


@dataclass
class EquivarianceReport:
    max_residual: float
    trials: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def check_equivariance(potential: EdgePotential, op: str, he, permutation, tolerance=1e-9,
                       eta=0.1, degrees=None) -> EquivarianceReport:
    """Residual ``max |op(P z) - P op(z)|`` for one permutation.

    ``permutation[i]`` is the source index of output position ``i``, so
    ``P z = z[permutation]``. Degrees (``ce_norm``) are permuted with ``z``.
    """
    if op not in ("grad", "prox"):
        raise ValidationError("op must be 'grad' or 'prox'")
    he = np.asarray(he, dtype=float)
    perm = np.asarray(permutation, dtype=np.int64)
    if sorted(perm.tolist()) != list(range(he.shape[0])):
        raise ValidationError("permutation must be a bijection on the hyperedge members")
    deg = None if degrees is None else np.asarray(degrees, float)
    deg_p = None if deg is None else deg[perm]
    base = edge_map(potential, op, he, eta, deg)
    permuted = edge_map(potential, op, he[perm], eta, deg_p)
    residual = float(np.max(np.abs(permuted - base[perm]))) if he.size else 0.0
    return EquivarianceReport(residual, 1, tolerance)


def _as_matrix(a, n):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.shape[0] != n:
        raise ValidationError(f"expected {n} rows, got {a.shape[0]}")
    return a


def edge_term(h, H, potential: EdgePotential) -> float:
    total = 0.0
    deg = h.node_degrees.astype(float)
    for ids, members in h.size_buckets:
        he = np.moveaxis(H[members], 2, 1)  # (n_b, F, k)
        d = np.broadcast_to(deg[members][:, None, :], he.shape) if potential.needs_degrees else None
        total += float(np.sum(potential.value(he, d)))
    return total


def objective_value(h, H, X, node_potential: NodePotential, edge_potential: EdgePotential) -> float:
    """``sum_v f(h_v; x_v) + sum_e g(H_e)``, summed over channels."""
    H = _as_matrix(H, h.num_nodes)
    X = _as_matrix(X, h.num_nodes)
    if H.shape != X.shape:
        raise ValidationError(f"H shape {H.shape} does not match X shape {X.shape}")
    return float(np.sum(node_potential.value(H, X))) + edge_term(h, H, edge_potential)

"""Central finite differences over the flat jet coordinates z = (t, x, y).

Step rule: ``h_k = eps * max(1, |z_k|)``.  Before a stencil is evaluated its
points are tested with a ``valid`` predicate (default: the y-product stays
positive) and the step is halved until every point passes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StencilError


@dataclass(frozen=True)
class DiffScheme:
    eps_first: float = 1e-5
    eps_second: float = 1e-4
    # outer step when differentiating a quantity that is itself a difference quotient
    eps_nested: float = 3e-3
    richardson: bool = False
    # second differences at eps_second are rounding-limited; extrapolating them
    # multiplies the noise, so this is opt-in
    richardson_second: bool = False
    max_halvings: int = 30


DEFAULT_SCHEME = DiffScheme()


def y_product_positive(z):
    n = (len(z) - 1) // 2
    y = z[n + 1 :]
    return bool(np.all(y != 0) and np.prod(y) > 0)


def _stencil_step(z, axes, eps, offsets, valid, max_halvings):
    """Largest admissible steps (one per axis) for the given stencil offsets."""
    h = np.array([eps * max(1.0, abs(z[a])) for a in axes])
    for _ in range(max_halvings + 1):
        ok = True
        for off in offsets:
            zz = np.array(z, dtype=float)
            for a, s, hh in zip(axes, off, h):
                zz[a] += s * hh
            if not valid(zz):
                ok = False
                break
        if ok:
            return h
        h = h / 2.0
    raise StencilError(f"stencil around z={list(z)} leaves the domain after {max_halvings} halvings")


def _shift(z, axes, signs, h):
    zz = np.array(z, dtype=float)
    for a, s, hh in zip(axes, signs, h):
        zz[a] += s * hh
    return zz


def _call(f, z):
    try:
        return np.asarray(f(z), dtype=float)
    except StencilError:
        raise
    except DomainError as exc:
        raise StencilError(f"stencil evaluation failed: {exc}") from exc


def _first(f, z, a, h):
    zp = _shift(z, [a], [1], [h])
    zm = _shift(z, [a], [-1], [h])
    return (_call(f, zp) - _call(f, zm)) / (2.0 * h)


def _second(f, z, a, b, ha, hb, f0):
    if a == b:
        zp = _shift(z, [a], [1], [ha])
        zm = _shift(z, [a], [-1], [ha])
        return (_call(f, zp) - 2.0 * f0 + _call(f, zm)) / (ha * ha)
    vals = {}
    for sa in (1, -1):
        for sb in (1, -1):
            vals[sa, sb] = _call(f, _shift(z, [a, b], [sa, sb], [ha, hb]))
    return (vals[1, 1] - vals[1, -1] - vals[-1, 1] + vals[-1, -1]) / (4.0 * ha * hb)


def partial(f, z, axis, scheme=DEFAULT_SCHEME, eps=None, valid=y_product_positive):
    """Central-difference derivative of ``f`` along one coordinate of ``z``."""
    z = np.asarray(z, dtype=float)
    eps = scheme.eps_first if eps is None else eps
    (h,) = _stencil_step(z, [axis], eps, [(1,), (-1,)], valid, scheme.max_halvings)
    d = _first(f, z, axis, h)
    if scheme.richardson:
        d = (4.0 * _first(f, z, axis, h / 2.0) - d) / 3.0
    return d


def second_partial(f, z, a, b, scheme=DEFAULT_SCHEME, eps=None, valid=y_product_positive, f0=None):
    """Central-difference second derivative along coordinates ``a`` and ``b``."""
    z = np.asarray(z, dtype=float)
    eps = scheme.eps_second if eps is None else eps
    if a == b:
        (ha,) = _stencil_step(z, [a], eps, [(1,), (-1,)], valid, scheme.max_halvings)
        hb = ha
    else:
        offs = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
        ha, hb = _stencil_step(z, [a, b], eps, offs, valid, scheme.max_halvings)
    if f0 is None and a == b:
        f0 = _call(f, z)
    d = _second(f, z, a, b, ha, hb, f0)
    if scheme.richardson and scheme.richardson_second:
        d = (4.0 * _second(f, z, a, b, ha / 2.0, hb / 2.0, f0) - d) / 3.0
    return d


def jacobian(f, z, axes, scheme=DEFAULT_SCHEME, eps=None, valid=y_product_positive):
    """Derivatives along each of ``axes``; the derivative index is the LAST axis."""
    parts = [partial(f, z, a, scheme, eps, valid) for a in axes]
    return np.stack(parts, axis=-1)


def hessian(f, z, axes_a, axes_b, scheme=DEFAULT_SCHEME, eps=None, valid=y_product_positive):
    """Second derivatives; result shape is f.shape + (len(axes_a), len(axes_b))."""
    z = np.asarray(z, dtype=float)
    f0 = _call(f, z)
    rows = []
    for a in axes_a:
        rows.append(
            np.stack([second_partial(f, z, a, b, scheme, eps, valid, f0) for b in axes_b], axis=-1)
        )
    return np.stack(rows, axis=-2)


def t_axis():
    return 0


def x_axes(n):
    return list(range(1, n + 1))


def y_axes(n):
    return list(range(n + 1, 2 * n + 1))


def stencil_derivatives(f_batch, z, grad_axes, hess_pairs, scheme=DEFAULT_SCHEME, valid_batch=None):
    """First and second central differences from ONE batched evaluation.

    ``f_batch`` maps an (M, d) array of points to an (M,) array.  Returns
    ``(grad, hess)`` where ``grad[a]`` is df/dz_a for ``a`` in ``grad_axes`` and
    ``hess[a, b]`` is d^2 f/dz_a dz_b for each pair in ``hess_pairs``.
    """
    z = np.asarray(z, dtype=float)
    axes = sorted(set(grad_axes) | {a for pair in hess_pairs for a in pair})
    h1 = {a: scheme.eps_first * max(1.0, abs(z[a])) for a in axes}
    h2 = {a: scheme.eps_second * max(1.0, abs(z[a])) for a in axes}
    levels = (1.0, 0.5) if scheme.richardson else (1.0,)
    extra_second = scheme.richardson and scheme.richardson_second

    for _ in range(scheme.max_halvings + 1):
        rows = [z]
        index = {}

        def add(key, shifts):
            zz = z.copy()
            for a, s in shifts:
                zz[a] += s
            index[key] = len(rows)
            rows.append(zz)

        for lev in levels:
            for a in grad_axes:
                for s in (1, -1):
                    add(("g", a, s, lev), [(a, s * h1[a] * lev)])
            for a, b in hess_pairs if (lev == 1.0 or extra_second) else ():
                if a == b:
                    for s in (1, -1):
                        add(("h", a, a, s, s, lev), [(a, s * h2[a] * lev)])
                else:
                    for sa in (1, -1):
                        for sb in (1, -1):
                            add(("h", a, b, sa, sb, lev), [(a, sa * h2[a] * lev), (b, sb * h2[b] * lev)])
        pts = np.array(rows)
        ok = np.ones(len(pts), dtype=bool) if valid_batch is None else valid_batch(pts)
        if np.all(ok):
            break
        h1 = {a: v / 2.0 for a, v in h1.items()}
        h2 = {a: v / 2.0 for a, v in h2.items()}
    else:
        raise StencilError(f"stencil around z={list(z)} leaves the domain")

    try:
        vals = np.asarray(f_batch(pts), dtype=float)
    except StencilError:
        raise
    except DomainError as exc:
        raise StencilError(f"stencil evaluation failed: {exc}") from exc
    f0 = vals[0]

    def first(a, lev):
        return (vals[index["g", a, 1, lev]] - vals[index["g", a, -1, lev]]) / (2.0 * h1[a] * lev)

    def second(a, b, lev):
        if a == b:
            hh = h2[a] * lev
            return (vals[index["h", a, a, 1, 1, lev]] - 2.0 * f0 + vals[index["h", a, a, -1, -1, lev]]) / (hh * hh)
        v = {(sa, sb): vals[index["h", a, b, sa, sb, lev]] for sa in (1, -1) for sb in (1, -1)}
        return (v[1, 1] - v[1, -1] - v[-1, 1] + v[-1, -1]) / (4.0 * h2[a] * h2[b] * lev * lev)

    def extrapolate(on, fn, *args):
        if on:
            return (4.0 * fn(*args, 0.5) - fn(*args, 1.0)) / 3.0
        return fn(*args, 1.0)

    grad = {a: extrapolate(scheme.richardson, first, a) for a in grad_axes}
    hess = {(a, b): extrapolate(extra_second, second, a, b) for a, b in hess_pairs}
    return grad, hess

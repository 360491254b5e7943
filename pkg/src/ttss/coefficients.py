"""Separable coefficient descriptors.

Coefficients (diffusion, convection components, reaction, sources, boundary
and initial data) are sums of separable terms; each term is a scale times a
product of univariate factors, one per dimension.  Factors know their value
and first two derivatives, which is what manufactured right-hand sides need.

The JSON form of a factor is ["name", [params...]] with the built-ins
const, sin_pi_k, poly, exp, bump; a coefficient is either a plain number or
{"terms": [{"scale": s, "factors": [factor, ...]}, ...]}.
"""

from __future__ import annotations

import numpy as np

from .tensor_train import tt_from_separable

__all__ = [
    "Factor",
    "Const",
    "SinPiK",
    "Poly",
    "Exp",
    "Bump",
    "Coefficient",
    "constant_coefficient",
    "factor_from_json",
    "coefficient_from_json",
]


class Factor:
    """Univariate factor with analytic derivatives."""

    def value(self, x):
        raise NotImplementedError

    def d1(self, x):
        raise NotImplementedError

    def d2(self, x):
        raise NotImplementedError

    def max_abs(self, x):
        return float(np.abs(self.value(x)).max())


class Const(Factor):
    def __init__(self, c):
        self.c = float(c)

    def value(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)

    def d1(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    d2 = d1

    def __repr__(self):
        return f"Const({self.c})"


class SinPiK(Factor):
    """sin(k * pi * x)."""

    def __init__(self, k):
        self.k = float(k)

    def value(self, x):
        return np.sin(self.k * np.pi * np.asarray(x, dtype=float))

    def d1(self, x):
        w = self.k * np.pi
        return w * np.cos(w * np.asarray(x, dtype=float))

    def d2(self, x):
        w = self.k * np.pi
        return -(w**2) * np.sin(w * np.asarray(x, dtype=float))

    def __repr__(self):
        return f"SinPiK({self.k})"


class Poly(Factor):
    """Polynomial with ascending coefficients."""

    def __init__(self, coeffs):
        self.p = np.polynomial.Polynomial(np.asarray(coeffs, dtype=float))

    def value(self, x):
        return self.p(np.asarray(x, dtype=float))

    def d1(self, x):
        return self.p.deriv()(np.asarray(x, dtype=float))

    def d2(self, x):
        return self.p.deriv(2)(np.asarray(x, dtype=float))

    def __repr__(self):
        return f"Poly({list(self.p.coef)})"


class Exp(Factor):
    """exp(a * x)."""

    def __init__(self, a):
        self.a = float(a)

    def value(self, x):
        return np.exp(self.a * np.asarray(x, dtype=float))

    def d1(self, x):
        return self.a * self.value(x)

    def d2(self, x):
        return self.a**2 * self.value(x)

    def __repr__(self):
        return f"Exp({self.a})"


class Bump(Factor):
    """Compact quartic bump ((1 - u^2)_+)^2 with u = (x - center)/halfwidth."""

    def __init__(self, center, halfwidth):
        self.center = float(center)
        self.halfwidth = float(halfwidth)

    def _u(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.halfwidth

    def value(self, x):
        u = self._u(x)
        return np.clip(1.0 - u * u, 0.0, None) ** 2

    def d1(self, x):
        u = self._u(x)
        inside = np.abs(u) < 1.0
        return np.where(inside, -4.0 * u * (1.0 - u * u), 0.0) / self.halfwidth

    def d2(self, x):
        u = self._u(x)
        inside = np.abs(u) < 1.0
        return np.where(inside, -4.0 + 12.0 * u * u, 0.0) / self.halfwidth**2

    def __repr__(self):
        return f"Bump({self.center}, {self.halfwidth})"


class Coefficient:
    """Sum of separable terms over a fixed number of dimensions."""

    def __init__(self, dims, terms):
        self.dims = int(dims)
        self.terms = []
        for scale, factors in terms:
            if len(factors) != self.dims:
                raise ValueError(
                    f"term has {len(factors)} factors, expected {self.dims}"
                )
            self.terms.append((float(scale), list(factors)))

    @property
    def is_constant(self):
        return all(
            all(isinstance(f, Const) for f in fs) for _, fs in self.terms
        )

    def constant_value(self):
        if not self.is_constant:
            raise ValueError("coefficient is not constant")
        return sum(s * np.prod([f.c for f in fs]) for s, fs in self.terms)

    def __call__(self, points):
        """Evaluate at points of shape (k, dims)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.zeros(pts.shape[0])
        for s, fs in self.terms:
            prod = np.full(pts.shape[0], s)
            for l, f in enumerate(fs):
                prod *= f.value(pts[:, l])
            out += prod
        return out

    def sample_tt(self, axes):
        """Exact train of the coefficient sampled on a tensor grid.

        `axes` is one 1-d array of sample points per dimension.
        """
        terms = [
            (s, [f.value(np.asarray(ax)) for f, ax in zip(fs, axes)])
            for s, fs in self.terms
        ]
        return tt_from_separable(terms)

    def max_abs_bound(self, axes):
        """Upper bound of |coefficient| over the tensor grid spanned by axes."""
        return sum(
            abs(s) * np.prod([f.max_abs(np.asarray(ax)) for f, ax in zip(fs, axes)])
            for s, fs in self.terms
        )

    def with_prepended_axis(self, factor=None):
        """Same coefficient on dims+1 axes; new leading axis, constant 1."""
        lead = factor or Const(1.0)
        return Coefficient(
            self.dims + 1, [(s, [lead] + fs) for s, fs in self.terms]
        )

    def __repr__(self):
        return f"Coefficient(dims={self.dims}, terms={len(self.terms)})"


def constant_coefficient(value, dims):
    return Coefficient(dims, [(float(value), [Const(1.0)] * dims)])


_FACTORY = {
    "const": Const,
    "sin_pi_k": SinPiK,
    "poly": Poly,
    "exp": Exp,
    "bump": Bump,
}


def factor_from_json(obj):
    """["name", [params...]] -> Factor."""
    if not (isinstance(obj, (list, tuple)) and len(obj) == 2):
        raise ValueError(f"malformed factor {obj!r}")
    name, params = obj
    if name not in _FACTORY:
        raise ValueError(f"unknown factor {name!r}; known: {sorted(_FACTORY)}")
    cls = _FACTORY[name]
    if name == "poly":
        return cls(params)
    return cls(*params)


def coefficient_from_json(obj, dims):
    """Number or {"terms": [{"scale": s, "factors": [...]}, ...]} -> Coefficient."""
    if isinstance(obj, (int, float)):
        return constant_coefficient(obj, dims)
    if not isinstance(obj, dict) or "terms" not in obj:
        raise ValueError(f"malformed coefficient {obj!r}")
    terms = []
    for term in obj["terms"]:
        scale = term.get("scale", 1.0)
        factors = [factor_from_json(f) for f in term["factors"]]
        terms.append((scale, factors))
    return Coefficient(dims, terms)

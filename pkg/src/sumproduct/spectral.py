"""Fourier analysis on finite abelian groups.

Normalization is asymmetric and global: averages on the group side, sums on
the character side.

    fhat(r) = E_x f(x) e(-r(x)),    f(x) = sum_r fhat(r) e(r(x)),
    ||f||_p^p = E_x |f(x)|^p,       ||fhat||_p^p = sum_r |fhat(r)|^p.

The fast path is numpy's multidimensional FFT over the grid shape of the
group; ``fourier_naive`` evaluates the defining sum directly and is kept as
the slow oracle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .groups import GroupSpec

BOUNDED_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GridFunction:
    group: GroupSpec
    values: np.ndarray
    bounded: bool = False

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128).reshape(-1)
        if v.shape[0] != self.group.order:
            raise ValidationError(f"expected {self.group.order} values, got {v.shape[0]}")
        if self.bounded and np.abs(v).max(initial=0.0) > 1 + BOUNDED_TOL:
            raise ValidationError("function flagged 1-bounded has sup|f| > 1")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __add__(self, other):
        _same_group(self, other)
        return GridFunction(self.group, self.values + other.values)

    def __sub__(self, other):
        _same_group(self, other)
        return GridFunction(self.group, self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            _same_group(self, c)
            return GridFunction(self.group, self.values * c.values)
        return GridFunction(self.group, self.values * c)

    __rmul__ = __mul__

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def mean(self) -> complex:
        return complex(self.values.mean())


@dataclass(frozen=True, eq=False)
class Spectrum:
    group: GroupSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128).reshape(-1)
        if c.shape[0] != self.group.order:
            raise ValidationError(f"expected {self.group.order} coefficients, got {c.shape[0]}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)


def _same_group(f, g):
    if f.group != g.group:
        raise ValidationError(f"group mismatch: {f.group.invariant_factors} vs {g.group.invariant_factors}")


def indicator(group: GroupSpec, elements) -> GridFunction:
    v = np.zeros(group.order)
    v[np.asarray(list(elements), dtype=np.int64)] = 1.0
    return GridFunction(group, v, bounded=True)


def character(group: GroupSpec, gamma) -> GridFunction:
    """x -> e(gamma(x))."""
    u = group.character_numerators(gamma)
    return GridFunction(group, np.exp(2j * np.pi * u / group.exponent), bounded=True)


def fourier(f: GridFunction) -> Spectrum:
    G = f.group
    grid = f.values.reshape(G.shape)
    return Spectrum(G, np.fft.fftn(grid).reshape(-1) / G.order)


def inverse_fourier(S: Spectrum) -> GridFunction:
    G = S.group
    grid = S.coeffs.reshape(G.shape)
    return GridFunction(G, np.fft.ifftn(grid).reshape(-1) * G.order)


def character_table(G: GroupSpec) -> np.ndarray:
    """Matrix of e(r(x)) with rows indexed by characters r, columns by x.

    O(|G|^2) memory; oracle use only.
    """
    L = G.exponent
    n = np.array(G.invariant_factors, dtype=np.int64)
    w = L // n
    u = (G.coords * w) @ G.coords.T % L
    return np.exp(2j * np.pi * u / L)


def fourier_naive(f: GridFunction) -> Spectrum:
    T = character_table(f.group)
    return Spectrum(f.group, np.conj(T) @ f.values / f.group.order)


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """(f*g)(x) = E_y f(y) g(x - y)."""
    _same_group(f, g)
    return inverse_fourier(Spectrum(f.group, fourier(f).coeffs * fourier(g).coeffs))


def convolve_naive(f: GridFunction, g: GridFunction) -> GridFunction:
    _same_group(f, g)
    G = f.group
    idx = np.arange(G.order)
    diff = G.sub(idx[:, None], idx[None, :])  # diff[x, y] = x - y
    return GridFunction(G, (f.values[None, :] * g.values[diff]).mean(axis=1))


def u2_norm(f: GridFunction) -> float:
    """Gowers U^2 norm, computed as the l^4 norm of the spectrum."""
    return float(np.sum(np.abs(fourier(f).coeffs) ** 4) ** 0.25)


def u2_norm_direct(f: GridFunction) -> float:
    """E_{x,h1,h2} f(x) conj f(x+h1) conj f(x+h2) f(x+h1+h2), to the 1/4.

    O(|G|^3); for testing on small groups.
    """
    G = f.group
    v = f.values
    idx = np.arange(G.order)
    plus = G.add(idx[:, None], idx[None, :])  # plus[x, h] = x + h
    total = 0.0 + 0.0j
    for x in range(G.order):
        row = plus[x]  # x + h1 for all h1
        a = np.conj(v[row])  # conj f(x+h1)
        # f(x + h1 + h2) for all (h1, h2)
        b = v[plus[row]]
        total += v[x] * np.sum(a[:, None] * np.conj(v[row])[None, :] * b)
    val = (total / G.order**3).real
    return float(max(val, 0.0) ** 0.25)


def lp_norm(f: GridFunction, p: float) -> float:
    if p < 1:
        raise ValidationError(f"L^p norm needs p >= 1, got {p}")
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    return float(np.mean(a**p) ** (1.0 / p))


def spectrum_lp(S: Spectrum, p: float) -> float:
    if p < 1:
        raise ValidationError(f"l^p norm needs p >= 1, got {p}")
    a = np.abs(S.coeffs)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    return float(np.sum(a**p) ** (1.0 / p))


def spectrum_l1(S: Spectrum) -> float:
    return float(np.abs(S.coeffs).sum())


def inner(f: GridFunction, g: GridFunction) -> complex:
    """<f, g> = E_x f(x) conj g(x)."""
    _same_group(f, g)
    return complex(np.mean(f.values * np.conj(g.values)))


def spectral_inner(S: Spectrum, T: Spectrum) -> complex:
    """<fhat, ghat> = sum_r fhat(r) conj ghat(r)."""
    if S.group != T.group:
        raise ValidationError("group mismatch")
    return complex(np.sum(S.coeffs * np.conj(T.coeffs)))

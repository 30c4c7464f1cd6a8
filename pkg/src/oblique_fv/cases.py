"""Manufactured test cases.

Every case uses the harmonic solution ``T(x) = 1 / |x - x0|`` with
``x0 = (-0.3, -0.2, -0.1)`` (outside all test domains).  The oblique field
``V`` is normalized on Gamma so that ``V / (V . n) = n + W`` and the datum
becomes ``g = grad T . V / (V . n)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Domain, outward_normal

X0 = np.array([-0.3, -0.2, -0.1])
MIN_NORMAL_COMPONENT = 1e-8

VectorField = Callable[[np.ndarray], np.ndarray]


def harmonic_solution(x):
    return 1.0 / np.linalg.norm(np.asarray(x) - X0, axis=-1)


def harmonic_gradient(x):
    r = np.asarray(x) - X0
    return -r / np.linalg.norm(r, axis=-1, keepdims=True) ** 3


class CaseError(ValueError):
    pass


@dataclass(frozen=True)
class Case:
    name: str
    domain: Domain
    V: VectorField
    exact: Callable[[np.ndarray], np.ndarray] = harmonic_solution
    gradient: VectorField = harmonic_gradient
    description: str = ""

    def normal(self, x):
        return outward_normal(self.domain, x)

    def normal_component(self, x):
        return np.einsum("...i,...i", self.V(x), self.normal(x))

    def _checked_vn(self, x):
        vn = self.normal_component(x)
        if np.any(vn <= MIN_NORMAL_COMPONENT):
            raise CaseError(f"case {self.name!r}: V . n is not positive on Gamma (min {vn.min():.3e})")
        return vn

    def V_normalized(self, x):
        return self.V(x) / self._checked_vn(x)[..., None]

    def W(self, x):
        """Tangential part of the normalized oblique field."""
        return self.V_normalized(x) - self.normal(x)

    def g(self, x):
        """Normalized oblique datum ``grad T . V / (V . n)``."""
        return np.einsum("...i,...i", self.gradient(x), self.V(x)) / self._checked_vn(x)

    def dirichlet(self, x):
        return self.exact(x)


def _const(v):
    v = np.asarray(v, float)
    return lambda x: np.broadcast_to(v, np.shape(x)).copy()


def _field_xy(x):
    x = np.asarray(x, float)
    return np.stack([x[..., 0], x[..., 1], -np.ones(x.shape[:-1])], axis=-1)


def _field_rot(x):
    x = np.asarray(x, float)
    return np.stack([-x[..., 0], x[..., 2], -np.ones(x.shape[:-1])], axis=-1)


def _field_sink(x):
    return np.array([0.3, 0.2, 0.1]) - np.asarray(x, float)


def _field_normal_cube(x):
    return outward_normal(Domain.CUBE, x)


def builtin_cases() -> list[Case]:
    return [
        Case("cube_const", Domain.CUBE, _const([-1.0, -1.0, -1.0]), description="V = (-1,-1,-1)"),
        Case("cube_div", Domain.CUBE, _field_xy, description="V = (x, y, -1)"),
        Case("cube_rot", Domain.CUBE, _field_rot, description="V = (-x, z, -1)"),
        Case("tesseroid", Domain.TESSEROID, _field_sink, description="V = (0.3,0.2,0.1) - x"),
        Case("perturbed_sphere", Domain.PERTURBED_SPHERE, _field_sink,
             description="V = (0.3,0.2,0.1) - x"),
        Case("cube_tangential", Domain.CUBE, _const([11.4301, 0.0, -1.0]),
             description="V = (11.4301, 0, -1)"),
        Case("cube_neumann", Domain.CUBE, _field_normal_cube, description="V = n"),
    ]


def get_case(name: str) -> Case:
    for c in builtin_cases():
        if c.name == name:
            return c
    raise KeyError(f"unknown case {name!r}; known: {[c.name for c in builtin_cases()]}")


def zero_case(domain: Domain | str = Domain.CUBE) -> Case:
    """Pure normal derivative, zero datum, zero Dirichlet data."""
    domain = Domain.parse(domain)
    zero = lambda x: np.zeros(np.shape(x)[:-1])
    return Case("zero", domain, lambda x: outward_normal(domain, x), exact=zero,
                gradient=lambda x: np.zeros(np.shape(x)), description="T = 0, V = n")


def affine_case(c0: float, c, V=None, domain: Domain | str = Domain.CUBE) -> Case:
    """Affine exact solution ``c0 + c . x``; handy for exactness checks."""
    domain = Domain.parse(domain)
    c = np.asarray(c, float)
    V = V if V is not None else (lambda x: outward_normal(domain, x))
    return Case("affine", domain, V, exact=lambda x: c0 + np.asarray(x) @ c,
                gradient=lambda x: np.broadcast_to(c, np.shape(x)).copy())

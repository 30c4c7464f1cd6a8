"""Structured representative-point grids for the three test domains.

A grid with ``dims = (I, J, K)`` holds ``(I+2) x (J+2) x (K+2)`` points.
The layer ``k = 0`` lies on the oblique-derivative boundary (Gamma); every
other extremal index lies on the Dirichlet boundary.  Points with ``k = 0``
and an extremal ``i`` or ``j`` sit on the rim of Gamma and are treated as
Dirichlet data points.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

INTERIOR = 0
GAMMA = 1
DIRICHLET = 2

U_MIN, U_MAX = 3 * np.pi / 8, 5 * np.pi / 8
V_MIN, V_MAX = 0.0, np.pi / 4


class Domain(str, enum.Enum):
    CUBE = "cube"
    TESSEROID = "tesseroid"
    PERTURBED_SPHERE = "perturbed_sphere"

    @classmethod
    def parse(cls, value: "str | Domain") -> "Domain":
        if isinstance(value, Domain):
            return value
        key = value.strip().lower().replace("-", "_")
        aliases = {"perturbedspheresection": "perturbed_sphere",
                   "perturbed_sphere_section": "perturbed_sphere"}
        key = aliases.get(key.replace("_", ""), aliases.get(key, key))
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown domain {value!r}") from None


class GridError(ValueError):
    pass


_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x):
    """One SplitMix64 step on an array of uint64 states (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def keyed_uniform(seed, *keys):
    """Uniform [0, 1) samples from a stream keyed by ``(seed, *keys)``.

    Every output depends only on its own key tuple, so grids come out the same
    whatever order the points are visited in.
    """
    h = splitmix64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    for k in keys:
        h = splitmix64(h ^ np.asarray(k).astype(np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / 2.0**53)


def _spherical(r, u, v):
    su = np.sin(u)
    return np.stack([r * su * np.cos(v), r * su * np.sin(v), r * np.cos(u)], axis=-1)


def _bump(u, v):
    return np.sin(10 * u) + np.sin(10 * v)


def domain_map(domain: Domain, a, b, c) -> np.ndarray:
    """Map unit parameters ``(a, b, c)`` in [0, 1]^3 to physical points.

    ``c = 0`` is Gamma.  For the spherical domains ``a`` runs over the
    colatitude, ``b`` over the longitude and ``c`` over the radius.
    """
    a, b, c = np.broadcast_arrays(np.asarray(a, float), np.asarray(b, float),
                                  np.asarray(c, float))
    if domain is Domain.CUBE:
        return np.stack([a, b, c], axis=-1)
    u = U_MIN + a * (U_MAX - U_MIN)
    v = V_MIN + b * (V_MAX - V_MIN)
    r = 1.0 + c
    if domain is Domain.PERTURBED_SPHERE:
        # radius r + 0.04 (2 - r) bump: matches Gamma at r = 1, the sphere at r = 2
        r = r + 0.04 * (2.0 - r) * _bump(u, v)
    return _spherical(r, u, v)


def outward_normal(domain: Domain, x: np.ndarray) -> np.ndarray:
    """Outward unit normal of the domain on Gamma, evaluated near ``x``.

    For the spherical domains the normal of the surface through the radial
    projection of ``x`` onto Gamma is returned, so points slightly off the
    surface (edge midpoints, quadrature points) are handled smoothly.
    """
    x = np.asarray(x, float)
    if domain is Domain.CUBE:
        n = np.zeros_like(x)
        n[..., 2] = -1.0
        return n
    rr = np.linalg.norm(x, axis=-1, keepdims=True)
    rhat = x / rr
    if domain is Domain.TESSEROID:
        return -rhat
    u = np.arccos(np.clip(rhat[..., 2], -1.0, 1.0))
    v = np.arctan2(x[..., 1], x[..., 0])
    rho = 1.0 + 0.04 * _bump(u, v)
    rho_u = 0.4 * np.cos(10 * u)
    rho_v = 0.4 * np.cos(10 * v)
    su, cu, sv, cv = np.sin(u), np.cos(u), np.sin(v), np.cos(v)
    e_u = np.stack([cu * cv, cu * sv, -su], axis=-1)
    e_v = np.stack([-sv, cv, np.zeros_like(v)], axis=-1)
    # gradient of |x| - rho(u, v) evaluated on the surface radius rho
    grad = rhat - (rho_u / rho)[..., None] * e_u - (rho_v / (rho * su))[..., None] * e_v
    return -grad / np.linalg.norm(grad, axis=-1, keepdims=True)


def domain_volume(domain: Domain) -> float | None:
    if domain is Domain.CUBE:
        return 1.0
    if domain is Domain.TESSEROID:
        return (8.0 - 1.0) / 3.0 * (np.cos(U_MIN) - np.cos(U_MAX)) * (V_MAX - V_MIN)
    return None


@dataclass(frozen=True, eq=False)
class RepresentativeGrid:
    domain: Domain
    dims: tuple[int, int, int]
    points: np.ndarray  # (I+2, J+2, K+2, 3)
    params: np.ndarray  # unit parameters of each point, same shape
    kind: np.ndarray = field(repr=False)  # INTERIOR / GAMMA / DIRICHLET
    amplitude: float = 0.0
    seed: int = 0

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.points.shape[:3]

    @property
    def n_points(self) -> int:
        return int(np.prod(self.shape))

    def flat_points(self) -> np.ndarray:
        return self.points.reshape(-1, 3)

    def pid(self, i, j, k):
        nx, ny, nz = self.shape
        return (np.asarray(i) * ny + np.asarray(j)) * nz + np.asarray(k)


def classify(dims: tuple[int, int, int]) -> np.ndarray:
    I, J, K = dims
    kind = np.full((I + 2, J + 2, K + 2), INTERIOR, dtype=np.int8)
    kind[:, :, 0] = GAMMA
    kind[[0, -1], :, :] = DIRICHLET
    kind[:, [0, -1], :] = DIRICHLET
    kind[:, :, -1] = DIRICHLET
    return kind


def generate_grid(domain: "Domain | str", dims, perturbation_amplitude: float = 0.0,
                  seed: int = 0) -> RepresentativeGrid:
    """Build the representative grid of ``domain``.

    Points are laid out uniformly in parameter space and, when
    ``perturbation_amplitude > 0``, displaced by independent uniform
    offsets in ``(-A h, A h)`` per parameter axis, ``h`` being the parameter
    spacing.  Offsets along an axis in which a point is extremal are zeroed,
    so boundary points only slide along their boundary surface.
    """
    domain = Domain.parse(domain)
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 2:
        raise GridError(f"dims must be three integers >= 2, got {dims}")
    if not 0.0 <= perturbation_amplitude < 0.5:
        raise GridError(f"perturbation amplitude must lie in [0, 0.5), got {perturbation_amplitude}")
    I, J, K = dims
    axes = [np.linspace(0.0, 1.0, n + 2) for n in dims]
    params = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    if perturbation_amplitude > 0.0:
        spacing = np.array([1.0 / (n + 1) for n in dims])
        ijk = np.stack(np.meshgrid(*[np.arange(n + 2) for n in dims], indexing="ij"), axis=-1)
        comp = np.broadcast_to(np.arange(3), params.shape)
        u = keyed_uniform(seed, ijk[..., None, 0], ijk[..., None, 1], ijk[..., None, 2], comp)
        shift = (2.0 * u - 1.0) * (perturbation_amplitude * spacing)
        for ax in range(3):
            idx = [slice(None)] * 3 + [ax]
            idx[ax] = [0, -1]
            shift[tuple(idx)] = 0.0
        params = params + shift
    points = domain_map(domain, params[..., 0], params[..., 1], params[..., 2])
    return RepresentativeGrid(domain=domain, dims=dims, points=points, params=params,
                              kind=classify(dims), amplitude=float(perturbation_amplitude),
                              seed=int(seed))

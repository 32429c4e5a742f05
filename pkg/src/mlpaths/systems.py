"""Benchmark drift fields.

Every factory returns a :class:`~mlpaths.core.SystemSpec`. States of the
finite-dimensional systems are plain vectors; ``sde2d`` uses ``(r, z)``
and the 3D systems ``(x, y, z)``. The Allen-Cahn entries act on flattened
grid values with the L^2(torus) inner product.
"""

from __future__ import annotations


import numpy as np

from .core import Decomposition, SystemSpec
from .errors import DriftSingularityError, NotOrthogonalTypeError
from . import spde as _spde


# ---------------------------------------------------------------------------
# double well


def _dw1_drift(x):
    return x - x**3


def double_well_1d() -> SystemSpec:
    """``x' = x - x^3`` with ``V = (1 - x^2)^2 / 4``."""
    dec = Decomposition(
        V=lambda x: 0.25 * (1 - x[..., 0] ** 2) ** 2,
        gradV=lambda x: -(x - x**3),
        b=lambda x: np.zeros_like(x),
    )
    return SystemSpec(
        name="double_well_1d", dim=1, drift=_dw1_drift, sinks=((-1.0,), (1.0,)),
        jacobian=lambda x: (1 - 3 * x**2)[..., None],
        decomposition=dec,
        meta={"separatrix": "x = 0", "saddle": (0.0,)},
    )


def _dw2_drift(x):
    out = np.empty_like(x)
    out[..., 0] = x[..., 0] - x[..., 0] ** 3
    out[..., 1] = -x[..., 1]
    return out


def _dw2_jac(x):
    J = np.zeros(x.shape + (2,))
    J[..., 0, 0] = 1 - 3 * x[..., 0] ** 2
    J[..., 1, 1] = -1.0
    return J


def double_well_2d() -> SystemSpec:
    """Gradient double well in the plane: ``(x - x^3, -y)``."""
    dec = Decomposition(
        V=lambda x: 0.25 * (1 - x[..., 0] ** 2) ** 2 + 0.5 * x[..., 1] ** 2,
        gradV=lambda x: -_dw2_drift(x),
        b=lambda x: np.zeros_like(x),
    )
    return SystemSpec(
        name="double_well_2d", dim=2, drift=_dw2_drift, sinks=((-1.0, 0.0), (1.0, 0.0)),
        jacobian=_dw2_jac, decomposition=dec,
        meta={"separatrix": "x = 0", "saddle": (0.0, 0.0)},
    )


# ---------------------------------------------------------------------------
# 2D nongradient system in (r, z)


def _sde2d_drift(x):
    r, z = x[..., 0], x[..., 1]
    return np.stack([1 - z**2 - r, z - z**3], axis=-1)


def _sde2d_jac(x):
    z = x[..., 1]
    J = np.zeros(x.shape + (2,))
    J[..., 0, 0] = -1.0
    J[..., 0, 1] = -2 * z
    J[..., 1, 1] = 1 - 3 * z**2
    return J


def _sde2d_gradV(x):
    z = x[..., 1]
    out = np.zeros_like(x)
    out[..., 1] = -(z - z**3)
    return out


def _sde2d_b(x):
    out = np.zeros_like(x)
    out[..., 0] = 1 - x[..., 1] ** 2 - x[..., 0]
    return out


def sde2d() -> SystemSpec:
    dec = Decomposition(V=lambda x: 0.25 * (1 - x[..., 1] ** 2) ** 2,
                        gradV=_sde2d_gradV, b=_sde2d_b)
    return SystemSpec(
        name="sde2d", dim=2, drift=_sde2d_drift, sinks=((0.0, -1.0), (0.0, 1.0)),
        jacobian=_sde2d_jac, decomposition=dec,
        meta={"separatrix": "z = 0", "saddle": (1.0, 0.0)},
    )


# ---------------------------------------------------------------------------
# 3D rotationally symmetric system


def _radial_factor(pref, rho, name):
    """``pref / rho`` with the convention 0/0 = 0; a nonzero numerator over 0 is singular."""
    sing = rho == 0
    if np.any(sing & (pref != 0)):
        raise DriftSingularityError(f"{name} axis x = y = 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(sing, 0.0, pref / np.where(sing, 1.0, rho))


def _rot_drift(X):
    x, y, z = X[..., 0], X[..., 1], X[..., 2]
    rho = np.hypot(x, y)
    p = 1 - z**2
    q = _radial_factor(p, rho, "sde3d_rot")
    return np.stack([q * x - x - y, q * y - y + x, z - z**3], axis=-1)


def _rot_b(X):
    out = _rot_drift(X)
    out[..., 2] = 0.0
    return out


def _rot_jac(X):
    x, y, z = X[..., 0], X[..., 1], X[..., 2]
    rho = np.hypot(x, y)
    if np.any(rho == 0):
        raise DriftSingularityError("sde3d_rot axis x = y = 0")
    p = 1 - z**2
    r3 = rho**3
    J = np.zeros(X.shape + (3,))
    J[..., 0, 0] = p * y**2 / r3 - 1
    J[..., 0, 1] = -p * x * y / r3 - 1
    J[..., 0, 2] = -2 * z * x / rho
    J[..., 1, 0] = -p * x * y / r3 + 1
    J[..., 1, 1] = p * x**2 / r3 - 1
    J[..., 1, 2] = -2 * z * y / rho
    J[..., 2, 2] = 1 - 3 * z**2
    return J


def _z_gradV(Vp):
    def gradV(X):
        out = np.zeros_like(X)
        out[..., 2] = Vp(X[..., 2])
        return out
    return gradV


def sde3d_rot() -> SystemSpec:
    dec = Decomposition(V=lambda X: 0.25 * (1 - X[..., 2] ** 2) ** 2,
                        gradV=_z_gradV(lambda z: z**3 - z), b=_rot_b)
    return SystemSpec(
        name="sde3d_rot", dim=3, drift=_rot_drift, sinks=((0, 0, -1.0), (0, 0, 1.0)),
        jacobian=_rot_jac, decomposition=dec,
        meta={"separatrix": "z = 0", "orbit": "z = 0, x^2 + y^2 = 1", "period": 2 * np.pi},
    )


# ---------------------------------------------------------------------------
# 3D system without rotational symmetry


def _nonrot_drift(X):
    x, y, z = X[..., 0], X[..., 1], X[..., 2]
    s = (x**4 + y**4) ** 0.25
    p = -(z + 1) * (z - 2)
    q = _radial_factor(p, s, "sde3d_nonrot")
    return np.stack([q * x - x - y**3, q * y + x**3 - y, p * z], axis=-1)


def _nonrot_b(X):
    out = _nonrot_drift(X)
    out[..., 2] = 0.0
    return out


def _nonrot_jac(X):
    x, y, z = X[..., 0], X[..., 1], X[..., 2]
    s = (x**4 + y**4) ** 0.25
    if np.any(s == 0):
        raise DriftSingularityError("sde3d_nonrot axis x = y = 0")
    p = -z**2 + z + 2
    dp = -2 * z + 1
    s5 = s**5
    J = np.zeros(X.shape + (3,))
    J[..., 0, 0] = p * y**4 / s5 - 1
    J[..., 0, 1] = -p * x * y**3 / s5 - 3 * y**2
    J[..., 0, 2] = dp * x / s
    J[..., 1, 0] = -p * y * x**3 / s5 + 3 * x**2
    J[..., 1, 1] = p * x**4 / s5 - 1
    J[..., 1, 2] = dp * y / s
    J[..., 2, 2] = dp * z + p
    return J


def sde3d_nonrot() -> SystemSpec:
    dec = Decomposition(V=lambda X: X[..., 2] ** 4 / 4 - X[..., 2] ** 3 / 3 - X[..., 2] ** 2,
                        gradV=_z_gradV(lambda z: z**3 - z**2 - 2 * z), b=_nonrot_b)
    return SystemSpec(
        name="sde3d_nonrot", dim=3, drift=_nonrot_drift, sinks=((0, 0, -1.0), (0, 0, 2.0)),
        jacobian=_nonrot_jac, decomposition=dec,
        meta={"separatrix": "z = 0", "orbit": "z = 0, x^4 + y^4 = 16"},
    )


# ---------------------------------------------------------------------------
# Allen-Cahn on the torus, flattened


def _ac_system(name, kappa, c, N, dim, shear, dealias):
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    T = _spde.torus(N, dim, dealias)
    kw = dict(kappa=kappa, c=c, shear=shear, dim=dim, dealias=dealias)

    def drift(u):
        return T.flat(_spde.ac_drift(T.unflat(u), **kw))

    def vjp(u, w):
        return T.flat(_spde.ac_drift_vjp(T.unflat(u), T.unflat(w), **kw))

    def jacobian(u):
        u = np.asarray(u, dtype=float)
        eye = np.eye(T.size)
        U = np.broadcast_to(u[..., None, :], u.shape[:-1] + (T.size, T.size))
        U = T.unflat(U)
        cols = _spde.ac_drift_jvp(U, T.unflat(eye), **kw)
        return np.swapaxes(T.flat(cols), -1, -2)

    def stepper(u, h):
        return T.flat(_spde.ac_strang_step(T.unflat(u), kappa, c, h, shear, dim, dealias))

    dec = None
    if dim == 1:
        dec = Decomposition(
            V=lambda u: _spde.ac_energy(T.unflat(u), kappa, 1),
            gradV=lambda u: T.flat(_spde.ac_energy_gradient(T.unflat(u), kappa, 1, dealias)),
            b=lambda u: c * T.flat(T.dx(T.unflat(u))),
        )
    return SystemSpec(
        name=name, dim=T.size, drift=drift,
        sinks=(-np.ones(T.size), np.ones(T.size)),
        jacobian=jacobian, vjp=vjp, decomposition=dec,
        inner_weight=1.0 / T.size, stepper=stepper,
        params={"kappa": kappa, "c": c, "N": N, "dealias": dealias},
        meta={"kind": "spde", "space_dim": dim, "shear": shear, "grid": T.shape,
              "separatrix": "not known in closed form", "saddle": tuple(np.zeros(T.size))},
    )


def ac1d(kappa=0.005, c=0.1, N=64, dealias=True) -> SystemSpec:
    """``u_t = kappa u_xx + u - u^3 + c u_x`` on the unit circle."""
    return _ac_system("ac1d", kappa, c, N, 1, "uniform", dealias)


def ac2d(kappa=0.005, c=0.0, N=32, dealias=True) -> SystemSpec:
    """``u_t = kappa Lap u + u - u^3 + c sin(2 pi y) u_x`` on the unit torus.

    No decomposition is attached; whether this field is orthogonal-type is open.
    """
    return _ac_system("ac2d", kappa, c, N, 2, "siny", dealias)


CATALOG = {
    "double_well_1d": double_well_1d,
    "double_well_2d": double_well_2d,
    "sde2d": sde2d,
    "sde3d_rot": sde3d_rot,
    "sde3d_nonrot": sde3d_nonrot,
    "ac1d": ac1d,
    "ac2d": ac2d,
}


def get_system(name: str, **params) -> SystemSpec:
    """Look up a catalog entry by name; ``params`` go to the factory."""
    try:
        factory = CATALOG[name]
    except KeyError:
        raise ValueError(f"unknown system {name!r}; known: {sorted(CATALOG)}") from None
    return factory(**params)


def _as_system(system):
    return get_system(system) if isinstance(system, str) else system


def drift(system, x):
    system = _as_system(system)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != system.dim:
        raise ValueError(f"state has dimension {x.shape[-1]}, system expects {system.dim}")
    return system.f(x)


def decomposition_residual(system, x):
    """``|<gradV(x), b(x)>|`` in the system inner product."""
    system = _as_system(system)
    dec = system.decomposition
    if dec is None:
        raise NotOrthogonalTypeError(system.name)
    x = np.asarray(x, dtype=float)
    return np.abs(system.inner(dec.gradV(x), dec.b(x)))


def exact_action(system, x_s) -> float:
    """Barrier-height action ``2 (V(x_s) - V(x_a))`` with ``x_a`` the first sink."""
    system = _as_system(system)
    dec = system.decomposition
    if dec is None:
        raise NotOrthogonalTypeError(system.name)
    x_s = np.asarray(x_s, dtype=float).reshape(system.dim)
    return float(2 * (dec.V(x_s) - dec.V(system.sinks[0])))


def trivial_decomposition(system: SystemSpec) -> Decomposition:
    """``V = 0, b = f``; orthogonal for any drift."""
    return Decomposition(V=lambda x: np.zeros(np.shape(x)[:-1]),
                         gradV=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
                         b=system.f)

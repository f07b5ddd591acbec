"""Threading-form metric specifications, per-point frame data, and kinematics.

The metric is given by a lapse-like function Phi, a shift covector xi_i, and
a spatial block g_ij, all scalar-field expressions; see docs/specfile.md for
the on-disk format.  ``eval_frame`` turns a spec into per-point jets of every
frame quantity, and ``compute_kinematics`` produces the vorticity, expansion,
shear, extrinsic-curvature and acceleration fields of the threading frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import exprlang, jets
from .errors import (
    DuplicateKey,
    InputError,
    MissingKey,
    NotLorentzian,
    SingularSpatialMetric,
    UnboundIdentifier,
)
from .exprlang import Expr
from .jets import Jet

MINOR_TOL = 1e-12
INVERSE_TOL = 1e-12


@dataclass(frozen=True)
class MatterSpec:
    mode: str  # "from_efe" or "explicit"
    rho: Expr | None = None
    p: Expr | None = None
    q: tuple[Expr | None, Expr | None, Expr | None] = (None, None, None)
    pi: dict = field(default_factory=dict)  # (i, j) with i <= j -> Expr


@dataclass(frozen=True)
class MetricSpec:
    phi: Expr
    xi: tuple[Expr | None, Expr | None, Expr | None]
    g: dict  # (i, j) with i <= j -> Expr; missing off-diagonals mean 0
    params: dict[str, float]
    matter: MatterSpec
    lam: float = 0.0
    newton_g: float = 1.0
    source_text: str = ""


_METRIC_KEYS = {"Phi", "xi1", "xi2", "xi3", "g11", "g12", "g13", "g22", "g23", "g33"}
_MATTER_KEYS = {"mode", "rho", "p", "q1", "q2", "q3",
                "pi11", "pi12", "pi13", "pi22", "pi23", "pi33"}
_CONsrc_KEYS = {"lambda", "newton_g"}
_RESERVED = set(exprlang.COORDS) | set(exprlang.FUNCTIONS)


def _parse_sections(text: str) -> dict[str, dict[str, str]]:
    sections: dict[str, dict[str, str]] = {}
    current: dict[str, str] | None = None
    current_name = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current_name = line[1:-1].strip()
            if current_name not in ("params", "metric", "matter", "constants"):
                raise InputError(f"line {lineno}: unknown section [{current_name}]")
            if current_name in sections:
                raise DuplicateKey(f"section [{current_name}]")
            current = sections.setdefault(current_name, {})
            continue
        if current is None:
            raise InputError(f"line {lineno}: key outside any section: {line!r}")
        if "=" not in line:
            raise InputError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key in current:
            raise DuplicateKey(key)
        current[key] = value
    return sections


def _require_float(section: str, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise InputError(f"[{section}] {key} = {value!r} is not a real number") from None


def load_spec(text: str) -> MetricSpec:
    """Parse and fully validate a metric spec file."""
    sections = _parse_sections(text)

    params: dict[str, float] = {}
    for name, value in sections.get("params", {}).items():
        if not name.isidentifier() or name in _RESERVED:
            raise InputError(f"[params] illegal parameter name {name!r}")
        params[name] = _require_float("params", name, value)

    metric = sections.get("metric", {})
    for key in metric:
        if key not in _METRIC_KEYS:
            raise InputError(f"[metric] unknown key {key!r}")
    for key in ("Phi", "g11", "g22", "g33"):
        if key not in metric:
            raise MissingKey(key)

    def expr_of(section: dict[str, str], key: str) -> Expr | None:
        if key not in section:
            return None
        ast = exprlang.parse_expr(section[key])
        unbound = exprlang.validate_bindings(ast, params)
        if unbound:
            raise UnboundIdentifier(unbound)
        return ast

    phi = expr_of(metric, "Phi")
    xi = tuple(expr_of(metric, f"xi{i}") for i in (1, 2, 3))
    g = {}
    for i in (1, 2, 3):
        for j in range(i, 4):
            e = expr_of(metric, f"g{i}{j}")
            if e is not None:
                g[(i - 1, j - 1)] = e

    matter_sec = sections.get("matter", {"mode": "from_efe"})
    for key in matter_sec:
        if key not in _MATTER_KEYS:
            raise InputError(f"[matter] unknown key {key!r}")
    mode = matter_sec.get("mode", "from_efe")
    if mode not in ("from_efe", "explicit"):
        raise InputError(f"[matter] mode must be from_efe or explicit, got {mode!r}")
    if mode == "explicit":
        for key in ("rho", "p"):
            if key not in matter_sec:
                raise MissingKey(key)
        matter = MatterSpec(
            mode="explicit",
            rho=expr_of(matter_sec, "rho"),
            p=expr_of(matter_sec, "p"),
            q=tuple(expr_of(matter_sec, f"q{i}") for i in (1, 2, 3)),
            pi={(i - 1, j - 1): e for i in (1, 2, 3) for j in range(i, 4)
                if (e := expr_of(matter_sec, f"pi{i}{j}")) is not None},
        )
    else:
        matter = MatterSpec(mode="from_efe")

    constants = sections.get("constants", {})
    for key in constants:
        if key not in _CONSTANT_KEYS:
            raise InputError(f"[constants] unknown key {key!r}")
    lam = _require_float("constants", "lambda", constants.get("lambda", "0"))
    newton_g = _require_float("constants", "newton_g", constants.get("newton_g", "1"))

    return MetricSpec(phi=phi, xi=xi, g=g, params=params, matter=matter,
                      lam=lam, newton_g=newton_g, source_text=text)


class FrameData:
    """Per-point jets of the threading frame quantities.

    Attributes are jets: `phi` (scalar), `xi` (3,), `gmat` (3,3) spatial block
    of the coordinate metric, `A` (3,) with A_i = -xi_i/Phi^2, `gbar` (3,3)
    induced Riemannian metric, `gbar_inv` (3,3), and `phi2` = Phi^2.
    """

    def __init__(self, spec: MetricSpec, point, order: int):
        env = jets.seed_point(point, order)
        self.spec = spec
        self.point = env.point
        self.order = order
        self.env = env

        self.phi = exprlang.eval_expr(spec.phi, env, spec.params)
        self.phi2 = self.phi * self.phi
        if self.phi2.value <= MINOR_TOL:
            raise NotLorentzian(f"Phi^2 = {self.phi2.value} is not positive at {self.point}")

        zero = jets.constant(0.0, order)
        self.xi = jets.stack(
            [exprlang.eval_expr(e, env, spec.params) if e is not None else zero
             for e in spec.xi]
        )
        rows = []
        for i in range(3):
            row = []
            for j in range(3):
                e = spec.g.get((min(i, j), max(i, j)))
                row.append(exprlang.eval_expr(e, env, spec.params) if e is not None else zero)
            rows.append(jets.stack(row))
        self.gmat = jets.stack(rows)

        self.A = -(self.xi / self.phi2)
        self.gbar = self.gmat + self.phi2 * (self.A[:, None] * self.A[None, :])

        gb = self.gbar.value
        minors = (gb[0, 0], np.linalg.det(gb[:2, :2]), np.linalg.det(gb))
        if any(m <= MINOR_TOL for m in minors):
            raise NotLorentzian(
                f"spatial metric not positive definite at {self.point}: minors {minors}"
            )

        self.gbar_inv = jets.matrix_inverse(self.gbar)
        resid = np.max(np.abs(self.gbar_inv.value @ gb - np.eye(3)))
        if resid > INVERSE_TOL:
            raise SingularSpatialMetric(
                f"inverse residual {resid} exceeds {INVERSE_TOL} at {self.point}"
            )

    # -- frame derivatives ---------------------------------------------------

    def dt(self, f: Jet) -> Jet:
        """Plain temporal derivative d f / dx^0."""
        return f.d(0)

    def delta(self, f: Jet) -> Jet:
        """Threading spatial derivative; appends the direction axis last.

        delta f/dx^i = d_i f - A_i d_0 f, with A_i entering as jets so that
        repeated delta-derivatives compose correctly.
        """
        f0 = f.d(0)
        return jets.stack([f.d(k) - self.A[k - 1] * f0 for k in (1, 2, 3)], axis=-1)

    # -- index gymnastics ------------------------------------------------------

    def raise_first(self, t: Jet) -> Jet:
        """gbar^{k i} T_{i ...} -> T^{k}_{...}."""
        return jets.tdot(self.gbar_inv, t, 1, 0)

    def raise_axis(self, t: Jet, axis: int) -> Jet:
        out = jets.tdot(self.gbar_inv, t, 1, axis)
        return out.transpose(*_restore_axis_order(len(t.shape), axis))

    def lower_first(self, t: Jet) -> Jet:
        return jets.tdot(self.gbar, t, 1, 0)


def _restore_axis_order(rank: int, axis: int) -> tuple[int, ...]:
    # tdot puts the contracted slot first; move it back to `axis`
    order = list(range(1, rank))
    order.insert(axis, 0)
    return tuple(order)


def eval_frame(spec: MetricSpec, point, order: int = jets.DEFAULT_ORDER) -> FrameData:
    return FrameData(spec, point, order)


def delta_derivative(f: Jet, frame: FrameData):
    """(delta f/dx^1, delta f/dx^2, delta f/dx^3, d f/dx^0) as jets."""
    d = frame.delta(f)
    return d[..., 0], d[..., 1], d[..., 2], frame.dt(f)


@dataclass
class KinematicSet:
    """Kinematic fields of the threading, all stored as jets."""

    omega: Jet      # (3,3) vorticity, antisymmetric by construction
    c: Jet          # (3,)  spatial log-gradient of Phi
    a: Jet          # (3,)  -dA/dx0
    Psi: Jet        # ()    temporal log-derivative of Phi
    Theta_ij: Jet   # (3,3) expansion tensor
    Theta: Jet      # ()    expansion function
    sigma: Jet      # (3,3) shear
    K: Jet          # (3,3) extrinsic curvature K_ij
    Kmix: Jet       # (3,3) K^h_j (first index raised)
    b: Jet          # (3,)  acceleration covector, b = a + c
    sigma2: Jet     # ()    sigma_hk sigma^hk
    omega2: Jet     # ()    omega_hk omega^hk
    b2: Jet         # ()    b_k b^k


def compute_kinematics(frame: FrameData) -> KinematicSet:
    dA = frame.delta(frame.A)       # [i, k] = delta A_i / dx^k
    omega = 0.5 * (dA.transpose(1, 0) - dA)
    c = frame.delta(frame.phi) / frame.phi
    a = -frame.dt(frame.A)
    Psi = frame.dt(frame.phi) / frame.phi
    Theta_ij = 0.5 * frame.dt(frame.gbar)
    Theta = (frame.gbar_inv * Theta_ij).sum(0).sum(0)
    sigma = Theta_ij - (1.0 / 3.0) * Theta * frame.gbar
    K = Theta_ij + frame.phi2 * omega
    Kmix = frame.raise_first(K)
    b = a + c

    sigma_up = jets.tdot(jets.tdot(frame.gbar_inv, sigma, 1, 0), frame.gbar_inv, 1, 0)
    sigma2 = (sigma * sigma_up.transpose(1, 0)).sum(0).sum(0)
    omega_up = jets.tdot(jets.tdot(frame.gbar_inv, omega, 1, 0), frame.gbar_inv, 1, 0)
    omega2 = (omega * omega_up.transpose(1, 0)).sum(0).sum(0)
    b2 = (b * jets.tdot(frame.gbar_inv, b, 1, 0)).sum(0)

    return KinematicSet(omega=omega, c=c, a=a, Psi=Psi, Theta_ij=Theta_ij,
                        Theta=Theta, sigma=sigma, K=K, Kmix=Kmix, b=b,
                        sigma2=sigma2, omega2=omega2, b2=b2)

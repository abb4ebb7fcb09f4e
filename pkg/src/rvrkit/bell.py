"""Hidden-variable models, quantum CHSH values and the settings search.

Responses of a hidden-variable model are in the {0,1} convention; CHSH is
always computed on the ±1 versions A = 2a - 1.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .classical import chsh_value, to_pm
from .errors import DimensionMismatch, UnknownLabel, ValidationError
from .hilbert import (
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityOperator,
    Projector,
    bloch_vector,
    commutes,
    embed,
    pure_state,
    spin_projector,
    trace_product,
)

WEIGHT_TOL = 1e-12
GRID_STEP_DEG = 5.0
SPHERE_GRID_STEP_DEG = 15.0
ANGLE_RESOLUTION_RAD = 1e-7
MAX_REFINE_ITERATIONS = 10_000


@dataclass(frozen=True, eq=False)
class HvmModel:
    """Finite ontic-state model: weight f(λ) and a {0,1} response per observable label."""

    weights: np.ndarray
    responses: Mapping[str, np.ndarray]
    states: tuple = ()

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise ValidationError("model needs at least one ontic state")
        if np.any(w < 0):
            raise ValidationError("negative weight", residual=float(-w.min()))
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {w.sum()!r}", residual=abs(w.sum() - 1.0))
        resp = {}
        for lab, r in dict(self.responses).items():
            r = np.array(r, dtype=np.int8).ravel()
            if r.shape != w.shape:
                raise ValidationError(f"response table for {lab!r} has {r.size} entries, expected {w.size}")
            if not np.all((r == 0) | (r == 1)):
                raise ValidationError(f"responses for {lab!r} must be 0 or 1")
            r.setflags(write=False)
            resp[lab] = r
        w.setflags(write=False)
        states = tuple(self.states) if self.states else tuple(range(w.size))
        if len(states) != w.size:
            raise ValidationError("one state label per weight")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "responses", resp)
        object.__setattr__(self, "states", states)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self.responses)

    def response(self, label: str) -> np.ndarray:
        try:
            return self.responses[label]
        except KeyError:
            raise UnknownLabel(f"observable {label!r} not defined in model") from None


def hvm_expectation(model: HvmModel, observables: Sequence[str]) -> float:
    """Σ_λ f(λ) Π a(λ, ·) in the {0,1} convention (so the probability all are 1)."""
    prod = np.ones_like(model.weights)
    for lab in observables:
        prod = prod * model.response(lab)
    return float(model.weights @ prod)


def pm_expectation(model: HvmModel, observables: Sequence[str]) -> float:
    """Same as :func:`hvm_expectation` but on ±1 responses."""
    prod = np.ones_like(model.weights)
    for lab in observables:
        prod = prod * (2.0 * model.response(lab) - 1.0)
    return float(model.weights @ prod)


def chsh_per_state(model: HvmModel, a1: str, a2: str, b1: str, b2: str) -> np.ndarray:
    """CHSH term of each ontic state; always -2 or +2."""
    A1, A2, B1, B2 = (2.0 * model.response(x) - 1.0 for x in (a1, a2, b1, b2))
    return A1 * (B1 + B2) + A2 * (B1 - B2)


def hvm_chsh(model: HvmModel, a1: str, a2: str, b1: str, b2: str) -> float:
    return float(model.weights @ chsh_per_state(model, a1, a2, b1, b2))


def random_hvm(rng: np.random.Generator, n_states: int, labels: Sequence[str] = ("A1", "A2", "B1", "B2")) -> HvmModel:
    w = rng.dirichlet(np.ones(n_states))
    w = w / w.sum()
    return HvmModel(w, {lab: rng.integers(0, 2, size=n_states) for lab in labels})


def hvm_from_separable(
    components: Sequence[tuple[float, np.ndarray, np.ndarray]],
    alice: Sequence[Projector],
    bob: Sequence[Projector],
) -> HvmModel:
    """Local model reproducing a separable two-qubit state Σ w_i ρA_i ⊗ ρB_i.

    Ontic state (i, a1, a2, b1, b2): component i is drawn with weight w_i and
    each party's outcomes are drawn independently from its own local state.
    ``alice``/``bob`` are single-qubit projectors; labels are A1, A2, B1, B2.
    """
    weights, resp = [], {"A1": [], "A2": [], "B1": [], "B2": []}
    states = []
    for i, (w, ra, rb) in enumerate(components):
        pa = [trace_product(ra, [p]) for p in alice]
        pb = [trace_product(rb, [q]) for q in bob]
        for bits in itertools.product((0, 1), repeat=4):
            probs = [p if bit else 1 - p for p, bit in zip(pa + pb, bits)]
            weight = w * float(np.prod(probs))
            if weight <= 0:
                continue
            weights.append(weight)
            states.append((i,) + bits)
            for lab, bit in zip(("A1", "A2", "B1", "B2"), bits):
                resp[lab].append(bit)
    weights = np.array(weights)
    return HvmModel(weights / weights.sum(), resp, tuple(states))


# quantum side ----------------------------------------------------------------


@dataclass(frozen=True)
class Setting:
    """Bloch direction of a rank-1 qubit projector, angles in degrees."""

    theta: float
    phi: float = 0.0

    def projector(self) -> Projector:
        return spin_projector(self.theta, self.phi)


@dataclass(frozen=True, eq=False)
class TwoQubitScenario:
    rho: DensityOperator
    alice: tuple[Projector, Projector]
    bob: tuple[Projector, Projector]

    def __post_init__(self) -> None:
        if self.rho.dim != 4:
            raise DimensionMismatch("two-qubit scenario needs a dim-4 state")
        if len(self.alice) != 2 or len(self.bob) != 2:
            raise ValidationError("need exactly two settings per party")
        for p in (*self.alice, *self.bob):
            if p.dim != 4:
                raise DimensionMismatch("settings must act on the two-qubit space")
        for p in self.alice:
            for q in self.bob:
                if not commutes(p, q):
                    raise ValidationError("an Alice setting does not commute with a Bob setting")

    @classmethod
    def from_settings(cls, rho: DensityOperator, alice: Sequence[Setting], bob: Sequence[Setting]) -> "TwoQubitScenario":
        a = tuple(embed(s.projector(), 0, [2, 2]) for s in alice)
        b = tuple(embed(s.projector(), 1, [2, 2]) for s in bob)
        return cls(rho, a, b)

    @classmethod
    def from_angles(cls, rho: DensityOperator, alice_deg: Sequence[float], bob_deg: Sequence[float]) -> "TwoQubitScenario":
        return cls.from_settings(rho, [Setting(t) for t in alice_deg], [Setting(t) for t in bob_deg])


def correlator(rho: DensityOperator, p: Projector, q: Projector) -> float:
    """<AB> for ±1 observables A = 2p - I, B = 2q - I, via the three {0,1} probabilities."""
    pa = trace_product(rho, [p], commuting_projectors=True)
    pb = trace_product(rho, [q], commuting_projectors=True)
    pab = trace_product(rho, [p, q], commuting_projectors=True)
    clip = lambda v: min(max(v, 0.0), 1.0)  # noqa: E731
    return to_pm(clip(pa), clip(pb), clip(pab))


def scenario_correlators(s: TwoQubitScenario) -> dict[str, float]:
    return {
        f"A{j + 1}B{k + 1}": correlator(s.rho, s.alice[j], s.bob[k])
        for j in range(2)
        for k in range(2)
    }


def quantum_chsh(s: TwoQubitScenario) -> float:
    e = scenario_correlators(s)
    return chsh_value(e["A1B1"], e["A2B1"], e["A1B2"], e["A2B2"])


def correlation_tensor(rho: DensityOperator) -> np.ndarray:
    """T_ij = Tr(rho σ_i ⊗ σ_j) for i, j over (x, y, z)."""
    paulis = (PAULI_X, PAULI_Y, PAULI_Z)
    return np.array([[trace_product(rho, [np.kron(si, sj)]) for sj in paulis] for si in paulis])


@dataclass(frozen=True)
class ChshOptimum:
    alice: tuple[Setting, Setting]
    bob: tuple[Setting, Setting]
    value: float
    grid_value: float
    refine_iterations: int
    full_sphere: bool


def _directions(full_sphere: bool) -> tuple[np.ndarray, np.ndarray]:
    if not full_sphere:
        thetas = np.arange(0.0, 360.0, GRID_STEP_DEG)
        ang = np.stack([thetas, np.zeros_like(thetas)], axis=1)
    else:
        thetas = np.arange(0.0, 180.0 + 1e-9, SPHERE_GRID_STEP_DEG)
        phis = np.arange(0.0, 360.0, SPHERE_GRID_STEP_DEG)
        ang = np.array([(t, f) for t in thetas for f in phis])
    vecs = np.array([bloch_vector(t, f) for t, f in ang])
    return ang, vecs


def _chsh_from_angles(t: np.ndarray, x: np.ndarray, full_sphere: bool) -> float:
    if full_sphere:
        a1, a2, b1, b2 = (bloch_vector(x[2 * i], x[2 * i + 1]) for i in range(4))
    else:
        a1, a2, b1, b2 = (bloch_vector(v) for v in x)
    e = lambda a, b: a @ t @ b  # noqa: E731
    return float(e(a1, b1) + e(a2, b1) + e(a1, b2) - e(a2, b2))


def maximize_chsh(rho: DensityOperator, full_sphere: bool = False) -> ChshOptimum:
    """Search settings maximising the CHSH value of a two-qubit state.

    A coarse grid over the four settings (5° steps in the x-z plane, 15°
    on the full sphere) is followed by a compass search that halves its step
    from 5° down to 1e-7 rad. Only improvements are accepted, so the result
    is never below the best grid point. Deterministic.
    """
    if rho.dim != 4:
        raise DimensionMismatch("maximize_chsh needs a two-qubit state")
    t = correlation_tensor(rho)
    ang, vecs = _directions(full_sphere)
    e = vecs @ t @ vecs.T  # e[i, j] = <A(dir i) B(dir j)>

    # CHSH(i1, i2, j1, j2) = (e[i1] + e[i2])[j1] + (e[i1] - e[i2])[j2], so Bob's
    # choices separate and the grid max costs one pass over Alice's pairs.
    best = (-np.inf, 0, 0, 0, 0)
    nd = len(vecs)
    for i1 in range(nd):
        u = e[i1][None, :] + e
        v = e[i1][None, :] - e
        score = u.max(axis=1) + v.max(axis=1)
        i2 = int(np.argmax(score))
        if score[i2] > best[0] + 1e-15:
            best = (float(score[i2]), i1, i2, int(np.argmax(u[i2])), int(np.argmax(v[i2])))
    grid_value, i1, i2, j1, j2 = best

    x = np.concatenate([ang[i] if full_sphere else ang[i][:1] for i in (i1, i2, j1, j2)]).astype(float)
    f = _chsh_from_angles(t, x, full_sphere)
    step = GRID_STEP_DEG
    min_step = np.degrees(ANGLE_RESOLUTION_RAD)
    iterations = 0
    while step >= min_step and iterations < MAX_REFINE_ITERATIONS:
        improved = False
        for k in range(x.size):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[k] += sign * step
                ft = _chsh_from_angles(t, trial, full_sphere)
                iterations += 1
                if ft > f:
                    x, f, improved = trial, ft, True
                    break
        if not improved:
            step /= 2.0

    if full_sphere:
        pairs = [(x[2 * i] % 360.0, x[2 * i + 1] % 360.0) for i in range(4)]
    else:
        pairs = [(v % 360.0, 0.0) for v in x]
    settings = [Setting(th, ph) for th, ph in pairs]
    value = quantum_chsh(TwoQubitScenario.from_settings(rho, settings[:2], settings[2:]))
    return ChshOptimum(tuple(settings[:2]), tuple(settings[2:]), value, grid_value, iterations, full_sphere)


def partially_entangled_state(eta_deg: float) -> DensityOperator:
    """cos η |↑↓> - sin η |↓↑>; η = 45° is the singlet."""
    c, s = np.cos(np.radians(eta_deg)), np.sin(np.radians(eta_deg))
    return pure_state([0.0, c, -s, 0.0])


def product_pure_state(theta_a: float, theta_b: float, phi_a: float = 0.0, phi_b: float = 0.0) -> DensityOperator:
    pa = spin_projector(theta_a, phi_a).matrix
    pb = spin_projector(theta_b, phi_b).matrix
    return DensityOperator(np.kron(pa, pb))

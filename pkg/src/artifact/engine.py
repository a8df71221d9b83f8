"""Four-level maser engine: parameters, bath occupations, counting-field generator.

The engine has two degenerate ground states coupled to an upper lasing
level through a hot bath and to a lower lasing level through a cold
bath; the lasing pair exchanges quanta with a single cavity mode held
at its own effective temperature. The reduced state is the length-5
real vector

    (pop_1, pop_2, pop_upper, pop_lower, coherence)

where `coherence` is the real part of the cross term between the two
degenerate states. Interference between the two bath-mediated decay
pathways pumps that cross term at a rate set by the dimensionless
strengths p_h (hot) and p_c (cold).

The generator carries a counting field `lam` on the two cavity edges so
that derivatives of its dominant eigenvalue give cumulants of the net
photon number emitted into the cavity: the upper->lower (emission) edge
is dressed with e^{+lam}, the lower->upper (absorption) edge with
e^{-lam}.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError

# Slot order of the reduced state vector.
VEC_ORDER = ("pop_1", "pop_2", "pop_upper", "pop_lower", "coherence")

# Left trace vector: populations sum to 1; the coherence slot carries no trace.
TRACE_VECTOR = np.array([1.0, 1.0, 1.0, 1.0, 0.0])
TRACE_VECTOR.setflags(write=False)

# Counting edges (row, col): row gains population, col loses it.
EDGE_EMIT = (3, 2)    # upper -> lower, +1 photon into the cavity, e^{+lam}
EDGE_ABSORB = (2, 3)  # lower -> upper, -1 photon from the cavity, e^{-lam}

#: "consistent"        -- each excited level is fed and drained by the same
#:                        bath; detailed balance holds at zero thermodynamic
#:                        bias. Default, and the only variant whose steady
#:                        state is physical across the whole parameter box.
#: "legacy-conserving" -- crossed-feed legacy layout with the single
#:                        coherence-column repair that restores population
#:                        conservation. Kept for comparison.
#: "legacy"            -- crossed-feed legacy layout verbatim; its population
#:                        block leaks trace through the coherence column.
GENERATOR_VARIANTS = ("consistent", "legacy-conserving", "legacy")

# exp(x) overflows float64 near x=709; the occupation there is < 1e-304.
_OVERFLOW_X = 700.0


def bose_occupation(gap: float, temperature: float) -> float:
    """Mean occupation 1/(exp(gap/T) - 1) of a bosonic mode at energy `gap`."""
    if not gap > 0.0:
        raise DomainError(f"bose_occupation needs gap > 0, got {gap}")
    if not temperature > 0.0:
        raise DomainError(f"bose_occupation needs temperature > 0, got {temperature}")
    x = gap / temperature
    if x > _OVERFLOW_X:
        return 0.0
    return 1.0 / math.expm1(x)


def coherence_coupling(r: float, p: float) -> float:
    """Interference pumping rate r*p for dipole-alignment strength p in [0, 1]."""
    if not r > 0.0:
        raise DomainError(f"coherence_coupling needs r > 0, got {r}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"coherence strength must lie in [0, 1], got {p}")
    return r * p


@dataclass(frozen=True)
class EngineParams:
    """All physical constants of the engine and its three reservoirs.

    Defaults pin the fixed engine geometry (level energies, couplings,
    dephasing) and a reference operating point for the varied
    parameters (temperatures and coherence strengths).
    """

    t_c: float = 1.0    # cold-bath temperature
    t_h: float = 3.5    # hot-bath temperature
    t_l: float = 2.0    # cavity effective temperature
    p_c: float = 0.0    # cold-bath-induced coherence strength
    p_h: float = 0.0    # hot-bath-induced coherence strength
    e1: float = 0.5     # energy of the degenerate pair
    e_a: float = 3.0    # energy of the upper lasing level
    e_b: float = 2.0    # energy of the lower lasing level
    g: float = 1.0      # system-cavity coupling
    r: float = 0.1      # symmetric system-bath rate (both degenerate states)
    tau: float = 0.1    # pure-dephasing rate, dimensionless

    def __post_init__(self):
        if not (self.e_a > self.e_b > self.e1):
            raise DomainError(
                f"level ordering must satisfy e_a > e_b > e1, got "
                f"e_a={self.e_a}, e_b={self.e_b}, e1={self.e1}"
            )
        for name in ("t_c", "t_h", "t_l", "g", "r"):
            if not getattr(self, name) > 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        if self.tau < 0.0:
            raise DomainError(f"tau must be non-negative, got {self.tau}")
        for name in ("p_c", "p_h"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {p}")

    def zero_coherence(self) -> "EngineParams":
        """Same operating point with both coherence channels switched off."""
        return EngineParams(**{**asdict(self), "p_c": 0.0, "p_h": 0.0})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "EngineParams":
        unknown = set(doc) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown EngineParams fields: {sorted(unknown)}")
        return cls(**doc)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EngineParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Occupations:
    """Bose occupations of the three reservoirs at the engine's gaps."""

    n_h: float   # hot bath   at gap e_a - e1
    n_c: float   # cold bath  at gap e_b - e1
    n_l: float   # cavity     at gap e_a - e_b
    nt_h: float = field(init=False)
    nt_c: float = field(init=False)
    nt_l: float = field(init=False)

    def __post_init__(self):
        for name in ("n_h", "n_c", "n_l"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise DomainError(f"occupation {name} must be finite and >= 0, got {v}")
        object.__setattr__(self, "nt_h", 1.0 + self.n_h)
        object.__setattr__(self, "nt_c", 1.0 + self.n_c)
        object.__setattr__(self, "nt_l", 1.0 + self.n_l)


def occupations(params: EngineParams) -> Occupations:
    """Evaluate all three reservoir occupations for an operating point."""
    return Occupations(
        n_h=bose_occupation(params.e_a - params.e1, params.t_h),
        n_c=bose_occupation(params.e_b - params.e1, params.t_c),
        n_l=bose_occupation(params.e_a - params.e_b, params.t_l),
    )


@dataclass(frozen=True)
class TwistedGenerator:
    """Counting-field-dressed generator: L(0), its lam-derivatives, eval(lam).

    Immutable; the stored arrays are write-protected and all methods are
    pure, so instances are safe to share across workers.
    """

    l0: np.ndarray                 # 5x5 generator at lam = 0
    l_deriv: tuple                 # d^k L / d lam^k at 0, k = 1..4
    emit_rate: float               # g^2 * (1 + n_l), on the e^{+lam} edge
    absorb_rate: float             # g^2 * n_l, on the e^{-lam} edge
    params: EngineParams
    variant: str = "consistent"

    def eval(self, lam: float) -> np.ndarray:
        """Assembled 5x5 generator at counting field `lam`."""
        m = self.l0.copy()
        m[EDGE_ABSORB] = self.absorb_rate * math.exp(-lam)
        m[EDGE_EMIT] = self.emit_rate * math.exp(lam)
        return m


def build_generator(params: EngineParams, variant: str = "consistent") -> TwistedGenerator:
    """Assemble the 5x5 counting-field generator for one operating point.

    Only the two cavity edges depend on the counting field: the
    emission edge carries g^2*(1+n_l)*e^{+lam}, the absorption edge
    g^2*n_l*e^{-lam}. Every non-default `variant` reproduces a legacy
    transcription of this generator (see GENERATOR_VARIANTS); the
    default is the per-bath-consistent layout, the only one that
    equilibrates at zero thermodynamic bias.
    """
    if variant not in GENERATOR_VARIANTS:
        raise DomainError(f"unknown generator variant {variant!r}; expected one of {GENERATOR_VARIANTS}")
    occ = occupations(params)
    r, g2, tau = params.r, params.g * params.g, params.tau
    g12h = coherence_coupling(r, params.p_h)
    g12c = coherence_coupling(r, params.p_c)
    # Mean interference drive and dressed dephasing of the coherence slot.
    g12 = 0.5 * (g12c * occ.n_c + g12h * occ.n_h)
    gbar = -r * (occ.n_h + occ.n_c)

    emit = g2 * occ.nt_l
    absorb = g2 * occ.n_l

    m = np.zeros((5, 5))
    # Degenerate pair: drain into both baths, gain by emission from each
    # excited level, and couple to the coherence slot symmetrically.
    for i in (0, 1):
        m[i, i] = -r * (occ.n_h + occ.n_c)
        m[i, 2] = r * occ.nt_h
        m[i, 3] = r * occ.nt_c
        m[i, 4] = -2.0 * g12
    # Excited-level diagonals: each drains into its own bath and the cavity.
    m[2, 2] = -2.0 * r * occ.nt_h - emit
    m[3, 3] = -2.0 * r * occ.nt_c - absorb
    # Cavity (counted) edges at lam = 0.
    m[EDGE_ABSORB] = absorb
    m[EDGE_EMIT] = emit
    # Coherence row: pumped by both excited levels, drained by gbar - tau.
    m[4, 0] = m[4, 1] = -g12
    m[4, 2] = g12h * occ.nt_h
    m[4, 4] = gbar - tau

    if variant == "consistent":
        # Each excited level is fed by the bath that also drains it.
        m[2, 0] = m[2, 1] = r * occ.n_h
        m[3, 0] = m[3, 1] = r * occ.n_c
        m[2, 4] = 2.0 * g12h * occ.n_h
        m[3, 4] = 2.0 * g12c * occ.n_c
        m[4, 3] = g12c * occ.nt_c
    else:
        # Legacy layout: bath feeds crossed relative to the drains, and an
        # asymmetric factor 2 on the coherence row's cold entry.
        m[2, 0] = m[2, 1] = r * occ.n_c
        m[3, 0] = m[3, 1] = r * occ.n_h
        m[3, 4] = 2.0 * g12h * occ.n_h
        m[4, 3] = 2.0 * g12c * occ.nt_c
        if variant == "legacy-conserving":
            # Single repair: balance the coherence column against the two
            # -g12 entries so the population block conserves trace.
            m[2, 4] = 2.0 * g12c * occ.n_c
        else:
            m[2, 4] = g12c * occ.n_c

    derivs = []
    for k in range(1, 5):
        d = np.zeros((5, 5))
        d[EDGE_ABSORB] = ((-1.0) ** k) * absorb
        d[EDGE_EMIT] = emit
        d.setflags(write=False)
        derivs.append(d)

    m.setflags(write=False)
    return TwistedGenerator(
        l0=m,
        l_deriv=tuple(derivs),
        emit_rate=emit,
        absorb_rate=absorb,
        params=params,
        variant=variant,
    )

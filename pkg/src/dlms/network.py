"""Diffusion layer: trust topology and the combine-then-adapt iteration."""

from dataclasses import dataclass

from .errors import ConfigError, DivergenceError
from .filters import lms_step

ROW_SUM_TOL = 1e-12


@dataclass(frozen=True)
class TrustMatrix:
    """Row-stochastic matrix of trust coefficients.

    rows[a][b] is the trust agent a places in agent b's estimate; a zero
    encodes non-adjacency. Validated once at construction, not per iteration.
    """

    rows: tuple

    def __post_init__(self):
        n = len(self.rows)
        for a, row in enumerate(self.rows):
            if len(row) != n:
                raise ConfigError(f"trust row {a} has length {len(row)}, expected {n}")
            for s in row:
                if not 0.0 <= s <= 1.0:
                    raise ConfigError(f"trust coefficient {s} outside [0, 1] in row {a}")
            total = sum(row)
            if abs(total - 1.0) > ROW_SUM_TOL:
                raise ConfigError(f"trust row sum {total} != 1 in row {a}")

    @property
    def size(self):
        return len(self.rows)

    @staticmethod
    def identity(n):
        return TrustMatrix(tuple(
            tuple(1.0 if a == b else 0.0 for b in range(n)) for a in range(n)
        ))

    def is_identity_row(self, a):
        return all(
            (s == 1.0 if a == b else s == 0.0) for b, s in enumerate(self.rows[a])
        )


@dataclass
class AgentState:
    """Estimate w, combined intermediate psi, and last instantaneous error."""

    w: list
    psi: list
    e: float


def combine(trust_row, previous_weights):
    """Convex combination sum_b s_ab * w_b(i-1) over the neighbourhood.

    Zero coefficients are skipped, so an identity row returns the agent's own
    previous weight bit-exactly.
    """
    total = sum(trust_row)
    if abs(total - 1.0) > ROW_SUM_TOL:
        raise ConfigError(f"trust row sum {total} != 1")
    out = None
    for s, w in zip(trust_row, previous_weights):
        if s == 0.0:
            continue
        if out is None:
            out = [s * wj for wj in w] if s != 1.0 else list(w)
        else:
            for j, wj in enumerate(w):
                out[j] += s * wj
    return out


def pairwise_combine(w_a, w_b, s_ab):
    """Two-agent combine written as w_a + s_ab*(w_b - w_a)."""
    if not 0.0 <= s_ab <= 1.0:
        raise ConfigError(f"trust coefficient {s_ab} outside [0, 1]")
    if s_ab == 0.0:
        return list(w_a)
    if s_ab == 1.0:
        return list(w_b)
    return [aj + s_ab * (bj - aj) for aj, bj in zip(w_a, w_b)]


def averaging_update(sources):
    """Component-wise arithmetic mean of the source estimates."""
    if not sources:
        raise ConfigError("averaging agent has no sources")
    n = len(sources)
    out = list(sources[0])
    for w in sources[1:]:
        for j, wj in enumerate(w):
            out[j] += wj
    return [wj / n for wj in out]


def cta_iteration(states, trust, samples, mus, averaging=()):
    """One synchronous combine-then-adapt iteration over the whole network.

    ``states[:trust.size]`` are the adaptive agents, parallel to the trust
    rows, ``samples`` and ``mus``. Trailing states are follower agents whose
    estimate is the mean of the sources named in ``averaging`` (indices into
    the adaptive prefix), read at the current iteration.

    Two-phase barrier semantics: every psi is computed from iteration i-1
    weights before any adaptation happens, so the result is independent of
    agent update order.
    """
    n = trust.size
    if len(samples) != n or len(mus) != n:
        raise ConfigError("samples/mus must align with trust rows")
    if len(states) != n + len(averaging):
        raise ConfigError("states must cover adaptive then averaging agents")

    prev = [st.w for st in states[:n]]
    psis = [combine(trust.rows[a], prev) for a in range(n)]

    new_states = []
    for a in range(n):
        try:
            w, e = lms_step(psis[a], samples[a].x, samples[a].y, mus[a])
        except DivergenceError as exc:
            raise DivergenceError(str(exc), agent=a) from exc
        new_states.append(AgentState(w=w, psi=psis[a], e=e))
    for sources in averaging:
        w = averaging_update([new_states[b].w for b in sources])
        new_states.append(AgentState(w=w, psi=list(w), e=0.0))
    return new_states

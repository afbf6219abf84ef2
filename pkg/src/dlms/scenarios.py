"""Experiment definitions and the run orchestrator.

Builtins reproduce the two-agent configurations of the reference
experiments: cooperative agents a and b, standalone twins c and d fed the
same signal realizations, and a follower e averaging c and d.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .errors import ConfigError, DivergenceError, ParseError
from .metrics import (
    MetricsReport,
    RunRecord,
    convergence_iteration,
    crossing_iteration,
    default_band,
    msd_series,
    steady_state_variance,
)
from .network import AgentState, TrustMatrix, cta_iteration
from .prng import RandomStream, derive_seed
from .signals import GaussianParams, generate_sample

COOPERATIVE = "cooperative"
STANDALONE = "standalone"
AVERAGING = "averaging"

_KINDS = (COOPERATIVE, STANDALONE, AVERAGING)
_SEED_MASK = (1 << 64) - 1

WORKERS_ENV = "DLMS_WORKERS"


@dataclass(frozen=True)
class AgentConfig:
    id: str
    kind: str
    mu: float = None
    w0: tuple = None
    input: GaussianParams = None
    noise: GaussianParams = None
    counterpart: str = None
    sources: tuple = ()

    def is_adaptive(self):
        return self.kind in (COOPERATIVE, STANDALONE)


@dataclass(frozen=True)
class Scenario:
    agents: tuple
    trust: TrustMatrix
    w_opt: tuple
    iterations: int = 1000
    seed: int = 42
    ensemble: int = 100

    def __post_init__(self):
        validate(self)

    def agent(self, agent_id):
        for cfg in self.agents:
            if cfg.id == agent_id:
                return cfg
        raise ConfigError(f"unknown agent id {agent_id!r}")

    def adaptive_agents(self):
        return [cfg for cfg in self.agents if cfg.is_adaptive()]

    def averaging_agents(self):
        return [cfg for cfg in self.agents if cfg.kind == AVERAGING]


def validate(scenario):
    """Check every scenario invariant; raise ConfigError naming the field."""
    if scenario.iterations < 1:
        raise ConfigError(f"iterations must be >= 1, got {scenario.iterations}")
    if scenario.ensemble < 1:
        raise ConfigError(f"ensemble must be >= 1, got {scenario.ensemble}")
    if not 0 <= scenario.seed <= _SEED_MASK:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {scenario.seed}")
    if not scenario.agents:
        raise ConfigError("scenario has no agents")
    m = len(scenario.w_opt)
    if m < 1:
        raise ConfigError("w_opt must have at least one component")

    ids = [cfg.id for cfg in scenario.agents]
    if len(set(ids)) != len(ids):
        raise ConfigError(f"duplicate agent ids: {ids}")
    by_id = {cfg.id: cfg for cfg in scenario.agents}

    adaptive = scenario.adaptive_agents()
    for cfg in scenario.agents:
        if cfg.kind not in _KINDS:
            raise ConfigError(f"agent {cfg.id}: unknown kind {cfg.kind!r}")
        if cfg.kind == AVERAGING:
            for name in ("mu", "w0", "input", "noise"):
                if getattr(cfg, name) is not None:
                    raise ConfigError(f"agent {cfg.id}: averaging agents take no {name}")
            if not cfg.sources:
                raise ConfigError(f"agent {cfg.id}: averaging agents need >= 1 source")
            for src in cfg.sources:
                if src not in by_id or not by_id[src].is_adaptive():
                    raise ConfigError(
                        f"agent {cfg.id}: source {src!r} is not an adaptive agent")
        else:
            if cfg.mu is None or cfg.mu < 0:
                raise ConfigError(f"agent {cfg.id}: mu must be >= 0, got {cfg.mu}")
            if cfg.w0 is None or len(cfg.w0) != m:
                raise ConfigError(
                    f"agent {cfg.id}: w0 must have {m} components, got {cfg.w0}")
            if cfg.input is None or cfg.noise is None:
                raise ConfigError(f"agent {cfg.id}: input and noise statistics required")
            if cfg.sources:
                raise ConfigError(f"agent {cfg.id}: only averaging agents take sources")
        if cfg.counterpart is not None:
            other = by_id.get(cfg.counterpart)
            if other is None or not other.is_adaptive():
                raise ConfigError(
                    f"agent {cfg.id}: counterpart {cfg.counterpart!r} "
                    "must name an adaptive agent")
            if other.counterpart is not None:
                raise ConfigError(
                    f"agent {cfg.id}: counterpart chains are not allowed")
            if other.input != cfg.input or other.noise != cfg.noise:
                raise ConfigError(
                    f"agent {cfg.id}: counterpart {cfg.counterpart!r} has "
                    "different input/noise statistics")

    if scenario.trust.size != len(adaptive):
        raise ConfigError(
            f"trust matrix is {scenario.trust.size}x{scenario.trust.size} "
            f"but there are {len(adaptive)} adaptive agents")
    for a, cfg in enumerate(adaptive):
        if cfg.kind == STANDALONE and not scenario.trust.is_identity_row(a):
            raise ConfigError(f"agent {cfg.id}: standalone trust row must be identity")


# ---------------------------------------------------------------------------
# Builtins
# ---------------------------------------------------------------------------

_BUILTIN_PARAMS = {
    # name: (mu_a, mu_b, w0_a, w0_b, s_self, noise_sd_a, noise_sd_b, summary)
    "table1": (0.5, 0.5, 0.0, 1.0, 0.5, 0.03, 0.03,
               "different initial weights merge to an average behaviour"),
    "table2": (0.2, 0.8, 0.0, 0.0, 0.5, 0.03, 0.03,
               "heterogeneous learning rates boost convergence rate"),
    "table3": (0.2, 0.8, 0.0, 1.0, 0.5, 0.03, 0.03,
               "faster learner starts closer and pulls the network"),
    "table4": (0.8, 0.2, 0.0, 1.0, 0.5, 0.03, 0.03,
               "faster learner starts further; standalone twins cross over"),
    "table5": (0.5, 0.5, 0.0, 1.0, 0.5, 0.01, 0.2,
               "unequal signal noise; cooperation stabilizes the noisy agent"),
}

INPUT_SD = 0.09


def builtin_names():
    return list(_BUILTIN_PARAMS)


def builtin_summary(name):
    try:
        return _BUILTIN_PARAMS[name][7]
    except KeyError:
        raise ConfigError(
            f"unknown builtin {name!r}; valid names: {', '.join(_BUILTIN_PARAMS)}"
        ) from None


def builtin(name):
    """Five-agent scenario for one of the builtin experiment tables."""
    if name not in _BUILTIN_PARAMS:
        raise ConfigError(
            f"unknown builtin {name!r}; valid names: {', '.join(_BUILTIN_PARAMS)}")
    mu_a, mu_b, w0_a, w0_b, s_self, nsd_a, nsd_b, _ = _BUILTIN_PARAMS[name]
    inp = GaussianParams(0.0, INPUT_SD)
    noise_a = GaussianParams(0.0, nsd_a)
    noise_b = GaussianParams(0.0, nsd_b)
    s_other = 1.0 - s_self
    agents = (
        AgentConfig("a", COOPERATIVE, mu=mu_a, w0=(w0_a,), input=inp, noise=noise_a),
        AgentConfig("b", COOPERATIVE, mu=mu_b, w0=(w0_b,), input=inp, noise=noise_b),
        AgentConfig("c", STANDALONE, mu=mu_a, w0=(w0_a,), input=inp, noise=noise_a,
                    counterpart="a"),
        AgentConfig("d", STANDALONE, mu=mu_b, w0=(w0_b,), input=inp, noise=noise_b,
                    counterpart="b"),
        AgentConfig("e", AVERAGING, sources=("c", "d")),
    )
    trust = TrustMatrix((
        (s_self, s_other, 0.0, 0.0),
        (s_other, s_self, 0.0, 0.0),
        (0.0, 0.0, 1.0, 0.0),
        (0.0, 0.0, 0.0, 1.0),
    ))
    return Scenario(agents=agents, trust=trust, w_opt=(2.0,))


def with_trust(scenario, rows):
    """Same scenario with the cooperative trust rows replaced."""
    return replace(scenario, trust=TrustMatrix(tuple(tuple(r) for r in rows)))


# ---------------------------------------------------------------------------
# Config format
# ---------------------------------------------------------------------------

_NETWORK_KEYS = {"w_opt", "iterations", "seed", "ensemble"}
_AGENT_KEYS = {"id", "kind", "mu", "w0", "input_mean", "input_sd",
               "noise_mean", "noise_sd", "counterpart", "sources"}


def _parse_vector(text, line):
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError:
        raise ParseError(f"invalid vector {text!r}", line) from None


def parse(config_text):
    """Parse the line-oriented scenario config format.

    Sections: one ``[network]``, one ``[agent]`` per agent, one ``[trust]``
    with ``from to coefficient`` triples. ``#`` starts a comment.
    """
    network = {}
    agent_sections = []
    trust_entries = []
    section = None

    for lineno, raw in enumerate(config_text.splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        if text.startswith("["):
            if not text.endswith("]"):
                raise ParseError(f"unterminated section header {text!r}", lineno)
            section = text[1:-1].strip().lower()
            if section == "agent":
                agent_sections.append({})
            elif section not in ("network", "trust"):
                raise ParseError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            raise ParseError("content before first section header", lineno)
        if section == "trust":
            parts = text.split()
            if len(parts) != 3:
                raise ParseError(
                    f"trust entries are 'from to coefficient' triples, got {text!r}",
                    lineno)
            try:
                coeff = float(parts[2])
            except ValueError:
                raise ParseError(f"invalid trust coefficient {parts[2]!r}", lineno) from None
            trust_entries.append((parts[0], parts[1], coeff, lineno))
            continue
        if "=" not in text:
            raise ParseError(f"expected key=value, got {text!r}", lineno)
        key, _, value = text.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if section == "network":
            if key not in _NETWORK_KEYS:
                raise ParseError(f"unknown network key {key!r}", lineno)
            network[key] = (value, lineno)
        else:
            if key not in _AGENT_KEYS:
                raise ParseError(f"unknown agent key {key!r}", lineno)
            agent_sections[-1][key] = (value, lineno)

    def net_value(key, default, conv):
        if key not in network:
            return default
        value, lineno = network[key]
        try:
            return conv(value)
        except ValueError:
            raise ParseError(f"invalid {key} value {value!r}", lineno) from None

    w_opt = net_value("w_opt", (2.0,), lambda v: _parse_vector(v, network["w_opt"][1]))
    iterations = net_value("iterations", 1000, int)
    seed = net_value("seed", 42, int)
    ensemble = net_value("ensemble", 100, int)

    agents = []
    for sect in agent_sections:
        def a_value(key, default=None, conv=str, sect=sect):
            if key not in sect:
                return default
            value, lineno = sect[key]
            try:
                return conv(value)
            except ValueError:
                raise ParseError(f"invalid {key} value {value!r}", lineno) from None

        agent_id = a_value("id")
        if agent_id is None:
            raise ParseError("agent section missing id",
                             next(iter(sect.values()))[1] if sect else 0)
        kind = a_value("kind", COOPERATIVE)
        if kind == AVERAGING:
            sources = a_value("sources", "", str)
            agents.append(AgentConfig(
                agent_id, kind,
                sources=tuple(s for s in sources.replace(",", " ").split() if s)))
        else:
            w0_text, w0_line = sect.get("w0", ("0", 0))
            agents.append(AgentConfig(
                agent_id, kind,
                mu=a_value("mu", 0.5, float),
                w0=_parse_vector(w0_text, w0_line),
                input=GaussianParams(a_value("input_mean", 0.0, float),
                                     a_value("input_sd", 1.0, float)),
                noise=GaussianParams(a_value("noise_mean", 0.0, float),
                                     a_value("noise_sd", 0.0, float)),
                counterpart=a_value("counterpart"),
            ))

    adaptive_ids = [cfg.id for cfg in agents if cfg.is_adaptive()]
    index = {aid: i for i, aid in enumerate(adaptive_ids)}
    n = len(adaptive_ids)
    rows = [[0.0] * n for _ in range(n)]
    listed = set()
    for src, dst, coeff, lineno in trust_entries:
        if src not in index or dst not in index:
            raise ParseError(f"trust entry names unknown adaptive agent "
                             f"{src!r} -> {dst!r}", lineno)
        rows[index[src]][index[dst]] = coeff
        listed.add(src)
    # rows with no trust entries default to identity (standalone-style)
    for aid, i in index.items():
        if aid not in listed:
            rows[i][i] = 1.0

    return Scenario(
        agents=tuple(agents),
        trust=TrustMatrix(tuple(tuple(r) for r in rows)),
        w_opt=w_opt,
        iterations=iterations,
        seed=seed,
        ensemble=ensemble,
    )


def serialize(scenario):
    """Render a Scenario in the config format accepted by parse()."""
    lines = ["[network]"]
    lines.append("w_opt = " + ",".join(repr(v) for v in scenario.w_opt))
    lines.append(f"iterations = {scenario.iterations}")
    lines.append(f"seed = {scenario.seed}")
    lines.append(f"ensemble = {scenario.ensemble}")
    for cfg in scenario.agents:
        lines.append("")
        lines.append("[agent]")
        lines.append(f"id = {cfg.id}")
        lines.append(f"kind = {cfg.kind}")
        if cfg.kind == AVERAGING:
            lines.append("sources = " + ",".join(cfg.sources))
            continue
        lines.append(f"mu = {cfg.mu!r}")
        lines.append("w0 = " + ",".join(repr(v) for v in cfg.w0))
        lines.append(f"input_mean = {cfg.input.mean!r}")
        lines.append(f"input_sd = {cfg.input.sd!r}")
        lines.append(f"noise_mean = {cfg.noise.mean!r}")
        lines.append(f"noise_sd = {cfg.noise.sd!r}")
        if cfg.counterpart is not None:
            lines.append(f"counterpart = {cfg.counterpart}")
    lines.append("")
    lines.append("[trust]")
    adaptive = scenario.adaptive_agents()
    for a, row in enumerate(scenario.trust.rows):
        for b, coeff in enumerate(row):
            if coeff != 0.0:
                lines.append(f"{adaptive[a].id} {adaptive[b].id} {coeff!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

def _stream_owners(scenario):
    """Stream-owner index (position in scenario.agents) per adaptive agent."""
    position = {cfg.id: i for i, cfg in enumerate(scenario.agents)}
    owners = []
    for cfg in scenario.adaptive_agents():
        owner = cfg.counterpart if cfg.counterpart is not None else cfg.id
        owners.append(position[owner])
    return owners


def run_single(scenario, run_index):
    """Execute one run of the scenario; returns its RunRecord.

    Per-agent streams are seeded with derive_seed(seed XOR run_index, k)
    where k is the stream owner's position in the agent list; twins share
    their counterpart's stream owner and therefore its exact samples.
    """
    adaptive = scenario.adaptive_agents()
    averaging = scenario.averaging_agents()
    adaptive_index = {cfg.id: i for i, cfg in enumerate(adaptive)}
    averaging_sources = [
        tuple(adaptive_index[s] for s in cfg.sources) for cfg in averaging
    ]
    owners = _stream_owners(scenario)
    owner_params = {}
    for cfg, owner in zip(adaptive, owners):
        owner_params.setdefault(owner, (cfg.input, cfg.noise))
    base = (scenario.seed ^ run_index) & _SEED_MASK
    streams = {
        owner: RandomStream(derive_seed(base, owner)) for owner in owner_params
    }

    states = [AgentState(w=list(cfg.w0), psi=list(cfg.w0), e=0.0) for cfg in adaptive]
    for sources in averaging_sources:
        w = [sum(states[b].w[j] for b in sources) / len(sources)
             for j in range(len(scenario.w_opt))]
        states.append(AgentState(w=w, psi=list(w), e=0.0))

    ordered_ids = [cfg.id for cfg in adaptive] + [cfg.id for cfg in averaging]
    record = RunRecord(
        seed=scenario.seed,
        w_opt=list(scenario.w_opt),
        agents=ordered_ids,
        run_index=run_index,
        ws={aid: [] for aid in ordered_ids},
        psis={aid: [] for aid in ordered_ids},
        es={aid: [] for aid in ordered_ids},
    )

    mus = [cfg.mu for cfg in adaptive]
    w_opt = scenario.w_opt
    for i in range(1, scenario.iterations + 1):
        group_samples = {
            owner: generate_sample(streams[owner], w_opt, inp, noise)
            for owner, (inp, noise) in owner_params.items()
        }
        samples = [group_samples[owner] for owner in owners]
        try:
            states = cta_iteration(states, scenario.trust, samples, mus,
                                   averaging_sources)
        except DivergenceError as exc:
            agent_id = adaptive[exc.agent].id if exc.agent is not None else None
            raise DivergenceError(
                f"divergence at run {run_index}, iteration {i}, "
                f"agent {agent_id}: {exc}",
                agent=agent_id, iteration=i, run=run_index) from exc
        for aid, st in zip(ordered_ids, states):
            record.ws[aid].append(list(st.w))
            record.psis[aid].append(list(st.psi))
            record.es[aid].append(st.e)
    return record


def _run_single_tagged(args):
    scenario, run_index = args
    try:
        return "ok", run_single(scenario, run_index)
    except DivergenceError as exc:
        return "diverged", (str(exc), exc.agent, exc.iteration, exc.run)


def run(scenario, workers=None):
    """Execute the full ensemble; returns one RunRecord per run, in run order.

    ``workers`` defaults to the DLMS_WORKERS environment variable (or 1).
    On divergence the raised error carries the records of the runs that
    completed before the divergent one.
    """
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    records = []
    if workers > 1:
        tasks = [(scenario, r) for r in range(scenario.ensemble)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for status, payload in pool.map(_run_single_tagged, tasks):
                if status == "diverged":
                    message, agent, iteration, run_index = payload
                    raise DivergenceError(message, agent=agent,
                                          iteration=iteration, run=run_index,
                                          completed=records)
                records.append(payload)
    else:
        for r in range(scenario.ensemble):
            try:
                records.append(run_single(scenario, r))
            except DivergenceError as exc:
                exc.completed = records
                raise
    return records


def scenario_band(scenario):
    """Default convergence band for this scenario's adaptive agents."""
    return default_band([cfg.w0 for cfg in scenario.adaptive_agents()],
                        scenario.w_opt)


def mean_record(records):
    """Ensemble-mean trajectory, packaged as a RunRecord for the detectors."""
    if not records:
        raise ConfigError("empty record list")
    first = records[0]
    n = len(records)
    length = first.iterations
    m = len(first.w_opt)
    mean = RunRecord(seed=first.seed, w_opt=list(first.w_opt),
                     agents=list(first.agents))
    for aid in first.agents:
        mean.ws[aid] = [
            [sum(rec.ws[aid][i][j] for rec in records) / n for j in range(m)]
            for i in range(length)
        ]
        mean.psis[aid] = mean.ws[aid]
        mean.es[aid] = [sum(rec.es[aid][i] for rec in records) / n
                        for i in range(length)]
    return mean


def compute_report(scenario, records):
    """MetricsReport over an ensemble.

    Convergence and crossing detection run on the ensemble-mean trajectory;
    steady-state variance is the mean of the per-run variances.
    """
    mean = mean_record(records)
    agents = mean.agents
    msd = {aid: msd_series(records, aid) for aid in agents}
    try:
        ss_var = {
            aid: sum(steady_state_variance(rec, aid) for rec in records) / len(records)
            for aid in agents
        }
    except ConfigError:
        # horizon too short for the steady-state window
        ss_var = {aid: None for aid in agents}
    try:
        band = scenario_band(scenario)
        conv = {aid: convergence_iteration(mean, aid, band) for aid in agents}
    except ConfigError:
        conv = {aid: None for aid in agents}
    crossings = {}
    if len(scenario.w_opt) == 1:
        for i, p in enumerate(agents):
            for q in agents[i + 1:]:
                crossings[(p, q)] = crossing_iteration(mean, p, q)
    return MetricsReport(msd=msd, steady_state_var=ss_var,
                         convergence_iter=conv, crossing_iter=crossings)

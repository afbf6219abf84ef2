"""Per-agent signal synthesis: linear model with additive Gaussian noise."""

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class GaussianParams:
    """Mean and standard deviation of a Gaussian source."""

    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.sd < 0:
            raise ConfigError(f"negative standard deviation: {self.sd}")


@dataclass(frozen=True)
class SignalSample:
    """One time instant of an agent's perception.

    ``q`` is the noise realization, retained for diagnostics only; agents
    never read it.
    """

    x: tuple
    y: float
    q: float


def generate_sample(stream, w_opt, input_params, noise_params):
    """Draw one (x, y) pair from y = w_opt . x + q.

    Consumes exactly len(w_opt) + 1 Gaussian deviates from the stream,
    x components first, then q.
    """
    if len(w_opt) < 1:
        raise ConfigError("w_opt must have at least one component")
    x = tuple(
        stream.next_gaussian(input_params.mean, input_params.sd)
        for _ in w_opt
    )
    q = stream.next_gaussian(noise_params.mean, noise_params.sd)
    y = sum(wi * xi for wi, xi in zip(w_opt, x)) + q
    return SignalSample(x=x, y=y, q=q)

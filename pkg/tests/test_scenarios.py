import dataclasses

import pytest

from dlms.errors import ConfigError, DivergenceError, ParseError
from dlms.network import TrustMatrix
from dlms.scenarios import (
    builtin,
    builtin_names,
    compute_report,
    parse,
    run,
    run_single,
    serialize,
    with_trust,
)
from dlms.signals import GaussianParams


def small(scenario, iterations=50, ensemble=3):
    return dataclasses.replace(scenario, iterations=iterations, ensemble=ensemble)


class TestBuiltins:
    def test_names(self):
        assert builtin_names() == ["table1", "table2", "table3", "table4", "table5"]

    def test_unknown_name_lists_valid(self):
        with pytest.raises(ConfigError, match="table1"):
            builtin("table9")

    def test_table1_parameters(self):
        s = builtin("table1")
        a, b = s.agent("a"), s.agent("b")
        assert a.mu == 0.5 and a.w0 == (0.0,)
        assert b.mu == 0.5 and b.w0 == (1.0,)
        assert a.input.sd == 0.09 and a.noise.sd == 0.03
        assert s.trust.rows[0] == (0.5, 0.5, 0.0, 0.0)

    def test_table2_parameters(self):
        s = builtin("table2")
        assert s.agent("a").mu == 0.2
        assert s.agent("b").mu == 0.8
        assert s.agent("a").w0 == s.agent("b").w0 == (0.0,)

    def test_table5_parameters(self):
        s = builtin("table5")
        assert s.agent("a").noise.sd == 0.01
        assert s.agent("b").noise.sd == 0.2
        assert s.trust.rows[1] == (0.5, 0.5, 0.0, 0.0)

    def test_structure(self):
        for name in builtin_names():
            s = builtin(name)
            kinds = [cfg.kind for cfg in s.agents]
            assert kinds == ["cooperative", "cooperative", "standalone",
                             "standalone", "averaging"]
            assert s.agent("c").counterpart == "a"
            assert s.agent("d").counterpart == "b"
            assert s.agent("e").sources == ("c", "d")


class TestValidation:
    def test_standalone_row_must_be_identity(self):
        s = builtin("table1")
        with pytest.raises(ConfigError, match="identity"):
            with_trust(s, [(0.5, 0.5, 0, 0), (0.5, 0.5, 0, 0),
                           (0.5, 0, 0.5, 0), (0, 0, 0, 1)])

    def test_trust_dimension_mismatch(self):
        s = builtin("table1")
        with pytest.raises(ConfigError, match="adaptive"):
            dataclasses.replace(s, trust=TrustMatrix.identity(3))

    def test_counterpart_params_must_match(self):
        s = builtin("table1")
        agents = list(s.agents)
        agents[2] = dataclasses.replace(agents[2],
                                        noise=GaussianParams(0.0, 0.5))
        with pytest.raises(ConfigError, match="counterpart"):
            dataclasses.replace(s, agents=tuple(agents))

    def test_averaging_takes_no_mu(self):
        s = builtin("table1")
        agents = list(s.agents)
        agents[4] = dataclasses.replace(agents[4], mu=0.5)
        with pytest.raises(ConfigError, match="averaging"):
            dataclasses.replace(s, agents=tuple(agents))

    def test_w0_dimension_checked(self):
        s = builtin("table1")
        with pytest.raises(ConfigError, match="w0"):
            dataclasses.replace(s, w_opt=(2.0, 1.0))


class TestConfigFormat:
    MINIMAL = """
    [network]
    w_opt = 2.0
    iterations = 10
    seed = 1
    ensemble = 2

    [agent]
    id = solo
    kind = standalone
    mu = 0.5
    w0 = 0
    input_sd = 0.09
    noise_sd = 0.03
    """

    def test_minimal_standalone(self):
        s = parse(self.MINIMAL)
        assert len(s.agents) == 1
        assert s.trust.rows == ((1.0,),)
        assert s.iterations == 10

    def test_bad_trust_row_sum(self):
        text = self.MINIMAL + "\n[trust]\nsolo solo 0.6\n"
        with pytest.raises(ConfigError, match="row sum"):
            parse(text)

    def test_parse_error_carries_line_number(self):
        with pytest.raises(ParseError, match="line 1"):
            parse("orphan = 1\n")

    def test_unknown_key_rejected(self):
        with pytest.raises(ParseError, match="frobnicate"):
            parse("[network]\nfrobnicate = 1\n")

    def test_comments_and_whitespace(self):
        s = parse("# comment\n[network]\n  seed =  7  # trailing\n"
                  "[agent]\nid=x\nkind=standalone\nw0=0\nnoise_sd=0\n")
        assert s.seed == 7

    @pytest.mark.parametrize("name", ["table1", "table2", "table3", "table4",
                                      "table5"])
    def test_roundtrip_on_builtins(self, name):
        s = builtin(name)
        assert parse(serialize(s)) == s


class TestRun:
    def test_deterministic(self):
        s = small(builtin("table1"))
        assert run(s) == run(s)

    def test_shapes(self):
        s = small(builtin("table1"), iterations=20, ensemble=4)
        records = run(s)
        assert len(records) == 4
        for r, rec in enumerate(records):
            assert rec.run_index == r
            assert rec.iterations == 20
            assert set(rec.ws) == {"a", "b", "c", "d", "e"}

    def test_twin_pairing(self):
        """c and d see bit-identical samples to a and b: with identity trust
        their whole trajectories coincide."""
        s = small(builtin("table1"), iterations=100, ensemble=2)
        s = with_trust(s, [(1, 0, 0, 0), (0, 1, 0, 0),
                           (0, 0, 1, 0), (0, 0, 0, 1)])
        for rec in run(s):
            assert rec.ws["a"] == rec.ws["c"]
            assert rec.ws["b"] == rec.ws["d"]

    def test_noiseless_converges_to_w_opt(self):
        s = small(builtin("table1"), iterations=4500, ensemble=1)
        agents = tuple(
            cfg if cfg.kind == "averaging"
            else dataclasses.replace(cfg, noise=GaussianParams(0.0, 0.0))
            for cfg in s.agents
        )
        s = dataclasses.replace(s, agents=agents)
        rec = run(s)[0]
        for aid in ("a", "b", "c", "d"):
            assert abs(rec.ws[aid][-1][0] - 2.0) < 1e-6

    def test_divergence_raises_with_context(self):
        s = small(builtin("table1"), iterations=5000, ensemble=2)
        agents = tuple(
            cfg if not cfg.is_adaptive()
            else dataclasses.replace(cfg, mu=2.5,
                                     input=GaussianParams(0.0, 1.0))
            for cfg in s.agents
        )
        s = dataclasses.replace(s, agents=agents)
        with pytest.raises(DivergenceError) as excinfo:
            run(s)
        err = excinfo.value
        assert err.run is not None
        assert err.agent is not None
        assert err.iteration is not None

    def test_parallel_matches_serial(self):
        s = small(builtin("table1"), iterations=30, ensemble=4)
        assert run(s, workers=1) == run(s, workers=2)

    def test_averaging_exact_mean_every_iteration(self):
        s = small(builtin("table3"), iterations=60, ensemble=2)
        for rec in run(s):
            for i in range(rec.iterations):
                mean = [(c + d) / 2 for c, d in
                        zip(rec.ws["c"][i], rec.ws["d"][i])]
                assert rec.ws["e"][i] == mean


class TestReport:
    def test_compute_report_fields(self):
        s = small(builtin("table2"), iterations=100, ensemble=4)
        report = compute_report(s, run(s))
        assert set(report.msd) == {"a", "b", "c", "d", "e"}
        assert all(len(v) == 100 for v in report.msd.values())
        assert all(v >= 0 for series in report.msd.values() for v in series)
        assert ("a", "b") in report.crossing_iter


def test_run_single_seeding_is_documented_mix():
    """Run r, stream owner k: seed = derive_seed(scenario.seed XOR r, k)."""
    from dlms.prng import RandomStream, derive_seed
    from dlms.signals import generate_sample

    s = small(builtin("table1"), iterations=1, ensemble=1)
    rec = run_single(s, run_index=3)
    # agent a owns stream index 0 (its position in the agent list)
    stream = RandomStream(derive_seed(s.seed ^ 3, 0))
    sample = generate_sample(stream, s.w_opt, s.agent("a").input,
                             s.agent("a").noise)
    psi = 0.5 * (0.0 + 1.0)
    e = sample.y - psi * sample.x[0]
    assert rec.ws["a"][0] == [psi + 0.5 * e * sample.x[0]]

import json

import pytest

from cri.config import Config, ConfigError, load_config, parse_overrides


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("")
    c = load_config(p)
    assert c == Config()
    assert c.risk.alpha == 0.7 and c.risk.beta == 0.7


def test_precedence_defaults_file_flags(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"risk": {"speed_ref": 0.4, "alpha": 0.6}}))
    c = load_config(p, ["speed_ref=0.3"])
    assert c.risk.speed_ref == 0.3  # flag beats file
    assert c.risk.alpha == 0.6  # file beats default
    assert c.risk.beta == 0.7


@pytest.mark.parametrize(
    "override,needle",
    [
        ("alpha=1.5", "alpha must lie in [0, 1]"),
        ("controller.n_hold=0", "n_hold must be >= 1"),
        ("sim.collision_policy=explode", "collision_policy"),
        ("rss.a_min=-1", "a_min must be positive"),
        ("metrics.collision_penalty=2", "collision_penalty must lie in [0, 1]"),
    ],
)
def test_range_errors_name_constraint(override, needle):
    with pytest.raises(ConfigError) as exc:
        load_config(None, [override])
    assert needle in str(exc.value)


def test_unknown_and_ambiguous_keys(tmp_path):
    with pytest.raises(ConfigError, match="unknown"):
        load_config(None, ["risk.gamma=1"])
    with pytest.raises(ConfigError, match="ambiguous"):
        parse_overrides(["a_max=3"])
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"risk": {"alpha": 0.5, "typo": 1}}))
    with pytest.raises(ConfigError, match="risk.typo"):
        load_config(p)


def test_type_errors():
    with pytest.raises(ConfigError, match="expected an integer"):
        load_config(None, ["controller.n_hold=2.5"])
    with pytest.raises(ConfigError, match="expected true or false"):
        load_config(None, ["trace.timing=1"])


def test_digest_tracks_effective_values():
    a, b = load_config(), load_config(None, ["speed_ref=0.3"])
    assert a.digest() != b.digest()
    assert a.digest() == Config().digest()
    assert '"speed_ref":0.3' in b.canonical_json()


def test_run_params_carry_values():
    c = load_config(None, ["beta=0.5", "rss.t_reaction=0.8", "sim.dt=0.1"])
    rp = c.run_params()
    assert rp.risk.beta == 0.5 and rp.risk.rss.t_reaction == 0.8 and rp.sim.dt == 0.1

import math

import pytest

from mclfem.config import ConfigError, dump_config, parse_config
from mclfem.scheme import LimiterConfig
from mclfem.timestepping import TimeIntegratorConfig

MINIMAL = """
[model]
kind = "advection"
velocity = [1.0]

[mesh]
dim = 1
cells = 32

[initial]
name = "sine_wave"
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.mesh.extent == [1.0]
    assert cfg.limiter_config() == LimiterConfig()
    assert cfg.integrator_config() == TimeIntegratorConfig(t_end=1.0)
    assert cfg.admissibility_params().scalar_bounds == (-math.inf, math.inf)
    assert cfg.seed == 0 and cfg.threads == 1
    assert cfg.model_spec().velocity == (1.0,)
    assert cfg.study.alpha_rule == "config" and cfg.study.probe_points == 1024


def test_unknown_keys_are_named():
    with pytest.raises(ConfigError, match=r"limitter\.mode"):
        parse_config(MINIMAL + '\n[limitter]\nmode = "mcl"\n')
    with pytest.raises(ConfigError, match=r"limiter\.mdoe"):
        parse_config(MINIMAL + '\n[limiter]\nmdoe = "mcl"\n')
    with pytest.raises(ConfigError, match=r"initial\.amplitud"):
        parse_config(MINIMAL + "amplitud = 2.0\n")
    with pytest.raises(ConfigError, match="seeed"):
        parse_config("seeed = 1\n" + MINIMAL)


@pytest.mark.parametrize(
    "extra,path",
    [
        ("\n[integrator]\ncfl = 1.5\n", "integrator.cfl"),
        ("\n[integrator]\nt_end = -1.0\n", "integrator.t_end"),
        ('\n[limiter]\nmode = "fct"\n', "limiter.mode"),
        ("\n[limiter]\nalpha_override = 2.0\n", "limiter.alpha_override"),
        ('\n[output]\nformats = ["png"]\n', "output.formats"),
        ('\n[study]\nalpha_rule = "half"\n', "study.alpha_rule"),
        ("\n[assertions]\nslope_min = [1.0]\n", "assertions.slope_min"),
        ("\n[admissibility]\nscalar_bounds = [1.0, 0.0]\n", "admissibility.scalar_bounds"),
        ("\n[integrator]\nt_end = 1.0\nsnapshots = [0.5, 0.2]\n", "integrator.snapshots"),
    ],
)
def test_range_errors(extra, path):
    with pytest.raises(ConfigError, match=path.replace(".", r"\.")):
        parse_config(MINIMAL + extra)


def test_semantic_errors_in_required_sections():
    with pytest.raises(ConfigError, match=r"mesh\.cells"):
        parse_config(MINIMAL.replace("cells = 32", "cells = 2"))
    with pytest.raises(ConfigError, match=r"model\.velocity"):
        parse_config(MINIMAL.replace("velocity = [1.0]", "velocity = [1.0, 2.0]"))
    with pytest.raises(ConfigError, match=r"initial\.name"):
        parse_config(MINIMAL.replace('"sine_wave"', '"sod"'))
    with pytest.raises(ConfigError, match="mesh: missing"):
        parse_config('[model]\nkind = "burgers"\n[initial]\nname = "constant"\n')


def test_syntax_error_reports_line():
    with pytest.raises(ConfigError, match="line 4"):
        parse_config('[model]\nkind = "burgers"\n\ncells = = 3\n')


def test_round_trip():
    text = "seed = 3\n" + MINIMAL + """
[limiter]
mode = "bv_entropy"
alpha_override = 0.5
[integrator]
snapshots = [0.25, 0.5]
[admissibility]
scalar_bounds = [0.0, 1.0]
[assertions]
slope_min = [1.3, 0.4, 0.4]
"""
    cfg = parse_config(text)
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert parse_config(dump_config(again)) == cfg
    euler = parse_config('[model]\nkind = "euler"\n[mesh]\ndim = 2\ncells = 8\n[initial]\nname = "euler_blast"\n')
    assert parse_config(dump_config(euler)) == euler

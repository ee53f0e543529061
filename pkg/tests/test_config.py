import pytest

from csk_lab.config import ConfigError, parse_config, parse_grid


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    assert cfg.mode == "sweep"
    assert cfg.network.beta == 15 and cfg.network.n_relays == 1
    assert cfg.eb_n0_grid_db == (0.0, 5.0, 10.0, 15.0)
    assert cfg.n_bits == 1_000_000 and cfg.min_errors == 100
    assert cfg.echo["sweep"]["grid"] == "0:5:15"


def test_full_document():
    cfg = parse_config("""
[network]
map = pwl
pwl_L = 4
pwl_phi = 0.25
beta = 30
n_relays = 2
P_j = 1.0, 0.5
[sweep]
mode = fit
grid = 0, 2.5, 7
n_bits = 5000
seed = 18446744073709551615
[output]
path = out/x.csv
""")
    assert cfg.network.map.pwl_L == 4 and cfg.network.map.pwl_phi == 0.25
    assert cfg.network.P_j == (1.0, 0.5)
    assert cfg.eb_n0_grid_db == (0.0, 2.5, 7.0)
    assert cfg.master_seed == 2**64 - 1
    assert cfg.output_path == "out/x.csv"


@pytest.mark.parametrize("text, field", [
    ("[network]\nbeta = 0\n", "network.beta"),
    ("[network]\nwidth = 3\n", "network.width"),
    ("[network]\nbeta = 3\nbeta = 4\n", "network.beta"),
    ("[plots]\nx = 1\n", "plots"),
    ("[sweep]\ngrid = 0, 5, 5\n", "sweep.grid"),
    ("[sweep]\ngrid = 5, 0\n", "sweep.grid"),
    ("[sweep]\ngrid =\n", "sweep.grid"),
    ("[sweep]\nn_bits = 10\n[network]\nbeta = 15\n", "sweep.n_bits"),
    ("[sweep]\nseed = -1\n", "sweep.seed"),
    ("[sweep]\nseed = 18446744073709551616\n", "sweep.seed"),
    ("[sweep]\nmode = fit\nn_bits = 500\n", "sweep.n_bits"),
    ("[sweep]\npade_order = 30/30\n", "sweep.pade_order"),
    ("[network]\nn_relays = 2\nvar_rd = 1, 2, 3\n", "network.var_rd"),
    ("[network]\nmap = henon\n", "network.map"),
])
def test_errors_name_the_field(text, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field
    assert field in str(info.value)


def test_overrides_apply_before_validation():
    cfg = parse_config("[network]\nbeta = 5\n", {"network.beta": "30", "sweep.grid": "0:10:20"})
    assert cfg.network.beta == 30 and cfg.eb_n0_grid_db == (0.0, 10.0, 20.0)
    with pytest.raises(ConfigError):
        parse_config("", {"network.colour": "red"})


def test_grid_forms():
    assert parse_grid("0:5:20") == (0.0, 5.0, 10.0, 15.0, 20.0)
    assert parse_grid("0:0.1:0.3") == (0.0, 0.1, 0.2, 0.3)
    assert parse_grid("3") == (3.0,)
    for bad in ("0:0:5", "5:1:0", "a,b"):
        with pytest.raises(ConfigError):
            parse_grid(bad)

import math
from pathlib import Path

import numpy as np
import pytest

from almostcx import config as CF
from almostcx import structures as S
from almostcx.bundles import SplitChart

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_shipped_specs_load():
    s = CF.load_bundle_spec(CONFIGS / "moser.spec")
    assert s.omega == pytest.approx(2j * math.pi) and s.lam == 1 and s.beta((0.3, 0.7)) == 0.5
    assert CF.load_bundle_spec(CONFIGS / "twisted.spec").lam == pytest.approx(complex(0.5, math.sqrt(3) / 2))
    assert not CF.load_bundle_spec(CONFIGS / "wavy.spec").is_constant_beta()


@pytest.mark.parametrize("line, expected", [
    ('beta = "0.25"', 0.25),
    ("beta = [0.25, -0.5]", 0.25 - 0.5j),
    ('beta_re = "0.25"\nbeta_im = "-0.5"', 0.25 - 0.5j),
    ('beta = ["0.1 + 0.1", "sin(0)"]', 0.2),
])
def test_beta_key_forms(tmp_path, line, expected):
    p = write(tmp_path, f'[bundle]\nomega = [0.0, "2*pi"]\nlambda = [1.0, 0.0]\n{line}\n')
    assert CF.load_bundle_spec(p).beta((0.1, 0.2)) == pytest.approx(expected)


@pytest.mark.parametrize("body, fragment", [
    ('omega = [0.0, 1.0]\nlambda = [1.0, 0.0]\nbeta = "1"\nbeta_re = "1"', "either beta"),
    ('lambda = [1.0, 0.0]', "missing key 'omega'"),
    ('omega = [0.0, 1.0]\nlambda = [1.0, 0.0]\np = 1.5', "p must be an integer"),
    ('omega = [0.0, 1.0]\nlambda = [1.0, 0.0]\nzeta = 1', "unknown keys"),
    ('omega = 3\nlambda = [1.0, 0.0]', "omega"),
    ('omega = [0.0, 1.0]\nlambda = [1.0, 0.0]\nbeta = "s3 + 1"', "s3"),
    ('omega = [0.0, "2*"]\nlambda = [1.0, 0.0]', "omega"),
])
def test_bundle_spec_errors(tmp_path, body, fragment):
    p = write(tmp_path, f"[bundle]\n{body}\n")
    with pytest.raises(CF.ConfigError, match=fragment):
        CF.load_bundle_spec(p)


def test_invalid_values_rejected(tmp_path):
    p = write(tmp_path, "[bundle]\nomega = [0.0, -1.0]\nlambda = [1.0, 0.0]\n")
    with pytest.raises(CF.ConfigError, match="Im omega"):
        CF.load_bundle_spec(p)
    with pytest.raises(CF.ConfigError, match="grid points"):
        CF.load_ck_init(write(tmp_path, '[initial]\na1 = "s"\n[grid]\nn_s = 3\n', "i.toml"))


def test_toml_syntax_and_missing_file(tmp_path):
    with pytest.raises(CF.ConfigError):
        CF.load_bundle_spec(write(tmp_path, "[bundle\nomega = 1"))
    with pytest.raises(CF.ConfigError, match="missing"):
        CF.load_bundle_spec(write(tmp_path, "[other]\nx = 1\n"))
    with pytest.raises(CF.ConfigError):
        CF.load_bundle_spec(tmp_path / "absent.toml")


def test_ck_init_and_overrides():
    d = CF.load_ck_init(CONFIGS / "closedform.init")
    assert d.n_s == 21 and d.step == 0.001 and d.forcing() == (0.0, 0.0)
    assert np.allclose(d.initial()[0], -d.s) and np.allclose(d.initial()[2], d.s)
    d = CF.load_ck_init(CONFIGS / "forced.init", t_max=0.25, step=None)
    assert d.t_max == 0.25 and d.step == 0.01 and d.forcing() == pytest.approx((0.3, -0.2))


def test_ck_init_errors(tmp_path):
    with pytest.raises(CF.ConfigError, match="unknown keys"):
        CF.load_ck_init(write(tmp_path, '[initial]\na3 = "s"\n'))
    with pytest.raises(CF.ConfigError):
        CF.load_ck_init(write(tmp_path, '[initial]\na1 = "t"\n'))
    with pytest.raises(CF.ConfigError, match="initial"):
        CF.load_ck_init(write(tmp_path, '[grid]\nn_s = 11\n'))


def test_builtin_structures(tmp_path):
    J = CF.load_structure(CONFIGS / "perturbed.toml")
    p = np.array([0.1, 0.2, -0.1, 0.3])
    assert np.array_equal(J.at(p), S.perturb_standard(0.3, 5, S.default_chart()).at(p))
    for name in CF.BUILTINS:
        M = CF.builtin_structure(name).at(p)
        assert np.max(np.abs(M @ M + np.eye(4))) < 1e-9
    with pytest.raises(CF.ConfigError, match="unknown builtin"):
        CF.load_structure(write(tmp_path, '[structure]\nbuiltin = "nope"\n'))


def test_explicit_structure():
    J = CF.load_structure(CONFIGS / "explicit.toml")
    assert J.domain.names == ("x1", "x2", "y1", "y2")
    assert J.max_square_residual < 1e-12
    ch = SplitChart(J.domain, 2)
    for x in np.random.default_rng(0).uniform(-0.4, 0.4, size=(5, 2)):
        assert ch.ph_residual(J, x) == 0.0


def test_explicit_structure_errors(tmp_path):
    bad_shape = '[structure]\ncoordinates = ["a", "b"]\nJ = [["0", "-1"]]\n'
    with pytest.raises(CF.ConfigError, match="2x2"):
        CF.load_structure(write(tmp_path, bad_shape))
    not_square = '[structure]\ncoordinates = ["a", "b"]\nJ = [["0", "-1"], ["2", "0"]]\n'
    with pytest.raises(CF.ConfigError):
        CF.load_structure(write(tmp_path, not_square))
    with pytest.raises(CF.ConfigError, match="coordinates"):
        CF.load_structure(write(tmp_path, '[structure]\nJ = []\n'))

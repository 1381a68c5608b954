import json

import numpy as np
import pytest

from acx import acstruct as acs
from acx import config as cf


def _err(cfg):
    with pytest.raises(cf.ConfigError) as info:
        cf.validate(cfg)
    return info.value


def test_minimal_config_is_valid():
    assert cf.validate({"experiment": "polarization"})["experiment"] == "polarization"


def test_unknown_experiment():
    assert _err({"experiment": "nope"}).path == "experiment"


def test_unknown_keys_rejected_with_path():
    assert _err({"experiment": "ddc", "extra": 1}).path == "<root>"
    assert _err({"experiment": "ddc", "params": {"foo": 1}}).path == "params"
    assert _err({"experiment": "ddc", "params": {"N": 4}}).path == "params/N"
    assert _err({"experiment": "ddc", "params": {"eps": [0.1, -1]}}).path == "params/eps/1"


def test_wrong_schema_version():
    assert _err({"experiment": "ddc", "schema_version": 2}).path == "schema_version"


def test_jet_structure_needs_one_source():
    assert _err({"experiment": "ddc", "structure": {"kind": "jet"}}).path == "structure"
    e = _err({"experiment": "ddc", "structure": {"kind": "jet", "zero": True, "single_entry": 0.1}})
    assert e.path == "structure"
    e = _err({"experiment": "ddc", "structure": {"kind": "standard", "single_entry": 0.1}})
    assert e.path == "structure/single_entry"


def test_single_entry_needs_two_dimensions():
    e = _err({"experiment": "ddc", "structure": {"kind": "jet", "n": 1, "single_entry": 0.1}})
    assert e.path == "structure/jet"


def test_jet_payload_roundtrip():
    jet = acs.random_jet(2, np.random.default_rng(0))
    cfg = {"experiment": "ddc", "structure": {"kind": "jet", "jet": json.loads(jet.dumps())}}
    st = cf.build_structure(cf.validate(cfg)["structure"])
    p = np.array([0.05, 0.01, -0.02, 0.03])
    assert np.array_equal(st.J(exact=False).matrix(p), acs.jet_to_J(jet).matrix(p))
    assert st.label() == "jet"


def test_field_errors():
    assert _err({"experiment": "ddc", "field": {"name": "nope"}}).path == "field/name"
    e = _err({"experiment": "ddc", "field": {"name": "quadratic", "M": [[[1, 0], [0, 1]], [[0, 0], [1, 0]]]}})
    assert e.path == "field" and "Hermitian" in str(e)
    e = _err({"experiment": "ddc", "field": {"name": "poly", "terms": [[[1, 0], [3], [1]]]}})
    assert e.path == "field"


def test_field_builders():
    p = np.array([0.3, 0.1, -0.2, 0.4])
    z = acs.to_complex(p)
    f = cf.build_field({"name": "poly", "terms": [[[2, 0], [1], [2]]]}, 2)
    assert f(p) == pytest.approx(np.real(2 * z[0] * np.conj(z[1])))
    q = cf.build_field({"name": "quadratic", "M": [[[1, 0], [0, 0]], [[0, 0], [2, 0]]]}, 2)
    assert q(p) == pytest.approx(abs(z[0]) ** 2 + 2 * abs(z[1]) ** 2)
    e = cf.build_field({"name": "exp_re"}, 2)
    assert e(p) == pytest.approx(np.exp(p[0]))


def test_metric_builders():
    assert cf.build_metric(None, 2).name == "standard"
    s = cf.build_metric({"kind": "conformal", "phi": "sphere"}, 1)
    assert np.allclose(s(np.zeros(2)), 4 * np.eye(2))
    g = cf.build_metric({"kind": "conformal", "phi": "gaussian", "a": 1.0}, 1)
    assert np.allclose(g(np.array([1.0, 0.0])), np.e * np.eye(2))


def test_digest_is_canonical():
    a = {"experiment": "ddc", "params": {"n": 2, "h": 1e-4}}
    b = {"params": {"h": 1e-4, "n": 2}, "experiment": "ddc"}
    assert cf.digest(a) == cf.digest(b)
    assert cf.digest(a) != cf.digest({"experiment": "ddc"})
    assert len(cf.digest(a)) == 64


def test_load_reports_bad_json(tmp_path):
    p = tmp_path / "c.json"
    p.write_text("{not json")
    with pytest.raises(cf.ConfigError) as info:
        cf.load(p)
    assert info.value.path == "<file>"

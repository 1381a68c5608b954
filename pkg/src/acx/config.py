"""Experiment configuration: JSON schema, validation and object builders.

Complex numbers are written as ``[re, im]``; multi-indices in field terms are
1-based.
"""
from __future__ import annotations

import hashlib
import json

import jsonschema
import numpy as np

from . import acstruct as acs
from . import fields as fl
from .forms import HermitianMetric

SCHEMA_VERSION = 1

EXPERIMENT_NAMES = [
    "torsion-consistency", "jet-residual-slope", "cauchy-right-inverse", "disk-solver",
    "cylinder", "jflat-defect", "positivity-11", "polarization", "wirtinger",
    "hessian-slope", "laplacian", "ddc", "psh-test", "log-eps", "regularize-sweep",
    "monotonicity", "positivity-loss", "griffiths",
]

_complex = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_vector = {"type": "array", "items": {"type": "number"}, "minItems": 2}
_pos = {"type": "number", "exclusiveMinimum": 0}
_posint = {"type": "integer", "minimum": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "experiment": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "structure": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["standard", "jet", "conformal"]},
                "n": {"type": "integer", "minimum": 1, "maximum": 3},
                "jet": {"type": "object"},
                "single_entry": {"type": "number"},
                "random": {
                    "type": "object", "additionalProperties": False,
                    "properties": {"seed": {"type": "integer", "minimum": 0}, "scale": _pos},
                },
                "zero": {"type": "boolean"},
            },
        },
        "metric": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["standard", "conformal"]},
                "phi": {"enum": ["sphere", "gaussian"]},
                "a": {"type": "number"},
            },
        },
        "field": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": sorted(fl.LIBRARY) + ["exp_re", "quadratic", "poly"]},
                "c": {"type": "array", "items": _complex},
                "M": {"type": "array", "items": {"type": "array", "items": _complex}},
                "terms": {
                    "type": "array",
                    "items": {
                        "type": "array", "minItems": 3, "maxItems": 3,
                        "prefixItems": [_complex,
                                        {"type": "array", "items": {"type": "integer", "minimum": 1}},
                                        {"type": "array", "items": {"type": "integer", "minimum": 1}}],
                    },
                },
            },
        },
        "params": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1, "maximum": 3},
                "N": {"type": "integer", "minimum": 16},
                "Ns": {"type": "array", "items": {"type": "integer", "minimum": 16}, "minItems": 2},
                "rho": _pos,
                "rho2": _pos,
                "m": {"type": "integer", "minimum": 2},
                "tol": _pos,
                "max_iter": _posint,
                "x": _vector,
                "v": _vector,
                "frame": {"type": "array", "items": _vector},
                "eps": {"type": "array", "items": _pos, "minItems": 1},
                "radii": {"type": "array", "items": _pos, "minItems": 1},
                "quad_res": {"type": "array", "items": _posint, "minItems": 2, "maxItems": 2},
                "steps": _posint,
                "samples": _posint,
                "jets": _posint,
                "directions": _posint,
                "h": _pos,
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "dump_disk": {"type": "string"},
            },
        },
    },
}


class ConfigError(ValueError):
    """Malformed configuration; ``path`` names the offending key."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


def _path(err):
    parts = [str(p) for p in err.absolute_path]
    return "/".join(parts) if parts else "<root>"


def validate(cfg):
    """Validate ``cfg`` against the schema and the semantic rules; raise :class:`ConfigError`."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        e = errors[0]
        raise ConfigError(_path(e), e.message)
    if cfg["experiment"] not in EXPERIMENT_NAMES:
        raise ConfigError("experiment", f"unknown experiment {cfg['experiment']!r}")
    st = cfg.get("structure")
    if st is not None:
        given = [k for k in ("jet", "single_entry", "random", "zero") if k in st]
        if st["kind"] == "jet" and len(given) != 1:
            raise ConfigError("structure", "a jet structure needs exactly one of jet, single_entry, random, zero")
        if st["kind"] != "jet" and given:
            raise ConfigError(f"structure/{given[0]}", f"not allowed for kind {st['kind']!r}")
        try:
            build_structure(st)
        except (acs.InvalidJet, KeyError, ValueError, TypeError) as exc:
            raise ConfigError("structure/jet", str(exc)) from None
    f = cfg.get("field")
    if f is not None:
        try:
            build_field(f, (st or {}).get("n", 2))
        except (KeyError, ValueError, IndexError, TypeError) as exc:
            raise ConfigError("field", str(exc)) from None
    return cfg


def load(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from None
    return validate(cfg)


def digest(cfg):
    """SHA-256 of the canonical JSON form of the configuration."""
    text = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


# ---------------------------------------------------------------------------
# builders

class Structure:
    """A structure choice: ``kind``, dimension and (for jets) the jet itself."""

    def __init__(self, kind, n, jet=None):
        self.kind = kind
        self.n = n
        self.jet = jet

    def J(self, exact=True):
        if self.kind == "jet":
            return acs.jet_to_J(self.jet, exact=exact)
        return acs.standard(self.n)

    def label(self):
        if self.kind == "jet":
            return "zero-jet" if self.jet.is_zero() else "jet"
        return self.kind


def build_structure(spec):
    kind = spec["kind"]
    n = int(spec.get("n", 2))
    if kind != "jet":
        return Structure(kind, n)
    if "jet" in spec:
        jet = acs.JetACS.from_json(spec["jet"])
        if "n" in spec and jet.n != n:
            raise ValueError(f"jet dimension {jet.n} differs from n = {n}")
        return Structure(kind, jet.n, jet)
    if "single_entry" in spec:
        if n < 2:
            raise ValueError("the single-entry jet needs n >= 2")
        return Structure(kind, n, acs.single_entry_jet(n, spec["single_entry"]))
    if "random" in spec:
        r = spec["random"]
        rng = np.random.default_rng(r.get("seed", 0))
        return Structure(kind, n, acs.random_jet(n, rng, scale=r.get("scale", 0.3)))
    return Structure(kind, n, acs.JetACS.zero(n))


def sphere_metric(n=1):
    """``4 / (1 + |p|^2)^2`` times the Euclidean metric (Gauss curvature 1 when n = 1)."""
    def phi(p):
        return np.log(4.0) - 2 * np.log1p(np.sum(p * p, axis=-1))

    def dphi(p):
        return -4 * p / (1 + np.sum(p * p, axis=-1))[..., None]

    return HermitianMetric.conformal(n, phi, dphi, name="sphere")


def gaussian_metric(n, a):
    """``exp(a |p|^2)`` times the Euclidean metric."""
    def phi(p):
        return a * np.sum(p * p, axis=-1)

    def dphi(p):
        return 2 * a * p

    return HermitianMetric.conformal(n, phi, dphi, name="gaussian")


def build_metric(spec, n):
    if spec is None or spec["kind"] == "standard":
        return HermitianMetric.standard(n)
    if spec.get("phi", "sphere") == "sphere":
        return sphere_metric(n)
    return gaussian_metric(n, spec.get("a", 0.5))


def _cplx(v):
    return complex(v[0], v[1])


def build_field(spec, n):
    name = spec["name"]
    if name in fl.LIBRARY:
        return fl.from_name(name, n)
    if name == "exp_re":
        c = [_cplx(v) for v in spec.get("c", [[1.0, 0.0]] + [[0.0, 0.0]] * (n - 1))]
        if len(c) != n:
            raise ValueError(f"exp_re needs {n} coefficients")
        return fl.exp_re(n, c)
    if name == "quadratic":
        M = np.array([[_cplx(v) for v in row] for row in spec["M"]])
        if M.shape != (n, n):
            raise ValueError(f"quadratic needs an {n}x{n} matrix")
        if np.max(np.abs(M - M.conj().T)) > 1e-12:
            raise ValueError("quadratic matrix must be Hermitian")
        return fl.quadratic(M)
    terms = []
    for c, hol, anti in spec["terms"]:
        if any(i > n for i in list(hol) + list(anti)):
            raise IndexError(f"index out of range for n = {n}")
        terms.append((_cplx(c), tuple(i - 1 for i in hol), tuple(i - 1 for i in anti)))
    return fl.monomial_field(n, terms)

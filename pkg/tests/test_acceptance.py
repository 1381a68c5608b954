"""One test per acceptance criterion, each run through the CLI report builder.

Every test prints a single ``criterion k: PASS|FAIL`` line with the measured
values. Reports are cached so the determinism criterion can rerun the same
configurations and compare bytes.
"""
import time

import pytest

from acx import cli
from acx import config as cf

JET = {"kind": "jet", "single_entry": 0.1}

CONFIGS = {
    1: [{"experiment": "jet-residual-slope", "params": {"n": 2, "jets": 5}}],
    2: [{"experiment": "torsion-consistency", "structure": JET}],
    3: [{"experiment": "cauchy-right-inverse", "params": {"Ns": [64, 128, 256]}}],
    4: [{"experiment": "disk-solver", "structure": JET, "params": {"rho": 0.2, "N": 128}}],
    5: [{"experiment": "jflat-defect", "structure": JET, "params": {"m": 9}},
        {"experiment": "cylinder", "structure": JET, "params": {"m": 9}}],
    6: [{"experiment": "hessian-slope", "params": {"directions": 5}},
        {"experiment": "laplacian"}, {"experiment": "ddc"}],
    7: [{"experiment": "positivity-11", "params": {"samples": 200}},
        {"experiment": "polarization", "params": {"samples": 100}}],
    8: [{"experiment": "wirtinger", "params": {"samples": 20}}],
    9: [{"experiment": "psh-test", "params": {"samples": 50}}],
    10: [{"experiment": "log-eps", "params": {"samples": 20, "eps": [1.0, 0.1, 0.01]}}],
    11: [{"experiment": "regularize-sweep", "params": {"eps": [0.2, 0.1, 0.05]}},
         {"experiment": "monotonicity", "params": {"eps": [0.2, 0.1, 0.05]}}],
    12: [{"experiment": "positivity-loss", "structure": JET, "params": {"eps": [0.2, 0.1, 0.05]}}],
    13: [{"experiment": "griffiths", "params": {"samples": 100}}],
}

# seconds, per experiment name
RUNTIME = {"jet-residual-slope": 5, "torsion-consistency": 5, "cauchy-right-inverse": 30,
           "disk-solver": 30, "jflat-defect": 60, "hessian-slope": 20, "regularize-sweep": 600,
           "monotonicity": 600}

_REPORTS = {}


def _run(cfg):
    cf.validate(cfg)
    t0 = time.perf_counter()
    report, _, code = cli.build_report(cfg, seed=0)
    elapsed = time.perf_counter() - t0
    _REPORTS[cf.digest(cfg)] = cli.dumps(report)
    return report, code, elapsed


def _check(report, prefix):
    return next(c for c in report["checks"] if c["name"].startswith(prefix))


def _accept(k, extra=None):
    """Run criterion ``k``; print one line; return the reports by experiment name."""
    ok = True
    parts = []
    reports = {}
    for cfg in CONFIGS[k]:
        report, code, elapsed = _run(cfg)
        name = cfg["experiment"]
        reports[name] = report
        limit = RUNTIME.get(name)
        fast = limit is None or elapsed < limit
        ok &= code == 0 and fast
        failed = [c["name"] for c in report["checks"] if c["enforced"] and not c["pass"]]
        parts.append(f"{name} exit {code} in {elapsed:.1f}s" + (f" limit {limit}s" if limit else "")
                     + (f" failed {failed}" if failed else ""))
    if extra is not None:
        msg, good = extra(reports)
        parts.append(msg)
        ok &= good
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} | " + "; ".join(parts))
    return ok, reports


def test_criterion_01_jet_residual_slope():
    def extra(r):
        c = _check(r["jet-residual-slope"], "min slope")
        return f"min slope {c['value']:.3f}", c["threshold"] == 3.9 and len(r["jet-residual-slope"]["data"]["slopes"]) == 5
    assert _accept(1, extra)[0]


def test_criterion_02_torsion_consistency():
    def extra(r):
        s = _check(r["torsion-consistency"], "min slope")
        z = _check(r["torsion-consistency"], "max difference at z = 0")
        return (f"slope {s['value']:.3f}, at 0 {z['value']:.1e}",
                s["threshold"] == 1.9 and z["threshold"] == 1e-8)
    assert _accept(2, extra)[0]


def test_criterion_03_cauchy_right_inverse():
    def extra(r):
        c = _check(r["cauchy-right-inverse"], "min error ratio")
        return f"min ratio {c['value']:.2f}", c["threshold"] == 1.8
    assert _accept(3, extra)[0]


def test_criterion_04_disk_solver():
    def extra(r):
        rep = r["disk-solver"]
        res, it = _check(rep, "residual"), _check(rep, "iterations")
        ctl = _check(rep, "J_0 control")
        return (f"residual {res['value']:.1e} in {it['value']} iterations, control {ctl['value']}",
                res["threshold"] == 1e-6 and it["threshold"] == 30 and ctl["value"] == 1)
    assert _accept(4, extra)[0]


def test_criterion_05_jflat_defect():
    def extra(r):
        d = _check(r["jflat-defect"], "flatness defect (pullback")
        b = _check(r["jflat-defect"], "flatness defect (bracket")
        neg = _check(r["jflat-defect"], "negative control")
        return (f"defect {d['value']:.2e} / {b['value']:.2e}, control {neg['value']:.3f}",
                d["threshold"] == 5e-4 and neg["threshold"] == 1e-2)
    assert _accept(5, extra)[0]


def test_criterion_06_hessian_slope():
    def extra(r):
        rep = r["hessian-slope"]
        s = _check(rep, "min slope")
        z = _check(rep, "zero-jet")
        return (f"min slope {s['value']:.3f}, zero jet {z['value']:.1e}",
                s["threshold"] == 2.9 and z["threshold"] == 1e-11)
    assert _accept(6, extra)[0]


def test_criterion_07_positivity_and_polarization():
    def extra(r):
        mu = _check(r["positivity-11"], "|min eigenvalue")
        mm = _check(r["positivity-11"], "eigenvalue vs randomized")
        pol = _check(r["polarization"], "max polarization")
        return (f"|mu - 2| {mu['value']:.1e}, mismatches {mm['value']}, polarization {pol['value']:.1e}",
                mu["threshold"] == 1e-9 and pol["threshold"] == 1e-12)
    assert _accept(7, extra)[0]


def test_criterion_08_wirtinger():
    def extra(r):
        rep = r["wirtinger"]
        a = _check(rep, "max |alpha - 1|")
        b = _check(rep, "max |alpha| on the totally")
        c = _check(rep, "max |alpha| on seeded")
        return (f"disk {a['value']:.1e}, real plane {b['value']:.1e}, surfaces {c['value']:.4f}",
                a["threshold"] == 2e-3 and b["threshold"] == 1e-6)
    assert _accept(8, extra)[0]


def test_criterion_09_psh_test():
    def extra(r):
        c = _check(r["psh-test"], "psh-test vs eigenvalue")
        return f"mismatches {c['value']}", True
    assert _accept(9, extra)[0]


def test_criterion_10_log_eps():
    def extra(r):
        c = _check(r["log-eps"], "min eigenvalue")
        return f"min eigenvalue {c['value']:.2e}", c["threshold"] == -1e-7
    assert _accept(10, extra)[0]


def test_criterion_11_regularize_and_monotonicity():
    def extra(r):
        lo = _check(r["regularize-sweep"], "min bias ratio")
        hi = _check(r["regularize-sweep"], "max bias ratio")
        return f"bias ratios {lo['value']:.3f}..{hi['value']:.3f}", lo["threshold"] == [3.5, 4.5]
    assert _accept(11, extra)[0]


def test_criterion_12_positivity_loss():
    def extra(r):
        rep = r["positivity-loss"]
        ctl = _check(rep, "flat control")
        ev = _check(rep, "jet: delta_eps nonincreasing")
        return (f"control {ctl['value']:.1e} (enforced), jet increase {ev['value']:.1e} "
                f"({'nonincreasing' if ev['pass'] else 'increasing'}, evidence only)",
                ctl["threshold"] == 1e-6 and not ev["enforced"])
    assert _accept(12, extra)[0]


def test_criterion_13_griffiths():
    def extra(r):
        rep = r["griffiths"]
        f, s = _check(rep, "flat case"), _check(rep, "sphere: |G - 1|")
        p = _check(rep, "min G_perp - G")
        return (f"flat {f['value']:.1e}, sphere {s['value']:.1e}, min G_perp - G {p['value']:.2e}",
                f["threshold"] == 1e-8 and s["threshold"] == 1e-4)
    assert _accept(13, extra)[0]


def test_criterion_14_determinism():
    cfgs = [cfg for k in sorted(CONFIGS) for cfg in CONFIGS[k]]
    assert sorted(c["experiment"] for c in cfgs) == sorted(cf.EXPERIMENT_NAMES)
    differing = []
    for cfg in cfgs:
        key = cf.digest(cfg)
        first = _REPORTS.get(key)
        if first is None:
            first = cli.dumps(cli.build_report(cfg, seed=0)[0])
        second = cli.dumps(cli.build_report(cfg, seed=0)[0])
        if first != second:
            differing.append(cfg["experiment"])
    ok = not differing
    print(f"criterion 14: {'PASS' if ok else 'FAIL'} | {len(cfgs)} experiments rerun, "
          f"differing: {differing or 'none'}")
    assert ok

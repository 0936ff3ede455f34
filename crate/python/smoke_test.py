"""Smoke test of the radrel Python bindings.

Uses an installed `radrel` module when available (``maturin develop`` or
``pip install .``), else the extension built by
``cargo build --release -p radrel-py``.
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import struct
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_radrel():
    try:
        import radrel

        return radrel
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libradrel_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("radrel", str(lib))
            spec = importlib.util.spec_from_loader("radrel", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            sys.modules["radrel"] = module
            return module
    raise ImportError("radrel extension not built; run `cargo build --release -p radrel-py`")


radrel = load_radrel()


def close(a, b, tol):
    return abs(a - b) <= tol * abs(b)


def container(frames, bits_per_frame, fluence, flips):
    """RBKC bytes with an all-zero golden image, full mask and one readback."""
    n = frames * bits_per_frame
    nbytes = (n + 7) // 8
    readback = bytearray(nbytes)
    for frame, bit in flips:
        i = frame * bits_per_frame + bit
        readback[i // 8] |= 1 << (i % 8)
    header = b"RBKC" + struct.pack("<HIIIId", 1, frames, bits_per_frame, 1, 1, fluence)
    mask = bytearray(b"\xff" * nbytes)
    if n % 8:
        mask[-1] = (1 << (n % 8)) - 1
    return header + bytes(nbytes) + bytes(mask) + bytes(readback)


def test_cross_section():
    est = radrel.estimate_cross_section(2417, 1.2e11)
    assert close(est.mean, 2.01e-8, 0.005)
    assert est.ci_low < est.mean < est.ci_high
    lo, hi = radrel.garwood_interval(0)
    assert lo == 0.0 and close(hi, math.log(40), 1e-6)
    none = radrel.estimate_cross_section(0, 1e10)
    assert none.mean is None and none.to_dict()["n_events"] == 0


def test_projection():
    profile = radrel.DeviceProfile("xczu9eg")
    assert "xczu9eg" in radrel.DeviceProfile.bundled_names()
    alt = radrel.Environment("nyc_40kft")
    assert close(profile.group_mttu_months("pl", alt), 1.808, 0.005)
    fleet = profile.group_mttu_months("pl", radrel.Environment("nyc_sea_level"), nodes=1000)
    assert close(fleet, 0.904, 0.005)
    apps = profile.application_mttf_months(alt)
    assert abs(apps["DPU"]["C+H"] - 86.7) < 2
    sections = profile.project(alt)
    assert {s["section"] for s in sections} >= {"projections", "ratios"}


def test_clustering_and_readback():
    events = radrel.cluster_events([(0, 0, 0), (0, 1, 1), (0, 5, 5)], 8, 8)
    assert sorted(len(e) for e in events) == [1, 2]
    flips = [(f, 0) for f in range(0, 20, 2)]
    sections = radrel.analyze_readback(container(32, 16, 1e10, flips))
    xs = next(s for s in sections if s["section"] == "cross_sections")
    per_device = next(r for r in xs["rows"] if r["category"] == "nseu_per_device")
    assert per_device["estimate"]["n_events"] == 10
    try:
        radrel.analyze_readback(b"NOPE" + bytes(40))
    except ValueError as e:
        assert "offset" in str(e)
    else:
        raise AssertionError("malformed container accepted")


def test_xsection():
    log = {
        "benchmark": "DPU",
        "fluence_n_per_cm2": 5.55e10,
        "counts": {"runs": 5985, "correct": 2964, "tolerable_sdc": 2886, "critical_sdc": 46, "timeout": 89},
    }
    sections = radrel.xsection(json.dumps(log))
    rows = sections[0]["rows"]
    tol = next(r for r in rows if r["category"] == "tolerable_sdc")["estimate"]
    assert close(tol["mean"], 5.20e-8, 0.005)


def test_simulation():
    race = radrel.run_scrub_race(8, 1700, 60, trials=100, seed=1)
    assert race.steady_state_backlog < 1
    cfg = {"profile": "xczu9eg", "environment": "nyc_40kft", "groups": ["pl"], "trials": 2000, "seed": 3}
    result = radrel.simulate(json.dumps(cfg))
    expected = 1 / result.analytic_rate_per_hour
    assert abs(result.mean_time_hours - expected) <= 3 * result.standard_error_hours
    again = radrel.simulate(json.dumps(cfg))
    assert again.time_to_first_failure == result.time_to_first_failure
    try:
        radrel.simulate(json.dumps({"profile": "xczu9eg", "trials": 0}))
    except ValueError:
        pass
    else:
        raise AssertionError("zero trials accepted")


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok  {name}")

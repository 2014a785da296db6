import os
import struct

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fakespeech.dataset import LabeledDataset

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def wav_bytes(payload: bytes, channels: int, rate: int, bits: int, tag: int = 1,
              extra_chunks: bytes = b"", extensible: bool = False) -> bytes:
    """Assemble a RIFF/WAVE file by hand."""
    block = channels * bits // 8
    if extensible:
        guid_tail = b"\x00\x00\x00\x00\x10\x00\x80\x00\x00\xaa\x00\x38\x9b\x71"
        fmt = struct.pack("<HHIIHHHHI", 0xFFFE, channels, rate, rate * block, block, bits,
                          22, bits, 0) + struct.pack("<H", tag) + guid_tail
    else:
        fmt = struct.pack("<HHIIHH", tag, channels, rate, rate * block, block, bits)
    body = (b"WAVE" + extra_chunks + b"fmt " + struct.pack("<I", len(fmt)) + fmt
            + b"data" + struct.pack("<I", len(payload)) + payload)
    return b"RIFF" + struct.pack("<I", len(body)) + body


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_blobs(rng, n_per_class=100, d=2, sep=5.0, names=None):
    X = np.vstack([rng.normal(0.0, 1.0, (n_per_class, d)),
                   rng.normal(sep, 1.0, (n_per_class, d))])
    y = np.r_[np.zeros(n_per_class, int), np.ones(n_per_class, int)]
    return LabeledDataset(X, y, names or tuple(f"f{i}" for i in range(d)))


def make_xor(rng, n=400):
    X = rng.uniform(-1.0, 1.0, (n, 2))
    y = ((X[:, 0] > 0) ^ (X[:, 1] > 0)).astype(int)
    return LabeledDataset(X, y, ("a", "b"))


def make_feature_dataset(rng, n=400, shift=1.0):
    """26-column rows where a handful of columns carry class signal."""
    y = np.r_[np.zeros(n // 2, int), np.ones(n - n // 2, int)]
    X = rng.normal(size=(n, 26))
    X[:, :4] += shift * y[:, None]
    X[:, 4] += shift * np.where(y == 1, 1.0, -1.0) * X[:, 5]
    return LabeledDataset(X, y)


# ---- acceptance reporting ---------------------------------------------------
# Tests marked ``criterion(n)`` roll up into one PASS / FAIL / BLOCKED line per
# criterion, printed in the terminal summary whatever the capture mode.

_CRITERIA: dict[int, dict] = {}
_RANK = {"PASS": 0, "BLOCKED": 1, "FAIL": 2}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        if rep.skipped:
            status = "BLOCKED"
            detail = rep.longrepr[2] if isinstance(rep.longrepr, tuple) else str(rep.longrepr)
            detail = detail.removeprefix("Skipped: ")
        elif rep.passed:
            status = "PASS"
            detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        else:
            status = "FAIL"
            detail = str(rep.longrepr).strip().splitlines()[-1][:160]
        entry = _CRITERIA.setdefault(marker.args[0], {"status": "PASS", "details": []})
        if _RANK[status] > _RANK[entry["status"]]:
            entry["status"] = status
        if detail:
            entry["details"].append(detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {e['status']:7s} {' | '.join(e['details'])}")

"""Shared test configuration.

Two jobs:
  * pin a property-testing profile (1000 examples, derandomized so the suite
    is reproducible and flake-free);
  * collect the `acceptance` markers and print one PASS/FAIL line per
    criterion at the end of the run.
"""

from __future__ import annotations

from hypothesis import HealthCheck, settings

settings.register_profile(
    "fcdc",
    max_examples=1000,
    deadline=None,
    derandomize=True,
    suppress_health_check=[
        HealthCheck.too_slow,
        HealthCheck.data_too_large,
        HealthCheck.filter_too_much,
    ],
)
settings.load_profile("fcdc")


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(label): criterion verified by the acceptance gate",
    )


def pytest_collection_modifyitems(config, items):
    labels = {}
    for item in items:
        marker = item.get_closest_marker("acceptance")
        if marker is not None:
            label = marker.kwargs.get("label") or (marker.args[0] if marker.args else None)
            if label:
                labels[item.nodeid] = label
    config._acceptance_labels = labels


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    labels = getattr(config, "_acceptance_labels", {})
    if not labels:
        return
    words = {
        "passed": "PASS",
        "failed": "FAIL",
        "error": "FAIL",
        "xfailed": "FAIL (expected)",
        "xpassed": "FAIL",
        "skipped": "SKIP",
    }
    outcome = {}
    for status, word in words.items():
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", None)
            if nodeid in labels:
                outcome.setdefault(nodeid, word)
    rows = sorted((labels[nid], word) for nid, word in outcome.items())
    if not rows:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for label, word in rows:
        terminalreporter.write_line(f"{word:16s} {label}")

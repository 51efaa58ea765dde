"""Acceptance criteria 1-12, one test each.

Each test runs the matching validation suite at full size, prints a single
PASS/FAIL line for the criterion (plus one line per sub-check) and asserts
that every sub-check passed. Run directly with ``python3 tests/test_acceptance.py``
for the report without pytest.
"""

import sys
import time

import pytest

from exactsv import validate

SEED = 2024
CRITERIA = {
    1: ("dirichlet-mean moments from the exact sampler", ["dmean-moments"]),
    2: ("mean stack sizes of the exact sampler", ["stack-sizes"]),
    3: ("mean stopping counts at machine epsilon", ["stopping-counts"]),
    4: ("truncated samplers against exact draws and the L1 bound", ["truncation"]),
    5: ("stack size decreasing, convex, minimal at delta=1", ["stack-shape"]),
    6: ("one-step return moments", ["returns"]),
    7: ("forward-start option estimates", ["forward-start"]),
    8: ("discounted-price martingale grid", ["martingale"]),
    9: ("Black-Scholes limit at theta=0", ["bs-limit"]),
    10: ("BFRY and tilted BFRY samplers", ["ggc-examples"]),
    11: ("calibration roundtrip and simplex benchmarks", ["calibration"]),
    12: ("thread-independent CLI output", ["determinism"]),
}

RESULTS = {}


def evaluate(criterion):
    title, suites = CRITERIA[criterion]
    t0 = time.perf_counter()
    checks = []
    for name in suites:
        checks.extend(validate.run_suite(name, seed=SEED))
    ok = all(c.passed for c in checks)
    failed = [c.name for c in checks if not c.passed]
    head = (f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'} - {title} "
            f"({len(checks) - len(failed)}/{len(checks)} checks, "
            f"{time.perf_counter() - t0:.1f}s)")
    RESULTS[criterion] = head
    return ok, head, checks


def report(head, checks, out=sys.stdout):
    print(head, file=out)
    for c in checks:
        print("    " + c.line(), file=out)
    out.flush()


@pytest.mark.slow
@pytest.mark.parametrize("criterion", sorted(CRITERIA),
                         ids=[f"criterion_{k:02d}" for k in sorted(CRITERIA)])
def test_acceptance(criterion, capsys):
    ok, head, checks = evaluate(criterion)
    with capsys.disabled():
        print()
        report(head, checks)
    assert ok, head


if __name__ == "__main__":
    n_ok = 0
    for k in sorted(CRITERIA):
        ok, head, checks = evaluate(k)
        report(head, checks)
        n_ok += ok
    print(f"{n_ok}/{len(CRITERIA)} criteria pass")
    sys.exit(0 if n_ok == len(CRITERIA) else 1)

"""Compare the compiled and pure-Python kernels.

Each backend runs in its own interpreter (the backend is fixed at import via
``EXACTSV_BACKEND``). Workloads are sized so the pure-Python side finishes
in seconds; throughput is reported per draw.

    python3 benchmarks/bench_backends.py [--repeat 3]
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
import exactsv as ev
from exactsv.validate import table_spec

def best(fn, repeat):
    out, ts = None, []
    for _ in range(repeat):
        t0 = time.perf_counter(); out = fn(); ts.append(time.perf_counter() - t0)
    return min(ts), out

repeat, scale = int(sys.argv[1]), float(sys.argv[2])
n_dm = int(20000 * scale)
n_path = int(5000 * scale)
model = ev.ModelSpec.build(ev.Variant.OU_GAMMA, -1.0, 0.1, ev.Constant(1.0),
                           [0.5], [0.04])
gl = ev.ModelSpec.build(ev.Variant.GL_OU_GGC, -1.0, 0.1,
                        ev.ScaledBeta(1.0, 1.0, 1.0), [0.5], [0.04])
stream = ev.RandomStream(7)
jobs = {
    "exact dirichlet mean (delta=1)": (n_dm, lambda: ev.sample_exact_batch(
        table_spec(1.0), n_dm, stream, threads=1).values),
    "exact dirichlet mean (delta=5)": (n_dm // 4, lambda: ev.sample_exact_batch(
        table_spec(5.0), n_dm // 4, stream, threads=1).values),
    "stopping truncation (eps=1e-8)": (n_dm, lambda: ev.sample_truncated_batch(
        table_spec(1.0), ev.StoppingBounded(1e-8), n_dm, stream, threads=1).values),
    "OU-Gamma paths, 4 steps": (n_path, lambda: ev.simulate(
        model, 100.0, [0.25, 0.5, 0.75, 1.0], n_path, stream, threads=1).price),
    "GL-OU-GGC paths, 4 steps (pair)": (n_path, lambda: ev.simulate(
        gl, 100.0, [0.25, 0.5, 0.75, 1.0], n_path, stream, threads=1).price),
}
res = {"backend": ev.BACKEND, "jobs": {}}
for name, (n, fn) in jobs.items():
    t, out = best(fn, repeat)
    res["jobs"][name] = {"n": n, "seconds": t,
                         "checksum": float(np.sum(np.asarray(out, dtype=float)))}
print(json.dumps(res))
"""


def run(backend, repeat, scale):
    env = dict(os.environ, EXACTSV_BACKEND=backend)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(repeat), str(scale)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0,
                    help="multiplier on the workload sizes")
    args = ap.parse_args(argv)

    fast = run("compiled", args.repeat, args.scale)
    slow = run("python", args.repeat, args.scale)
    print(f"{'workload':34s} {'n':>7s} {'compiled us/draw':>17s} "
          f"{'python us/draw':>15s} {'speedup':>8s}  same output")
    for name, a in fast["jobs"].items():
        b = slow["jobs"][name]
        ta, tb = 1e6 * a["seconds"] / a["n"], 1e6 * b["seconds"] / b["n"]
        same = "yes" if a["checksum"] == b["checksum"] else "NO"
        print(f"{name:34s} {a['n']:7d} {ta:17.2f} {tb:15.2f} {tb / ta:7.1f}x  {same}")


if __name__ == "__main__":
    main()

"""Compare the compiled marching kernel against the pure-Python fallback.

The backend is frozen at import time, so each measurement runs in a child
process with MESHWIRE_BACKEND set.  Usage:

    python3 benchmarks/bench_routing.py [--routes N]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _workloads(n_routes):
    import numpy as np

    from meshwire.demo import build_demo
    from meshwire.geometry import SurfacePoint
    from meshwire.primitives import make_icosphere, make_plane
    from meshwire.routing import route_trace

    rng = np.random.default_rng(7)

    def random_points(mesh, n):
        areas = mesh.face_areas / mesh.face_areas.sum()
        faces = rng.choice(mesh.n_faces, size=n, p=areas)
        r1, r2 = rng.random(n), rng.random(n)
        s = np.sqrt(r1)
        bary = np.stack([1 - s, s * (1 - r2), s * r2], axis=1)
        return [SurfacePoint(int(f), b) for f, b in zip(faces, bary)]

    def pair_routing(mesh):
        pts = random_points(mesh, 2 * n_routes)
        route_trace(mesh, pts[0], pts[1])  # warm adjacency caches
        t0 = time.perf_counter()
        routed = 0
        for a, b in zip(pts[::2], pts[1::2]):
            routed += route_trace(mesh, a, b).routed
        return (time.perf_counter() - t0) / n_routes * 1e3, routed

    out = {}
    out["plane 100mm, 3.2k faces"] = pair_routing(make_plane(100.0, 100.0, 40, 40))
    out["icosphere r50, 20k faces"] = pair_routing(make_icosphere(4, 50.0))

    mesh, doc = build_demo()
    doc.layout.traces.clear()
    t0 = time.perf_counter()
    doc.route_all()
    per = (time.perf_counter() - t0) / len(doc.layout.traces) * 1e3
    out["demo cone, 20 nets, 10k faces"] = (per, len(doc.layout.traces))
    return out


def _worker(n_routes):
    from meshwire.kernels import ACTIVE_BACKEND

    results = {
        "backend": ACTIVE_BACKEND,
        "timings": _workloads(n_routes),
    }
    print(json.dumps(results))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--routes", type=int, default=100, help="pairs per workload")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()

    if args.worker:
        _worker(args.routes)
        return

    rows = {}
    for backend in ("compiled", "python"):
        env = dict(os.environ, MESHWIRE_BACKEND=backend)
        proc = subprocess.run(
            [sys.executable, __file__, "--worker", "--routes", str(args.routes)],
            env=env,
            capture_output=True,
            text=True,
        )
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            sys.exit(f"{backend} worker failed")
        data = json.loads(proc.stdout.strip().splitlines()[-1])
        assert data["backend"] == backend
        rows[backend] = data["timings"]

    width = max(len(k) for k in rows["compiled"])
    print(f"{'workload':<{width}}  {'compiled':>10}  {'python':>10}  {'speedup':>8}")
    for name, (fast_ms, _) in rows["compiled"].items():
        slow_ms = rows["python"][name][0]
        print(
            f"{name:<{width}}  {fast_ms:>8.2f}ms  {slow_ms:>8.2f}ms"
            f"  {slow_ms / fast_ms:>7.1f}x"
        )


if __name__ == "__main__":
    main()

"""Compare the compiled and pure-Python integration kernels.

    python3 benchmarks/bench_kernels.py [--repeat N]

Runs the same workloads through both kernels, checks that the outputs are
identical and prints the wall time of each.
"""
import argparse
import time

from martinetkit import _kernels
from martinetkit.examples import builtin, printed_field
from martinetkit.flow import IntegratorOpts, _orbit_program
from martinetkit.martinet import MartinetData
from martinetkit.vfield import VecField


def workloads():
    md = MartinetData.from_distribution(builtin("loop"))
    orbit = _orbit_program(md.Z, md.surface, md.h)
    yield "loop Z orbit to speed floor", orbit, [-0.3, 0.0, 0.3, 0.0, 0.0], IntegratorOpts()
    loop = _orbit_program(printed_field(), None, None, planar_length=True)
    yield "homoclinic half-loop", loop, [-0.3, 0.0, 0.3, 0.0, 0.0], IntegratorOpts(
        rel_tol=1e-12, abs_tol=1e-15, stop_speed=1e-8)
    rot = _orbit_program(VecField.parse(["y", "-x", "x*y"]), None, None, planar_length=True)
    yield "rotation, t = 2000", rot, [1.0, 0.0, 0.0, 0.0, 0.0], IntegratorOpts(
        rel_tol=1e-12, abs_tol=1e-15, max_time=2000.0, stop_speed=0.0)


def best_of(fn, repeat):
    times, out = [], None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    compiled = _kernels.integrate_compiled()
    if compiled is None:
        print("compiled extension not built; only the Python kernel is available")
    print(f"{'workload':<30} {'steps':>7} {'python [s]':>11} {'compiled [s]':>13} {'speedup':>8}  same")
    for name, prog, y0, opts in workloads():
        tp, rp = best_of(lambda: prog.run(y0, opts.max_time, opts, backend="python"), args.repeat)
        if compiled is None:
            print(f"{name:<30} {rp[3]:>7} {tp:>11.4f} {'-':>13} {'-':>8}  -")
            continue
        tc, rc = best_of(lambda: prog.run(y0, opts.max_time, opts, backend="compiled"), args.repeat)
        same = rp[0] == rc[0] and rp[1] == rc[1] and rp[2] == rc[2]
        print(f"{name:<30} {rp[3]:>7} {tp:>11.4f} {tc:>13.4f} {tp / tc:>7.1f}x  {same}")


if __name__ == "__main__":
    main()

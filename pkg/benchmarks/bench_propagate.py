"""Time the ordered step product with the compiled and numpy backends.

    python3 benchmarks/bench_propagate.py [--steps 65536] [--repeat 5]
"""

import argparse
import time

import numpy as np

from kpsynth import GroupElement, SynthesisProblem, decomposition_preset, solve
from kpsynth import kernels, target_from_unitary
from kpsynth.presets import hadamard_target
from kpsynth.simulate import PulseSchedule, step_unitaries


def cases():
    su2 = decomposition_preset("su2-aiii")
    yield "su2 eta=1", solve(SynthesisProblem(su2, su2.basis.element(Jz=2.0)))
    dal = decomposition_preset("su3-dalessandro")
    x = target_from_unitary(dal.decomposition, GroupElement(dal.basis, hadamard_target()))
    yield "su3 hadamard", solve(SynthesisProblem(dal, x))


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=2**16)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = kernels.backends()
    print(f"steps={args.steps}  backends={sorted(backends)}")
    print(f"{'case':<14}{'backend':<9}{'product [ms]':>14}{'speedup':>9}{'max |dU|':>11}")
    for name, sol in cases():
        sched = PulseSchedule.from_solution(sol, args.steps)
        steps = np.ascontiguousarray(step_unitaries(sched.basis, sched.midpoint_controls(), sched.dt))
        u0 = np.ascontiguousarray(sol.initial_unitary().matrix)
        base, (ref, _) = best_of(lambda: backends["python"](steps, u0), args.repeat)
        for label, fn in sorted(backends.items(), key=lambda kv: kv[0] != "python"):
            t, (u, _) = best_of(lambda: fn(steps, u0), args.repeat)
            diff = float(np.max(np.abs(u - ref)))
            print(f"{name:<14}{label:<9}{t * 1e3:>14.2f}{base / t:>9.1f}{diff:>11.1e}")


if __name__ == "__main__":
    main()

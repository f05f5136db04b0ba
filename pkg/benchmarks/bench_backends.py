"""Compare the compiled and pure-Python numerical cores.

Micro benchmarks call each core's functions directly; the end-to-end row
times the default verify suite in a subprocess under each backend.

    python benchmarks/bench_backends.py [--repeat N] [--json]
"""

import argparse
import json
import os
import subprocess
import sys
import time
import timeit

from localfrac import _pycore
from localfrac.expr import Compiled, parse

try:
    from localfrac import _ccore
except ImportError:
    _ccore = None

EXPR = "exp(t^-0.5) * (t*sin(t) + 1/(1+t^2)) - ln(t)^2"


def micro_cases(core):
    program = Compiled(parse(EXPR)).program
    # rebuild the program on this core from the compiled one's tape
    prog = core.Program(*_tape(program))
    values = [1.0 + 0.5 ** k for k in range(6)]
    exps = [1.0, 2.0, 3.0, 4.0, 5.0]
    f = core.Program(*_tape(Compiled(parse("sin(t) * exp(-t)")).program)).run
    return {
        "program.run x1000": lambda: [prog.run(1.0 + i * 1e-3) for i in range(1000)],
        "gamma x1000": lambda: [core.gamma(0.1 + i * 0.01) for i in range(1000)],
        "ml_series E_{0.5,1}(-3)": lambda: core.ml_series(0.5, 1.0, -3.0, 1e-12, 1000),
        "ml_series E_{1,1.5}(20)": lambda: core.ml_series(1.0, 1.5, 20.0, 1e-12, 1000),
        "richardson 6 levels x100": lambda: [core.richardson(values, 2.0, exps) for _ in range(100)],
        "adaptive_simpson sin*exp": lambda: core.adaptive_simpson(f, 0.0, 10.0, 1e-12, 1e-12, 100000),
    }


def _tape(program):
    # (codes, args, consts) as recorded for pickling
    return program.__reduce__()[1]


def bench(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    best = min(timer.repeat(repeat=repeat, number=number))
    return best / number


_SUITE_TIMER = (
    "import time; from localfrac.verify import default_grid, run_suite; "
    "grid = default_grid(); start = time.perf_counter(); run_suite(grid); "
    "print(time.perf_counter() - start)"
)


def end_to_end(backend):
    # timed inside the child so interpreter start-up and imports are excluded
    env = dict(os.environ, LOCALFRAC_BACKEND=backend)
    out = subprocess.run([sys.executable, "-c", _SUITE_TIMER], env=env, check=True, capture_output=True, text=True)
    return float(out.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", action="store_true", help="print machine-readable results")
    ap.add_argument("--skip-end-to-end", action="store_true")
    args = ap.parse_args(argv)

    cores = {"python": _pycore}
    if _ccore is not None:
        cores["cython"] = _ccore
    results = {}
    for name, core in cores.items():
        results[name] = {label: bench(fn, args.repeat) for label, fn in micro_cases(core).items()}
        if not args.skip_end_to_end:
            results[name]["verify default suite"] = end_to_end(name)

    if args.json:
        print(json.dumps(results, indent=2))
        return
    labels = list(results["python"])
    print(f"{'case':<28}{'python':>14}{'cython':>14}{'speedup':>10}")
    for label in labels:
        py = results["python"][label]
        cy = results.get("cython", {}).get(label)
        cy_text = f"{cy * 1e3:11.3f} ms" if cy is not None else f"{'n/a':>14}"
        ratio = f"{py / cy:9.1f}x" if cy else f"{'':>10}"
        print(f"{label:<28}{py * 1e3:11.3f} ms{cy_text}{ratio}")


if __name__ == "__main__":
    main()

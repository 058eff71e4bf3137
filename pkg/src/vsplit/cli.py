"""Command-line harness: experiment drivers, manifests, CSV/JSON/SVG output.

Every command echoes a JSON run manifest (enough to reproduce the run
bit-for-bit) and prints one machine-readable [PASS]/[FAIL] line per asserted
criterion. Exit code 0 iff all assertions passed; cmd `sample` exits nonzero
when more than 1% of samples blow their caps.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

from . import __version__, experiments
from .invariant import SamplerCaps
from .multigraph import serialize
from .processes import DEFAULT_VERTEX_CAP


def _parse_floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="vsplit",
        description="Vertex-splitting process experiments and exact cluster samplers",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, lam="1.0", t=None, samples=1000):
        sp.add_argument("--lambda", dest="lam", default=lam,
                        help="intensity, or comma list where supported")
        if t is not None:
            sp.add_argument("--t", default=t, help="time, or comma list where supported")
        sp.add_argument("--samples", type=int, default=samples)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--max-spine", type=int, default=10_000)
        sp.add_argument("--max-revealed", type=int, default=1_000_000)
        sp.add_argument("--max-vertices", type=int, default=DEFAULT_VERTEX_CAP)
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--diagnostics", action="store_true")

    sp = sub.add_parser("sample", help="emit sampled graphs in interchange format")
    sp.add_argument("--kind", choices=("m", "g", "cluster"), required=True,
                    help="m: stationary cluster; g: synchronous cluster; "
                         "cluster: single-vertex process run to --t")
    common(sp, t="1.0", samples=10)

    common(sub.add_parser("mean-size", help="stationary cluster mean size vs intensity"),
           lam="0.5,1,2", samples=10_000)
    sub.choices["mean-size"].add_argument("--svg", default=None,
                                          help="also write a log-scale line chart")

    common(sub.add_parser("threshold",
                          help="connectivity/isolated-vertex fractions of the full process"),
           lam="8", t="4.8,9.6", samples=2000)

    common(sub.add_parser("stationarity", help="invariance of the stationary law"),
           t="1.0", samples=10_000)
    common(sub.add_parser("convergence", help="distance to stationarity over time"),
           t="1,2,4,8", samples=10_000)
    common(sub.add_parser("double-edge", help="conditional double-edge frequencies"),
           samples=10_000)
    common(sub.add_parser("chain", help="endpoint-degree chain stationarity"),
           lam="2", samples=10_000)
    common(sub.add_parser("singleton-free", help="token-process mean-size bound"),
           t="5", samples=10_000)
    common(sub.add_parser("kill-time", help="initial-edge death times"),
           t="200", samples=10_000)
    common(sub.add_parser("cross-validate",
                          help="event-driven vs genealogy cluster samplers"),
           t="1,2", samples=10_000)
    return p


def _emit_rows(rows: list[dict], fmt: str, out) -> None:
    if not rows:
        return
    if fmt == "json":
        json.dump(rows, out, indent=2, default=float)
        out.write("\n")
        return
    cols = list(rows[0].keys())
    w = csv.DictWriter(out, fieldnames=cols)
    w.writeheader()
    for r in rows:
        w.writerow(r)


def _svg_line_chart(points: list[tuple[float, float]], path: str,
                    title: str = "mean cluster size") -> None:
    """Minimal log-log polyline; no plotting dependency."""
    width, height, pad = 480, 320, 46
    xs = [math.log10(x) for x, _ in points]
    ys = [math.log10(max(y, 1e-12)) for _, y in points]
    x0, x1 = min(xs), max(xs) or 1e-9
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(xs, ys))
    marks = "".join(
        f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="3" fill="#1f77b4"/>'
        for x, y in zip(xs, ys)
    )
    body = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        f'<rect width="100%" height="100%" fill="white"/>'
        f'<text x="{width/2}" y="18" text-anchor="middle" font-size="13">{title} (log-log)</text>'
        f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="1.5"/>'
        f"{marks}"
        f'<line x1="{pad}" y1="{height-pad}" x2="{width-pad}" y2="{height-pad}" stroke="black"/>'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height-pad}" stroke="black"/>'
        f'<text x="{width/2}" y="{height-10}" text-anchor="middle" font-size="11">log10 intensity</text>'
        "</svg>"
    )
    with open(path, "w") as f:
        f.write(body)


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    started = time.time()
    caps = SamplerCaps(max_spine=args.max_spine, max_materialized=args.max_revealed)
    lams = _parse_floats(args.lam)
    ts = _parse_floats(args.t) if hasattr(args, "t") else []
    n = args.samples
    seed = args.seed
    threads = args.threads

    rows: list[dict] = []
    checks: list[experiments.Check] = []
    cap_failures = 0
    graph_lines: list[str] | None = None
    diag_lines: list[str] | None = None

    cmd = args.command
    if cmd == "sample":
        graphs, diags, cap_failures = experiments.sample_graphs(
            args.kind, lams[0], ts[0], n, seed, caps, args.max_vertices,
            want_diagnostics=args.diagnostics,
        )
        graph_lines = [serialize(g) for g in graphs if g is not None]
        if args.diagnostics:
            diag_lines = [json.dumps(d) for d in diags if d is not None]
    elif cmd == "mean-size":
        rows, checks = experiments.mean_size(lams, n, seed, threads, caps)
        cap_failures = sum(r.get("cap_failures", 0) for r in rows)
        if args.svg:
            _svg_line_chart([(r["lambda"], r["mean"]) for r in rows], args.svg)
    elif cmd == "threshold":
        rows, checks = experiments.threshold(lams[0], ts, n, seed, threads,
                                             args.max_vertices)
        cap_failures = sum(r.get("cap_failures", 0) for r in rows)
    elif cmd == "stationarity":
        rows, checks = experiments.stationarity(lams[0], ts[0], n, seed, threads, caps)
        cap_failures = sum(r.get("cap_failures", 0) for r in rows)
    elif cmd == "convergence":
        rows, checks = experiments.convergence(lams[0], ts, n, seed, threads, caps)
        cap_failures = sum(r.get("cap_failures", 0) for r in rows)
    elif cmd == "double-edge":
        rows, checks = experiments.double_edge(lams[0], n, seed, threads, caps)
    elif cmd == "chain":
        rows, checks = experiments.chain(lams[0], n, seed, threads)
    elif cmd == "singleton-free":
        rows, checks = experiments.singleton_free(lams[0], ts[0], n, seed, threads)
    elif cmd == "kill-time":
        rows, checks = experiments.kill_time(lams, n, ts[0], seed, threads)
    elif cmd == "cross-validate":
        rows, checks = experiments.cross_validate(lams[0], ts, n, seed, threads)
    else:  # pragma: no cover
        raise AssertionError(cmd)

    manifest = {
        "command": cmd,
        "version": __version__,
        "seed": seed,
        "threads": threads,
        "samples": n,
        "lambda": lams,
        "t": ts,
        "caps": {"max_spine": args.max_spine, "max_revealed": args.max_revealed,
                 "max_vertices": args.max_vertices},
        "cap_exceeded": cap_failures,
        "wall_clock_s": round(time.time() - started, 3),
        "argv": argv if argv is not None else sys.argv[1:],
    }

    if graph_lines is not None:
        payload = "\n".join(graph_lines) + ("\n" if graph_lines else "")
    else:
        buf = io.StringIO()
        _emit_rows(rows, args.format, buf)
        payload = buf.getvalue()

    if args.out:
        with open(args.out, "w") as f:
            f.write(payload)
        with open(args.out + ".manifest.json", "w") as f:
            json.dump(manifest, f, indent=2)
            f.write("\n")
        if diag_lines is not None:
            with open(args.out + ".diagnostics.jsonl", "w") as f:
                f.write("\n".join(diag_lines) + ("\n" if diag_lines else ""))
    else:
        sys.stdout.write(payload)
        if diag_lines is not None:
            sys.stdout.write("\n".join(diag_lines) + ("\n" if diag_lines else ""))
        print(json.dumps({"manifest": manifest}), file=sys.stderr)

    for c in checks:
        print(c.line())

    if cmd == "sample":
        frac = cap_failures / max(n, 1)
        if frac > 0.01:
            print(f"[FAIL] sample_cap_failures fraction={frac:.4f} > 0.01")
            return 3
        return 0
    return 0 if all(c.passed for c in checks) else 1


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

    mbcs permanent --builder tritter_fig2a
    mbcs rate fig2b.json --times 0,0.3,0.5
    mbcs landscape fig2b.json --range 6 --steps 241 --out fig2b.csv
    mbcs polscan fig2d.json --steps 181
    mbcs pav hom.json --oracle
    mbcs sample haar6_n3.json --count 1000 --seed 1 --check
    mbcs check fig2b.json fig2d.json

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
import time

import numpy as np

from mbcs.averaged import pav_quadrature_oracle, pav_table
from mbcs.config import ExperimentConfig, parse_config, parse_polarization
from mbcs.correlation import (
    DetectionEvent,
    Grid2D,
    fringe_visibility,
    landscape,
    polarization_scan,
    rate,
    rate_polarization_insensitive,
)
from mbcs.core import PortSample
from mbcs.errors import NumericError, ValidationError
from mbcs.network import build_network, check_unitary, matrix_from_json
from mbcs.permanent import permanent_naive, permanent_ryser
from mbcs.sampling import CorrelationSampler, SamplerConfig, empirical_check

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3


def fmt(x) -> str:
    return format(float(x), ".17g")


def _cfmt(z) -> str:
    return f"{fmt(z.real)},{fmt(z.imag)}"


def _header(command: str, cfg: ExperimentConfig | None, extra: dict) -> list[str]:
    lines = [f"# command: {command}"]
    if cfg is not None:
        lines.append(f"# config: {cfg.source}")
        lines.append(f"# config_hash: {cfg.config_hash}")
    for k, v in extra.items():
        lines.append(f"# {k}: {v}")
    return lines


def grid_csv(grid: Grid2D, header: list[str]) -> str:
    out = list(header)
    out.append(f"# rows: {grid.x_label}; columns: {grid.y_label}; values row-major")
    out.append(",".join([f"{grid.x_label}\\{grid.y_label}"] + [fmt(y) for y in grid.y]))
    for xi, row in zip(grid.x, grid.values):
        out.append(",".join([fmt(xi)] + [fmt(v) for v in row]))
    return "\n".join(out) + "\n"


def grid_json(grid: Grid2D, meta: dict) -> str:
    doc = dict(meta)
    doc.update({
        "axes": {grid.x_label: grid.x.tolist(), grid.y_label: grid.y.tolist()},
        "row_axis": grid.x_label, "column_axis": grid.y_label,
        "values": grid.values.tolist(),
    })
    return json.dumps(doc, indent=1) + "\n"


@contextlib.contextmanager
def _sink(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {s!r}") from None


def _one_based(s: str | None):
    if s is None:
        return None
    try:
        return [int(x) - 1 for x in s.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated port numbers, got {s!r}") from None


def _meta(command, cfg, **kw):
    d = {"command": command}
    if cfg is not None:
        d.update({"config": cfg.source, "config_hash": cfg.config_hash})
    d.update(kw)
    return d


def cmd_permanent(args) -> int:
    if args.matrix:
        with open(args.matrix) as fh:
            doc = json.load(fh)
        A = matrix_from_json(doc["matrix"] if isinstance(doc, dict) else doc)
        label = args.matrix
    else:
        A = build_network(args.builder).U
        label = args.builder
    fn = permanent_naive if args.method == "naive" else permanent_ryser
    start = time.perf_counter()
    value = fn(A)
    elapsed = time.perf_counter() - start
    with _sink(args.out) as fh:
        if args.format == "json":
            json.dump({"matrix": label, "n": A.shape[0], "method": args.method,
                       "value": [value.real, value.imag], "abs2": abs(value) ** 2}, fh, indent=1)
            fh.write("\n")
        else:
            fh.write("\n".join(_header("permanent", None, {"matrix": label})) + "\n")
            fh.write("n,method,re,im,abs2\n")
            fh.write(f"{A.shape[0]},{args.method},{_cfmt(value)},{fmt(abs(value) ** 2)}\n")
    # timing goes to stderr so reruns stay byte-identical
    print(f"elapsed {elapsed:.6f} s", file=sys.stderr)
    return EXIT_OK


def cmd_rate(args) -> int:
    cfg = parse_config(args.config)
    exp = cfg.experiment()
    D = cfg.output_sample(_one_based(args.output_ports))
    times = _floats(args.times)
    if len(times) == 1:
        times = times * exp.N
    if args.pols in (None, "insensitive"):
        value = rate_polarization_insensitive(exp, D, np.array(times), cfg.basis)
        mode = "polarization-insensitive"
    else:
        pols = [parse_polarization(p, "--pols") for p in args.pols.split(",")]
        value = rate(exp, DetectionEvent(D, times, pols))
        mode = args.pols
    with _sink(args.out) as fh:
        if args.format == "json":
            json.dump(_meta("rate", cfg, output_ports=D.one_based(), times=times, polarizations=mode,
                            rate=value), fh, indent=1)
            fh.write("\n")
        else:
            fh.write("\n".join(_header("rate", cfg, {"units": "rate per unit time^N (reference bandwidth units)"}))
                     + "\n")
            fh.write("output_ports,times,polarizations,rate\n")
            fh.write(f"{' '.join(map(str, D.one_based()))},{' '.join(fmt(t) for t in times)},{mode},{fmt(value)}\n")
    return EXIT_OK


def cmd_landscape(args) -> int:
    cfg = parse_config(args.config)
    exp = cfg.experiment()
    D = cfg.output_sample(_one_based(args.output_ports))
    grid = landscape(exp, D, args.range, args.steps, args.mean_time, basis=cfg.basis)
    vmax = float(grid.values.max())
    c = args.steps // 2
    extra = {"output_ports": " ".join(map(str, D.one_based())), "mean_time": args.mean_time,
             "axes_units": "1/reference_bandwidth", "grid_max": fmt(vmax)}
    if args.steps % 2 == 1:
        extra["center_over_max"] = fmt(grid.values[c, c] / vmax if vmax else 0.0)
    with _sink(args.out) as fh:
        if args.format == "json":
            fh.write(grid_json(grid, _meta("landscape", cfg, **extra)))
        else:
            fh.write(grid_csv(grid, _header("landscape", cfg, extra)))
    return EXIT_OK


def cmd_polscan(args) -> int:
    cfg = parse_config(args.config)
    exp = cfg.experiment()
    D = cfg.output_sample(_one_based(args.output_ports))
    angles = np.radians(np.linspace(0.0, args.max_angle, args.steps))
    trigger = parse_polarization(args.trigger, "--trigger")
    grid = polarization_scan(exp, D, args.time, trigger, angles, angles)
    vis = fringe_visibility(grid)
    extra = {"output_ports": " ".join(map(str, D.one_based())), "trigger": args.trigger,
             "time": fmt(args.time), "axes_units": "radians", "fringe_visibility": fmt(vis)}
    with _sink(args.out) as fh:
        if args.format == "json":
            fh.write(grid_json(grid, _meta("polscan", cfg, **extra)))
        else:
            fh.write(grid_csv(grid, _header("polscan", cfg, extra)))
    return EXIT_OK


def cmd_pav(args) -> int:
    cfg = parse_config(args.config)
    exp = cfg.experiment()
    table = pav_table(exp.network, exp.input_sample, exp.gram())
    oracle = {}
    if args.oracle:
        for D in table.probabilities:
            oracle[D] = pav_quadrature_oracle(exp, PortSample(D, exp.M), basis=cfg.basis)
    with _sink(args.out) as fh:
        if args.format == "json":
            rows = []
            for D, p in table.probabilities.items():
                row = {"ports": [d + 1 for d in D], "probability": p}
                if args.oracle:
                    row["oracle"] = oracle[D]
                rows.append(row)
            json.dump(_meta("pav", cfg, table=rows, total_mass=table.total_mass), fh, indent=1)
            fh.write("\n")
        else:
            fh.write("\n".join(_header("pav", cfg, {"total_mass": fmt(table.total_mass),
                                                    "bunched_mass": fmt(1 - table.total_mass)})) + "\n")
            fh.write("ports,probability" + (",oracle,rel_diff" if args.oracle else "") + "\n")
            for D, p in table.probabilities.items():
                line = f"{' '.join(str(d + 1) for d in D)},{fmt(p)}"
                if args.oracle:
                    o = oracle[D]
                    rel = abs(o - p) / max(abs(p), 1e-300) if p else abs(o)
                    line += f",{fmt(o)},{fmt(rel)}"
                fh.write(line + "\n")
    if args.oracle:
        worst = max((abs(oracle[D] - p) / max(abs(p), table.total_mass * 1e-12)
                     for D, p in table.probabilities.items()), default=0.0)
        print(f"oracle max relative deviation: {worst:.3e}", file=sys.stderr)
    return EXIT_OK


def cmd_sample(args) -> int:
    cfg = parse_config(args.config)
    exp = cfg.experiment()
    sampler = CorrelationSampler(SamplerConfig(exp, args.seed, args.max_rejections, cfg.basis))
    batch = sampler.sample_batch(args.count)
    with _sink(args.out) as fh:
        fh.write(json.dumps({"command": "sample", "config_hash": cfg.config_hash, "seed": args.seed,
                             "count": args.count, "collision_free_mass": batch.collision_free_mass,
                             "basis": [[[z.real, z.imag] for z in v] for v in batch.basis]}) + "\n")
        for ports, ts, lam in zip(batch.ports, batch.times, batch.pol_index):
            fh.write(json.dumps({"ports": [int(p) + 1 for p in ports],
                                 "times": [float(t) for t in ts],
                                 "pols": [int(k) for k in lam]}) + "\n")
    print(f"proposals {batch.proposals}, accepted {batch.acceptances}, "
          f"acceptance rate {batch.acceptance_rate:.4f}", file=sys.stderr)
    if args.check and len(batch):
        res = empirical_check(batch, sampler.table)
        print(f"chi2 {res.statistic:.4f} dof {res.dof} p-value {res.pvalue:.4g}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    for path in args.configs:
        cfg = parse_config(path)
        ok, dev = check_unitary(cfg.network.U, cfg.tolerances.unitarity_tol)
        exp = cfg.experiment()
        g = exp.gram()
        g.check()
        table = pav_table(exp.network, exp.input_sample, g)
        print(f"{cfg.source}: valid; network {cfg.network_spec} (M={exp.M}, unitarity deviation {dev:.2e}); "
              f"N={exp.N}; collision-free mass {table.total_mass:.6g}")
        print("  |overlap| matrix: " + "; ".join(" ".join(f"{abs(x):.4g}" for x in row) for row in g.g))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mbcs", description="Multiboson correlation interferometry simulator")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("config", help="experiment config JSON (bundled names such as fig2b.json work)")
            sp.add_argument("--output-ports", help="comma-separated 1-based output ports (overrides config)")
        sp.add_argument("--out", help="output file (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = sub.add_parser("permanent", help="permanent of a named network or JSON matrix")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--builder", help="beamsplitter, tritter_fig2a, fourier:M, haar:M:seed")
    g.add_argument("--matrix", help="JSON file with rows of [re, im] pairs")
    sp.add_argument("--method", choices=("ryser", "naive"), default="ryser")
    common(sp, config=False)
    sp.set_defaults(func=cmd_permanent)

    sp = sub.add_parser("rate", help="time/polarization-resolved N-fold detection rate")
    common(sp)
    sp.add_argument("--times", required=True, help="comma-separated detection times (one value = all equal)")
    sp.add_argument("--pols", help="comma-separated detector polarizations, or 'insensitive' (default)")
    sp.set_defaults(func=cmd_rate)

    sp = sub.add_parser("landscape", help="three-photon rate over relative detection times")
    common(sp)
    sp.add_argument("--range", type=float, default=6.0)
    sp.add_argument("--steps", type=int, default=241)
    sp.add_argument("--mean-time", default="marginal", help="'marginal' or 'fixed:<t>'")
    sp.set_defaults(func=cmd_landscape)

    sp = sub.add_parser("polscan", help="three-fold rate versus analyzer angles of detectors 2 and 3")
    common(sp)
    sp.add_argument("--steps", type=int, default=181)
    sp.add_argument("--max-angle", type=float, default=180.0, help="degrees")
    sp.add_argument("--time", type=float, default=0.0)
    sp.add_argument("--trigger", default="H")
    sp.set_defaults(func=cmd_polscan)

    sp = sub.add_parser("pav", help="averaged detection probabilities for all collision-free samples")
    common(sp)
    sp.add_argument("--oracle", action="store_true", help="cross-check by direct time quadrature (N <= 3)")
    sp.set_defaults(func=cmd_pav)

    sp = sub.add_parser("sample", help="draw detection events (JSON lines)")
    common(sp)
    sp.add_argument("--count", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-rejections", type=int, default=10**6)
    sp.add_argument("--check", action="store_true", help="chi-square test against the averaged table")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("check", help="validate experiment configs")
    sp.add_argument("configs", nargs="+")
    sp.set_defaults(func=cmd_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"mbcs {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"mbcs {args.command}: cannot read input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericError as exc:
        print(f"mbcs {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

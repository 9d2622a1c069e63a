"""Command line interface: ``jtvsp <command> ...``.

Exit status is 0 on success, 2 for bad input and 3 when an iterative solver
does not converge.
"""

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .exceptions import ConvergenceError, InputError, JtvspError
from .experiments import (
    Dataset,
    ingest,
    load_config,
    run_denoising,
    run_recovery,
    summarize,
    synthetic_dataset,
)
from .graph import GraphSpectrum, build_gaussian_radius_graph, calibrate_kernel_scale
from .psd import default_window, estimate_jpsd, upsample_to_grid
from .stationarity import NOISE_KINDS, JwssModel, synthesize_jwss
from .temporal import TimeBasis, Window, iterated_sine_window
from .wiener import SolverSettings, joint_wiener_closed_form, mask_operator, wiener_solve_noiseless

EXIT_INPUT = 2
EXIT_CONVERGENCE = 3

log = logging.getLogger("jtvsp")


def _aligned(graph, path):
    """Rows of the matrix at ``path`` reordered to the graph's vertex order."""
    ids, cols, values = io.read_matrix(path)
    names = list(graph.ids) if graph.ids else [str(i) for i in range(graph.n_vertices)]
    if sorted(ids) != sorted(names):
        raise InputError(f"{path}: row ids do not match the graph's vertex ids")
    return names, cols, values[[ids.index(n) for n in names]]


def _spectrum_and_jpsd(args):
    graph = io.read_graph(args.graph)
    jpsd = io.read_jpsd(args.jpsd)
    if jpsd.values.shape[0] != graph.n_vertices:
        raise InputError("jpsd and graph disagree on the number of vertices")
    return graph, GraphSpectrum.from_graph(graph), jpsd


def cmd_graph_build(args):
    ids, coords = io.read_coords(args.coords)
    if args.kernel_scale is not None:
        k = args.kernel_scale
    else:
        k = calibrate_kernel_scale(coords, args.radius, args.target_degree)
    graph = build_gaussian_radius_graph(coords, args.radius, k, ids=ids)
    io.write_graph(args.out, graph)
    log.info("kernel scale %.6g, average degree %.3g", k, graph.average_degree())
    print(f"kernel_scale={k:.10g} average_degree={graph.average_degree():.6g}")


def cmd_psd_estimate(args):
    graph = io.read_graph(args.graph)
    _, _, x = _aligned(graph, args.data)
    if np.isnan(x).any():
        raise InputError(f"{args.data}: missing values are not allowed for PSD estimation")
    if args.bands is None:
        window = default_window(x.shape[1])
    else:
        window = iterated_sine_window(args.bands)
        if args.hop is not None:
            window = Window(window.values, args.hop)
    jpsd = estimate_jpsd(x, GraphSpectrum.from_graph(graph), window, remove_mean=True)
    io.write_jpsd(args.out, jpsd)


def cmd_synth(args):
    graph, spec, jpsd = _spectrum_and_jpsd(args)
    steps = args.steps or jpsd.n_bands
    model = JwssModel(upsample_to_grid(jpsd, steps), spec, TimeBasis(steps), args.mean)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = list(graph.ids) if graph.ids else [str(i) for i in range(graph.n_vertices)]
    for r, x in enumerate(synthesize_jwss(model, args.n, args.seed, args.noise)):
        io.write_matrix(out / f"realization_{r:04d}.csv", names, x)


def cmd_denoise(args):
    graph, spec, jpsd = _spectrum_and_jpsd(args)
    names, cols, y = _aligned(graph, args.data)
    if np.isnan(y).any():
        raise InputError(f"{args.data}: missing values; use 'jtvsp recover' instead")
    if args.sigma < 0:
        raise InputError("sigma must be nonnegative")
    mean = y.mean()
    h_x = upsample_to_grid(jpsd, y.shape[1])
    x = joint_wiener_closed_form(1.0, h_x, args.sigma**2, y - mean, spec) + mean
    io.write_matrix(args.out, names, x, cols)


def cmd_recover(args):
    graph, spec, jpsd = _spectrum_and_jpsd(args)
    names, cols, y = _aligned(graph, args.data)
    observed = ~np.isnan(y)
    mean = y[observed].mean() if observed.any() else 0.0
    centred = np.where(observed, y - mean, 0.0)
    h_x = upsample_to_grid(jpsd, y.shape[1])
    settings = SolverSettings(args.tol, args.max_iters)
    report = wiener_solve_noiseless(mask_operator(observed), centred, h_x, spec, settings)
    x = np.where(observed, y, report.solution + mean)
    log.info("recovered %d entries in %d iterations", (~observed).sum(), report.iterations)
    io.write_matrix(args.out, names, x, cols)


def _experiment_data(data, base):
    def path(key):
        p = Path(data[key])
        return p if p.is_absolute() else base / p

    if "synthetic" in data:
        s = data["synthetic"]
        ds, spec, _ = synthetic_dataset(s.get("n_vertices", 8), s.get("n_steps", 256),
                                        s.get("seed", 0), s.get("width", 0.15))
        return ds, spec
    if "readings" not in data:
        raise InputError("config 'data' needs 'synthetic' or 'readings' with 'coords' or 'graph'")
    if "graph" in data:
        graph = io.read_graph(path("graph"))
        names, _, x = _aligned(graph, path("readings"))
        if np.isnan(x).any():
            raise InputError("readings contain missing values")
        mean = float(x.mean())
        ds = Dataset(graph.coords, x - mean, names, mean)
        return ds, GraphSpectrum.from_graph(graph)
    ds = ingest(path("coords"), path("readings"))
    radius = data.get("radius")
    if radius is None:
        raise InputError("config 'data' needs a 'radius' to build the graph")
    k = data.get("kernel_scale") or calibrate_kernel_scale(ds.coords, radius, data.get("target_degree", 3.0))
    graph = build_gaussian_radius_graph(ds.coords, radius, k)
    return ds, GraphSpectrum.from_graph(graph)


def cmd_experiment(args):
    config, data = load_config(args.config)
    ds, spec = _experiment_data(data, Path(args.config).resolve().parent)
    run = run_denoising if args.kind == "denoising" else run_recovery
    rows = run(ds, spec, config)
    if args.out:
        io.write_results(args.out, rows)
    for s in summarize(rows):
        failed = f" failed={s['n_failed']}" if s["n_failed"] else ""
        print(f"{s['method']:>7} {s['parameter']:>7g} {s['metric']:<15} "
              f"{s['mean']:10.4f} +/- {s['std']:.4f} (n={s['n']}){failed}")


def build_parser():
    p = argparse.ArgumentParser(prog="jtvsp", description="Joint time-vertex stationary signal processing")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    graph = sub.add_parser("graph", help="graph construction").add_subparsers(dest="action", required=True)
    gb = graph.add_parser("build", help="radius graph with Gaussian weights")
    gb.add_argument("--coords", required=True)
    gb.add_argument("--radius", type=float, required=True)
    gb.add_argument("--target-degree", type=float, default=3.0)
    gb.add_argument("--kernel-scale", type=float, help="skip calibration and use this scale")
    gb.add_argument("--out", required=True)
    gb.set_defaults(func=cmd_graph_build)

    psd = sub.add_parser("psd", help="joint PSD estimation").add_subparsers(dest="action", required=True)
    pe = psd.add_parser("estimate")
    pe.add_argument("--graph", required=True)
    pe.add_argument("--data", required=True)
    pe.add_argument("--bands", type=int, help="number of bands M (window length); default 32")
    pe.add_argument("--hop", type=int, help="frame shift; default M/2")
    pe.add_argument("--out", required=True)
    pe.set_defaults(func=cmd_psd_estimate)

    sy = sub.add_parser("synth", help="draw JWSS realizations")
    sy.add_argument("--graph", required=True)
    sy.add_argument("--jpsd", required=True)
    sy.add_argument("--n", type=int, default=1)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--steps", type=int, help="time steps T; default the number of bands")
    sy.add_argument("--noise", choices=NOISE_KINDS, default="gaussian")
    sy.add_argument("--mean", type=float, default=0.0)
    sy.add_argument("--out", required=True)
    sy.set_defaults(func=cmd_synth)

    de = sub.add_parser("denoise", help="joint Wiener denoising with white noise")
    de.add_argument("--graph", required=True)
    de.add_argument("--data", required=True)
    de.add_argument("--jpsd", required=True)
    de.add_argument("--sigma", type=float, required=True)
    de.add_argument("--out", required=True)
    de.set_defaults(func=cmd_denoise)

    re = sub.add_parser("recover", help="fill empty cells by noiseless joint Wiener interpolation")
    re.add_argument("--graph", required=True)
    re.add_argument("--data", required=True)
    re.add_argument("--jpsd", required=True)
    re.add_argument("--tol", type=float, default=1e-8)
    re.add_argument("--max-iters", type=int, default=2000)
    re.add_argument("--out", required=True)
    re.set_defaults(func=cmd_recover)

    ex = sub.add_parser("experiment", help="run a denoising or recovery experiment")
    ex.add_argument("kind", choices=("denoising", "recovery"))
    ex.add_argument("--config", required=True)
    ex.add_argument("--out", help="long-form results CSV")
    ex.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except ConvergenceError as exc:
        print(f"jtvsp: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (JtvspError, ValueError, OSError) as exc:
        print(f"jtvsp: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())

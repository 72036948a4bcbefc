"""Command-line surface: structural analysis, exact invariant, density
tables, exponent fits, Monte Carlo simulation, and the verification suite.

Structured results go to JSON, grids to CSV with floats in full-precision
scientific notation; reruns with the same inputs and seeds are
byte-identical.  Exit codes: 0 success, 1 computation or verification
failure, 2 usage error.  Computation failures also emit a single-line JSON
diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import blockgraph, dyson, rmt, structure
from .errors import DsbmError, MatrixFormatError, NoSupportError, NotIrreducibleError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

_FLOAT_FORMAT = "{:.17e}"


def _fmt(x) -> str:
    return _FLOAT_FORMAT.format(float(x))


def _fail(kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    return EXIT_FAILURE


def _usage(message: str) -> int:
    print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
    return EXIT_USAGE


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_profile(path: str) -> structure.VarianceProfile:
    return structure.load_variance_profile(path)


def _parse_radii(spec_str: str) -> np.ndarray:
    """Radius grid: either 'min:max:count' (geometric) or comma-separated."""
    if ":" in spec_str:
        parts = spec_str.split(":")
        if len(parts) != 3:
            raise ValueError("radius spec must be min:max:count or a comma list")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if not (0 < lo < hi) or count < 1:
            raise ValueError("radius spec needs 0 < min < max and count >= 1")
        return np.geomspace(lo, hi, count)
    radii = np.array([float(tok) for tok in spec_str.split(",") if tok], dtype=float)
    if len(radii) == 0 or np.any(radii <= 0):
        raise ValueError("radius list must contain positive values")
    return radii


def _parse_seeds(spec_str: str) -> list:
    seeds = [int(tok) for tok in spec_str.split(",") if tok]
    if not seeds:
        raise ValueError("at least one seed required")
    return seeds


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def cmd_analyze(args) -> int:
    m = _load_profile(args.input)
    zp = structure.zero_pattern(m)
    witness = structure.has_support(zp)
    irreducible = structure.is_irreducible(zp)
    report: dict = {"K": m.K, "irreducible": irreducible}

    failure = None
    if isinstance(witness, structure.ZeroBlock):
        report["support"] = {
            "has_support": False,
            "zero_block": {"rows": list(witness.rows), "cols": list(witness.cols)},
        }
        failure = ("no-support", "matrix has no positive diagonal")
    else:
        report["support"] = {
            "has_support": True,
            "positive_diagonal": witness.permutation.image.tolist(),
        }
        nf = structure.normal_form(m)
        blocks = []
        for k in range(nf.L):
            sl = nf.block_slice(k)
            sub = structure.ZeroPattern(nf.s_tilde[sl, sl] > 0)
            blocks.append({
                "size": int(nf.block_sizes[k]),
                "fully_indecomposable": structure.is_fully_indecomposable(sub),
                "primitive": structure.is_primitive(sub),
            })
        report["normal_form"] = {
            "q1": nf.q1.image.tolist(),
            "q2": nf.q2.image.tolist(),
            "block_sizes": nf.block_sizes.tolist(),
            "s_tilde": nf.s_tilde.tolist(),
            "blocks": blocks,
        }
    if not irreducible and failure is None:
        failure = ("not-irreducible", "zero pattern is not strongly connected")

    _emit(json.dumps(report, indent=1, sort_keys=True) + "\n", args.out)
    if failure:
        return _fail(*failure)
    return EXIT_OK


# ---------------------------------------------------------------------------
# kappa
# ---------------------------------------------------------------------------

def cmd_kappa(args) -> int:
    m = _load_profile(args.input)
    result = blockgraph.kappa_of(m)
    _emit(json.dumps(result.as_dict(), indent=1, sort_keys=True) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

def _density_row(m, r, rho, with_oracle):
    z = complex(r, 0.0)
    if r * r >= rho:
        row = [_fmt(r), _fmt(0.0), _fmt(r), "", "OutOfBulk", ""]
        if with_oracle:
            row.append("")
        return row, False
    try:
        ev = dyson.density_sigma(m, z)
        row = [_fmt(ev.z.real), _fmt(ev.z.imag), _fmt(abs(ev.z)),
               _fmt(ev.sigma), ev.method, _fmt(ev.residual)]
        if with_oracle:
            oracle = dyson.density_sigma_via_integral(m, z)
            row.append(_fmt(oracle.sigma))
        return row, False
    except DsbmError as exc:
        row = [_fmt(r), _fmt(0.0), _fmt(r), "", f"Error:{type(exc).__name__}", ""]
        if with_oracle:
            row.append("")
        return row, True


def cmd_density(args) -> int:
    m = _load_profile(args.input)
    radii = _parse_radii(args.radii)
    rho, _ = dyson.cached_spectral_radius(m)
    header = ["re", "im", "abs", "sigma", "method", "residual"]
    if args.oracle:
        header.append("sigma_oracle")

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        results = list(pool.map(lambda r: _density_row(m, r, rho, args.oracle), radii))
    lines = [",".join(header)]
    any_error = False
    for row, failed in results:
        lines.append(",".join(row))
        any_error = any_error or failed
    _emit("\n".join(lines) + "\n", args.out)
    if any_error:
        return _fail("density-point-failure", "one or more grid points failed; see rows")
    return EXIT_OK


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------

def cmd_exponents(args) -> int:
    m = _load_profile(args.input)
    grid = np.geomspace(args.tau_max, args.tau_min, args.tau_points)
    nf = structure.normal_form(m)
    graph = blockgraph.build_block_graph(nf)
    profile = dyson.exponent_profile(m, grid, nf=nf, graph=graph)
    scaling = dyson.scaling_check(m, grid)
    exact = blockgraph.min_cycle_mean(graph)

    lines = ["tau,k,f_k"]
    for j, tau in enumerate(profile.tau_grid):
        for k in range(nf.L):
            lines.append(f"{_fmt(tau)},{k},{_fmt(profile.f[k, j])}")
    csv_text = "\n".join(lines) + "\n"

    summary = {
        "kappa_exact": str(exact.kappa),
        "c_ns_exact": str(exact.c_ns),
        "f_hat": [float(x) for x in profile.f_hat],
        "delta": profile.delta,
        "delta_hat": profile.delta_hat,
        "slope_one_minus": scaling.slope_one_minus,
        "slope_vw": scaling.slope_vw,
        "tau_grid": [float(t) for t in profile.tau_grid],
    }
    if args.out:
        Path(args.out).write_text(csv_text)
        summary_path = Path(args.out).with_suffix(".summary.json")
        summary_path.write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    else:
        sys.stdout.write(csv_text)
        sys.stdout.write(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _simulate_one(m, p, n, seed, t_grid, theoretical):
    spec = rmt.SBMSpec(K=m.K, n=n, P=p, seed=seed)
    rho, _ = dyson.cached_spectral_radius(m)
    sample = rmt.spectrum(rmt.sample_adjacency(spec), n, seed=seed,
                          bulk_radius=float(np.sqrt(rho)))
    empirical = rmt.radial_cdf(sample, t_grid).counts
    distance = float(np.abs(empirical - theoretical).max())
    return spec, sample, empirical, distance


def cmd_simulate(args) -> int:
    m = _load_profile(args.input)
    if m.probabilities is None:
        return _usage("simulate needs a probability input file ({\"K\":..,\"P\":[[..]]})")
    if m.entries.max() == 0:
        return _fail("zero-variance", "all variances vanish (p identically 0 or 1)")
    seeds = _parse_seeds(args.seeds)
    n = args.n
    if n * m.K > rmt.MAX_DENSE_DIMENSION:
        return _fail("too-large", f"n*K = {n * m.K} exceeds cap {rmt.MAX_DENSE_DIMENSION}")
    rho, _ = dyson.cached_spectral_radius(m)
    edge = float(np.sqrt(rho))
    t_grid = np.linspace(5.0 / np.sqrt(n), edge, args.t_points)
    theoretical = rmt.theoretical_radial_cdf(m, t_grid)

    out_dir = Path(args.out) if args.out else Path.cwd()
    out_dir.mkdir(parents=True, exist_ok=True)

    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        runs = list(pool.map(
            lambda seed: _simulate_one(m, m.probabilities, n, seed, t_grid, theoretical),
            seeds))

    distances = []
    for spec, sample, empirical, distance in runs:
        stem = f"seed{spec.seed}"
        eig_lines = ["re,im"] + [f"{_fmt(ev.real)},{_fmt(ev.imag)}" for ev in sample.eigenvalues]
        (out_dir / f"eigenvalues_{stem}.csv").write_text("\n".join(eig_lines) + "\n")
        (out_dir / f"spec_{stem}.json").write_text(
            json.dumps(spec.as_dict(), indent=1, sort_keys=True) + "\n")
        cdf_lines = ["t,empirical,theoretical"] + [
            f"{_fmt(t)},{_fmt(e)},{_fmt(th)}"
            for t, e, th in zip(t_grid, empirical, theoretical)]
        (out_dir / f"radial_cdf_{stem}.csv").write_text("\n".join(cdf_lines) + "\n")
        distances.append({"seed": spec.seed, "sup_distance": distance,
                          "outliers": sample.outlier_count})
    aggregate = {
        "n": n,
        "K": m.K,
        "bulk_edge": edge,
        "mean_sup_distance": float(np.mean([d["sup_distance"] for d in distances])),
        "per_seed": distances,
    }
    (out_dir / "aggregate.json").write_text(
        json.dumps(aggregate, indent=1, sort_keys=True) + "\n")
    print(json.dumps(aggregate, indent=1, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _fixture_profile(name: str) -> structure.VarianceProfile:
    with resources.files("dsbm_ns.fixtures").joinpath(name).open() as fh:
        return structure.variance_profile_from_dict(json.load(fh))


def load_fixture_manifest() -> dict:
    with resources.files("dsbm_ns.fixtures").joinpath("manifest.json").open() as fh:
        return json.load(fh)


def cmd_verify(args) -> int:
    manifest = load_fixture_manifest()
    checks = []

    def record(name, passed, detail):
        checks.append((name, passed, detail))
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")

    for key, expect in sorted(manifest.items()):
        m = _fixture_profile(expect["file"])
        result = blockgraph.kappa_of(m)
        want = Fraction(expect["kappa"])
        record(f"{key}/kappa", result.kappa == want,
               f"got {result.kappa}, expected {want}")
        record(f"{key}/c_ns", result.c_ns == Fraction(expect["c_ns"]),
               f"got {result.c_ns}, expected {expect['c_ns']}")

    for key, expect in sorted(manifest.items()):
        if args.quick and key != "example1":
            continue
        m = _fixture_profile(expect["file"])
        radii = np.geomspace(1e-4, 1e-2, 5)
        sigmas = [dyson.density_sigma(m, r).sigma for r in radii]
        slope = float(np.polyfit(np.log(radii), np.log(sigmas), 1)[0])
        window = expect["slope_window"]
        record(f"{key}/sigma-slope", abs(slope - expect["sigma_slope"]) <= window,
               f"slope {slope:.4f}, expected {expect['sigma_slope']:.4f} +- {window}")

    if not args.quick:
        for key in ("example1", "example2", "example3"):
            m = _fixture_profile(manifest[key]["file"])
            rho, _ = dyson.cached_spectral_radius(m)
            worst = 0.0
            for frac in (0.4, 0.7):
                z = frac * np.sqrt(rho)
                direct = dyson.density_sigma(m, z).sigma
                oracle = dyson.density_sigma_via_integral(m, z).sigma
                worst = max(worst, abs(oracle - direct) / direct)
            record(f"{key}/oracle-agreement", worst <= 1e-4,
                   f"worst relative difference {worst:.2e}")

        m = _fixture_profile(manifest["example1"]["file"])
        p = m.probabilities if m.probabilities is not None else 0.5 * (m.entries > 0)
        mc = structure.VarianceProfile.from_probabilities(np.asarray(p, dtype=float))
        rho, _ = dyson.cached_spectral_radius(mc)
        n = 400
        t_grid = np.linspace(5.0 / np.sqrt(n), float(np.sqrt(rho)), 12)
        theoretical = rmt.theoretical_radial_cdf(mc, t_grid)
        dists = []
        for seed in (1, 2, 3):
            spec = rmt.SBMSpec(K=mc.K, n=n, P=mc.probabilities, seed=seed)
            sample = rmt.spectrum(rmt.sample_adjacency(spec), n, seed=seed,
                                  bulk_radius=float(np.sqrt(rho)))
            empirical = rmt.radial_cdf(sample, t_grid).counts
            dists.append(float(np.abs(empirical - theoretical).max()))
        mean_dist = float(np.mean(dists))
        record("example1/monte-carlo", mean_dist < 0.05,
               f"mean sup distance {mean_dist:.4f} over seeds (1,2,3)")

    failed = [name for name, passed, _ in checks if not passed]
    if failed:
        return _fail("verification", f"{len(failed)} check(s) failed: {', '.join(failed)}")
    print(f"all {len(checks)} checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsbm-ns",
        description="Novikov-Shubin invariants and spectral densities of "
                    "directed stochastic block models")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="support, irreducibility, normal form")
    pa.add_argument("--input", required=True)
    pa.add_argument("--out")
    pa.set_defaults(func=cmd_analyze)

    pk = sub.add_parser("kappa", help="exact cycle invariant and witness")
    pk.add_argument("--input", required=True)
    pk.add_argument("--out")
    pk.set_defaults(func=cmd_kappa)

    pd = sub.add_parser("density", help="bulk density table over a radius grid")
    pd.add_argument("--input", required=True)
    pd.add_argument("--radii", required=True,
                    help="min:max:count (geometric) or comma-separated radii")
    pd.add_argument("--oracle", action="store_true",
                    help="add the integral-method column")
    pd.add_argument("--workers", type=int, default=4)
    pd.add_argument("--out")
    pd.set_defaults(func=cmd_density)

    pe = sub.add_parser("exponents", help="exponent profile and scaling slopes")
    pe.add_argument("--input", required=True)
    pe.add_argument("--tau-min", type=float, default=1e-10)
    pe.add_argument("--tau-max", type=float, default=1e-4)
    pe.add_argument("--tau-points", type=int, default=7)
    pe.add_argument("--out", help="CSV path; summary goes to <out>.summary.json")
    pe.set_defaults(func=cmd_exponents)

    ps = sub.add_parser("simulate", help="sample spectra and compare to the density")
    ps.add_argument("--input", required=True, help="probability input (P matrix)")
    ps.add_argument("--n", type=int, default=200, help="batch size")
    ps.add_argument("--seeds", default="1", help="comma-separated seeds")
    ps.add_argument("--t-points", type=int, default=20)
    ps.add_argument("--workers", type=int, default=2)
    ps.add_argument("--out", help="output directory")
    ps.set_defaults(func=cmd_simulate)

    pv = sub.add_parser("verify", help="run the bundled verification suite")
    pv.add_argument("--quick", action="store_true", help="skip slow checks")
    pv.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    start = time.perf_counter()
    try:
        code = args.func(args)
    except (MatrixFormatError, ValueError) as exc:
        return _usage(str(exc))
    except NoSupportError as exc:
        return _fail("no-support", str(exc))
    except NotIrreducibleError as exc:
        return _fail("not-irreducible", str(exc))
    except DsbmError as exc:
        return _fail(type(exc).__name__, str(exc))
    if getattr(args, "verbose", False):
        print(f"elapsed {time.perf_counter() - start:.2f}s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())

"""Unified command line: one subcommand per analysis module.

Exit codes: 0 success, 2 usage/config error, 3 input parse error,
4 numeric failure (no match, non-convergence, degenerate data).
Outputs are deterministic: identical inputs and flags give identical
bytes.  ``EPIFILM_CONFIG_DIR`` names a directory whose ``lattices.toml``
(if present) extends the built-in lattice table.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .crystal import BUILTIN_LATTICES, MillerIndex, load_lattices, surface_mesh
from .errors import ConfigError, EpifilmError, ParseError
from .filmstats import (
    Doping,
    GrowthRecord,
    HeightMap,
    Substrate,
    SurfacePrep,
    predict_phase,
    rms_roughness,
    thickness_from_shots,
)
from .io import ResultTable, emit_plot_data, read_heightmap, read_profile, read_xy
from .mcia import MciaConfig, mcia_map
from .profiles import DEFAULT_THERMAL_TIME_S, fit_diffusion, normalize
from .spectra import (
    Phase,
    Spectrum,
    XUnit,
    classify_phase,
    detect_peaks,
    fit_lifetime,
    fit_line,
    label_er_fluorescence,
)
from .vacancysim import (
    VacancyParams,
    reference_schedule,
    saturation_scan,
    simulate,
)
from .xrdfit import (
    CU_KALPHA1,
    DiffractionScan,
    bragg_d,
    fit_voigt,
    size_strain,
)

ENV_CONFIG_DIR = "EPIFILM_CONFIG_DIR"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of calling sys.exit."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def _lattice_table():
    lattices = dict(BUILTIN_LATTICES)
    cfg_dir = os.environ.get(ENV_CONFIG_DIR)
    if cfg_dir:
        path = os.path.join(cfg_dir, "lattices.toml")
        if os.path.exists(path):
            lattices = load_lattices(path)
    return lattices


def _lookup_lattice(lattices, name):
    key = name.lower()
    if key not in lattices:
        raise ConfigError(f"unknown lattice {name!r}; have {sorted(lattices)}")
    return lattices[key]


def _parse_pair(text, what):
    parts = text.split(",")
    if len(parts) != 2:
        raise _UsageError(f"{what} must be 'lo,hi', got {text!r}")
    return float(parts[0]), float(parts[1])


def _write_output(table: ResultTable, args) -> None:
    if args.format == "svg-plot-data":
        data = emit_plot_data(table, args.plot_kind)
    else:
        data = table.to_csv()
    if args.output:
        with open(args.output, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)


def _map_ordered(fn, items, jobs):
    """Apply fn to items, optionally in parallel, preserving input order."""
    if jobs and jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _add_common(parser):
    parser.add_argument("-o", "--output", help="output path (default stdout)")
    parser.add_argument("--format", choices=["csv", "svg-plot-data"], default="csv")
    parser.add_argument("--plot-kind", default=None,
                        choices=["map", "peak-fit", "profile", "timeseries"],
                        help="plot schema for --format svg-plot-data")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel workers for per-file processing")


# ---------------------------------------------------------------- mcia

def _cmd_mcia(args):
    lattices = _lattice_table()
    sub_name, _, sub_plane = args.substrate.partition(":")
    sub_lat = _lookup_lattice(lattices, sub_name)
    sub_mesh = surface_mesh(sub_lat, MillerIndex.parse(sub_plane or "100"))
    films = []
    planes = [MillerIndex.parse(p) for p in args.planes.split(",")]
    for film_name in args.film:
        films.append((_lookup_lattice(lattices, film_name), planes))
    cfg = MciaConfig(max_area=args.max_area,
                     max_linear_strain=args.strain_tol,
                     max_index=args.max_index)
    rows = mcia_map([sub_mesh], films, cfg)
    table = ResultTable(["substrate", "film", "hkl", "area_A2", "misfit",
                         "n_sub", "n_film", "is_min"])
    for r in rows:
        table.add_row(r.substrate, r.film, r.plane, r.area, r.misfit,
                      r.n_sub, r.n_film, r.is_minimum)
    table.add_provenance(
        substrate=args.substrate, films=",".join(args.film), planes=args.planes,
        max_area=cfg.max_area, strain_tol=cfg.max_linear_strain,
        max_index=cfg.max_index)
    args.plot_kind = args.plot_kind or "map"
    _write_output(table, args)
    return 0


# ---------------------------------------------------------------- xrd-fit

def _cmd_xrd_fit(args):
    window = _parse_pair(args.window, "--window")

    def one(path):
        _, tt, counts = read_xy(path)
        peak = fit_voigt(DiffractionScan(tt, counts), window)
        ss = size_strain(peak, wavelength=args.wavelength, k=args.scherrer_k)
        d = bragg_d(peak.center, args.wavelength)
        return (path, peak.center, peak.fwhm_g, peak.fwhm_l,
                ss.tau_nm, ss.tau_err_nm, ss.epsilon_pct, ss.epsilon_err_pct, d)

    results = _map_ordered(one, args.scan, args.jobs)
    table = ResultTable(["file", "center_deg", "fwhm_g_deg", "fwhm_l_deg",
                         "tau_nm", "tau_err_nm", "epsilon_pct",
                         "epsilon_err_pct", "d_A"])
    for row in results:
        table.add_row(*row)
    table.add_provenance(inputs=args.scan, window=args.window,
                         wavelength_A=args.wavelength, scherrer_k=args.scherrer_k)
    args.plot_kind = args.plot_kind or "peak-fit"
    if args.format == "svg-plot-data":
        # overlay of the last scan: data, fitted model, residuals
        _, tt, counts = read_xy(args.scan[-1])
        scan = DiffractionScan(tt, counts).window(*window)
        peak = fit_voigt(DiffractionScan(tt, counts), window)
        from .xrdfit import _model
        fit = _model(scan.two_theta, peak.center, peak.fwhm_g, peak.fwhm_l,
                     peak.amplitude, *peak.background)
        overlay = ResultTable(["x", "y", "fit", "residual"])
        for xx, yy, ff in zip(scan.two_theta, scan.intensity, fit):
            overlay.add_row(float(xx), float(yy), float(ff), float(yy - ff))
        overlay.provenance = table.provenance
        _write_output(overlay, args)
    else:
        _write_output(table, args)
    return 0


# ---------------------------------------------------------------- spectra

def _cmd_spectra_classify(args):
    def one(path):
        _, x, y = read_xy(path)
        spec = Spectrum(x, y, unit=XUnit.WAVENUMBER, sample=path)
        peaks = detect_peaks(spec, min_prominence=args.min_prominence)
        phase, scores = classify_phase(peaks)
        fluor = label_er_fluorescence(peaks)
        return (path, phase.value,
                scores.get(Phase.RUTILE, 0.0), scores.get(Phase.ANATASE, 0.0),
                len(peaks), ";".join(f"{p:.1f}" for p in fluor))

    results = _map_ordered(one, args.spectrum, args.jobs)
    table = ResultTable(["file", "phase", "score_rutile", "score_anatase",
                         "n_peaks", "er_fluor_cm1"])
    for row in results:
        table.add_row(*row)
    table.add_provenance(inputs=args.spectrum, min_prominence=args.min_prominence)
    _write_output(table, args)
    return 0


def _cmd_spectra_ple_fit(args):
    unit = XUnit(args.unit)

    def one(path):
        _, x, y = read_xy(path)
        fit = fit_line(Spectrum(x, y, unit=unit, sample=path), model=args.model)
        return (path, fit.center_thz, fit.fwhm_ghz,
                fit.errors.get("fwhm_ghz", 0.0), fit.amplitude, fit.background)

    results = _map_ordered(one, args.spectrum, args.jobs)
    table = ResultTable(["file", "center_THz", "fwhm_GHz", "fwhm_err_GHz",
                         "amplitude", "background"])
    for row in results:
        table.add_row(*row)
    table.add_provenance(inputs=args.spectrum, model=args.model, unit=args.unit)
    _write_output(table, args)
    return 0


def _cmd_spectra_lifetime(args):
    def one(path):
        _, t, y = read_xy(path)
        t1, t1_err, amp, bg = fit_lifetime(Spectrum(t, y, unit=XUnit.SECONDS))
        return (path, t1, t1_err, amp, bg)

    results = _map_ordered(one, args.trace, args.jobs)
    table = ResultTable(["file", "t1_ms", "t1_err_ms", "amplitude", "background"])
    for row in results:
        table.add_row(*row)
    table.add_provenance(inputs=args.trace)
    _write_output(table, args)
    return 0


# ---------------------------------------------------------------- profile

def _cmd_profile_fit(args):
    z, channels = read_profile(args.profile)
    prof = normalize(z, channels)
    window = _parse_pair(args.window, "--window") if args.window else None
    elements = args.element or sorted(prof.channels)
    table = ResultTable(["element", "length_nm", "d_cm2_s", "z0_nm",
                         "baseline", "residual_rms", "sharp_interface"])
    for el in elements:
        fit = fit_diffusion(prof, el, t=args.time, fit_window=window)
        table.add_row(el, fit.length_nm, fit.d_cm2_s, fit.z0_nm,
                      fit.baseline, fit.residual_rms, fit.sharp_interface)
    table.add_provenance(inputs=[args.profile], time_s=args.time,
                         window=args.window or "full")
    args.plot_kind = args.plot_kind or "profile"
    if args.format == "svg-plot-data":
        overlay = ResultTable(["z_nm"] + [f"c_{el}" for el in elements])
        for i in range(prof.z.size):
            overlay.add_row(float(prof.z[i]),
                            *[float(prof.channels[el][i]) for el in elements])
        overlay.provenance = table.provenance
        _write_output(overlay, args)
    else:
        _write_output(table, args)
    return 0


# ---------------------------------------------------------------- vacancy

def _vacancy_params(args):
    kwargs = {}
    if args.params:
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        with open(args.params, "rb") as fh:
            try:
                data = tomllib.load(fh)
            except tomllib.TOMLDecodeError as exc:
                raise ParseError(str(exc), args.params) from exc
        allowed = {"d_v_nm2_s", "g0", "k0_per_s", "p0_torr", "dz_nm"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown parameter keys: {sorted(unknown)}")
        kwargs = {k: float(v) for k, v in data.items()}
    return VacancyParams(**kwargs)


def _cmd_vacancy_sim(args):
    params = _vacancy_params(args)
    sched = reference_schedule(buffer_nm=args.buffer, film_nm=args.film,
                                growth_pressure_torr=args.pressure,
                                anneal_s=args.anneal)
    final, times, means, _ = simulate(sched, params, dt=args.dt)
    stride = max(1, times.size // args.max_rows)
    table = ResultTable(["t_s", "mean_c", "thickness_nm"])
    rate_segments = [(s.duration_s, s.rate_nm_s) for s in sched.segments]
    # thickness(t) by walking the schedule
    for i in range(0, times.size, stride):
        t = times[i]
        th, acc = 0.0, 0.0
        for dur, rate in rate_segments:
            seg_t = min(max(t - acc, 0.0), dur)
            th += seg_t * rate
            acc += dur
        table.add_row(float(t), float(means[i]) if np.isfinite(means[i]) else None,
                      th)
    table.add_provenance(buffer_nm=args.buffer, film_nm=args.film,
                         pressure_torr=args.pressure, anneal_s=args.anneal,
                         dt=args.dt or "auto", params=args.params or "defaults")
    args.plot_kind = args.plot_kind or "timeseries"
    _write_output(table, args)
    return 0


def _cmd_vacancy_scan(args):
    params = _vacancy_params(args)
    buffers = [float(b) for b in args.buffers.split(",")]
    scan = saturation_scan(buffers, params, film_nm=args.film, dt=args.dt)
    table = ResultTable(["buffer_nm", "final_mean_c"])
    for b, m in scan:
        table.add_row(b, m)
    table.add_provenance(buffers_nm=args.buffers, film_nm=args.film,
                         dt=args.dt or "auto", params=args.params or "defaults")
    _write_output(table, args)
    return 0


# ---------------------------------------------------------------- film

def _cmd_film_rms(args):
    def one(path):
        heights, pitch = read_heightmap(path)
        pitch = pitch if pitch is not None else args.pitch
        if pitch is None:
            raise ConfigError(
                f"{path}: matrix-format height map needs --pitch (nm/pixel)")
        hmap = HeightMap(heights, pitch_nm=pitch)
        return (path, rms_roughness(hmap, detrend=args.detrend),
                hmap.scan_size_um[1], hmap.scan_size_um[0])

    results = _map_ordered(one, args.scan, args.jobs)
    table = ResultTable(["file", "rms_pm", "size_x_um", "size_y_um"])
    for row in results:
        table.add_row(*row)
    table.add_provenance(inputs=args.scan, detrend=args.detrend,
                         pitch_nm=args.pitch or "from-file")
    _write_output(table, args)
    return 0


_PREP_ALIASES = {
    "capped": SurfacePrep.ARSENIC_CAPPED,
    "arsenic-capped": SurfacePrep.ARSENIC_CAPPED,
    "desorbed": SurfacePrep.OXIDE_DESORBED,
    "oxide-desorbed": SurfacePrep.OXIDE_DESORBED,
}


def _cmd_film_predict(args):
    try:
        substrate = Substrate[args.substrate.upper()]
    except KeyError:
        raise ConfigError(f"unknown substrate {args.substrate!r}; "
                          f"have {[s.value for s in Substrate]}")
    prep = _PREP_ALIASES.get(args.prep.lower())
    if prep is None:
        raise ConfigError(f"unknown prep {args.prep!r}; have {sorted(_PREP_ALIASES)}")
    record = GrowthRecord(substrate=substrate, prep=prep, t_grow_c=args.tgrow,
                          buffer_shots=args.buffer_shots,
                          doping=Doping(args.doping))
    phase = predict_phase(record)
    table = ResultTable(["substrate", "prep", "tgrow_C", "buffer_shots",
                         "buffer_nm", "predicted_phase", "rule_basis"])
    table.add_row(substrate.value, prep.value, args.tgrow, args.buffer_shots,
                  thickness_from_shots(args.buffer_shots), phase.value,
                  "empirical-thresholds")
    table.add_provenance(substrate=args.substrate, prep=args.prep,
                         tgrow_C=args.tgrow, buffer_shots=args.buffer_shots)
    _write_output(table, args)
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    top = _Parser(prog="epifilm",
                  description="Thin-film interface, diffraction, spectroscopy "
                              "and growth-kinetics analyses.")
    top.add_argument("--version", action="version", version=__version__)
    subs = top.add_subparsers(dest="command", required=True)

    p = subs.add_parser("mcia", parents=[], help="coincident interface area search")
    p.add_argument("--substrate", required=True,
                   help="lattice name, optionally name:plane (default plane 100)")
    p.add_argument("--film", action="append", required=True,
                   help="film lattice name (repeatable)")
    p.add_argument("--planes", default="001",
                   help="comma-separated film planes, e.g. 001,100,110,210")
    p.add_argument("--max-area", type=float, default=MciaConfig.max_area)
    p.add_argument("--strain-tol", type=float, default=MciaConfig.max_linear_strain)
    p.add_argument("--max-index", type=int, default=MciaConfig.max_index)
    _add_common(p)
    p.set_defaults(fn=_cmd_mcia)

    p = subs.add_parser("xrd-fit", help="Voigt peak fit and size-strain analysis")
    p.add_argument("scan", nargs="+", help="two-column 2theta/intensity file(s)")
    p.add_argument("--window", required=True, help="fit window 'lo,hi' in deg 2theta")
    p.add_argument("--wavelength", type=float, default=CU_KALPHA1)
    p.add_argument("--scherrer-k", type=float, default=0.9)
    _add_common(p)
    p.set_defaults(fn=_cmd_xrd_fit)

    sp = subs.add_parser("spectra", help="Raman / resonance / lifetime analyses")
    ssubs = sp.add_subparsers(dest="subcommand", required=True)

    p = ssubs.add_parser("classify", help="phase from Raman peak positions")
    p.add_argument("spectrum", nargs="+", help="two-column cm^-1/intensity file(s)")
    p.add_argument("--min-prominence", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(fn=_cmd_spectra_classify)

    p = ssubs.add_parser("ple-fit", help="single-resonance line fit")
    p.add_argument("spectrum", nargs="+")
    p.add_argument("--model", choices=["gaussian", "lorentzian"], default="gaussian")
    p.add_argument("--unit", choices=["THz", "nm"], default="THz")
    _add_common(p)
    p.set_defaults(fn=_cmd_spectra_ple_fit)

    p = ssubs.add_parser("lifetime", help="single-exponential decay fit")
    p.add_argument("trace", nargs="+", help="two-column seconds/intensity file(s)")
    _add_common(p)
    p.set_defaults(fn=_cmd_spectra_lifetime)

    pp = subs.add_parser("profile", help="depth-profile analyses")
    psubs = pp.add_subparsers(dest="subcommand", required=True)
    p = psubs.add_parser("fit", help="erfc interdiffusion fit")
    p.add_argument("profile", help="multi-column file, header names the elements")
    p.add_argument("--element", action="append",
                   help="channel(s) to fit (default: all)")
    p.add_argument("--time", type=float, default=DEFAULT_THERMAL_TIME_S,
                   help="thermal-budget time in s")
    p.add_argument("--window", help="fit window 'lo,hi' in nm")
    _add_common(p)
    p.set_defaults(fn=_cmd_profile_fit)

    vp = subs.add_parser("vacancy", help="oxygen-vacancy kinetics")
    vsubs = vp.add_subparsers(dest="subcommand", required=True)

    p = vsubs.add_parser("sim", help="simulate one growth schedule")
    p.add_argument("--buffer", type=float, default=5.0, help="buffer thickness nm")
    p.add_argument("--film", type=float, default=65.0, help="main film thickness nm")
    p.add_argument("--pressure", type=float, default=20e-3,
                   help="growth O2 pressure, Torr")
    p.add_argument("--anneal", type=float, default=1800.0, help="anneal time s")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--params", help="TOML file of rate parameters")
    p.add_argument("--max-rows", type=int, default=200)
    _add_common(p)
    p.set_defaults(fn=_cmd_vacancy_sim)

    p = vsubs.add_parser("scan", help="final mean concentration vs buffer thickness")
    p.add_argument("--buffers", default="5,10,20,40",
                   help="comma-separated buffer thicknesses, nm")
    p.add_argument("--film", type=float, default=65.0)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--params", help="TOML file of rate parameters")
    _add_common(p)
    p.set_defaults(fn=_cmd_vacancy_scan)

    fp = subs.add_parser("film", help="surface and growth statistics")
    fsubs = fp.add_subparsers(dest="subcommand", required=True)

    p = fsubs.add_parser("rms", help="RMS roughness of height maps")
    p.add_argument("scan", nargs="+", help="height-map file(s)")
    p.add_argument("--pitch", type=float, default=None,
                   help="nm per pixel for matrix-format maps")
    p.add_argument("--detrend", choices=["none", "plane"], default="plane")
    _add_common(p)
    p.set_defaults(fn=_cmd_film_rms)

    p = fsubs.add_parser("predict", help="empirical phase prediction")
    p.add_argument("--substrate", required=True)
    p.add_argument("--prep", required=True)
    p.add_argument("--tgrow", type=float, required=True)
    p.add_argument("--buffer-shots", type=int, default=0)
    p.add_argument("--doping", choices=[d.value for d in Doping],
                   default=Doping.BULK.value)
    _add_common(p)
    p.set_defaults(fn=_cmd_film_predict)

    return top


def run(argv=None) -> int:
    """Dispatch one CLI invocation; returns the process exit code."""
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    try:
        if args.format == "svg-plot-data" and args.plot_kind is None \
                and args.fn not in (_cmd_mcia, _cmd_xrd_fit, _cmd_profile_fit,
                                    _cmd_vacancy_sim):
            raise ConfigError("--format svg-plot-data needs --plot-kind here")
        return args.fn(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 3
    except (_UsageError, ConfigError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 3
    except EpifilmError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 4


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

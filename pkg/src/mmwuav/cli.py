"""Experiment runner: every simulation as a subcommand with deterministic outputs.

Each run writes a CSV report, a JSON sidecar with the fully-resolved
configuration (re-running with ``--config <sidecar>`` reproduces the CSV
byte for byte), and a PNG figure next to the CSV unless ``--no-plot``.
Exit codes: 0 success, 2 invalid configuration, 3 runtime/IO failure.
"""

from __future__ import annotations

import functools
import json
import math
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .array_channel import (
    ArrayGeometry,
    LinkBudget,
    Mpc,
    MobilityParams,
    coherence_time_s,
    doppler_spread_hz,
    friis_rx_snr_db,
    sample_mpcs,
    synth_channel,
)
from .beamsearch import (
    MeasurementModel,
    SearchScenario,
    exhaustive_slot_count,
    hierarchical_search,
    hierarchical_slot_count,
    nearest_grid_index,
    success_rate,
)
from .codebook import (
    beam_pattern,
    build_bmw_ss,
    build_deact,
    coverage_union_check,
    slice_bounds,
)
from .deployment import (
    DeploymentScene,
    iterate_positioning,
    rural_profile,
    scene_from_json,
    scene_to_json,
)
from .sdma import (
    CapacityParams,
    UserLink,
    bound_rate,
    capacity_lf,
    capacity_mm,
    effective_channel,
    mmse_sic_sum_rate,
)

OUTDIR_ENV = "MMWUAV_OUTDIR"
_BUILDERS = {"deact": build_deact, "bmw-ss": build_bmw_ss}


class ConfigError(Exception):
    pass


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _parse_grid(text: str, field: str) -> list[float]:
    """Parse a start:step:stop sweep (inclusive stop) or a comma list."""
    try:
        if ":" in text:
            start, step, stop = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + i * step for i in range(n)]
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise ConfigError(f"{field}: expected start:step:stop or a comma list, got {text!r}")


def _parse_int_list(text: str, field: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise ConfigError(f"{field}: expected a comma-separated integer list, got {text!r}")


def _resolve(command: str, defaults: dict, config_path, cli_values: dict) -> dict:
    """defaults < config file < explicitly passed flags."""
    resolved = dict(defaults)
    if config_path:
        try:
            with open(config_path) as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{command}.config: cannot read {config_path}: {exc}")
        payload.pop("command", None)
        for key, value in payload.items():
            if key not in resolved:
                raise ConfigError(f"{command}.{key}: unknown field in config file")
            resolved[key] = value
    for key, value in cli_values.items():
        if value is not None:
            resolved[key] = value
    return resolved


def _out_path(resolved: dict, default_name: str) -> Path:
    out = resolved.get("out")
    if not out:
        out = str(Path(os.environ.get(OUTDIR_ENV, ".")) / default_name)
        resolved["out"] = out
    path = Path(out)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_report(command: str, resolved: dict, header: str, rows: list[tuple]) -> Path:
    csv_path = _out_path(resolved, f"{command}.csv")
    lines = [header]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    csv_path.write_text("\n".join(lines) + "\n")
    sidecar = csv_path.with_suffix(".config.json")
    sidecar.write_text(
        json.dumps({"command": command, **resolved}, indent=2, sort_keys=True) + "\n"
    )
    return csv_path


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except ValueError as exc:
            click.echo(f"config error: {exc}", err=True)
            sys.exit(2)
        except OSError as exc:
            click.echo(f"i/o error: {exc}", err=True)
            sys.exit(3)

    return wrapper


def _require(cond: bool, field: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{field}: {msg}")


def _codebook(kind: str, n: int, m: int, field: str):
    _require(kind in _BUILDERS, field, f"must be one of {sorted(_BUILDERS)}")
    return _BUILDERS[kind](n, m)


@click.group()
@click.version_option(__version__)
def main():
    """mmWave UAV cellular simulations: codebooks, beam search, SDMA, deployment."""


_common = [
    click.option("--out", type=str, default=None, help="CSV output path."),
    click.option("--config", "config_path", type=str, default=None,
                 help="JSON config file; flags override its values."),
    click.option("--no-plot", is_flag=True, default=False, help="Skip the PNG figure."),
]


def _with_common(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@main.command()
@click.option("--codebook", type=str, default=None, help="deact or bmw-ss.")
@click.option("--n", type=int, default=None, help="Antenna count (power of m).")
@click.option("--m", type=int, default=None, help="Tree branching factor.")
@click.option("--layer", type=int, default=None)
@click.option("--index", type=int, default=None)
@click.option("--grid-size", type=int, default=None)
@_with_common
@_guard
def pattern(codebook, n, m, layer, index, grid_size, out, config_path, no_plot):
    """Beam pattern of one codeword (CSV omega,gain_db)."""
    defaults = {"codebook": "bmw-ss", "n": 32, "m": 2, "layer": 2, "index": 1,
                "grid_size": 1024, "out": None}
    cfg = _resolve("pattern", defaults, config_path,
                   {"codebook": codebook, "n": n, "m": m, "layer": layer,
                    "index": index, "grid_size": grid_size, "out": out})
    cb = _codebook(cfg["codebook"], cfg["n"], cfg["m"], "pattern.codebook")
    _require(0 <= cfg["layer"] <= cb.depth, "pattern.layer", f"must lie in 0..{cb.depth}")
    _require(0 <= cfg["index"] < len(cb.layers[cfg["layer"]]), "pattern.index",
             "index out of range for the layer")
    _require(cfg["grid_size"] >= 2 * cfg["n"], "pattern.grid_size", "must be at least 2n")
    word = cb.codeword(cfg["layer"], cfg["index"])
    bp = beam_pattern(word, cfg["grid_size"])
    rows = [(omega, gain) for omega, gain in zip(bp.angle_grid, bp.gain_db)]
    csv_path = _write_report("pattern", cfg, "omega,gain_db", rows)
    if not no_plot:
        from .plotting import save_pattern_plot

        label = f"{cfg['codebook']} w({cfg['layer']},{cfg['index']})"
        save_pattern_plot([(label, bp)], csv_path.with_suffix(".png"),
                          title=f"N={cfg['n']}, M={cfg['m']}")
    click.echo(f"wrote {csv_path}")


@main.command("codebook-check")
@click.option("--codebook", type=str, default=None)
@click.option("--n", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--ripple-db", type=float, default=None)
@click.option("--grid-size", type=int, default=None)
@_with_common
@_guard
def codebook_check(codebook, n, m, ripple_db, grid_size, out, config_path, no_plot):
    """Per-layer constant-amplitude, sink, and coverage-union report."""
    defaults = {"codebook": "bmw-ss", "n": 32, "m": 2, "ripple_db": 10.0,
                "grid_size": 1024, "out": None}
    cfg = _resolve("codebook-check", defaults, config_path,
                   {"codebook": codebook, "n": n, "m": m, "ripple_db": ripple_db,
                    "grid_size": grid_size, "out": out})
    cb = _codebook(cfg["codebook"], cfg["n"], cfg["m"], "codebook-check.codebook")
    union = coverage_union_check(cb, cfg["ripple_db"], cfg["grid_size"])
    union_by_layer = {e.layer: e.worst_margin_db for e in union.layers}
    rows = []
    mins = []
    for k, layer in enumerate(cb.layers):
        ca_ok = True
        min_in = math.inf
        peak = -math.inf
        for word in layer:
            active = np.abs(word.weights[word.active_mask])
            ca_ok &= bool(np.allclose(active, 1.0 / math.sqrt(cb.n_antennas), atol=1e-12))
            ca_ok &= bool(np.all(word.weights[~word.active_mask] == 0))
            bp = beam_pattern(word, cfg["grid_size"])
            lo, hi = slice_bounds(k, word.index_in_layer, cb.branching)
            mask = (bp.angle_grid >= lo) & (bp.angle_grid < hi)
            min_in = min(min_in, float(bp.gain_db[mask].min()))
            peak = max(peak, float(bp.gain_db.max()))
        sink_margin = min_in - (peak - 10.0)
        union_margin = union_by_layer.get(k, math.inf)
        passed = ca_ok and sink_margin >= 0 and union_margin >= 0
        mins.append(min_in)
        rows.append((k, len(layer), ca_ok, min_in, peak, sink_margin, union_margin, passed))
    header = ("layer,n_codewords,ca_ok,min_in_slice_db,peak_db,"
              "sink_margin_db,union_margin_db,passed")
    csv_path = _write_report("codebook-check", cfg, header, rows)
    if not no_plot:
        from .plotting import save_curves_plot

        save_curves_plot(list(range(len(cb.layers))),
                         [("min in-slice gain", mins)],
                         csv_path.with_suffix(".png"),
                         xlabel="layer", ylabel="gain (dB)",
                         title=f"{cfg['codebook']} N={cfg['n']}")
    click.echo(f"wrote {csv_path}")
    if not all(row[-1] for row in rows):
        click.echo("codebook-check: FAILED layers present", err=True)


@main.command()
@click.option("--n-list", type=str, default=None, help="Comma list of antenna counts.")
@click.option("--m", type=int, default=None)
@_with_common
@_guard
def complexity(n_list, m, out, config_path, no_plot):
    """Training-slot counts of exhaustive vs hierarchical search."""
    defaults = {"n_list": "16,32,64,128", "m": 2, "out": None}
    cfg = _resolve("complexity", defaults, config_path,
                   {"n_list": n_list, "m": m, "out": out})
    ns = _parse_int_list(cfg["n_list"], "complexity.n_list")
    _require(len(ns) > 0, "complexity.n_list", "needs at least one antenna count")
    rows = []
    for n in ns:
        _require(n >= cfg["m"], "complexity.n_list", f"{n} smaller than branching")
        rows.append((n, exhaustive_slot_count(n), hierarchical_slot_count(n, cfg["m"])))
    csv_path = _write_report(
        "complexity", cfg, "n_antennas,exhaustive_slots,hierarchical_slots", rows
    )
    if not no_plot:
        from .plotting import save_curves_plot

        save_curves_plot(ns, [("exhaustive", [r[1] for r in rows]),
                              ("hierarchical", [r[2] for r in rows])],
                         csv_path.with_suffix(".png"), xlabel="antennas per side",
                         ylabel="training slots", logy=True)
    click.echo(f"wrote {csv_path}")


@main.command("search-sim")
@click.option("--codebook", type=str, default=None, help="deact, bmw-ss, or both.")
@click.option("--n", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--l", "l_paths", type=int, default=None, help="Multipath count.")
@click.option("--nlos-offset-db", type=float, default=None)
@click.option("--snr", type=str, default=None, help="SNR sweep start:step:stop in dB.")
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_with_common
@_guard
def search_sim(codebook, n, m, l_paths, nlos_offset_db, snr, trials, seed,
               out, config_path, no_plot):
    """Monte-Carlo LOS-acquisition success rate of hierarchical search."""
    defaults = {"codebook": "both", "n": 32, "m": 2, "l": 3, "nlos_offset_db": 20.0,
                "snr": "-30:2:10", "trials": 2000, "seed": 0, "out": None}
    cfg = _resolve("search-sim", defaults, config_path,
                   {"codebook": codebook, "n": n, "m": m, "l": l_paths,
                    "nlos_offset_db": nlos_offset_db, "snr": snr, "trials": trials,
                    "seed": seed, "out": out})
    kinds = ["bmw-ss", "deact"] if cfg["codebook"] == "both" else [cfg["codebook"]]
    for kind in kinds:
        _require(kind in _BUILDERS, "search-sim.codebook", "must be deact, bmw-ss, or both")
    _require(cfg["trials"] >= 1, "search-sim.trials", "must be >= 1")
    _require(cfg["l"] >= 1, "search-sim.l", "must be >= 1")
    grid = _parse_grid(cfg["snr"], "search-sim.snr")
    rows = []
    curves = []
    for kind in kinds:
        scenario = SearchScenario(n_antennas=cfg["n"], branching=cfg["m"],
                                  l_paths=cfg["l"], nlos_offset_db=cfg["nlos_offset_db"],
                                  codebook=kind)
        curve = success_rate(scenario, grid, cfg["trials"], cfg["seed"])
        curves.append(curve)
        rows.extend(
            (s, r, curve.trials, kind) for s, r in zip(curve.snr_db, curve.rate)
        )
    csv_path = _write_report("search-sim", cfg, "snr_db,success_rate,trials,codebook", rows)
    if not no_plot:
        from .plotting import save_curves_plot

        save_curves_plot(grid, [(c.codebook, c.rate) for c in curves],
                         csv_path.with_suffix(".png"), xlabel="SNR (dB)",
                         ylabel="success rate",
                         title=f"N={cfg['n']}, L={cfg['l']}, {cfg['trials']} trials")
    click.echo(f"wrote {csv_path}")


def _draw_sdma_links(n, m, n_users, l_paths, offset_db, min_sep, cb, rng):
    """One trial's users: distinct AoD groups, searched beams, true channels."""
    geom = ArrayGeometry(n)
    for _ in range(64):
        groups = sorted(rng.choice(n, size=n_users, replace=False).tolist())
        gaps = [(groups[(i + 1) % n_users] - groups[i]) % n for i in range(n_users)]
        if n_users == 1 or min(gaps) >= min_sep:
            break
    links = []
    perfect = []
    slice_w = 2.0 / n
    for uid, g in enumerate(groups):
        aoa = -1.0 + (g + rng.uniform(0.05, 0.95)) * slice_w
        aod = rng.uniform(-1.0, 1.0)
        mpcs = [Mpc(complex(np.exp(2j * np.pi * rng.uniform())), aoa, aod)]
        amp = 10.0 ** (-offset_db / 20.0) / math.sqrt(2.0)
        for _ in range(l_paths - 1):
            gain = amp * complex(rng.standard_normal(), rng.standard_normal())
            mpcs.append(Mpc(gain, float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1))))
        ch = synth_channel(geom, geom, mpcs)
        found = hierarchical_search(ch.h_matrix, cb, cb, MeasurementModel(1.0, noiseless=True))
        links.append(UserLink(uid, ch, cb.layers[-1][found.tx_index],
                              cb.layers[-1][found.rx_index], found.rx_index))
        perfect.append(UserLink(uid, ch,
                                cb.layers[-1][nearest_grid_index(aod, n)],
                                cb.layers[-1][nearest_grid_index(aoa, n)],
                                nearest_grid_index(aoa, n)))
    return links, perfect


@main.command("sdma-sim")
@click.option("--users", type=int, default=None)
@click.option("--n", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--l", "l_paths", type=int, default=None)
@click.option("--nlos-offset-db", type=float, default=None)
@click.option("--snr", type=str, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--min-separation", type=int, default=None,
              help="Minimum cyclic distance between user groups, in grid slices.")
@click.option("--codebook", type=str, default=None)
@click.option("--seed", type=int, default=None)
@_with_common
@_guard
def sdma_sim(users, n, m, l_paths, nlos_offset_db, snr, trials, min_separation,
             codebook, seed, out, config_path, no_plot):
    """Uplink MMSE-SIC sum rate vs the zero-interference bound."""
    defaults = {"users": 4, "n": 32, "m": 2, "l": 3, "nlos_offset_db": 20.0,
                "snr": "-10:5:30", "trials": 100, "min_separation": 2,
                "codebook": "bmw-ss", "seed": 0, "out": None}
    cfg = _resolve("sdma-sim", defaults, config_path,
                   {"users": users, "n": n, "m": m, "l": l_paths,
                    "nlos_offset_db": nlos_offset_db, "snr": snr, "trials": trials,
                    "min_separation": min_separation, "codebook": codebook,
                    "seed": seed, "out": out})
    _require(1 <= cfg["users"] <= cfg["n"], "sdma-sim.users", "must lie in 1..n")
    _require(cfg["trials"] >= 1, "sdma-sim.trials", "must be >= 1")
    cb = _codebook(cfg["codebook"], cfg["n"], cfg["m"], "sdma-sim.codebook")
    grid = _parse_grid(cfg["snr"], "sdma-sim.snr")
    snr_lin = [10.0 ** (s / 10.0) for s in grid]
    sums = np.zeros(len(grid))
    bounds = np.zeros(len(grid))
    for trial in range(cfg["trials"]):
        rng = np.random.default_rng((cfg["seed"], trial))
        links, perfect = _draw_sdma_links(
            cfg["n"], cfg["m"], cfg["users"], cfg["l"], cfg["nlos_offset_db"],
            cfg["min_separation"], cb, rng)
        h_eff = effective_channel(links)
        h_perfect = effective_channel(perfect)
        for i, rho in enumerate(snr_lin):
            sums[i] += mmse_sic_sum_rate(h_eff, rho).sum_rate_bps_hz
            bounds[i] += bound_rate(h_perfect, rho)
    sums /= cfg["trials"]
    bounds /= cfg["trials"]
    rows = [(s, su, bo, cfg["users"]) for s, su, bo in zip(grid, sums, bounds)]
    csv_path = _write_report("sdma-sim", cfg, "snr_db,sum_rate,bound_rate,n_users", rows)
    if not no_plot:
        from .plotting import save_curves_plot

        save_curves_plot(grid, [("MMSE-SIC sum rate", sums), ("bound rate", bounds)],
                         csv_path.with_suffix(".png"), xlabel="per-user SNR (dB)",
                         ylabel="rate (bit/s/Hz)",
                         title=f"U={cfg['users']}, N={cfg['n']}")
    click.echo(f"wrote {csv_path}")


@main.command()
@click.option("--preset", type=str, default=None, help="fig4-right fills the caption parameters.")
@click.option("--tx-power-dbm", type=str, default=None, help="Transmit power sweep (dBm).")
@click.option("--users", type=int, default=None)
@click.option("--distance-m", type=float, default=None)
@click.option("--noise-figure-db", type=float, default=None)
@click.option("--lf-method", type=str, default=None, help="quadrature or mc.")
@click.option("--mc-samples", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_with_common
@_guard
def capacity(preset, tx_power_dbm, users, distance_m, noise_figure_db, lf_method,
             mc_samples, seed, out, config_path, no_plot):
    """mmWave vs low-frequency multi-user capacity at matched transmit power."""
    defaults = {"preset": "fig4-right", "tx_power_dbm": "10:5:40", "users": 4,
                "distance_m": 1000.0, "noise_figure_db": 5.0,
                "carrier_mm_hz": 30e9, "carrier_lf_hz": 5e9,
                "bandwidth_mm_hz": 100e6, "bandwidth_lf_hz": 5e6,
                "bs_gain_mm_db": 24.0, "ms_gain_mm_db": 12.0,
                "bs_gain_lf_db": 6.0, "ms_gain_lf_db": 0.0,
                "lf_method": "quadrature", "mc_samples": 1_000_000, "seed": 0,
                "out": None}
    cfg = _resolve("capacity", defaults, config_path,
                   {"preset": preset, "tx_power_dbm": tx_power_dbm, "users": users,
                    "distance_m": distance_m, "noise_figure_db": noise_figure_db,
                    "lf_method": lf_method, "mc_samples": mc_samples, "seed": seed,
                    "out": out})
    _require(cfg["preset"] in ("fig4-right", "none"), "capacity.preset",
             "must be fig4-right or none")
    _require(cfg["users"] >= 1, "capacity.users", "must be >= 1")
    _require(cfg["lf_method"] in ("quadrature", "mc"), "capacity.lf_method",
             "must be quadrature or mc")
    sweep = _parse_grid(cfg["tx_power_dbm"], "capacity.tx_power_dbm")
    rows = []
    mm_vals, lf_vals, ratios = [], [], []
    for tx in sweep:
        mm_budget = LinkBudget(carrier_hz=cfg["carrier_mm_hz"], distance_m=cfg["distance_m"],
                               bandwidth_hz=cfg["bandwidth_mm_hz"],
                               tx_array_gain_db=cfg["bs_gain_mm_db"],
                               rx_array_gain_db=cfg["ms_gain_mm_db"],
                               tx_power_dbm=tx, noise_figure_db=cfg["noise_figure_db"])
        lf_budget = LinkBudget(carrier_hz=cfg["carrier_lf_hz"], distance_m=cfg["distance_m"],
                               bandwidth_hz=cfg["bandwidth_lf_hz"],
                               tx_array_gain_db=cfg["bs_gain_lf_db"],
                               rx_array_gain_db=cfg["ms_gain_lf_db"],
                               tx_power_dbm=tx, noise_figure_db=cfg["noise_figure_db"])
        snr_mm_db = friis_rx_snr_db(mm_budget)
        rho_mm = 10.0 ** (snr_mm_db / 10.0)
        rho_lf = 10.0 ** (friis_rx_snr_db(lf_budget) / 10.0)
        c_mm = capacity_mm(CapacityParams(cfg["bandwidth_mm_hz"], rho_mm, cfg["users"]))
        c_lf = capacity_lf(CapacityParams(cfg["bandwidth_lf_hz"], rho_lf, 4),
                           method=cfg["lf_method"], samples=cfg["mc_samples"],
                           rng_seed=cfg["seed"])
        rows.append((snr_mm_db, c_mm, c_lf, c_mm / c_lf if c_lf else math.inf))
        mm_vals.append(c_mm)
        lf_vals.append(c_lf)
        ratios.append(rows[-1][3])
    csv_path = _write_report("capacity", cfg, "snr_db,c_mm_bps,c_lf_bps,ratio", rows)
    if not no_plot:
        from .plotting import save_curves_plot

        save_curves_plot(sweep, [("mmWave", mm_vals), ("low frequency", lf_vals)],
                         csv_path.with_suffix(".png"), xlabel="transmit power (dBm)",
                         ylabel="capacity (bit/s)", logy=True,
                         title=f"U={cfg['users']}, d={cfg['distance_m']:.0f} m")
    click.echo(f"wrote {csv_path}")


@main.command()
@click.option("--speed", "speed_mps", type=float, default=None, help="UAV speed (m/s).")
@click.option("--wavelength-m", type=float, default=None)
@click.option("--theta-deg", type=str, default=None,
              help="Motion-to-link angles, comma list or start:step:stop.")
@_with_common
@_guard
def doppler(speed_mps, wavelength_m, theta_deg, out, config_path, no_plot):
    """Doppler spread and coherence time over motion angles."""
    defaults = {"speed_mps": 20.0, "wavelength_m": 0.005, "theta_deg": "0:5:90",
                "out": None}
    cfg = _resolve("doppler", defaults, config_path,
                   {"speed_mps": speed_mps, "wavelength_m": wavelength_m,
                    "theta_deg": theta_deg, "out": out})
    _require(cfg["speed_mps"] >= 0, "doppler.speed_mps", "must be >= 0")
    _require(cfg["wavelength_m"] > 0, "doppler.wavelength_m", "must be > 0")
    angles = _parse_grid(cfg["theta_deg"], "doppler.theta_deg")
    rows = []
    spreads = []
    for deg in angles:
        params = MobilityParams(cfg["speed_mps"], cfg["wavelength_m"], math.radians(deg))
        rows.append((cfg["speed_mps"], cfg["wavelength_m"], math.radians(deg),
                     coherence_time_s(params), doppler_spread_hz(params)))
        spreads.append(rows[-1][4])
    header = "speed_mps,wavelength_m,theta_rad,coherence_time_s,doppler_spread_hz"
    csv_path = _write_report("doppler", cfg, header, rows)
    if not no_plot:
        from .plotting import save_curves_plot

        save_curves_plot(angles, [("Doppler spread (Hz)", spreads)],
                         csv_path.with_suffix(".png"), xlabel="angle (deg)",
                         ylabel="Doppler spread (Hz)",
                         title=f"v={cfg['speed_mps']} m/s, wavelength={cfg['wavelength_m']} m")
    click.echo(f"wrote {csv_path}")


def _fig6_scene() -> DeploymentScene:
    return DeploymentScene(
        uav_pos=(20.0, 0.0, 200.0),
        users=((1, (0.0, 0.0, 0.0)), (2, (120.0, 0.0, 0.0)), (3, (60.0, 150.0, 0.0))),
        env=rural_profile(2000.0),
        discovery_range_m=251.0,
        signaling_cost=0.0,
        sweep_sectors=16,
    )


@main.command("deploy-sim")
@click.option("--scene", "scene_path", type=str, default=None, help="Scene JSON file.")
@click.option("--preset", type=str, default=None, help="fig6 builds the three-user scene.")
@click.option("--max-iters", type=int, default=None)
@_with_common
@_guard
def deploy_sim(scene_path, preset, max_iters, out, config_path, no_plot):
    """Iterative user discovery and repositioning trajectory."""
    defaults = {"scene": None, "preset": "fig6", "max_iters": 10, "scene_data": None,
                "out": None}
    cfg = _resolve("deploy-sim", defaults, config_path,
                   {"scene": scene_path, "preset": preset, "max_iters": max_iters,
                    "out": out})
    _require(cfg["max_iters"] >= 1, "deploy-sim.max_iters", "must be >= 1")
    if cfg["scene"]:
        try:
            text = Path(cfg["scene"]).read_text()
        except OSError as exc:
            raise ConfigError(f"deploy-sim.scene: cannot read {cfg['scene']}: {exc}")
        scene = scene_from_json(text)
    elif cfg["scene_data"]:
        scene = scene_from_json(json.dumps(cfg["scene_data"]))
    else:
        _require(cfg["preset"] == "fig6", "deploy-sim.preset", "must be fig6 when no scene given")
        scene = _fig6_scene()
    cfg["scene_data"] = json.loads(scene_to_json(scene))
    trajectory = iterate_positioning(scene, cfg["max_iters"])
    rows = [
        (i, p.position[0], p.position[1], p.position[2], len(p.found_ids), p.utility,
         p.moved)
        for i, p in enumerate(trajectory)
    ]
    csv_path = _write_report("deploy-sim", cfg, "iter,x,y,z,n_found,utility,moved", rows)
    if not no_plot:
        from .plotting import save_trajectory_plot

        save_trajectory_plot(scene, trajectory, csv_path.with_suffix(".png"),
                             title="discovery and repositioning")
    click.echo(f"wrote {csv_path}")


if __name__ == "__main__":
    main()

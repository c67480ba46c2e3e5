"""Batch experiment runner.

Subcommands: rabi | zeno | estimate | channel | chain.  Parameters come
from flags or a JSON config file (flags win, unknown keys are
rejected).  Every artifact embeds {seed, config hash, version} and
identical (config, seed) pairs produce byte-identical files.  Exit
codes: 0 success, 1 numerical failure, 2 configuration error.
"""

import argparse
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__, constants
from .bloch import DetectionModel, DrivePulse, rabi_excitation_probability, ramsey_probability
from .channels import (ChannelInvalidError, channel_from_spec, tomography_exact,
                       tomography_sampled)
from .estimation import (DegenerateUpdateError, ImperfectionParams,
                         mean_fidelity_experiment)
from .ionchain import (ConvergenceError, NotAMinimumError, TrapConfig,
                       length_scale, required_gradient, spin_spin_couplings)
from .zeno import (ZenoConfig, corrected_survival, run_length_distribution,
                   run_length_ratio, simulate_alternating,
                   simulate_fractionated_pi, survival_probability)

CONSTANTS_ENV = "IONQSIM_CONSTANTS"

NUMERICAL_ERRORS = (ConvergenceError, NotAMinimumError, ChannelInvalidError,
                    DegenerateUpdateError, FloatingPointError, np.linalg.LinAlgError)


class ConfigError(ValueError):
    pass


# flag name -> (type, default, help); None defaults mean "required"
_SPECS = {
    "rabi": {
        "seed": (int, 0, "RNG seed (unused; kept for uniform artifacts)"),
        "rabi_khz": (float, 2.9165, "Rabi frequency Omega/2pi in kHz"),
        "detuning_hz": (float, 0.0, "detuning delta/2pi in Hz"),
        "tmax_ms": (float, 2.0, "scan end time in ms"),
        "points": (int, 200, "number of scan points"),
        "ramsey": (bool, False, "scan Ramsey precession time instead of pulse length"),
    },
    "zeno": {
        "seed": (int, 0, "RNG seed"),
        "mode": (str, "survival", "survival | runlength"),
        "fractions": (str, "1,2,3,4,10", "comma-separated N values (survival mode)"),
        "sequences": (int, 2000, "sequences per N (survival mode)"),
        "theta_total": (float, math.pi, "total pulse area in rad"),
        "prep_efficiency": (float, 1.0, "probability of correct |0> preparation"),
        "eta0": (float, 1.0, "probability of reading |0> as off"),
        "eta1": (float, 1.0, "probability of reading |1> as on"),
        "on_mean": (float, None, "Poisson mean photon count for on (with off_mean, threshold)"),
        "off_mean": (float, None, "Poisson mean photon count for off"),
        "threshold": (int, None, "count cutoff: on means count > threshold"),
        "theta": (float, math.pi / 5.0, "drive area per pair in rad (runlength mode)"),
        "pairs": (int, 10000, "drive/probe pairs (runlength mode)"),
        "qmax": (int, 10, "largest run length reported (runlength mode)"),
    },
    "estimate": {
        "seed": (int, 0, "RNG seed"),
        "strategy": (str, "self", "self | random | fixed"),
        "n": (int, 12, "measurements per state"),
        "states": (int, 1000, "number of random true states"),
        "lambda": (float, 0.0, "depolarization strength in [0, 1/2]"),
        "delta_eta": (float, 0.0, "detection bias (eta1-eta0)/2"),
    },
    "channel": {
        "seed": (int, 0, "RNG seed"),
        "spec": (str, None, "path to channel spec JSON (required)"),
        "shots": (int, 0, "shots per tomography setting; 0 = exact"),
    },
    "chain": {
        "seed": (int, 0, "RNG seed (unused; kept for uniform artifacts)"),
        "species": (str, "yb171", "ion species key"),
        "nu1_khz": (float, 100.0, "COM mode frequency nu1/2pi in kHz"),
        "n": (int, 10, "number of ions"),
        "gradient": (float, 25.0, "axial field gradient in T/m"),
        "b0": (float, 0.0, "offset field in T (used when weak-field limit is off)"),
        "no_weak_field": (bool, False, "evaluate the chi factor at the local field"),
        "table": (bool, False, "also print the J table in the standard layout"),
    },
}

_STRATEGY_ALIASES = {"self": "self_learning", "random": "random", "fixed": "fixed_axes"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionqsim",
        description="Trapped-ion qubit experiment simulations",
    )
    parser.add_argument("--version", action="version",
                        version=f"ionqsim {__version__} "
                                f"(constants: {constants.CONSTANTS_PROVENANCE})")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, spec in _SPECS.items():
        p = sub.add_parser(command)
        p.add_argument("--config", type=str, default=None,
                       help="JSON file with parameter defaults (flags win)")
        p.add_argument("--out", type=str, default=None, help="output artifact path")
        for name, (typ, _default, helptext) in spec.items():
            flag = "--" + name.replace("_", "-")
            if typ is bool:
                p.add_argument(flag, action="store_const", const=True,
                               default=None, help=helptext)
            else:
                p.add_argument(flag, type=typ, default=None, help=helptext)
    return parser


def _merge_params(command: str, args: argparse.Namespace) -> dict:
    """Resolve parameters: command line > config file > defaults."""
    spec = _SPECS[command]
    from_file = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                from_file = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}")
        if not isinstance(from_file, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(from_file) - set(spec)
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    params = {}
    for name, (typ, default, _help) in spec.items():
        cli_value = getattr(args, name)
        if cli_value is not None:
            params[name] = cli_value
        elif name in from_file:
            try:
                params[name] = typ(from_file[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad config value for {name!r}: {exc}")
        else:
            params[name] = default
    return params


def _config_hash(command: str, params: dict) -> str:
    blob = json.dumps({"command": command, "params": params}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _meta(command: str, params: dict) -> dict:
    return {
        "seed": params.get("seed"),
        "config_hash": _config_hash(command, params),
        "version": __version__,
    }


def _fmt(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _write_csv(path, meta: dict, columns: list, rows: list) -> None:
    lines = [f"# {key}={meta[key]}" for key in ("seed", "config_hash", "version")]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_json(path, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_rabi(params: dict, out) -> int:
    times = np.linspace(0.0, params["tmax_ms"] * 1e-3, params["points"])
    omega = 2.0 * math.pi * params["rabi_khz"] * 1e3
    delta = 2.0 * math.pi * params["detuning_hz"]
    if params["ramsey"]:
        if omega <= 0:
            raise ConfigError("ramsey mode needs a positive Rabi frequency")
        pulse = DrivePulse(rabi=omega, detuning=delta, duration=0.5 * math.pi / omega)
        rows = [(t, ramsey_probability(pulse, t)) for t in times]
        columns = ["precession_time_s", "p1"]
    else:
        rows = [(t, rabi_excitation_probability(omega, delta, t)) for t in times]
        columns = ["pulse_length_s", "p1"]
    _write_csv(out, _meta("rabi", params), columns, rows)
    return 0


def _detection_from(params: dict) -> DetectionModel:
    counting = [params["on_mean"], params["off_mean"], params["threshold"]]
    if any(v is not None for v in counting):
        if any(v is None for v in counting):
            raise ConfigError("on_mean, off_mean and threshold must be given together")
        return DetectionModel.from_counts(params["on_mean"], params["off_mean"],
                                          params["threshold"])
    return DetectionModel.from_efficiencies(params["eta0"], params["eta1"])


def _cmd_zeno(params: dict, out) -> int:
    detection = _detection_from(params)
    rows = []
    if params["mode"] == "survival":
        try:
            fractions = [int(tok) for tok in str(params["fractions"]).split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad fractions list: {exc}")
        if not fractions:
            raise ConfigError("fractions list is empty")
        for k, n in enumerate(fractions):
            cfg = ZenoConfig(n_fractions=n, sequences=params["sequences"],
                             total_area=params["theta_total"], detection=detection,
                             prep_efficiency=params["prep_efficiency"])
            raw, _records = simulate_fractionated_pi(cfg, seed=params["seed"] + k)
            corrected = corrected_survival(raw, cfg)
            scale = cfg.prep_efficiency * detection.eta0**n
            stderr = math.sqrt(max(raw * (1.0 - raw), 0.0) / cfg.sequences) / scale
            theory = survival_probability(params["theta_total"] / n, n)
            rows.append((n, theory, corrected, stderr))
    elif params["mode"] == "runlength":
        traj = simulate_alternating(params["theta"], params["pairs"], seed=params["seed"],
                                    detection=detection)
        dist = run_length_distribution(traj)
        total_runs = int(np.count_nonzero(np.diff(traj.results)))
        for q in range(1, params["qmax"] + 1):
            ratio = run_length_ratio(dist, q)
            theory = survival_probability(params["theta"], q - 1)
            n_q = dist.get(q, 0.0) * total_runs
            n_1 = dist.get(1, 0.0) * total_runs
            stderr = ratio * math.sqrt(1.0 / n_q + 1.0 / n_1) if n_q and n_1 else 0.0
            rows.append((q, theory, ratio, stderr))
    else:
        raise ConfigError(f"unknown zeno mode {params['mode']!r}")
    _write_csv(out, _meta("zeno", params), ["N_or_q", "theory", "simulated", "stderr"], rows)
    return 0


def _cmd_estimate(params: dict, out) -> int:
    kind = _STRATEGY_ALIASES.get(params["strategy"], params["strategy"])
    imperfections = ImperfectionParams(lam=params["lambda"], delta_eta=params["delta_eta"])
    mean, stderr, fidelities = mean_fidelity_experiment(
        params["states"], params["n"], kind, imperfections, seed=params["seed"])
    meta = _meta("estimate", params)
    summary = {
        "meta": meta,
        "mean": mean,
        "stderr": stderr,
        "strategy": kind,
        "N": params["n"],
        "states": params["states"],
    }
    if out is not None:
        rows = [(i, f) for i, f in enumerate(fidelities)]
        _write_csv(out, meta, ["state_index", "fidelity"], rows)
        _write_json(os.path.splitext(out)[0] + ".json", summary)
    _write_json(None, summary)
    return 0


def _cmd_channel(params: dict, out) -> int:
    if params["spec"] is None:
        raise ConfigError("channel requires --spec pointing to a JSON file")
    try:
        with open(params["spec"]) as fh:
            spec = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read channel spec: {exc}")
    try:
        channel = channel_from_spec(spec)
    except ValueError as exc:
        raise ConfigError(str(exc))
    if params["shots"] > 0:
        estimate, errors = tomography_sampled(channel, params["shots"], seed=params["seed"])
        m_err, v_err = errors.m_err, errors.v_err
    else:
        estimate = tomography_exact(channel)
        m_err, v_err = np.zeros((3, 3)), np.zeros(3)
    payload = {
        "meta": _meta("channel", params),
        "m": estimate.m.tolist(),
        "v": estimate.v.tolist(),
        "m_stderr": m_err.tolist(),
        "v_stderr": v_err.tolist(),
    }
    _write_json(out, payload)
    return 0


def _format_j_table(j_hz: np.ndarray) -> str:
    n = j_hz.shape[0]
    header = ["   i"] + [f"J_i{j + 1}".rjust(9) for j in range(n - 1)]
    lines = ["".join(header)]
    for i in range(n):
        cells = [f"{i + 1:4d}"]
        for j in range(n - 1):
            cells.append(f"{j_hz[i, j]:9.2f}" if j < i else " " * 9)
        lines.append("".join(cells))
    return "\n".join(lines)


def _cmd_chain(params: dict, out) -> int:
    species_key = params["species"].lower()
    if species_key not in constants.SPECIES_REGISTRY:
        raise ConfigError(f"unknown species {params['species']!r}; "
                          f"known: {sorted(constants.SPECIES_REGISTRY)}")
    species = constants.SPECIES_REGISTRY[species_key]
    nu1 = 2.0 * math.pi * params["nu1_khz"] * 1e3
    trap = TrapConfig(nu1=nu1, n_ions=params["n"], b=params["gradient"], b0=params["b0"])
    weak_field = not params["no_weak_field"]
    modes, coupling = spin_spin_couplings(species, trap, weak_field=weak_field)
    payload = {
        "meta": _meta("chain", params),
        "species": species.name,
        "weak_field_limit": weak_field,
        "zeta": length_scale(species, nu1),                 # m
        "positions_um": (modes.z0 * 1e6).tolist(),
        "mode_freqs_khz": (modes.nu / (2.0 * math.pi * 1e3)).tolist(),
        "required_gradient": (                              # T/m
            required_gradient(species, nu1, trap.n_ions) if trap.n_ions >= 2 else None),
        "J_hz": coupling.in_hz().tolist(),
    }
    _write_json(out, payload)
    if params["table"]:
        sys.stdout.write(_format_j_table(coupling.in_hz()) + "\n")
    return 0


_DISPATCH = {
    "rabi": _cmd_rabi,
    "zeno": _cmd_zeno,
    "estimate": _cmd_estimate,
    "channel": _cmd_channel,
    "chain": _cmd_chain,
}


def run(argv) -> int:
    """Parse argv, execute one subcommand, write artifacts; returns exit code."""
    override_path = os.environ.get(CONSTANTS_ENV)
    if override_path:
        try:
            with open(override_path) as fh:
                constants.apply_overrides(json.load(fh))
        except (OSError, json.JSONDecodeError, ValueError) as exc:
            print(f"error: bad constants table {override_path}: {exc}", file=sys.stderr)
            return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        params = _merge_params(args.command, args)
        return _DISPATCH[args.command](params, args.out)
    except (ConfigError, ValueError) as exc:
        if isinstance(exc, NUMERICAL_ERRORS):
            print(f"error: {exc}", file=sys.stderr)
            return 1
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()

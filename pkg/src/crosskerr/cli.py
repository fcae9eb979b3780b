"""Batch front-end: evolve, compare, entropy, bogoliubov, sweep.

All output is CSV with '#'-prefixed provenance lines first, fixed float
formatting (17 significant digits) and fixed reduction order, so identical
manifests produce byte-identical files regardless of worker count.

Exit codes: 0 success, 1 configuration/usage error, 2 numerical failure
(including a FAIL verdict from ``compare``).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .branches import (
    NumericalError,
    bogoliubov_constant,
    compute_branch,
    polar_g2,
)
from .config import ConfigError, SystemConfig, config_hash, load_config
from .fock import (
    apply_decoupled,
    block_fidelities,
    expect_phonons,
    fidelity,
    prepare_initial,
    propagate,
    purity,
    reduced_mech,
)
from .observables import (
    ENTROPY_VARIANTS,
    chi2_is_zero,
    compute_branches,
    delta_phonon_no_squeezing,
    linear_entropy,
    mean_b,
    phonon_number,
)
from .profiles import ConstantProfile


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _grid(config: SystemConfig) -> np.ndarray:
    return np.linspace(0.0, config.tau_max, config.samples)


def _provenance(config: SystemConfig, variant: str) -> list[str]:
    return [
        f"# config_hash={config_hash(config)}",
        f"# eps_quad={_fmt(config.eps_quad)} eps_ode={_fmt(config.eps_ode)} "
        f"eps_tail={_fmt(config.eps_tail)} oracle_dt={_fmt(config.oracle_dt)}",
        f"# cutoff_a={config.cutoff_a} cutoff_b={config.cutoff_b}",
        f"# entropy_variant={variant}",
    ]


def _write(out_path, lines: list[str]) -> None:
    text = "\n".join(lines) + "\n"
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)


def _apply_overrides(config: SystemConfig, args) -> SystemConfig:
    over = {}
    if args.cutoff_b is not None:
        over["cutoff_b"] = args.cutoff_b
    if args.oracle_dt is not None:
        over["oracle_dt"] = args.oracle_dt
    return config.with_overrides(**over) if over else config


def cmd_evolve(config: SystemConfig, args, entropy_only: bool = False) -> int:
    no_sq = chi2_is_zero(config)
    if not no_sq and entropy_only:
        raise ConfigError("entropy requires chi2 == 0")
    grid = _grid(config)
    branches = compute_branches(config, grid, n_max=args.n_max,
                                workers=args.workers)
    nb = phonon_number(config, branches)
    mb = mean_b(config, branches)
    sn = linear_entropy(config, branches, args.entropy_denominator) if no_sq else None
    if sn is None:
        sys.stderr.write("warning: chi2 != 0, S_N column left empty\n")
    lines = _provenance(config, args.entropy_denominator)
    if entropy_only:
        lines.append("tau,S_N_analytic")
        for i, tau in enumerate(grid):
            lines.append(f"{_fmt(tau)},{_fmt(sn[i])}")
    else:
        lines.append("tau,N_b_analytic,Re_b,Im_b,S_N_analytic")
        for i, tau in enumerate(grid):
            s = _fmt(sn[i]) if sn is not None else ""
            lines.append(f"{_fmt(tau)},{_fmt(nb[i])},{_fmt(mb[i].real)},"
                         f"{_fmt(mb[i].imag)},{s}")
    _write(args.out, lines)
    return 0


def cmd_compare(config: SystemConfig, args) -> int:
    grid = _grid(config)
    branches = compute_branches(config, grid, n_max=args.n_max,
                                workers=args.workers)
    no_sq = chi2_is_zero(config)
    nb = phonon_number(config, branches)
    sn = linear_entropy(config, branches, args.entropy_denominator) if no_sq else None
    state0 = prepare_initial(config)
    cur = state0
    rows = []
    worst_rel = 0.0
    worst_sn = 0.0
    for i, tau in enumerate(grid):
        if i:
            cur = propagate(cur, config, tau, tau_start=grid[i - 1])
        nbo = expect_phonons(cur)
        abs_err = abs(nb[i] - nbo)
        rel_err = abs_err / abs(nbo) if nbo != 0.0 else abs_err
        worst_rel = max(worst_rel, rel_err)
        sno = 1.0 - purity(reduced_mech(cur))
        dec = apply_decoupled(config, branches, i, state0)
        if no_sq:
            fid = fidelity(cur, dec)[0]
        else:
            fid = float(np.min(block_fidelities(cur, dec)))
        s_an = ""
        if sn is not None:
            s_an = _fmt(sn[i])
            worst_sn = max(worst_sn, abs(sn[i] - sno))
        rows.append(f"{_fmt(tau)},{_fmt(nb[i])},{_fmt(nbo)},{_fmt(abs_err)},"
                    f"{_fmt(rel_err)},{s_an},{_fmt(sno)},{_fmt(fid)}")
    ok = worst_rel <= args.tolerance and worst_sn <= args.tolerance
    lines = _provenance(config, args.entropy_denominator)
    lines.append("tau,N_b_analytic,N_b_oracle,abs_err,rel_err,"
                 "S_N_analytic,S_N_oracle,fidelity_min")
    lines.extend(rows)
    lines.append(f"# verdict: {'PASS' if ok else 'FAIL'} "
                 f"tolerance={_fmt(args.tolerance)} "
                 f"max_rel_err={_fmt(worst_rel)} max_sn_err={_fmt(worst_sn)}")
    _write(args.out, lines)
    return 0 if ok else 2


def cmd_bogoliubov(config: SystemConfig, args) -> int:
    grid = _grid(config)
    n_max = args.n_max if args.n_max is not None else 5
    constant = config.all_constant()
    lines = _provenance(config, args.entropy_denominator)
    lines.append("tau,n,route,Re_alpha,Im_alpha,Re_beta,Im_beta,"
                 "identity_residual,route_deviation")
    for n in range(n_max + 1):
        branch = compute_branch(config, n, grid)
        closed = None
        if constant:
            polar = polar_g2(config.g2_plus.value, config.g2_minus.value)
            closed = bogoliubov_constant(n, grid, polar.chi2, polar.phi2,
                                         config.g2_prime.value)
            for i, tau in enumerate(grid):
                a, b = closed[0][i], closed[1][i]
                res = abs(abs(a) ** 2 - abs(b) ** 2 - 1.0)
                lines.append(f"{_fmt(tau)},{n},closed,{_fmt(a.real)},{_fmt(a.imag)},"
                             f"{_fmt(b.real)},{_fmt(b.imag)},{_fmt(res)},")
        for i, tau in enumerate(grid):
            a, b = branch.alpha[i], branch.beta[i]
            res = abs(abs(a) ** 2 - abs(b) ** 2 - 1.0)
            dev = ""
            if closed is not None:
                dev = _fmt(max(abs(a - closed[0][i]), abs(b - closed[1][i])))
            lines.append(f"{_fmt(tau)},{n},ode,{_fmt(a.real)},{_fmt(a.imag)},"
                         f"{_fmt(b.real)},{_fmt(b.imag)},{_fmt(res)},{dev}")
    _write(args.out, lines)
    return 0


_SWEEP_PARAMS = ("g1_plus", "g2_prime", "chi2", "mu", "r_T")


def _sweep_config(config: SystemConfig, parameter: str, value: float) -> SystemConfig:
    if parameter == "g1_plus":
        return config.with_overrides(g1_plus=ConstantProfile(value))
    if parameter == "g2_prime":
        return config.with_overrides(g2_prime=ConstantProfile(value))
    if parameter == "chi2":
        return config.with_overrides(g2_plus=ConstantProfile(value),
                                     g2_minus=ConstantProfile(0.0))
    if parameter == "mu":
        return config.with_overrides(mu=complex(value))
    if parameter == "r_T":
        return config.with_overrides(r_T=value)
    raise ConfigError(f"unknown sweep parameter {parameter!r}")


def cmd_sweep(config: SystemConfig, args) -> int:
    if args.parameter not in _SWEEP_PARAMS:
        raise ConfigError(f"sweep parameter must be one of {_SWEEP_PARAMS}")
    try:
        start, stop, count = args.range.split(":")
        values = np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise ConfigError(f"bad range spec {args.range!r}: {exc}") from exc
    lines = _provenance(config, args.entropy_denominator)
    lines.append(f"# sweep parameter={args.parameter}")
    lines.append("value,N_b,delta_N_b,Re_b,Im_b,S_N")
    grid = _grid(config)
    for value in values:
        cfg = _sweep_config(config, args.parameter, float(value))
        branches = compute_branches(cfg, grid, workers=args.workers)
        nb = phonon_number(cfg, branches)[-1]
        mb = mean_b(cfg, branches)[-1]
        if chi2_is_zero(cfg):
            dnb = _fmt(delta_phonon_no_squeezing(cfg, branches)[-1])
            sn = _fmt(linear_entropy(cfg, branches, args.entropy_denominator)[-1])
        else:
            dnb = sn = ""
        lines.append(f"{_fmt(value)},{_fmt(nb)},{dnb},{_fmt(mb.real)},"
                     f"{_fmt(mb.imag)},{sn}")
    _write(args.out, lines)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crosskerr",
        description="Cross-Kerr two-oscillator evolution: analytic series "
                    "and truncated-Fock oracle comparisons.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("evolve", "compare", "entropy", "bogoliubov", "sweep"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", default=None, help="output CSV path (default stdout)")
        p.add_argument("--tolerance", type=float, default=1e-6)
        p.add_argument("--oracle-dt", type=float, default=None)
        p.add_argument("--cutoff-b", type=int, default=None)
        p.add_argument("--n-max", type=int, default=None)
        p.add_argument("--entropy-denominator", choices=ENTROPY_VARIANTS,
                       default="corrected")
        p.add_argument("--workers", type=int, default=1)
        if name == "sweep":
            p.add_argument("--parameter", required=True)
            p.add_argument("--range", required=True,
                           help="start:stop:count")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _apply_overrides(load_config(args.config), args)
        if args.command == "evolve":
            return cmd_evolve(config, args)
        if args.command == "entropy":
            return cmd_evolve(config, args, entropy_only=True)
        if args.command == "compare":
            return cmd_compare(config, args)
        if args.command == "bogoliubov":
            return cmd_bogoliubov(config, args)
        if args.command == "sweep":
            return cmd_sweep(config, args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except NumericalError as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

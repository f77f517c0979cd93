"""Bosonic Kitaev chain command line

Every command reads a JSON run configuration (see `kitaev.config`), writes
its main data table to `--out` (default `<command>.csv`), companion tables
next to it, and a JSON sidecar `<stem>.json` with the configuration echo,
package versions, wall time, timestamp and summary results.

# Examples

The stable modes of an odd chain with `sqrt(t_R/t_L) = 1.15`

    kitaev stable-mode --config chain.json --out modes.csv

with `chain.json` containing

    {"chain": {"t_L": 1.0, "t_R": 1.3225, "L": 51}}

outputs `modes.csv` with columns `site`, `right`, `left`.

The chiral diffusion of an X-quadrature packet prepared at the band top,
sampled at `sqrt(Delta^2-J^2) tau = 0, 20, 40`

    kitaev evolve --config diffusion.json --out top.csv

with `diffusion.json` containing

    {
        "params": {"J": 1, "Delta": 7.20155, "L": 120},
        "wavepacket": {"n0": 60, "sigma": 6, "band": "top", "tilt": true},
        "times": {"snapshots": [0, 20, 40], "scaled": true}
    }

outputs the gain-subtracted lattice profiles in `top.csv` and the
closed-form continuum profiles in `top_continuum.csv`.

The gap scan of the inter-chain coupling

    kitaev gap-scan --config scan.json --threads 4

with `scan.json` containing

    {"scan": {"L": [50], "Delta": 0.2, "mu": [1e-14, 1e-6]}}

outputs `gap-scan.csv` with the predicted splitting as mantissa and
exponent, the exact splitting where double precision resolves it, and a
validity flag per row.

# Exit codes

- `0`: success

- `1`: domain failure (wrong regime, unresolvable splitting, integration
  failure, all sweep points failed)

- `2`: usage or configuration error
"""

import sys
import json
import argparse
import warnings
import dataclasses

import numpy as np
import pandas as pd

from kitaev.errors import KitaevError, ConfigError, RegimeError, IntegrationError
from kitaev.config import RunConfig, load
from kitaev.output import Outputs, companion_name
from kitaev.model import (ModelParams, Band, Phase, Regime, reduce_gauge, hn_chains,
    build_generator_hn, build_generator_coupled, continuum_coefficients,
    effective_theory_at_K)
from kitaev.spectral import (eigs, localization_metrics, stationary_modes,
    track_doublet)
from kitaev.dynamics import (FieldState, WavepacketSpec, Trajectory, gaussian_wavepacket,
    evolve_exact, evolve_rk4, subtract_gain, continuum_gaussian, observables,
    relative_mismatch, check_boundary, warn_horizon, reliable_horizon)
from kitaev.geometry import (HyperbolicMetric, build_tree, tree_edges,
    layer_uniform_state, layer_chain, evolve_tree, reduce_tree, curved_operator,
    band_edge_values, convergence_study, metric_weights)
from kitaev.perturbation import GapScan, asymptotic_scaling
from kitaev.sweep import sweep, resolve_threads

E_OK = 0
"""Exit code on success"""

E_FAILED = 1
"""Exit code on failure"""

E_SYNTAX = 2
"""Exit code on syntax error"""

COMMANDS = ("spectrum","evolve","stable-mode","tree-check","curved-op","gap-scan","sweep")
"""Subcommands"""

TREE_TOLERANCE = 1e-8
"""Largest accepted difference between a reduced tree and its chain"""

def _override(config:RunConfig,items:list[str]) -> RunConfig:
    # --param NAME=VALUE replaces a model or chain parameter
    if not items:
        return config
    target = "params" if config.params is not None else "chain"
    data = config.to_dict()
    if target not in data:
        raise ConfigError("--param requires 'params' or 'chain' in the configuration")
    for item in items:
        name,sep,value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param {item!r} is not in NAME=VALUE form")
        try:
            data[target][name] = json.loads(value)
        except json.JSONDecodeError as err:
            raise ConfigError(f"--param {name}={value!r} is not a JSON value") from err
    return RunConfig.from_dict(data)

def _hbar(config:RunConfig) -> float:
    return config.params.hbar if config.params is not None else 1.0

def _reduced(config:RunConfig):
    if config.params is None:
        raise ConfigError("configuration needs 'params'")
    phase,reduced = reduce_gauge(config.params)
    if phase == Phase.TRIVIAL:
        raise RegimeError(f"Delta={config.params.Delta} is below J cos(theta), "
            "the trivial phase has no Hatano-Nelson chains")
    return reduced

def _chain(config:RunConfig,target:str="X"):
    """Configured chain, or the X or P chain of the configured model"""
    if config.chain is not None:
        return config.chain
    if config.params is None:
        raise ConfigError("configuration needs 'params' or 'chain'")
    chains = hn_chains(_reduced(config))
    match str(target).upper():
        case "X":
            return chains.x_chain
        case "P":
            return chains.p_chain
        case _:
            raise ConfigError(f"target={target!r} is invalid, must be 'X' or 'P'")

def _spectrum(config:RunConfig,outputs:Outputs) -> dict:
    section = config.section("spectrum")
    kind = section.get("chain","coupled")
    if config.chain is not None or kind.upper() in ("X","P"):
        chain = _chain(config,kind if config.chain is None else "X")
        g = build_generator_hn(chain)
        regime = chain.regime()
    elif kind == "coupled":
        g = build_generator_coupled(_reduced(config))
        regime = None
    else:
        raise ConfigError(f"spectrum chain={kind!r} is invalid, must be 'x', 'p' or 'coupled'")
    spec = eigs(g,vectors=True,method=section.get("method","auto"))
    data = spec.to_frame()
    if section.get("metrics",False):
        metrics = localization_metrics(spec)
        data["center_of_mass"] = metrics.center_of_mass.to_numpy()
        data["decay_rate"] = metrics.decay_rate.to_numpy()
    outputs.write_csv(data)
    return {
        "generator":g.label,
        "fingerprint":spec.fingerprint,
        "method":spec.method,
        "regime":regime,
        "size":spec.size,
        "max_residual":float(np.nanmax(spec.residuals)),
        }

def _evolve(config:RunConfig,outputs:Outputs) -> dict:
    # pylint: disable=too-many-locals
    packet = config.require("wavepacket")
    times = config.require("times")
    chain = _chain(config,packet.get("target","X"))
    band = packet.pop("band",None)
    coeffs = None
    if band is not None:
        if "K0" in packet:
            raise ConfigError("wavepacket gives both 'band' and 'K0'")
        coeffs = continuum_coefficients(chain,Band(band),_hbar(config))
        packet["K0"] = coeffs.K0
    elif chain.regime() != Regime.EXCEPTIONAL:
        coeffs = effective_theory_at_K(chain,packet.get("K0",0.0),_hbar(config))
    spec = WavepacketSpec.from_dict(packet)

    snapshots = np.asarray(times.get("snapshots",[]),dtype=float)
    if snapshots.ndim != 1 or len(snapshots) == 0:
        raise ConfigError("times 'snapshots' must be a non-empty list")
    if times.get("scaled",True):
        if chain.scale == 0:
            raise RegimeError(f"exceptional chain t_L={chain.t_L}, t_R={chain.t_R} "
                "has no time scale, use scaled=false")
        taus = snapshots / chain.scale
    else:
        taus = snapshots

    g = build_generator_hn(chain)
    s0 = gaussian_wavepacket(spec,chain)
    method = times.get("method","exact")
    match method:
        case "exact":
            traj = evolve_exact(eigs(g),s0,taus)
        case "rk4":
            traj = evolve_rk4(g,s0,taus[-1],times.get("dt"),times=taus)
        case _:
            raise ConfigError(f"times method={method!r} is invalid, must be 'exact' or 'rk4'")
    if coeffs is not None and coeffs.diffusion.real < 0:
        warn_horizon(chain,taus)
    for k in range(len(traj)):
        check_boundary(traj.state(k))

    gain = coeffs.gamma if band is not None and coeffs.gamma is not None else 0.0
    if times.get("subtract_gain",True) and gain:
        traj = subtract_gain(traj,gain)
    outputs.write_csv(traj.to_frame())

    results = {
        "fingerprint":traj.fingerprint,
        "chain":chain.to_dict(),
        "method":method,
        "dt":times.get("dt"),
        "tau":taus,
        "gain":gain,
        "lattice":[observables(traj.state(k))._asdict() for k in range(len(traj))],
        }
    if coeffs is None:
        return results

    profiles = []
    for tau in taus:
        try:
            profile = continuum_gaussian(coeffs,spec,tau)
        except RegimeError as err:
            warnings.warn(str(err))
            profile = np.full(chain.L,np.nan)
        profiles.append(profile * np.exp(-gain*tau) if times.get("subtract_gain",True) else profile)
    continuum = Trajectory(taus,np.array(profiles),traj.fingerprint)
    outputs.write_csv(continuum.to_frame(),companion_name(outputs.path,"continuum"))
    results["coefficients"] = dataclasses.asdict(coeffs)
    results["horizon"] = reliable_horizon(chain) if coeffs.diffusion.real < 0 else None
    results["continuum"] = [observables(x)._asdict() if np.isfinite(x).all() else None
        for x in continuum.values]
    results["mismatch"] = [relative_mismatch(x,y) if np.isfinite(y).all() else None
        for x,y in zip(traj.values,continuum.values)]
    return results

def _stable_mode(config:RunConfig,outputs:Outputs) -> dict:
    chain = _chain(config,config.section("wavepacket").get("target","X"))
    right,left = stationary_modes(chain)
    if right is None and left is None:
        raise RegimeError(f"chain t_L={chain.t_L}, t_R={chain.t_R}, L={chain.L} "
            "has no stationary mode (L must be odd)")
    sites = np.arange(1,chain.L+1)
    outputs.write_csv(pd.DataFrame({
        "site":sites,
        "right":right if right is not None else np.nan,
        "left":left if left is not None else np.nan,
        }))
    g = build_generator_hn(chain)
    results = {"chain":chain.to_dict(),"generator":g.fingerprint()}
    if right is not None:
        results["right_residual"] = float(np.linalg.norm(g.matrix @ right,np.inf)
            / (g.norm() * np.linalg.norm(right,np.inf)))
        results["envelope_ratio"] = float(right[2]/right[0]) if chain.L > 2 else None
    if left is not None:
        results["left_residual"] = float(np.linalg.norm(left @ g.matrix,np.inf)
            / (g.norm() * np.linalg.norm(left,np.inf)))
    return results

def _tree_check(config:RunConfig,outputs:Outputs) -> dict:
    # pylint: disable=invalid-name
    section = config.require("tree")
    tree = build_tree(section.get("q",2),section.get("N",12))
    t = section.get("t",1.0)
    times = np.asarray(section.get("times",np.linspace(0,10,11).tolist()),dtype=float)
    profile = section.get("profile")
    if profile is None:
        layer = section.get("layer",1)
        if not 1 <= layer <= tree.N:
            raise ConfigError(f"tree layer={layer} is outside 1..{tree.N}")
        profile = np.zeros(tree.N)
        profile[layer-1] = 1.0
    profile = np.asarray(profile,dtype=complex)
    method = section.get("method","exact")
    traj = evolve_tree(tree,t,layer_uniform_state(tree,profile),times,method,section.get("dt"))
    reduced = reduce_tree(tree,traj,TREE_TOLERANCE)

    chain = layer_chain(tree,t)
    expected = evolve_exact(eigs(build_generator_hn(chain)),
        FieldState(profile),times,scale=-1j,real=False)
    deviation = float(np.abs(reduced.values - expected.values).max())
    if deviation > TREE_TOLERANCE:
        raise IntegrationError(f"reduced tree q={tree.q}, N={tree.N} deviates from "
            f"its chain by {deviation:.3g}")
    outputs.write_csv(reduced.to_frame(prefix="layer"))
    if section.get("edges",False):
        outputs.write_csv(tree_edges(tree),companion_name(outputs.path,"edges"))
    weights = metric_weights(tree)
    norms = [observables(x,weights).weighted_norm for x in reduced.values]
    return {
        "q":tree.q,
        "N":tree.N,
        "nodes":tree.size,
        "structure":tree.check(),
        "chain":chain.to_dict(),
        "max_deviation":deviation,
        "norm_drift":float(np.ptp(norms)),
        }

def _curved_op(config:RunConfig,outputs:Outputs) -> dict:
    section = config.section("curved")
    chain = _chain(config,section.get("target","X"))
    regime = chain.regime()
    default = Band.BOTTOM if regime == Regime.OSCILLATORY else Band.TOP
    band = Band(section.get("band",default))
    count = section.get("levels",5)
    coeffs = continuum_coefficients(chain,band,_hbar(config))
    metric = HyperbolicMetric.from_chain(chain)
    g = curved_operator(chain,band,_hbar(config))
    outputs.write_csv(g.to_frame())
    curved = band_edge_values(g,regime,band,count)
    lattice = band_edge_values(build_generator_hn(chain),regime,band,count)
    if regime == Regime.OSCILLATORY:
        constant = coeffs.Gamma - coeffs.hbar**2*coeffs.kappa/(8*coeffs.m)
    else:
        constant = coeffs.gamma
    results = {
        "generator":g.label,
        "fingerprint":g.fingerprint(),
        "regime":regime,
        "band":band,
        "kappa":metric.kappa,
        "orientation":metric.orientation,
        "diagonal_constant":constant,
        "curved":curved,
        "lattice":lattice,
        "error":float(np.abs(curved - lattice).max()),
        }
    refine = section.get("refine",0)
    if refine:
        study = convergence_study(chain,band,levels=refine+1,count=1,hbar=_hbar(config))
        results["convergence"] = study.to_dict(orient="records")
    return results

def _gap_scan(config:RunConfig,outputs:Outputs,threads:int) -> dict:
    section = config.require("scan")
    params = config.params
    grid = {
        "L":section.get("L",[params.L] if params else []),
        "mu":section.get("mu",[params.mu] if params else []),
        "Delta":section.get("Delta",params.Delta if params else None),
        "J":section.get("J",params.J if params else 1.0),
        "exact":section.get("exact",True),
        }
    if grid["Delta"] is None:
        raise ConfigError("scan needs 'Delta' or 'params'")
    data = GapScan(**grid,threads=threads)
    outputs.write_csv(data[["L","mu","dE_pred_mantissa","dE_pred_exp10","dE_exact",
        "rel_err","validity_flag","error"]])
    results = {"flags":data.validity_flag.value_counts().to_dict()}
    try:
        fit = asymptotic_scaling(data)
        results["fit"] = fit._asdict()
    except (ValueError,RegimeError) as err:
        warnings.warn(f"scaling fit skipped: {err}")
        results["fit"] = None
    levels = section.get("levels")
    if levels:
        base = params if params is not None \
            else ModelParams(J=grid["J"],Delta=grid["Delta"],L=min(grid["L"]))
        base = base.replace(**{x:y for x,y in levels.items() if x != "mu"})
        table = track_doublet(base,levels.get("mu",[]))
        outputs.write_csv(table,companion_name(outputs.path,"levels"))
    return results

def _sweep(config:RunConfig,outputs:Outputs,threads:int) -> tuple[dict,bool]:
    section = config.require("grid")
    data = sweep(section,threads)
    outputs.write_csv(data)
    failed = int((data["error"] != "").sum())
    return {"points":len(data),"failed":failed},data.succeeded()


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kitaev",
        description="Bosonic Kitaev chain simulator",
        epilog="See https://www.eudoxys.com/kitaev for documentation. ",
        )
    parser.add_argument("command",
        choices=COMMANDS,
        help="workflow to run")
    parser.add_argument("-c","--config",
        required=True,
        help="set JSON run configuration file")
    parser.add_argument("-o","--out",
        help="set main output CSV file name (default <command>.csv)")
    parser.add_argument("--param",
        action="append",
        default=[],
        metavar="NAME=VALUE",
        help="override a model or chain parameter (repeatable)")
    parser.add_argument("--threads",
        type=int,
        help="set worker count (default KITAEV_THREADS or the CPU count)")
    parser.add_argument("--warning",
        action="store_true",
        help="enable warning messages from python")
    parser.add_argument("--debug",
        action="store_true",
        help="enable debug traceback on exceptions")
    return parser

def run(argv:list[str]) -> int:
    """Run one command

    # Arguments

    - `argv`: command line arguments without the program name

    # Returns

    - `int`: exit code
    """
    # pylint: disable=too-many-return-statements,too-many-branches
    args = None
    try:

        # parse arguments
        args = _parser().parse_args(argv)

        # setup warning handling
        if not args.warning:
            warnings.showwarning = lambda *x:print(
                f"WARNING [{__package__}]:",
                x[0],
                flush=True,
                file=sys.stderr,
                )

        config = _override(load(args.config),args.param)
        path = args.out or f"{args.command}.csv"
        status = E_OK
        with Outputs(path,config.to_dict()) as outputs:

            match args.command:

                case "spectrum":
                    results = _spectrum(config,outputs)

                case "evolve":
                    results = _evolve(config,outputs)

                case "stable-mode":
                    results = _stable_mode(config,outputs)

                case "tree-check":
                    results = _tree_check(config,outputs)

                case "curved-op":
                    results = _curved_op(config,outputs)

                case "gap-scan":
                    results = _gap_scan(config,outputs,resolve_threads(args.threads))

                case "sweep":
                    results,succeeded = _sweep(config,outputs,resolve_threads(args.threads))
                    if not succeeded:
                        status = E_FAILED

                case _:
                    raise ConfigError(f"command={args.command!r} is invalid")

            outputs.write_sidecar(args.command,results)
        return status

    except SystemExit as err:

        # argparse usage errors and --help
        return err.code if isinstance(err.code,int) else E_SYNTAX

    except KitaevError as err:

        if getattr(args,"debug",False):
            raise

        print(f"ERROR [{__package__}]: {err}",file=sys.stderr)
        return E_FAILED

    except (ValueError,KeyError,TypeError,OSError) as err:

        if getattr(args,"debug",False):
            raise

        print(f"ERROR [{__package__}]: {type(err).__name__}: {err}",file=sys.stderr)
        return E_SYNTAX

    # pylint: disable=broad-exception-caught
    except Exception as err:

        if getattr(args,"debug",False):
            raise

        print(f"ERROR [{__package__}]: {type(err).__name__}: {err}",file=sys.stderr)
        return E_FAILED

def main(*args:list[str]) -> int:
    """Bosonic Kitaev chain main command line processor

    # Argument

    - `*args`: command line arguments (`None` is `sys.argv`)

    # Returns

    - `int`: return/exit code
    """
    return run(list(args) if args else sys.argv[1:])

if __name__ == "__main__":
    sys.exit(main())

"""Concurrent parameter sweeps

Grid points are evaluated by a `multiprocessing` worker pool. Results are
gathered in grid order regardless of completion order, so a sweep with one
worker and a sweep with many produce the same table.

# Example

    from kitaev.sweep import Sweep
    print(Sweep(L=[10,20,30],Delta=[0.1,0.2,0.4],mu=[1e-6],target="prediction"))
"""

import os
import math
from multiprocessing import Pool

import pandas as pd

from kitaev.model import ModelParams
from kitaev.spectral import doublet_gap
from kitaev.perturbation import gap_prediction, validity_flag

THREADS_ENV = "KITAEV_THREADS"
"""Environment variable with the default worker count"""

def resolve_threads(threads:int|None=None) -> int:
    """Worker count from the argument, else `KITAEV_THREADS`, else the CPU count"""
    if threads is None:
        value = os.environ.get(THREADS_ENV)
        if value is None:
            return os.cpu_count() or 1
        try:
            threads = int(value)
        except ValueError as err:
            raise ValueError(f"{THREADS_ENV}={value!r} is not an integer") from err
    if threads < 1:
        raise ValueError(f"threads={threads} must be at least 1")
    return threads

def run_grid(func,points:list,threads:int=1) -> list:
    """Evaluate `func` on every point, returning results in point order

    # Arguments

    - `func`: picklable function of one point

    - `points`: grid points

    - `threads`: worker count (1 runs inline)

    # Returns

    - `list`: results in the order of `points`
    """
    if threads <= 1 or len(points) <= 1:
        return [func(x) for x in points]
    with Pool(min(threads,len(points))) as pool:
        return list(pool.imap(func,points))

def _prediction(params:ModelParams) -> list:
    result = gap_prediction(params)
    return [result.mantissa,result.exp10]

def _gap(params:ModelParams) -> list:
    result = gap_prediction(params,exact=True)
    return [result.mantissa,result.exp10,result.dE_exact,result.rel_err,
        validity_flag(params,result,True)]

def _doublet(params:ModelParams) -> list:
    (lower,upper),gap = doublet_gap(params)
    return [lower,upper,gap]

TARGETS = {
    "prediction":(_prediction,["dE_pred_mantissa","dE_pred_exp10"]),
    "gap":(_gap,["dE_pred_mantissa","dE_pred_exp10","dE_exact","rel_err","validity_flag"]),
    "doublet":(_doublet,["E_lower","E_upper","dE"]),
    }
"""Sweep target routines and their result columns"""

def _sweep_point(point:tuple) -> list:
    # one sweep row, errors recorded in the row
    target,L,Delta,mu,J = point # pylint: disable=invalid-name
    func,columns = TARGETS[target]
    try:
        return [L,Delta,mu,J] + func(ModelParams(J=J,Delta=Delta,L=L,mu=mu)) + [""]
    except Exception as err: # pylint: disable=broad-exception-caught
        return [L,Delta,mu,J] + [math.nan]*len(columns) + [f"{type(err).__name__}: {err}"]

class Sweep(pd.DataFrame):
    """Sweep of a target routine over a `(L, Delta, mu)` grid

    Rows follow the Cartesian grid order `L` major, then `Delta`, then `mu`,
    each in the order given. Failed points leave the result columns empty
    and record the error message in `error`.
    """
    # pylint: disable=invalid-name

    def __init__(self,
        L:list[int],
        Delta:list[float],
        mu:list[float],
        target:str="gap",
        J:float=1.0,
        threads:int=1,
        ):
        """Construct a sweep table

        # Arguments

        - `L`: site counts

        - `Delta`: pairing amplitudes

        - `mu`: chemical potentials

        - `target`: routine evaluated at each point (see `TARGETS`)

        - `J`: tunneling amplitude

        - `threads`: worker count
        """
        if target not in TARGETS:
            raise ValueError(f"target={target!r} is invalid, must be one of {list(TARGETS)}")
        for name,values in (("L",L),("Delta",Delta),("mu",mu)):
            if len(values) == 0:
                raise ValueError(f"{name} grid must not be empty")
        points = [(target,int(x),float(y),float(z),float(J)) for x in L for y in Delta for z in mu]
        columns = ["L","Delta","mu","J"] + TARGETS[target][1] + ["error"]
        super().__init__(pd.DataFrame(run_grid(_sweep_point,points,threads),columns=columns))

    @classmethod
    def makeargs(cls,**kwargs):
        """Return dict of accepted arguments"""
        return {x:y for x,y in kwargs.items() if x in cls.__init__.__annotations__}

    def succeeded(self) -> bool:
        """True when at least one point succeeded"""
        return bool((self["error"] == "").any())

def sweep(grid:dict,threads:int=1) -> Sweep:
    """Run a sweep over a grid `{"L":[...], "Delta":[...], "mu":[...], "target":...}`"""
    return Sweep(**Sweep.makeargs(**grid),threads=threads)

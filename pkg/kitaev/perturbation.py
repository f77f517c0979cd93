"""Degenerate perturbation theory of the ground doublet

At `mu=0` the X and P chains share the ground energy `E0 = -2 sqrt(J^2 -
Delta^2) cos(pi/(L+1))`, with eigenstates localized at opposite edges. A
small `mu` couples them through the 2x2 matrix `M = c sigma_y`, whose
matrix elements are inner products weighted by the curved metric of the
chain receiving the coupling. The splitting `dE = 2|c|` grows as
`mu chi^L / L^3` with `chi^2 = (J+Delta)/(J-Delta)`.

The closed form of `c` is evaluated in the log domain so that splittings far
below the double precision range are reported as a `(mantissa, exp10)` pair.

# Examples

The splitting at `L=50`, `Delta=0.2`, `mu=1e-6`

    from kitaev.model import ModelParams
    from kitaev.perturbation import gap_prediction
    result = gap_prediction(ModelParams(J=1,Delta=0.2,L=50,mu=1e-6),exact=True)
    print(result.dE_pred,result.dE_exact)

outputs approximately

    0.000253 0.000253

A scan over site counts and couplings below the precision floor

    from kitaev.perturbation import GapScan
    print(GapScan(L=[10,20,30],mu=[1e-14,1e-12,1e-10],Delta=0.2))
"""

import math
import dataclasses
import warnings
from typing import NamedTuple

import numpy as np
import pandas as pd

from kitaev.errors import RegimeError, PrecisionError
from kitaev.model import ModelParams, hn_chains
from kitaev.geometry import HyperbolicMetric, metric_weights, curved_inner_product

LOG_MAX = math.log(np.finfo(float).max)
"""Largest natural log representable as a double"""

PRECISION_FLOOR = 1e-10
"""Smallest resolvable splitting relative to the spectral radius"""

class Doublet(NamedTuple):
    """Closed-form ground states of the X and P chains"""
    psi_X:np.ndarray
    psi_P:np.ndarray

class ScalingFit(NamedTuple):
    """Least-squares fit `ln(dE/mu) = slope L + power ln L + const`"""
    slope:float
    power:float
    const:float
    points:int
    finite_size:bool = False

@dataclasses.dataclass(frozen=True)
class PerturbationResult:
    """Perturbative splitting of the ground doublet

    `c` is the coefficient of `M = c sigma_y`; `log_c` is `ln|c|`, which stays
    finite when `c` underflows. `M12` and `M21` are the off-diagonal elements
    of `M`, unset when `c` overflows a double.
    """
    # pylint: disable=invalid-name
    chi:float
    c:float
    log_c:float
    M12:complex|None = None
    M21:complex|None = None
    dE_exact:float|None = None

    @property
    def dE_pred(self) -> float:
        """Predicted splitting `2|c|`"""
        return 2*abs(self.c)

    @property
    def log10(self) -> float:
        """Base-10 log of the predicted splitting"""
        return (math.log(2) + self.log_c) / math.log(10)

    @property
    def exp10(self) -> int:
        """Decimal exponent of the predicted splitting"""
        return math.floor(self.log10) if math.isfinite(self.log10) else 0

    @property
    def mantissa(self) -> float:
        """Decimal mantissa of the predicted splitting"""
        return 10**(self.log10 - self.exp10) if math.isfinite(self.log10) else 0.0

    @property
    def rel_err(self) -> float|None:
        """Relative error of the prediction against the exact splitting"""
        if self.dE_exact is None or self.c == 0:
            return None
        return abs(self.dE_exact - self.dE_pred) / self.dE_pred

def _check(params:ModelParams):
    if not 0 <= params.Delta < params.J:
        raise RegimeError(f"the ground doublet requires 0 <= Delta < J, "
            f"got Delta={params.Delta}, J={params.J}")

def _chi(params:ModelParams) -> float:
    return math.sqrt((params.J + params.Delta) / (params.J - params.Delta))

def ground_doublet(params:ModelParams) -> Doublet:
    """Closed-form ground states of the uncoupled chains

    # Arguments

    - `params`: reduced parameters with `0 <= Delta < J` (`mu` is ignored)

    # Returns

    - `Doublet`: `psi_X(n) = N chi^(n-L) sin(pi n/(L+1)) i^n` and `psi_P(n) =
      N chi^(-(n-1)) sin(pi n/(L+1)) i^n` with `N = sqrt(2/(L+1))`, each of
      unit norm under its own chain metric
    """
    _check(params)
    hn_chains(params)
    L = params.L # pylint: disable=invalid-name
    n = np.arange(1,L+1)
    log_chi = math.log(_chi(params))
    envelope = math.sqrt(2/(L+1)) * np.sin(math.pi*n/(L+1)) * np.array([1,1j,-1,-1j])[n % 4]
    return Doublet(
        np.exp((n-L)*log_chi) * envelope,
        np.exp(-(n-1)*log_chi) * envelope,
        )

def offdiag_elements(params:ModelParams) -> tuple[complex,complex]:
    """Metric-weighted coupling matrix elements

    `M12` is the P-chain metric product of `psi_P` and `psi_X`, `M21` the
    X-chain metric product of `psi_X` and `psi_P`, each multiplied by the
    `-i mu` and `+i mu` couplings of the coupled generator.

    # Arguments

    - `params`: reduced parameters with `0 <= Delta < J`

    # Returns

    - `tuple[complex,complex]`: `(M12, M21)`, equal to `(-i c, +i c)`
    """
    _check(params)
    x_chain,p_chain = hn_chains(params)
    psi_x,psi_p = ground_doublet(params)
    weights_x = metric_weights(HyperbolicMetric.from_chain(x_chain))
    weights_p = metric_weights(HyperbolicMetric.from_chain(p_chain))
    m12 = -1j * params.mu * curved_inner_product(psi_p,psi_x,weights_p)
    m21 = 1j * params.mu * curved_inner_product(psi_x,psi_p,weights_x)
    return complex(m12),complex(m21)

def _log_sinh(x:float) -> float:
    return x + math.log1p(-math.exp(-2*x)) - math.log(2)

def closed_form_log(params:ModelParams) -> tuple[float,float]:
    """Sign and natural log of the closed-form coefficient `c`

    # Arguments

    - `params`: reduced parameters with `0 <= Delta < J`

    # Returns

    - `tuple[float,float]`: `(sign, ln|c|)`; `(0, -inf)` when `mu=0`
    """
    _check(params)
    if params.mu == 0:
        return 0.0,-math.inf
    sign = math.copysign(1.0,params.mu)
    if params.Delta == 0:
        return sign,math.log(abs(params.mu))

    L = params.L # pylint: disable=invalid-name
    J,Delta = params.J,params.Delta
    chi2 = (J + Delta) / (J - Delta)
    chi2m1 = 2*Delta / (J - Delta)
    log_chi = 0.5 * math.log(chi2)
    angle = math.pi / (L+1)
    log_c = math.log(4*abs(params.mu)) \
        + math.log(chi2 + 1) \
        + 2*math.log(math.sin(angle)) \
        + 2*log_chi \
        + _log_sinh((L+1)*log_chi) \
        - math.log(L+1) \
        - math.log(chi2m1) \
        - math.log(chi2m1**2 + 4*chi2*math.sin(angle)**2)
    return sign,log_c

def closed_form_M(params:ModelParams) -> float:
    """Closed-form coefficient `c` of `M = c sigma_y`

    # Exceptions

    - `PrecisionError`: `c` overflows a double
    """
    # pylint: disable=invalid-name
    sign,log_c = closed_form_log(params)
    if log_c > LOG_MAX:
        raise PrecisionError(f"closed form ln(c)={log_c:.1f} overflows for "
            f"L={params.L}, Delta={params.Delta}, J={params.J}, mu={params.mu}")
    return sign * math.exp(log_c)

def gap_prediction(params:ModelParams,exact:bool=False,elements:bool=False) -> PerturbationResult:
    """Predicted doublet splitting

    # Arguments

    - `params`: reduced parameters with `0 <= Delta < J`

    - `exact`: also diagonalize the coupled generator; splittings below the
      precision floor leave `dE_exact` unset

    - `elements`: sum `M12` and `M21` explicitly with `offdiag_elements()`
      instead of taking `(-i c, +i c)` from the closed form

    # Returns

    - `PerturbationResult`: prediction and optional exact splitting. When
      `ln|c|` exceeds the double range `c` is clipped to `exp(LOG_MAX)`,
      `M12` and `M21` are left unset and a warning is issued; `log_c`,
      `mantissa` and `exp10` stay exact.
    """
    # pylint: disable=invalid-name
    sign,log_c = closed_form_log(params)
    M12 = M21 = None
    if not math.isfinite(log_c):
        c = 0.0
        M12 = M21 = 0j
    elif log_c > LOG_MAX:
        warnings.warn(f"closed form ln(c)={log_c:.1f} exceeds the double range for "
            f"L={params.L}, Delta={params.Delta}, mu={params.mu}, c is clipped")
        c = sign * math.exp(LOG_MAX)
    else:
        c = sign * math.exp(log_c)
        M12,M21 = offdiag_elements(params) if elements else (-1j*c,1j*c)
    dE_exact = None
    if exact:
        from kitaev.spectral import doublet_gap # pylint: disable=import-outside-toplevel
        try:
            dE_exact = doublet_gap(params).dE
        except PrecisionError:
            pass
    return PerturbationResult(chi=_chi(params),c=c,log_c=log_c,M12=M12,M21=M21,dE_exact=dE_exact)

def level_spacing(params:ModelParams) -> float:
    """Unperturbed spacing between the ground and first excited levels"""
    angle = math.pi / (params.L+1)
    return 2*math.sqrt(params.J**2 - params.Delta**2) * (math.cos(angle) - math.cos(2*angle))

def validity_flag(params:ModelParams,result:PerturbationResult,exact:bool) -> str:
    """Validity of a prediction: `extrapolated`, `exact` or `formula-only`"""
    if result.log10 > math.log10(0.1*level_spacing(params)):
        return "extrapolated"
    if exact and result.dE_exact is not None:
        return "exact"
    return "formula-only"

def scan_point(point:tuple) -> list:
    """One gap scan row `(L, mu, Delta, J, exact)`, errors recorded in the row"""
    L,mu,Delta,J,exact = point # pylint: disable=invalid-name
    row = [L,mu,Delta,J,0.0,0,0.0,None,None,"failed",""]
    try:
        params = ModelParams(J=J,Delta=Delta,L=L,mu=mu)
        result = gap_prediction(params,exact=exact)
        row[4:7] = [result.mantissa,result.exp10,result.dE_pred]
        row[7] = result.dE_exact
        row[8] = result.rel_err
        row[9] = validity_flag(params,result,exact)
    except Exception as err: # pylint: disable=broad-exception-caught
        row[10] = f"{type(err).__name__}: {err}"
    return row

class GapScan(pd.DataFrame):
    """Gap scan over site counts and chemical potentials

    Rows are ordered by `(L, mu)`. Each row carries the predicted splitting
    as `dE_pred_mantissa` and `dE_pred_exp10`, the exact splitting where
    diagonalization resolves it, and a `validity_flag`:

    - `exact`: the exact splitting is attached

    - `formula-only`: the splitting is below the precision floor, or exact
      diagonalization was not requested

    - `extrapolated`: the prediction exceeds 10% of the unperturbed level
      spacing, outside the validity of perturbation theory

    - `failed`: the point raised an error, recorded in `error`
    """
    # pylint: disable=invalid-name

    COLUMNS = ["L","mu","Delta","J","dE_pred_mantissa","dE_pred_exp10","dE_pred",
        "dE_exact","rel_err","validity_flag","error"]
    """Scan table columns"""

    def __init__(self,
        L:list[int],
        mu:list[float],
        Delta:float,
        J:float=1.0,
        exact:bool=True,
        threads:int=1,
        ):
        """Construct a gap scan table

        # Arguments

        - `L`: site counts

        - `mu`: chemical potentials

        - `Delta`: pairing amplitude

        - `J`: tunneling amplitude

        - `exact`: attach exact diagonalization where resolvable

        - `threads`: worker count
        """
        from kitaev.sweep import run_grid # pylint: disable=import-outside-toplevel
        if len(L) == 0 or len(mu) == 0:
            raise ValueError(f"L={L} and mu={mu} must not be empty")
        points = [(int(x),float(y),float(Delta),float(J),exact)
            for x in sorted(L) for y in sorted(mu)]
        data = pd.DataFrame(run_grid(scan_point,points,threads),columns=self.COLUMNS)
        for flag in ("extrapolated","failed"):
            count = (data.validity_flag == flag).sum()
            if count:
                warnings.warn(f"{count} gap scan point(s) are {flag}")
        super().__init__(data)

    @classmethod
    def makeargs(cls,**kwargs):
        """Return dict of accepted arguments

        # Arguments

        - `**kwargs`: arguments to filter

        # Returns

        - `dict`: valid arguments for `GapScan`
        """
        return {x:y for x,y in kwargs.items() if x in cls.__init__.__annotations__}

def gap_scan(grid:dict,threads:int=1) -> GapScan:
    """Scan the splitting over a grid `{"L":[...], "Delta":..., "mu":[...]}`"""
    return GapScan(**GapScan.makeargs(**grid),threads=threads)

def _finite_size(L:np.ndarray,chi2:float) -> np.ndarray: # pylint: disable=invalid-name
    return 4*chi2*np.sin(np.pi/(L+1))**2 / (chi2-1)**2

def asymptotic_scaling(table:pd.DataFrame,min_points:int=3) -> ScalingFit:
    """Fit `ln(dE_pred/mu) = slope L + power ln L + const`

    Points with `(L+1) ln chi <= 5` are outside the exponential regime and
    are dropped with a warning. The finite-size factor `4 chi^2
    sin^2(pi/(L+1)) / (chi^2-1)^2` is checked on the remaining points; when
    any is `0.01` or more the `|chi^2 - exp(2i pi/(L+1))|^2` denominator
    still depends on `L`, the fit is kept and `finite_size` is set.

    # Arguments

    - `table`: gap scan table with a single `Delta` and `J`

    - `min_points`: fewest points accepted

    # Returns

    - `ScalingFit`: fitted slope (expect `ln chi`) and power (expect `-3`)
    """
    # pylint: disable=invalid-name
    data = table[(table.mu > 0) & (table.validity_flag != "failed")]
    if data.Delta.nunique() != 1 or data.J.nunique() != 1:
        raise ValueError("asymptotic scaling requires a single Delta and J per table")
    J,Delta = float(data.J.iloc[0]),float(data.Delta.iloc[0])
    if not 0 < Delta < J:
        raise RegimeError(f"asymptotic scaling requires 0 < Delta < J, got Delta={Delta}, J={J}")
    chi2 = (J + Delta) / (J - Delta)
    L = data.L.to_numpy(dtype=float)
    inside = (L+1)*0.5*math.log(chi2) > 5
    if (~inside).any():
        warnings.warn(f"{(~inside).sum()} point(s) with (L+1) ln chi <= 5 "
            "excluded from the scaling fit")
    if inside.sum() < min_points:
        raise ValueError(f"asymptotic scaling needs at least {min_points} points "
            f"with (L+1) ln chi > 5, got {inside.sum()}")
    data = data[inside]
    L = L[inside]
    finite_size = bool((_finite_size(L,chi2) >= 0.01).any())
    if finite_size:
        warnings.warn(f"finite-size factor reaches {_finite_size(L,chi2).max():.3g} "
            f"at L={int(L.min())}, the fitted power is biased")
    y = np.log(data.dE_pred_mantissa.to_numpy(dtype=float)) \
        + data.dE_pred_exp10.to_numpy(dtype=float)*math.log(10) \
        - np.log(data.mu.to_numpy(dtype=float))
    design = np.column_stack([L,np.log(L),np.ones_like(L)])
    (slope,power,const),*_ = np.linalg.lstsq(design,y,rcond=None)
    return ScalingFit(float(slope),float(power),float(const),int(len(L)),finite_size)

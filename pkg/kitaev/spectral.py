"""Spectral analysis of generators

Dense eigendecompositions of evolution generators, regime checks, exact
stationary modes of open Hatano-Nelson chains, localization diagnostics and
the near-degenerate doublet of the coupled X and P chains.

Constant two-diagonal chains are diagonalized through an exact similarity
transform instead of the general QR pipeline:

- `t_L t_R > 0`: `diag(r^n)` with `r = sqrt(a/b)` maps the chain to a real
  symmetric tridiagonal matrix;

- `t_L t_R < 0`: `diag(r^n)` followed by the `i^n` gauge maps the chain to
  `-i` times a real symmetric tridiagonal matrix;

- `t_L t_R = 0`: the matrix is triangular and its eigenvalues are the
  diagonal, exactly.

All other generators go through balancing, Hessenberg reduction and the
LAPACK shifted QR eigensolver, with inverse iteration refinement of any
eigenpair whose residual exceeds `1e-10`. Radix-2 balancing cannot undo the
exponential asymmetry of non-reciprocal hopping, so the pipeline first
applies a diagonal similarity that equalizes `|G[n+1,n]|` and `|G[n,n+1]|`
along every nearest-neighbour run. Runs joined only by longer-range
couplings, such as the X and P halves of the coupled generator, are offset
against each other so those couplings are balanced on average.

# Example

    from kitaev.model import HNParams, build_generator_hn
    from kitaev.spectral import eigs
    print(eigs(build_generator_hn(HNParams(t_L=2,t_R=1,L=5))).to_frame())

outputs

       index  re_lambda  im_lambda      residual
    0      1  -2.449490        0.0  1.387779e-16
    1      2  -1.414214        0.0  6.280370e-17
    2      3   0.000000        0.0  6.661338e-17
    3      4   1.414214        0.0  1.110223e-16
    4      5   2.449490        0.0  1.030729e-16
"""

import math
import dataclasses
import warnings
from typing import NamedTuple

import numpy as np
import pandas as pd
import scipy.linalg

from kitaev.errors import ConvergenceError, PrecisionError, RegimeError
from kitaev.model import (ModelParams, HNParams, Generator, Regime,
    build_generator_hn, build_generator_coupled)

SIZE_CAP = 2000
"""Largest generator accepted by `eigs()`"""

RESIDUAL_TARGET = 1e-10
"""Relative residual above which eigenpairs are refined"""

METHODS = ("auto","qr","tridiagonal")
"""Eigensolver methods"""

@dataclasses.dataclass(frozen=True,eq=False)
class Spectrum:
    """Eigendecomposition of a generator

    `vectors` holds unit-norm right eigenvectors in columns and `inverse` is
    its inverse, whose rows are the matching left eigenvectors. `residuals`
    are `|G v - lambda v| / |G|` per pair.
    """
    eigenvalues:np.ndarray
    vectors:np.ndarray|None
    inverse:np.ndarray|None
    residuals:np.ndarray|None
    fingerprint:str
    method:str

    @property
    def size(self) -> int:
        """Number of eigenvalues"""
        return len(self.eigenvalues)

    def condition(self) -> float:
        """Condition number of the eigenvector matrix"""
        if self.vectors is None:
            raise ValueError(f"spectrum {self.fingerprint} has no eigenvectors")
        return float(np.linalg.cond(self.vectors))

    def order(self) -> np.ndarray:
        """Index order sorting eigenvalues by imaginary then real part"""
        return np.lexsort((self.eigenvalues.real,self.eigenvalues.imag))

    def to_frame(self) -> pd.DataFrame:
        """Eigenvalue table with columns `index`, `re_lambda`, `im_lambda`, `residual`"""
        order = self.order()
        residuals = self.residuals[order] if self.residuals is not None \
            else np.full(self.size,np.nan)
        return pd.DataFrame({
            "index":np.arange(1,self.size+1),
            "re_lambda":self.eigenvalues.real[order],
            "im_lambda":self.eigenvalues.imag[order],
            "residual":residuals,
            })

class StationaryModes(NamedTuple):
    """Right and left kernels of an open chain (`None` when absent)"""
    right:np.ndarray|None
    left:np.ndarray|None

class DoubletGap(NamedTuple):
    """Doublet energies and splitting"""
    E_pair:tuple
    dE:float

def _chain_constants(matrix:np.ndarray) -> tuple|None:
    # (diagonal, subdiagonal, superdiagonal) of a constant real tridiagonal matrix
    if np.iscomplexobj(matrix) or matrix.shape[0] < 2:
        return None
    if np.count_nonzero(np.triu(matrix,2)) or np.count_nonzero(np.tril(matrix,-2)):
        return None
    diag = np.diag(matrix)
    sub = np.diag(matrix,-1)
    sup = np.diag(matrix,1)
    if (diag != diag[0]).any() or (sub != sub[0]).any() or (sup != sup[0]).any():
        return None
    return float(diag[0]),float(sub[0]),float(sup[0])

def _similarity(size:int,ratio:float) -> np.ndarray:
    # diag(ratio^n) centered on the middle site to keep the range symmetric
    n = np.arange(1,size+1) - (size+1)/2
    return np.exp(n*math.log(ratio))

def _normalize(vectors:np.ndarray,inverse:np.ndarray) -> tuple:
    norms = np.linalg.norm(vectors,axis=0)
    return vectors/norms,inverse*norms[:,None]

def _tridiagonal(constants:tuple,size:int) -> tuple:
    diag,sub,sup = constants
    product = sub*sup
    scale = _similarity(size,math.sqrt(abs(sub/sup)))
    offdiag = math.copysign(math.sqrt(abs(product)),sub) * np.ones(size-1)
    values,vectors = scipy.linalg.eigh_tridiagonal(np.zeros(size),offdiag)
    if product > 0:
        eigenvalues = diag + values.astype(complex)
        right = scale[:,None] * vectors
        left = vectors.T / scale[None,:]
        return eigenvalues,"tridiagonal",*_normalize(right.astype(complex),left.astype(complex))

    # oscillatory: the i^n gauge turns the antisymmetric hopping symmetric
    gauge = np.array([1,1j,-1,-1j])[np.arange(1,size+1) % 4]
    eigenvalues = diag - 1j*values
    right = (scale*gauge)[:,None] * vectors
    left = vectors.T * (np.conj(gauge)/scale)[None,:]
    return eigenvalues,"oscillatory",*_normalize(right,left)

def _inverse(vectors:np.ndarray) -> np.ndarray|None:
    try:
        lu = scipy.linalg.lu_factor(vectors,check_finite=False)
        return scipy.linalg.lu_solve(lu,np.eye(len(vectors),dtype=vectors.dtype))
    except (np.linalg.LinAlgError,ValueError):
        return None

def _chain_scaling(matrix:np.ndarray) -> np.ndarray|None:
    # log diagonal similarity equalizing |sub| and |sup| inside each nearest-neighbour run,
    # with each later run offset to balance its couplings to earlier runs
    size = len(matrix)
    sub = np.diag(matrix,-1)
    sup = np.diag(matrix,1)
    linked = (sub != 0) & (sup != 0)
    if not linked.any():
        return None
    steps = np.zeros(size-1)
    steps[linked] = 0.5*np.log(np.abs(sub[linked]/sup[linked]))
    logs = np.concatenate([[0.0],np.cumsum(steps)])
    block = np.concatenate([[0],np.cumsum(~linked)])
    rows,cols = np.nonzero((matrix != 0) & (matrix.T != 0))
    for b in range(1,block[-1]+1):
        inside = block == b
        pairs = inside[cols] & (block[rows] < b)
        if not pairs.any():
            continue
        i,j = rows[pairs],cols[pairs]
        target = 0.5*np.log(np.abs(matrix[j,i]/matrix[i,j]))
        logs[inside] += np.mean(target - (logs[j] - logs[i]))
    logs -= (logs.max() + logs.min())/2
    if logs.max() > 300:
        return None
    return logs

def _qr(g:Generator,vectors:bool) -> tuple:
    logs = _chain_scaling(g.matrix)
    matrix = g.matrix
    if logs is not None:
        matrix = np.exp(-logs)[:,None] * matrix * np.exp(logs)[None,:]
    balanced,(scale,_) = scipy.linalg.matrix_balance(matrix,permute=False,separate=True)
    hessenberg,unitary = scipy.linalg.hessenberg(balanced,calc_q=True)
    try:
        if not vectors:
            return scipy.linalg.eigvals(hessenberg),None,None
        eigenvalues,reduced = scipy.linalg.eig(hessenberg)
    except np.linalg.LinAlgError as err:
        raise ConvergenceError(f"shifted QR iteration did not converge for generator "
            f"{g.label!r} (size {g.size}, fingerprint {g.fingerprint()}): {err}") from err
    similarity = scale if logs is None else scale*np.exp(logs)
    inner = unitary @ reduced
    inverse = _inverse(inner)
    right = similarity[:,None] * inner
    norms = np.linalg.norm(right,axis=0)
    if inverse is not None:
        inverse = inverse * (norms[:,None] / similarity[None,:])
    return eigenvalues,right/norms,inverse

def _residuals(g:Generator,eigenvalues:np.ndarray,vectors:np.ndarray) -> np.ndarray:
    norm = g.norm() or 1.0
    return np.linalg.norm(g.matrix @ vectors - vectors*eigenvalues,axis=0) / norm

def _refine(g:Generator,eigenvalues:np.ndarray,vectors:np.ndarray,residuals:np.ndarray) -> bool:
    # inverse iteration on pairs above the residual target, True when any pair changed
    norm = g.norm() or 1.0
    identity = np.eye(g.size)
    changed = False
    for k in np.flatnonzero(residuals > RESIDUAL_TARGET):
        shift = eigenvalues[k] + 1e-12*norm
        lu = scipy.linalg.lu_factor(g.matrix - shift*identity,check_finite=False)
        vector = vectors[:,k]
        for _ in range(3):
            vector = scipy.linalg.lu_solve(lu,vector)
            vector /= np.linalg.norm(vector)
        value = np.vdot(vector,g.matrix @ vector)
        residual = np.linalg.norm(g.matrix @ vector - value*vector) / norm
        if residual < residuals[k]:
            eigenvalues[k],vectors[:,k],residuals[k] = value,vector,residual
            changed = True
        if residuals[k] > RESIDUAL_TARGET:
            warnings.warn(f"eigenpair {k} of generator {g.label!r} has residual "
                f"{residuals[k]:.3g} after inverse iteration")
    return changed

def eigs(g:Generator,vectors:bool=True,method:str="auto",cap:int=SIZE_CAP) -> Spectrum:
    """Compute the spectrum of a generator

    # Arguments

    - `g`: generator

    - `vectors`: compute eigenvectors, their inverse and residuals

    - `method`: `"auto"` (chain fast path when applicable), `"qr"` (always
      the general pipeline) or `"tridiagonal"` (require the fast path)

    - `cap`: largest accepted size

    # Returns

    - `Spectrum`: eigenvalues and optional eigenvectors

    # Exceptions

    - `ConvergenceError`: the QR iteration failed
    """
    if method not in METHODS:
        raise ValueError(f"method={method!r} is invalid, must be one of {METHODS}")
    if g.size > cap:
        raise ValueError(f"generator {g.label!r} size={g.size} exceeds the eigensolver cap {cap}")

    constants = _chain_constants(g.matrix) if method != "qr" else None
    if method == "tridiagonal" and constants is None:
        raise ValueError(f"generator {g.label!r} is not a constant two-diagonal chain")

    # fast paths
    if constants is not None and constants[1]*constants[2] != 0:
        eigenvalues,tag,right,left = _tridiagonal(constants,g.size)
        if not vectors:
            return Spectrum(eigenvalues,None,None,None,g.fingerprint(),tag)
        return Spectrum(eigenvalues,right,left,_residuals(g,eigenvalues,right),g.fingerprint(),tag)

    if constants is not None:
        eigenvalues = np.diag(g.matrix).astype(complex)
        if not vectors:
            return Spectrum(eigenvalues,None,None,None,g.fingerprint(),"triangular")
        _,right = scipy.linalg.eig(g.matrix)
        right = right.astype(complex)
        return Spectrum(eigenvalues,right,_inverse(right),
            _residuals(g,eigenvalues,right),g.fingerprint(),"triangular")

    # general pipeline
    eigenvalues,right,inverse = _qr(g,vectors)
    eigenvalues = np.asarray(eigenvalues,dtype=complex)
    if not vectors:
        return Spectrum(eigenvalues,None,None,None,g.fingerprint(),"qr")
    right = right.astype(complex)
    residuals = _residuals(g,eigenvalues,right)
    if _refine(g,eigenvalues,right,residuals) or inverse is None:
        inverse = _inverse(right)
    return Spectrum(eigenvalues,right,inverse,residuals,g.fingerprint(),"qr")

def classify_regime(chain:HNParams) -> Regime:
    """Classify a chain, confirming the exceptional regime spectrally"""
    regime = chain.regime()
    if regime == Regime.EXCEPTIONAL:
        spectrum = eigs(build_generator_hn(chain),vectors=False)
        bound = 1e-8 * max(abs(chain.t_L),abs(chain.t_R))
        if np.abs(spectrum.eigenvalues).max() > bound:
            raise RegimeError(f"exceptional chain t_L={chain.t_L}, t_R={chain.t_R} "
                "has a nonzero eigenvalue")
    return regime

def _kernel(ratio:float,size:int) -> np.ndarray|None:
    # psi_{2k+1} = ratio^k, computed in the log domain
    if size % 2 == 0:
        return None
    steps = np.arange((size+1)//2)
    if ratio == 0:
        odd = (steps == 0).astype(float)
    else:
        logs = steps * math.log(abs(ratio))
        signs = np.where((steps % 2 == 1) & (ratio < 0),-1.0,1.0)
        odd = signs * np.exp(logs - logs.max())
    field = np.zeros(size)
    field[::2] = odd
    return field / np.linalg.norm(field)

def stationary_modes(chain:HNParams) -> StationaryModes:
    """Exact zero modes of an open chain

    # Arguments

    - `chain`: chain with `t_L != 0`

    # Returns

    - `StationaryModes`: for odd `L`, the unit-norm right kernel built by
      `psi_{n+1} = -(t_R/t_L) psi_{n-1}` and the left kernel built by
      `l_{n+1} = -(t_L/t_R) l_{n-1}`, both supported on odd sites. Even `L`
      has no kernel and returns `None` for both.
    """
    if chain.t_L == 0:
        raise RegimeError(f"stationary modes require t_L != 0, got t_L={chain.t_L}")
    right = _kernel(-chain.t_R / chain.t_L,chain.L)
    left = _kernel(-chain.t_L / chain.t_R,chain.L) if chain.t_R != 0 else None
    return StationaryModes(right,left)

def localization_metrics(spec:Spectrum) -> pd.DataFrame:
    """Center of mass and decay rate of each eigenvector

    # Arguments

    - `spec`: spectrum with eigenvectors

    # Returns

    - `pd.DataFrame`: columns `index`, `re_lambda`, `im_lambda`,
      `center_of_mass` (1-based sites) and `decay_rate` (least-squares slope
      of `ln|v_n|` over sites above `1e-8` of the peak, positive when growing
      toward `n=L`), in the order of `Spectrum.to_frame()`
    """
    if spec.vectors is None:
        raise ValueError(f"spectrum {spec.fingerprint} has no eigenvectors")
    sites = np.arange(1,len(spec.vectors)+1)
    rows = []
    for rank,k in enumerate(spec.order(),1):
        magnitude = np.abs(spec.vectors[:,k])
        weight = magnitude**2
        if weight.sum() == 0:
            raise ValueError(f"eigenvector {k} of spectrum {spec.fingerprint} has zero norm")
        center = float((sites*weight).sum() / weight.sum())
        keep = magnitude >= 1e-8 * magnitude.max()
        if keep.sum() >= 2:
            slope = np.polyfit(sites[keep],np.log(magnitude[keep]),1)[0]
        else:
            slope = math.nan
        rows.append([rank,spec.eigenvalues[k].real,spec.eigenvalues[k].imag,center,slope])
    return pd.DataFrame(rows,
        columns=["index","re_lambda","im_lambda","center_of_mass","decay_rate"])

def ground_energy(params:ModelParams) -> float:
    """Unperturbed ground energy `-2 sqrt(J^2-Delta^2) cos(pi/(L+1))`"""
    return -2 * math.sqrt(params.J**2 - params.Delta**2) * math.cos(math.pi/(params.L+1))

def _check_doublet(params:ModelParams):
    if not params.Delta < params.J:
        raise RegimeError(f"doublet requires the oscillatory regime Delta < J, "
            f"got Delta={params.Delta}, J={params.J}")
    if params.mu < 0:
        raise ValueError(f"mu={params.mu} must be non-negative")

def _energies(params:ModelParams) -> np.ndarray:
    spectrum = eigs(build_generator_coupled(params),vectors=False)
    radius = np.abs(spectrum.eigenvalues).max()
    real = np.abs(spectrum.eigenvalues.real).max()
    if real > 1e-8 * radius:
        raise RegimeError(f"coupled spectrum is not imaginary (|Re lambda|={real:.3g}) "
            f"for J={params.J}, Delta={params.Delta}, mu={params.mu}, L={params.L}")
    return spectrum.eigenvalues

def doublet_gap(params:ModelParams) -> DoubletGap:
    """Splitting of the ground doublet of the coupled chains

    Energies are `Im(lambda)` of the coupled generator. The two energies
    closest to the unperturbed ground energy `E0 = -2 sqrt(J^2-Delta^2)
    cos(pi/(L+1))` form the doublet.

    # Arguments

    - `params`: reduced parameters with `Delta < J` and `mu >= 0`

    # Returns

    - `DoubletGap`: sorted energy pair and splitting

    # Exceptions

    - `PrecisionError`: the predicted splitting is below `1e-10` of the
      spectral radius and cannot be resolved by diagonalization

    - `RegimeError`: the coupled spectrum is not imaginary
    """
    _check_doublet(params)
    if params.mu > 0:
        from kitaev.perturbation import gap_prediction, PRECISION_FLOOR # pylint: disable=import-outside-toplevel
        predicted = gap_prediction(params)
        radius = 2*math.sqrt(params.J**2 - params.Delta**2) + params.mu
        if predicted.log10 < math.log10(PRECISION_FLOOR*radius):
            raise PrecisionError(f"predicted splitting {predicted.mantissa:.3f}e{predicted.exp10} "
                f"for L={params.L}, Delta={params.Delta}, mu={params.mu} is below the "
                "double precision floor, use the closed form")
    energies = _energies(params).imag
    nearest = np.argsort(np.abs(energies - ground_energy(params)))[:2]
    lower,upper = sorted(energies[nearest])
    return DoubletGap((float(lower),float(upper)),float(upper - lower))

def track_doublet(params:ModelParams,mus:list[float]) -> pd.DataFrame:
    """Follow the ground doublet across a chemical potential sweep

    The pair at the first `mu` is the doublet nearest the unperturbed ground
    energy. At each following `mu` each member is matched to the nearest
    unclaimed eigenvalue in the complex plane.

    # Arguments

    - `params`: reduced parameters (`mu` is overridden)

    - `mus`: chemical potentials in sweep order

    # Returns

    - `pd.DataFrame`: columns `mu`, `E_lower`, `E_upper`, `dE`
    """
    if len(mus) == 0:
        raise ValueError("mus must not be empty")
    rows = []
    previous = None
    for mu in mus:
        point = params.replace(mu=float(mu))
        _check_doublet(point)
        eigenvalues = _energies(point)
        if previous is None:
            nearest = np.argsort(np.abs(eigenvalues.imag - ground_energy(point)))[:2]
            current = eigenvalues[nearest]
        else:
            taken = set()
            current = []
            for value in previous:
                order = np.argsort(np.abs(eigenvalues - value))
                match = next(x for x in order if x not in taken)
                taken.add(match)
                current.append(eigenvalues[match])
            current = np.array(current)
        previous = current
        lower,upper = sorted(current.imag)
        rows.append([float(mu),lower,upper,upper-lower])
    return pd.DataFrame(rows,columns=["mu","E_lower","E_upper","dE"])

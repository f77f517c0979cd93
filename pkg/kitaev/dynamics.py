"""Lattice field dynamics

Time evolution of chain and coupled-chain fields by fourth-order Runge-Kutta
and by the exact eigenbasis propagator, Gaussian wavepacket preparation,
gain subtraction, observables, and the closed-form continuum Gaussian the
lattice evolution is compared against.

Lattice fields are real (expectation values of quadratures). A wavepacket
with a complex carrier is realized by its real part; since generators are
real, the real part of the evolved complex packet is the evolution of the
real packet, so continuum profiles are compared after the same projection.

Wavepackets are written as `psi_n = exp(iKnd) phi(nd)` with the complex
carrier `K = K0 - i ln(t_R/t_L)/(2d)`. For oscillatory chains the
logarithm carries `i pi`, so `K0` is measured from the `i^n` gauge.

# Example

A diffusing packet at the top of the X chain band

    from kitaev.model import HNParams, Band, continuum_coefficients
    from kitaev.spectral import eigs
    from kitaev.model import build_generator_hn
    from kitaev.dynamics import WavepacketSpec, gaussian_wavepacket, evolve_exact

    chain = HNParams(t_L=-0.8,t_R=-1.2,L=101)
    coeffs = continuum_coefficients(chain,Band.TOP)
    spec = WavepacketSpec(n0=51,sigma=5,K0=coeffs.K0)
    s0 = gaussian_wavepacket(spec,chain)
    traj = evolve_exact(eigs(build_generator_hn(chain)),s0,[0,5,10])
"""

import math
import dataclasses
import warnings
from typing import NamedTuple

import numpy as np
import pandas as pd

from kitaev.errors import (StabilityError, IntegrationError, DefectiveError,
    BoundaryError, RegimeError)
from kitaev.model import HNParams, Generator, EffCoeffs, Regime

STABILITY_LIMIT = 0.5
"""Largest accepted `dt |G|` for RK4"""

CONDITION_LIMIT = 1e12
"""Largest eigenvector condition number accepted by the exact propagator"""

TARGETS = ("X","P")
"""Wavepacket target quadratures"""

@dataclasses.dataclass(frozen=True,eq=False)
class FieldState:
    """Field values at time `tau`"""
    values:np.ndarray
    tau:float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise ValueError(f"field must be one-dimensional, got shape {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError(f"field at tau={self.tau} is not finite")
        object.__setattr__(self,"values",values)

    def __len__(self):
        return len(self.values)

@dataclasses.dataclass(frozen=True)
class WavepacketSpec:
    """Gaussian wavepacket preparation

    # Fields

    - `n0`: center site (1-based)

    - `sigma`: width in sites (>= 2)

    - `K0`: carrier measured from the chain gauge (`0`, `+-pi/(2d)`, `pi/d`)

    - `tilt`: include the skin factor `exp(A n d)` with `A = ln|t_R/t_L|/(2d)`

    - `target`: quadrature the packet is prepared in (`"X"` or `"P"`)
    """
    n0:float
    sigma:float
    K0:float = 0.0
    tilt:bool = False
    target:str = "X"

    def __post_init__(self):
        if not self.sigma >= 2:
            raise ValueError(f"sigma={self.sigma!r} must be at least 2 sites")
        if self.target not in TARGETS:
            raise ValueError(f"target={self.target!r} is invalid, must be one of {TARGETS}")

    @classmethod
    def from_dict(cls,data:dict):
        """Construct from a JSON object"""
        fields = [x.name for x in dataclasses.fields(cls)]
        unknown = [x for x in data if x not in fields]
        if unknown:
            raise ValueError(f"unknown wavepacket key(s) {unknown}, valid keys are {fields}")
        return cls(**data)

@dataclasses.dataclass(frozen=True,eq=False)
class Trajectory:
    """Field samples `values[k]` at strictly increasing `times[k]`"""
    times:np.ndarray
    values:np.ndarray
    fingerprint:str = ""

    def __post_init__(self):
        times = np.asarray(self.times,dtype=float)
        values = np.asarray(self.values)
        if times.ndim != 1 or len(times) == 0 or (np.diff(times) <= 0).any():
            raise ValueError("trajectory times must be a non-empty strictly increasing sequence")
        if values.shape[0] != len(times):
            raise ValueError(f"trajectory has {values.shape[0]} samples for {len(times)} times")
        object.__setattr__(self,"times",times)
        object.__setattr__(self,"values",values)

    def __len__(self):
        return len(self.times)

    def state(self,k:int) -> FieldState:
        """Sample `k` as a field state"""
        return FieldState(self.values[k],float(self.times[k]))

    def to_frame(self,prefix:str="site") -> pd.DataFrame:
        """Table with columns `tau`, `site_1`..`site_N`

        Complex trajectories get `site_n_re` and `site_n_im` column pairs.
        """
        size = self.values.shape[1]
        data = {"tau":self.times}
        if np.iscomplexobj(self.values):
            for n in range(size):
                data[f"{prefix}_{n+1}_re"] = self.values[:,n].real
                data[f"{prefix}_{n+1}_im"] = self.values[:,n].imag
        else:
            for n in range(size):
                data[f"{prefix}_{n+1}"] = self.values[:,n]
        return pd.DataFrame(data)

class Observables(NamedTuple):
    """Packet center, width, peak and norms"""
    center:float
    width:float
    peak:float
    norm:float
    weighted_norm:float|None

def check_times(times) -> np.ndarray:
    """Validate non-negative strictly increasing sample times"""
    times = np.atleast_1d(np.asarray(times,dtype=float))
    if len(times) == 0 or (np.diff(times) <= 0).any():
        raise ValueError(f"times={times.tolist()} must be a non-empty strictly increasing sequence")
    if times[0] < 0 or not np.isfinite(times).all():
        raise ValueError(f"times={times.tolist()} must be finite and non-negative")
    return times

def rk4_samples(apply,y0:np.ndarray,times:np.ndarray,dt:float,norm:float,
        label:str="",tau0:float=0.0) -> np.ndarray:
    """Classic RK4 sampled at `times`

    Each interval between samples is split into equal steps no longer than
    `dt`.

    # Arguments

    - `apply`: derivative function `y -> G y`

    - `y0`: state at `tau0`

    - `times`: increasing sample times `>= tau0`

    - `dt`: largest step

    - `norm`: infinity norm of `G` for the stability pre-check

    - `label`: generator name used in error messages

    - `tau0`: initial time

    # Returns

    - `np.ndarray`: states, one row per sample
    """
    if not dt > 0:
        raise ValueError(f"dt={dt!r} must be positive")
    if dt*norm >= STABILITY_LIMIT:
        raise StabilityError(f"dt={dt} fails the stability check dt*|G|={dt*norm:.3g} "
            f">= {STABILITY_LIMIT} for generator {label!r}")
    if times[0] < tau0:
        raise ValueError(f"first sample time {times[0]} precedes the initial time {tau0}")
    y = np.array(y0)
    tau = tau0
    samples = []
    for target in times:
        steps = math.ceil((target - tau)/dt - 1e-9)
        if steps > 0:
            h = (target - tau) / steps
            for step in range(steps):
                k1 = apply(y)
                k2 = apply(y + 0.5*h*k1)
                k3 = apply(y + 0.5*h*k2)
                k4 = apply(y + h*k3)
                y = y + (h/6)*(k1 + 2*k2 + 2*k3 + k4)
                if not np.isfinite(y).all():
                    raise IntegrationError(f"non-finite state at tau={tau + (step+1)*h} "
                        f"for generator {label!r}")
        tau = target
        samples.append(y)
    return np.array(samples)

def default_step(g:Generator) -> float:
    """Default RK4 step `0.01/max|G_ij|`"""
    largest = np.abs(g.matrix).max()
    return 0.01 / largest if largest > 0 else 0.01

def evolve_rk4(g:Generator,
        s0:FieldState,
        tau_end:float,
        dt:float=None,
        times:np.ndarray=None,
        ) -> Trajectory:
    """Integrate `d/dtau state = G state` by fourth-order Runge-Kutta

    # Arguments

    - `g`: generator

    - `s0`: initial state

    - `tau_end`: final time

    - `dt`: largest step (default `0.01/max|G_ij|`)

    - `times`: sample times in `[s0.tau, tau_end]` (default both ends)

    # Returns

    - `Trajectory`: sampled states

    # Exceptions

    - `StabilityError`: `dt |G|` is not below 0.5

    - `IntegrationError`: the state became non-finite
    """
    if len(s0) != g.size:
        raise ValueError(f"state length {len(s0)} does not match generator size {g.size}")
    if dt is None:
        dt = default_step(g)
    if times is None:
        times = [s0.tau,tau_end] if tau_end > s0.tau else [s0.tau]
    times = np.asarray(times,dtype=float)
    if times[-1] > tau_end:
        raise ValueError(f"sample time {times[-1]} is beyond tau_end={tau_end}")
    matrix = g.matrix
    values = rk4_samples(lambda y:matrix @ y,s0.values,times,dt,g.norm(),g.label,s0.tau)
    return Trajectory(times,values,g.fingerprint())

def evolve_exact(spec,
        s0:FieldState,
        times:np.ndarray,
        scale:complex=1.0,
        real:bool=True,
        ) -> Trajectory:
    """Propagate through the eigenbasis, `V exp(scale Lambda tau) V^-1 s0`

    # Arguments

    - `spec`: `Spectrum` with eigenvectors

    - `s0`: initial state

    - `times`: sample times (`tau - s0.tau` is propagated)

    - `scale`: factor on the eigenvalues (`-1j` gives `d/dtau = -i G`)

    - `real`: check the result is real within `1e-9` and drop the imaginary part

    # Returns

    - `Trajectory`: sampled states

    # Exceptions

    - `DefectiveError`: the eigenvector matrix is nearly singular
    """
    if spec.vectors is None:
        raise ValueError(f"spectrum {spec.fingerprint} has no eigenvectors")
    if len(s0) != spec.size:
        raise ValueError(f"state length {len(s0)} does not match spectrum size {spec.size}")
    condition = spec.condition()
    if spec.inverse is None or not condition < CONDITION_LIMIT:
        raise DefectiveError(f"eigenvector condition {condition:.3g} of spectrum "
            f"{spec.fingerprint} exceeds {CONDITION_LIMIT:g}, use RK4")
    times = np.asarray(times,dtype=float)
    coeffs = spec.inverse @ s0.values
    phases = np.exp(scale * np.outer(times - s0.tau,spec.eigenvalues))
    values = (phases * coeffs) @ spec.vectors.T
    if real:
        magnitude = max(1.0,np.abs(values).max())
        residue = np.abs(values.imag).max()
        if residue > 1e-9*magnitude:
            raise IntegrationError(f"exact propagation of spectrum {spec.fingerprint} "
                f"left an imaginary residue {residue:.3g}")
        values = values.real
    return Trajectory(times,values,spec.fingerprint)

def subtract_gain(traj:Trajectory,gamma:float,sign:int=1) -> Trajectory:
    """Remove the global gain, `values * exp(-sign gamma tau)`

    With band coefficients from `continuum_coefficients()` pass the band's
    own `gamma` and `sign=1`; the bottom band `gamma` is the negative of the
    top band `gamma`.
    """
    if not math.isfinite(gamma):
        raise ValueError(f"gamma={gamma!r} must be finite")
    if sign not in (1,-1):
        raise ValueError(f"sign={sign!r} must be +1 or -1")
    factor = np.exp(-sign*gamma*traj.times)
    return Trajectory(traj.times,traj.values * factor[:,None],traj.fingerprint)

def observables(state,weights:np.ndarray=None) -> Observables:
    """Center, width, peak and norms of a field

    # Arguments

    - `state`: `FieldState` or field values

    - `weights`: metric weights `sqrt(g_n)` for the weighted norm

    # Returns

    - `Observables`: center and width of `|psi_n|^2` over 1-based sites,
      peak magnitude, plain norm and weighted norm `sqrt(sum w_n |psi_n|^2)`
    """
    values = np.asarray(getattr(state,"values",state))
    density = np.abs(values)**2
    total = density.sum()
    if total == 0:
        raise ValueError("observables of a zero field are undefined")
    sites = np.arange(1,len(values)+1)
    center = float((sites*density).sum() / total)
    width = float(math.sqrt(max(((sites-center)**2*density).sum() / total,0.0)))
    weighted = None
    if weights is not None:
        weights = np.asarray(weights)
        if weights.shape != values.shape:
            raise ValueError(f"weights length {weights.shape} does not match field {values.shape}")
        weighted = float(math.sqrt((weights*density).sum()))
    return Observables(center,width,float(np.abs(values).max()),float(math.sqrt(total)),weighted)

def _carrier(chain:HNParams,K0:float) -> tuple[float,float]:
    # real wavevector and skin rate A of the complex carrier
    if chain.regime() == Regime.EXCEPTIONAL:
        return K0,math.nan
    log_ratio = complex(np.log(complex(chain.t_R/chain.t_L)))
    return K0 + log_ratio.imag/(2*chain.d),log_ratio.real/(2*chain.d)

def _complex_packet(spec:WavepacketSpec,wavevector:float,rate:float,size:int,d:float) -> np.ndarray:
    n = np.arange(1,size+1)
    packet = np.exp(-(n - spec.n0)**2 / (4*spec.sigma**2)) * np.exp(1j*wavevector*n*d)
    if spec.tilt:
        packet = packet * np.exp(rate*(n - spec.n0)*d)
    return packet

def gaussian_wavepacket(spec:WavepacketSpec,chain:HNParams) -> FieldState:
    """Real Gaussian wavepacket on a chain

    `values_n = Re[exp(-(n-n0)^2/(4 sigma^2)) exp(i Re(K) n d) T_n]`
    normalized to peak magnitude 1, where `T_n = exp(A (n-n0) d)` with
    tilt and 1 without.

    Sign convention: `A = +ln|t_R/t_L|/(2d)`, so the tilt follows the
    chain's own eigenvectors and grows toward the edge the chain localizes
    on (`n=L` for the X chain, `n=1` for the P chain). A tilt decaying
    toward that edge is `exp(-A (n-n0) d)` and is not produced here.

    # Exceptions

    - `ValueError`: the packet is not inside the chain (`n0 +- 4 sigma`
      outside `[1, L]` or edge magnitude above `1e-6` of the peak)
    """
    if not (1 <= spec.n0 - 4*spec.sigma and spec.n0 + 4*spec.sigma <= chain.L):
        raise ValueError(f"packet n0={spec.n0}, sigma={spec.sigma} does not fit "
            f"inside 1..{chain.L}")
    wavevector,rate = _carrier(chain,spec.K0)
    if spec.tilt and not math.isfinite(rate):
        raise RegimeError(f"exceptional chain t_L={chain.t_L}, t_R={chain.t_R} has no skin tilt")
    values = _complex_packet(spec,wavevector,rate,chain.L,chain.d).real
    peak = np.abs(values).max()
    edges = np.abs(values[[0,-1]]).max()
    if edges > 1e-6*peak:
        raise ValueError(f"packet n0={spec.n0}, sigma={spec.sigma} overlaps the boundary "
            f"(edge magnitude {edges/peak:.3g} of peak)")
    return FieldState(values/peak)

def continuum_gaussian(coeffs:EffCoeffs,spec:WavepacketSpec,tau:float) -> np.ndarray:
    """Closed-form continuum evolution of a Gaussian wavepacket

    In the frame `psi = exp(iKs) phi` the envelope obeys `d/dtau phi =
    c1 phi' + c0 phi + c2 phi''` with `c0 = reaction`, `c1 = -i drift` and
    `c2 = diffusion`. The initial envelope is a Gaussian of variance
    parameter `beta0 = (sigma d)^2` times `exp(b s)`, with `b = a - A` where
    `a` is the tilt rate. After completing the square,

        phi(s,tau) = exp(c0 tau) sqrt(beta0/beta) exp(-(s - s1 + c1 tau)^2/(4 beta))

    with `beta = beta0 + c2 tau`, valid while `Re(beta) > 0`.

    # Arguments

    - `coeffs`: coefficients at the packet carrier

    - `spec`: wavepacket specification (`K0` must equal `coeffs.K0`)

    - `tau`: time

    # Returns

    - `np.ndarray`: real profile on sites `1..L`, normalized like
      `gaussian_wavepacket()`

    # Exceptions

    - `RegimeError`: the anti-diffusing Gaussian has collapsed
    """
    if not math.isclose(spec.K0,coeffs.K0,abs_tol=1e-12):
        raise ValueError(f"packet K0={spec.K0} does not match the coefficient carrier {coeffs.K0}")
    d = coeffs.d
    tilt = coeffs.A if spec.tilt else 0.0
    b = tilt - coeffs.A
    beta0 = (spec.sigma*d)**2
    s0 = spec.n0*d
    s1 = s0 + 2*beta0*b
    c1 = -1j*coeffs.drift
    beta = beta0 + coeffs.diffusion*tau
    if not beta.real > 0:
        raise RegimeError(f"continuum Gaussian collapsed at tau={tau} "
            f"(sigma={spec.sigma}, diffusion={coeffs.diffusion:.6g})")
    s = np.arange(1,coeffs.L+1)*d
    # exp(b s0 + beta0 b^2) restores the tilt lost in completing the square
    envelope = np.exp(coeffs.reaction*tau + b*s0 + beta0*b**2 - tilt*s0) \
        * np.sqrt(beta0/beta) * np.exp(-(s - s1 + c1*tau)**2 / (4*beta))
    profile = (np.exp(1j*coeffs.K*s) * envelope).real
    wavevector = coeffs.K.real
    initial = _complex_packet(spec,wavevector,coeffs.A,coeffs.L,d).real
    return profile / np.abs(initial).max()

def relative_mismatch(lattice:np.ndarray,continuum:np.ndarray,window:float=4.0) -> float:
    """Relative L2 mismatch within `window` widths of the continuum center"""
    lattice,continuum = np.asarray(lattice),np.asarray(continuum)
    if lattice.shape != continuum.shape:
        raise ValueError(f"profile lengths {lattice.shape} and {continuum.shape} differ")
    center,width,*_ = observables(continuum)
    sites = np.arange(1,len(continuum)+1)
    inside = np.abs(sites - center) <= window*max(width,1.0)
    return float(np.linalg.norm(lattice[inside] - continuum[inside])
        / np.linalg.norm(continuum[inside]))

def reliable_horizon(chain:HNParams,threshold:float=1e-8) -> float:
    """Time beyond which anti-diffusive roundoff exceeds `threshold`

    Roundoff in the growing band edge is amplified relative to the decaying
    edge by `exp(4 sqrt(t_L t_R) tau)`. Oscillatory and exceptional chains
    have no such limit.
    """
    if chain.regime() != Regime.DIFFUSIVE:
        return math.inf
    return math.log(threshold/np.finfo(float).eps) / (4*chain.scale)

def check_boundary(state,sites:int=3,limit:float=1e-3):
    """Reject fields with more than `limit` of their weight near an edge

    # Exceptions

    - `BoundaryError`: the weight fraction within `sites` of either edge
      exceeds `limit`
    """
    values = np.asarray(getattr(state,"values",state))
    density = np.abs(values)**2
    total = density.sum()
    if total == 0:
        return
    fraction = max(density[:sites].sum(),density[-sites:].sum()) / total
    if fraction > limit:
        raise BoundaryError(f"packet weight fraction {fraction:.3g} within {sites} sites "
            f"of an edge at tau={getattr(state,'tau',math.nan)} exceeds {limit}")

def warn_horizon(chain:HNParams,times:np.ndarray):
    """Warn about samples beyond the reliable anti-diffusive horizon"""
    horizon = reliable_horizon(chain)
    late = np.asarray(times) > horizon
    if late.any():
        warnings.warn(f"{late.sum()} sample(s) beyond the reliable horizon tau={horizon:.4g} "
            f"for t_L={chain.t_L}, t_R={chain.t_R}")

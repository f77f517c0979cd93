"""Bosonic Kitaev chain model

The chain of `L` bosonic modes with tunneling `J e^{i theta}`, pairing
`Delta e^{i phi}` and chemical potential `mu` is handled at the level of
expectation values of the quadratures `X_n` and `P_n`. After the gauge
reduction `theta -> pi/2`, `phi -> pi/2` the quadratures obey two decoupled
Hatano-Nelson chains (at `mu=0`) with mirror-image hopping asymmetry.

All generators follow one sign convention: the state derivative is
`G @ state`. For a Hatano-Nelson chain with leftward hopping `t_L` and
rightward hopping `t_R` the generator has `G[n,n-1] = -t_R` and
`G[n,n+1] = -t_L`.

# Example

The X and P chains of the reduced model with `J=1`, `Delta=0.2`

    from kitaev.model import ModelParams, hn_chains
    x_chain, p_chain = hn_chains(ModelParams(J=1,Delta=0.2,L=50))
    print(x_chain.regime(), x_chain.ratio, p_chain.ratio)

outputs

    oscillatory 1.5 0.6666666666666666

The X chain localizes toward `n=L` and the P chain toward `n=1`.
"""

import math
import hashlib
import dataclasses
from enum import StrEnum
from typing import NamedTuple

import numpy as np
import pandas as pd

from kitaev.errors import RegimeError, ConfigError

class Regime(StrEnum):
    """Hatano-Nelson chain regime"""
    OSCILLATORY = "oscillatory"
    DIFFUSIVE = "diffusive"
    EXCEPTIONAL = "exceptional"

class Phase(StrEnum):
    """Gauge reduction outcome"""
    TRIVIAL = "trivial"
    NONTRIVIAL = "nontrivial"
    BOUNDARY = "boundary"

class Band(StrEnum):
    """Band edge"""
    TOP = "top"
    BOTTOM = "bottom"

GAUGES = ("i^n","(-i)^n","tilt","carrier")
"""Gauge factor kinds accepted by `gauge_transform()`"""

def _check_length(name:str,value:float,positive:bool=True):
    if not math.isfinite(value) or (value <= 0 if positive else value < 0):
        raise ValueError(f"{name}={value!r} must be {'positive' if positive else 'non-negative'} and finite")

def _check_sites(value) -> int:
    if isinstance(value,bool) or int(value) != value or value < 2:
        raise ValueError(f"L={value!r} must be an integer >= 2")
    return int(value)

@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the bosonic Kitaev chain

    # Fields

    - `J`: tunneling amplitude (energy, >= 0)

    - `Delta`: pairing amplitude (energy, >= 0)

    - `L`: number of sites (>= 2)

    - `theta`: tunneling phase (radians, default pi/2)

    - `phi`: pairing phase (radians, default pi/2)

    - `mu`: chemical potential (energy, default 0)

    - `d`: lattice spacing (default 1)

    - `hbar`: action scale (default 1)
    """
    # pylint: disable=invalid-name
    J:float
    Delta:float
    L:int
    theta:float = math.pi/2
    phi:float = math.pi/2
    mu:float = 0.0
    d:float = 1.0
    hbar:float = 1.0

    KEYS = ("J","theta","Delta","phi","mu","L","d","hbar")
    """JSON keys in serialization order"""

    REQUIRED = ("J","Delta","L")
    """JSON keys without defaults"""

    def __post_init__(self):
        object.__setattr__(self,"L",_check_sites(self.L))
        _check_length("J",self.J,positive=False)
        _check_length("Delta",self.Delta,positive=False)
        _check_length("d",self.d)
        _check_length("hbar",self.hbar)
        for name in ("theta","phi","mu"):
            if not math.isfinite(getattr(self,name)):
                raise ValueError(f"{name}={getattr(self,name)!r} must be finite")

    def to_dict(self) -> dict:
        """Return the JSON object form"""
        return {x:getattr(self,x) for x in self.KEYS}

    @classmethod
    def from_dict(cls,data:dict):
        """Construct from a JSON object

        # Arguments

        - `data`: mapping with keys from `ModelParams.KEYS`

        # Returns

        - `ModelParams`: parameters, with missing optional keys defaulted
        """
        if not isinstance(data,dict):
            raise ConfigError(f"model parameters must be a JSON object, not {type(data).__name__}")
        unknown = [x for x in data if x not in cls.KEYS]
        if unknown:
            raise ConfigError(f"unknown model parameter(s) {unknown}, valid keys are {list(cls.KEYS)}")
        missing = [x for x in cls.REQUIRED if x not in data]
        if missing:
            raise ConfigError(f"missing model parameter(s) {missing}")
        return cls(**data)

    def replace(self,**kwargs):
        """Return a copy with some fields changed"""
        return dataclasses.replace(self,**kwargs)

@dataclasses.dataclass(frozen=True)
class HNParams:
    """Hatano-Nelson chain with leftward hopping `t_L` and rightward hopping `t_R`"""
    # pylint: disable=invalid-name
    t_L:float
    t_R:float
    L:int
    d:float = 1.0

    KEYS = ("t_L","t_R","L","d")
    """JSON keys in serialization order"""

    def __post_init__(self):
        object.__setattr__(self,"L",_check_sites(self.L))
        _check_length("d",self.d)
        for name in ("t_L","t_R"):
            if not math.isfinite(getattr(self,name)):
                raise ValueError(f"{name}={getattr(self,name)!r} must be finite")

    def regime(self) -> Regime:
        """Classify by the sign of `t_L*t_R`"""
        product = self.t_L * self.t_R
        if product < 0:
            return Regime.OSCILLATORY
        if product > 0:
            return Regime.DIFFUSIVE
        return Regime.EXCEPTIONAL

    @property
    def ratio(self) -> float:
        """Hopping asymmetry `|t_R/t_L|`"""
        if self.t_L == 0:
            return math.inf
        return abs(self.t_R / self.t_L)

    @property
    def scale(self) -> float:
        """Geometric mean hopping `sqrt(|t_L*t_R|)`"""
        return math.sqrt(abs(self.t_L * self.t_R))

    def to_dict(self) -> dict:
        """Return the JSON object form"""
        return {x:getattr(self,x) for x in self.KEYS}

    @classmethod
    def from_dict(cls,data:dict):
        """Construct from a JSON object with keys `t_L`, `t_R`, `L` and optional `d`"""
        if not isinstance(data,dict):
            raise ConfigError(f"chain parameters must be a JSON object, not {type(data).__name__}")
        unknown = [x for x in data if x not in cls.KEYS]
        if unknown:
            raise ConfigError(f"unknown chain parameter(s) {unknown}, valid keys are {list(cls.KEYS)}")
        missing = [x for x in ("t_L","t_R","L") if x not in data]
        if missing:
            raise ConfigError(f"missing chain parameter(s) {missing}")
        return cls(**data)

@dataclasses.dataclass(frozen=True,eq=False)
class Generator:
    """Dense evolution generator `G` with `d/dtau state = G @ state`

    Entries outside the declared diagonal `offsets` are exactly zero. The
    matrix is real except for curved Schrödinger operators, which carry the
    factor `-i` of `i d/dtau phi = H phi`.
    """
    matrix:np.ndarray
    offsets:tuple
    label:str = ""

    def __post_init__(self):
        matrix = np.asarray(self.matrix)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"generator {self.label!r} must be square, got shape {matrix.shape}")
        rows,cols = np.nonzero(matrix)
        outside = set((cols - rows).tolist()) - set(self.offsets)
        if outside:
            raise ValueError(f"generator {self.label!r} has entries on undeclared offsets {sorted(outside)}")
        object.__setattr__(self,"matrix",matrix)
        object.__setattr__(self,"offsets",tuple(sorted(self.offsets)))

    @property
    def size(self) -> int:
        """Matrix dimension"""
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        """True when the matrix has no complex dtype"""
        return not np.iscomplexobj(self.matrix)

    def norm(self) -> float:
        """Infinity norm (maximum absolute row sum)"""
        return float(np.abs(self.matrix).sum(axis=1).max())

    def fingerprint(self) -> str:
        """Short content hash identifying the generator"""
        digest = hashlib.sha256()
        digest.update(self.label.encode())
        digest.update(str(self.matrix.shape).encode())
        digest.update(np.ascontiguousarray(self.matrix).tobytes())
        return digest.hexdigest()[:16]

    def to_frame(self) -> pd.DataFrame:
        """Nonzero entries as `(row, col, re, im)` with 1-based indices"""
        rows,cols = np.nonzero(self.matrix)
        values = self.matrix[rows,cols]
        return pd.DataFrame({
            "row":rows + 1,
            "col":cols + 1,
            "re":np.real(values),
            "im":np.imag(values),
            })

@dataclasses.dataclass(frozen=True)
class EffCoeffs:
    """Continuum coefficients of a chain near a carrier

    The envelope equation is

        d/dtau psi = [-i drift (d/ds - iK) + reaction + diffusion (d/ds - iK)^2] psi

    with `psi(s=nd) = psi_n`. For positive hoppings `drift = sin(K0 d) v_s`,
    `reaction = cos(K0 d) Gamma` and `diffusion = -cos(K0 d) D`.
    """
    # pylint: disable=invalid-name,too-many-instance-attributes
    regime:Regime
    band:Band|None
    A:float
    A_complex:complex
    Gamma:float
    m:float|None
    D:float|None
    gamma:float|None
    v_s:float
    K0:float
    K:complex
    kappa:float
    reaction:complex
    drift:complex
    diffusion:complex
    L:int
    d:float
    hbar:float = 1.0

class GaugeReduction(NamedTuple):
    """Result of `reduce_gauge()`"""
    phase:Phase
    reduced:ModelParams

class ChainPair(NamedTuple):
    """X and P Hatano-Nelson chains of a reduced model"""
    x_chain:HNParams
    p_chain:HNParams

def reduce_gauge(params:ModelParams) -> GaugeReduction:
    """Reduce the tunneling and pairing phases

    # Arguments

    - `params`: model parameters

    # Returns

    - `GaugeReduction`: phase tag and reduced parameters. For `Delta > |J
      cos(theta)|` the reduced model has `theta=phi=pi/2`, `Delta' =
      sqrt(Delta^2 - J^2 cos^2 theta)` and `J' = J |sin(theta)|`. For `Delta <
      |J cos(theta)|` the parameters are returned unchanged. At equality the
      boundary tag is returned with `Delta'=0`.
    """
    cos_theta = math.cos(params.theta)
    if abs(cos_theta) < 1e-15:
        cos_theta = 0.0
    # (-1)^n gauge maps theta to pi-theta
    jcos = abs(params.J * cos_theta)
    halfpi = math.pi/2
    tol = 1e-12 * max(abs(params.J),abs(params.Delta),1e-300)

    if math.isclose(params.Delta,jcos,rel_tol=1e-12,abs_tol=tol):
        return GaugeReduction(Phase.BOUNDARY,
            params.replace(theta=halfpi,phi=halfpi,Delta=0.0,J=params.J*abs(math.sin(params.theta))))

    if params.Delta < jcos:
        return GaugeReduction(Phase.TRIVIAL,params)

    if cos_theta == 0.0:
        delta = params.Delta
    else:
        delta = math.sqrt(max(params.Delta**2 - jcos**2,0.0))
    return GaugeReduction(Phase.NONTRIVIAL,
        params.replace(theta=halfpi,phi=halfpi,Delta=delta,J=params.J*abs(math.sin(params.theta))))

def hn_chains(params:ModelParams) -> ChainPair:
    """Split a reduced model into its X and P Hatano-Nelson chains

    The X chain obeys `dX_n/dtau = (J+Delta) X_{n-1} + (Delta-J) X_{n+1}` and
    the P chain `dP_n/dtau = (J-Delta) P_{n-1} - (J+Delta) P_{n+1}`.
    """
    if not math.isclose(params.theta,math.pi/2,rel_tol=0,abs_tol=1e-12):
        raise RegimeError(f"theta={params.theta!r} is not pi/2, reduce the gauge first")
    J,Delta = params.J,params.Delta
    return ChainPair(
        HNParams(t_L=J-Delta,t_R=-(J+Delta),L=params.L,d=params.d),
        HNParams(t_L=J+Delta,t_R=Delta-J,L=params.L,d=params.d),
        )

def build_generator_hn(chain:HNParams) -> Generator:
    """Open-boundary Hatano-Nelson generator with `G[n,n-1]=-t_R`, `G[n,n+1]=-t_L`"""
    size = chain.L
    matrix = np.zeros((size,size))
    index = np.arange(size-1)
    matrix[index+1,index] = -chain.t_R
    matrix[index,index+1] = -chain.t_L
    return Generator(matrix,(-1,1),f"hn(t_L={chain.t_L},t_R={chain.t_R},L={chain.L})")

def build_generator_coupled(params:ModelParams) -> Generator:
    """Generator of the coupled X and P chains

    The state layout is `(X_1..X_L, P_1..P_L)`. The X rows receive `+mu P_n`
    and the P rows receive `-mu X_n`.
    """
    x_chain,p_chain = hn_chains(params)
    size = params.L
    coupling = params.mu * np.eye(size)
    matrix = np.block([
        [build_generator_hn(x_chain).matrix,coupling],
        [-coupling,build_generator_hn(p_chain).matrix],
        ])
    return Generator(matrix,(-size,-1,1,size),
        f"coupled(J={params.J},Delta={params.Delta},mu={params.mu},L={size})")

def _sites(size:int) -> np.ndarray:
    return np.arange(1,size+1)

def gauge_transform(field:np.ndarray,
        kind:str,
        r:float=None,
        K:complex=None,
        d:float=1.0,
        inverse:bool=False,
        ) -> np.ndarray:
    """Multiply a lattice field by a site-dependent gauge factor

    # Arguments

    - `field`: values on sites `n=1..L`

    - `kind`: one of `"i^n"`, `"(-i)^n"`, `"tilt"` (factor `r^n`) or
      `"carrier"` (factor `exp(iKnd)`)

    - `r`: tilt ratio (tilt only, must be positive)

    - `K`: carrier wavevector, complex allowed (carrier only)

    - `d`: lattice spacing (carrier only)

    - `inverse`: divide by the factor instead

    # Returns

    - `np.ndarray`: complex gauged field
    """
    field = np.asarray(field,dtype=complex)
    n = _sites(len(field))
    match kind:
        case "i^n":
            factor = np.array([1,1j,-1,-1j])[n % 4]
        case "(-i)^n":
            factor = np.array([1,-1j,-1,1j])[n % 4]
        case "tilt":
            if r is None or not r > 0:
                raise ValueError(f"r={r!r} must be positive for a tilt gauge")
            factor = np.power(float(r),n)
        case "carrier":
            if K is None:
                raise ValueError("K is required for a carrier gauge")
            factor = np.exp(1j * K * n * d)
        case _:
            raise ValueError(f"kind={kind!r} is invalid, must be one of {GAUGES}")
    return field / factor if inverse else field * factor

def classical_hamiltonian(state,params:ModelParams) -> float:
    """Conserved quadratic form of the coupled chains

    `H = sum_n P_n[(J+Delta) X_{n-1} + (Delta-J) X_{n+1}] + (mu/2) sum_n (X_n^2+P_n^2)`,
    whose canonical equations are the X and P rows of `build_generator_coupled()`.
    """
    values = np.asarray(getattr(state,"values",state),dtype=float)
    size = params.L
    if values.shape != (2*size,):
        raise ValueError(f"state length {values.shape} does not match 2L={2*size}")
    x,p = values[:size],values[size:]
    x_prev = np.concatenate([[0.0],x[:-1]])
    x_next = np.concatenate([x[1:],[0.0]])
    J,Delta = params.J,params.Delta
    hopping = np.dot(p,(J+Delta)*x_prev + (Delta-J)*x_next)
    return float(hopping + 0.5*params.mu*(np.dot(x,x) + np.dot(p,p)))

def _reject_exceptional(chain:HNParams,what:str):
    if chain.regime() == Regime.EXCEPTIONAL:
        raise RegimeError(f"{what} is undefined for the exceptional chain "
            f"t_L={chain.t_L}, t_R={chain.t_R}")

def curvature(chain:HNParams) -> float:
    """Curvature magnitude `kappa = ln^2|t_R/t_L| / d^2`"""
    _reject_exceptional(chain,"curvature")
    return math.log(chain.ratio)**2 / chain.d**2

def _expansion(chain:HNParams,K0:float) -> tuple:
    # second-order expansion of the lattice equation around exp(iKnd)
    d = chain.d
    log_ratio = complex(np.log(complex(chain.t_R / chain.t_L)))
    K = K0 - 1j * log_ratio / (2*d)
    right = chain.t_R * np.exp(-1j*K*d)
    left = chain.t_L * np.exp(1j*K*d)
    reaction = -(right + left)
    drift = 1j * (-(left - right) * d)
    diffusion = -0.5 * (right + left) * d**2
    return log_ratio,complex(K),complex(reaction),complex(drift),complex(diffusion)

def band_carrier(chain:HNParams,band:Band) -> float:
    """Carrier `K0` in `{0, pi/d}` that realizes a band edge

    In the diffusive regime the top edge is the fastest growing edge of the
    generator. In the oscillatory regime the bottom edge is the lowest
    energy of `i d/dtau psi = H psi`.
    """
    _reject_exceptional(chain,"band carrier")
    band = Band(band)
    reaction = _expansion(chain,0.0)[2]
    if chain.regime() == Regime.DIFFUSIVE:
        at_zero = Band.TOP if reaction.real > 0 else Band.BOTTOM
    else:
        at_zero = Band.BOTTOM if (1j*reaction).real < 0 else Band.TOP
    return 0.0 if band == at_zero else math.pi / chain.d

def _coefficients(chain:HNParams,K0:float,band:Band|None,hbar:float) -> EffCoeffs:
    regime = chain.regime()
    d = chain.d
    scale = chain.scale
    A = math.log(chain.ratio) / (2*d)
    log_ratio,K,reaction,drift,diffusion = _expansion(chain,K0)
    sign = -1.0 if band == Band.TOP else 1.0
    if regime == Regime.OSCILLATORY:
        m = sign * hbar**2 / (2*scale*d**2)
        D = None
        Gamma = sign * -2*scale
        gamma = None
    else:
        m = None
        D = -sign * scale * d**2
        Gamma = sign * 2*scale
        gamma = -Gamma + 4*A**2*D/4
    return EffCoeffs(
        regime=regime,
        band=band,
        A=A,
        A_complex=log_ratio / (2*d),
        Gamma=Gamma,
        m=m,
        D=D,
        gamma=gamma,
        v_s=2*scale*d,
        K0=K0,
        K=K,
        kappa=4*A**2,
        reaction=reaction,
        drift=drift,
        diffusion=diffusion,
        L=chain.L,
        d=d,
        hbar=hbar,
        )

def continuum_coefficients(chain:HNParams,band:Band,hbar:float=1.0) -> EffCoeffs:
    """Continuum coefficients near a band edge

    # Arguments

    - `chain`: non-exceptional chain

    - `band`: `Band.TOP` or `Band.BOTTOM`

    - `hbar`: action scale

    # Returns

    - `EffCoeffs`: oscillatory chains give `m`, `A`, `Gamma` (bottom edge
      `m > 0`, `Gamma = -2 sqrt|t_L t_R|`, signs flipped at the top);
      diffusive chains give `D`, `A`, `Gamma` and `gamma = -Gamma + kappa
      D/4` (top edge `D > 0`, `Gamma = -2 sqrt(t_L t_R)`, signs flipped at
      the bottom). The carrier is chosen by `band_carrier()`.
    """
    _reject_exceptional(chain,"continuum limit")
    band = Band(band)
    return _coefficients(chain,band_carrier(chain,band),band,hbar)

def effective_theory_at_K(chain:HNParams,K0:float,hbar:float=1.0) -> EffCoeffs:
    """Continuum coefficients around an arbitrary carrier

    The complex carrier is `K = K0 - i ln(t_R/t_L)/(2d)`, using the
    principal logarithm so that oscillatory chains pick up the `pi/(2d)`
    shift of the `i^n` gauge.
    """
    _reject_exceptional(chain,"effective theory")
    return _coefficients(chain,float(K0),None,hbar)

class CoupledCoeffs(NamedTuple):
    """Continuum theory of the X and P chains coupled by `mu`

    Near a band edge of the oscillatory regime

        i d/dtau psi_X = +i mu psi_P - hbar^2/(2m) (d/ds - A_X)^2 psi_X + Gamma psi_X
        i d/dtau psi_P = -i mu psi_X - hbar^2/(2m) (d/ds - A_P)^2 psi_P + Gamma psi_P

    with complex gauge fields `A_X` and `A_P` taken from the branches `A_+-
    = ln((J+Delta)/(J-Delta))/(2d) +- i pi/(2d)`. Branch `+1` is the `i^n`
    gauge (`A_X = A_+`, `A_P = -A_-`); branch `-1` is the `(-i)^n` gauge
    (`A_X = A_-`, `A_P = -A_+`).
    """
    # pylint: disable=invalid-name
    x:EffCoeffs
    p:EffCoeffs
    A_plus:complex
    A_minus:complex
    A_X:complex
    A_P:complex
    mu:float
    branch:int

    def edge_energy(self,level:int=1) -> float:
        """Dirichlet level `Gamma + hbar^2 (level pi)^2 / (2 m ((L+1) d)^2)` at `mu=0`"""
        if level < 1:
            raise ValueError(f"level={level} must be at least 1")
        k = level * math.pi / ((self.x.L+1) * self.x.d)
        return self.x.Gamma + self.x.hbar**2 * k**2 / (2*self.x.m)

def coupled_coefficients(params:ModelParams,
        band:Band=Band.BOTTOM,
        branch:int=1,
        hbar:float=None,
        ) -> CoupledCoeffs:
    """Continuum coefficients of the coupled X and P chains

    # Arguments

    - `params`: reduced parameters with `0 <= Delta < J`

    - `band`: band edge of both chains

    - `branch`: `+1` for the `i^n` gauge, `-1` for the `(-i)^n` gauge

    - `hbar`: action scale (default `params.hbar`)

    # Returns

    - `CoupledCoeffs`: per-chain coefficients and gauge field branches

    # Exceptions

    - `RegimeError`: the chains are not oscillatory
    """
    # pylint: disable=invalid-name
    if branch not in (1,-1):
        raise ValueError(f"branch={branch!r} must be +1 or -1")
    x_chain,p_chain = hn_chains(params)
    if x_chain.regime() != Regime.OSCILLATORY:
        raise RegimeError(f"coupled continuum theory requires 0 <= Delta < J, "
            f"got Delta={params.Delta}, J={params.J}")
    hbar = params.hbar if hbar is None else hbar
    x = continuum_coefficients(x_chain,band,hbar)
    p = continuum_coefficients(p_chain,band,hbar)
    A_plus = complex(x.A_complex)
    A_minus = A_plus.conjugate()
    if branch == 1:
        A_X,A_P = A_plus,-A_minus
    else:
        A_X,A_P = A_minus,-A_plus
    return CoupledCoeffs(x,p,A_plus,A_minus,A_X,A_P,params.mu,branch)

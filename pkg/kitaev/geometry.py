"""Hyperbolic surface and tree graph representations

A Hatano-Nelson chain with asymmetry `|t_R/t_L| != 1` is the `k_x=0` sector
of a particle on a surface of constant negative curvature `-kappa` with
metric `dl^2 = ds^2 + exp(-2 sqrt(kappa) s) dx^2`. The chain localizes its
modes at the funnel mouth, where the circumference `sqrt(g)` is smallest.
Metric weights are normalized to 1 at the mouth, so the X chain of the
reduced model has weights `chi^(2(L-n))` and the P chain `chi^(2(n-1))`.

The discrete counterpart is a Bethe lattice of branching `q`. Its
layer-uniform sector evolves as the chain `t_L = q t`, `t_R = t`, and its
layer sizes `q^(n-1)` play the role of `sqrt(g)`.

Tree nodes are numbered breadth-first, layer-major, from 0 at the root. The
node `(n, m)` with `1 <= m <= q^(n-1)` has index `(q^(n-1)-1)/(q-1) + m - 1`
and its parent is at index `(i-1)//q`.
"""

import math
import dataclasses
import functools

import numpy as np
import pandas as pd
import scipy.sparse
import scipy.sparse.linalg
import networkx as nx

from kitaev.errors import RegimeError, IntegrationError
from kitaev.model import HNParams, Generator, Regime, Band, build_generator_hn, continuum_coefficients
from kitaev.spectral import eigs
from kitaev.dynamics import Trajectory, rk4_samples, check_times

TREE_CAP = 10**6
"""Largest tree accepted by `build_tree()`"""

@dataclasses.dataclass(frozen=True)
class HyperbolicMetric:
    """Metric of a discretized hyperbolic funnel

    `orientation=+1` puts the funnel mouth at `n=L` with weights
    `exp(sqrt(kappa) d (L-n))`; `orientation=-1` puts it at `n=1` with weights
    `exp(sqrt(kappa) d (n-1))`.
    """
    kappa:float
    d:float
    L:int
    orientation:int = 1

    def __post_init__(self):
        if not self.kappa >= 0 or not math.isfinite(self.kappa):
            raise ValueError(f"kappa={self.kappa!r} must be non-negative and finite")
        if not self.d > 0:
            raise ValueError(f"d={self.d!r} must be positive")
        if self.L < 2:
            raise ValueError(f"L={self.L!r} must be at least 2")
        if self.orientation not in (1,-1):
            raise ValueError(f"orientation={self.orientation!r} must be +1 or -1")

    @classmethod
    def from_chain(cls,chain:HNParams):
        """Metric dual to a chain, with the mouth where its modes localize"""
        if chain.regime() == Regime.EXCEPTIONAL:
            raise RegimeError(f"exceptional chain t_L={chain.t_L}, t_R={chain.t_R} "
                "has no metric")
        log_ratio = math.log(chain.ratio)
        return cls(kappa=log_ratio**2/chain.d**2,d=chain.d,L=chain.L,
            orientation=1 if log_ratio >= 0 else -1)

@dataclasses.dataclass(frozen=True,eq=False)
class TreeGraph:
    """Bethe lattice tree of branching `q` with `N` layers"""
    # pylint: disable=invalid-name
    q:int
    N:int
    adjacency:scipy.sparse.csr_matrix

    @property
    def size(self) -> int:
        """Node count `(q^N-1)/(q-1)`"""
        return (self.q**self.N - 1) // (self.q - 1)

    def layer(self,n:int) -> slice:
        """Index range of layer `n` (1-based)"""
        if not 1 <= n <= self.N:
            raise ValueError(f"layer n={n} is outside 1..{self.N}")
        start = (self.q**(n-1) - 1) // (self.q - 1)
        return slice(start,start + self.q**(n-1))

    def index(self,n:int,m:int) -> int:
        """BFS index of node `(n, m)`"""
        part = self.layer(n)
        if not 1 <= m <= part.stop - part.start:
            raise ValueError(f"node m={m} is outside layer n={n}")
        return part.start + m - 1

    def node(self,i:int) -> tuple[int,int]:
        """Layer and position `(n, m)` of BFS index `i`"""
        if not 0 <= i < self.size:
            raise ValueError(f"node index i={i} is outside 0..{self.size-1}")
        n = 1
        while i >= (self.q**n - 1) // (self.q - 1):
            n += 1
        return n,i - (self.q**(n-1) - 1) // (self.q - 1) + 1

    def parent(self,i:int) -> int|None:
        """Parent index of node `i` (`None` for the root)"""
        return (i - 1) // self.q if i > 0 else None

    @functools.cached_property
    def graph(self) -> nx.Graph:
        """Tree as a `networkx` graph"""
        return nx.from_scipy_sparse_array(self.adjacency)

    def check(self) -> bool:
        """Verify the tree structure and degrees"""
        degree = np.asarray(self.adjacency.sum(axis=1)).ravel()
        if self.N == 1:
            return bool(self.size == 1 and degree[0] == 0)
        leaves = self.layer(self.N)
        return bool(nx.is_tree(self.graph)
            and degree[0] == self.q
            and (degree[1:leaves.start] == self.q+1).all()
            and (degree[leaves] == 1).all())

def metric_weights(metric:HyperbolicMetric|TreeGraph) -> np.ndarray:
    """Metric weights `sqrt(g_n)`

    # Arguments

    - `metric`: continuous metric or tree graph

    # Returns

    - `np.ndarray`: positive weights, normalized to 1 at the funnel mouth
      for a continuous metric, or the integer layer sizes `q^(n-1)` of a
      tree
    """
    match metric:
        case TreeGraph():
            return np.array([metric.q**(n-1) for n in range(1,metric.N+1)],dtype=np.int64)
        case HyperbolicMetric():
            n = np.arange(1,metric.L+1)
            distance = metric.L - n if metric.orientation > 0 else n - 1
            return np.exp(math.sqrt(metric.kappa) * metric.d * distance)
        case _:
            raise ValueError(f"metric type {type(metric).__name__} is invalid")

def curved_inner_product(a:np.ndarray,b:np.ndarray,weights:np.ndarray) -> complex:
    """Weighted inner product `sum_n w_n conj(a_n) b_n`"""
    a,b,weights = np.asarray(a),np.asarray(b),np.asarray(weights)
    if not a.shape == b.shape == weights.shape:
        raise ValueError(f"field lengths {a.shape}, {b.shape} and weights {weights.shape} differ")
    return complex(np.sum(weights * np.conj(a) * b))

def _laplace_beltrami(metric:HyperbolicMetric) -> np.ndarray:
    # central differences of d2/ds2 - o sqrt(kappa) d/ds, Dirichlet at both ends
    if metric.L < 3:
        raise ValueError(f"L={metric.L} must be at least 3 for a curved operator")
    d = metric.d
    drift = metric.orientation * math.sqrt(metric.kappa)
    size = metric.L
    index = np.arange(size-1)
    matrix = np.diag(np.full(size,-2/d**2))
    matrix[index+1,index] = 1/d**2 + drift/(2*d)
    matrix[index,index+1] = 1/d**2 - drift/(2*d)
    return matrix

def build_curved_schrodinger_operator(metric:HyperbolicMetric,
        m:float,
        Gamma:float,
        hbar:float=1.0,
        ) -> Generator:
    """Discretized Schrödinger operator on the funnel at `k_x=0`

    # Arguments

    - `metric`: funnel metric

    - `m`: mass (negative near a band top)

    - `Gamma`: energy offset

    - `hbar`: action scale

    # Returns

    - `Generator`: complex generator `-i H` with `H = -(hbar^2/2m)(d2/ds2 -
      o sqrt(kappa) d/ds) + Gamma - hbar^2 kappa/(8m)`
    """
    # pylint: disable=invalid-name
    if m == 0 or not math.isfinite(m):
        raise ValueError(f"m={m!r} must be nonzero and finite")
    offset = Gamma - hbar**2 * metric.kappa / (8*m)
    hamiltonian = -(hbar**2/(2*m)) * _laplace_beltrami(metric) + offset*np.eye(metric.L)
    return Generator(-1j*hamiltonian,(-1,0,1),
        f"curved-schrodinger(kappa={metric.kappa},m={m},Gamma={Gamma},L={metric.L})")

def build_curved_diffusion_operator(metric:HyperbolicMetric,D:float,Gamma:float) -> Generator:
    """Discretized diffusion-reaction operator on the funnel

    The generator is `D (d2/ds2 - o sqrt(kappa) d/ds) + gamma` with the net
    gain `gamma = -Gamma + kappa D/4` on the diagonal.
    """
    # pylint: disable=invalid-name
    gamma = -Gamma + metric.kappa * D / 4
    matrix = D * _laplace_beltrami(metric) + gamma*np.eye(metric.L)
    return Generator(matrix,(-1,0,1),
        f"curved-diffusion(kappa={metric.kappa},D={D},Gamma={Gamma},L={metric.L})")

def build_tree(q:int,N:int,cap:int=TREE_CAP) -> TreeGraph:
    """Construct a Bethe lattice tree

    # Arguments

    - `q`: branching factor (>= 2)

    - `N`: layer count (>= 1)

    - `cap`: largest accepted node count

    # Returns

    - `TreeGraph`: tree with symmetric sparse adjacency
    """
    # pylint: disable=invalid-name
    if isinstance(q,bool) or int(q) != q or q < 2:
        raise ValueError(f"q={q!r} must be an integer >= 2")
    if isinstance(N,bool) or int(N) != N or N < 1:
        raise ValueError(f"N={N!r} must be an integer >= 1")
    q,N = int(q),int(N)
    size = (q**N - 1) // (q - 1)
    if size > cap:
        raise ValueError(f"tree q={q}, N={N} has {size} nodes, more than the cap {cap}")
    children = np.arange(1,size)
    parents = (children - 1) // q
    rows = np.concatenate([children,parents])
    cols = np.concatenate([parents,children])
    adjacency = scipy.sparse.csr_matrix((np.ones(len(rows)),(rows,cols)),shape=(size,size))
    return TreeGraph(q,N,adjacency)

def tree_edges(tree:TreeGraph) -> pd.DataFrame:
    """Parent and child BFS indices of every edge in breadth-first order"""
    return pd.DataFrame(list(nx.bfs_edges(tree.graph,0)),columns=["parent_id","child_id"])

def layer_uniform_state(tree:TreeGraph,profile:np.ndarray) -> np.ndarray:
    """Node field with value `profile[n-1]` on every node of layer `n`"""
    profile = np.asarray(profile)
    if profile.shape != (tree.N,):
        raise ValueError(f"profile length {profile.shape} does not match N={tree.N}")
    return np.repeat(profile,tree.q**np.arange(tree.N)).astype(complex)

def layer_chain(tree:TreeGraph,t:float) -> HNParams:
    """Chain `t_L = q t`, `t_R = t` of the layer-uniform sector"""
    return HNParams(t_L=tree.q*t,t_R=t,L=tree.N)

def evolve_tree(tree:TreeGraph,
        t:float,
        s0:np.ndarray,
        times:np.ndarray,
        method:str="exact",
        dt:float=None,
        ) -> Trajectory:
    """Schrödinger evolution `i d/dtau phi = -t A phi` on a tree

    # Arguments

    - `tree`: tree graph

    - `t`: hopping

    - `s0`: node field at `tau=0`

    - `times`: increasing sample times (`>= 0`)

    - `method`: `"exact"` (sparse matrix exponential action) or `"rk4"`

    - `dt`: RK4 step (default `0.01/|t|`)

    # Returns

    - `Trajectory`: complex node fields
    """
    s0 = np.asarray(s0,dtype=complex)
    if s0.shape != (tree.size,):
        raise ValueError(f"initial field length {s0.shape} does not match tree size {tree.size}")
    times = check_times(times)
    operator = (1j*t) * tree.adjacency.astype(complex)
    label = f"tree(q={tree.q},N={tree.N},t={t})"
    match method:
        case "exact":
            values = []
            state,previous = s0,0.0
            for tau in times:
                if tau > previous:
                    state = scipy.sparse.linalg.expm_multiply(operator*(tau-previous),state)
                previous = tau
                values.append(state)
            values = np.array(values)
        case "rk4":
            if dt is None:
                dt = 0.01 / abs(t) if t else 0.01
            values = rk4_samples(lambda y:operator @ y,s0,times,dt,
                norm=abs(t)*(tree.q+1),label=label)
        case _:
            raise ValueError(f"method={method!r} is invalid, must be 'exact' or 'rk4'")
    return Trajectory(times,values,label)

def reduce_tree(tree:TreeGraph,traj:Trajectory,tol:float=1e-8) -> Trajectory:
    """Layer profile `Phi_n(tau)` of a layer-uniform tree trajectory

    # Arguments

    - `tree`: tree graph

    - `traj`: tree trajectory whose first sample is layer-uniform

    - `tol`: largest in-layer deviation accepted at later samples

    # Returns

    - `Trajectory`: layer profiles
    """
    values = np.asarray(traj.values)
    scale = max(1.0,np.abs(values[0]).max())
    profile = np.empty((len(values),tree.N),dtype=values.dtype)
    for n in range(1,tree.N+1):
        layer = values[:,tree.layer(n)]
        mean = layer.mean(axis=1)
        deviation = np.abs(layer - mean[:,None]).max(axis=1)
        if deviation[0] > 1e-12*scale:
            raise ValueError(f"initial field is not uniform in layer n={n} "
                f"(deviation {deviation[0]:.3g})")
        if (deviation > tol*scale).any():
            k = int(np.argmax(deviation > tol*scale))
            raise IntegrationError(f"layer n={n} lost uniformity at tau={traj.times[k]} "
                f"(deviation {deviation[k]:.3g})")
        profile[:,n-1] = mean
    return Trajectory(traj.times,profile,f"reduced {traj.fingerprint}")

def refine_chain(chain:HNParams,factor:int=2) -> HNParams:
    """Same continuum chain on a grid refined by `factor`

    The interval length `(L+1) d`, the mass (or diffusion constant) and the
    vector potential are held fixed: `sqrt|t_L t_R|` scales as `1/d^2` and
    `|t_R/t_L|` as `exp(2 A d)`.
    """
    if chain.regime() == Regime.EXCEPTIONAL:
        raise RegimeError(f"exceptional chain t_L={chain.t_L}, t_R={chain.t_R} "
            "has no continuum limit")
    if isinstance(factor,bool) or int(factor) != factor or factor < 1:
        raise ValueError(f"factor={factor!r} must be a positive integer")
    scale = chain.scale * factor**2
    root = math.sqrt(chain.ratio ** (1/factor))
    return HNParams(
        t_L=math.copysign(scale/root,chain.t_L),
        t_R=math.copysign(scale*root,chain.t_R),
        L=(chain.L+1)*factor - 1,
        d=chain.d/factor,
        )

def curved_operator(chain:HNParams,band:Band,hbar:float=1.0) -> Generator:
    """Curved-space operator dual to a chain near a band edge"""
    coeffs = continuum_coefficients(chain,band,hbar)
    metric = HyperbolicMetric.from_chain(chain)
    if coeffs.regime == Regime.OSCILLATORY:
        return build_curved_schrodinger_operator(metric,coeffs.m,coeffs.Gamma,hbar)
    return build_curved_diffusion_operator(metric,coeffs.D,coeffs.Gamma)

def band_edge_values(g:Generator,regime:Regime,band:Band,count:int=1) -> np.ndarray:
    """Eigenvalues nearest a band edge

    Oscillatory generators give energies `E = -Im(lambda)`, lowest first at
    the bottom and highest first at the top. Diffusive generators give rates
    `Re(lambda)`, fastest growing first at the top and fastest decaying first
    at the bottom.
    """
    eigenvalues = eigs(g,vectors=False).eigenvalues
    values = -eigenvalues.imag if Regime(regime) == Regime.OSCILLATORY else eigenvalues.real
    values = np.sort(values)
    if Band(band) == Band.TOP:
        values = values[::-1]
    return values[:count]

def convergence_study(chain:HNParams,band:Band,levels:int=3,count:int=1,hbar:float=1.0) -> pd.DataFrame:
    """Band-edge error of the curved operator under grid refinement

    The chain is refined `levels-1` times by a factor 2 with `refine_chain()`.
    At each grid the `count` band-edge values of the curved operator are
    compared with those of the chain itself.

    # Returns

    - `pd.DataFrame`: columns `d`, `L`, `error` (largest absolute difference)
      and `ratio` (error of the previous grid over this one)
    """
    if levels < 1:
        raise ValueError(f"levels={levels} must be at least 1")
    rows = []
    grid = chain
    for level in range(levels):
        if level:
            grid = refine_chain(grid,2)
        regime = grid.regime()
        curved = band_edge_values(curved_operator(grid,band,hbar),regime,band,count)
        lattice = band_edge_values(build_generator_hn(grid),regime,band,count)
        rows.append([grid.d,grid.L,float(np.abs(curved - lattice).max())])
    data = pd.DataFrame(rows,columns=["d","L","error"])
    data["ratio"] = data.error.shift(1) / data.error
    return data

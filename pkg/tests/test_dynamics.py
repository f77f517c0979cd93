"""Dynamics tests"""

import os
import sys
import math
import warnings

import numpy as np

sys.path.insert(0,os.path.join(os.path.dirname(__file__),".."))

from kitaev.errors import StabilityError, RegimeError, BoundaryError, DefectiveError
from kitaev.model import (ModelParams, HNParams, Band, hn_chains, build_generator_hn,
    build_generator_coupled, classical_hamiltonian, continuum_coefficients)
from kitaev.spectral import eigs, stationary_modes
from kitaev.geometry import HyperbolicMetric, metric_weights
from kitaev.dynamics import (FieldState, Trajectory, WavepacketSpec, evolve_rk4,
    evolve_exact, subtract_gain, observables, gaussian_wavepacket,
    continuum_gaussian, relative_mismatch, reliable_horizon, check_boundary,
    warn_horizon)

DELTA = 2.3225 / 0.3225
"""Pairing with sqrt((Delta+J)/(Delta-J)) = 1.15 at J=1"""

def _raises(error,func,*args,**kwargs):
    try:
        func(*args,**kwargs)
    except error:
        return True
    return False

def _packet_run(target,band,snapshots):
    # lattice and continuum profiles of a packet at a band edge
    x_chain,p_chain = hn_chains(ModelParams(J=1,Delta=DELTA,L=120))
    chain = x_chain if target == "X" else p_chain
    coeffs = continuum_coefficients(chain,band)
    spec = WavepacketSpec(n0=60,sigma=6,K0=coeffs.K0,tilt=True,target=target)
    taus = np.asarray(snapshots) / chain.scale
    traj = evolve_exact(eigs(build_generator_hn(chain)),gaussian_wavepacket(spec,chain),taus)
    traj = subtract_gain(traj,coeffs.gamma)
    continuum = np.array([continuum_gaussian(coeffs,spec,x)*math.exp(-coeffs.gamma*x)
        for x in taus])
    return traj,continuum

def test_hamiltonian_conserved_exact():
    params = ModelParams(J=1,Delta=0.2,L=20,mu=0.01)
    g = build_generator_coupled(params)
    state = np.random.default_rng(3).normal(size=40)
    traj = evolve_exact(eigs(g),FieldState(state),[0,1,2,5,10])
    energy = np.array([classical_hamiltonian(x,params) for x in traj.values])
    assert np.abs(energy - energy[0]).max() < 1e-10*max(1.0,abs(energy[0]))

def test_rk4_order():
    params = ModelParams(J=1,Delta=0.2,L=20,mu=0.01)
    g = build_generator_coupled(params)
    s0 = FieldState(np.random.default_rng(5).normal(size=40))
    times = [0,10]
    exact = evolve_exact(eigs(g),s0,times).values[-1]
    errors = []
    drifts = []
    for dt in (0.1,0.05):
        traj = evolve_rk4(g,s0,10,dt=dt,times=times)
        errors.append(np.abs(traj.values[-1] - exact).max())
        energy = [classical_hamiltonian(x,params) for x in traj.values]
        drifts.append(abs(energy[-1] - energy[0]))
    assert 12 < errors[0]/errors[1] < 20
    assert drifts[0] / drifts[1] > 12

def test_rk4_stability():
    g = build_generator_hn(HNParams(t_L=2,t_R=1,L=20))
    s0 = FieldState(np.ones(20))
    assert _raises(StabilityError,evolve_rk4,g,s0,1.0,dt=1.0)
    assert _raises(ValueError,evolve_rk4,g,FieldState(np.ones(10)),1.0)

def test_rk4_matches_exact():
    chain = HNParams(t_L=-1.0,t_R=-1.5,L=40)
    g = build_generator_hn(chain)
    s0 = gaussian_wavepacket(WavepacketSpec(n0=20,sigma=3),chain)
    times = [0,0.5,1,2]
    rk4 = evolve_rk4(g,s0,2,times=times)
    exact = evolve_exact(eigs(g),s0,times)
    assert np.abs(rk4.values - exact.values).max() < 1e-8*np.abs(exact.values).max()
    assert rk4.fingerprint == g.fingerprint()

def test_weighted_norm_conserved():
    x_chain,_ = hn_chains(ModelParams(J=1,Delta=0.2,L=40))
    weights = metric_weights(HyperbolicMetric.from_chain(x_chain))
    s0 = gaussian_wavepacket(WavepacketSpec(n0=20,sigma=3),x_chain)
    traj = evolve_exact(eigs(build_generator_hn(x_chain)),s0,[0,2,4,8])
    norms = np.array([observables(x,weights).weighted_norm for x in traj.values])
    assert np.abs(norms/norms[0] - 1).max() < 1e-7

def test_left_kernel_overlap():
    chain = HNParams(t_L=1.0,t_R=1.3225,L=51)
    left = stationary_modes(chain).left
    s0 = FieldState(np.random.default_rng(11).normal(size=51))
    traj = evolve_exact(eigs(build_generator_hn(chain)),s0,[0,0.5,1])
    overlaps = traj.values @ left
    assert np.abs(overlaps - overlaps[0]).max() < 1e-8*max(1.0,np.abs(traj.values).max())

def test_chiral_transport():
    for Delta,size,n0,sigma in ((0.2,121,61,4),(0.1,121,61,4),(0.3,161,70,5),(0.2,161,90,3)):
        x_chain,p_chain = hn_chains(ModelParams(J=1,Delta=Delta,L=size))
        spec = WavepacketSpec(n0=n0,sigma=sigma)
        times = np.arange(0,16)
        centers = {}
        for name,chain in (("X",x_chain),("P",p_chain)):
            traj = evolve_exact(eigs(build_generator_hn(chain)),gaussian_wavepacket(spec,chain),times)
            centers[name] = np.array([observables(x).center for x in traj.values])
        assert (np.diff(centers["X"]) > 0).all(), (Delta,n0,sigma)
        assert (np.diff(centers["P"]) < 0).all(), (Delta,n0,sigma)

def test_exceptional_defective():
    chain = HNParams(t_L=1.5,t_R=0,L=12)
    g = build_generator_hn(chain)
    assert (np.linalg.matrix_power(g.matrix,12) == 0).all()
    assert np.abs(np.linalg.matrix_power(g.matrix,11)).max() > 0
    s0 = FieldState(np.ones(12))
    assert _raises(DefectiveError,evolve_exact,eigs(g),s0,[0,1])
    assert np.isfinite(evolve_rk4(g,s0,1.0,times=[0,1]).values).all()

def test_diffusion_matches_continuum():
    snapshots = [0,20,40]
    widths = {}
    centers = {}
    for target in ("X","P"):
        traj,continuum = _packet_run(target,Band.TOP,snapshots)
        for lattice,profile in zip(traj.values,continuum):
            assert relative_mismatch(lattice,profile) < 0.05
            check_boundary(lattice)
        widths[target] = [observables(x).width for x in traj.values]
        centers[target] = [observables(x).center for x in traj.values]
    assert (np.diff(widths["X"]) > 0).all() and (np.diff(widths["P"]) > 0).all()
    assert centers["X"][-1] > centers["X"][0] and centers["P"][-1] < centers["P"][0]

def test_antidiffusion_matches_continuum():
    snapshots = [0,2,4]
    widths = {}
    centers = {}
    for target in ("X","P"):
        traj,continuum = _packet_run(target,Band.BOTTOM,snapshots)
        for lattice,profile in zip(traj.values,continuum):
            assert relative_mismatch(lattice,profile) < 0.05
        widths[target] = [observables(x).width for x in traj.values]
        centers[target] = [observables(x).center for x in traj.values]
    assert (np.diff(widths["X"]) < 0).all() and (np.diff(widths["P"]) < 0).all()
    assert (centers["X"][-1] - centers["X"][0]) * (centers["P"][-1] - centers["P"][0]) < 0

def test_reliable_horizon():
    x_chain,_ = hn_chains(ModelParams(J=1,Delta=DELTA,L=120))
    horizon = reliable_horizon(x_chain) * x_chain.scale
    assert 4 < horizon < 5
    assert reliable_horizon(HNParams(t_L=0.8,t_R=-1.2,L=10)) == math.inf
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        warn_horizon(x_chain,np.array([0,1,10]) / x_chain.scale)
    assert len(caught) == 1

def test_continuum_collapse():
    x_chain,_ = hn_chains(ModelParams(J=1,Delta=DELTA,L=120))
    coeffs = continuum_coefficients(x_chain,Band.BOTTOM)
    spec = WavepacketSpec(n0=60,sigma=6,K0=coeffs.K0)
    assert _raises(RegimeError,continuum_gaussian,coeffs,spec,40/x_chain.scale)
    assert _raises(ValueError,continuum_gaussian,coeffs,WavepacketSpec(n0=60,sigma=6,K0=0.5),0.0)

def test_wavepacket_tilt_sign():
    # the tilt grows toward the edge each chain localizes on
    x_chain,p_chain = hn_chains(ModelParams(J=1,Delta=0.2,L=160))
    spec = WavepacketSpec(n0=80,sigma=5,tilt=True)
    x_values = gaussian_wavepacket(spec,x_chain).values
    p_values = gaussian_wavepacket(spec,p_chain).values
    assert math.isclose(abs(x_values[83]/x_values[75]),1.5**4,rel_tol=1e-12)
    assert math.isclose(abs(p_values[83]/p_values[75]),1.5**-4,rel_tol=1e-12)

def test_continuum_initial_profile():
    x_chain,_ = hn_chains(ModelParams(J=1,Delta=0.2,L=80))
    coeffs = continuum_coefficients(x_chain,Band.BOTTOM)
    for tilt in (False,True):
        spec = WavepacketSpec(n0=40,sigma=5,K0=coeffs.K0,tilt=tilt)
        lattice = gaussian_wavepacket(spec,x_chain).values
        assert np.abs(continuum_gaussian(coeffs,spec,0.0) - lattice).max() < 1e-12

def test_wavepacket_invalid():
    chain = HNParams(t_L=1,t_R=2,L=40)
    assert _raises(ValueError,WavepacketSpec,n0=20,sigma=1)
    assert _raises(ValueError,WavepacketSpec,n0=20,sigma=3,target="Q")
    assert _raises(ValueError,gaussian_wavepacket,WavepacketSpec(n0=5,sigma=3),chain)
    assert WavepacketSpec.from_dict({"n0":20,"sigma":3}).K0 == 0
    assert _raises(ValueError,WavepacketSpec.from_dict,{"n0":20,"sigma":3,"width":2})

def test_boundary_check():
    field = np.zeros(30)
    field[1] = 1.0
    assert _raises(BoundaryError,check_boundary,FieldState(field,2.0))
    field = np.zeros(30)
    field[15] = 1.0
    check_boundary(field)

def test_trajectory_table():
    traj = Trajectory([0,1],np.array([[1.0,2.0],[3.0,4.0]]))
    data = traj.to_frame()
    assert list(data.columns) == ["tau","site_1","site_2"]
    data = Trajectory([0,1],np.array([[1j,2.0],[3.0,4.0]])).to_frame(prefix="layer")
    assert list(data.columns) == ["tau","layer_1_re","layer_1_im","layer_2_re","layer_2_im"]
    assert _raises(ValueError,Trajectory,[1,0],np.zeros((2,2)))

def test_subtract_gain():
    traj = Trajectory([0,1,2],np.ones((3,4)))
    result = subtract_gain(traj,0.5)
    assert np.allclose(result.values[:,0],np.exp(-0.5*np.array([0,1,2])))
    assert _raises(ValueError,subtract_gain,traj,math.inf)

if __name__ == "__main__":
    for name,test in list(globals().items()):
        if name.startswith("test_") and callable(test):
            test()
    print("No errors")

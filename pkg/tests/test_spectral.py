"""Spectral tests"""

import os
import sys
import math

import numpy as np

sys.path.insert(0,os.path.join(os.path.dirname(__file__),".."))

from kitaev.errors import PrecisionError, RegimeError
from kitaev.model import (ModelParams, HNParams, Regime, build_generator_hn,
    hn_chains)
from kitaev.spectral import (eigs, classify_regime, stationary_modes,
    localization_metrics, ground_energy, doublet_gap, track_doublet)
from kitaev.perturbation import closed_form_M, gap_prediction, level_spacing

def _raises(error,func,*args,**kwargs):
    try:
        func(*args,**kwargs)
    except error:
        return True
    return False

def test_diffusive_oracle():
    for size in (5,50,400):
        spec = eigs(build_generator_hn(HNParams(t_L=2,t_R=1,L=size)))
        assert spec.method == "tridiagonal"
        k = np.arange(1,size+1)
        expected = np.sort(-2*math.sqrt(2)*np.cos(k*math.pi/(size+1)))
        assert np.abs(np.sort(spec.eigenvalues.real) - expected).max() < 1e-9
        assert np.abs(spec.eigenvalues.imag).max() == 0
        assert spec.residuals.max() < 1e-10

def test_qr_agrees():
    for size in (20,100,200,400):
        g = build_generator_hn(HNParams(t_L=2,t_R=1,L=size))
        fast = np.sort(eigs(g,vectors=False).eigenvalues.real)
        spec = eigs(g,method="qr")
        assert spec.method == "qr"
        assert np.abs(np.sort(spec.eigenvalues.real) - fast).max() < 1e-9
        assert np.abs(spec.eigenvalues.imag).max() < 1e-9
        assert spec.residuals.max() < 1e-10
        if size == 20:
            assert np.allclose(spec.inverse @ spec.vectors,np.eye(20),atol=1e-8)

def test_oscillatory_spectrum():
    chain = HNParams(t_L=0.8,t_R=-1.2,L=50)
    spec = eigs(build_generator_hn(chain))
    assert spec.method == "oscillatory"
    assert np.abs(spec.eigenvalues.real).max() < 1e-10
    assert np.abs(spec.eigenvalues.imag).max() <= 2*chain.scale
    assert spec.residuals.max() < 1e-10
    assert classify_regime(chain) == Regime.OSCILLATORY

def test_exceptional_spectrum():
    chain = HNParams(t_L=1.5,t_R=0,L=8)
    spec = eigs(build_generator_hn(chain))
    assert spec.method == "triangular"
    assert (spec.eigenvalues == 0).all()
    assert classify_regime(chain) == Regime.EXCEPTIONAL

def test_eigs_invalid():
    g = build_generator_hn(HNParams(t_L=2,t_R=1,L=20))
    assert _raises(ValueError,eigs,g,cap=10)
    assert _raises(ValueError,eigs,g,method="bogus")

def test_spectrum_table():
    data = eigs(build_generator_hn(HNParams(t_L=2,t_R=1,L=9))).to_frame()
    assert list(data.columns) == ["index","re_lambda","im_lambda","residual"]
    assert (np.diff(data.re_lambda) > 0).all()
    assert list(data["index"]) == list(range(1,10))

def test_stable_modes():
    for root in (1.0,1.15):
        chain = HNParams(t_L=1.0,t_R=root**2,L=51)
        g = build_generator_hn(chain)
        right,left = stationary_modes(chain)
        residual = np.linalg.norm(g.matrix @ right) / (np.linalg.norm(g.matrix,2)*np.linalg.norm(right))
        assert residual < 1e-12
        assert (right[1::2] == 0).all()
        ratios = np.abs(right[2::2] / right[:-2:2])
        assert np.abs(ratios - chain.t_R/chain.t_L).max() < 1e-12
        assert np.linalg.norm(left @ g.matrix) / np.linalg.norm(left) < 1e-12
        assert math.isclose(np.linalg.norm(right),1.0,rel_tol=1e-14)

def test_stable_modes_even():
    assert stationary_modes(HNParams(t_L=1,t_R=2,L=50)) == (None,None)
    assert _raises(RegimeError,stationary_modes,HNParams(t_L=0,t_R=2,L=51))

def test_localization_metrics():
    spec = eigs(build_generator_hn(HNParams(t_L=2,t_R=1,L=40)))
    data = localization_metrics(spec)
    assert len(data) == 40
    assert (data.center_of_mass < 20.5).all()
    assert (data.decay_rate < 0).all()
    assert (data.re_lambda.to_numpy() == spec.to_frame().re_lambda.to_numpy()).all()

def test_localization_decay_rate():
    x_chain,p_chain = hn_chains(ModelParams(J=1,Delta=0.2,L=52))
    rate = math.log(math.sqrt(1.5))
    x_data = localization_metrics(eigs(build_generator_hn(x_chain)))
    p_data = localization_metrics(eigs(build_generator_hn(p_chain)))
    assert (np.abs(x_data.decay_rate - rate) < 0.01*rate).all()
    assert (np.abs(p_data.decay_rate + rate) < 0.01*rate).all()
    assert (x_data.center_of_mass > 26.5).all() and (p_data.center_of_mass < 26.5).all()

def test_doublet_gap():
    params = ModelParams(J=1,Delta=0.2,L=50,mu=1e-6)
    (lower,upper),gap = doublet_gap(params)
    assert lower < upper and math.isclose(gap,upper-lower)
    assert abs(0.5*(lower+upper) - ground_energy(params)) < 1e-4
    predicted = 2*abs(closed_form_M(params))
    assert abs(gap - predicted) / predicted < 0.01
    assert abs(gap - 2.527e-4) / 2.527e-4 < 0.02

def test_doublet_gap_grid():
    # mu puts the prediction at the geometric centre of the resolvable window
    for Delta in (0.1,0.2,0.4):
        for size in (40,80,120):
            params = ModelParams(J=1,Delta=Delta,L=size)
            per_mu = gap_prediction(params.replace(mu=1.0)).dE_pred
            radius = 2*math.sqrt(1 - Delta**2)
            target = math.sqrt(1e-8*radius * 1e-2*level_spacing(params))
            params = params.replace(mu=target/per_mu)
            predicted = 2*abs(closed_form_M(params))
            gap = doublet_gap(params).dE
            assert abs(gap - predicted) / predicted < 1e-2, (Delta,size)
            assert gap_prediction(params,exact=True).rel_err < 1e-2

def test_doublet_gap_no_pairing():
    params = ModelParams(J=1,Delta=0,L=20,mu=1e-3)
    assert abs(doublet_gap(params).dE - 2e-3) < 1e-9
    assert math.isclose(gap_prediction(params).dE_pred,2e-3,rel_tol=1e-12)

def test_doublet_gap_limits():
    assert _raises(PrecisionError,doublet_gap,ModelParams(J=1,Delta=0.2,L=50,mu=1e-14))
    assert _raises(RegimeError,doublet_gap,ModelParams(J=1,Delta=1.5,L=50,mu=1e-6))
    (lower,upper),gap = doublet_gap(ModelParams(J=1,Delta=0.2,L=20))
    assert gap < 1e-10

def test_track_doublet():
    params = ModelParams(J=1,Delta=0.2,L=30)
    data = track_doublet(params,[1e-5,2e-5,4e-5])
    assert list(data.columns) == ["mu","E_lower","E_upper","dE"]
    assert (np.diff(data.dE) > 0).all()
    # splitting is linear in mu
    assert abs(data.dE.iloc[2]/data.dE.iloc[0] - 4) < 0.01

def test_chain_spectra_match():
    # X and P chains of one model share their spectrum
    x_chain,p_chain = hn_chains(ModelParams(J=1,Delta=0.3,L=31))
    x_values = np.sort(eigs(build_generator_hn(x_chain),vectors=False).eigenvalues.imag)
    p_values = np.sort(eigs(build_generator_hn(p_chain),vectors=False).eigenvalues.imag)
    assert np.abs(x_values - p_values).max() < 1e-12

if __name__ == "__main__":
    for name,test in list(globals().items()):
        if name.startswith("test_") and callable(test):
            test()
    print("No errors")

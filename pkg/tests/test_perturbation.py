"""Perturbation theory tests"""

import os
import sys
import math
import warnings

import numpy as np

sys.path.insert(0,os.path.join(os.path.dirname(__file__),".."))

from kitaev.errors import PrecisionError, RegimeError
from kitaev.model import ModelParams
from kitaev.geometry import curved_inner_product
from kitaev.perturbation import (ground_doublet, offdiag_elements, closed_form_M,
    closed_form_log, gap_prediction, level_spacing, GapScan, gap_scan,
    asymptotic_scaling)

def _raises(error,func,*args,**kwargs):
    try:
        func(*args,**kwargs)
    except error:
        return True
    return False

def test_ground_doublet_normalized():
    params = ModelParams(J=1,Delta=0.2,L=30)
    chi = math.sqrt(1.2/0.8)
    psi_x,psi_p = ground_doublet(params)
    n = np.arange(1,31)
    weights_x = chi**(2*(30-n))
    weights_p = chi**(2*(n-1))
    assert math.isclose(curved_inner_product(psi_x,psi_x,weights_x).real,1.0,rel_tol=1e-12)
    assert math.isclose(curved_inner_product(psi_p,psi_p,weights_p).real,1.0,rel_tol=1e-12)
    assert abs(psi_x[-1]) > abs(psi_x[0]) and abs(psi_p[0]) > abs(psi_p[-1])

def test_offdiag_identity():
    for size in (10,50,100):
        params = ModelParams(J=1,Delta=0.2,L=size,mu=1e-6)
        m12,m21 = offdiag_elements(params)
        c = closed_form_M(params)
        assert abs(m12 - (-1j*c)) <= 1e-12*abs(c)
        assert abs(m21 - 1j*c) <= 1e-12*abs(c)

def test_offdiag_needs_metric():
    # the plain inner product does not reproduce the coupling
    params = ModelParams(J=1,Delta=0.2,L=50,mu=1e-6)
    psi_x,psi_p = ground_doublet(params)
    flat = -1j*params.mu*curved_inner_product(psi_p,psi_x,np.ones(50))
    m12,_ = offdiag_elements(params)
    assert abs(flat - m12) > 1e-3*abs(m12)

def test_gap_prediction_exact():
    params = ModelParams(J=1,Delta=0.2,L=50,mu=1e-6)
    result = gap_prediction(params,exact=True)
    assert abs(result.dE_pred - 2.527e-4) / 2.527e-4 < 0.02
    assert result.rel_err < 0.01
    assert result.exp10 == -4 and 1 <= result.mantissa < 10
    assert math.isclose(result.chi,math.sqrt(1.5),rel_tol=1e-12)

def test_gap_prediction_underflow():
    result = gap_prediction(ModelParams(J=1,Delta=0.2,L=50,mu=1e-14),exact=True)
    assert result.dE_exact is None and result.rel_err is None
    assert result.exp10 == -12
    reference = gap_prediction(ModelParams(J=1,Delta=0.2,L=50,mu=1e-6))
    assert math.isclose(result.mantissa,reference.mantissa,rel_tol=1e-12)

def test_gap_prediction_overflow():
    params = ModelParams(J=1,Delta=0.2,L=5000,mu=1.0)
    assert _raises(PrecisionError,closed_form_M,params)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        result = gap_prediction(params)
    assert len(caught) == 1 and "clipped" in str(caught[0].message)
    assert result.M12 is None and result.M21 is None
    assert math.isfinite(result.log10) and result.exp10 > 300
    sign,log_c = closed_form_log(params)
    assert sign == 1 and log_c > 700

def test_gap_prediction_elements():
    params = ModelParams(J=1,Delta=0.2,L=50,mu=1e-6)
    closed = gap_prediction(params)
    summed = gap_prediction(params,elements=True)
    assert closed.M12 == -1j*closed.c and closed.M21 == 1j*closed.c
    assert abs(summed.M12 - closed.M12) <= 1e-12*abs(closed.c)
    assert abs(summed.M21 - closed.M21) <= 1e-12*abs(closed.c)
    assert gap_prediction(params.replace(mu=0)).M12 == 0

def test_gap_prediction_limits():
    assert closed_form_log(ModelParams(J=1,Delta=0.2,L=20)) == (0.0,-math.inf)
    assert math.isclose(closed_form_M(ModelParams(J=1,Delta=0,L=20,mu=1e-3)),1e-3)
    assert _raises(RegimeError,gap_prediction,ModelParams(J=1,Delta=1.2,L=20,mu=1e-6))
    assert gap_prediction(ModelParams(J=1,Delta=0.2,L=20)).dE_pred == 0

def test_gap_scan_flags():
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        data = GapScan(L=[50],mu=[1e-6,1e-14],Delta=0.2)
        large = GapScan(L=[100],mu=[1e-2],Delta=0.2,exact=False)
    assert list(data.mu) == [1e-14,1e-6]
    assert list(data.validity_flag) == ["formula-only","exact"]
    assert data.rel_err.iloc[1] < 0.01
    assert (data.error == "").all()
    assert list(large.validity_flag) == ["extrapolated"]

def test_gap_scan_threads():
    grid = {"L":[20,30],"mu":[1e-8,1e-6],"Delta":0.2}
    serial = gap_scan(grid,threads=1)
    parallel = gap_scan(grid,threads=2)
    assert serial.to_csv() == parallel.to_csv()

def test_asymptotic_scaling():
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        data = GapScan(L=list(range(160,401,20)),mu=[1e-6],Delta=0.2,exact=False)
        fit = asymptotic_scaling(data)
    assert abs(fit.slope - math.log(math.sqrt(1.5))) < 0.02*math.log(math.sqrt(1.5))
    assert abs(fit.power + 3) < 0.3
    assert fit.points == 13 and not fit.finite_size

def test_asymptotic_scaling_weaker_pairing():
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        data = GapScan(L=list(range(320,801,40)),mu=[1e-10],Delta=0.1,exact=False)
        fit = asymptotic_scaling(data)
    chi = math.sqrt(1.1/0.9)
    assert abs(fit.slope - math.log(chi)) < 0.02*math.log(chi)
    assert abs(fit.power + 3) < 0.3

def test_asymptotic_scaling_window():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        data = GapScan(L=[40,60,80,100,120],mu=[1e-6],Delta=0.2,exact=False)
        fit = asymptotic_scaling(data)
    rate = math.log(math.sqrt(1.5))
    assert fit.finite_size and fit.points == 5
    assert abs(fit.slope - rate) < 0.02*rate
    assert any("finite-size" in str(x.message) for x in caught)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        short = GapScan(L=[10,20,30,40],mu=[1e-6],Delta=0.2,exact=False)
        assert _raises(ValueError,asymptotic_scaling,short)

def test_level_spacing():
    params = ModelParams(J=1,Delta=0.2,L=50)
    assert abs(level_spacing(params) - 0.01113) < 1e-4

if __name__ == "__main__":
    for name,test in list(globals().items()):
        if name.startswith("test_") and callable(test):
            test()
    print("No errors")

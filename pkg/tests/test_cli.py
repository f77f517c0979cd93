"""Command line tests"""

import os
import sys
import json
import tempfile
import warnings

import numpy as np
import pandas as pd

sys.path.insert(0,os.path.join(os.path.dirname(__file__),".."))

from kitaev.cli import main, E_OK, E_FAILED, E_SYNTAX
from kitaev.sweep import sweep

def _run(folder,command,config,*options,out=None):
    # write the configuration and run one command in folder
    path = os.path.join(folder,"config.json")
    with open(path,"w",encoding="utf-8") as fh:
        json.dump(config,fh)
    out = os.path.join(folder,out or f"{command}.csv")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return main(command,"--config",path,"--out",out,*options),out

def _sidecar(out):
    with open(os.path.splitext(out)[0]+".json","r",encoding="utf-8") as fh:
        return json.load(fh)

def test_stable_mode():
    with tempfile.TemporaryDirectory() as folder:
        code,out = _run(folder,"stable-mode",{"chain":{"t_L":1.0,"t_R":1.3225,"L":51}})
        assert code == E_OK
        data = pd.read_csv(out)
        assert list(data.columns) == ["site","right","left"] and len(data) == 51
        sidecar = _sidecar(out)
        assert sidecar["command"] == "stable-mode"
        assert sidecar["results"]["right_residual"] < 1e-12
        assert abs(sidecar["results"]["envelope_ratio"] + 1.3225) < 1e-12
        assert "numpy" in sidecar["versions"] and sidecar["outputs"] == [out]

def test_stable_mode_even():
    with tempfile.TemporaryDirectory() as folder:
        code,out = _run(folder,"stable-mode",{"chain":{"t_L":1.0,"t_R":2.0,"L":50}})
        assert code == E_FAILED
        assert not os.path.exists(out)

def test_spectrum():
    with tempfile.TemporaryDirectory() as folder:
        config = {"chain":{"t_L":2,"t_R":1,"L":9},"spectrum":{"metrics":True}}
        code,out = _run(folder,"spectrum",config)
        assert code == E_OK
        data = pd.read_csv(out)
        assert (np.diff(data.re_lambda) > 0).all()
        assert "center_of_mass" in data.columns
        assert _sidecar(out)["results"]["method"] == "tridiagonal"

def test_param_override():
    with tempfile.TemporaryDirectory() as folder:
        config = {"chain":{"t_L":2,"t_R":1,"L":9}}
        code,out = _run(folder,"spectrum",config,"--param","L=15")
        assert code == E_OK
        assert len(pd.read_csv(out)) == 15
        code,_ = _run(folder,"spectrum",config,"--param","L")
        assert code == E_SYNTAX

def test_usage_errors():
    with tempfile.TemporaryDirectory() as folder:
        code,_ = _run(folder,"bogus",{"chain":{"t_L":2,"t_R":1,"L":9}})
        assert code == E_SYNTAX
        code,_ = _run(folder,"spectrum",{"chain":{"t_L":2,"t_R":1,"L":9},"extra":{}})
        assert code == E_SYNTAX
        code,_ = _run(folder,"evolve",{"chain":{"t_L":2,"t_R":1,"L":9}})
        assert code == E_SYNTAX
        assert os.listdir(folder) == ["config.json"]

def test_trivial_phase():
    with tempfile.TemporaryDirectory() as folder:
        config = {
            "params":{"J":1,"Delta":0.2,"L":40,"theta":0},
            "wavepacket":{"n0":20,"sigma":3},
            "times":{"snapshots":[0,1]},
            }
        code,_ = _run(folder,"evolve",config)
        assert code == E_FAILED
        assert os.listdir(folder) == ["config.json"]

def test_evolve_diffusion():
    with tempfile.TemporaryDirectory() as folder:
        config = {
            "params":{"J":1,"Delta":2.3225/0.3225,"L":120},
            "wavepacket":{"n0":60,"sigma":6,"band":"top","tilt":True},
            "times":{"snapshots":[0,20,40]},
            }
        code,out = _run(folder,"evolve",config,out="top.csv")
        assert code == E_OK
        lattice = pd.read_csv(out)
        continuum = pd.read_csv(os.path.join(folder,"top_continuum.csv"))
        assert lattice.shape == continuum.shape == (3,121)
        results = _sidecar(out)["results"]
        assert max(results["mismatch"]) < 0.05
        assert results["horizon"] is None

def test_gap_scan():
    with tempfile.TemporaryDirectory() as folder:
        config = {"scan":{"L":[50],"Delta":0.2,"mu":[1e-14,1e-6],"levels":{"mu":[1e-5,2e-5]}}}
        code,out = _run(folder,"gap-scan",config,"--threads","1")
        assert code == E_OK
        data = pd.read_csv(out,keep_default_na=False)
        assert list(data.columns) == ["L","mu","dE_pred_mantissa","dE_pred_exp10",
            "dE_exact","rel_err","validity_flag","error"]
        assert list(data.validity_flag) == ["formula-only","exact"]
        assert list(data.dE_pred_exp10) == [-12,-4]
        levels = pd.read_csv(os.path.join(folder,"gap-scan_levels.csv"))
        assert list(levels.columns) == ["mu","E_lower","E_upper","dE"]
        assert _sidecar(out)["results"]["fit"] is None

def test_tree_check():
    with tempfile.TemporaryDirectory() as folder:
        config = {"tree":{"q":2,"N":8,"edges":True,"times":[0,1,2,5]}}
        code,out = _run(folder,"tree-check",config)
        assert code == E_OK
        assert len(pd.read_csv(out)) == 4
        edges = pd.read_csv(os.path.join(folder,"tree-check_edges.csv"))
        assert len(edges) == 254
        results = _sidecar(out)["results"]
        assert results["structure"] and results["max_deviation"] < 1e-8
        assert results["norm_drift"] < 1e-8

def test_curved_op():
    with tempfile.TemporaryDirectory() as folder:
        config = {"params":{"J":1,"Delta":0.2,"L":40},"curved":{"refine":2,"levels":1}}
        code,out = _run(folder,"curved-op",config)
        assert code == E_OK
        assert list(pd.read_csv(out).columns) == ["row","col","re","im"]
        results = _sidecar(out)["results"]
        assert results["band"] == "bottom" and results["orientation"] == 1
        assert len(results["convergence"]) == 3
        assert abs(results["convergence"][-1]["ratio"] - 4) < 0.6

def test_sweep_threads():
    grid = {"L":[20,30,40],"Delta":[0.1,0.2,0.3],"mu":[1e-8,1e-7,1e-6],"target":"gap"}
    with tempfile.TemporaryDirectory() as folder:
        code,serial = _run(folder,"sweep",{"grid":grid},"--threads","1",out="serial.csv")
        assert code == E_OK
        code,parallel = _run(folder,"sweep",{"grid":grid},"--threads","8",out="parallel.csv")
        assert code == E_OK
        with open(serial,"rb") as fh:
            first = fh.read()
        with open(parallel,"rb") as fh:
            second = fh.read()
        assert first == second
        assert len(pd.read_csv(serial)) == 27

def test_sweep_failed():
    grid = {"L":[20],"Delta":[2.0],"mu":[1e-6]}
    with tempfile.TemporaryDirectory() as folder:
        code,out = _run(folder,"sweep",{"grid":grid})
        assert code == E_FAILED
        data = pd.read_csv(out,keep_default_na=False)
        assert data.error.iloc[0].startswith("RegimeError")

def test_sweep_table():
    data = sweep({"L":[20],"Delta":[0.2,2.0],"mu":[1e-6],"target":"doublet","unused":1})
    assert list(data.columns) == ["L","Delta","mu","J","E_lower","E_upper","dE","error"]
    assert data.error.iloc[0] == "" and data.error.iloc[1].startswith("RegimeError")
    assert data.succeeded()
    assert not sweep({"L":[20],"Delta":[2.0],"mu":[1e-6]}).succeeded()

if __name__ == "__main__":
    for name,test in list(globals().items()):
        if name.startswith("test_") and callable(test):
            test()
    print("No errors")

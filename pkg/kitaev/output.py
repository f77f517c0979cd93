"""Run output files

Data tables are written as CSV with a header row and doubles in scientific
notation with 17 significant digits. Every run also writes a JSON sidecar
with the configuration echo, package versions, wall time and timestamp.
Data files carry no timestamps, so reruns are byte-identical.

Files are written through `Outputs`, which removes everything written so far
when the run fails.
"""

import os
import sys
import json
import time
import datetime as dt
import importlib.metadata as metadata

import numpy as np
import pandas as pd

FLOAT_FORMAT = "%.16e"
"""CSV float format (17 significant digits)"""

PACKAGES = ("kitaev","numpy","scipy","pandas","networkx")
"""Packages whose versions are recorded in sidecars"""

def versions() -> dict:
    """Python and package versions"""
    result = {"python":sys.version.split()[0]}
    for name in PACKAGES:
        try:
            result[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            result[name] = "unknown"
    return result

def sidecar_name(path:str) -> str:
    """Sidecar file name of a data file"""
    return os.path.splitext(path)[0] + ".json"

def companion_name(path:str,suffix:str) -> str:
    """Companion data file name `<stem>_<suffix>.csv`"""
    return f"{os.path.splitext(path)[0]}_{suffix}.csv"

def _jsonable(value):
    # numpy scalars, arrays and non-finite floats in sidecars
    if isinstance(value,dict):
        return {str(x):_jsonable(y) for x,y in value.items()}
    if isinstance(value,(list,tuple)):
        return [_jsonable(x) for x in value]
    if isinstance(value,np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value,np.generic):
        return _jsonable(value.item())
    if isinstance(value,complex):
        return {"re":_jsonable(value.real),"im":_jsonable(value.imag)}
    if isinstance(value,float) and not np.isfinite(value):
        return None
    return value

class Outputs:
    """Output file set removed on failure

    Use as a context manager; any exception leaving the block deletes the
    files written inside it.
    """

    def __init__(self,path:str,config:dict):
        """Construct an output set

        # Arguments

        - `path`: main data file name

        - `config`: configuration echo for the sidecar
        """
        self.path = path
        self.config = config
        self.written = []
        self.started = time.perf_counter()

    def __enter__(self):
        folder = os.path.dirname(self.path)
        if folder and not os.path.isdir(folder):
            raise FileNotFoundError(f"output folder {folder!r} does not exist")
        return self

    def __exit__(self,kind,value,traceback):
        if kind is not None:
            for path in self.written:
                if os.path.exists(path):
                    os.remove(path)
            self.written.clear()
        return False

    def write_csv(self,data:pd.DataFrame,path:str=None) -> str:
        """Write a data table (default the main data file)"""
        path = path or self.path
        self.written.append(path)
        data.to_csv(path,index=False,header=True,float_format=FLOAT_FORMAT,lineterminator="\n")
        return path

    def write_sidecar(self,command:str,results:dict=None) -> str:
        """Write the JSON sidecar of the main data file"""
        path = sidecar_name(self.path)
        self.written.append(path)
        data = {
            "command":command,
            "config":self.config,
            "outputs":[x for x in self.written if x != path],
            "results":results or {},
            "versions":versions(),
            "wall_time":time.perf_counter() - self.started,
            "timestamp":dt.datetime.now(dt.timezone.utc).isoformat(),
            }
        with open(path,"w",encoding="utf-8") as fh:
            json.dump(_jsonable(data),fh,indent=4)
            fh.write("\n")
        return path

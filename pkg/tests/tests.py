"""Kitaev tests"""

import os
import sys
import importlib

sys.path.insert(0,os.path.dirname(__file__))

MODULES = ["test_model","test_spectral","test_dynamics","test_geometry",
    "test_perturbation","test_cli"]

if __name__ == "__main__":

    errors = 0
    for name in MODULES:
        print("Testing",name,"...",flush=True)
        module = importlib.import_module(name)
        for test,func in vars(module).items():
            if not test.startswith("test_") or not callable(func):
                continue
            try:
                func()
            except Exception as err: # pylint: disable=broad-exception-caught
                print(f"ERROR [kitaev.tests]: {name}.{test}: {type(err).__name__} {err}",
                    file=sys.stderr)
                errors += 1

    if errors:
        print(f"{errors} error found!")
        sys.exit(1)
    else:
        print("No errors")

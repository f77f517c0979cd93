"""Run configuration

A run is configured by one JSON object holding either model parameters
(`params`) or a single chain (`chain`), plus the sections the command uses:

- `wavepacket`: `n0`, `sigma`, `K0` or `band`, `tilt`, `target` (`evolve`; `target`
  also selects the chain of `stable-mode`)

- `times`: `snapshots`, `scaled`, `method`, `dt`, `subtract_gain` (`evolve`)

- `scan`: `L`, `Delta`, `mu`, `J`, `exact`, `levels` (`gap-scan`)

- `grid`: `L`, `Delta`, `mu`, `J`, `target` (`sweep`)

- `tree`: `q`, `N`, `t`, `times`, `layer` or `profile`, `method`, `dt`, `edges`
  (`tree-check`)

- `curved`: `band`, `target`, `levels`, `refine` (`curved-op`)

- `spectrum`: `chain`, `method`, `metrics` (`spectrum`)

Missing model parameters take the `ModelParams` defaults. Loading a
configuration and serializing it again gives the same object.

# Example

    {
        "params": {"J": 1, "Delta": 0.2, "L": 50, "mu": 1e-6},
        "scan": {"L": [10, 20, 30], "Delta": 0.2, "mu": [1e-14, 1e-12, 1e-10]}
    }
"""

import json
import dataclasses

from kitaev.errors import ConfigError
from kitaev.model import ModelParams, HNParams

SECTIONS = ("wavepacket","times","scan","grid","tree","curved","spectrum")
"""Command-specific configuration sections"""

@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration"""
    params:ModelParams|None = None
    chain:HNParams|None = None
    sections:dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.params is not None and self.chain is not None:
            raise ConfigError("configuration must give 'params' or 'chain', not both")

    def section(self,name:str) -> dict:
        """Section `name` (empty when absent)"""
        if name not in SECTIONS:
            raise ConfigError(f"section {name!r} is invalid, must be one of {SECTIONS}")
        return dict(self.sections.get(name,{}))

    def require(self,name:str) -> dict:
        """Section `name`, which must be present"""
        if name not in self.sections:
            raise ConfigError(f"configuration section {name!r} is missing")
        return self.section(name)

    def to_dict(self) -> dict:
        """Return the JSON object form"""
        data = {}
        if self.params is not None:
            data["params"] = self.params.to_dict()
        if self.chain is not None:
            data["chain"] = self.chain.to_dict()
        data.update({x:self.sections[x] for x in SECTIONS if x in self.sections})
        return data

    def to_json(self,**kwargs) -> str:
        """Return the JSON text form"""
        return json.dumps(self.to_dict(),**kwargs)

    @classmethod
    def from_dict(cls,data:dict):
        """Construct from a JSON object"""
        if not isinstance(data,dict):
            raise ConfigError(f"configuration must be a JSON object, not {type(data).__name__}")
        unknown = [x for x in data if x not in ("params","chain") + SECTIONS]
        if unknown:
            raise ConfigError(f"unknown configuration key(s) {unknown}")
        for name in SECTIONS:
            if name in data and not isinstance(data[name],dict):
                raise ConfigError(f"configuration section {name!r} must be a JSON object")
        try:
            params = ModelParams.from_dict(data["params"]) if "params" in data else None
            chain = HNParams.from_dict(data["chain"]) if "chain" in data else None
        except (TypeError,ValueError) as err:
            if isinstance(err,ConfigError):
                raise
            raise ConfigError(f"invalid model parameters: {err}") from err
        return cls(params=params,chain=chain,
            sections={x:data[x] for x in SECTIONS if x in data})

def load(path:str) -> RunConfig:
    """Read a configuration file

    # Arguments

    - `path`: JSON file name

    # Returns

    - `RunConfig`: resolved configuration
    """
    with open(path,"r",encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as err:
            raise ConfigError(f"configuration file {path!r} is not valid JSON: {err}") from err
    return RunConfig.from_dict(data)

"""Bosonic Kitaev chain simulator

Syntax: `kitaev [-h] -c CONFIG [-o OUT] [--param NAME=VALUE] [--threads THREADS]
[--warning] [--debug]
{spectrum,evolve,stable-mode,tree-check,curved-op,gap-scan,sweep}`

Positional arguments:

- `{spectrum,evolve,stable-mode,tree-check,curved-op,gap-scan,sweep}`

Options:

- `-h`, `--help`            show this help message and exit

- `-c`, `--config CONFIG`   set JSON run configuration file

- `-o`, `--out OUT`         set main output CSV file name (default
                            `<command>.csv`)

- `--param NAME=VALUE`      override a model or chain parameter (repeatable)

- `--threads THREADS`       set worker count (default `KITAEV_THREADS` or the
                            CPU count)

- `--warning`               enable warning messages from python

- `--debug`                 enable debug traceback on exceptions

See https://www.eudoxys.com/kitaev for documentation.

Description:

The `kitaev` package simulates the expectation values of the one-dimensional
bosonic Kitaev chain with tunneling `J e^(i theta)`, pairing `Delta e^(i
phi)` and chemical potential `mu`. In the nontrivial phase the gauge
reduction `theta = phi = pi/2`, `Delta -> sqrt(Delta^2 - J^2 cos^2 theta)`
splits the quadratures into two Hatano-Nelson chains with opposite
chirality. Each chain has three dual pictures, all available here:

- `spectrum`: eigenvalues, residuals and localization of a chain or of the
  coupled chains

- `evolve`: Gaussian wavepacket dynamics on a chain, with the closed-form
  continuum overlay at the band top or bottom

- `stable-mode`: right and left zero modes of an odd chain

- `tree-check`: Bethe lattice evolution against its layer chain

- `curved-op`: discretized Schrödinger or diffusion-reaction operator on the
  hyperbolic funnel, compared with the chain band edge

- `gap-scan`: ground doublet splitting from degenerate perturbation theory,
  with the exact splitting where double precision resolves it

- `sweep`: a target routine over an `(L, Delta, mu)` grid on a worker pool

Chains with `t_L t_R < 0` are oscillatory (purely imaginary spectrum),
chains with `t_L t_R > 0` are diffusive (real spectrum), and `t_L t_R = 0`
is an exceptional point.

Package architecture:

```mermaid
flowchart TD

    ModelParams --> reduce_gauge
    reduce_gauge --> hn_chains

    hn_chains --> Generator
    Generator --> Spectrum

    Spectrum --> Trajectory
    hn_chains --> EffCoeffs
    EffCoeffs --> continuum_gaussian

    hn_chains --> HyperbolicMetric
    HyperbolicMetric --> curved_operator
    TreeGraph --> layer_chain

    Spectrum --> PerturbationResult
    HyperbolicMetric --> PerturbationResult
    PerturbationResult --> GapScan
    GapScan --> Sweep
```

Example:

    kitaev gap-scan --config scan.json

Caveats:

- Dense eigendecomposition is limited to 2000 sites.

- Splittings below `1e-10` of the spectral radius are reported from the
  closed form only, with a `formula-only` flag.

- Anti-diffusive runs lose accuracy beyond a reliable horizon set by the
  spread between the band edges; later snapshots are flagged with a warning.

Package information:

- Source code: https://github.com/eudoxys/kitaev

- Documentation: https://www.eudoxys.com/kitaev

- Issues: https://github.com/eudoxys/kitaev/issues

- License: https://github.com/eudoxys/kitaev/blob/main/LICENSE

- Dependencies:

  - [numpy](https://pypi.org/project/numpy/)
  - [scipy](https://pypi.org/project/scipy/)
  - [pandas](https://pypi.org/project/pandas/)
  - [networkx](https://pypi.org/project/networkx/)

"""
from kitaev.cli import main, run
from kitaev.errors import KitaevError, RegimeError, PrecisionError, ConvergenceError, \
    DefectiveError, StabilityError, IntegrationError, BoundaryError, ConfigError
from kitaev.model import ModelParams, HNParams, Generator, EffCoeffs, CoupledCoeffs, \
    Regime, Phase, Band
from kitaev.spectral import Spectrum, eigs, classify_regime, stationary_modes
from kitaev.dynamics import FieldState, Trajectory, WavepacketSpec
from kitaev.geometry import HyperbolicMetric, TreeGraph
from kitaev.perturbation import PerturbationResult, GapScan
from kitaev.sweep import Sweep
from kitaev.config import RunConfig

"""iterlil: simulation and numerics for perturbed random walks and their
generation-iterated counting processes, with iterated-logarithm-scale
fluctuation diagnostics.
"""

from .branching import GenerationRun, simulate_generations, zj_term
from .config import McConfig, canonical_text, fingerprint, parse_config
from .errors import (
    ConfigError,
    DegenerateLawError,
    DomainError,
    GridError,
    InvalidParameterError,
    IterlilError,
    OutOfHorizonError,
    PopulationCapError,
    TableRangeError,
    UnsupportedQueryError,
)
from .gridfn import GridFunction, as_grid
from .harness import (
    center_y1,
    clt_check,
    dump_scan_csv,
    ks_statistic,
    lil_normalizer,
    lil_scan,
    nu_increment_check,
    scan_grid,
    supermartingale_check,
    supermartingale_sweep,
    tail_sum_check,
    variance_scan,
)
from .kernels import NUMBA_ENABLED
from .laws import FAMILIES, JointStepLaw, make_law, parse_law
from .paths import (
    PrwPath,
    count_nu,
    count_y,
    decompose_xz,
    dump_path_csv,
    load_path_csv,
    simulate_path,
    supermartingale_stat,
    tail_sum,
)
from .renewal import (
    RenewalTable,
    check_subadditivity,
    export_table_csv,
    import_table_csv,
    renewal_function,
    v1_table,
    vj_monte_carlo,
    vj_table,
)
from .rng import Stream
from .walks import run_walks

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateLawError",
    "DomainError",
    "FAMILIES",
    "GenerationRun",
    "GridError",
    "GridFunction",
    "InvalidParameterError",
    "IterlilError",
    "JointStepLaw",
    "McConfig",
    "NUMBA_ENABLED",
    "OutOfHorizonError",
    "PopulationCapError",
    "PrwPath",
    "RenewalTable",
    "Stream",
    "TableRangeError",
    "UnsupportedQueryError",
    "as_grid",
    "canonical_text",
    "check_subadditivity",
    "center_y1",
    "clt_check",
    "count_nu",
    "count_y",
    "decompose_xz",
    "dump_path_csv",
    "dump_scan_csv",
    "export_table_csv",
    "fingerprint",
    "import_table_csv",
    "ks_statistic",
    "lil_normalizer",
    "lil_scan",
    "load_path_csv",
    "make_law",
    "nu_increment_check",
    "parse_config",
    "parse_law",
    "renewal_function",
    "run_walks",
    "scan_grid",
    "simulate_generations",
    "simulate_path",
    "supermartingale_check",
    "supermartingale_stat",
    "supermartingale_sweep",
    "tail_sum",
    "tail_sum_check",
    "v1_table",
    "variance_scan",
    "vj_monte_carlo",
    "vj_table",
    "zj_term",
]

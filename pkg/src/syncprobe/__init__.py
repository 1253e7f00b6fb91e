"""syncprobe: quantum-synchronization-assisted probing of bath spectra.

Simulates a dissipative two-qubit probing scheme (exact global secular
Lindblad dynamics), detects in/anti-phase synchronization via windowed
Pearson correlation, and trains single-hidden-layer networks on probe
Fourier spectra to classify and regress the environment's Ohmicity index
and coupling strength.
"""

__version__ = "0.1.0"

from .dataset import (
    DatasetConfig,
    LabeledDataset,
    Spectrum,
    SpectrumLabel,
    add_noise,
    fourier_modulus,
    generate,
    kfold,
    load,
    save,
    split,
    standardize,
)
from .errors import (
    DataFormatError,
    DegeneracyError,
    NumericalError,
    SyncprobeError,
    UndefinedCorrelationError,
    ValidationError,
)
from .mlp import (
    EvalReport,
    MlpModel,
    TrainConfig,
    classify_error,
    cross_validate,
    forward,
    gradient_check,
    init_model,
    load_model,
    regress_nme,
    save_model,
    train,
    weight_profile,
)
from .quantum import (
    GRID_DENSE,
    GRID_FEATURES,
    Eigensystem,
    Liouvillian,
    ProbeSetup,
    SpectralMode,
    TimeGrid,
    Trajectory,
    asymptotic_params,
    build_liouvillian,
    dominant_mode,
    eigensystem,
    plus_plus_state,
    propagate,
    spectral_decomposition,
    spectral_density,
    sync_boundary_omega_p,
    sync_boundary_s,
)
from .sync import (
    PearsonSeries,
    SyncPhase,
    SyncVerdict,
    classify_sync,
    pearson_series,
    pearson_windowed,
)

__all__ = [name for name in dir() if not name.startswith("_")]

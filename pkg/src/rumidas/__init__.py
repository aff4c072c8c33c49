"""Bayesian reverse-MIDAS forecasting of a daily series from monthly releases.

The package covers the full workflow: release-calendar alignment,
dummy-interacted mixed-frequency regression designs, Gibbs sampling
under an independent Normal-Gamma prior, rolling direct multi-horizon
forecasting, and evaluation with RMSE, CRPS, log scores,
Diebold-Mariano tests, and the model confidence set.
"""

__version__ = "0.1.0"

from .bayes import (
    McmcConfig,
    NormalGammaPrior,
    PosteriorDraws,
    PredictiveDensity,
    gibbs_sample,
    posterior_predictive,
)
from .calendars import (
    DailySeries,
    MonthlyReleaseSeries,
    PeriodIndex,
    PeriodScheme,
    align_monthly_to_daily,
    first_working_day,
    interpolate_weekends,
    period_index,
    read_daily_csv,
    read_monthly_csv,
    synthesize_release_dates,
    write_daily_csv,
    write_monthly_csv,
)
from .design import (
    DesignMatrix,
    ExogTerm,
    LfTerm,
    ModelSpec,
    benchmark_spec,
    build_benchmark,
    build_rumidas,
    horizon_shift,
    regressor_row,
)
from .errors import (
    AlignmentError,
    ConfigError,
    DesignError,
    InterpolationError,
    NumericalError,
    RumidasError,
    ScoreError,
    SpecError,
    WindowError,
)
from .forecast import (
    AuditReport,
    DgpParams,
    ForecastPlan,
    ForecastRecord,
    PriorSettings,
    SeriesBundle,
    audit_plan,
    read_records_csv,
    run_plan,
    simulate_dgp,
    write_records_csv,
)
from .scoring import (
    DmResult,
    LossSeries,
    McsResult,
    ScoreCell,
    ScoreTable,
    build_score_table,
    crps_mixture,
    diebold_mariano,
    log_predictive_score,
    model_confidence_set,
    moving_block_indices,
    rmse,
)

__all__ = [name for name in dir() if not name.startswith("_")]

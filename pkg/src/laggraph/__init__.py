"""Technical lag analysis over package dependency networks."""

__version__ = "0.1.0"

from .semver import (  # noqa: E402,F401
    Comparator,
    Constraint,
    ConstraintParseError,
    ReleaseType,
    Version,
    VersionParseError,
    classify,
    compare,
    parse_constraint,
    parse_version,
    satisfies,
)
from .corpus import (  # noqa: E402,F401
    CorpusError,
    Dependency,
    DuplicateRecordError,
    FilterConfig,
    FilterReport,
    PackageIndex,
    RawDependency,
    RawRecord,
    Release,
    SchemaError,
    build_index,
    load,
)
from .lag import (  # noqa: E402,F401
    Direction,
    LagChange,
    LagSample,
    SampleContext,
    adoption,
    dep_lag,
    installable,
    lag_change,
    lifespan_events,
    lifespan_lags,
    max_installable,
    missed,
    missed_types,
    release_lag,
)
from .whatif import LoosenLevel, installable_loosened, lag_loosened  # noqa: E402,F401

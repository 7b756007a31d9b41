"""Exception types, grouped by the CLI exit code they map to."""


class NewtonBankError(Exception):
    """Base class for all errors raised by this package."""


# -- usage errors (exit code 2) ---------------------------------------------

class ParameterError(NewtonBankError):
    """Invalid argument value or inconsistent array shape."""


class CatalogError(NewtonBankError):
    """Unknown scenario or catalog entry id."""


class LabelError(ParameterError):
    """Ground-truth label vector is not one-hot or out of range."""


class TrainingError(NewtonBankError):
    """Training cannot run (e.g. empty dataset)."""


# -- data / format errors (exit code 3) --------------------------------------

class BankError(NewtonBankError):
    """Descriptor bank is empty or does not match the query dimension."""


class StorageError(NewtonBankError):
    """Bank or parameter file is unreadable, truncated, or wrong version."""


class IngestionError(NewtonBankError):
    """Query set rows are malformed or missing required ground truth."""


# -- numeric failures (exit code 4) ------------------------------------------

class ProjectionError(NewtonBankError):
    """Point at or behind the camera plane."""


class FlowUndefinedError(ProjectionError):
    """Flow direction requested for a state with zero velocity."""


class MetricError(NewtonBankError):
    """Degenerate input to a curve metric (empty or zero-length curve)."""

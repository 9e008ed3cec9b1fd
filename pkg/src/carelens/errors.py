"""Shared exception types.

Every error carries a machine-readable ``code`` so the HTTP layer can map it
to a documented (status, code) pair without string matching.
"""


class CarelensError(Exception):
    """Base class for all domain errors."""

    code = "internal_error"


# --- sensor pipeline ---

class NonFiniteTimestamp(CarelensError):
    code = "non_finite_timestamp"


class UnknownParticipant(CarelensError):
    code = "unknown_participant"


class AllMissingColumn(CarelensError):
    code = "all_missing_column"


# --- model training ---

class EmptyMatrix(CarelensError):
    code = "empty_matrix"


class SingleClass(CarelensError):
    code = "single_class"


class UnlabeledData(CarelensError):
    code = "unlabeled_data"


class NoCandidates(CarelensError):
    code = "no_candidates"


class InsufficientData(CarelensError):
    code = "insufficient_data"


# --- explanation engine ---

class TooManyFeatures(CarelensError):
    code = "too_many_features"


class EmptyBackground(CarelensError):
    code = "empty_background"


class TargetUnreachable(CarelensError):
    code = "target_unreachable"


class ImmutableConflict(CarelensError):
    code = "immutable_conflict"


class TooManyNodes(CarelensError):
    code = "too_many_nodes"


class TooFewRows(CarelensError):
    code = "too_few_rows"


# --- affect pipeline ---

class InvalidDistribution(CarelensError):
    code = "invalid_distribution"


class EmptyWindow(CarelensError):
    code = "empty_window"


# --- chat service ---

class SessionNotFound(CarelensError):
    code = "session_not_found"


# --- statistics ---

class DegenerateSample(CarelensError):
    code = "degenerate_sample"


class LengthMismatch(CarelensError):
    code = "length_mismatch"


class OutOfRange(CarelensError):
    code = "out_of_range"


class MissingCondition(CarelensError):
    code = "missing_condition"


# --- configuration / service ---

class ConfigError(CarelensError):
    code = "config_error"

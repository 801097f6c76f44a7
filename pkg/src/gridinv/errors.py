"""Exception hierarchy shared across the pipeline."""


class GridInvError(Exception):
    """Base class for all gridinv errors."""


class IngestError(GridInvError):
    """Malformed CSV input: bad header, non-monotonic timestamps, bad cells."""


class SchemaError(GridInvError):
    """Attribute-kind inference failed (e.g. mixed numeric/string column)."""


class DiscretizeError(GridInvError):
    """Invalid discretization rule or value outside the rule's domain."""


class MiningError(GridInvError):
    """Bad mining parameters or inputs (empty dataset, support out of range)."""


class ClosureError(MiningError):
    """Frequent-itemset table violates downward closure."""


class RuleError(GridInvError):
    """Structurally invalid association rule or rule file."""


class MonitorError(GridInvError):
    """Rule references an attribute unknown to the monitored stream."""


class SynthError(GridInvError):
    """Invalid scenario config, contradictory couplings, or bad attack spec."""

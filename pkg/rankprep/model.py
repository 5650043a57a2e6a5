import logging

from rankprep.serialization import SerializationMixin, canonical_hash, to_builtin

logger = logging.getLogger(__name__)


class ReportDocument(SerializationMixin):
    """
    The json document every subcommand emits.

    It wraps a result (usually a NamedTuple report) together with the resolved
    config it was produced from, so any document can be re-run from itself.
    The document never carries timestamps or paths of the machine it ran on.
    """

    def __init__(self, kind, result, config=None, schema_version=1):
        from rankprep import __version__
        self.kind = kind
        self.result = result
        self.config = to_builtin(config) if config is not None else {}
        self.schema_version = schema_version
        self.version = __version__

    @property
    def config_hash(self):
        return canonical_hash(self.config)

    def _get_report_items(self):
        return {
            "kind": self.kind,
            "schema_version": self.schema_version,
            "version": self.version,
            "config": self.config,
            "config_hash": self.config_hash,
            "result": self.result,
        }

    def __repr__(self):
        return f"<ReportDocument {self.kind} {self.config_hash[:10]}>"


def report_rows(records, fields=None):
    """
    Turns a list of NamedTuple records into csv-ready dict rows.

    Only the given fields are kept, in order.
    """
    rows = []
    for record in records:
        row = to_builtin(record)
        if fields is not None:
            row = {field: row[field] for field in fields}
        rows.append(row)
    return rows

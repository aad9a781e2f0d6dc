import json
import logging
from dataclasses import dataclass, field
from enum import Enum

from distvae.errors import SchemaError

logger = logging.getLogger(__name__)


class ColumnKind(str, Enum):
    CONTINUOUS = 'continuous'
    ORDINAL = 'ordinal'
    DISCRETE = 'discrete'


@dataclass(frozen=True)
class ColumnSpec:
    """One column of a table.

    Ordinal columns are standardized and modelled like continuous ones; only
    generation treats them differently (rounding). Discrete columns carry an
    ordered label list and are stored as level indices.
    """
    name: str
    kind: ColumnKind
    level_labels: tuple = field(default=())

    def __post_init__(self):
        if not self.name:
            raise SchemaError("column name must be non-empty")
        kind = ColumnKind(self.kind)
        object.__setattr__(self, 'kind', kind)
        object.__setattr__(self, 'level_labels', tuple(str(l) for l in self.level_labels))
        if kind is ColumnKind.DISCRETE:
            if len(self.level_labels) < 2:
                raise SchemaError(f"discrete column {self.name} needs at least 2 levels")
            if len(set(self.level_labels)) != len(self.level_labels):
                raise SchemaError(f"discrete column {self.name} has duplicate level labels")
        elif self.level_labels:
            raise SchemaError(f"{kind.value} column {self.name} must not list levels")

    @property
    def levels(self):
        if self.kind is ColumnKind.DISCRETE:
            return len(self.level_labels)
        return None

    @property
    def is_discrete(self):
        return self.kind is ColumnKind.DISCRETE

    def to_dict(self):
        out = {'name': self.name, 'kind': self.kind.value}
        if self.is_discrete:
            out['levels'] = list(self.level_labels)
        return out

    @classmethod
    def from_dict(cls, entry):
        for key in ('name', 'kind'):
            if key not in entry:
                raise SchemaError(f"schema entry missing required field '{key}': {entry}")
        try:
            kind = ColumnKind(entry['kind'])
        except ValueError:
            raise SchemaError(f"unknown column kind '{entry['kind']}' for column {entry['name']}")
        return cls(name=entry['name'], kind=kind, level_labels=tuple(entry.get('levels', ())))


@dataclass(frozen=True)
class Schema:
    columns: tuple

    def __post_init__(self):
        columns = tuple(self.columns)
        object.__setattr__(self, 'columns', columns)
        names = [c.name for c in columns]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate column names in schema: {names}")

    def __len__(self):
        return len(self.columns)

    def __iter__(self):
        return iter(self.columns)

    @property
    def names(self):
        return [c.name for c in self.columns]

    @property
    def continuous_indices(self):
        """Positions of continuous and ordinal columns, in schema order."""
        return [i for i, c in enumerate(self.columns) if not c.is_discrete]

    @property
    def discrete_indices(self):
        return [i for i, c in enumerate(self.columns) if c.is_discrete]

    @property
    def continuous_names(self):
        return [self.columns[i].name for i in self.continuous_indices]

    @property
    def encoded_width(self):
        return sum(c.levels if c.is_discrete else 1 for c in self.columns)

    def index(self, name):
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise SchemaError(f"unknown column {name}")

    def column(self, name):
        return self.columns[self.index(name)]

    def to_dict(self):
        return {'columns': [c.to_dict() for c in self.columns]}

    @classmethod
    def from_dict(cls, document):
        if 'columns' not in document:
            raise SchemaError("schema document has no 'columns' list")
        return cls(tuple(ColumnSpec.from_dict(entry) for entry in document['columns']))


def load_schema(path):
    try:
        with open(path, 'r', encoding='utf-8') as file:
            document = json.load(file)
    except FileNotFoundError:
        raise SchemaError(f"schema file not found: {path}")
    except json.JSONDecodeError as err:
        raise SchemaError(f"schema file {path} is not valid JSON: {err}")
    schema = Schema.from_dict(document)
    logger.info(f"Loaded schema with {len(schema)} columns from {path}")
    return schema


def save_schema(schema, path):
    with open(path, 'w', encoding='utf-8') as file:
        json.dump(schema.to_dict(), file, indent=2)
        file.write('\n')

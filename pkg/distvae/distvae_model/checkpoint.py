import json
import logging
from dataclasses import dataclass, field

from distvae.data_core.schema import Schema
from distvae.data_core.table import ScalingStats
from distvae.distvae_model.config import TrainConfig
from distvae.distvae_model.model import DistVAE
from distvae.errors import CheckpointError, DistVAEError
from distvae.nn_core.layers import Mlp

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
REQUIRED_FIELDS = ('format_version', 'schema', 'scaling', 'config', 'encoder', 'decoder', 'loss_trace',
                   'column_summary')


@dataclass(frozen=True)
class Checkpoint:
    """A trained model with everything needed to generate from it.

    column_summary maps each continuous/ordinal column name to its training
    percentiles (standardized units) and, for ordinal columns, the observed
    levels in native units.
    """
    schema: Schema
    scaling: ScalingStats
    config: TrainConfig
    encoder: Mlp
    decoder: Mlp
    loss_trace: list = field(default_factory=list)
    column_summary: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def model(self):
        return DistVAE(self.schema, self.config, self.encoder, self.decoder)

    def to_dict(self):
        return {
            'format_version': self.format_version,
            'schema': self.schema.to_dict(),
            'scaling': self.scaling.to_dict(),
            'config': self.config.to_dict(),
            'encoder': self.encoder.to_dict(),
            'decoder': self.decoder.to_dict(),
            'loss_trace': [dict(entry) for entry in self.loss_trace],
            'column_summary': self.column_summary,
        }

    @classmethod
    def from_dict(cls, document):
        if not isinstance(document, dict):
            raise CheckpointError("checkpoint document must be a JSON object")
        version = document.get('format_version')
        if version != FORMAT_VERSION:
            raise CheckpointError(
                f"unsupported checkpoint format_version {version!r} (expected {FORMAT_VERSION})")
        missing = [key for key in REQUIRED_FIELDS if key not in document]
        if missing:
            raise CheckpointError(f"checkpoint format_version {version} is missing fields {missing}")
        try:
            checkpoint = cls(
                schema=Schema.from_dict(document['schema']),
                scaling=ScalingStats.from_dict(document['scaling']),
                config=TrainConfig.from_mapping(document['config']),
                encoder=Mlp.from_dict(document['encoder']),
                decoder=Mlp.from_dict(document['decoder']),
                loss_trace=list(document['loss_trace']),
                column_summary=dict(document['column_summary']),
            )
            # layer sizes must agree with the config
            checkpoint.model()
        except CheckpointError:
            raise
        except (DistVAEError, KeyError, TypeError, ValueError) as err:
            raise CheckpointError(f"checkpoint format_version {version} is corrupt: {err}")
        if list(checkpoint.scaling.names) != checkpoint.schema.continuous_names:
            raise CheckpointError("checkpoint scaling stats do not match its schema")
        return checkpoint


def dumps_checkpoint(checkpoint):
    return json.dumps(checkpoint.to_dict(), indent=1) + '\n'


def save_checkpoint(checkpoint, path):
    with open(path, 'w', encoding='utf-8') as file:
        file.write(dumps_checkpoint(checkpoint))
    logger.info(f"Checkpoint written to {path}")


def load_checkpoint(path):
    try:
        with open(path, 'r', encoding='utf-8') as file:
            document = json.load(file)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint file not found: {path}")
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise CheckpointError(f"checkpoint file {path} is corrupt: {err}")
    checkpoint = Checkpoint.from_dict(document)
    logger.info(f"Loaded checkpoint from {path}")
    return checkpoint

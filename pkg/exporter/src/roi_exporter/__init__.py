"""Export per-object pooled features from detection annotations."""

from .annotations import AnnotationError, AnnotationSet, load_annotations
from .cli import ExportJob, run_export
from .mock import mock_feature, mock_rows
from .writer import ExportError, write_outputs

__version__ = "0.1.0"

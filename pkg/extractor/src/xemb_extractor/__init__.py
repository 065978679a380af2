"""xemb_extractor: encode parallel corpora into the xemb embedding format."""

from .extract import (
    AlignmentReport,
    ExtractionError,
    ExtractionJob,
    encode_sentences,
    extract,
    verify_alignment,
)
from .format import XembHeader, read_header, read_rows, write_xemb

__version__ = "0.1.0"

"""Speech steganography in LSP vector-quantization indices using an
8x8x8 magic cube.  Six hidden bits per 30 ms frame."""

from .errors import (CapacityError, ConfigurationError, ConversionError, DomainError,
                     FormatError, IntegrityError, StegoError, TruncationError)
from .lsp_pipeline import (Codebook, IndexTriple, LpcCoeffs, QuantConfig, QuantState,
                           SpeechFrame, dequantize, lpc_analyze, lpc_to_lsp, lsp_to_lpc,
                           make_synthetic_codebook, quantize, weight_matrix)
from .magic_matrix import MagicMatrix, generate, magic_expand, search_patterns, validate
from .metrics import compare_schemes, resynthesize, snr
from .stego_engine import (EmbedRecord, SecretPayload, embed_frame, embed_lsb2_baseline,
                           embed_parity_qim_baseline, embed_stream, extract_frame,
                           extract_stream)

__version__ = "0.1.0"

__all__ = [
    "CapacityError", "ConfigurationError", "ConversionError", "DomainError", "FormatError",
    "IntegrityError", "StegoError", "TruncationError",
    "Codebook", "IndexTriple", "LpcCoeffs", "QuantConfig", "QuantState", "SpeechFrame",
    "dequantize", "lpc_analyze", "lpc_to_lsp", "lsp_to_lpc", "make_synthetic_codebook",
    "quantize", "weight_matrix",
    "MagicMatrix", "generate", "magic_expand", "search_patterns", "validate",
    "compare_schemes", "resynthesize", "snr",
    "EmbedRecord", "SecretPayload", "embed_frame", "embed_lsb2_baseline",
    "embed_parity_qim_baseline", "embed_stream", "extract_frame", "extract_stream",
]

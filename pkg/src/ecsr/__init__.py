"""Block-extracting sparse matrix toolkit.

Pipeline: extract hierarchical block sets from a CSR matrix, clip and
reorder them for balanced work, store them in the delta-compressed ECSR
container, and execute SpMV with a deterministic warp emulation checked
against the dense reference.
"""

from ecsr.balance import clip_blocks, clip_threshold, reorder_sets
from ecsr.core import (
    CsrMatrix,
    csr_from_coo,
    generate_uniform,
    load_matrix_market,
    save_matrix_market,
    shared_column_count,
    spmv_oracle,
)
from ecsr.errors import ContainerError, DeltaOverflowError, EcsrError, MatrixFormatError
from ecsr.executor import (
    AccessCost,
    AccessTrace,
    access_cost,
    check_coalescing,
    spmv_ec,
    spmv_ec_traced,
    validate_container,
)
from ecsr.extraction import (
    Block,
    BlockSet,
    EncodedMatrix,
    ExtractionConfig,
    decode_residual,
    encode_units,
    extract_blocks,
    extract_round,
    multi_round_extract,
    row_matching,
)
from ecsr.storage import (
    CostReport,
    DeltaHistogram,
    EcCsrMatrix,
    EcCsrSet,
    compress_block_indices,
    convert_csr,
    decode_ec_csr,
    delta_histogram,
    deserialize,
    encode_ec_csr,
    load_container,
    permute_layout,
    pipeline_sets,
    save_container,
    serialize,
    split_one_grained,
    storage_report,
    unpermute_layout,
)

__version__ = "0.1.0"

__all__ = [
    "AccessCost",
    "AccessTrace",
    "Block",
    "BlockSet",
    "ContainerError",
    "CostReport",
    "CsrMatrix",
    "DeltaHistogram",
    "DeltaOverflowError",
    "EcCsrMatrix",
    "EcCsrSet",
    "EcsrError",
    "EncodedMatrix",
    "ExtractionConfig",
    "MatrixFormatError",
    "access_cost",
    "check_coalescing",
    "clip_blocks",
    "clip_threshold",
    "compress_block_indices",
    "convert_csr",
    "csr_from_coo",
    "decode_ec_csr",
    "decode_residual",
    "delta_histogram",
    "deserialize",
    "encode_ec_csr",
    "encode_units",
    "extract_blocks",
    "extract_round",
    "generate_uniform",
    "load_container",
    "load_matrix_market",
    "multi_round_extract",
    "permute_layout",
    "pipeline_sets",
    "reorder_sets",
    "row_matching",
    "save_container",
    "save_matrix_market",
    "serialize",
    "shared_column_count",
    "split_one_grained",
    "spmv_ec",
    "spmv_ec_traced",
    "spmv_oracle",
    "storage_report",
    "unpermute_layout",
    "validate_container",
]

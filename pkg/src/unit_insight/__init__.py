"""Discrete speech unit analysis toolkit."""

from .types import (
    Codebook,
    DedupedSequence,
    FeatureMatrix,
    LabelAlignment,
    UnitSequence,
    ValidationError,
    Waveform,
)
from .formats import (
    FormatError,
    read_alignment,
    read_codebook,
    read_deduped,
    read_feats,
    read_units,
    read_wav,
    write_alignment,
    write_codebook,
    write_deduped,
    write_feats,
    write_units,
    write_wav,
)
from .quantize import KMeansConfig, deduplicate, kmeans_fit, quantize, reduplicate
from .interpret import ContingencyTable, build_contingency, majority_label, v_measure
from .tsne import Embedding2D, tsne_embed
from .voronoi import VoronoiDiagram, voronoi
from .render import load_family_table, render_svg
from .lookup_vocoder import KeyKind, MemorizationReport, lv_resynthesize, make_key, memorization_rate
from .redundancy import CRMatrix, align_ops, circular_resynthesis, measure_redundancy, ued
from .merge import MergeMap, merge_kh, merge_kk, merge_kwh, relabel_units
from .abx import AbxItem, abx_score, dtw_distance, extract_items

__version__ = "0.1.0"

__all__ = [
    "AbxItem",
    "CRMatrix",
    "Codebook",
    "ContingencyTable",
    "DedupedSequence",
    "Embedding2D",
    "FeatureMatrix",
    "FormatError",
    "KMeansConfig",
    "KeyKind",
    "LabelAlignment",
    "MemorizationReport",
    "MergeMap",
    "UnitSequence",
    "ValidationError",
    "VoronoiDiagram",
    "Waveform",
    "abx_score",
    "align_ops",
    "build_contingency",
    "circular_resynthesis",
    "deduplicate",
    "dtw_distance",
    "extract_items",
    "kmeans_fit",
    "load_family_table",
    "lv_resynthesize",
    "majority_label",
    "make_key",
    "measure_redundancy",
    "memorization_rate",
    "merge_kh",
    "merge_kk",
    "merge_kwh",
    "quantize",
    "read_alignment",
    "read_codebook",
    "read_deduped",
    "read_feats",
    "read_units",
    "read_wav",
    "reduplicate",
    "relabel_units",
    "render_svg",
    "tsne_embed",
    "ued",
    "v_measure",
    "voronoi",
    "write_alignment",
    "write_codebook",
    "write_deduped",
    "write_feats",
    "write_units",
    "write_wav",
]

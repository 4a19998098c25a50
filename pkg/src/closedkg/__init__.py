"""Structural analysis, hyperbolic class embeddings, and contrastive sample
construction for closed-domain knowledge graphs."""

from .graph import (
    KnowledgeGraph,
    ClassHierarchy,
    Triple,
    IngestError,
    IngestReport,
    UnreachableError,
    UNREACHABLE,
    load_graph,
    load_triples,
    load_hierarchy,
    hop_distance,
    shortest_path,
    nodes_at_hop,
)
from .stats import (
    biconnected_components,
    articulation_points,
    max_pbc_ratio,
    coverage_ratio,
    graph_density,
    subgraph_density,
    IndicatorReport,
    indicator_report,
)
from .hyperbolic import (
    poincare_distance,
    loss_and_grad,
    riemannian_step,
    PoincareEmbedding,
    export_embeddings,
)
from .augment import (
    CLS_TOKEN,
    SEP_TOKEN,
    NoCandidateError,
    PathSegment,
    SampleRecord,
    SampleAugmenter,
    build_positive,
    build_negative,
    build_all,
    validate_level_config,
    write_jsonl,
)
from .fusion import (
    FusionDims,
    FusionParams,
    InjectorLayerParams,
    init_params,
    gelu,
    layer_norm,
    entity_space_infusion,
    entity_space_infusion_vjp,
    injector_layer,
    injector_layer_vjp,
    injector_stack,
    injector_stack_vjp,
    info_nce,
    info_nce_grad,
    total_loss,
    EncoderStub,
    encode_sample,
    save_params,
    load_params,
    run_fusion_checks,
)
from .datasets import load_toy_kg, load_toy_corpus, toy_paths, write_toy_kg
from .text import normalize_label, tokenize

__version__ = "0.1.0"

__all__ = [
    "KnowledgeGraph", "ClassHierarchy", "Triple", "IngestError",
    "IngestReport", "UnreachableError", "UNREACHABLE", "load_graph",
    "load_triples", "load_hierarchy", "hop_distance", "shortest_path",
    "nodes_at_hop",
    "biconnected_components", "articulation_points", "max_pbc_ratio",
    "coverage_ratio", "graph_density", "subgraph_density",
    "IndicatorReport", "indicator_report",
    "poincare_distance", "loss_and_grad", "riemannian_step",
    "PoincareEmbedding", "export_embeddings",
    "CLS_TOKEN", "SEP_TOKEN", "NoCandidateError", "PathSegment",
    "SampleRecord", "SampleAugmenter", "build_positive", "build_negative",
    "build_all", "validate_level_config", "write_jsonl",
    "FusionDims", "FusionParams", "InjectorLayerParams", "init_params",
    "gelu", "layer_norm", "entity_space_infusion", "entity_space_infusion_vjp",
    "injector_layer", "injector_layer_vjp", "injector_stack",
    "injector_stack_vjp", "info_nce", "info_nce_grad", "total_loss",
    "EncoderStub", "encode_sample", "save_params", "load_params",
    "run_fusion_checks",
    "load_toy_kg", "load_toy_corpus", "toy_paths", "write_toy_kg",
    "normalize_label", "tokenize",
    "__version__",
]

"""Distributional edge layouts: sample force-directed layouts of a graph and
turn them into per-edge length features."""

from .analysis import (
    builtin_wl_pair,
    classical_mds,
    energy_curve,
    expressivity_report,
    gtw,
    gtw_distribution,
    kde,
    ks_two_sample,
    layout_distance_matrix,
)
from .features import (
    EdgeFeatureTensor,
    edge_lengths,
    feature_tensor,
    read_features,
    write_features,
)
from .graph import (
    Dataset,
    Graph,
    load_dataset,
    parse_edge_list,
    parse_tudataset,
    random_sparse_graph,
    shortest_paths,
)
from .layout import (
    EnergyTrace,
    Layout,
    LayoutParams,
    ar_forces,
    compute_layout,
    fr_energy,
    fr_forces,
    fr_layout,
    kk_delta,
    kk_energy,
    kk_layout,
    langevin_step,
    random_layout,
)
from .sampler import LayoutEnsemble, SampleConfig, sample_dataset, sample_ensemble

__version__ = "0.1.0"

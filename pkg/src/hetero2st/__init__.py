"""Nonparametric two-sample tests on l-MST edge counts, calibrated for latent heterogeneity."""
from .datagen import (Component, CovSpec, MixtureSpec, experiment_spec, load_specs,
                      sample_mixture, save_specs)
from .edgecount import (EdgeCounts, PermutationMoments, StatisticKind, count_edges,
                        gec_statistic, permutation_moments, permutation_pvalue, wec_statistic)
from .errors import *  # noqa: F401,F403
from .geometry import (DistanceMatrix, LabeledGraph, build_lmst, pairwise_distances,
                       pooled_lmst)
from .harness import ExperimentPlan, RejectionTable, run_experiment, summarize
from .hetero import (BootstrapConfig, ClusterModel, TestReport, bootstrap_cutoff,
                     cluster_baseline, estimate_num_clusters, heterogeneous_test,
                     heterogeneous_tests)
from .theory import (AsymptoticParams, Density1D, epsilon_separation, gamma_cutoff,
                     hp_divergence_estimate, hp_divergence_quadrature)

__version__ = "0.1.0"

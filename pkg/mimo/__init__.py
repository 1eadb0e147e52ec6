# Copyright © 2026. Cloud Software Group, Inc.
# This file is subject to the license terms contained
# in the license file that is distributed with this file.

"""User visible functions for training and analyzing multi-input multi-output subnetwork ensembles."""

from mimo.models import Architecture, NetworkConfig, Network, Task, build_network, forward_mimo, forward_tiled
from mimo.data import DataConfig, Dataset, SamplingConfig, gen_blobs, gen_noisy_regression, load_csv
from mimo.training import OptimizerConfig, TrainingSetup, evaluate, load_checkpoint, save_checkpoint, train
from mimo.version import __version__

# Copyright (c) 2026 The ascene Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Acoustic scene classification toolkit."""

import json as _json

from ._ascene import (
    AsceneError,
    ConfigError,
    DataError,
    Model,
    NumericError,
    __version__,
    arch_names,
    average_ensemble,
    build_graph,
    class_hierarchy,
    cosine_restart_lr,
    extract_features,
    load_wav,
    num_frames,
    quantize_tensor,
    save_wav,
    two_stage_fuse,
)
from ._ascene import evaluate as _evaluate


def evaluate(scores, manifest, classes):
    """Evaluates a score array against manifest text; returns a dict."""
    return _json.loads(_evaluate(scores, manifest, list(classes)))


__all__ = [
    "AsceneError",
    "ConfigError",
    "DataError",
    "Model",
    "NumericError",
    "__version__",
    "arch_names",
    "average_ensemble",
    "build_graph",
    "class_hierarchy",
    "cosine_restart_lr",
    "evaluate",
    "extract_features",
    "load_wav",
    "num_frames",
    "quantize_tensor",
    "save_wav",
    "two_stage_fuse",
]

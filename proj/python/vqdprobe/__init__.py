# Copyright (c) 2026 The vqdprobe Authors. All Rights Reserved.
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


"""Linear probes of perceptual voice-quality dimensions."""

from ._core import (  # noqa: F401
    EmbeddingTable,
    ProbeModel,
    VqdError,
    __version__,
    auc,
    average_ranks,
    binarize_threshold,
    bootstrap_auc,
    bootstrap_spearman,
    cli,
    decode_table,
    encode_table,
    evaluate,
    label_weighted_score,
    lambda_grid,
    lasso_fit,
    lasso_lambda_max,
    load_manifest,
    load_model,
    logistic_fit,
    pearson,
    quantize_to_scale,
    read_table,
    spearman,
    synth,
    write_table,
)

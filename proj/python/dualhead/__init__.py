# Copyright 2026 The dualhead Authors
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

"""Articulated 3D head optimisation engine."""

from ._dualhead import (
    Checkpoint,
    ConfigError,
    DimensionError,
    Error,
    GuidanceError,
    HeadModel,
    IoError,
    MeshError,
    NumericError,
    __version__,
    default_config,
    desk_config,
    desk_model,
    gradcheck,
    gradcheck_suites,
    load_checkpoint,
    load_model,
    normalize_config,
    optimize,
    render,
    save_model,
    sds_grad,
    write_png,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]

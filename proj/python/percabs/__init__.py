# Copyright 2026 The percabs Authors
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

"""Python access to the percabs verification core."""

from ._core import (
    PercabsError,
    Pipeline,
    beta_cdf,
    beta_quantile,
    clopper_pearson,
    fit_logistic,
    safety_interval,
)

__all__ = [
    "PercabsError",
    "Pipeline",
    "beta_cdf",
    "beta_quantile",
    "clopper_pearson",
    "fit_logistic",
    "safety_interval",
]

"""Published characteristics of other semi-quantum protocols, for comparison tables."""
#   Copyright 2026 The sqpcsim developers
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.

# These values are quoted, not computed: the other protocols are not simulated.
#
# Efficiencies are (a, b, c, d) tuples meaning (a*n + b) / (c*n + d), so both
# n-dependent and constant efficiencies fit one format.
#
# Format for the comparison rows:
#  1. protocol label
#  2. efficiency tuple
#  3. dict of the remaining columns

default_comparison_rows = {
    "sqpc": [
        ("sqpc-prior-1", (1, 0, 102, 1), {"pre_shared_keys": True, "scalable": False}),
        ("sqpc-prior-2", (1, 0, 60, 1), {"pre_shared_keys": True, "scalable": False}),
        ("sqpc-prior-3", (1, 0, 52, 1), {"pre_shared_keys": False, "scalable": False}),
        ("sqpc-prior-4", (1, 0, 53, 1), {"pre_shared_keys": True, "scalable": False}),
        ("sqpc-prior-5", (1, 0, 18, 1), {"pre_shared_keys": False, "scalable": True}),
    ],
    "sqka": [
        ("sqka-prior-1", (0, 1, 0, 10), {"users": 2, "scalable": False}),
        ("sqka-prior-2", (0, 1, 0, 15), {"users": 2, "scalable": False}),
        ("sqka-prior-3", (0, 1, 0, 48), {"users": 3, "scalable": False}),
        ("sqka-prior-4", (0, 1, 0, 38), {"users": 3, "scalable": True}),
    ],
    "sqs": [
        (
            "sqs-prior-1",
            None,
            {
                "states": "single particles",
                "tp_knows_sum": True,
                "data_type": "binary",
                "scalable": False,
            },
        ),
        (
            "sqs-prior-2",
            None,
            {
                "states": "two-qubit entangled states",
                "tp_knows_sum": False,
                "data_type": "binary",
                "scalable": False,
            },
        ),
    ],
}

# Rows for the protocols this package simulates
default_own_rows = {
    "sqpc": ("sqpcsim", (1, 0, 26, 1), {"pre_shared_keys": False, "scalable": True}),
    "sqka": ("sqpcsim", (0, 1, 0, 36), {"users": 3, "scalable": True}),
    "sqs": (
        "sqpcsim",
        None,
        {
            "states": "entangled states and single particles",
            "tp_knows_sum": False,
            "data_type": "integer",
            "scalable": True,
        },
    ),
}

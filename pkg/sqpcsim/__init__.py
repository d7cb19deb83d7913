"""Simulate semi-quantum private comparison and related protocols under attack."""
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

__desc__ = "Simulator and attack analysis for semi-quantum comparison, key agreement, summation and ranking protocols"

__name__ = "sqpcsim"

__url__ = "https://github.com/petercrocker/sqpcsim"

__version__ = "1.0a1"

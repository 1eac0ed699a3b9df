# Copyright 2026 The CCL-Derain Authors.
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

"""Writes a small TorchScript image encoder with a 512-d pooled output."""

import pathlib
import sys

import torch


class TinyVisual(torch.nn.Module):
    def __init__(self):
        super().__init__()
        self.trunk = torch.nn.Sequential(
            torch.nn.Conv2d(3, 16, 3, stride=2, padding=1),
            torch.nn.ReLU(),
            torch.nn.Conv2d(16, 32, 3, stride=2, padding=1),
            torch.nn.ReLU(),
        )
        self.proj = torch.nn.Linear(32, 512)

    @torch.jit.export
    def encode_penultimate(self, x):
        return self.trunk(x).mean(dim=(2, 3))

    def forward(self, x):
        return self.proj(self.encode_penultimate(x))


def main():
    out = pathlib.Path(sys.argv[1])
    out.parent.mkdir(parents=True, exist_ok=True)
    torch.manual_seed(0)
    torch.jit.script(TinyVisual().eval()).save(str(out))


if __name__ == "__main__":
    main()

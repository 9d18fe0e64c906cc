// Copyright 2026 The gaugepic Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Prints the support of the frame unitary U_I of one patch after each layer
// of a random brickwork circuit, one row per layer:
//
//   depth 1  . . . . . # # # # .
//
// '#' marks a site where U_I acts nontrivially, '|' the patch itself.

#include "gaugepic/gaugepic.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
    using namespace gaugepic;
    const int n = argc > 1 ? std::atoi(argv[1]) : 9;
    const int first = argc > 2 ? std::atoi(argv[2]) : 6;
    const int depth = argc > 3 ? std::atoi(argv[3]) : 5;
    if (n < 3 || n > 11 || first < 0 || first + 1 >= n || depth < 1) {
        std::cerr << "usage: light_cone [n_sites<=11] [first site of patch] [depth]\n";
        return 1;
    }
    const Patch patch{first, first + 1};
    const Circuit circuit = brickwork(n, depth, 2024);
    StateVector zero = StateVector::Zero(Eigen::Index{1} << n);
    zero(0) = 1.0;
    GaugeState state = init(zero, nn_pair_cover(n));
    std::cout << "patch " << patch.to_string() << " on " << n << " sites\n";
    for (int l = 0; l < depth; ++l) {
        state = apply_commuting_layer(std::move(state), circuit.layers[l]);
        const auto support = operator_support(state.frame(patch), 1e-12);
        const auto cone = light_cone(patch, l + 1, n).allowed_sites;
        std::cout << "depth " << l + 1 << "  ";
        for (int s = 0; s < n; ++s) {
            std::cout << (support.count(s) ? (patch.contains(s) ? '|' : '#') : (cone.count(s) ? '-' : '.')) << ' ';
        }
        std::cout << (audit_lightcone(state, patch, l + 1).passed() ? " inside cone" : " OUTSIDE CONE") << '\n';
    }
    return 0;
}

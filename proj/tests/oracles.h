// Copyright 2026 The fsfqpt Authors
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

// Brute-force references shared by the tests. They deliberately avoid the library's own
// closed forms.

#ifndef FSFQPT_TESTS_ORACLES_H
#define FSFQPT_TESTS_ORACLES_H

#include <cmath>
#include <vector>

#include <boost/math/special_functions/binomial.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "fsfqpt/process_tensor.h"

namespace fsfqpt::oracle {

// exp(i phi (a^dag b + a b^dag)) with cos^2 phi = R, on the sector with `total` photons.
// Row and column i stand for |total - i, i>.
inline CMatrix exponential_sector(double reflectivity, int total) {
    double phi = std::acos(std::sqrt(reflectivity));
    int n = total + 1;
    CMatrix h = CMatrix::Zero(n, n);
    for (int i = 0; i < n; i++) {
        int a = total - i;
        int b = i;
        // a^dag b |a, b> = sqrt((a+1) b) |a+1, b-1>
        if (b > 0) {
            h(i - 1, i) += std::sqrt((a + 1.0) * b);
        }
        // a b^dag |a, b> = sqrt(a (b+1)) |a-1, b+1>
        if (a > 0) {
            h(i + 1, i) += std::sqrt(a * (b + 1.0));
        }
    }
    CMatrix gen = cdouble(0, phi) * h;
    return gen.exp();
}

// Loss channel from its Kraus operators K_l = sum_n sqrt(C(n,l) eta^(n-l) (1-eta)^l) |n-l><n|.
inline ProcessTensor kraus_loss(double eta, const HilbertSpec &spec) {
    int d = static_cast<int>(spec.dim());
    ProcessTensor t(spec, "kraus");
    for (int l = 0; l < d; l++) {
        Eigen::MatrixXd k = Eigen::MatrixXd::Zero(d, d);
        for (int n = l; n < d; n++) {
            k(n - l, n) = std::sqrt(boost::math::binomial_coefficient<double>(n, l) * std::pow(eta, n - l) *
                                    std::pow(1 - eta, l));
        }
        for (int j = 0; j < d; j++) {
            for (int kk = 0; kk < d; kk++) {
                for (int m = 0; m < d; m++) {
                    for (int n = 0; n < d; n++) {
                        t(j, kk, m, n) += k(j, m) * k(kk, n);
                    }
                }
            }
        }
    }
    return t;
}

inline double max_abs_diff(const ProcessTensor &a, const ProcessTensor &b) {
    double worst = 0;
    for (size_t i = 0; i < a.elems().size(); i++) {
        worst = std::max(worst, std::abs(a.elems()[i] - b.elems()[i]));
    }
    return worst;
}

}  // namespace fsfqpt::oracle

#endif

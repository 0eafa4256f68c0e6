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

#ifndef FSFQPT_PROCESS_TENSOR_H
#define FSFQPT_PROCESS_TENSOR_H

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fsfqpt/fock.h"

namespace fsfqpt {

/// Rank-4 process tensor E_jk^mn mapping input density-matrix elements rho_mn to output
/// elements [rho_out]_jk = sum_mn E_jk^mn rho_mn. Stored row-major in (j, k, m, n).
class ProcessTensor {
   public:
    ProcessTensor(const HilbertSpec &spec, std::string label);

    static ProcessTensor identity(const HilbertSpec &spec);

    const HilbertSpec &spec() const {
        return spec_;
    }
    size_t dim() const {
        return spec_.dim();
    }
    const std::string &label() const {
        return label_;
    }
    void set_label(std::string label) {
        label_ = std::move(label);
    }

    cdouble &operator()(size_t j, size_t k, size_t m, size_t n) {
        return elems_[index(j, k, m, n)];
    }
    cdouble operator()(size_t j, size_t k, size_t m, size_t n) const {
        return elems_[index(j, k, m, n)];
    }
    const std::vector<cdouble> &elems() const {
        return elems_;
    }

    /// Choi matrix with <j,m|C|k,n> = E_jk^mn; row index j * d + m.
    CMatrix choi_matrix() const;
    static ProcessTensor from_choi_matrix(const HilbertSpec &spec, const CMatrix &choi, std::string label);

    /// s_n = sum_k E_kk^nn, the heralding probability for input Fock state |n>.
    std::vector<double> layer_success() const;

    ProcessTensor &operator+=(const ProcessTensor &other);
    ProcessTensor &operator*=(double scale);
    friend ProcessTensor operator*(double scale, ProcessTensor t) {
        t *= scale;
        return t;
    }
    friend ProcessTensor operator+(ProcessTensor a, const ProcessTensor &b) {
        a += b;
        return a;
    }

    /// Bitwise equality of every element plus label and dimension.
    bool operator==(const ProcessTensor &other) const;

   private:
    size_t index(size_t j, size_t k, size_t m, size_t n) const {
        size_t d = spec_.dim();
        return ((j * d + k) * d + m) * d + n;
    }

    HilbertSpec spec_;
    std::string label_;
    std::vector<cdouble> elems_;
};

/// Result of checking the three structural contracts of a process tensor.
struct TensorDiagnostics {
    double hermiticity_error = 0;
    double choi_min_eigenvalue = 0;
    double max_layer_success = 0;
    double min_layer_success = 0;

    /// Tolerances: Hermiticity 1e-10, Choi PSD -1e-8, s_n within [0, 1 + 1e-10].
    bool ok() const;
    std::string describe() const;
};

TensorDiagnostics diagnose(const ProcessTensor &t);

/// Writes the self-describing JSON container
///   {"format": "fsfqpt-process-tensor", "version": 1, "label": ..., "n_max": ...,
///    "layout": "row-major j,k,m,n", "entries": [[re, im], ...]}
/// Doubles use shortest round-trip notation, so read(write(t)) == t bitwise.
void write_tensor(std::ostream &out, const ProcessTensor &t);
ProcessTensor read_tensor(std::istream &in);
void write_tensor_file(const std::filesystem::path &path, const ProcessTensor &t);
ProcessTensor read_tensor_file(const std::filesystem::path &path);

/// Raised for malformed tensor, dataset, manifest or config files.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fsfqpt

#endif
